use crate::crystal::{min_image_delta, CrystalStructure, Lattice, Vec3};

/// One matched site pair and its Cartesian minimum-image distance (Å).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub original: usize,
    pub predicted: usize,
    pub distance: f64,
    /// False when the pair had to be formed across species.
    pub same_species: bool,
}

/// Greedy minimum-distance assignment between two equally sized site sets,
/// with predicted coordinates shifted by `shift` (fractional). When
/// `species_aware`, pairs of equal species are accepted first and any
/// leftovers (differing compositions) are paired in a second, species-blind
/// pass. Ties break by (distance, original index, predicted index).
pub(crate) fn greedy_assign(
    lattice: &Lattice,
    original: &CrystalStructure,
    predicted: &CrystalStructure,
    shift: &Vec3,
    species_aware: bool,
) -> Vec<MatchedPair> {
    let n = original.len();
    debug_assert_eq!(n, predicted.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, so) in original.sites().iter().enumerate() {
        for (j, sp) in predicted.sites().iter().enumerate() {
            let f = sp.frac();
            let moved = [f[0] + shift[0], f[1] + shift[1], f[2] + shift[2]];
            let d = lattice.to_cartesian(&min_image_delta(so.frac(), &moved));
            pairs.push(((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used_o = vec![false; n];
    let mut used_p = vec![false; n];
    let mut out = Vec::with_capacity(n);
    let passes: &[bool] = if species_aware { &[true, false] } else { &[false] };
    for &require_species in passes {
        for &(d, i, j) in &pairs {
            if used_o[i] || used_p[j] {
                continue;
            }
            let same = original.sites()[i].species == predicted.sites()[j].species;
            if require_species && !same {
                continue;
            }
            used_o[i] = true;
            used_p[j] = true;
            out.push(MatchedPair { original: i, predicted: j, distance: d, same_species: same });
        }
    }
    out.sort_by_key(|p| p.original);
    out
}

/// Greedy periodic matching of `predicted` onto `original`, with distances
/// measured in the original cell. `None` when the site counts differ.
pub fn match_atoms(
    original: &CrystalStructure,
    predicted: &CrystalStructure,
    species_aware: bool,
) -> Option<Vec<MatchedPair>> {
    if original.len() != predicted.len() {
        return None;
    }
    Some(greedy_assign(&original.lattice, original, predicted, &[0.0; 3], species_aware))
}

/// Signed relative errors of the lattice lengths, (|â| − |a|)/|a| per axis.
pub fn lattice_relative_errors(original: &CrystalStructure, predicted: &CrystalStructure) -> [f64; 3] {
    let o = original.lattice.lengths();
    let p = predicted.lattice.lengths();
    [(p[0] - o[0]) / o[0], (p[1] - o[1]) / o[1], (p[2] - o[2]) / o[2]]
}

/// Threshold below which a coordinate is treated as zero and its error
/// reported as absolute.
pub const NEAR_ZERO: f64 = 1e-6;

/// Per-component relative error of one matched atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordError {
    pub values: [f64; 3],
    /// Components whose original coordinate is ~0 carry absolute errors.
    pub absolute: [bool; 3],
}

/// (x̂ − x)/x per fractional component for every matched pair. With `wrap`,
/// x̂ is first replaced by its periodic image nearest to x.
pub fn coordinate_relative_errors(
    assignment: &[MatchedPair],
    original: &CrystalStructure,
    predicted: &CrystalStructure,
    wrap: bool,
) -> Vec<CoordError> {
    assignment
        .iter()
        .map(|m| {
            let x = original.sites()[m.original].frac();
            let raw = predicted.sites()[m.predicted].frac();
            let xh = if wrap {
                let d = min_image_delta(raw, x);
                [x[0] + d[0], x[1] + d[1], x[2] + d[2]]
            } else {
                *raw
            };
            let mut values = [0.0; 3];
            let mut absolute = [false; 3];
            for k in 0..3 {
                if x[k].abs() < NEAR_ZERO {
                    values[k] = xh[k] - x[k];
                    absolute[k] = true;
                } else {
                    values[k] = (xh[k] - x[k]) / x[k];
                }
            }
            CoordError { values, absolute }
        })
        .collect()
}
