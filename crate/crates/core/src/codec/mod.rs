//! Crystal structure ⇄ 3×128×3 point-cloud tensor.
//!
//! Channel 0 holds fractional positions, replicated round-robin over the 128
//! points (point `k` belongs to site `k mod N`). Channel 1 holds the one-hot
//! element slot of the same point. Channel 2 is the lattice template: rows
//! 0..64 carry (α, β, γ)/π and rows 64..128 carry (a, b, c)/15 Å.

mod dbscan;
mod slots;
mod tensor;

use std::f64::consts::PI;

use thiserror::Error;

use crate::crystal::{
    lattice_from_parameters, min_image_delta, validate_encodable, wrap3, AtomSite, CrystalError, CrystalStructure,
    LatticeParams, Vec3, Violation, MAX_ENCODABLE_SITES, MAX_LATTICE_LENGTH,
};

pub use dbscan::{dbscan_periodic, DbscanParams, NOISE};
pub use slots::{ElementSlots, MAX_SLOTS};
pub use tensor::{
    PointCloudTensor, CHANNELS, COMPONENTS, ELEMENTS, LATTICE, PCT_MAGIC, POINTS, POSITIONS, TENSOR_LEN,
};

/// Divisor applied to lattice angles (radians).
pub const ANGLE_SCALE: f64 = PI;
/// Divisor applied to lattice lengths (Å).
pub const LENGTH_SCALE: f64 = MAX_LATTICE_LENGTH;

const HALF: usize = POINTS / 2;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("structure is not encodable: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NotEncodable(Vec<Violation>),
    #[error("species {0:?} has no element slot")]
    SpeciesNotInSlots(String),
    #[error("invalid element slots: {0}")]
    InvalidSlots(String),
    #[error("invalid DBSCAN parameters (eps = {eps}, min_pts = {min_pts})")]
    InvalidDbscanParams { eps: f64, min_pts: usize },
    #[error("no clusters found in the position channel")]
    NoClusters,
    #[error("decoded lattice is degenerate: {0}")]
    DegenerateLattice(CrystalError),
    #[error("expected {expected} tensor values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("not a .pct file (bad magic)")]
    BadMagic,
    #[error("unexpected .pct dimensions {0:?}")]
    BadDims([u32; 3]),
    #[error(".pct file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

pub fn encode(s: &CrystalStructure, slots: &ElementSlots) -> Result<PointCloudTensor, CodecError> {
    validate_encodable(s).map_err(CodecError::NotEncodable)?;
    let slot_ids: Vec<usize> = s
        .sites()
        .iter()
        .map(|site| slots.slot_of(&site.species).ok_or_else(|| CodecError::SpeciesNotInSlots(site.species.clone())))
        .collect::<Result<_, _>>()?;

    let n = s.len();
    let mut x = PointCloudTensor::zeros();
    for k in 0..POINTS {
        let i = k % n;
        x.set_row(POSITIONS, k, *s.sites()[i].frac());
        x.set_row(ELEMENTS, k, ElementSlots::one_hot(slot_ids[i]));
    }
    let p = s.lattice.parameters();
    let angles = p.angles().map(|v| v / ANGLE_SCALE);
    let lengths = p.lengths().map(|v| v / LENGTH_SCALE);
    for k in 0..HALF {
        x.set_row(LATTICE, k, angles);
        x.set_row(LATTICE, k + HALF, lengths);
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeFlag {
    /// More clusters than an encodable structure can hold.
    ExceedsSiteCeiling(usize),
    /// A large share of the 128 points fell outside every cluster.
    ManyNoisePoints(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeDiagnostics {
    pub noise_points: usize,
    pub cluster_sizes: Vec<usize>,
    pub flags: Vec<DecodeFlag>,
}

impl DecodeDiagnostics {
    pub fn low_confidence(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub structure: CrystalStructure,
    pub diagnostics: DecodeDiagnostics,
}

/// Lattice parameters from channel 2: column means of the front half times π
/// give the angles, of the back half times 15 Å the lengths.
pub fn decode_lattice_channel(channel2: &[f64]) -> LatticeParams {
    assert_eq!(channel2.len(), POINTS * COMPONENTS, "lattice channel must be 128×3");
    let col_mean = |rows: std::ops::Range<usize>, j: usize| {
        let n = rows.len() as f64;
        rows.map(|k| channel2[k * COMPONENTS + j]).sum::<f64>() / n
    };
    LatticeParams {
        alpha: col_mean(0..HALF, 0) * ANGLE_SCALE,
        beta: col_mean(0..HALF, 1) * ANGLE_SCALE,
        gamma: col_mean(0..HALF, 2) * ANGLE_SCALE,
        a: col_mean(HALF..POINTS, 0) * LENGTH_SCALE,
        b: col_mean(HALF..POINTS, 1) * LENGTH_SCALE,
        c: col_mean(HALF..POINTS, 2) * LENGTH_SCALE,
    }
}

/// Centroid under periodicity: the first point is the anchor, the mean
/// minimum-image offset from it is added back, and the result is wrapped.
pub fn periodic_mean(points: &[Vec3]) -> Vec3 {
    assert!(!points.is_empty(), "periodic_mean of an empty set");
    let anchor = points[0];
    let mut acc = [0.0; 3];
    for p in points {
        let d = min_image_delta(p, &anchor);
        for k in 0..3 {
            acc[k] += d[k];
        }
    }
    let n = points.len() as f64;
    wrap3(&[anchor[0] + acc[0] / n, anchor[1] + acc[1] / n, anchor[2] + acc[2] / n])
}

pub fn decode(x: &PointCloudTensor, slots: &ElementSlots, p: &DbscanParams) -> Result<Decoded, CodecError> {
    p.validate()?;
    let points: Vec<Vec3> = (0..POINTS).map(|k| x.row(POSITIONS, k)).collect();
    let labels = dbscan_periodic(&points, p);
    let n_clusters = labels.iter().copied().max().map_or(0, |m| (m + 1) as usize);
    if n_clusters == 0 {
        return Err(CodecError::NoClusters);
    }

    let mut sites = Vec::with_capacity(n_clusters);
    let mut sizes = Vec::with_capacity(n_clusters);
    for c in 0..n_clusters as i32 {
        let members: Vec<usize> = (0..POINTS).filter(|&k| labels[k] == c).collect();
        let pos: Vec<Vec3> = members.iter().map(|&k| points[k]).collect();
        let mut likelihood = [0.0; 3];
        for &k in &members {
            let row = x.row(ELEMENTS, k);
            for j in 0..3 {
                likelihood[j] += row[j];
            }
        }
        // argmax over the slots in use; ties go to the lowest slot
        let mut best = 0;
        for j in 1..slots.len() {
            if likelihood[j] > likelihood[best] {
                best = j;
            }
        }
        sites.push(AtomSite::new(slots.symbols()[best].clone(), periodic_mean(&pos)));
        sizes.push(members.len());
    }

    let params = decode_lattice_channel(x.channel(LATTICE));
    let lattice = lattice_from_parameters(&params).map_err(CodecError::DegenerateLattice)?;
    let noise = labels.iter().filter(|&&l| l == NOISE).count();

    let mut flags = Vec::new();
    if n_clusters > MAX_ENCODABLE_SITES {
        flags.push(DecodeFlag::ExceedsSiteCeiling(n_clusters));
    }
    if noise > POINTS / 4 {
        flags.push(DecodeFlag::ManyNoisePoints(noise));
    }
    let structure = CrystalStructure::new(lattice, sites, "decoded").expect("at least one cluster");
    Ok(Decoded { structure, diagnostics: DecodeDiagnostics { noise_points: noise, cluster_sizes: sizes, flags } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{frac_distance, Lattice};
    use crate::fixtures::{mgmno3, random_encodable};
    use rand::Rng;

    #[test]
    fn mgmno3_layout() {
        let s = mgmno3();
        let slots = ElementSlots::for_structure(&s).unwrap();
        let x = encode(&s, &slots).unwrap();
        let mut counts = [0usize; 5];
        for k in 0..POINTS {
            let i = k % 5;
            counts[i] += 1;
            assert_eq!(x.row(POSITIONS, k), *s.sites()[i].frac());
        }
        assert_eq!(counts, [26, 26, 26, 25, 25]);
        for k in 0..HALF {
            assert_eq!(x.row(LATTICE, k), [0.5, 0.5, 0.5]);
            assert_eq!(x.row(LATTICE, k + HALF), [0.25, 0.25, 0.25]);
        }
        // slots O, Mg, Mn
        assert_eq!(x.row(ELEMENTS, 0), [0.0, 1.0, 0.0]);
        assert_eq!(x.row(ELEMENTS, 1), [0.0, 0.0, 1.0]);
        assert_eq!(x.row(ELEMENTS, 4), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_atom_at_normalisation_boundary() {
        let s = CrystalStructure::new(Lattice::cubic(15.0).unwrap(), vec![AtomSite::new("H", [0.0; 3])], "").unwrap();
        let slots = ElementSlots::new(&["H"]).unwrap();
        let x = encode(&s, &slots).unwrap();
        assert!(x.channel(POSITIONS).iter().all(|&v| v == 0.0));
        for k in 0..POINTS {
            assert_eq!(x.row(ELEMENTS, k), [1.0, 0.0, 0.0]);
        }
        for k in HALF..POINTS {
            assert_eq!(x.row(LATTICE, k), [1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn encode_errors() {
        let s = mgmno3();
        let slots = ElementSlots::new(&["Mg", "O"]).unwrap();
        assert_eq!(encode(&s, &slots), Err(CodecError::SpeciesNotInSlots("Mn".into())));
        let big = CrystalStructure::new(Lattice::cubic(16.0).unwrap(), vec![AtomSite::new("H", [0.0; 3])], "").unwrap();
        assert!(matches!(encode(&big, &ElementSlots::new(&["H"]).unwrap()), Err(CodecError::NotEncodable(_))));
    }

    #[test]
    fn worked_lattice_channel() {
        let mut ch = vec![0.5; POINTS * 3];
        for v in &mut ch[HALF * 3..] {
            *v = 0.25;
        }
        let p = decode_lattice_channel(&ch);
        assert!((p.a - 3.75).abs() < 1e-15 && (p.b - 3.75).abs() < 1e-15 && (p.c - 3.75).abs() < 1e-15);
        assert!((p.alpha - PI / 2.0).abs() < 1e-15);
        let zero = decode_lattice_channel(&vec![0.0; POINTS * 3]);
        assert_eq!(zero.lengths(), [0.0; 3]);
        assert!(lattice_from_parameters(&zero).is_err());
    }

    #[test]
    fn lattice_channel_noise_standard_error() {
        let mut rng = crate::rng::seeded(11);
        let mut ch = vec![0.5; POINTS * 3];
        for v in &mut ch[..HALF * 3] {
            *v += 0.01 * crate::rng::standard_normal(&mut rng);
        }
        let p = decode_lattice_channel(&ch);
        let bound = 3.0 * 0.01 * PI / 64f64.sqrt();
        for a in p.angles() {
            assert!((a - PI / 2.0).abs() < bound, "{a}");
        }
    }

    #[test]
    fn periodic_mean_examples() {
        let m = periodic_mean(&[[0.98, 0.3, 0.3], [0.0, 0.3, 0.3], [0.02, 0.3, 0.3]]);
        assert!(frac_distance(&m, &[0.0, 0.3, 0.3]) < 1e-12);
        assert_eq!(periodic_mean(&[[0.1, 0.2, 0.3]]), [0.1, 0.2, 0.3]);
        assert_eq!(periodic_mean(&[[0.7, 0.2, 0.9]; 4]), [0.7, 0.2, 0.9]);
    }

    #[test]
    fn periodic_mean_minimises_squared_distance() {
        // brute-force oracle over a fine grid on one axis
        let pts = [0.98, 0.0, 0.02, 0.01];
        let cost = |c: f64| pts.iter().map(|&p| min_image_delta(&[p, 0.0, 0.0], &[c, 0.0, 0.0])[0].powi(2)).sum::<f64>();
        let best = (0..100_000).map(|i| i as f64 / 100_000.0).min_by(|a, b| cost(*a).total_cmp(&cost(*b))).unwrap();
        let m = periodic_mean(&pts.map(|p| [p, 0.0, 0.0]));
        assert!(min_image_delta(&[m[0], 0.0, 0.0], &[best, 0.0, 0.0])[0].abs() < 2e-5);
    }

    #[test]
    fn round_trip_random() {
        let mut rng = crate::rng::seeded(3);
        for _ in 0..50 {
            let s = random_encodable(&mut rng, &["Ba", "Ti", "O"], 0.15);
            let slots = ElementSlots::for_structure(&s).unwrap();
            let d = decode(&encode(&s, &slots).unwrap(), &slots, &DbscanParams::default()).unwrap();
            assert_eq!(d.structure.len(), s.len());
            assert_eq!(d.diagnostics.noise_points, 0);
            for (a, b) in d.structure.sites().iter().zip(s.sites()) {
                assert_eq!(a.species, b.species);
                assert!(frac_distance(a.frac(), b.frac()) < 1e-9);
            }
        }
    }

    #[test]
    fn permutation_covariant() {
        let s = mgmno3();
        let slots = ElementSlots::for_structure(&s).unwrap();
        let mut sites = s.sites().to_vec();
        sites.reverse();
        let perm = CrystalStructure::new(s.lattice, sites, "").unwrap();
        let a = decode(&encode(&s, &slots).unwrap(), &slots, &DbscanParams::default()).unwrap().structure;
        let b = decode(&encode(&perm, &slots).unwrap(), &slots, &DbscanParams::default()).unwrap().structure;
        let key = |st: &CrystalStructure| {
            let mut v: Vec<(String, [u64; 3])> =
                st.sites().iter().map(|x| (x.species.clone(), x.frac().map(|f| (f * 1e9).round() as u64))).collect();
            v.sort();
            v
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn uniform_noise_never_panics() {
        let mut rng = crate::rng::seeded(5);
        let slots = ElementSlots::new(&["Mg", "Mn", "O"]).unwrap();
        for _ in 0..20 {
            let mut x = PointCloudTensor::zeros();
            for v in x.as_mut_slice() {
                *v = rng.random::<f64>();
            }
            match decode(&x, &slots, &DbscanParams::default()) {
                Err(CodecError::NoClusters) | Err(CodecError::DegenerateLattice(_)) => {}
                Ok(d) => assert!(d.diagnostics.low_confidence()),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn too_many_clusters_flagged() {
        // 32 distinct positions, 4 points each
        let s = mgmno3();
        let slots = ElementSlots::for_structure(&s).unwrap();
        let mut x = encode(&s, &slots).unwrap();
        for k in 0..POINTS {
            let c = (k % 32) as f64;
            x.set_row(POSITIONS, k, [(c % 4.0) * 0.25, ((c / 4.0).floor() % 4.0) * 0.25, (c / 16.0).floor() * 0.5]);
        }
        let d = decode(&x, &slots, &DbscanParams::default()).unwrap();
        assert_eq!(d.structure.len(), 32);
        assert!(d.diagnostics.flags.contains(&DecodeFlag::ExceedsSiteCeiling(32)));
    }
}
