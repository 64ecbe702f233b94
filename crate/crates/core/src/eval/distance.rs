//! Translation-optimised RMS distances between equally sized structures.
//!
//! A 16×16×16 grid of fractional translations of the predicted structure is
//! scanned with greedy matching at each point; the best few grid points are
//! then refined by alternating the closed-form optimal translation (mean
//! minimum-image offset of the matched pairs) with re-matching. Distances
//! are Cartesian in the original cell. Rotations are not searched.

use crate::crystal::{min_image_delta, CrystalStructure, Vec3};

use super::matching::{greedy_assign, MatchedPair};
use super::EvalError;

const GRID: usize = 16;
const REFINE_STARTS: usize = 8;
const REFINE_ITERS: usize = 50;

fn rms(pairs: &[MatchedPair]) -> f64 {
    (pairs.iter().map(|p| p.distance * p.distance).sum::<f64>() / pairs.len() as f64).sqrt()
}

fn score(o: &CrystalStructure, p: &CrystalStructure, shift: &Vec3, species_aware: bool) -> (f64, Vec<MatchedPair>) {
    let m = greedy_assign(&o.lattice, o, p, shift, species_aware);
    (rms(&m), m)
}

fn refine(o: &CrystalStructure, p: &CrystalStructure, start: Vec3, species_aware: bool) -> f64 {
    let (mut best, mut pairs) = score(o, p, &start, species_aware);
    let mut shift = start;
    for _ in 0..REFINE_ITERS {
        let mut mean = [0.0; 3];
        for m in &pairs {
            let f = p.sites()[m.predicted].frac();
            let moved = [f[0] + shift[0], f[1] + shift[1], f[2] + shift[2]];
            let d = min_image_delta(&moved, o.sites()[m.original].frac());
            for k in 0..3 {
                mean[k] += d[k] / pairs.len() as f64;
            }
        }
        let next = [shift[0] - mean[0], shift[1] - mean[1], shift[2] - mean[2]];
        let (s, m) = score(o, p, &next, species_aware);
        if s < best - 1e-15 {
            best = s;
            pairs = m;
            shift = next;
        } else {
            break;
        }
    }
    best
}

fn optimised(o: &CrystalStructure, p: &CrystalStructure, species_aware: bool) -> Result<f64, EvalError> {
    if o.len() != p.len() {
        return Err(EvalError::Unmatched { original: o.len(), predicted: p.len() });
    }
    let mut grid: Vec<(f64, Vec3)> = Vec::with_capacity(GRID * GRID * GRID);
    for i in 0..GRID {
        for j in 0..GRID {
            for k in 0..GRID {
                let shift = [i as f64 / GRID as f64, j as f64 / GRID as f64, k as f64 / GRID as f64];
                grid.push((score(o, p, &shift, species_aware).0, shift));
            }
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(grid
        .iter()
        .take(REFINE_STARTS)
        .map(|(_, s)| refine(o, p, *s, species_aware))
        .fold(f64::INFINITY, f64::min))
}

/// RMS Cartesian distance (Å) of species-aware matched pairs, minimised over
/// rigid translations.
pub fn superpose_distance(o: &CrystalStructure, p: &CrystalStructure) -> Result<f64, EvalError> {
    optimised(o, p, true)
}

/// As [`superpose_distance`] but with species-blind matching. Never exceeds
/// the superpose distance of the same pair.
pub fn rms_anonymous_distance(o: &CrystalStructure, p: &CrystalStructure) -> Result<f64, EvalError> {
    let anon = optimised(o, p, false)?;
    Ok(anon.min(optimised(o, p, true)?))
}
