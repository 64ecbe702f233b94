//! Scoring reconstructed or generated structures against originals.

mod confusion;
mod distance;
mod ged;
mod matching;
mod novelty;
mod report;
mod stats;

pub use confusion::{atom_count_confusion, ConfusionMatrix};
pub use distance::{rms_anonymous_distance, superpose_distance};
pub use ged::{graph_edit_distance, BondGraph, CutoffRule, GedResult, EXACT_CLASS_LIMIT};
pub use matching::{coordinate_relative_errors, lattice_relative_errors, match_atoms, CoordError, MatchedPair, NEAR_ZERO};
pub use novelty::{novelty_check, Corpus, Novelty, DEFAULT_NOVELTY_TOL};
pub use report::{summary_series, write_confusion_csv, write_pair_csv, write_summary_csv, SERIES};
pub use stats::{summarize, StatSummary};

use crate::crystal::CrystalStructure;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("site counts differ: {original} original vs {predicted} predicted")]
    Unmatched { original: usize, predicted: usize },
    #[error("cannot summarize an empty series")]
    EmptySeries,
    #[error("series contains NaN")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub species_aware: bool,
    pub wrap: bool,
    pub cutoff: CutoffRule,
    /// Compute superpose / RMS-anonymous / graph edit distances.
    pub distances: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { species_aware: true, wrap: true, cutoff: CutoffRule::default(), distances: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    /// `None` when site counts differ.
    pub superpose: Option<f64>,
    pub rms_anonymous: Option<f64>,
    pub graph_edit: GedResult,
}

/// Comparison of one predicted structure with its original.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub id: String,
    pub original_sites: usize,
    pub predicted_sites: usize,
    /// Empty unless matched.
    pub assignment: Vec<MatchedPair>,
    pub matched: bool,
    pub lattice_rel_err: [f64; 3],
    pub coord_rel_err: Vec<CoordError>,
    pub distances: Option<Distances>,
}

impl MatchReport {
    /// Mean |error| over all coordinate components, `None` when unmatched.
    pub fn mean_abs_coord_err(&self) -> Option<f64> {
        if !self.matched || self.coord_rel_err.is_empty() {
            return None;
        }
        let sum: f64 = self.coord_rel_err.iter().flat_map(|e| e.values).map(f64::abs).sum();
        Some(sum / (3 * self.coord_rel_err.len()) as f64)
    }
}

pub fn evaluate_pair(id: &str, original: &CrystalStructure, predicted: &CrystalStructure, opts: &EvalOptions) -> MatchReport {
    let assignment = match_atoms(original, predicted, opts.species_aware);
    let matched = assignment.is_some();
    let assignment = assignment.unwrap_or_default();
    let coord_rel_err = if matched {
        coordinate_relative_errors(&assignment, original, predicted, opts.wrap)
    } else {
        Vec::new()
    };
    let distances = opts.distances.then(|| Distances {
        superpose: superpose_distance(original, predicted).ok(),
        rms_anonymous: rms_anonymous_distance(original, predicted).ok(),
        graph_edit: graph_edit_distance(
            &BondGraph::from_structure(original, &opts.cutoff),
            &BondGraph::from_structure(predicted, &opts.cutoff),
        ),
    });
    MatchReport {
        id: id.to_string(),
        original_sites: original.len(),
        predicted_sites: predicted.len(),
        assignment,
        matched,
        lattice_rel_err: lattice_relative_errors(original, predicted),
        coord_rel_err,
        distances,
    }
}
