use std::collections::BTreeMap;

use crate::crystal::CrystalStructure;

use super::distance::rms_anonymous_distance;

pub const DEFAULT_NOVELTY_TOL: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Novelty {
    Novel,
    MatchOf(String),
}

/// Known structures grouped by reduced formula.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    by_formula: BTreeMap<String, Vec<(String, CrystalStructure)>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, s: CrystalStructure) {
        self.by_formula.entry(s.reduced_formula()).or_default().push((id.into(), s));
    }

    pub fn len(&self) -> usize {
        self.by_formula.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_formula.is_empty()
    }

    pub fn with_formula(&self, formula: &str) -> &[(String, CrystalStructure)] {
        self.by_formula.get(formula).map_or(&[], Vec::as_slice)
    }
}

impl FromIterator<(String, CrystalStructure)> for Corpus {
    fn from_iter<I: IntoIterator<Item = (String, CrystalStructure)>>(iter: I) -> Self {
        let mut c = Corpus::new();
        for (id, s) in iter {
            c.insert(id, s);
        }
        c
    }
}

/// First corpus entry (insertion order) with the same reduced formula and
/// site count within `tol` Å RMS-anonymous distance, else `Novel`.
pub fn novelty_check(candidate: &CrystalStructure, corpus: &Corpus, tol: f64) -> Novelty {
    for (id, known) in corpus.with_formula(&candidate.reduced_formula()) {
        if known.len() != candidate.len() {
            continue;
        }
        if let Ok(d) = rms_anonymous_distance(known, candidate) {
            if d <= tol {
                return Novelty::MatchOf(id.clone());
            }
        }
    }
    Novelty::Novel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::AtomSite;
    use crate::fixtures::{mgmno3, random_encodable};

    #[test]
    fn identical_entry() {
        let corpus: Corpus = [("mp-1".to_string(), mgmno3())].into_iter().collect();
        assert_eq!(novelty_check(&mgmno3(), &corpus, DEFAULT_NOVELTY_TOL), Novelty::MatchOf("mp-1".into()));
    }

    #[test]
    fn absent_formula() {
        let corpus: Corpus = [("mp-1".to_string(), mgmno3())].into_iter().collect();
        let s = mgmno3();
        let sites: Vec<AtomSite> = s.sites().iter().map(|a| AtomSite::new("Ca", *a.frac())).collect();
        let other = CrystalStructure::new(s.lattice, sites, "").unwrap();
        assert_eq!(novelty_check(&other, &corpus, DEFAULT_NOVELTY_TOL), Novelty::Novel);
    }

    #[test]
    fn small_perturbation_matches() {
        let mut rng = crate::rng::seeded(8);
        let mut corpus = Corpus::new();
        let entries: Vec<CrystalStructure> =
            (0..4).map(|_| random_encodable(&mut rng, &["Li", "Fe", "O"], 0.1)).collect();
        for (i, e) in entries.iter().enumerate() {
            corpus.insert(format!("e{i}"), e.clone());
        }
        let target = &entries[2];
        let lengths = target.lattice.lengths();
        let sites: Vec<AtomSite> = target
            .sites()
            .iter()
            .enumerate()
            .map(|(k, a)| {
                // 0.01 Å along one axis, alternating direction
                let axis = k % 3;
                let mut f = *a.frac();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                f[axis] += sign * 0.01 / lengths[axis] * 1.0;
                AtomSite::new(&a.species, f)
            })
            .collect();
        let candidate = CrystalStructure::new(target.lattice, sites, "").unwrap();
        match novelty_check(&candidate, &corpus, DEFAULT_NOVELTY_TOL) {
            Novelty::MatchOf(id) => {
                let hit = entries[id[1..].parse::<usize>().unwrap()].clone();
                assert_eq!(hit.reduced_formula(), target.reduced_formula());
            }
            Novelty::Novel => panic!("perturbed entry reported novel"),
        }
    }
}
