use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::elements;
use super::lattice::{Lattice, Vec3};
use super::periodic::wrap3;
use super::CrystalError;

pub const MAX_ENCODABLE_SITES: usize = 16;
pub const MAX_ENCODABLE_SPECIES: usize = 3;
pub const MAX_LATTICE_LENGTH: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSite {
    pub species: String,
    frac: Vec3,
}

impl AtomSite {
    /// Fractional coordinates are wrapped into [0, 1).
    pub fn new(species: impl Into<String>, frac: Vec3) -> Self {
        AtomSite { species: species.into(), frac: wrap3(&frac) }
    }

    pub fn frac(&self) -> &Vec3 {
        &self.frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalStructure {
    pub lattice: Lattice,
    sites: Vec<AtomSite>,
    pub comment: String,
}

impl CrystalStructure {
    pub fn new(lattice: Lattice, sites: Vec<AtomSite>, comment: impl Into<String>) -> Result<Self, CrystalError> {
        if sites.is_empty() {
            return Err(CrystalError::EmptyStructure);
        }
        if let Some(bad) = sites.iter().find(|s| !elements::is_element(&s.species)) {
            return Err(CrystalError::UnknownElement(bad.species.clone()));
        }
        Ok(CrystalStructure { lattice, sites, comment: comment.into() })
    }

    pub fn sites(&self) -> &[AtomSite] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Distinct species in first-appearance order.
    pub fn species(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.sites {
            if !out.contains(&s.species.as_str()) {
                out.push(&s.species);
            }
        }
        out
    }

    pub fn species_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for s in &self.sites {
            *m.entry(s.species.as_str()).or_insert(0) += 1;
        }
        m
    }

    /// Reduced formula with elements in ascending atomic number, e.g. `O3MgMn`.
    pub fn reduced_formula(&self) -> String {
        let counts = self.species_counts();
        let g = counts.values().fold(0, |acc, &n| gcd(acc, n));
        let mut items: Vec<(&str, usize)> = counts.into_iter().collect();
        items.sort_by_key(|(s, _)| elements::atomic_number(s).unwrap_or(u32::MAX));
        let mut out = String::new();
        for (s, n) in items {
            out.push_str(s);
            if n / g > 1 {
                out.push_str(&(n / g).to_string());
            }
        }
        out
    }

    /// Same lattice and species, sites shifted by a fractional translation.
    pub fn translated(&self, shift: &Vec3) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|s| AtomSite::new(s.species.clone(), [s.frac[0] + shift[0], s.frac[1] + shift[1], s.frac[2] + shift[2]]))
            .collect();
        CrystalStructure { lattice: self.lattice, sites, comment: self.comment.clone() }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooManySites(usize),
    TooManySpecies(usize),
    LatticeTooLong { axis: char, length: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooManySites(n) => write!(f, "site count {n} > {MAX_ENCODABLE_SITES}"),
            Violation::TooManySpecies(n) => write!(f, "species count {n} > {MAX_ENCODABLE_SPECIES}"),
            Violation::LatticeTooLong { axis, length } => {
                write!(f, "lattice length {length} > {MAX_LATTICE_LENGTH} ({axis})")
            }
        }
    }
}

/// Every constraint the structure violates for point-cloud encoding.
pub fn validate_encodable(s: &CrystalStructure) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    if s.len() > MAX_ENCODABLE_SITES {
        v.push(Violation::TooManySites(s.len()));
    }
    let ns = s.species().len();
    if ns > MAX_ENCODABLE_SPECIES {
        v.push(Violation::TooManySpecies(ns));
    }
    for (axis, length) in ['a', 'b', 'c'].into_iter().zip(s.lattice.lengths()) {
        if length > MAX_LATTICE_LENGTH {
            v.push(Violation::LatticeTooLong { axis, length });
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::mgmno3;

    #[test]
    fn mgmno3_is_encodable() {
        let s = mgmno3();
        assert!(validate_encodable(&s).is_ok());
        assert_eq!(s.reduced_formula(), "O3MgMn");
        assert_eq!(s.species(), vec!["Mg", "Mn", "O"]);
    }

    #[test]
    fn too_many_sites() {
        let sites = (0..17).map(|i| AtomSite::new("Na", [i as f64 / 17.0, 0.0, 0.0])).collect();
        let s = CrystalStructure::new(Lattice::cubic(10.0).unwrap(), sites, "").unwrap();
        let v = validate_encodable(&s).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "site count 17 > 16");
    }

    #[test]
    fn long_lattice_boundary() {
        let ok = CrystalStructure::new(Lattice::cubic(15.0).unwrap(), vec![AtomSite::new("H", [0.0; 3])], "").unwrap();
        assert!(validate_encodable(&ok).is_ok());
        let s = CrystalStructure::new(Lattice::cubic(16.0).unwrap(), vec![AtomSite::new("H", [0.0; 3])], "").unwrap();
        let v = validate_encodable(&s).unwrap_err();
        assert_eq!(v.len(), 3);
        assert!(v[0].to_string().starts_with("lattice length 16 > 15"));
    }

    #[test]
    fn too_many_species() {
        let sites = ["H", "He", "Li", "Be"].iter().enumerate().map(|(i, e)| AtomSite::new(*e, [i as f64 * 0.2; 3])).collect();
        let s = CrystalStructure::new(Lattice::cubic(5.0).unwrap(), sites, "").unwrap();
        assert_eq!(validate_encodable(&s).unwrap_err(), vec![Violation::TooManySpecies(4)]);
    }

    #[test]
    fn construction_wraps_and_checks() {
        let site = AtomSite::new("O", [1.25, -0.25, 1.0]);
        assert_eq!(site.frac(), &[0.25, 0.75, 0.0]);
        assert!(matches!(
            CrystalStructure::new(Lattice::cubic(1.0).unwrap(), vec![], ""),
            Err(CrystalError::EmptyStructure)
        ));
        assert!(matches!(
            CrystalStructure::new(Lattice::cubic(1.0).unwrap(), vec![AtomSite::new("Xx", [0.0; 3])], ""),
            Err(CrystalError::UnknownElement(_))
        ));
    }

    #[test]
    fn formula_reduction() {
        let sites = vec![
            AtomSite::new("O", [0.0; 3]),
            AtomSite::new("Ti", [0.5; 3]),
            AtomSite::new("O", [0.25; 3]),
            AtomSite::new("Ti", [0.75; 3]),
            AtomSite::new("O", [0.1; 3]),
            AtomSite::new("O", [0.6; 3]),
        ];
        let s = CrystalStructure::new(Lattice::cubic(5.0).unwrap(), sites, "").unwrap();
        assert_eq!(s.reduced_formula(), "O2Ti");
    }
}
