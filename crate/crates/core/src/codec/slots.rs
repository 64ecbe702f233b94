use std::fmt;

use crate::crystal::{atomic_number, CrystalStructure};

use super::CodecError;

pub const MAX_SLOTS: usize = 3;

/// Up to three element symbols bound to the one-hot slots of the element
/// channel, kept in ascending atomic number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSlots {
    symbols: Vec<String>,
}

impl ElementSlots {
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Result<Self, CodecError> {
        if symbols.is_empty() {
            return Err(CodecError::InvalidSlots("no element symbols given".into()));
        }
        if symbols.len() > MAX_SLOTS {
            return Err(CodecError::InvalidSlots(format!(
                "{} element symbols given, at most {MAX_SLOTS} allowed",
                symbols.len()
            )));
        }
        let mut out: Vec<String> = Vec::with_capacity(symbols.len());
        for s in symbols {
            let s = s.as_ref().trim();
            if atomic_number(s).is_none() {
                return Err(CodecError::InvalidSlots(format!("unknown element symbol {s:?}")));
            }
            if out.iter().any(|x| x == s) {
                return Err(CodecError::InvalidSlots(format!("duplicate element symbol {s:?}")));
            }
            out.push(s.to_string());
        }
        out.sort_by_key(|s| atomic_number(s));
        Ok(ElementSlots { symbols: out })
    }

    /// Parses a comma- or whitespace-separated list such as `"Mg,Mn,O"`.
    pub fn parse(list: &str) -> Result<Self, CodecError> {
        let toks: Vec<&str> = list.split([',', ' ']).filter(|t| !t.is_empty()).collect();
        Self::new(&toks)
    }

    pub fn for_structure(s: &CrystalStructure) -> Result<Self, CodecError> {
        Self::new(&s.species())
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn slot_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn one_hot(slot: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[slot] = 1.0;
        v
    }
}

impl fmt::Display for ElementSlots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbols.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let s = ElementSlots::new(&["O", "Mn", "Mg"]).unwrap();
        assert_eq!(s.symbols(), &["O", "Mg", "Mn"]);
        assert_eq!(s.slot_of("O"), Some(0));
        assert_eq!(ElementSlots::parse("O, Mg").unwrap().symbols(), &["O", "Mg"]);
    }

    #[test]
    fn invalid() {
        assert!(ElementSlots::new::<&str>(&[]).is_err());
        assert!(ElementSlots::new(&["H", "He", "Li", "Be"]).is_err());
        assert!(ElementSlots::new(&["H", "H"]).is_err());
        assert!(ElementSlots::new(&["Zz"]).is_err());
    }
}
