//! Crystal data model: lattices, sites, POSCAR I/O and periodic geometry.

mod elements;
mod lattice;
mod periodic;
mod poscar;
mod structure;

use thiserror::Error;

pub use elements::{atomic_number, is_element, symbol};
pub use lattice::{lattice_from_parameters, parameters_from_lattice, Lattice, LatticeParams, Mat3, Vec3};
pub use periodic::{cart_distance, frac_distance, min_image_delta, wrap, wrap3};
pub use poscar::{parse_poscar, write_poscar};
pub use structure::{
    validate_encodable, AtomSite, CrystalStructure, Violation, MAX_ENCODABLE_SITES, MAX_ENCODABLE_SPECIES,
    MAX_LATTICE_LENGTH,
};

#[derive(Debug, Error, PartialEq)]
pub enum CrystalError {
    #[error("lattice length {name} = {value} is not positive")]
    NonPositiveLength { name: &'static str, value: f64 },
    #[error("lattice angle {name} = {value} rad is outside (0, π)")]
    AngleOutOfRange { name: &'static str, value: f64 },
    #[error("degenerate cell")]
    DegenerateCell,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("species counts declare {expected} sites but {found} coordinate lines follow")]
    CountMismatch { expected: usize, found: usize },
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("structure has no sites")]
    EmptyStructure,
}
