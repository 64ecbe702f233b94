//! Reference structures and seeded random structure generators shared by
//! tests, benchmarks and the acceptance suite.

use rand::Rng;

use crate::crystal::{frac_distance, lattice_from_parameters, AtomSite, CrystalStructure, Lattice, LatticeParams, Vec3};

pub const MGMNO3_POSCAR: &str = "MgMnO3
1.0
  3.75 0.0 0.0
  0.0 3.75 0.0
  0.0 0.0 3.75
Mg Mn O
1 1 3
Direct
  0.0 0.0 0.0
  0.5 0.5 0.5
  0.0 0.5 0.5
  0.5 0.0 0.5
  0.5 0.5 0.0
";

/// Cubic perovskite-like MgMnO3 cell, a = 3.75 Å: Mg at the corner, Mn at the
/// body centre and one O on each face.
pub fn mgmno3() -> CrystalStructure {
    let sites = vec![
        AtomSite::new("Mg", [0.0, 0.0, 0.0]),
        AtomSite::new("Mn", [0.5, 0.5, 0.5]),
        AtomSite::new("O", [0.0, 0.5, 0.5]),
        AtomSite::new("O", [0.5, 0.0, 0.5]),
        AtomSite::new("O", [0.5, 0.5, 0.0]),
    ];
    CrystalStructure::new(Lattice::cubic(3.75).expect("valid cell"), sites, "MgMnO3").expect("valid structure")
}

/// Random encodable structure: 1..=16 sites, up to 3 species drawn from
/// `pool`, lattice lengths in [4, 15] Å, angles in [70°, 110°], and pairwise
/// minimum-image fractional separation of at least `min_sep`.
pub fn random_encodable<R: Rng>(rng: &mut R, pool: &[&str], min_sep: f64) -> CrystalStructure {
    loop {
        let p = LatticeParams {
            a: rng.random_range(4.0..15.0),
            b: rng.random_range(4.0..15.0),
            c: rng.random_range(4.0..15.0),
            alpha: rng.random_range(70.0f64..110.0).to_radians(),
            beta: rng.random_range(70.0f64..110.0).to_radians(),
            gamma: rng.random_range(70.0f64..110.0).to_radians(),
        };
        let Ok(lattice) = lattice_from_parameters(&p) else { continue };
        let n_species = rng.random_range(1..=pool.len().min(3));
        let n_sites = rng.random_range(n_species..=16);
        let mut points: Vec<Vec3> = Vec::with_capacity(n_sites);
        let mut attempts = 0;
        while points.len() < n_sites && attempts < 10_000 {
            attempts += 1;
            let f = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            if points.iter().all(|q| frac_distance(q, &f) >= min_sep) {
                points.push(f);
            }
        }
        if points.len() < n_sites {
            continue;
        }
        let sites = points
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                // every species appears at least once
                let sp = if i < n_species { i } else { rng.random_range(0..n_species) };
                AtomSite::new(pool[sp], f)
            })
            .collect();
        return CrystalStructure::new(lattice, sites, "random").expect("valid structure");
    }
}
