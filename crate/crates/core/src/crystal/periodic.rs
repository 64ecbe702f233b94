use super::lattice::{norm, Lattice, Vec3};

/// Wraps a coordinate into [0, 1).
pub fn wrap(x: f64) -> f64 {
    let w = x - x.floor();
    // tiny negative inputs round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn wrap3(v: &Vec3) -> Vec3 {
    [wrap(v[0]), wrap(v[1]), wrap(v[2])]
}

/// Minimum-image difference `u - v`, each component in [-0.5, 0.5).
pub fn min_image_delta(u: &Vec3, v: &Vec3) -> Vec3 {
    let mut d = [0.0; 3];
    for k in 0..3 {
        let x = u[k] - v[k];
        let y = x - (x + 0.5).floor();
        d[k] = if y >= 0.5 { y - 1.0 } else { y };
    }
    d
}

/// Euclidean norm of the minimum-image delta in fractional units.
pub fn frac_distance(u: &Vec3, v: &Vec3) -> f64 {
    norm(&min_image_delta(u, v))
}

/// Cartesian length of the minimum-image delta under `lattice`.
pub fn cart_distance(lattice: &Lattice, u: &Vec3, v: &Vec3) -> f64 {
    norm(&lattice.to_cartesian(&min_image_delta(u, v)))
}
