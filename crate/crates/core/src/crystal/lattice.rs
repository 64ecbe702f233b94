use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CrystalError;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub(crate) fn dot(u: &Vec3, v: &Vec3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub(crate) fn norm(u: &Vec3) -> f64 {
    dot(u, u).sqrt()
}

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The six scalars describing a cell. Lengths in Å, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LatticeParams {
    pub fn lengths(&self) -> Vec3 {
        [self.a, self.b, self.c]
    }

    pub fn angles(&self) -> Vec3 {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn cubic(a: f64) -> Self {
        LatticeParams { a, b: a, c: a, alpha: PI / 2.0, beta: PI / 2.0, gamma: PI / 2.0 }
    }
}

/// A periodic cell given by its three Cartesian lattice vectors (rows, Å).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    vectors: Mat3,
}

impl Lattice {
    /// Builds a lattice from explicit row vectors. The cell must be
    /// right-handed and non-degenerate.
    pub fn new(vectors: Mat3) -> Result<Self, CrystalError> {
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(CrystalError::DegenerateCell);
        }
        if vectors.iter().any(|row| norm(row) == 0.0) {
            return Err(CrystalError::DegenerateCell);
        }
        let scale = norm(&vectors[0]) * norm(&vectors[1]) * norm(&vectors[2]);
        if det(&vectors) <= 1e-10 * scale {
            return Err(CrystalError::DegenerateCell);
        }
        Ok(Lattice { vectors })
    }

    pub fn cubic(a: f64) -> Result<Self, CrystalError> {
        lattice_from_parameters(&LatticeParams::cubic(a))
    }

    pub fn vectors(&self) -> &Mat3 {
        &self.vectors
    }

    pub fn lengths(&self) -> Vec3 {
        [norm(&self.vectors[0]), norm(&self.vectors[1]), norm(&self.vectors[2])]
    }

    pub fn volume(&self) -> f64 {
        det(&self.vectors)
    }

    pub fn parameters(&self) -> LatticeParams {
        // Row norms are non-zero by construction.
        parameters_from_lattice(self).expect("lattice invariants hold")
    }

    /// Fractional row vector times the lattice matrix.
    pub fn to_cartesian(&self, frac: &Vec3) -> Vec3 {
        let m = &self.vectors;
        [
            frac[0] * m[0][0] + frac[1] * m[1][0] + frac[2] * m[2][0],
            frac[0] * m[0][1] + frac[1] * m[1][1] + frac[2] * m[2][1],
            frac[0] * m[0][2] + frac[1] * m[1][2] + frac[2] * m[2][2],
        ]
    }

    pub fn to_fractional(&self, cart: &Vec3) -> Vec3 {
        let m = &self.vectors;
        let d = det(m);
        // inverse of the row matrix via cofactors
        let inv = [
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d,
            ],
        ];
        [
            cart[0] * inv[0][0] + cart[1] * inv[1][0] + cart[2] * inv[2][0],
            cart[0] * inv[0][1] + cart[1] * inv[1][1] + cart[2] * inv[2][1],
            cart[0] * inv[0][2] + cart[1] * inv[1][2] + cart[2] * inv[2][2],
        ]
    }
}

/// Lattice vectors from cell parameters:
///
/// a⃗ = a(1, 0, 0)
/// b⃗ = b(cos γ, sin γ, 0)
/// c⃗ = c(cos β, (cos α − cos β cos γ)/sin γ, √(1 + 2 cos α cos β cos γ − cos²α − cos²β − cos²γ)/sin γ)
pub fn lattice_from_parameters(p: &LatticeParams) -> Result<Lattice, CrystalError> {
    for (name, len) in [("a", p.a), ("b", p.b), ("c", p.c)] {
        if !(len > 0.0) || !len.is_finite() {
            return Err(CrystalError::NonPositiveLength { name, value: len });
        }
    }
    for (name, angle) in [("alpha", p.alpha), ("beta", p.beta), ("gamma", p.gamma)] {
        if !(angle > 0.0 && angle < PI) {
            return Err(CrystalError::AngleOutOfRange { name, value: angle });
        }
    }
    let (ca, cb) = (p.alpha.cos(), p.beta.cos());
    let (sg, cg) = p.gamma.sin_cos();
    let radicand = 1.0 + 2.0 * ca * cb * cg - ca * ca - cb * cb - cg * cg;
    // (V / abc)^2; tiny values are rounding residue of a flat cell
    if !(radicand > 1e-12) {
        return Err(CrystalError::DegenerateCell);
    }
    let vectors = [
        [p.a, 0.0, 0.0],
        [p.b * cg, p.b * sg, 0.0],
        [p.c * cb, p.c * (ca - cb * cg) / sg, p.c * radicand.sqrt() / sg],
    ];
    Lattice::new(vectors)
}

pub fn parameters_from_lattice(l: &Lattice) -> Result<LatticeParams, CrystalError> {
    let [va, vb, vc] = l.vectors;
    let (a, b, c) = (norm(&va), norm(&vb), norm(&vc));
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return Err(CrystalError::DegenerateCell);
    }
    let angle = |u: &Vec3, v: &Vec3, lu: f64, lv: f64| (dot(u, v) / (lu * lv)).clamp(-1.0, 1.0).acos();
    Ok(LatticeParams {
        a,
        b,
        c,
        alpha: angle(&vb, &vc, b, c),
        beta: angle(&va, &vc, a, c),
        gamma: angle(&va, &vb, a, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn cubic_worked_example() {
        let l = lattice_from_parameters(&LatticeParams::cubic(3.75)).unwrap();
        let v = l.vectors();
        let expect = [[3.75, 0.0, 0.0], [0.0, 3.75, 0.0], [0.0, 0.0, 3.75]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((v[i][j] - expect[i][j]).abs() < 1e-15, "{v:?}");
            }
        }
        let p = parameters_from_lattice(&l).unwrap();
        assert!((p.a - 3.75).abs() < 1e-15 && (p.b - 3.75).abs() < 1e-15 && (p.c - 3.75).abs() < 1e-15);
        for ang in p.angles() {
            assert!((ang - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_cube_is_identity() {
        let l = lattice_from_parameters(&LatticeParams::cubic(1.0)).unwrap();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((l.vectors()[i][j] - id[i][j]).abs() < 1e-15);
            }
        }
        let p = Lattice::new(id).unwrap().parameters();
        assert_eq!((p.a, p.b, p.c), (1.0, 1.0, 1.0));
        assert_eq!(p.alpha, PI / 2.0);
    }

    #[test]
    fn triclinic_dot_products() {
        let p = LatticeParams { a: 2.0, b: 3.0, c: 4.0, alpha: deg(80.0), beta: deg(85.0), gamma: deg(95.0) };
        let l = lattice_from_parameters(&p).unwrap();
        let [va, vb, vc] = *l.vectors();
        assert!((dot(&va, &vb) - 6.0 * p.gamma.cos()).abs() < 1e-10);
        assert!((dot(&va, &vc) - 8.0 * p.beta.cos()).abs() < 1e-10);
        assert!((dot(&vb, &vc) - 12.0 * p.alpha.cos()).abs() < 1e-10);

        let back = parameters_from_lattice(&l).unwrap();
        for (x, y) in back.lengths().iter().zip(p.lengths()) {
            assert!((x - y).abs() <= 1e-9 * y);
        }
        for (x, y) in back.angles().iter().zip(p.angles()) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = LatticeParams::cubic(1.0);
        p.b = 0.0;
        assert!(matches!(lattice_from_parameters(&p), Err(CrystalError::NonPositiveLength { name: "b", .. })));
        let mut p = LatticeParams::cubic(1.0);
        p.gamma = PI;
        assert!(matches!(lattice_from_parameters(&p), Err(CrystalError::AngleOutOfRange { .. })));
        // three coplanar vectors: alpha + beta = gamma
        let p = LatticeParams { a: 1.0, b: 1.0, c: 1.0, alpha: deg(30.0), beta: deg(30.0), gamma: deg(60.0) };
        assert!(matches!(lattice_from_parameters(&p), Err(CrystalError::DegenerateCell)));
        let zeros = LatticeParams { a: 0.0, b: 0.0, c: 0.0, alpha: 0.0, beta: 0.0, gamma: 0.0 };
        assert!(lattice_from_parameters(&zeros).is_err());
    }

    #[test]
    fn left_handed_rejected() {
        let m = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        assert!(Lattice::new(m).is_err());
    }

    #[test]
    fn fractional_cartesian_inverse() {
        let p = LatticeParams { a: 2.0, b: 3.0, c: 4.0, alpha: deg(80.0), beta: deg(85.0), gamma: deg(95.0) };
        let l = lattice_from_parameters(&p).unwrap();
        let f = [0.1, 0.7, 0.35];
        let back = l.to_fractional(&l.to_cartesian(&f));
        for k in 0..3 {
            assert!((back[k] - f[k]).abs() < 1e-14);
        }
    }
}
