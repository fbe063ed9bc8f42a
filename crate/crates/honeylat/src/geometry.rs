//! Triangular lattice, its dual, the Brillouin-zone vertices and rational edge frames.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec2 = [f64; 2];

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub type Mat2 = [[f64; 2]; 2];

#[inline]
pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Clockwise rotation by 2π/3.
pub fn rotation_matrix() -> Mat2 {
    [[-0.5, 0.5 * SQRT3], [-0.5 * SQRT3, -0.5]]
}

/// Equilateral triangular lattice with spacing `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularLattice {
    pub scale: f64,
    pub v1: Vec2,
    pub v2: Vec2,
    pub k1: Vec2,
    pub k2: Vec2,
    pub q: f64,
    pub cell_area: f64,
}

impl TriangularLattice {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return invalid(format!("lattice scale must be positive, got {a}"));
        }
        let q = 4.0 * PI / (SQRT3 * a);
        Ok(Self {
            scale: a,
            v1: [a * 0.5 * SQRT3, a * 0.5],
            v2: [a * 0.5 * SQRT3, -a * 0.5],
            k1: [q * 0.5, q * 0.5 * SQRT3],
            k2: [q * 0.5, -q * 0.5 * SQRT3],
            q,
            cell_area: 0.5 * SQRT3 * a * a,
        })
    }

    pub fn unit() -> Self {
        Self::new(1.0).expect("unit lattice")
    }

    /// m1 k1 + m2 k2
    pub fn dual(&self, m: (i64, i64)) -> Vec2 {
        add(scale(m.0 as f64, self.k1), scale(m.1 as f64, self.k2))
    }

    /// n1 v1 + n2 v2
    pub fn direct(&self, n: (i64, i64)) -> Vec2 {
        add(scale(n.0 as f64, self.v1), scale(n.1 as f64, self.v2))
    }

    /// Coordinates of `k` in the (k1, k2) basis.
    pub fn dual_coords(&self, k: Vec2) -> Vec2 {
        [dot(k, self.v1) / (2.0 * PI), dot(k, self.v2) / (2.0 * PI)]
    }

    /// Coordinates of `x` in the (v1, v2) basis.
    pub fn direct_coords(&self, x: Vec2) -> Vec2 {
        [dot(x, self.k1) / (2.0 * PI), dot(x, self.k2) / (2.0 * PI)]
    }

    pub fn high_symmetry(&self) -> HighSymmetryPoints {
        let k = scale(1.0 / 3.0, sub(self.k1, self.k2));
        HighSymmetryPoints {
            k,
            k_prime: scale(-1.0, k),
            rotation: rotation_matrix(),
        }
    }

    pub fn k_point(&self) -> Vec2 {
        self.high_symmetry().k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighSymmetryPoints {
    pub k: Vec2,
    pub k_prime: Vec2,
    pub rotation: Mat2,
}

/// Action of the rotation on dual-lattice indices: (m1, m2) -> (-m2, m1 - m2).
pub fn rotate_index(m: (i64, i64)) -> (i64, i64) {
    (-m.1, m.0 - m.1)
}

/// Rotation of the plane wave K + m·k about the origin, written on indices.
/// R(K + m·k) = K + (R̃m + (0,1))·k because RK = K + k2.
pub fn rotate_vertex_index(m: (i64, i64)) -> (i64, i64) {
    let r = rotate_index(m);
    (r.0, r.1 + 1)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns (g, x, y) with a x + b y = g = gcd(a, b) >= 0.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let qt = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - qt * r1);
        (s0, s1) = (s1, s0 - qt * s1);
        (t0, t1) = (t1, t0 - qt * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Rational edge 𝔳₁ = a1 v1 + b1 v2 completed to a unimodular basis, with its dual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrame {
    pub a1: i64,
    pub b1: i64,
    pub a2: i64,
    pub b2: i64,
    pub frak_v1: Vec2,
    pub frak_v2: Vec2,
    pub frak_k1: Vec2,
    pub frak_k2: Vec2,
    pub kpar_at_k: f64,
}

impl EdgeFrame {
    pub fn zigzag(lat: &TriangularLattice) -> Self {
        edge_frame(lat, 1, 0).expect("zigzag")
    }

    pub fn armchair(lat: &TriangularLattice) -> Self {
        edge_frame(lat, 1, 1).expect("armchair")
    }

    /// Dual index (m1, m2) of n1 𝔎₁ + n2 𝔎₂.
    pub fn dual_from_edge(&self, n: (i64, i64)) -> (i64, i64) {
        (
            n.0 * self.b2 - n.1 * self.b1,
            -n.0 * self.a2 + n.1 * self.a1,
        )
    }

    /// Edge-frame index (n1, n2) of m1 k1 + m2 k2.
    pub fn edge_from_dual(&self, m: (i64, i64)) -> (i64, i64) {
        (
            self.a1 * m.0 + self.b1 * m.1,
            self.a2 * m.0 + self.b2 * m.1,
        )
    }

    pub fn is_zigzag(&self) -> bool {
        (self.a1, self.b1) == (1, 0)
    }
}

/// Completes (a1, b1) to a unimodular frame. Among all (a2, b2) with a1 b2 - a2 b1 = 1 the one with
/// minimal |a2| + |b2| is chosen, ties going to a2 >= 0.
pub fn edge_frame(lat: &TriangularLattice, a1: i64, b1: i64) -> Result<EdgeFrame> {
    if a1 == 0 && b1 == 0 {
        return invalid("edge direction (0,0)");
    }
    if gcd(a1, b1) != 1 {
        return invalid(format!("edge indices ({a1},{b1}) are not coprime"));
    }
    // a1 y - b1 x = 1  with (x, y) = (a2, b2)
    let (_, s, t) = ext_gcd(a1, -b1);
    // a1 s + (-b1) t = 1  =>  b2 = s, a2 = t
    let (a2_0, b2_0) = (t, s);
    let span = a2_0.abs() + b2_0.abs() + 2;
    let mut best: Option<(i64, i64)> = None;
    for shift in -span..=span {
        let a2 = a2_0 + shift * a1;
        let b2 = b2_0 + shift * b1;
        debug_assert_eq!(a1 * b2 - a2 * b1, 1);
        let better = match best {
            None => true,
            Some((ba, bb)) => {
                let (c, cb) = (a2.abs() + b2.abs(), ba.abs() + bb.abs());
                c < cb || (c == cb && a2 >= 0 && ba < 0)
            }
        };
        if better {
            best = Some((a2, b2));
        }
    }
    let (a2, b2) = best.expect("nonempty search");
    let frak_v1 = lat.direct((a1, b1));
    let frak_v2 = lat.direct((a2, b2));
    let frak_k1 = sub(scale(b2 as f64, lat.k1), scale(a2 as f64, lat.k2));
    let frak_k2 = add(scale(-b1 as f64, lat.k1), scale(a1 as f64, lat.k2));
    let kpar_at_k = dot(lat.k_point(), frak_v1).rem_euclid(2.0 * PI);
    Ok(EdgeFrame {
        a1,
        b1,
        a2,
        b2,
        frak_v1,
        frak_v2,
        frak_k1,
        frak_k2,
        kpar_at_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_lattice_constants() {
        let lat = TriangularLattice::unit();
        assert!((lat.q - 7.255_197_456_936_871).abs() < 1e-12);
        assert!((lat.cell_area - 0.866_025_403_784_438_6).abs() < 1e-14);
        assert!(dot(lat.k1, lat.v2).abs() < 1e-14);
        assert!((dot(lat.k1, lat.k2) + 0.5 * lat.q * lat.q).abs() < 1e-12);
    }

    #[test]
    fn rotation_moves_k_to_k_plus_k2() {
        let lat = TriangularLattice::unit();
        let hs = lat.high_symmetry();
        let rk = mat_vec(&hs.rotation, hs.k);
        let target = add(hs.k, lat.k2);
        assert!(norm(sub(rk, target)) < 1e-13);
        let r3 = mat_mul(&hs.rotation, &mat_mul(&hs.rotation, &hs.rotation));
        assert!((r3[0][0] - 1.0).abs() < 1e-14 && r3[0][1].abs() < 1e-14);
    }

    #[test]
    fn rotated_index_matches_rotated_vector() {
        let lat = TriangularLattice::unit();
        let r = rotation_matrix();
        for m in [(1, 0), (0, 1), (2, -3), (-1, -1)] {
            let lhs = mat_vec(&r, lat.dual(m));
            let rhs = lat.dual(rotate_index(m));
            assert!(norm(sub(lhs, rhs)) < 1e-12);
        }
    }

    #[test]
    fn zigzag_and_armchair_frames() {
        let lat = TriangularLattice::unit();
        let zz = EdgeFrame::zigzag(&lat);
        assert_eq!((zz.a2, zz.b2), (0, 1));
        assert!(norm(sub(zz.frak_k1, lat.k1)) < 1e-14);
        assert!(norm(sub(zz.frak_k2, lat.k2)) < 1e-14);
        assert!((zz.kpar_at_k - 2.0 * PI / 3.0).abs() < 1e-13);
        let ac = EdgeFrame::armchair(&lat);
        assert_eq!((ac.a2, ac.b2), (0, 1));
        assert!(norm(sub(ac.frak_k2, sub(lat.k2, lat.k1))) < 1e-13);
        let kp = ac.kpar_at_k;
        assert!(kp.min(2.0 * PI - kp) < 1e-12);
    }

    #[test]
    fn non_coprime_rejected() {
        let lat = TriangularLattice::unit();
        assert!(edge_frame(&lat, 2, 4).is_err());
        assert!(edge_frame(&lat, 0, 0).is_err());
        assert!(TriangularLattice::new(0.0).is_err());
    }

    #[test]
    fn index_maps_are_inverse() {
        let lat = TriangularLattice::unit();
        let fr = edge_frame(&lat, 3, -7).unwrap();
        for m in [(1, 0), (0, 1), (5, -2)] {
            let n = fr.edge_from_dual(m);
            assert_eq!(fr.dual_from_edge(n), m);
            let v = add(scale(n.0 as f64, fr.frak_k1), scale(n.1 as f64, fr.frak_k2));
            assert!(norm(sub(v, lat.dual(m))) < 1e-11);
        }
    }
}
