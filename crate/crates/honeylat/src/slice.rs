//! Edge-dual dispersion slices, the no-fold test and the small-amplitude 3×3 reduction.

use crate::bloch::{band_energies, DiracPointData};
use crate::error::{invalid, Error, Result};
use crate::geometry::{add, scale, EdgeFrame, Vec2};
use crate::linalg::{eigh_complex, CMat, EigRange, C64};
use crate::potential::FourierPotential;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SliceCurve {
    pub band: usize,
    pub lambdas: Vec<f64>,
    pub energies: Vec<f64>,
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|i| -0.5 + i as f64 / (n - 1) as f64).collect()
}

pub fn slice_point(k: Vec2, edge: &EdgeFrame, lam: f64) -> Vec2 {
    add(k, scale(lam, edge.frak_k2))
}

/// Bands 1..=n_bands along k = K + λ𝔎₂.
pub fn dispersion_slice(
    v: &FourierPotential,
    edge: &EdgeFrame,
    lambdas: &[f64],
    n_bands: usize,
    m_trunc: usize,
) -> Result<Vec<SliceCurve>> {
    if lambdas.iter().any(|l| l.abs() > 0.5 + 1e-12) {
        return invalid("slice parameters must lie in [-1/2, 1/2]");
    }
    let k = v.lattice.k_point();
    let mut curves: Vec<SliceCurve> = (1..=n_bands)
        .map(|b| SliceCurve {
            band: b,
            lambdas: lambdas.to_vec(),
            energies: Vec::with_capacity(lambdas.len()),
        })
        .collect();
    for &lam in lambdas {
        let e = band_energies(v, slice_point(k, edge, lam), m_trunc, n_bands)?;
        for (c, x) in curves.iter_mut().zip(e) {
            c.energies.push(x);
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, Serialize)]
pub struct NoFoldReport {
    pub pass: bool,
    pub a_param: f64,
    pub nu: f64,
    /// min over a^ν ≤ |λ| ≤ 1/2 of |E± − E★|
    pub min_pair_gap: f64,
    /// min over the same range of |E± − E★| / λ²
    pub c1_pointwise: f64,
    /// min_pair_gap / ω(a^ν) with ω(s) = s²
    pub c1: f64,
    /// min over |λ| ≤ 1/2 and b ∉ {b★, b★+1} of |E_b − E★| / (1 + b)
    pub c2: f64,
    pub witness_lambda: Option<f64>,
    pub witness_band: Option<usize>,
    pub witness_count: usize,
    pub modulus: String,
    pub grid_points: usize,
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotFound(format!(
            "no sign change on [{a}, {b}]: {fa:e}, {fb:e}"
        )));
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Numerical certification of the no-fold inequalities along the 𝔎₂ slice through K,
/// with ω(s) = s².
pub fn no_fold_check(
    v_scaled: &FourierPotential,
    edge: &EdgeFrame,
    dp: &DiracPointData,
    a_param: f64,
    nu: f64,
    m_trunc: usize,
    grid_points: usize,
) -> Result<NoFoldReport> {
    if !(a_param > 0.0 && a_param < 1.0) || !(nu > 0.0 && nu < 1.0) {
        return invalid("no-fold parameters need 0 < a < 1 and 0 < ν < 1");
    }
    let lo = a_param.powf(nu);
    if lo >= 0.5 {
        return invalid("a^ν must be below 1/2");
    }
    let bs = dp.b_star;
    let n_bands = bs + 3;
    let k = dp.k;
    let e_star = dp.e_star;
    let bands_at = |lam: f64| band_energies(v_scaled, slice_point(k, edge, lam), m_trunc, n_bands);
    let lambdas = uniform_grid(grid_points.max(3));
    let mut table = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        table.push(bands_at(l)?);
    }
    let mut c2 = f64::INFINITY;
    for row in &table {
        for (i, e) in row.iter().enumerate() {
            let b = i + 1;
            if b != bs && b != bs + 1 {
                c2 = c2.min((e - e_star).abs() / (1.0 + b as f64));
            }
        }
    }
    let in_range = |l: f64| l.abs() >= lo - 1e-15;
    let step = 1.0 / (lambdas.len() - 1) as f64;
    let mut best = (f64::INFINITY, 0.0, bs);
    let tol = 1e-7 * e_star.abs().max(1.0);
    let mut witnesses: Vec<(f64, usize)> = Vec::new();
    for band in [bs, bs + 1] {
        let signed = |l: f64| -> Result<f64> { Ok(bands_at(l)?[band - 1] - e_star) };
        let gap = |l: f64| -> Result<f64> { Ok(signed(l)?.abs()) };
        for i in 0..lambdas.len() {
            let l = lambdas[i];
            if !in_range(l) {
                continue;
            }
            let d = table[i][band - 1] - e_star;
            if d.abs() < best.0 {
                best = (d.abs(), l, band);
            }
            if i + 1 < lambdas.len() && in_range(lambdas[i + 1]) {
                let d2 = table[i + 1][band - 1] - e_star;
                if d.signum() != d2.signum() {
                    witnesses.push((bisect(&signed, l, lambdas[i + 1], 1e-12)?, band));
                }
            }
        }
        // refine interior grid minima of |E_b − E★|
        for i in 1..lambdas.len() - 1 {
            let l = lambdas[i];
            if !in_range(lambdas[i - 1]) || !in_range(lambdas[i + 1]) {
                continue;
            }
            let (dm, d0, dp_) = (
                (table[i - 1][band - 1] - e_star).abs(),
                (table[i][band - 1] - e_star).abs(),
                (table[i + 1][band - 1] - e_star).abs(),
            );
            if d0 <= dm && d0 <= dp_ {
                let (x, fx) = golden_min(&gap, l - step, l + step, 1e-10)?;
                if fx < best.0 {
                    best = (fx, x, band);
                }
                if fx <= tol {
                    witnesses.push((x, band));
                }
            }
        }
    }
    // ω(λ) = λ² evaluated pointwise over the grid
    let mut c1_pointwise = f64::INFINITY;
    for (i, &l) in lambdas.iter().enumerate() {
        if !in_range(l) {
            continue;
        }
        for band in [bs, bs + 1] {
            c1_pointwise = c1_pointwise.min((table[i][band - 1] - e_star).abs() / (l * l));
        }
    }
    // prefer a witness where both cone bands meet E★ (a displaced Dirac point)
    let mut witness = None;
    let mut score = f64::INFINITY;
    for &(l, band) in &witnesses {
        let e = bands_at(l)?;
        let s = (e[bs - 1] - e_star).abs().max((e[bs] - e_star).abs());
        if s < score - tol {
            score = s;
            witness = Some((l, band));
        }
    }
    let min_gap = if witness.is_some() { 0.0 } else { best.0 };
    let c1 = min_gap / (lo * lo);
    let pass = witness.is_none() && c1 > 0.0 && c2 > tol;
    Ok(NoFoldReport {
        pass,
        a_param,
        nu,
        min_pair_gap: min_gap,
        c1_pointwise,
        c1,
        c2,
        witness_lambda: witness.map(|w| w.0),
        witness_band: witness.map(|w| w.1),
        witness_count: witnesses.len(),
        modulus: "omega(a) = a^2".into(),
        grid_points: lambdas.len(),
    })
}

/// Root of E_b(K + λ𝔎₂) − E★ inside [lo, hi], scanning for a sign change and then bisecting.
pub fn slice_crossing(
    v_scaled: &FourierPotential,
    edge: &EdgeFrame,
    dp: &DiracPointData,
    band: usize,
    lo: f64,
    hi: f64,
    m_trunc: usize,
) -> Result<f64> {
    let f = |l: f64| -> Result<f64> {
        Ok(band_energies(v_scaled, slice_point(dp.k, edge, l), m_trunc, band)?[band - 1] - dp.e_star)
    };
    let n = 64;
    let mut prev = (lo, f(lo)?);
    for i in 1..=n {
        let l = lo + (hi - lo) * i as f64 / n as f64;
        let fl = f(l)?;
        if fl.signum() != prev.1.signum() {
            return bisect(&f, prev.0, l, 1e-12);
        }
        prev = (l, fl);
    }
    Err(Error::RootNotFound(format!(
        "band {band} does not cross E★ on [{lo}, {hi}]"
    )))
}

/// Leading-order 3×3 model in the sector basis (1, τ, τ̄).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducedModel {
    pub q: f64,
    pub v00: f64,
    pub v11: f64,
    pub w01: f64,
    pub w10: f64,
    pub w11: f64,
}

#[derive(Debug, Clone)]
pub struct ReducedMatrix {
    pub eps: f64,
    pub delta: f64,
    pub lam: f64,
    pub m0_approx: CMat,
    pub mv: CMat,
    pub mw: CMat,
    pub j: CMat,
    pub total: CMat,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetVsPi {
    pub det: f64,
    pub pi: f64,
    /// |det + π| / ((λ² + |ε|)(λ² + δ²))
    pub relative_gap: f64,
    pub in_regime: bool,
}

fn tau() -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0)
}

fn det3(m: &CMat) -> C64 {
    let a = |i, j| m[(i, j)];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

fn from_rows(rows: [[C64; 3]; 3]) -> CMat {
    let mut m = CMat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = rows[i][j];
        }
    }
    m
}

impl ReducedModel {
    pub fn new(v: &FourierPotential, w: &FourierPotential) -> Result<Self> {
        let q = v.lattice.q;
        let wr = |m| -> Result<f64> {
            let c: C64 = w.get(m);
            let x = C64::new(0.0, -1.0) * c / 3f64.sqrt();
            if x.im.abs() > 1e-12 * x.re.abs().max(1.0) {
                return invalid(format!("W coefficient at {m:?} is not purely imaginary"));
            }
            Ok(x.re)
        };
        Ok(Self {
            q,
            v00: v.get((0, 0)).re,
            v11: v.get((1, 1)).re,
            w01: wr((0, 1))?,
            w10: wr((1, 0))?,
            w11: wr((1, 1))?,
        })
    }

    pub fn alpha(&self) -> C64 {
        C64::new(0.0, self.q * self.q / 3f64.sqrt()) * tau()
    }

    pub fn j_matrix(&self) -> CMat {
        let a = self.alpha();
        let z = C64::new(0.0, 0.0);
        from_rows([[z, a, a.conj()], [a.conj(), z, a], [a, a.conj(), z]])
    }

    /// |W₀₁ + W₁₀ − W₁₁|²
    pub fn w_proxy_sq(&self) -> f64 {
        let s = self.w01 + self.w10 - self.w11;
        3.0 * s * s
    }

    pub fn m_approx(&self, eps: f64, delta: f64, lam: f64) -> ReducedMatrix {
        let q2 = self.q * self.q;
        let j = self.j_matrix();
        let c = |x: f64| C64::new(x, 0.0);
        let z = c(0.0);
        let d0 = -eps * (self.v00 - self.v11) + lam * lam * q2;
        let mut m0 = CMat::zeros(3, 3);
        for r in 0..3 {
            for s in 0..3 {
                m0[(r, s)] = lam * j[(r, s)] + if r == s { c(d0) } else { z };
            }
        }
        let mv = from_rows([
            [c(eps * (self.v00 + 2.0 * self.v11)), z, z],
            [z, c(eps * (self.v00 - self.v11)), z],
            [z, z, c(eps * (self.v00 - self.v11))],
        ]);
        let t = tau();
        let tb = t.conj();
        let one = c(1.0);
        let w01 = from_rows([[z, t, -tb], [tb, -one, z], [-t, z, one]]);
        let w10 = from_rows([[z, tb, -t], [t, -one, z], [-tb, z, one]]);
        let w11 = from_rows([[z, -one, one], [-one, one, z], [one, z, -one]]);
        let mut mw = CMat::zeros(3, 3);
        let mut total = CMat::zeros(3, 3);
        for r in 0..3 {
            for s in 0..3 {
                mw[(r, s)] = delta * (self.w01 * w01[(r, s)] + self.w10 * w10[(r, s)] + self.w11 * w11[(r, s)]);
                total[(r, s)] = m0[(r, s)] + mv[(r, s)] + mw[(r, s)];
            }
        }
        ReducedMatrix {
            eps,
            delta,
            lam,
            m0_approx: m0,
            mv,
            mw,
            j,
            total,
        }
    }

    pub fn det(&self, eps: f64, delta: f64, lam: f64) -> f64 {
        det3(&self.m_approx(eps, delta, lam).total).re
    }

    pub fn pi(&self, eps: f64, delta: f64, lam: f64) -> f64 {
        let q2 = self.q * self.q;
        (q2 * lam * lam + eps * self.v11) * (q2 * q2 * lam * lam + delta * delta * self.w_proxy_sq())
    }

    /// (ζ₀√|ε|, θ₀√|ε|) with ζ₀² = |V₁₁|/2q², θ₀² = 2|V₁₁|/q².
    pub fn bracket(&self, eps: f64) -> (f64, f64) {
        let q2 = self.q * self.q;
        let s = eps.abs().sqrt();
        ((self.v11.abs() / (2.0 * q2)).sqrt() * s, (2.0 * self.v11.abs() / q2).sqrt() * s)
    }

    pub fn det_vs_pi(&self, eps: f64, delta: f64, lam: f64) -> DetVsPi {
        let det = self.det(eps, delta, lam);
        let pi = self.pi(eps, delta, lam);
        let theta0 = (2.0 * self.v11.abs()).sqrt() / self.q;
        let c_big = 4.0 * theta0;
        let in_regime = lam.abs() <= c_big * eps.abs().sqrt() && delta.abs() <= eps * eps;
        DetVsPi {
            det,
            pi,
            relative_gap: (det + pi).abs() / ((lam * lam + eps.abs()) * (lam * lam + delta * delta)),
            in_regime,
        }
    }

    /// Positive root λ_ε of det M^approx(ε, δ, ·, 0) inside the (ζ₀, θ₀) bracket.
    pub fn find_fold_crossing(&self, eps: f64, delta: f64) -> Result<f64> {
        if !(eps * self.v11 < 0.0) {
            return Err(Error::RootNotFound(
                "fold crossings need εV₁₁ < 0".into(),
            ));
        }
        let (lo, hi) = self.bracket(eps);
        bisect(&|l| Ok(self.det(eps, delta, l)), lo, hi, 1e-13)
    }

    /// Sorted eigenvalues of M^approx.
    pub fn eigenvalues(&self, eps: f64, delta: f64, lam: f64) -> Result<Vec<f64>> {
        Ok(eigh_complex(&self.m_approx(eps, delta, lam).total, EigRange::All)?.values)
    }
}

/// Free branches μ_j⁽⁰⁾(λ), ascending.
pub fn free_branches(q: f64, lam: f64) -> [f64; 3] {
    let q2 = q * q;
    if lam >= 0.0 {
        [q2 * lam * (lam - 1.0), q2 * lam * lam, q2 * lam * (lam + 1.0)]
    } else {
        [q2 * lam * (lam + 1.0), q2 * lam * lam, q2 * lam * (lam - 1.0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::find_dirac_point;
    use crate::geometry::{dot, TriangularLattice};
    use crate::potential::builtin_potentials;

    fn model() -> ReducedModel {
        let (v, w) = builtin_potentials(TriangularLattice::unit());
        ReducedModel::new(&v, &w).unwrap()
    }

    #[test]
    fn j_spectrum_and_hermiticity() {
        let m = model();
        let q2 = m.q * m.q;
        let e = eigh_complex(&m.j_matrix(), EigRange::All).unwrap().values;
        assert!((e[0] + q2).abs() < 1e-10 && e[1].abs() < 1e-10 && (e[2] - q2).abs() < 1e-10);
        assert!((2.0 * m.alpha().re + q2).abs() < 1e-12);
        let r = m.m_approx(0.03, 0.001, 0.1);
        assert!(r.total.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn free_branches_match_both_signs() {
        let m = model();
        for i in 0..101 {
            let lam = -0.5 + i as f64 / 100.0;
            let e = m.eigenvalues(0.0, 0.0, lam).unwrap();
            let f = free_branches(m.q, lam);
            for j in 0..3 {
                assert!((e[j] - f[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn proxy_and_symmetry() {
        let m = model();
        assert!((m.w_proxy_sq() - 0.25).abs() < 1e-14);
        for &(e, d, l) in &[(0.01, 1e-4, 0.02), (0.05, 2e-3, -0.07)] {
            assert!((m.det(e, d, l) - m.det(e, -d, l)).abs() < 1e-12);
        }
        // π(ε, 0, 0) = 0 and the matrix is singular there
        assert_eq!(m.pi(0.1, 0.0, 0.0), 0.0);
        assert!(m.det(0.1, 0.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn fold_root_and_sign_change() {
        let m = model();
        let eps = -0.1;
        let root = m.find_fold_crossing(eps, 0.0).unwrap();
        let (lo, hi) = m.bracket(eps);
        assert!(root > lo && root < hi);
        let pi_root = (-eps * m.v11).sqrt() / m.q;
        assert!((root - pi_root).abs() < 0.1 * pi_root);
        assert!(m.det(eps, 0.0, lo).signum() != m.det(eps, 0.0, hi).signum());
        assert!(m.find_fold_crossing(0.1, 0.0).is_err());
    }

    #[test]
    fn free_slice_parabolas() {
        let lat = TriangularLattice::unit();
        let v = FourierPotential::zero(lat);
        let edge = EdgeFrame::zigzag(&lat);
        let k = lat.k_point();
        let kk = dot(k, k);
        let lams = [-0.2, 0.0, 0.1, 0.25];
        let c = dispersion_slice(&v, &edge, &lams, 3, 3).unwrap();
        for (i, &l) in lams.iter().enumerate() {
            let f = free_branches(lat.q, l);
            for b in 0..3 {
                assert!((c[b].energies[i] - kk - f[b]).abs() < 1e-10, "{l} {b} {} {}", c[b].energies[i] - kk, f[b]);
            }
        }
    }

    #[test]
    fn armchair_touches_at_k_prime() {
        let lat = TriangularLattice::unit();
        let (v, _) = builtin_potentials(lat);
        let dp = find_dirac_point(&v, 0.2, 5, None).unwrap();
        let ve = v.scaled(0.2);
        let edge = EdgeFrame::armchair(&lat);
        let e = band_energies(&ve, slice_point(dp.k, &edge, -1.0 / 3.0), 5, 3).unwrap();
        assert!((e[dp.b_star - 1] - dp.e_star).abs() < 1e-9);
    }
}
