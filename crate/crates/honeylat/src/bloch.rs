//! Plane-wave Floquet-Bloch fibers, rotation sectors at the zone vertices and Dirac point data.

use crate::error::{invalid, Error, Result};
use crate::geometry::{add, dot, mat_vec, norm, scale, sub, TriangularLattice, Vec2};
use crate::linalg::{cdot, cnorm, eigh_complex, CMat, EigRange, C64};
use crate::potential::{FourierPotential, Index};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Set of dual indices m kept in a truncated fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    pub indices: Vec<Index>,
    lookup: HashMap<Index, usize>,
}

impl PlaneWaveBasis {
    pub fn from_indices(indices: Vec<Index>) -> Self {
        let lookup = indices.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        Self { indices, lookup }
    }

    /// All m with |k + m·k| ≤ radius. The window follows k, so it is closed under the
    /// symmetries that map k to itself modulo the dual lattice.
    pub fn disc(lat: &TriangularLattice, k: Vec2, radius: f64) -> Self {
        let c = lat.dual_coords(k);
        // |m·k| ≥ |m|_∞ · q √3/2, so this box contains the disc
        let reach = (radius / (0.5 * 3f64.sqrt() * lat.q)).ceil() as i64 + 2;
        let (c1, c2) = (c[0].round() as i64, c[1].round() as i64);
        let mut indices = Vec::new();
        let r2 = radius * radius * (1.0 + 1e-12);
        for m1 in -c1 - reach..=-c1 + reach {
            for m2 in -c2 - reach..=-c2 + reach {
                let p = add(k, lat.dual((m1, m2)));
                if dot(p, p) <= r2 {
                    indices.push((m1, m2));
                }
            }
        }
        Self::from_indices(indices)
    }

    /// Square window max(|m1|, |m2|) ≤ M.
    pub fn square(m_trunc: usize) -> Self {
        let m = m_trunc as i64;
        let mut indices = Vec::new();
        for m1 in -m..=m {
            for m2 in -m..=m {
                indices.push((m1, m2));
            }
        }
        Self::from_indices(indices)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of(&self, m: Index) -> Option<usize> {
        self.lookup.get(&m).copied()
    }
}

/// Radius of the plane-wave disc for truncation level M.
pub fn basis_radius(lat: &TriangularLattice, m_trunc: usize) -> f64 {
    (m_trunc as f64 + 0.5) * lat.q
}

#[derive(Debug, Clone)]
pub struct BlochFiber {
    pub k: Vec2,
    pub m_trunc: usize,
    pub basis: PlaneWaveBasis,
    pub h: CMat,
}

impl BlochFiber {
    pub fn is_real(&self) -> bool {
        self.h.data.iter().all(|z| z.im == 0.0)
    }
}

pub fn assemble_fiber(v: &FourierPotential, k: Vec2, m_trunc: usize) -> Result<BlochFiber> {
    if m_trunc < 1 {
        return invalid("truncation level M must be at least 1");
    }
    let basis = PlaneWaveBasis::disc(&v.lattice, k, basis_radius(&v.lattice, m_trunc));
    Ok(assemble_on_basis(v, k, basis, m_trunc))
}

pub fn assemble_on_basis(
    v: &FourierPotential,
    k: Vec2,
    basis: PlaneWaveBasis,
    m_trunc: usize,
) -> BlochFiber {
    let n = basis.len();
    let mut h = CMat::zeros(n, n);
    let lat = &v.lattice;
    for (j, &mj) in basis.indices.iter().enumerate() {
        let p = add(k, lat.dual(mj));
        h[(j, j)] += C64::new(dot(p, p), 0.0);
        for (&d, &val) in &v.coeffs {
            if let Some(i) = basis.index_of((mj.0 + d.0, mj.1 + d.1)) {
                h[(i, j)] += val;
            }
        }
    }
    BlochFiber {
        k,
        m_trunc,
        basis,
        h,
    }
}

#[derive(Debug, Clone)]
pub struct BandSolution {
    pub k: Vec2,
    pub m_trunc: usize,
    pub indices: Vec<Index>,
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

fn eig_lowest(h: &CMat, count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = h.rows;
    if count == 0 {
        return Ok((vec![], vec![]));
    }
    let range = if count >= n {
        EigRange::All
    } else {
        EigRange::Index(0, count - 1)
    };
    let e = eigh_complex(h, range)?;
    let vecs = (0..e.values.len()).map(|c| e.vectors.col(c).to_vec()).collect();
    Ok((e.values, vecs))
}

pub fn solve_fiber(f: &BlochFiber, n_bands: usize) -> Result<BandSolution> {
    if n_bands > f.basis.len() {
        return invalid(format!(
            "{n_bands} bands requested from a fiber of dimension {}",
            f.basis.len()
        ));
    }
    let (energies, vectors) = eig_lowest(&f.h, n_bands)?;
    for (e, v) in energies.iter().zip(&vectors) {
        let hv = f.h.matvec(v);
        let r = cnorm(&hv.iter().zip(v).map(|(a, b)| a - e * b).collect::<Vec<_>>());
        if !(r <= 1e-9 * (1.0 + e.abs())) {
            return Err(Error::Numeric(format!(
                "fiber eigenpair residual {r:e} at E = {e} (k = {:?}, dimension {})",
                f.k,
                f.basis.len()
            )));
        }
    }
    Ok(BandSolution {
        k: f.k,
        m_trunc: f.m_trunc,
        indices: f.basis.indices.clone(),
        energies,
        vectors,
    })
}

/// Lowest `n_bands` energies at k.
pub fn band_energies(v: &FourierPotential, k: Vec2, m_trunc: usize, n_bands: usize) -> Result<Vec<f64>> {
    let f = assemble_fiber(v, k, m_trunc)?;
    let (e, _) = eig_lowest(&f.h, n_bands.min(f.basis.len()))?;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSample {
    pub k1_frac: f64,
    pub k2_frac: f64,
    pub band: usize,
    pub energy: f64,
}

/// Bands on an n × n grid of the dual cell, k = s k1 + t k2 with s, t ∈ [0, 1).
pub fn band_surface(v: &FourierPotential, n: usize, n_bands: usize, m_trunc: usize) -> Result<Vec<BandSample>> {
    let lat = &v.lattice;
    let mut out = Vec::with_capacity(n * n * n_bands);
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let k = add(scale(s, lat.k1), scale(t, lat.k2));
            for (b, e) in band_energies(v, k, m_trunc, n_bands)?.into_iter().enumerate() {
                out.push(BandSample {
                    k1_frac: s,
                    k2_frac: t,
                    band: b + 1,
                    energy: e,
                });
            }
        }
    }
    Ok(out)
}

/// Rotation sectors σ ∈ {1, τ, τ̄}, τ = e^{2πi/3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sector {
    One,
    Tau,
    TauBar,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::One, Sector::Tau, Sector::TauBar];

    pub fn value(self) -> C64 {
        match self {
            Sector::One => C64::new(1.0, 0.0),
            Sector::Tau => C64::from_polar(1.0, 2.0 * PI / 3.0),
            Sector::TauBar => C64::from_polar(1.0, -2.0 * PI / 3.0),
        }
    }

    fn slot(self) -> usize {
        match self {
            Sector::One => 0,
            Sector::Tau => 1,
            Sector::TauBar => 2,
        }
    }

    /// Weights (1, σ̄, σ)/√3 on an orbit (m, Tm, T²m).
    fn weights(self) -> [C64; 3] {
        let s = self.value();
        let r = 1.0 / 3f64.sqrt();
        [C64::new(r, 0.0), s.conj() * r, s * r]
    }
}

/// H(K) split along the orbits of the vertex rotation m ↦ R̃m + d, where R K = K + d·k.
#[derive(Debug, Clone)]
pub struct SectorDecomposition {
    pub fiber: BlochFiber,
    /// basis positions of (m, Tm, T²m) per orbit
    pub orbits: Vec<[usize; 3]>,
    pub blocks: [CMat; 3],
    /// largest cross-sector matrix element of H(K)
    pub leakage: f64,
}

fn vertex_shift(lat: &TriangularLattice, vertex: Vec2) -> Result<Index> {
    let r = crate::geometry::rotation_matrix();
    let d = lat.dual_coords(sub(mat_vec(&r, vertex), vertex));
    let di = (d[0].round(), d[1].round());
    if (d[0] - di.0).abs() > 1e-9 || (d[1] - di.1).abs() > 1e-9 {
        return invalid("point is not fixed by the rotation modulo the dual lattice");
    }
    Ok((di.0 as i64, di.1 as i64))
}

pub fn sector_decompose(v: &FourierPotential, vertex: Vec2, m_trunc: usize) -> Result<SectorDecomposition> {
    let d = vertex_shift(&v.lattice, vertex)?;
    let fiber = assemble_fiber(v, vertex, m_trunc)?;
    let step = |m: Index| {
        let r = crate::geometry::rotate_index(m);
        (r.0 + d.0, r.1 + d.1)
    };
    let basis = &fiber.basis;
    let mut seen = vec![false; basis.len()];
    let mut orbits = Vec::with_capacity(basis.len() / 3);
    for (i, &m) in basis.indices.iter().enumerate() {
        if seen[i] {
            continue;
        }
        let m1 = step(m);
        let m2 = step(m1);
        let (Some(i1), Some(i2)) = (basis.index_of(m1), basis.index_of(m2)) else {
            return Err(Error::SymmetryViolation(format!(
                "truncation window not closed under rotation at {m:?}"
            )));
        };
        if i1 == i || step(m2) != m {
            return Err(Error::SymmetryViolation(format!("orbit of {m:?} is not of length 3")));
        }
        seen[i] = true;
        seen[i1] = true;
        seen[i2] = true;
        orbits.push([i, i1, i2]);
    }
    let n = orbits.len();
    let h = &fiber.h;
    let element = |sa: Sector, a: &[usize; 3], sb: Sector, b: &[usize; 3]| {
        let (wa, wb) = (sa.weights(), sb.weights());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += wa[i].conj() * wb[j] * h[(a[i], b[j])];
            }
        }
        acc
    };
    let mut blocks = [CMat::zeros(n, n), CMat::zeros(n, n), CMat::zeros(n, n)];
    let mut leakage: f64 = 0.0;
    for (ib, b) in orbits.iter().enumerate() {
        for (ia, a) in orbits.iter().enumerate() {
            for sa in Sector::ALL {
                for sb in Sector::ALL {
                    if sa == sb {
                        blocks[sa.slot()][(ia, ib)] = element(sa, a, sb, b);
                    } else if h[(a[0], b[0])].norm() != 0.0
                        || h[(a[0], b[1])].norm() != 0.0
                        || h[(a[0], b[2])].norm() != 0.0
                    {
                        leakage = leakage.max(element(sa, a, sb, b).norm());
                    }
                }
            }
        }
    }
    Ok(SectorDecomposition {
        fiber,
        orbits,
        blocks,
        leakage,
    })
}

impl SectorDecomposition {
    pub fn block(&self, s: Sector) -> &CMat {
        &self.blocks[s.slot()]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.orbits.len(); 3]
    }

    /// Lowest `count` eigenpairs of one sector, with vectors in sector coordinates.
    pub fn solve(&self, s: Sector, count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let b = self.block(s);
        eig_lowest(b, count.min(b.rows))
    }

    /// Sector coordinates to full plane-wave coefficients.
    pub fn embed(&self, s: Sector, y: &[C64]) -> Vec<C64> {
        let w = s.weights();
        let mut out = vec![C64::new(0.0, 0.0); self.fiber.basis.len()];
        for (o, c) in self.orbits.iter().zip(y) {
            for i in 0..3 {
                out[o[i]] += w[i] * c;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSharp {
    /// cone slope per unit |k − K| from finite differences
    pub cone_slope: f64,
    /// Σ c(m)² (1, i)·(K + m·k) for the unit-normalized τ-sector coefficients
    pub fourier_sum: [f64; 2],
    pub directions: Vec<f64>,
    pub slopes: Vec<f64>,
    pub anisotropy: f64,
    pub steps: [f64; 3],
}

impl LambdaSharp {
    pub fn fourier_abs(&self) -> f64 {
        self.fourier_sum[0].hypot(self.fourier_sum[1])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracPointData {
    pub lattice: TriangularLattice,
    pub k: Vec2,
    pub m_trunc: usize,
    pub e_star: f64,
    /// 1-based index of the lower band of the touching pair
    pub b_star: usize,
    /// lowest level of the σ = 1 sector near E★
    pub e_tilde: f64,
    pub gap_to_next: f64,
    pub indices: Vec<Index>,
    pub phi1: Vec<C64>,
    pub phi2: Vec<C64>,
    pub lambda: LambdaSharp,
    pub theta_sharp: Option<f64>,
}

pub fn degeneracy_tol(e: f64) -> f64 {
    1e-8 * e.abs().max(1.0)
}

/// Lowest τ-sector level and lowest σ = 1 level at the vertex K.
pub fn vertex_levels(v: &FourierPotential, m_trunc: usize) -> Result<(f64, f64)> {
    let dec = sector_decompose(v, v.lattice.k_point(), m_trunc)?;
    let (t, _) = dec.solve(Sector::Tau, 1)?;
    let (o, _) = dec.solve(Sector::One, 1)?;
    Ok((t[0], o[0]))
}

/// Dirac point of εV at K, built from the lowest τ-sector level.
pub fn find_dirac_point(
    v: &FourierPotential,
    eps: f64,
    m_trunc: usize,
    tol: Option<f64>,
) -> Result<DiracPointData> {
    if !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be finite, got {eps}")));
    }
    let ve = v.scaled(eps);
    let lat = ve.lattice;
    let k = lat.k_point();
    let dec = sector_decompose(&ve, k, m_trunc)?;
    let (tau_vals, tau_vecs) = dec.solve(Sector::Tau, 1)?;
    let (bar_vals, _) = dec.solve(Sector::TauBar, 1)?;
    let (one_vals, _) = dec.solve(Sector::One, 4)?;
    let e_star = tau_vals[0];
    let tol = tol.unwrap_or_else(|| degeneracy_tol(e_star));
    if (bar_vals[0] - e_star).abs() > tol {
        return Err(Error::NotADiracPoint(format!(
            "τ and τ̄ levels differ: {} vs {}",
            e_star, bar_vals[0]
        )));
    }
    if let Some(hit) = one_vals.iter().find(|&&e| (e - e_star).abs() <= tol) {
        return Err(Error::AmbiguousMultiplicity(format!(
            "σ = 1 level {hit} collides with E★ = {e_star}"
        )));
    }
    let e_tilde = *one_vals
        .iter()
        .min_by(|a, b| (*a - e_star).abs().partial_cmp(&(*b - e_star).abs()).unwrap())
        .unwrap();
    let n_full = dec.fiber.basis.len();
    let (all, _) = eig_lowest(&dec.fiber.h, (3 * (one_vals.len() + 2)).min(n_full))?;
    let below = all.iter().filter(|&&e| e < e_star - tol).count();
    let b_star = below + 1;
    let mut gap = f64::INFINITY;
    if below > 0 {
        gap = gap.min(e_star - all[below - 1]);
    }
    if let Some(&up) = all.get(below + 2) {
        gap = gap.min(up - e_star);
    }
    let mut phi1 = dec.embed(Sector::Tau, &tau_vecs[0]);
    let nrm = cnorm(&phi1);
    phi1.iter_mut().for_each(|c| *c /= nrm);
    // gauge: coefficient at the orbit representative (0, 0) real positive
    let anchor = dec
        .fiber
        .basis
        .index_of((0, 0))
        .filter(|&i| phi1[i].norm() > 1e-8)
        .unwrap_or_else(|| {
            (0..n_full)
                .max_by(|&a, &b| phi1[a].norm().partial_cmp(&phi1[b].norm()).unwrap())
                .unwrap()
        });
    let ph = phi1[anchor].conj() / phi1[anchor].norm();
    phi1.iter_mut().for_each(|c| *c *= ph);
    let phi2: Vec<C64> = phi1.iter().map(|c| c.conj()).collect();
    let mut dp = DiracPointData {
        lattice: lat,
        k,
        m_trunc,
        e_star,
        b_star,
        e_tilde,
        gap_to_next: gap,
        indices: dec.fiber.basis.indices.clone(),
        phi1,
        phi2,
        lambda: LambdaSharp {
            cone_slope: 0.0,
            fourier_sum: [0.0, 0.0],
            directions: vec![],
            slopes: vec![],
            anisotropy: 0.0,
            steps: [0.0; 3],
        },
        theta_sharp: None,
    };
    dp.lambda = lambda_sharp(&dp, &ve)?;
    Ok(dp)
}

/// Cone slope from Richardson-extrapolated differences E_{b★+1} − E_{b★} along several directions,
/// next to the Fourier-sum value.
pub fn lambda_sharp(dp: &DiracPointData, v_scaled: &FourierPotential) -> Result<LambdaSharp> {
    let lat = &dp.lattice;
    let mut fsum = C64::new(0.0, 0.0);
    for (m, c) in dp.indices.iter().zip(&dp.phi1) {
        let p = add(dp.k, lat.dual(*m));
        fsum += c * c * C64::new(p[0], p[1]);
    }
    // steps shrink with the gap so that they stay inside the conical region
    let h0 = (1e-2 * lat.q).min(0.05 * dp.gap_to_next / lat.q);
    let steps = [h0, 0.5 * h0, 0.25 * h0];
    let k2hat = scale(1.0 / lat.q, lat.k2);
    let base = k2hat[1].atan2(k2hat[0]);
    let directions: Vec<f64> = (0..6).map(|j| base + j as f64 * PI / 6.0).collect();
    let b = dp.b_star;
    let mut slopes = Vec::with_capacity(directions.len());
    for &th in &directions {
        let u = [th.cos(), th.sin()];
        let mut s = [0.0; 3];
        for (j, &h) in steps.iter().enumerate() {
            let e = band_energies(v_scaled, add(dp.k, scale(h, u)), dp.m_trunc, b + 1)?;
            s[j] = (e[b] - e[b - 1]) / (2.0 * h);
        }
        slopes.push((8.0 * s[2] - 6.0 * s[1] + s[0]) / 3.0);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let spread = slopes.iter().fold(0.0f64, |a, &s| a.max(s)) - slopes.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    let anisotropy = spread / mean.abs().max(1e-300);
    if !(mean > 0.0) || anisotropy > 0.02 {
        return Err(Error::NotConical(format!(
            "directional slopes {slopes:?} (anisotropy {anisotropy:.3e})"
        )));
    }
    Ok(LambdaSharp {
        cone_slope: mean,
        fourier_sum: [fsum.re, fsum.im],
        directions,
        slopes,
        anisotropy,
        steps,
    })
}

/// Σ conj(a_m) P_{m−n} b_n over the fiber basis.
pub fn potential_form(indices: &[Index], a: &[C64], p: &FourierPotential, b: &[C64]) -> C64 {
    let applied = apply_potential(indices, p, b);
    cdot(a, &applied)
}

/// (P b)_m = Σ_n P_{m−n} b_n, truncated to the basis.
pub fn apply_potential(indices: &[Index], p: &FourierPotential, b: &[C64]) -> Vec<C64> {
    let lookup: HashMap<Index, usize> = indices.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut out = vec![C64::new(0.0, 0.0); indices.len()];
    for (j, n) in indices.iter().enumerate() {
        if b[j] == C64::new(0.0, 0.0) {
            continue;
        }
        for (d, val) in &p.coeffs {
            if let Some(&i) = lookup.get(&(n.0 + d.0, n.1 + d.1)) {
                out[i] += val * b[j];
            }
        }
    }
    out
}

/// ⟨a, dir·∇ b⟩ for K-pseudo-periodic functions given by coefficients on the basis.
pub fn gradient_form(dp: &DiracPointData, a: &[C64], dir: Vec2, b: &[C64]) -> C64 {
    let lat = &dp.lattice;
    dp.indices
        .iter()
        .zip(a.iter().zip(b))
        .map(|(m, (x, y))| x.conj() * C64::new(0.0, dot(dir, add(dp.k, lat.dual(*m)))) * y)
        .sum()
}

/// ϑ♯ = ⟨Φ₁, W Φ₁⟩.
pub fn theta_sharp(dp: &DiracPointData, w: &FourierPotential) -> Result<f64> {
    let t = potential_form(&dp.indices, &dp.phi1, w, &dp.phi1);
    if t.im.abs() > 1e-10 * t.re.abs().max(1.0) {
        return Err(Error::SymmetryViolation(format!(
            "⟨Φ₁, WΦ₁⟩ has imaginary part {:e}",
            t.im
        )));
    }
    Ok(t.re)
}

impl DiracPointData {
    pub fn with_theta(mut self, w: &FourierPotential) -> Result<Self> {
        self.theta_sharp = Some(theta_sharp(&self, w)?);
        Ok(self)
    }

    /// λ♯ from the Fourier sum, a gauge-dependent complex number.
    pub fn lambda_complex(&self) -> C64 {
        C64::new(self.lambda.fourier_sum[0], self.lambda.fourier_sum[1])
    }

    /// Φ± = (e^{iθ}Φ₁ ± Φ₂)/√2 with e^{iθ} = (λ̄♯/|λ♯|)(𝔷₂/|𝔷₂|), 𝔷₂ = dir_x + i dir_y.
    pub fn phi_pm(&self, dir: Vec2) -> (Vec<C64>, Vec<C64>) {
        let lam = self.lambda_complex();
        let z = C64::new(dir[0], dir[1]);
        let phase = lam.conj() / lam.norm() * z / z.norm();
        let r = 1.0 / 2f64.sqrt();
        let plus = self
            .phi1
            .iter()
            .zip(&self.phi2)
            .map(|(a, b)| (phase * a + b) * r)
            .collect();
        let minus = self
            .phi1
            .iter()
            .zip(&self.phi2)
            .map(|(a, b)| (phase * a - b) * r)
            .collect();
        (plus, minus)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerProductCheck {
    /// 2⟨Φ₊, 𝔎·∇Φ₊⟩ − i|λ♯||𝔎| with |λ♯| the cone slope
    pub plus_defect: f64,
    /// 2⟨Φ₋, 𝔎·∇Φ₋⟩ + i|λ♯||𝔎|
    pub minus_defect: f64,
    pub cross: f64,
    pub w_plus_plus: f64,
    pub w_minus_minus: f64,
    pub w_plus_minus: [f64; 2],
}

pub fn inner_product_check(dp: &DiracPointData, dir: Vec2, w: Option<&FourierPotential>) -> InnerProductCheck {
    let (p, m) = dp.phi_pm(dir);
    let target = C64::new(0.0, dp.lambda.cone_slope * norm(dir));
    let pp = gradient_form(dp, &p, dir, &p) * 2.0;
    let mm = gradient_form(dp, &m, dir, &m) * 2.0;
    let pm = gradient_form(dp, &p, dir, &m);
    let (wpp, wmm, wpm) = match w {
        Some(w) => (
            potential_form(&dp.indices, &p, w, &p).norm(),
            potential_form(&dp.indices, &m, w, &m).norm(),
            potential_form(&dp.indices, &p, w, &m),
        ),
        None => (0.0, 0.0, C64::new(0.0, 0.0)),
    };
    InnerProductCheck {
        plus_defect: (pp - target).norm(),
        minus_defect: (mm + target).norm(),
        cross: pm.norm(),
        w_plus_plus: wpp,
        w_minus_minus: wmm,
        w_plus_minus: [wpm.re, wpm.im],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbativeRow {
    pub eps: f64,
    pub e_star: f64,
    pub e_tilde: f64,
    pub cone_slope: Option<f64>,
    pub fourier_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbativeTable {
    pub rows: Vec<PerturbativeRow>,
    pub e_free: f64,
    /// intercepts of linear fits of (E − |K|²)/ε against ε
    pub fit_e_star: f64,
    pub fit_e_tilde: f64,
    pub expected_e_star: f64,
    pub expected_e_tilde: f64,
}

fn linear_intercept(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return my;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    my - sxy / sxx * mx
}

pub fn perturbative_check(v: &FourierPotential, eps_list: &[f64], m_trunc: usize) -> Result<PerturbativeTable> {
    let k = v.lattice.k_point();
    let e_free = dot(k, k);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if eps == 0.0 {
            return invalid("ε = 0 has no first-order slope");
        }
        let (e_star, e_tilde) = vertex_levels(&v.scaled(eps), m_trunc)?;
        let slopes = find_dirac_point(v, eps, m_trunc, None).ok();
        rows.push(PerturbativeRow {
            eps,
            e_star,
            e_tilde,
            cone_slope: slopes.as_ref().map(|d| d.lambda.cone_slope),
            fourier_slope: slopes.as_ref().map(|d| d.lambda.fourier_abs()),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.e_star - e_free) / r.eps).collect();
    let yt: Vec<f64> = rows.iter().map(|r| (r.e_tilde - e_free) / r.eps).collect();
    let v00 = v.get((0, 0)).re;
    let v11 = v.get((1, 1)).re;
    Ok(PerturbativeTable {
        fit_e_star: linear_intercept(&x, &ys),
        fit_e_tilde: linear_intercept(&x, &yt),
        expected_e_star: v00 - v11,
        expected_e_tilde: v00 + 2.0 * v11,
        rows,
        e_free,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potentials;

    fn lat() -> TriangularLattice {
        TriangularLattice::unit()
    }

    #[test]
    fn free_fiber_is_diagonal() {
        let v = FourierPotential::zero(lat());
        let f = assemble_fiber(&v, [0.3, -1.2], 3).unwrap();
        for j in 0..f.h.cols {
            for i in 0..f.h.rows {
                if i != j {
                    assert_eq!(f.h[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn builtin_couplings_and_hermiticity() {
        let (v, _) = builtin_potentials(lat());
        let f = assemble_fiber(&v, lat().k_point(), 1).unwrap();
        assert_eq!(f.h.hermiticity_defect(), 0.0);
        let b = &f.basis;
        let i = b.index_of((0, 0)).unwrap();
        for d in [(1, 1), (-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1)] {
            if let Some(j) = b.index_of(d) {
                assert_eq!(f.h[(j, i)], C64::new(0.5, 0.0));
            }
        }
        if let Some(j) = b.index_of((2, 0)) {
            assert_eq!(f.h[(j, i)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn free_vertex_is_triple() {
        let v = FourierPotential::zero(lat());
        let k = lat().k_point();
        let e = band_energies(&v, k, 2, 4).unwrap();
        let kk = dot(k, k);
        assert!((kk - 17.546).abs() < 1e-3);
        for b in 0..3 {
            assert!((e[b] - kk).abs() < 1e-12);
        }
        assert!(e[3] > kk + 1.0);
        assert!(matches!(
            find_dirac_point(&v, 1.0, 3, None),
            Err(Error::AmbiguousMultiplicity(_))
        ));
    }

    #[test]
    fn periodic_in_dual_lattice() {
        let (v, _) = builtin_potentials(lat());
        let v = v.scaled(3.0);
        let k = [0.7, 0.4];
        let a = band_energies(&v, k, 5, 6).unwrap();
        let b = band_energies(&v, add(k, lat().k1), 5, 6).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn sectors_partition_and_decouple() {
        let (v, _) = builtin_potentials(lat());
        let v = v.scaled(10.0);
        let dec = sector_decompose(&v, lat().k_point(), 6).unwrap();
        assert_eq!(dec.orbits.len() * 3, dec.fiber.basis.len());
        assert!(dec.leakage < 1e-10);
        let b = &dec.fiber.basis;
        let o = dec
            .orbits
            .iter()
            .find(|o| o.iter().any(|&i| b.indices[i] == (0, 0)))
            .unwrap();
        let mut pts: Vec<Index> = o.iter().map(|&i| b.indices[i]).collect();
        pts.sort();
        assert_eq!(pts, vec![(-1, 0), (0, 0), (0, 1)]);
        let mut all: Vec<f64> = Sector::ALL
            .iter()
            .flat_map(|&s| dec.solve(s, 3).unwrap().0)
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let full = band_energies(&v, lat().k_point(), 6, 3).unwrap();
        for (a, b) in full.iter().zip(&all) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dirac_point_case_one_and_two() {
        let (v, w) = builtin_potentials(lat());
        let dp = find_dirac_point(&v, 10.0, 8, None).unwrap().with_theta(&w).unwrap();
        assert_eq!(dp.b_star, 1);
        assert!((dp.e_star - 11.71716773).abs() < 1e-6);
        assert!(dp.lambda.anisotropy < 0.01);
        assert!((dp.lambda.cone_slope - dp.lambda.fourier_abs()).abs() < 1e-6 * dp.lambda.cone_slope);
        assert!((dp.theta_sharp.unwrap() - 0.33750).abs() < 1e-4);
        let n1: f64 = dp.phi1.iter().map(|c| c.norm_sqr()).sum();
        assert!((n1 - 1.0).abs() < 1e-12);
        assert!(cdot(&dp.phi1, &dp.phi2).norm() < 1e-10);
        let dm = find_dirac_point(&v, -10.0, 8, None).unwrap();
        assert_eq!(dm.b_star, 2);
        assert!((dm.e_star - 21.44678167).abs() < 1e-6);
    }

    #[test]
    fn small_eps_limits() {
        let (v, w) = builtin_potentials(lat());
        let dp = find_dirac_point(&v, 0.01, 6, None).unwrap().with_theta(&w).unwrap();
        // the unit-normalized cone slope of the τ/τ̄ pair tends to q/√3
        let target = lat().q / 3f64.sqrt();
        assert!((dp.lambda.cone_slope - target).abs() < 2e-2 * target);
        assert!((dp.theta_sharp.unwrap() - 3f64.sqrt() / 6.0).abs() < 1e-3);
        let ip = potential_form(&dp.indices, &dp.phi1, &w, &dp.phi2);
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn inner_products_match_cone() {
        let (v, w) = builtin_potentials(lat());
        let dp = find_dirac_point(&v, 10.0, 8, None).unwrap().with_theta(&w).unwrap();
        let dir = lat().k2;
        let chk = inner_product_check(&dp, dir, Some(&w));
        let scale_ = dp.lambda.cone_slope * norm(dir);
        assert!(chk.plus_defect < 1e-6 * scale_, "{chk:?}");
        assert!(chk.minus_defect < 1e-6 * scale_);
        assert!(chk.cross < 1e-8);
        assert!(chk.w_plus_plus < 1e-10 && chk.w_minus_minus < 1e-10);
        assert!((chk.w_plus_minus[0] - dp.theta_sharp.unwrap()).abs() < 1e-10);
        assert!(chk.w_plus_minus[1].abs() < 1e-10);
    }

    #[test]
    fn constant_potential_shift() {
        let c = FourierPotential::constant(lat(), 1.0);
        let t = perturbative_check(&c, &[0.1, 0.2], 3).unwrap();
        for r in &t.rows {
            assert!((r.e_star - t.e_free - r.eps).abs() < 1e-12);
        }
    }
}
