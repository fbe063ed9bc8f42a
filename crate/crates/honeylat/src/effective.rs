//! One-dimensional effective models along the transverse slow variable ζ: the domain-wall
//! Dirac operator and its zero mode, the second-order energy coefficient of the edge
//! branch, and the effective-mass Schrödinger operator of non-protected bifurcations.

use crate::bloch::{apply_potential, assemble_on_basis, band_energies, DiracPointData, PlaneWaveBasis};
use crate::error::{invalid, Error, Result};
use crate::geometry::{add, dot, norm, EdgeFrame, Vec2};
use crate::linalg::{cdot, eigh_complex, tridiagonal_eigenvalues, CMat, EigRange, Lu, C64};
use crate::potential::{DomainWall, FourierPotential, GL_NODES, GL_WEIGHTS};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Discretization {
    FourierSpectral,
    CentralDifference,
}

/// −i v_F σ₃ ∂ζ + ϑ κ(ζ) σ₁ on the periodic cell [−2L, 2L). The wall sits at ζ = 0 and
/// its mirror image −κ(ζ ∓ 2L) closes the cell, so the grid carries a wall and an anti-wall.
#[derive(Debug, Clone)]
pub struct DiracOperator1D {
    pub v_f: f64,
    pub theta: f64,
    pub wall: DomainWall,
    pub half_length: f64,
    pub n: usize,
    pub discretization: Discretization,
}

fn quad_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(5 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

impl DiracOperator1D {
    pub fn new(
        v_f: f64,
        theta: f64,
        wall: DomainWall,
        half_length: f64,
        n: usize,
        discretization: Discretization,
    ) -> Result<Self> {
        if !(v_f > 0.0) || !(half_length > 0.0) {
            return invalid("Dirac operator needs v_F > 0 and L > 0");
        }
        if n < 8 {
            return invalid("Dirac grid needs at least 8 points");
        }
        if discretization == Discretization::FourierSpectral && n % 2 == 0 {
            // an even grid carries the Nyquist mode in the kernel of the derivative
            return invalid("spectral Dirac grid needs an odd number of points");
        }
        Ok(Self {
            v_f,
            theta,
            wall,
            half_length,
            n,
            discretization,
        })
    }

    /// L = 20/β + 10w + core, spacing resolving both the wall width and the decay length.
    pub fn auto(v_f: f64, theta: f64, wall: DomainWall, discretization: Discretization) -> Result<Self> {
        let beta = theta.abs() * wall.kappa_inf / v_f;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::DegenerateCoupling("ϑ♯κ∞ must be non-zero".into()));
        }
        let half = 20.0 / beta + 10.0 * wall.width + wall.core_extent();
        let mut h = wall.width.min(1.0 / beta) / 4.0;
        if wall.core_extent() > 0.0 {
            h = h.min(wall.core_extent() / 40.0);
        }
        let mut n = ((4.0 * half / h).ceil() as usize).max(9);
        if n % 2 == 0 {
            n += 1;
        }
        Self::new(v_f, theta, wall, half, n, discretization)
    }

    /// v_F = |λ♯||𝔎₂|, ϑ = ϑ♯ from the Dirac point data.
    pub fn from_dirac_point(
        dp: &DiracPointData,
        edge: &EdgeFrame,
        wall: DomainWall,
        discretization: Discretization,
    ) -> Result<Self> {
        let theta = dp
            .theta_sharp
            .ok_or_else(|| Error::Configuration("Dirac point data carries no ϑ♯".into()))?;
        let v_f = dp.lambda.fourier_abs() * norm(edge.frak_k2);
        Self::auto(v_f, theta, wall, discretization)
    }

    pub fn decay_rate(&self) -> f64 {
        self.theta.abs() * self.wall.kappa_inf / self.v_f
    }

    pub fn spacing(&self) -> f64 {
        4.0 * self.half_length / self.n as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| -2.0 * self.half_length + j as f64 * h).collect()
    }

    pub fn kappa_periodized(&self, z: f64) -> f64 {
        let l = self.half_length;
        if z.abs() <= l {
            self.wall.value(z)
        } else if z > l {
            -self.wall.value(z - 2.0 * l)
        } else {
            -self.wall.value(z + 2.0 * l)
        }
    }

    fn derivative_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        match self.discretization {
            Discretization::FourierSpectral => {
                let p = 4.0 * self.half_length;
                for j in 0..n {
                    for k in 0..n {
                        if j != k {
                            let diff = j as i64 - k as i64;
                            let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                            let arg = std::f64::consts::PI * diff as f64 / n as f64;
                            d[j * n + k] = std::f64::consts::PI / p * sign / arg.sin();
                        }
                    }
                }
            }
            Discretization::CentralDifference => {
                let h = self.spacing();
                for j in 0..n {
                    d[j * n + (j + 1) % n] += 0.5 / h;
                    d[j * n + (j + n - 1) % n] -= 0.5 / h;
                }
            }
        }
        d
    }

    /// Dense Hermitian matrix, components ordered (α₊ on the grid, then α₋).
    pub fn matrix(&self) -> CMat {
        let n = self.n;
        let d = self.derivative_matrix();
        let mut m = CMat::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let x = d[j * n + k];
                if x != 0.0 {
                    m[(j, k)] = C64::new(0.0, -self.v_f * x);
                    m[(n + j, n + k)] = C64::new(0.0, self.v_f * x);
                }
            }
        }
        for (j, z) in self.grid().into_iter().enumerate() {
            let c = C64::new(self.theta * self.kappa_periodized(z), 0.0);
            m[(j, n + j)] = c;
            m[(n + j, j)] = c;
        }
        m
    }
}

/// Closed-form zero mode α★ = γ(1, −is)ᵀ exp(−(sϑ/v_F)∫₀^ζ κ) with γ > 0 and s the sign
/// of ϑκ(+∞).
#[derive(Debug, Clone)]
pub struct ZeroMode {
    pub v_f: f64,
    pub theta: f64,
    pub chirality: f64,
    /// ϑκ∞/v_F
    pub beta: f64,
    pub gamma: f64,
    pub wall: DomainWall,
    table_step: f64,
    table_half: f64,
    table: Vec<f64>,
}

impl ZeroMode {
    fn integral(&self, z: f64) -> f64 {
        if matches!(self.wall.kind, crate::potential::WallKind::Tanh) {
            return self.wall.integral_from_zero(z);
        }
        let zc = z.clamp(-self.table_half, self.table_half);
        let pos = (zc + self.table_half) / self.table_step;
        let j = (pos.round() as usize).min(self.table.len() - 1);
        let zj = -self.table_half + j as f64 * self.table_step;
        let mut acc = self.table[j];
        if z != zj {
            acc += quad_nodes(zj, z, 1).iter().map(|(x, w)| w * self.wall.value(*x)).sum::<f64>();
        }
        acc
    }

    /// (φ, φ', φ'') of the scalar profile with α★ = φ·(1, −is).
    pub fn jet(&self, z: f64) -> (f64, f64, f64) {
        let b = self.chirality * self.theta / self.v_f;
        let (k, dk, _) = self.wall.jet(z);
        let phi = self.gamma * (-b * self.integral(z)).exp();
        (phi, -b * k * phi, (b * b * k * k - b * dk) * phi)
    }

    pub fn profile(&self, z: f64) -> f64 {
        self.jet(z).0
    }

    pub fn alpha(&self, z: f64) -> [C64; 2] {
        let p = self.profile(z);
        [C64::new(p, 0.0), C64::new(0.0, -self.chirality * p)]
    }

    /// Samples on a grid, ordered (α₊ block, α₋ block).
    pub fn samples(&self, grid: &[f64]) -> Vec<C64> {
        let n = grid.len();
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for (j, &z) in grid.iter().enumerate() {
            let a = self.alpha(z);
            out[j] = a[0];
            out[n + j] = a[1];
        }
        out
    }

    /// Window outside which the profile is below e^{−40} of its peak.
    pub fn support(&self) -> f64 {
        40.0 / self.beta + 20.0 * self.wall.width + self.wall.core_extent()
    }
}

pub fn zero_mode_exact(v_f: f64, theta: f64, wall: &DomainWall) -> Result<ZeroMode> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::DegenerateCoupling("ϑ♯ = 0 leaves the Dirac operator gapless".into()));
    }
    if !(v_f > 0.0) {
        return invalid("v_F must be positive");
    }
    let far = 50.0 * wall.width + wall.core_extent();
    let (right, left) = (wall.value(far), wall.value(-far));
    if right.signum() == left.signum() || right == 0.0 {
        return invalid("κ has no sign change, so the zero mode is not normalizable");
    }
    let beta = theta.abs() * wall.kappa_inf / v_f;
    let mut mode = ZeroMode {
        v_f,
        theta,
        chirality: (theta * right).signum(),
        beta,
        gamma: 1.0,
        wall: wall.clone(),
        table_step: 1.0,
        table_half: 0.0,
        table: vec![0.0],
    };
    let half = mode.support();
    if !matches!(wall.kind, crate::potential::WallKind::Tanh) {
        let step = wall.width.min(1.0 / beta).min(if wall.core_extent() > 0.0 {
            wall.core_extent()
        } else {
            f64::INFINITY
        }) / 16.0;
        let m = (half / step).ceil() as usize;
        let mut table = vec![0.0; 2 * m + 1];
        for j in m + 1..=2 * m {
            let (a, b) = ((j - 1 - m) as f64 * step, (j - m) as f64 * step);
            table[j] = table[j - 1] + quad_nodes(a, b, 1).iter().map(|(x, w)| w * wall.value(*x)).sum::<f64>();
        }
        for j in (0..m).rev() {
            let (a, b) = ((j as f64 - m as f64) * step, (j as f64 + 1.0 - m as f64) * step);
            table[j] = table[j + 1] - quad_nodes(a, b, 1).iter().map(|(x, w)| w * wall.value(*x)).sum::<f64>();
        }
        mode.table_step = step;
        mode.table_half = m as f64 * step;
        mode.table = table;
    }
    let panels = (half * 8.0 / wall.width.min(1.0 / beta)).ceil() as usize;
    let mass: f64 = quad_nodes(-half, half, panels)
        .iter()
        .map(|(z, w)| w * mode.profile(*z).powi(2))
        .sum();
    mode.gamma = 1.0 / (2.0 * mass).sqrt();
    Ok(mode)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracSpectrum {
    /// computed eigenvalues around zero, ascending
    pub values: Vec<f64>,
    /// grid-scale oscillation flag per eigenvalue (fermion doubling)
    pub spurious: Vec<bool>,
    /// smallest |E| of the chiral pair formed by the wall and anti-wall modes
    pub zero_value: f64,
    pub partner_value: f64,
    /// other eigenvalues inside the bulk gap (−|ϑ|κ∞, |ϑ|κ∞) shrunk by the margin
    pub in_gap: Vec<f64>,
    /// L² distance between the wall mode and the closed form after phase alignment
    pub mode_error: f64,
    /// max |α₋ + isα₊| / max |α₊| of the numerical wall mode
    pub spinor_defect: f64,
    #[serde(skip)]
    pub mode: Vec<C64>,
    #[serde(skip)]
    pub pair: [Vec<C64>; 2],
    pub spacing: f64,
    /// near-zero modes discarded as grid-scale doublers
    pub doubled_modes: usize,
}

fn oscillation_ratio(u: &[C64], n: usize) -> f64 {
    let (mut smooth, mut rough) = (0.0, 0.0);
    for block in 0..2 {
        let b = &u[block * n..(block + 1) * n];
        for j in 0..n {
            let (x, y) = (b[j], b[(j + 1) % n]);
            smooth += (x + y).norm_sqr();
            rough += (x - y).norm_sqr();
        }
    }
    smooth / (smooth + rough).max(f64::MIN_POSITIVE)
}

fn restricted_form(left: &[Vec<C64>], right: &[Vec<C64>]) -> CMat {
    let k = left.len();
    let mut g = CMat::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            g[(a, b)] = cdot(&left[a], &right[b]);
        }
    }
    g
}

fn combine(space: &[Vec<C64>], coef: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); space[0].len()];
    for (u, c) in space.iter().zip(coef) {
        out.iter_mut().zip(u).for_each(|(o, x)| *o += c * x);
    }
    out
}

/// Eigenpairs of the discretized Dirac operator around zero and the wall zero mode.
pub fn dirac_spectrum(d: &DiracOperator1D, n_eigs: usize) -> Result<DiracSpectrum> {
    let exact = zero_mode_exact(d.v_f, d.theta, &d.wall)?;
    let n = d.n;
    let half = n_eigs.max(4).min(n);
    let matrix = d.matrix();
    let eig = eigh_complex(&matrix, EigRange::Index(n - half, n + half - 1))?;
    let h = d.spacing();
    let spurious: Vec<bool> = (0..eig.values.len())
        .map(|c| oscillation_ratio(eig.vectors.col(c), n) < 0.5)
        .collect();
    let gap = d.theta.abs() * d.wall.kappa_inf;
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&a, &b| eig.values[a].abs().total_cmp(&eig.values[b].abs()));
    let mut cluster: Vec<usize> = order.iter().copied().filter(|&c| eig.values[c].abs() < 1e-6 * gap).collect();
    if cluster.len() < 2 {
        cluster = order[..2].to_vec();
    }
    let mut space: Vec<Vec<C64>> = cluster.iter().map(|&c| eig.vectors.col(c).to_vec()).collect();
    if space.len() > 2 {
        // doubled modes share the cluster; keep the two smoothest combinations
        let smooth = |u: &[C64]| -> Vec<C64> {
            let mut out = vec![C64::new(0.0, 0.0); 2 * n];
            for blk in 0..2 {
                for j in 0..n {
                    out[blk * n + j] = 0.5 * (u[blk * n + j] + u[blk * n + (j + 1) % n]);
                }
            }
            out
        };
        let sm: Vec<Vec<C64>> = space.iter().map(|u| smooth(u)).collect();
        let g = restricted_form(&sm, &sm);
        let ge = eigh_complex(&g, EigRange::All)?;
        let k = space.len();
        space = (k - 2..k).map(|c| combine(&space, ge.vectors.col(c))).collect();
    }
    let pair = [space[0].clone(), space[1].clone()];
    // the wall mode is the σ₂ = −s combination inside the near-zero pair
    let sigma2 = |u: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for j in 0..n {
            out[j] = C64::new(0.0, -1.0) * u[n + j];
            out[n + j] = C64::new(0.0, 1.0) * u[j];
        }
        out
    };
    let images: Vec<Vec<C64>> = pair.iter().map(|u| sigma2(u)).collect();
    let ce = eigh_complex(&restricted_form(&pair, &images), EigRange::All)?;
    let pick = if exact.chirality > 0.0 { 0 } else { 1 };
    let mut mode = combine(&pair, ce.vectors.col(pick));
    let anti = combine(&pair, ce.vectors.col(1 - pick));
    let rayleigh = |u: &[C64]| cdot(u, &matrix.matvec(u)).re / cdot(u, u).re;
    let (zero_value, partner_value) = (rayleigh(&mode), rayleigh(&anti));
    let scale = 1.0 / (h * cdot(&mode, &mode).re).sqrt();
    mode.iter_mut().for_each(|x| *x *= scale);
    let mut reference = exact.samples(&d.grid());
    let rn = 1.0 / (h * cdot(&reference, &reference).re).sqrt();
    reference.iter_mut().for_each(|x| *x *= rn);
    let overlap = cdot(&mode, &reference);
    let phase = overlap / overlap.norm();
    mode.iter_mut().for_each(|x| *x *= phase);
    let mode_error = (h * mode.iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()).sqrt();
    let peak = mode[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let spinor_defect = (0..n)
        .map(|j| (mode[n + j] + C64::new(0.0, exact.chirality) * mode[j]).norm())
        .fold(0.0, f64::max)
        / peak;
    let margin = 0.02 * gap;
    let in_gap = (0..eig.values.len())
        .filter(|&k| !cluster.contains(&k) && !spurious[k] && eig.values[k].abs() < gap - margin)
        .map(|k| eig.values[k])
        .collect();
    Ok(DiracSpectrum {
        values: eig.values.clone(),
        spurious,
        zero_value,
        partner_value,
        in_gap,
        mode_error,
        spinor_defect,
        mode,
        pair,
        spacing: h,
        doubled_modes: cluster.len() - 2,
    })
}

#[derive(Debug, Clone)]
pub struct InhomogeneousSolution {
    /// E = −⟨α★, 𝒢⟩
    pub energy: C64,
    /// minimal-norm solution of 𝒟α = 𝒢 + Eα★, orthogonal to the zero modes
    pub alpha: Vec<C64>,
    pub residual: f64,
}

/// Solvability-projected solve of 𝒟α = 𝒢 + Eα★ on the grid of `d`.
pub fn solve_inhomogeneous_dirac(
    d: &DiracOperator1D,
    spec: &DiracSpectrum,
    rhs: &[C64],
) -> Result<InhomogeneousSolution> {
    let n2 = 2 * d.n;
    if rhs.len() != n2 {
        return invalid(format!("right-hand side has length {}, expected {n2}", rhs.len()));
    }
    let h = d.spacing();
    let energy = -cdot(&spec.mode, rhs) * h;
    let mut target: Vec<C64> = rhs.iter().zip(&spec.mode).map(|(g, a)| g + energy * a).collect();
    for u in &spec.pair {
        let c = cdot(u, &target);
        target.iter_mut().zip(u).for_each(|(t, x)| *t -= c * x);
    }
    let m = d.matrix();
    let shift = d.theta.abs() * d.wall.kappa_inf;
    let mut a = m.clone();
    for u in &spec.pair {
        for j in 0..n2 {
            for k in 0..n2 {
                a[(j, k)] += shift * u[j] * u[k].conj();
            }
        }
    }
    let mut alpha = target.clone();
    Lu::new(a)?.solve(&mut alpha)?;
    let applied = m.matvec(&alpha);
    let lhs_err: f64 = applied
        .iter()
        .zip(rhs.iter().zip(&spec.mode))
        .map(|(x, (g, s))| (x - g - energy * s).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = rhs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let residual = lhs_err / scale;
    if residual > 1e-8 {
        return Err(Error::Numeric(format!(
            "inhomogeneous Dirac residual {residual:e} above tolerance"
        )));
    }
    Ok(InhomogeneousSolution {
        energy,
        alpha,
        residual,
    })
}

/// Σᵢ fᵢ(ζ) gᵢ(x): ζ-profiles sampled on `zeta` paired with x-side coefficient vectors
/// on the K-pseudo-periodic basis `indices`.
#[derive(Debug, Clone)]
pub struct TwoScaleState {
    pub zeta: Vec<f64>,
    pub indices: Vec<(i64, i64)>,
    pub terms: Vec<(Vec<C64>, Vec<C64>)>,
}

impl TwoScaleState {
    /// Value at (x, ζ) with the K-pseudo-periodic factor included.
    pub fn eval(&self, lat: &crate::geometry::TriangularLattice, k: Vec2, x: Vec2, zeta_index: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (profile, g) in &self.terms {
            let f = profile[zeta_index];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            let s: C64 = self
                .indices
                .iter()
                .zip(g)
                .map(|(m, c)| c * C64::from_polar(1.0, dot(add(k, lat.dual(*m)), x)))
                .sum();
            acc += f * s;
        }
        acc
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondOrderReport {
    pub e2: f64,
    pub imag_part: f64,
    pub v_f: f64,
    pub theta: f64,
    pub beta: f64,
    /// sup over ζ of the kernel component of G⁽¹⁾, relative to its size
    pub kernel_defect: f64,
    /// −Σⱼ⟨αⱼ, |𝔎₂|²αⱼ''⟩, the part not involving the resolvent
    pub curvature_part: f64,
    #[serde(skip)]
    pub psi0: Option<TwoScaleState>,
    #[serde(skip)]
    pub psi1: Option<TwoScaleState>,
}

/// E⁽²⁾ for the wall κ along the edge frame, using ϑ♯ stored in `dp`.
pub fn e2_coefficient(
    dp: &DiracPointData,
    v_scaled: &FourierPotential,
    w: &FourierPotential,
    edge: &EdgeFrame,
    wall: &DomainWall,
) -> Result<SecondOrderReport> {
    let theta = dp
        .theta_sharp
        .ok_or_else(|| Error::Configuration("Dirac point data carries no ϑ♯".into()))?;
    let v_f = dp.lambda.fourier_abs() * norm(edge.frak_k2);
    let mode = zero_mode_exact(v_f, theta, wall)?;
    e2_with_mode(dp, v_scaled, w, edge, &mode)
}

/// E⁽²⁾ = −⟨α★, 𝒢⁽²⁾⟩ with the x-side potential `w` and a prescribed zero mode.
pub fn e2_with_mode(
    dp: &DiracPointData,
    v_scaled: &FourierPotential,
    w: &FourierPotential,
    edge: &EdgeFrame,
    mode: &ZeroMode,
) -> Result<SecondOrderReport> {
    let dir = edge.frak_k2;
    let lat = &dp.lattice;
    let (phi_p, phi_m) = dp.phi_pm(dir);
    let basis = PlaneWaveBasis::from_indices(dp.indices.clone());
    let fiber = assemble_on_basis(v_scaled, dp.k, basis, dp.m_trunc);
    let eig = eigh_complex(&fiber.h, EigRange::All)?;
    let tol = 1e-6 * dp.e_star.abs().max(1.0);
    let kernel: Vec<usize> = (0..eig.values.len())
        .filter(|&j| (eig.values[j] - dp.e_star).abs() < tol)
        .collect();
    if kernel.len() != 2 {
        return Err(Error::Projection(format!(
            "expected a two-dimensional kernel at E★, found {}",
            kernel.len()
        )));
    }
    let grad = |g: &[C64]| -> Vec<C64> {
        dp.indices
            .iter()
            .zip(g)
            .map(|(m, c)| C64::new(0.0, dot(dir, add(dp.k, lat.dual(*m)))) * c)
            .collect()
    };
    let resolvent = |g: &[C64]| -> Result<Vec<C64>> {
        let mut r = g.to_vec();
        for phi in [&phi_p, &phi_m] {
            let c = cdot(phi, &r);
            r.iter_mut().zip(phi.iter()).for_each(|(x, p)| *x -= c * p);
        }
        let size = cdot(g, g).re.sqrt().max(f64::MIN_POSITIVE);
        for &k in &kernel {
            let c = cdot(eig.vectors.col(k), &r);
            if c.norm() > 1e-9 * size {
                return Err(Error::Projection(format!(
                    "kernel component {:e} survives the projection",
                    c.norm()
                )));
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); r.len()];
        for j in 0..eig.values.len() {
            if kernel.contains(&j) {
                continue;
            }
            let u = eig.vectors.col(j);
            let c = cdot(u, &r) / (eig.values[j] - dp.e_star);
            out.iter_mut().zip(u).for_each(|(o, x)| *o += c * x);
        }
        Ok(out)
    };
    // unprojected x-sides of G⁽¹⁾ and their resolvent images
    let raw = [
        grad(&phi_p),
        grad(&phi_m),
        apply_potential(&dp.indices, w, &phi_p),
        apply_potential(&dp.indices, w, &phi_m),
    ];
    let mut g = Vec::with_capacity(4);
    for r in &raw {
        g.push(resolvent(r)?);
    }
    let phis = [&phi_p, &phi_m];
    let mut a = [[C64::new(0.0, 0.0); 4]; 2];
    let mut b = [[C64::new(0.0, 0.0); 4]; 2];
    let mut c = [[C64::new(0.0, 0.0); 4]; 2];
    for j in 0..2 {
        for i in 0..4 {
            let dg = grad(&g[i]);
            a[j][i] = cdot(phis[j], &dg);
            b[j][i] = cdot(phis[j], &apply_potential(&dp.indices, w, &g[i]));
            c[j][i] = cdot(phis[j], &raw[i]);
        }
    }
    let s = mode.chirality;
    let is = C64::new(0.0, s);
    let k2 = dot(dir, dir);
    // ζ-side: α₊ = φ, α₋ = −isφ; f = (2α₊', 2α₋', −κα₊, −κα₋)
    let profiles = |z: f64| {
        let (p, dp_, ddp) = mode.jet(z);
        let (kap, dk, _) = mode.wall.jet(z);
        let alpha = [C64::new(p, 0.0), -is * p];
        let alpha2 = [C64::new(ddp, 0.0), -is * ddp];
        let f = [
            C64::new(2.0 * dp_, 0.0),
            -is * (2.0 * dp_),
            C64::new(-kap * p, 0.0),
            is * (kap * p),
        ];
        let kp = dk * p + kap * dp_;
        let fd = [C64::new(2.0 * ddp, 0.0), -is * (2.0 * ddp), C64::new(-kp, 0.0), is * kp];
        (alpha, alpha2, f, fd, kap)
    };
    let half = mode.support();
    let panels = (half * 8.0 / mode.wall.width.min(1.0 / mode.beta)).ceil() as usize;
    let mut total = C64::new(0.0, 0.0);
    let mut curvature = C64::new(0.0, 0.0);
    let mut defect: f64 = 0.0;
    let mut g1_size: f64 = 0.0;
    for (z, wt) in quad_nodes(-half, half, panels) {
        let (alpha, alpha2, f, fd, kap) = profiles(z);
        for j in 0..2 {
            let mut gj = alpha2[j] * k2;
            curvature += wt * alpha[j].conj() * alpha2[j] * k2;
            let mut kern = C64::new(0.0, 0.0);
            for i in 0..4 {
                gj += 2.0 * fd[i] * a[j][i] - kap * f[i] * b[j][i];
                kern += f[i] * c[j][i];
                g1_size = g1_size.max((f[i] * c[j][i]).norm());
            }
            defect = defect.max(kern.norm());
            total += wt * alpha[j].conj() * gj;
        }
    }
    let e2 = -total;
    let kernel_defect = defect / g1_size.max(f64::MIN_POSITIVE);
    if kernel_defect > 1e-6 {
        return Err(Error::Projection(format!(
            "G⁽¹⁾ is not orthogonal to the kernel (relative defect {kernel_defect:e})"
        )));
    }
    let nz = 401;
    let zeta: Vec<f64> = (0..nz).map(|j| -half + 2.0 * half * j as f64 / (nz - 1) as f64).collect();
    let mut psi0_terms = vec![(vec![], phi_p.clone()), (vec![], phi_m.clone())];
    let mut psi1_terms: Vec<(Vec<C64>, Vec<C64>)> = g.iter().map(|v| (vec![], v.clone())).collect();
    for &z in &zeta {
        let (alpha, _, f, _, _) = profiles(z);
        psi0_terms[0].0.push(alpha[0]);
        psi0_terms[1].0.push(alpha[1]);
        for i in 0..4 {
            psi1_terms[i].0.push(f[i]);
        }
    }
    Ok(SecondOrderReport {
        e2: e2.re,
        imag_part: e2.im,
        v_f: mode.v_f,
        theta: mode.theta,
        beta: mode.beta,
        kernel_defect,
        curvature_part: -curvature.re,
        psi0: Some(TwoScaleState {
            zeta: zeta.clone(),
            indices: dp.indices.clone(),
            terms: psi0_terms,
        }),
        psi1: Some(TwoScaleState {
            zeta,
            indices: dp.indices.clone(),
            terms: psi1_terms,
        }),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandCurvature {
    pub band: usize,
    pub energy: f64,
    /// d²/dλ² E(K + λ𝔎₂) at λ = 0
    pub second_derivative: f64,
    pub m_eff: f64,
    pub step: f64,
}

/// Curvature of the non-degenerate σ = 1 band at K along 𝔎₂.
pub fn band_curvature(
    v_scaled: &FourierPotential,
    dp: &DiracPointData,
    edge: &EdgeFrame,
    m_trunc: usize,
) -> Result<BandCurvature> {
    let n_bands = dp.b_star + 3;
    let at = |lam: f64| band_energies(v_scaled, add(dp.k, crate::geometry::scale(lam, edge.frak_k2)), m_trunc, n_bands);
    let e0 = at(0.0)?;
    let band = (0..n_bands)
        .min_by(|&a, &b| (e0[a] - dp.e_tilde).abs().total_cmp(&(e0[b] - dp.e_tilde).abs()))
        .unwrap();
    let neighbor_gap = e0
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != band)
        .map(|(_, e)| (e - e0[band]).abs())
        .fold(f64::INFINITY, f64::min);
    let q = v_scaled.lattice.q;
    let h = (0.05 * neighbor_gap.sqrt() / q).min(1e-2);
    let second = |h: f64| -> Result<f64> { Ok((at(h)?[band] - 2.0 * e0[band] + at(-h)?[band]) / (h * h)) };
    let d = (4.0 * second(0.5 * h)? - second(h)?) / 3.0;
    if d.abs() < 1e-10 * q * q {
        return Err(Error::FlatBand("vanishing curvature along 𝔎₂".into()));
    }
    Ok(BandCurvature {
        band: band + 1,
        energy: e0[band],
        second_derivative: d,
        m_eff: 1.0 / d,
        step: h,
    })
}

/// H_eff = −(1/2m)∂²ζ + Q(ζ), Q = a κ' + b (κ∞² − κ²), relative to the band edge.
#[derive(Debug, Clone)]
pub struct EffectiveSchrodinger {
    pub m_eff: f64,
    pub a_coef: f64,
    pub b_coef: f64,
    pub wall: DomainWall,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStates {
    /// eigenvalues on the gap side of the band edge, ordered from the deepest
    pub energies: Vec<f64>,
    /// +1 when the gap lies above the band edge (m_eff < 0), −1 otherwise
    pub side: f64,
    pub half_length: f64,
    pub points: usize,
    pub margin: f64,
}

impl EffectiveSchrodinger {
    pub fn new(m_eff: f64, a_coef: f64, b_coef: f64, wall: DomainWall) -> Result<Self> {
        if m_eff == 0.0 || !m_eff.is_finite() {
            return Err(Error::FlatBand("effective mass must be finite and non-zero".into()));
        }
        if !(b_coef > 0.0) {
            return invalid("b must be positive");
        }
        Ok(Self {
            m_eff,
            a_coef,
            b_coef,
            wall,
        })
    }

    pub fn with_wall(&self, wall: DomainWall) -> Self {
        Self {
            wall,
            ..self.clone()
        }
    }

    pub fn q_eff(&self, z: f64) -> f64 {
        let (k, dk, _) = self.wall.jet(z);
        let ki = self.wall.kappa_inf;
        self.a_coef * dk + self.b_coef * (ki * ki - k * k)
    }

    pub fn kinetic(&self) -> f64 {
        0.5 / self.m_eff.abs()
    }

    pub fn q_integral(&self) -> f64 {
        let half = 40.0 * self.wall.width + self.wall.core_extent();
        let panels = (half * 16.0 / self.wall.width.min(1.0)).ceil() as usize;
        quad_nodes(-half, half, panels).iter().map(|(z, w)| w * self.q_eff(*z)).sum()
    }

    /// Box half-length: several localization lengths 2c/|∫Q| beyond the wall core.
    pub fn default_half_length(&self) -> f64 {
        let core = 40.0 * self.wall.width + self.wall.core_extent();
        let qi = self.q_integral().abs().max(1e-3 * self.wall.kappa_inf.powi(2) * self.wall.width);
        (core + 8.0 * 2.0 * self.kinetic() / qi).min(2e5)
    }

    /// Dirichlet box eigenvalues beyond `margin` on the gap side of the band edge.
    /// Interior nodes of the box: uniform over the wall core, then geometrically graded
    /// up to a far-field step tied to the localization length 2c/|∫Q|.
    fn mesh(&self, half: f64) -> Vec<f64> {
        let core = 20.0 * self.wall.width + self.wall.core_extent();
        let mut fine = self.wall.width / 10.0;
        if self.wall.core_extent() > 0.0 {
            fine = fine.min(self.wall.core_extent() / 60.0);
        }
        let qi = self.q_integral().abs().max(1e-3 * self.wall.kappa_inf.powi(2) * self.wall.width);
        let coarse = (2.0 * self.kinetic() / qi / 40.0).max(fine);
        let mut right = vec![];
        let (mut z, mut step) = (0.0, fine);
        loop {
            if z > core {
                step = (step * 1.03).min(coarse);
            }
            z += step;
            if z >= half - 0.5 * step {
                break;
            }
            right.push(z);
        }
        let mut nodes: Vec<f64> = right.iter().rev().map(|x| -x).collect();
        nodes.push(0.0);
        nodes.extend(right);
        nodes
    }

    /// Box eigenvalues beyond `margin` on the gap side of the band edge, Dirichlet at ±L.
    /// The three-point Laplacian on the graded mesh is symmetrized with the lumped mass.
    pub fn bound_states(&self, half_length: Option<f64>, margin: f64) -> Result<BoundStates> {
        let half = half_length.unwrap_or_else(|| self.default_half_length());
        let z = self.mesh(half);
        let n = z.len();
        if n < 3 {
            return invalid("box too small for the wall");
        }
        let c = self.kinetic();
        let s = self.m_eff.signum();
        let gaps: Vec<f64> = (0..=n)
            .map(|j| {
                let lo = if j == 0 { -half } else { z[j - 1] };
                let hi = if j == n { half } else { z[j] };
                hi - lo
            })
            .collect();
        let mass: Vec<f64> = (0..n).map(|j| 0.5 * (gaps[j] + gaps[j + 1])).collect();
        let mut diag = Vec::with_capacity(n);
        let mut low = 0.0_f64;
        for j in 0..n {
            let q = s * self.q_eff(z[j]);
            low = low.min(q);
            diag.push(c * (1.0 / gaps[j] + 1.0 / gaps[j + 1]) / mass[j] + q);
        }
        let off: Vec<f64> = (0..n - 1)
            .map(|j| -c / gaps[j + 1] / (mass[j] * mass[j + 1]).sqrt())
            .collect();
        let e = tridiagonal_eigenvalues(&diag, &off, EigRange::Value(low - 1.0, -margin))?;
        Ok(BoundStates {
            energies: e.iter().map(|x| s * x).collect(),
            side: -s,
            half_length: half,
            points: n,
            margin,
        })
    }
}

/// Sweeps the deformation amplitude of κ∞ tanh(ζ/w) + A s'(ζ) until the effective
/// Schrödinger operator has no bound state beyond the margin.
pub fn natural_wall_search(
    model: &EffectiveSchrodinger,
    radius: f64,
    amplitudes: &[f64],
    margin: f64,
) -> Result<(DomainWall, f64)> {
    let base = &model.wall;
    for &amp in amplitudes {
        let wall = DomainWall::natural(base.kappa_inf, base.width, amp, radius)?;
        let candidate = model.with_wall(wall.clone());
        if candidate.bound_states(None, margin)?.energies.is_empty() {
            return Ok((wall, amp));
        }
    }
    Err(Error::RootNotFound(
        "no amplitude in the sweep removes the bound state".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyRow {
    pub theta: f64,
    pub dirac_zero: f64,
    pub dirac_mode_error: f64,
    /// eigenvalue closest to the band edge, if any is bound
    pub schrodinger_edge_state: Option<f64>,
    pub bound_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyReport {
    pub rows: Vec<HomotopyRow>,
    pub max_dirac_zero: f64,
    /// first θ at which the Schrödinger bound state has merged with the continuum,
    /// refined by bisection between grid points
    pub theta_star: Option<f64>,
}

/// Traces along κ_θ = (1 − θ)κ + θκ_♮ for the Dirac and effective Schrödinger models.
pub fn protection_homotopy(
    dirac: &DiracOperator1D,
    schrodinger: &EffectiveSchrodinger,
    wall: &DomainWall,
    natural: &DomainWall,
    thetas: &[f64],
    margin: f64,
) -> Result<HomotopyReport> {
    let half = schrodinger
        .with_wall(wall.clone())
        .default_half_length()
        .max(schrodinger.with_wall(natural.clone()).default_half_length());
    let bound_at = |t: f64| -> Result<BoundStates> {
        let w = DomainWall::blend(wall, natural, t)?;
        schrodinger.with_wall(w).bound_states(Some(half), margin)
    };
    let mut rows = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let w = DomainWall::blend(wall, natural, t)?;
        let mut d = dirac.clone();
        d.half_length = d.half_length.max(
            20.0 / d.decay_rate() + 10.0 * w.width + w.core_extent(),
        );
        d.wall = w;
        let spec = dirac_spectrum(&d, 4)?;
        let b = bound_at(t)?;
        rows.push(HomotopyRow {
            theta: t,
            dirac_zero: spec.zero_value,
            dirac_mode_error: spec.mode_error,
            schrodinger_edge_state: b.energies.last().copied(),
            bound_count: b.energies.len(),
        });
    }
    let max_dirac_zero = rows.iter().map(|r| r.dirac_zero.abs()).fold(0.0, f64::max);
    let mut theta_star = None;
    for pair in rows.windows(2) {
        if pair[0].bound_count > 0 && pair[1].bound_count == 0 {
            let (mut lo, mut hi) = (pair[0].theta, pair[1].theta);
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if bound_at(mid)?.energies.is_empty() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            theta_star = Some(hi);
            break;
        }
    }
    Ok(HomotopyReport {
        rows,
        max_dirac_zero,
        theta_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_op(n: usize, half: f64) -> DiracOperator1D {
        DiracOperator1D::new(1.0, 1.0, DomainWall::tanh(1.0, 1.0).unwrap(), half, n, Discretization::FourierSpectral)
            .unwrap()
    }

    #[test]
    fn closed_form_is_sech() {
        let m = zero_mode_exact(1.0, 1.0, &DomainWall::tanh(1.0, 1.0).unwrap()).unwrap();
        let g = 0.5; // ∫ 2 sech² = 4
        for z in [-3.0, 0.0, 0.7, 5.0] {
            assert!((m.profile(z) - g / f64::cosh(z)).abs() < 1e-12);
        }
        let a = m.alpha(1.3);
        assert!((a[1] - C64::new(0.0, -1.0) * a[0]).norm() < 1e-15);
    }

    #[test]
    fn no_wall_is_rejected() {
        let flat = DomainWall::custom("flat", 1.0, 1.0, |_| 1.0);
        assert!(zero_mode_exact(1.0, 1.0, &flat).is_err());
        assert!(matches!(
            zero_mode_exact(1.0, 0.0, &DomainWall::tanh(1.0, 1.0).unwrap()),
            Err(Error::DegenerateCoupling(_))
        ));
    }

    #[test]
    fn spectral_zero_mode() {
        let d = tanh_op(511, 28.0);
        assert!(d.matrix().hermiticity_defect() < 1e-13);
        let s = dirac_spectrum(&d, 6).unwrap();
        assert!(s.zero_value.abs() < 1e-8, "{}", s.zero_value);
        assert!(s.mode_error < 1e-6, "{}", s.mode_error);
        assert!(s.spinor_defect < 1e-6);
        assert!(s.in_gap.is_empty(), "{:?}", s.in_gap);
    }

    #[test]
    fn negated_wall_flips_spinor() {
        let w = DomainWall::tanh(1.0, 1.0).unwrap().negated();
        let m = zero_mode_exact(1.0, 1.0, &w).unwrap();
        assert_eq!(m.chirality, -1.0);
        let a = m.alpha(0.4);
        assert!((a[1] - C64::new(0.0, 1.0) * a[0]).norm() < 1e-15);
        let d = DiracOperator1D::new(1.0, 1.0, w, 28.0, 511, Discretization::FourierSpectral).unwrap();
        let s = dirac_spectrum(&d, 6).unwrap();
        assert!(s.zero_value.abs() < 1e-8 && s.mode_error < 1e-5);
    }

    #[test]
    fn central_difference_converges_past_doublers() {
        let err = |n: usize| {
            let d = DiracOperator1D::new(
                1.0,
                1.0,
                DomainWall::tanh(1.0, 1.0).unwrap(),
                12.0,
                n,
                Discretization::CentralDifference,
            )
            .unwrap();
            let s = dirac_spectrum(&d, 8).unwrap();
            assert_eq!(s.doubled_modes, 2);
            assert!(s.zero_value.abs() < 1e-8);
            s.mode_error
        };
        let (coarse, fine) = (err(256), err(512));
        assert!(fine < 2e-2, "{fine}");
        assert!(coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn inhomogeneous_kernel_and_residual() {
        let d = tanh_op(255, 24.0);
        let s = dirac_spectrum(&d, 4).unwrap();
        let sol = solve_inhomogeneous_dirac(&d, &s, &s.mode).unwrap();
        assert!((sol.energy + 1.0).norm() < 1e-10);
        assert!(sol.alpha.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-8);
        let grid = d.grid();
        let n = d.n;
        let mut g = vec![C64::new(0.0, 0.0); 2 * n];
        for (j, &z) in grid.iter().enumerate() {
            let e = (-z * z / 4.0).exp();
            g[j] = C64::new(z * e, 0.3 * e);
            g[n + j] = C64::new(-0.5 * e, z * z * e * 0.1);
        }
        let sol = solve_inhomogeneous_dirac(&d, &s, &g).unwrap();
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn free_schrodinger_has_no_bound_state() {
        let flat = DomainWall::custom("flat", 1.0, 1.0, |_| 1.0);
        let h = EffectiveSchrodinger::new(-0.01, 1.0, 1.0, flat).unwrap();
        assert!(h.bound_states(Some(200.0), 1e-12).unwrap().energies.is_empty());
    }

    #[test]
    fn tanh_well_binds_on_gap_side() {
        let h = EffectiveSchrodinger::new(-0.5, 1.0, 1.0, DomainWall::tanh(1.0, 1.0).unwrap()).unwrap();
        assert!((h.q_integral() - 4.0).abs() < 1e-8);
        let b = h.bound_states(None, 1e-10).unwrap();
        assert!(!b.energies.is_empty());
        assert!(b.energies.iter().all(|&e| e > 0.0));
        assert_eq!(b.side, 1.0);
        let h = EffectiveSchrodinger::new(0.5, 1.0, 1.0, DomainWall::tanh(1.0, 1.0).unwrap()).unwrap();
        let b = h.bound_states(None, 1e-10).unwrap();
        // for positive mass the same Q is a barrier
        assert!(b.energies.is_empty());
    }
}
