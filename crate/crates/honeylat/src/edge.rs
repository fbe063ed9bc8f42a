//! Cylinder edge problem −Δ + εV + δκ(δ𝔎₂·x)W with quasi-momentum k∥ along 𝔳₁, truncated to a
//! transverse supercell of N cells that carries the wall and a compensating anti-wall.
//!
//! Two transverse discretizations share one configuration: plane waves j/N (dense, used for
//! the exact decoupling checks and the cylinder transform) and a real-space grid with central
//! differences (banded, used for sweeps at large N).

use crate::bloch::{assemble_on_basis, DiracPointData, PlaneWaveBasis};
use crate::effective::zero_mode_exact;
use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, norm, EdgeFrame, TriangularLattice};
use crate::linalg::{
    cdot, cnorm, eigh_complex, shift_invert_lanczos, BandedMatrix, CMat, EigRange, LanczosOptions, C64,
};
use crate::potential::{DomainWall, FourierPotential};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WallPeriodization {
    /// κ(Nδ sin(𝔎₂·x/N)): wall at 𝔎₂·x = 0, mirrored wall half a supercell away
    DoubleWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Transverse {
    /// e^{2πi(j + twist/2π)τ₂/N}, |j| ≤ N·M2
    PlaneWave,
    /// grid τ₂ = i/P with central differences of half-width r
    Grid { points_per_cell: usize, half_width: usize },
}

#[derive(Debug, Clone)]
pub struct SupercellConfig {
    pub edge: EdgeFrame,
    pub n_cells: usize,
    pub m1: usize,
    pub m2: usize,
    pub k_par: f64,
    pub eps: f64,
    pub delta: f64,
    pub wall: DomainWall,
    pub periodization: WallPeriodization,
    /// f(τ₂ + N) = e^{i twist} f(τ₂)
    pub twist: f64,
    pub transverse: Transverse,
}

/// Coordinates (K·𝔳₁, K·𝔳₂)/2π of the vertex K.
fn k_edge_coords(lat: &TriangularLattice, edge: &EdgeFrame) -> [f64; 2] {
    let k = lat.k_point();
    [dot(k, edge.frak_v1) / (2.0 * PI), dot(k, edge.frak_v2) / (2.0 * PI)]
}

impl SupercellConfig {
    /// M1 = 6, M2 = 4, k∥ = K·𝔳₁, no twist, plane waves.
    pub fn new(edge: EdgeFrame, n_cells: usize, eps: f64, delta: f64, wall: DomainWall) -> Self {
        Self {
            edge,
            n_cells,
            m1: 6,
            m2: 4,
            k_par: edge.kpar_at_k.rem_euclid(2.0 * PI),
            eps,
            delta,
            wall,
            periodization: WallPeriodization::DoubleWall,
            twist: 0.0,
            transverse: Transverse::PlaneWave,
        }
    }

    pub fn with_grid(mut self, points_per_cell: usize, half_width: usize) -> Self {
        self.transverse = Transverse::Grid {
            points_per_cell,
            half_width,
        };
        self
    }

    /// Sets k∥ and the twist so that K itself is one of the sampled quasi-momenta.
    pub fn aligned_with_k(mut self, lat: &TriangularLattice) -> Self {
        let c = k_edge_coords(lat, &self.edge);
        self.k_par = (2.0 * PI * c[0]).rem_euclid(2.0 * PI);
        self.twist = (2.0 * PI * self.n_cells as f64 * c[1]).rem_euclid(2.0 * PI);
        self
    }

    pub fn modes(&self) -> usize {
        2 * self.m1 + 1
    }

    pub fn dimension(&self) -> usize {
        match self.transverse {
            Transverse::PlaneWave => self.modes() * (2 * self.n_cells * self.m2 + 1),
            Transverse::Grid { points_per_cell, .. } => self.modes() * self.n_cells * points_per_cell,
        }
    }

    /// κ_N(τ₂) = κ(Nδ sin(2πτ₂/N)).
    pub fn wall_profile(&self, tau2: f64) -> f64 {
        let n = self.n_cells as f64;
        self.wall.value(n * self.delta * (2.0 * PI * tau2 / n).sin())
    }

    /// Coefficients c_l of κ_N in e^{2πilτ₂/N}, |l| ≤ lmax, as c[l + lmax].
    pub fn wall_fourier(&self, lmax: usize) -> Vec<C64> {
        let samples = 4 * lmax + 64;
        let vals: Vec<f64> = (0..samples)
            .map(|s| self.wall_profile(self.n_cells as f64 * s as f64 / samples as f64))
            .collect();
        let roots: Vec<C64> = (0..samples)
            .map(|s| C64::from_polar(1.0, -2.0 * PI * s as f64 / samples as f64))
            .collect();
        (0..=2 * lmax)
            .map(|li| {
                let l = li as i64 - lmax as i64;
                let mut acc = C64::new(0.0, 0.0);
                for (s, v) in vals.iter().enumerate() {
                    acc += roots[(l * s as i64).rem_euclid(samples as i64) as usize] * v;
                }
                acc / samples as f64
            })
            .collect()
    }

    /// Largest |l| with |c_l| above 1e-10 of the largest coefficient.
    pub fn wall_content(&self) -> usize {
        let lmax = 2 * self.n_cells * self.m2.max(1) + 16;
        let c = self.wall_fourier(lmax);
        let top = c.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        (0..=lmax)
            .rev()
            .find(|&l| c[lmax + l].norm() > 1e-10 * top)
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 || self.m2 == 0 {
            return invalid("supercell needs N ≥ 1 and M2 ≥ 1");
        }
        if !(0.0..2.0 * PI).contains(&self.k_par) {
            return invalid(format!("k∥ = {} outside [0, 2π)", self.k_par));
        }
        if !self.eps.is_finite() || !(self.delta >= 0.0) || !self.delta.is_finite() {
            return invalid("ε and δ must be finite with δ ≥ 0");
        }
        if let Transverse::Grid {
            points_per_cell,
            half_width,
        } = self.transverse
        {
            if half_width == 0 || points_per_cell < 2 {
                return invalid("grid needs a stencil half-width ≥ 1 and at least 2 points per cell");
            }
            if (self.n_cells * points_per_cell) % 2 == 1 {
                return invalid("grid needs an even number of transverse points");
            }
        }
        if self.delta > 0.0 {
            let span = 2.0 * PI * self.n_cells as f64 * self.delta;
            if span < 20.0 * self.wall.width * (1.0 - 1e-12) {
                return Err(Error::Configuration(format!(
                    "2πNδ = {span:.3} is below 20 wall widths; walls overlap their images"
                )));
            }
            if self.transverse == Transverse::PlaneWave && self.wall_content() > self.n_cells * self.m2 {
                return Err(Error::Configuration(format!(
                    "wall Fourier content {} exceeds N·M2 = {}",
                    self.wall_content(),
                    self.n_cells * self.m2
                )));
            }
        }
        Ok(())
    }
}

struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { row_ptr, cols, vals }
    }

    fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.row_ptr.len() - 1)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }
}

enum Repr {
    Dense(CMat),
    Sparse(Csr),
}

/// Discretized H⁽δ⁾ on the supercell.
pub struct EdgeOperator {
    pub config: SupercellConfig,
    pub dim: usize,
    repr: Repr,
}

/// Position of grid point i in the ring ordering 0, N−1, 1, N−2, ... that keeps a periodic
/// stencil inside a band.
fn ring_position(i: usize, n: usize) -> usize {
    if i < n / 2 {
        2 * i
    } else {
        2 * (n - 1 - i) + 1
    }
}

/// Central-difference weights of half-width r for the first and second derivative.
pub fn central_weights(r: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d1 = vec![0.0; r + 1];
    let mut d2 = vec![0.0; r + 1];
    for k in 1..=r {
        // (r!)² / ((r−k)!(r+k)!)
        let mut ratio = 1.0;
        for t in 1..=k {
            ratio *= (r + 1 - t) as f64 / (r + t) as f64;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        d1[k] = sign * ratio / k as f64;
        d2[k] = 2.0 * sign * ratio / (k * k) as f64;
    }
    d2[0] = -2.0 * d2[1..].iter().sum::<f64>();
    (d1, d2)
}

/// Metric coefficients 𝔎ᵢ·𝔎ⱼ/4π².
fn metric(edge: &EdgeFrame) -> [f64; 3] {
    let s = 4.0 * PI * PI;
    [
        dot(edge.frak_k1, edge.frak_k1) / s,
        dot(edge.frak_k1, edge.frak_k2) / s,
        dot(edge.frak_k2, edge.frak_k2) / s,
    ]
}

/// (n1, n2, c) for every Fourier coefficient of p in the edge frame.
fn edge_coeffs(p: &FourierPotential, edge: &EdgeFrame, scale: f64) -> Vec<(i64, i64, C64)> {
    let mut out: Vec<(i64, i64, C64)> = p
        .coeffs
        .iter()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(m, c)| {
            let n = edge.edge_from_dual(*m);
            (n.0, n.1, c * scale)
        })
        .collect();
    out.sort_by_key(|e| (e.0, e.1));
    out
}

pub fn assemble_edge(v: &FourierPotential, w: &FourierPotential, cfg: &SupercellConfig) -> Result<EdgeOperator> {
    cfg.validate()?;
    match cfg.transverse {
        Transverse::PlaneWave => assemble_plane_wave(v, w, cfg),
        Transverse::Grid {
            points_per_cell,
            half_width,
        } => assemble_grid(v, w, cfg, points_per_cell, half_width),
    }
}

fn assemble_plane_wave(v: &FourierPotential, w: &FourierPotential, cfg: &SupercellConfig) -> Result<EdgeOperator> {
    let nm = cfg.modes();
    let jmax = (cfg.n_cells * cfg.m2) as i64;
    let nj = (2 * jmax + 1) as usize;
    let n_cells = cfg.n_cells as i64;
    let dim = nm * nj;
    let mut h = CMat::zeros(dim, dim);
    let t = cfg.twist / (2.0 * PI);
    let vc = edge_coeffs(v, &cfg.edge, cfg.eps);
    let wc = edge_coeffs(w, &cfg.edge, cfg.delta);
    let lmax = 2 * jmax as usize;
    let wall = if cfg.delta > 0.0 && !wc.is_empty() {
        cfg.wall_fourier(lmax)
    } else {
        vec![]
    };
    let top = wall.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let idx = |m1: i64, j: i64| -> Option<usize> {
        if m1.abs() > cfg.m1 as i64 || j.abs() > jmax {
            None
        } else {
            Some((m1 + cfg.m1 as i64) as usize * nj + (j + jmax) as usize)
        }
    };
    for m1 in -(cfg.m1 as i64)..=cfg.m1 as i64 {
        let a = cfg.k_par / (2.0 * PI) + m1 as f64;
        for j in -jmax..=jmax {
            let col = idx(m1, j).unwrap();
            let b = (j as f64 + t) / n_cells as f64;
            let p = [
                a * cfg.edge.frak_k1[0] + b * cfg.edge.frak_k2[0],
                a * cfg.edge.frak_k1[1] + b * cfg.edge.frak_k2[1],
            ];
            h[(col, col)] += C64::new(dot(p, p), 0.0);
            for &(n1, n2, c) in &vc {
                if let Some(row) = idx(m1 + n1, j + n_cells * n2) {
                    h[(row, col)] += c;
                }
            }
            if wall.is_empty() {
                continue;
            }
            for &(n1, n2, c) in &wc {
                let base = j + n_cells * n2;
                for (li, cl) in wall.iter().enumerate() {
                    if cl.norm() <= 1e-16 * top {
                        continue;
                    }
                    let l = li as i64 - lmax as i64;
                    if let Some(row) = idx(m1 + n1, base + l) {
                        h[(row, col)] += c * cl;
                    }
                }
            }
        }
    }
    Ok(EdgeOperator {
        config: cfg.clone(),
        dim,
        repr: Repr::Dense(h),
    })
}

fn assemble_grid(
    v: &FourierPotential,
    w: &FourierPotential,
    cfg: &SupercellConfig,
    points_per_cell: usize,
    half_width: usize,
) -> Result<EdgeOperator> {
    let nm = cfg.modes();
    let np = cfg.n_cells * points_per_cell;
    let hstep = 1.0 / points_per_cell as f64;
    let dim = nm * np;
    let g = metric(&cfg.edge);
    let (d1, d2) = central_weights(half_width);
    let vc = edge_coeffs(v, &cfg.edge, cfg.eps);
    let wc = edge_coeffs(w, &cfg.edge, cfg.delta);
    let m1max = cfg.m1 as i64;
    let index = |i: usize, m1: i64| ring_position(i, np) * nm + (m1 + m1max) as usize;
    let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(dim * (2 * half_width + 1 + vc.len() + wc.len()));
    for i in 0..np {
        let tau = i as f64 * hstep;
        let kappa = if cfg.delta > 0.0 { cfg.wall_profile(tau) } else { 0.0 };
        for m1 in -m1max..=m1max {
            let a = cfg.k_par + 2.0 * PI * m1 as f64;
            let row = index(i, m1);
            trip.push((row, row, C64::new(a * a * g[0] - g[2] * d2[0] / (hstep * hstep), 0.0)));
            for k in 1..=half_width {
                for dir in [1i64, -1] {
                    let target = i as i64 + dir * k as i64;
                    let wraps = target.div_euclid(np as i64);
                    let jpos = target.rem_euclid(np as i64) as usize;
                    let phase = C64::from_polar(1.0, cfg.twist * wraps as f64);
                    // −2i a G12 ∂τ − G22 ∂²τ
                    let first = C64::new(0.0, -2.0 * a * g[1] * dir as f64 * d1[k] / hstep);
                    let second = C64::new(-g[2] * d2[k] / (hstep * hstep), 0.0);
                    trip.push((row, index(jpos, m1), (first + second) * phase));
                }
            }
            for &(n1, n2, c) in &vc {
                if (m1 + n1).abs() <= m1max {
                    let ph = C64::from_polar(1.0, 2.0 * PI * n2 as f64 * tau);
                    trip.push((index(i, m1 + n1), index(i, m1), c * ph));
                }
            }
            if kappa != 0.0 {
                for &(n1, n2, c) in &wc {
                    if (m1 + n1).abs() <= m1max {
                        let ph = C64::from_polar(kappa, 2.0 * PI * n2 as f64 * tau);
                        trip.push((index(i, m1 + n1), index(i, m1), c * ph));
                    }
                }
            }
        }
    }
    Ok(EdgeOperator {
        config: cfg.clone(),
        dim,
        repr: Repr::Sparse(Csr::from_triplets(dim, trip)),
    })
}

/// Sampled transverse profiles f_{m1}(τ₂) on a uniform grid of `points_per_cell` per cell.
#[derive(Debug, Clone)]
pub struct TransverseProfile {
    pub points_per_cell: usize,
    pub n_cells: usize,
    /// modes[m1 + M1][i], τ₂ = i / points_per_cell
    pub modes: Vec<Vec<C64>>,
}

impl TransverseProfile {
    pub fn cell_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.n_cells];
        for f in &self.modes {
            for (i, z) in f.iter().enumerate() {
                mass[i / self.points_per_cell] += z.norm_sqr();
            }
        }
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        mass
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.modes
            .iter()
            .zip(&other.modes)
            .map(|(a, b)| cdot(a, b))
            .sum()
    }
}

impl EdgeOperator {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match &self.repr {
            Repr::Dense(h) => h.matvec(x),
            Repr::Sparse(s) => s.matvec(x),
        }
    }

    pub fn dense(&self) -> Option<&CMat> {
        match &self.repr {
            Repr::Dense(h) => Some(h),
            Repr::Sparse(_) => None,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match &self.repr {
            Repr::Dense(h) => h.clone(),
            Repr::Sparse(s) => {
                let mut h = CMat::zeros(self.dim, self.dim);
                for i in 0..self.dim {
                    for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                        h[(i, s.cols[k])] += s.vals[k];
                    }
                }
                h
            }
        }
    }

    /// max |H − H*| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.repr {
            Repr::Dense(h) => h.hermiticity_defect(),
            Repr::Sparse(s) => {
                let mut worst: f64 = 0.0;
                for i in 0..self.dim {
                    for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                        let j = s.cols[k];
                        worst = worst.max((s.vals[k] - s.get(j, i).conj()).norm());
                    }
                }
                worst
            }
        }
    }

    fn banded_shifted(&self, s: &Csr, shift: f64) -> BandedMatrix {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.dim {
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                let j = s.cols[k];
                kl = kl.max(i.saturating_sub(j));
                ku = ku.max(j.saturating_sub(i));
            }
        }
        let mut b = BandedMatrix::zeros(self.dim, kl, ku);
        for i in 0..self.dim {
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                b.add(i, s.cols[k], s.vals[k]);
            }
            b.add(i, i, C64::new(-shift, 0.0));
        }
        b
    }

    /// Transverse profiles of a coefficient vector; plane waves are sampled at
    /// `points_per_cell` points per cell.
    pub fn profile(&self, x: &[C64], points_per_cell: usize) -> TransverseProfile {
        let cfg = &self.config;
        let nm = cfg.modes();
        match cfg.transverse {
            Transverse::Grid {
                points_per_cell: p, ..
            } => {
                let np = cfg.n_cells * p;
                let modes = (0..nm)
                    .map(|a| (0..np).map(|i| x[ring_position(i, np) * nm + a]).collect())
                    .collect();
                TransverseProfile {
                    points_per_cell: p,
                    n_cells: cfg.n_cells,
                    modes,
                }
            }
            Transverse::PlaneWave => {
                let jmax = (cfg.n_cells * cfg.m2) as i64;
                let nj = (2 * jmax + 1) as usize;
                let np = cfg.n_cells * points_per_cell;
                let t = cfg.twist / (2.0 * PI);
                let n = cfg.n_cells as f64;
                let mut modes = vec![vec![C64::new(0.0, 0.0); np]; nm];
                for (i, tau) in (0..np).map(|i| (i, i as f64 / points_per_cell as f64)) {
                    let base = C64::from_polar(1.0, 2.0 * PI * (-(jmax as f64) + t) * tau / n);
                    let step = C64::from_polar(1.0, 2.0 * PI * tau / n);
                    for (a, f) in modes.iter_mut().enumerate() {
                        let mut e = base;
                        let mut acc = C64::new(0.0, 0.0);
                        for c in &x[a * nj..(a + 1) * nj] {
                            acc += c * e;
                            e *= step;
                        }
                        f[i] = acc;
                    }
                }
                TransverseProfile {
                    points_per_cell,
                    n_cells: cfg.n_cells,
                    modes,
                }
            }
        }
    }

    /// (m1, j, coefficient) for plane waves, (m1, grid point, value) on the grid.
    pub fn coefficient_table(&self, x: &[C64]) -> Vec<(i64, i64, C64)> {
        let cfg = &self.config;
        let nm = cfg.modes();
        let m1max = cfg.m1 as i64;
        match cfg.transverse {
            Transverse::PlaneWave => {
                let jmax = (cfg.n_cells * cfg.m2) as i64;
                let nj = (2 * jmax + 1) as usize;
                (0..self.dim)
                    .map(|k| ((k / nj) as i64 - m1max, (k % nj) as i64 - jmax, x[k]))
                    .collect()
            }
            Transverse::Grid { points_per_cell, .. } => {
                let np = cfg.n_cells * points_per_cell;
                let mut out = Vec::with_capacity(self.dim);
                for i in 0..np {
                    for a in 0..nm {
                        out.push((a as i64 - m1max, i as i64, x[ring_position(i, np) * nm + a]));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeState {
    pub energy: f64,
    #[serde(skip)]
    pub coeffs: Vec<C64>,
    pub residual: f64,
    /// mass-weighted center in cells, in [0, N)
    pub transverse_center: f64,
    /// fitted amplitude decay per unit of 𝔎₂·x
    pub decay_rate: f64,
    pub decay_fit_r2: f64,
    pub ipr: f64,
    pub is_localized: bool,
    #[serde(skip)]
    pub cell_mass: Vec<f64>,
}

/// Samples per cell used when plane-wave states are mapped to real space.
const PROFILE_SAMPLES: usize = 16;

struct Localization {
    center: f64,
    rate_per_cell: f64,
    r2: f64,
    ipr: f64,
}

fn localization(cfg: &SupercellConfig, mass: &[f64]) -> Localization {
    let n = mass.len();
    let ipr = mass.iter().map(|m| m * m).sum::<f64>();
    let (c0, top) = mass
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let quarter = n as f64 / 4.0;
    let wrap = |i: usize| -> f64 {
        let d = i as f64 - c0 as f64;
        d - n as f64 * (d / n as f64).round()
    };
    let (mut s0, mut s1) = (0.0, 0.0);
    for (i, &m) in mass.iter().enumerate() {
        let d = wrap(i);
        if d.abs() <= quarter {
            s0 += m;
            s1 += m * d;
        }
    }
    let center = (c0 as f64 + 0.5 + if s0 > 0.0 { s1 / s0 } else { 0.0 }).rem_euclid(n as f64);
    // fit the tail between the wall core and a quarter of the supercell
    let core = if cfg.delta > 0.0 {
        (3.0 * cfg.wall.width + cfg.wall.core_extent()) / (2.0 * PI * cfg.delta)
    } else {
        0.0
    };
    let lo = core.max(2.0);
    let floor = 1e-13 * top;
    let pts: Vec<(f64, f64)> = mass
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| {
            let d = (i as f64 + 0.5 - center).rem_euclid(n as f64);
            let d = d.min(n as f64 - d);
            (d >= lo && d <= quarter && m > floor).then(|| (d, m.ln()))
        })
        .collect();
    let (rate, r2) = linear_fit(&pts)
        .filter(|f| f.0 < 0.0)
        .map(|(slope, r2)| (-0.5 * slope, r2))
        .unwrap_or((0.0, 0.0));
    Localization {
        center,
        rate_per_cell: rate,
        r2,
        ipr,
    }
}

/// Least-squares slope and R² of y against x; None for fewer than 4 points.
fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, sxy * sxy / (sxx * syy)))
}

impl EdgeOperator {
    pub fn edge_state(&self, energy: f64, coeffs: Vec<C64>, residual: f64) -> EdgeState {
        let prof = self.profile(&coeffs, PROFILE_SAMPLES);
        let mass = prof.cell_mass();
        let loc = localization(&self.config, &mass);
        let threshold = 4.0 / self.config.n_cells as f64;
        EdgeState {
            energy,
            coeffs,
            residual,
            transverse_center: loc.center,
            decay_rate: loc.rate_per_cell / (2.0 * PI),
            decay_fit_r2: loc.r2,
            ipr: loc.ipr,
            is_localized: loc.ipr >= threshold && loc.r2 > 0.95,
            cell_mass: mass,
        }
    }
}

/// The n_eigs eigenpairs nearest `target`, sorted by energy.
pub fn solve_near(op: &EdgeOperator, target: f64, n_eigs: usize) -> Result<Vec<EdgeState>> {
    if n_eigs == 0 {
        return invalid("n_eigs must be positive");
    }
    let pairs: Vec<(f64, Vec<C64>, f64)> = match &op.repr {
        Repr::Dense(h) => {
            let eig = eigh_complex(h, EigRange::All)?;
            let mut order: Vec<usize> = (0..eig.values.len()).collect();
            order.sort_by(|&a, &b| {
                (eig.values[a] - target)
                    .abs()
                    .partial_cmp(&(eig.values[b] - target).abs())
                    .unwrap()
            });
            order
                .into_iter()
                .take(n_eigs)
                .map(|k| {
                    let x = eig.vectors.col(k).to_vec();
                    let hx = h.matvec(&x);
                    let r = cnorm(&hx.iter().zip(&x).map(|(a, b)| a - eig.values[k] * b).collect::<Vec<_>>());
                    (eig.values[k], x, r)
                })
                .collect()
        }
        Repr::Sparse(s) => {
            let apply = |x: &[C64]| s.matvec(x);
            let scale = 1.0 + target.abs();
            let mut last_err = None;
            let mut found = None;
            // a shift within roundoff of an eigenvalue spoils the solves for the rest of the
            // cluster, so on failure the shift moves off the target and a few extra pairs are kept
            'shifts: for offset in [0.0, 1e-4, -2.7e-4, 7.3e-4] {
                let shift = target + offset * scale;
                let nev = if offset == 0.0 { n_eigs } else { n_eigs + 4 };
                let lu = match op.banded_shifted(s, shift).factorize() {
                    Ok(lu) => lu,
                    Err(e) => {
                        last_err = Some(e);
                        continue;
                    }
                };
                // clustered spectra near the shift can need a larger Krylov space
                let mut max_dim = (3 * nev + 30).min(op.dim);
                loop {
                    let opts = LanczosOptions {
                        nev,
                        max_dim,
                        tol: 1e-9,
                        seed: 11,
                    };
                    match shift_invert_lanczos(op.dim, shift, &lu, &apply, opts) {
                        Ok(p) => {
                            found = Some(p);
                            break 'shifts;
                        }
                        Err(Error::Numeric(_)) if max_dim < op.dim.min(16 * nev + 160) => {
                            max_dim = (2 * max_dim).min(op.dim)
                        }
                        Err(e) => {
                            last_err = Some(e);
                            continue 'shifts;
                        }
                    }
                }
            }
            let mut pairs = match found {
                Some(p) => p,
                None => return Err(last_err.unwrap()),
            };
            pairs.sort_by(|a, b| (a.value - target).abs().total_cmp(&(b.value - target).abs()));
            pairs.truncate(n_eigs);
            pairs.into_iter().map(|p| (p.value, p.vector, p.residual)).collect()
        }
    };
    let mut states: Vec<EdgeState> = pairs
        .into_iter()
        .map(|(e, x, r)| op.edge_state(e, x, r))
        .collect();
    states.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    Ok(states)
}

/// E★ of the same discretization: the K-aligned single cell without wall.
pub fn reference_dirac_energy(v: &FourierPotential, cfg: &SupercellConfig, guess: f64) -> Result<f64> {
    let mut single = cfg.clone();
    single.n_cells = 1;
    single.delta = 0.0;
    let single = single.aligned_with_k(&v.lattice);
    let w0 = FourierPotential::zero(v.lattice);
    let op = assemble_edge(v, &w0, &single)?;
    let eig = eigh_complex(&op.to_dense(), EigRange::All)?;
    let mut near: Vec<f64> = eig.values.clone();
    near.sort_by(|a, b| (a - guess).abs().partial_cmp(&(b - guess).abs()).unwrap());
    let tol = 1e-6 * guess.abs().max(1.0);
    if near.len() < 2 || (near[0] - near[1]).abs() > tol {
        return Err(Error::NotADiracPoint(format!(
            "no degenerate pair near {guess}: nearest levels {:?}",
            &near[..near.len().min(3)]
        )));
    }
    Ok(0.5 * (near[0] + near[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    Delta,
    KPar,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub energy: f64,
    pub is_localized: bool,
    pub ipr: f64,
    pub decay_rate: f64,
    pub transverse_center: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSweep {
    pub axis: SweepAxis,
    pub target: f64,
    pub values: Vec<f64>,
    pub spectra: Vec<Vec<SweepPoint>>,
}

impl SpectrumSweep {
    /// axis_value, E, is_localized, ipr, decay_rate
    pub fn rows(&self) -> Vec<(f64, f64, bool, f64, f64)> {
        self.values
            .iter()
            .zip(&self.spectra)
            .flat_map(|(&x, s)| s.iter().map(move |p| (x, p.energy, p.is_localized, p.ipr, p.decay_rate)))
            .collect()
    }

    /// max over k∥ ↔ 2π − k∥ pairs present in the sweep of the spectral mismatch.
    pub fn reflection_defect(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (i, &k) in self.values.iter().enumerate() {
            let mirror = (2.0 * PI - k).rem_euclid(2.0 * PI);
            let Some(j) = self
                .values
                .iter()
                .position(|&x| ((x - mirror + PI).rem_euclid(2.0 * PI) - PI).abs() < 1e-9)
            else {
                continue;
            };
            let a: Vec<f64> = self.spectra[i].iter().map(|p| p.energy).collect();
            let b: Vec<f64> = self.spectra[j].iter().map(|p| p.energy).collect();
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
        worst
    }

    /// Localized energies per axis value.
    pub fn localized(&self) -> Vec<(f64, Vec<f64>)> {
        self.values
            .iter()
            .zip(&self.spectra)
            .map(|(&x, s)| (x, s.iter().filter(|p| p.is_localized).map(|p| p.energy).collect()))
            .collect()
    }
}

fn sweep_points(states: &[EdgeState]) -> Vec<SweepPoint> {
    states
        .iter()
        .map(|s| SweepPoint {
            energy: s.energy,
            is_localized: s.is_localized,
            ipr: s.ipr,
            decay_rate: s.decay_rate,
            transverse_center: s.transverse_center,
        })
        .collect()
}

pub fn sweep_delta(
    v: &FourierPotential,
    w: &FourierPotential,
    template: &SupercellConfig,
    deltas: &[f64],
    target: f64,
    n_eigs: usize,
) -> Result<SpectrumSweep> {
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return invalid("δ grid must be positive");
    }
    let spectra = deltas
        .par_iter()
        .map(|&d| {
            let cfg = SupercellConfig {
                delta: d,
                ..template.clone()
            };
            let op = assemble_edge(v, w, &cfg)?;
            Ok(sweep_points(&solve_near(&op, target, n_eigs)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep {
        axis: SweepAxis::Delta,
        target,
        values: deltas.to_vec(),
        spectra,
    })
}

pub fn sweep_kpar(
    v: &FourierPotential,
    w: &FourierPotential,
    template: &SupercellConfig,
    kpars: &[f64],
    target: f64,
    n_eigs: usize,
) -> Result<SpectrumSweep> {
    let spectra = kpars
        .par_iter()
        .map(|&k| {
            let cfg = SupercellConfig {
                k_par: k.rem_euclid(2.0 * PI),
                ..template.clone()
            };
            let op = assemble_edge(v, w, &cfg)?;
            Ok(sweep_points(&solve_near(&op, target, n_eigs)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep {
        axis: SweepAxis::KPar,
        target,
        values: kpars.to_vec(),
        spectra,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiscaleReport {
    /// 1 − |⟨Ψ⁽⁰⁾, Ψ^δ⟩| for normalized states
    pub overlap_defect: f64,
    pub fitted_rate: f64,
    /// δ ϑ♯ κ∞ / (|λ♯| |𝔎₂|) per unit of 𝔎₂·x
    pub predicted_rate: f64,
    pub rate_rel_error: f64,
    /// +1 for the wall at τ₂ = 0, −1 for the mirrored wall at N/2
    pub wall_side: i8,
}

/// Compares a localized state with α★,₊(ζ)Φ₊ + α★,₋(ζ)Φ₋ built on the wall it sits on.
pub fn compare_multiscale(op: &EdgeOperator, state: &EdgeState, dp: &DiracPointData) -> Result<MultiscaleReport> {
    if !state.is_localized {
        return invalid("state is not localized");
    }
    let cfg = &op.config;
    let theta = dp
        .theta_sharp
        .ok_or_else(|| Error::Configuration("Dirac point data carries no ϑ♯".into()))?;
    let lat = &dp.lattice;
    let kc = k_edge_coords(lat, &cfg.edge);
    let shift = kc[0] - cfg.k_par / (2.0 * PI);
    if (shift - shift.round()).abs() > 1e-9 {
        return invalid("k∥ differs from K·𝔳₁, so Φ± do not live on this cylinder");
    }
    let shift = shift.round() as i64;
    let n = cfg.n_cells as f64;
    let side: i8 = if (state.transverse_center - n / 2.0).abs() < n / 4.0 { -1 } else { 1 };
    let origin = if side > 0 { 0.0 } else { n / 2.0 };
    let wall = if side > 0 {
        cfg.wall.clone()
    } else {
        let inner = cfg.wall.clone();
        DomainWall::custom("mirrored", inner.kappa_inf, inner.width, move |z| inner.value(-z))
    };
    let v_f = dp.lambda.fourier_abs() * norm(cfg.edge.frak_k2);
    let mode = zero_mode_exact(v_f, theta, &wall)?;
    let (phi_p, phi_m) = dp.phi_pm(cfg.edge.frak_k2);

    let prof = op.profile(&state.coeffs, PROFILE_SAMPLES);
    let p = prof.points_per_cell;
    let np = cfg.n_cells * p;
    let nm = cfg.modes();
    let mut model = vec![vec![C64::new(0.0, 0.0); np]; nm];
    for (m, (cp, cm)) in dp.indices.iter().zip(phi_p.iter().zip(&phi_m)) {
        let (n1, n2) = cfg.edge.edge_from_dual(*m);
        let a = n1 + shift + cfg.m1 as i64;
        if a < 0 || a >= nm as i64 {
            continue;
        }
        for (i, f) in model[a as usize].iter_mut().enumerate() {
            let tau = i as f64 / p as f64;
            let raw = tau - origin;
            let wraps = (raw / n).round();
            let s = raw - n * wraps;
            let al = mode.alpha(2.0 * PI * cfg.delta * s);
            // f(τ₂ + N) = e^{i twist} f(τ₂) carries the unwrapped carrier across the seam
            let carrier = C64::from_polar(1.0, 2.0 * PI * (kc[1] + n2 as f64) * (origin + s) + cfg.twist * wraps);
            *f += (al[0] * cp + al[1] * cm) * carrier;
        }
    }
    let model = TransverseProfile {
        points_per_cell: p,
        n_cells: cfg.n_cells,
        modes: model,
    };
    let ov = model.inner(&prof).norm() / (model.inner(&model).re * prof.inner(&prof).re).sqrt();
    let predicted = cfg.delta * mode.beta;
    Ok(MultiscaleReport {
        overlap_defect: 1.0 - ov,
        fitted_rate: state.decay_rate,
        predicted_rate: predicted,
        rate_rel_error: (state.decay_rate - predicted).abs() / predicted,
        wall_side: side,
    })
}

/// Bloch modes of the δ = 0 supercell grouped by transverse residue r: quasi-momentum
/// (k∥/2π)𝔎₁ + ((r + twist/2π)/N)𝔎₂ on the indices (m1, j) with j ≡ r mod N.
pub struct CylinderBasis {
    pub lambdas: Vec<f64>,
    pub n_bands: usize,
    /// per residue: plane-wave positions and band vectors (columns)
    blocks: Vec<(Vec<usize>, CMat, Vec<f64>)>,
    dim: usize,
}

#[derive(Debug, Clone)]
pub struct CylinderTransform {
    pub lambdas: Vec<f64>,
    /// coeffs[r][b] = f̃_b(λ_r)
    pub coeffs: Vec<Vec<C64>>,
    /// ‖f − Σ f̃ Φ‖ / ‖f‖, nonzero when f is not carried by the kept bands
    pub truncation_residual: f64,
}

impl CylinderBasis {
    pub fn new(v_scaled: &FourierPotential, cfg: &SupercellConfig, n_bands: usize) -> Result<Self> {
        if cfg.transverse != Transverse::PlaneWave {
            return invalid("the cylinder transform works on plane-wave coefficients");
        }
        let n = cfg.n_cells as i64;
        let jmax = n * cfg.m2 as i64;
        let nj = (2 * jmax + 1) as usize;
        let t = cfg.twist / (2.0 * PI);
        let mut blocks = Vec::with_capacity(cfg.n_cells);
        let mut lambdas = Vec::with_capacity(cfg.n_cells);
        for r in 0..n {
            let lam = (r as f64 + t) / n as f64;
            let mut pos = vec![];
            let mut duals = vec![];
            for m1 in -(cfg.m1 as i64)..=cfg.m1 as i64 {
                for j in -jmax..=jmax {
                    if (j - r).rem_euclid(n) != 0 {
                        continue;
                    }
                    let n2 = (j - r).div_euclid(n);
                    pos.push((m1 + cfg.m1 as i64) as usize * nj + (j + jmax) as usize);
                    duals.push(cfg.edge.dual_from_edge((m1, n2)));
                }
            }
            if n_bands == 0 {
                return invalid("at least one band is needed");
            }
            // residue classes differ in size by one column; keep what each can hold
            let bands = n_bands.min(pos.len());
            let k = [
                cfg.k_par / (2.0 * PI) * cfg.edge.frak_k1[0] + lam * cfg.edge.frak_k2[0],
                cfg.k_par / (2.0 * PI) * cfg.edge.frak_k1[1] + lam * cfg.edge.frak_k2[1],
            ];
            let fiber = assemble_on_basis(v_scaled, k, PlaneWaveBasis::from_indices(duals), 0);
            let eig = eigh_complex(&fiber.h, EigRange::Index(0, bands - 1))?;
            blocks.push((pos, eig.vectors, eig.values));
            lambdas.push(lam);
        }
        Ok(Self {
            lambdas,
            n_bands,
            blocks,
            dim: cfg.dimension(),
        })
    }

    pub fn band_energies(&self, r: usize) -> &[f64] {
        &self.blocks[r].2
    }

    /// Plane-wave coefficients of Φ_b(·; λ_r) in the supercell basis.
    pub fn mode(&self, r: usize, b: usize) -> Vec<C64> {
        let (pos, vecs, _) = &self.blocks[r];
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (p, c) in pos.iter().zip(vecs.col(b)) {
            out[*p] = *c;
        }
        out
    }

    pub fn forward(&self, f: &[C64]) -> Result<CylinderTransform> {
        if f.len() != self.dim {
            return invalid("coefficient vector does not match the supercell");
        }
        let coeffs: Vec<Vec<C64>> = self
            .blocks
            .iter()
            .map(|(pos, vecs, vals)| {
                (0..vals.len())
                    .map(|b| pos.iter().zip(vecs.col(b)).map(|(p, c)| c.conj() * f[*p]).sum())
                    .collect()
            })
            .collect();
        let mut tr = CylinderTransform {
            lambdas: self.lambdas.clone(),
            coeffs,
            truncation_residual: 0.0,
        };
        let back = self.inverse(&tr)?;
        let nf = cnorm(f);
        let diff = cnorm(&back.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>());
        tr.truncation_residual = if nf > 0.0 { diff / nf } else { 0.0 };
        Ok(tr)
    }

    pub fn inverse(&self, tr: &CylinderTransform) -> Result<Vec<C64>> {
        if tr.coeffs.len() != self.blocks.len() || tr.coeffs.iter().zip(&self.blocks).any(|(c, b)| c.len() != b.2.len()) {
            return invalid("transform does not match the cylinder basis");
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for ((pos, vecs, _), c) in self.blocks.iter().zip(&tr.coeffs) {
            for (b, cb) in c.iter().enumerate() {
                for (p, x) in pos.iter().zip(vecs.col(b)) {
                    out[*p] += cb * x;
                }
            }
        }
        Ok(out)
    }
}

impl CylinderTransform {
    /// Σ_b Σ_r |f̃_b(λ_r)|².
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum()
    }
}

pub fn cylinder_bloch_transform(
    f: &[C64],
    v_scaled: &FourierPotential,
    cfg: &SupercellConfig,
    n_bands: usize,
) -> Result<CylinderTransform> {
    CylinderBasis::new(v_scaled, cfg, n_bands)?.forward(f)
}

pub fn inverse_cylinder_bloch_transform(
    tr: &CylinderTransform,
    v_scaled: &FourierPotential,
    cfg: &SupercellConfig,
) -> Result<Vec<C64>> {
    let n_bands = tr.coeffs.iter().map(|c| c.len()).max().unwrap_or(0);
    CylinderBasis::new(v_scaled, cfg, n_bands)?.inverse(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::band_energies;
    use crate::geometry::{edge_frame, TriangularLattice};
    use crate::potential::builtin_potentials;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn central_weights_are_exact_on_polynomials() {
        for r in 1..=8 {
            let (d1, d2) = central_weights(r);
            for p in 0..=2 * r {
                // derivatives of x^p at 0 from samples at integers
                let f = |k: i64| (k as f64).powi(p as i32);
                let first: f64 = (1..=r).map(|k| d1[k] * (f(k as i64) - f(-(k as i64)))).sum();
                let second: f64 = d2[0] * f(0) + (1..=r).map(|k| d2[k] * (f(k as i64) + f(-(k as i64)))).sum::<f64>();
                let e1 = if p == 1 { 1.0 } else { 0.0 };
                let e2 = if p == 2 { 2.0 } else { 0.0 };
                assert!((first - e1).abs() < 1e-9 * (1.0 + (r as f64).powi(p as i32)), "r={r} p={p}");
                assert!((second - e2).abs() < 1e-9 * (1.0 + (r as f64).powi(p as i32)), "r={r} p={p}");
            }
        }
    }

    #[test]
    fn ring_ordering_is_a_permutation() {
        for n in [2usize, 6, 10] {
            let mut seen: Vec<usize> = (0..n).map(|i| ring_position(i, n)).collect();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            for i in 0..n {
                let j = (i + 1) % n;
                assert!(ring_position(i, n).abs_diff(ring_position(j, n)) <= 2);
            }
        }
    }

    #[test]
    fn free_operator_is_diagonal() {
        let lat = TriangularLattice::unit();
        let edge = edge_frame(&lat, 1, 0).unwrap();
        let zero = FourierPotential::zero(lat);
        let wall = DomainWall::tanh(1.0, 1.0).unwrap();
        let mut cfg = SupercellConfig::new(edge, 5, 1.0, 0.0, wall);
        cfg.m1 = 2;
        cfg.m2 = 2;
        cfg.k_par = 0.7;
        cfg.twist = 0.4;
        let op = assemble_edge(&zero, &zero, &cfg).unwrap();
        let h = op.dense().unwrap();
        for (a, j, _) in op.coefficient_table(&vec![C64::new(0.0, 0.0); op.dim]).iter().enumerate().map(|(k, t)| (k, t.1, t.0)) {
            let m1 = op.coefficient_table(&vec![C64::new(0.0, 0.0); op.dim])[a].0;
            let s1 = cfg.k_par / (2.0 * PI) + m1 as f64;
            let s2 = (j as f64 + cfg.twist / (2.0 * PI)) / 5.0;
            let p = [
                s1 * edge.frak_k1[0] + s2 * edge.frak_k2[0],
                s1 * edge.frak_k1[1] + s2 * edge.frak_k2[1],
            ];
            assert!((h[(a, a)].re - dot(p, p)).abs() < 1e-12 * dot(p, p).max(1.0));
            for b in 0..op.dim {
                if b != a {
                    assert_eq!(h[(a, b)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_delta_decouples_into_bulk_fibers() {
        let lat = TriangularLattice::unit();
        let (v, w) = builtin_potentials(lat);
        let edge = edge_frame(&lat, 1, 0).unwrap();
        let wall = DomainWall::tanh(1.0, 1.0).unwrap();
        let n = 4i64;
        let mut cfg = SupercellConfig::new(edge, n as usize, 1.5, 0.0, wall);
        cfg.m1 = 3;
        cfg.m2 = 2;
        cfg.k_par = 1.3;
        cfg.twist = 0.9;
        let op = assemble_edge(&v, &w, &cfg).unwrap();
        let h = op.dense().unwrap();
        let table = op.coefficient_table(&vec![C64::new(0.0, 0.0); op.dim]);
        let mut leak: f64 = 0.0;
        for a in 0..op.dim {
            for b in 0..op.dim {
                if (table[a].1 - table[b].1).rem_euclid(n) != 0 {
                    leak = leak.max(h[(a, b)].norm());
                }
            }
        }
        assert_eq!(leak, 0.0);
        let full = sorted(eigh_complex(h, EigRange::All).unwrap().values);
        let mut union = vec![];
        let vs = v.scaled(1.5);
        for r in 0..n {
            let lam = (r as f64 + cfg.twist / (2.0 * PI)) / n as f64;
            let mut duals = vec![];
            for (m1, j, _) in &table {
                if (j - r).rem_euclid(n) == 0 {
                    duals.push(edge.dual_from_edge((*m1, (j - r).div_euclid(n))));
                }
            }
            let k = [
                cfg.k_par / (2.0 * PI) * edge.frak_k1[0] + lam * edge.frak_k2[0],
                cfg.k_par / (2.0 * PI) * edge.frak_k1[1] + lam * edge.frak_k2[1],
            ];
            let fiber = assemble_on_basis(&vs, k, PlaneWaveBasis::from_indices(duals), 0);
            union.extend(eigh_complex(&fiber.h, EigRange::All).unwrap().values);
            // the lowest levels agree with the converged disc-basis fiber
            let edge_low = sorted(eigh_complex(&fiber.h, EigRange::All).unwrap().values);
            let disc = band_energies(&vs, k, 8, 2).unwrap();
            assert!((edge_low[0] - disc[0]).abs() < 1e-4, "{} vs {}", edge_low[0], disc[0]);
        }
        let union = sorted(union);
        assert_eq!(union.len(), full.len());
        let worst = union.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "decoupling mismatch {worst:e}");
    }

    fn wall_config(transverse: Transverse) -> (FourierPotential, FourierPotential, SupercellConfig) {
        let lat = TriangularLattice::unit();
        let (v, w) = builtin_potentials(lat);
        let edge = edge_frame(&lat, 1, 0).unwrap();
        let wall = DomainWall::tanh(8.0, 1.0).unwrap();
        let mut cfg = SupercellConfig::new(edge, 32, 1.0, 0.1, wall);
        cfg.m1 = 3;
        cfg.m2 = 3;
        cfg.transverse = transverse;
        (v, w, cfg)
    }

    #[test]
    fn hermitian_in_both_discretizations() {
        for t in [
            Transverse::PlaneWave,
            Transverse::Grid {
                points_per_cell: 8,
                half_width: 4,
            },
        ] {
            let (v, w, mut cfg) = wall_config(t);
            cfg.twist = 1.1;
            let op = assemble_edge(&v, &w, &cfg).unwrap();
            assert!(op.hermiticity_defect() < 1e-13, "{t:?}: {}", op.hermiticity_defect());
        }
    }

    #[test]
    fn short_supercell_is_rejected() {
        let (v, w, mut cfg) = wall_config(Transverse::PlaneWave);
        cfg.delta = 0.05;
        assert!(matches!(assemble_edge(&v, &w, &cfg), Err(Error::Configuration(_))));
        cfg.delta = 0.1;
        cfg.m2 = 1;
        assert!(matches!(assemble_edge(&v, &w, &cfg), Err(Error::Configuration(_))));
    }

    #[test]
    fn grid_matches_plane_waves_near_the_dirac_energy() {
        let (v, w, pw) = wall_config(Transverse::PlaneWave);
        let grid = SupercellConfig {
            transverse: Transverse::Grid {
                points_per_cell: 16,
                half_width: 8,
            },
            ..pw.clone()
        };
        let target = reference_dirac_energy(&v, &pw, 17.0).unwrap();
        let a = solve_near(&assemble_edge(&v, &w, &pw).unwrap(), target, 6).unwrap();
        let b = solve_near(&assemble_edge(&v, &w, &grid).unwrap(), target, 6).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.energy - y.energy).abs() < 1e-6, "{} vs {}", x.energy, y.energy);
            assert!(x.residual < 1e-8 * (1.0 + x.energy.abs()));
            assert!(y.residual < 1e-8 * (1.0 + y.energy.abs()));
        }
    }

    #[test]
    fn cylinder_transform_of_free_functions_is_fourier() {
        let lat = TriangularLattice::unit();
        let edge = edge_frame(&lat, 1, 0).unwrap();
        let zero = FourierPotential::zero(lat);
        let mut cfg = SupercellConfig::new(edge, 3, 0.0, 0.0, DomainWall::tanh(1.0, 1.0).unwrap());
        cfg.m1 = 2;
        cfg.m2 = 2;
        cfg.k_par = 0.37;
        cfg.twist = 0.21;
        let basis = CylinderBasis::new(&zero, &cfg, 100).unwrap();
        let f: Vec<C64> = (0..cfg.dimension())
            .map(|k| C64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
            .collect();
        let tr = basis.forward(&f).unwrap();
        assert!(tr.truncation_residual < 1e-12);
        let mut a: Vec<f64> = f.iter().map(|z| z.norm()).collect();
        let mut b: Vec<f64> = tr.coeffs.iter().flatten().map(|z| z.norm()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
