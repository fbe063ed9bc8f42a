//! Acceptance suite: eleven numbered criteria, each a list of named checks with a runtime budget.

use crate::bloch::{assemble_fiber, find_dirac_point, perturbative_check, solve_fiber};
use crate::edge::{
    assemble_edge, compare_multiscale, reference_dirac_energy, solve_near, sweep_kpar, CylinderBasis, EdgeState,
    SupercellConfig,
};
use crate::effective::{
    band_curvature, dirac_spectrum, e2_coefficient, natural_wall_search, protection_homotopy, Discretization,
    DiracOperator1D, EffectiveSchrodinger,
};
use crate::error::Result;
use crate::geometry::{add, dot, norm, EdgeFrame, TriangularLattice};
use crate::linalg::{cnorm, C64};
use crate::potential::{builtin_potentials, BumpSpec, BumpStructure, CompactBump, DomainWall, FourierPotential, RadialBump};
use crate::slice::{free_branches, no_fold_check, slice_crossing, slice_point, ReducedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionReport {
    pub fn within_budget(&self) -> bool {
        self.seconds <= self.budget_seconds
    }

    pub fn pass(&self) -> bool {
        self.within_budget() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    /// One summary line.
    pub fn line(&self) -> String {
        let body: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{}: {}", if c.pass { "" } else { "!" }, c.name, c.detail))
            .collect();
        format!(
            "criterion {:>2} {} {} [{:.1}s / {:.0}s] {}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.budget_seconds,
            body.join("; ")
        )
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn new() -> Self {
        Self { checks: vec![] }
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn error(&mut self, name: &str, e: &crate::error::Error) {
        self.check(name, false, format!("error: {e}"));
    }
}

fn timed(id: u8, title: &str, budget: f64, body: impl FnOnce(&mut Recorder) -> Result<()>) -> CriterionReport {
    let start = Instant::now();
    let mut rec = Recorder::new();
    if let Err(e) = body(&mut rec) {
        rec.error("run", &e);
    }
    CriterionReport {
        id,
        title: title.into(),
        checks: rec.checks,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: budget,
    }
}

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub fn run(id: u8) -> Option<CriterionReport> {
    Some(match id {
        1 => free_fiber(),
        2 => dirac_point(),
        3 => perturbative(),
        4 => reduced_matrix(),
        5 => no_fold(),
        6 => zero_mode(),
        7 => edge_bifurcation(),
        8 => kpar_symmetry(),
        9 => non_protected(),
        10 => cylinder_parseval(),
        11 => v11_scan(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|&id| run(id)).collect()
}

fn builtin() -> (TriangularLattice, FourierPotential, FourierPotential, EdgeFrame) {
    let lat = TriangularLattice::unit();
    let (v, w) = builtin_potentials(lat);
    (lat, v, w, EdgeFrame::zigzag(&lat))
}

/// Least-squares slope and intercept of y against x.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn free_fiber() -> CriterionReport {
    timed(1, "free fiber oracle", 5.0, |r| {
        let lat = TriangularLattice::unit();
        let zero = FourierPotential::zero(lat);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let k = [rng.gen_range(-1.0..1.0) * lat.q, rng.gen_range(-1.0..1.0) * lat.q];
            let fiber = assemble_fiber(&zero, k, 6)?;
            let sol = solve_fiber(&fiber, fiber.basis.len())?;
            let mut exact: Vec<f64> = fiber
                .basis
                .indices
                .iter()
                .map(|&m| {
                    let p = add(k, lat.dual(m));
                    dot(p, p)
                })
                .collect();
            exact.sort_by(f64::total_cmp);
            for (a, b) in sol.energies.iter().zip(&exact) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        r.check("eigenvalues", worst < 1e-12, format!("max rel err {worst:.2e} over 100 k"));
        Ok(())
    })
}

pub fn dirac_point() -> CriterionReport {
    timed(2, "Dirac point at eps = 10", 30.0, |r| {
        let (_, v, _, _) = builtin();
        let dp = find_dirac_point(&v, 10.0, 10, None)?;
        let split = {
            let f = assemble_fiber(&v.scaled(10.0), dp.k, 10)?;
            let s = solve_fiber(&f, dp.b_star + 1)?;
            (s.energies[dp.b_star] - s.energies[dp.b_star - 1]).abs()
        };
        r.check("degeneracy", split < 1e-8, format!("|E1 - E2| = {split:.2e}, E* = {:.10}", dp.e_star));
        r.check(
            "isotropy",
            dp.lambda.anisotropy < 0.01,
            format!("anisotropy {:.2e}, slope {:.6}", dp.lambda.anisotropy, dp.lambda.cone_slope),
        );
        r.check("b* at +10", dp.b_star == 1, format!("b* = {}", dp.b_star));
        match find_dirac_point(&v, -10.0, 10, None) {
            Ok(neg) => r.check("b* at -10", neg.b_star == 2, format!("b* = {}", neg.b_star)),
            Err(e) => r.error("b* at -10", &e),
        }
        Ok(())
    })
}

pub fn perturbative() -> CriterionReport {
    timed(3, "first-order expansions and free cone slope", 60.0, |r| {
        let (lat, v, _, _) = builtin();
        let table = perturbative_check(&v, &[0.01, 0.02, 0.04], 6)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let es = rel(table.fit_e_star, table.expected_e_star);
        let et = rel(table.fit_e_tilde, table.expected_e_tilde);
        r.check(
            "E* slope",
            es < 1e-3,
            format!("{:.8} vs V00 - V11 = {:.8} (rel {es:.1e})", table.fit_e_star, table.expected_e_star),
        );
        r.check(
            "E~ slope",
            et < 1e-3,
            format!("{:.8} vs V00 + 2V11 = {:.8} (rel {et:.1e})", table.fit_e_tilde, table.expected_e_tilde),
        );
        let smallest = find_dirac_point(&v, 1e-3, 6, None)?;
        let slope = smallest.lambda.fourier_abs();
        let to_q = rel(slope, lat.q);
        r.check(
            "free cone slope",
            to_q < 1e-3,
            format!(
                "|lambda#| = {slope:.6} at eps = 1e-3 vs q = {:.6} (rel {to_q:.2e}; q/sqrt3 = {:.6})",
                lat.q,
                lat.q / 3f64.sqrt()
            ),
        );
        Ok(())
    })
}

pub fn reduced_matrix() -> CriterionReport {
    timed(4, "reduced 3x3 model", 10.0, |r| {
        let (_, v, w, _) = builtin();
        let model = ReducedModel::new(&v, &w)?;
        let mut worst: f64 = 0.0;
        for i in 0..101 {
            let lam = -0.5 + i as f64 / 100.0;
            let e = model.eigenvalues(0.0, 0.0, lam)?;
            let f = free_branches(model.q, lam);
            for j in 0..3 {
                worst = worst.max((e[j] - f[j]).abs());
            }
        }
        r.check("free branches", worst < 1e-10, format!("max err {worst:.1e} on 101 points"));
        for sign in [1.0, -1.0] {
            let epsilons = [0.04, 0.02, 0.01, 0.005];
            let mut gaps = vec![];
            for &e in &epsilons {
                let eps = sign * e;
                let delta = e * e;
                let (_, hi) = model.bracket(eps);
                let mut g: f64 = 0.0;
                for i in 0..=40 {
                    let lam = -2.0 * hi + 4.0 * hi * i as f64 / 40.0;
                    g = g.max(model.det_vs_pi(eps, delta, lam).relative_gap);
                }
                gaps.push(g);
            }
            let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
            let ly: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
            let (p, _) = line_fit(&lx, &ly);
            r.check(
                if sign > 0.0 { "det vs pi, eps > 0" } else { "det vs pi, eps < 0" },
                p > 0.0 && gaps.windows(2).all(|g| g[1] < g[0]),
                format!("exponent {p:.3}, gaps {:.2e} .. {:.2e}", gaps[0], gaps[gaps.len() - 1]),
            );
        }
        let mut sym: f64 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let eps = rng.gen_range(-0.1..0.1);
            let delta = rng.gen_range(0.0..0.01);
            let lam = rng.gen_range(-0.5..0.5);
            sym = sym.max((model.det(eps, delta, lam) - model.det(eps, -delta, lam)).abs());
        }
        r.check("delta symmetry", sym < 1e-12, format!("max {sym:.1e}"));
        Ok(())
    })
}

pub fn no_fold() -> CriterionReport {
    timed(5, "no-fold certification", 120.0, |r| {
        let (lat, v, w, zigzag) = builtin();
        let m = 6;
        let grid = 513;
        let dp = find_dirac_point(&v, 0.2, m, None)?;
        let rep = no_fold_check(&v.scaled(0.2), &zigzag, &dp, 1e-4, 0.5, m, grid)?;
        r.check(
            "zigzag +0.2 passes",
            rep.pass,
            format!("c1 pointwise {:.3}, c2 {:.3e}", rep.c1_pointwise, rep.c2),
        );
        let v11 = v.get((1, 1)).re;
        let bound = lat.q.powi(4) / 2.0 * (v11 * 0.2).abs();
        let ratio = rep.c1_pointwise / bound;
        r.check(
            "c1 within factor 2",
            (0.5..=2.0).contains(&ratio),
            format!("min |E - E*|/lambda^2 = {:.3} vs (q^4/2)|V11 eps| = {bound:.3} (ratio {ratio:.3})", rep.c1_pointwise),
        );

        let dn = find_dirac_point(&v, -0.2, m, None)?;
        let vn = v.scaled(-0.2);
        let rep = no_fold_check(&vn, &zigzag, &dn, 1e-4, 0.5, m, grid)?;
        let model = ReducedModel::new(&v, &w)?;
        let (lo, hi) = model.bracket(-0.2);
        let wl = rep.witness_lambda.unwrap_or(f64::NAN);
        r.check(
            "zigzag -0.2 fails inside bracket",
            !rep.pass && wl.abs() > lo && wl.abs() < hi,
            format!("witness {wl:.6} in ({lo:.5}, {hi:.5})"),
        );
        let band = rep.witness_band.unwrap_or(dn.b_star);
        let root = model.find_fold_crossing(-0.2, 0.0)?;
        let full = slice_crossing(&vn, &zigzag, &dn, band, lo, hi, m)
            .or_else(|_| slice_crossing(&vn, &zigzag, &dn, band, -hi, -lo, m).map(|x| -x))?;
        r.check(
            "reduced root vs full crossing",
            (root - full).abs() < 1e-3,
            format!("{root:.6} vs {full:.6}"),
        );

        let armchair = EdgeFrame::armchair(&lat);
        let rep = no_fold_check(&v.scaled(0.2), &armchair, &dp, 1e-4, 0.5, m, grid)?;
        let wl = rep.witness_lambda.unwrap_or(f64::NAN);
        let touch = crate::bloch::band_energies(&v.scaled(0.2), slice_point(dp.k, &armchair, wl), m, dp.b_star)?
            [dp.b_star - 1]
            - dp.e_star;
        r.check(
            "armchair fails at -1/3",
            !rep.pass && (wl + 1.0 / 3.0).abs() < 1e-6 && touch.abs() < 1e-6,
            format!("witness {wl:.9}, |E_b* - E*| = {:.1e}", touch.abs()),
        );
        Ok(())
    })
}

pub fn zero_mode() -> CriterionReport {
    timed(6, "Dirac zero mode", 10.0, |r| {
        let (_, v, w, zigzag) = builtin();
        let dp = find_dirac_point(&v, 10.0, 8, None)?.with_theta(&w)?;
        let v_f = dp.lambda.fourier_abs() * norm(zigzag.frak_k2);
        let theta = dp.theta_sharp.unwrap_or(0.0);
        // κ∞ chosen so that the decay length is one wall width
        let kinf = v_f / theta.abs();
        let wall = DomainWall::tanh(kinf, 1.0)?;
        let d = DiracOperator1D::new(v_f, theta, wall.clone(), 28.0, 511, Discretization::FourierSpectral)?;
        let s = dirac_spectrum(&d, 6)?;
        r.check("zero eigenvalue", s.zero_value.abs() < 1e-8, format!("|E0| = {:.1e}", s.zero_value.abs()));
        r.check("closed form", s.mode_error < 1e-6, format!("L2 err {:.1e}", s.mode_error));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let bumps = (0..rng.gen_range(1..=3))
                .map(|_| CompactBump {
                    center: rng.gen_range(-4.0..4.0),
                    radius: rng.gen_range(0.5..2.0),
                    amplitude: rng.gen_range(-1.0..1.0) * kinf,
                })
                .collect();
            let bumped = wall.with_bumps(bumps)?;
            let d = DiracOperator1D::new(v_f, theta, bumped, 28.0, 511, Discretization::FourierSpectral)?;
            worst = worst.max(dirac_spectrum(&d, 6)?.zero_value.abs());
        }
        r.check("bump invariance", worst < 1e-8, format!("max |E0| {worst:.1e} over 10 walls"));
        Ok(())
    })
}

/// Wall-side (center near 0) and anti-wall-side (center near N/2) localized states.
fn split_sides(states: &[EdgeState], n: usize) -> (Option<&EdgeState>, Option<&EdgeState>) {
    let n = n as f64;
    let dist = |c: f64, at: f64| {
        let d = (c - at).rem_euclid(n);
        d.min(n - d)
    };
    let pick = |at: f64| {
        states
            .iter()
            .filter(|s| s.is_localized && dist(s.transverse_center, at) < n / 8.0)
            .min_by(|a, b| dist(a.transverse_center, at).total_cmp(&dist(b.transverse_center, at)))
    };
    (pick(0.0), pick(n / 2.0))
}

fn large_eps_config(lat: &TriangularLattice, edge: EdgeFrame, n: usize, delta: f64) -> Result<SupercellConfig> {
    let mut c = SupercellConfig::new(edge, n, 10.0, delta, DomainWall::tanh(50.0, 1.0)?)
        .with_grid(16, 8)
        .aligned_with_k(lat);
    c.m1 = 4;
    Ok(c)
}

pub fn edge_bifurcation() -> CriterionReport {
    timed(7, "edge bifurcation at k_par = 2pi/3", 1800.0, |r| {
        let (lat, v, w, zigzag) = builtin();

        // doublet at ε = 10, N = 64
        let dp10 = find_dirac_point(&v, 10.0, 8, None)?.with_theta(&w)?;
        let base = large_eps_config(&lat, zigzag, 64, 0.1)?;
        let target = reference_dirac_energy(&v, &base, dp10.e_star)?;
        let deltas = [0.05, 0.075, 0.1, 0.15, 0.2, 0.3];
        let mut missing = vec![];
        let mut large_eps = vec![];
        let mut rate_check = None;
        for &d in &deltas {
            let cfg = SupercellConfig { delta: d, ..base.clone() };
            let op = assemble_edge(&v, &w, &cfg)?;
            let states = solve_near(&op, target, 24)?;
            match split_sides(&states, cfg.n_cells) {
                (Some(a), Some(_)) => {
                    large_eps.push((d, a.energy - target));
                    if rate_check.is_none() {
                        rate_check = Some(compare_multiscale(&op, a, &dp10)?);
                    }
                }
                _ => missing.push(d),
            }
        }
        r.check(
            "doublet for delta in [0.05, 0.3]",
            missing.is_empty(),
            if missing.is_empty() {
                format!("wall and anti-wall states localized at all {} deltas", deltas.len())
            } else {
                format!("missing at {missing:?}")
            },
        );
        if large_eps.len() >= 2 {
            let lx: Vec<f64> = large_eps.iter().map(|p| p.0.ln()).collect();
            let ly: Vec<f64> = large_eps.iter().map(|p| p.1.abs().ln()).collect();
            r.check("exponent at eps = 10 (informational)", true, format!("{:.3}", line_fit(&lx, &ly).0));
        }
        match rate_check {
            Some(m) => r.check(
                "decay rate at smallest delta",
                m.rate_rel_error < 0.15,
                format!(
                    "{:.5} vs {:.5} (rel {:.3}), overlap defect {:.3}",
                    m.fitted_rate, m.predicted_rate, m.rate_rel_error, m.overlap_defect
                ),
            ),
            None => r.check("decay rate at smallest delta", false, "no localized wall state"),
        }

        // quantitative scaling at ε = 0.5, δ ≤ ε²/4
        let eps = 0.5;
        let dp = find_dirac_point(&v, eps, 8, None)?.with_theta(&w)?;
        let wall = DomainWall::tanh(4.0, 1.0)?;
        let e2 = e2_coefficient(&dp, &v.scaled(eps), &w, &zigzag, &wall)?;
        let mut small = SupercellConfig::new(zigzag, 64, eps, 0.05, wall).with_grid(12, 4).aligned_with_k(&lat);
        small.m1 = 2;
        let estar = reference_dirac_energy(&v, &small, dp.e_star)?;
        let mut pts = vec![];
        for d in [0.00625, 0.01, 0.016, 0.025, 0.04, 0.0625] {
            let rho = 2.0 * PI * d * e2.beta;
            let n = ((20.0 / rho).ceil() as usize).div_ceil(2) * 2;
            let cfg = SupercellConfig {
                delta: d,
                n_cells: n,
                ..small.clone()
            };
            let op = assemble_edge(&v, &w, &cfg)?;
            let states = solve_near(&op, estar, 4)?;
            drop(op);
            if let (Some(a), _) = split_sides(&states, n) {
                pts.push((d, a.energy - estar));
            }
        }
        if pts.len() >= 3 {
            let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
            let ly: Vec<f64> = pts.iter().map(|p| p.1.abs().ln()).collect();
            let p = line_fit(&lx, &ly).0;
            r.check(
                "exponent at eps = 0.5",
                (p - 2.0).abs() <= 0.15,
                format!("{p:.4} over delta in [{}, {}]", pts[0].0, pts[pts.len() - 1].0),
            );
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1 / (p.0 * p.0)).collect();
            let (_, c2) = line_fit(&x, &y);
            let rel = (c2 - e2.e2).abs() / e2.e2.abs();
            r.check(
                "E2 vs e2_coefficient",
                rel < 0.2,
                format!("fit {c2:.4} vs {:.4} (rel {rel:.3})", e2.e2),
            );
        } else {
            r.check("exponent at eps = 0.5", false, format!("only {} localized wall states", pts.len()));
        }

        // splitting of the doublet against supercell size
        let mut split = vec![];
        for n in [32usize, 96] {
            let cfg = large_eps_config(&lat, zigzag, n, 0.1)?;
            let states = solve_near(&assemble_edge(&v, &w, &cfg)?, target, 12)?;
            let mut loc: Vec<&EdgeState> = states.iter().collect();
            loc.sort_by(|a, b| b.ipr.total_cmp(&a.ipr));
            split.push((loc[0].energy - loc[1].energy).abs());
        }
        let factor = split[0] / split[1];
        r.check(
            "splitting drops 10x from N = 32 to 96",
            factor >= 10.0,
            format!("{:.4} -> {:.4} (factor {factor:.2})", split[0], split[1]),
        );
        Ok(())
    })
}

pub fn kpar_symmetry() -> CriterionReport {
    timed(8, "k_par sweep symmetry", 1200.0, |r| {
        let (lat, v, w, zigzag) = builtin();
        let dp = find_dirac_point(&v, 10.0, 8, None)?;
        let aligned = large_eps_config(&lat, zigzag, 64, 0.1)?;
        let target = reference_dirac_energy(&v, &aligned, dp.e_star)?;
        let template = SupercellConfig { twist: 0.0, ..aligned };
        let ks: Vec<f64> = (0..48).map(|i| 2.0 * PI * i as f64 / 48.0).collect();
        let sweep = sweep_kpar(&v, &w, &template, &ks, target, 8)?;
        let defect = sweep.reflection_defect().unwrap_or(f64::INFINITY);
        // solver tolerance: the residual bound 1e-8 (1 + |E|) that every edge eigenpair satisfies
        let tol = 1e-8 * (1.0 + target.abs());
        r.check(
            "reflection",
            defect < tol,
            format!("max |E(k) - E(2pi - k)| = {defect:.1e} (tolerance {tol:.1e})"),
        );
        let loc = sweep.localized();
        let has = |i: usize| !loc[i].1.is_empty();
        let window = |c: usize| {
            let (mut lo, mut hi) = (c, c);
            while lo > 0 && has(lo - 1) {
                lo -= 1;
            }
            while hi + 1 < ks.len() && has(hi + 1) {
                hi += 1;
            }
            ks[hi] - ks[lo]
        };
        r.check(
            "branch near 2pi/3",
            has(16),
            format!("window width {:.4}", if has(16) { window(16) } else { 0.0 }),
        );
        r.check(
            "branch near 4pi/3",
            has(32),
            format!("window width {:.4}", if has(32) { window(32) } else { 0.0 }),
        );
        Ok(())
    })
}

pub fn non_protected() -> CriterionReport {
    timed(9, "non-protected bifurcation", 30.0, |r| {
        let (_, v, _, zigzag) = builtin();
        let eps = -0.2;
        let dp = find_dirac_point(&v, eps, 5, None)?;
        let bc = band_curvature(&v.scaled(eps), &dp, &zigzag, 5)?;
        let tanh = DomainWall::tanh(1.0, 1.0)?;
        let model = EffectiveSchrodinger::new(bc.m_eff, 1.0, 1.0, tanh.clone())?;
        let bound = model.bound_states(None, 1e-9)?;
        r.check(
            "bound state on gap side",
            bc.m_eff < 0.0 && !bound.energies.is_empty() && bound.energies.iter().all(|e| e * bound.side > 0.0),
            format!("m_eff {:.4e}, {} bound, nearest {:.3e}", bc.m_eff, bound.energies.len(), bound.energies.last().copied().unwrap_or(f64::NAN)),
        );
        let amps: Vec<f64> = (1..=20).map(|i| -0.5 * i as f64).collect();
        let (natural, amp) = natural_wall_search(&model, 3.0, &amps, 1e-9)?;
        let dirac = DiracOperator1D::auto(1.0, 1.0, tanh.clone(), Discretization::FourierSpectral)?;
        let thetas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let h = protection_homotopy(&dirac, &model, &tanh, &natural, &thetas, 1e-9)?;
        let ts = h.theta_star.unwrap_or(f64::NAN);
        r.check(
            "homotopy removes it",
            ts > 0.0 && ts < 1.0,
            format!("theta* = {ts:.4} (deformation amplitude {amp})"),
        );
        r.check(
            "Dirac zero mode persists",
            h.max_dirac_zero < 1e-8,
            format!("max |E0| {:.1e}", h.max_dirac_zero),
        );
        Ok(())
    })
}

pub fn cylinder_parseval() -> CriterionReport {
    timed(10, "cylinder Parseval and reconstruction", 60.0, |r| {
        let (lat, v, _, zigzag) = builtin();
        let eps = 10.0;
        let mut cfg = SupercellConfig::new(zigzag, 8, eps, 0.0, DomainWall::tanh(1.0, 1.0)?).aligned_with_k(&lat);
        cfg.m1 = 3;
        cfg.m2 = 2;
        let bands = 6;
        let basis = CylinderBasis::new(&v.scaled(eps), &cfg, bands)?;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut round, mut pars, mut coef): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..20 {
            let mut truth = vec![vec![C64::new(0.0, 0.0); bands]; cfg.n_cells];
            let mut f = vec![C64::new(0.0, 0.0); cfg.dimension()];
            for (rr, row) in truth.iter_mut().enumerate() {
                for (b, c) in row.iter_mut().enumerate() {
                    *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    for (x, m) in f.iter_mut().zip(basis.mode(rr, b)) {
                        *x += *c * m;
                    }
                }
            }
            let tr = basis.forward(&f)?;
            let back = basis.inverse(&tr)?;
            let nf = cnorm(&f);
            let diff: Vec<C64> = back.iter().zip(&f).map(|(a, b)| a - b).collect();
            round = round.max(cnorm(&diff) / nf);
            pars = pars.max((tr.norm_sqr() - nf * nf).abs() / (nf * nf));
            for (a, b) in tr.coeffs.iter().flatten().zip(truth.iter().flatten()) {
                coef = coef.max((a - b).norm());
            }
        }
        r.check("round trip", round < 1e-8, format!("max rel err {round:.1e}"));
        r.check("Parseval", pars < 1e-8, format!("max rel err {pars:.1e}"));
        r.check("coefficient recovery", coef < 1e-8, format!("max err {coef:.1e}"));
        Ok(())
    })
}

pub fn v11_scan() -> CriterionReport {
    timed(11, "V11 of bump superpositions", 60.0, |r| {
        let gauss = RadialBump::Gaussian { s: 0.2 };
        let a_values = [0.6, 0.8, 1.0, 1.25, 1.5];
        let mut worst: f64 = 0.0;
        let mut opposite = true;
        for &a in &a_values {
            let hc = BumpSpec {
                g0: gauss,
                structure: BumpStructure::Honeycomb,
            };
            let tri = BumpSpec {
                g0: gauss,
                structure: BumpStructure::Triangular,
            };
            let (p, q) = (hc.v11_poisson(a)?, hc.v11_quadrature(a, 96)?);
            worst = worst.max((p - q).abs() / p.abs());
            let (pt, qt) = (tri.v11_poisson(a)?, tri.v11_quadrature(a, 96)?);
            worst = worst.max((pt - qt).abs() / pt.abs());
            opposite &= q * qt < 0.0;
        }
        r.check("Poisson vs quadrature", worst < 1e-6, format!("max rel err {worst:.1e}"));
        r.check("honeycomb vs triangular sign", opposite, format!("opposite at all {} scales", a_values.len()));
        let dog = BumpSpec {
            g0: RadialBump::default_dog(),
            structure: BumpStructure::Honeycomb,
        };
        let scan = dog.v11_scan(&[0.4, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0], 96)?;
        let flips = scan.windows(2).filter(|s| s[0].v11_quadrature * s[1].v11_quadrature < 0.0).count();
        let agree = scan
            .iter()
            .map(|s| (s.v11_poisson - s.v11_quadrature).abs() / s.v11_poisson.abs())
            .fold(0.0, f64::max);
        r.check(
            "difference of Gaussians flips sign",
            flips >= 1 && agree < 1e-6,
            format!("{flips} sign change(s), max rel err {agree:.1e}"),
        );
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_and_budget() {
        let rep = timed(99, "demo", 1.0, |r| {
            r.check("a", true, "ok");
            Ok(())
        });
        assert!(rep.pass());
        assert!(rep.line().starts_with("criterion 99 PASS demo"));
        let rep = timed(98, "demo", 1.0, |_| Err(crate::error::Error::Numeric("x".into())));
        assert!(!rep.pass());
        assert_eq!(rep.failed_checks(), vec!["run"]);
    }

    #[test]
    fn fits() {
        let (s, c) = line_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }
}
