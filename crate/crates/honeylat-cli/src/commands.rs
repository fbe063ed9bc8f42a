use crate::config::{config_error, RunConfig};
use crate::output::{num, Outputs};
use anyhow::Result;
use honeylat::acceptance;
use honeylat::bloch::{band_surface, find_dirac_point, DiracPointData};
use honeylat::edge::{
    assemble_edge, reference_dirac_energy, solve_near, sweep_delta, sweep_kpar, SpectrumSweep, SupercellConfig,
    Transverse,
};
use honeylat::effective::{dirac_spectrum, e2_coefficient, zero_mode_exact, Discretization, DiracOperator1D};
use honeylat::geometry::{edge_frame, norm, EdgeFrame, TriangularLattice};
use honeylat::potential::{builtin_potentials, BumpSpec, BumpStructure, DomainWall, FourierPotential, RadialBump};
use honeylat::slice::{dispersion_slice, no_fold_check, uniform_grid};
use serde_json::json;
use std::f64::consts::PI;

/// Outcome of a command: a one-line summary and whether acceptance failed.
pub struct Summary {
    pub text: String,
    pub acceptance_failed: bool,
}

impl Summary {
    fn ok(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            acceptance_failed: false,
        }
    }
}

struct Inputs {
    lat: TriangularLattice,
    v: FourierPotential,
    w: FourierPotential,
    edge: EdgeFrame,
}

fn read_potential(path: &str) -> Result<FourierPotential> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read potential {path}: {e}")))?;
    Ok(FourierPotential::from_json(&text)?)
}

fn inputs(cfg: &RunConfig) -> Result<Inputs> {
    let (v, w) = if cfg.potential == "builtin" {
        builtin_potentials(TriangularLattice::unit())
    } else {
        let v = read_potential(&cfg.potential)?;
        (v.clone(), builtin_potentials(v.lattice).1)
    };
    let w = match &cfg.w_potential {
        Some(p) if p != "builtin" => read_potential(p)?,
        _ => w,
    };
    if w.lattice != v.lattice {
        return Err(config_error("V and W live on different lattices"));
    }
    let lat = v.lattice;
    let edge = edge_frame(&lat, cfg.edge[0], cfg.edge[1])?;
    Ok(Inputs { lat, v, w, edge })
}

fn dirac(inp: &Inputs, cfg: &RunConfig, m: usize) -> Result<DiracPointData> {
    Ok(find_dirac_point(&inp.v, cfg.eps, m, None)?)
}

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    match cfg.command.as_str() {
        "bands" => bands(cfg, out),
        "dirac" => dirac_cmd(cfg, out),
        "slice" => slice(cfg, out),
        "nofold" => nofold(cfg, out),
        "edge-sweep" => edge_sweep(cfg, out),
        "kpar-sweep" => kpar_sweep(cfg, out),
        "effective-1d" => effective(cfg, out),
        "v11-scan" => v11(cfg, out),
        "verify" => verify(cfg, out),
        other => Err(config_error(format!("unknown command {other:?}"))),
    }
}

fn bands(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let n = cfg.n.unwrap_or(24);
    let samples = band_surface(&inp.v.scaled(cfg.eps), n, cfg.n_bands, cfg.m.unwrap_or(6))?;
    out.csv(
        "bands.csv",
        &["k1_frac", "k2_frac", "band", "energy"],
        samples
            .iter()
            .map(|s| vec![num(s.k1_frac), num(s.k2_frac), s.band.to_string(), num(s.energy)]),
    )?;
    Ok(Summary::ok(format!("{} samples on a {n}x{n} grid", samples.len())))
}

fn dirac_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let m = cfg.m.unwrap_or(10);
    let dp = dirac(&inp, cfg, m)?;
    let theta = dp.clone().with_theta(&inp.w).ok().and_then(|d| d.theta_sharp);
    let report = json!({
        "eps": cfg.eps,
        "m": m,
        "k": dp.k,
        "e_star": dp.e_star,
        "b_star": dp.b_star,
        "e_tilde": dp.e_tilde,
        "lambda_sharp": dp.lambda.fourier_abs(),
        "cone_slope": dp.lambda.cone_slope,
        "cone_anisotropy": dp.lambda.anisotropy,
        "theta_sharp": theta,
        "gap_to_next": dp.gap_to_next,
    });
    out.json("dirac.json", &report)?;
    Ok(Summary::ok(format!(
        "E* = {} b* = {} |lambda#| = {} theta# = {}",
        num(dp.e_star),
        dp.b_star,
        num(dp.lambda.fourier_abs()),
        theta.map_or("n/a".into(), num)
    )))
}

fn slice(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let m = cfg.m.unwrap_or(6);
    let lams = uniform_grid(cfg.n.unwrap_or(201));
    let curves = dispersion_slice(&inp.v.scaled(cfg.eps), &inp.edge, &lams, cfg.n_bands, m)?;
    let e_star = dirac(&inp, cfg, m).ok().map(|d| d.e_star);
    let mut rows = vec![];
    for c in &curves {
        for (l, e) in c.lambdas.iter().zip(&c.energies) {
            rows.push(vec![
                num(*l),
                c.band.to_string(),
                num(*e),
                e_star.map_or(String::new(), |s| num(e - s)),
            ]);
        }
    }
    out.csv("slice.csv", &["lambda", "band", "energy", "energy_minus_estar"], rows)?;
    Ok(Summary::ok(format!("{} bands on {} points", curves.len(), lams.len())))
}

fn nofold(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let m = cfg.m.unwrap_or(6);
    let dp = dirac(&inp, cfg, m)?;
    let rep = no_fold_check(&inp.v.scaled(cfg.eps), &inp.edge, &dp, cfg.a_param, cfg.nu, m, cfg.n.unwrap_or(513))?;
    out.json("nofold.json", &rep)?;
    Ok(Summary::ok(if rep.pass {
        format!("pass: c1 = {} c2 = {}", num(rep.c1_pointwise), num(rep.c2))
    } else {
        format!(
            "fail: witness lambda = {} (band {})",
            rep.witness_lambda.map_or("n/a".into(), num),
            rep.witness_band.map_or("n/a".into(), |b| b.to_string())
        )
    }))
}

fn supercell(cfg: &RunConfig, inp: &Inputs, n_default: usize) -> Result<SupercellConfig> {
    let wall = DomainWall::tanh(cfg.kinf, cfg.width)?;
    let mut c = SupercellConfig::new(inp.edge, cfg.n.unwrap_or(n_default), cfg.eps, cfg.delta, wall)
        .aligned_with_k(&inp.lat);
    c.m1 = cfg.m.unwrap_or(4);
    c.m2 = cfg.m2;
    c.transverse = match cfg.transverse.as_str() {
        "grid" => Transverse::Grid {
            points_per_cell: cfg.points_per_cell,
            half_width: cfg.stencil,
        },
        "plane-wave" => Transverse::PlaneWave,
        other => return Err(config_error(format!("transverse must be grid or plane-wave, got {other:?}"))),
    };
    if let Some(k) = cfg.kpar {
        c.k_par = k.rem_euclid(2.0 * PI);
    }
    if let Some(t) = cfg.twist {
        c.twist = t;
    }
    Ok(c)
}

fn sweep_rows(s: &SpectrumSweep) -> Vec<Vec<String>> {
    s.rows()
        .into_iter()
        .map(|(x, e, loc, ipr, rate)| vec![num(x), num(e), loc.to_string(), num(ipr), num(rate)])
        .collect()
}

const SWEEP_HEADER: [&str; 5] = ["axis_value", "E", "is_localized", "ipr", "decay_rate"];

fn target_energy(cfg: &RunConfig, inp: &Inputs, template: &SupercellConfig) -> Result<f64> {
    let dp = dirac(inp, cfg, 8)?;
    let aligned = SupercellConfig {
        twist: 0.0,
        ..template.clone()
    }
    .aligned_with_k(&inp.lat);
    Ok(reference_dirac_energy(&inp.v, &aligned, dp.e_star)?)
}

fn edge_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let template = supercell(cfg, &inp, 64)?;
    let target = target_energy(cfg, &inp, &template)?;
    let sweep = sweep_delta(&inp.v, &inp.w, &template, &cfg.deltas, target, cfg.n_eigs)?;
    out.csv("edge_sweep.csv", &SWEEP_HEADER, sweep_rows(&sweep))?;
    if cfg.dump_states {
        for (i, &d) in cfg.deltas.iter().enumerate() {
            let c = SupercellConfig {
                delta: d,
                ..template.clone()
            };
            let op = assemble_edge(&inp.v, &inp.w, &c)?;
            let states = solve_near(&op, target, cfg.n_eigs)?;
            let mut rows = vec![];
            for (s, st) in states.iter().enumerate().filter(|(_, st)| st.is_localized) {
                for (m1, j, z) in op.coefficient_table(&st.coeffs) {
                    rows.push(vec![s.to_string(), m1.to_string(), j.to_string(), num(z.re), num(z.im)]);
                }
            }
            out.csv(&format!("states_delta_{i}.csv"), &["state", "m1", "j", "re", "im"], rows)?;
        }
    }
    let localized: usize = sweep.localized().iter().map(|(_, e)| e.len()).sum();
    Ok(Summary::ok(format!(
        "{} deltas, target {}, {localized} localized states",
        cfg.deltas.len(),
        num(target)
    )))
}

fn kpar_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let mut template = supercell(cfg, &inp, 64)?;
    if cfg.twist.is_none() {
        template.twist = 0.0;
    }
    let target = target_energy(cfg, &inp, &template)?;
    let ks: Vec<f64> = (0..cfg.kpar_count)
        .map(|i| 2.0 * PI * i as f64 / cfg.kpar_count as f64)
        .collect();
    let sweep = sweep_kpar(&inp.v, &inp.w, &template, &ks, target, cfg.n_eigs)?;
    out.csv("kpar_sweep.csv", &SWEEP_HEADER, sweep_rows(&sweep))?;
    Ok(Summary::ok(format!(
        "{} k_par values, reflection defect {}",
        ks.len(),
        sweep.reflection_defect().map_or("n/a".into(), num)
    )))
}

fn effective(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let inp = inputs(cfg)?;
    let dp = dirac(&inp, cfg, cfg.m.unwrap_or(8))?.with_theta(&inp.w)?;
    let wall = DomainWall::tanh(cfg.kinf, cfg.width)?;
    let disc = match cfg.discretization.as_str() {
        "spectral" => Discretization::FourierSpectral,
        "central" => Discretization::CentralDifference,
        other => return Err(config_error(format!("discretization must be spectral or central, got {other:?}"))),
    };
    let mut d = DiracOperator1D::from_dirac_point(&dp, &inp.edge, wall.clone(), disc)?;
    if let Some(p) = cfg.points {
        d = DiracOperator1D::new(d.v_f, d.theta, wall.clone(), d.half_length, p, disc)?;
    }
    if d.n > 6000 {
        return Err(config_error(format!(
            "the automatic grid needs {} points; raise --kinf or pass --points",
            d.n
        )));
    }
    let spec = dirac_spectrum(&d, cfg.n_eigs)?;
    out.csv(
        "dirac_spectrum.csv",
        &["index", "E", "spurious"],
        spec.values
            .iter()
            .zip(&spec.spurious)
            .enumerate()
            .map(|(i, (e, s))| vec![i.to_string(), num(*e), s.to_string()]),
    )?;
    let exact = zero_mode_exact(d.v_f, d.theta, &wall)?;
    let grid = d.grid();
    let n = d.n;
    out.csv(
        "zero_mode.csv",
        &["zeta", "re_plus", "im_plus", "re_minus", "im_minus", "exact_re_plus", "exact_im_minus"],
        grid.iter().enumerate().map(|(j, &z)| {
            let a = exact.alpha(z);
            vec![
                num(z),
                num(spec.mode[j].re),
                num(spec.mode[j].im),
                num(spec.mode[n + j].re),
                num(spec.mode[n + j].im),
                num(a[0].re),
                num(a[1].im),
            ]
        }),
    )?;
    let e2 = e2_coefficient(&dp, &inp.v.scaled(cfg.eps), &inp.w, &inp.edge, &wall)?;
    out.json(
        "effective.json",
        &json!({
            "v_f": d.v_f,
            "theta_sharp": d.theta,
            "beta": exact.beta,
            "grid_points": d.n,
            "half_length": d.half_length,
            "zero_value": spec.zero_value,
            "mode_error": spec.mode_error,
            "e2": e2.e2,
            "e2_imag_part": e2.imag_part,
            "k2_norm": norm(inp.edge.frak_k2),
        }),
    )?;
    Ok(Summary::ok(format!(
        "zero mode |E0| = {} mode error = {} E2 = {}",
        num(spec.zero_value.abs()),
        num(spec.mode_error),
        num(e2.e2)
    )))
}

fn v11(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let structure = match cfg.structure.as_str() {
        "honeycomb" => BumpStructure::Honeycomb,
        "triangular" => BumpStructure::Triangular,
        other => return Err(config_error(format!("structure must be honeycomb or triangular, got {other:?}"))),
    };
    let g0 = match cfg.bump.as_str() {
        "gaussian" => RadialBump::Gaussian { s: cfg.bump_width },
        "dog" => RadialBump::default_dog(),
        other => return Err(config_error(format!("bump must be gaussian or dog, got {other:?}"))),
    };
    if cfg.a_count < 2 || !(cfg.a_min > 0.0 && cfg.a_max > cfg.a_min) {
        return Err(config_error("need 0 < a_min < a_max and at least two scales"));
    }
    let a: Vec<f64> = (0..cfg.a_count)
        .map(|i| cfg.a_min + (cfg.a_max - cfg.a_min) * i as f64 / (cfg.a_count - 1) as f64)
        .collect();
    let scan = BumpSpec { g0, structure }.v11_scan(&a, cfg.quad_points)?;
    let mut flips = 0;
    let rows: Vec<Vec<String>> = scan
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let flip = i > 0 && scan[i - 1].v11_quadrature * s.v11_quadrature < 0.0;
            flips += flip as usize;
            vec![num(s.a), num(s.v11_poisson), num(s.v11_quadrature), (flip as u8).to_string()]
        })
        .collect();
    out.csv("v11_scan.csv", &["a", "v11_poisson", "v11_quadrature", "sign_flip"], rows)?;
    Ok(Summary::ok(format!("{} scales, {flips} sign flip(s)", scan.len())))
}

fn verify(cfg: &RunConfig, out: &mut Outputs) -> Result<Summary> {
    let ids: Vec<u8> = if cfg.only.is_empty() {
        acceptance::CRITERIA.to_vec()
    } else {
        cfg.only.clone()
    };
    let mut reports = vec![];
    for id in ids {
        let rep = acceptance::run(id).ok_or_else(|| config_error(format!("no criterion {id}")))?;
        println!("{}", rep.line());
        reports.push(rep);
    }
    out.json("verify.json", &reports)?;
    let failed: Vec<u8> = reports.iter().filter(|r| !r.pass()).map(|r| r.id).collect();
    Ok(Summary {
        text: if failed.is_empty() {
            format!("all {} criteria pass", reports.len())
        } else {
            format!("failing criteria: {failed:?}")
        },
        acceptance_failed: !failed.is_empty(),
    })
}
