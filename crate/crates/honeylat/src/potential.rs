//! Fourier-side periodic potentials, domain walls and lattice-scale bump sums.

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, rotate_index, TriangularLattice, Vec2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

pub type Index = (i64, i64);

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Real periodic function stored through its dual-lattice Fourier coefficients
/// f(x) = Σ f_m e^{i m·k x}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    pub lattice: TriangularLattice,
    pub coeffs: BTreeMap<Index, Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub pass: bool,
    pub worst_index: Option<Index>,
    pub worst_defect: f64,
}

impl PropertyCheck {
    fn from_defects(it: impl Iterator<Item = (Index, f64)>, tol: f64) -> Self {
        let mut worst = (None, 0.0);
        for (m, d) in it {
            if d > worst.1 {
                worst = (Some(m), d);
            }
        }
        Self {
            pass: worst.1 <= tol,
            worst_index: worst.0,
            worst_defect: worst.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoneycombReport {
    pub real: PropertyCheck,
    pub even: PropertyCheck,
    pub rotation_invariant: PropertyCheck,
}

impl HoneycombReport {
    pub fn pass(&self) -> bool {
        self.real.pass && self.even.pass && self.rotation_invariant.pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WReport {
    pub real: PropertyCheck,
    pub odd: PropertyCheck,
    /// W_{0,1} + W_{1,0} - W_{1,1}
    pub proxy: [f64; 2],
    pub nondegenerate: bool,
}

impl WReport {
    pub fn pass(&self) -> bool {
        self.real.pass && self.odd.pass && self.nondegenerate
    }

    pub fn proxy(&self) -> Complex64 {
        Complex64::new(self.proxy[0], self.proxy[1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PotentialFile {
    lattice_scale: f64,
    coeffs: Vec<[f64; 4]>,
}

impl FourierPotential {
    pub fn zero(lattice: TriangularLattice) -> Self {
        Self {
            lattice,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_coeffs(
        lattice: TriangularLattice,
        coeffs: impl IntoIterator<Item = (Index, Complex64)>,
    ) -> Self {
        let mut out = Self::zero(lattice);
        for (m, v) in coeffs {
            *out.coeffs.entry(m).or_insert(C0) += v;
        }
        out
    }

    /// Constant potential c.
    pub fn constant(lattice: TriangularLattice, c: f64) -> Self {
        Self::from_coeffs(lattice, [((0, 0), Complex64::new(c, 0.0))])
    }

    pub fn get(&self, m: Index) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or(C0)
    }

    pub fn cutoff(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|m| m.0.abs().max(m.1.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| v.norm() == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lattice: self.lattice,
            coeffs: self.coeffs.iter().map(|(m, v)| (*m, v * s)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &other.coeffs {
            *out.coeffs.entry(*m).or_insert(C0) += v;
        }
        out
    }

    fn tol(&self) -> f64 {
        1e-12 * self.max_abs().max(1.0)
    }

    pub fn real_check(&self) -> PropertyCheck {
        PropertyCheck::from_defects(
            self.keys_with_mirrors()
                .into_iter()
                .map(|m| (m, (self.get((-m.0, -m.1)) - self.get(m).conj()).norm())),
            self.tol(),
        )
    }

    fn keys_with_mirrors(&self) -> Vec<Index> {
        let mut keys: Vec<Index> = self.coeffs.keys().copied().collect();
        keys.extend(self.coeffs.keys().map(|m| (-m.0, -m.1)));
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn validate_honeycomb(&self) -> HoneycombReport {
        let keys = self.keys_with_mirrors();
        let tol = self.tol();
        let even = PropertyCheck::from_defects(
            keys.iter()
                .map(|&m| (m, (self.get((-m.0, -m.1)) - self.get(m)).norm())),
            tol,
        );
        let mut orbit_keys = keys.clone();
        orbit_keys.extend(keys.iter().map(|&m| rotate_index(m)));
        orbit_keys.extend(keys.iter().map(|&m| rotate_index(rotate_index(m))));
        orbit_keys.sort();
        orbit_keys.dedup();
        let rot = PropertyCheck::from_defects(
            orbit_keys
                .iter()
                .map(|&m| (m, (self.get(rotate_index(m)) - self.get(m)).norm())),
            tol,
        );
        HoneycombReport {
            real: self.real_check(),
            even,
            rotation_invariant: rot,
        }
    }

    pub fn validate_w(&self) -> WReport {
        let keys = self.keys_with_mirrors();
        let odd = PropertyCheck::from_defects(
            keys.iter()
                .map(|&m| (m, (self.get((-m.0, -m.1)) + self.get(m)).norm())),
            self.tol(),
        );
        let proxy = self.get((0, 1)) + self.get((1, 0)) - self.get((1, 1));
        WReport {
            real: self.real_check(),
            odd,
            proxy: [proxy.re, proxy.im],
            nondegenerate: proxy.norm() > self.tol(),
        }
    }

    pub fn eval(&self, x: Vec2) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(m, v)| v * Complex64::from_polar(1.0, dot(self.lattice.dual(*m), x)))
            .sum()
    }

    /// Samples on the n1 × n2 grid x = (i/n1) v1 + (j/n2) v2, row-major in i.
    pub fn eval_on_grid(&self, n1: usize, n2: usize) -> Result<Vec<f64>> {
        let chk = self.real_check();
        if !chk.pass {
            return invalid(format!(
                "potential is not real: coefficient {:?} breaks conjugate symmetry by {:e}",
                chk.worst_index, chk.worst_defect
            ));
        }
        let mut out = Vec::with_capacity(n1 * n2);
        let lat = &self.lattice;
        let bound = 1e-12 * self.coeffs.values().map(|v| v.norm()).sum::<f64>().max(1.0);
        for i in 0..n1 {
            for j in 0..n2 {
                let (s, t) = (i as f64 / n1 as f64, j as f64 / n2 as f64);
                let x = [s * lat.v1[0] + t * lat.v2[0], s * lat.v1[1] + t * lat.v2[1]];
                let v = self.eval(x);
                if v.im.abs() > bound {
                    return Err(Error::Numeric(format!(
                        "synthesized sample has imaginary part {:e}",
                        v.im
                    )));
                }
                out.push(v.re);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = PotentialFile {
            lattice_scale: self.lattice.scale,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, v)| [m.0 as f64, m.1 as f64, v.re, v.im])
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    /// Parses the JSON potential format. Missing conjugate mirrors are filled in; inconsistent
    /// mirrors are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: PotentialFile = serde_json::from_str(text)
            .map_err(|e| Error::Configuration(format!("potential file: {e}")))?;
        let lattice = TriangularLattice::new(file.lattice_scale)?;
        let mut coeffs = BTreeMap::new();
        for c in &file.coeffs {
            if c[0].fract() != 0.0 || c[1].fract() != 0.0 {
                return Err(Error::Configuration(format!(
                    "non-integer index ({}, {})",
                    c[0], c[1]
                )));
            }
            let m = (c[0] as i64, c[1] as i64);
            if coeffs.insert(m, Complex64::new(c[2], c[3])).is_some() {
                return Err(Error::Configuration(format!("duplicate index {m:?}")));
            }
        }
        let tol = 1e-12 * coeffs.values().map(|v: &Complex64| v.norm()).fold(1.0, f64::max);
        let keys: Vec<Index> = coeffs.keys().copied().collect();
        for m in keys {
            let v = coeffs[&m];
            let mirror = (-m.0, -m.1);
            match coeffs.get(&mirror) {
                Some(w) if (w - v.conj()).norm() > tol => {
                    return Err(Error::Configuration(format!(
                        "coefficients at {m:?} and {mirror:?} are not conjugate"
                    )))
                }
                Some(_) => {}
                None => {
                    coeffs.insert(mirror, v.conj());
                }
            }
        }
        Ok(Self { lattice, coeffs })
    }
}

/// The cosine/sine pair used for the figures:
/// V = Σ_j cos(R^j k1·x) and W = Σ_j (−1)^{δ_{j2}} sin(R^j k1·x).
pub fn builtin_potentials(lattice: TriangularLattice) -> (FourierPotential, FourierPotential) {
    let half = Complex64::new(0.5, 0.0);
    let mi = Complex64::new(0.0, -0.5);
    let shells = [(1, 0), (0, 1), (1, 1)];
    let v = FourierPotential::from_coeffs(
        lattice,
        shells
            .iter()
            .flat_map(|&m| [(m, half), ((-m.0, -m.1), half)]),
    );
    let w = FourierPotential::from_coeffs(
        lattice,
        shells
            .iter()
            .flat_map(|&m| [(m, mi), ((-m.0, -m.1), -mi)]),
    );
    (v, w)
}

/// Smooth compactly supported bump, equal to 1 at the center and vanishing with all
/// derivatives at |ζ - center| = radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactBump {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl CompactBump {
    /// (s, s', s'') at ζ, unscaled by amplitude.
    pub fn jet(&self, zeta: f64) -> (f64, f64, f64) {
        let r = self.radius;
        let u = (zeta - self.center) / r;
        if u.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let g = 1.0 - u * u;
        let s = (1.0 - 1.0 / g).exp();
        let h = -2.0 * u / (r * g * g);
        let dh = -2.0 / (r * r * g * g) - 8.0 * u * u / (r * r * g * g * g);
        (s, s * h, s * (h * h + dh))
    }
}

#[derive(Clone)]
pub enum WallKind {
    /// κ∞ tanh(ζ/w)
    Tanh,
    /// κ∞ tanh(ζ/w) + A s'(ζ) for a compact bump s.
    Natural { bump: CompactBump },
    /// κ∞ tanh(ζ/w) + Σ A_i s_i(ζ)
    Bumped { bumps: Vec<CompactBump> },
    /// (1 − θ) κ_a + θ κ_b
    Blend {
        theta: f64,
        a: Box<DomainWall>,
        b: Box<DomainWall>,
    },
    /// Arbitrary profile; derivatives by finite differences.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for WallKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WallKind::Tanh => write!(f, "Tanh"),
            WallKind::Natural { bump } => write!(f, "Natural({bump:?})"),
            WallKind::Bumped { bumps } => write!(f, "Bumped({bumps:?})"),
            WallKind::Blend { theta, a, b } => {
                write!(f, "Blend(θ={theta}, {:?}, {:?})", a.kind, b.kind)
            }
            WallKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Domain wall κ(ζ) tending to ±κ∞ as ζ → ±∞.
#[derive(Debug, Clone)]
pub struct DomainWall {
    pub label: String,
    pub kappa_inf: f64,
    pub width: f64,
    pub kind: WallKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub exponent: f64,
    pub mass_moment: f64,
    pub slope_moment: f64,
    pub converged: bool,
}

impl DomainWall {
    pub fn tanh(kappa_inf: f64, width: f64) -> Result<Self> {
        if !(kappa_inf > 0.0) || !(width > 0.0) {
            return invalid("tanh wall needs positive asymptote and width");
        }
        Ok(Self {
            label: "tanh".into(),
            kappa_inf,
            width,
            kind: WallKind::Tanh,
        })
    }

    /// Member of the deformed family κ∞ tanh(ζ/w) + A s'(ζ).
    pub fn natural(kappa_inf: f64, width: f64, amplitude: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("bump radius must be positive");
        }
        let mut w = Self::tanh(kappa_inf, width)?;
        w.label = format!("natural(A={amplitude})");
        w.kind = WallKind::Natural {
            bump: CompactBump {
                center: 0.0,
                radius,
                amplitude,
            },
        };
        Ok(w)
    }

    pub fn with_bumps(&self, bumps: Vec<CompactBump>) -> Result<Self> {
        match self.kind {
            WallKind::Tanh => Ok(Self {
                label: format!("{}+bumps", self.label),
                kappa_inf: self.kappa_inf,
                width: self.width,
                kind: WallKind::Bumped { bumps },
            }),
            _ => invalid("bumps are added to a plain tanh wall"),
        }
    }

    pub fn blend(a: &DomainWall, b: &DomainWall, theta: f64) -> Result<Self> {
        if (a.kappa_inf - b.kappa_inf).abs() > 1e-14 * a.kappa_inf.max(1.0) {
            return invalid("blended walls must share their asymptote");
        }
        Ok(Self {
            label: format!("blend({theta})"),
            kappa_inf: a.kappa_inf,
            width: a.width.max(b.width),
            kind: WallKind::Blend {
                theta,
                a: Box::new(a.clone()),
                b: Box::new(b.clone()),
            },
        })
    }

    pub fn custom(
        label: &str,
        kappa_inf: f64,
        width: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            kappa_inf,
            width,
            kind: WallKind::Custom(Arc::new(f)),
        }
    }

    /// Half-width of the region where κ differs from its tanh backbone.
    pub fn core_extent(&self) -> f64 {
        match &self.kind {
            WallKind::Tanh | WallKind::Custom(_) => 0.0,
            WallKind::Natural { bump } => bump.center.abs() + bump.radius,
            WallKind::Bumped { bumps } => bumps
                .iter()
                .map(|b| b.center.abs() + b.radius)
                .fold(0.0, f64::max),
            WallKind::Blend { a, b, .. } => a.core_extent().max(b.core_extent()),
        }
    }

    /// The mirrored wall ζ ↦ −κ(ζ).
    pub fn negated(&self) -> Self {
        let inner = self.clone();
        Self::custom(
            &format!("-{}", self.label),
            self.kappa_inf,
            self.width,
            move |z| -inner.value(z),
        )
    }

    fn tanh_jet(&self, zeta: f64) -> (f64, f64, f64) {
        let t = (zeta / self.width).tanh();
        let s2 = 1.0 - t * t;
        let k = self.kappa_inf;
        let w = self.width;
        (k * t, k * s2 / w, -2.0 * k * t * s2 / (w * w))
    }

    /// (κ, κ', κ'') at ζ.
    pub fn jet(&self, zeta: f64) -> (f64, f64, f64) {
        match &self.kind {
            WallKind::Tanh => self.tanh_jet(zeta),
            WallKind::Natural { bump } => {
                let (v, d, dd) = self.tanh_jet(zeta);
                let h = 1e-4 * bump.radius;
                let (_, s1, s2) = bump.jet(zeta);
                // third derivative of the bump by a centered difference of s''
                let s3 = (bump.jet(zeta + h).2 - bump.jet(zeta - h).2) / (2.0 * h);
                let a = bump.amplitude;
                (v + a * s1, d + a * s2, dd + a * s3)
            }
            WallKind::Bumped { bumps } => {
                let (mut v, mut d, mut dd) = self.tanh_jet(zeta);
                for b in bumps {
                    let (s0, s1, s2) = b.jet(zeta);
                    v += b.amplitude * s0;
                    d += b.amplitude * s1;
                    dd += b.amplitude * s2;
                }
                (v, d, dd)
            }
            WallKind::Blend { theta, a, b } => {
                let (va, da, dda) = a.jet(zeta);
                let (vb, db, ddb) = b.jet(zeta);
                let t = *theta;
                (
                    (1.0 - t) * va + t * vb,
                    (1.0 - t) * da + t * db,
                    (1.0 - t) * dda + t * ddb,
                )
            }
            WallKind::Custom(f) => {
                let h = 1e-4 * self.width.max(1e-3);
                let (m, c, p) = (f(zeta - h), f(zeta), f(zeta + h));
                (c, (p - m) / (2.0 * h), (p - 2.0 * c + m) / (h * h))
            }
        }
    }

    pub fn value(&self, zeta: f64) -> f64 {
        match &self.kind {
            WallKind::Tanh => self.kappa_inf * (zeta / self.width).tanh(),
            WallKind::Custom(f) => f(zeta),
            _ => self.jet(zeta).0,
        }
    }

    pub fn derivative(&self, zeta: f64) -> f64 {
        self.jet(zeta).1
    }

    /// ∫₀^ζ κ.
    pub fn integral_from_zero(&self, zeta: f64) -> f64 {
        match &self.kind {
            WallKind::Tanh => {
                // w κ∞ ln cosh(ζ/w), written to avoid overflow
                let x = (zeta / self.width).abs();
                self.kappa_inf * self.width * (x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2)
            }
            _ => {
                let (base, scale) = (0.0_f64, zeta);
                if scale == 0.0 {
                    return 0.0;
                }
                let n = ((zeta.abs() / self.width.min(1.0)) * 64.0).ceil().max(64.0) as usize;
                gauss_legendre_composite(|z| self.value(z), base, zeta, n)
            }
        }
    }

    /// Moment conditions ∫(1+|ζ|)^a |κ² − κ∞²| and ∫(1+|ζ|)^a |κ'| on growing windows.
    pub fn moment_check(&self, exponent: f64) -> MomentReport {
        let kinf2 = self.kappa_inf * self.kappa_inf;
        let moments = |half: f64| {
            let n = (half * 64.0 / self.width.min(1.0)).ceil() as usize;
            let w = |z: f64| (1.0 + z.abs()).powf(exponent);
            let m1 = gauss_legendre_composite(
                |z| w(z) * (self.value(z).powi(2) - kinf2).abs(),
                -half,
                half,
                n,
            );
            let m2 = gauss_legendre_composite(|z| w(z) * self.derivative(z).abs(), -half, half, n);
            (m1, m2)
        };
        let half = 40.0 * self.width;
        let (a1, b1) = moments(half);
        let (a2, b2) = moments(2.0 * half);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        MomentReport {
            exponent,
            mass_moment: a2,
            slope_moment: b2,
            converged: a2.is_finite()
                && b2.is_finite()
                && rel(a1, a2) < 1e-6
                && rel(b1, b2) < 1e-6,
        }
    }
}

pub(crate) const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
pub(crate) const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Composite 5-point Gauss–Legendre rule with n panels.
pub fn gauss_legendre_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for p in 0..n {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * acc
}

/// Radial bump g₀ with an analytic 2D Fourier transform
/// ĝ₀(ξ) = (2π)^{-2} ∫ e^{-iξ·x} g₀(|x|) dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialBump {
    Gaussian { s: f64 },
    /// e^{-r²/2s1²} − c e^{-r²/2s2²}
    DiffGaussians { s1: f64, s2: f64, c: f64 },
}

impl RadialBump {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            RadialBump::Gaussian { s } => (-r * r / (2.0 * s * s)).exp(),
            RadialBump::DiffGaussians { s1, s2, c } => {
                (-r * r / (2.0 * s1 * s1)).exp() - c * (-r * r / (2.0 * s2 * s2)).exp()
            }
        }
    }

    pub fn hat(&self, xi: f64) -> f64 {
        let g = |s: f64| s * s / (2.0 * PI) * (-s * s * xi * xi / 2.0).exp();
        match *self {
            RadialBump::Gaussian { s } => g(s),
            RadialBump::DiffGaussians { s1, s2, c } => g(s1) - c * g(s2),
        }
    }

    /// Radius beyond which |g₀| < tol.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let s = match *self {
            RadialBump::Gaussian { s } => s,
            RadialBump::DiffGaussians { s1, s2, .. } => s1.max(s2),
        };
        s * (2.0 * (1.0 / tol).ln()).sqrt()
    }

    pub fn default_dog() -> Self {
        RadialBump::DiffGaussians {
            s1: 0.15,
            s2: 0.3,
            c: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BumpStructure {
    Triangular,
    Honeycomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub g0: RadialBump,
    pub structure: BumpStructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct V11Sample {
    pub a: f64,
    pub v11_poisson: f64,
    pub v11_quadrature: f64,
}

impl BumpSpec {
    /// Centers of the translated bumps inside one cell (before adding lattice vectors).
    fn sites(&self, lat: &TriangularLattice) -> Vec<Vec2> {
        let a = lat.scale;
        let tau0 = [0.5 * a / crate::geometry::SQRT3, 0.5 * a];
        match self.structure {
            BumpStructure::Triangular => vec![[0.0, 0.0]],
            BumpStructure::Honeycomb => {
                let b = [a / crate::geometry::SQRT3, 0.0];
                // g₀(x − A + τ₀ + v) and g₀(x − B + τ₀ + v): bumps centered at A − τ₀ and B − τ₀
                vec![[-tau0[0], -tau0[1]], [b[0] - tau0[0], b[1] - tau0[1]]]
            }
        }
    }

    /// Closed form from Poisson summation over the scaled cell.
    pub fn v11_poisson(&self, a: f64) -> Result<f64> {
        let lat = TriangularLattice::new(a)?;
        let pref = (2.0 * PI).powi(2) / lat.cell_area * self.g0.hat(lat.q);
        Ok(match self.structure {
            BumpStructure::Triangular => pref,
            BumpStructure::Honeycomb => -pref,
        })
    }

    /// Real-space evaluation of V(x; a) from the truncated translate sum.
    pub fn potential_at(&self, lat: &TriangularLattice, x: Vec2, reach: i64) -> f64 {
        let sites = self.sites(lat);
        let mut acc = 0.0;
        for n1 in -reach..=reach {
            for n2 in -reach..=reach {
                let v = lat.direct((n1, n2));
                for c in &sites {
                    let d = [x[0] - c[0] + v[0], x[1] - c[1] + v[1]];
                    acc += self.g0.value(crate::geometry::norm(d));
                }
            }
        }
        acc
    }

    /// (1/|Ω|)∫_Ω e^{-i(k1+k2)·y} V(y; a) dy by the periodic trapezoid rule on an n×n grid.
    pub fn v11_quadrature(&self, a: f64, n: usize) -> Result<f64> {
        let lat = TriangularLattice::new(a)?;
        let radius = self.g0.support_radius(1e-17);
        let tail = self.g0.value(radius).abs();
        if !tail.is_finite() || tail > 1e-12 {
            return Err(Error::PrecisionLoss(format!(
                "bump tail {tail:e} too large at the quadrature boundary"
            )));
        }
        let reach = (radius / (0.5 * a)).ceil() as i64 + 2;
        let kk = lat.dual((1, 1));
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                let y = [s * lat.v1[0] + t * lat.v2[0], s * lat.v1[1] + t * lat.v2[1]];
                let v = self.potential_at(&lat, y, reach);
                acc += v * Complex64::from_polar(1.0, -dot(kk, y));
            }
        }
        let val = acc / (n * n) as f64;
        if val.im.abs() > 1e-9 * val.re.abs().max(1e-12) {
            return Err(Error::PrecisionLoss(format!(
                "quadrature returned imaginary part {:e}",
                val.im
            )));
        }
        Ok(val.re)
    }

    pub fn v11_scan(&self, a_values: &[f64], n: usize) -> Result<Vec<V11Sample>> {
        a_values
            .iter()
            .map(|&a| {
                Ok(V11Sample {
                    a,
                    v11_poisson: self.v11_poisson(a)?,
                    v11_quadrature: self.v11_quadrature(a, n)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> TriangularLattice {
        TriangularLattice::unit()
    }

    #[test]
    fn builtin_pair_coefficients() {
        let (v, w) = builtin_potentials(lat());
        assert_eq!(v.get((1, 1)), Complex64::new(0.5, 0.0));
        assert_eq!(v.get((0, 0)), Complex64::new(0.0, 0.0));
        assert_eq!(w.get((-1, 0)), Complex64::new(0.0, 0.5));
        assert!(v.validate_honeycomb().pass());
        let wr = w.validate_w();
        assert!(wr.pass());
        assert!((wr.proxy() - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn honeycomb_failures_are_reported() {
        let single = FourierPotential::from_coeffs(lat(), [((1, 0), Complex64::new(1.0, 0.0))]);
        let rep = single.validate_honeycomb();
        assert!(!rep.rotation_invariant.pass);
        let imag = FourierPotential::from_coeffs(lat(), [((1, 1), Complex64::new(0.0, 1.0))]);
        let rep = imag.validate_honeycomb();
        assert!(!rep.real.pass && !rep.even.pass);
    }

    #[test]
    fn degenerate_w_proxies() {
        let w0 = FourierPotential::zero(lat());
        assert!(!w0.validate_w().nondegenerate);
        let i2 = Complex64::new(0.0, 0.5);
        let w = FourierPotential::from_coeffs(
            lat(),
            [((1, 0), -i2), ((-1, 0), i2), ((0, 1), i2), ((0, -1), -i2)],
        );
        let rep = w.validate_w();
        assert!(rep.odd.pass);
        assert!(!rep.nondegenerate);
    }

    #[test]
    fn builtin_values_at_origin_and_symmetries() {
        let (v, w) = builtin_potentials(lat());
        assert!((v.eval([0.0, 0.0]).re - 3.0).abs() < 1e-14);
        assert!(w.eval([0.0, 0.0]).norm() < 1e-14);
        let r = crate::geometry::rotation_matrix();
        for x in [[0.3, -0.7], [1.1, 0.2], [-0.45, 0.9]] {
            let rt = [r[0][0] * x[0] + r[1][0] * x[1], r[0][1] * x[0] + r[1][1] * x[1]];
            assert!((v.eval(rt) - v.eval(x)).norm() < 1e-12);
            assert!((v.eval([-x[0], -x[1]]) - v.eval(x)).norm() < 1e-12);
            assert!((w.eval([-x[0], -x[1]]) + w.eval(x)).norm() < 1e-12);
        }
        let g = FourierPotential::zero(lat()).eval_on_grid(4, 4).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn json_round_trip_and_closure() {
        let (v, _) = builtin_potentials(lat());
        let back = FourierPotential::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        let half = r#"{"lattice_scale": 1.0, "coeffs": [[1, 0, 0.5, 0.0]]}"#;
        let p = FourierPotential::from_json(half).unwrap();
        assert_eq!(p.get((-1, 0)), Complex64::new(0.5, 0.0));
        let bad = r#"{"lattice_scale": 1.0, "coeffs": [[1, 0, 0.5, 0.0], [-1, 0, 0.4, 0.0]]}"#;
        assert!(FourierPotential::from_json(bad).is_err());
    }

    #[test]
    fn non_real_grid_rejected() {
        let p = FourierPotential::from_coeffs(lat(), [((1, 0), Complex64::new(1.0, 0.0))]);
        assert!(p.eval_on_grid(3, 3).is_err());
    }

    #[test]
    fn tanh_wall_basics() {
        let w = DomainWall::tanh(1.0, 1.0).unwrap();
        assert_eq!(w.value(0.0), 0.0);
        assert!((w.value(40.0) - 1.0).abs() < 1e-15);
        assert!((w.value(-40.0) + 1.0).abs() < 1e-15);
        assert!(w.moment_check(2.6).converged);
        let z = 3.7;
        assert!((w.integral_from_zero(z) - z.cosh().ln()).abs() < 1e-13);
        assert!((w.integral_from_zero(400.0) - (400.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = CompactBump {
            center: 0.2,
            radius: 1.5,
            amplitude: 1.0,
        };
        let h = 1e-5;
        for z in [-0.9, 0.0, 0.4, 1.2] {
            let (s, d, dd) = b.jet(z);
            let (sp, sm) = (b.jet(z + h).0, b.jet(z - h).0);
            assert!((d - (sp - sm) / (2.0 * h)).abs() < 1e-7);
            assert!((dd - (sp - 2.0 * s + sm) / (h * h)).abs() < 1e-3);
        }
        assert_eq!(b.jet(1.8), (0.0, 0.0, 0.0));
    }

    #[test]
    fn natural_wall_keeps_asymptotes() {
        let w = DomainWall::natural(1.0, 1.0, 0.8, 2.0).unwrap();
        assert!((w.value(10.0) - 1.0).abs() < 1e-8);
        assert!((w.value(-10.0) + 1.0).abs() < 1e-8);
        let h = 1e-5;
        let d = (w.value(0.3 + h) - w.value(0.3 - h)) / (2.0 * h);
        assert!((w.derivative(0.3) - d).abs() < 1e-6);
    }

    #[test]
    fn gaussian_hat_against_radial_quadrature() {
        // ĝ(ξ) = (1/2π) ∫ g(r) J0(ξ r) r dr; check at ξ = 0 where J0 = 1
        let g = RadialBump::Gaussian { s: 0.4 };
        let num = gauss_legendre_composite(|r| g.value(r) * r, 0.0, 10.0, 200) / (2.0 * PI);
        assert!((num - g.hat(0.0)).abs() < 1e-12);
    }
}
