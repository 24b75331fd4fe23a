//! Samplers and seeded Monte Carlo experiments.
//!
//! Every replication owns a child seed derived from the master seed and its
//! `(n-index, replication-index)` pair by [`child_seed`], so results do not
//! depend on how replications are spread over worker threads. Per-replication
//! losses are sorted before they are averaged, which makes means bit-stable.
//!
//! Estimates that may dip below zero are sampled from their positive part
//! `max(p̂, 0)/∫max(p̂, 0)`; the mass `∫max(p̂, 0)` is computed by quadrature
//! and reported alongside the samples.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_truncation, BasisIndex, BasisKind};
use crate::bounds::{ols, oracle_zeta};
use crate::coeffs::CoefficientVector;
use crate::density::{
    make_density, nonneg_check, positive_mass, positive_part_projection, random_fourier_density,
    DensityDocument, SeriesDensity, DEFAULT_QUADRATURE_NODES, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::estimator::{fit, Dataset, EstimatorConfig, ZetaChoice};
use crate::loss::{adversarial_loss, EllipseClass, KernelSpectrum};

/// splitmix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `h(h(h(master) ⊕ n_index) ⊕ rep_index)` with `h` the splitmix64 mix.
pub fn child_seed(master: u64, n_index: u64, rep_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n_index) ^ rep_index)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Requires a non-negativity certificate; samples exactly from `p`.
    #[default]
    Certified,
    /// Samples from `max(p, 0)` renormalized.
    PositivePart,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub data: Dataset,
    /// `1 + Σ|c_z|·‖φ_z‖_∞`.
    pub envelope: f64,
    pub proposals: u64,
    /// `∫max(p, 0)`; exactly 1 in certified mode.
    pub mass: f64,
}

impl Sample {
    pub fn acceptance_rate(&self) -> f64 {
        self.data.len() as f64 / self.proposals as f64
    }
}

// Grid for the sampler's certificate: fine enough that the Lipschitz slack is
// small next to typical minima, bounded so the check stays cheap.
fn certificate_grid(p: &SeriesDensity) -> usize {
    let res = p.max_resolution() as usize;
    match (p.kind(), p.dim()) {
        (BasisKind::Haar, _) => 1usize << (res + 1),
        (_, 1) => (512 * (res + 1)).min(1 << 20),
        (_, 2) => (64 * (res + 1)).min(2048),
        _ => (16 * (res + 1)).min(200),
    }
}

/// Draws `m` points from `p` by uniform proposals under the envelope
/// `M = 1 + Σ|c_z|·‖φ_z‖_∞`.
pub fn rejection_sample(p: &SeriesDensity, m: usize, seed: u64, mode: SamplingMode) -> Result<Sample> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let mass = match mode {
        SamplingMode::Certified => {
            if !nonneg_check(p, certificate_grid(p))?.verdict.is_nonnegative() {
                return Err(Error::NotCertified);
            }
            1.0
        }
        SamplingMode::PositivePart => {
            let mass = positive_mass(p, DEFAULT_QUADRATURE_NODES)?;
            if mass <= 0.0 {
                return Err(Error::InvalidParameter("density has no positive part".into()));
            }
            mass
        }
    };
    let envelope = 1.0 + p.spectral_mass();
    let dim = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = p.probe();
    let mut coords = Vec::with_capacity(m * dim);
    let mut x = vec![0.0; dim];
    let mut proposals = 0u64;
    while coords.len() < m * dim {
        proposals += 1;
        x.iter_mut().for_each(|v| *v = rng.gen::<f64>());
        let y = rng.gen::<f64>() * envelope;
        if y < probe.at(&x) {
            coords.extend_from_slice(&x);
        }
    }
    Ok(Sample {
        data: Dataset::new(dim, coords)?,
        envelope,
        proposals,
        mass,
    })
}

/// Truncation rule used inside experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ZetaRule {
    Fixed { value: u32 },
    /// `round(n^{1/(2t+d)})`.
    Oracle { t: f64 },
    /// Leave-one-out CV over the default grid.
    Adaptive,
}

impl ZetaRule {
    fn choice(&self, n: usize, dim: usize) -> ZetaChoice {
        match self {
            ZetaRule::Fixed { value } => ZetaChoice::Fixed(*value),
            ZetaRule::Oracle { t } => ZetaChoice::Fixed(oracle_zeta(*t, dim, n as u64)),
            ZetaRule::Adaptive => ZetaChoice::Adaptive(None),
        }
    }
}

/// One replication: draw `n` points, fit, and evaluate the exact loss
/// `d(P, P̂)` over the union of both spectra.
pub fn replication_loss(
    truth: &SeriesDensity,
    loss: &EllipseClass,
    n: usize,
    zeta: &ZetaRule,
    seed: u64,
) -> Result<f64> {
    let sample = rejection_sample(truth, n, seed, SamplingMode::Certified)?;
    let config = EstimatorConfig {
        kind: truth.kind(),
        zeta: zeta.choice(n, truth.dim()),
    };
    let estimate = fit(&sample.data, &config)?.density;
    adversarial_loss(&(truth.coefficients() - estimate.coefficients()), loss)
}

fn run_indexed<T, F>(count: usize, workers: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..count).into_par_iter().map(&job).collect::<Result<Vec<T>>>();
        match workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..count).map(job).collect()
    }
}

/// Mean and standard error of a loss sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: usize,
}

impl RiskEstimate {
    /// Summarizes after sorting, so the result is independent of input order.
    pub fn from_losses(mut losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::InvalidParameter("no replications".into()));
        }
        losses.sort_by(f64::total_cmp);
        let r = losses.len() as f64;
        let mean = losses.iter().sum::<f64>() / r;
        let stderr = if losses.len() > 1 {
            let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        } else {
            0.0
        };
        Ok(RiskEstimate {
            mean,
            stderr,
            replications: losses.len(),
        })
    }
}

/// Per-replication losses for replication indices `reps` at grid position
/// `n_index`. Any split of the index range gives the same losses.
#[allow(clippy::too_many_arguments)]
pub fn replication_losses(
    truth: &SeriesDensity,
    loss: &EllipseClass,
    n: usize,
    zeta: &ZetaRule,
    master_seed: u64,
    n_index: u64,
    reps: std::ops::Range<usize>,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    let start = reps.start;
    run_indexed(reps.len(), workers, |i| {
        let seed = child_seed(master_seed, n_index, (start + i) as u64);
        replication_loss(truth, loss, n, zeta, seed)
    })
}

/// `R` replications at a single `n`.
pub fn estimate_risk(
    truth: &SeriesDensity,
    loss: &EllipseClass,
    n: usize,
    zeta: &ZetaRule,
    replications: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<RiskEstimate> {
    if replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    let losses = replication_losses(truth, loss, n, zeta, seed, 0, 0..replications, workers)?;
    RiskEstimate::from_losses(losses)
}

/// Log-log least-squares fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// OLS of `log risk` on `log n`. Two points are accepted (exact line).
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points to fit a rate".into()));
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(n, risk) in points {
        if risk.is_nan() || risk <= 0.0 || n.is_nan() || n <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rate fit needs positive n and risk, got ({n}, {risk})"
            )));
        }
        logs.push((n.ln(), risk.ln()));
    }
    let distinct = logs.iter().any(|p| p.0 != logs[0].0);
    if !distinct {
        return Err(Error::InvalidParameter("rate fit needs at least two distinct n".into()));
    }
    let (slope, intercept) = ols(&logs);
    let residual_rms = (logs
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / logs.len() as f64)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms,
    })
}

// ---------------------------------------------------------------------------
// Experiment configuration

/// How the true density is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum TruthSpec {
    /// `modes` random Fourier modes with `‖z‖_∞ ≤ max_frequency`, drawn once.
    Parametric {
        modes: usize,
        max_frequency: u32,
        #[serde(default = "default_coef_range")]
        coef_range: (f64, f64),
    },
    /// All Fourier modes with `0 < ‖z‖_∞ ≤ round(n^{1/(2t+d)})`,
    /// `|c_z| ∝ ‖z‖_∞^{−(t+d/2+ε)}`, scaled so `Σ|c_z|·‖φ_z‖_∞ = mass`.
    Nonparametric {
        t: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_mass")]
        mass: f64,
    },
    Custom { density: DensityDocument },
}

fn default_coef_range() -> (f64, f64) {
    (0.05, 0.12)
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_mass() -> f64 {
    0.9
}

/// Discriminator class of the loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weights", rename_all = "kebab-case")]
pub enum LossSpec {
    /// `a_z = (1 + ‖z‖_∞²)^{s/2}`; `s = 0` is the unweighted class.
    Sobolev {
        s: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// RKHS ball with `κ̃_z = ratio^{‖z‖_∞}` for `‖z‖_∞ ≤ cap`.
    Geometric {
        ratio: f64,
        cap: u32,
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

fn default_exponent() -> f64 {
    2.0
}

fn default_radius() -> f64 {
    1.0
}

impl LossSpec {
    pub fn build(&self, dim: usize) -> Result<EllipseClass> {
        match *self {
            LossSpec::Sobolev { s, exponent, radius } => EllipseClass::sobolev(s, exponent, radius),
            LossSpec::Geometric { ratio, cap, radius } => {
                EllipseClass::rkhs(KernelSpectrum::geometric(ratio, cap, dim)?, radius)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dim: usize,
    pub truth: TruthSpec,
    pub loss: LossSpec,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub zeta: ZetaRule,
    pub seed: u64,
    /// Rate exponent printed next to the fitted slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theoretical_exponent: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults for the parametric regime: six modes, unweighted `p = 2` loss.
    pub fn parametric(seed: u64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            dim: 1,
            truth: TruthSpec::Parametric {
                modes: 6,
                max_frequency: 4,
                coef_range: default_coef_range(),
            },
            loss: LossSpec::Sobolev {
                s: 0.0,
                exponent: 2.0,
                radius: 1.0,
            },
            n_grid: (7..=14).map(|k| 1usize << k).collect(),
            replications: 200,
            zeta: ZetaRule::Fixed { value: 4 },
            seed,
            theoretical_exponent: Some(-0.5),
        }
    }

    /// Defaults for the growing-spectrum regime tuned to `t = 1, d = 1, s = 0`.
    pub fn nonparametric(seed: u64) -> Self {
        ExperimentConfig {
            truth: TruthSpec::Nonparametric {
                t: 1.0,
                epsilon: default_epsilon(),
                mass: default_mass(),
            },
            zeta: ZetaRule::Oracle { t: 1.0 },
            theoretical_exponent: Some(-1.0 / 3.0),
            ..Self::parametric(seed)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::InvalidParameter("n_grid must be non-empty and positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n_grid must be strictly increasing".into()));
        }
        if let TruthSpec::Custom { density } = &self.truth {
            if density.d != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: density.d,
                });
            }
        }
        Ok(())
    }

    /// The truth used at sample size `n`.
    pub fn truth_at(&self, n: usize) -> Result<SeriesDensity> {
        match &self.truth {
            TruthSpec::Parametric {
                modes,
                max_frequency,
                coef_range,
            } => parametric_truth(self.dim, *modes, *max_frequency, *coef_range, self.seed),
            TruthSpec::Nonparametric { t, epsilon, mass } => {
                let k = oracle_zeta(*t, self.dim, n as u64);
                nonparametric_truth(self.dim, k, *t, *epsilon, *mass, self.seed)
            }
            TruthSpec::Custom { density } => SeriesDensity::from_document(density),
        }
    }
}

/// Random parametric truth, redrawn until it is certified non-negative.
pub fn parametric_truth(
    dim: usize,
    modes: usize,
    max_frequency: u32,
    coef_range: (f64, f64),
    seed: u64,
) -> Result<SeriesDensity> {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, u64::MAX, 0));
    for _ in 0..1000 {
        let p = random_fourier_density(dim, modes, max_frequency, coef_range, &mut rng)?;
        if nonneg_check(&p, certificate_grid(&p))?.verdict.is_nonnegative() {
            return Ok(p);
        }
    }
    Err(Error::NotCertified)
}

fn index_sign(seed: u64, z: &BasisIndex) -> f64 {
    let mut h = splitmix64(seed);
    for c in z.to_coords(0).into_iter().chain(std::iter::once(i64::MIN)) {
        h = splitmix64(h ^ c as u64);
    }
    if h & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Growing-spectrum truth with `|c_z| ∝ ‖z‖_∞^{−(t+d/2+ε)}` on `0 < ‖z‖_∞ ≤ k`.
///
/// Signs come from a hash of `(seed, z)`, so a mode keeps its sign as `k`
/// grows.
pub fn nonparametric_truth(
    dim: usize,
    k: u32,
    t: f64,
    epsilon: f64,
    mass: f64,
    seed: u64,
) -> Result<SeriesDensity> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::InvalidParameter(format!("mass {mass} not in (0, 1]")));
    }
    let decay = t + dim as f64 / 2.0 + epsilon;
    let set = enumerate_truncation(BasisKind::Fourier, k, dim)?.zero_mean();
    let raw: Vec<(BasisIndex, f64)> = set
        .iter()
        .map(|z| (z.clone(), f64::from(z.resolution()).powf(-decay)))
        .collect();
    let total: f64 = raw.iter().map(|(z, c)| c * crate::basis::sup_norm(z)).sum();
    let coeffs: CoefficientVector = raw
        .into_iter()
        .map(|(z, c)| {
            let s = index_sign(seed, &z);
            (z, s * c * mass / total)
        })
        .collect();
    make_density(dim, BasisKind::Fourier, coeffs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: usize,
    pub mean_risk: f64,
    pub stderr: f64,
    pub replications: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub points: Vec<RiskPoint>,
    pub fit: RateFit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theoretical_exponent: Option<f64>,
}

/// Risk at every `n` of the grid, then the log-log slope.
pub fn run_risk_curve(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RiskCurve> {
    cfg.validate()?;
    let loss = cfg.loss.build(cfg.dim)?;
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let truth = cfg.truth_at(n)?;
        let losses = replication_losses(
            &truth,
            &loss,
            n,
            &cfg.zeta,
            cfg.seed,
            i as u64,
            0..cfg.replications,
            workers,
        )?;
        let est = RiskEstimate::from_losses(losses)?;
        points.push(RiskPoint {
            n,
            mean_risk: est.mean,
            stderr: est.stderr,
            replications: est.replications,
        });
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.mean_risk)).collect();
    let fit = if pairs.len() >= 2 {
        fit_rate(&pairs)?
    } else {
        RateFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            residual_rms: f64::NAN,
        }
    };
    Ok(RiskCurve {
        points,
        fit,
        theoretical_exponent: cfg.theoretical_exponent,
    })
}

impl RiskCurve {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n,mean_risk,stderr,replications")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.n, p.mean_risk, p.stderr, p.replications)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "slope": self.fit.slope,
            "intercept": self.fit.intercept,
            "residual_rms": self.fit.residual_rms,
        });
        if let Some(e) = self.theoretical_exponent {
            v["theoretical_exponent"] = serde_json::json!(e);
        }
        v
    }

    /// Log-log plot with ±1 standard-error bars and the fitted line.
    pub fn write_svg(&self, mut w: impl Write) -> std::io::Result<()> {
        const W: f64 = 480.0;
        const H: f64 = 360.0;
        const PAD: f64 = 50.0;
        let xs: Vec<f64> = self.points.iter().map(|p| (p.n as f64).log10()).collect();
        let lo_hi = |p: &RiskPoint| {
            let lo = (p.mean_risk - p.stderr).max(p.mean_risk * 0.5);
            ((lo.max(f64::MIN_POSITIVE)).log10(), (p.mean_risk + p.stderr).log10())
        };
        let (x0, x1) = bounds_of(xs.iter().copied());
        let (y0, y1) = bounds_of(self.points.iter().flat_map(|p| {
            let (a, b) = lo_hi(p);
            [a, b]
        }));
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0).max(1e-12) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0).max(1e-12) * (H - 2.0 * PAD);
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )?;
        writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
        writeln!(
            w,
            r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log10 n</text>"#,
            W / 2.0,
            H - 15.0
        )?;
        writeln!(
            w,
            r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">log10 risk</text>"#,
            H / 2.0,
            H / 2.0
        )?;
        if self.fit.slope.is_finite() {
            let ln10 = std::f64::consts::LN_10;
            let line = |x: f64| (self.fit.intercept + self.fit.slope * x * ln10) / ln10;
            writeln!(
                w,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-dasharray="4 3"/>"#,
                sx(x0),
                sy(line(x0)),
                sx(x1),
                sy(line(x1))
            )?;
            writeln!(
                w,
                r#"<text x="{}" y="{}" font-size="12">slope {:.3}</text>"#,
                W - PAD - 80.0,
                PAD - 10.0,
                self.fit.slope
            )?;
        }
        for (p, &x) in self.points.iter().zip(&xs) {
            let (lo, hi) = lo_hi(p);
            writeln!(
                w,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="gray"/><circle cx="{0:.2}" cy="{3:.2}" r="3" fill="black"/>"#,
                sx(x),
                sy(lo),
                sy(hi),
                sy(p.mean_risk.log10())
            )?;
        }
        writeln!(w, "</svg>")
    }
}

fn bounds_of(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

// ---------------------------------------------------------------------------
// Density estimation vs sampling

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub m: usize,
    /// `d(P, P̂)` from the `n` real points.
    pub direct: RiskEstimate,
    /// `d(P, P̂′)` re-estimated from `m` draws of `P̂`'s positive part.
    pub resampled: RiskEstimate,
    /// `d(P, P̂′) − d(P, P̂)`, paired within replications.
    pub gap: RiskEstimate,
    /// `d(P, proj P̂⁺) − d(P, P̂)`: the limit of the gap as `m → ∞`.
    pub floor: RiskEstimate,
    /// Mean of `∫max(−p̂, 0) = ∫max(p̂, 0) − 1`, the mass removed by renormalizing.
    pub mass_deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceTable {
    pub n: usize,
    pub rows: Vec<EquivalenceRow>,
}

struct EquivalenceReplication {
    direct: f64,
    floor: f64,
    deficit: f64,
    resampled: Vec<f64>,
}

/// Estimate `P̂` from `n` real points, draw `m` fake points from `P̂`,
/// re-estimate `P̂′` on the same index set, and compare both to `P`.
#[allow(clippy::too_many_arguments)]
pub fn sampling_equivalence_experiment(
    truth: &SeriesDensity,
    loss: &EllipseClass,
    n: usize,
    m_grid: &[usize],
    zeta: &ZetaRule,
    replications: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<EquivalenceTable> {
    if replications == 0 || m_grid.is_empty() {
        return Err(Error::InvalidParameter("need replications ≥ 1 and a non-empty m grid".into()));
    }
    let per_rep = run_indexed(replications, workers, |r| {
        let real = rejection_sample(truth, n, child_seed(seed, 0, r as u64), SamplingMode::Certified)?;
        let config = EstimatorConfig {
            kind: truth.kind(),
            zeta: zeta.choice(n, truth.dim()),
        };
        let fitted = fit(&real.data, &config)?;
        let p_hat = fitted.density;
        let fixed = EstimatorConfig {
            kind: truth.kind(),
            zeta: ZetaChoice::Fixed(fitted.zeta),
        };
        let direct = adversarial_loss(&(truth.coefficients() - p_hat.coefficients()), loss)?;
        let indices: Vec<BasisIndex> = p_hat.coefficients().indices().cloned().collect();
        let (projected, mass) = if indices.is_empty() {
            (p_hat.clone(), 1.0)
        } else {
            positive_part_projection(&p_hat, &indices, DEFAULT_QUADRATURE_NODES)?
        };
        let floor = adversarial_loss(&(truth.coefficients() - projected.coefficients()), loss)? - direct;
        let resampled = m_grid
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let fake = rejection_sample(
                    &p_hat,
                    m,
                    child_seed(seed, 1 + j as u64, r as u64),
                    SamplingMode::PositivePart,
                )?;
                let p_prime = fit(&fake.data, &fixed)?.density;
                adversarial_loss(&(truth.coefficients() - p_prime.coefficients()), loss)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EquivalenceReplication {
            direct,
            floor,
            deficit: mass - 1.0,
            resampled,
        })
    })?;
    let direct = RiskEstimate::from_losses(per_rep.iter().map(|r| r.direct).collect())?;
    let floor = RiskEstimate::from_losses(per_rep.iter().map(|r| r.floor).collect())?;
    let mut deficits: Vec<f64> = per_rep.iter().map(|r| r.deficit).collect();
    deficits.sort_by(f64::total_cmp);
    let mass_deficit = deficits.iter().sum::<f64>() / deficits.len() as f64;
    let rows = m_grid
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            Ok(EquivalenceRow {
                m,
                direct: direct.clone(),
                resampled: RiskEstimate::from_losses(per_rep.iter().map(|r| r.resampled[j]).collect())?,
                gap: RiskEstimate::from_losses(
                    per_rep.iter().map(|r| r.resampled[j] - r.direct).collect(),
                )?,
                floor: floor.clone(),
                mass_deficit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceTable { n, rows })
}
