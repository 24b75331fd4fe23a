//! Closed-form risk bounds and rate exponents.
//!
//! * [`upper_bound_risk`]: variance + bias bound for the truncated series
//!   estimator on a generalized-ellipse generator class.
//! * [`lower_bound`]: the packing/Fano minimax lower bound with its two
//!   admissibility conditions.
//! * [`sobolev_rate`], [`oracle_zeta`]: the Sobolev rate exponent
//!   `min{1/2, (s+t)/(2t+d)}` and the bias/variance balancing cutoff.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_truncation, sup_norm, weight, BasisIndex, BasisKind, TruncationSet, WeightRule};
use crate::error::{Error, Result};
use crate::loss::{holder_conjugate, lp_norm, EllipseClass};

/// How `A_Z`, `B_Z` scale with `|Z|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentConvention {
    /// `|Z|^{1/2}` (stated for `p, q ≥ 2`).
    #[default]
    HalfPower,
    /// `|Z|^{1/p}` and `|Z|^{1/q}`.
    ExponentPower,
}

/// `|Z|^{1/2 or 1/p} · sup_{z∈Z} a_z` for the class (constant excluded).
pub fn class_scale(
    class: &EllipseClass,
    indices: &TruncationSet,
    convention: ExponentConvention,
) -> Result<f64> {
    let mut count = 0usize;
    let mut sup = 0.0f64;
    for z in indices.iter().filter(|z| !z.is_constant()) {
        count += 1;
        sup = sup.max(weight(&class.weights, z)?);
    }
    if count == 0 {
        return Err(Error::InvalidParameter("empty index set".into()));
    }
    let exponent = match convention {
        ExponentConvention::HalfPower => 0.5,
        ExponentConvention::ExponentPower => 1.0 / class.exponent,
    };
    Ok((count as f64).powf(exponent) * sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub zeta: u32,
    pub n: u64,
    pub variance: f64,
    pub bias: f64,
    pub total: f64,
    /// Set when `p ≠ 2`: the moment constant `c_{p'}` is taken as 1.
    pub constant_unspecified: bool,
    /// Upper bound on the neglected part of a numerically summed bias tail.
    pub tail_remainder: f64,
}

fn sobolev_order(rule: &WeightRule) -> Option<f64> {
    match rule {
        WeightRule::Sobolev { order } => Some(*order),
        _ => None,
    }
}

/// Number of `z ∈ Z^d` with `‖z‖_∞ = k`.
fn shell_count(k: u64, dim: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let d = dim as i32;
    (2.0 * k as f64 + 1.0).powi(d) - (2.0 * k as f64 - 1.0).powi(d)
}

// Shells summed explicitly before the integral remainder takes over.
const TAIL_SHELLS: u64 = 20_000;

/// `‖{1/(a_z b_z)}_{z∉Z}‖_r` for Sobolev weights of total order `order`,
/// together with a bound on the neglected remainder (of the r-th power sum).
fn sobolev_tail(kind: BasisKind, dim: usize, zeta: u32, order: f64, r: f64) -> Result<(f64, f64)> {
    let first = u64::from(zeta) + 1;
    match kind {
        BasisKind::Fourier => {
            if r.is_infinite() {
                let k = first as f64;
                return Ok(((1.0 + k * k).powf(-order / 2.0), 0.0));
            }
            let alpha = order * r;
            if alpha <= dim as f64 {
                return Err(Error::ConditionFailed(format!(
                    "bias tail diverges: (s+t)·r = {alpha} ≤ d = {dim}"
                )));
            }
            let mut partial = 0.0;
            let last = first + TAIL_SHELLS;
            for k in first..last {
                let kf = k as f64;
                partial += shell_count(k, dim) * (1.0 + kf * kf).powf(-alpha / 2.0);
            }
            let d = dim as f64;
            let remainder =
                2.0 * d * 3f64.powf(d - 1.0) * ((last - 1) as f64).powf(d - alpha) / (alpha - d);
            Ok(((partial + remainder).powf(1.0 / r), remainder))
        }
        BasisKind::Haar => {
            if r.is_infinite() {
                return Ok((2f64.powf(-(first as f64) * order), 0.0));
            }
            // Σ_{i ≥ first} 2^i · 2^{-i·order·r}
            let ratio = 2f64.powf(1.0 - order * r);
            if ratio >= 1.0 {
                return Err(Error::ConditionFailed(format!(
                    "bias tail diverges: (s+t)·r = {} ≤ 1",
                    order * r
                )));
            }
            Ok(((ratio.powf(first as f64) / (1.0 - ratio)).powf(1.0 / r), 0.0))
        }
    }
}

/// Bound on `E d_{F_D}(P, P̂_Z)` uniformly over `P ∈ F_G`:
///
/// `L_D/√n · ‖{‖φ_z‖_∞/a_z}_{z∈Z}‖_{p'} + L_D L_G ‖{1/(a_z b_z)}_{z∉Z}‖_{1/(1−1/p−1/q)}`.
///
/// `indices` must be a complete cutoff set from [`enumerate_truncation`]
/// (with or without the constant). The bias tail is available for
/// Sobolev-form weights on both classes.
pub fn upper_bound_risk(
    discriminator: &EllipseClass,
    generator: &EllipseClass,
    indices: &TruncationSet,
    n: u64,
) -> Result<UpperBoundReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let full = enumerate_truncation(indices.kind(), indices.zeta(), indices.dim())?;
    let nonconstant = indices.iter().filter(|z| !z.is_constant()).count();
    if nonconstant != full.len() - usize::from(indices.kind() == BasisKind::Fourier) {
        return Err(Error::InvalidParameter(
            "upper bound needs a complete cutoff set {‖z‖ ≤ ζ}".into(),
        ));
    }
    let p = discriminator.exponent;
    let q = generator.exponent;
    let inv = 1.0 - 1.0 / p - 1.0 / q;
    if inv < -1e-15 {
        return Err(Error::ConditionFailed(format!(
            "1 − 1/p − 1/q ≥ 0 required for the bias exponent (p = {p}, q = {q})"
        )));
    }
    let r = if inv <= 1e-15 { f64::INFINITY } else { 1.0 / inv };
    let p_conj = holder_conjugate(p);
    let ratios = indices
        .iter()
        .filter(|z| !z.is_constant())
        .map(|z| Ok(sup_norm(z) / weight(&discriminator.weights, z)?))
        .collect::<Result<Vec<_>>>()?;
    let variance = discriminator.radius / (n as f64).sqrt() * lp_norm(ratios, p_conj);

    let (s, t) = match (
        sobolev_order(&discriminator.weights),
        sobolev_order(&generator.weights),
    ) {
        (Some(s), Some(t)) => (s, t),
        _ => {
            return Err(Error::InvalidParameter(
                "bias tail requires Sobolev-form weights on both classes".into(),
            ))
        }
    };
    let (tail, tail_remainder) =
        sobolev_tail(indices.kind(), indices.dim(), indices.zeta(), s + t, r)?;
    let bias = discriminator.radius * generator.radius * tail;
    Ok(UpperBoundReport {
        zeta: indices.zeta(),
        n,
        variance,
        bias,
        total: variance + bias,
        constant_unspecified: p != 2.0,
        tail_remainder,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    Converged,
    Diverges,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricConstant {
    pub cap: u32,
    /// `Σ_{0<‖z‖≤cap} ‖φ_z‖_∞² / a_z²`.
    pub partial_sum: f64,
    /// Bound (Sobolev, geometric decay) or estimate of the neglected tail.
    pub remainder: f64,
    pub verdict: Convergence,
}

impl ParametricConstant {
    pub fn total(&self) -> f64 {
        self.partial_sum + self.remainder
    }

    /// `L_D·sqrt(A/n)` when the series converged.
    pub fn risk_bound(&self, radius: f64, n: u64) -> Option<f64> {
        (self.verdict == Convergence::Converged).then(|| radius * (self.total() / n as f64).sqrt())
    }
}

/// The constant `A = Σ_z ‖φ_z‖_∞²/a_z²` of the parametric-rate condition.
///
/// Sums resolution shells `1..=cap`. For Sobolev weights convergence is
/// decided analytically; otherwise by the decay of the last shells.
pub fn parametric_constant(
    class: &EllipseClass,
    kind: BasisKind,
    dim: usize,
    cap: u32,
) -> Result<ParametricConstant> {
    if cap < 4 {
        return Err(Error::InvalidParameter(format!("cap {cap} too small (need ≥ 4)")));
    }
    let set = enumerate_truncation(kind, cap, dim)?;
    let mut shells = vec![0.0; cap as usize + 1];
    for z in set.iter().filter(|z| !z.is_constant()) {
        let a = weight(&class.weights, z)?;
        shells[z.resolution() as usize] += (sup_norm(z) / a).powi(2);
    }
    let partial_sum: f64 = shells.iter().sum();
    let d = dim as f64;
    let last = shells[cap as usize];
    let (verdict, remainder) = match (&class.weights, kind) {
        (WeightRule::Sobolev { order }, BasisKind::Fourier) => {
            if 2.0 * order > d {
                // shell_k ≤ 2^d · 2d·3^{d−1} k^{d−1} · k^{−2s}
                let c = 2f64.powf(d) * 2.0 * d * 3f64.powf(d - 1.0);
                let rem = c * f64::from(cap).powf(d - 2.0 * order) / (2.0 * order - d);
                (Convergence::Converged, rem)
            } else {
                (Convergence::Diverges, f64::INFINITY)
            }
        }
        (WeightRule::Sobolev { order }, BasisKind::Haar) => {
            // shell_i = 4^{i(1−s)}
            let ratio = 4f64.powf(1.0 - order);
            if ratio < 1.0 {
                (Convergence::Converged, last * ratio / (1.0 - ratio))
            } else {
                (Convergence::Diverges, f64::INFINITY)
            }
        }
        _ => decay_verdict(&shells[1..]),
    };
    Ok(ParametricConstant {
        cap,
        partial_sum,
        remainder,
        verdict,
    })
}

fn decay_verdict(shells: &[f64]) -> (Convergence, f64) {
    let m = shells.len();
    let tail = &shells[m / 2..];
    let last = shells[m - 1];
    if last == 0.0 {
        return (Convergence::Converged, 0.0);
    }
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    if max_ratio < 0.95 {
        return (Convergence::Converged, last * max_ratio / (1.0 - max_ratio));
    }
    // power-law fit log S_k ≈ c − β log k over the tail shells
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(i, &s)| (((m / 2 + i + 1) as f64).ln(), s.ln()))
        .collect();
    if pts.len() < 3 {
        return (Convergence::Inconclusive, f64::NAN);
    }
    let beta = -ols(&pts).0;
    if beta > 1.1 {
        (Convergence::Converged, last * m as f64 / (beta - 1.0))
    } else if beta < 0.9 {
        (Convergence::Diverges, f64::INFINITY)
    } else {
        (Convergence::Inconclusive, f64::NAN)
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const TUNING_CONDITION: &str = "B_Z ≥ 16 L_G √(n/log 2)";
pub const DENSITY_CONDITION: &str = "2 (L_G/B_Z) Σ ‖φ_z‖_∞ ≤ 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub zeta: u32,
    pub n: u64,
    pub size: usize,
    pub a_z: f64,
    pub b_z: f64,
    pub conditions: Vec<ConditionCheck>,
    /// `L_G L_D |Z| / (64 A_Z B_Z)` when every condition holds.
    pub bound: Option<f64>,
}

impl LowerBoundReport {
    pub fn failed_conditions(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.conditions.iter().filter(|c| !c.holds)
    }
}

/// Minimax lower bound over `F_G` under `d_{F_D}` for the index set `Z`.
pub fn lower_bound(
    discriminator: &EllipseClass,
    generator: &EllipseClass,
    indices: &TruncationSet,
    n: u64,
    convention: ExponentConvention,
) -> Result<LowerBoundReport> {
    let nonconstant: Vec<&BasisIndex> = indices.iter().filter(|z| !z.is_constant()).collect();
    let size = nonconstant.len();
    let a_z = class_scale(discriminator, indices, convention)?;
    let b_z = class_scale(generator, indices, convention)?;
    let l_g = generator.radius;
    let l_d = discriminator.radius;
    let tuning_rhs = 16.0 * l_g * (n as f64 / LN_2).sqrt();
    let sup_sum: f64 = nonconstant.iter().map(|z| sup_norm(z)).sum();
    let density_lhs = 2.0 * l_g / b_z * sup_sum;
    let conditions = vec![
        ConditionCheck {
            name: TUNING_CONDITION.into(),
            lhs: b_z,
            rhs: tuning_rhs,
            holds: b_z >= tuning_rhs,
        },
        ConditionCheck {
            name: DENSITY_CONDITION.into(),
            lhs: density_lhs,
            rhs: 1.0,
            holds: density_lhs <= 1.0,
        },
    ];
    let bound = conditions
        .iter()
        .all(|c| c.holds)
        .then(|| l_g * l_d * size as f64 / (64.0 * a_z * b_z));
    Ok(LowerBoundReport {
        zeta: indices.zeta(),
        n,
        size,
        a_z,
        b_z,
        conditions,
        bound,
    })
}

/// Rate exponent `min{1/2, (s+t)/(2t+d)}` for `W^{s,2}` loss over `W^{t,2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub s: f64,
    pub t: f64,
    pub d: usize,
    pub exponent: f64,
    /// `n^{-1/2}` regardless of `t` (happens when `2s ≥ d`).
    pub parametric: bool,
}

pub fn sobolev_rate(s: f64, t: f64, d: usize) -> Result<RateSpec> {
    if !(s >= 0.0 && t >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be finite and non-negative (s = {s}, t = {t})"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if s == 0.0 && t == 0.0 {
        return Err(Error::InvalidParameter(
            "s = t = 0 gives rate exponent 0; estimation is impossible".into(),
        ));
    }
    let ratio = (s + t) / (2.0 * t + d as f64);
    Ok(RateSpec {
        s,
        t,
        d,
        exponent: ratio.min(0.5),
        parametric: 2.0 * s >= d as f64,
    })
}

/// `round(n^{1/(2t+d)})`, at least 1.
pub fn oracle_zeta(t: f64, d: usize, n: u64) -> u32 {
    let z = (n.max(1) as f64).powf(1.0 / (2.0 * t + d as f64)).round();
    (z as u32).max(1)
}

/// Cutoff `⌈(256 L_G² n / log 2)^{1/(2t+d)}⌉` used for the Sobolev lower bound.
pub fn lower_bound_zeta(t: f64, d: usize, n: u64, l_g: f64) -> u32 {
    let z = (256.0 * l_g * l_g * n as f64 / LN_2).powf(1.0 / (2.0 * t + d as f64));
    (z.ceil() as u32).max(1)
}

/// Everything the bound table shows for one Sobolev configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevSummary {
    pub rate: RateSpec,
    pub upper: UpperBoundReport,
    pub lower: LowerBoundReport,
}

/// Upper bound at the oracle cutoff and lower bound at the packing cutoff
/// (or `lower_zeta` when given), Fourier basis, `p = q = 2`.
///
/// Both sides are evaluated shell by shell on the cube `{‖z‖_∞ ≤ ζ}`, so no
/// index set is materialized; the results agree with [`upper_bound_risk`]
/// and [`lower_bound`] on the enumerated sets.
pub fn sobolev_summary(
    s: f64,
    t: f64,
    d: usize,
    n: u64,
    l_d: f64,
    l_g: f64,
    lower_zeta: Option<u32>,
) -> Result<SobolevSummary> {
    let rate = sobolev_rate(s, t, d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    for (name, v) in [("L_D", l_d), ("L_G", l_g)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let upper = cube_upper(s, t, d, n, l_d, l_g, oracle_zeta(t, d, n))?;
    let zl = lower_zeta.unwrap_or_else(|| lower_bound_zeta(t, d, n, l_g));
    let lower = cube_lower(s, t, d, n, l_d, l_g, zl)?;
    Ok(SobolevSummary { rate, upper, lower })
}

fn sobolev_weight_at(order: f64, k: u32) -> f64 {
    (1.0 + f64::from(k).powi(2)).powf(order / 2.0)
}

// Σ_{‖z‖_∞ = k} ‖φ_z‖_∞² = (1 + 4k)^d − (4k − 3)^d for k ≥ 1.
fn shell_sup_square_sum(k: u32, dim: usize) -> f64 {
    let k = f64::from(k);
    let d = dim as i32;
    (1.0 + 4.0 * k).powi(d) - (4.0 * k - 3.0).powi(d)
}

fn cube_upper(s: f64, t: f64, d: usize, n: u64, l_d: f64, l_g: f64, zeta: u32) -> Result<UpperBoundReport> {
    let sum: f64 = (1..=zeta)
        .map(|k| shell_sup_square_sum(k, d) / sobolev_weight_at(s, k).powi(2))
        .sum();
    let variance = l_d / (n as f64).sqrt() * sum.sqrt();
    let (tail, tail_remainder) = sobolev_tail(BasisKind::Fourier, d, zeta, s + t, f64::INFINITY)?;
    let bias = l_d * l_g * tail;
    Ok(UpperBoundReport {
        zeta,
        n,
        variance,
        bias,
        total: variance + bias,
        constant_unspecified: false,
        tail_remainder,
    })
}

fn cube_lower(s: f64, t: f64, d: usize, n: u64, l_d: f64, l_g: f64, zeta: u32) -> Result<LowerBoundReport> {
    if zeta == 0 {
        return Err(Error::InvalidParameter("empty index set".into()));
    }
    let dim = d as i32;
    let size = (2.0 * f64::from(zeta) + 1.0).powi(dim) - 1.0;
    // Sobolev weights are monotone in ‖z‖_∞, so the sup sits on an end shell
    let sup = |order: f64| sobolev_weight_at(order, 1).max(sobolev_weight_at(order, zeta));
    let a_z = size.sqrt() * sup(s);
    let b_z = size.sqrt() * sup(t);
    let sup_sum = (1.0 + 2.0 * SQRT_2 * f64::from(zeta)).powi(dim) - 1.0;
    let tuning_rhs = 16.0 * l_g * (n as f64 / LN_2).sqrt();
    let density_lhs = 2.0 * l_g / b_z * sup_sum;
    let conditions = vec![
        ConditionCheck {
            name: TUNING_CONDITION.into(),
            lhs: b_z,
            rhs: tuning_rhs,
            holds: b_z >= tuning_rhs,
        },
        ConditionCheck {
            name: DENSITY_CONDITION.into(),
            lhs: density_lhs,
            rhs: 1.0,
            holds: density_lhs <= 1.0,
        },
    ];
    let bound = conditions
        .iter()
        .all(|c| c.holds)
        .then(|| l_g * l_d * size / (64.0 * a_z * b_z));
    Ok(LowerBoundReport {
        zeta,
        n,
        size: size as usize,
        a_z,
        b_z,
        conditions,
        bound,
    })
}
