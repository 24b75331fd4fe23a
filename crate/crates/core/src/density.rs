//! Finite-spectrum densities `p = 1 + Σ_z c_z φ_z` and the packing family
//! used by the minimax lower bound.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{
    check_index, sup_norm, BasisEvaluator, BasisIndex, BasisKind, EvalScratch, TruncationSet,
};
use crate::bounds::ExponentConvention;
use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::loss::{ellipse_membership, EllipseClass};
use crate::quadrature::tensor_rule;

pub const SCHEMA_VERSION: u32 = 1;

/// Default nodes per axis for the quadrature oracles.
pub const DEFAULT_QUADRATURE_NODES: usize = 256;

/// A density on `[0,1]^d` with finite spectral support.
///
/// The constant coefficient is implicitly 1, so the density always integrates
/// to one. Non-negativity is *not* checked on construction; see
/// [`nonneg_check`].
#[derive(Clone, Debug)]
pub struct SeriesDensity {
    dim: usize,
    kind: BasisKind,
    coefficients: CoefficientVector,
    values: Vec<f64>,
    evaluator: BasisEvaluator,
}

/// Builds a density from its non-constant coefficients.
pub fn make_density(
    dim: usize,
    kind: BasisKind,
    coefficients: CoefficientVector,
) -> Result<SeriesDensity> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if kind == BasisKind::Haar && dim != 1 {
        return Err(Error::UnsupportedDimension { basis: "haar", dim });
    }
    for (z, v) in coefficients.iter() {
        if z.is_constant() {
            return Err(Error::ConstantCoefficient);
        }
        check_index(kind, dim, z)?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient at {z} is {v}")));
        }
    }
    let indices: Vec<BasisIndex> = coefficients.indices().cloned().collect();
    let values = coefficients.values().collect();
    let evaluator = BasisEvaluator::new(dim, indices)?;
    Ok(SeriesDensity {
        dim,
        kind,
        coefficients,
        values,
        evaluator,
    })
}

impl SeriesDensity {
    /// The uniform density `p_0`.
    pub fn uniform(dim: usize, kind: BasisKind) -> Result<Self> {
        make_density(dim, kind, CoefficientVector::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn coefficients(&self) -> &CoefficientVector {
        &self.coefficients
    }

    /// `Σ_z |c_z|·‖φ_z‖_∞`, an upper bound on `‖p − 1‖_∞`.
    pub fn spectral_mass(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|(z, c)| c.abs() * sup_norm(z))
            .sum()
    }

    /// Highest resolution (`‖z‖_∞` or Haar level) in the support.
    pub fn max_resolution(&self) -> u32 {
        self.coefficients
            .indices()
            .map(BasisIndex::resolution)
            .max()
            .unwrap_or(0)
    }

    /// A reusable evaluation handle; cheaper than [`eval_density`] in loops.
    pub fn probe(&self) -> DensityProbe<'_> {
        DensityProbe {
            density: self,
            scratch: self.evaluator.scratch(),
            buffer: vec![0.0; self.values.len()],
        }
    }

    pub fn to_document(&self) -> DensityDocument {
        DensityDocument {
            schema_version: SCHEMA_VERSION,
            d: self.dim,
            basis: self.kind,
            coeffs: self
                .coefficients
                .iter()
                .map(|(z, v)| (z.to_coords(self.dim), v))
                .collect(),
        }
    }

    pub fn from_document(doc: &DensityDocument) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let mut coefficients = CoefficientVector::new();
        for (coords, value) in &doc.coeffs {
            let z = BasisIndex::from_coords(doc.basis, doc.d, coords)?;
            if coefficients.insert(z.clone(), *value).is_some() {
                return Err(Error::Parse(format!("duplicate coefficient for {z}")));
            }
        }
        make_density(doc.d, doc.basis, coefficients)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Evaluation handle holding scratch buffers.
pub struct DensityProbe<'a> {
    density: &'a SeriesDensity,
    scratch: EvalScratch,
    buffer: Vec<f64>,
}

impl DensityProbe<'_> {
    pub fn at(&mut self, x: &[f64]) -> f64 {
        let d = self.density;
        d.evaluator.eval_into(x, &mut self.scratch, &mut self.buffer);
        1.0 + self
            .buffer
            .iter()
            .zip(&d.values)
            .map(|(phi, c)| phi * c)
            .sum::<f64>()
    }
}

/// JSON document `{schema_version, d, basis, coeffs: [[index…], value]…}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDocument {
    pub schema_version: u32,
    pub d: usize,
    pub basis: BasisKind,
    pub coeffs: Vec<(Vec<i64>, f64)>,
}

/// `p(x) = 1 + Σ_z c_z φ_z(x)`.
pub fn eval_density(p: &SeriesDensity, x: &[f64]) -> Result<f64> {
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: x.len(),
        });
    }
    Ok(p.probe().at(x))
}

/// Outcome of a non-negativity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `Σ|c_z|·‖φ_z‖_∞ ≤ 1`, so `p ≥ 0` everywhere without looking at a grid.
    Analytic,
    /// Grid minimum minus the Lipschitz slack is non-negative.
    Certified,
    /// Some grid point has `p < 0`.
    NotNonnegative,
    /// Neither certified nor refuted at this resolution.
    Unknown,
}

impl Verdict {
    pub fn is_nonnegative(self) -> bool {
        matches!(self, Verdict::Analytic | Verdict::Certified)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegCertificate {
    /// Minimum over the grid (`NaN` when the analytic shortcut applied).
    pub grid_min: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// Checks `p ≥ 0` on `[0,1]^d` using cell midpoints `(k + ½)/m` per axis.
///
/// Between grid points `p` can vary by at most
/// `slack = Σ|c_z|·‖φ_z‖_∞·2π‖z‖_∞ · √d/(2m)` for the trigonometric system.
/// For Haar the grid is exact (slack 0) when `m` is a power of two deeper than
/// the finest level in the support; otherwise the slack is infinite.
pub fn nonneg_check(p: &SeriesDensity, m: usize) -> Result<NonnegCertificate> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid resolution {m} < 2")));
    }
    let mass = p.spectral_mass();
    if mass <= 1.0 {
        return Ok(NonnegCertificate {
            grid_min: f64::NAN,
            slack: 0.0,
            verdict: Verdict::Analytic,
        });
    }
    let slack = match p.kind {
        BasisKind::Fourier => {
            let lipschitz: f64 = p
                .coefficients
                .iter()
                .map(|(z, c)| c.abs() * sup_norm(z) * 2.0 * PI * f64::from(z.resolution()))
                .sum();
            lipschitz * (p.dim as f64).sqrt() / (2.0 * m as f64)
        }
        BasisKind::Haar => {
            let dyadic_depth = m.is_power_of_two().then(|| m.trailing_zeros());
            match dyadic_depth {
                Some(depth) if depth > p.max_resolution() => 0.0,
                _ => f64::INFINITY,
            }
        }
    };
    let total = m
        .checked_pow(p.dim as u32)
        .filter(|&t| t <= 100_000_000)
        .ok_or_else(|| Error::InvalidParameter(format!("grid {m}^{} too large", p.dim)))?;
    let mut probe = p.probe();
    let mut x = vec![0.0; p.dim];
    let mut grid_min = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        for xa in x.iter_mut() {
            *xa = ((c % m) as f64 + 0.5) / m as f64;
            c /= m;
        }
        grid_min = grid_min.min(probe.at(&x));
    }
    let verdict = if grid_min < 0.0 {
        Verdict::NotNonnegative
    } else if grid_min - slack >= 0.0 {
        Verdict::Certified
    } else {
        Verdict::Unknown
    };
    Ok(NonnegCertificate {
        grid_min,
        slack,
        verdict,
    })
}

/// Sign pattern `τ ∈ {−1, +1}^m`.
pub type SignPattern = Vec<i8>;

pub fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

// Largest pattern length we materialize (2^{m/8} patterns).
const MAX_PATTERN_LEN: usize = 96;

/// Sign patterns with `|T| ≥ 2^{m/8}` and pairwise Hamming distance `≥ m/8`.
///
/// Built by seeded greedy random search: candidates are drawn uniformly and
/// kept when far enough from everything accepted so far.
pub fn varshamov_gilbert(m: usize, seed: u64) -> Result<Vec<SignPattern>> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "Varshamov-Gilbert needs m ≥ 8, got {m}"
        )));
    }
    if m > MAX_PATTERN_LEN {
        return Err(Error::InvalidParameter(format!(
            "pattern length {m} exceeds {MAX_PATTERN_LEN}"
        )));
    }
    let target = 2f64.powf(m as f64 / 8.0).ceil() as usize;
    let min_dist = m.div_ceil(8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<u128> = Vec::with_capacity(target);
    let mask = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    let mut attempts = 0usize;
    while accepted.len() < target {
        attempts += 1;
        if attempts > 1_000 * target + 10_000 {
            return Err(Error::ConditionFailed(format!(
                "greedy search found only {} of {target} patterns",
                accepted.len()
            )));
        }
        let candidate = rng.gen::<u128>() & mask;
        if accepted
            .iter()
            .all(|&a| (a ^ candidate).count_ones() as usize >= min_dist)
        {
            accepted.push(candidate);
        }
    }
    Ok(accepted
        .into_iter()
        .map(|bits| {
            (0..m)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect()
        })
        .collect())
}

/// Worst-case family `p_τ = p_0 + c_G Σ_z τ_z φ_z`.
#[derive(Clone, Debug)]
pub struct PackingFamily {
    pub members: Vec<SeriesDensity>,
    pub patterns: Vec<SignPattern>,
    pub amplitude: f64,
    pub indices: Vec<BasisIndex>,
}

/// Builds the lower-bound packing family on `indices` for the generator
/// class `generator = H_{q,b}(L_G)`, with `c_G = L_G / B_Z`.
///
/// Fails unless `2 (L_G/B_Z) Σ_z ‖φ_z‖_∞ ≤ 1`.
pub fn packing_densities(
    indices: &TruncationSet,
    generator: &EllipseClass,
    convention: ExponentConvention,
    seed: u64,
) -> Result<PackingFamily> {
    if indices.iter().any(BasisIndex::is_constant) {
        return Err(Error::InvalidParameter(
            "packing index set must exclude the constant".into(),
        ));
    }
    let patterns = varshamov_gilbert(indices.len(), seed)?;
    let b_z = crate::bounds::class_scale(generator, indices, convention)?;
    let amplitude = generator.radius / b_z;
    let sup_sum: f64 = indices.iter().map(sup_norm).sum();
    let lhs = 2.0 * amplitude * sup_sum;
    if lhs > 1.0 + 1e-12 {
        return Err(Error::ConditionFailed(format!(
            "2 (L_G/B_Z) Σ ‖φ_z‖_∞ ≤ 1 (got {lhs})"
        )));
    }
    let members = patterns
        .iter()
        .map(|tau| {
            let coeffs = indices
                .iter()
                .zip(tau)
                .map(|(z, &s)| (z.clone(), amplitude * f64::from(s)))
                .collect();
            make_density(indices.dim(), indices.kind(), coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    for p in &members {
        let membership = ellipse_membership(p.coefficients(), generator)?;
        if !membership.is_member {
            return Err(Error::ConditionFailed(format!(
                "packing member outside generator class (norm {} > {})",
                membership.norm, generator.radius
            )));
        }
    }
    Ok(PackingFamily {
        members,
        patterns,
        amplitude,
        indices: indices.indices().to_vec(),
    })
}

/// `KL(p ‖ q) = ∫ p log(p/q)` by tensor Gauss-Legendre quadrature (`d ≤ 2`).
pub fn kl_divergence(p: &SeriesDensity, q: &SeriesDensity, nodes_per_axis: usize) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.dim,
        });
    }
    let rule = tensor_rule(p.dim, nodes_per_axis)?;
    let (mut pp, mut qp) = (p.probe(), q.probe());
    let mut total = 0.0;
    for (x, w) in &rule {
        let qv = qp.at(x);
        if qv <= 0.0 {
            return Err(Error::NonPositiveDensity {
                node: x.clone(),
                value: qv,
            });
        }
        let pv = pp.at(x);
        if pv > 0.0 {
            total += w * pv * (pv / qv).ln();
        }
    }
    Ok(total)
}

/// `‖p − q‖_{L²}` via Parseval.
pub fn l2_distance(p: &SeriesDensity, q: &SeriesDensity) -> Result<f64> {
    if p.kind != q.kind {
        return Err(Error::BasisMismatch(format!("{} vs {}", p.kind, q.kind)));
    }
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.dim,
        });
    }
    let diff = p.coefficients() - q.coefficients();
    Ok(diff.values().map(|v| v * v).sum::<f64>().sqrt())
}

/// `∫ max(p, 0)` by quadrature; equals 1 for a non-negative density.
pub fn positive_mass(p: &SeriesDensity, nodes_per_axis: usize) -> Result<f64> {
    let rule = tensor_rule(p.dim, nodes_per_axis)?;
    let mut probe = p.probe();
    Ok(rule.iter().map(|(x, w)| w * probe.at(x).max(0.0)).sum())
}

/// Projection of the renormalized positive part `max(p,0)/∫max(p,0)` onto
/// `indices`, by quadrature.
pub fn positive_part_projection(
    p: &SeriesDensity,
    indices: &[BasisIndex],
    nodes_per_axis: usize,
) -> Result<(SeriesDensity, f64)> {
    let rule = tensor_rule(p.dim, nodes_per_axis)?;
    let keep: Vec<BasisIndex> = indices.iter().filter(|z| !z.is_constant()).cloned().collect();
    let ev = BasisEvaluator::new(p.dim, keep.clone())?;
    let mut scratch = ev.scratch();
    let mut phi = vec![0.0; keep.len()];
    let mut acc = vec![0.0; keep.len()];
    let mut mass = 0.0;
    let mut probe = p.probe();
    for (x, w) in &rule {
        let v = probe.at(x).max(0.0);
        if v == 0.0 {
            continue;
        }
        mass += w * v;
        ev.eval_into(x, &mut scratch, &mut phi);
        for (a, f) in acc.iter_mut().zip(&phi) {
            *a += w * v * f;
        }
    }
    let coeffs = keep.into_iter().zip(acc).map(|(z, a)| (z, a / mass)).collect();
    Ok((make_density(p.dim, p.kind, coeffs)?, mass))
}

/// Random finite-spectrum density with coefficients in `±[lo, hi]` on
/// `modes` distinct Fourier indices with `‖z‖_∞ ≤ max_frequency`.
pub fn random_fourier_density(
    dim: usize,
    modes: usize,
    max_frequency: u32,
    coef_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<SeriesDensity> {
    let pool = crate::basis::enumerate_truncation(BasisKind::Fourier, max_frequency, dim)?
        .zero_mean();
    if modes > pool.len() {
        return Err(Error::InvalidParameter(format!(
            "{modes} modes requested but only {} available",
            pool.len()
        )));
    }
    let (lo, hi) = coef_range;
    if !(0.0 <= lo && lo <= hi) {
        return Err(Error::InvalidParameter(format!("bad coefficient range [{lo}, {hi}]")));
    }
    let chosen: Vec<_> = pool.indices().choose_multiple(rng, modes).cloned().collect();
    let coeffs = chosen
        .into_iter()
        .map(|z| {
            let magnitude = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            (z, sign * magnitude)
        })
        .collect();
    make_density(dim, BasisKind::Fourier, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_truncation, WeightRule};
    use crate::quadrature::integrate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn one_mode(z: i32, c: f64) -> SeriesDensity {
        make_density(
            1,
            BasisKind::Fourier,
            [(BasisIndex::Fourier(vec![z]), c)].into_iter().collect(),
        )
        .unwrap()
    }

    #[test]
    fn construction_examples() {
        let p0 = SeriesDensity::uniform(1, BasisKind::Fourier).unwrap();
        assert_eq!(eval_density(&p0, &[0.37]).unwrap(), 1.0);
        let p = one_mode(1, 0.5);
        assert_abs_diff_eq!(eval_density(&p, &[0.0]).unwrap(), 1.0 + 0.5 * SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_density(&p, &[0.5]).unwrap(), 1.0 - 0.5 * SQRT_2, epsilon = 1e-15);
        let h = make_density(
            1,
            BasisKind::Haar,
            [(BasisIndex::haar(0, 1).unwrap(), 0.3)].into_iter().collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(eval_density(&h, &[0.25]).unwrap(), 1.3, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_density(&h, &[0.75]).unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn constant_coefficient_rejected() {
        let coeffs = [(BasisIndex::Constant, 0.1)].into_iter().collect();
        assert!(matches!(
            make_density(1, BasisKind::Fourier, coeffs),
            Err(Error::ConstantCoefficient)
        ));
    }

    #[test]
    fn evaluation_is_linear() {
        let a = one_mode(1, 0.2);
        let b = one_mode(-3, 0.1);
        let both = make_density(1, BasisKind::Fourier, a.coefficients() + b.coefficients()).unwrap();
        for &x in &[0.0, 0.11, 0.5, 0.93] {
            let sum = eval_density(&a, &[x]).unwrap() + eval_density(&b, &[x]).unwrap() - 1.0;
            assert_abs_diff_eq!(eval_density(&both, &[x]).unwrap(), sum, epsilon = 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = one_mode(1, 0.2);
        assert!(eval_density(&p, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn nonneg_examples() {
        let p0 = SeriesDensity::uniform(1, BasisKind::Fourier).unwrap();
        assert_eq!(nonneg_check(&p0, 64).unwrap().verdict, Verdict::Analytic);
        assert_eq!(nonneg_check(&one_mode(1, 0.5), 64).unwrap().verdict, Verdict::Analytic);
        let bad = nonneg_check(&one_mode(1, 0.8), 512).unwrap();
        assert_eq!(bad.verdict, Verdict::NotNonnegative);
        // closed-form minimum 1 − 0.8√2 at x = 1/2, a grid midpoint is within π/512 of it
        assert!(bad.grid_min < 1.0 - 0.8 * SQRT_2 + 1e-3);
        assert!(nonneg_check(&p0, 1).is_err());
    }

    #[test]
    fn grid_certification_beyond_the_analytic_condition() {
        // Σ|c|√2 = 1.13 > 1, but the two modes never align: min ≈ 0.3
        let p = make_density(
            1,
            BasisKind::Fourier,
            [
                (BasisIndex::Fourier(vec![1]), 0.4),
                (BasisIndex::Fourier(vec![2]), 0.4),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        let cert = nonneg_check(&p, 1024).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        assert!(cert.slack > 0.0);
    }

    #[test]
    fn haar_grid_is_exact_when_dyadic() {
        let p = make_density(
            1,
            BasisKind::Haar,
            [
                (BasisIndex::haar(1, 1).unwrap(), 0.6),
                (BasisIndex::haar(2, 1).unwrap(), 0.3),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        let cert = nonneg_check(&p, 8).unwrap();
        assert_eq!(cert.slack, 0.0);
        assert_eq!(cert.verdict, Verdict::Certified);
        assert_eq!(nonneg_check(&p, 10).unwrap().verdict, Verdict::Unknown);
    }

    // Exhaustive pairwise check, independent of the generator's bit tricks.
    fn check_vg(m: usize, patterns: &[SignPattern]) {
        let needed = 2f64.powf(m as f64 / 8.0);
        assert!(patterns.len() as f64 >= needed, "m={m}: {} < {needed}", patterns.len());
        for (i, a) in patterns.iter().enumerate() {
            assert_eq!(a.len(), m);
            assert!(a.iter().all(|&s| s == 1 || s == -1));
            for b in &patterns[i + 1..] {
                assert!(8 * hamming(a, b) >= m);
            }
        }
    }

    #[test]
    fn varshamov_gilbert_contracts() {
        for m in [8, 16, 24, 32] {
            check_vg(m, &varshamov_gilbert(m, 17).unwrap());
        }
        assert!(varshamov_gilbert(7, 1).is_err());
        assert_eq!(varshamov_gilbert(16, 5).unwrap(), varshamov_gilbert(16, 5).unwrap());
    }

    #[test]
    fn packing_guard_and_family() {
        let tiny = enumerate_truncation(BasisKind::Fourier, 1, 1).unwrap().zero_mean();
        let g = EllipseClass::new(2.0, 0.01, WeightRule::sobolev(1.0)).unwrap();
        assert!(packing_densities(&tiny, &g, ExponentConvention::HalfPower, 1).is_err());

        let z = enumerate_truncation(BasisKind::Fourier, 1, 2).unwrap().zero_mean();
        assert_eq!(z.len(), 8);
        let fam = packing_densities(&z, &g, ExponentConvention::HalfPower, 3).unwrap();
        assert!(fam.members.len() >= 2);
        for p in &fam.members {
            assert_eq!(nonneg_check(p, 16).unwrap().verdict, Verdict::Analytic);
            let mut probe = p.probe();
            for i in 0..50 {
                for j in 0..50 {
                    assert!(probe.at(&[i as f64 / 49.0, j as f64 / 49.0]) >= 0.5);
                }
            }
        }
        let loud = EllipseClass::new(2.0, 10.0, WeightRule::sobolev(1.0)).unwrap();
        assert!(matches!(
            packing_densities(&z, &loud, ExponentConvention::HalfPower, 3),
            Err(Error::ConditionFailed(_))
        ));
    }

    #[test]
    fn kl_examples() {
        let p0 = SeriesDensity::uniform(1, BasisKind::Fourier).unwrap();
        assert_abs_diff_eq!(kl_divergence(&p0, &p0, 64).unwrap(), 0.0, epsilon = 1e-15);
        let p = one_mode(1, 0.5);
        assert_abs_diff_eq!(kl_divergence(&p, &p, 64).unwrap(), 0.0, epsilon = 1e-15);
        let kl = kl_divergence(&p, &p0, DEFAULT_QUADRATURE_NODES).unwrap();
        assert!(kl > 0.0 && kl <= 2.0 * 0.25);
        let bad = one_mode(1, 0.8);
        assert!(matches!(
            kl_divergence(&p0, &bad, 64),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn l2_distance_matches_quadrature() {
        let p0 = SeriesDensity::uniform(1, BasisKind::Fourier).unwrap();
        assert_eq!(l2_distance(&p0, &p0).unwrap(), 0.0);
        assert_abs_diff_eq!(l2_distance(&one_mode(1, 0.5), &p0).unwrap(), 0.5, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let dim = rng.gen_range(1..=2);
            let p = random_fourier_density(dim, 3, 3, (0.0, 0.2), &mut rng).unwrap();
            let q = random_fourier_density(dim, 3, 3, (0.0, 0.2), &mut rng).unwrap();
            let (mut pp, mut qp) = (p.probe(), q.probe());
            let quad = integrate(dim, 64, |x| (pp.at(x) - qp.at(x)).powi(2)).unwrap();
            assert_abs_diff_eq!(l2_distance(&p, &q).unwrap(), quad.sqrt(), epsilon = 1e-8);
        }
        let h = SeriesDensity::uniform(1, BasisKind::Haar).unwrap();
        assert!(l2_distance(&p0, &h).is_err());
    }

    #[test]
    fn unit_mass_by_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let dim = rng.gen_range(1..=2);
            let p = random_fourier_density(dim, 5, 4, (0.0, 0.3), &mut rng).unwrap();
            let mut probe = p.probe();
            let mass = integrate(dim, 64, |x| probe.at(x)).unwrap();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = make_density(
            2,
            BasisKind::Fourier,
            [(BasisIndex::Fourier(vec![1, -2]), 0.125)].into_iter().collect(),
        )
        .unwrap();
        let text = p.to_json().unwrap();
        let back = SeriesDensity::from_json(&text).unwrap();
        assert_eq!(back.coefficients(), p.coefficients());
        assert!(text.contains("\"schema_version\": 1"));
    }
}
