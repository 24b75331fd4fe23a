//! Adversarial losses over generalized ellipses.
//!
//! For a discriminator class `H_{p,a}(L) = {f : ‖{a_z f̃_z}‖_p ≤ L}` the
//! supremum `sup_f Σ_z f̃_z Δ_z` is attained in closed form by Hölder duality:
//! it equals `L·‖{Δ_z / a_z}‖_{p'}` with `1/p + 1/p' = 1`. All losses here
//! are computed over the (finite) union of the spectra involved, which is
//! exact for finite-spectrum densities and series estimates.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::basis::{weight, BasisEvaluator, BasisIndex, BasisKind, WeightRule};
use crate::coeffs::CoefficientVector;
use crate::error::{Error, Result};
use crate::estimator::Dataset;

/// Generalized ellipse `H_{p,a}(L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipseClass {
    /// `p ∈ [1, ∞]`; use `f64::INFINITY` for the sup-norm ball.
    pub exponent: f64,
    pub radius: f64,
    pub weights: WeightRule,
}

impl EllipseClass {
    pub fn new(exponent: f64, radius: f64, weights: WeightRule) -> Result<Self> {
        if exponent.is_nan() || exponent < 1.0 {
            return Err(Error::InvalidParameter(format!("exponent p = {exponent} < 1")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
        }
        Ok(EllipseClass {
            exponent,
            radius,
            weights,
        })
    }

    /// Sobolev ball `W^{s,p}(L)` in ellipse form.
    pub fn sobolev(order: f64, exponent: f64, radius: f64) -> Result<Self> {
        Self::new(exponent, radius, WeightRule::sobolev(order))
    }

    /// Unit RKHS ball for the given spectrum (`p = 2`).
    pub fn rkhs(spectrum: KernelSpectrum, radius: f64) -> Result<Self> {
        Self::new(2.0, radius, WeightRule::Spectrum(spectrum))
    }

    pub fn conjugate_exponent(&self) -> f64 {
        holder_conjugate(self.exponent)
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.exponent, radius, self.weights.clone())
    }
}

/// `p' = p/(p−1)`, with `1 ↔ ∞`.
pub fn holder_conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `‖v‖_r` for `r ∈ [1, ∞]`, scaled by the largest entry to avoid overflow.
pub fn lp_norm(values: impl IntoIterator<Item = f64>, r: f64) -> f64 {
    let values: Vec<f64> = values.into_iter().map(f64::abs).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return max;
    }
    if r == 1.0 {
        return values.iter().sum();
    }
    if r == 2.0 {
        return values.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    max * values.iter().map(|v| (v / max).powf(r)).sum::<f64>().powf(1.0 / r)
}

fn scaled_difference(delta: &CoefficientVector, class: &EllipseClass) -> Result<Vec<f64>> {
    delta
        .iter()
        .map(|(z, v)| Ok(v / weight(&class.weights, z)?))
        .collect()
}

/// `d_{F_D}(P, Q) = L·‖{Δ_z / a_z}‖_{p'}` for `Δ = P̃ − Q̃`.
pub fn adversarial_loss(delta: &CoefficientVector, class: &EllipseClass) -> Result<f64> {
    let scaled = scaled_difference(delta, class)?;
    Ok(class.radius * lp_norm(scaled, class.conjugate_exponent()))
}

/// The discriminator attaining [`adversarial_loss`], for `p ∈ (1, ∞)`:
/// `f̃_z = L·sign(Δ_z)·|Δ_z/a_z|^{p'−1} / (a_z·‖Δ/a‖_{p'}^{p'−1})`.
pub fn optimal_discriminator(
    delta: &CoefficientVector,
    class: &EllipseClass,
) -> Result<CoefficientVector> {
    let p = class.exponent;
    if p == 1.0 || p.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "explicit maximizer only for 1 < p < ∞, got p = {p}"
        )));
    }
    if delta.is_zero() {
        return Err(Error::InvalidParameter(
            "maximizer is not unique for Δ = 0".into(),
        ));
    }
    let q = class.conjugate_exponent();
    let scaled = scaled_difference(delta, class)?;
    let norm = lp_norm(scaled.iter().copied(), q);
    delta
        .iter()
        .zip(&scaled)
        .map(|((z, _), &r)| {
            let a = weight(&class.weights, z)?;
            let f = class.radius * r.signum() * (r.abs() / norm).powf(q - 1.0) / a;
            Ok((z.clone(), if r == 0.0 { 0.0 } else { f }))
        })
        .collect()
}

/// `Σ_z f̃_z Δ_z` over the support of `f`.
pub fn pairing(f: &CoefficientVector, delta: &CoefficientVector) -> f64 {
    f.iter().map(|(z, v)| v * delta.get(z)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership {
    pub norm: f64,
    pub is_member: bool,
}

/// `‖{a_z c_z}‖_p` and whether it is at most the class radius.
pub fn ellipse_membership(c: &CoefficientVector, class: &EllipseClass) -> Result<Membership> {
    let weighted = c
        .iter()
        .map(|(z, v)| Ok(v * weight(&class.weights, z)?))
        .collect::<Result<Vec<_>>>()?;
    let norm = lp_norm(weighted, class.exponent);
    Ok(Membership {
        norm,
        is_member: norm <= class.radius * (1.0 + 1e-12),
    })
}

/// Tabulated kernel spectrum `κ̃_z` of a translation-invariant kernel
/// `k(x, y) = Σ_z κ̃_z² φ_z(x) φ_z(y)`.
///
/// The induced RKHS norm is `‖f‖² = Σ f̃_z² / κ̃_z²`, i.e. the ellipse weight
/// is `a_z = 1/|κ̃_z|`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpectrum {
    dim: usize,
    kind: BasisKind,
    table: BTreeMap<BasisIndex, f64>,
}

impl KernelSpectrum {
    pub fn from_table(
        dim: usize,
        kind: BasisKind,
        table: BTreeMap<BasisIndex, f64>,
    ) -> Result<Self> {
        for (z, &k) in &table {
            crate::basis::check_index(kind, dim, z)?;
            if !(k != 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("κ̃ at {z} is {k}")));
            }
        }
        Ok(KernelSpectrum { dim, kind, table })
    }

    /// `κ̃_z = ratio^{‖z‖_∞}` for all non-constant Fourier `z` with `‖z‖_∞ ≤ ζ`.
    pub fn geometric(ratio: f64, zeta: u32, dim: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("ratio {ratio} not in (0,1)")));
        }
        let table = crate::basis::enumerate_truncation(BasisKind::Fourier, zeta, dim)?
            .zero_mean()
            .indices()
            .iter()
            .map(|z| (z.clone(), ratio.powi(z.resolution() as i32)))
            .collect();
        Self::from_table(dim, BasisKind::Fourier, table)
    }

    pub fn coefficient(&self, z: &BasisIndex) -> Option<f64> {
        self.table.get(z).copied()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisIndex, f64)> + '_ {
        self.table.iter().map(|(z, &k)| (z, k))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `Σ_z a_z^{-2} = Σ_z κ̃_z²` over the table.
    pub fn inverse_weight_sum(&self) -> f64 {
        self.table.values().map(|k| k * k).sum()
    }

    /// `k(x, y)`.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.table
            .iter()
            .map(|(z, k)| {
                Ok(k * k * crate::basis::eval_basis(z, x)? * crate::basis::eval_basis(z, y)?)
            })
            .sum()
    }

    fn features(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: data.dim(),
            });
        }
        let ev = BasisEvaluator::new(self.dim, self.table.keys().cloned().collect())?;
        let kappa: Vec<f64> = self.table.values().copied().collect();
        let mut scratch = ev.scratch();
        Ok(data
            .points()
            .map(|x| {
                let mut row = vec![0.0; ev.len()];
                ev.eval_into(x, &mut scratch, &mut row);
                row.iter_mut().zip(&kappa).for_each(|(v, k)| *v *= k);
                row
            })
            .collect())
    }
}

/// MMD for the RKHS ball of radius `L`: `L·sqrt(Σ_z κ̃_z² Δ_z²)`.
pub fn mmd_spectral(delta: &CoefficientVector, spectrum: &KernelSpectrum, radius: f64) -> Result<f64> {
    let class = EllipseClass::rkhs(spectrum.clone(), radius)?;
    adversarial_loss(delta, &class)
}

fn mean_gram(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let row = |x: &Vec<f64>| -> f64 {
        b.iter()
            .map(|y| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
            .sum()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = a.par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = a.iter().map(row).collect();
    rows.iter().sum::<f64>() / (a.len() as f64 * b.len() as f64)
}

/// V-statistic MMD estimate between two samples (unit-radius ball).
///
/// `sqrt(mean k(X,X') − 2 mean k(X,Y) + mean k(Y,Y'))`, evaluated pairwise:
/// this is the one quadratic-cost operation in the crate.
pub fn mmd_vstat(x: &Dataset, y: &Dataset, spectrum: &KernelSpectrum) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fx = spectrum.features(x)?;
    let fy = spectrum.features(y)?;
    let squared = mean_gram(&fx, &fx) - 2.0 * mean_gram(&fx, &fy) + mean_gram(&fy, &fy);
    Ok(squared.max(0.0).sqrt())
}

/// Null-hypothesis scale of [`mmd_vstat`]:
/// `sqrt((1/m_x + 1/m_y)·Σ_z κ̃_z² Var̂(φ_z))` with pooled variances.
///
/// When both samples come from the same law this is `sqrt(E[MMD²_V])`.
pub fn mmd_noise_scale(x: &Dataset, y: &Dataset, spectrum: &KernelSpectrum) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fx = spectrum.features(x)?;
    let fy = spectrum.features(y)?;
    let total = (fx.len() + fy.len()) as f64;
    let width = spectrum.len();
    let mut var_sum = 0.0;
    for j in 0..width {
        let (mut s, mut s2) = (0.0, 0.0);
        for row in fx.iter().chain(&fy) {
            s += row[j];
            s2 += row[j] * row[j];
        }
        let mean = s / total;
        var_sum += (s2 / total - mean * mean).max(0.0);
    }
    Ok(((1.0 / fx.len() as f64 + 1.0 / fy.len() as f64) * var_sum).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(z: i32, v: f64) -> CoefficientVector {
        [(BasisIndex::Fourier(vec![z]), v)].into_iter().collect()
    }

    #[test]
    fn zero_difference_has_zero_loss() {
        let class = EllipseClass::sobolev(1.0, 2.0, 1.0).unwrap();
        assert_eq!(adversarial_loss(&CoefficientVector::new(), &class).unwrap(), 0.0);
        assert_eq!(adversarial_loss(&single(2, 0.0), &class).unwrap(), 0.0);
    }

    #[test]
    fn one_term_holder() {
        let mut table = BTreeMap::new();
        table.insert(BasisIndex::Fourier(vec![1]), 2.0);
        let class = EllipseClass::new(2.0, 1.0, WeightRule::Table(table)).unwrap();
        let delta = single(1, 0.3);
        assert_abs_diff_eq!(adversarial_loss(&delta, &class).unwrap(), 0.15, epsilon = 1e-15);
        let f = optimal_discriminator(&delta, &class).unwrap();
        assert_abs_diff_eq!(f.get(&BasisIndex::Fourier(vec![1])), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pairing(&f, &delta), 0.15, epsilon = 1e-15);
    }

    #[test]
    fn p2_maximizer_is_cauchy_schwarz_direction() {
        let class = EllipseClass::sobolev(1.0, 2.0, 1.0).unwrap();
        let delta: CoefficientVector = [
            (BasisIndex::Fourier(vec![1]), 0.3),
            (BasisIndex::Fourier(vec![-2]), -0.1),
            (BasisIndex::Fourier(vec![3]), 0.05),
        ]
        .into_iter()
        .collect();
        let f = optimal_discriminator(&delta, &class).unwrap();
        let ratio = |z: &BasisIndex| {
            let a = weight(&class.weights, z).unwrap();
            f.get(z) / (delta.get(z) / (a * a))
        };
        let r0 = ratio(&BasisIndex::Fourier(vec![1]));
        for z in delta.indices() {
            assert_abs_diff_eq!(ratio(z), r0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ellipse_membership(&f, &class).unwrap().norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vertex_exponents() {
        let delta: CoefficientVector = [
            (BasisIndex::Fourier(vec![1]), 0.3),
            (BasisIndex::Fourier(vec![-1]), -0.4),
        ]
        .into_iter()
        .collect();
        let l1 = EllipseClass::new(1.0, 1.0, WeightRule::unweighted()).unwrap();
        assert_abs_diff_eq!(adversarial_loss(&delta, &l1).unwrap(), 0.4, epsilon = 1e-15);
        let linf = EllipseClass::new(f64::INFINITY, 1.0, WeightRule::unweighted()).unwrap();
        assert_abs_diff_eq!(adversarial_loss(&delta, &linf).unwrap(), 0.7, epsilon = 1e-15);
        assert!(optimal_discriminator(&delta, &l1).is_err());
        assert!(optimal_discriminator(&delta, &linf).is_err());
        let l2 = EllipseClass::new(2.0, 1.0, WeightRule::unweighted()).unwrap();
        assert!(optimal_discriminator(&CoefficientVector::new(), &l2).is_err());
    }

    #[test]
    fn missing_weight_is_an_error() {
        let class = EllipseClass::rkhs(KernelSpectrum::geometric(0.5, 2, 1).unwrap(), 1.0).unwrap();
        assert!(adversarial_loss(&single(5, 0.1), &class).is_err());
    }

    #[test]
    fn membership_is_homogeneous() {
        let class = EllipseClass::sobolev(1.0, 2.0, 1.0).unwrap();
        assert!(ellipse_membership(&CoefficientVector::new(), &class).unwrap().is_member);
        let c: CoefficientVector = [
            (BasisIndex::Fourier(vec![1]), 0.2),
            (BasisIndex::Fourier(vec![2]), -0.1),
        ]
        .into_iter()
        .collect();
        let m1 = ellipse_membership(&c, &class).unwrap().norm;
        let m2 = ellipse_membership(&c.scale(2.0), &class).unwrap().norm;
        assert_abs_diff_eq!(m2, 2.0 * m1, epsilon = 1e-15);
    }

    #[test]
    fn mmd_spectral_reductions() {
        let spectrum = KernelSpectrum::geometric(0.5, 3, 1).unwrap();
        assert_eq!(mmd_spectral(&CoefficientVector::new(), &spectrum, 1.0).unwrap(), 0.0);
        let flat_table = spectrum.iter().map(|(z, _)| (z.clone(), 1.0)).collect();
        let flat = KernelSpectrum::from_table(1, BasisKind::Fourier, flat_table).unwrap();
        let delta: CoefficientVector = [
            (BasisIndex::Fourier(vec![1]), 0.3),
            (BasisIndex::Fourier(vec![-3]), 0.4),
        ]
        .into_iter()
        .collect();
        assert_abs_diff_eq!(mmd_spectral(&delta, &flat, 2.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_is_translation_invariant_in_1d() {
        let spectrum = KernelSpectrum::geometric(0.5, 4, 1).unwrap();
        let a = spectrum.kernel(&[0.1], &[0.35]).unwrap();
        let b = spectrum.kernel(&[0.6], &[0.85]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
    }

    #[test]
    fn vstat_of_identical_samples_is_zero() {
        let spectrum = KernelSpectrum::geometric(0.5, 4, 1).unwrap();
        let data = Dataset::new(1, vec![0.1, 0.5, 0.77, 0.2]).unwrap();
        assert_abs_diff_eq!(mmd_vstat(&data, &data, &spectrum).unwrap(), 0.0, epsilon = 1e-7);
        assert!(Dataset::new(1, vec![]).is_err());
    }
}
