use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use crate::basis::BasisIndex;

/// Finitely supported map `BasisIndex → coefficient`.
///
/// Used for density spectra `P̃`, discriminator coefficients `f̃` and
/// differences `P̃ − Q̃`. Iteration is in canonical index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientVector(BTreeMap<BasisIndex, f64>);

impl CoefficientVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, z: &BasisIndex) -> f64 {
        self.0.get(z).copied().unwrap_or(0.0)
    }

    pub fn insert(&mut self, z: BasisIndex, value: f64) -> Option<f64> {
        self.0.insert(z, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisIndex, f64)> + '_ {
        self.0.iter().map(|(z, &v)| (z, v))
    }

    pub fn indices(&self) -> impl Iterator<Item = &BasisIndex> + '_ {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.values().copied()
    }

    /// True when every stored value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&v| v == 0.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.0.iter().map(|(z, &v)| (z.clone(), v * factor)).collect()
    }

    /// Entrywise combination over the union of supports.
    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = BTreeMap::new();
        for (z, &v) in &self.0 {
            out.insert(z.clone(), f(v, other.get(z)));
        }
        for (z, &w) in &other.0 {
            out.entry(z.clone()).or_insert_with(|| f(0.0, w));
        }
        CoefficientVector(out)
    }
}

impl FromIterator<(BasisIndex, f64)> for CoefficientVector {
    fn from_iter<I: IntoIterator<Item = (BasisIndex, f64)>>(iter: I) -> Self {
        CoefficientVector(iter.into_iter().collect())
    }
}

impl From<BTreeMap<BasisIndex, f64>> for CoefficientVector {
    fn from(map: BTreeMap<BasisIndex, f64>) -> Self {
        CoefficientVector(map)
    }
}

impl Sub for &CoefficientVector {
    type Output = CoefficientVector;

    fn sub(self, rhs: Self) -> CoefficientVector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Add for &CoefficientVector {
    type Output = CoefficientVector;

    fn add(self, rhs: Self) -> CoefficientVector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Neg for &CoefficientVector {
    type Output = CoefficientVector;

    fn neg(self) -> CoefficientVector {
        self.scale(-1.0)
    }
}
