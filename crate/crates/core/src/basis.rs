//! Orthonormal bases of L² on the unit cube.
//!
//! Two families are provided:
//!
//! * the real tensorized trigonometric system on `[0,1]^d`, indexed by
//!   `z ∈ Z^d`. Along each axis a positive entry `k` selects
//!   `√2·cos(2πk x_j)`, a negative entry `-k` selects `√2·sin(2πk x_j)` and
//!   zero selects the constant 1; the basis function is the product over axes.
//! * the Haar wavelets on `[0,1]`, indexed by level `i ≥ 0` and position
//!   `j ∈ [1, 2^i]`.
//!
//! Both share the constant function `φ_0 ≡ 1`, which is the uniform density.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::KernelSpectrum;

/// Which orthonormal family an index or density belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Fourier,
    Haar,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Fourier => "fourier",
            BasisKind::Haar => "haar",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(BasisKind::Fourier),
            "haar" => Ok(BasisKind::Haar),
            other => Err(Error::Parse(format!("unknown basis `{other}`"))),
        }
    }
}

/// Identifies one basis function.
///
/// The all-zero Fourier multi-index is always represented as [`BasisIndex::Constant`];
/// use [`BasisIndex::fourier`] to construct Fourier indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisIndex {
    Constant,
    Fourier(Vec<i32>),
    Haar { level: u32, position: u32 },
}

impl BasisIndex {
    pub fn fourier(z: Vec<i32>) -> Self {
        if z.iter().all(|&k| k == 0) {
            BasisIndex::Constant
        } else {
            BasisIndex::Fourier(z)
        }
    }

    /// Haar wavelet at `level`, `position ∈ [1, 2^level]`.
    pub fn haar(level: u32, position: u32) -> Result<Self> {
        if level > 40 {
            return Err(Error::InvalidIndex(format!("haar level {level} too deep")));
        }
        if position == 0 || u64::from(position) > 1u64 << level {
            return Err(Error::InvalidIndex(format!(
                "haar position {position} outside [1, 2^{level}]"
            )));
        }
        Ok(BasisIndex::Haar { level, position })
    }

    pub fn is_constant(&self) -> bool {
        match self {
            BasisIndex::Constant => true,
            BasisIndex::Fourier(z) => z.iter().all(|&k| k == 0),
            BasisIndex::Haar { .. } => false,
        }
    }

    pub fn kind(&self) -> Option<BasisKind> {
        match self {
            BasisIndex::Constant => None,
            BasisIndex::Fourier(_) => Some(BasisKind::Fourier),
            BasisIndex::Haar { .. } => Some(BasisKind::Haar),
        }
    }

    /// `‖z‖_∞` for Fourier indices, the level for Haar, 0 for the constant.
    pub fn resolution(&self) -> u32 {
        match self {
            BasisIndex::Constant => 0,
            BasisIndex::Fourier(z) => z.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0),
            BasisIndex::Haar { level, .. } => *level,
        }
    }

    /// Integer coordinates used by the JSON encoding: `z` for Fourier,
    /// `[i, j]` for Haar, all zeros for the constant.
    pub fn to_coords(&self, dim: usize) -> Vec<i64> {
        match self {
            BasisIndex::Constant => vec![0; dim],
            BasisIndex::Fourier(z) => z.iter().map(|&k| i64::from(k)).collect(),
            BasisIndex::Haar { level, position } => vec![i64::from(*level), i64::from(*position)],
        }
    }

    pub fn from_coords(kind: BasisKind, dim: usize, coords: &[i64]) -> Result<Self> {
        match kind {
            BasisKind::Fourier => {
                if coords.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: coords.len(),
                    });
                }
                let z = coords
                    .iter()
                    .map(|&k| {
                        i32::try_from(k)
                            .map_err(|_| Error::InvalidIndex(format!("frequency {k} out of range")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BasisIndex::fourier(z))
            }
            BasisKind::Haar => match coords {
                [level, position] => {
                    let level = u32::try_from(*level)
                        .map_err(|_| Error::InvalidIndex(format!("haar level {level}")))?;
                    let position = u32::try_from(*position)
                        .map_err(|_| Error::InvalidIndex(format!("haar position {position}")))?;
                    BasisIndex::haar(level, position)
                }
                _ => Err(Error::InvalidIndex(format!(
                    "haar index needs [level, position], got {coords:?}"
                ))),
            },
        }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisIndex::Constant => f.write_str("const"),
            BasisIndex::Fourier(z) => write!(f, "{z:?}"),
            BasisIndex::Haar { level, position } => write!(f, "({level},{position})"),
        }
    }
}

/// One-dimensional trigonometric factor of the realified Fourier basis.
#[inline]
fn trig_factor(k: i32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        k if k > 0 => SQRT_2 * (2.0 * PI * f64::from(k) * x).cos(),
        k => SQRT_2 * (2.0 * PI * f64::from(-k) * x).sin(),
    }
}

/// Haar wavelet value; the right endpoint 1 belongs to the last cell.
#[inline]
fn haar_value(level: u32, position: u32, x: f64) -> f64 {
    let scale = (1u64 << level) as f64;
    let t = x * scale - f64::from(position - 1);
    let amplitude = scale.sqrt();
    let last = u64::from(position) == 1u64 << level;
    if (0.0..0.5).contains(&t) {
        amplitude
    } else if (0.5..1.0).contains(&t) || (last && t == 1.0) {
        -amplitude
    } else {
        0.0
    }
}

/// Pointwise value `φ_z(x)`.
pub fn eval_basis(z: &BasisIndex, x: &[f64]) -> Result<f64> {
    match z {
        BasisIndex::Constant => Ok(1.0),
        BasisIndex::Fourier(freqs) => {
            if freqs.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: freqs.len(),
                    found: x.len(),
                });
            }
            Ok(freqs.iter().zip(x).map(|(&k, &xj)| trig_factor(k, xj)).product())
        }
        BasisIndex::Haar { level, position } => {
            if x.len() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: x.len(),
                });
            }
            Ok(haar_value(*level, *position, x[0]))
        }
    }
}

/// `sup_x |φ_z(x)|`.
pub fn sup_norm(z: &BasisIndex) -> f64 {
    match z {
        BasisIndex::Constant => 1.0,
        BasisIndex::Fourier(freqs) => {
            let active = freqs.iter().filter(|&&k| k != 0).count();
            SQRT_2.powi(active as i32)
        }
        BasisIndex::Haar { level, .. } => 2f64.powf(f64::from(*level) / 2.0),
    }
}

/// Index set `Z` of a truncated series, in canonical (sorted) order.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationSet {
    kind: BasisKind,
    zeta: u32,
    dim: usize,
    indices: Vec<BasisIndex>,
}

/// All indices with `‖z‖_∞ ≤ ζ` (Fourier, constant included) or all
/// `(i, j)` with `i ≤ ζ` (Haar, `d = 1` only).
pub fn enumerate_truncation(kind: BasisKind, zeta: u32, dim: usize) -> Result<TruncationSet> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let indices = match kind {
        BasisKind::Fourier => {
            let side = 2 * zeta as usize + 1;
            let count = side
                .checked_pow(dim as u32)
                .filter(|&c| c <= 50_000_000)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("(2·{zeta}+1)^{dim} indices is too many"))
                })?;
            // base-(2ζ+1) digits of the running counter, most significant axis first
            let mut out: Vec<_> = (0..count)
                .map(|mut code| {
                    let mut z = vec![0i32; dim];
                    for slot in z.iter_mut().rev() {
                        *slot = (code % side) as i32 - zeta as i32;
                        code /= side;
                    }
                    BasisIndex::fourier(z)
                })
                .collect();
            out.sort();
            out
        }
        BasisKind::Haar => {
            if dim != 1 {
                return Err(Error::UnsupportedDimension { basis: "haar", dim });
            }
            if zeta > 24 {
                return Err(Error::InvalidParameter(format!("haar level {zeta} too deep")));
            }
            (0..=zeta)
                .flat_map(|level| {
                    (1..=1u32 << level).map(move |position| BasisIndex::Haar { level, position })
                })
                .collect()
        }
    };
    Ok(TruncationSet {
        kind,
        zeta,
        dim,
        indices,
    })
}

impl TruncationSet {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn zeta(&self) -> u32 {
        self.zeta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BasisIndex> {
        self.indices.iter()
    }

    pub fn contains(&self, z: &BasisIndex) -> bool {
        self.indices.binary_search(z).is_ok()
    }

    /// The same set without the constant function.
    pub fn zero_mean(mut self) -> Self {
        self.indices.retain(|z| !z.is_constant());
        self
    }

    /// An arbitrary explicit index set (sorted and deduplicated).
    pub fn from_indices(kind: BasisKind, dim: usize, mut indices: Vec<BasisIndex>) -> Result<Self> {
        for z in &indices {
            check_index(kind, dim, z)?;
        }
        indices.sort();
        indices.dedup();
        let zeta = indices.iter().map(BasisIndex::resolution).max().unwrap_or(0);
        Ok(TruncationSet {
            kind,
            zeta,
            dim,
            indices,
        })
    }
}

impl<'a> IntoIterator for &'a TruncationSet {
    type Item = &'a BasisIndex;
    type IntoIter = std::slice::Iter<'a, BasisIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

pub(crate) fn check_index(kind: BasisKind, dim: usize, z: &BasisIndex) -> Result<()> {
    match (kind, z) {
        (_, BasisIndex::Constant) => Ok(()),
        (BasisKind::Fourier, BasisIndex::Fourier(f)) if f.len() == dim => Ok(()),
        (BasisKind::Fourier, BasisIndex::Fourier(f)) => Err(Error::DimensionMismatch {
            expected: dim,
            found: f.len(),
        }),
        (BasisKind::Haar, BasisIndex::Haar { .. }) if dim == 1 => Ok(()),
        (BasisKind::Haar, BasisIndex::Haar { .. }) => {
            Err(Error::UnsupportedDimension { basis: "haar", dim })
        }
        (kind, z) => Err(Error::BasisMismatch(format!("index {z} in a {kind} expansion"))),
    }
}

/// Rule `z ↦ a_z > 0` defining a generalized ellipse.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightRule {
    /// `(1 + ‖z‖_∞²)^{s/2}` for Fourier, `2^{is}` for Haar.
    Sobolev { order: f64 },
    /// RKHS ball: `a_z = 1/|κ̃_z|` from a tabulated kernel spectrum.
    Spectrum(KernelSpectrum),
    /// Explicit table of weights.
    Table(BTreeMap<BasisIndex, f64>),
}

impl WeightRule {
    pub fn sobolev(order: f64) -> Self {
        WeightRule::Sobolev { order }
    }

    pub fn unweighted() -> Self {
        WeightRule::Sobolev { order: 0.0 }
    }
}

/// Evaluates `a_z`.
pub fn weight(rule: &WeightRule, z: &BasisIndex) -> Result<f64> {
    let value = match rule {
        WeightRule::Sobolev { order } => match z {
            BasisIndex::Constant => 1.0,
            BasisIndex::Fourier(_) => {
                let r = f64::from(z.resolution());
                (1.0 + r * r).powf(order / 2.0)
            }
            BasisIndex::Haar { level, .. } => 2f64.powf(f64::from(*level) * order),
        },
        WeightRule::Spectrum(spectrum) => {
            let kappa = spectrum
                .coefficient(z)
                .ok_or_else(|| Error::WeightUndefined(z.to_string()))?;
            1.0 / kappa.abs()
        }
        WeightRule::Table(table) => *table
            .get(z)
            .ok_or_else(|| Error::WeightUndefined(z.to_string()))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveWeight {
            index: z.to_string(),
            value,
        })
    }
}

// Angle-addition recurrences drift slowly; reseed from sin_cos this often.
const RESEED_EVERY: usize = 64;

/// Batch evaluator for a fixed list of basis functions.
///
/// For Fourier indices the per-axis trig factors are tabulated once per point
/// by recurrence, so evaluating `|Z|` functions costs `O(d·ζ + |Z|·d)` rather
/// than `|Z|·d` transcendental calls.
#[derive(Clone, Debug)]
pub struct BasisEvaluator {
    dim: usize,
    indices: Vec<BasisIndex>,
    max_freq: usize,
}

/// Scratch space for [`BasisEvaluator::eval_into`].
#[derive(Clone, Debug, Default)]
pub struct EvalScratch {
    table: Vec<f64>,
}

impl BasisEvaluator {
    pub fn new(dim: usize, indices: Vec<BasisIndex>) -> Result<Self> {
        for z in &indices {
            match z {
                BasisIndex::Constant => {}
                BasisIndex::Fourier(f) if f.len() != dim => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: f.len(),
                    })
                }
                BasisIndex::Haar { .. } if dim != 1 => {
                    return Err(Error::UnsupportedDimension { basis: "haar", dim })
                }
                _ => {}
            }
        }
        let max_freq = indices
            .iter()
            .filter(|z| matches!(z, BasisIndex::Fourier(_)))
            .map(|z| z.resolution() as usize)
            .max()
            .unwrap_or(0);
        Ok(BasisEvaluator {
            dim,
            indices,
            max_freq,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn scratch(&self) -> EvalScratch {
        EvalScratch {
            table: vec![0.0; self.dim * (2 * self.max_freq + 1)],
        }
    }

    fn fill_table(&self, x: &[f64], table: &mut [f64]) {
        let width = 2 * self.max_freq + 1;
        let center = self.max_freq;
        for (axis, &xa) in x.iter().enumerate() {
            let row = &mut table[axis * width..(axis + 1) * width];
            row[center] = 1.0;
            if self.max_freq == 0 {
                continue;
            }
            let theta = 2.0 * PI * xa;
            let (s1, c1) = theta.sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for k in 1..=self.max_freq {
                if k % RESEED_EVERY == 0 {
                    let (sk, ck) = (theta * k as f64).sin_cos();
                    s = sk;
                    c = ck;
                } else {
                    let c_next = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = c_next;
                }
                row[center + k] = SQRT_2 * c;
                row[center - k] = SQRT_2 * s;
            }
        }
    }

    /// Writes `φ_z(x)` for every index into `out` (same order as `indices`).
    pub fn eval_into(&self, x: &[f64], scratch: &mut EvalScratch, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.indices.len());
        if self.max_freq > 0 {
            if scratch.table.len() != self.dim * (2 * self.max_freq + 1) {
                *scratch = self.scratch();
            }
            self.fill_table(x, &mut scratch.table);
        }
        let width = 2 * self.max_freq + 1;
        let center = self.max_freq as i64;
        for (slot, z) in out.iter_mut().zip(&self.indices) {
            *slot = match z {
                BasisIndex::Constant => 1.0,
                BasisIndex::Fourier(f) => f
                    .iter()
                    .enumerate()
                    .map(|(axis, &k)| scratch.table[axis * width + (center + i64::from(k)) as usize])
                    .product(),
                BasisIndex::Haar { level, position } => haar_value(*level, *position, x[0]),
            };
        }
    }
}
