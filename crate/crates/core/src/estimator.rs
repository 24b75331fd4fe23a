//! Truncated orthogonal series estimator and leave-one-out tuning of `ζ`.

use std::io::{BufRead, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::basis::{enumerate_truncation, BasisEvaluator, BasisIndex, BasisKind, TruncationSet};
use crate::density::{make_density, SeriesDensity};
use crate::error::{Error, Result};

/// `n ≥ 1` points in `[0,1]^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Parse(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfDomain {
                row: pos / dim,
                value: coords[pos],
            });
        }
        Ok(Dataset { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Parse(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Reads CSV with header `x1,…,xd`.
    pub fn read_csv(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line.map_err(|e| Error::Parse(e.to_string()))?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::EmptyDataset),
            }
        };
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = columns.len();
        for (j, name) in columns.iter().enumerate() {
            if *name != format!("x{}", j + 1) {
                return Err(Error::Parse(format!(
                    "header column {} is `{name}`, expected `x{}`",
                    j + 1,
                    j + 1
                )));
            }
        }
        let mut coords = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != dim {
                return Err(Error::Parse(format!(
                    "line {}: {} fields, expected {dim}",
                    lineno + 1,
                    row.len()
                )));
            }
            for field in row {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Parse(format!("line {}: `{}` is not a number", lineno + 1, field.trim()))
                })?;
                coords.push(v);
            }
        }
        Self::new(dim, coords)
    }

    pub fn write_csv(&self, mut writer: impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        writeln!(writer, "{}", header.join(","))?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            writeln!(writer, "{}", row.join(","))?;
        }
        Ok(())
    }
}

// Points per partial sum; fixed so results do not depend on thread count.
const BLOCK: usize = 1024;

/// Per-index sums `Σ_i φ_z(X_i)` and `Σ_i φ_z(X_i)²`.
#[derive(Clone, Debug)]
pub struct CoefficientSums {
    pub indices: Vec<BasisIndex>,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub n: usize,
}

fn pairwise_reduce(mut parts: Vec<(Vec<f64>, Vec<f64>)>) -> (Vec<f64>, Vec<f64>) {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some((mut s, mut q)) = iter.next() {
            if let Some((s2, q2)) = iter.next() {
                s.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                q.iter_mut().zip(&q2).for_each(|(a, b)| *a += b);
            }
            next.push((s, q));
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Sums over the data in fixed blocks combined by pairwise summation.
pub fn coefficient_sums(data: &Dataset, indices: &[BasisIndex]) -> Result<CoefficientSums> {
    let ev = BasisEvaluator::new(data.dim(), indices.to_vec())?;
    let width = indices.len();
    let block_sums = |block: &[f64]| {
        let mut scratch = ev.scratch();
        let mut phi = vec![0.0; width];
        let mut s = vec![0.0; width];
        let mut q = vec![0.0; width];
        for x in block.chunks_exact(data.dim()) {
            ev.eval_into(x, &mut scratch, &mut phi);
            for ((a, b), f) in s.iter_mut().zip(q.iter_mut()).zip(&phi) {
                *a += f;
                *b += f * f;
            }
        }
        (s, q)
    };
    let chunk = BLOCK * data.dim();
    #[cfg(feature = "parallel")]
    let parts: Vec<_> = data.coords().par_chunks(chunk).map(block_sums).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<_> = data.coords().chunks(chunk).map(block_sums).collect();
    let (sum, sum_sq) = pairwise_reduce(parts);
    Ok(CoefficientSums {
        indices: indices.to_vec(),
        sum,
        sum_sq,
        n: data.len(),
    })
}

/// `P̂_z = (1/n) Σ_i φ_z(X_i)`.
pub fn empirical_coefficient(data: &Dataset, z: &BasisIndex) -> Result<f64> {
    let sums = coefficient_sums(data, std::slice::from_ref(z))?;
    Ok(sums.sum[0] / data.len() as f64)
}

/// The truncated series estimate `P̂_Z = 1 + Σ_{z∈Z} P̂_z φ_z`.
///
/// The constant is always carried with coefficient 1; the estimate is not
/// clipped and may be negative somewhere.
pub fn series_estimate(data: &Dataset, indices: &TruncationSet) -> Result<SeriesDensity> {
    if indices.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: indices.dim(),
            found: data.dim(),
        });
    }
    let keep: Vec<BasisIndex> = indices.iter().filter(|z| !z.is_constant()).cloned().collect();
    let sums = coefficient_sums(data, &keep)?;
    let n = data.len() as f64;
    let coeffs = keep
        .into_iter()
        .zip(sums.sum)
        .map(|(z, s)| (z, s / n))
        .collect();
    make_density(data.dim(), indices.kind(), coeffs)
}

/// Contribution of one index to the leave-one-out criterion.
///
/// With `S = Σφ_z(X_i)` and `Q = Σφ_z(X_i)²`, the leave-one-out coefficients
/// are `(S − φ_z(X_i))/(n−1)`, so `Σ_i P̂_{−i,z} φ_z(X_i) = (S² − Q)/(n−1)`.
fn cv_term(sum: f64, sum_sq: f64, n: f64) -> f64 {
    let mean = sum / n;
    mean * mean - 2.0 * (sum * sum - sum_sq) / (n * (n - 1.0))
}

fn truncation_zero_mean(kind: BasisKind, zeta: u32, dim: usize) -> Result<TruncationSet> {
    Ok(enumerate_truncation(kind, zeta, dim)?.zero_mean())
}

/// Leave-one-out criterion `Ĵ(ζ) = ‖P̂_ζ‖² − (2/n) Σ_i P̂_{ζ,−i}(X_i)`.
pub fn cv_score(data: &Dataset, kind: BasisKind, zeta: u32) -> Result<f64> {
    Ok(cv_profile(data, kind, &[zeta])?[0].1)
}

/// `Ĵ(ζ)` for every `ζ` in `grid`, sharing one pass over the data.
pub fn cv_profile(data: &Dataset, kind: BasisKind, grid: &[u32]) -> Result<Vec<(u32, f64)>> {
    if data.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: data.len(),
        });
    }
    let top = match grid.iter().max() {
        Some(&m) => m,
        None => return Err(Error::InvalidParameter("empty ζ grid".into())),
    };
    let set = truncation_zero_mean(kind, top, data.dim())?;
    let sums = coefficient_sums(data, set.indices())?;
    cv_profile_from_sums(&sums, kind, grid)
}

/// [`cv_profile`] from precomputed sums over (at least) `{0 < ‖z‖ ≤ max grid}`.
///
/// Indices finer than the largest grid value are ignored.
pub fn cv_profile_from_sums(
    sums: &CoefficientSums,
    kind: BasisKind,
    grid: &[u32],
) -> Result<Vec<(u32, f64)>> {
    if sums.n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: sums.n,
        });
    }
    let top = match grid.iter().max() {
        Some(&m) => m,
        None => return Err(Error::InvalidParameter("empty ζ grid".into())),
    };
    let n = sums.n as f64;
    // accumulate per resolution shell, then prefix-sum
    let mut shell = vec![0.0; top as usize + 1];
    for ((z, &s), &q) in sums.indices.iter().zip(&sums.sum).zip(&sums.sum_sq) {
        if let Some(slot) = shell.get_mut(z.resolution() as usize) {
            *slot += cv_term(s, q, n);
        }
    }
    let mut prefix = Vec::with_capacity(shell.len());
    let mut acc = 0.0;
    for v in &shell {
        acc += v;
        prefix.push(acc);
    }
    // ζ = 0 keeps only the constant for Fourier, level 0 for Haar
    Ok(grid
        .iter()
        .map(|&zeta| {
            let included = match kind {
                BasisKind::Fourier if zeta == 0 => 0.0,
                _ => prefix[zeta as usize],
            };
            (zeta, -1.0 + included)
        })
        .collect())
}

/// Default CV grid `{0, 1, …, ⌈n^{1/d}⌉}` (Haar: capped at `⌊log₂ n⌋`).
pub fn default_grid(n: usize, dim: usize, kind: BasisKind) -> Vec<u32> {
    let root = (n as f64).powf(1.0 / dim as f64);
    // guard against n^{1/d} landing a hair above an integer
    let mut top = root.ceil() as u32;
    if top > 0 && ((top - 1) as f64 - root).abs() < 1e-9 {
        top -= 1;
    }
    if kind == BasisKind::Haar {
        top = top.min(usize::BITS - 1 - n.leading_zeros());
    }
    (0..=top).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvSelection {
    pub zeta: u32,
    pub table: Vec<(u32, f64)>,
}

/// `ζ̂ = argmin_ζ Ĵ(ζ)` over `grid`; ties go to the smaller `ζ`.
pub fn adaptive_zeta(data: &Dataset, kind: BasisKind, grid: &[u32]) -> Result<CvSelection> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let table = cv_profile(data, kind, &grid)?;
    let mut best = table[0];
    for &(zeta, score) in &table[1..] {
        if score < best.1 {
            best = (zeta, score);
        }
    }
    Ok(CvSelection {
        zeta: best.0,
        table,
    })
}

/// How the truncation level is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum ZetaChoice {
    Fixed(u32),
    /// Leave-one-out CV over the grid (default grid when `None`).
    Adaptive(Option<Vec<u32>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub kind: BasisKind,
    pub zeta: ZetaChoice,
}

#[derive(Clone, Debug)]
pub struct Fit {
    pub density: SeriesDensity,
    pub zeta: u32,
    pub cv: Option<CvSelection>,
}

pub fn fit(data: &Dataset, config: &EstimatorConfig) -> Result<Fit> {
    let (zeta, cv) = match &config.zeta {
        ZetaChoice::Fixed(z) => (*z, None),
        ZetaChoice::Adaptive(grid) => {
            let grid = grid
                .clone()
                .unwrap_or_else(|| default_grid(data.len(), data.dim(), config.kind));
            if grid.is_empty() {
                return Err(Error::InvalidParameter("empty ζ grid".into()));
            }
            let sel = adaptive_zeta(data, config.kind, &grid)?;
            (sel.zeta, Some(sel))
        }
    };
    let set = truncation_zero_mean(config.kind, zeta, data.dim())?;
    Ok(Fit {
        density: series_estimate(data, &set)?,
        zeta,
        cv,
    })
}
