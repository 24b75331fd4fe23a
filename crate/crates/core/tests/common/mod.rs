#![allow(dead_code)]

use std::f64::consts::PI;

use advloss::{BasisKind, CoefficientVector, Dataset};
use advloss::basis::{enumerate_truncation, BasisIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_data(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    Dataset::new(dim, (0..n * dim).map(|_| r.gen::<f64>()).collect()).unwrap()
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        s += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic `sup |F_m − F|` and its asymptotic p-value.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / m - f).max(f - i as f64 / m);
    }
    (d, kolmogorov_survival(m.sqrt() * d))
}

/// `D_ζ(u) = 1 + 2 Σ_{k ≤ ζ} cos(2πku) = sin((2ζ+1)πu) / sin(πu)`.
pub fn dirichlet_kernel(zeta: u32, u: f64) -> f64 {
    let s = (PI * u).sin();
    if s.abs() < 1e-8 {
        // near an integer: fall back to the cosine sum
        return 1.0 + 2.0 * (1..=zeta).map(|k| (2.0 * PI * f64::from(k) * u).cos()).sum::<f64>();
    }
    ((2 * zeta + 1) as f64 * PI * u).sin() / s
}

/// Random coefficient vector on `modes` Fourier indices with `‖z‖_∞ ≤ zeta`.
pub fn random_delta(r: &mut ChaCha8Rng, dim: usize, zeta: u32, modes: usize) -> CoefficientVector {
    let pool = enumerate_truncation(BasisKind::Fourier, zeta, dim).unwrap().zero_mean();
    let idx: Vec<BasisIndex> = pool.indices().to_vec();
    let mut out = CoefficientVector::new();
    while out.len() < modes.min(idx.len()) {
        let z = idx[r.gen_range(0..idx.len())].clone();
        out.insert(z, r.gen_range(-1.0..1.0));
    }
    out
}
