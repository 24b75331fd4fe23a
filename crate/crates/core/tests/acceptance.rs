//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p advloss --test acceptance`.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use advloss::basis::{enumerate_truncation, sup_norm, BasisIndex};
use advloss::bounds::{
    class_scale, lower_bound, lower_bound_zeta, oracle_zeta, parametric_constant, sobolev_rate,
    upper_bound_risk, Convergence, ExponentConvention,
};
use advloss::density::{
    eval_density, hamming, kl_divergence, l2_distance, make_density, nonneg_check,
    packing_densities,
};
use advloss::estimator::{
    coefficient_sums, cv_profile_from_sums, default_grid, series_estimate, CoefficientSums,
};
use advloss::loss::{
    adversarial_loss, ellipse_membership, mmd_noise_scale, mmd_vstat, optimal_discriminator,
    pairing,
};
use advloss::montecarlo::{
    estimate_risk, nonparametric_truth, parametric_truth, rejection_sample, run_risk_curve,
    ExperimentConfig, SamplingMode, ZetaRule,
};
use advloss::{BasisKind, CoefficientVector, EllipseClass, KernelSpectrum, SeriesDensity};
use rand::Rng;

use common::{dirichlet_kernel, ks_test, random_delta, rng, uniform_data};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parametric_curve() -> Outcome {
    let curve = run_risk_curve(&ExperimentConfig::parametric(2024), None).map_err(|e| e.to_string())?;
    let slope = curve.fit.slope;
    check(
        (-0.58..=-0.42).contains(&slope),
        format!("slope {slope:.4} (window [-0.58, -0.42], residual rms {:.3})", curve.fit.residual_rms),
    )
}

fn nonparametric_curve() -> Outcome {
    let curve =
        run_risk_curve(&ExperimentConfig::nonparametric(2024), None).map_err(|e| e.to_string())?;
    let slope = curve.fit.slope;
    check(
        (-0.40..=-0.27).contains(&slope),
        format!("slope {slope:.4} (window [-0.40, -0.27], residual rms {:.3})", curve.fit.residual_rms),
    )
}

fn rate_table() -> Outcome {
    // (s, t, d, expected exponent)
    let table: [(f64, f64, usize, f64); 20] = [
        (1.0, 1.0, 2, 1.0 / 2.0),
        (0.0, 1.0, 1, 1.0 / 3.0),
        (2.0, 0.0, 3, 1.0 / 2.0),
        (0.0, 2.0, 1, 2.0 / 5.0),
        (0.0, 1.0, 2, 1.0 / 4.0),
        (0.0, 3.0, 1, 3.0 / 7.0),
        (0.0, 1.0, 3, 1.0 / 5.0),
        (0.5, 1.0, 2, 1.5 / 4.0),
        (0.25, 0.5, 1, 0.75 / 2.0),
        (0.0, 0.5, 1, 0.5 / 2.0),
        (1.0, 0.0, 4, 1.0 / 4.0),
        (1.0, 2.0, 4, 3.0 / 8.0),
        (0.5, 0.0, 1, 1.0 / 2.0),
        (0.0, 10.0, 1, 10.0 / 21.0),
        (3.0, 3.0, 1, 1.0 / 2.0),
        (0.0, 2.0, 3, 2.0 / 7.0),
        (1.0, 1.0, 5, 2.0 / 7.0),
        (0.5, 2.0, 3, 2.5 / 7.0),
        (0.0, 0.25, 2, 0.25 / 2.5),
        (2.0, 1.0, 10, 3.0 / 12.0),
    ];
    let mut mismatches = Vec::new();
    for &(s, t, d, expected) in &table {
        let got = sobolev_rate(s, t, d).map_err(|e| e.to_string())?.exponent;
        if got != expected {
            mismatches.push(format!("({s},{t},{d}): {got} != {expected}"));
        }
    }
    check(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} rows exact", table.len())
        } else {
            mismatches.join("; ")
        },
    )
}

fn duality() -> Outcome {
    let mut r = rng(4);
    let exponents = [1.5, 2.0, 3.0, 10.0];
    let mut worst_gap = 0.0f64;
    let mut violations = 0usize;
    for case in 0..1000 {
        let dim = 1 + case % 2;
        let p = exponents[case % 4];
        let class = EllipseClass::sobolev(r.gen_range(0.0..3.0), p, r.gen_range(0.5..2.0)).unwrap();
        let modes = r.gen_range(1..10);
        let delta = random_delta(&mut r, dim, 4, modes);
        let loss = adversarial_loss(&delta, &class).map_err(|e| e.to_string())?;
        let f_star = optimal_discriminator(&delta, &class).map_err(|e| e.to_string())?;
        let attained = pairing(&f_star, &delta);
        worst_gap = worst_gap.max((attained - loss).abs() / loss.max(1.0));
        let support: Vec<BasisIndex> = delta.indices().cloned().collect();
        for _ in 0..1000 {
            // random direction on the support plus one off-support mode,
            // scaled into the ball
            let mut f: CoefficientVector = support
                .iter()
                .map(|z| (z.clone(), r.gen_range(-1.0..1.0)))
                .collect();
            f.insert(BasisIndex::fourier(vec![5; dim]), r.gen_range(-1.0..1.0));
            let norm = ellipse_membership(&f, &class.with_radius(1.0).unwrap())
                .map_err(|e| e.to_string())?
                .norm;
            let f = f.scale(class.radius * r.gen::<f64>() / norm);
            if pairing(&f, &delta) > loss * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    check(
        violations == 0 && worst_gap <= 1e-12,
        format!("1000 cases x 1000 feasible f: {violations} violations, max |attained - loss| = {worst_gap:.2e}"),
    )
}

fn parametric_mmd_gate() -> Outcome {
    let cap = 16;
    let class = EllipseClass::rkhs(KernelSpectrum::geometric(0.5, cap, 1).unwrap(), 1.0).unwrap();
    let a = parametric_constant(&class, BasisKind::Fourier, 1, cap).map_err(|e| e.to_string())?;
    if a.verdict != Convergence::Converged {
        return Err(format!("parametric constant not converged: {a:?}"));
    }
    let truth = parametric_truth(1, 6, 4, (0.05, 0.12), 77).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for &n in &[128usize, 512, 2048, 8192] {
        let est = estimate_risk(&truth, &class, n, &ZetaRule::Fixed { value: cap }, 200, n as u64, None)
            .map_err(|e| e.to_string())?;
        let bound = a.risk_bound(class.radius, n as u64).unwrap();
        ok &= est.mean <= bound + 3.0 * est.stderr;
        lines.push(format!("n={n}: {:.4} <= {:.4}", est.mean, bound));
    }
    check(ok, format!("A = {:.6}; {}", a.total(), lines.join(", ")))
}

fn packing() -> Outcome {
    let mut details = Vec::new();
    for &(zeta, size) in &[(4u32, 8usize), (8, 16)] {
        let set = enumerate_truncation(BasisKind::Fourier, zeta, 1).unwrap().zero_mean();
        assert_eq!(set.len(), size);
        let unit = EllipseClass::sobolev(1.0, 2.0, 1.0).unwrap();
        let b_z = class_scale(&unit, &set, ExponentConvention::HalfPower).unwrap();
        let sup_sum: f64 = set.iter().map(sup_norm).sum();
        // amplitude L_G/B_Z on the condition boundary 2 c_G Σ sup = 1
        let generator = unit.with_radius(b_z / (2.0 * sup_sum)).unwrap();
        let family = packing_densities(&set, &generator, ExponentConvention::HalfPower, 11)
            .map_err(|e| e.to_string())?;
        let p0 = SeriesDensity::uniform(1, BasisKind::Fourier).unwrap();
        let mut min_value = f64::INFINITY;
        let mut min_hamming = usize::MAX;
        let mut worst_kl_slack = f64::INFINITY;
        for (i, p) in family.members.iter().enumerate() {
            let cert = nonneg_check(p, 1 << 14).map_err(|e| e.to_string())?;
            if !cert.verdict.is_nonnegative() {
                return Err(format!("|Z|={size}: member {i} not certified non-negative"));
            }
            for k in 0..=4096 {
                min_value = min_value.min(eval_density(p, &[k as f64 / 4096.0]).unwrap());
            }
            if !ellipse_membership(p.coefficients(), &generator).unwrap().is_member {
                return Err(format!("|Z|={size}: member {i} outside the generator ellipse"));
            }
            let kl = kl_divergence(p, &p0, 512).map_err(|e| e.to_string())?;
            let l2 = l2_distance(p, &p0).unwrap();
            worst_kl_slack = worst_kl_slack.min(2.0 * l2 * l2 + 1e-6 - kl);
            for q in &family.patterns[i + 1..] {
                min_hamming = min_hamming.min(hamming(&family.patterns[i], q));
            }
        }
        let ok = min_value >= 0.5 - 1e-12 && min_hamming * 8 >= size && worst_kl_slack >= 0.0;
        details.push(format!(
            "|Z|={size}: {} members, min p = {min_value:.6}, min Hamming = {min_hamming}, KL slack = {worst_kl_slack:.3e}",
            family.members.len()
        ));
        if !ok {
            return Err(details.join("; "));
        }
    }
    Ok(details.join("; "))
}

fn sandwich() -> Outcome {
    let mut r = rng(7);
    let mut checked = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    while checked < 50 {
        attempts += 1;
        if attempts > 100_000 {
            return Err(format!("only {checked} admissible configurations found"));
        }
        let d = r.gen_range(1..=2usize);
        let s = r.gen_range(0.0..2.0);
        let t = r.gen_range(0.5..3.0);
        let n = 10f64.powf(r.gen_range(2.0..6.0)).round() as u64;
        let l_d = r.gen_range(0.5..2.0);
        let l_g = 10f64.powf(r.gen_range(-3.0..0.0));
        let disc = EllipseClass::sobolev(s, 2.0, l_d).unwrap();
        let gen = EllipseClass::sobolev(t, 2.0, l_g).unwrap();
        let zl = lower_bound_zeta(t, d, n, l_g);
        if (2 * zl + 1).pow(d as u32) > 200_000 {
            continue;
        }
        let lower_set = enumerate_truncation(BasisKind::Fourier, zl, d).unwrap().zero_mean();
        let lower = lower_bound(&disc, &gen, &lower_set, n, ExponentConvention::HalfPower).unwrap();
        let Some(lb) = lower.bound else { continue };
        let zu = oracle_zeta(t, d, n);
        let upper_set = enumerate_truncation(BasisKind::Fourier, zu, d).unwrap();
        let ub = upper_bound_risk(&disc, &gen, &upper_set, n).unwrap().total;
        worst = worst.max(lb / ub);
        if lb > ub {
            return Err(format!("(s={s:.3}, t={t:.3}, d={d}, n={n}): lower {lb:.3e} > upper {ub:.3e}"));
        }
        checked += 1;
    }
    Ok(format!("50 admissible configurations ({attempts} drawn), max lower/upper = {worst:.3e}"))
}

/// Exact L² risk `‖p − p̂_ζ‖₂` for every ζ in `0..=top` (d = 1), from
/// `‖c‖² + Σ_{‖z‖≤ζ} [(ĉ_z − c_z)² − c_z²]`.
fn risk_profile(truth: &SeriesDensity, sums: &CoefficientSums, top: u32) -> Vec<f64> {
    let n = sums.n as f64;
    let mut shell = vec![0.0; top as usize + 1];
    for (z, s) in sums.indices.iter().zip(&sums.sum) {
        let c = truth.coefficients().get(z);
        shell[z.resolution() as usize] += (s / n - c).powi(2) - c * c;
    }
    let mut acc: f64 = truth.coefficients().values().map(|c| c * c).sum();
    shell
        .into_iter()
        .map(|v| {
            acc += v;
            acc.max(0.0).sqrt()
        })
        .collect()
}

fn cv_adaptivity() -> Outcome {
    let n = 4096;
    let grid = default_grid(n, 1, BasisKind::Fourier);
    let top = *grid.last().unwrap();
    let set = enumerate_truncation(BasisKind::Fourier, top, 1).unwrap().zero_mean();
    let mut summary = Vec::new();
    let mut ok = true;
    for &t in &[1.0, 2.0] {
        let truth = nonparametric_truth(1, 64, t, 0.05, 0.9, 5).unwrap();
        let mut within = 0;
        for rep in 0..100u64 {
            let data = rejection_sample(&truth, n, 1000 + rep, SamplingMode::Certified)
                .map_err(|e| e.to_string())?
                .data;
            let sums = coefficient_sums(&data, set.indices()).map_err(|e| e.to_string())?;
            let cv = cv_profile_from_sums(&sums, BasisKind::Fourier, &grid).map_err(|e| e.to_string())?;
            let mut zhat = cv[0];
            for &entry in &cv[1..] {
                if entry.1 < zhat.1 {
                    zhat = entry;
                }
            }
            let risks = risk_profile(&truth, &sums, top);
            let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
            if risks[zhat.0 as usize] <= 2.0 * best {
                within += 1;
            }
        }
        ok &= within >= 90;
        summary.push(format!("t={t}: {within}/100 within 2x"));
    }
    check(ok, summary.join(", "))
}

fn sampler() -> Outcome {
    let p = make_density(
        1,
        BasisKind::Fourier,
        [(BasisIndex::fourier(vec![1]), 0.5)].into_iter().collect(),
    )
    .unwrap();
    let amp = 0.5 * SQRT_2;
    let cdf = |x: f64| x + amp / (2.0 * PI) * (2.0 * PI * x).sin();
    let mut passes = 0;
    for seed in 0..100u64 {
        let s = rejection_sample(&p, 100_000, seed, SamplingMode::Certified).map_err(|e| e.to_string())?;
        let (_, pval) = ks_test(s.data.coords(), cdf);
        if pval > 0.01 {
            passes += 1;
        }
    }
    let spectrum = KernelSpectrum::geometric(0.5, 8, 1).unwrap();
    let x = rejection_sample(&p, 10_000, 501, SamplingMode::Certified).unwrap().data;
    let y = rejection_sample(&p, 10_000, 502, SamplingMode::Certified).unwrap().data;
    let mmd = mmd_vstat(&x, &y, &spectrum).unwrap();
    let scale = mmd_noise_scale(&x, &y, &spectrum).unwrap();
    check(
        passes >= 95 && mmd < 3.0 * scale,
        format!("KS p > 0.01 in {passes}/100 seeds; MMD_V = {mmd:.3e} vs 3 se = {:.3e}", 3.0 * scale),
    )
}

fn dirichlet() -> Outcome {
    let mut r = rng(10);
    let mut worst = 0.0f64;
    for zeta in 0..=8u32 {
        let data = uniform_data(200 + 37 * zeta as usize, 1, u64::from(zeta));
        let set = enumerate_truncation(BasisKind::Fourier, zeta, 1).unwrap().zero_mean();
        let p_hat = series_estimate(&data, &set).unwrap();
        let n = data.len() as f64;
        for _ in 0..1000 {
            let x: f64 = r.gen();
            let kde = data.coords().iter().map(|&xi| dirichlet_kernel(zeta, x - xi)).sum::<f64>() / n;
            worst = worst.max((eval_density(&p_hat, &[x]).unwrap() - kde).abs());
        }
    }
    check(worst <= 1e-10, format!("max |p̂ − Dirichlet smooth| = {worst:.2e} over ζ = 0..8"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("parametric risk-curve slope", parametric_curve),
        ("nonparametric risk-curve slope", nonparametric_curve),
        ("rate table", rate_table),
        ("duality oracle", duality),
        ("parametric MMD gate", parametric_mmd_gate),
        ("packing family", packing),
        ("lower ≤ upper sandwich", sandwich),
        ("CV adaptivity", cv_adaptivity),
        ("sampler correctness", sampler),
        ("Dirichlet-kernel equivalence", dirichlet),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
