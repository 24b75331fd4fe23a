use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use advloss::bounds::{sobolev_summary, ExponentConvention};
use advloss::basis::sup_norm;
use advloss::density::{hamming, packing_densities, SCHEMA_VERSION};
use advloss::estimator::{cv_profile, default_grid, fit, EstimatorConfig, ZetaChoice};
use advloss::loss::adversarial_loss;
use advloss::montecarlo::{
    parametric_truth, rejection_sample, run_risk_curve, sampling_equivalence_experiment,
    ExperimentConfig, SamplingMode, ZetaRule,
};
use advloss::{enumerate_truncation, Dataset, EllipseClass, KernelSpectrum, SeriesDensity};
use anyhow::anyhow;
use serde_json::json;

use crate::fail::{create_output, input, library, read_input, runtime, write_failed, Outcome};
use crate::table::{csv, g6, markdown};
use crate::{
    BoundsArgs, ClassArgs, Convention, CvArgs, EquivalenceArgs, EstimateArgs, Format, LossCmdArgs,
    PackArgs, RiskCurveArgs, SampleArgs,
};

fn read_data(flag: &str, path: &Path) -> Outcome<Dataset> {
    let text = read_input(flag, path)?;
    Dataset::read_csv(BufReader::new(text.as_bytes()))
        .map_err(|e| input(anyhow!("--{flag} `{}`: {e}", path.display())))
}

fn read_density(flag: &str, path: &Path) -> Outcome<SeriesDensity> {
    let text = read_input(flag, path)?;
    SeriesDensity::from_json(&text).map_err(|e| input(anyhow!("--{flag} `{}`: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn build_class(a: &ClassArgs, dim: usize) -> advloss::Result<EllipseClass> {
    match a.kernel_ratio {
        Some(r) => EllipseClass::rkhs(KernelSpectrum::geometric(r, a.kernel_cap, dim)?, a.l_d),
        None => EllipseClass::sobolev(a.s, a.exponent, a.l_d),
    }
}

pub fn estimate(a: EstimateArgs) -> Outcome {
    let data = read_data("data", &a.data)?;
    let mut out = create_output("out", &a.out)?;
    let zeta = match a.zeta {
        Some(z) => ZetaChoice::Fixed(z),
        None => ZetaChoice::Adaptive(None),
    };
    let fitted = fit(&data, &EstimatorConfig { kind: a.basis, zeta }).map_err(library)?;
    if let Some(cv) = &fitted.cv {
        let rows: Vec<Vec<String>> = cv
            .table
            .iter()
            .map(|&(z, j)| vec![z.to_string(), g6(j)])
            .collect();
        print!("{}", markdown(&["ζ", "Ĵ(ζ)"], &rows));
        println!("selected ζ̂ = {}", fitted.zeta);
    }
    let text = fitted.density.to_json().map_err(runtime)? + "\n";
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| write_failed(&a.out, e))?;
    println!(
        "wrote {} coefficients (ζ = {}) to {}",
        fitted.density.coefficients().len(),
        fitted.zeta,
        a.out.display()
    );
    Ok(())
}

pub fn loss(a: LossCmdArgs) -> Outcome {
    let p = read_density("p", &a.p)?;
    let q = read_density("q", &a.q)?;
    if p.dim() != q.dim() || p.kind() != q.kind() {
        return Err(input(anyhow!(
            "--p is {} in d = {} but --q is {} in d = {}",
            p.kind(),
            p.dim(),
            q.kind(),
            q.dim()
        )));
    }
    let class = build_class(&a.class, p.dim()).map_err(library)?;
    let value = adversarial_loss(&(p.coefficients() - q.coefficients()), &class).map_err(library)?;
    match a.format {
        Format::Json => print!(
            "{}",
            pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "loss": value,
                "exponent": class.exponent,
                "radius": class.radius,
            }))
        ),
        Format::Csv => print!("{}", csv(&["loss"], &[vec![format!("{value:?}")]])),
        Format::Md => println!("loss = {}", g6(value)),
    }
    Ok(())
}

pub fn bounds(a: BoundsArgs) -> Outcome {
    let sum = sobolev_summary(a.s, a.t, a.d, a.n, a.l_d, a.l_g, a.lower_zeta).map_err(library)?;
    if let Format::Json = a.format {
        print!(
            "{}",
            pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "rate": sum.rate,
                "upper": sum.upper,
                "lower": sum.lower,
            }))
        );
        return Ok(());
    }
    let regime = if sum.rate.parametric { "parametric" } else { "nonparametric" };
    let lower = sum.lower.bound.map_or_else(|| "n/a (conditions fail)".to_string(), g6);
    let mut rows = vec![
        vec!["rate exponent".into(), g6(sum.rate.exponent)],
        vec!["regime".into(), regime.into()],
        vec!["upper ζ".into(), sum.upper.zeta.to_string()],
        vec!["upper variance".into(), g6(sum.upper.variance)],
        vec!["upper bias".into(), g6(sum.upper.bias)],
        vec!["upper bound".into(), g6(sum.upper.total)],
        vec!["lower ζ".into(), sum.lower.zeta.to_string()],
        vec!["#Z".into(), sum.lower.size.to_string()],
        vec!["A_Z".into(), g6(sum.lower.a_z)],
        vec!["B_Z".into(), g6(sum.lower.b_z)],
        vec!["lower bound".into(), lower],
    ];
    for c in &sum.lower.conditions {
        let verdict = if c.holds { "holds" } else { "fails" };
        rows.push(vec![
            format!("condition {}", c.name),
            format!("{verdict} (lhs {}, rhs {})", g6(c.lhs), g6(c.rhs)),
        ]);
    }
    match a.format {
        Format::Csv => print!("{}", csv(&["quantity", "value"], &rows)),
        _ => print!("{}", markdown(&["quantity", "value"], &rows)),
    }
    if sum.rate.parametric {
        println!("note: parametric, 2s ≥ d so the rate is n^(-1/2) for every t");
    }
    for c in sum.lower.failed_conditions() {
        println!(
            "diagnostic: lower-bound condition {} fails at ζ = {} (lhs {}, rhs {})",
            c.name,
            sum.lower.zeta,
            g6(c.lhs),
            g6(c.rhs)
        );
    }
    Ok(())
}

pub fn cv(a: CvArgs) -> Outcome {
    let data = read_data("data", &a.data)?;
    let grid = if a.zeta.is_empty() {
        default_grid(data.len(), data.dim(), a.basis)
    } else {
        let mut g = a.zeta.clone();
        g.sort_unstable();
        g.dedup();
        g
    };
    let table = cv_profile(&data, a.basis, &grid).map_err(library)?;
    let best = table
        .iter()
        .copied()
        .reduce(|b, c| if c.1 < b.1 { c } else { b })
        .expect("non-empty grid");
    match a.format {
        Format::Json => print!(
            "{}",
            pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "basis": a.basis,
                "n": data.len(),
                "scores": table,
                "selected": best.0,
            }))
        ),
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                table.iter().map(|&(z, j)| vec![z.to_string(), format!("{j:?}")]).collect();
            print!("{}", csv(&["zeta", "score"], &rows));
        }
        Format::Md => {
            let rows: Vec<Vec<String>> = table.iter().map(|&(z, j)| vec![z.to_string(), g6(j)]).collect();
            print!("{}", markdown(&["ζ", "Ĵ(ζ)"], &rows));
            println!("selected ζ̂ = {}", best.0);
        }
    }
    Ok(())
}

pub fn sample(a: SampleArgs) -> Outcome {
    let p = read_density("density", &a.density)?;
    let mut out = create_output("out", &a.out)?;
    let mode = if a.positive_part { SamplingMode::PositivePart } else { SamplingMode::Certified };
    let s = rejection_sample(&p, a.m, a.seed, mode).map_err(library)?;
    s.data
        .write_csv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| write_failed(&a.out, e))?;
    println!(
        "{} points, envelope {}, acceptance {}, positive mass {}",
        s.data.len(),
        g6(s.envelope),
        g6(s.acceptance_rate()),
        g6(s.mass)
    );
    Ok(())
}

pub fn pack(a: PackArgs) -> Outcome {
    let mut out = a.out.as_deref().map(|p| create_output("out", p)).transpose()?;
    let set = enumerate_truncation(advloss::BasisKind::Fourier, a.zeta, a.d)
        .map_err(library)?
        .zero_mean();
    let gen = EllipseClass::sobolev(a.t, a.exponent, a.l_g).map_err(library)?;
    let convention = match a.convention {
        Convention::Half => ExponentConvention::HalfPower,
        Convention::Exponent => ExponentConvention::ExponentPower,
    };
    let family = packing_densities(&set, &gen, convention, a.seed).map_err(library)?;
    let min_hamming = family
        .patterns
        .iter()
        .enumerate()
        .flat_map(|(i, x)| family.patterns[i + 1..].iter().map(move |y| hamming(x, y)))
        .min();
    let sup_sum: f64 = set.iter().map(sup_norm).sum();
    let density_floor = 1.0 - family.amplitude * sup_sum;
    let rows = vec![
        vec!["#Z".into(), set.len().to_string()],
        vec!["members".into(), family.members.len().to_string()],
        vec!["amplitude c_G".into(), g6(family.amplitude)],
        vec![
            "min pairwise Hamming".into(),
            min_hamming.map_or_else(|| "n/a".into(), |h| h.to_string()),
        ],
        vec!["#Z/8".into(), g6(set.len() as f64 / 8.0)],
        vec!["density lower bound 1 − c_G Σ‖φ_z‖_∞".into(), g6(density_floor)],
    ];
    print!("{}", markdown(&["quantity", "value"], &rows));
    if let (Some(w), Some(path)) = (out.as_mut(), a.out.as_deref()) {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "amplitude": family.amplitude,
            "indices": family.indices.iter().map(|z| z.to_coords(a.d)).collect::<Vec<_>>(),
            "patterns": family.patterns,
        });
        w.write_all(pretty(&doc).as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| write_failed(path, e))?;
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn risk_curve(a: RiskCurveArgs, workers: Option<usize>) -> Outcome {
    let text = read_input("config", &a.config)?;
    let cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| input(anyhow!("--config `{}`: {e}", a.config.display())))?;
    let paths = [".csv", ".summary.json", ".svg"].map(|s| with_suffix(&a.out_prefix, s));
    let mut files = paths
        .iter()
        .map(|p| create_output("out-prefix", p))
        .collect::<Outcome<Vec<_>>>()?;
    let curve = run_risk_curve(&cfg, workers).map_err(runtime)?;
    let summary = pretty(&curve.summary_json());
    let [csv_w, json_w, svg_w] = &mut files[..] else { unreachable!() };
    curve
        .write_csv(&mut *csv_w)
        .and_then(|_| csv_w.flush())
        .map_err(|e| write_failed(&paths[0], e))?;
    json_w
        .write_all(summary.as_bytes())
        .and_then(|_| json_w.flush())
        .map_err(|e| write_failed(&paths[1], e))?;
    curve
        .write_svg(&mut *svg_w)
        .and_then(|_| svg_w.flush())
        .map_err(|e| write_failed(&paths[2], e))?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| vec![p.n.to_string(), g6(p.mean_risk), g6(p.stderr), p.replications.to_string()])
        .collect();
    print!("{}", markdown(&["n", "mean risk", "stderr", "R"], &rows));
    let theory = curve.theoretical_exponent.map_or_else(|| "n/a".into(), g6);
    println!("slope {}  theoretical {}", g6(curve.fit.slope), theory);
    Ok(())
}

pub fn equivalence(a: EquivalenceArgs, workers: Option<usize>) -> Outcome {
    let truth = match &a.truth {
        Some(path) => read_density("truth", path)?,
        None => parametric_truth(1, 6, 4, (0.05, 0.12), a.seed).map_err(runtime)?,
    };
    let class = build_class(&a.class, truth.dim()).map_err(library)?;
    if a.m.is_empty() {
        return Err(input(anyhow!("--m needs at least one value")));
    }
    let table = sampling_equivalence_experiment(
        &truth,
        &class,
        a.n,
        &a.m,
        &ZetaRule::Fixed { value: a.zeta },
        a.replications,
        a.seed,
        workers,
    )
    .map_err(library)?;
    match a.format {
        Format::Json => print!(
            "{}",
            pretty(&json!({"schema_version": SCHEMA_VERSION, "n": table.n, "rows": table.rows}))
        ),
        Format::Csv => {
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    [r.m as f64, r.direct.mean, r.resampled.mean, r.gap.mean, r.gap.stderr, r.floor.mean, r.mass_deficit]
                        .iter()
                        .enumerate()
                        .map(|(k, v)| if k == 0 { r.m.to_string() } else { format!("{v:?}") })
                        .collect()
                })
                .collect();
            print!(
                "{}",
                csv(&["m", "direct", "resampled", "gap", "gap_stderr", "floor", "mass_deficit"], &rows)
            );
        }
        Format::Md => {
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        g6(r.direct.mean),
                        g6(r.resampled.mean),
                        format!("{} ± {}", g6(r.gap.mean), g6(r.gap.stderr)),
                        g6(r.floor.mean),
                        g6(r.mass_deficit),
                    ]
                })
                .collect();
            print!(
                "{}",
                markdown(&["m", "d(P,P̂)", "d(P,P̂′)", "gap", "floor", "mass deficit"], &rows)
            );
        }
    }
    Ok(())
}
