//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string.

use advloss::basis::BasisIndex;
use advloss::bounds::sobolev_summary;
use advloss::density::make_density;
use advloss::estimator::{fit, EstimatorConfig, ZetaChoice};
use advloss::montecarlo::{rejection_sample, run_risk_curve, ExperimentConfig, SamplingMode};
use advloss::{BasisKind, CoefficientVector};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Draws `n` points from `1 + Σ c_k φ_k` (realified Fourier, `d = 1`) and fits
/// a series estimate at level `zeta`, or by cross-validation when `zeta < 0`.
///
/// `modes` is a JSON array of `[k, c_k]` pairs. The result holds the truth and
/// the estimate on `grid` points, a histogram of the sample, the chosen level,
/// the CV table (adaptive only) and the L² error.
#[wasm_bindgen]
pub fn fit_demo(modes: &str, n: usize, seed: u64, zeta: i32, grid: usize) -> Result<String, JsValue> {
    let pairs: Vec<(i32, f64)> = serde_json::from_str(modes).map_err(js_err)?;
    let coeffs: CoefficientVector = pairs
        .into_iter()
        .map(|(k, c)| (BasisIndex::fourier(vec![k]), c))
        .collect();
    let truth = make_density(1, BasisKind::Fourier, coeffs).map_err(js_err)?;
    let sample = rejection_sample(&truth, n, seed, SamplingMode::Certified).map_err(js_err)?;
    let choice = if zeta < 0 {
        ZetaChoice::Adaptive(None)
    } else {
        ZetaChoice::Fixed(zeta as u32)
    };
    let fitted = fit(&sample.data, &EstimatorConfig { kind: BasisKind::Fourier, zeta: choice })
        .map_err(js_err)?;
    let grid = grid.clamp(16, 2000);
    let xs: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    let mut tp = truth.probe();
    let mut ep = fitted.density.probe();
    let bins = 40;
    let mut hist = vec![0.0; bins];
    for x in sample.data.coords() {
        hist[((x * bins as f64) as usize).min(bins - 1)] += bins as f64 / n.max(1) as f64;
    }
    let l2 = advloss::density::l2_distance(&truth, &fitted.density).map_err(js_err)?;
    let out = json!({
        "x": xs,
        "truth": xs.iter().map(|&x| tp.at(&[x])).collect::<Vec<_>>(),
        "estimate": xs.iter().map(|&x| ep.at(&[x])).collect::<Vec<_>>(),
        "histogram": hist,
        "zeta": fitted.zeta,
        "cv": fitted.cv.map(|c| c.table),
        "l2_error": l2,
        "acceptance": sample.acceptance_rate(),
    });
    Ok(out.to_string())
}

/// Rate exponent and the upper/lower bounds on a log-spaced grid of `n`.
#[wasm_bindgen]
pub fn bounds_curve(s: f64, t: f64, d: usize, l_d: f64, l_g: f64, log10_max_n: f64) -> Result<String, JsValue> {
    let top = log10_max_n.clamp(2.0, 9.0);
    let mut rows = Vec::new();
    let mut rate = Value::Null;
    for i in 0..=24 {
        let n = 10f64.powf(1.0 + (top - 1.0) * i as f64 / 24.0).round() as u64;
        let sum = sobolev_summary(s, t, d, n, l_d, l_g, None).map_err(js_err)?;
        rate = json!({"exponent": sum.rate.exponent, "parametric": sum.rate.parametric});
        let failed: Vec<&str> = sum.lower.failed_conditions().map(|c| c.name.as_str()).collect();
        rows.push(json!({
            "n": n,
            "upper": sum.upper.total,
            "lower": sum.lower.bound,
            "failed": failed,
        }));
    }
    Ok(json!({"rate": rate, "rows": rows}).to_string())
}

/// A short risk curve for one of the two bundled regimes.
#[wasm_bindgen]
pub fn risk_curve_demo(regime: &str, max_log2_n: u32, replications: usize, seed: u64) -> Result<String, JsValue> {
    let mut cfg = match regime {
        "parametric" => ExperimentConfig::parametric(seed),
        "nonparametric" => ExperimentConfig::nonparametric(seed),
        other => return Err(js_err(format!("unknown regime `{other}`"))),
    };
    cfg.n_grid = (7..=max_log2_n.clamp(8, 13)).map(|k| 1usize << k).collect();
    cfg.replications = replications.clamp(1, 200);
    let curve = run_risk_curve(&cfg, None).map_err(js_err)?;
    Ok(json!({
        "points": curve.points,
        "slope": curve.fit.slope,
        "intercept": curve.fit.intercept,
        "theoretical": curve.theoretical_exponent,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_demo_returns_curves() {
        let v: Value = serde_json::from_str(&fit_demo("[[1,0.4],[-3,0.2]]", 2000, 1, -1, 100).unwrap()).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 100);
        assert!(v["cv"].is_array());
        assert!(v["l2_error"].as_f64().unwrap() < 0.2);
    }

    #[test]
    fn bounds_curve_reports_rate() {
        let v: Value = serde_json::from_str(&bounds_curve(0.0, 1.0, 1, 1.0, 1.0, 6.0).unwrap()).unwrap();
        assert_eq!(v["rate"]["exponent"].as_f64(), Some(1.0 / 3.0));
        assert_eq!(v["rows"].as_array().unwrap().len(), 25);
    }

    #[test]
    fn risk_curve_demo_fits_a_slope() {
        let v: Value = serde_json::from_str(&risk_curve_demo("parametric", 9, 20, 3).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 3);
        assert!(v["slope"].as_f64().unwrap() < 0.0);
    }
}
