//! Composite Gauss-Legendre rules on `[0,1]` and their tensor products.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const PANEL_ORDER: usize = 8;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { 1.0 } else { p1 };
            let pn1 = if order <= 1 { 1.0 } else { p0 };
            dp = n * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// One-dimensional composite rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// 8-point panels; the node count is rounded up to a multiple of 8.
    pub fn composite(nodes_per_axis: usize) -> Result<Self> {
        if nodes_per_axis == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let order = nodes_per_axis.min(PANEL_ORDER);
        let panels = nodes_per_axis.div_ceil(order);
        let (base_x, base_w) = gauss_legendre(order);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let left = p as f64 * h;
            for (x, w) in base_x.iter().zip(&base_w) {
                nodes.push(left + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Ok(Rule1d { nodes, weights })
    }
}

/// Tensor-product rule on `[0,1]^d` for `d ≤ 2`.
pub fn tensor_rule(dim: usize, nodes_per_axis: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let rule = Rule1d::composite(nodes_per_axis)?;
    match dim {
        1 => Ok(rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| (vec![x], w))
            .collect()),
        2 => {
            let mut out = Vec::with_capacity(rule.nodes.len().pow(2));
            for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
                for (&y, &wy) in rule.nodes.iter().zip(&rule.weights) {
                    out.push((vec![x, y], wx * wy));
                }
            }
            Ok(out)
        }
        _ => Err(Error::InvalidParameter(format!(
            "tensor quadrature supports d ≤ 2, got d = {dim}"
        ))),
    }
}

/// `∫_{[0,1]^d} f` by the tensor rule.
pub fn integrate(dim: usize, nodes_per_axis: usize, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
    let rule = tensor_rule(dim, nodes_per_axis)?;
    Ok(rule.iter().map(|(x, w)| w * f(x)).sum())
}
