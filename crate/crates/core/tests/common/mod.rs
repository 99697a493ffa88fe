//! Helpers shared by the oracle tests and the acceptance harness.

#![allow(dead_code)]

use fluxdicke::meanfield::{self, MinimizeOptions};
use fluxdicke::model::{self, ModelParams};

/// Lowest eliminated energy over `[−2, 2]³` at step 0.01 (N = 3).
pub fn grid_search_n3(p: &ModelParams) -> f64 {
    let a = meanfield::effective_matrix::<f64>(p);
    let vals: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
    let atom: Vec<f64> = vals.iter().map(|v| -0.5 * (1.0 + 4.0 * p.g * p.g * v * v).sqrt()).collect();
    let mut best = f64::INFINITY;
    for (i, &x0) in vals.iter().enumerate() {
        for (j, &x1) in vals.iter().enumerate() {
            let pre = a[(0, 0)] * x0 * x0 + a[(1, 1)] * x1 * x1 + 2.0 * a[(0, 1)] * x0 * x1 + atom[i] + atom[j];
            for (k, &x2) in vals.iter().enumerate() {
                let e = pre + a[(2, 2)] * x2 * x2 + 2.0 * (a[(0, 2)] * x0 + a[(1, 2)] * x1) * x2 + atom[k];
                best = best.min(e);
            }
        }
    }
    best
}

/// Max-norm distance between the N = 3 minimizer at `g = g_c + delta` and
/// the closest symmetry image of the near-critical series.
pub fn asymptotic_residual(theta: f64, delta: f64) -> f64 {
    let base = ModelParams::new(3).with_theta(theta);
    let p = base.with_g(model::critical_coupling_theta(&base) + delta);
    let x = meanfield::minimize_landscape(&p, &MinimizeOptions::default()).unwrap().ground.x;
    let series = meanfield::asymptotic_n3(&p).unwrap();
    meanfield::symmetry_images(&series)
        .into_iter()
        .map(|im| im.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}
