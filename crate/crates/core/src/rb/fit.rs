//! Levenberg–Marquardt fit of `a·p^l + b`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

const MAX_ITERATIONS: usize = 500;
/// Below this spread in survival the decay rate cannot be identified.
const MIN_SURVIVAL_RANGE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Sum of squared residuals.
    pub residual: f64,
    /// True when the data were too flat to pin down `p`.
    pub unidentifiable: bool,
    pub lengths: Vec<f64>,
    pub survival: Vec<f64>,
}

impl RbFit {
    pub fn predict(&self, l: f64) -> f64 {
        self.a * self.p.powf(l) + self.b
    }
}

fn cost(theta: &Vector3<f64>, ls: &[f64], ys: &[f64]) -> f64 {
    ls.iter().zip(ys).map(|(&l, &y)| (theta[0] * theta[1].powf(l) + theta[2] - y).powi(2)).sum()
}

/// Least-squares fit of `a·p^l + b` starting from `a = 0.5`, `p = 0.99`,
/// `b = 2^-n`, with `p` kept inside `(0, 1]`.
pub fn fit_decay(lengths: &[f64], survivals: &[f64], n_qubits: usize) -> Result<RbFit> {
    if lengths.len() != survivals.len() {
        return arg_err(format!("{} lengths but {} survivals", lengths.len(), survivals.len()));
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return arg_err("decay fit needs at least three distinct sequence lengths");
    }
    if survivals.iter().chain(lengths).any(|v| !v.is_finite()) {
        return arg_err("fit data must be finite");
    }
    let floor = 0.5f64.powi(n_qubits as i32);
    let lo = survivals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = survivals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = survivals.iter().sum::<f64>() / survivals.len() as f64;
    let flat = hi - lo < MIN_SURVIVAL_RANGE;
    let make = |theta: Vector3<f64>, unidentifiable: bool| RbFit {
        a: theta[0],
        p: theta[1],
        b: theta[2],
        residual: cost(&theta, lengths, survivals),
        unidentifiable,
        lengths: lengths.to_vec(),
        survival: survivals.to_vec(),
    };
    if flat {
        // flat and high reads as the noiseless limit, flat and low as full decay
        let p = if mean > 0.5 * (1.0 + floor) { 1.0 } else { f64::MIN_POSITIVE };
        let theta = if p == 1.0 { Vector3::new(mean - floor, 1.0, floor) } else { Vector3::new(0.0, p, mean) };
        return Ok(make(theta, true));
    }
    let theta = levenberg_marquardt(Vector3::new(0.5, 0.99, floor), lengths, survivals)?;
    Ok(make(theta, false))
}

fn levenberg_marquardt(init: Vector3<f64>, ls: &[f64], ys: &[f64]) -> Result<Vector3<f64>> {
    let mut theta = init;
    let mut c = cost(&theta, ls, ys);
    let mut mu = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&l, &y) in ls.iter().zip(ys) {
            let pl = theta[1].powf(l);
            let dp = if l == 0.0 { 0.0 } else { theta[0] * l * theta[1].powf(l - 1.0) };
            let j = Vector3::new(pl, dp, 1.0);
            let r = theta[0] * pl + theta[2] - y;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        if jtr.amax() < 1e-15 {
            return Ok(theta);
        }
        let mut accepted = false;
        while mu < 1e15 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let mut next = theta + step;
            next[1] = next[1].clamp(1e-12, 1.0);
            let nc = cost(&next, ls, ys);
            if nc.is_finite() && nc <= c {
                let small_step = (next - theta).amax() < 1e-13 * (1.0 + theta.amax());
                let small_gain = c - nc <= 1e-15 * c.max(f64::MIN_POSITIVE);
                theta = next;
                c = nc;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if small_step || small_gain {
                    return Ok(theta);
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            // no descent direction left: a (possibly boundary) minimum
            return Ok(theta);
        }
    }
    Err(Error::FitDivergence { iterations: MAX_ITERATIONS, residual: c })
}
