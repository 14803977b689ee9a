//! Descent methods with Armijo backtracking (c = 1e-4, step halving).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradientDescent,
    #[default]
    Lbfgs,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const LBFGS_MEMORY: usize = 10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` (returning value and gradient) from `x0` for at most `max_iters` steps.
///
/// Stops early when the gradient vanishes or no step satisfies the Armijo
/// condition. The returned value is never above `f(x0)`.
pub fn minimize<F>(mut f: F, x0: &[f64], max_iters: usize, method: Method) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut gd_step = 1.0;
    let mut iterations = 0;

    while iterations < max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            break;
        }
        let (mut d, mut alpha) = match method {
            Method::GradientDescent => (g.iter().map(|v| -v).collect::<Vec<_>>(), gd_step / gnorm),
            Method::Lbfgs => (lbfgs_direction(&g, &memory), 1.0),
        };
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            alpha = 1.0 / gnorm;
        }
        if method == Method::Lbfgs && memory.is_empty() {
            alpha = alpha.min(1.0 / gnorm);
        }

        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let (ft, gt) = f(&trial)?;
            evaluations += 1;
            if ft < fx && ft <= fx + ARMIJO_C * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if method == Method::Lbfgs && !memory.is_empty() {
                memory.clear();
                continue;
            }
            break;
        };
        iterations += 1;
        if method == Method::GradientDescent {
            gd_step = 2.0 * alpha * gnorm;
        }
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let improved = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if improved <= 1e-15 * fx.abs().max(1e-300) {
            break;
        }
    }
    Ok(Minimum {
        x,
        value: fx,
        iterations,
        evaluations,
    })
}

fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
