//! Box-constrained limited-memory quasi-Newton minimizer.
//!
//! Variables sitting on a bound whose gradient pushes them outward are held
//! fixed; the L-BFGS direction is computed on the remaining free variables and
//! the step is projected back onto the box. Termination follows the usual
//! L-BFGS-B tests: the infinity norm of the projected gradient, or the change
//! in objective relative to `max(|f_k|, |f_k+1|, 1)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Threshold on `max_i |P(x - g)_i - x_i|`.
    pub grad_tol: f64,
    /// Threshold on `(f_k - f_k+1) / max(|f_k|, |f_k+1|, 1)`.
    pub objective_change_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ProjectedGradient,
    ObjectiveChange,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((xi, gi), (lo, hi))| ((xi - gi).clamp(*lo, *hi) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `objective` inside `[lower, upper]`. The objective returns
/// `None` where it cannot be evaluated (treated as +inf by the line search).
pub fn minimize_bounded<F>(mut objective: F, x0: &[f64], lower: &[f64], upper: &[f64], rule: &StopRule) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut evaluations = 1;
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() {
        return None;
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iterations = 0;

    let finish = |x, value, iterations, evaluations, termination| Minimum {
        x,
        value,
        iterations,
        evaluations,
        termination,
    };

    loop {
        if projected_gradient_norm(&x, &g, lower, upper) < rule.grad_tol {
            return Some(finish(x, f, iterations, evaluations, Termination::ProjectedGradient));
        }
        if iterations >= rule.max_iterations {
            return Some(finish(x, f, iterations, evaluations, Termination::MaxIterations));
        }

        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lower = x[i] <= lower[i] && g[i] > 0.0;
                let at_upper = x[i] >= upper[i] && g[i] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();

        let mut step = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
            }
            let d = direction(&g, &free, &memory);
            let slope = dot(&d, &g);
            if !(slope < 0.0) {
                continue;
            }
            let mut alpha = if memory.is_empty() {
                (1.0 / d.iter().map(|v| v.abs()).fold(0.0, f64::max)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
                project(&mut trial, lower, upper);
                let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let predicted = dot(&g, &moved);
                if predicted >= 0.0 {
                    break;
                }
                evaluations += 1;
                if let Some((ft, gt)) = objective(&trial) {
                    if ft.is_finite() && ft <= f + ARMIJO * predicted {
                        step = Some((trial, ft, gt));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if step.is_some() {
                break;
            }
        }

        let Some((x_new, f_new, g_new)) = step else {
            return Some(finish(x, f, iterations, evaluations, Termination::LineSearchFailed));
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y) {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }

        let reduction = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if reduction <= rule.objective_change_tol {
            if projected_gradient_norm(&x, &g, lower, upper) < rule.grad_tol {
                return Some(finish(x, f, iterations, evaluations, Termination::ProjectedGradient));
            }
            return Some(finish(x, f, iterations, evaluations, Termination::ObjectiveChange));
        }
    }
}

/// Two-loop recursion restricted to the free variables.
fn direction(g: &[f64], free: &[bool], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, f)| if *f { *x } else { 0.0 }).collect() };
    let mut r = mask(g);
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let s = mask(s);
        let a = rho * dot(&s, &r);
        for (ri, yi) in r.iter_mut().zip(y.iter().zip(free)) {
            if *yi.1 {
                *ri -= a * yi.0;
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let (s, y) = (mask(s), mask(y));
        let yy = dot(&y, &y);
        if yy > 0.0 {
            let gamma = dot(&s, &y) / yy;
            if gamma > 0.0 {
                r.iter_mut().for_each(|v| *v *= gamma);
            }
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let y = mask(y);
        let b = rho * dot(&y, &r);
        for (ri, si) in r.iter_mut().zip(s.iter().zip(free)) {
            if *si.1 {
                *ri += (a - b) * si.0;
            }
        }
    }
    r.iter().map(|v| -v).collect()
}
