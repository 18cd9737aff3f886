//! Preconditioned limited-memory BFGS with backtracking line search.

use std::collections::VecDeque;

pub(crate) struct Settings {
    pub memory: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Upper bound on the first trial step along each search direction.
    pub max_step: f64,
}

#[derive(Debug)]
pub(crate) enum Stop {
    Converged,
    MaxIter,
    /// No acceptable step was found even from a fresh steepest-descent start.
    Stalled,
    /// Every trial point along the last direction was infeasible.
    Infeasible,
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub measure: f64,
    pub iterations: usize,
    pub stop: Stop,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `objective`, which returns `None` outside its domain.
///
/// `precond` applies an approximate inverse Hessian and `measure` maps a
/// gradient to the stopping criterion compared with `settings.tol`.
pub(crate) fn minimize<F, P, M>(
    x0: Vec<f64>,
    mut objective: F,
    precond: P,
    measure: M,
    settings: &Settings,
) -> Outcome
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    P: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> f64,
{
    let mut x = x0;
    let (mut f, mut g) = match objective(&x) {
        Some(v) => v,
        None => {
            return Outcome {
                x,
                measure: f64::INFINITY,
                iterations: 0,
                stop: Stop::Infeasible,
            }
        }
    };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut fresh = true;
    loop {
        let m = measure(&g);
        if m <= settings.tol {
            return Outcome {
                x,
                measure: m,
                iterations,
                stop: Stop::Converged,
            };
        }
        if iterations >= settings.max_iter {
            return Outcome {
                x,
                measure: m,
                iterations,
                stop: Stop::MaxIter,
            };
        }

        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let mut r = precond(&q);
        if let Some((_, y, rho)) = history.back() {
            // Scale the initial inverse Hessian by s'y / y'Py.
            let gamma = 1.0 / (rho * dot(y, &precond(y)));
            r.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
        }
        let mut d: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = precond(&g).iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let dmax = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut alpha = if dmax > settings.max_step {
            settings.max_step / dmax
        } else {
            1.0
        };
        let floor = 1e-15 * f.abs();
        let mut accepted = None;
        let mut any_feasible = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            if let Some((ft, gt)) = objective(&trial) {
                any_feasible = true;
                if ft <= f + 1e-4 * alpha * slope + floor {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, fnew, gn)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    if history.len() == settings.memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
                x = xn;
                f = fnew;
                g = gn;
                iterations += 1;
                fresh = false;
            }
            None => {
                let m = measure(&g);
                if !any_feasible {
                    return Outcome {
                        x,
                        measure: m,
                        iterations,
                        stop: Stop::Infeasible,
                    };
                }
                if fresh {
                    return Outcome {
                        x,
                        measure: m,
                        iterations,
                        stop: Stop::Stalled,
                    };
                }
                history.clear();
                fresh = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_ill_conditioned_quadratic() {
        let diag: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 20.0).collect();
        let obj = |x: &[f64]| {
            let f = x
                .iter()
                .zip(&diag)
                .map(|(v, d)| 0.5 * d * (v - 1.0).powi(2))
                .sum();
            let g = x.iter().zip(&diag).map(|(v, d)| d * (v - 1.0)).collect();
            Some((f, g))
        };
        let settings = Settings {
            memory: 10,
            max_iter: 500,
            tol: 1e-10,
            max_step: 10.0,
        };
        let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let out = minimize(vec![0.0; 50], obj, |g| g.to_vec(), norm, &settings);
        assert!(
            matches!(out.stop, Stop::Converged),
            "{:?} after {} at {}",
            out.stop,
            out.iterations,
            out.measure
        );
        assert!(out.x.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn respects_domain() {
        // Minimum of x - log x on x > 0 is at 1.
        let obj = |x: &[f64]| (x[0] > 0.0).then(|| (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]));
        let settings = Settings {
            memory: 5,
            max_iter: 100,
            tol: 1e-12,
            max_step: 100.0,
        };
        let out = minimize(vec![5.0], obj, |g| g.to_vec(), |g| g[0].abs(), &settings);
        assert!(matches!(out.stop, Stop::Converged));
        assert!((out.x[0] - 1.0).abs() < 1e-10);
    }
}
