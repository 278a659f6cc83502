//! Descent minimizer for smooth convex objectives.
//!
//! Polak–Ribière (PR+) conjugate directions with a backtracking Armijo line
//! search. The first trial step of each search is a secant estimate of the
//! one-dimensional minimizer, which makes the search exact on quadratics.
//! Plain steepest descent is available via [`Direction::Steepest`].

/// A differentiable objective on `ℝᵈ`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Returns `f(x)` and writes `∇f(x)` into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Steepest,
    PolakRibiere,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Converged once the relative decrease stays below this for
    /// `patience` consecutive iterations.
    pub tol: f64,
    pub patience: usize,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Backtracking contraction factor.
    pub beta: f64,
    pub direction: Direction,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: 1e-8,
            patience: 8,
            max_iter: 50_000,
            c1: 1e-4,
            beta: 0.5,
            direction: Direction::PolakRibiere,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub iterations: usize,
    /// Relative decrease of the last accepted step.
    pub last_decrement: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy_into(out: &mut [f64], x: &[f64], t: f64, d: &[f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
        *o = xi + t * di;
    }
}

/// Minimizes `obj` starting from `x`, which is overwritten by the result.
pub fn minimize<O: Objective>(obj: &O, x: &mut [f64], opts: &Options) -> Outcome {
    let n = obj.dim();
    assert_eq!(x.len(), n);
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(x, &mut g);
    if n == 0 {
        return Outcome {
            value: f,
            iterations: 0,
            last_decrement: 0.0,
            converged: true,
        };
    }
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut step = {
        let gn = dot(&g, &g).sqrt();
        if gn > 0.0 {
            1.0 / gn
        } else {
            1.0
        }
    };
    let mut quiet = 0;
    let mut last_decrement = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            slope = dot(&g, &d);
        }
        if slope == 0.0 {
            return Outcome {
                value: f,
                iterations: iter,
                last_decrement: 0.0,
                converged: true,
            };
        }

        // Secant estimate of the line minimizer from φ'(0) and φ'(step).
        axpy_into(&mut trial, x, step, &d);
        let f_probe = obj.value_grad(&trial, &mut g_trial);
        let slope_probe = dot(&g_trial, &d);
        let mut t = if slope_probe > slope {
            step * slope / (slope - slope_probe)
        } else {
            step * 2.0
        };
        if !(t.is_finite() && t > 0.0) {
            t = step;
        }

        let mut f_new;
        let mut accepted = false;
        if (t - step).abs() <= 1e-12 * step && f_probe <= f + opts.c1 * step * slope {
            f_new = f_probe;
            accepted = true;
        } else {
            f_new = f64::INFINITY;
        }
        if !accepted {
            for _ in 0..60 {
                axpy_into(&mut trial, x, t, &d);
                f_new = obj.value_grad(&trial, &mut g_trial);
                if f_new.is_finite() && f_new <= f + opts.c1 * t * slope {
                    accepted = true;
                    break;
                }
                t *= opts.beta;
            }
        }
        if !accepted {
            // No decrease along d at machine precision.
            let converged = matches!(opts.direction, Direction::Steepest)
                || d.iter().zip(&g).all(|(di, gi)| *di == -gi);
            if converged {
                return Outcome {
                    value: f,
                    iterations: iter,
                    last_decrement,
                    converged: last_decrement < opts.tol,
                };
            }
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            continue;
        }
        step = t;

        let beta = match opts.direction {
            Direction::Steepest => 0.0,
            Direction::PolakRibiere => {
                let gg = dot(&g, &g);
                let num: f64 = g_trial.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
                if gg > 0.0 {
                    (num / gg).max(0.0)
                } else {
                    0.0
                }
            }
        };
        x.copy_from_slice(&trial);
        std::mem::swap(&mut g, &mut g_trial);
        for (di, gi) in d.iter_mut().zip(&g) {
            *di = -gi + beta * *di;
        }

        last_decrement = (f - f_new) / f_new.abs().max(f64::MIN_POSITIVE);
        f = f_new;
        if last_decrement < opts.tol {
            quiet += 1;
            if quiet >= opts.patience {
                return Outcome {
                    value: f,
                    iterations: iter + 1,
                    last_decrement,
                    converged: true,
                };
            }
        } else {
            quiet = 0;
        }
    }
    Outcome {
        value: f,
        iterations: opts.max_iter,
        last_decrement,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        diag: Vec<f64>,
        shift: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let mut f = 1.0;
            for i in 0..x.len() {
                let r = x[i] - self.shift[i];
                f += 0.5 * self.diag[i] * r * r;
                grad[i] = self.diag[i] * r;
            }
            f
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let q = Quadratic {
            diag: (0..50).map(|i| 1.0 + 10.0 * i as f64).collect(),
            shift: (0..50).map(|i| (i as f64).sin()).collect(),
        };
        let mut x = vec![0.0; 50];
        let out = minimize(&q, &mut x, &Options { tol: 1e-14, ..Default::default() });
        assert!(out.converged);
        assert!((out.value - 1.0).abs() < 1e-10, "{out:?}");
        for (xi, si) in x.iter().zip(&q.shift) {
            assert!((xi - si).abs() < 1e-5);
        }
    }

    #[test]
    fn steepest_descent_also_descends() {
        let q = Quadratic {
            diag: vec![1.0, 4.0],
            shift: vec![1.0, -2.0],
        };
        let mut x = vec![0.0; 2];
        let opts = Options {
            direction: Direction::Steepest,
            tol: 1e-14,
            ..Default::default()
        };
        let out = minimize(&q, &mut x, &opts);
        assert!((out.value - 1.0).abs() < 1e-10, "{out:?}");
    }

    #[test]
    fn rosenbrock_valley() {
        let mut x = vec![-1.2, 1.0];
        let out = minimize(&Rosenbrock, &mut x, &Options { tol: 1e-16, patience: 3, ..Default::default() });
        assert!(out.value < 1e-10, "{out:?} at {x:?}");
    }
}
