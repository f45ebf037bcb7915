//! BFGS with central-difference gradients and a backtracking line search.
//!
//! Minimizes `f`; callers wanting a maximum pass the negated objective. Points
//! where `f` is not finite are treated as infeasible and the line search backs
//! away from them.

/// Controls for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Convergence when `max_i |grad_i| <= gradient_tolerance`.
    pub gradient_tolerance: f64,
    /// Relative step of the central-difference gradient.
    pub gradient_step: f64,
    /// Largest coordinate change allowed in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            gradient_step: 1e-5,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences, falling back to a one-sided difference next to an infeasible point.
fn gradient<F: Fn(&[f64]) -> f64>(f: &mut Counted<F>, x: &[f64], fx: f64, rel_step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = f.call(&probe);
        probe[i] = x[i] - h;
        let fm = f.call(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

/// Minimizes `f` from `x0`. Returns `None` when `f(x0)` is not finite.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsOutcome> {
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 60;

    let n = x0.len();
    let mut f = Counted { f, evaluations: 0 };
    let mut x = x0.to_vec();
    let mut fx = f.call(&x);
    if !fx.is_finite() {
        return None;
    }
    let mut g = gradient(&mut f, &x, fx, opts.gradient_step);
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= opts.gradient_tolerance;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let longest = inf_norm(&d);
        if longest > opts.max_step {
            let shrink = opts.max_step / longest;
            d.iter_mut().for_each(|v| *v *= shrink);
            slope *= shrink;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let ft = f.call(&trial);
            if ft.is_finite() && ft <= fx + ARMIJO * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            if ft.is_finite() {
                // minimizer of the quadratic through f(x), slope and f(trial)
                let q = -slope * alpha * alpha / (2.0 * (ft - fx - slope * alpha));
                alpha = q.clamp(0.1 * alpha, 0.5 * alpha);
            } else {
                alpha *= 0.25;
            }
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let g_new = gradient(&mut f, &x_new, f_new, opts.gradient_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        converged = inf_norm(&g) <= opts.gradient_tolerance;
    }

    Some(BfgsOutcome {
        gradient_norm: inf_norm(&g),
        x,
        value: fx,
        gradient: g,
        iterations,
        evaluations: f.evaluations,
        converged,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// `H <- (I - rho s y') H (I - rho y s') + rho s s'`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
