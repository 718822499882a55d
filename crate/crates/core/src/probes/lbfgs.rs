//! Limited-memory BFGS minimizer with a strong-Wolfe line search.

use super::ProbeError;

#[derive(Debug, Clone)]
pub struct LbfgsParams {
    /// Number of (s, y) correction pairs kept.
    pub memory: usize,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease (Armijo) constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            memory: 10,
            tol: 1e-6,
            max_iter: 1000,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Minimize `f`, which must return the loss and fill the gradient slice.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> Result<LbfgsOutcome, ProbeError>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut loss = f(&x, &mut grad);
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(ProbeError::NonFiniteLoss { iteration: 0 });
    }
    let mut trace = vec![loss];

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    let mut x_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = max_abs(&grad) <= params.tol;

    while !converged && iterations < params.max_iter {
        let mut direction = two_loop(&grad, &s_hist, &y_hist, &rho_hist);
        let mut slope = dot(&direction, &grad);
        if slope >= 0.0 || slope.is_nan() {
            // The curvature model broke down; fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (d, &g) in direction.iter_mut().zip(&grad) {
                *d = -g;
            }
            slope = -dot(&grad, &grad);
            if slope == 0.0 {
                converged = true;
                break;
            }
        }

        let alpha = {
            let mut phi = |alpha: f64| -> (f64, f64) {
                for i in 0..n {
                    x_trial[i] = x[i] + alpha * direction[i];
                }
                let l = f(&x_trial, &mut g_trial);
                (l, dot(&g_trial, &direction))
            };
            line_search(&mut phi, loss, slope, params.c1, params.c2)
        };
        let Some(alpha) = alpha else {
            break; // no acceptable step along this direction
        };

        // Re-evaluate at the accepted step so state is consistent.
        for i in 0..n {
            x_trial[i] = x[i] + alpha * direction[i];
        }
        let new_loss = f(&x_trial, &mut g_trial);
        iterations += 1;
        if !new_loss.is_finite() || g_trial.iter().any(|g| !g.is_finite()) {
            return Err(ProbeError::NonFiniteLoss {
                iteration: iterations,
            });
        }

        let s: Vec<f64> = x_trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 {
            if s_hist.len() == params.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }

        x.copy_from_slice(&x_trial);
        grad.copy_from_slice(&g_trial);
        loss = new_loss;
        trace.push(loss);
        converged = max_abs(&grad) <= params.tol;
    }

    Ok(LbfgsOutcome {
        x,
        loss,
        gradient: grad,
        iterations,
        converged,
        loss_trace: trace,
    })
}

/// Two-loop recursion: returns −H·g for the current limited-memory inverse
/// Hessian approximation (scaled identity seed).
fn two_loop(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>], rho_hist: &[f64]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let k = s_hist.len();
    let mut alphas = vec![0.0; k];
    for i in (0..k).rev() {
        alphas[i] = rho_hist[i] * dot(&s_hist[i], &q);
        for (qv, &yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= alphas[i] * yv;
        }
    }
    let gamma = if k > 0 {
        dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
    } else {
        // First step: scale down so the unit trial step is sane even for
        // steep starting points.
        1.0 / max_abs(grad).max(1.0)
    };
    for qv in q.iter_mut() {
        *qv *= gamma;
    }
    for i in 0..k {
        let beta = rho_hist[i] * dot(&y_hist[i], &q);
        for (qv, &sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alphas[i] - beta) * sv;
        }
    }
    for qv in q.iter_mut() {
        *qv = -*qv;
    }
    q
}

/// Strong-Wolfe line search (bracket then zoom). `phi` evaluates
/// (φ(α), φ'(α)) along the search direction; `phi0`/`slope0` are the
/// values at α = 0. Returns an accepted step length, or None when no
/// progress is possible.
fn line_search(
    phi: &mut impl FnMut(f64) -> (f64, f64),
    phi0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
) -> Option<f64> {
    let mut alpha_prev = 0.0;
    let mut phi_prev = phi0;
    let mut alpha = 1.0;
    for i in 0..30 {
        let (phi_a, dphi_a) = phi(alpha);
        if !phi_a.is_finite() || phi_a > phi0 + c1 * alpha * slope0 || (i > 0 && phi_a >= phi_prev)
        {
            return zoom(phi, phi0, slope0, alpha_prev, phi_prev, alpha, c1, c2);
        }
        if dphi_a.abs() <= -c2 * slope0 {
            return Some(alpha);
        }
        if dphi_a >= 0.0 {
            return zoom(phi, phi0, slope0, alpha, phi_a, alpha_prev, c1, c2);
        }
        alpha_prev = alpha;
        phi_prev = phi_a;
        alpha *= 2.0;
        if alpha > 1e8 {
            break;
        }
    }
    // The function kept decreasing along the whole bracket scan; take the
    // last point that satisfied sufficient decrease.
    (alpha_prev > 0.0).then_some(alpha_prev)
}

/// Bisection zoom: `lo` always satisfies sufficient decrease; the open
/// interval between `lo` and `hi` brackets a strong-Wolfe point.
#[allow(clippy::too_many_arguments)]
fn zoom(
    phi: &mut impl FnMut(f64) -> (f64, f64),
    phi0: f64,
    slope0: f64,
    mut lo: f64,
    mut phi_lo: f64,
    mut hi: f64,
    c1: f64,
    c2: f64,
) -> Option<f64> {
    for _ in 0..60 {
        if (hi - lo).abs() <= 1e-16 * (1.0 + lo.abs()) {
            break;
        }
        let alpha = 0.5 * (lo + hi);
        let (phi_a, dphi_a) = phi(alpha);
        if !phi_a.is_finite() || phi_a > phi0 + c1 * alpha * slope0 || phi_a >= phi_lo {
            hi = alpha;
        } else {
            if dphi_a.abs() <= -c2 * slope0 {
                return Some(alpha);
            }
            if dphi_a * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            phi_lo = phi_a;
        }
    }
    // Fall back to the best sufficient-decrease point seen.
    (lo > 0.0 && phi_lo <= phi0 + c1 * lo * slope0).then_some(lo)
}
