//! Reference implementations shared by the integration tests.

#![allow(dead_code)]

use regmcts_core::simplex::DivergenceKind;

/// Smallest coordinate the oracle iterates may take.
const FLOOR: f64 = 1e-12;

fn f(kind: DivergenceKind, x: f64) -> f64 {
    match kind {
        DivergenceKind::ReverseKl => -x.ln(),
        DivergenceKind::ForwardKl if x == 0.0 => 0.0,
        DivergenceKind::ForwardKl => x * x.ln(),
        DivergenceKind::Hellinger => 2.0 - 2.0 * x.sqrt(),
    }
}

fn df(kind: DivergenceKind, x: f64) -> f64 {
    match kind {
        DivergenceKind::ReverseKl => -1.0 / x,
        DivergenceKind::ForwardKl => x.ln() + 1.0,
        DivergenceKind::Hellinger => -1.0 / x.sqrt(),
    }
}

fn d2f(kind: DivergenceKind, x: f64) -> f64 {
    match kind {
        DivergenceKind::ReverseKl => 1.0 / (x * x),
        DivergenceKind::ForwardKl => 1.0 / x,
        DivergenceKind::Hellinger => 0.5 / (x * x.sqrt()),
    }
}

/// `qᵀy − λ Σ π f(y/π)`.
pub fn objective(kind: DivergenceKind, q: &[f64], prior: &[f64], lambda: f64, y: &[f64]) -> f64 {
    q.iter()
        .zip(prior)
        .zip(y)
        .map(|((&qa, &pa), &ya)| qa * ya - lambda * pa * f(kind, ya / pa))
        .sum()
}

/// Projection of `z` onto `{y ≥ FLOOR, Σy = 1}` in the metric `Σ h (y − z)²`.
/// Exact, by sweeping the sorted breakpoints of `y(τ) = max(FLOOR, z − τ/h)`.
fn project(z: &[f64], h: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    let breakpoint = |a: usize| h[a] * (z[a] - FLOOR);
    order.sort_by(|&a, &b| breakpoint(b).total_cmp(&breakpoint(a)));
    let mut sum_z = 0.0;
    let mut sum_inv_h = 0.0;
    let mut tau = 0.0;
    for (k, &a) in order.iter().enumerate() {
        sum_z += z[a];
        sum_inv_h += 1.0 / h[a];
        let inactive = (n - k - 1) as f64;
        tau = (sum_z + FLOOR * inactive - 1.0) / sum_inv_h;
        let next = order
            .get(k + 1)
            .map_or(f64::NEG_INFINITY, |&b| breakpoint(b));
        if tau >= next {
            break;
        }
    }
    (0..n).map(|a| (z[a] - tau / h[a]).max(FLOOR)).collect()
}

/// Maximizer of [`objective`] over the simplex by projected gradient ascent,
/// preconditioned with the diagonal curvature and stepped with backtracking,
/// run until the projected step vanishes.
pub fn pga_oracle(kind: DivergenceKind, q: &[f64], prior: &[f64], lambda: f64) -> Vec<f64> {
    let mut y = prior.to_vec();
    let mut value = objective(kind, q, prior, lambda, &y);
    for _ in 0..10_000 {
        let grad: Vec<f64> = (0..y.len())
            .map(|a| q[a] - lambda * df(kind, y[a] / prior[a]))
            .collect();
        let h: Vec<f64> = (0..y.len())
            .map(|a| (lambda * d2f(kind, y[a] / prior[a]) / prior[a]).max(1e-12))
            .collect();
        let z: Vec<f64> = (0..y.len()).map(|a| y[a] + grad[a] / h[a]).collect();
        let target = project(&z, &h);
        let dir: Vec<f64> = target.iter().zip(&y).map(|(t, v)| t - v).collect();
        let size = dir.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if size < 1e-13 || slope <= 0.0 {
            break;
        }
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(&dir).map(|(v, d)| v + step * d).collect();
            let trial_value = objective(kind, q, prior, lambda, &trial);
            if trial_value >= value + 1e-4 * step * slope {
                y = trial;
                value = trial_value;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return y;
            }
        }
    }
    y
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
