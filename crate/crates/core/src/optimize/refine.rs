use super::{clamp_to_bounds, validate_objective, Objective, OptimizationResult, OptimizeError, Result, Termination};

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-30;

fn finite_value(obj: &dyn Objective, x: &[f64]) -> Option<f64> {
    obj.evaluate(x).ok().filter(|v| v.is_finite())
}

fn finite_gradient(obj: &dyn Objective, x: &[f64]) -> Result<Option<Vec<f64>>> {
    match obj.gradient(x) {
        None => Err(OptimizeError::NoGradient),
        Some(Ok(g)) if g.len() == x.len() && g.iter().all(|v| v.is_finite()) => Ok(Some(g)),
        Some(_) => Ok(None),
    }
}

/// Zeroes gradient components that point out of the box at an active bound.
fn project(g: &mut [f64], x: &[f64], bounds: &[(f64, f64)]) {
    for ((gi, &xi), &(lo, hi)) in g.iter_mut().zip(x).zip(bounds) {
        if (xi <= lo && *gi > 0.0) || (xi >= hi && *gi < 0.0) {
            *gi = 0.0;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Projected steepest descent with a halving Armijo line search (`c = 1e-4`).
///
/// Stops with [`Termination::Tolerance`] once the projected gradient norm is
/// at most `tol`, with [`Termination::Stagnation`] if no step length gives
/// sufficient decrease, and with [`Termination::Budget`] after `max_iters`
/// accepted steps. The first trial step length is `1/|g|`, later ones the
/// Barzilai-Borwein estimate `s·s / s·y` from the previous step. Values never
/// increase. `evaluations_used` counts value evaluations only.
pub fn local_refine(obj: &dyn Objective, x0: &[f64], tol: f64, max_iters: usize) -> Result<OptimizationResult> {
    validate_objective(obj)?;
    let bounds = obj.bounds();
    if x0.len() != bounds.len() || x0.iter().zip(bounds).any(|(v, &(lo, hi))| !(lo..=hi).contains(v)) {
        return Err(OptimizeError::Objective("start point is outside the bounds".into()));
    }
    let mut x = x0.to_vec();
    let mut f = finite_value(obj, &x).ok_or_else(|| OptimizeError::Refinement { point: x.clone() })?;
    let mut evaluations = 1u64;
    let mut trace = vec![(evaluations, f)];
    let mut step: Option<f64> = None;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;

    let finish = |x: Vec<f64>, f: f64, evaluations, trace, why| OptimizationResult {
        best_point: x,
        best_value: f,
        evaluations_used: evaluations,
        trace,
        terminated_by: why,
    };

    for _ in 0..max_iters {
        let mut g = finite_gradient(obj, &x)?.ok_or_else(|| OptimizeError::Refinement { point: x.clone() })?;
        project(&mut g, &x, bounds);
        let gnorm = norm(&g);
        if gnorm <= tol {
            return Ok(finish(x, f, evaluations, trace, Termination::Tolerance));
        }
        if let Some((px, pg)) = &previous {
            let (mut ss, mut sy) = (0.0, 0.0);
            for k in 0..x.len() {
                let (sk, yk) = (x[k] - px[k], g[k] - pg[k]);
                ss += sk * sk;
                sy += sk * yk;
            }
            step = if sy > 0.0 { Some(ss / sy) } else { step.map(|a| 2.0 * a) };
        }
        let mut alpha = step.unwrap_or(1.0 / gnorm);
        let accepted = loop {
            if alpha < MIN_STEP {
                break None;
            }
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
            clamp_to_bounds(&mut trial, bounds);
            let slope: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(gi, (t, xi))| gi * (t - xi))
                .sum();
            if slope >= 0.0 {
                break None;
            }
            let ft = finite_value(obj, &trial).ok_or_else(|| OptimizeError::Refinement { point: x.clone() })?;
            evaluations += 1;
            if ft <= f + ARMIJO_C * slope {
                break Some((trial, ft));
            }
            alpha *= 0.5;
        };
        match accepted {
            Some((trial, ft)) => {
                previous = Some((std::mem::replace(&mut x, trial), g));
                if ft < f {
                    trace.push((evaluations, ft));
                }
                f = ft;
                step = Some(alpha);
            }
            None => return Ok(finish(x, f, evaluations, trace, Termination::Stagnation)),
        }
    }
    let done = finite_gradient(obj, &x)?
        .map(|mut g| {
            project(&mut g, &x, bounds);
            norm(&g) <= tol
        })
        .unwrap_or(false);
    let why = if done {
        Termination::Tolerance
    } else {
        Termination::Budget
    };
    Ok(finish(x, f, evaluations, trace, why))
}
