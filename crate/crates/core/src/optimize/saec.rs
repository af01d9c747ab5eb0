use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    clamp_to_bounds, evaluate_checked, validate_objective, Objective, OptimizationResult, OptimizerConfig, Result,
    Termination,
};

enum Eval {
    Value(f64),
    Stop(Termination),
}

/// Global bookkeeping shared by all restarts.
struct Ledger<'a> {
    obj: &'a dyn Objective,
    cfg: &'a OptimizerConfig,
    evaluations: u64,
    best_point: Vec<f64>,
    best_value: f64,
    trace: Vec<(u64, f64)>,
}

impl Ledger<'_> {
    fn evaluate(&mut self, x: &[f64]) -> Result<Eval> {
        if self.evaluations >= self.cfg.max_evaluations {
            return Ok(Eval::Stop(Termination::Budget));
        }
        let v = evaluate_checked(self.obj, x)?;
        self.evaluations += 1;
        if v < self.best_value || self.trace.is_empty() {
            self.best_value = v;
            self.best_point.clear();
            self.best_point.extend_from_slice(x);
            self.trace.push((self.evaluations, v));
        }
        if self.cfg.target.is_some_and(|t| self.best_value <= t) {
            return Ok(Eval::Stop(Termination::Tolerance));
        }
        Ok(Eval::Value(v))
    }

    fn finish(self, terminated_by: Termination) -> OptimizationResult {
        OptimizationResult {
            best_point: self.best_point,
            best_value: self.best_value,
            evaluations_used: self.evaluations,
            trace: self.trace,
            terminated_by,
        }
    }
}

fn improves(new: f64, old: f64, rtol: f64) -> bool {
    if old.is_finite() {
        new < old - rtol * old.abs()
    } else {
        new < old
    }
}

/// Spread of the finite values, or 1 when that is not a usable temperature.
fn value_spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let spread = hi - lo;
    if spread.is_finite() && spread > 0.0 {
        spread
    } else {
        1.0
    }
}

/// Simulated-annealing evolutionary search.
///
/// Each restart draws a fresh uniform population of μ points (the first one
/// also seeds the objective's initial point, if any). Every generation each
/// parent spawns λ Gaussian offspring with per-coordinate deviation
/// `step_scale · (hi - lo) · T/T₀`, clamped to the bounds. An offspring
/// survives the Metropolis test `exp(-ΔE/T)` against its parent, then the best
/// μ of parents and survivors form the next generation and `T ← αT`. After
/// `stagnation_window` generations without improvement the search restarts;
/// the global best is kept in the result. Restart `k` draws from stream `k`
/// of a ChaCha generator keyed by `cfg.seed`, so results depend on the seed only.
pub fn minimize_saec(obj: &dyn Objective, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    validate_objective(obj)?;
    let bounds = obj.bounds();
    let n = bounds.len();
    let widths: Vec<f64> = bounds.iter().map(|&(lo, hi)| hi - lo).collect();
    let mut ledger = Ledger {
        obj,
        cfg,
        evaluations: 0,
        best_point: Vec::with_capacity(n),
        best_value: f64::INFINITY,
        trace: Vec::new(),
    };

    for attempt in 0..=cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt as u64);

        let mut population: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cfg.population_size);
        for i in 0..cfg.population_size {
            let seeded = match (attempt, i) {
                (0, 0) => obj.initial_point(),
                (_, 0) => Some(ledger.best_point.clone()),
                _ => None,
            };
            let x = match seeded {
                Some(x0) => x0,
                None => bounds
                    .iter()
                    .map(|&(lo, hi)| (lo + (hi - lo) * rng.random::<f64>()).min(hi))
                    .collect(),
            };
            match ledger.evaluate(&x)? {
                Eval::Value(v) => population.push((x, v)),
                Eval::Stop(why) => return Ok(ledger.finish(why)),
            }
        }
        population.sort_by(|a, b| a.1.total_cmp(&b.1));

        let t0 = cfg
            .initial_temperature
            .unwrap_or_else(|| value_spread(population.iter().map(|p| p.1)));
        let mut temperature = t0;
        let mut run_best = population[0].1;
        let mut stale = 0usize;

        while stale < cfg.stagnation_window {
            let ratio = temperature / t0;
            let mut next = population.clone();
            for (parent, parent_value) in &population {
                for _ in 0..cfg.offspring_per_parent {
                    let mut child = parent.clone();
                    let forced = rng.random_range(0..n);
                    for k in 0..n {
                        if k == forced
                            || cfg.coordinate_rate >= 1.0
                            || (cfg.coordinate_rate > 0.0 && rng.random::<f64>() < cfg.coordinate_rate)
                        {
                            child[k] += cfg.step_scale * widths[k] * ratio * rng.sample::<f64, _>(StandardNormal);
                        }
                    }
                    clamp_to_bounds(&mut child, bounds);
                    let value = match ledger.evaluate(&child)? {
                        Eval::Value(v) => v,
                        Eval::Stop(why) => return Ok(ledger.finish(why)),
                    };
                    let delta = value - parent_value;
                    if delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp() {
                        next.push((child, value));
                    }
                }
            }
            next.sort_by(|a, b| a.1.total_cmp(&b.1));
            next.truncate(cfg.population_size);
            population = next;

            temperature = (temperature * cfg.cooling_factor).max(f64::MIN_POSITIVE);
            if improves(population[0].1, run_best, cfg.improvement_rtol) {
                run_best = population[0].1;
                stale = 0;
            } else {
                stale += 1;
            }
        }
    }
    Ok(ledger.finish(Termination::Stagnation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{FnObjective, OptimizeError};
    use proptest::prelude::*;

    fn parabola() -> FnObjective<'static> {
        FnObjective::plain(vec![(-10.0, 10.0)], |x| (x[0] - 3.0).powi(2))
    }

    fn rastrigin2() -> FnObjective<'static> {
        FnObjective::plain(vec![(-5.12, 5.12); 2], |x| {
            20.0 + x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                .sum::<f64>()
        })
    }

    #[test]
    fn parabola_minimum_for_several_seeds() {
        for seed in 0..5 {
            let r = minimize_saec(&parabola(), &OptimizerConfig::default().with_seed(seed)).unwrap();
            assert!(r.best_value <= 1e-8, "seed {seed}: {}", r.best_value);
            assert!((r.best_point[0] - 3.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn rastrigin_2d_reaches_origin() {
        let r = minimize_saec(&rastrigin2(), &OptimizerConfig::default().with_seed(7)).unwrap();
        assert!(r.best_value <= 1e-4, "{}", r.best_value);
    }

    #[test]
    fn lj_trimer_reaches_triangle() {
        let p = crate::energy::LJParams::reduced();
        let obj = FnObjective::new(vec![(-1.5, 1.5); 9], move |x| {
            crate::energy::lj_cluster_energy(x, &p, None).map_err(|e| e.to_string())
        });
        let r = minimize_saec(&obj, &OptimizerConfig::default().with_seed(3)).unwrap();
        assert!((r.best_value + 3.0).abs() <= 1e-3, "{}", r.best_value);
    }

    #[test]
    fn target_stops_early() {
        let cfg = OptimizerConfig {
            target: Some(1e-2),
            ..OptimizerConfig::default()
        };
        let r = minimize_saec(&parabola(), &cfg).unwrap();
        assert_eq!(r.terminated_by, Termination::Tolerance);
        assert!(r.best_value <= 1e-2);
    }

    #[test]
    fn budget_is_respected() {
        let cfg = OptimizerConfig {
            max_evaluations: 137,
            ..OptimizerConfig::default()
        };
        let r = minimize_saec(&rastrigin2(), &cfg).unwrap();
        assert_eq!(r.evaluations_used, 137);
        assert_eq!(r.terminated_by, Termination::Budget);
    }

    #[test]
    fn stagnation_ends_a_flat_search() {
        let obj = FnObjective::plain(vec![(0.0, 1.0)], |_| 1.0);
        let cfg = OptimizerConfig {
            restarts: 2,
            stagnation_window: 3,
            ..OptimizerConfig::default()
        };
        let r = minimize_saec(&obj, &cfg).unwrap();
        assert_eq!(r.terminated_by, Termination::Stagnation);
        // three attempts of 20 + 3 generations of 100
        assert_eq!(r.evaluations_used, 3 * (20 + 3 * 100));
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn initial_point_is_seeded() {
        let obj = parabola().with_initial_point(vec![3.0]);
        let cfg = OptimizerConfig {
            max_evaluations: 20,
            ..OptimizerConfig::default()
        };
        let r = minimize_saec(&obj, &cfg).unwrap();
        assert_eq!(r.best_point, vec![3.0]);
        assert_eq!(r.best_value, 0.0);
        assert_eq!(r.trace[0], (1, 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = OptimizerConfig {
            cooling_factor: 1.0,
            ..OptimizerConfig::default()
        };
        assert!(matches!(
            minimize_saec(&parabola(), &bad),
            Err(OptimizeError::Config(_))
        ));
        let tiny = OptimizerConfig {
            max_evaluations: 5,
            ..OptimizerConfig::default()
        };
        assert!(matches!(
            minimize_saec(&parabola(), &tiny),
            Err(OptimizeError::Config(_))
        ));
        let inverted = FnObjective::plain(vec![(1.0, -1.0)], |x| x[0]);
        assert!(matches!(
            minimize_saec(&inverted, &OptimizerConfig::default()),
            Err(OptimizeError::Objective(_))
        ));
        let outside = parabola().with_initial_point(vec![11.0]);
        assert!(minimize_saec(&outside, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn evaluation_errors_carry_the_point() {
        let obj = FnObjective::new(vec![(-1.0, 1.0)], |x| {
            if x[0] > 0.5 {
                Err("too far".to_string())
            } else {
                Ok(x[0])
            }
        });
        match minimize_saec(&obj, &OptimizerConfig::default()) {
            Err(OptimizeError::Evaluation { point, message }) => {
                assert!(point[0] > 0.5);
                assert_eq!(message, "too far");
            }
            other => panic!("{other:?}"),
        }
        let nan = FnObjective::plain(vec![(-1.0, 1.0)], |_| f64::NAN);
        assert!(matches!(
            minimize_saec(&nan, &OptimizerConfig::default()),
            Err(OptimizeError::Evaluation { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn runs_are_deterministic_feasible_and_monotone(seed in any::<u64>(), budget in 20u64..3000) {
            let cfg = OptimizerConfig { max_evaluations: budget, seed, ..OptimizerConfig::default() };
            let obj = rastrigin2();
            let a = minimize_saec(&obj, &cfg).unwrap();
            let b = minimize_saec(&obj, &cfg).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.evaluations_used <= budget);
            prop_assert!(a.best_point.iter().all(|v| (-5.12..=5.12).contains(v)));
            prop_assert!(a.trace.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
            prop_assert_eq!(a.trace.last().unwrap().1, a.best_value);
            prop_assert_eq!(obj.evaluate(&a.best_point).unwrap(), a.best_value);
        }
    }
}
