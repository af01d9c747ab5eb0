//! Bounded global minimization by simulated-annealing evolutionary search,
//! a gradient refiner, and a benchmark harness.

mod bench;
mod refine;
mod saec;

pub use bench::{classic_problems, run_benchmark, BenchmarkCell, BenchmarkProblem, BenchmarkReport, Problem};
pub use refine::local_refine;
pub use saec::minimize_saec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("invalid objective: {0}")]
    Objective(String),
    #[error("objective failed at {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },
    #[error("objective has no gradient")]
    NoGradient,
    #[error("refinement hit a non-finite value; last good point {point:?}")]
    Refinement { point: Vec<f64> },
    #[error("unknown benchmark {0}")]
    UnknownBenchmark(String),
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

/// A bounded minimization problem. Implementations must be deterministic
/// and safe to evaluate from several threads.
pub trait Objective: Sync {
    /// One `(lo, hi)` pair per coordinate.
    fn bounds(&self) -> &[(f64, f64)];

    /// Errors are reported as messages and wrapped with the offending point.
    fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, String>;

    /// `None` when the objective has no analytic gradient.
    fn gradient(&self, _x: &[f64]) -> Option<std::result::Result<Vec<f64>, String>> {
        None
    }

    /// A known starting point, seeded into the first population.
    fn initial_point(&self) -> Option<Vec<f64>> {
        None
    }

    fn dimension(&self) -> usize {
        self.bounds().len()
    }
}

pub(crate) fn validate_objective(obj: &dyn Objective) -> Result<()> {
    let bounds = obj.bounds();
    if bounds.is_empty() {
        return Err(OptimizeError::Objective("dimension must be at least 1".into()));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(OptimizeError::Objective(format!(
                "bounds of coordinate {k} are [{lo}, {hi}]"
            )));
        }
    }
    if let Some(x0) = obj.initial_point() {
        if x0.len() != bounds.len() || x0.iter().zip(bounds).any(|(v, &(lo, hi))| !(lo..=hi).contains(v)) {
            return Err(OptimizeError::Objective("initial point is outside the bounds".into()));
        }
    }
    Ok(())
}

/// Evaluates with the error contract of the optimizers: failures carry the
/// point and NaN counts as a failure.
pub(crate) fn evaluate_checked(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    match obj.evaluate(x) {
        Ok(v) if !v.is_nan() => Ok(v),
        Ok(_) => Err(OptimizeError::Evaluation {
            point: x.to_vec(),
            message: "objective returned NaN".into(),
        }),
        Err(message) => Err(OptimizeError::Evaluation {
            point: x.to_vec(),
            message,
        }),
    }
}

type ValueFn<'a> = Box<dyn Fn(&[f64]) -> std::result::Result<f64, String> + Send + Sync + 'a>;
type GradFn<'a> = Box<dyn Fn(&[f64]) -> std::result::Result<Vec<f64>, String> + Send + Sync + 'a>;

/// An [`Objective`] assembled from closures.
pub struct FnObjective<'a> {
    bounds: Vec<(f64, f64)>,
    value: ValueFn<'a>,
    gradient: Option<GradFn<'a>>,
    initial: Option<Vec<f64>>,
}

impl<'a> FnObjective<'a> {
    pub fn new(
        bounds: Vec<(f64, f64)>,
        value: impl Fn(&[f64]) -> std::result::Result<f64, String> + Send + Sync + 'a,
    ) -> Self {
        FnObjective {
            bounds,
            value: Box::new(value),
            gradient: None,
            initial: None,
        }
    }

    /// Infallible value function.
    pub fn plain(bounds: Vec<(f64, f64)>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        FnObjective::new(bounds, move |x| Ok(f(x)))
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(&[f64]) -> std::result::Result<Vec<f64>, String> + Send + Sync + 'a,
    ) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    pub fn with_initial_point(mut self, x0: Vec<f64>) -> Self {
        self.initial = Some(x0);
        self
    }
}

impl Objective for FnObjective<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, String> {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<std::result::Result<Vec<f64>, String>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    fn initial_point(&self) -> Option<Vec<f64>> {
        self.initial.clone()
    }
}

/// Knobs of [`minimize_saec`]. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// μ, parents kept per generation.
    pub population_size: usize,
    /// λ, offspring drawn from each parent.
    pub offspring_per_parent: usize,
    /// T₀; `None` uses the spread (max - min) of the initial population values.
    pub initial_temperature: Option<f64>,
    /// α in `T ← αT`.
    pub cooling_factor: f64,
    /// Mutation standard deviation at T₀ as a fraction of each bound width.
    pub step_scale: f64,
    /// Probability that an offspring perturbs a given coordinate; one
    /// coordinate is always perturbed.
    pub coordinate_rate: f64,
    pub max_evaluations: u64,
    /// Generations without improvement before a restart.
    pub stagnation_window: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop as soon as the best value is at or below this.
    pub target: Option<f64>,
    /// A generation improves only if it lowers the best value by more than
    /// this fraction of its magnitude.
    pub improvement_rtol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 20,
            offspring_per_parent: 5,
            initial_temperature: None,
            cooling_factor: 0.95,
            step_scale: 0.1,
            coordinate_rate: 0.1,
            max_evaluations: 200_000,
            stagnation_window: 50,
            restarts: 1000,
            seed: 0,
            target: None,
            improvement_rtol: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(OptimizeError::Config(m));
        if self.population_size < 1 {
            return fail("population_size must be at least 1".into());
        }
        if self.offspring_per_parent < 1 {
            return fail("offspring_per_parent must be at least 1".into());
        }
        if let Some(t) = self.initial_temperature {
            if !(t.is_finite() && t > 0.0) {
                return fail(format!("initial_temperature must be positive, got {t}"));
            }
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return fail(format!(
                "cooling_factor must lie in (0, 1), got {}",
                self.cooling_factor
            ));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return fail(format!("step_scale must be positive, got {}", self.step_scale));
        }
        if !(self.coordinate_rate >= 0.0 && self.coordinate_rate <= 1.0) {
            return fail(format!(
                "coordinate_rate must lie in [0, 1], got {}",
                self.coordinate_rate
            ));
        }
        if self.max_evaluations < self.population_size as u64 {
            return fail(format!(
                "max_evaluations ({}) must be at least population_size ({})",
                self.max_evaluations, self.population_size
            ));
        }
        if self.stagnation_window < 1 {
            return fail("stagnation_window must be at least 1".into());
        }
        if !(self.improvement_rtol.is_finite() && self.improvement_rtol >= 0.0) {
            return fail(format!(
                "improvement_rtol must be non-negative, got {}",
                self.improvement_rtol
            ));
        }
        if let Some(t) = self.target {
            if t.is_nan() {
                return fail("target must not be NaN".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The evaluation or iteration budget ran out.
    Budget,
    /// No further progress: restarts exhausted, or the line search stalled.
    Stagnation,
    /// The target value or gradient tolerance was reached.
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations_used: u64,
    /// `(evaluations, best value so far)` at every improvement.
    pub trace: Vec<(u64, f64)>,
    pub terminated_by: Termination,
}

/// Compact account of a run for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub best_value: f64,
    pub evaluations_used: u64,
    pub improvements: usize,
    pub first_value: Option<f64>,
    pub terminated_by: Termination,
}

impl OptimizationResult {
    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            best_value: self.best_value,
            evaluations_used: self.evaluations_used,
            improvements: self.trace.len(),
            first_value: self.trace.first().map(|t| t.1),
            terminated_by: self.terminated_by,
        }
    }
}

pub(crate) fn clamp_to_bounds(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}
