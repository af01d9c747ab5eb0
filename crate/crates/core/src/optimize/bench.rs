use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimize_saec, Objective, OptimizationResult, OptimizeError, OptimizerConfig, Result};
use crate::energy::{lj_cluster_energy, LJParams};

const SCHWEFEL_CONSTANT: f64 = 418.982887272433;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Sphere,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    /// Schwefel's problem 2.26, shifted so the minimum is 0.
    Schwefel226,
    /// Reduced-unit Lennard-Jones cluster of the given number of atoms.
    LjCluster(usize),
}

impl Problem {
    pub fn name(&self) -> String {
        match self {
            Problem::Sphere => "sphere".into(),
            Problem::Rosenbrock => "rosenbrock".into(),
            Problem::Rastrigin => "rastrigin".into(),
            Problem::Ackley => "ackley".into(),
            Problem::Griewank => "griewank".into(),
            Problem::Schwefel226 => "schwefel_2_26".into(),
            Problem::LjCluster(n) => format!("lj_cluster_n{n}"),
        }
    }

    /// Symmetric search interval per coordinate.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Problem::Sphere | Problem::Rastrigin => (-5.12, 5.12),
            Problem::Rosenbrock => (-5.0, 10.0),
            Problem::Ackley => (-32.768, 32.768),
            Problem::Griewank => (-600.0, 600.0),
            Problem::Schwefel226 => (-500.0, 500.0),
            Problem::LjCluster(_) => (-1.5, 1.5),
        }
    }

    /// Known global minimum value.
    pub fn optimum(&self) -> f64 {
        match self {
            Problem::LjCluster(2) => -1.0,
            Problem::LjCluster(3) => -3.0,
            Problem::LjCluster(4) => -6.0,
            _ => 0.0,
        }
    }

    /// A run succeeds when it ends within this of [`Problem::optimum`].
    pub fn tolerance(&self) -> f64 {
        match self {
            Problem::Sphere => 1e-6,
            Problem::LjCluster(_) => 1e-3,
            _ => 1e-4,
        }
    }

    /// Fraction of runs that must succeed for the cell to pass.
    pub fn required_success_rate(&self, dim: usize) -> f64 {
        match self {
            Problem::Sphere => 1.0,
            Problem::Rastrigin | Problem::Ackley | Problem::Griewank => 0.9,
            Problem::LjCluster(_) => 0.95,
            // Reported but not required beyond two dimensions.
            Problem::Rosenbrock | Problem::Schwefel226 if dim <= 2 => 0.9,
            Problem::Rosenbrock | Problem::Schwefel226 => 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> std::result::Result<f64, String> {
        let n = x.len() as f64;
        Ok(match self {
            Problem::Sphere => x.iter().map(|v| v * v).sum(),
            Problem::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Problem::Rastrigin => 10.0 * n + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>(),
            Problem::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            Problem::Griewank => {
                let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + sum - prod
            }
            Problem::Schwefel226 => SCHWEFEL_CONSTANT * n - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>(),
            Problem::LjCluster(_) => lj_cluster_energy(x, &LJParams::reduced(), None).map_err(|e| e.to_string())?,
        })
    }

    /// Dimension a cell actually runs at: clusters are fixed at `3N`.
    fn cell_dim(&self, requested: usize) -> usize {
        match self {
            Problem::LjCluster(n) => 3 * n,
            _ => requested,
        }
    }
}

/// A [`Problem`] at a fixed dimension.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub problem: Problem,
    bounds: Vec<(f64, f64)>,
}

impl BenchmarkProblem {
    pub fn new(problem: Problem, dim: usize) -> Result<Self> {
        let dim = problem.cell_dim(dim);
        let min_dim = if problem == Problem::Rosenbrock { 2 } else { 1 };
        if dim < min_dim {
            return Err(OptimizeError::Objective(format!(
                "{} needs dimension ≥ {min_dim}",
                problem.name()
            )));
        }
        Ok(BenchmarkProblem {
            problem,
            bounds: vec![problem.bounds(); dim],
        })
    }
}

impl Objective for BenchmarkProblem {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, String> {
        self.problem.value(x)
    }
}

/// Sphere, Rosenbrock, Rastrigin, Ackley, Griewank, Schwefel 2.26 and the
/// 3- and 4-atom Lennard-Jones clusters.
pub fn classic_problems() -> Vec<Problem> {
    vec![
        Problem::Sphere,
        Problem::Rosenbrock,
        Problem::Rastrigin,
        Problem::Ackley,
        Problem::Griewank,
        Problem::Schwefel226,
        Problem::LjCluster(3),
        Problem::LjCluster(4),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub problem: String,
    pub dim: usize,
    pub runs: usize,
    pub success_rate: f64,
    pub required_success_rate: f64,
    /// Value a run must reach (optimum plus tolerance).
    pub target: f64,
    /// Best value over all runs.
    pub best: f64,
    /// Median evaluations per run; runs stop once they reach the target.
    pub median_evals: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub suite: String,
    /// Run `r` of every cell uses seed `seed + r`.
    pub seed: u64,
    pub config: OptimizerConfig,
    pub cells: Vec<BenchmarkCell>,
    pub all_passed: bool,
}

fn median(mut v: Vec<u64>) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    }
}

/// Runs every problem of `suite` at every dimension in `dims` (clusters once,
/// at their own dimension) `runs` times. Cells and runs execute in parallel;
/// the report order is fixed by the suite order and `dims`.
pub fn run_benchmark(suite: &str, dims: &[usize], runs: usize, cfg: &OptimizerConfig) -> Result<BenchmarkReport> {
    let problems = match suite {
        "classic" => classic_problems(),
        other => return Err(OptimizeError::UnknownBenchmark(other.to_string())),
    };
    if runs == 0 {
        return Err(OptimizeError::Config("runs must be at least 1".into()));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(OptimizeError::Config(
            "dims must be a non-empty list of positive sizes".into(),
        ));
    }
    cfg.validate()?;

    let mut cells: Vec<BenchmarkProblem> = Vec::new();
    for problem in problems {
        let mut seen = Vec::new();
        for &d in dims {
            let dim = problem.cell_dim(d);
            if !seen.contains(&dim) {
                seen.push(dim);
                cells.push(BenchmarkProblem::new(problem, dim)?);
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..runs).map(move |r| (c, r))).collect();
    let results: Vec<OptimizationResult> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let p = cells[c].problem;
            let run_cfg = OptimizerConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                target: Some(p.optimum() + p.tolerance()),
                ..cfg.clone()
            };
            minimize_saec(&cells[c], &run_cfg)
        })
        .collect::<Result<_>>()?;

    let report_cells: Vec<BenchmarkCell> = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let p = cell.problem;
            let dim = cell.dimension();
            let target = p.optimum() + p.tolerance();
            let mine = &results[c * runs..(c + 1) * runs];
            let successes = mine.iter().filter(|r| r.best_value <= target).count();
            let success_rate = successes as f64 / runs as f64;
            let required = p.required_success_rate(dim);
            BenchmarkCell {
                problem: p.name(),
                dim,
                runs,
                success_rate,
                required_success_rate: required,
                target,
                best: mine.iter().map(|r| r.best_value).fold(f64::INFINITY, f64::min),
                median_evals: median(mine.iter().map(|r| r.evaluations_used).collect()),
                passed: success_rate >= required,
            }
        })
        .collect();
    Ok(BenchmarkReport {
        suite: suite.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        all_passed: report_cells.iter().all(|c| c.passed),
        cells: report_cells,
    })
}
