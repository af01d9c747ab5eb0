//! `zipper`: build steric-zipper models, mutate and transform chains, score
//! structures and benchmark the optimizer.
//!
//! Exit codes: 0 success, 1 domain failure (parse, optimization, clashes,
//! failed benchmark cells), 2 usage error. Nothing is written on exit 2.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use zipper_core::builder::{apply_sequence, build_fibril_model, FibrilSpec, Hexapeptide, MODEL_SEQUENCES};
use zipper_core::energy::{energy_report, hb_pair_energy, ContactPair, EnergyReport, HBParams, LJParams};
use zipper_core::geometry::{transform_chain, RigidTransform};
use zipper_core::optimize::{run_benchmark, OptimizerConfig};
use zipper_core::pdb::{parse_pdb, select_atom, write_pdb, AtomSelector, Structure};

#[derive(Parser)]
#[command(name = "zipper", version, about = "Steric-zipper fibril model builder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a twelve-chain model from a two-sheet template.
    Build(BuildArgs),
    /// Mutate whole chains to a six-residue ALA/GLY sequence.
    Mutate(MutateArgs),
    /// Apply a rigid transform to one chain.
    Transform(TransformArgs),
    /// Contact energies, hydrogen bonds and clashes of a structure.
    Energy(EnergyArgs),
    /// Run an optimizer benchmark suite.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    template: PathBuf,
    /// Six one-letter codes from {A, G}, e.g. GAAAAG.
    #[arg(long, value_parser = parse_sequence)]
    sequence: Hexapeptide,
    /// Model PDB; the report goes to `<out>.report.json`.
    #[arg(long)]
    out: PathBuf,
    /// Generated and recorded in the report when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Contact LJ zero-crossing distance, Å.
    #[arg(long)]
    sigma: Option<f64>,
    /// Contact LJ well depth.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Score every anchor/free atom pair, not just the declared contacts.
    #[arg(long)]
    full_sum: bool,
    /// JSON fibril spec; the flags above override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Model name; defaults to model1/2/3 for the known sequences.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct MutateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Chains to mutate, e.g. `A,B`.
    #[arg(long, value_delimiter = ',', required = true)]
    chain: Vec<char>,
    #[arg(long, value_parser = parse_sequence)]
    sequence: Hexapeptide,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    chain: char,
    /// Rotation, 9 reals row-major (default identity).
    #[arg(long, num_args = 1..=9, value_delimiter = ',', allow_negative_numbers = true)]
    matrix: Option<Vec<f64>>,
    /// Translation, 3 reals (default zero).
    #[arg(long, num_args = 1..=3, value_delimiter = ',', allow_negative_numbers = true)]
    translate: Option<Vec<f64>>,
    /// Append the image as this chain instead of moving the chain in place.
    #[arg(long)]
    new_chain: Option<char>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// 12-10 hydrogen-bond C coefficient; needs --hb-d.
    #[arg(long, requires = "hb_d")]
    hb_c: Option<f64>,
    #[arg(long, requires = "hb_c")]
    hb_d: Option<f64>,
    /// Contact pair `FIRST:SECOND`, e.g. `A.ALA3.CB:G.ALA4.CB`; repeatable.
    /// Without it the default model contacts are scored when present.
    #[arg(long = "contact", value_parser = parse_contact)]
    contacts: Vec<(AtomSelector, AtomSelector)>,
    #[arg(long, default_value_t = 2.0)]
    clash_cutoff: f64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "classic")]
    suite: String,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Base seed; run r uses seed + r. Generated when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON optimizer config; missing fields take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn parse_sequence(s: &str) -> Result<Hexapeptide, String> {
    s.parse().map_err(|e: zipper_core::builder::BuilderError| e.to_string())
}

fn parse_contact(s: &str) -> Result<(AtomSelector, AtomSelector), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}` is not FIRST:SECOND"))?;
    Ok((
        a.parse().map_err(|e| format!("{e}"))?,
        b.parse().map_err(|e| format!("{e}"))?,
    ))
}

fn read_structure(path: &Path) -> anyhow::Result<Structure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_pdb(&text).with_context(|| format!("{}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn to_json(value: &impl Serialize) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn lj_override(base: LJParams, epsilon: Option<f64>, sigma: Option<f64>) -> Result<LJParams, Failure> {
    LJParams::new(epsilon.unwrap_or(base.epsilon()), sigma.unwrap_or(base.sigma())).map_err(usage)
}

fn run_build(args: BuildArgs) -> Outcome {
    let (mut spec, file_seed) = match &args.spec {
        Some(path) => {
            let value = read_json(path)?;
            let seed = value.pointer("/optimizer/seed").and_then(Value::as_u64);
            let spec: FibrilSpec =
                serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (spec, seed)
        }
        None => (FibrilSpec::default(), None),
    };
    let sequence = args.sequence.to_string();
    spec.sequence = args.sequence;
    spec.model_name = match args.name {
        Some(name) => name,
        None => MODEL_SEQUENCES
            .iter()
            .find(|(_, s)| *s == sequence)
            .map_or_else(|| format!("custom_{sequence}"), |(name, _)| name.to_string()),
    };
    spec.lj = lj_override(spec.lj, args.epsilon, args.sigma)?;
    spec.full_sum |= args.full_sum;
    spec.optimizer.seed = args.seed.or(file_seed).unwrap_or_else(rand::random);
    spec.validate().map_err(usage)?;

    let template = read_structure(&args.template)?;
    let (model, report) = build_fibril_model(&template, &spec).context("build failed")?;
    let report_path = PathBuf::from(format!("{}.report.json", args.out.display()));
    write_file(&args.out, &write_pdb(&model).context("cannot emit model")?)?;
    write_file(&report_path, &to_json(&report)?)?;
    println!(
        "{} {} seed {}: {:?}, contact energy {:.6}, residual {:.3e} Å, {} hydrogen bonds, {} clashes",
        report.model_name,
        report.sequence,
        report.seed,
        report.status,
        report.total_contact_energy,
        report.residual,
        report.hbond_count_after,
        report.clashes.len()
    );
    for m in &report.messages {
        eprintln!("warning: {m}");
    }
    if report.succeeded() {
        Ok(())
    } else {
        Err(anyhow!("build failed: {}", report.messages.join("; ")).into())
    }
}

fn run_mutate(args: MutateArgs) -> Outcome {
    let mut s = read_structure(&args.input)?;
    for &chain in &args.chain {
        s = apply_sequence(&s, chain, &args.sequence).with_context(|| format!("chain {chain}"))?;
    }
    write_file(&args.out, &write_pdb(&s).context("cannot emit structure")?)?;
    Ok(())
}

fn run_transform(args: TransformArgs) -> Outcome {
    let mut reals = args
        .matrix
        .unwrap_or_else(|| vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    if reals.len() != 9 {
        return Err(usage(format!("--matrix needs 9 reals, got {}", reals.len())));
    }
    let translate = args.translate.unwrap_or_else(|| vec![0.0; 3]);
    if translate.len() != 3 {
        return Err(usage(format!("--translate needs 3 reals, got {}", translate.len())));
    }
    reals.extend(translate);
    let t = RigidTransform::from_reals(&reals).map_err(usage)?;
    let s = read_structure(&args.input)?;
    let out = match args.new_chain {
        Some(id) => transform_chain(&s, args.chain, &t, id).context("transform failed")?,
        None => {
            let mut out = s;
            let chain = out
                .chain_mut(args.chain)
                .ok_or_else(|| anyhow!("chain {} does not exist", args.chain))?;
            for residue in &mut chain.residues {
                for atom in &mut residue.atoms {
                    atom.position = t.apply(&atom.position);
                }
            }
            out
        }
    };
    write_file(&args.out, &write_pdb(&out).context("cannot emit structure")?)?;
    Ok(())
}

#[derive(Serialize)]
struct EnergyOutput {
    lj: LJParams,
    hb: Option<HBParams>,
    hbond_count: usize,
    /// 12-10 energy summed over the detected hydrogen bonds.
    hb_energy: Option<f64>,
    #[serde(flatten)]
    report: EnergyReport,
}

fn run_energy(args: EnergyArgs) -> Outcome {
    let lj = lj_override(LJParams::side_chain_contact(), args.epsilon, args.sigma)?;
    let hb = match (args.hb_c, args.hb_d) {
        (Some(c), Some(d)) => Some(HBParams::new(c, d).map_err(usage)?),
        _ => None,
    };
    if !(args.clash_cutoff.is_finite() && args.clash_cutoff > 0.0) {
        return Err(usage(format!(
            "--clash-cutoff must be positive, got {}",
            args.clash_cutoff
        )));
    }
    let s = read_structure(&args.input)?;
    let pairs = if args.contacts.is_empty() {
        let spec = FibrilSpec::default();
        let defaults: Vec<_> = spec.anchors.into_iter().zip(spec.free_atoms).collect();
        let present = defaults
            .iter()
            .all(|(a, b)| select_atom(&s, a).is_ok() && select_atom(&s, b).is_ok());
        if present {
            defaults
        } else {
            Vec::new()
        }
    } else {
        args.contacts
    };
    let contacts = pairs
        .into_iter()
        .map(|(a, b)| ContactPair::new(a, b, lj))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let report = energy_report(&s, &contacts, args.clash_cutoff).context("cannot score contacts")?;
    let hb_energy = match hb {
        Some(p) => Some(
            report
                .hbonds
                .iter()
                .try_fold(0.0, |acc, h| hb_pair_energy(h.distance, &p).map(|e| acc + e))
                .context("cannot score hydrogen bonds")?,
        ),
        None => None,
    };
    let output = EnergyOutput {
        lj,
        hb,
        hbond_count: report.hbonds.len(),
        hb_energy,
        report,
    };
    write_file(&args.report, &to_json(&output)?)?;
    println!(
        "contact energy {:.6}, {} hydrogen bonds, {} clashes",
        output.report.total_lj,
        output.hbond_count,
        output.report.clashes.len()
    );
    Ok(())
}

fn run_bench(args: BenchArgs) -> Outcome {
    if args.suite != "classic" {
        return Err(usage(format!("unknown suite `{}` (available: classic)", args.suite)));
    }
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if args.dims.is_empty() || args.dims.contains(&0) {
        return Err(usage("--dims must list positive dimensions"));
    }
    let mut cfg: OptimizerConfig = match &args.config {
        Some(path) => {
            serde_json::from_value(read_json(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => OptimizerConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    } else if args.config.is_none() {
        cfg.seed = rand::random();
    }
    cfg.validate().map_err(usage)?;

    let report = run_benchmark(&args.suite, &args.dims, args.runs, &cfg).map_err(|e| Failure::Domain(e.into()))?;
    write_file(&args.report, &to_json(&report)?)?;
    println!("seed {}", report.seed);
    for c in &report.cells {
        println!(
            "{:<16}{:>4}  success {:>6.3} (need {:.2})  best {:<12.4e}  median evals {:>9}  {}",
            c.problem,
            c.dim,
            c.success_rate,
            c.required_success_rate,
            c.best,
            c.median_evals,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    if report.all_passed {
        Ok(())
    } else {
        Err(anyhow!("some benchmark cells missed their required success rate").into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(a) => run_build(a),
        Command::Mutate(a) => run_mutate(a),
        Command::Transform(a) => run_transform(a),
        Command::Energy(a) => run_energy(a),
        Command::Bench(a) => run_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
