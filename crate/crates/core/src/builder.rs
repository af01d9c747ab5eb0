//! The model-building pipeline: mutate the template strands to a target
//! hexapeptide, place the opposing sheet by minimizing side-chain contact
//! energy, fold the result back into one rigid sheet transform and replicate
//! the twelve-chain cell.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{
    detect_hbonds, energy_report, lj_cluster_energy, lj_cluster_gradient, Clash, ContactEnergy, ContactPair,
    EnergyError, LJParams,
};
use crate::geometry::{
    reconcile_translation, replicate_lattice, transformed_chain, GeometryError, RigidTransform, SheetLattice,
};
use crate::optimize::{
    local_refine, minimize_saec, Objective, OptimizationResult, OptimizeError, OptimizerConfig, TraceSummary,
};
use crate::pdb::{select_atom, Atom, AtomSelector, Chain, PdbError, Structure};
use crate::Vec3;

/// CA-CB bond length used when a CB has to be built.
pub const CA_CB_BOND: f64 = 1.521;
/// N-CA-CB and C-CA-CB angle of a built CB, degrees.
pub const CB_ANGLE_DEG: f64 = 109.5;
/// Residues per strand.
pub const STRAND_LENGTH: usize = 6;

/// Atoms that survive any mutation.
const MAIN_CHAIN: [&str; 6] = ["N", "CA", "C", "O", "OXT", "H"];

#[derive(Debug, Error)]
pub enum BuilderError {
    #[error("invalid sequence `{0}`: need {STRAND_LENGTH} residues, each A or G")]
    Sequence(String),
    #[error("chain {0} does not exist")]
    MissingChain(char),
    #[error("residue {res_seq} of chain {chain} does not exist")]
    MissingResidue { chain: char, res_seq: i32 },
    #[error("residue {res_seq} of chain {chain} has no {atom} atom")]
    MissingBackbone {
        chain: char,
        res_seq: i32,
        atom: &'static str,
    },
    #[error("chain {chain} has {found} residues, expected {STRAND_LENGTH}")]
    Length { chain: char, found: usize },
    #[error("invalid fibril spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<BuilderError>,
    },
}

pub type Result<T> = std::result::Result<T, BuilderError>;

/// Pipeline stages, named in stage errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Mutate,
    Sheet2,
    Placement,
    Replicate,
    Audit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Mutate => "mutate",
            Stage::Sheet2 => "sheet-2 generation",
            Stage::Placement => "placement",
            Stage::Replicate => "replicate",
            Stage::Audit => "audit",
        })
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<BuilderError>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| BuilderError::Stage {
            stage,
            source: Box::new(e.into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AminoAcid {
    Ala,
    Gly,
}

impl AminoAcid {
    pub fn three_letter(self) -> &'static str {
        match self {
            AminoAcid::Ala => "ALA",
            AminoAcid::Gly => "GLY",
        }
    }

    pub fn one_letter(self) -> char {
        match self {
            AminoAcid::Ala => 'A',
            AminoAcid::Gly => 'G',
        }
    }

    pub fn from_one_letter(c: char) -> Option<Self> {
        match c {
            'A' => Some(AminoAcid::Ala),
            'G' => Some(AminoAcid::Gly),
            _ => None,
        }
    }
}

/// Six residues, written as one-letter codes (`GAAAAG`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hexapeptide(pub [AminoAcid; STRAND_LENGTH]);

impl Hexapeptide {
    pub fn residues(&self) -> &[AminoAcid; STRAND_LENGTH] {
        &self.0
    }
}

impl FromStr for Hexapeptide {
    type Err = BuilderError;

    fn from_str(s: &str) -> Result<Self> {
        let parsed: Option<Vec<AminoAcid>> = s.chars().map(AminoAcid::from_one_letter).collect();
        parsed
            .and_then(|v| v.try_into().ok())
            .map(Hexapeptide)
            .ok_or_else(|| BuilderError::Sequence(s.to_string()))
    }
}

impl fmt::Display for Hexapeptide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|a| write!(f, "{}", a.one_letter()))
    }
}

impl Serialize for Hexapeptide {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Hexapeptide {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tetrahedral L-CB position from the backbone N, CA and C.
///
/// CB sits on the far side of the N-CA-C bisector, lifted out of the N-CA-C
/// plane along `(N - CA) × (C - CA)`, so that both N-CA-CB and C-CA-CB equal
/// [`CB_ANGLE_DEG`].
pub fn ideal_cb(n: &Vec3, ca: &Vec3, c: &Vec3) -> Vec3 {
    let u = (n - ca).normalize();
    let v = (c - ca).normalize();
    let bisector = -(u + v).normalize();
    let normal = u.cross(&v).normalize();
    let half = ((1.0 + u.dot(&v)) / 2.0).sqrt();
    let cos_t = (-CB_ANGLE_DEG.to_radians().cos() / half).clamp(-1.0, 1.0);
    let dir = bisector * cos_t + normal * (1.0 - cos_t * cos_t).sqrt();
    ca + dir * CA_CB_BOND
}

/// Mutates one residue to ALA or GLY.
///
/// Main-chain atoms are never touched. GLY drops the whole side chain; ALA
/// keeps only CB, building it with [`ideal_cb`] when the source has none.
/// A residue that is already the target (with its CB, for ALA) is left as is.
pub fn mutate_residue(s: &Structure, chain: char, res_seq: i32, target: AminoAcid) -> Result<Structure> {
    let mut out = s.clone();
    let residue = out
        .chain_mut(chain)
        .ok_or(BuilderError::MissingChain(chain))?
        .residue_mut(res_seq)
        .ok_or(BuilderError::MissingResidue { chain, res_seq })?;
    let mut backbone = [Vec3::zeros(); 4];
    for (slot, name) in backbone.iter_mut().zip(crate::pdb::BACKBONE) {
        *slot = residue
            .atom(name)
            .ok_or(BuilderError::MissingBackbone {
                chain,
                res_seq,
                atom: name,
            })?
            .position;
    }
    let has_cb = residue.atom("CB").is_some();
    if residue.res_name == target.three_letter() && (target == AminoAcid::Gly || has_cb) {
        return Ok(out);
    }
    let keep_cb = target == AminoAcid::Ala;
    residue
        .atoms
        .retain(|a| MAIN_CHAIN.contains(&a.name.as_str()) || (keep_cb && a.name == "CB"));
    if keep_cb && !has_cb {
        let ca = residue.atom("CA").expect("checked above");
        let mut cb = Atom::new("CB", ideal_cb(&backbone[0], &backbone[1], &backbone[2]));
        cb.occupancy = ca.occupancy;
        cb.temp_factor = ca.temp_factor;
        let after = residue.atoms.iter().rposition(|a| a.is_backbone()).map_or(0, |i| i + 1);
        residue.atoms.insert(after, cb);
    }
    residue.res_name = target.three_letter().to_string();
    Ok(out)
}

/// Mutates a six-residue chain position by position and renumbers it 1-6.
pub fn apply_sequence(s: &Structure, chain: char, sequence: &Hexapeptide) -> Result<Structure> {
    let found = s.chain(chain).ok_or(BuilderError::MissingChain(chain))?;
    if found.residues.len() != STRAND_LENGTH {
        return Err(BuilderError::Length {
            chain,
            found: found.residues.len(),
        });
    }
    let numbers: Vec<i32> = found.residues.iter().map(|r| r.res_seq).collect();
    let mut out = s.clone();
    for (&res_seq, &target) in numbers.iter().zip(sequence.residues()) {
        out = mutate_residue(&out, chain, res_seq, target)?;
    }
    for (k, residue) in out
        .chain_mut(chain)
        .expect("checked above")
        .residues
        .iter_mut()
        .enumerate()
    {
        residue.res_seq = k as i32 + 1;
    }
    out.renumber_serials();
    Ok(out)
}

/// The three six-residue windows of AGAAAAGA, by model name.
pub const MODEL_SEQUENCES: [(&str, &str); 3] = [("model1", "AGAAAA"), ("model2", "GAAAAG"), ("model3", "AAAAGA")];

/// Everything a build needs besides the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FibrilSpec {
    pub model_name: String,
    pub sequence: Hexapeptide,
    /// Fixed sheet-1 atoms; `anchors[i]` is in contact with `free_atoms[i]`.
    pub anchors: Vec<AtomSelector>,
    /// Sheet-2 atoms whose coordinates are the optimization variables.
    pub free_atoms: Vec<AtomSelector>,
    pub lj: LJParams,
    pub lattice: SheetLattice,
    pub optimizer: OptimizerConfig,
    /// Score every pair among anchors and free atoms, not just the declared contacts.
    pub full_sum: bool,
    /// Weight of `Σ|x - x₀|²` added during the search so that the
    /// least-displaced of the equivalent contact optima wins. Reported
    /// energies never include it.
    pub tie_break: f64,
    /// Reconciliation residual (Å) above which the build carries a warning.
    pub residual_threshold: f64,
    /// Half-width (Å) of the search box around each free atom's start.
    pub search_radius: f64,
    pub clash_cutoff: f64,
    pub refine_tolerance: f64,
    pub refine_max_iters: usize,
}

impl Default for FibrilSpec {
    fn default() -> Self {
        let sel = |s: &str| s.parse::<AtomSelector>().expect("valid selector");
        FibrilSpec {
            model_name: "model2".into(),
            sequence: "GAAAAG".parse().expect("valid sequence"),
            anchors: vec![sel("A.ALA3.CB"), sel("B.ALA4.CB")],
            free_atoms: vec![sel("G.ALA4.CB"), sel("H.ALA3.CB")],
            lj: LJParams::side_chain_contact(),
            lattice: SheetLattice::default(),
            optimizer: OptimizerConfig::default(),
            full_sum: false,
            tie_break: 1e-4,
            residual_threshold: 0.5,
            search_radius: 6.0,
            clash_cutoff: 2.0,
            refine_tolerance: 1e-10,
            refine_max_iters: 10_000,
        }
    }
}

impl FibrilSpec {
    pub fn new(model_name: &str, sequence: Hexapeptide) -> Self {
        FibrilSpec {
            model_name: model_name.to_string(),
            sequence,
            ..FibrilSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BuilderError::Spec(m));
        if self.model_name.is_empty() || self.model_name.chars().any(char::is_whitespace) {
            return fail(format!("model name `{}` must be a non-empty token", self.model_name));
        }
        if self.anchors.is_empty() || self.anchors.len() != self.free_atoms.len() {
            return fail(format!(
                "need as many free atoms as anchors, at least one (got {} and {})",
                self.anchors.len(),
                self.free_atoms.len()
            ));
        }
        let sides = self
            .anchors
            .iter()
            .map(|a| (a, "AB"))
            .chain(self.free_atoms.iter().map(|f| (f, "GH")));
        for (sel, chains) in sides {
            if !chains.contains(sel.chain_id) {
                return fail(format!("{sel} must lie on chain {} or {}", &chains[..1], &chains[1..]));
            }
            let expected = (1..=STRAND_LENGTH as i32)
                .contains(&sel.res_seq)
                .then(|| self.sequence.0[sel.res_seq as usize - 1].three_letter());
            if expected != Some(sel.res_name.as_str()) {
                return fail(format!("{sel} does not match sequence {}", self.sequence));
            }
            if sel.atom_name == "CB" && sel.res_name != "ALA" {
                return fail(format!("{sel}: CB contacts need ALA"));
            }
        }
        let mut all: Vec<&AtomSelector> = self.anchors.iter().chain(&self.free_atoms).collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return fail("anchors and free atoms must all be distinct".into());
        }
        let positive = [
            ("residual_threshold", self.residual_threshold),
            ("search_radius", self.search_radius),
            ("clash_cutoff", self.clash_cutoff),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("tie_break", self.tie_break),
            ("refine_tolerance", self.refine_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        self.optimizer.validate()?;
        Ok(())
    }
}

/// Contact energy of the free atoms against fixed anchors, plus the
/// optional tie-break pull toward the start.
struct PlacementObjective {
    /// Anchor coordinates first, then a slot for the free atoms.
    anchors: Vec<f64>,
    start: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    pairs: Option<Vec<(usize, usize)>>,
    lj: LJParams,
    tie_break: f64,
}

impl PlacementObjective {
    fn new(anchors: &[Vec3], start: &[Vec3], spec: &FibrilSpec) -> Self {
        let n = anchors.len();
        let start: Vec<f64> = start.iter().flat_map(|p| p.iter().copied()).collect();
        PlacementObjective {
            anchors: anchors.iter().flat_map(|p| p.iter().copied()).collect(),
            bounds: start
                .iter()
                .map(|&v| (v - spec.search_radius, v + spec.search_radius))
                .collect(),
            start,
            pairs: (!spec.full_sum).then(|| (0..n).map(|i| (i, n + i)).collect()),
            lj: spec.lj,
            tie_break: spec.tie_break,
        }
    }

    fn coords(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.anchors.clone();
        c.extend_from_slice(x);
        c
    }

    /// Energy without the tie-break term.
    fn contact_energy(&self, x: &[f64]) -> std::result::Result<f64, String> {
        lj_cluster_energy(&self.coords(x), &self.lj, self.pairs.as_deref()).map_err(|e| e.to_string())
    }
}

impl Objective for PlacementObjective {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> std::result::Result<f64, String> {
        let pull: f64 = x.iter().zip(&self.start).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.contact_energy(x)? + self.tie_break * pull)
    }

    fn gradient(&self, x: &[f64]) -> Option<std::result::Result<Vec<f64>, String>> {
        let full = match lj_cluster_gradient(&self.coords(x), &self.lj, self.pairs.as_deref()) {
            Ok(g) => g,
            Err(e) => return Some(Err(e.to_string())),
        };
        let g = full[self.anchors.len()..]
            .iter()
            .zip(x.iter().zip(&self.start))
            .map(|(g, (a, b))| g + 2.0 * self.tie_break * (a - b))
            .collect();
        Some(Ok(g))
    }

    fn initial_point(&self) -> Option<Vec<f64>> {
        Some(self.start.clone())
    }
}

/// Outcome of [`place_opposing_sheet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Sheet-2 transform: the lattice rotation with an updated translation.
    pub transform: RigidTransform,
    /// Largest deviation (Å) of a single free-atom displacement from the mean.
    pub residual: f64,
    /// Contact energy at the optimized free-atom positions.
    pub energy: f64,
    pub initial_free: Vec<Vec3>,
    pub optimized_free: Vec<Vec3>,
    pub search: OptimizationResult,
    /// Gradient refinement of the search result; with a tie-break the last
    /// stage runs on the contact energy alone, so `best_value == energy`.
    pub refine: OptimizationResult,
}

fn positions(s: &Structure, selectors: &[AtomSelector]) -> Result<Vec<Vec3>> {
    selectors
        .iter()
        .map(|sel| Ok(select_atom(s, sel)?.atom.position))
        .collect()
}

/// Moves the free atoms to minimize their contact energy with the anchors
/// (global search, then gradient refinement) and folds the displacements
/// into one translation of `spec.lattice.sheet2_transform`.
pub fn place_opposing_sheet(s: &Structure, spec: &FibrilSpec) -> Result<Placement> {
    spec.validate()?;
    let anchors = positions(s, &spec.anchors)?;
    let initial_free = positions(s, &spec.free_atoms)?;
    let objective = PlacementObjective::new(&anchors, &initial_free, spec);
    let search = minimize_saec(&objective, &spec.optimizer)?;
    let mut refine = local_refine(
        &objective,
        &search.best_point,
        spec.refine_tolerance,
        spec.refine_max_iters,
    )?;
    if objective.tie_break > 0.0 {
        let pure = PlacementObjective {
            tie_break: 0.0,
            ..objective
        };
        let used = refine.evaluations_used;
        refine = local_refine(&pure, &refine.best_point, spec.refine_tolerance, spec.refine_max_iters)?;
        refine.evaluations_used += used;
        return finish(pure, search, refine, initial_free, spec);
    }
    finish(objective, search, refine, initial_free, spec)
}

fn finish(
    objective: PlacementObjective,
    search: OptimizationResult,
    refine: OptimizationResult,
    initial_free: Vec<Vec3>,
    spec: &FibrilSpec,
) -> Result<Placement> {
    let x = &refine.best_point;
    let energy = objective
        .contact_energy(x)
        .map_err(|message| OptimizeError::Evaluation {
            point: x.clone(),
            message,
        })?;
    let optimized_free: Vec<Vec3> = x.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    let (transform, residual) = reconcile_translation(&initial_free, &optimized_free, &spec.lattice.sheet2_transform)?;
    Ok(Placement {
        transform,
        residual,
        energy,
        initial_free,
        optimized_free,
        search,
        refine,
    })
}

/// Contact distances may deviate this much (relative) from the pair optimum
/// in a successful build.
pub const CONTACT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildStatus {
    Success,
    /// Complete, but see the report messages.
    Warning,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub model_name: String,
    pub sequence: Hexapeptide,
    pub seed: u64,
    pub status: BuildStatus,
    pub messages: Vec<String>,
    pub chains: String,
    pub contacts: Vec<ContactEnergy>,
    pub total_contact_energy: f64,
    /// Optimum pair distance `2^(1/6)σ` the contacts are judged against.
    pub contact_optimum: f64,
    pub residual: f64,
    pub residual_threshold: f64,
    /// Backbone hydrogen bonds of the same cell built from the unmutated strands.
    pub hbond_count_before: usize,
    pub hbond_count_after: usize,
    pub clash_cutoff: f64,
    pub clashes: Vec<Clash>,
    pub initial_transform: RigidTransform,
    pub sheet2_transform: RigidTransform,
    pub search: TraceSummary,
    pub refine: TraceSummary,
}

impl BuildReport {
    pub fn succeeded(&self) -> bool {
        self.status != BuildStatus::Failed
    }
}

/// Chains A and B of `s` (hetero atoms dropped) with residues numbered 1-6.
fn strands(s: &Structure) -> Result<Structure> {
    let clean = s.without_hetero();
    let mut out = Structure::default();
    for id in ['A', 'B'] {
        let mut chain = clean.chain(id).ok_or(BuilderError::MissingChain(id))?.clone();
        if chain.residues.len() != STRAND_LENGTH {
            return Err(BuilderError::Length {
                chain: id,
                found: chain.residues.len(),
            });
        }
        for (k, r) in chain.residues.iter_mut().enumerate() {
            r.res_seq = k as i32 + 1;
        }
        out.chains.push(chain);
    }
    out.renumber_serials();
    Ok(out)
}

/// A and B of `s` plus their images G and H under `t`.
fn with_sheet2(s: &Structure, t: &RigidTransform) -> Result<Structure> {
    let mut out = Structure {
        header: s.header.clone(),
        chains: Vec::new(),
    };
    let mut images: Vec<Chain> = Vec::new();
    for (id, image) in [('A', 'G'), ('B', 'H')] {
        let chain = s.chain(id).ok_or(BuilderError::MissingChain(id))?;
        out.chains.push(chain.clone());
        images.push(transformed_chain(chain, t, image));
    }
    out.chains.extend(images);
    out.renumber_serials();
    Ok(out)
}

/// Builds the twelve-chain model: mutate A and B, regenerate G and H under
/// the lattice transform, place sheet 2, regenerate G and H under the placed
/// transform, replicate, and audit.
///
/// Chains G and H of the template are ignored; they are always rebuilt from
/// A and B. A build with clashes or off-optimum contacts is returned with
/// [`BuildStatus::Failed`] rather than as an error.
pub fn build_fibril_model(template: &Structure, spec: &FibrilSpec) -> Result<(Structure, BuildReport)> {
    spec.validate()?;
    let original = strands(template).at(Stage::Mutate)?;
    let mut mutated = original.clone();
    for id in ['A', 'B'] {
        mutated = apply_sequence(&mutated, id, &spec.sequence).at(Stage::Mutate)?;
    }

    let initial_transform = spec.lattice.sheet2_transform;
    let four = with_sheet2(&mutated, &initial_transform).at(Stage::Sheet2)?;
    let placement = place_opposing_sheet(&four, spec).at(Stage::Placement)?;
    let mut lattice = spec.lattice;
    lattice.sheet2_transform = placement.transform;

    let mut model = with_sheet2(&mutated, &placement.transform)
        .and_then(|s| Ok(replicate_lattice(&s, &lattice)?))
        .at(Stage::Replicate)?;
    model.header = vec![format!(
        "REMARK   1 {} {} SEED {}",
        spec.model_name, spec.sequence, spec.optimizer.seed
    )];
    let before = with_sheet2(&original, &placement.transform)
        .and_then(|s| Ok(replicate_lattice(&s, &lattice)?))
        .at(Stage::Replicate)?;

    let contacts = spec
        .anchors
        .iter()
        .zip(&spec.free_atoms)
        .map(|(a, f)| ContactPair::new(a.clone(), f.clone(), spec.lj))
        .collect::<std::result::Result<Vec<_>, _>>()
        .at(Stage::Audit)?;
    let audit = energy_report(&model, &contacts, spec.clash_cutoff).at(Stage::Audit)?;
    let hbond_count_before = detect_hbonds(&before).len();
    let hbond_count_after = audit.hbonds.len();

    let optimum = spec.lj.optimal_distance();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    if !audit.clashes.is_empty() {
        failures.push(format!(
            "{} atom pairs closer than {} Å",
            audit.clashes.len(),
            spec.clash_cutoff
        ));
    }
    for c in &audit.contacts {
        if ((c.distance - optimum) / optimum).abs() > CONTACT_TOLERANCE {
            failures.push(format!(
                "contact {}-{} at {:.4} Å is off the {:.4} Å optimum",
                c.first, c.second, c.distance, optimum
            ));
        }
    }
    if hbond_count_after != hbond_count_before {
        failures.push(format!(
            "hydrogen bonds changed from {hbond_count_before} to {hbond_count_after}"
        ));
    }
    if placement.residual > spec.residual_threshold {
        warnings.push(format!(
            "reconciliation residual {:.4} Å exceeds {} Å",
            placement.residual, spec.residual_threshold
        ));
    }
    let status = if !failures.is_empty() {
        BuildStatus::Failed
    } else if !warnings.is_empty() {
        BuildStatus::Warning
    } else {
        BuildStatus::Success
    };
    failures.extend(warnings);

    let report = BuildReport {
        model_name: spec.model_name.clone(),
        sequence: spec.sequence,
        seed: spec.optimizer.seed,
        status,
        messages: failures,
        chains: model.chain_ids().into_iter().collect(),
        total_contact_energy: audit.total_lj,
        contacts: audit.contacts,
        contact_optimum: optimum,
        residual: placement.residual,
        residual_threshold: spec.residual_threshold,
        hbond_count_before,
        hbond_count_after,
        clash_cutoff: spec.clash_cutoff,
        clashes: audit.clashes,
        initial_transform,
        sheet2_transform: placement.transform,
        search: placement.search.summary(),
        refine: placement.refine.summary(),
    };
    Ok((model, report))
}
