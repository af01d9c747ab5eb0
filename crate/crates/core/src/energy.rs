//! Nonbonded pair potentials, cluster energies with analytic gradients,
//! distance-only hydrogen-bond detection and clash auditing.
//!
//! Distances are in the caller's length unit (reduced units for the benchmark
//! clusters, Å for PDB structures).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pdb::{select_atom, AtomRef, AtomSelector, PdbError, Structure};

/// Pairs closer than this are treated as coincident.
pub const SINGULARITY_DISTANCE: f64 = 1e-8;

/// Backbone N···O distance that counts as a hydrogen bond, in Å.
pub const HBOND_CUTOFF: f64 = 3.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("distance must be positive and finite, got {0}")]
    Domain(f64),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("atoms {i} and {j} are coincident (distance {distance:e})")]
    Singularity { i: usize, j: usize, distance: f64 },
    #[error("coordinate vector of length {0} does not describe at least two 3-D points")]
    Coordinates(usize),
    #[error("pair ({0}, {1}) is out of range or not a pair of distinct atoms")]
    BadPair(usize, usize),
    #[error(transparent)]
    Selection(#[from] PdbError),
}

pub type Result<T> = std::result::Result<T, EnergyError>;

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(EnergyError::Params(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(EnergyError::Domain(r))
    }
}

/// Well depth and zero-crossing distance of the 12-6 potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLj")]
pub struct LJParams {
    epsilon: f64,
    sigma: f64,
}

#[derive(Deserialize)]
struct RawLj {
    epsilon: f64,
    sigma: f64,
}

impl TryFrom<RawLj> for LJParams {
    type Error = EnergyError;
    fn try_from(r: RawLj) -> Result<Self> {
        LJParams::new(r.epsilon, r.sigma)
    }
}

impl LJParams {
    pub fn new(epsilon: f64, sigma: f64) -> Result<Self> {
        Ok(LJParams {
            epsilon: positive("epsilon", epsilon)?,
            sigma: positive("sigma", sigma)?,
        })
    }

    /// ε = σ = 1.
    pub fn reduced() -> Self {
        LJParams {
            epsilon: 1.0,
            sigma: 1.0,
        }
    }

    /// ε = 1, σ = 4 Å: a CB···CB contact with its minimum near 4.49 Å.
    pub fn side_chain_contact() -> Self {
        LJParams {
            epsilon: 1.0,
            sigma: 4.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `2^(1/6) σ`, where the pair energy reaches `-ε`.
    pub fn optimal_distance(&self) -> f64 {
        2f64.powf(1.0 / 6.0) * self.sigma
    }
}

/// Coefficients of `A/r¹² - B/r⁶`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LJABParams {
    a: f64,
    b: f64,
}

impl LJABParams {
    /// `a` must be positive; `b = 0` is allowed and gives pure repulsion.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let a = positive("A", a)?;
        if !(b.is_finite() && b >= 0.0) {
            return Err(EnergyError::Params(format!(
                "B must be non-negative and finite, got {b}"
            )));
        }
        Ok(LJABParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Inverse of the `From<LJParams>` conversion: `σ = (A/B)^(1/6)`, `ε = B²/4A`.
    pub fn to_lj(&self) -> Result<LJParams> {
        LJParams::new(self.b * self.b / (4.0 * self.a), (self.a / self.b).powf(1.0 / 6.0))
    }
}

impl From<LJParams> for LJABParams {
    /// `A = 4εσ¹²`, `B = 4εσ⁶`.
    fn from(p: LJParams) -> Self {
        let s6 = p.sigma.powi(6);
        LJABParams {
            a: 4.0 * p.epsilon * s6 * s6,
            b: 4.0 * p.epsilon * s6,
        }
    }
}

/// Coefficients of the 12-10 hydrogen-bond term `C/r¹² - D/r¹⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HBParams {
    c: f64,
    d: f64,
}

impl HBParams {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        Ok(HBParams {
            c: positive("C", c)?,
            d: positive("D", d)?,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `√(6C / 5D)`.
    pub fn optimal_distance(&self) -> f64 {
        (6.0 * self.c / (5.0 * self.d)).sqrt()
    }
}

pub fn lj_pair_energy(r: f64, p: &LJParams) -> Result<f64> {
    check_distance(r)?;
    let s6 = (p.sigma / r).powi(6);
    Ok(4.0 * p.epsilon * (s6 * s6 - s6))
}

/// `dV/dr` of [`lj_pair_energy`].
pub fn lj_pair_derivative(r: f64, p: &LJParams) -> Result<f64> {
    check_distance(r)?;
    let s6 = (p.sigma / r).powi(6);
    Ok(4.0 * p.epsilon * (6.0 * s6 - 12.0 * s6 * s6) / r)
}

pub fn lj_ab_energy(r: f64, p: &LJABParams) -> Result<f64> {
    check_distance(r)?;
    let r6 = r.powi(6);
    Ok(p.a / (r6 * r6) - p.b / r6)
}

pub fn hb_pair_energy(r: f64, p: &HBParams) -> Result<f64> {
    check_distance(r)?;
    let r2 = r * r;
    let r10 = r2.powi(5);
    Ok(p.c / (r10 * r2) - p.d / r10)
}

fn point_count(coords: &[f64]) -> Result<usize> {
    if !coords.len().is_multiple_of(3) || coords.len() < 6 {
        return Err(EnergyError::Coordinates(coords.len()));
    }
    Ok(coords.len() / 3)
}

fn delta(coords: &[f64], i: usize, j: usize) -> [f64; 3] {
    [
        coords[3 * i] - coords[3 * j],
        coords[3 * i + 1] - coords[3 * j + 1],
        coords[3 * i + 2] - coords[3 * j + 2],
    ]
}

/// Calls `f(i, j, d, r)` for every evaluated pair, after validating it.
fn for_each_pair(
    coords: &[f64],
    pairs: Option<&[(usize, usize)]>,
    mut f: impl FnMut(usize, usize, [f64; 3], f64),
) -> Result<()> {
    let n = point_count(coords)?;
    let mut visit = |i: usize, j: usize| -> Result<()> {
        let d = delta(coords, i, j);
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !r.is_finite() {
            return Err(EnergyError::Domain(r));
        }
        if r < SINGULARITY_DISTANCE {
            return Err(EnergyError::Singularity { i, j, distance: r });
        }
        f(i, j, d, r);
        Ok(())
    };
    match pairs {
        Some(list) => {
            for &(i, j) in list {
                if i == j || i >= n || j >= n {
                    return Err(EnergyError::BadPair(i, j));
                }
                visit(i, j)?;
            }
        }
        None => {
            for i in 0..n {
                for j in i + 1..n {
                    visit(i, j)?;
                }
            }
        }
    }
    Ok(())
}

/// Sum of 12-6 energies over all `i < j` pairs of a flat `[x0, y0, z0, x1, ...]`
/// vector, or over `pairs` only when given.
pub fn lj_cluster_energy(coords: &[f64], p: &LJParams, pairs: Option<&[(usize, usize)]>) -> Result<f64> {
    let mut total = 0.0;
    for_each_pair(coords, pairs, |_, _, _, r| {
        let s6 = (p.sigma / r).powi(6);
        total += 4.0 * p.epsilon * (s6 * s6 - s6);
    })?;
    Ok(total)
}

/// Analytic gradient of [`lj_cluster_energy`] with the same pair selection.
pub fn lj_cluster_gradient(coords: &[f64], p: &LJParams, pairs: Option<&[(usize, usize)]>) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; coords.len()];
    for_each_pair(coords, pairs, |i, j, d, r| {
        let s6 = (p.sigma / r).powi(6);
        let dv_dr = 4.0 * p.epsilon * (6.0 * s6 - 12.0 * s6 * s6) / r;
        for k in 0..3 {
            let g = dv_dr * d[k] / r;
            grad[3 * i + k] += g;
            grad[3 * j + k] -= g;
        }
    })?;
    Ok(grad)
}

/// A side-chain contact scored with its own 12-6 parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContact")]
pub struct ContactPair {
    pub first: AtomSelector,
    pub second: AtomSelector,
    pub params: LJParams,
}

#[derive(Deserialize)]
struct RawContact {
    first: AtomSelector,
    second: AtomSelector,
    params: LJParams,
}

impl TryFrom<RawContact> for ContactPair {
    type Error = EnergyError;
    fn try_from(r: RawContact) -> Result<Self> {
        ContactPair::new(r.first, r.second, r.params)
    }
}

impl ContactPair {
    pub fn new(first: AtomSelector, second: AtomSelector, params: LJParams) -> Result<Self> {
        if first == second {
            return Err(EnergyError::Params(format!("contact pair names {first} twice")));
        }
        Ok(ContactPair { first, second, params })
    }

    pub fn distance(&self, s: &Structure) -> Result<f64> {
        let a = select_atom(s, &self.first)?;
        let b = select_atom(s, &self.second)?;
        Ok((a.atom.position - b.atom.position).norm())
    }

    pub fn energy(&self, s: &Structure) -> Result<f64> {
        let r = self.distance(s)?;
        if r < SINGULARITY_DISTANCE {
            return Err(EnergyError::Domain(r));
        }
        lj_pair_energy(r, &self.params)
    }
}

/// Backbone N (donor) within [`HBOND_CUTOFF`] of a backbone O (acceptor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HBond {
    pub donor: AtomSelector,
    pub acceptor: AtomSelector,
    pub distance: f64,
}

/// Two atoms closer than the audit cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clash {
    pub first: AtomSelector,
    pub second: AtomSelector,
    pub distance: f64,
}

fn same_or_adjacent(a: &AtomRef<'_>, b: &AtomRef<'_>) -> bool {
    a.chain == b.chain && (a.residue.res_seq - b.residue.res_seq).abs() <= 1
}

fn position_key(r: &AtomRef<'_>) -> (char, i32) {
    (r.chain, r.residue.res_seq)
}

/// All inter-residue backbone N···O pairs within [`HBOND_CUTOFF`], excluding
/// pairs in the same or sequence-adjacent residues of one chain.
///
/// The result is sorted by donor then acceptor position, so it does not
/// depend on chain order in the file.
pub fn detect_hbonds(s: &Structure) -> Vec<HBond> {
    let donors: Vec<AtomRef<'_>> = s.atoms().filter(|r| !r.atom.hetero && r.atom.name == "N").collect();
    let acceptors: Vec<AtomRef<'_>> = s.atoms().filter(|r| !r.atom.hetero && r.atom.name == "O").collect();
    let mut found = Vec::new();
    for d in &donors {
        for a in &acceptors {
            if same_or_adjacent(d, a) {
                continue;
            }
            let distance = (d.atom.position - a.atom.position).norm();
            if distance <= HBOND_CUTOFF {
                found.push((position_key(d), position_key(a), d.selector(), a.selector(), distance));
            }
        }
    }
    found.sort_by_key(|x| (x.0, x.1));
    found
        .into_iter()
        .map(|(_, _, donor, acceptor, distance)| HBond {
            donor,
            acceptor,
            distance,
        })
        .collect()
}

/// The peptide bond C(i)-N(i+1) within one chain.
fn peptide_bonded(a: &AtomRef<'_>, b: &AtomRef<'_>) -> bool {
    if a.chain != b.chain {
        return false;
    }
    let link = |c: &AtomRef<'_>, n: &AtomRef<'_>| {
        c.atom.name == "C" && n.atom.name == "N" && n.residue.res_seq == c.residue.res_seq + 1
    };
    link(a, b) || link(b, a)
}

/// Atom pairs from different residues closer than `cutoff`, sorted by
/// ascending distance. Peptide C-N bonds are covalent and not reported.
pub fn clash_audit(s: &Structure, cutoff: f64) -> Vec<Clash> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Vec::new();
    }
    let atoms: Vec<AtomRef<'_>> = s.atoms().collect();
    let mut clashes = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            if std::ptr::eq(a.residue, b.residue) || peptide_bonded(a, b) {
                continue;
            }
            let distance = (a.atom.position - b.atom.position).norm();
            if distance < cutoff {
                clashes.push(Clash {
                    first: a.selector(),
                    second: b.selector(),
                    distance,
                });
            }
        }
    }
    clashes.sort_by(|x, y| x.distance.total_cmp(&y.distance));
    clashes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEnergy {
    pub first: AtomSelector,
    pub second: AtomSelector,
    pub distance: f64,
    pub energy: f64,
}

/// JSON-ready summary of a structure's contacts, hydrogen bonds and clashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Sum of the contact energies.
    pub total_lj: f64,
    pub contacts: Vec<ContactEnergy>,
    pub hbonds: Vec<HBond>,
    pub clash_cutoff: f64,
    pub clashes: Vec<Clash>,
}

pub fn energy_report(s: &Structure, contacts: &[ContactPair], clash_cutoff: f64) -> Result<EnergyReport> {
    let contacts = contacts
        .iter()
        .map(|c| {
            Ok(ContactEnergy {
                first: c.first.clone(),
                second: c.second.clone(),
                distance: c.distance(s)?,
                energy: c.energy(s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyReport {
        total_lj: contacts.iter().fold(0.0, |acc, c| acc + c.energy),
        contacts,
        hbonds: detect_hbonds(s),
        clash_cutoff,
        clashes: clash_audit(s, clash_cutoff),
    })
}
