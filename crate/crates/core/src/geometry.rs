//! Rigid-body transforms and the sheet lattice that turns the four-chain
//! asymmetric unit (A, B, G, H) into the twelve-chain fibril cell.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pdb::{Chain, Structure};
use crate::Vec3;

/// Stacking distance between equivalent strands of one sheet, in Å.
pub const INTRA_SHEET_STEP: f64 = 9.5530;

/// Translation of the template screw relating sheet 1 (A, B) to sheet 2 (G, H).
pub const TEMPLATE_SCREW_TRANSLATION: [f64; 3] = [9.07500, 4.77650, 0.00000];

const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not orthogonal (max |RᵀR - I| = {0:e})")]
    NotOrthogonal(f64),
    #[error("transform needs 12 finite reals (9 rotation row-major, 3 translation), got {0}")]
    BadArity(usize),
    #[error("cannot parse transform component `{0}`")]
    BadNumber(String),
    #[error("chain {0} does not exist")]
    MissingChain(char),
    #[error("chain id {0} is already in use")]
    ChainIdCollision(char),
    #[error("intra-sheet step must be nonzero")]
    ZeroStep,
    #[error("reconciliation needs equally long, non-empty point lists (got {initial} and {optimized})")]
    BadPointLists { initial: usize, optimized: usize },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// `p ↦ rotation · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !defect.is_finite() || defect > ORTHOGONALITY_TOL || !translation.iter().all(|t| t.is_finite()) {
            return Err(GeometryError::NotOrthogonal(defect));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translation_only(t: Vec3) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// The template's 2-fold screw along x: `diag(1, -1, -1) · p + (9.075, 4.7765, 0)`.
    pub fn template_screw() -> Self {
        RigidTransform {
            rotation: Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)),
            translation: Vec3::from(TEMPLATE_SCREW_TRANSLATION),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn with_translation(&self, translation: Vec3) -> Self {
        RigidTransform {
            rotation: self.rotation,
            translation,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Row-major rotation followed by the translation.
    pub fn to_reals(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn from_reals(v: &[f64]) -> Result<Self> {
        if v.len() != 12 {
            return Err(GeometryError::BadArity(v.len()));
        }
        RigidTransform::new(Matrix3::from_row_slice(&v[..9]), Vec3::new(v[9], v[10], v[11]))
    }
}

pub fn apply_transform(t: &RigidTransform, p: &Vec3) -> Vec3 {
    t.apply(p)
}

/// Returns the transform that applies `b` first, then `a`.
pub fn compose_transforms(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

impl fmt::Display for RigidTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reals = self.to_reals();
        for (i, v) in reals.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for RigidTransform {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| GeometryError::BadNumber(w.to_string())))
            .collect::<Result<Vec<_>>>()?;
        RigidTransform::from_reals(&values)
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.to_reals();
        TransformRepr {
            rotation: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
            translation: [v[9], v[10], v[11]],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(deserializer)?;
        let mut v: Vec<f64> = repr.rotation.iter().flatten().copied().collect();
        v.extend_from_slice(&repr.translation);
        RigidTransform::from_reals(&v).map_err(serde::de::Error::custom)
    }
}

/// Intra-sheet stacking step plus the transform carrying sheet 1 onto sheet 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct SheetLattice {
    intra_sheet_step: Vec3,
    pub sheet2_transform: RigidTransform,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    intra_sheet_step: [f64; 3],
    sheet2_transform: RigidTransform,
}

impl TryFrom<LatticeRepr> for SheetLattice {
    type Error = GeometryError;

    fn try_from(r: LatticeRepr) -> Result<Self> {
        SheetLattice::new(Vec3::from(r.intra_sheet_step), r.sheet2_transform)
    }
}

impl From<SheetLattice> for LatticeRepr {
    fn from(l: SheetLattice) -> Self {
        LatticeRepr {
            intra_sheet_step: l.intra_sheet_step.into(),
            sheet2_transform: l.sheet2_transform,
        }
    }
}

impl SheetLattice {
    pub fn new(intra_sheet_step: Vec3, sheet2_transform: RigidTransform) -> Result<Self> {
        if intra_sheet_step.norm() == 0.0 || !intra_sheet_step.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::ZeroStep);
        }
        Ok(SheetLattice {
            intra_sheet_step,
            sheet2_transform,
        })
    }

    pub fn intra_sheet_step(&self) -> Vec3 {
        self.intra_sheet_step
    }
}

impl Default for SheetLattice {
    /// Step `(0, 9.5530, 0)` and the template screw.
    fn default() -> Self {
        SheetLattice {
            intra_sheet_step: Vec3::new(0.0, INTRA_SHEET_STEP, 0.0),
            sheet2_transform: RigidTransform::template_screw(),
        }
    }
}

/// Copies chain `chain_id` under `t` and appends it as `new_id`.
pub fn transform_chain(s: &Structure, chain_id: char, t: &RigidTransform, new_id: char) -> Result<Structure> {
    let source = s.chain(chain_id).ok_or(GeometryError::MissingChain(chain_id))?;
    if s.chain(new_id).is_some() {
        return Err(GeometryError::ChainIdCollision(new_id));
    }
    let mut out = s.clone();
    out.chains.push(transformed_chain(source, t, new_id));
    out.renumber_serials();
    Ok(out)
}

pub(crate) fn transformed_chain(source: &Chain, t: &RigidTransform, new_id: char) -> Chain {
    let mut chain = source.clone();
    chain.id = new_id;
    for residue in &mut chain.residues {
        for atom in &mut residue.atoms {
            atom.position = t.apply(&atom.position);
        }
    }
    chain
}

/// Source chain, sign of the step, and the generated chain id.
const LATTICE_COPIES: [(char, f64, char); 8] = [
    ('A', 1.0, 'C'),
    ('B', 1.0, 'D'),
    ('A', -1.0, 'E'),
    ('B', -1.0, 'F'),
    ('G', 1.0, 'I'),
    ('H', 1.0, 'J'),
    ('G', -1.0, 'K'),
    ('H', -1.0, 'L'),
];

/// Generates C, D, E, F from A, B and I, J, K, L from G, H by ±one stacking
/// step, returning the twelve chains sorted A-L.
pub fn replicate_lattice(s: &Structure, lattice: &SheetLattice) -> Result<Structure> {
    for id in ['A', 'B', 'G', 'H'] {
        if s.chain(id).is_none() {
            return Err(GeometryError::MissingChain(id));
        }
    }
    let mut out = s.clone();
    for (source, sign, new_id) in LATTICE_COPIES {
        if out.chain(new_id).is_some() {
            return Err(GeometryError::ChainIdCollision(new_id));
        }
        let step = RigidTransform::translation_only(lattice.intra_sheet_step * sign);
        let chain = transformed_chain(s.chain(source).expect("checked above"), &step, new_id);
        out.chains.push(chain);
    }
    out.chains.sort_by_key(|c| c.id);
    out.renumber_serials();
    Ok(out)
}

/// Folds independently optimized points back into one rigid transform.
///
/// The base translation is shifted by the mean displacement; the residual is
/// the largest distance of any single displacement from that mean.
pub fn reconcile_translation(
    initial_free: &[Vec3],
    optimized_free: &[Vec3],
    base: &RigidTransform,
) -> Result<(RigidTransform, f64)> {
    if initial_free.is_empty() || initial_free.len() != optimized_free.len() {
        return Err(GeometryError::BadPointLists {
            initial: initial_free.len(),
            optimized: optimized_free.len(),
        });
    }
    let displacements: Vec<Vec3> = optimized_free.iter().zip(initial_free).map(|(o, i)| o - i).collect();
    let mean = displacements.iter().fold(Vec3::zeros(), |acc, d| acc + d) / displacements.len() as f64;
    let residual = displacements.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max);
    Ok((base.with_translation(base.translation() + mean), residual))
}
