//! Steric-zipper fibril modelling: PDB I/O, rigid-body lattice geometry,
//! Lennard-Jones contact energetics, a stochastic optimizer and the
//! mutate/place/replicate model builder.

pub mod builder;
pub mod energy;
pub mod geometry;
pub mod optimize;
pub mod pdb;

/// Cartesian coordinates in Å.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Synthetic GYMLGS two-sheet template (chains A, B, G, H; residues 127-132).
pub const GYMLGS_TEMPLATE: &str = include_str!("../data/gymlgs_template.pdb");
