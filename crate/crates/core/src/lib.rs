//! Morton space-filling-curve featurization of molecular crystal structures.
//!
//! A crystal is expanded into a sphere of periodic images, rotated into its
//! principal-inertia frame and binned on a 4-D grid (azimuth, polar angle,
//! radius, atomic descriptor). Bit-interleaving the grid coordinates gives
//! each cell a position on a Morton curve, so a structure becomes a sparse
//! count vector. TF-IDF weighting plus a truncated SVD reduce these vectors
//! to a few dense features, and a small multi-task network predicts four
//! lattice energies from them.
//!
//! ```
//! use sfcm::descriptors::DescriptorVariant;
//! use sfcm::featurize::featurize_structure;
//! use sfcm::structure_io::generate_synthetic;
//!
//! let (cell, _energies) = generate_synthetic(1, 1, 6).remove(0);
//! let v = featurize_structure(&cell, &DescriptorVariant::m1(), 4, 15.0).unwrap();
//! assert_eq!(v.len(), 1 << 16);
//! assert!(v.nnz() > 0);
//! ```

pub mod cli;
pub mod descriptors;
pub mod element;
pub mod eval;
pub mod featurize;
pub mod geometry;
pub mod lsi;
pub mod mlp;
pub mod morton;
pub mod seed;
pub mod structure_io;

pub use cli::{PipelineConfig, PipelineError};
pub use descriptors::{DescriptorVariant, VariantTag};
pub use morton::SparseVector;
pub use structure_io::{CrystalStructure, EnergyRecord};
