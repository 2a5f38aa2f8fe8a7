//! Differentially private adjacency spectral embedding for stochastic
//! blockmodels.
//!
//! The crate covers the whole pipeline: SBM sampling and graph ingestion
//! ([`graph`]), symmetric eigensolvers, spectral embedding and Procrustes
//! alignment ([`linalg`]), the Gaussian perturbation mechanism ([`dp`]),
//! leave-one-out kNN evaluation ([`classify`]), and the sweep harness that
//! ties them together ([`harness`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.
//!
//! ```
//! use dpase_core::{dp_ase, sample_sbm, PrivacyBudget, SbmParams};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let graph = sample_sbm(&SbmParams::two_block_reference(), 200, &mut rng).unwrap();
//! let budget = PrivacyBudget::new(1.0, 0.01).unwrap();
//! let x: dpase_core::Embedding64 = dp_ase(graph.adjacency(), 2, &budget, &mut rng).unwrap();
//! assert_eq!(x.positions().dim(), (200, 2));
//! ```

pub mod classify;
pub mod dp;
pub mod graph;
pub mod harness;
pub mod linalg;
mod scalar;

pub use classify::{chance_error, knn_predict, loocv_error, ClassifyError, ErrorReport, EvalDataset};
pub use dp::{
    calibrate_noise, dp_ase, perturb, sample_symmetric_noise, DpError, NoiseMatrix, NoiseScale, PrivacyBudget,
};
pub use graph::{sample_sbm, AdjacencyMatrix, GraphError, LabeledGraph, SbmParams};
pub use linalg::{
    ase, frobenius_distance, procrustes_align, top_d_eigen, AlignmentResult, EigenPairs, Embedding, LinalgError,
};
pub use scalar::Scalar;

pub type Embedding64 = Embedding<f64>;
pub type Embedding32 = Embedding<f32>;
pub type EigenPairs64 = EigenPairs<f64>;
pub type EigenPairs32 = EigenPairs<f32>;
pub type AlignmentResult64 = AlignmentResult<f64>;
pub type NoiseMatrix64 = NoiseMatrix<f64>;
pub type NoiseMatrix32 = NoiseMatrix<f32>;
pub type EvalDataset64 = EvalDataset<f64>;
