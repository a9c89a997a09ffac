//! Genuine multipartite correlations along quantum trajectories of open
//! systems.
//!
//! The crate provides pure and mixed states on qubit registers and on the
//! permutation-symmetric (Dicke) sector, Lindblad master equations with a
//! reference integrator, jump and homodyne trajectory unravelings with
//! deterministic parallel ensembles, and the bipartition-entropy measure of
//! genuine correlations.

pub mod correlations;
pub mod dicke;
pub mod error;
pub mod lindblad;
pub mod models;
pub mod state;
pub mod trajectory;

pub use nalgebra::{DMatrix, DVector};

pub type C64 = nalgebra::Complex<f64>;

pub use correlations::{
    average_genuine_correlations, genuine_correlations, genuine_correlations_dicke,
    genuine_correlations_qubits, CorrelationSample, CorrelationSeries, DickeCorrelator,
};
pub use error::{Error, Result};
pub use lindblad::{
    apply_unraveling, integrate_master, LindbladSpec, MasterSolution, UnravelingTransform,
};
pub use state::{von_neumann_entropy, Basis, Bipartition, DensityOperator, StateVector};
pub use trajectory::{Method, TrajectoryConfig, TrajectoryRecord};
