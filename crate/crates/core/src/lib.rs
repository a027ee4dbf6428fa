//! Quantum speed limits for quantumness, skew information and coherence
//! under dephasing Liouvillian dynamics.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod models;
pub mod opalg;
pub mod quad;

pub use bounds::{
    bound_coherence, bound_quantumness, bound_quantumness_reference, bound_skew_information,
    sqrtm_derivative, time_average, BoundKind, BoundOptions, BoundReport, BoundRow, Prefactor,
};
pub use dynamics::{
    adjoint_superoperator, apply_generator, build_superoperator, propagate, Generator, Picture,
    RateSchedule, TimeGrid, Trajectory,
};
pub use error::{QslError, Result};
pub use measures::{
    check_dim_inequality, coherence, l1_coherence, quantumness, skew_information,
    witness_noncommutativity, Basis,
};
pub use opalg::{
    commutator, devectorize, expm, kron, schatten_norm, sqrtm_psd, vectorize, Operator,
    OperatorKind, VecOperator,
};
