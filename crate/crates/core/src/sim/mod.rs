//! Dense statevector simulation and the Monte-Carlo gradient-variance oracle.

mod circuit;
mod gradient;
mod haar;
mod montecarlo;
mod state;

pub use circuit::{
    build_circuit, param_table, Circuit, Gate, GateFamily, GateOp, ParamInfo, ParamVector,
};
pub use gradient::{adjoint_gradients, param_shift_grad, Convention};
pub use haar::haar_unitary;
pub use montecarlo::{
    block_averages, mc_param_variances, mc_variance, oracle_derivative, param_variances_csv,
    DiffTarget, ParamVariance, VarianceEstimate,
};
pub use state::{apply_two_qubit, expectation, StateVector, MAX_SIM_QUBITS, UNITARY_TOL};
