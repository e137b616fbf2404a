use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::circuit::{build_circuit, Circuit, GateFamily, ParamVector};
use super::state::StateVector;
use crate::ansatz::AnsatzLayout;
use crate::pauli::Hamiltonian;
use crate::{Error, Result};

/// Which angle the derivative is taken with respect to.
///
/// `Half`: gates are `exp(-iθP/2)`, derivative `(E(θ+π/2) - E(θ-π/2)) / 2`.
/// `Full`: gates are `exp(-iφF)`, derivative `E(φ+π/4) - E(φ-π/4)`. For a
/// stored half-angle `θ = 2φ` this is twice the `Half` value, so variances
/// differ by a factor of four.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Half,
    Full,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Half => "half",
            Convention::Full => "full",
        }
    }
}

/// Parameter-shift derivative of `<H>` with respect to one angle.
pub fn param_shift_grad(
    layout: &AnsatzLayout,
    family: GateFamily,
    params: &ParamVector,
    h: &Hamiltonian,
    index: usize,
    convention: Convention,
) -> Result<f64> {
    if index >= params.len() {
        return Err(Error::InvalidArgument(format!(
            "parameter index {index} out of range ({} parameters)",
            params.len()
        )));
    }
    if !family.slots_are_rotations() {
        return Err(Error::UnsupportedGateSlot {
            family: family.name().into(),
            index,
        });
    }
    let energy_at = |shift: f64| -> Result<f64> {
        let mut p = params.clone();
        p.0[index] += shift;
        build_circuit(layout, family, &p)?.energy(h)
    };
    let diff = energy_at(FRAC_PI_2)? - energy_at(-FRAC_PI_2)?;
    Ok(match convention {
        Convention::Half => diff / 2.0,
        Convention::Full => diff,
    })
}

/// Derivatives of `<H>` with respect to every rotation angle in one
/// forward/backward sweep (`Half` convention). Entry `i` belongs to
/// parameter `i`; non-rotation parameters stay `0`.
///
/// For a gate `exp(-iθP/2)` the derivative is `Im <λ|P|φ>`, with `φ` the state
/// just after the gate and `λ` the back-propagated `H|ψ>`.
pub fn adjoint_gradients(circuit: &Circuit, h: &Hamiltonian, n_params: usize) -> Result<Vec<f64>> {
    if h.n_qubits() != circuit.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits,
            found: h.n_qubits(),
        });
    }
    let mut phi = circuit.run()?;
    let mut lambda = StateVector::from_amplitudes(phi.apply_hamiltonian(h))?;
    let mut grads = vec![0.0; n_params];
    for g in circuit.gates.iter().rev() {
        if let (Some(idx), Some(p)) = (g.param, &g.generator) {
            let pphi = phi.apply_pauli(p);
            let overlap: num_complex::Complex64 = lambda
                .amplitudes()
                .iter()
                .zip(&pphi)
                .map(|(l, x)| l.conj() * x)
                .sum();
            grads[idx] += overlap.im;
        }
        let inv = g.matrix.adjoint();
        phi.apply_matrix(&g.qubits, &inv);
        lambda.apply_matrix(&g.qubits, &inv);
    }
    Ok(grads)
}
