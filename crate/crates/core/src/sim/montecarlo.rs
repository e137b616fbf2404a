//! Sampled gradient variances.
//!
//! Every sample draws its randomness from `sample_rng(master_seed, index)`
//! and results are reduced in sample order, so estimates do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use super::circuit::{build_circuit, param_table, GateFamily, ParamInfo, ParamVector};
use super::gradient::{adjoint_gradients, param_shift_grad, Convention};
use super::haar::haar_unitary;
use super::state::{expectation, StateVector, MAX_SIM_QUBITS};
use crate::ansatz::AnsatzLayout;
use crate::design::{fmt_sci, DiffSpec};
use crate::linalg::CMatrix;
use crate::pauli::Hamiltonian;
use crate::stats::{mean_and_std, sample_rng, KahanSum};
use crate::{Error, Result};

/// Sample statistics of one derivative. `variance` is the mean of the squared
/// derivative (the derivative has zero mean in expectation); `std_error` is the
/// standard deviation of the squared derivative over `sqrt(sample_count)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl VarianceEstimate {
    pub fn from_derivatives(derivs: &[f64], seed: u64) -> Self {
        let n = derivs.len();
        let mean = derivs.iter().copied().collect::<KahanSum>().value() / n.max(1) as f64;
        let squares: Vec<f64> = derivs.iter().map(|d| d * d).collect();
        let (variance, sd) = mean_and_std(&squares);
        VarianceEstimate {
            mean,
            variance,
            std_error: sd / (n.max(1) as f64).sqrt(),
            sample_count: n,
            seed,
        }
    }
}

/// What is differentiated: a rotation inside a Haar block (oracle mode), or a
/// parameter of a concrete gate family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffTarget {
    Block(DiffSpec),
    Param(usize),
}

fn check_sim_inputs(layout: &AnsatzLayout, h: &Hamiltonian, samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if layout.n_qubits() > MAX_SIM_QUBITS {
        return Err(Error::TooManyQubits {
            n_qubits: layout.n_qubits(),
            cap: MAX_SIM_QUBITS,
        });
    }
    if h.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_qubits(),
            found: h.n_qubits(),
        });
    }
    Ok(())
}

/// One oracle sample: every block an independent Haar unitary on its qubits,
/// the differentiated block `G_A exp(-iθF) G_B` with `G_A`, `G_B` Haar and `θ`
/// uniform. Returns the `Full`-convention derivative at `θ`.
pub fn oracle_derivative<R: Rng + ?Sized>(
    layout: &AnsatzLayout,
    h: &Hamiltonian,
    diff: &DiffSpec,
    rng: &mut R,
) -> Result<f64> {
    let target = diff.check(layout)?;
    // draw everything up front so the stream layout is fixed
    let mut before: Vec<(Vec<usize>, CMatrix)> = Vec::new();
    let mut after: Vec<(Vec<usize>, CMatrix)> = Vec::new();
    let mut halves = None;
    let mut theta = 0.0;
    for b in layout.blocks() {
        let dim = 1 << b.qubits.len();
        if b.id == target.id {
            let g_b = haar_unitary(dim, rng);
            theta = rng.gen_range(0.0..TAU);
            let g_a = haar_unitary(dim, rng);
            halves = Some((g_b, g_a));
        } else {
            let u = haar_unitary(dim, rng);
            if halves.is_none() {
                before.push((b.qubits.clone(), u));
            } else {
                after.push((b.qubits.clone(), u));
            }
        }
    }
    let (g_b, g_a) = halves.expect("target block is in the layout");
    let mut psi = StateVector::zero(layout.n_qubits())?;
    for (q, u) in &before {
        psi.apply_matrix(q, u);
    }
    psi.apply_matrix(&target.qubits, &g_b);
    let energy = |angle: f64| -> Result<f64> {
        let mut s = psi.clone();
        s.apply_pauli_rotation(&diff.generator, angle);
        s.apply_matrix(&target.qubits, &g_a);
        for (q, u) in &after {
            s.apply_matrix(q, u);
        }
        expectation(&s, h)
    };
    Ok(energy(theta + FRAC_PI_4)? - energy(theta - FRAC_PI_4)?)
}

/// Sampled variance of one derivative.
///
/// With `family = haar4` and a [`DiffTarget::Block`] this is the oracle for
/// the exact 2-design engine (`Full` convention). For parametric families and
/// a [`DiffTarget::Param`], all angles are uniform in `[0, 2π)` and the
/// derivative is the `Half`-convention parameter-shift value.
pub fn mc_variance(
    layout: &AnsatzLayout,
    family: GateFamily,
    h: &Hamiltonian,
    target: &DiffTarget,
    samples: usize,
    master_seed: u64,
) -> Result<VarianceEstimate> {
    check_sim_inputs(layout, h, samples)?;
    let derivs: Vec<f64> = match (family, target) {
        (GateFamily::Haar4, DiffTarget::Block(diff)) => {
            diff.check(layout)?;
            (0..samples as u64)
                .into_par_iter()
                .map(|s| oracle_derivative(layout, h, diff, &mut sample_rng(master_seed, s)))
                .collect::<Result<_>>()?
        }
        (GateFamily::Haar4, DiffTarget::Param(_)) => {
            return Err(Error::InvalidDiffSpec(
                "haar4 blocks have no parameters".into(),
            ))
        }
        (_, DiffTarget::Block(_)) => {
            return Err(Error::InvalidDiffSpec(
                "block targets need the haar4 family; use a parameter index".into(),
            ))
        }
        (family, DiffTarget::Param(index)) => {
            let n_params = layout.blocks().len() * family.param_count();
            if *index >= n_params {
                return Err(Error::InvalidDiffSpec(format!(
                    "parameter {index} out of range ({n_params} parameters)"
                )));
            }
            (0..samples as u64)
                .into_par_iter()
                .map(|s| {
                    let params =
                        ParamVector::random(layout, family, &mut sample_rng(master_seed, s));
                    param_shift_grad(layout, family, &params, h, *index, Convention::Half)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(VarianceEstimate::from_derivatives(&derivs, master_seed))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamVariance {
    pub info: ParamInfo,
    pub estimate: VarianceEstimate,
}

/// Sampled variances for every parameter of a parametric family at once
/// (`Half` convention). Uses the same parameter draws as [`mc_variance`] for a
/// given seed, so runs with different Hamiltonians share samples.
pub fn mc_param_variances(
    layout: &AnsatzLayout,
    family: GateFamily,
    h: &Hamiltonian,
    samples: usize,
    master_seed: u64,
) -> Result<Vec<ParamVariance>> {
    check_sim_inputs(layout, h, samples)?;
    if family == GateFamily::Haar4 {
        return Err(Error::InvalidArgument(
            "haar4 blocks have no parameters".into(),
        ));
    }
    if !family.slots_are_rotations() {
        return Err(Error::UnsupportedGateSlot {
            family: family.name().into(),
            index: 0,
        });
    }
    let table = param_table(layout, family);
    let rows: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let params = ParamVector::random(layout, family, &mut sample_rng(master_seed, s));
            let circuit = build_circuit(layout, family, &params)?;
            adjoint_gradients(&circuit, h, params.len())
        })
        .collect::<Result<_>>()?;
    Ok(table
        .into_iter()
        .map(|info| {
            let column: Vec<f64> = rows.iter().map(|r| r[info.index]).collect();
            ParamVariance {
                info,
                estimate: VarianceEstimate::from_derivatives(&column, master_seed),
            }
        })
        .collect())
}

/// Arithmetic mean of the per-parameter variances within each block.
pub fn block_averages(rows: &[ParamVariance]) -> BTreeMap<usize, f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.info.block_id)
            .or_default()
            .push(r.estimate.variance);
    }
    groups
        .into_iter()
        .map(|(id, v)| {
            (
                id,
                v.iter().copied().collect::<KahanSum>().value() / v.len() as f64,
            )
        })
        .collect()
}

/// `param_index,block_id,layer,slot,variance,std_error,samples,seed`.
pub fn param_variances_csv(rows: &[ParamVariance]) -> String {
    let mut out = String::from("param_index,block_id,layer,slot,variance,std_error,samples,seed\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.info.index,
            r.info.block_id,
            r.info.layer,
            r.info.slot,
            fmt_sci(r.estimate.variance),
            fmt_sci(r.estimate.std_error),
            r.estimate.sample_count,
            r.estimate.seed
        );
    }
    out
}
