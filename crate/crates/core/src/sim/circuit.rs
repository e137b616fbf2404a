//! Concrete two-qubit gate families and circuit assembly.
//!
//! Rotations follow `R_P(θ) = exp(-iθP/2)`. `U3(θ, φ, λ) = R_Z(φ) R_Y(θ) R_Z(λ)`
//! is expanded into its three rotations so each angle is its own parameter.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::ansatz::AnsatzLayout;
use crate::linalg::CMatrix;
use crate::pauli::{Hamiltonian, Pauli, PauliString};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFamily {
    XzZz,
    U3Cnot,
    RyCz,
    NumberConserving,
    Cartan,
    Haar4,
}

impl GateFamily {
    pub const ALL: [GateFamily; 6] = [
        GateFamily::XzZz,
        GateFamily::U3Cnot,
        GateFamily::RyCz,
        GateFamily::NumberConserving,
        GateFamily::Cartan,
        GateFamily::Haar4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateFamily::XzZz => "xz_zz",
            GateFamily::U3Cnot => "u3_cnot",
            GateFamily::RyCz => "ry_cz",
            GateFamily::NumberConserving => "number_conserving",
            GateFamily::Cartan => "cartan",
            GateFamily::Haar4 => "haar4",
        }
    }

    /// Angles per block.
    pub fn param_count(self) -> usize {
        match self {
            GateFamily::XzZz => 5,
            GateFamily::U3Cnot => 12,
            GateFamily::RyCz => 4,
            GateFamily::NumberConserving => 2,
            GateFamily::Cartan => 15,
            GateFamily::Haar4 => 0,
        }
    }

    /// Whether every slot is a single Pauli rotation (parameter-shift applies).
    pub fn slots_are_rotations(self) -> bool {
        !matches!(self, GateFamily::NumberConserving)
    }

    /// Gates of one block on `(a, b)`, parameters read from
    /// `params[offset..offset + param_count]`.
    fn block_gates(
        self,
        n_qubits: usize,
        block_id: usize,
        (a, b): (usize, usize),
        params: &[f64],
        offset: usize,
    ) -> Result<Vec<Gate>> {
        let mut g = Vec::new();
        let rot = |g: &mut Vec<Gate>, op: GateOp, qubits: Vec<usize>, slot: usize| {
            let idx = offset + slot;
            g.push(Gate::rotation(
                n_qubits,
                block_id,
                op,
                qubits,
                idx,
                params[idx],
            ));
        };
        let u3 = |g: &mut Vec<Gate>, q: usize, base: usize| {
            let idx = |s: usize| offset + base + s;
            g.push(Gate::rotation(
                n_qubits,
                block_id,
                GateOp::Rz,
                vec![q],
                idx(2),
                params[idx(2)],
            ));
            g.push(Gate::rotation(
                n_qubits,
                block_id,
                GateOp::Ry,
                vec![q],
                idx(0),
                params[idx(0)],
            ));
            g.push(Gate::rotation(
                n_qubits,
                block_id,
                GateOp::Rz,
                vec![q],
                idx(1),
                params[idx(1)],
            ));
        };
        match self {
            GateFamily::XzZz => {
                rot(&mut g, GateOp::Rz, vec![a], 0);
                rot(&mut g, GateOp::Rz, vec![b], 1);
                rot(&mut g, GateOp::Rzz, vec![a, b], 2);
                rot(&mut g, GateOp::Rx, vec![a], 3);
                rot(&mut g, GateOp::Rx, vec![b], 4);
            }
            GateFamily::U3Cnot => {
                u3(&mut g, a, 0);
                u3(&mut g, b, 3);
                g.push(Gate::fixed(block_id, GateOp::Cnot, vec![a, b], cnot()));
                u3(&mut g, a, 6);
                u3(&mut g, b, 9);
            }
            GateFamily::RyCz => {
                rot(&mut g, GateOp::Ry, vec![a], 0);
                rot(&mut g, GateOp::Ry, vec![b], 1);
                g.push(Gate::fixed(block_id, GateOp::Cz, vec![a, b], cz()));
                rot(&mut g, GateOp::Ry, vec![a], 2);
                rot(&mut g, GateOp::Ry, vec![b], 3);
            }
            GateFamily::NumberConserving => {
                let m = number_conserving(params[offset], params[offset + 1]);
                g.push(Gate::fixed(
                    block_id,
                    GateOp::NumberConserving,
                    vec![a, b],
                    m,
                ));
            }
            GateFamily::Cartan => {
                u3(&mut g, a, 0);
                u3(&mut g, b, 3);
                rot(&mut g, GateOp::Rxx, vec![a, b], 6);
                rot(&mut g, GateOp::Ryy, vec![a, b], 7);
                rot(&mut g, GateOp::Rzz, vec![a, b], 8);
                u3(&mut g, a, 9);
                u3(&mut g, b, 12);
            }
            GateFamily::Haar4 => {
                return Err(Error::InvalidArgument(
                    "haar4 blocks are sampled, not built from parameters".into(),
                ))
            }
        }
        Ok(g)
    }

    /// The 4x4 block unitary for one parameter vector.
    pub fn block_unitary(self, params: &[f64]) -> Result<CMatrix> {
        if params.len() != self.param_count() {
            return Err(Error::ParamLength {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        let gates = self.block_gates(2, 0, (0, 1), params, 0)?;
        let mut u = CMatrix::identity(4);
        for gate in &gates {
            let local = match gate.qubits[..] {
                [0] => gate.matrix.kron(&CMatrix::identity(2)),
                [1] => CMatrix::identity(2).kron(&gate.matrix),
                _ => gate.matrix.clone(),
            };
            u = local.matmul(&u);
        }
        Ok(u)
    }

    /// Uniform angles in `[0, 2π)` for one block.
    pub fn random_params<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        (0..self.param_count())
            .map(|_| rng.gen_range(0.0..TAU))
            .collect()
    }
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown gate family {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOp {
    Rx,
    Ry,
    Rz,
    Rxx,
    Ryy,
    Rzz,
    Cnot,
    Cz,
    NumberConserving,
    Unitary,
}

impl GateOp {
    pub fn name(self) -> &'static str {
        match self {
            GateOp::Rx => "RX",
            GateOp::Ry => "RY",
            GateOp::Rz => "RZ",
            GateOp::Rxx => "RXX",
            GateOp::Ryy => "RYY",
            GateOp::Rzz => "RZZ",
            GateOp::Cnot => "CNOT",
            GateOp::Cz => "CZ",
            GateOp::NumberConserving => "NC",
            GateOp::Unitary => "U",
        }
    }

    fn pauli(self) -> Option<Pauli> {
        match self {
            GateOp::Rx | GateOp::Rxx => Some(Pauli::X),
            GateOp::Ry | GateOp::Ryy => Some(Pauli::Y),
            GateOp::Rz | GateOp::Rzz => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub block_id: usize,
    pub op: GateOp,
    pub qubits: Vec<usize>,
    /// Global parameter index driving this gate, if it is a rotation.
    pub param: Option<usize>,
    pub matrix: CMatrix,
    /// Rotation generator on the full register.
    pub generator: Option<PauliString>,
}

impl Gate {
    fn rotation(
        n_qubits: usize,
        block_id: usize,
        op: GateOp,
        qubits: Vec<usize>,
        param: usize,
        theta: f64,
    ) -> Gate {
        let p = op.pauli().expect("rotation op");
        let generator = PauliString::from_letters(n_qubits, qubits.iter().map(|&q| (q, p)))
            .expect("gate qubits in range");
        let matrix = rotation_matrix(p, qubits.len(), theta);
        Gate {
            block_id,
            op,
            qubits,
            param: Some(param),
            matrix,
            generator: Some(generator),
        }
    }

    fn fixed(block_id: usize, op: GateOp, qubits: Vec<usize>, matrix: CMatrix) -> Gate {
        Gate {
            block_id,
            op,
            qubits,
            param: None,
            matrix,
            generator: None,
        }
    }

    pub fn unitary(block_id: usize, qubits: Vec<usize>, matrix: CMatrix) -> Gate {
        Gate::fixed(block_id, GateOp::Unitary, qubits, matrix)
    }
}

/// `exp(-iθ P^{⊗k} / 2)`.
fn rotation_matrix(p: Pauli, k: usize, theta: f64) -> CMatrix {
    let single = CMatrix::from_2x2(p.matrix());
    let mut pk = CMatrix::identity(1);
    for _ in 0..k {
        pk = pk.kron(&single);
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    &CMatrix::identity(1 << k).scale(Complex64::new(c, 0.0)) + &pk.scale(Complex64::new(0.0, -s))
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn cnot() -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| real(([0, 1, 3, 2][r] == c) as u8 as f64))
}

fn cz() -> CMatrix {
    CMatrix::diag(&[real(1.0), real(1.0), real(1.0), real(-1.0)])
}

/// Particle-number conserving block acting on the `|01>, |10>` subspace.
pub(crate) fn number_conserving(theta1: f64, theta2: f64) -> CMatrix {
    let (c, s) = (theta1.cos(), theta1.sin());
    let mut m = CMatrix::zeros(4, 4);
    m.set(0, 0, real(1.0));
    m.set(1, 1, real(c));
    m.set(1, 2, Complex64::from_polar(s, theta2));
    m.set(2, 1, Complex64::from_polar(s, -theta2));
    m.set(2, 2, real(-c));
    m.set(3, 3, real(1.0));
    m
}

/// Flat parameter list, blocks in application order, slots in family order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn random<R: Rng + ?Sized>(
        layout: &AnsatzLayout,
        family: GateFamily,
        rng: &mut R,
    ) -> ParamVector {
        let n = layout.blocks().len() * family.param_count();
        ParamVector((0..n).map(|_| rng.gen_range(0.0..TAU)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamInfo {
    pub index: usize,
    pub block_id: usize,
    pub layer: usize,
    pub slot: usize,
}

pub fn param_table(layout: &AnsatzLayout, family: GateFamily) -> Vec<ParamInfo> {
    let per = family.param_count();
    layout
        .blocks()
        .iter()
        .enumerate()
        .flat_map(|(bi, b)| {
            (0..per).map(move |slot| ParamInfo {
                index: bi * per + slot,
                block_id: b.id,
                layer: b.layer,
                slot,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn run(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n_qubits)?;
        for g in &self.gates {
            s.apply_matrix(&g.qubits, &g.matrix);
        }
        Ok(s)
    }

    pub fn energy(&self, h: &Hamiltonian) -> Result<f64> {
        super::state::expectation(&self.run()?, h)
    }

    pub fn gate_names(&self) -> Vec<&'static str> {
        self.gates.iter().map(|g| g.op.name()).collect()
    }
}

/// Gates of the whole ansatz in application order.
pub fn build_circuit(
    layout: &AnsatzLayout,
    family: GateFamily,
    params: &ParamVector,
) -> Result<Circuit> {
    let expected = layout.blocks().len() * family.param_count();
    if params.len() != expected {
        return Err(Error::ParamLength {
            expected,
            found: params.len(),
        });
    }
    let mut gates = Vec::new();
    for (bi, b) in layout.blocks().iter().enumerate() {
        let [a, c] = b.qubits[..] else {
            return Err(Error::InvalidArgument(format!(
                "family {family} needs two-qubit blocks, block {} has {}",
                b.id,
                b.qubits.len()
            )));
        };
        gates.extend(family.block_gates(
            layout.n_qubits(),
            b.id,
            (a, c),
            &params.0,
            bi * family.param_count(),
        )?);
    }
    Ok(Circuit {
        n_qubits: layout.n_qubits(),
        gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::Topology;
    use crate::stats::sample_rng;

    fn is_identity_up_to_phase(u: &CMatrix) -> bool {
        let p = u.get(0, 0);
        (p.norm() - 1.0).abs() < 1e-12 && u.approx_eq(&CMatrix::identity(4).scale(p), 1e-12)
    }

    #[test]
    fn families_are_unitary() {
        let mut rng = sample_rng(5, 0);
        for f in GateFamily::ALL
            .into_iter()
            .filter(|f| *f != GateFamily::Haar4)
        {
            for _ in 0..100 {
                let u = f.block_unitary(&f.random_params(&mut rng)).unwrap();
                assert!(u.is_unitary(1e-10), "{f}");
            }
        }
    }

    #[test]
    fn zero_angles_give_identity() {
        for f in [GateFamily::Cartan, GateFamily::XzZz] {
            let u = f.block_unitary(&vec![0.0; f.param_count()]).unwrap();
            assert!(is_identity_up_to_phase(&u), "{f}");
        }
    }

    #[test]
    fn number_conserving_at_zero_mixing_angle() {
        for t2 in [0.0, 1.3, 4.0] {
            let u = GateFamily::NumberConserving
                .block_unitary(&[0.0, t2])
                .unwrap();
            let want = CMatrix::diag(&[real(1.0), real(1.0), real(-1.0), real(1.0)]);
            assert!(u.approx_eq(&want, 1e-15));
        }
    }

    #[test]
    fn ry_cz_gate_list() {
        let layout = AnsatzLayout::checkerboard(2, 1, Topology::Line).unwrap();
        let c = build_circuit(&layout, GateFamily::RyCz, &ParamVector(vec![0.1; 4])).unwrap();
        assert_eq!(c.gate_names(), vec!["RY", "RY", "CZ", "RY", "RY"]);
        let params: Vec<Option<usize>> = c.gates.iter().map(|g| g.param).collect();
        assert_eq!(params, vec![Some(0), Some(1), None, Some(2), Some(3)]);
    }

    #[test]
    fn u3_expansion_matches_euler_product() {
        let (t, p, l) = (0.3, 1.1, -0.7);
        let mut params = vec![0.0; 12];
        params[..3].copy_from_slice(&[t, p, l]);
        let u = GateFamily::U3Cnot.block_unitary(&params).unwrap();
        let rz = |a: f64| rotation_matrix(Pauli::Z, 1, a);
        let ry = |a: f64| rotation_matrix(Pauli::Y, 1, a);
        let u3 = rz(p).matmul(&ry(t)).matmul(&rz(l));
        let want = cnot().matmul(&u3.kron(&CMatrix::identity(2)));
        assert!(u.approx_eq(&want, 1e-14));
    }

    #[test]
    fn rotation_convention() {
        let theta = 0.8;
        let r = rotation_matrix(Pauli::X, 1, theta);
        assert!((r.get(0, 0) - real((theta / 2.0).cos())).norm() < 1e-15);
        assert!((r.get(0, 1) - Complex64::new(0.0, -(theta / 2.0).sin())).norm() < 1e-15);
    }

    #[test]
    fn param_table_and_lengths() {
        let layout = AnsatzLayout::checkerboard(4, 2, Topology::Ring).unwrap();
        let t = param_table(&layout, GateFamily::Cartan);
        assert_eq!(t.len(), 4 * 15);
        assert_eq!(
            t[16],
            ParamInfo {
                index: 16,
                block_id: 2,
                layer: 1,
                slot: 1
            }
        );
        assert!(matches!(
            build_circuit(&layout, GateFamily::Cartan, &ParamVector(vec![0.0; 3])),
            Err(Error::ParamLength {
                expected: 60,
                found: 3
            })
        ));
        assert_eq!("cartan".parse::<GateFamily>().unwrap(), GateFamily::Cartan);
        assert!("cartan2".parse::<GateFamily>().is_err());
    }

    #[test]
    fn circuit_matches_block_unitaries() {
        let layout = AnsatzLayout::checkerboard(4, 3, Topology::Ring).unwrap();
        let mut rng = sample_rng(9, 0);
        for f in [
            GateFamily::Cartan,
            GateFamily::XzZz,
            GateFamily::NumberConserving,
        ] {
            let params = ParamVector::random(&layout, f, &mut rng);
            let direct = build_circuit(&layout, f, &params).unwrap().run().unwrap();
            let mut s = StateVector::zero(4).unwrap();
            for (bi, b) in layout.blocks().iter().enumerate() {
                let per = f.param_count();
                let u = f
                    .block_unitary(&params.0[bi * per..(bi + 1) * per])
                    .unwrap();
                s.apply(&b.qubits, &u).unwrap();
            }
            assert!((direct.inner(&s).norm() - 1.0).abs() < 1e-12);
            assert!((direct.norm() - 1.0).abs() < 1e-10);
        }
    }
}
