use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::pauli::{Hamiltonian, PauliString, Phase};
use crate::stats::KahanSum;
use crate::{Error, Result};

pub const MAX_SIM_QUBITS: usize = 14;
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes of an `n`-qubit pure state. Qubit 0 is the most significant
/// bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument(
                "state needs at least one qubit".into(),
            ));
        }
        if n_qubits > MAX_SIM_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                cap: MAX_SIM_QUBITS,
            });
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range"
            )));
        }
        s.amps[0] = ZERO;
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() < 2 || amps.len() != 1 << n {
            return Err(Error::InvalidArgument(
                "amplitude count must be a power of two".into(),
            ));
        }
        if n > MAX_SIM_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits: n,
                cap: MAX_SIM_QUBITS,
            });
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    #[inline]
    fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Applies a `2^k x 2^k` matrix to `qubits` (first listed qubit most
    /// significant in the matrix index). Indices are not checked.
    pub(crate) fn apply_matrix(&mut self, qubits: &[usize], m: &CMatrix) {
        match qubits {
            [q] => self.apply_1q(*q, m),
            [a, b] => self.apply_2q(*a, *b, m),
            _ => self.apply_kq(qubits, m),
        }
    }

    fn apply_1q(&mut self, q: usize, m: &CMatrix) {
        let bit = self.bit(q);
        let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | bit];
            self.amps[i] = m00 * a0 + m01 * a1;
            self.amps[i | bit] = m10 * a0 + m11 * a1;
        }
    }

    fn apply_2q(&mut self, a: usize, b: usize, m: &CMatrix) {
        let (ba, bb) = (self.bit(a), self.bit(b));
        let idx = [0, bb, ba, ba | bb];
        let mut loc = [ZERO; 4];
        for i in 0..self.amps.len() {
            if i & (ba | bb) != 0 {
                continue;
            }
            for (l, off) in loc.iter_mut().zip(idx) {
                *l = self.amps[i | off];
            }
            for (r, off) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for (c, l) in loc.iter().enumerate() {
                    acc += m.get(r, c) * l;
                }
                self.amps[i | off] = acc;
            }
        }
    }

    fn apply_kq(&mut self, qubits: &[usize], m: &CMatrix) {
        let k = qubits.len();
        let dim = 1 << k;
        let offsets: Vec<usize> = (0..dim)
            .map(|l| {
                (0..k)
                    .filter(|j| l >> (k - 1 - j) & 1 == 1)
                    .fold(0, |acc, j| acc | self.bit(qubits[j]))
            })
            .collect();
        let mask = offsets[dim - 1];
        let mut loc = vec![ZERO; dim];
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            for (l, off) in loc.iter_mut().zip(&offsets) {
                *l = self.amps[i | off];
            }
            let out = m.matvec(&loc);
            for (v, off) in out.into_iter().zip(&offsets) {
                self.amps[i | off] = v;
            }
        }
    }

    /// Checked gate application.
    pub fn apply(&mut self, qubits: &[usize], m: &CMatrix) -> Result<()> {
        let dim = 1usize << qubits.len();
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.rows(),
            });
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(Error::InvalidArgument(format!("qubit {q} listed twice")));
            }
        }
        let dev = m.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation: dev });
        }
        self.apply_matrix(qubits, m);
        Ok(())
    }

    /// `P|psi>` for a Pauli string on the full register.
    pub fn apply_pauli(&self, p: &PauliString) -> Vec<Complex64> {
        let (flip, phase_mask, ys) = p.basis_masks();
        let global = Phase::from_power_of_i(ys).to_complex();
        let mut out = vec![ZERO; self.amps.len()];
        for (x, &a) in self.amps.iter().enumerate() {
            let sign = if (x & phase_mask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[x ^ flip] = a * global * sign;
        }
        out
    }

    /// `<psi|P|psi>`, real for Hermitian `P`.
    pub fn pauli_expectation(&self, p: &PauliString) -> f64 {
        let (flip, phase_mask, ys) = p.basis_masks();
        let global = Phase::from_power_of_i(ys).to_complex();
        let mut acc = ZERO;
        for (x, &a) in self.amps.iter().enumerate() {
            let sign = if (x & phase_mask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            acc += self.amps[x ^ flip].conj() * a * sign;
        }
        (acc * global).re
    }

    /// `H|psi>`.
    pub fn apply_hamiltonian(&self, h: &Hamiltonian) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.amps.len()];
        for (c, s) in h.terms() {
            for (o, v) in out.iter_mut().zip(self.apply_pauli(s)) {
                *o += v * c;
            }
        }
        out
    }

    /// `cos(phi) psi - i sin(phi) F psi`, i.e. `exp(-i phi F)` for an involutory Pauli `F`.
    pub(crate) fn apply_pauli_rotation(&mut self, f: &PauliString, phi: f64) {
        let fpsi = self.apply_pauli(f);
        let (c, s) = (phi.cos(), phi.sin());
        for (a, b) in self.amps.iter_mut().zip(fpsi) {
            *a = *a * c + b * Complex64::new(0.0, -s);
        }
    }
}

/// Applies a two-qubit unitary to the ordered pair `(a, b)`, `a` being the
/// more significant qubit of the 4x4 index.
pub fn apply_two_qubit(
    state: &StateVector,
    unitary: &CMatrix,
    pair: (usize, usize),
) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(&[pair.0, pair.1], unitary)?;
    Ok(out)
}

/// `<psi|H|psi>`.
pub fn expectation(state: &StateVector, h: &Hamiltonian) -> Result<f64> {
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            found: h.n_qubits(),
        });
    }
    Ok(h.terms()
        .iter()
        .map(|(c, s)| c * state.pauli_expectation(s))
        .collect::<KahanSum>()
        .value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn swap() -> CMatrix {
        CMatrix::from_fn(4, 4, |r, k| c(([0, 2, 1, 3][r] == k) as u8 as f64))
    }

    #[test]
    fn identity_swap_and_cz() {
        let s = StateVector::basis(2, 0b01).unwrap();
        assert_eq!(
            apply_two_qubit(&s, &CMatrix::identity(4), (0, 1)).unwrap(),
            s
        );
        let swapped = apply_two_qubit(&s, &swap(), (0, 1)).unwrap();
        assert_eq!(swapped, StateVector::basis(2, 0b10).unwrap());

        let cz = CMatrix::diag(&[c(1.0), c(1.0), c(1.0), c(-1.0)]);
        let s = StateVector::basis(2, 0b11).unwrap();
        let out = apply_two_qubit(&s, &cz, (0, 1)).unwrap();
        assert_eq!(out.amplitudes()[3], c(-1.0));
    }

    #[test]
    fn pair_order_matters_for_cnot() {
        let cnot = CMatrix::from_fn(4, 4, |r, k| c(([0, 1, 3, 2][r] == k) as u8 as f64));
        // control on qubit 2, target qubit 0 of a 3-qubit register: |001> -> |101>
        let s = StateVector::basis(3, 0b001).unwrap();
        let out = apply_two_qubit(&s, &cnot, (2, 0)).unwrap();
        assert_eq!(out, StateVector::basis(3, 0b101).unwrap());
    }

    #[test]
    fn rejects_bad_gates() {
        let s = StateVector::zero(2).unwrap();
        let bad = CMatrix::diag(&[c(1.0), c(1.0), c(1.0), c(2.0)]);
        assert!(matches!(
            apply_two_qubit(&s, &bad, (0, 1)),
            Err(Error::NonUnitary { .. })
        ));
        assert!(apply_two_qubit(&s, &swap(), (0, 2)).is_err());
        assert!(apply_two_qubit(&s, &swap(), (1, 1)).is_err());
        assert!(StateVector::zero(15).is_err());
    }

    #[test]
    fn expectations() {
        let z0 = Hamiltonian::parse("1.0 ZII", 3).unwrap();
        let x0 = Hamiltonian::parse("1.0 XII", 3).unwrap();
        let s = StateVector::zero(3).unwrap();
        assert_eq!(expectation(&s, &z0).unwrap(), 1.0);
        assert_eq!(expectation(&s, &x0).unwrap(), 0.0);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(vec![c(r), c(0.0), c(0.0), c(r)]).unwrap();
        let zz = Hamiltonian::parse("1.0 ZZ", 2).unwrap();
        assert!((expectation(&bell, &zz).unwrap() - 1.0).abs() < 1e-15);
        let yy = Hamiltonian::parse("2.0 YY\n1.0 XX", 2).unwrap();
        assert!((expectation(&bell, &yy).unwrap() - (-2.0 + 1.0)).abs() < 1e-15);

        assert!(expectation(&s, &zz).is_err());
    }

    #[test]
    fn pauli_action_matches_dense_matrix() {
        let amps: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05))
            .collect();
        let s = StateVector::from_amplitudes(amps.clone()).unwrap();
        for word in ["XYZ", "IYI", "ZZX", "YYY"] {
            let p: PauliString = word.parse().unwrap();
            let dense = p.to_matrix().unwrap().matvec(&amps);
            let fast = s.apply_pauli(&p);
            for (a, b) in dense.iter().zip(&fast) {
                assert!((a - b).norm() < 1e-14, "{word}");
            }
        }
    }

    #[test]
    fn general_gate_path_agrees_with_two_qubit_path() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = CMatrix::from_vec(2, 2, vec![c(h), c(h), c(h), c(-h)]);
        let u = had.kron(&CMatrix::identity(2)).matmul(&swap());
        let mut a = StateVector::basis(3, 0b011).unwrap();
        let mut b = a.clone();
        a.apply_2q(2, 0, &u);
        b.apply_kq(&[2, 0], &u);
        assert_eq!(a, b);
    }
}
