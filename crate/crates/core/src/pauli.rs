//! Sparse Pauli strings and Hamiltonians.
//!
//! A [`PauliString`] stores only its non-identity letters, keyed by qubit
//! index. Dense exports put qubit 0 in the most significant tensor factor,
//! and the same ordering is used by the simulator and the moment-operator
//! code.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Largest register exported by [`PauliString::to_matrix`].
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Product of two letters as `(power of i, letter)`, `None` meaning identity.
    fn mul(self, other: Pauli) -> (u8, Option<Pauli>) {
        use Pauli::*;
        match (self, other) {
            (a, b) if a == b => (0, None),
            (X, Y) => (1, Some(Z)),
            (Y, Z) => (1, Some(X)),
            (Z, X) => (1, Some(Y)),
            (Y, X) => (3, Some(Z)),
            (Z, Y) => (3, Some(X)),
            (X, Z) => (3, Some(Y)),
            _ => unreachable!(),
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// A fourth root of unity, stored as the exponent `k` in `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power_of_i(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power_of_i(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// Tensor product of single-qubit Paulis on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    letters: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            n_qubits,
            letters: BTreeMap::new(),
        }
    }

    pub fn from_letters(
        n_qubits: usize,
        letters: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (q, p) in letters {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
            map.insert(q, p);
        }
        Ok(PauliString {
            n_qubits,
            letters: map,
        })
    }

    /// Single letter on one qubit.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Result<Self> {
        Self::from_letters(n_qubits, [(qubit, p)])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn letters(&self) -> &BTreeMap<usize, Pauli> {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> Option<Pauli> {
        self.letters.get(&qubit).copied()
    }

    pub fn is_trivial(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.letters.keys().copied().collect()
    }

    /// Support as a bitmask with bit `q` set for qubit `q`.
    pub fn support_mask(&self) -> Result<u64> {
        if self.n_qubits > 64 {
            return Err(Error::TooManyQubits {
                n_qubits: self.n_qubits,
                cap: 64,
            });
        }
        Ok(self.letters.keys().fold(0u64, |m, &q| m | (1u64 << q)))
    }

    pub fn is_diagonal(&self) -> bool {
        self.letters.values().all(|&p| p == Pauli::Z)
    }

    fn check_same_size(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &PauliString) -> Result<PhasedString> {
        self.check_same_size(other)?;
        let mut letters = self.letters.clone();
        let mut k = 0u8;
        for (&q, &b) in &other.letters {
            match letters.get(&q).copied() {
                None => {
                    letters.insert(q, b);
                }
                Some(a) => {
                    let (dk, c) = a.mul(b);
                    k += dk;
                    match c {
                        Some(c) => {
                            letters.insert(q, c);
                        }
                        None => {
                            letters.remove(&q);
                        }
                    }
                }
            }
        }
        Ok(PhasedString {
            phase: Phase::from_power_of_i(k),
            string: PauliString {
                n_qubits: self.n_qubits,
                letters,
            },
        })
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_same_size(other)?;
        let clashes = self
            .letters
            .iter()
            .filter(|(q, a)| other.letters.get(q).is_some_and(|b| b != *a))
            .count();
        Ok(clashes % 2 == 0)
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.to_matrix_capped(MAX_DENSE_QUBITS)
    }

    pub fn to_matrix_capped(&self, cap: usize) -> Result<CMatrix> {
        if self.n_qubits > cap {
            return Err(Error::TooManyQubits {
                n_qubits: self.n_qubits,
                cap,
            });
        }
        let mut m = CMatrix::identity(1);
        for q in 0..self.n_qubits {
            let site = match self.letter(q) {
                Some(p) => CMatrix::from_2x2(p.matrix()),
                None => CMatrix::identity(2),
            };
            m = m.kron(&site);
        }
        Ok(m)
    }

    /// Bit masks `(flip, phase)` acting on computational basis indices, with
    /// qubit `q` at bit `n - 1 - q`. `P|x> = i^{#Y} (-1)^{popcount(x & phase)} |x ^ flip>`.
    pub(crate) fn basis_masks(&self) -> (usize, usize, u8) {
        let n = self.n_qubits;
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut ys = 0u8;
        for (&q, &p) in &self.letters {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::X => flip |= bit,
                Pauli::Z => phase |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase |= bit;
                    ys += 1;
                }
            }
        }
        (flip, phase, ys % 4)
    }

    /// Restriction of the string to a set of qubits.
    pub fn restricted(&self, qubits: &[usize]) -> PauliString {
        PauliString {
            n_qubits: self.n_qubits,
            letters: self
                .letters
                .iter()
                .filter(|(q, _)| qubits.contains(q))
                .map(|(&q, &p)| (q, p))
                .collect(),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            let c = self.letter(q).map_or('I', Pauli::as_char);
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses a word over `{I, X, Y, Z}`, qubit 0 leftmost.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::parse(1, "empty Pauli string"));
        }
        let mut letters = BTreeMap::new();
        let mut n = 0;
        for (q, c) in s.chars().enumerate() {
            n = q + 1;
            match c {
                'I' => {}
                _ => match Pauli::from_char(c) {
                    Some(p) => {
                        letters.insert(q, p);
                    }
                    None => return Err(Error::parse(1, format!("invalid Pauli character {c:?}"))),
                },
            }
        }
        Ok(PauliString {
            n_qubits: n,
            letters,
        })
    }
}

/// A Pauli string with a phase in `{+1, -1, +i, -i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasedString {
    pub phase: Phase,
    pub string: PauliString,
}

/// `H = sum_i c_i h_i` with distinct strings and finite nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    pub fn empty(n_qubits: usize) -> Self {
        Hamiltonian {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut h = Hamiltonian::empty(n_qubits);
        for (c, s) in terms {
            h.push(c, s)?;
        }
        Ok(h)
    }

    pub fn single(coefficient: f64, string: PauliString) -> Result<Self> {
        Self::new(string.n_qubits(), vec![(coefficient, string)])
    }

    pub fn push(&mut self, coefficient: f64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: string.n_qubits(),
            });
        }
        if !coefficient.is_finite() || coefficient == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coefficient {coefficient} must be finite and nonzero"
            )));
        }
        if self.terms.iter().any(|(_, s)| *s == string) {
            return Err(Error::InvalidArgument(format!("duplicate term {string}")));
        }
        self.terms.push((coefficient, string));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term-wise sum; coefficients of shared strings are added and dropped if
    /// they cancel.
    pub fn sum(&self, other: &Hamiltonian) -> Result<Hamiltonian> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut terms = self.terms.clone();
        for (c, s) in &other.terms {
            match terms.iter_mut().find(|(_, t)| t == s) {
                Some(entry) => entry.0 += c,
                None => terms.push((*c, s.clone())),
            }
        }
        terms.retain(|(c, _)| *c != 0.0);
        Hamiltonian::new(self.n_qubits, terms)
    }

    /// Parses one `<coefficient> <string>` term per line. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut h = Hamiltonian::empty(n_qubits);
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(coef), Some(word), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no, "expected `<coefficient> <string>`"));
            };
            let c: f64 = coef
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad coefficient {coef:?}")))?;
            let s: PauliString = word.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::parse(line_no, msg),
                other => other,
            })?;
            if s.n_qubits() != n_qubits {
                return Err(Error::parse(
                    line_no,
                    format!("string has {} qubits, expected {n_qubits}", s.n_qubits()),
                ));
            }
            h.push(c, s)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(h)
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, s) in &self.terms {
            writeln!(f, "{c} {s}")?;
        }
        Ok(())
    }
}
