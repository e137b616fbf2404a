//! Exact gradient variances for ansätze whose blocks are local 2-designs.
//!
//! Averaging `(dE/dθ)^2` over independent 2-design blocks turns each block into
//! a mixing superoperator acting on two copies of the Hamiltonian. Mixers
//! replace the letters inside their domain by a uniform combination of all
//! nontrivial letters, so after the first mixer touches a qubit only the
//! *support* of each doubled Pauli string matters. The engine therefore
//! tracks a distribution over support bitmasks instead of `4^n` strings.
//!
//! Blocks are processed in reverse application order (Heisenberg picture).
//! The differentiated block contributes mixer, commutator, mixer; the
//! commutator removes strings that miss the block and rescales the rest by
//! `2 * 4^|Y| / (4^|Y| - 1)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::ansatz::{AnsatzLayout, Block};
use crate::pauli::{Hamiltonian, Pauli, PauliString};
use crate::stats::KahanSum;
use crate::{Error, Result};

/// Float weights below this are dropped after each step.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Scalar used for pattern weights: `f64` for speed, [`BigRational`] for exact
/// arithmetic on small instances.
pub trait Weight: Clone + Zero + Add<Output = Self> + for<'a> Mul<&'a Self, Output = Self> {
    fn ratio(num: u64, den: u64) -> Self;
    fn from_f64(x: f64) -> Option<Self>;
    fn negligible(&self) -> bool;
}

impl Weight for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }

    fn negligible(&self) -> bool {
        self.abs() < PRUNE_THRESHOLD
    }
}

impl Weight for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn negligible(&self) -> bool {
        self.is_zero()
    }
}

/// Weights of doubled Pauli strings grouped by exact support. Letters on each
/// supported qubit are uniform over `{X, Y, Z}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportDistribution<W = f64> {
    n_qubits: usize,
    weights: BTreeMap<u64, W>,
}

impl<W: Weight> SupportDistribution<W> {
    pub fn empty(n_qubits: usize) -> Self {
        SupportDistribution {
            n_qubits,
            weights: BTreeMap::new(),
        }
    }

    /// Singleton distribution at the support of `h`.
    pub fn lift(h: &PauliString) -> Result<Self> {
        let mut d = Self::empty(h.n_qubits());
        d.weights.insert(h.support_mask()?, W::ratio(1, 1));
        Ok(d)
    }

    pub fn from_weights(n_qubits: usize, weights: impl IntoIterator<Item = (u64, W)>) -> Self {
        let mut d = Self::empty(n_qubits);
        for (s, w) in weights {
            d.add(s, w);
        }
        d
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn weights(&self) -> &BTreeMap<u64, W> {
        &self.weights
    }

    pub fn weight(&self, pattern: u64) -> W {
        self.weights.get(&pattern).cloned().unwrap_or_else(W::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> W {
        self.weights
            .values()
            .fold(W::zero(), |acc, w| acc + w.clone())
    }

    fn add(&mut self, pattern: u64, w: W) {
        let slot = self.weights.entry(pattern).or_insert_with(W::zero);
        *slot = slot.clone() + w;
    }

    fn prune(&mut self) {
        self.weights.retain(|_, w| !w.negligible());
    }

    /// Averages the doubled strings over a Haar-random unitary on `qubits`.
    pub fn apply_mixer(&self, qubits: &[usize]) -> Result<Self> {
        let y = self.domain_mask(qubits)?;
        Ok(self.redistribute(y, None))
    }

    /// Mixer, commutator with a nontrivial Pauli generator inside `qubits`,
    /// mixer. The result does not depend on which generator is used.
    pub fn apply_diff_block(&self, qubits: &[usize]) -> Result<Self> {
        let y = self.domain_mask(qubits)?;
        let k = y.count_ones();
        let factor = W::ratio(2 * 4u64.pow(k), 4u64.pow(k) - 1);
        Ok(self.redistribute(y, Some(factor)))
    }

    /// Moves the mass of every pattern that meets `y` uniformly onto the
    /// nontrivial sub-patterns of `y`; patterns missing `y` are kept, or
    /// dropped when a commutator `factor` is given.
    fn redistribute(&self, y: u64, factor: Option<W>) -> Self {
        let k = y.count_ones();
        let denom = 4u64.pow(k) - 1;
        let share: Vec<W> = (0..=k).map(|t| W::ratio(3u64.pow(t), denom)).collect();
        let mut out = Self::empty(self.n_qubits);
        for (&s, w) in &self.weights {
            if s & y == 0 {
                if factor.is_none() {
                    out.add(s, w.clone());
                }
                continue;
            }
            let w = match &factor {
                Some(f) => w.clone() * f,
                None => w.clone(),
            };
            let rest = s & !y;
            // nonempty submasks of y
            let mut t = y;
            while t != 0 {
                out.add(rest | t, w.clone() * &share[t.count_ones() as usize]);
                t = (t - 1) & y;
            }
        }
        out.prune();
        out
    }

    fn domain_mask(&self, qubits: &[usize]) -> Result<u64> {
        if qubits.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut m = 0u64;
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    n_qubits: self.n_qubits,
                });
            }
            m |= 1 << q;
        }
        Ok(m)
    }

    /// `<00| . |00>`: each supported qubit survives with probability 1/3 (the
    /// chance its letter is Z).
    pub fn measure_zero_state(&self) -> W {
        let third = W::ratio(1, 3);
        self.weights.iter().fold(W::zero(), |acc, (s, w)| {
            let mut v = w.clone();
            for _ in 0..s.count_ones() {
                v = v * &third;
            }
            acc + v
        })
    }
}

/// Which block is differentiated, and the Pauli generator of its rotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffSpec {
    pub block_id: usize,
    pub generator: PauliString,
}

impl DiffSpec {
    pub fn new(block_id: usize, generator: PauliString) -> Self {
        DiffSpec {
            block_id,
            generator,
        }
    }

    /// `Z` on the block's first qubit.
    pub fn default_for(layout: &AnsatzLayout, block_id: usize) -> Result<Self> {
        let b = layout.block(block_id)?;
        let f = PauliString::single(layout.n_qubits(), b.qubits[0], Pauli::Z)?;
        Ok(DiffSpec::new(block_id, f))
    }

    pub fn check<'a>(&self, layout: &'a AnsatzLayout) -> Result<&'a Block> {
        let b = layout.block(self.block_id)?;
        if self.generator.n_qubits() != layout.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_qubits(),
                found: self.generator.n_qubits(),
            });
        }
        if self.generator.is_trivial() {
            return Err(Error::InvalidDiffSpec(
                "generator must be a nontrivial Pauli string".into(),
            ));
        }
        if let Some(q) = self
            .generator
            .support()
            .into_iter()
            .find(|q| !b.qubits.contains(q))
        {
            return Err(Error::InvalidDiffSpec(format!(
                "generator acts on qubit {q} outside block {}",
                b.id
            )));
        }
        Ok(b)
    }
}

fn check_inputs<'a>(
    h: &Hamiltonian,
    layout: &'a AnsatzLayout,
    diff: &DiffSpec,
) -> Result<&'a Block> {
    if h.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_qubits(),
            found: h.n_qubits(),
        });
    }
    diff.check(layout)
}

/// Variance contribution of a single string, in exact or float arithmetic.
pub fn string_variance<W: Weight>(
    h: &PauliString,
    layout: &AnsatzLayout,
    diff: &DiffSpec,
) -> Result<W> {
    if h.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_qubits(),
            found: h.n_qubits(),
        });
    }
    let target = diff.check(layout)?;
    if !layout.cone_contains(h, diff.block_id)? {
        return Ok(W::zero());
    }
    let mut d = SupportDistribution::<W>::lift(h)?;
    for b in layout.blocks().iter().rev() {
        d = if b.id == target.id {
            d.apply_diff_block(&b.qubits)?
        } else {
            d.apply_mixer(&b.qubits)?
        };
        if d.is_empty() {
            return Ok(W::zero());
        }
    }
    Ok(d.measure_zero_state())
}

/// `Var dE/dθ` for the rotation in `diff`, assuming every block (and both
/// halves of the differentiated block) is an independent 2-design.
pub fn exact_variance(h: &Hamiltonian, layout: &AnsatzLayout, diff: &DiffSpec) -> Result<f64> {
    check_inputs(h, layout, diff)?;
    let parts = h
        .terms()
        .par_iter()
        .map(|(c, s)| string_variance::<f64>(s, layout, diff).map(|v| c * c * v))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().collect::<KahanSum>().value())
}

/// Same as [`exact_variance`] in rational arithmetic. Coefficients are taken
/// as the exact binary value of each `f64`.
pub fn exact_variance_rational(
    h: &Hamiltonian,
    layout: &AnsatzLayout,
    diff: &DiffSpec,
) -> Result<BigRational> {
    check_inputs(h, layout, diff)?;
    let mut total = BigRational::zero();
    for (c, s) in h.terms() {
        let c = BigRational::from_f64(*c)
            .ok_or_else(|| Error::InvalidArgument(format!("coefficient {c} is not finite")))?;
        total += string_variance::<BigRational>(s, layout, diff)? * &(c.clone() * &c);
    }
    Ok(total)
}

/// Closed-form lower bound on [`exact_variance`]:
/// `2*4^|Y|/(4^|Y|-1) * (3/4)^(l - l_c) * sum_i c_i^2 3^(-|cone_i|)`,
/// summed over strings whose cone contains the differentiated block.
pub fn theorem_bound(h: &Hamiltonian, layout: &AnsatzLayout, diff: &DiffSpec) -> Result<f64> {
    let b = check_inputs(h, layout, diff)?;
    let k = b.qubits.len() as i32;
    let prefactor = 2.0 * 4f64.powi(k) / (4f64.powi(k) - 1.0);
    let depth = (layout.layer_count() - b.layer) as i32;
    let mut sum = KahanSum::default();
    for (c, s) in h.terms() {
        let cone = layout.causal_cone(s)?;
        if cone.blocks.contains(&b.id) {
            sum.add(c * c * 3f64.powi(-(cone.qubits.len() as i32)));
        }
    }
    Ok(prefactor * 0.75f64.powi(depth) * sum.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatmapMode {
    Bound,
    Exact,
}

/// Generator used for each block in a heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorChoice {
    /// The given letter on the block's first qubit.
    FirstQubit(Pauli),
}

impl Default for GeneratorChoice {
    fn default() -> Self {
        GeneratorChoice::FirstQubit(Pauli::Z)
    }
}

impl GeneratorChoice {
    pub fn diff_spec(&self, layout: &AnsatzLayout, block: &Block) -> Result<DiffSpec> {
        match *self {
            GeneratorChoice::FirstQubit(p) => Ok(DiffSpec::new(
                block.id,
                PauliString::single(layout.n_qubits(), block.qubits[0], p)?,
            )),
        }
    }
}

/// One variance (or bound) per block, keyed by block id.
pub fn variance_heatmap(
    h: &Hamiltonian,
    layout: &AnsatzLayout,
    mode: HeatmapMode,
    generator: GeneratorChoice,
) -> Result<BTreeMap<usize, f64>> {
    layout
        .blocks()
        .iter()
        .map(|b| {
            let diff = generator.diff_spec(layout, b)?;
            let v = match mode {
                HeatmapMode::Bound => theorem_bound(h, layout, &diff)?,
                HeatmapMode::Exact => exact_variance(h, layout, &diff)?,
            };
            Ok((b.id, v))
        })
        .collect()
}

/// Heatmap as CSV: `block_id,layer,qubits,value`, blocks in application order.
pub fn heatmap_csv(layout: &AnsatzLayout, values: &BTreeMap<usize, f64>) -> String {
    let mut out = String::from("block_id,layer,qubits,value\n");
    for b in layout.blocks() {
        let v = values.get(&b.id).copied().unwrap_or(0.0);
        let qubits: Vec<String> = b.qubits.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b.id,
            b.layer,
            qubits.join("-"),
            fmt_sci(v)
        );
    }
    out
}

/// C-style `%.12e`.
pub fn fmt_sci(v: f64) -> String {
    let s = format!("{v:.12e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mant}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Convenience for exact results as `f64`.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
