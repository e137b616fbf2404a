//! Second-moment operators of block distributions and their distance to the
//! Haar moment operator.
//!
//! Vectorization is row-major: `vec(A X B) = (A ⊗ Bᵀ) vec(X)`. Under this
//! convention `E[U⊗U⊗Ū⊗Ū]` is the matrix of the channel
//! `X ↦ E[(U⊗U) X (U⊗U)†]`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::linalg::CMatrix;
use crate::sim::{haar_unitary, GateFamily};
use crate::stats::sample_rng;
use crate::{Error, Result};

const CHUNK: usize = 2048;
const POWER_TOL: f64 = 1e-8;
const POWER_CAP: usize = 10_000;

/// `E[U⊗U⊗Ū⊗Ū]` for `d x d` unitaries; a `d⁴ x d⁴` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    pub dim: usize,
    pub matrix: CMatrix,
    /// Zero for the exact Haar operator.
    pub sample_count: usize,
}

impl MomentMatrix {
    /// Apply to an operator on the doubled space, given row-major.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let dd = self.dim * self.dim;
        assert!(
            x.rows() == dd && x.cols() == dd,
            "operator must be {dd}x{dd}"
        );
        CMatrix::from_vec(dd, dd, self.matrix.matvec(x.data()))
    }
}

fn swap_operator(d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |r, c| {
        let (i1, i2) = (r / d, r % d);
        Complex64::new((c == i2 * d + i1) as u8 as f64, 0.0)
    })
}

/// Exact Haar moment operator: the projection
/// `X ↦ [(Tr X − Tr(SX)/d)·1 + (Tr(SX) − Tr X/d)·S] / (d² − 1)`.
pub fn haar_moment_exact(d: usize) -> Result<MomentMatrix> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    let dd = d * d;
    let one = CMatrix::identity(dd).vectorize();
    let swap = swap_operator(d).vectorize();
    let norm = (dd - 1) as f64;
    let inv_d = 1.0 / d as f64;
    // every vector is real, so the bras need no conjugation
    let matrix = CMatrix::from_fn(dd * dd, dd * dd, |r, c| {
        let v = one[r] * one[c] + swap[r] * swap[c] - (one[r] * swap[c] + swap[r] * one[c]) * inv_d;
        v / norm
    });
    Ok(MomentMatrix {
        dim: d,
        matrix,
        sample_count: 0,
    })
}

/// One block unitary drawn from a family: Haar for `haar4`, uniform angles in
/// `[0, 2π)` otherwise.
pub fn sample_block_unitary<R: Rng + ?Sized>(family: GateFamily, rng: &mut R) -> CMatrix {
    match family {
        GateFamily::Haar4 => haar_unitary(4, rng),
        f => f
            .block_unitary(&f.random_params(rng))
            .expect("random parameters have the family's length"),
    }
}

/// Index of the unordered pair `{a, b}` in the packed upper triangle of an
/// `n x n` symmetric array.
fn sym_index(a: usize, b: usize, n: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

/// Accumulator for `E[U⊗U⊗Ū⊗Ū]`.
///
/// `vec(U⊗U)` lives in the symmetric square of `vec(U)`, so only the Gram
/// matrix of the `n(n+1)/2` products `U_a U_b` (`a ≤ b`, `n = d²`) is kept,
/// upper triangle only.
struct SymAccumulator {
    n: usize,
    m: usize,
    upper: Vec<Complex64>,
    count: usize,
    x: Vec<Complex64>,
}

impl SymAccumulator {
    fn new(d: usize) -> Self {
        let n = d * d;
        let m = n * (n + 1) / 2;
        SymAccumulator {
            n,
            m,
            upper: vec![Complex64::new(0.0, 0.0); m * (m + 1) / 2],
            count: 0,
            x: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    fn add(&mut self, u: &CMatrix) {
        let v = u.data();
        let mut k = 0;
        for a in 0..self.n {
            for b in a..self.n {
                self.x[k] = v[a] * v[b];
                k += 1;
            }
        }
        let mut off = 0;
        for s in 0..self.m {
            let xs = self.x[s];
            let row = &mut self.upper[off..off + self.m - s];
            for (acc, xt) in row.iter_mut().zip(&self.x[s..]) {
                *acc += xs * xt.conj();
            }
            off += self.m - s;
        }
        self.count += 1;
    }

    fn merge(mut self, other: SymAccumulator) -> SymAccumulator {
        for (a, b) in self.upper.iter_mut().zip(&other.upper) {
            *a += b;
        }
        self.count += other.count;
        self
    }

    fn gram(&self, s: usize, t: usize) -> Complex64 {
        if s <= t {
            self.upper[sym_index(s, t, self.m)]
        } else {
            self.upper[sym_index(t, s, self.m)].conj()
        }
    }

    fn finish(&self, d: usize) -> MomentMatrix {
        let n = self.n;
        let dd = n;
        let size = dd * dd;
        let scale = 1.0 / self.count as f64;
        let matrix = CMatrix::from_fn(size, size, |r, c| {
            // r = (i1 i2 i3 i4), c = (j1 j2 j3 j4), base d
            let (ri, rj) = (r / dd, r % dd);
            let (ci, cj) = (c / dd, c % dd);
            let (i1, i2, i3, i4) = (ri / d, ri % d, rj / d, rj % d);
            let (j1, j2, j3, j4) = (ci / d, ci % d, cj / d, cj % d);
            let s = sym_index(i1 * d + j1, i2 * d + j2, n);
            let t = sym_index(i3 * d + j3, i4 * d + j4, n);
            self.gram(s, t) * scale
        });
        MomentMatrix {
            dim: d,
            matrix,
            sample_count: self.count,
        }
    }
}

/// Chunked accumulation of `E[U⊗U⊗Ū⊗Ū]` over `samples` draws. Chunk partial
/// sums are merged pairwise in chunk order, so the result depends only on
/// `(master_seed, samples)`.
fn accumulate<F>(d: usize, samples: usize, master_seed: u64, draw: F) -> MomentMatrix
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> CMatrix + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let mut partials: Vec<SymAccumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = SymAccumulator::new(d);
            for s in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                acc.add(&draw(&mut sample_rng(master_seed, s as u64)));
            }
            acc
        })
        .collect();
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        let mut it = partials.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        partials = next;
    }
    partials.pop().expect("at least one sample").finish(d)
}

/// Sample mean of `U⊗U⊗Ū⊗Ū` over blocks drawn from `family`.
pub fn sampled_moment(
    family: GateFamily,
    samples: usize,
    master_seed: u64,
) -> Result<MomentMatrix> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(accumulate(4, samples, master_seed, |rng| {
        sample_block_unitary(family, rng)
    }))
}

/// Moment operator of an explicit list of unitaries, all of dimension `d`.
pub fn moment_of(unitaries: &[CMatrix]) -> Result<MomentMatrix> {
    let d = unitaries.first().ok_or(Error::EmptySubset)?.rows();
    if let Some(u) = unitaries.iter().find(|u| u.rows() != d || u.cols() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u.rows().max(u.cols()),
        });
    }
    let mut acc = SymAccumulator::new(d);
    for u in unitaries {
        acc.add(u);
    }
    Ok(acc.finish(d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaNorms {
    /// Induced 1-norm: largest absolute column sum.
    pub lambda1: f64,
    /// Induced ∞-norm: largest absolute row sum.
    pub lambda_inf: f64,
    /// Spectral norm.
    pub lambda2: f64,
}

/// Induced 1-, ∞- and 2-norms of a square matrix. The spectral norm comes
/// from power iteration on `A†A`.
pub fn lambda_norms(a: &CMatrix) -> Result<LambdaNorms> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let mut col = vec![0.0; n];
    let mut lambda_inf: f64 = 0.0;
    for r in 0..n {
        let mut row = 0.0;
        for (c, col_sum) in col.iter_mut().enumerate() {
            let v = a.get(r, c).norm();
            row += v;
            *col_sum += v;
        }
        lambda_inf = lambda_inf.max(row);
    }
    let lambda1 = col.iter().copied().fold(0.0, f64::max);
    Ok(LambdaNorms {
        lambda1,
        lambda_inf,
        lambda2: spectral_norm(a)?,
    })
}

fn spectral_norm(a: &CMatrix) -> Result<f64> {
    let n = a.cols();
    if n == 0 || a.data().iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let adj = a.adjoint();
    // fixed, generic start vector
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, 0.0))
        .collect();
    normalize(&mut v);
    let mut prev = 0.0;
    for _ in 0..POWER_CAP {
        let w = adj.matvec(&a.matvec(&v));
        let rayleigh: f64 = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        v = w;
        if normalize(&mut v) == 0.0 {
            return Ok(0.0);
        }
        if (rayleigh - prev).abs() <= POWER_TOL * rayleigh.abs() {
            return Ok(rayleigh.max(0.0).sqrt());
        }
        prev = rayleigh;
    }
    Err(Error::NonConvergence {
        iterations: POWER_CAP,
    })
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// Sum of singular values, for comparison with the induced 1-norm.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
    m.singular_values().iter().sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TpeReport {
    pub family: GateFamily,
    pub sample_count: usize,
    pub lambda1: f64,
    pub lambda_inf: f64,
    pub lambda2: f64,
    pub seed: u64,
    /// Only filled in when requested.
    pub trace_norm: Option<f64>,
}

/// Distance of one family to the Haar moment operator.
///
/// Norms are taken of `E_Haar − E_ν` for the Heisenberg-picture channel
/// `X ↦ E[(U⊗U)† X (U⊗U)]`, whose matrix is the adjoint of the sampled
/// moment. The spectral norm is unaffected by this choice; the 1- and ∞-norms
/// trade places.
pub fn tpe_report(
    family: GateFamily,
    samples: usize,
    master_seed: u64,
    with_trace_norm: bool,
) -> Result<TpeReport> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 1000 samples for a benchmark, got {samples}"
        )));
    }
    let haar = haar_moment_exact(4)?;
    let sampled = sampled_moment(family, samples, master_seed)?;
    let diff = (&haar.matrix - &sampled.matrix).adjoint();
    let norms = lambda_norms(&diff)?;
    Ok(TpeReport {
        family,
        sample_count: samples,
        lambda1: norms.lambda1,
        lambda_inf: norms.lambda_inf,
        lambda2: norms.lambda2,
        seed: master_seed,
        trace_norm: with_trace_norm.then(|| trace_norm(&diff)),
    })
}

pub fn tpe_benchmark(
    families: &[GateFamily],
    samples: usize,
    master_seed: u64,
) -> Result<Vec<TpeReport>> {
    families
        .iter()
        .map(|&f| tpe_report(f, samples, master_seed, false))
        .collect()
}

/// `family,samples,seed,lambda1,lambdainf,lambda2`, plus a `trace_norm`
/// column when any report carries one.
pub fn tpe_csv(reports: &[TpeReport]) -> String {
    let debug = reports.iter().any(|r| r.trace_norm.is_some());
    let mut out = String::from("family,samples,seed,lambda1,lambdainf,lambda2");
    out.push_str(if debug { ",trace_norm\n" } else { "\n" });
    for r in reports {
        let _ = write!(
            out,
            "{},{},{},{:.4},{:.4},{:.4}",
            r.family, r.sample_count, r.seed, r.lambda1, r.lambda_inf, r.lambda2
        );
        if debug {
            match r.trace_norm {
                Some(t) => {
                    let _ = write!(out, ",{t:.4}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
