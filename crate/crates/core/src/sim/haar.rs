use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;

/// Haar-random `dim x dim` unitary: Gram-Schmidt on the columns of a complex
/// Ginibre matrix. The implied QR factor has a positive diagonal, which is
/// what makes the result exactly Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..dim {
        // two passes keep the columns orthogonal to machine precision
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj: Complex64 = done[k]
                    .iter()
                    .zip(rest[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, q) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    CMatrix::from_fn(dim, dim, |r, c| cols[c][r])
}
