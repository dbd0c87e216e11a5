//! Dense complex matrices and a cyclic Jacobi Hermitian eigensolver.

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension the Jacobi solver accepts.
pub const MAX_JACOBI_DIM: usize = 64;
/// Relative off-diagonal threshold.
pub const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows have unequal lengths".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// tr(A·B) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |A_ij − conj(A_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn off_norm(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.data[i * n + j].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        let mut out = Self::zeros(a * b);
        for i in 0..a {
            for j in 0..a {
                let s = self[(i, j)];
                if s == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out[(i * b + k, j * b + l)] = s * other[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// V·diag(f(λ))·V†.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        self.map_values(&self.values.iter().map(|&l| f(l)).collect::<Vec<_>>())
    }

    /// V·diag(w)·V† for precomputed per-eigenvalue weights.
    pub fn map_values(&self, w: &[f64]) -> CMatrix {
        self.map_complex(&w.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    pub fn map_complex(&self, w: &[C64]) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[(i, k)] * w[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(a: &CMatrix) -> Result<Eigen> {
    let n = a.dim();
    if n > MAX_JACOBI_DIM {
        return Err(Error::SizeLimit { dim: n, cap: MAX_JACOBI_DIM });
    }
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let threshold = JACOBI_TOL * a.frobenius_norm().max(1.0);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if m.off_norm() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ph = phase.conj();
                // columns: A ← A·G
                for i in 0..n {
                    let (x, y) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = x * c - y * ph * s;
                    m[(i, q)] = x * s + y * ph * c;
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = x * c - y * ph * s;
                    v[(i, q)] = x * s + y * ph * c;
                }
                // rows: A ← G†·A
                for j in 0..n {
                    let (x, y) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = x * c - y * phase * s;
                    m[(q, j)] = x * s + y * phase * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
            }
        }
    }
    if !converged && m.off_norm() > threshold {
        return Err(Error::NotConverged("Jacobi eigensolver"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(Eigen { values, vectors })
}

/// e^{−iHt} through the spectrum of H.
pub fn unitary_exp(eig: &Eigen, t: f64) -> CMatrix {
    let w: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
    eig.map_complex(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn reconstructs_and_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 5, 8, 16] {
            for _ in 0..20 {
                let a = random_hermitian(&mut rng, n);
                let e = eigh(&a).unwrap();
                assert!(e.map(|x| x).max_abs_diff(&a) < 1e-12);
                let vv = e.vectors.adjoint().matmul(&e.vectors);
                assert!(vv.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
                let na = DMatrix::from_row_slice(n, n, a.data());
                let mut want: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
                want.sort_by(f64::total_cmp);
                for (x, y) in e.values.iter().zip(&want) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let d = CMatrix::diag(&[2.0, -1.0, 2.0]);
        let e = eigh(&d).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 2.0]);
        let e = eigh(&CMatrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
        assert!(matches!(eigh(&CMatrix::zeros(65)), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn polynomial_spectral_function() {
        // g(x) = 1 − 2x applied spectrally equals I − 2A
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 6] {
            let a = random_hermitian(&mut rng, n);
            let got = eigh(&a).unwrap().map(|x| 1.0 - 2.0 * x);
            let want = CMatrix::identity(n).sub(&a.scale(C64::new(2.0, 0.0)));
            assert!(got.max_abs_diff(&want) < 1e-12);
            let sq = eigh(&a).unwrap().map(|x| x * x);
            assert!(sq.max_abs_diff(&a.matmul(&a)) < 1e-12);
        }
    }

    #[test]
    fn exponential_is_unitary_and_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 4);
        let t = 0.3;
        let u = unitary_exp(&eigh(&a).unwrap(), t);
        assert!(u.adjoint().matmul(&u).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        // Taylor series of e^{−iAt}
        let x = a.scale(C64::new(0.0, -t));
        let mut term = CMatrix::identity(4);
        let mut sum = CMatrix::identity(4);
        for k in 1..40 {
            term = term.matmul(&x).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        assert!(u.max_abs_diff(&sum) < 1e-13);
    }

    #[test]
    fn kron_dimensions() {
        let a = CMatrix::diag(&[1.0, 2.0]);
        let b = CMatrix::diag(&[3.0, 5.0, 7.0]);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k.diagonal().iter().map(|z| z.re).collect::<Vec<_>>(), vec![3.0, 5.0, 7.0, 6.0, 10.0, 14.0]);
    }
}
