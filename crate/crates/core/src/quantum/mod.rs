//! Density matrices, matrix Bregman divergences, coherence and the quantum Clausius inequality.

pub mod linalg;
mod protocol;

pub use linalg::{eigh, unitary_exp, CMatrix, Eigen, C64};
pub use protocol::{
    coherence_extraction_protocol, four_stage_extraction, max_coherence_heat, passive_pulse, quantum_alpha_heat,
    quantum_clausius_lhs, thermal_state,
    CoherenceExtraction, Pulse, QuantumClausius, QuantumGap, QuantumRecord, QuantumSample,
};

use crate::bregman::MIN_REFERENCE;
use crate::entropy::Generator;
use crate::thermal::{check_dims, LevelSystem};
use crate::{Error, Result};

/// Hermiticity and trace tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues of ρ may undershoot 0 or overshoot 1 by this much.
pub const SPECTRUM_TOL: f64 = 1e-10;

/// Hermitian operator such as H or H_int.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    eigen: Eigen,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let err = matrix.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("operator is not Hermitian (error {err:e})")));
        }
        let eigen = eigh(&matrix)?;
        Ok(Self { matrix, eigen })
    }

    pub fn diagonal(levels: &LevelSystem) -> Self {
        Self::new(CMatrix::diag(levels.energies())).expect("diagonal real matrix is Hermitian")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigen.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Diagonal entries, if the operator is diagonal in the computational basis.
    pub fn as_levels(&self) -> Option<LevelSystem> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)].norm() > HERMITIAN_TOL {
                    return None;
                }
            }
        }
        LevelSystem::new(self.matrix.diagonal().iter().map(|z| z.re).collect()).ok()
    }

    /// ⟨A⟩ = tr(ρA).
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        rho.matrix.trace_product(&self.matrix).re
    }
}

/// Validated density matrix with its spectral decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    eigen: Eigen,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let err = matrix.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::InvalidDistribution(format!("ρ is not Hermitian (error {err:e})")));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidDistribution(format!("tr ρ = {tr}")));
        }
        let mut eigen = eigh(&matrix)?;
        if let Some(&v) = eigen.values.iter().find(|&&v| v < -SPECTRUM_TOL || v > 1.0 + SPECTRUM_TOL) {
            return Err(Error::InvalidDistribution(format!("ρ has eigenvalue {v}")));
        }
        eigen.values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(Self { matrix, eigen })
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(CMatrix::diag(p))
    }

    /// |ψ⟩⟨ψ| for a normalized-on-input vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidDistribution("zero state vector".into()));
        }
        let n = psi.len();
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj() / (norm * norm);
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues ascending, clamped to [0, 1].
    pub fn spectrum(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Real diagonal in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// UρU†.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        check_dims(self.dim(), u.dim())?;
        Self::new(hermitize(&u.matmul(&self.matrix).matmul(&u.adjoint())))
    }

    /// (1 − λ)ρ + λσ.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Self::new(self.matrix.scale(C64::new(1.0 - lambda, 0.0)).add(&other.matrix.scale(C64::new(lambda, 0.0))))
    }
}

/// (A + A†)/2, removing roundoff asymmetry.
pub(crate) fn hermitize(a: &CMatrix) -> CMatrix {
    a.add(&a.adjoint()).scale(C64::new(0.5, 0.0))
}

/// ρ_Λ: ρ with coherences between distinct energies removed.
pub fn dephase(rho: &DensityMatrix, levels: &LevelSystem) -> Result<DensityMatrix> {
    check_dims(levels.len(), rho.dim())?;
    let e = levels.energies();
    let mut m = rho.matrix.clone();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            if i != j && (e[i] - e[j]).abs() > HERMITIAN_TOL {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    DensityMatrix::new(m)
}

/// Dephasing in the eigenbasis of `h`, keeping coherences inside degenerate eigenspaces.
pub fn dephase_in(rho: &DensityMatrix, h: &HermitianOperator) -> Result<DensityMatrix> {
    check_dims(h.dim(), rho.dim())?;
    let v = &h.eigen().vectors;
    let mut m = v.adjoint().matmul(&rho.matrix).matmul(v);
    let e = &h.eigen().values;
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            if i != j && (e[i] - e[j]).abs() > HERMITIAN_TOL * e[i].abs().max(1.0) {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    DensityMatrix::new(hermitize(&v.matmul(&m).matmul(&v.adjoint())))
}

/// C_g(ρ) in the eigenbasis of a general Hermitian `h`.
pub fn coherence_in(gen: &Generator, rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    let diag = dephase_in(rho, h)?;
    Ok((matrix_entropy(gen, &diag)? - matrix_entropy(gen, rho)?).max(0.0))
}

/// S_g(ρ) = tr G(ρ).
pub fn matrix_entropy(gen: &Generator, rho: &DensityMatrix) -> Result<f64> {
    gen.validated()?;
    gen.functional(rho.spectrum())
}

/// g(ρ) applied spectrally; fails on eigenvalues below `MIN_REFERENCE`.
fn spectral_gradient(gen: &Generator, rho: &DensityMatrix) -> Result<CMatrix> {
    if let Some((index, &value)) = rho.spectrum().iter().enumerate().find(|(_, &v)| v < MIN_REFERENCE) {
        return Err(Error::SingularReference { index, value });
    }
    Ok(rho.eigen.map_values(&gen.gradient(rho.spectrum())?))
}

/// D(ρ₂, ρ₁) = S_g(ρ₁) − S_g(ρ₂) + tr[(ρ₂ − ρ₁) g(ρ₁)].
pub fn matrix_bregman(gen: &Generator, rho2: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    gen.validated()?;
    check_dims(rho1.dim(), rho2.dim())?;
    let g = spectral_gradient(gen, rho1)?;
    let lin = rho2.matrix.sub(&rho1.matrix).trace_product(&g).re;
    let d = matrix_entropy(gen, rho1)? - matrix_entropy(gen, rho2)? + lin;
    Ok(d.max(0.0))
}

/// C_g(ρ) = S_g(ρ_Λ) − S_g(ρ) in the eigenbasis of `levels`.
pub fn coherence_measure(gen: &Generator, rho: &DensityMatrix, levels: &LevelSystem) -> Result<f64> {
    let diag = dephase(rho, levels)?;
    Ok((matrix_entropy(gen, &diag)? - matrix_entropy(gen, rho)?).max(0.0))
}

/// |D(ρ, Λ) − D(ρ_Λ, Λ) − C_g(ρ)| for a reference Λ diagonal in the basis of `levels`.
pub fn decomposition_residual(
    gen: &Generator,
    rho: &DensityMatrix,
    lambda: &DensityMatrix,
    levels: &LevelSystem,
) -> Result<f64> {
    let diag = dephase(rho, levels)?;
    let lhs = matrix_bregman(gen, rho, lambda)?;
    let rhs = matrix_bregman(gen, &diag, lambda)? + coherence_measure(gen, rho, levels)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
        let mut g = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        DensityMatrix::new(hermitize(&m.scale(C64::new(1.0 / tr, 0.0)))).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut h = CMatrix::zeros(n);
        for i in 0..n {
            h[(i, i)] = C64::new(rng.gen_range(-3.0..3.0), 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        unitary_exp(&eigh(&h).unwrap(), 1.0)
    }

    fn gens() -> Vec<Generator> {
        vec![Generator::Alpha(1.0), Generator::Alpha(0.5), Generator::Alpha(2.0), Generator::Tsallis(2.0), Generator::Tsallis(0.5), Generator::Renyi(0.5)]
    }

    #[test]
    fn validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.5, -0.5]).is_err());
        let mut m = CMatrix::diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DensityMatrix::diagonal(&[1.0 + 5e-10, -5e-10]).is_err());
        assert!(DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).is_ok());
        let ok = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(ok.spectrum(), &[0.0, 1.0]);
    }

    #[test]
    fn pure_states_have_zero_entropy() {
        let s = 1.0 / 3f64.sqrt();
        let rho = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(0.0, s), C64::new(-s, 0.0)]).unwrap();
        for a in [0.5, 1.0, 2.0] {
            assert!(matrix_entropy(&Generator::Alpha(a), &rho).unwrap().abs() < 1e-12);
        }
        let levels = LevelSystem::new(vec![0.0, 1.0, 2.0]).unwrap();
        let c = coherence_measure(&Generator::Alpha(1.0), &rho, &levels).unwrap();
        assert!((c - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_reduces_to_vectors() {
        let p = crate::ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let q = crate::ProbVector::new(vec![0.6, 0.1, 0.3]).unwrap();
        let (rp, rq) = (DensityMatrix::diagonal(p.as_slice()).unwrap(), DensityMatrix::diagonal(q.as_slice()).unwrap());
        for g in gens() {
            assert!((matrix_entropy(&g, &rp).unwrap() - g.entropy(&p).unwrap()).abs() < 1e-12);
            let want = crate::bregman::bregman_divergence(&g, &p, &q).unwrap();
            assert!((matrix_bregman(&g, &rp, &rq).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_entropy_oracle() {
        // tr ρ₂(ln ρ₂ − ln ρ₁) through nalgebra's eigensolver
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logm = |r: &DensityMatrix| {
            let m = DMatrix::from_row_slice(3, 3, r.matrix().data());
            let e = m.symmetric_eigen();
            let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| C64::new(v.ln(), 0.0)));
            &e.eigenvectors * d * e.eigenvectors.adjoint()
        };
        for _ in 0..100 {
            let (a, b) = (random_density(&mut rng, 3), random_density(&mut rng, 3));
            let ma = DMatrix::from_row_slice(3, 3, a.matrix().data());
            let want = (&ma * (logm(&a) - logm(&b))).trace().re;
            let got = matrix_bregman(&Generator::Alpha(1.0), &a, &b).unwrap();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn unitary_invariance_and_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (a, b) = (random_density(&mut rng, 3), random_density(&mut rng, 3));
            let u = random_unitary(&mut rng, 3);
            let (ua, ub) = (a.conjugate(&u).unwrap(), b.conjugate(&u).unwrap());
            let levels = LevelSystem::new((0..3).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
            let lam: Vec<f64> = {
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            };
            let lam = DensityMatrix::diagonal(&lam).unwrap();
            for g in gens() {
                assert!((matrix_entropy(&g, &a).unwrap() - matrix_entropy(&g, &ua).unwrap()).abs() < 1e-10);
                assert!((matrix_bregman(&g, &a, &b).unwrap() - matrix_bregman(&g, &ua, &ub).unwrap()).abs() < 1e-10);
                assert!(decomposition_residual(&g, &a, &lam, &levels).unwrap() < 1e-10);
                assert!(matrix_bregman(&g, &a, &b).unwrap() >= 0.0);
            }
            // spectrum preserved
            for (x, y) in a.spectrum().iter().zip(ua.spectrum()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dephasing_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let levels = LevelSystem::new(vec![0.0, 0.4, 1.1]).unwrap();
        for _ in 0..30 {
            let rho = random_density(&mut rng, 3);
            let diag = dephase(&rho, &levels).unwrap();
            for g in gens() {
                let mut last_s = matrix_entropy(&g, &rho).unwrap();
                let mut last_c = coherence_measure(&g, &rho, &levels).unwrap();
                for k in 1..=10 {
                    let m = rho.mix(&diag, k as f64 / 10.0).unwrap();
                    let (s, c) = (matrix_entropy(&g, &m).unwrap(), coherence_measure(&g, &m, &levels).unwrap());
                    assert!(s >= last_s - 1e-12 && c <= last_c + 1e-12);
                    last_s = s;
                    last_c = c;
                }
                assert!(last_c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_levels_keep_block_coherence() {
        let mut m = CMatrix::diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.2, 0.0);
        m[(1, 0)] = C64::new(0.2, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let flat = LevelSystem::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(coherence_measure(&Generator::Shannon, &rho, &flat).unwrap(), 0.0);
        let split = LevelSystem::new(vec![0.0, 1.0]).unwrap();
        assert!(coherence_measure(&Generator::Shannon, &rho, &split).unwrap() > 0.0);
    }

    #[test]
    fn singular_reference() {
        let pure = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        assert!(matches!(matrix_bregman(&Generator::Shannon, &mixed, &pure), Err(Error::SingularReference { .. })));
        assert!(matrix_bregman(&Generator::Shannon, &pure, &mixed).is_ok());
    }
}
