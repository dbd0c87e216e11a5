//! Collision-model bath: resonant flip-flop couplings between a system and bath particles.

use crate::accounting::two_level_conversion;
use crate::quantum::{eigh, unitary_exp, CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::thermal::{alpha_power, check_alpha, check_beta, gibbs_state, LevelSystem};
use crate::{Error, Result};

/// Largest joint Hilbert-space dimension.
pub const MAX_JOINT_DIM: usize = 64;
/// Levels closer than this count as the same energy.
pub const RESONANCE_TOL: f64 = 1e-12;
const CHECKPOINTS: usize = 16;

/// Which pairs of particles interact and when.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology {
    /// The system meets bath particle k alone during [k·window, (k+1)·window).
    Collisions { window: f64 },
    /// system — b₀ — b₁ — …
    Chain,
    AllToAll,
}

/// System plus bath particles on a joint Hilbert space; particle 0 is the system.
#[derive(Clone, Debug)]
pub struct CompositeSystem {
    particles: Vec<LevelSystem>,
    beta: f64,
    coupling: f64,
    topology: Topology,
    state: DensityMatrix,
}

fn check_gaps(levels: &LevelSystem, which: usize) -> Result<()> {
    let e = levels.energies();
    let mut gaps = Vec::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let g = (e[j] - e[i]).abs();
            if g < RESONANCE_TOL {
                return Err(Error::Degenerate(format!("particle {which} has degenerate levels")));
            }
            gaps.push(g);
        }
    }
    gaps.sort_by(f64::total_cmp);
    if gaps.windows(2).any(|w| w[1] - w[0] < RESONANCE_TOL) {
        return Err(Error::Degenerate(format!("particle {which} has degenerate gaps")));
    }
    Ok(())
}

impl CompositeSystem {
    /// Product of `system_state` with thermal bath particles at `beta`.
    pub fn new(
        system: LevelSystem,
        system_state: &DensityMatrix,
        bath: Vec<LevelSystem>,
        beta: f64,
        coupling: f64,
        topology: Topology,
    ) -> Result<Self> {
        crate::thermal::check_dims(system.len(), system_state.dim())?;
        let mut state = system_state.matrix().clone();
        for b in &bath {
            let g = gibbs_state(b, beta)?;
            state = state.kron(&CMatrix::diag(g.gibbs.as_slice()));
            if state.dim() > MAX_JOINT_DIM {
                break;
            }
        }
        let mut particles = vec![system];
        particles.extend(bath);
        Self::validate(&particles, beta, coupling, topology)?;
        let state = DensityMatrix::new(state)?;
        Ok(Self { particles, beta, coupling, topology, state })
    }

    /// Uses a supplied joint state, which may carry system-bath correlations.
    pub fn with_joint_state(
        system: LevelSystem,
        bath: Vec<LevelSystem>,
        joint: DensityMatrix,
        beta: f64,
        coupling: f64,
        topology: Topology,
    ) -> Result<Self> {
        let mut particles = vec![system];
        particles.extend(bath);
        Self::validate(&particles, beta, coupling, topology)?;
        let dim: usize = particles.iter().map(|p| p.len()).product();
        crate::thermal::check_dims(dim, joint.dim())?;
        Ok(Self { particles, beta, coupling, topology, state: joint })
    }

    fn validate(particles: &[LevelSystem], beta: f64, coupling: f64, topology: Topology) -> Result<()> {
        check_beta(beta)?;
        if particles.len() < 2 {
            return Err(Error::InvalidInput("need at least one bath particle".into()));
        }
        let dim = particles.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len())).unwrap_or(usize::MAX);
        if dim > MAX_JOINT_DIM {
            return Err(Error::SizeLimit { dim, cap: MAX_JOINT_DIM });
        }
        for (k, p) in particles.iter().enumerate() {
            check_gaps(p, k)?;
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidInput(format!("coupling {coupling}")));
        }
        if let Topology::Collisions { window } = topology {
            if !(window > 0.0 && window.is_finite()) {
                return Err(Error::InvalidInput(format!("collision window {window}")));
            }
        }
        Ok(())
    }

    pub fn particles(&self) -> &[LevelSystem] {
        &self.particles
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    fn dims(&self) -> Vec<usize> {
        self.particles.iter().map(|p| p.len()).collect()
    }

    /// Interacting pairs for the whole evolution.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.particles.len();
        match self.topology {
            Topology::Collisions { .. } => (1..n).map(|k| (0, k)).collect(),
            Topology::Chain => (0..n - 1).map(|k| (k, k + 1)).collect(),
            Topology::AllToAll => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
        }
    }

    /// H_tot = Σ_k I ⊗ … ⊗ H_k ⊗ … ⊗ I.
    pub fn bare_hamiltonian(&self) -> HermitianOperator {
        let d = self.diag_sum(|k, e| e[k]);
        HermitianOperator::new(CMatrix::diag(&d)).expect("diagonal")
    }

    /// Diagonal of Σ_k f(particle k, its level energies) over the joint basis.
    fn diag_sum<F: Fn(usize, &[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let dims = self.dims();
        let total: usize = dims.iter().product();
        (0..total)
            .map(|idx| {
                let digits = unravel(idx, &dims);
                (0..dims.len()).map(|k| f(digits[k], self.particles[k].energies())).sum()
            })
            .collect()
    }

    fn pair_matrix(&self, a: usize, b: usize) -> CMatrix {
        let dims = self.dims();
        let total: usize = dims.iter().product();
        let mut m = CMatrix::zeros(total);
        let (ea, eb) = (self.particles[a].energies(), self.particles[b].energies());
        let find = |e: &[f64], x: f64| e.iter().position(|&y| (y - x).abs() <= RESONANCE_TOL);
        for lo in 0..ea.len() {
            for hi in 0..ea.len() {
                if ea[hi] <= ea[lo] {
                    continue;
                }
                let (Some(lo_b), Some(hi_b)) = (find(eb, ea[lo]), find(eb, ea[hi])) else { continue };
                // a: hi → lo, b: lo_b → hi_b, plus the conjugate
                for idx in 0..total {
                    let mut d = unravel(idx, &dims);
                    if d[a] != hi || d[b] != lo_b {
                        continue;
                    }
                    d[a] = lo;
                    d[b] = hi_b;
                    let to = ravel(&d, &dims);
                    m[(to, idx)] += C64::new(self.coupling, 0.0);
                    m[(idx, to)] += C64::new(self.coupling, 0.0);
                }
            }
        }
        m
    }

    /// Σ over active pairs of c·σ⁻σ⁺ + h.c. on resonant transitions.
    pub fn flip_flop_hamiltonian(&self) -> HermitianOperator {
        let mut m = CMatrix::zeros(self.dim());
        for (a, b) in self.pairs() {
            m = m.add(&self.pair_matrix(a, b));
        }
        HermitianOperator::new(m).expect("flip-flop terms are symmetric")
    }

    /// Free energy of the system at the bath temperature.
    pub fn system_free_energy(&self) -> Result<f64> {
        Ok(gibbs_state(&self.particles[0], self.beta)?.free_energy)
    }

    /// Populations of particle k.
    pub fn marginal(&self, state: &DensityMatrix, k: usize) -> Vec<f64> {
        let dims = self.dims();
        let mut out = vec![0.0; dims[k]];
        for (idx, z) in state.matrix().diagonal().iter().enumerate() {
            out[unravel(idx, &dims)[k]] += z.re;
        }
        out
    }

    /// ⟨f(H_k)⟩ for every particle.
    fn moments<F: Fn(f64) -> Result<f64>>(&self, state: &DensityMatrix, f: F) -> Result<Vec<f64>> {
        (0..self.particles.len())
            .map(|k| {
                let p = self.marginal(state, k);
                let mut acc = 0.0;
                for (pj, &e) in p.iter().zip(self.particles[k].energies()) {
                    acc += pj * f(e)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// ⟨(H_k − F_sys)^α⟩ per particle.
    pub fn alpha_moments(&self, state: &DensityMatrix, alpha: f64) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        let f = self.system_free_energy()?;
        self.moments(state, |e| alpha_power(e - f, alpha))
    }

    /// Joint state at `t` with the time of each segment of piecewise-constant generators.
    fn evolve_to(&self, t: f64) -> Result<DensityMatrix> {
        let h0 = self.bare_hamiltonian().matrix().clone();
        let mut rho = self.state.clone();
        let mut remaining = t;
        match self.topology {
            Topology::Collisions { window } => {
                for k in 1..self.particles.len() {
                    if remaining <= 0.0 {
                        break;
                    }
                    let dt = remaining.min(window);
                    let h = h0.add(&self.pair_matrix(0, k));
                    rho = rho.conjugate(&unitary_exp(&eigh(&h)?, dt))?;
                    remaining -= dt;
                }
                if remaining > 0.0 {
                    rho = rho.conjugate(&unitary_exp(&eigh(&h0)?, remaining))?;
                }
            }
            Topology::Chain | Topology::AllToAll => {
                let h = h0.add(self.flip_flop_hamiltonian().matrix());
                rho = rho.conjugate(&unitary_exp(&eigh(&h)?, remaining))?;
            }
        }
        Ok(rho)
    }
}

fn unravel(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = idx % dims[k];
        idx /= dims[k];
    }
    d
}

fn ravel(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

/// Outcome of a joint evolution.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: DensityMatrix,
    pub alpha: f64,
    /// Δ⟨(H_s − F_sys)^α⟩.
    pub q_sys: f64,
    /// Σ_k Δ⟨(H_b,k − F_sys)^α⟩.
    pub q_bath: f64,
    /// |q_sys + q_bath|.
    pub residual: f64,
    /// Largest |Δ⟨H_tot^(α)⟩| over evenly spaced checkpoints.
    pub drift: f64,
    /// Largest |Δ⟨H_tot⟩| over the same checkpoints.
    pub bare_drift: f64,
}

/// Evolves for time `t` and splits the α-moment change between system and bath.
pub fn evolve_and_account(comp: &CompositeSystem, t: f64, alpha: f64) -> Result<Evolution> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("evolution time {t}")));
    }
    let m0 = comp.alpha_moments(&comp.state, alpha)?;
    let e0 = comp.moments(&comp.state, Ok)?;
    let total0: f64 = m0.iter().sum();
    let bare0: f64 = e0.iter().sum();
    let mut drift: f64 = 0.0;
    let mut bare_drift: f64 = 0.0;
    let mut state = comp.state.clone();
    for k in 1..=CHECKPOINTS {
        state = comp.evolve_to(t * k as f64 / CHECKPOINTS as f64)?;
        let m: f64 = comp.alpha_moments(&state, alpha)?.iter().sum();
        let e: f64 = comp.moments(&state, Ok)?.iter().sum();
        drift = drift.max((m - total0).abs());
        bare_drift = bare_drift.max((e - bare0).abs());
    }
    let m1 = comp.alpha_moments(&state, alpha)?;
    let q_sys = m1[0] - m0[0];
    let q_bath: f64 = m1[1..].iter().zip(&m0[1..]).map(|(a, b)| a - b).sum();
    Ok(Evolution { state, alpha, q_sys, q_bath, residual: (q_sys + q_bath).abs(), drift, bare_drift })
}

/// Tsallis-moment changes Δ⟨e^{−(α̃−1)β(H−F)}⟩ with F_sys for the system and `f_bath` for the bath.
pub fn tsallis_exchange(comp: &CompositeSystem, evolved: &DensityMatrix, alpha_tilde: f64, f_bath: f64) -> Result<(f64, f64)> {
    let c = (alpha_tilde - 1.0) * comp.beta;
    let fs = comp.system_free_energy()?;
    let before = comp.moments(&comp.state, |e| Ok((-c * e).exp()))?;
    let after = comp.moments(evolved, |e| Ok((-c * e).exp()))?;
    let q_sys = (c * fs).exp() * (after[0] - before[0]);
    let q_bath = (c * f_bath).exp() * after[1..].iter().zip(&before[1..]).map(|(a, b)| a - b).sum::<f64>();
    Ok((q_sys, q_bath))
}

/// Implied inverse temperatures of one bath particle.
#[derive(Clone, Debug, PartialEq)]
pub struct DegradationReport {
    pub particle: usize,
    pub true_beta: f64,
    /// (α, β') with `None` when no thermal state matches.
    pub implied: Vec<(f64, Option<f64>)>,
}

impl DegradationReport {
    /// max − min of the implied β values that exist.
    pub fn spread(&self) -> f64 {
        let vals: Vec<f64> = self.implied.iter().filter_map(|(_, b)| *b).collect();
        if vals.is_empty() {
            return 0.0;
        }
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// ⟨(H − F')^α⟩_q − ⟨(H − F')^α⟩_{β'} with F' the free energy at β'.
fn moment_mismatch(q: &[f64], levels: &LevelSystem, beta: f64, alpha: f64) -> Result<f64> {
    let ctx = gibbs_state(levels, beta)?;
    let mut acc = 0.0;
    for ((qj, gj), s) in q.iter().zip(ctx.gibbs.as_slice()).zip(ctx.shifts()) {
        acc += (qj - gj) * alpha_power(*s, alpha)?;
    }
    Ok(acc)
}

/// β' with ⟨(H − F')^α⟩_q = ⟨(H − F')^α⟩_{β'}; `Some(0)` at infinite temperature.
pub fn implied_beta(q: &[f64], levels: &LevelSystem, alpha: f64) -> Result<Option<f64>> {
    crate::thermal::check_dims(levels.len(), q.len())?;
    check_alpha(alpha)?;
    let e = levels.energies();
    let mean: f64 = q.iter().zip(e).map(|(a, b)| a * b).sum();
    let uniform = e.iter().sum::<f64>() / e.len() as f64;
    let width = (levels.max() - levels.min()).max(f64::MIN_POSITIVE);
    if (mean - uniform).abs() <= 1e-12 * width {
        return Ok(Some(0.0));
    }
    if mean > uniform {
        return Ok(None);
    }
    let (lo, hi) = ((1e-8 / width).ln(), (700.0 / width).ln());
    let n = 400;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let lb = lo + (hi - lo) * k as f64 / n as f64;
        let v = moment_mismatch(q, levels, lb.exp(), alpha)?;
        if v == 0.0 {
            return Ok(Some(lb.exp()));
        }
        if let Some((l0, v0)) = prev {
            if (v < 0.0) != (v0 < 0.0) {
                let (mut a, mut b) = (l0, lb);
                while b - a > 1e-14 {
                    let m = 0.5 * (a + b);
                    let vm = moment_mismatch(q, levels, m.exp(), alpha)?;
                    if (vm < 0.0) == (v0 < 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Ok(Some((0.5 * (a + b)).exp()));
            }
        }
        prev = Some((lb, v));
    }
    Ok(None)
}

/// Implied β of bath particle `particle` (1-based in the joint ordering) for each α.
pub fn bath_degradation_report(
    comp: &CompositeSystem,
    state: &DensityMatrix,
    particle: usize,
    alphas: &[f64],
) -> Result<DegradationReport> {
    if particle == 0 || particle >= comp.particles.len() {
        return Err(Error::InvalidInput(format!("no bath particle {particle}")));
    }
    let q = comp.marginal(state, particle);
    let levels = &comp.particles[particle];
    let implied = alphas.iter().map(|&a| Ok((a, implied_beta(&q, levels, a)?))).collect::<Result<_>>()?;
    Ok(DegradationReport { particle, true_beta: comp.beta, implied })
}

/// W = (E_l − E_k)/[(E_l − F)^α − (E_k − F)^α] · W_α.
pub fn work_repository_relation(e_k: f64, e_l: f64, f: f64, alpha: f64, dw_alpha: f64) -> Result<f64> {
    Ok(two_level_conversion(e_k, e_l, f, alpha)? * dw_alpha)
}
