//! Quantum process records, the quantum Clausius inequality and coherence-to-heat protocols.

use std::collections::BTreeMap;

use super::{
    coherence_in, dephase_in, hermitize, matrix_entropy, unitary_exp, CMatrix, DensityMatrix, Eigen,
    HermitianOperator,
};
use crate::entropy::Generator;
use crate::thermal::{alpha_power, beta_from_temperature, check_alpha, check_dims, gibbs_state, LevelSystem};
use crate::{Error, Result};

/// Spectra of ρ across a unitary interval must agree to this.
pub const UNITARY_TOL: f64 = 1e-10;
/// Time tolerance of the t_f bisection.
pub const TIME_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 2000;

/// One point of a quantum trajectory; `bath` is the (id, β) coupling of the interval arriving here.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumSample {
    pub t: f64,
    pub rho: DensityMatrix,
    pub h: HermitianOperator,
    pub bath: Option<(usize, f64)>,
}

/// Trajectory whose intervals are either isochores (bath, fixed H) or isolated (spectrum of ρ fixed).
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumRecord {
    samples: Vec<QuantumSample>,
}

impl QuantumRecord {
    pub fn new(samples: Vec<QuantumSample>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidRecord("no samples".into()));
        };
        let n = first.rho.dim();
        for s in &samples {
            check_dims(n, s.rho.dim())?;
            check_dims(n, s.h.dim())?;
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidRecord(format!("time does not increase at sample {}", k + 1)));
            }
            match w[1].bath {
                Some(_) => {
                    if w[0].h.matrix().max_abs_diff(w[1].h.matrix()) > 1e-12 {
                        return Err(Error::InvalidRecord(format!("H changes during the isochore before sample {}", k + 1)));
                    }
                }
                None => {
                    let dev = w[0]
                        .rho
                        .spectrum()
                        .iter()
                        .zip(w[1].rho.spectrum())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if dev > UNITARY_TOL {
                        return Err(Error::InvalidRecord(format!(
                            "spectrum of ρ changes by {dev:e} without a bath before sample {}",
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[QuantumSample] {
        &self.samples
    }

    pub fn first(&self) -> &QuantumSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &QuantumSample {
        &self.samples[self.samples.len() - 1]
    }
}

/// β(ε_k − F) for the eigenvalues ε_k of H.
fn scaled_shifts(h: &HermitianOperator, beta: f64) -> Result<Vec<f64>> {
    let levels = LevelSystem::new(h.eigen().values.clone())?;
    let ctx = gibbs_state(&levels, beta)?;
    Ok(ctx.shifts().iter().map(|s| beta * s).collect())
}

/// Gibbs state of a Hermitian H.
pub fn thermal_state(h: &HermitianOperator, beta: f64) -> Result<DensityMatrix> {
    let x = scaled_shifts(h, beta)?;
    DensityMatrix::new(hermitize(&h.eigen().map_values(&x.iter().map(|v| (-v).exp()).collect::<Vec<_>>())))
}

/// Per-bath α-heat tr[δρ (H − F)^α] summed over isochore intervals.
pub fn quantum_alpha_heat(rec: &QuantumRecord, alpha: f64) -> Result<BTreeMap<usize, f64>> {
    check_alpha(alpha)?;
    let mut out = BTreeMap::new();
    for w in rec.samples.windows(2) {
        if let Some((bath, beta)) = w[1].bath {
            let x = scaled_shifts(&w[1].h, beta)?;
            let weights = x.iter().map(|v| alpha_power(v / beta, alpha)).collect::<Result<Vec<_>>>()?;
            let op = w[1].h.eigen().map_values(&weights);
            let q = w[1].rho.matrix().sub(w[0].rho.matrix()).trace_product(&op).re;
            *out.entry(bath).or_insert(0.0) += q;
        }
    }
    Ok(out)
}

/// Contractivity of one isochore split into populations and coherences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumGap {
    /// Index of the sample that ends the isochore.
    pub step: usize,
    pub population_gap: f64,
    pub coherence_gap: f64,
}

impl QuantumGap {
    pub fn total(&self) -> f64 {
        self.population_gap + self.coherence_gap
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumClausius {
    pub lhs: f64,
    pub delta_s: f64,
    pub weighted_heat: f64,
    pub gaps: Vec<QuantumGap>,
}

/// D(ρ, ρ_β) with the reference given through β(H − F).
fn thermal_divergence(gen: &Generator, rho: &DensityMatrix, eig: &Eigen, x: &[f64]) -> Result<f64> {
    let p_ref: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
    let g = eig.map_values(&gen.gradient_from_neglog(x));
    let rho_ref = eig.map_values(&p_ref);
    let lin = rho.matrix().sub(&rho_ref).trace_product(&g).re;
    Ok((gen.functional(&p_ref)? - matrix_entropy(gen, rho)? + lin).max(0.0))
}

/// ΔS_g − Σ_isochores tr[δρ g(ρ_β)], with a population/coherence gap per isochore.
pub fn quantum_clausius_lhs(rec: &QuantumRecord, gen: &Generator) -> Result<QuantumClausius> {
    gen.validated()?;
    let delta_s = matrix_entropy(gen, &rec.last().rho)? - matrix_entropy(gen, &rec.first().rho)?;
    let mut weighted_heat = 0.0;
    let mut gaps = Vec::new();
    for (k, w) in rec.samples.windows(2).enumerate() {
        let Some((_, beta)) = w[1].bath else { continue };
        let h = &w[1].h;
        let x = scaled_shifts(h, beta)?;
        let g = h.eigen().map_values(&gen.gradient_from_neglog(&x));
        weighted_heat += w[1].rho.matrix().sub(w[0].rho.matrix()).trace_product(&g).re;
        let (ri, rf) = (&w[0].rho, &w[1].rho);
        let (di, df) = (dephase_in(ri, h)?, dephase_in(rf, h)?);
        let pop_i = thermal_divergence(gen, &di, h.eigen(), &x)?;
        let pop_f = thermal_divergence(gen, &df, h.eigen(), &x)?;
        gaps.push(QuantumGap {
            step: k + 1,
            population_gap: pop_i - pop_f,
            coherence_gap: coherence_in(gen, ri, h)? - coherence_in(gen, rf, h)?,
        });
    }
    Ok(QuantumClausius { lhs: delta_s - weighted_heat, delta_s, weighted_heat, gaps })
}

/// Q_α^max = T^α D_α(ρ, ρ_Λ) for dephasing in the eigenbasis of `h`.
pub fn max_coherence_heat(alpha: f64, rho: &DensityMatrix, h: &HermitianOperator, t: f64) -> Result<f64> {
    beta_from_temperature(t)?;
    let gen = Generator::alpha(alpha)?;
    // D(ρ, ρ_Λ) = S(ρ_Λ) − S(ρ) because g(ρ_Λ) carries no coherences
    Ok(t.powf(alpha) * coherence_in(&gen, rho, h)?)
}

/// Unitary that sends ρ to its passive state for diagonal levels.
pub fn passive_pulse(rho: &DensityMatrix, levels: &LevelSystem) -> Result<(CMatrix, DensityMatrix)> {
    check_dims(levels.len(), rho.dim())?;
    let n = rho.dim();
    let mut by_energy: Vec<usize> = (0..n).collect();
    by_energy.sort_by(|&a, &b| levels.energies()[a].total_cmp(&levels.energies()[b]));
    let v = &rho.eigen().vectors;
    let mut u = CMatrix::zeros(n);
    // eigenvalues ascending: the k-th largest goes to the k-th lowest level
    for (rank, &level) in by_energy.iter().enumerate() {
        let k = n - 1 - rank;
        for j in 0..n {
            u[(level, j)] = v[(j, k)].conj();
        }
    }
    let out = rho.conjugate(&u)?;
    Ok((u, out))
}

/// Outcome of a coherence-extraction run.
#[derive(Clone, Debug)]
pub struct CoherenceExtraction {
    /// Pulse length when the pulse is generated by an interaction Hamiltonian.
    pub t_f: Option<f64>,
    pub record: QuantumRecord,
    pub q1: f64,
    pub q2: f64,
    /// T² D₂(ρ₀, ρ_Λ).
    pub bound2: f64,
}

impl CoherenceExtraction {
    /// Bound over the magnitude of the second-order heat.
    pub fn ratio(&self) -> f64 {
        self.bound2 / self.q2.abs()
    }
}

/// First t in (0, π/‖H_int‖₂] where ⟨H⟩ returns to its initial value.
fn energy_return_time(rho0: &DensityMatrix, h: &HermitianOperator, h_int: &HermitianOperator) -> Result<f64> {
    let e0 = h.expectation(rho0);
    let norm = h_int.spectral_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| -> Result<f64> {
        let u = unitary_exp(h_int.eigen(), t);
        Ok(h.expectation(&rho0.conjugate(&u)?) - e0)
    };
    let t_max = std::f64::consts::PI / norm;
    let noise = 1e-13 * h.spectral_norm().max(1.0);
    let grid: Vec<(f64, f64)> = (1..=SCAN_POINTS)
        .map(|k| {
            let t = t_max * k as f64 / SCAN_POINTS as f64;
            Ok((t, f(t)?))
        })
        .collect::<Result<_>>()?;
    if grid.iter().all(|(_, v)| v.abs() <= noise) {
        return Ok(0.0);
    }
    let mut prev: Option<(f64, f64)> = None;
    for &(t, v) in &grid {
        if v.abs() <= noise {
            continue;
        }
        if let Some((t0, v0)) = prev {
            if (v < 0.0) != (v0 < 0.0) {
                let (mut lo, mut hi) = (t0, t);
                while hi - lo > TIME_TOL {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid)?;
                    if (fm < 0.0) == (v0 < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
        }
        prev = Some((t, v));
    }
    Err(Error::RootNotFound(format!("⟨H⟩(t) does not return to ⟨H⟩(0) on (0, {t_max}]")))
}

fn finish(
    samples: Vec<QuantumSample>,
    rho0: &DensityMatrix,
    h: &HermitianOperator,
    t: f64,
    t_f: Option<f64>,
) -> Result<CoherenceExtraction> {
    let record = QuantumRecord::new(samples)?;
    let q1 = quantum_alpha_heat(&record, 1.0)?.values().sum();
    let q2 = quantum_alpha_heat(&record, 2.0)?.values().sum();
    let bound2 = max_coherence_heat(2.0, rho0, h, t)?;
    Ok(CoherenceExtraction { t_f, record, q1, q2, bound2 })
}

/// Pulse e^{−iH_int t_f} until ⟨H⟩ returns to its start, then full thermalization at T.
pub fn coherence_extraction_protocol(
    rho0: &DensityMatrix,
    h: &HermitianOperator,
    h_int: &HermitianOperator,
    t: f64,
) -> Result<CoherenceExtraction> {
    check_dims(h.dim(), rho0.dim())?;
    check_dims(h.dim(), h_int.dim())?;
    let beta = beta_from_temperature(t)?;
    let t_f = energy_return_time(rho0, h, h_int)?;
    let mut samples = vec![QuantumSample { t: 0.0, rho: rho0.clone(), h: h.clone(), bath: None }];
    if t_f > 0.0 {
        let rho = rho0.conjugate(&unitary_exp(h_int.eigen(), t_f))?;
        samples.push(QuantumSample { t: t_f, rho, h: h.clone(), bath: None });
    }
    samples.push(QuantumSample { t: t_f + 1.0, rho: thermal_state(h, beta)?, h: h.clone(), bath: Some((0, beta)) });
    finish(samples, rho0, h, t, Some(t_f))
}

/// Stage-A pulse of the four-stage protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Pulse {
    Interaction(HermitianOperator),
    Passive,
}

/// Pulse, levels to E_i = −T ln p_i (p the populations of ρ₀), thermalize to ρ_Λ, restore the levels.
pub fn four_stage_extraction(rho0: &DensityMatrix, h: &HermitianOperator, t: f64, pulse: &Pulse) -> Result<CoherenceExtraction> {
    check_dims(h.dim(), rho0.dim())?;
    let levels = h.as_levels().ok_or_else(|| Error::Precondition("four-stage protocol needs a diagonal H".into()))?;
    let beta = beta_from_temperature(t)?;
    let p = rho0.populations();
    if let Some((index, &value)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::SingularReference { index, value });
    }
    let (rho_a, t_f) = match pulse {
        Pulse::Interaction(h_int) => {
            check_dims(h.dim(), h_int.dim())?;
            let t_f = energy_return_time(rho0, h, h_int)?;
            (rho0.conjugate(&unitary_exp(h_int.eigen(), t_f))?, Some(t_f))
        }
        Pulse::Passive => (passive_pulse(rho0, &levels)?.1, None),
    };
    let h_b = HermitianOperator::diagonal(&LevelSystem::new(p.iter().map(|v| -t * v.ln()).collect())?);
    let target = DensityMatrix::diagonal(&p)?;
    let mut clock = t_f.unwrap_or(0.0);
    let mut samples = vec![QuantumSample { t: 0.0, rho: rho0.clone(), h: h.clone(), bath: None }];
    if clock > 0.0 || t_f.is_none() {
        clock = clock.max(1.0);
        samples.push(QuantumSample { t: clock, rho: rho_a.clone(), h: h.clone(), bath: None });
    }
    samples.push(QuantumSample { t: clock + 1.0, rho: rho_a, h: h_b.clone(), bath: None });
    samples.push(QuantumSample { t: clock + 2.0, rho: target.clone(), h: h_b, bath: Some((0, beta)) });
    samples.push(QuantumSample { t: clock + 3.0, rho: target, h: h.clone(), bath: None });
    finish(samples, rho0, h, t, t_f)
}
