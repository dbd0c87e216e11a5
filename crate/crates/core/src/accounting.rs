//! α-heat, α-work, entropy changes and Clausius left-hand sides over process records.
//!
//! Heat and work are positive when they flow into the system. Every sample
//! carries the coupling that was active on the interval arriving at it; the
//! free energies F_k that shift the levels are re-solved at every sample.

use std::collections::BTreeMap;

use crate::bregman::{bregman_divergence, DivergenceReport};
use crate::entropy::{Generator, LIMIT_TOL};
use crate::thermal::{
    alpha_power, beta_from_temperature, check_alpha, check_dims, gibbs_state,
    multi_bath_fixed_point, moment_of, BathCoupling, LevelShift, LevelSystem, ProbVector,
};
use crate::{Error, Result};

/// Population changes below this count as "no change".
pub const POPULATION_TOL: f64 = 1e-12;
/// Default relative budget for the trapezoid error estimate.
pub const DEFAULT_RESOLUTION_TOL: f64 = 1e-8;
/// Default margin factor of the high-temperature condition.
pub const DEFAULT_HIGH_T_MARGIN: f64 = 5.0;

/// Bath assignment of one sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Coupling {
    /// No bath; F is evaluated at `beta_ref`.
    Isolated { beta_ref: f64 },
    Baths(Vec<BathCoupling>),
}

impl Coupling {
    pub fn single(bath: usize, beta: f64) -> Self {
        Self::Baths(vec![BathCoupling::full(bath, beta)])
    }

    pub fn is_isolated(&self) -> bool {
        matches!(self, Self::Isolated { .. })
    }
}

/// One point of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p: ProbVector,
    pub levels: LevelSystem,
    pub coupling: Coupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Isochore,
    Adiabat,
    Isotherm,
}

/// A protocol step spanning samples `start..=end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
    /// Contractivity gaps of the step, one per monitored generator.
    pub gaps: Vec<(Generator, DivergenceReport)>,
}

/// Time-ordered trajectory of populations, levels and couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessRecord {
    samples: Vec<Sample>,
    segments: Vec<Segment>,
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl ProcessRecord {
    pub fn new(samples: Vec<Sample>, segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidRecord("no samples".into()));
        };
        let n = first.levels.len();
        for (k, s) in samples.iter().enumerate() {
            check_dims(n, s.levels.len())?;
            check_dims(n, s.p.len())?;
            if !s.t.is_finite() {
                return Err(Error::InvalidRecord(format!("sample {k} has time {}", s.t)));
            }
            if let Coupling::Baths(cs) = &s.coupling {
                if cs.is_empty() {
                    return Err(Error::InvalidRecord(format!("sample {k} has an empty bath list")));
                }
                crate::thermal::validate_couplings(cs, n)?;
            }
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidRecord(format!("time does not increase at sample {}", k + 1)));
            }
            let (p0, p1) = (w[0].p.as_slice(), w[1].p.as_slice());
            match &w[1].coupling {
                Coupling::Isolated { .. } => {
                    if max_change(p0, p1) > POPULATION_TOL {
                        return Err(Error::InvalidRecord(format!(
                            "populations change without a bath before sample {}",
                            k + 1
                        )));
                    }
                }
                Coupling::Baths(cs) => {
                    let mut touched = vec![false; n];
                    for c in cs {
                        for j in c.levels(n) {
                            touched[j] = true;
                        }
                    }
                    if let Some(j) = (0..n).find(|&j| !touched[j] && (p1[j] - p0[j]).abs() > POPULATION_TOL) {
                        return Err(Error::InvalidRecord(format!(
                            "level {j} changes population outside every bath manifold before sample {}",
                            k + 1
                        )));
                    }
                }
            }
        }
        let mut last_end = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.start > seg.end || seg.end >= samples.len() || (i > 0 && seg.start < last_end) {
                return Err(Error::InvalidRecord(format!("segment {i} has bad bounds")));
            }
            last_end = seg.end;
            let span = &samples[seg.start..=seg.end];
            match seg.kind {
                SegmentKind::Isochore => {
                    if span.iter().any(|s| s.levels != span[0].levels) {
                        return Err(Error::InvalidRecord(format!("isochore segment {i} changes levels")));
                    }
                }
                SegmentKind::Adiabat => {
                    if span.iter().any(|s| max_change(s.p.as_slice(), span[0].p.as_slice()) > POPULATION_TOL) {
                        return Err(Error::InvalidRecord(format!("adiabat segment {i} changes populations")));
                    }
                }
                SegmentKind::Isotherm => {}
            }
        }
        Ok(Self { samples, segments })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn dimension(&self) -> usize {
        self.first().levels.len()
    }

    /// Whether populations and levels return to their start.
    pub fn is_cyclic(&self, tol: f64) -> bool {
        let (a, b) = (self.first(), self.last());
        a.p.max_abs_diff(&b.p) <= tol && max_change(a.levels.energies(), b.levels.energies()) <= tol
    }

    /// Samples `start..=end` with the segments lying inside them, re-indexed.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.samples.len() {
            return Err(Error::InvalidRecord(format!("slice {start}..={end} out of range")));
        }
        let segments = self
            .segments
            .iter()
            .filter(|s| s.start >= start && s.end <= end)
            .map(|s| Segment { start: s.start - start, end: s.end - start, ..s.clone() })
            .collect();
        Ok(Self { samples: self.samples[start..=end].to_vec(), segments })
    }

    /// Bath ids appearing anywhere in the record, ascending.
    pub fn baths(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .samples
            .iter()
            .filter_map(|s| match &s.coupling {
                Coupling::Baths(cs) => Some(cs.iter().map(|c| c.bath)),
                Coupling::Isolated { .. } => None,
            })
            .flatten()
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Per-level shift data and −ln p_ref under a coupling.
struct Frame {
    shifts: Vec<LevelShift>,
    neglog: Vec<f64>,
}

fn frame(levels: &LevelSystem, p: &[f64], coupling: &Coupling) -> Result<Frame> {
    match coupling {
        Coupling::Isolated { beta_ref } => {
            let ctx = gibbs_state(levels, *beta_ref)?;
            let shifts =
                ctx.shifts().iter().map(|&s| LevelShift { beta: *beta_ref, shift: s, bath: None }).collect();
            let neglog = ctx.shifts().iter().map(|s| beta_ref * s).collect();
            Ok(Frame { shifts, neglog })
        }
        Coupling::Baths(cs) => {
            let fp = multi_bath_fixed_point(levels, p, cs)?;
            Ok(Frame { shifts: fp.shifts, neglog: fp.neglog_ref })
        }
    }
}

fn powers(fr: &Frame, alpha: f64) -> Result<Vec<f64>> {
    fr.shifts.iter().map(|s| alpha_power(s.shift, alpha)).collect()
}

/// One interval (k−1 → k) seen from the coupling of sample k.
struct Interval {
    dp: Vec<f64>,
    owner: Vec<Option<usize>>,
    /// frames at the start and end level snapshots
    start: Frame,
    end: Frame,
    mixed: bool,
}

/// p_b − p_a with the entry of the largest population rebuilt as minus the sum of the others,
/// so changes far below that population's resolution survive.
fn population_change(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut dp: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let m = (0..a.len()).max_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap_or(0);
    if dp.len() > 1 {
        dp[m] = 0.0;
        dp[m] = -dp.iter().sum::<f64>();
    }
    dp
}

fn intervals(rec: &ProcessRecord) -> Result<Vec<Option<Interval>>> {
    rec.samples
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dp = population_change(a.p.as_slice(), b.p.as_slice());
            if dp.iter().all(|d| *d == 0.0) {
                return Ok(None);
            }
            let end = frame(&b.levels, b.p.as_slice(), &b.coupling)?;
            let same_levels = a.levels == b.levels;
            let start = if same_levels {
                Frame { shifts: end.shifts.clone(), neglog: end.neglog.clone() }
            } else {
                frame(&a.levels, b.p.as_slice(), &b.coupling)?
            };
            let owner = end.shifts.iter().map(|s| s.bath).collect();
            Ok(Some(Interval { dp, owner, start, end, mixed: !same_levels }))
        })
        .collect()
}

/// Σ_j dp_j · ½(w_start + w_end) for a per-level weight.
fn weighted<F>(iv: &Interval, weight: F) -> Result<f64>
where
    F: Fn(&Frame) -> Result<Vec<f64>>,
{
    let w0 = weight(&iv.start)?;
    let w1 = if iv.mixed { weight(&iv.end)? } else { w0.clone() };
    Ok(iv.dp.iter().zip(w0.iter().zip(&w1)).map(|(d, (a, b))| if *d == 0.0 { 0.0 } else { d * 0.5 * (a + b) }).sum())
}

/// Trapezoid error estimate over runs of intervals where both populations and levels move.
fn check_resolution<F>(rec: &ProcessRecord, ivs: &[Option<Interval>], tol: f64, weight: F) -> Result<()>
where
    F: Fn(&Frame) -> Result<Vec<f64>>,
{
    let mut k = 0;
    while k < ivs.len() {
        let is_mixed = |i: usize| ivs[i].as_ref().is_some_and(|iv| iv.mixed);
        if !is_mixed(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k < ivs.len() && is_mixed(k) && rec.samples[k + 1].coupling == rec.samples[start + 1].coupling {
            k += 1;
        }
        let run = start..k;
        if run.len() < 2 {
            continue;
        }
        let mut fine = 0.0;
        for i in run.clone() {
            fine += weighted(ivs[i].as_ref().unwrap(), &weight)?;
        }
        let mut coarse = 0.0;
        let mut i = run.start;
        while i < run.end {
            if i + 1 < run.end {
                let (a, b) = (&rec.samples[i], &rec.samples[i + 2]);
                let dp = population_change(a.p.as_slice(), b.p.as_slice());
                let end = frame(&b.levels, b.p.as_slice(), &b.coupling)?;
                let st = frame(&a.levels, b.p.as_slice(), &b.coupling)?;
                let owner = end.shifts.iter().map(|s| s.bath).collect();
                coarse += weighted(&Interval { dp, owner, start: st, end, mixed: true }, &weight)?;
                i += 2;
            } else {
                coarse += weighted(ivs[i].as_ref().unwrap(), &weight)?;
                i += 1;
            }
        }
        let estimate = (fine - coarse).abs() / 3.0;
        let budget = tol * fine.abs().max(1.0);
        if estimate > budget {
            let refine = (estimate / budget).sqrt().ceil() as usize;
            return Err(Error::Resolution { estimate, budget, refine: refine.max(2) });
        }
    }
    Ok(())
}

/// Per-bath α-heat, Q_{k,α} = ∫ Σ_j dp_j (E_j − F_k)^α.
pub fn alpha_heat(rec: &ProcessRecord, alpha: f64) -> Result<BTreeMap<usize, f64>> {
    alpha_heat_with(rec, alpha, DEFAULT_RESOLUTION_TOL)
}

pub fn alpha_heat_with(rec: &ProcessRecord, alpha: f64, tol: f64) -> Result<BTreeMap<usize, f64>> {
    check_alpha(alpha)?;
    let ivs = intervals(rec)?;
    check_resolution(rec, &ivs, tol, |f| powers(f, alpha))?;
    let mut out: BTreeMap<usize, f64> = rec.baths().into_iter().map(|b| (b, 0.0)).collect();
    for iv in ivs.iter().flatten() {
        let h0 = powers(&iv.start, alpha)?;
        let h1 = if iv.mixed { powers(&iv.end, alpha)? } else { h0.clone() };
        for j in 0..iv.dp.len() {
            if iv.dp[j] == 0.0 {
                continue;
            }
            if let Some(b) = iv.owner[j] {
                *out.entry(b).or_insert(0.0) += iv.dp[j] * 0.5 * (h0[j] + h1[j]);
            }
        }
    }
    Ok(out)
}

/// H_α of a sample under its own coupling.
fn sample_moment(s: &Sample, alpha: f64) -> Result<f64> {
    let fr = frame(&s.levels, s.p.as_slice(), &s.coupling)?;
    let shifts: Vec<f64> = fr.shifts.iter().map(|x| x.shift).collect();
    moment_of(s.p.as_slice(), &shifts, alpha)
}

/// ΔH_α between the record's endpoints.
pub fn delta_h_alpha(rec: &ProcessRecord, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(sample_moment(rec.last(), alpha)? - sample_moment(rec.first(), alpha)?)
}

/// W_α = ∫ Σ_j p_j d[(E_j − F)^α]; jumps of F at bath switches count as work.
pub fn alpha_work(rec: &ProcessRecord, alpha: f64) -> Result<f64> {
    let q: f64 = alpha_heat(rec, alpha)?.values().sum();
    Ok(delta_h_alpha(rec, alpha)? - q)
}

/// ΔS for any generator.
pub fn delta_entropy(rec: &ProcessRecord, gen: &Generator) -> Result<f64> {
    Ok(gen.entropy(&rec.last().p)? - gen.entropy(&rec.first().p)?)
}

/// Σ_intervals Σ_j dp_j ∂S/∂p_j(p_ref): the bath-weighted heat of a generator.
pub fn weighted_heat(rec: &ProcessRecord, gen: &Generator) -> Result<f64> {
    gen.validated()?;
    let ivs = intervals(rec)?;
    let weight = |f: &Frame| Ok(gen.gradient_from_neglog(&f.neglog));
    check_resolution(rec, &ivs, DEFAULT_RESOLUTION_TOL, weight)?;
    let mut acc = 0.0;
    for iv in ivs.iter().flatten() {
        acc += weighted(iv, weight)?;
    }
    Ok(acc)
}

/// ΔS − Σ_k ∫ β_k^α δQ_{k,α} (or the Tsallis/Rényi analogue).
pub fn clausius_lhs(rec: &ProcessRecord, gen: &Generator) -> Result<f64> {
    Ok(delta_entropy(rec, gen)? - weighted_heat(rec, gen)?)
}

/// Σ ∫ (α̃/(1−α̃)) Σ_j δp_j e^{−(α̃−1)β(E_j−F)}; β·Q₁ at α̃ = 1.
pub fn tsallis_heat(rec: &ProcessRecord, alpha_tilde: f64) -> Result<f64> {
    Generator::tsallis(alpha_tilde)?;
    let ivs = intervals(rec)?;
    let mut acc = 0.0;
    for iv in ivs.iter().flatten() {
        if (alpha_tilde - 1.0).abs() < LIMIT_TOL {
            acc += weighted(iv, |f| Ok(f.neglog.clone()))?;
        } else {
            let d = alpha_tilde - 1.0;
            let pref = alpha_tilde / (1.0 - alpha_tilde);
            acc += pref * weighted(iv, |f| Ok(f.neglog.iter().map(|x| (-d * x).exp_m1()).collect()))?;
        }
    }
    Ok(acc)
}

/// Σ ∫ (ᾱ/(1−ᾱ)) Σ_j δp_j e^{−(ᾱ−1)β(E_j−F)} / Σ_i p_{β,i}^ᾱ; β·Q₁ at ᾱ = 1.
pub fn renyi_heat(rec: &ProcessRecord, alpha_bar: f64) -> Result<f64> {
    Generator::renyi(alpha_bar)?;
    let ivs = intervals(rec)?;
    let mut acc = 0.0;
    for iv in ivs.iter().flatten() {
        if (alpha_bar - 1.0).abs() < LIMIT_TOL {
            acc += weighted(iv, |f| Ok(f.neglog.clone()))?;
        } else {
            let a = alpha_bar;
            acc += weighted(iv, |f| {
                let norm: f64 = f.neglog.iter().map(|x| (-a * x).exp()).sum();
                Ok(f.neglog.iter().map(|x| a / (1.0 - a) * (-(a - 1.0) * x).exp() / norm).collect())
            })?;
        }
    }
    Ok(acc)
}

/// α-order bookkeeping of one record.
#[derive(Clone, Debug, PartialEq)]
pub struct Ledger {
    pub alpha: f64,
    pub heat: BTreeMap<usize, f64>,
    pub work: f64,
    pub delta_h: f64,
    pub delta_s: f64,
    pub clausius_lhs: f64,
}

impl Ledger {
    pub fn compute(rec: &ProcessRecord, alpha: f64) -> Result<Self> {
        Self::compute_with(rec, alpha, DEFAULT_RESOLUTION_TOL)
    }

    /// As [`Ledger::compute`] with an explicit heat-resolution tolerance.
    pub fn compute_with(rec: &ProcessRecord, alpha: f64, tol: f64) -> Result<Self> {
        let heat = alpha_heat_with(rec, alpha, tol)?;
        let delta_h = delta_h_alpha(rec, alpha)?;
        let work = delta_h - heat.values().sum::<f64>();
        let gen = Generator::alpha(alpha)?;
        let delta_s = delta_entropy(rec, &gen)?;
        let clausius_lhs = delta_s - weighted_heat(rec, &gen)?;
        Ok(Self { alpha, heat, work, delta_h, delta_s, clausius_lhs })
    }

    pub fn total_heat(&self) -> f64 {
        self.heat.values().sum()
    }

    /// |ΔH_α − ΣQ − W|.
    pub fn first_law_residual(&self) -> f64 {
        (self.delta_h - self.total_heat() - self.work).abs()
    }
}

/// F_α = H_α(p_β) − T^α S_α(p_β).
pub fn alpha_free_energy(levels: &LevelSystem, t: f64, alpha: f64) -> Result<f64> {
    let ctx = gibbs_state(levels, beta_from_temperature(t)?)?;
    noneq_alpha_free_energy(&ctx.gibbs, levels, t, alpha)
}

/// F̃_α(p) = H_α(p) − T^α S_α(p).
pub fn noneq_alpha_free_energy(p: &ProbVector, levels: &LevelSystem, t: f64, alpha: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    let ctx = gibbs_state(levels, beta_from_temperature(t)?)?;
    let h = moment_of(p.as_slice(), ctx.shifts(), alpha)?;
    let s = Generator::alpha(alpha)?.entropy(p)?;
    Ok(h - t.powf(alpha) * s)
}

/// W_α^R = ΔF̃_α between two endpoints at temperature T.
pub fn reversible_work(
    alpha: f64,
    (p_i, h_i): (&ProbVector, &LevelSystem),
    (p_f, h_f): (&ProbVector, &LevelSystem),
    t: f64,
) -> Result<f64> {
    Ok(noneq_alpha_free_energy(p_f, h_f, t, alpha)? - noneq_alpha_free_energy(p_i, h_i, t, alpha)?)
}

/// High-temperature Tsallis bound on Q₁ for an isochore.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighTBound {
    pub bound: f64,
    pub condition_ok: bool,
}

/// T·ΔS_α̃·e^{−β(α̃−1)((E_max+E_min)/2 − F)}/α̃ and the condition
/// T ≥ margin·|α̃−1|(E_max−E_min)/2.
pub fn high_t_bound(
    p_i: &ProbVector,
    p_f: &ProbVector,
    levels: &LevelSystem,
    t: f64,
    alpha_tilde: f64,
    margin: f64,
) -> Result<HighTBound> {
    check_dims(levels.len(), p_i.len())?;
    check_dims(levels.len(), p_f.len())?;
    let gen = Generator::tsallis(alpha_tilde)?;
    if alpha_tilde == 0.0 {
        return Err(Error::InvalidInput("high-T bound needs α̃ > 0".into()));
    }
    let beta = beta_from_temperature(t)?;
    let ctx = gibbs_state(levels, beta)?;
    let ds = gen.entropy(p_f)? - gen.entropy(p_i)?;
    let mid = 0.5 * (levels.max() + levels.min());
    let bound = t * ds * (-beta * (alpha_tilde - 1.0) * (mid - ctx.free_energy)).exp() / alpha_tilde;
    let condition_ok = t >= margin * (alpha_tilde - 1.0).abs() * (levels.max() - levels.min()) / 2.0;
    Ok(HighTBound { bound, condition_ok })
}

fn tail_weights(levels: &LevelSystem, beta: f64, alpha_tilde: f64) -> Result<Vec<f64>> {
    let ctx = gibbs_state(levels, beta)?;
    Ok(ctx.shifts().iter().map(|s| (-(alpha_tilde - 1.0) * beta * s).exp()).collect())
}

/// Markov bound ⟨e^{−(α̃−1)β(H−F)}⟩/ξ on P(e^{−(α̃−1)β(E−F)} ≥ ξ), clamped to [0, 1].
pub fn markov_tail(p: &ProbVector, levels: &LevelSystem, beta: f64, alpha_tilde: f64, xi: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    if !(xi > 0.0) {
        return Err(Error::InvalidInput(format!("ξ = {xi}")));
    }
    let w = tail_weights(levels, beta, alpha_tilde)?;
    let mean: f64 = p.as_slice().iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok((mean / xi).clamp(0.0, 1.0))
}

/// Exact P(e^{−(α̃−1)β(E−F)} ≥ ξ) by enumeration.
pub fn exact_tail(p: &ProbVector, levels: &LevelSystem, beta: f64, alpha_tilde: f64, xi: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    let w = tail_weights(levels, beta, alpha_tilde)?;
    Ok(p.as_slice().iter().zip(&w).filter(|(_, &x)| x >= xi).map(|(a, _)| a).sum())
}

/// Rényi-divergence free energy F + T·D_ᾰ(p, p_β).
pub fn rt_monotone(p: &ProbVector, levels: &LevelSystem, t: f64, alpha_breve: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    if !alpha_breve.is_finite() {
        return Err(Error::InvalidInput(format!("ᾰ = {alpha_breve}")));
    }
    let ctx = gibbs_state(levels, beta_from_temperature(t)?)?;
    let q = ctx.gibbs.as_slice();
    let d = if (alpha_breve - 1.0).abs() < LIMIT_TOL {
        bregman_divergence(&Generator::Shannon, p, &ctx.gibbs)?
    } else {
        let a = alpha_breve;
        let mut sum = 0.0;
        for (j, (&pj, &qj)) in p.as_slice().iter().zip(q).enumerate() {
            if pj == 0.0 {
                if a <= 0.0 {
                    return Err(Error::SingularReference { index: j, value: pj });
                }
                continue;
            }
            sum += pj.powf(a) * qj.powf(1.0 - a);
        }
        let sign = if a < 0.0 { -1.0 } else { 1.0 };
        sign / (a - 1.0) * sum.ln()
    };
    Ok(ctx.free_energy + t * d)
}

/// (E₂ − E₁)/((E₂ − F)^α − (E₁ − F)^α): converts α-heat or α-work on a
/// two-level transition into the standard quantity.
pub fn two_level_conversion(e1: f64, e2: f64, f: f64, alpha: f64) -> Result<f64> {
    let den = alpha_power(e2 - f, alpha)? - alpha_power(e1 - f, alpha)?;
    if den.abs() < 1e-14 {
        return Err(Error::Degenerate(format!("transition {e1} → {e2} has α-gap {den:e}")));
    }
    Ok((e2 - e1) / den)
}
