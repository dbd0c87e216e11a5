//! Finite-level systems, probability vectors, Gibbs states and F-shifted moments.

use crate::{Error, Result};

/// Tolerance on |Σp − 1| accepted by [`validate_distribution`].
pub const SUM_TOL: f64 = 1e-9;
/// Negative entries down to this magnitude are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Smallest representable temperature.
pub const MIN_TEMPERATURE: f64 = 1e-12;

/// `x^α` with the conventions used for shifted energies: `0^0 = 1`,
/// negative bases only for integer α.
pub fn alpha_power(x: f64, alpha: f64) -> Result<f64> {
    if x >= 0.0 {
        if alpha == 0.0 {
            return Ok(1.0);
        }
        return Ok(x.powf(alpha));
    }
    if alpha == alpha.trunc() && alpha.abs() < i32::MAX as f64 {
        return Ok(x.powi(alpha as i32));
    }
    Err(Error::AlphaDomain { base: x, alpha })
}

/// Converts a temperature into an inverse temperature.
pub fn beta_from_temperature(t: f64) -> Result<f64> {
    if !t.is_finite() || t < MIN_TEMPERATURE {
        return Err(Error::InvalidInput(format!(
            "temperature {t} below minimum {MIN_TEMPERATURE}"
        )));
    }
    Ok(1.0 / t)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 || beta > 1.0 / MIN_TEMPERATURE {
        return Err(Error::InvalidInput(format!("inverse temperature {beta}")));
    }
    Ok(())
}

/// Energy levels E_j of a finite system.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSystem {
    energies: Vec<f64>,
}

impl LevelSystem {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two levels, got {}",
                energies.len()
            )));
        }
        if let Some((j, e)) = energies.iter().enumerate().find(|(_, e)| !e.is_finite()) {
            return Err(Error::InvalidInput(format!("energy {j} is {e}")));
        }
        Ok(Self { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Levels shifted uniformly by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { energies: self.energies.iter().map(|e| e + c).collect() }
    }

    /// Linear interpolation `(1−s)·self + s·other`.
    pub fn lerp(&self, other: &Self, s: f64) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        let energies = self
            .energies
            .iter()
            .zip(&other.energies)
            .map(|(a, b)| if s == 1.0 { *b } else { a + s * (b - a) })
            .collect();
        Ok(Self { energies })
    }
}

/// Piecewise-linear level schedule E_j(t).
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSchedule {
    knots: Vec<(f64, LevelSystem)>,
}

impl LevelSchedule {
    pub fn new(knots: Vec<(f64, LevelSystem)>) -> Result<Self> {
        let Some((_, first)) = knots.first() else {
            return Err(Error::InvalidInput("empty level schedule".into()));
        };
        let n = first.len();
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput("schedule times must increase".into()));
            }
        }
        if let Some((_, l)) = knots.iter().find(|(_, l)| l.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: l.len() });
        }
        Ok(Self { knots })
    }

    pub fn start(&self) -> f64 {
        self.knots[0].0
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Levels at time `t`, clamped to the schedule's interval.
    pub fn at(&self, t: f64) -> LevelSystem {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1.clone();
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                let s = (t - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1.lerp(&w[1].1, s).expect("dimensions checked");
            }
        }
        k[k.len() - 1].1.clone()
    }
}

/// A validated probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        validate_distribution(raw)
    }

    /// Wraps a vector already known to be normalized and non-negative.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Deterministic state concentrated on level `j`.
    pub fn deterministic(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::InvalidInput(format!("level {j} out of range {n}")));
        }
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        Ok(Self { probs: v })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
    }

    /// Maximum absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Checks and normalizes a raw probability vector.
pub fn validate_distribution(raw: Vec<f64>) -> Result<ProbVector> {
    if raw.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    let mut probs = raw;
    for (j, p) in probs.iter_mut().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("entry {j} is {p}")));
        }
        if *p < -NEGATIVE_CLAMP {
            return Err(Error::InvalidDistribution(format!("entry {j} is {p}")));
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("sum is {sum}")));
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(ProbVector { probs })
}

/// Partition function, free energy and Gibbs state at one inverse temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalContext {
    pub beta: f64,
    /// ln Z with Z = Σ_j e^{−βE_j}.
    pub log_partition: f64,
    pub free_energy: f64,
    pub gibbs: ProbVector,
    /// E_j − F, computed without cancellation.
    shifts: Vec<f64>,
}

impl ThermalContext {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    /// Shifted energies E_j − F, all non-negative.
    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }
}

/// Gibbs state p_{β,j} = e^{−β(E_j − F)} with F = −(1/β) ln Z.
pub fn gibbs_state(levels: &LevelSystem, beta: f64) -> Result<ThermalContext> {
    check_beta(beta)?;
    let e = levels.energies();
    let e_min = levels.min();
    let weights: Vec<f64> = e.iter().map(|x| (-beta * (x - e_min)).exp()).collect();
    let z_rel: f64 = weights.iter().sum();
    let ln_z_rel = z_rel.ln();
    let gibbs = weights.iter().map(|w| w / z_rel).collect();
    let shifts = e.iter().map(|x| (x - e_min) + ln_z_rel / beta).collect();
    Ok(ThermalContext {
        beta,
        log_partition: ln_z_rel - beta * e_min,
        free_energy: e_min - ln_z_rel / beta,
        gibbs: ProbVector::from_normalized(gibbs),
        shifts,
    })
}

/// Standard free energy F = −(1/β) ln Z.
pub fn free_energy(levels: &LevelSystem, beta: f64) -> Result<f64> {
    Ok(gibbs_state(levels, beta)?.free_energy)
}

/// H_α = Σ_j p_j (E_j − F)^α.
pub fn shifted_moment(
    p: &ProbVector,
    levels: &LevelSystem,
    ctx: &ThermalContext,
    alpha: f64,
) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    check_alpha(alpha)?;
    if ctx.shifts.len() == levels.len() && ctx.gibbs.len() == levels.len() {
        moment_of(p.as_slice(), ctx.shifts(), alpha)
    } else {
        Err(Error::DimensionMismatch { expected: levels.len(), found: ctx.shifts.len() })
    }
}

/// H_α for an arbitrary shift F.
pub fn shifted_moment_at(p: &[f64], levels: &LevelSystem, f: f64, alpha: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    check_alpha(alpha)?;
    let shifts: Vec<f64> = levels.energies().iter().map(|e| e - f).collect();
    moment_of(p, &shifts, alpha)
}

pub(crate) fn moment_of(p: &[f64], shifts: &[f64], alpha: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (pj, x) in p.iter().zip(shifts) {
        acc += pj * alpha_power(*x, alpha)?;
    }
    Ok(acc)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!("alpha = {alpha}")));
    }
    Ok(())
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A bath acting on a manifold of levels (all levels when `manifold` is `None`).
#[derive(Clone, Debug, PartialEq)]
pub struct BathCoupling {
    pub bath: usize,
    pub beta: f64,
    pub manifold: Option<Vec<usize>>,
}

impl BathCoupling {
    pub fn full(bath: usize, beta: f64) -> Self {
        Self { bath, beta, manifold: None }
    }

    pub fn on(bath: usize, beta: f64, manifold: Vec<usize>) -> Self {
        Self { bath, beta, manifold: Some(manifold) }
    }

    pub fn levels(&self, n: usize) -> Vec<usize> {
        match &self.manifold {
            Some(m) => m.clone(),
            None => (0..n).collect(),
        }
    }
}

/// Checks β and manifold structure for a set of simultaneous couplings.
pub fn validate_couplings(couplings: &[BathCoupling], n: usize) -> Result<()> {
    let sets: Vec<Vec<usize>> = couplings.iter().map(|c| c.levels(n)).collect();
    for (c, set) in couplings.iter().zip(&sets) {
        check_beta(c.beta)?;
        if set.is_empty() {
            return Err(Error::InvalidInput(format!("bath {} has an empty manifold", c.bath)));
        }
        let mut sorted = set.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("bath {} repeats a level", c.bath)));
        }
        if let Some(j) = sorted.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidInput(format!("manifold level {j} out of range {n}")));
        }
    }
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let shared = sets[a].iter().filter(|j| sets[b].contains(j)).count();
            if shared > 1 {
                return Err(Error::InvalidInput(format!(
                    "manifolds of baths {} and {} share {shared} states",
                    couplings[a].bath, couplings[b].bath
                )));
            }
        }
    }
    Ok(())
}

/// Piecewise-constant bath assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSegment {
    pub start: f64,
    pub end: f64,
    pub couplings: Vec<BathCoupling>,
}

/// Time-ordered, gap-free list of bath segments.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSchedule {
    segments: Vec<BathSegment>,
}

impl BathSchedule {
    pub fn new(segments: Vec<BathSegment>, n_levels: usize) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("empty bath schedule".into()));
        }
        for s in &segments {
            if !(s.end > s.start) {
                return Err(Error::InvalidInput(format!(
                    "segment [{}, {}] is empty",
                    s.start, s.end
                )));
            }
            validate_couplings(&s.couplings, n_levels)?;
        }
        for w in segments.windows(2) {
            if (w[1].start - w[0].end).abs() > 1e-12 * w[0].end.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "gap between segments at t = {}",
                    w[0].end
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[BathSegment] {
        &self.segments
    }

    /// Couplings active at time `t` (left-closed segments).
    pub fn at(&self, t: f64) -> &[BathCoupling] {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or(self.segments.last().filter(|s| t == s.end))
            .map(|s| s.couplings.as_slice())
            .unwrap_or(&[])
    }
}

/// Shift data of one level under a coupling configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelShift {
    pub beta: f64,
    /// E_j − F_k for the bath that owns level j.
    pub shift: f64,
    pub bath: Option<usize>,
}

/// Fixed point of simultaneous thermal maps and the per-level shifts it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub p_ref: Vec<f64>,
    pub shifts: Vec<LevelShift>,
    /// −ln p_ref,j; equals β_k(E_j − F_k) on coupled levels.
    pub neglog_ref: Vec<f64>,
    /// F_k per coupling, in input order.
    pub free_energies: Vec<f64>,
}

/// Fixed point of baths coupled to manifolds that share at most one state.
///
/// Each connected group of manifolds keeps its current total probability;
/// within a group the ratios are Boltzmann factors of the bath owning each
/// level. Levels no bath touches keep their current population and take the
/// full-system shift at the first bath's temperature.
pub fn multi_bath_fixed_point(
    levels: &LevelSystem,
    p: &[f64],
    couplings: &[BathCoupling],
) -> Result<FixedPoint> {
    let n = levels.len();
    check_dims(n, p.len())?;
    if couplings.is_empty() {
        return Err(Error::InvalidInput("no bath couplings".into()));
    }
    validate_couplings(couplings, n)?;
    let e = levels.energies();
    let sets: Vec<Vec<usize>> = couplings.iter().map(|c| c.levels(n)).collect();

    // owner[j] = first coupling containing j
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (k, set) in sets.iter().enumerate() {
        for &j in set {
            owner[j].get_or_insert(k);
        }
    }

    let mut group_of: Vec<Option<usize>> = vec![None; couplings.len()];
    let mut logw: Vec<Option<f64>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..couplings.len() {
        if group_of[seed].is_some() {
            continue;
        }
        let g = groups.len();
        let mut members = vec![seed];
        group_of[seed] = Some(g);
        let anchor = sets[seed][0];
        logw[anchor] = Some(0.0);
        let mut queue = vec![seed];
        while let Some(k) = queue.pop() {
            let known = sets[k].iter().find(|&&j| logw[j].is_some()).copied().unwrap_or(anchor);
            let base = logw[known].unwrap_or(0.0);
            for &j in &sets[k] {
                let w = base - couplings[k].beta * (e[j] - e[known]);
                match logw[j] {
                    Some(prev) if (prev - w).abs() > 1e-9 * (1.0 + w.abs()) => {
                        return Err(Error::InvalidInput(
                            "bath manifolds form an inconsistent cycle".into(),
                        ));
                    }
                    Some(_) => {}
                    None => logw[j] = Some(w),
                }
            }
            for other in 0..couplings.len() {
                if group_of[other].is_none() && sets[other].iter().any(|j| sets[k].contains(j)) {
                    group_of[other] = Some(g);
                    members.push(other);
                    queue.push(other);
                }
            }
        }
        groups.push(members);
    }

    let mut p_ref = p.to_vec();
    let mut log_p_ref: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    for members in &groups {
        let mut lv: Vec<usize> = members.iter().flat_map(|&k| sets[k].iter().copied()).collect();
        lv.sort_unstable();
        lv.dedup();
        let mass: f64 = lv.iter().map(|&j| p[j]).sum();
        let m = lv.iter().map(|&j| logw[j].unwrap()).fold(f64::NEG_INFINITY, f64::max);
        let lse = m + lv.iter().map(|&j| (logw[j].unwrap() - m).exp()).sum::<f64>().ln();
        let ln_mass = if mass > 0.0 { mass.ln() } else { 0.0 };
        for &j in &lv {
            let lp = logw[j].unwrap() - lse;
            log_p_ref[j] = ln_mass + lp;
            p_ref[j] = if mass > 0.0 { mass * lp.exp() } else { 0.0 };
        }
    }

    let free_energies: Vec<f64> = couplings
        .iter()
        .zip(&sets)
        .map(|(c, set)| {
            let j = set[0];
            e[j] + log_p_ref[j] / c.beta
        })
        .collect();

    let fallback = gibbs_state(levels, couplings[0].beta)?;
    let shifts = (0..n)
        .map(|j| match owner[j] {
            Some(k) => LevelShift {
                beta: couplings[k].beta,
                shift: (-log_p_ref[j] / couplings[k].beta).max(0.0),
                bath: Some(couplings[k].bath),
            },
            None => LevelShift {
                beta: couplings[0].beta,
                shift: fallback.shifts()[j],
                bath: None,
            },
        })
        .collect();

    let neglog_ref = log_p_ref.iter().map(|l| -l).collect();
    Ok(FixedPoint { p_ref, shifts, neglog_ref, free_energies })
}
