//! Process records from isochores, adiabats and isotherms; heat machines built from them.

use crate::accounting::{
    alpha_heat, alpha_work, clausius_lhs, Coupling, Ledger, ProcessRecord, Sample, Segment, SegmentKind,
};
use crate::bregman::{bregman_divergence, divergence_neglog, DivergenceReport};
use crate::entropy::Generator;
use crate::thermal::{
    alpha_power, beta_from_temperature, check_dims, gibbs_state, multi_bath_fixed_point, BathCoupling,
    LevelSystem, ProbVector,
};
use crate::{Error, Result};

/// Column sums and fixed points of stochastic matrices must hold to this.
pub const MAP_TOL: f64 = 1e-10;
/// Cycle convergence threshold on ‖p_start − p_end‖∞.
pub const CYCLE_TOL: f64 = 1e-12;
/// Staircase discretization error allowed at N steps is this over N.
pub const STAIRCASE_CONST: f64 = 10.0;

pub const COLD_BATH: usize = 0;
pub const HOT_BATH: usize = 1;

/// Staircase tolerance at `n` stairs.
pub fn staircase_tolerance(n: usize) -> f64 {
    STAIRCASE_CONST / n as f64
}

/// 2·C/n with C = max N·|err(N)| over coarse stair counts of the same protocol.
pub fn fitted_staircase_tolerance(coarse: &[(usize, f64)], n: usize) -> Result<f64> {
    if coarse.len() < 2 || coarse.iter().any(|(k, e)| *k == 0 || !e.is_finite()) {
        return Err(Error::InvalidInput("staircase fit needs two or more finite samples".into()));
    }
    let c = coarse.iter().map(|&(k, e)| k as f64 * e.abs()).fold(0.0, f64::max);
    Ok(2.0 * c / n as f64)
}

/// How an isochore moves populations toward the bath fixed point.
#[derive(Clone, Debug, PartialEq)]
pub enum ThermalMap {
    Full,
    /// p ↦ (1 − y)p + y·p_ref.
    Uniform { y: f64 },
    /// Column-stochastic matrix, `m[i][j]` = probability of j → i.
    Stochastic(Vec<Vec<f64>>),
}

impl ThermalMap {
    fn apply(&self, p: &[f64], p_ref: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Full => Ok(p_ref.to_vec()),
            Self::Uniform { y } => {
                if !(0.0..=1.0).contains(y) {
                    return Err(Error::InvalidMap(format!("uniform map y = {y}")));
                }
                Ok(p.iter().zip(p_ref).map(|(a, b)| (1.0 - y) * a + y * b).collect())
            }
            Self::Stochastic(m) => {
                validate_stochastic(m, p_ref)?;
                Ok(mat_vec(m, p))
            }
        }
    }
}

fn mat_vec(m: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
}

/// Checks a column-stochastic matrix and that it fixes `p_ref`.
pub fn validate_stochastic(m: &[Vec<f64>], p_ref: &[f64]) -> Result<()> {
    let n = p_ref.len();
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMap(format!("matrix is not {n}×{n}")));
    }
    if m.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidMap("negative or non-finite entry".into()));
    }
    for j in 0..n {
        let col: f64 = m.iter().map(|r| r[j]).sum();
        if (col - 1.0).abs() > MAP_TOL {
            return Err(Error::InvalidMap(format!("column {j} sums to {col}")));
        }
    }
    let image = mat_vec(m, p_ref);
    let dev = image.iter().zip(p_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dev > MAP_TOL {
        return Err(Error::InvalidMap(format!("bath fixed point moves by {dev:e}")));
    }
    Ok(())
}

/// Declarative protocol step.
#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolStep {
    /// Fixed levels, one or more baths on their manifolds.
    Isochore { baths: Vec<BathCoupling>, map: ThermalMap },
    /// Populations frozen while the levels move linearly to `target`.
    Adiabat { target: LevelSystem, substeps: usize, duration: f64 },
    /// Staircase of `steps` adiabat/full-isochore pairs along linear β and level paths.
    Isotherm { bath: usize, beta_start: f64, beta_end: f64, target: LevelSystem, steps: usize },
}

impl ProtocolStep {
    pub fn isochore(bath: usize, beta: f64, map: ThermalMap) -> Self {
        Self::Isochore { baths: vec![BathCoupling::full(bath, beta)], map }
    }

    pub fn adiabat(target: LevelSystem) -> Self {
        Self::Adiabat { target, substeps: 1, duration: 1.0 }
    }

    pub fn isotherm(bath: usize, beta: f64, target: LevelSystem, steps: usize) -> Self {
        Self::Isotherm { bath, beta_start: beta, beta_end: beta, target, steps }
    }

    fn leading_beta(&self) -> Option<f64> {
        match self {
            Self::Isochore { baths, .. } => baths.first().map(|b| b.beta),
            Self::Isotherm { beta_start, .. } => Some(*beta_start),
            Self::Adiabat { .. } => None,
        }
    }
}

/// Options for `run_protocol_with`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Coupling of the first sample; defaults to isolated at the first bath's β.
    pub initial_coupling: Option<Coupling>,
    /// Generators whose contractivity gaps are attached to every segment.
    pub monitors: Vec<Generator>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { initial_coupling: None, monitors: vec![Generator::Alpha(1.0), Generator::Alpha(2.0)] }
    }
}

pub fn run_protocol(initial: &ProbVector, levels: &LevelSystem, steps: &[ProtocolStep]) -> Result<ProcessRecord> {
    run_protocol_with(initial, levels, steps, &RunOptions::default())
}

fn merge_gaps(acc: &mut Vec<(Generator, DivergenceReport)>, new: Vec<(Generator, DivergenceReport)>) {
    if acc.is_empty() {
        *acc = new;
        return;
    }
    for (slot, (_, rep)) in acc.iter_mut().zip(new) {
        if rep.gap < slot.1.gap {
            slot.1 = rep;
        }
    }
}

fn gaps(
    monitors: &[Generator],
    p_i: &[f64],
    p_f: &[f64],
    p_ref: &[f64],
    neglog_ref: &[f64],
) -> Result<Vec<(Generator, DivergenceReport)>> {
    monitors
        .iter()
        .map(|g| {
            let d_i = divergence_neglog(g, p_i, p_ref, neglog_ref)?;
            let d_f = divergence_neglog(g, p_f, p_ref, neglog_ref)?;
            Ok((*g, DivergenceReport::new(d_i, d_f)))
        })
        .collect()
}

struct Builder<'a> {
    samples: Vec<Sample>,
    segments: Vec<Segment>,
    monitors: &'a [Generator],
}

impl Builder<'_> {
    fn last(&self) -> &Sample {
        self.samples.last().unwrap()
    }

    fn push(&mut self, dt: f64, p: Vec<f64>, levels: LevelSystem, coupling: Coupling) {
        let t = self.last().t + dt;
        self.samples.push(Sample { t, p: ProbVector::from_normalized(p), levels, coupling });
    }

    fn isochore(&mut self, baths: &[BathCoupling], map: &ThermalMap) -> Result<Vec<(Generator, DivergenceReport)>> {
        let cur = self.last().clone();
        let fp = multi_bath_fixed_point(&cur.levels, cur.p.as_slice(), baths)?;
        let p_new = map.apply(cur.p.as_slice(), &fp.p_ref)?;
        if p_new.iter().any(|v| *v < -1e-12) {
            return Err(Error::InvalidMap("map produced negative populations".into()));
        }
        let p_new: Vec<f64> = p_new.into_iter().map(|v| v.max(0.0)).collect();
        let g = gaps(self.monitors, cur.p.as_slice(), &p_new, &fp.p_ref, &fp.neglog_ref)?;
        self.push(1.0, p_new, cur.levels, Coupling::Baths(baths.to_vec()));
        Ok(g)
    }

    fn adiabat(&mut self, target: &LevelSystem, substeps: usize, duration: f64, beta_ref: f64) -> Result<()> {
        let cur = self.last().clone();
        check_dims(cur.levels.len(), target.len())?;
        let n = substeps.max(1);
        for k in 1..=n {
            let levels = cur.levels.lerp(target, k as f64 / n as f64)?;
            self.push(duration / n as f64, cur.p.as_slice().to_vec(), levels, Coupling::Isolated { beta_ref });
        }
        Ok(())
    }
}

/// Runs `steps` from `initial` at `levels`.
pub fn run_protocol_with(
    initial: &ProbVector,
    levels: &LevelSystem,
    steps: &[ProtocolStep],
    opts: &RunOptions,
) -> Result<ProcessRecord> {
    check_dims(levels.len(), initial.len())?;
    let first_beta = steps.iter().find_map(|s| s.leading_beta()).unwrap_or(1.0);
    let coupling = opts.initial_coupling.clone().unwrap_or(Coupling::Isolated { beta_ref: first_beta });
    let mut b = Builder {
        samples: vec![Sample { t: 0.0, p: initial.clone(), levels: levels.clone(), coupling }],
        segments: Vec::new(),
        monitors: &opts.monitors,
    };
    let mut last_beta = first_beta;
    for (i, step) in steps.iter().enumerate() {
        let start = b.samples.len() - 1;
        let mut seg_gaps = Vec::new();
        let kind = match step {
            ProtocolStep::Isochore { baths, map } => {
                seg_gaps = b.isochore(baths, map)?;
                last_beta = baths[0].beta;
                SegmentKind::Isochore
            }
            ProtocolStep::Adiabat { target, substeps, duration } => {
                if !(*duration > 0.0) {
                    return Err(Error::InvalidInput(format!("adiabat duration {duration}")));
                }
                let beta_ref = steps[i + 1..].iter().find_map(|s| s.leading_beta()).unwrap_or(last_beta);
                b.adiabat(target, *substeps, *duration, beta_ref)?;
                SegmentKind::Adiabat
            }
            ProtocolStep::Isotherm { bath, beta_start, beta_end, target, steps: n } => {
                if *n < 1 {
                    return Err(Error::InvalidInput("isotherm needs at least one stair".into()));
                }
                let from = b.last().levels.clone();
                check_dims(from.len(), target.len())?;
                for k in 1..=*n {
                    let s = k as f64 / *n as f64;
                    let beta = beta_start + (beta_end - beta_start) * s;
                    let lv = from.lerp(target, s)?;
                    b.adiabat(&lv, 1, 0.5 / *n as f64, beta)?;
                    let g = b.isochore(&[BathCoupling::full(*bath, beta)], &ThermalMap::Full)?;
                    let t = b.samples.len() - 1;
                    b.samples[t].t = b.samples[t - 1].t + 0.5 / *n as f64;
                    merge_gaps(&mut seg_gaps, g);
                }
                last_beta = *beta_end;
                SegmentKind::Isotherm
            }
        };
        let end = b.samples.len() - 1;
        b.segments.push(Segment { kind, start, end, gaps: seg_gaps });
    }
    ProcessRecord::new(b.samples, b.segments)
}

/// Largest ‖p − p_β‖∞ over samples, with β taken from each sample's coupling.
pub fn max_thermal_deviation(rec: &ProcessRecord) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in rec.samples() {
        let p_ref = match &s.coupling {
            Coupling::Isolated { beta_ref } => gibbs_state(&s.levels, *beta_ref)?.gibbs.into_vec(),
            Coupling::Baths(cs) => multi_bath_fixed_point(&s.levels, s.p.as_slice(), cs)?.p_ref,
        };
        worst = worst.max(s.p.as_slice().iter().zip(&p_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Staircase isotherm starting in the Gibbs state of `from` at `beta_start`.
pub fn staircase_isotherm(
    (beta_start, beta_end): (f64, f64),
    (from, to): (&LevelSystem, &LevelSystem),
    n: usize,
) -> Result<ProcessRecord> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("staircase needs N ≥ 2, got {n}")));
    }
    let ctx = gibbs_state(from, beta_start)?;
    let opts = RunOptions { initial_coupling: Some(Coupling::single(0, beta_start)), ..RunOptions::default() };
    let step = ProtocolStep::Isotherm { bath: 0, beta_start, beta_end, target: to.clone(), steps: n };
    run_protocol_with(&ctx.gibbs, from, &[step], &opts)
}

/// Levels E_j = −T ln p_j, lowest level at zero.
pub fn levels_for_state(p: &ProbVector, t: f64) -> Result<LevelSystem> {
    if let Some((index, &value)) = p.as_slice().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::SingularReference { index, value });
    }
    let e: Vec<f64> = p.as_slice().iter().map(|v| -t * v.ln()).collect();
    let m = e.iter().cloned().fold(f64::INFINITY, f64::min);
    LevelSystem::new(e.into_iter().map(|x| x - m).collect())
}

fn preparation_steps(
    p_i: &ProbVector,
    h_i: &LevelSystem,
    p_f: &ProbVector,
    h_f: &LevelSystem,
    t: f64,
    n: usize,
    bath: usize,
) -> Result<Vec<ProtocolStep>> {
    let beta = beta_from_temperature(t)?;
    let h_a = levels_for_state(p_i, t)?;
    let h_c = levels_for_state(p_f, t)?;
    Ok(vec![
        ProtocolStep::adiabat(h_a),
        ProtocolStep::isotherm(bath, beta, h_i.clone(), n),
        ProtocolStep::isotherm(bath, beta, h_f.clone(), n),
        ProtocolStep::isotherm(bath, beta, h_c, n),
        ProtocolStep::adiabat(h_f.clone()),
    ])
}

/// Result of a three-stage reversible preparation.
#[derive(Clone, Debug)]
pub struct Preparation {
    pub record: ProcessRecord,
    pub work: f64,
    pub heat: f64,
    /// ΔF_α − T^α D_α(p_i, p_β,i) + T^α D_α(p_f, p_β,f).
    pub closed_form: f64,
}

/// Quench to levels that make p_i thermal, staircase isotherms through H_i and H_f
/// to levels that make p_f thermal, quench back to H_f.
pub fn reversible_preparation(
    (p_i, h_i): (&ProbVector, &LevelSystem),
    (p_f, h_f): (&ProbVector, &LevelSystem),
    t: f64,
    alpha: f64,
    n: usize,
) -> Result<Preparation> {
    check_dims(h_i.len(), p_i.len())?;
    check_dims(h_i.len(), p_f.len())?;
    check_dims(h_i.len(), h_f.len())?;
    let beta = beta_from_temperature(t)?;
    let steps = preparation_steps(p_i, h_i, p_f, h_f, t, n, 0)?;
    let opts = RunOptions { initial_coupling: Some(Coupling::Isolated { beta_ref: beta }), ..RunOptions::default() };
    let record = run_protocol_with(p_i, h_i, &steps, &opts)?;
    let work = alpha_work(&record, alpha)?;
    let heat = alpha_heat(&record, alpha)?.values().sum();
    let gen = Generator::alpha(alpha)?;
    let ta = t.powf(alpha);
    let (ci, cf) = (gibbs_state(h_i, beta)?, gibbs_state(h_f, beta)?);
    let delta_f = crate::accounting::alpha_free_energy(h_f, t, alpha)? - crate::accounting::alpha_free_energy(h_i, t, alpha)?;
    let closed_form =
        delta_f - ta * bregman_divergence(&gen, p_i, &ci.gibbs)? + ta * bregman_divergence(&gen, p_f, &cf.gibbs)?;
    Ok(Preparation { record, work, heat, closed_form })
}

/// Two-bath machine with full-thermalization isochores.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineSpec {
    pub cold: LevelSystem,
    pub hot: LevelSystem,
    pub t_cold: f64,
    pub t_hot: f64,
    pub max_cycles: usize,
}

impl MachineSpec {
    pub fn new(cold: LevelSystem, hot: LevelSystem, t_cold: f64, t_hot: f64) -> Result<Self> {
        check_dims(cold.len(), hot.len())?;
        if !(t_cold > 0.0 && t_hot > t_cold && t_hot.is_finite()) {
            return Err(Error::InvalidInput(format!("need T_h > T_c > 0, got T_c = {t_cold}, T_h = {t_hot}")));
        }
        let order = |l: &LevelSystem| {
            let mut idx: Vec<usize> = (0..l.len()).collect();
            idx.sort_by(|&a, &b| l.energies()[a].total_cmp(&l.energies()[b]));
            idx
        };
        if order(&cold) != order(&hot) {
            return Err(Error::Precondition("adiabats would cross levels".into()));
        }
        Ok(Self { cold, hot, t_cold, t_hot, max_cycles: 100 })
    }

    /// Two-level spec with gaps ΔE_c, ΔE_h and ground states at zero.
    pub fn two_level(gap_cold: f64, gap_hot: f64, t_cold: f64, t_hot: f64) -> Result<Self> {
        Self::new(LevelSystem::new(vec![0.0, gap_cold])?, LevelSystem::new(vec![0.0, gap_hot])?, t_cold, t_hot)
    }

    /// Same levels with both temperatures divided by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.cold.clone(), self.hot.clone(), self.t_cold / s, self.t_hot / s)
    }

    fn strokes(&self) -> Result<Vec<ProtocolStep>> {
        Ok(vec![
            ProtocolStep::adiabat(self.cold.clone()),
            ProtocolStep::isochore(COLD_BATH, beta_from_temperature(self.t_cold)?, ThermalMap::Full),
            ProtocolStep::adiabat(self.hot.clone()),
            ProtocolStep::isochore(HOT_BATH, beta_from_temperature(self.t_hot)?, ThermalMap::Full),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MachineMode {
    Engine,
    Refrigerator,
    /// Zero work per cycle.
    Idle,
    /// Heat flows without producing work or cooling.
    Other,
}

/// One converged Otto cycle.
#[derive(Clone, Debug)]
pub struct OttoReport {
    pub record: ProcessRecord,
    pub cycles: usize,
    pub q_cold: f64,
    pub q_hot: f64,
    pub work: f64,
    /// −W/Q_h in engine mode.
    pub eta: Option<f64>,
    pub mode: MachineMode,
    /// α = 1 ledger of each stroke.
    pub strokes: Vec<(SegmentKind, Ledger)>,
}

/// Four-stroke Otto cycle starting from the hot Gibbs state at the hot levels.
pub fn otto_cycle(spec: &MachineSpec) -> Result<OttoReport> {
    let beta_h = beta_from_temperature(spec.t_hot)?;
    let mut p = gibbs_state(&spec.hot, beta_h)?.gibbs;
    let opts = RunOptions { initial_coupling: Some(Coupling::single(HOT_BATH, beta_h)), ..RunOptions::default() };
    let steps = spec.strokes()?;
    for cycle in 1..=spec.max_cycles.max(1) {
        let record = run_protocol_with(&p, &spec.hot, &steps, &opts)?;
        let end = record.last().p.clone();
        if end.max_abs_diff(&p) <= CYCLE_TOL {
            let heat = alpha_heat(&record, 1.0)?;
            let q_cold = heat.get(&COLD_BATH).copied().unwrap_or(0.0);
            let q_hot = heat.get(&HOT_BATH).copied().unwrap_or(0.0);
            // closed cycle: ΔH = 0
            let work = -(q_cold + q_hot);
            // populations after the cold stroke against the hot ones, level by level
            let pc = record.samples()[record.segments()[1].end].p.as_slice();
            let rel = pc.iter().zip(end.as_slice()).map(|(a, b)| (a - b).abs() / a.max(*b)).fold(0.0, f64::max);
            let mode = if rel <= 1e-9 {
                MachineMode::Idle
            } else if work < 0.0 && q_hot > 0.0 {
                MachineMode::Engine
            } else if work > 0.0 && q_cold > 0.0 {
                MachineMode::Refrigerator
            } else {
                MachineMode::Other
            };
            let eta = (mode == MachineMode::Engine).then(|| -work / q_hot);
            let strokes = record
                .segments()
                .iter()
                .map(|s| Ok((s.kind, Ledger::compute(&record.slice(s.start, s.end)?, 1.0)?)))
                .collect::<Result<_>>()?;
            return Ok(OttoReport { record, cycles: cycle, q_cold, q_hot, work, eta, mode, strokes });
        }
        p = end;
    }
    Err(Error::NotConverged("Otto cycle"))
}

/// Two-level conversion factor (E₂ − E₁)/((E₂ − F)^α − (E₁ − F)^α) at temperature T.
fn conversion(levels: &LevelSystem, t: f64, alpha: f64) -> Result<f64> {
    let ctx = gibbs_state(levels, beta_from_temperature(t)?)?;
    let (s1, s2) = (ctx.shifts()[0], ctx.shifts()[1]);
    let den = alpha_power(s2, alpha)? - alpha_power(s1, alpha)?;
    if den.abs() < 1e-300 {
        return Err(Error::Degenerate("two-level gap vanishes".into()));
    }
    Ok((levels.energies()[1] - levels.energies()[0]) / den)
}

/// η_αCI = 1 − (T_c/T_h)^α · K_c/K_h for a two-level machine.
pub fn otto_alpha_bound(spec: &MachineSpec, alpha: f64) -> Result<f64> {
    if spec.cold.len() != 2 {
        return Err(Error::Precondition(format!("η_αCI needs two levels, got {}", spec.cold.len())));
    }
    crate::thermal::check_alpha(alpha)?;
    let kc = conversion(&spec.cold, spec.t_cold, alpha)?;
    let kh = conversion(&spec.hot, spec.t_hot, alpha)?;
    Ok(1.0 - (spec.t_cold / spec.t_hot).powf(alpha) * kc / kh)
}

/// 300 log-spaced points on [0.01, 3].
pub fn alpha_grid() -> Vec<f64> {
    log_grid(0.01, 3.0, 300)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k + 1 == n => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Direction of the ratio bound after dividing by Q₂,h.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundDirection {
    /// −Q₂c/Q₂h ≤ (T_c/T_h)² (Q₂h < 0).
    AtMost,
    /// Reversed because Q₂h > 0.
    AtLeast,
}

impl BoundDirection {
    fn from_q2h(q2h: f64) -> Self {
        if q2h > 0.0 {
            Self::AtLeast
        } else {
            Self::AtMost
        }
    }

    pub fn holds(&self, ratio: f64, bound: f64) -> bool {
        match self {
            Self::AtMost => ratio <= bound,
            Self::AtLeast => ratio >= bound,
        }
    }
}

/// Half-zero machine: Q₁ vanishes on the cold bath.
#[derive(Clone, Debug)]
pub struct HalfZeroReport {
    pub p_cold: ProbVector,
    pub p_hot: ProbVector,
    pub hot_levels: LevelSystem,
    pub record: ProcessRecord,
    pub q1_cold: f64,
    pub q1_hot: f64,
    pub q2_cold: f64,
    pub q2_hot: f64,
    pub ratio: f64,
    pub bound: f64,
    pub direction: BoundDirection,
}

/// p_h = p_c + {−1, 2, −1}·δp with δp = fraction·p_c,3; hot levels from −T_h ln p_h.
pub fn half_zero_machine(t_cold: f64, t_hot: f64, cold: &LevelSystem, fraction: f64) -> Result<HalfZeroReport> {
    if cold.len() != 3 {
        return Err(Error::Precondition(format!("half-zero machine needs three levels, got {}", cold.len())));
    }
    if !(t_cold > 0.0 && t_hot > t_cold) {
        return Err(Error::InvalidInput(format!("need T_h > T_c > 0, got {t_cold}, {t_hot}")));
    }
    let (bc, bh) = (beta_from_temperature(t_cold)?, beta_from_temperature(t_hot)?);
    let p_cold = gibbs_state(cold, bc)?.gibbs;
    let pc = p_cold.as_slice();
    let dp = fraction * pc[2];
    let ph = vec![pc[0] - dp, pc[1] + 2.0 * dp, pc[2] - dp];
    if ph.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::InvalidInput(format!("δp fraction {fraction} leaves the simplex")));
    }
    let p_hot = ProbVector::from_normalized(ph);
    let hot_levels = levels_for_state(&p_hot, t_hot)?;
    let steps = vec![
        ProtocolStep::adiabat(cold.clone()),
        ProtocolStep::isochore(COLD_BATH, bc, ThermalMap::Full),
        ProtocolStep::adiabat(hot_levels.clone()),
        ProtocolStep::isochore(HOT_BATH, bh, ThermalMap::Full),
    ];
    let opts = RunOptions { initial_coupling: Some(Coupling::single(HOT_BATH, bh)), ..RunOptions::default() };
    let record = run_protocol_with(&p_hot, &hot_levels, &steps, &opts)?;
    let q1 = alpha_heat(&record, 1.0)?;
    let q2 = alpha_heat(&record, 2.0)?;
    let (q2_cold, q2_hot) = (q2[&COLD_BATH], q2[&HOT_BATH]);
    let bound = (t_cold / t_hot).powi(2);
    Ok(HalfZeroReport {
        p_cold,
        p_hot,
        hot_levels,
        q1_cold: q1[&COLD_BATH],
        q1_hot: q1[&HOT_BATH],
        q2_cold,
        q2_hot,
        ratio: -q2_cold / q2_hot,
        bound,
        direction: BoundDirection::from_q2h(q2_hot),
        record,
    })
}

/// Member of the family (1 − 3x/4, x/2, x/4), x ∈ (0, 4/3).
pub fn s_curve_state(x: f64) -> Result<ProbVector> {
    if !(x > 0.0 && x < 4.0 / 3.0) {
        return Err(Error::InvalidInput(format!("x = {x} outside (0, 4/3)")));
    }
    ProbVector::new(vec![1.0 - 0.75 * x, 0.5 * x, 0.25 * x])
}

fn s_curve_entropy(x: f64) -> f64 {
    [1.0 - 0.75 * x, 0.5 * x, 0.25 * x].iter().map(|p| -p * p.ln()).sum()
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(Error::RootNotFound(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// x where the Shannon entropy of the family peaks.
pub fn s_curve_peak() -> f64 {
    // dS/dx = (3/4)ln(1 − 3x/4) − (1/2)ln(x/2) − (1/4)ln(x/4)
    let d = |x: f64| 0.75 * (1.0 - 0.75 * x).ln() - 0.5 * (0.5 * x).ln() - 0.25 * (0.25 * x).ln();
    bisect(d, 1e-9, 4.0 / 3.0 - 1e-9, 1e-14).expect("derivative changes sign on the open interval")
}

/// The other x of the family with the same Shannon entropy as `x0`.
pub fn equal_entropy_partner(x0: f64) -> Result<f64> {
    s_curve_state(x0)?;
    let peak = s_curve_peak();
    let target = s_curve_entropy(x0);
    let f = |x: f64| s_curve_entropy(x) - target;
    if (x0 - peak).abs() < 1e-9 {
        return Ok(x0);
    }
    if x0 < peak {
        bisect(f, peak, 4.0 / 3.0 - 1e-15, 1e-12)
    } else {
        bisect(f, 1e-15, peak, 1e-12)
    }
}

/// Full-zero machine: Q₁ vanishes on both baths.
#[derive(Clone, Debug)]
pub struct FullZeroReport {
    pub record: ProcessRecord,
    pub q1_cold: f64,
    pub q1_hot: f64,
    pub q2_cold: f64,
    pub q2_hot: f64,
    pub ratio: f64,
    pub bound: f64,
    pub direction: BoundDirection,
}

/// Reversible p_A → p_B at T_c then p_B → p_A at T_h, both at the levels that make p_A cold-thermal.
pub fn full_zero_machine(t_cold: f64, t_hot: f64, p_a: &ProbVector, p_b: &ProbVector, n: usize) -> Result<FullZeroReport> {
    check_dims(p_a.len(), p_b.len())?;
    if p_a.len() < 3 {
        return Err(Error::Precondition("full-zero machine needs at least three levels".into()));
    }
    let (sa, sb) = (Generator::Shannon.entropy(p_a)?, Generator::Shannon.entropy(p_b)?);
    if (sa - sb).abs() > 1e-10 {
        return Err(Error::Precondition(format!("Shannon entropies differ by {:e}", sa - sb)));
    }
    if !(t_cold > 0.0 && t_hot > 0.0) {
        return Err(Error::InvalidInput(format!("temperatures {t_cold}, {t_hot}")));
    }
    let h = levels_for_state(p_a, t_cold)?;
    let mut steps = preparation_steps(p_a, &h, p_b, &h, t_cold, n, COLD_BATH)?;
    steps.extend(preparation_steps(p_b, &h, p_a, &h, t_hot, n, HOT_BATH)?);
    let bc = beta_from_temperature(t_cold)?;
    let opts = RunOptions { initial_coupling: Some(Coupling::Isolated { beta_ref: bc }), ..RunOptions::default() };
    let record = run_protocol_with(p_a, &h, &steps, &opts)?;
    let q1 = alpha_heat(&record, 1.0)?;
    let q2 = alpha_heat(&record, 2.0)?;
    let get = |m: &std::collections::BTreeMap<usize, f64>, k| m.get(&k).copied().unwrap_or(0.0);
    let (q2_cold, q2_hot) = (get(&q2, COLD_BATH), get(&q2, HOT_BATH));
    Ok(FullZeroReport {
        q1_cold: get(&q1, COLD_BATH),
        q1_hot: get(&q1, HOT_BATH),
        q2_cold,
        q2_hot,
        ratio: -q2_cold / q2_hot,
        bound: (t_cold / t_hot).powi(2),
        direction: BoundDirection::from_q2h(q2_hot),
        record,
    })
}

/// Leading term and exact values of ΔS_α and β^αQ_α for an isochore p_h − dp → p_h.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowTExpansion {
    /// α Σ_j dp_j ln(−ln p_h,j), shared by both series.
    pub leading: f64,
    pub delta_s: f64,
    pub beta_q: f64,
}

impl LowTExpansion {
    pub fn entropy_residual(&self) -> f64 {
        (self.delta_s - self.leading).abs()
    }

    pub fn heat_residual(&self) -> f64 {
        (self.beta_q - self.leading).abs()
    }
}

pub fn low_t_expansion(p_h: &ProbVector, dp: &[f64], alpha: f64) -> Result<LowTExpansion> {
    check_dims(p_h.len(), dp.len())?;
    crate::thermal::check_alpha(alpha)?;
    let ph = p_h.as_slice();
    if let Some((j, _)) = ph.iter().enumerate().find(|(_, v)| **v >= 1.0) {
        return Err(Error::Degenerate(format!("p_h,{j} = 1 makes ln(−ln p) singular")));
    }
    if let Some((index, &value)) = ph.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::SingularReference { index, value });
    }
    let total: f64 = dp.iter().sum();
    if total.abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("Σ dp = {total:e}")));
    }
    let x: Vec<f64> = ph.iter().map(|v| -v.ln()).collect();
    let leading = alpha * dp.iter().zip(&x).map(|(d, xj)| d * xj.ln()).sum::<f64>();
    let p_c = ProbVector::new(ph.iter().zip(dp).map(|(a, d)| a - d).collect())?;
    let gen = Generator::Alpha(alpha);
    let delta_s = gen.entropy(p_h)? - gen.entropy(&p_c)?;
    let beta_q = dp.iter().zip(&x).map(|(d, xj)| d * xj.powf(alpha)).sum();
    Ok(LowTExpansion { leading, delta_s, beta_q })
}

/// Clausius left-hand side of a record for each generator.
pub fn clausius_table(rec: &ProcessRecord, gens: &[Generator]) -> Result<Vec<(Generator, f64)>> {
    gens.iter().map(|g| Ok((*g, clausius_lhs(rec, g)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::delta_entropy;

    fn lv(e: &[f64]) -> LevelSystem {
        LevelSystem::new(e.to_vec()).unwrap()
    }

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_isochore_reaches_gibbs() {
        let levels = lv(&[0.0, 0.4, 1.3]);
        let rec = run_protocol(&pv(&[0.1, 0.1, 0.8]), &levels, &[ProtocolStep::isochore(0, 2.0, ThermalMap::Full)]).unwrap();
        let g = gibbs_state(&levels, 2.0).unwrap().gibbs;
        assert!(rec.last().p.max_abs_diff(&g) < 1e-12);
        let seg = &rec.segments()[0];
        assert_eq!(seg.gaps.len(), 2);
        assert!(seg.gaps.iter().all(|(_, r)| r.is_valid() && r.d_final < 1e-14));
    }

    #[test]
    fn adiabat_keeps_entropy() {
        let p = pv(&[0.2, 0.5, 0.3]);
        let rec = run_protocol(&p, &lv(&[0.0, 1.0, 2.0]), &[ProtocolStep::Adiabat { target: lv(&[0.0, 3.0, 3.5]), substeps: 7, duration: 2.0 }]).unwrap();
        assert_eq!(rec.samples().len(), 8);
        assert!((rec.last().t - 2.0).abs() < 1e-14);
        for a in [0.5, 1.0, 2.0] {
            assert_eq!(delta_entropy(&rec, &Generator::Alpha(a)).unwrap(), 0.0);
            assert_eq!(alpha_heat(&rec, a).unwrap().values().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn stochastic_map_checks() {
        let levels = lv(&[0.0, 1.0]);
        let g = gibbs_state(&levels, 1.0).unwrap().gibbs.into_vec();
        // detailed-balance two-level map
        let k = 0.3;
        let m = vec![vec![1.0 - k * g[1], k * g[0]], vec![k * g[1], 1.0 - k * g[0]]];
        let rec = run_protocol(&pv(&[0.9, 0.1]), &levels, &[ProtocolStep::isochore(0, 1.0, ThermalMap::Stochastic(m))]).unwrap();
        assert!(rec.segments()[0].gaps.iter().all(|(_, r)| r.is_valid()));
        let bad = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let err = run_protocol(&pv(&[0.9, 0.1]), &levels, &[ProtocolStep::isochore(0, 1.0, ThermalMap::Stochastic(bad))]);
        assert!(matches!(err, Err(Error::InvalidMap(_))));
        let not_stochastic = vec![vec![0.5, 0.0], vec![0.6, 1.0]];
        assert!(validate_stochastic(&not_stochastic, &g).is_err());
        assert!(matches!(
            run_protocol(&pv(&[0.9, 0.1]), &levels, &[ProtocolStep::isochore(0, 1.0, ThermalMap::Uniform { y: 1.5 })]),
            Err(Error::InvalidMap(_))
        ));
    }

    #[test]
    fn isotherm_tracks_gibbs() {
        let (a, b) = (lv(&[0.0, 1.0]), lv(&[0.0, 2.0]));
        let rec = staircase_isotherm((1.0, 1.0), (&a, &b), 1000).unwrap();
        assert!(rec.last().p.max_abs_diff(&gibbs_state(&b, 1.0).unwrap().gibbs) < 1e-12);
        let dev = max_thermal_deviation(&rec).unwrap();
        assert!(dev > 0.0 && dev < 1e-3, "{dev}");
        let trivial = staircase_isotherm((1.0, 1.0), (&a, &a), 10).unwrap();
        assert_eq!(clausius_lhs(&trivial, &Generator::Alpha(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn staircase_converges() {
        let (a, b) = (lv(&[0.0, 1.0]), lv(&[0.0, 2.0]));
        let rec = staircase_isotherm((1.0, 1.0), (&a, &b), 10_000).unwrap();
        let q2: f64 = alpha_heat(&rec, 2.0).unwrap().values().sum();
        let ds2 = delta_entropy(&rec, &Generator::Alpha(2.0)).unwrap();
        assert!((ds2 - q2).abs() <= 1e-3);
        let q1: f64 = alpha_heat(&rec, 1.0).unwrap().values().sum();
        let ds1 = delta_entropy(&rec, &Generator::Shannon).unwrap();
        assert!((ds1 - q1).abs() <= 1e-3);
        // first law closes
        let l = Ledger::compute(&rec, 2.0).unwrap();
        assert!(l.first_law_residual() < 1e-12);
        assert!(l.clausius_lhs >= -1e-8);
    }

    #[test]
    fn preparation_special_cases() {
        let h = lv(&[0.0, 0.7, 1.5]);
        let g = gibbs_state(&h, 1.0).unwrap().gibbs;
        let prep = reversible_preparation((&g, &h), (&g, &h), 1.0, 2.0, 100).unwrap();
        assert!(prep.work.abs() < 1e-12 && prep.closed_form.abs() < 1e-12);
        let p = pv(&[0.6, 0.1, 0.3]);
        for a in [1.0, 2.0] {
            let prep = reversible_preparation((&p, &h), (&g, &h), 1.0, a, 2000).unwrap();
            let avail = crate::bregman::available_work(a, &p, &h, 1.0).unwrap();
            assert!((prep.closed_form + avail).abs() < 1e-12);
            assert!((prep.work - prep.closed_form).abs() < staircase_tolerance(2000));
        }
        assert!(reversible_preparation((&pv(&[1.0, 0.0, 0.0]), &h), (&g, &h), 1.0, 2.0, 10).is_err());
    }

    #[test]
    fn entropy_preserving_preparation() {
        let x0 = 0.3;
        let x1 = equal_entropy_partner(x0).unwrap();
        let (pa, pb) = (s_curve_state(x0).unwrap(), s_curve_state(x1).unwrap());
        let s = |g: Generator, p: &ProbVector| g.entropy(p).unwrap();
        assert!((s(Generator::Shannon, &pa) - s(Generator::Shannon, &pb)).abs() < 1e-10);
        let h = lv(&[0.0, 0.5, 1.0]);
        let n = 4000;
        let prep = reversible_preparation((&pa, &h), (&pb, &h), 1.0, 1.0, n).unwrap();
        assert!(prep.heat.abs() < staircase_tolerance(n));
        let prep2 = reversible_preparation((&pa, &h), (&pb, &h), 1.0, 2.0, n).unwrap();
        let want = s(Generator::Alpha(2.0), &pb) - s(Generator::Alpha(2.0), &pa);
        assert!(want.abs() > 1e-2);
        assert!((prep2.heat - want).abs() < staircase_tolerance(n));
    }

    #[test]
    fn otto_examples() {
        let spec = MachineSpec::two_level(1.0, 2.0, 0.03, 0.12).unwrap();
        let r = otto_cycle(&spec).unwrap();
        assert_eq!(r.cycles, 1);
        assert_eq!(r.mode, MachineMode::Engine);
        assert!((r.eta.unwrap() - 0.5).abs() < 1e-10);
        assert!(r.record.is_cyclic(1e-12));
        assert_eq!(r.strokes.len(), 4);
        assert!((otto_alpha_bound(&spec, 1.0).unwrap() - 0.75).abs() < 1e-15);
        let b = otto_alpha_bound(&spec, 0.5).unwrap();
        assert!(b < 0.75 && b >= 0.5);
        assert!((b - 0.6465).abs() < 1e-3);
        // uniform temperature rescaling leaves η unchanged
        let r3 = otto_cycle(&spec.scaled(3.0).unwrap()).unwrap();
        assert!((r3.eta.unwrap() - r.eta.unwrap()).abs() < 1e-10);
        let near = otto_alpha_bound(&spec.scaled(3.0).unwrap(), 0.01).unwrap();
        assert!((near - 0.5).abs() <= 0.02);
        // crossover
        let idle = otto_cycle(&MachineSpec::two_level(1.0, 2.0, 0.05, 0.1).unwrap()).unwrap();
        assert_eq!(idle.mode, MachineMode::Idle);
        assert!(idle.eta.is_none());
        let fridge = otto_cycle(&MachineSpec::two_level(1.0, 4.0, 0.1, 0.2).unwrap()).unwrap();
        assert_eq!(fridge.mode, MachineMode::Refrigerator);
        assert!(MachineSpec::two_level(1.0, 2.0, 0.2, 0.1).is_err());
        assert!(MachineSpec::new(lv(&[0.0, 1.0]), lv(&[1.0, 0.0]), 0.1, 0.2).is_err());
    }

    #[test]
    fn otto_bound_dominates_actual() {
        for &(dc, dh, tc, th) in &[(1.0, 2.0, 0.03, 0.12), (1.0, 3.0, 0.2, 0.9), (0.5, 0.8, 0.1, 0.3)] {
            let spec = MachineSpec::two_level(dc, dh, tc, th).unwrap();
            let eta = otto_cycle(&spec).unwrap().eta.unwrap();
            for a in alpha_grid() {
                let b = otto_alpha_bound(&spec, a).unwrap();
                assert!(b >= eta - 1e-12, "{a}: {b} < {eta}");
            }
        }
    }

    #[test]
    fn half_zero_example() {
        let r = half_zero_machine(0.5, 1.0, &lv(&[0.0, 1.0, 2.0]), 0.05).unwrap();
        let e = r.hot_levels.energies();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 1.98564).abs() < 1e-4 && (e[2] - 4.05038).abs() < 1e-4);
        assert!(r.q1_cold.abs() < 1e-12);
        assert!((r.q2_cold - 0.0015876).abs() < 1e-6);
        assert!((r.q2_hot + 0.0067814).abs() < 1e-6);
        assert!((r.ratio - 0.234).abs() < 5e-3);
        assert_eq!(r.direction, BoundDirection::AtMost);
        assert!(r.direction.holds(r.ratio, r.bound));
        assert!(r.record.is_cyclic(1e-12));
        assert!(half_zero_machine(0.5, 1.0, &lv(&[0.0, 1.0, 2.0]), 30.0).is_err());
    }

    #[test]
    fn equal_entropy_family() {
        let peak = s_curve_peak();
        // analytic peak: (1 − 3x/4)^3 = (x/2)^2 (x/4)
        let f = |x: f64| (1.0 - 0.75 * x).powi(3) - (0.5 * x).powi(2) * 0.25 * x;
        assert!(f(peak).abs() < 1e-12);
        for x0 in [0.3, 0.5, 1.2] {
            let x1 = equal_entropy_partner(x0).unwrap();
            assert!((x1 - x0).abs() > 1e-3);
            assert!((s_curve_entropy(x1) - s_curve_entropy(x0)).abs() < 1e-11);
            assert!((equal_entropy_partner(x1).unwrap() - x0).abs() < 1e-9);
        }
    }

    #[test]
    fn full_zero_machine_equality() {
        let x0 = 0.3;
        let (pa, pb) = (s_curve_state(x0).unwrap(), s_curve_state(equal_entropy_partner(x0).unwrap()).unwrap());
        let n = 4000;
        let r = full_zero_machine(0.5, 1.0, &pa, &pb, n).unwrap();
        assert!(r.record.is_cyclic(1e-10));
        assert!(r.q1_cold.abs() < staircase_tolerance(n) && r.q1_hot.abs() < staircase_tolerance(n));
        assert!((r.ratio - 0.25).abs() < 1e-2);
        let swapped = full_zero_machine(1.0, 0.5, &pa, &pb, n).unwrap();
        assert!((swapped.ratio - 4.0).abs() < 0.1);
        assert!((swapped.ratio * r.ratio - 1.0).abs() < 0.05);
        let same = full_zero_machine(0.5, 1.0, &pa, &pa, 1000).unwrap();
        assert!(same.q2_cold.abs() < 1e-12);
        assert!(same.q2_hot.abs() < staircase_tolerance(1000) && same.q1_hot.abs() < staircase_tolerance(1000));
        assert!(matches!(full_zero_machine(0.5, 1.0, &pa, &pv(&[0.5, 0.3, 0.2]), 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn low_t_leading_terms() {
        let ph = pv(&[0.97, 0.025, 0.005]);
        let zero = low_t_expansion(&ph, &[0.0; 3], 0.1).unwrap();
        assert_eq!((zero.leading, zero.delta_s, zero.beta_q), (0.0, 0.0, 0.0));
        let dp = [-1e-3, 8e-4, 2e-4];
        let e = low_t_expansion(&ph, &dp, 0.01).unwrap();
        assert!(e.entropy_residual() < 0.05 * e.leading.abs());
        assert!(e.heat_residual() < 0.05 * e.leading.abs());
        assert!(low_t_expansion(&pv(&[1.0, 0.0]), &[0.0, 0.0], 0.1).is_err());
        assert!(low_t_expansion(&ph, &[1e-3, 0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn grid() {
        let g = alpha_grid();
        assert_eq!(g.len(), 300);
        assert_eq!((g[0], g[299]), (0.01, 3.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
