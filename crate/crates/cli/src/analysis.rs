//! Row computation for `run` and `sweep`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gci_core::accounting::{alpha_heat, delta_entropy, high_t_bound, weighted_heat, Ledger, DEFAULT_RESOLUTION_TOL};
use gci_core::quantum::{coherence_measure, matrix_entropy, max_coherence_heat};
use gci_core::thermal::{gibbs_state, validate_distribution};
use gci_core::{BathCoupling, DensityMatrix, Generator, HermitianOperator, LevelSystem, MachineSpec, ProbVector, ProtocolStep, ThermalMap};

use crate::scenario::{Analysis, Family, Initial, MapSpec, Scenario, Step};
use crate::table::{Cell, Table};
use crate::{CliError, Op};

/// Command-line knobs applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub steps: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Generator parameter; replaces the scenario grid.
    Alpha,
    /// Multiplies every bath temperature.
    #[value(name = "temperature_scale", alias = "temperature-scale")]
    TemperatureScale,
    /// Staircase steps of every isotherm.
    Steps,
}

impl SweepParam {
    fn column(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::TemperatureScale => "temperature_scale",
            SweepParam::Steps => "steps",
        }
    }
}

fn levels(e: &[f64]) -> Result<LevelSystem, CliError> {
    LevelSystem::new(e.to_vec()).op("level system")
}

fn generator(family: Family, x: Option<f64>) -> Result<Generator, CliError> {
    let g = match (family, x) {
        (Family::Shannon, _) => Ok(Generator::Shannon),
        (Family::Alpha, Some(a)) => Generator::alpha(a),
        (Family::Tsallis, Some(a)) => Generator::tsallis(a),
        (Family::Renyi, Some(a)) => Generator::renyi(a),
        (_, None) => unreachable!("parametric family without a value"),
    };
    g.op("generator")
}

fn beta(t: f64) -> Result<f64, CliError> {
    gci_core::thermal::beta_from_temperature(t).op("temperature")
}

pub fn density_matrix(re: &[Vec<f64>], im: &[Vec<f64>]) -> gci_core::Result<DensityMatrix> {
    use gci_core::quantum::{CMatrix, C64};
    let rows = re
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, x)| C64::new(*x, im.get(i).map_or(0.0, |row| row[j]))).collect())
        .collect();
    DensityMatrix::new(CMatrix::from_rows(rows)?)
}

/// Initial populations and, for density-matrix input, the full state.
fn initial(sc: &Scenario, ov: &Overrides, h: &LevelSystem) -> Result<(ProbVector, Option<DensityMatrix>), CliError> {
    match sc.initial.as_ref().expect("checked initial state") {
        Initial::Populations(p) => Ok((validate_distribution(p.clone()).op("initial populations")?, None)),
        Initial::Gibbs { bath } => Ok((gibbs_state(h, beta(sc.temperature(*bath))?).op("gibbs state")?.gibbs, None)),
        Initial::Random => {
            let mut r = ChaCha8Rng::seed_from_u64(ov.seed);
            let w: Vec<f64> = (0..h.len()).map(|_| -(1.0 - r.gen::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            Ok((validate_distribution(w.iter().map(|x| x / s).collect()).op("random populations")?, None))
        }
        Initial::DensityMatrix { re, im } => {
            let rho = density_matrix(re, im).op("density matrix")?;
            let p = validate_distribution(rho.populations()).op("density matrix populations")?;
            Ok((p, Some(rho)))
        }
    }
}

fn steps(sc: &Scenario) -> Result<Vec<ProtocolStep>, CliError> {
    sc.protocol
        .iter()
        .map(|s| match s {
            Step::Isochore { bath, manifold, map } => {
                let b = beta(sc.temperature(*bath))?;
                let coupling = match manifold {
                    Some(m) => BathCoupling::on(*bath, b, m.clone()),
                    None => BathCoupling::full(*bath, b),
                };
                let map = match map {
                    MapSpec::Full => ThermalMap::Full,
                    MapSpec::Uniform { y } => ThermalMap::Uniform { y: *y },
                    MapSpec::Stochastic { matrix } => ThermalMap::Stochastic(matrix.clone()),
                };
                Ok(ProtocolStep::Isochore { baths: vec![coupling], map })
            }
            Step::Adiabat { levels: e } => Ok(ProtocolStep::adiabat(levels(e)?)),
            Step::Isotherm { bath, levels: e, steps, end_temperature } => Ok(ProtocolStep::Isotherm {
                bath: *bath,
                beta_start: beta(sc.temperature(*bath))?,
                beta_end: beta(end_temperature.unwrap_or(sc.temperature(*bath)))?,
                target: levels(e)?,
                steps: *steps,
            }),
        })
        .collect()
}

/// Every column of the analysis at one generator value.
fn row(sc: &Scenario, ov: &Overrides, x: Option<f64>) -> Result<Vec<Cell>, CliError> {
    let family = sc.generators.family;
    let gen = generator(family, x)?;
    let h = levels(&sc.system.levels)?;
    let head = x.map_or(Cell::Text(gen.name()), Cell::Num);
    let mut out = vec![head];
    match &sc.analysis {
        Analysis::Ledger => {
            let (p0, _) = initial(sc, ov, &h)?;
            let rec = gci_core::protocols::run_protocol(&p0, &h, &steps(sc)?).op("run_protocol")?;
            if let (Family::Alpha, Some(a)) = (family, x) {
                let l = Ledger::compute_with(&rec, a, ov.tolerance.unwrap_or(DEFAULT_RESOLUTION_TOL)).op("alpha ledger")?;
                let wq = weighted_heat(&rec, &gen).op("weighted heat")?;
                out.extend([l.total_heat(), l.work, l.delta_h, l.delta_s, wq, l.clausius_lhs].map(Cell::Num));
            } else {
                let ds = delta_entropy(&rec, &gen).op("entropy change")?;
                let wq = weighted_heat(&rec, &gen).op("weighted heat")?;
                out.extend([ds, wq, ds - wq].map(Cell::Num));
            }
        }
        Analysis::Otto { hot_levels, cold_bath, hot_bath } => {
            let a = x.expect("alpha family");
            let (tc, th) = (sc.temperature(*cold_bath), sc.temperature(*hot_bath));
            let spec = MachineSpec::new(h, levels(hot_levels)?, tc, th).op("machine spec")?;
            let bound = gci_core::protocols::otto_alpha_bound(&spec, a).op("otto_alpha_bound")?;
            let cycle = gci_core::protocols::otto_cycle(&spec).op("otto_cycle")?;
            out.extend([Cell::Num(bound), cycle.eta.into(), Cell::Num(1.0 - tc / th)]);
        }
        Analysis::HighTBound { margin } => {
            let a = x.expect("tsallis family");
            let Step::Isochore { bath, .. } = &sc.protocol[0] else { unreachable!("checked single isochore") };
            let t = sc.temperature(*bath);
            let (p0, _) = initial(sc, ov, &h)?;
            let rec = gci_core::protocols::run_protocol(&p0, &h, &steps(sc)?).op("run_protocol")?;
            let q1: f64 = alpha_heat(&rec, 1.0).op("alpha heat")?.values().sum();
            let b = high_t_bound(&p0, &rec.last().p, &h, t, a, *margin).op("high_t_bound")?;
            out.extend([Cell::Num(b.bound), Cell::Num(q1), Cell::Bool(b.condition_ok)]);
        }
        Analysis::Coherence { bath } => {
            let (p0, rho) = initial(sc, ov, &h)?;
            let rho = match rho {
                Some(r) => r,
                None => DensityMatrix::diagonal(p0.as_slice()).op("density matrix")?,
            };
            out.push(Cell::Num(matrix_entropy(&gen, &rho).op("matrix entropy")?));
            out.push(Cell::Num(coherence_measure(&gen, &rho, &h).op("coherence measure")?));
            if let (Family::Alpha, Some(a)) = (family, x) {
                let q = max_coherence_heat(a, &rho, &HermitianOperator::diagonal(&h), sc.temperature(*bath))
                    .op("max_coherence_heat")?;
                out.push(Cell::Num(q));
            }
        }
    }
    Ok(out)
}

/// Generator values of the run; `None` stands for the parameter-free Shannon case.
fn points(sc: &Scenario, ov: &Overrides) -> Vec<Option<f64>> {
    match (sc.generators.family, ov.alpha) {
        (Family::Shannon, _) => vec![None],
        (_, Some(a)) => vec![Some(a)],
        _ => sc.generators.points().into_iter().map(Some).collect(),
    }
}

fn apply_steps(sc: &mut Scenario, n: usize) {
    for s in &mut sc.protocol {
        if let Step::Isotherm { steps, .. } = s {
            *steps = n;
        }
    }
}

fn select(sc: &Scenario, full: Vec<Cell>) -> Vec<Cell> {
    let all = sc.analysis.columns(sc.generators.family);
    sc.columns().iter().map(|c| full[all.iter().position(|a| a == c).expect("checked column")].clone()).collect()
}

pub fn run(sc: &Scenario, ov: &Overrides) -> Result<Table, CliError> {
    let mut sc = sc.clone();
    if let Some(n) = ov.steps {
        apply_steps(&mut sc, n);
    }
    let rows = points(&sc, ov).par_iter().map(|x| row(&sc, ov, *x).map(|r| select(&sc, r))).collect::<Result<Vec<_>, _>>()?;
    Ok(Table { columns: sc.columns(), rows })
}

/// One variant of the scenario per grid value, crossed with its generator values.
fn variant(sc: &Scenario, param: SweepParam, v: f64) -> Result<Scenario, String> {
    let mut out = sc.clone();
    match param {
        SweepParam::Alpha => {}
        SweepParam::TemperatureScale => {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("temperature scale must be positive, got {v}"));
            }
            for b in &mut out.baths {
                b.temperature *= v;
            }
            for s in &mut out.protocol {
                if let Step::Isotherm { end_temperature: Some(t), .. } = s {
                    *t *= v;
                }
            }
        }
        SweepParam::Steps => {
            if !(v >= 1.0 && v.fract() == 0.0 && v <= usize::MAX as f64) {
                return Err(format!("steps must be a positive integer, got {v}"));
            }
            apply_steps(&mut out, v as usize);
        }
    }
    Ok(out)
}

pub fn sweep(sc: &Scenario, ov: &Overrides, param: SweepParam, grid: &[f64]) -> Result<Table, CliError> {
    let mut base = sc.clone();
    if let Some(n) = ov.steps {
        apply_steps(&mut base, n);
    }
    if param == SweepParam::Alpha && sc.generators.family == Family::Shannon {
        return Err(CliError::Schema("sweep alpha: the shannon family has no parameter".into()));
    }
    let cols = base.columns();
    let mut columns = Vec::new();
    if param != SweepParam::Alpha {
        columns.push(param.column().to_string());
    }
    columns.extend(cols.iter().cloned());
    columns.push("error".into());

    let jobs: Vec<(f64, Option<f64>)> = grid
        .iter()
        .flat_map(|&v| {
            let xs = if param == SweepParam::Alpha { vec![Some(v)] } else { points(&base, ov) };
            xs.into_iter().map(move |x| (v, x))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, x)| {
            let result = variant(&base, param, v).and_then(|s| row(&s, ov, x).map(|r| select(&s, r)).map_err(|e| e.to_string()));
            let mut out = Vec::with_capacity(columns.len());
            if param != SweepParam::Alpha {
                out.push(Cell::Num(v));
            }
            match result {
                Ok(cells) => {
                    out.extend(cells);
                    out.push(Cell::Text(String::new()));
                }
                Err(msg) => {
                    let head = cols.first().map(String::as_str) == Some(sc.generators.family.column());
                    for (k, _) in cols.iter().enumerate() {
                        out.push(if k == 0 && head { x.map_or(Cell::Empty, Cell::Num) } else { Cell::Empty });
                    }
                    out.push(Cell::Text(msg));
                }
            }
            out
        })
        .collect();
    Ok(Table { columns, rows })
}
