//! Published numbers recomputed and compared with their expected values.

use std::fmt;

use gci_core::accounting::{alpha_heat, delta_entropy, high_t_bound, DEFAULT_HIGH_T_MARGIN};
use gci_core::protocols::{alpha_grid, half_zero_machine, otto_alpha_bound, otto_cycle, run_protocol, staircase_isotherm};
use gci_core::quantum::{coherence_extraction_protocol, CMatrix, C64};
use gci_core::thermal::gibbs_state;
use gci_core::{DensityMatrix, Generator, HermitianOperator, LevelSystem, MachineSpec, ProbVector, ProtocolStep, ThermalMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Fig2,
    Fig3,
    Halfzero,
    Qutrit,
    IsothermConvergence,
    All,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: measured {}, expected {}", self.name, self.measured, self.expected)
    }
}

fn within(name: &str, x: f64, want: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        measured: if want == 0.0 { format!("{x:.2e}") } else { format!("{x:.6}") },
        expected: format!("{want} ± {tol:e}"),
        pass: (x - want).abs() <= tol,
    }
}

fn holds(name: &str, pass: bool, measured: String, expected: &str) -> Check {
    Check { name: name.into(), measured, expected: expected.into(), pass }
}

fn failed(name: &str, e: gci_core::Error) -> Vec<Check> {
    vec![Check { name: name.into(), measured: format!("error: {e}"), expected: "a result".into(), pass: false }]
}

fn lv(e: &[f64]) -> gci_core::Result<LevelSystem> {
    LevelSystem::new(e.to_vec())
}

fn fig2() -> gci_core::Result<Vec<Check>> {
    let levels = lv(&[-0.5, 0.0, 0.5])?;
    let t = 3.0;
    let p0 = ProbVector::new(vec![0.5, 0.5, 0.0])?;
    let gibbs = gibbs_state(&levels, 1.0 / t)?.gibbs;
    let rec = run_protocol(&p0, &levels, &[ProtocolStep::isochore(0, 1.0 / t, ThermalMap::Full)])?;
    let q1: f64 = alpha_heat(&rec, 1.0)?.values().sum();
    let at_one = high_t_bound(&p0, &gibbs, &levels, t, 1.0, DEFAULT_HIGH_T_MARGIN)?.bound;
    let mut interval: Option<(f64, f64)> = None;
    for k in 0..=400 {
        let a = 0.5 + 1.5 * k as f64 / 400.0;
        let b = high_t_bound(&p0, &gibbs, &levels, t, a, DEFAULT_HIGH_T_MARGIN)?;
        if b.condition_ok && b.bound < at_one && b.bound > q1 {
            interval = Some(interval.map_or((a, a), |(lo, _)| (lo, a)));
        }
    }
    Ok(vec![
        within("fig2 bound at alpha_tilde 1", at_one, 1.189, 1e-3),
        within("fig2 actual Q1", q1, 0.1947, 1e-3),
        holds(
            "fig2 tighter interval",
            interval.is_some(),
            interval.map_or("none".into(), |(a, b)| format!("[{a:.4}, {b:.4}]")),
            "a non-empty interval with Q1 < bound < bound(1)",
        ),
    ])
}

fn fig3() -> gci_core::Result<Vec<Check>> {
    let spec = MachineSpec::two_level(1.0, 2.0, 0.03, 0.12)?;
    let carnot = otto_alpha_bound(&spec, 1.0)?;
    let eta = otto_cycle(&spec)?.eta.unwrap_or(f64::NAN);
    let mut inside = 0;
    for a in alpha_grid().into_iter().filter(|a| *a < 1.0) {
        let b = otto_alpha_bound(&spec, a)?;
        if b >= eta && b < carnot {
            inside += 1;
        }
    }
    let cold = spec.scaled(3.0)?;
    let gaps = [0.5, 0.1, 0.05, 0.01].iter().map(|&a| Ok(otto_alpha_bound(&cold, a)? - eta)).collect::<gci_core::Result<Vec<f64>>>()?;
    let monotone = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
    Ok(vec![
        within("fig3 carnot", carnot, 0.75, 1e-12),
        within("fig3 otto efficiency", eta, 0.5, 1e-10),
        holds("fig3 bound between otto and carnot below alpha 1", inside > 0, format!("{inside} grid points"), "at least one"),
        within("fig3 gap at alpha 0.01, temperatures / 3", gaps[3], 0.0, 0.02),
        holds(
            "fig3 gap shrinks with alpha",
            monotone,
            format!("{:?}", gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()),
            "strictly decreasing |gap|",
        ),
    ])
}

fn halfzero() -> gci_core::Result<Vec<Check>> {
    let r = half_zero_machine(0.5, 1.0, &lv(&[0.0, 1.0, 2.0])?, 1.0 / 20.0)?;
    let e = r.hot_levels.energies();
    let ratio = -r.q2_cold / r.q2_hot;
    Ok(vec![
        within("halfzero hot level 2", e[1], 1.986, 0.01),
        within("halfzero hot level 3", e[2], 4.05, 0.01),
        within("halfzero Q1 cold", r.q1_cold, 0.0, 1e-12),
        within("halfzero ratio -Q2c/Q2h", ratio, 0.234, 0.005),
        within("halfzero bound", r.bound, 0.25, 1e-15),
        holds("halfzero ratio respects bound", r.direction.holds(ratio, r.bound), format!("{ratio:.5} vs {}", r.bound), "inequality holds"),
    ])
}

fn qutrit() -> gci_core::Result<Vec<Check>> {
    let rho = DensityMatrix::new(CMatrix::from_real_rows(&[
        vec![1.0 / 6.0, 1.0 / 400.0, 0.0],
        vec![1.0 / 400.0, 1.0 / 3.0, 1.0 / 20.0],
        vec![0.0, 1.0 / 20.0, 0.5],
    ])?)?;
    let h = HermitianOperator::diagonal(&lv(&[3f64.ln(), 1.5f64.ln(), 0.0])?);
    let (i, z) = (C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    let h_int = HermitianOperator::new(CMatrix::from_rows(vec![vec![z, i, z], vec![-i, z, -i], vec![z, i, z]])?)?;
    let r = coherence_extraction_protocol(&rho, &h, &h_int, 1.0)?;
    Ok(vec![
        within("qutrit t_f", r.t_f.unwrap_or(f64::NAN), 0.204, 0.005),
        within("qutrit Q1", r.q1, 0.0, 1e-8),
        within("qutrit ratio", r.ratio(), 1.92, 0.05),
    ])
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    num / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

fn isotherm_convergence() -> gci_core::Result<Vec<Check>> {
    let (from, to) = (lv(&[0.0, 0.8, 1.7])?, lv(&[0.0, 1.9, 2.4])?);
    let beta = 1.4;
    let ns = [100usize, 1000, 10_000];
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).log10()).collect();
    let mut out = Vec::new();
    for a in [1.0, 2.0] {
        let mut y = Vec::new();
        for &n in &ns {
            let rec = staircase_isotherm((beta, beta), (&from, &to), n)?;
            let q: f64 = alpha_heat(&rec, a)?.values().sum();
            let ds = delta_entropy(&rec, &Generator::Alpha(a))?;
            y.push((ds - beta.powf(a) * q).abs().log10());
        }
        out.push(within(&format!("isotherm-convergence slope at alpha {a}"), slope(&x, &y), -1.0, 0.2));
    }
    Ok(out)
}

pub fn run(target: Target) -> Vec<Check> {
    let all: [(Target, &str, fn() -> gci_core::Result<Vec<Check>>); 5] = [
        (Target::Fig2, "fig2", fig2),
        (Target::Fig3, "fig3", fig3),
        (Target::Halfzero, "halfzero", halfzero),
        (Target::Qutrit, "qutrit", qutrit),
        (Target::IsothermConvergence, "isotherm-convergence", isotherm_convergence),
    ];
    all.iter()
        .filter(|(t, _, _)| target == Target::All || *t == target)
        .flat_map(|(_, name, f)| f().unwrap_or_else(|e| failed(name, e)))
        .collect()
}
