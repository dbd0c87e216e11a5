//! Bregman divergences, contractivity gaps and available α-work.

use crate::entropy::{Generator, TINY_PROB};
use crate::special::upper_incomplete_gamma;
use crate::thermal::{check_dims, gibbs_state, LevelSystem, ProbVector};
use crate::{Error, Result};

/// Reference entries below this are rejected.
pub const MIN_REFERENCE: f64 = 1e-12;
/// A step is valid when its gap is at least `-VALIDITY_TOL`.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Divergences of the endpoints of a step from a reference state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceReport {
    pub d_initial: f64,
    pub d_final: f64,
    pub gap: f64,
}

impl DivergenceReport {
    pub fn new(d_initial: f64, d_final: f64) -> Self {
        Self { d_initial, d_final, gap: d_initial - d_final }
    }

    pub fn is_valid(&self) -> bool {
        self.gap >= -VALIDITY_TOL
    }
}

fn check_reference(p1: &[f64]) -> Result<()> {
    match p1.iter().enumerate().find(|(_, &v)| !(v >= MIN_REFERENCE)) {
        Some((index, &value)) => Err(Error::SingularReference { index, value }),
        None => Ok(()),
    }
}

/// D(p2, p1) = S(p1) − S(p2) + (p2 − p1)·∇S(p1).
pub fn bregman_divergence(gen: &Generator, p2: &ProbVector, p1: &ProbVector) -> Result<f64> {
    divergence_raw(gen, p2.as_slice(), p1.as_slice())
}

/// Divergence on raw non-negative vectors (used for spectra as well).
pub(crate) fn divergence_raw(gen: &Generator, p2: &[f64], p1: &[f64]) -> Result<f64> {
    gen.validated()?;
    check_dims(p1.len(), p2.len())?;
    check_reference(p1)?;
    let x1: Vec<f64> = p1.iter().map(|v| -v.ln()).collect();
    divergence_neglog(gen, p2, p1, &x1)
}

/// Divergence with the reference also given as x = −ln p1; accepts references
/// far below `MIN_REFERENCE` as long as x is finite.
pub(crate) fn divergence_neglog(gen: &Generator, p2: &[f64], p1: &[f64], x1: &[f64]) -> Result<f64> {
    gen.validated()?;
    check_dims(p1.len(), p2.len())?;
    check_dims(p1.len(), x1.len())?;
    let grad = gen.gradient_from_neglog(x1);
    let d = match gen {
        // per-component form keeps each term non-negative
        Generator::Alpha(a) if *a > 0.0 => {
            let s = a + 1.0;
            let mut acc = 0.0;
            for j in 0..p1.len() {
                let g1 = upper_incomplete_gamma(s, x1[j])?;
                let g2 = if p2[j] >= TINY_PROB { upper_incomplete_gamma(s, -p2[j].ln())? } else { 0.0 };
                acc += g1 - g2 + (p2[j] - p1[j]) * grad[j];
            }
            acc
        }
        _ if gen.is_separable() => {
            let mut acc = 0.0;
            for j in 0..p1.len() {
                acc += gen.functional(&[p1[j]])? - gen.functional(&[p2[j]])? + (p2[j] - p1[j]) * grad[j];
            }
            acc
        }
        _ => {
            let lin: f64 = p2.iter().zip(p1).zip(&grad).map(|((a, b), g)| (a - b) * g).sum();
            gen.functional(p1)? - gen.functional(p2)? + lin
        }
    };
    Ok(d.max(0.0))
}

/// D(p_i, ref), D(p_f, ref) and their difference.
pub fn contractivity_gap(
    gen: &Generator,
    p_i: &ProbVector,
    p_f: &ProbVector,
    reference: &ProbVector,
) -> Result<DivergenceReport> {
    let d_i = bregman_divergence(gen, p_i, reference)?;
    let d_f = bregman_divergence(gen, p_f, reference)?;
    Ok(DivergenceReport::new(d_i, d_f))
}

/// |(ΔS_α − β^α Q_α) − (D(p_i, p_β) − D(p_f, p_β))| for an isochore.
pub fn isochore_identity_residual(
    alpha: f64,
    p_i: &ProbVector,
    p_f: &ProbVector,
    levels: &LevelSystem,
    beta: f64,
) -> Result<f64> {
    check_dims(levels.len(), p_i.len())?;
    check_dims(levels.len(), p_f.len())?;
    let gen = Generator::alpha(alpha)?;
    let ctx = gibbs_state(levels, beta)?;
    let ds = gen.entropy(p_f)? - gen.entropy(p_i)?;
    let mut bq = 0.0;
    for j in 0..levels.len() {
        let x = beta * ctx.shifts()[j];
        bq += (p_f.as_slice()[j] - p_i.as_slice()[j]) * if alpha == 0.0 { 1.0 } else { x.powf(alpha) };
    }
    let rhs = bregman_divergence(&gen, p_i, &ctx.gibbs)? - bregman_divergence(&gen, p_f, &ctx.gibbs)?;
    Ok(((ds - bq) - rhs).abs())
}

/// A_α = T^α D_α(p, p_β).
pub fn available_work(alpha: f64, p: &ProbVector, levels: &LevelSystem, t: f64) -> Result<f64> {
    check_dims(levels.len(), p.len())?;
    let beta = crate::thermal::beta_from_temperature(t)?;
    let ctx = gibbs_state(levels, beta)?;
    let d = bregman_divergence(&Generator::alpha(alpha)?, p, &ctx.gibbs)?;
    Ok(t.powf(alpha) * d)
}
