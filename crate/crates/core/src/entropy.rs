//! Entropy generators and the information functions built from them.

use crate::special::{gamma, upper_incomplete_gamma};
use crate::thermal::ProbVector;
use crate::{Error, Result};

/// Parameters closer than this to 1 use the Shannon branch.
pub const LIMIT_TOL: f64 = 1e-8;
/// Probabilities below this contribute nothing to S_α.
pub const TINY_PROB: f64 = 1e-300;

/// Concave entropy generator family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// S_α = Σ_j Γ(α+1, −ln p_j) − Γ(α+1).
    Alpha(f64),
    /// (1 − Σ p^α̃)/(α̃ − 1).
    Tsallis(f64),
    /// ln(Σ p^ᾱ)/(1 − ᾱ), ᾱ ∈ [0, 1].
    Renyi(f64),
    Shannon,
}

impl Generator {
    pub fn alpha(a: f64) -> Result<Self> {
        Self::Alpha(a).validated()
    }

    pub fn tsallis(a: f64) -> Result<Self> {
        Self::Tsallis(a).validated()
    }

    pub fn renyi(a: f64) -> Result<Self> {
        Self::Renyi(a).validated()
    }

    /// Checks the family parameter range.
    pub fn validated(self) -> Result<Self> {
        let bad = |what: &str, a: f64| Err(Error::UnsupportedGenerator(format!("{what} parameter {a}")));
        match self {
            Self::Alpha(a) if !a.is_finite() || a < 0.0 => bad("alpha", a),
            Self::Tsallis(a) if !a.is_finite() || a < 0.0 => bad("tsallis", a),
            Self::Renyi(a) if !a.is_finite() || !(0.0..=1.0).contains(&a) => bad("renyi", a),
            g => Ok(g),
        }
    }

    /// The family with removable singularities resolved.
    fn resolved(self) -> Self {
        match self {
            Self::Tsallis(a) | Self::Renyi(a) if (a - 1.0).abs() < LIMIT_TOL => Self::Shannon,
            g => g,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Alpha(a) => format!("alpha({a})"),
            Self::Tsallis(a) => format!("tsallis({a})"),
            Self::Renyi(a) => format!("renyi({a})"),
            Self::Shannon => "shannon".into(),
        }
    }

    /// Entropy of a validated distribution.
    pub fn entropy(&self, p: &ProbVector) -> Result<f64> {
        self.validated()?;
        self.functional(p.as_slice())
    }

    /// The unconstrained functional S(x) for non-negative `x`; on the simplex it
    /// is the entropy, and its partial derivatives are [`Generator::gradient`].
    pub fn functional(&self, x: &[f64]) -> Result<f64> {
        match self.resolved() {
            Self::Alpha(a) => {
                let s = a + 1.0;
                let mut acc = 0.0;
                for &p in x {
                    if p >= TINY_PROB {
                        acc += upper_incomplete_gamma(s, -p.ln())?;
                    }
                }
                Ok(acc - gamma(s))
            }
            Self::Tsallis(a) => {
                // (p − p^a)/(a − 1) = −p·expm1((a−1) ln p)/(a − 1)
                let d = a - 1.0;
                Ok(x.iter().filter(|&&p| p >= TINY_PROB).map(|&p| -p * (d * p.ln()).exp_m1() / d).sum())
            }
            Self::Renyi(a) => {
                let d = a - 1.0;
                let total: f64 = x.iter().sum();
                let excess: f64 =
                    x.iter().filter(|&&p| p >= TINY_PROB).map(|&p| p * (d * p.ln()).exp_m1()).sum();
                // ln Σ p^a with the sum written as Σp + Σ p·expm1(...)
                Ok((total - 1.0 + excess).ln_1p() / (1.0 - a))
            }
            Self::Shannon => Ok(x.iter().filter(|&&p| p >= TINY_PROB).map(|&p| -p * p.ln()).sum()),
        }
    }

    /// ∂S/∂p_j at strictly positive `p`.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        if let Some((index, &value)) = p.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::SingularReference { index, value });
        }
        let x: Vec<f64> = p.iter().map(|v| -v.ln()).collect();
        Ok(self.gradient_from_neglog(&x))
    }

    /// ∂S/∂p_j expressed through x_j = −ln p_j; avoids round trips through
    /// exponentials when x comes from β(E_j − F).
    pub fn gradient_from_neglog(&self, x: &[f64]) -> Vec<f64> {
        match self.resolved() {
            Self::Alpha(a) => x.iter().map(|&v| if a == 0.0 { 1.0 } else { v.max(0.0).powf(a) }).collect(),
            Self::Tsallis(a) => {
                let d = a - 1.0;
                x.iter()
                    .map(|&v| {
                        let y = -d * v;
                        // (1 − a e^y)/(a − 1) = −expm1(y)/(a − 1) − e^y
                        -y.exp_m1() / d - y.exp()
                    })
                    .collect()
            }
            Self::Renyi(a) => {
                let norm: f64 = x.iter().map(|&v| (-a * v).exp()).sum();
                x.iter().map(|&v| a * (-(a - 1.0) * v).exp() / ((1.0 - a) * norm)).collect()
            }
            Self::Shannon => x.iter().map(|&v| v - 1.0).collect(),
        }
    }

    /// Whether S is a sum of per-component terms.
    pub fn is_separable(&self) -> bool {
        !matches!(self.resolved(), Self::Renyi(_))
    }
}

/// S for a validated distribution.
pub fn entropy_value(gen: &Generator, p: &ProbVector) -> Result<f64> {
    gen.entropy(p)
}

/// ∇S at a strictly positive distribution.
pub fn generator_gradient(gen: &Generator, p: &ProbVector) -> Result<Vec<f64>> {
    gen.validated()?;
    gen.gradient(p.as_slice())
}
