//! Gamma and upper incomplete gamma functions.

use crate::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of Γ(s) for s > 0.
pub fn ln_gamma(s: f64) -> f64 {
    if s < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * s).sin()).ln() - ln_gamma(1.0 - s);
    }
    let x = s - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(s) for s > 0.
pub fn gamma(s: f64) -> f64 {
    if s == s.floor() && s > 0.0 && s <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < s {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    ln_gamma(s).exp()
}

/// Upper incomplete gamma Γ(s, x) = ∫_x^∞ t^{s−1} e^{−t} dt.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !s.is_finite() || !(s > 0.0) {
        return Err(Error::InvalidInput(format!("incomplete gamma order s = {s}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidInput(format!("incomplete gamma argument x = {x}")));
    }
    if x == 0.0 {
        return Ok(gamma(s));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < s + 1.0 {
        let lower = lower_series(s, x)?;
        Ok(gamma(s) - lower)
    } else {
        upper_continued_fraction(s, x)
    }
}

/// Lower incomplete gamma γ(s, x) by its power series.
fn lower_series(s: f64, x: f64) -> Result<f64> {
    let mut ap = s;
    let mut del = 1.0 / s;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(sum * (s * x.ln() - x).exp());
        }
    }
    Err(Error::NotConverged("incomplete gamma series"))
}

/// Γ(s, x) by modified Lentz evaluation of the continued fraction.
fn upper_continued_fraction(s: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((s * x.ln() - x).exp() * h);
        }
    }
    Err(Error::NotConverged("incomplete gamma continued fraction"))
}
