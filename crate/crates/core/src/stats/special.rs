//! Log-gamma, the regularized incomplete beta function and Student-t tails.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for I_x(a, b) (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
///
/// `one_minus_x` is passed separately so callers can supply it without
/// cancellation when x is close to 1.
pub fn beta_reg(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(b, a, one_minus_x) / b).clamp(0.0, 1.0)
    }
}

/// Two-sided Student-t tail probability P(|T| ≥ |t|) with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: u32) -> Result<f64> {
    if df < 1 {
        return Err(Error::invalid("student_t_sf requires df >= 1"));
    }
    if t.is_nan() {
        return Err(Error::invalid("student_t_sf: t is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let nu = df as f64;
    let t2 = t * t;
    let x = nu / (nu + t2);
    let one_minus_x = t2 / (nu + t2);
    Ok(beta_reg(nu / 2.0, 0.5, x, one_minus_x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers_and_half() {
        let mut fact = 1.0f64;
        for n in 1..20u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n = {n}");
        }
        let sqrt_pi_ln = 0.5 * std::f64::consts::PI.ln();
        assert!((ln_gamma(0.5) - sqrt_pi_ln).abs() < 1e-14);
    }

    #[test]
    fn t_tail_closed_forms() {
        assert_eq!(student_t_sf(0.0, 7).unwrap(), 1.0);
        // Cauchy: 1 - (2/pi) atan(1) = 0.5
        assert!((student_t_sf(1.0, 1).unwrap() - 0.5).abs() < 1e-14);
        // df = 2: P(|T| >= t) = 1 - t / sqrt(2 + t^2)
        for t in [0.3, 1.0, 2.5, 10.0] {
            let expect = 1.0 - t / (2.0f64 + t * t).sqrt();
            assert!((student_t_sf(t, 2).unwrap() - expect).abs() < 1e-13);
            assert_eq!(student_t_sf(-t, 2).unwrap(), student_t_sf(t, 2).unwrap());
        }
        assert!(student_t_sf(1.0, 0).is_err());
    }

    #[test]
    fn t_tail_normal_limit() {
        let p = student_t_sf(1.96, 10_000).unwrap();
        assert!((p - 0.0500).abs() < 1e-3, "{p}");
    }
}
