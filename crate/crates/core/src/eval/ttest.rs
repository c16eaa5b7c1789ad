use serde::{Deserialize, Serialize};

use super::EvalError;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// Infinite (signed) when the differences have zero variance and nonzero mean.
    pub t: f64,
    pub df: usize,
    /// Two-tailed.
    pub p: f64,
    pub alpha: f64,
    pub reject: bool,
    pub degenerate: bool,
    pub mean_difference: f64,
}

/// Paired two-tailed t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooFewPairs(n));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvalError::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(EvalError::InvalidArgument("non-finite sample".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    let result = |t: f64, p: f64, degenerate: bool| TTestResult {
        t,
        df,
        p,
        alpha,
        reject: p < alpha,
        degenerate,
        mean_difference: mean,
    };
    if d.iter().all(|&x| x == 0.0) {
        return Ok(result(0.0, 1.0, false));
    }
    let sd = var.sqrt();
    if sd == 0.0 || sd <= mean.abs() * 1e-14 {
        return Ok(result(f64::INFINITY.copysign(mean), 0.0, true));
    }
    let t = mean / (sd / nf.sqrt());
    Ok(result(t, student_t_two_tailed(t, df as f64), false))
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

// Modified Lentz evaluation of the continued fraction.
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn null_case() {
        let a = [3.0, 2.5, 4.0];
        let r = paired_t_test(&a, &a, DEFAULT_ALPHA).unwrap();
        assert_eq!((r.t, r.p, r.reject, r.degenerate), (0.0, 1.0, false, false));
    }

    #[test]
    fn constant_difference_is_degenerate() {
        let r = paired_t_test(&[3.0, 4.0, 5.0], &[2.0, 3.0, 4.0], DEFAULT_ALPHA).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.t, f64::INFINITY);
        assert_eq!(r.p, 0.0);
        assert!(r.reject);
        let r = paired_t_test(&[2.0, 3.0, 4.0], &[3.0, 4.0, 5.0], DEFAULT_ALPHA).unwrap();
        assert_eq!(r.t, f64::NEG_INFINITY);
    }

    #[test]
    fn hand_computed_example() {
        // d = [0.5, -0.1, 0.6, 0.5], mean 0.375, sum sq dev 0.3075
        let r = paired_t_test(&[2.0, 2.5, 3.0, 3.5], &[1.5, 2.6, 2.4, 3.0], DEFAULT_ALPHA).unwrap();
        let t = 0.375 / ((0.3075f64 / 3.0).sqrt() / 2.0);
        assert_abs_diff_eq!(r.t, t, epsilon = 1e-9);
        assert_eq!(r.df, 3);
        // df 3 closed form: p = 1 - 2/pi (atan(u) + u/(1+u^2)), u = t/sqrt(3)
        let u = t / 3f64.sqrt();
        let p = 1.0 - 2.0 / std::f64::consts::PI * (u.atan() + u / (1.0 + u * u));
        assert_abs_diff_eq!(r.p, p, epsilon = 1e-12);
    }

    #[test]
    fn df_one_and_two_closed_forms() {
        for &t in &[0.3, 1.0, 2.5, 12.0] {
            let p1 = 1.0 - 2.0 / std::f64::consts::PI * f64::atan(t);
            assert_abs_diff_eq!(student_t_two_tailed(t, 1.0), p1, epsilon = 1e-13);
            let p2 = 1.0 - t / (2.0 + t * t).sqrt();
            assert_abs_diff_eq!(student_t_two_tailed(t, 2.0), p2, epsilon = 1e-13);
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
    }

    #[test]
    fn bad_inputs() {
        assert!(paired_t_test(&[1.0], &[2.0], 0.05).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0], 0.05).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0, 1.0], 1.5).is_err());
    }
}
