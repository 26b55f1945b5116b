//! Gamma function and its reciprocal.
//!
//! Lanczos approximation (g = 7, nine coefficients) for `x >= 0.5`, the
//! reflection formula below that. Relative error stays below `1e-13` on the
//! range used by the Mittag-Leffler series; positive integers up to 171 are
//! returned exactly as factorials.

use std::f64::consts::PI;

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

/// `ln(sqrt(2 pi))`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Gamma(x + 1))
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn exact_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Natural log of `|Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        // |Gamma(x)| = pi / (|sin(pi x)| Gamma(1 - x))
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    if x == x.round() && x <= 171.0 {
        return exact_factorial(x as u32 - 1).ln();
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Gamma function. Returns `NaN` at poles.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x == x.round() && x <= 171.0 {
        return exact_factorial(x as u32 - 1);
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power to avoid overflow of t^(z+0.5) before multiplying by e^-t
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z)
}

/// `1 / Gamma(x)`, zero at the poles `x = 0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        return (PI * x).sin() * gamma(1.0 - x) / PI;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// Sign of `Gamma(x)` (`0` at poles).
pub fn gamma_sign(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else if x > 0.0 {
        1.0
    } else if (x.floor() as i64).rem_euclid(2) == 1 {
        // x in (-2k-1, -2k): negative
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_exact() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert_eq!(rgamma(1.0), 1.0);
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
    }

    #[test]
    fn half_integers() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * sqrt_pi).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn signs() {
        assert_eq!(gamma_sign(0.3), 1.0);
        assert_eq!(gamma_sign(-0.3), -1.0);
        assert_eq!(gamma_sign(-1.3), 1.0);
        assert_eq!(gamma_sign(-2.5), -1.0);
        assert_eq!(gamma(-1.3).signum(), gamma_sign(-1.3));
    }

    #[test]
    fn ln_gamma_large() {
        // reference values from an independent lgamma implementation
        for (x, expect) in [
            (200.0, 857.933_669_825_857_5),
            (250.5, 1_131.284_001_332_255),
            (171.5, 709.143_163_030_928_2),
            (30.3, 72.273_890_541_364_92),
        ] {
            assert!((ln_gamma(x) - expect).abs() / expect < 1e-14, "x = {x}");
        }
    }
}
