//! Gamma function (Lanczos, g = 7, nine terms) with reflection for x < 1/2.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + k as f64);
    }
    a
}

/// Γ(x) for real x. Returns NaN at the poles 0, −1, −2, ….
pub fn gamma(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        return PI / (s * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Γ(a)/Γ(b) evaluated through logarithms when both arguments are large.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if a > 20.0 && b > 20.0 {
        (ln_gamma(a) - ln_gamma(b)).exp()
    } else {
        gamma(a) / gamma(b)
    }
}

/// Volume of the unit ball in ℝⁿ, π^{n/2}/Γ(n/2 + 1).
pub fn unit_ball_volume(n: f64) -> f64 {
    PI.powf(n / 2.0) / gamma(n / 2.0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_and_half_integers() {
        let mut fact = 1.0;
        for k in 1..20 {
            assert!((gamma(k as f64) - fact).abs() <= 1e-13 * fact, "Γ({k})");
            fact *= k as f64;
        }
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-3.0).is_nan());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1.0) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2.0) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3.0) - 4.0 * PI / 3.0).abs() < 1e-13);
    }
}
