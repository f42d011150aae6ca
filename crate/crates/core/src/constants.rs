//! Normalising constants and explicit bounds.

use serde::{Deserialize, Serialize};

use crate::error::{check_open, FracError, Result};
use crate::measures;
use crate::quad;
use crate::shapes::ShapeSet;
use crate::special::{gamma, unit_ball_volume};

pub use crate::shapes::BoundedRegion;

use std::f64::consts::PI;

fn check_dim(op: &'static str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(FracError::Dimension { op, n, supported: "n ≥ 1" });
    }
    Ok(())
}

/// μ_{n,α} = 2^α π^{−n/2} Γ((n+α+1)/2) / Γ((1−α)/2), α ∈ (−1, 1).
pub fn mu(n: usize, alpha: f64) -> Result<f64> {
    check_dim("mu", n)?;
    check_open("mu", alpha, -1.0, 1.0, "(-1, 1)")?;
    let nf = n as f64;
    Ok(2f64.powf(alpha) * PI.powf(-nf / 2.0) * gamma((nf + alpha + 1.0) / 2.0) / gamma((1.0 - alpha) / 2.0))
}

/// ν_{n,α} = 2^α π^{−n/2} Γ((n+α)/2) / Γ(−α/2), α ∈ (−1, 2) \ {0}.
pub fn nu(n: usize, alpha: f64) -> Result<f64> {
    check_dim("nu", n)?;
    check_open("nu", alpha, -1.0, 2.0, "(-1, 2) without 0")?;
    if alpha == 0.0 {
        return Err(FracError::OrderOutOfRange { op: "nu", value: alpha, range: "(-1, 2) without 0" });
    }
    let nf = n as f64;
    let num = gamma((nf + alpha) / 2.0);
    let den = gamma(-alpha / 2.0);
    if !num.is_finite() || !den.is_finite() {
        return Err(FracError::OrderOutOfRange { op: "nu", value: alpha, range: "away from gamma poles" });
    }
    Ok(2f64.powf(alpha) * PI.powf(-nf / 2.0) * num / den)
}

/// ω_n = |B_1|.
pub fn omega(n: usize) -> f64 {
    unit_ball_volume(n as f64)
}

/// Normalisation of the Riesz potential I_s, s ∈ (0, n).
pub fn riesz_potential_constant(n: usize, s: f64) -> Result<f64> {
    check_dim("riesz_potential_constant", n)?;
    let nf = n as f64;
    if !(s > 0.0 && s < nf) {
        return Err(FracError::OrderOutOfRange { op: "riesz_potential", value: s, range: "(0, n)" });
    }
    Ok(gamma((nf - s) / 2.0) / (2f64.powf(s) * PI.powf(nf / 2.0) * gamma(s / 2.0)))
}

/// Upper bound for sup_x ∫_U |y − x|^{1−n−α} dy.
pub fn riesz_tail_bound(n: usize, alpha: f64, u: &BoundedRegion) -> Result<f64> {
    check_dim("riesz_tail_bound", n)?;
    check_open("riesz_tail_bound", alpha, 0.0, 1.0, "(0, 1)")?;
    Ok(n as f64 / (1.0 - alpha) * tail_bracket(n, alpha, u))
}

fn tail_bracket(n: usize, alpha: f64, u: &BoundedRegion) -> f64 {
    let nf = n as f64;
    let w = omega(n);
    let e = nf + alpha - 1.0;
    w * u.diameter().powf(1.0 - alpha) + (nf * w / e).powf(e / nf) * u.volume().powf((1.0 - alpha) / nf)
}

/// C_{n,α,U}, the constant in ‖div^α φ‖_∞ ≤ C ‖div φ‖_∞ for supp φ ⊂ U.
pub fn c_div_sup_constant(n: usize, alpha: f64, u: &BoundedRegion) -> Result<f64> {
    check_dim("c_div_sup_constant", n)?;
    check_open("c_div_sup_constant", alpha, 0.0, 1.0, "(0, 1)")?;
    let nf = n as f64;
    Ok(nf * mu(n, alpha)? / ((1.0 - alpha) * (nf + alpha - 1.0)) * tail_bracket(n, alpha, u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTranslation {
    pub value: f64,
    pub error_estimate: f64,
    /// n ω_n (2·3^α/α + (n−α+2)/(1−α))
    pub closed_bound: f64,
}

/// Closed upper bound for γ_{n,α}.
pub fn gamma_translation_bound(n: usize, alpha: f64) -> Result<f64> {
    check_dim("gamma_translation_bound", n)?;
    check_open("gamma_translation_bound", alpha, 0.0, 1.0, "(0, 1)")?;
    let nf = n as f64;
    Ok(nf * omega(n) * (2.0 * 3f64.powf(alpha) / alpha + (nf - alpha + 2.0) / (1.0 - alpha)))
}

/// γ_{n,α} = μ_{n,−α} ∫ | z/|z|^{n+1−α} − (z−e₁)/|z−e₁|^{n+1−α} | dz, n ∈ {1, 2}.
///
/// The integrand is symmetric under z ↦ e₁ − z, so only the half-space
/// z₁ < ½ is integrated, in polar coordinates about the origin. The radial
/// variable is mapped by ρ = u^{1/α} on (0, 1) and ρ = v^{−1/(1−α)} beyond,
/// which turns both the origin singularity and the far-field decay into
/// bounded integrands. The error estimate is the change under doubling.
pub fn gamma_translation_constant(n: usize, alpha: f64) -> Result<GammaTranslation> {
    check_open("gamma_translation_constant", alpha, 0.0, 1.0, "(0, 1)")?;
    if !(1..=2).contains(&n) {
        return Err(FracError::Dimension { op: "gamma_translation_constant", n, supported: "n ∈ {1, 2}" });
    }
    let coarse = translation_integral(n, alpha, 1);
    let fine = translation_integral(n, alpha, 2);
    let m = mu(n, -alpha)?;
    let value = m * fine;
    let error_estimate = m * (fine - coarse).abs();
    if !value.is_finite() {
        return Err(FracError::Quadrature { residual: error_estimate });
    }
    Ok(GammaTranslation { value, error_estimate, closed_bound: gamma_translation_bound(n, alpha)? })
}

fn kernel_diff_norm(z: &[f64], alpha: f64) -> f64 {
    let n = z.len();
    let p = n as f64 + 1.0 - alpha;
    let r0 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut zm = z.to_vec();
    zm[0] -= 1.0;
    let r1 = zm.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, b) = (r0.powf(-p), r1.powf(-p));
    z.iter().zip(&zm).map(|(u, w)| (u * a - w * b).powi(2)).sum::<f64>().sqrt()
}

/// ∫_0^{rmax} F(ρ d) ρ^{n−1} dρ along the unit direction d.
fn radial_piece(d: &[f64], rmax: f64, alpha: f64, refine: usize) -> f64 {
    let n = d.len();
    let jac = |rho: f64| rho.powi(n as i32 - 1);
    let f = |rho: f64| {
        let z: Vec<f64> = d.iter().map(|c| c * rho).collect();
        kernel_diff_norm(&z, alpha) * jac(rho)
    };
    let panels = 12 * refine;
    let ra = rmax.min(1.0);
    let inner = quad::gl_composite(
        |u: f64| {
            let rho = u.powf(1.0 / alpha);
            f(rho) * rho / (alpha * u)
        },
        0.0,
        ra.powf(alpha),
        panels,
        16,
    );
    let outer = if rmax > 1.0 {
        let q = 1.0 - alpha;
        let vmin = if rmax.is_finite() { rmax.powf(-q) } else { 0.0 };
        quad::gl_composite(
            |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let rho = v.powf(-1.0 / q);
                f(rho) * rho / (q * v)
            },
            vmin,
            1.0,
            panels,
            16,
        )
    } else {
        0.0
    };
    inner + outer
}

fn translation_integral(n: usize, alpha: f64, refine: usize) -> f64 {
    match n {
        1 => 2.0 * (radial_piece(&[1.0], 0.5, alpha, refine) + radial_piece(&[-1.0], f64::INFINITY, alpha, refine)),
        _ => {
            let g = |th: f64| {
                let (s, c) = th.sin_cos();
                let rmax = if c > 0.0 { 0.5 / c } else { f64::INFINITY };
                radial_piece(&[c, s], rmax, alpha, refine)
            };
            let p = 8 * refine;
            // the z₂ ↦ −z₂ symmetry and the reflection each give a factor 2
            4.0 * (quad::gl_composite(g, 0.0, PI / 3.0, p, 16)
                + quad::gl_composite(g, PI / 3.0, PI / 2.0, p, 16)
                + quad::gl_composite(g, PI / 2.0, PI, p, 16))
        }
    }
}

/// C_{n,α,β} = n ω_n α 2^{(α−β)/β} γ_{n,α}^{β/α} / (β(α−β)), 0 < β < α < 1.
pub fn embedding_constant(n: usize, alpha: f64, beta: f64) -> Result<f64> {
    check_open("embedding_constant", alpha, 0.0, 1.0, "(0, 1)")?;
    check_open("embedding_constant", beta, 0.0, alpha, "(0, alpha)")?;
    let g = gamma_translation_constant(n, alpha)?.value;
    let nf = n as f64;
    Ok(nf * omega(n) * alpha * 2f64.powf((alpha - beta) / beta) * g.powf(beta / alpha) / (beta * (alpha - beta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    pub a: f64,
    pub b: f64,
    /// P_α(B₁) used for both
    pub unit_ball_perimeter: f64,
}

/// A = 10 μ_{n,α} P_α(B₁), B = 13 μ_{n,α} P_α(B₁).
pub fn decay_constants(n: usize, alpha: f64) -> Result<DecayConstants> {
    check_open("decay_constants", alpha, 0.0, 1.0, "(0, 1)")?;
    let ball = ShapeSet::ball(&vec![0.0; n], 1.0)?;
    let p = measures::frac_perimeter_exact(&ball, alpha)?.value;
    let m = mu(n, alpha)?;
    Ok(DecayConstants { a: 10.0 * m * p, b: 13.0 * m * p, unit_ball_perimeter: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_special_values() {
        assert!((mu(1, 0.0).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((mu(1, 0.5).unwrap() - 2f64.powf(-1.5) / PI.sqrt()).abs() < 1e-14);
        assert!((mu(1, -0.5).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!(mu(1, 1.0).is_err());
    }

    #[test]
    fn nu_signs_and_values() {
        assert!((nu(1, 0.5).unwrap() + 2f64.powf(-1.5) / PI.sqrt()).abs() < 1e-13);
        assert!((nu(1, -0.5).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(nu(2, 1.0).unwrap() < 0.0);
        assert!(nu(1, 0.0).is_err());
    }

    #[test]
    fn tail_bound_unit_interval_is_eight() {
        let u = BoundedRegion::interval(0.0, 1.0).unwrap();
        assert!((riesz_tail_bound(1, 0.5, &u).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_translation_one_dimensional_converges() {
        let g = gamma_translation_constant(1, 0.5).unwrap();
        assert!(g.error_estimate < 1e-8, "{g:?}");
        assert!(g.value <= g.closed_bound);
    }
}
