//! Closed-form reference values: the interval example, the atom witness,
//! the ramp cut-off and the fractional fundamental theorem of calculus.

use serde::{Deserialize, Serialize};

use crate::constants::mu;
use crate::error::{check_open, invalid, Result};
use crate::fields::ScalarField;
use crate::operators::{frac_divergence_neg_at, frac_gradient, Backend, TailModel};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalOracle {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl IntervalOracle {
    pub fn new(a: f64, b: f64, alpha: f64) -> Result<Self> {
        check_open("interval_oracle", alpha, 0.0, 1.0, "(0, 1)")?;
        if !(a < b) {
            return invalid(format!("interval needs a < b, got ({a}, {b})"));
        }
        Ok(IntervalOracle { a, b, alpha })
    }

    pub fn gradient(&self, x: f64) -> Result<f64> {
        interval_gradient(self.a, self.b, self.alpha, x)
    }

    pub fn perimeter(&self) -> Result<f64> {
        interval_perimeter(self.a, self.b, self.alpha)
    }

    pub fn gradient_l1(&self) -> Result<f64> {
        interval_gradient_l1(self.a, self.b, self.alpha)
    }
}

/// ∇^α χ_{(a,b)}(x) = μ_{1,α}/α (|x−a|^{−α} − |x−b|^{−α}).
pub fn interval_gradient(a: f64, b: f64, alpha: f64, x: f64) -> Result<f64> {
    check_open("interval_gradient", alpha, 0.0, 1.0, "(0, 1)")?;
    if x == a || x == b {
        return invalid(format!("interval gradient is infinite at the endpoint {x}"));
    }
    Ok(mu(1, alpha)? / alpha * ((x - a).abs().powf(-alpha) - (x - b).abs().powf(-alpha)))
}

/// P_α((a,b)) = 4 (b−a)^{1−α} / (α(1−α)).
pub fn interval_perimeter(a: f64, b: f64, alpha: f64) -> Result<f64> {
    check_open("interval_perimeter", alpha, 0.0, 1.0, "(0, 1)")?;
    if b < a {
        return invalid(format!("interval needs a ≤ b, got ({a}, {b})"));
    }
    Ok(4.0 * (b - a).powf(1.0 - alpha) / (alpha * (1.0 - alpha)))
}

/// ‖∇^α χ_{(a,b)}‖₁ = 2^{1+α} μ_{1,α} (b−a)^{1−α} / (α(1−α)).
pub fn interval_gradient_l1(a: f64, b: f64, alpha: f64) -> Result<f64> {
    check_open("interval_gradient_l1", alpha, 0.0, 1.0, "(0, 1)")?;
    if b < a {
        return invalid(format!("interval needs a ≤ b, got ({a}, {b})"));
    }
    Ok(2f64.powf(1.0 + alpha) * mu(1, alpha)? * (b - a).powf(1.0 - alpha) / (alpha * (1.0 - alpha)))
}

/// ‖∇^α χ_{(a,b)}‖₁ by quadrature of the pointwise closed form, independent
/// of the closed form for the L¹ norm. Returns (value, error estimate).
pub fn interval_gradient_l1_quadrature(a: f64, b: f64, alpha: f64) -> Result<(f64, f64)> {
    IntervalOracle::new(a, b, alpha)?;
    let c = mu(1, alpha)? / alpha;
    let len = b - a;
    // both pieces are symmetric about the midpoint; integrate in the distance
    // u to the nearer endpoint so the singular end sits at 0
    let inner = move |u: f64| {
        let v = c * (u.powf(-alpha) - (len - u).powf(-alpha)).abs();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // at distance s outside the interval the two powers nearly cancel:
    // s^{−α} − (s+L)^{−α} = −s^{−α} expm1(−α ln1p(L/s))
    let outside = move |s: f64| {
        let v = -c * s.powf(-alpha) * (-alpha * (len / s).ln_1p()).exp_m1();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // beyond s = L the map s = L w^{−1/α} makes the integrand bounded
    let far = move |w: f64| {
        if !(w > 0.0) {
            return 0.0;
        }
        let s = len * w.powf(-1.0 / alpha);
        let v = outside(s) * s / (alpha * w);
        // w → 0 limit: c L^{1−α}
        if v.is_finite() {
            v
        } else {
            c * len.powf(1.0 - alpha)
        }
    };
    let tol = 1e-12;
    let (l, el) = quad::adaptive(inner, 0.0, 0.5 * len, tol)?;
    let (o1, e1) = quad::adaptive(outside, 0.0, len, tol)?;
    let (o2, e2) = quad::adaptive(far, 0.0, 1.0, tol)?;
    Ok((2.0 * (l + o1 + o2), 2.0 * (el + e1 + e2)))
}

/// f_{a,b,α}(x) = |x−b|^{α−1} sgn(x−b) − |x−a|^{α−1} sgn(x−a).
pub fn atom_witness_value(a: f64, b: f64, alpha: f64, x: f64) -> Result<f64> {
    check_open("atom_witness_value", alpha, 0.0, 1.0, "(0, 1)")?;
    if a == b {
        return invalid("atom witness needs a ≠ b");
    }
    if x == a || x == b {
        return invalid(format!("atom witness is infinite at {x}"));
    }
    let t = |c: f64| (x - c).abs().powf(alpha - 1.0) * (x - c).signum();
    Ok(t(b) - t(a))
}

/// The pairing ∫ f_{a,b,α} div^α φ = (φ(a) − φ(b)) / μ_{1,−α}, given φ(a) and φ(b).
pub fn atom_pairing(alpha: f64, phi_a: f64, phi_b: f64) -> Result<f64> {
    check_open("atom_pairing", alpha, 0.0, 1.0, "(0, 1)")?;
    Ok((phi_a - phi_b) / mu(1, -alpha)?)
}

/// ∇^α h_{ε,r,x}(y) = μ/(ε(n+α−1)) ∫_{B_{r+ε}(x)∖B_r(x)} (x−z)/|x−z| |z−y|^{1−n−α} dz.
///
/// 1-d is closed form; in 2-d the annulus is swept by rays from y, so the
/// kernel singularity becomes s^{−α} and is removed by u = s^{1−α}.
pub fn ramp_gradient(eps: f64, r: f64, center: &[f64], alpha: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_open("ramp_gradient", alpha, 0.0, 1.0, "(0, 1)")?;
    if !(eps > 0.0 && r > 0.0) {
        return invalid("ramp needs eps > 0 and r > 0");
    }
    let n = center.len();
    if y.len() != n || !(1..=2).contains(&n) {
        return invalid("ramp point and center must share dimension 1 or 2");
    }
    let c = mu(n, alpha)? / (eps * (n as f64 + alpha - 1.0));
    if n == 1 {
        // ∫_p^q |z−y|^{−α} dz
        let seg = |p: f64, q: f64| {
            let g = |t: f64| (t - y[0]).signum() * (t - y[0]).abs().powf(1.0 - alpha) / (1.0 - alpha);
            g(q) - g(p)
        };
        let x = center[0];
        // (x−z)/|x−z| is −1 right of x, +1 left of x
        let v = seg(x - r - eps, x - r) - seg(x + r, x + r + eps);
        return Ok(vec![c * v]);
    }
    let d = [y[0] - center[0], y[1] - center[1]];
    let q = 1.0 - alpha;
    // s-intervals where r < |d + s e| < r + ε
    let shell = |e: [f64; 2]| -> Vec<(f64, f64)> {
        let b = d[0] * e[0] + d[1] * e[1];
        let dd = d[0] * d[0] + d[1] * d[1];
        let roots = |rad: f64| -> Option<(f64, f64)> {
            let disc = b * b - (dd - rad * rad);
            (disc > 0.0).then(|| (-b - disc.sqrt(), -b + disc.sqrt()))
        };
        let outer = match roots(r + eps) {
            Some((a0, a1)) => (a0.max(0.0), a1.max(0.0)),
            None => return vec![],
        };
        let mut out = vec![];
        match roots(r) {
            Some((b0, b1)) => {
                let (b0, b1) = (b0.max(0.0), b1.max(0.0));
                if b0 > outer.0 {
                    out.push((outer.0, b0));
                }
                if outer.1 > b1 {
                    out.push((b1.max(outer.0), outer.1));
                }
            }
            None => out.push(outer),
        }
        out.retain(|(a, b)| b > a);
        out
    };
    let ray = |t: f64, k: usize| -> f64 {
        let (s, co) = t.sin_cos();
        let e = [co, s];
        shell(e)
            .into_iter()
            .map(|(s0, s1)| {
                let f = |u: f64| {
                    let sv = u.powf(1.0 / q);
                    let z = [d[0] + sv * e[0], d[1] + sv * e[1]];
                    let nz = z[0].hypot(z[1]);
                    -z[k] / nz / q
                };
                quad::gl_composite(f, s0.powf(q), s1.powf(q), 4, 12)
            })
            .sum()
    };
    // kinks of the ray integral: tangencies to the two circles
    let base = d[1].atan2(d[0]) + std::f64::consts::PI;
    let dist = d[0].hypot(d[1]);
    let mut cuts = vec![base - std::f64::consts::PI, base + std::f64::consts::PI];
    for rad in [r, r + eps] {
        if dist > rad {
            let w = (rad / dist).asin();
            cuts.push(base - w);
            cuts.push(base + w);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut out = vec![0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += quad::gl_composite(|t| ray(t, k), w[0], w[1], 16, 16);
        }
        *o = c * acc;
    }
    Ok(out)
}

/// f(y) − f(x) reconstructed as div^{−α}φ(x) − div^{−α}φ(y) with φ = ∇^α f
/// on the grid and the far-field model of φ outside it. x and y must be
/// grid nodes.
pub fn ftc_reconstruct(f: &ScalarField, alpha: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_open("ftc_reconstruct", alpha, 0.0, 1.0, "(0, 1)")?;
    let g = &f.grid;
    let node = |p: &[f64]| -> Result<usize> {
        match g.nearest(p) {
            Some(i) if g.coord(i).iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-9 * g.h.max(1.0)) => Ok(i),
            _ => invalid(format!("point {p:?} is not a grid node")),
        }
    };
    let (ix, iy) = (node(x)?, node(y)?);
    if ix == iy {
        return Ok(0.0);
    }
    let (phi, _) = frac_gradient(f, alpha, &Backend::direct())?;
    let tail = TailModel::from_source(f, alpha);
    let dx = frac_divergence_neg_at(&phi, alpha, ix, Some(&tail))?;
    let dy = frac_divergence_neg_at(&phi, alpha, iy, Some(&tail))?;
    Ok(dx - dy)
}
