//! Fractional gradient, divergence, negative-order divergence, fractional
//! Laplacian, Riesz potential and the Leibniz remainders on uniform grids.
//!
//! The `direct` backend discretises the difference-quotient form
//! μ ∫ (y−x)(f(y)−f(x))/|y−x|^{n+α+1} dy with cell-midpoint weights, a
//! moment-matched correction on the ±e_d neighbours (restoring the exact
//! first moment of the kernel over a block of cells around the origin) and
//! the exact integral of the kernel over the complement of the grid box.
//! It has an exact discrete adjoint. `riesz` and `fft` evaluate
//! μ/(n+α−1) I-type convolutions of the central-difference gradient.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::constants::{mu, nu, omega, riesz_potential_constant};
use crate::conv::{cached, Correlator};
use crate::error::{check_open, invalid, FracError, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};
use crate::par;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Direct,
    Riesz,
    Fft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backend {
    pub kind: BackendKind,
    /// Truncation radius; None means the whole grid box plus the exact exterior.
    pub r: Option<f64>,
    /// Inner exclusion radius; None means h/2 (only the self cell).
    pub eps: Option<f64>,
    /// Moment-matched near-origin correction. Switched off for indicator
    /// inputs, whose central differences carry no information.
    pub local_correction: bool,
}

impl Backend {
    pub fn direct() -> Self {
        Backend { kind: BackendKind::Direct, r: None, eps: None, local_correction: true }
    }
    pub fn riesz() -> Self {
        Backend { kind: BackendKind::Riesz, r: None, eps: None, local_correction: true }
    }
    pub fn fft() -> Self {
        Backend { kind: BackendKind::Fft, r: None, eps: None, local_correction: true }
    }
    pub fn for_indicator() -> Self {
        Backend { local_correction: false, ..Self::direct() }
    }
    pub fn with_radius(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::direct()),
            "riesz" => Ok(Self::riesz()),
            "fft" => Ok(Self::fft()),
            _ => invalid(format!("unknown backend `{s}` (expected direct, riesz or fft)")),
        }
    }

    fn eps_for(&self, h: f64) -> Result<f64> {
        let e = self.eps.unwrap_or(0.5 * h);
        if e < 0.5 * h * (1.0 - 1e-12) || e > 4.0 * h * (1.0 + 1e-12) {
            return invalid(format!("inner exclusion ε = {e} outside [h/2, 4h] = [{}, {}]", 0.5 * h, 4.0 * h));
        }
        Ok(e)
    }

    fn tag(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Pointwise (max-norm) error bounds attached to an operator output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub inner_term: f64,
    pub tail_term: f64,
    pub quadrature_term: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.inner_term + self.tail_term + self.quadrature_term
    }

    pub fn combine(&self, other: &ErrorBudget) -> ErrorBudget {
        let mut flags = self.flags.clone();
        flags.extend(other.flags.iter().cloned());
        ErrorBudget {
            inner_term: self.inner_term + other.inner_term,
            tail_term: self.tail_term + other.tail_term,
            quadrature_term: self.quadrature_term + other.quadrature_term,
            flags,
        }
    }

    pub fn scaled(&self, c: f64) -> ErrorBudget {
        ErrorBudget {
            inner_term: self.inner_term * c,
            tail_term: self.tail_term * c,
            quadrature_term: self.quadrature_term * c,
            flags: self.flags.clone(),
        }
    }
}

/// Half-width (in cells) of the block over which kernel moments are matched.
const NEAR_BLOCK: isize = 8;
/// Boundary samples above this fraction of the peak count as touching.
const BOUNDARY_TOL: f64 = 1e-6;

// ---------------------------------------------------------------- kernels

/// ∫_{[−a,a]^n} |z|^{q−n} dz, q > 0.
pub(crate) fn cube_power_integral(n: usize, q: f64, a: f64) -> f64 {
    match n {
        1 => 2.0 * a.powf(q) / q,
        _ => 8.0 / q * a.powf(q) * quad::gl_composite(|t: f64| t.cos().powf(-q), 0.0, PI / 4.0, 4, 16),
    }
}

/// h^n Σ |oh|^{q−n} over o ∈ [−m, m]^n with |oh| ≥ eps, o ≠ 0.
pub(crate) fn block_sum(n: usize, q: f64, h: f64, eps: f64) -> f64 {
    let m = NEAR_BLOCK;
    let mut s = 0.0;
    let (lo1, hi1) = if n == 2 { (-m, m) } else { (0, 0) };
    for a in -m..=m {
        for b in lo1..=hi1 {
            if a == 0 && b == 0 {
                continue;
            }
            let r = h * ((a * a + b * b) as f64).sqrt();
            if r >= eps * (1.0 - 1e-12) {
                s += r.powf(q - n as f64);
            }
        }
    }
    s * h.powi(n as i32)
}

/// Exact minus discrete ∫|z|^{q−n} over the near block.
pub(crate) fn block_defect(n: usize, q: f64, h: f64, eps: f64) -> f64 {
    let a = (NEAR_BLOCK as f64 + 0.5) * h;
    cube_power_integral(n, q, a) - block_sum(n, q, h, eps)
}

fn offset_len(o0: isize, o1: isize, h: f64) -> f64 {
    h * ((o0 * o0 + o1 * o1) as f64).sqrt()
}

/// Odd kernel c h^n (o_d h)/|oh|^{n+1+t} with an optional first-moment
/// correction on ±e_d. `t = α` gives ∇^α/div^α, `t = −α` gives div^{−α}.
#[allow(clippy::too_many_arguments)]
fn odd_kernel(
    n: usize,
    h: f64,
    c: f64,
    t: f64,
    d: usize,
    eps: f64,
    rmax: Option<f64>,
    corr: bool,
) -> impl Fn(isize, isize) -> f64 + Sync + Send {
    let kappa = if corr { c / n as f64 * block_defect(n, 1.0 - t, h, eps) } else { 0.0 };
    let hn = h.powi(n as i32);
    let p = n as f64 + 1.0 + t;
    move |o0: isize, o1: isize| {
        let o = [o0, o1];
        let mut w = 0.0;
        if o0 != 0 || o1 != 0 {
            let r = offset_len(o0, o1, h);
            if r >= eps * (1.0 - 1e-12) && rmax.is_none_or(|rm| r <= rm) {
                w = c * hn * (o[d] as f64 * h) / r.powf(p);
            }
        }
        let others_zero = (0..n).all(|k| k == d || o[k] == 0);
        if others_zero && o[d].abs() == 1 {
            w += o[d] as f64 * kappa / (2.0 * h);
        }
        w
    }
}

/// Even kernel h^n |oh|^{q−n} with a self weight.
fn even_kernel(n: usize, h: f64, q: f64, self_weight: f64, rmax: Option<f64>) -> impl Fn(isize, isize) -> f64 + Sync + Send {
    let hn = h.powi(n as i32);
    move |o0: isize, o1: isize| {
        if o0 == 0 && o1 == 0 {
            return self_weight;
        }
        let r = offset_len(o0, o1, h);
        if rmax.is_some_and(|rm| r > rm) {
            return 0.0;
        }
        hn * r.powf(q - n as f64)
    }
}

fn key(parts: &[String]) -> String {
    parts.join("|")
}

fn grid_key(g: &GridSpec) -> String {
    format!("{:?}:{:e}", g.extents, g.h)
}

// ------------------------------------------------------- exterior integrals

fn radial_tail(r: f64, dim: f64, p: f64, rmax: Option<f64>) -> f64 {
    let e = dim - p;
    match rmax {
        Some(rm) if r >= rm => 0.0,
        Some(rm) => (r.powf(e) - rm.powf(e)) / (p - dim),
        None => r.powf(e) / (p - dim),
    }
}

/// ∫ over the complement of [lo, hi] (intersected with B_R(x)) of
/// w(θ)|y−x|^{−p} dy for w ∈ {1, θ₀, θ₁}; p > n.
pub(crate) fn exterior_radial(x: &[f64], lo: &[f64], hi: &[f64], p: f64, rmax: Option<f64>) -> [f64; 3] {
    let n = x.len();
    if n == 1 {
        let a = radial_tail(hi[0] - x[0], 1.0, p, rmax);
        let b = radial_tail(x[0] - lo[0], 1.0, p, rmax);
        return [a + b, a - b, 0.0];
    }
    let mut out = [0.0; 3];
    for (t0, t1) in box_sectors(x, lo, hi) {
        let f = |th: f64| {
            let (s, c) = th.sin_cos();
            radial_tail(box_exit(x, lo, hi, c, s), 2.0, p, rmax)
        };
        let rule = quad::gauss_legendre(16);
        let panels = 4;
        let dt = (t1 - t0) / panels as f64;
        for k in 0..panels {
            let (a, b) = (t0 + k as f64 * dt, t0 + (k + 1) as f64 * dt);
            let (cm, rad) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in rule.0.iter().zip(&rule.1) {
                let th = cm + rad * xi;
                let v = wi * rad * f(th);
                let (s, c) = th.sin_cos();
                out[0] += v;
                out[1] += v * c;
                out[2] += v * s;
            }
        }
    }
    out
}

/// Angular sectors (counter-clockwise) in which a ray from x leaves the box
/// through a single edge.
pub(crate) fn box_sectors(x: &[f64], lo: &[f64], hi: &[f64]) -> [(f64, f64); 4] {
    let a1 = (hi[1] - x[1]).atan2(hi[0] - x[0]);
    let a2 = (hi[1] - x[1]).atan2(lo[0] - x[0]);
    let a3 = (lo[1] - x[1]).atan2(lo[0] - x[0]) + 2.0 * PI;
    let a4 = (lo[1] - x[1]).atan2(hi[0] - x[0]);
    [(a4, a1), (a1, a2), (a2, a3), (a3, a4 + 2.0 * PI)]
}

/// Distance from x (inside) to the box boundary along (c, s).
pub(crate) fn box_exit(x: &[f64], lo: &[f64], hi: &[f64], c: f64, s: f64) -> f64 {
    let mut t = f64::INFINITY;
    for (k, dk) in [c, s].into_iter().enumerate().take(x.len()) {
        if dk > 1e-300 {
            t = t.min((hi[k] - x[k]) / dk);
        } else if dk < -1e-300 {
            t = t.min((lo[k] - x[k]) / dk);
        }
    }
    t
}

fn array_cache() -> &'static Mutex<HashMap<String, Arc<Vec<Vec<f64>>>>> {
    static C: OnceLock<Mutex<HashMap<String, Arc<Vec<Vec<f64>>>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached_arrays<F: FnOnce() -> Vec<Vec<f64>>>(k: String, build: F) -> Arc<Vec<Vec<f64>>> {
    if let Some(v) = array_cache().lock().unwrap().get(&k) {
        return v.clone();
    }
    let v = Arc::new(build());
    let mut g = array_cache().lock().unwrap();
    if g.len() >= 64 {
        g.clear();
    }
    g.insert(k, v.clone());
    v
}

/// Exterior integrals [scalar, v₀, v₁] at every node for exponent p.
pub(crate) fn exterior_field(grid: &GridSpec, p: f64, rmax: Option<f64>) -> Arc<Vec<Vec<f64>>> {
    let k = key(&["ext".into(), grid_key(grid), format!("{:?}", grid.origin), format!("{p:e}"), format!("{rmax:?}")]);
    cached_arrays(k, || {
        let (lo, hi) = (grid.box_lo(), grid.box_hi());
        let v = par::map_range(grid.len(), |i| exterior_radial(&grid.coord(i), &lo, &hi, p, rmax));
        (0..3).map(|c| v.iter().map(|e| e[c]).collect()).collect()
    })
}

// ----------------------------------------------------------- direct engine

struct DirectParts {
    corr: Vec<Arc<Correlator>>,
    /// S_d = K_d ⋆ 1 + μ E_d
    s: Arc<Vec<Vec<f64>>>,
}

fn direct_parts(grid: &GridSpec, alpha: f64, backend: &Backend) -> Result<DirectParts> {
    let n = grid.n;
    let h = grid.h;
    let eps = backend.eps_for(h)?;
    let m = mu(n, alpha)?;
    let base = vec![
        "direct".to_string(),
        grid_key(grid),
        format!("{alpha:e}"),
        format!("{eps:e}"),
        format!("{:?}", backend.r),
        backend.local_correction.to_string(),
    ];
    let corr: Vec<Arc<Correlator>> = (0..n)
        .map(|d| {
            let mut k = base.clone();
            k.push(format!("d{d}"));
            cached(key(&k), || Correlator::new(&grid.extents, odd_kernel(n, h, m, alpha, d, eps, backend.r, backend.local_correction)))
        })
        .collect();
    let mut k = base.clone();
    k.push(format!("S{:?}", grid.origin));
    let ext = exterior_field(grid, n as f64 + alpha, backend.r);
    let s = cached_arrays(key(&k), || {
        let ones = vec![1.0; grid.len()];
        (0..n)
            .map(|d| {
                let ks = corr[d].apply(&ones);
                ks.iter().zip(&ext[d + 1]).map(|(a, e)| a + m * e).collect()
            })
            .collect()
    });
    Ok(DirectParts { corr, s })
}

fn check_support(f: &ScalarField, backend: &Backend) -> Result<()> {
    if backend.r.is_some() {
        return Ok(());
    }
    let peak = f.max_abs();
    let b = f.grid.boundary_max(&f.values);
    if peak > 0.0 && b > BOUNDARY_TOL * peak {
        return Err(FracError::SupportTouchesBoundary { boundary: b, allowed: BOUNDARY_TOL * peak });
    }
    Ok(())
}

fn check_dims(op: &'static str, g: &GridSpec) -> Result<()> {
    if !(1..=2).contains(&g.n) {
        return Err(FracError::Dimension { op, n: g.n, supported: "n ∈ {1, 2}" });
    }
    Ok(())
}

/// K_d ⋆ f − f S_d for every d (raw direct gradient).
pub(crate) fn direct_gradient_raw(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<Vec<Vec<f64>>> {
    let parts = direct_parts(&f.grid, alpha, backend)?;
    Ok((0..f.grid.n)
        .map(|d| {
            let kf = parts.corr[d].apply(&f.values);
            kf.iter().zip(&f.values).zip(&parts.s[d]).map(|((k, v), s)| k - v * s).collect()
        })
        .collect())
}

/// K_d ⋆ f + f S_d: the exact transpose of the direct divergence.
pub(crate) fn adjoint_raw(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<Vec<Vec<f64>>> {
    let parts = direct_parts(&f.grid, alpha, backend)?;
    Ok((0..f.grid.n)
        .map(|d| {
            let kf = parts.corr[d].apply(&f.values);
            kf.iter().zip(&f.values).zip(&parts.s[d]).map(|((k, v), s)| k + v * s).collect()
        })
        .collect())
}

fn direct_divergence_raw(phi: &VectorField, alpha: f64, backend: &Backend) -> Result<Vec<f64>> {
    let parts = direct_parts(&phi.grid, alpha, backend)?;
    let mut out = vec![0.0; phi.grid.len()];
    for d in 0..phi.grid.n {
        let kp = parts.corr[d].apply(&phi.components[d]);
        for i in 0..out.len() {
            out[i] += kp[i] - phi.components[d][i] * parts.s[d][i];
        }
    }
    Ok(out)
}

fn riesz_self_weight(n: usize, q: f64, h: f64, kind: BackendKind) -> f64 {
    match kind {
        BackendKind::Fft => {
            // ball of the same volume as one cell
            let rho0 = (h.powi(n as i32) / omega(n)).powf(1.0 / n as f64);
            n as f64 * omega(n) * rho0.powf(q) / q
        }
        _ => block_defect(n, q, h, 0.5 * h) + 0.0,
    }
}

/// Kr ⋆ u with Kr = h^n|oh|^{1−n−α} (self weight per backend kind).
fn riesz_conv(grid: &GridSpec, q: f64, kind: BackendKind, rmax: Option<f64>, u: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h;
    let sw = riesz_self_weight(n, q, h, kind);
    let k = key(&["even".into(), grid_key(grid), format!("{q:e}"), format!("{kind:?}"), format!("{rmax:?}")]);
    let c = cached(k, || Correlator::new(&grid.extents, even_kernel(n, h, q, sw, rmax)));
    c.apply(u)
}

fn gradient_raw(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<Vec<Vec<f64>>> {
    match backend.kind {
        BackendKind::Direct => direct_gradient_raw(f, alpha, backend),
        kind => {
            let n = f.grid.n;
            let c = mu(n, alpha)? / (n as f64 + alpha - 1.0);
            let g = f.central_gradient();
            Ok(g.components
                .iter()
                .map(|comp| riesz_conv(&f.grid, 1.0 - alpha, kind, backend.r, comp).into_iter().map(|v| c * v).collect())
                .collect())
        }
    }
}

fn divergence_raw(phi: &VectorField, alpha: f64, backend: &Backend) -> Result<Vec<f64>> {
    match backend.kind {
        BackendKind::Direct => direct_divergence_raw(phi, alpha, backend),
        kind => {
            let n = phi.grid.n;
            let c = mu(n, alpha)? / (n as f64 + alpha - 1.0);
            let dv = phi.central_divergence();
            Ok(riesz_conv(&phi.grid, 1.0 - alpha, kind, backend.r, &dv.values).into_iter().map(|v| c * v).collect())
        }
    }
}

/// Richardson-style estimate max|u_h − u_{2h}| / (2^{1−α} − 1) on the coarse nodes.
fn richardson(fine: &[Vec<f64>], coarse: &[Vec<f64>], fg: &GridSpec, cg: &GridSpec, order: f64) -> f64 {
    let mut m: f64 = 0.0;
    for idx in 0..cg.len() {
        let i = cg.unravel(idx);
        let fi: Vec<usize> = (0..cg.n).map(|d| 2 * i[d]).collect();
        let j = fg.ravel(&fi);
        for (a, b) in fine.iter().zip(coarse) {
            m = m.max((a[j] - b[idx]).abs());
        }
    }
    m / (2f64.powf(order) - 1.0)
}

fn base_budget(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<ErrorBudget> {
    let n = f.grid.n;
    let m = mu(n, alpha)?;
    let eps = backend.eps_for(f.grid.h)?;
    let inner = m * f.lipschitz() * n as f64 * omega(n) * eps.powf(1.0 - alpha) / (1.0 - alpha);
    let tail = match backend.r {
        Some(r) => 2.0 * m * f.max_abs() * n as f64 * omega(n) * r.powf(-alpha) / alpha,
        None => {
            let b = f.grid.boundary_max(&f.values);
            m * b * n as f64 * omega(n) * (0.5 * f.grid.h).powf(-alpha) / alpha
        }
    };
    Ok(ErrorBudget { inner_term: inner, tail_term: tail, quadrature_term: 0.0, flags: vec![] })
}

fn annotate(prov: &mut BTreeMap<String, String>, op: &str, alpha: f64, backend: &Backend, budget: &ErrorBudget) {
    prov.insert("operator".into(), op.into());
    prov.insert("alpha".into(), format!("{alpha}"));
    prov.insert("backend".into(), backend.tag());
    prov.insert("budget".into(), serde_json::to_string(budget).unwrap_or_default());
}

// ------------------------------------------------------------ public API

/// ∇^α f.
pub fn frac_gradient(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<(VectorField, ErrorBudget)> {
    check_open("frac_gradient", alpha, 0.0, 1.0, "(0, 1)")?;
    check_dims("frac_gradient", &f.grid)?;
    check_support(f, backend)?;
    let fine = gradient_raw(f, alpha, backend)?;
    let mut budget = base_budget(f, alpha, backend)?;
    if let Ok(cf) = f.coarsen() {
        let coarse = gradient_raw(&cf, alpha, backend)?;
        budget.quadrature_term = richardson(&fine, &coarse, &f.grid, &cf.grid, 1.0 - alpha);
    }
    let mut out = VectorField::new(f.grid.clone(), fine)?;
    annotate(&mut out.provenance, "frac_gradient", alpha, backend, &budget);
    Ok((out, budget))
}

/// div^α φ.
pub fn frac_divergence(phi: &VectorField, alpha: f64, backend: &Backend) -> Result<(ScalarField, ErrorBudget)> {
    check_open("frac_divergence", alpha, 0.0, 1.0, "(0, 1)")?;
    check_dims("frac_divergence", &phi.grid)?;
    let mut budget = ErrorBudget::default();
    for d in 0..phi.grid.n {
        let c = phi.component(d);
        check_support(&c, backend)?;
        budget = budget.combine(&base_budget(&c, alpha, backend)?);
    }
    let fine = divergence_raw(phi, alpha, backend)?;
    let cg = phi.grid.coarsen();
    if let Ok(cg) = cg {
        let comps = (0..phi.grid.n).map(|d| phi.component(d).coarsen().map(|s| s.values)).collect::<Result<Vec<_>>>()?;
        let cphi = VectorField::new(cg.clone(), comps)?;
        let coarse = divergence_raw(&cphi, alpha, backend)?;
        budget.quadrature_term = richardson(std::slice::from_ref(&fine), &[coarse], &phi.grid, &cg, 1.0 - alpha);
    }
    let mut out = ScalarField::new(phi.grid.clone(), fine)?;
    annotate(&mut out.provenance, "frac_divergence", alpha, backend, &budget);
    Ok((out, budget))
}

/// The vector field g with h^nΣ f div^α_h φ = −h^nΣ g·φ for every φ
/// (transpose of the direct divergence weights).
pub fn adjoint_divergence(f: &ScalarField, alpha: f64, backend: &Backend) -> Result<VectorField> {
    check_open("adjoint_divergence", alpha, 0.0, 1.0, "(0, 1)")?;
    check_dims("adjoint_divergence", &f.grid)?;
    if backend.kind != BackendKind::Direct {
        return invalid("adjoint_divergence needs the direct backend (its weights are transposed explicitly)");
    }
    let mut out = VectorField::new(f.grid.clone(), adjoint_raw(f, alpha, backend)?)?;
    annotate(&mut out.provenance, "adjoint_divergence", alpha, backend, &ErrorBudget::default());
    Ok(out)
}

/// Analytic far field used outside the grid by negative-order operators:
/// φ(y) ≈ μ_{n,α} M (c − y)/|c − y|^{n+α+1}, the leading term of ∇^α f
/// away from the support of f (M = ∫f, c its centroid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub alpha: f64,
    pub mass: f64,
    pub centroid: Vec<f64>,
}

impl TailModel {
    pub fn from_source(f: &ScalarField, alpha: f64) -> Self {
        let g = &f.grid;
        let mass = f.integral();
        let mut c = vec![0.0; g.n];
        if mass != 0.0 {
            for (i, v) in f.values.iter().enumerate() {
                let x = g.coord(i);
                for d in 0..g.n {
                    c[d] += v * x[d];
                }
            }
            c.iter_mut().for_each(|v| *v *= g.cell_volume() / mass);
        }
        TailModel { alpha, mass, centroid: c }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let m = mu(n, self.alpha).unwrap_or(0.0);
        let d: Vec<f64> = self.centroid.iter().zip(y).map(|(c, v)| c - v).collect();
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = m * self.mass / r.powf(n as f64 + self.alpha + 1.0);
        d.iter().map(|v| v * s).collect()
    }
}

/// μ_{n,−α} ∫_{box^c} (y−x)·φ_ff(y)/|y−x|^{n+1−α} dy at the node x.
fn neg_tail_at(x: &[f64], lo: &[f64], hi: &[f64], alpha: f64, tail: &TailModel) -> f64 {
    let n = x.len();
    let m = mu(n, -alpha).unwrap_or(0.0);
    // the far field decays like ρ^{−n−α}; ρ = r/u maps the ray to u ∈ (0, 1]
    let ray = |c: f64, s: f64, r: f64| -> f64 {
        quad::gl_composite(
            |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let rho = r / u;
                let y: Vec<f64> = if n == 1 { vec![x[0] + c * rho] } else { vec![x[0] + c * rho, x[1] + s * rho] };
                let phi = tail.eval(&y);
                let proj = if n == 1 { c * phi[0] } else { c * phi[0] + s * phi[1] };
                // (y−x)/|y−x|^{n+1−α} · ρ^{n−1} dρ = θ̂ ρ^{α−1} dρ
                proj * rho.powf(alpha - 1.0) * r / (u * u)
            },
            0.0,
            1.0,
            2,
            12,
        )
    };
    if n == 1 {
        return m * (ray(1.0, 0.0, hi[0] - x[0]) + ray(-1.0, 0.0, x[0] - lo[0]));
    }
    let mut s = 0.0;
    for (t0, t1) in box_sectors(x, lo, hi) {
        s += quad::gl_composite(
            |th: f64| {
                let (sn, cs) = th.sin_cos();
                ray(cs, sn, box_exit(x, lo, hi, cs, sn))
            },
            t0,
            t1,
            2,
            8,
        );
    }
    m * s
}

fn neg_kernels(grid: &GridSpec, alpha: f64) -> Result<Vec<Arc<Correlator>>> {
    let n = grid.n;
    let h = grid.h;
    let m = mu(n, -alpha)?;
    Ok((0..n)
        .map(|d| {
            let k = key(&["neg".into(), grid_key(grid), format!("{alpha:e}"), format!("d{d}")]);
            cached(k, || Correlator::new(&grid.extents, odd_kernel(n, h, m, -alpha, d, 0.5 * h, None, true)))
        })
        .collect())
}

/// div^{−α} φ(x) = μ_{n,−α} ∫ z·φ(x+z)/|z|^{n+1−α} dz. Without a tail
/// model φ is taken to vanish outside the grid and the budget's tail term
/// bounds what that neglects.
pub fn frac_divergence_neg(phi: &VectorField, alpha: f64, tail: Option<&TailModel>) -> Result<(ScalarField, ErrorBudget)> {
    check_open("frac_divergence_neg", alpha, 0.0, 1.0, "(0, 1)")?;
    let g = &phi.grid;
    check_dims("frac_divergence_neg", g)?;
    let ks = neg_kernels(g, alpha)?;
    let mut out = vec![0.0; g.len()];
    for (k, c) in ks.iter().zip(&phi.components) {
        let v = k.apply(c);
        out.iter_mut().zip(v).for_each(|(o, a)| *o += a);
    }
    let (lo, hi) = (g.box_lo(), g.box_hi());
    if let Some(t) = tail {
        let add = par::map_range(g.len(), |i| neg_tail_at(&g.coord(i), &lo, &hi, alpha, t));
        out.iter_mut().zip(add).for_each(|(o, a)| *o += a);
    }
    let mut budget = ErrorBudget::default();
    // neglected (or modelled) exterior: |φ| at the boundary times ∫_ext |y−x|^{α−n}
    let b = (0..g.n).map(|d| g.boundary_max(&phi.components[d])).fold(0.0, f64::max);
    let half_width = lo.iter().zip(&hi).map(|(a, c)| 0.5 * (c - a)).fold(f64::INFINITY, f64::min);
    let n = g.n as f64;
    // φ decays at least like |y|^{−n−α}, so the exterior pairing is bounded by b·L^{n+α}·∫_L^∞ ρ^{−n−1}·nω_n ρ^{n−1}... (flattened)
    let raw_tail = mu(g.n, -alpha)? * b * n * omega(g.n) * half_width.powf(alpha) / 1.0;
    budget.tail_term = if tail.is_some() { 0.1 * raw_tail } else { raw_tail };
    let out_norm = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if raw_tail > 0.1 * out_norm && tail.is_none() {
        budget.flags.push("slow_decay: tail term exceeds 10% of the output norm".into());
    }
    let mut f = ScalarField::new(g.clone(), out)?;
    f.provenance.insert("operator".into(), "frac_divergence_neg".into());
    f.provenance.insert("alpha".into(), format!("{alpha}"));
    f.provenance.insert("tail_model".into(), tail.is_some().to_string());
    Ok((f, budget))
}

/// div^{−α}φ at a single node (same weights as the full-grid operator).
pub fn frac_divergence_neg_at(phi: &VectorField, alpha: f64, idx: usize, tail: Option<&TailModel>) -> Result<f64> {
    check_open("frac_divergence_neg_at", alpha, 0.0, 1.0, "(0, 1)")?;
    let g = &phi.grid;
    let n = g.n;
    let h = g.h;
    let m = mu(n, -alpha)?;
    let i = g.unravel(idx);
    let mut s = 0.0;
    for d in 0..n {
        let k = odd_kernel(n, h, m, -alpha, d, 0.5 * h, None, true);
        let terms: Vec<f64> = (0..g.len())
            .map(|j| {
                let jj = g.unravel(j);
                let o0 = jj[0] as isize - i[0] as isize;
                let o1 = if n == 2 { jj[1] as isize - i[1] as isize } else { 0 };
                k(o0, o1) * phi.components[d][j]
            })
            .collect();
        s += par::pairwise_sum(&terms);
    }
    if let Some(t) = tail {
        s += neg_tail_at(&g.coord(idx), &g.box_lo(), &g.box_hi(), alpha, t);
    }
    Ok(s)
}

/// (−Δ)^{s/2} f for s ∈ (−1, 2).
pub fn frac_laplacian(f: &ScalarField, s: f64) -> Result<(ScalarField, ErrorBudget)> {
    check_open("frac_laplacian", s, -1.0, 2.0, "(-1, 2)")?;
    let g = &f.grid;
    check_dims("frac_laplacian", g)?;
    if s == 0.0 {
        let mut out = f.clone();
        out.provenance.insert("operator".into(), "frac_laplacian(s=0)".into());
        return Ok((out, ErrorBudget::default()));
    }
    let (values, budget) = laplacian_raw(f, s)?;
    let mut budget = budget;
    if let Ok(cf) = f.coarsen() {
        let (coarse, _) = laplacian_raw(&cf, s)?;
        budget.quadrature_term = richardson(std::slice::from_ref(&values), &[coarse], g, &cf.grid, (2.0 - s).min(1.0 + s.abs()).max(0.5));
    }
    let mut out = ScalarField::new(g.clone(), values)?;
    out.provenance.insert("operator".into(), "frac_laplacian".into());
    out.provenance.insert("s".into(), format!("{s}"));
    out.provenance.insert("budget".into(), serde_json::to_string(&budget).unwrap_or_default());
    Ok((out, budget))
}

fn laplacian_raw(f: &ScalarField, s: f64) -> Result<(Vec<f64>, ErrorBudget)> {
    let g = &f.grid;
    let n = g.n;
    let h = g.h;
    let c = nu(n, s)?;
    let hn = h.powi(n as i32);
    let mut budget = ErrorBudget::default();
    if s < 0.0 {
        // integrable kernel |z|^{−n−s}: plain sum with a moment-matched self weight
        let q = -s;
        let sw = c * block_defect(n, q, h, 0.5 * h);
        let k = key(&["lapneg".into(), grid_key(g), format!("{s:e}")]);
        let corr = cached(k, || {
            Correlator::new(&g.extents, move |a, b| if a == 0 && b == 0 { sw } else { c * hn * offset_len(a, b, h).powf(-(n as f64) - s) })
        });
        let out = corr.apply(&f.values);
        let bmax = g.boundary_max(&f.values);
        budget.tail_term = c.abs() * bmax * n as f64 * omega(n) * 1e3;
        if bmax > BOUNDARY_TOL * f.max_abs() {
            budget.flags.push("support_touches_boundary".into());
        }
        return Ok((out, budget));
    }
    // s ∈ (0, 2): difference form, quadratic moment correction
    let kappa2 = c / (2.0 * n as f64) * block_defect(n, 2.0 - s, h, 0.5 * h);
    let k = key(&["lap".into(), grid_key(g), format!("{s:e}")]);
    let corr = cached(k, || {
        Correlator::new(&g.extents, move |a, b| {
            if a == 0 && b == 0 {
                return 0.0;
            }
            let mut w = c * hn * offset_len(a, b, h).powf(-(n as f64) - s);
            if (a.abs() + b.abs()) == 1 {
                w += kappa2 / (h * h);
            }
            w
        })
    });
    let kf = corr.apply(&f.values);
    let ks = cached_arrays(key(&["lapS".into(), grid_key(g), format!("{:?}", g.origin), format!("{s:e}")]), || {
        let ext = exterior_field(g, n as f64 + s, None);
        let k1 = corr.apply(&vec![1.0; g.len()]);
        vec![k1.iter().zip(&ext[0]).map(|(a, e)| a + c * e).collect()]
    });
    let out = kf.iter().zip(&f.values).zip(&ks[0]).map(|((a, v), sv)| a - v * sv).collect();
    let bmax = g.boundary_max(&f.values);
    budget.tail_term = c.abs() * bmax * n as f64 * omega(n) * (0.5 * h).powf(-s) / s;
    Ok((out, budget))
}

/// I_s f = c_{n,s} ∫ f(y)|x−y|^{s−n} dy, s ∈ (0, n); the self cell is
/// integrated exactly over the ball of equal volume.
pub fn riesz_potential(f: &ScalarField, s: f64) -> Result<(ScalarField, ErrorBudget)> {
    let g = &f.grid;
    check_dims("riesz_potential", g)?;
    let c = riesz_potential_constant(g.n, s)?;
    let v: Vec<f64> = riesz_conv(g, s, BackendKind::Fft, None, &f.values).into_iter().map(|x| c * x).collect();
    let mut budget = ErrorBudget::default();
    let b = g.boundary_max(&f.values);
    if b > BOUNDARY_TOL * f.max_abs() {
        budget.flags.push("tail_growth: input does not vanish at the grid boundary".into());
        budget.tail_term = f64::INFINITY;
    }
    if let Ok(cf) = f.coarsen() {
        let cv: Vec<f64> = riesz_conv(&cf.grid, s, BackendKind::Fft, None, &cf.values).into_iter().map(|x| c * x).collect();
        budget.quadrature_term = richardson(std::slice::from_ref(&v), &[cv], g, &cf.grid, s.min(1.0));
    }
    let mut out = ScalarField::new(g.clone(), v)?;
    out.provenance.insert("operator".into(), "riesz_potential".into());
    out.provenance.insert("s".into(), format!("{s}"));
    Ok((out, budget))
}

/// ∇^α_NL(f, g)(x) = μ ∫ (y−x)(f(y)−f(x))(g(y)−g(x))/|y−x|^{n+α+1} dy.
pub fn nl_gradient_remainder(f: &ScalarField, g: &ScalarField, alpha: f64) -> Result<(VectorField, ErrorBudget)> {
    check_open("nl_gradient_remainder", alpha, 0.0, 1.0, "(0, 1)")?;
    if f.grid != g.grid {
        return invalid("remainder inputs live on different grids");
    }
    let backend = Backend::direct();
    check_support(f, &backend)?;
    check_support(g, &backend)?;
    let grid = &f.grid;
    let parts = direct_parts(grid, alpha, &backend)?;
    let fg: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    let comps: Vec<Vec<f64>> = (0..grid.n)
        .map(|d| {
            let kfg = parts.corr[d].apply(&fg);
            let kf = parts.corr[d].apply(&f.values);
            let kg = parts.corr[d].apply(&g.values);
            (0..grid.len()).map(|i| kfg[i] - g.values[i] * kf[i] - f.values[i] * kg[i] + fg[i] * parts.s[d][i]).collect()
        })
        .collect();
    let n = grid.n;
    let eps = 0.5 * grid.h;
    let budget = ErrorBudget {
        inner_term: mu(n, alpha)? * f.lipschitz() * g.lipschitz() * n as f64 * omega(n) * eps.powf(2.0 - alpha) / (2.0 - alpha),
        ..Default::default()
    };
    let mut out = VectorField::new(grid.clone(), comps)?;
    annotate(&mut out.provenance, "nl_gradient_remainder", alpha, &backend, &budget);
    Ok((out, budget))
}

/// div^α_NL(f, φ)(x) = μ ∫ (y−x)·(φ(y)−φ(x))(f(y)−f(x))/|y−x|^{n+α+1} dy.
pub fn nl_divergence_remainder(f: &ScalarField, phi: &VectorField, alpha: f64) -> Result<(ScalarField, ErrorBudget)> {
    check_open("nl_divergence_remainder", alpha, 0.0, 1.0, "(0, 1)")?;
    if f.grid != phi.grid {
        return invalid("remainder inputs live on different grids");
    }
    let backend = Backend::direct();
    check_support(f, &backend)?;
    let grid = &f.grid;
    let parts = direct_parts(grid, alpha, &backend)?;
    let mut out = vec![0.0; grid.len()];
    let mut lip_phi: f64 = 0.0;
    for d in 0..grid.n {
        let p = &phi.components[d];
        let comp = phi.component(d);
        check_support(&comp, &backend)?;
        lip_phi = lip_phi.max(comp.lipschitz());
        let fp: Vec<f64> = f.values.iter().zip(p).map(|(a, b)| a * b).collect();
        let kfp = parts.corr[d].apply(&fp);
        let kf = parts.corr[d].apply(&f.values);
        let kp = parts.corr[d].apply(p);
        for i in 0..grid.len() {
            out[i] += kfp[i] - p[i] * kf[i] - f.values[i] * kp[i] + fp[i] * parts.s[d][i];
        }
    }
    let n = grid.n;
    let eps = 0.5 * grid.h;
    let budget = ErrorBudget {
        inner_term: mu(n, alpha)? * f.lipschitz() * lip_phi * n as f64 * omega(n) * eps.powf(2.0 - alpha) / (2.0 - alpha),
        ..Default::default()
    };
    let mut s = ScalarField::new(grid.clone(), out)?;
    annotate(&mut s.provenance, "nl_divergence_remainder", alpha, &backend, &budget);
    Ok((s, budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{rasterize_fn, AnalyticFn};

    #[test]
    fn exterior_matches_one_dimensional_closed_form() {
        let e = exterior_radial(&[0.3], &[0.0], &[1.0], 1.5, None);
        let want_v = (0.7f64.powf(-0.5) - 0.3f64.powf(-0.5)) / 0.5;
        assert!((e[1] - want_v).abs() < 1e-14);
    }

    #[test]
    fn exterior_2d_symmetric_point_has_zero_vector_part() {
        let e = exterior_radial(&[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 2.5, None);
        assert!(e[1].abs() < 1e-12 && e[2].abs() < 1e-12);
        // inscribed / circumscribed circle bounds for the scalar part
        let disk = |r: f64| 2.0 * PI * r.powf(-0.5) / 0.5;
        assert!(e[0] < disk(1.0) && e[0] > disk(2f64.sqrt()));
    }

    #[test]
    fn even_input_gives_odd_gradient() {
        let g = GridSpec::window(&[-8.0], &[8.0], 1.0 / 64.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::polynomial_bump(&[0.0], 6.0, 2).unwrap(), &g).unwrap();
        let (gr, _) = frac_gradient(&f, 0.5, &Backend::direct()).unwrap();
        let m = g.len();
        for i in 0..m / 2 {
            assert!((gr.components[0][i] + gr.components[0][m - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn eps_range_is_enforced() {
        let g = GridSpec::window(&[-4.0], &[4.0], 1.0 / 16.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::gaussian(&[0.0], 0.5).unwrap(), &g).unwrap();
        assert!(frac_gradient(&f, 0.5, &Backend::direct().with_eps(1.0)).is_err());
        assert!(frac_gradient(&f, 1.0, &Backend::direct()).is_err());
    }
}
