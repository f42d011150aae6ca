//! Gagliardo seminorms, fractional perimeters, fractional variation via the
//! discrete adjoint, variation measures on regions and the coarea integral.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::constants::mu;
use crate::conv::{cached, Correlator};
use crate::error::{check_open, invalid, FracError, Result};
use crate::fields::{rasterize_shape, GridSpec, ScalarField, VectorField};
use crate::operators::{self, adjoint_raw, box_exit, box_sectors, Backend, ErrorBudget};
use crate::par;
use crate::quad;
use crate::shapes::{clip_intervals, BoundedRegion, ShapeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationMethod {
    AdjointL1,
    PairingSup,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub value: f64,
    pub region: Option<BoundedRegion>,
    pub method: VariationMethod,
    pub budget: ErrorBudget,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorMeasureSample {
    pub region: BoundedRegion,
    pub vector: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterReport {
    pub value: f64,
    pub method: String,
    /// part of the value coming from the analytic exterior term
    pub exterior: f64,
    pub error_estimate: f64,
}

pub fn is_binary(f: &ScalarField) -> bool {
    f.values.iter().all(|&v| v == 0.0 || v == 1.0)
}

// ------------------------------------------------------------ pair weights

/// ∫_{C_0}∫_{C_o} |x−y|^{−n−σ} dx dy for unit cells (scale by h^{n−σ}).
fn cell_pair_weight(n: usize, o: [isize; 2], sigma: f64) -> f64 {
    let q = 1.0 - sigma;
    if n == 1 {
        let m = o[0].unsigned_abs() as f64;
        let g = |t: f64| if t <= 0.0 { 0.0 } else { t.powf(q) };
        return (2.0 * g(m) - g(m - 1.0) - g(m + 1.0)) / (sigma * q);
    }
    // ∫ T_o(z)|z|^{−2−σ} dz with the tent T_o(z) = Π (1 − |z_d − o_d|)_+
    let (a, b) = (o[0].unsigned_abs() as f64, o[1].unsigned_abs() as f64);
    let tent = |z0: f64, z1: f64| (1.0 - (z0 - a).abs()).max(0.0) * (1.0 - (z1 - b).abs()).max(0.0);
    let f = |z0: f64, z1: f64| {
        let r2 = z0 * z0 + z1 * z1;
        if r2 == 0.0 {
            0.0
        } else {
            tent(z0, z1) * r2.powf(-(2.0 + sigma) / 2.0)
        }
    };
    let near = a.max(b) <= 1.0;
    let cuts0 = [a - 1.0, a, a + 1.0];
    let cuts1 = [b - 1.0, b, b + 1.0];
    let mut s = 0.0;
    for w0 in cuts0.windows(2) {
        for w1 in cuts1.windows(2) {
            let (x0, x1, y0, y1) = (w0[0], w0[1], w1[0], w1[1]);
            if near {
                let inner = |z0: f64| {
                    let mut acc = 0.0;
                    let mut pts = vec![y0, y1];
                    if y0 < 0.0 && y1 > 0.0 {
                        pts.insert(1, 0.0);
                    }
                    for p in pts.windows(2) {
                        acc += quad::adaptive(|z1| f(z0, z1), p[0], p[1], 1e-12).map(|r| r.0).unwrap_or(0.0);
                    }
                    acc
                };
                let mut xs = vec![x0, x1];
                if x0 < 0.0 && x1 > 0.0 {
                    xs.insert(1, 0.0);
                }
                for p in xs.windows(2) {
                    s += quad::adaptive(inner, p[0], p[1], 1e-11).map(|r| r.0).unwrap_or(0.0);
                }
            } else {
                s += quad::gl(|z0| quad::gl(|z1| f(z0, z1), y0, y1, 10), x0, x1, 10);
            }
        }
    }
    s
}

const EXACT_PAIR_RADIUS: isize = 24;

fn pair_table(n: usize, sigma: f64) -> Arc<Vec<f64>> {
    static C: OnceLock<Mutex<HashMap<String, Arc<Vec<f64>>>>> = OnceLock::new();
    let c = C.get_or_init(|| Mutex::new(HashMap::new()));
    let k = format!("{n}:{sigma:e}");
    if let Some(v) = c.lock().unwrap().get(&k) {
        return v.clone();
    }
    let m = EXACT_PAIR_RADIUS as usize + 1;
    let len = if n == 1 { m } else { m * m };
    let v = Arc::new(par::map_range(len, |i| {
        let o = if n == 1 { [i as isize, 0] } else { [(i / m) as isize, (i % m) as isize] };
        if o == [0, 0] {
            0.0
        } else {
            cell_pair_weight(n, o, sigma)
        }
    }));
    c.lock().unwrap().insert(k, v.clone());
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PairRule {
    CellExact,
    Midpoint,
}

fn pair_kernel(grid: &GridSpec, sigma: f64, rule: PairRule) -> Arc<Correlator> {
    let n = grid.n;
    let h = grid.h;
    let k = format!("pair|{:?}|{h:e}|{sigma:e}|{rule:?}", grid.extents);
    let table = if rule == PairRule::CellExact { Some(pair_table(n, sigma)) } else { None };
    cached(k, move || {
        let scale = h.powf(n as f64 - sigma);
        let m = EXACT_PAIR_RADIUS as usize + 1;
        Correlator::new(&grid.extents, move |a, b| {
            if a == 0 && b == 0 {
                return 0.0;
            }
            let (ua, ub) = (a.unsigned_abs(), b.unsigned_abs());
            if let Some(t) = &table {
                if ua < m && ub < m {
                    return scale * if n == 1 { t[ua] } else { t[ua * m + ub] };
                }
            }
            let r = ((a * a + b * b) as f64).sqrt();
            scale * r.powf(-(n as f64) - sigma)
        })
    })
}

/// 2 h^n Σ_i |f_i|^p ∫_{box^c} |y − x_i|^{−n−σ} dy (f vanishes outside).
fn exterior_pairs(f: &ScalarField, p: f64, sigma: f64) -> f64 {
    let g = &f.grid;
    let n = g.n;
    let (lo, hi) = (g.box_lo(), g.box_hi());
    let h = g.h;
    let terms: Vec<f64> = if n == 1 && sigma < 1.0 {
        // exact over each cell
        (0..g.len())
            .map(|i| {
                let v = f.values[i].abs().powf(p);
                if v == 0.0 {
                    return 0.0;
                }
                let x = g.coord(i)[0];
                let prim = |d: f64| d.powf(1.0 - sigma) / (sigma * (1.0 - sigma));
                let right = prim(hi[0] - x + 0.5 * h) - prim(hi[0] - x - 0.5 * h);
                let left = prim(x - lo[0] + 0.5 * h) - prim(x - lo[0] - 0.5 * h);
                v * (left + right)
            })
            .collect()
    } else {
        let ext = operators::exterior_field(g, n as f64 + sigma, None);
        (0..g.len()).map(|i| f.values[i].abs().powf(p) * ext[0][i] * g.cell_volume()).collect()
    };
    2.0 * par::pairwise_sum(&terms)
}

/// [f]_{W^{α,p}}. Binary fields use exact cell-pair weights; other fields
/// use midpoint weights plus a near-block correction built from the
/// central-difference gradient (p ∈ {1, 2}).
pub fn gagliardo_seminorm(f: &ScalarField, alpha: f64, p: f64) -> Result<f64> {
    check_open("gagliardo_seminorm", alpha, 0.0, 1.0, "(0, 1)")?;
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("p must lie in [1, ∞), got {p}"));
    }
    Ok(gagliardo_power(f, alpha, p)?.powf(1.0 / p))
}

fn gagliardo_power(f: &ScalarField, alpha: f64, p: f64) -> Result<f64> {
    let g = &f.grid;
    let n = g.n;
    let sigma = alpha * p;
    let binary = is_binary(f);
    let rule = if binary { PairRule::CellExact } else { PairRule::Midpoint };
    let k = pair_kernel(g, sigma, rule);
    let window = if p == 2.0 || (binary && p == 1.0) {
        let ones = vec![1.0; g.len()];
        let k1 = k.apply(&ones);
        let kf = k.apply(&f.values);
        let t: Vec<f64> = (0..g.len()).map(|i| f.values[i] * f.values[i] * k1[i] - f.values[i] * kf[i]).collect();
        2.0 * par::pairwise_sum(&t)
    } else {
        if g.len() > 1 << 16 {
            return Err(FracError::Unresolved(format!(
                "general-p seminorm is quadratic in the sample count; {} samples exceed 65536",
                g.len()
            )));
        }
        let scale = g.h.powf(n as f64 - sigma);
        let rows = par::map_range(g.len(), |i| {
            let xi = g.unravel(i);
            let mut s = 0.0;
            for j in 0..g.len() {
                if i == j {
                    continue;
                }
                let xj = g.unravel(j);
                let (a, b) = (xi[0] as f64 - xj[0] as f64, xi[1] as f64 - xj[1] as f64);
                s += (f.values[i] - f.values[j]).abs().powf(p) * (a * a + b * b).sqrt().powf(-(n as f64) - sigma);
            }
            s * scale
        });
        par::pairwise_sum(&rows)
    };
    let mut total = window + exterior_pairs(f, p, sigma);
    if !binary && (p == 1.0 || p == 2.0) {
        // mass of |∇f·z|^p|z|^{−n−σ} over the near block missed by the midpoint sum
        let defect = operators::block_defect(n, p - sigma, g.h, 0.5 * g.h);
        let dir = if p == 2.0 {
            1.0 / n as f64
        } else if n == 1 {
            1.0
        } else {
            2.0 / PI
        };
        let grad = f.central_gradient();
        let t: Vec<f64> = (0..g.len()).map(|i| grad.norm_at(i).powf(p)).collect();
        total += par::pairwise_sum(&t) * g.cell_volume() * dir * defect;
    }
    Ok(total.max(0.0))
}

// ------------------------------------------------------------ perimeters

/// P_σ of a finite union of disjoint bounded intervals, in closed form.
pub fn interval_union_perimeter(iv: &[(f64, f64)], sigma: f64) -> f64 {
    if iv.is_empty() {
        return 0.0;
    }
    let q = 1.0 - sigma;
    let g = |t: f64| {
        if t <= 0.0 {
            0.0
        } else if t.is_infinite() {
            f64::INFINITY
        } else {
            t.powf(q)
        }
    };
    // gaps of the complement, including the two half-lines
    let mut gaps = vec![(f64::NEG_INFINITY, iv[0].0)];
    for w in iv.windows(2) {
        gaps.push((w[0].1, w[1].0));
    }
    gaps.push((iv[iv.len() - 1].1, f64::INFINITY));
    let mut s = 0.0;
    for &(a, b) in iv {
        for &(c, d) in &gaps {
            // ∫_a^b∫_c^d |x−y|^{−1−σ}, disjoint intervals
            let v = if c >= b {
                let far = if d.is_infinite() { 0.0 } else { g(d - b) - g(d - a) };
                g(c - a) - g(c - b) + far
            } else {
                let far = if c.is_infinite() { 0.0 } else { g(b - c) - g(a - c) };
                g(b - d) - g(a - d) + far
            };
            s += v / (sigma * q);
        }
    }
    2.0 * s
}

/// P_α(E) over the whole space from the exact geometry: closed form on the
/// line, and in the plane the slice formula P = ∫_0^π ∫ P_α^{1}(E ∩ line) dw dθ.
pub fn frac_perimeter_exact(e: &ShapeSet, alpha: f64) -> Result<PerimeterReport> {
    check_open("frac_perimeter", alpha, 0.0, 1.0, "(0, 1)")?;
    if matches!(e, ShapeSet::Empty { .. }) {
        return Ok(PerimeterReport { value: 0.0, method: "exact".into(), exterior: 0.0, error_estimate: 0.0 });
    }
    let (lo, hi) = e.bounding_box().ok_or_else(|| FracError::InvalidArgument("unbounded set has infinite fractional perimeter".into()))?;
    match e.dim() {
        1 => {
            let iv = e.line_intervals(&[0.0], &[1.0]);
            Ok(PerimeterReport { value: interval_union_perimeter(&iv, alpha), method: "exact".into(), exterior: 0.0, error_estimate: 0.0 })
        }
        2 => {
            let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
            let slice = |th: f64| -> f64 {
                let (s, cth) = th.sin_cos();
                let dir = [cth, s];
                let perp = [-s, cth];
                let mut cuts = slice_breaks(e, &c, &perp);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
                let per = |w: f64| {
                    let x = [c[0] + w * perp[0], c[1] + w * perp[1]];
                    interval_union_perimeter(&e.line_intervals(&x, &dir), alpha)
                };
                cuts.windows(2).map(|p| quad::adaptive(per, p[0], p[1], 1e-11).map(|r| r.0).unwrap_or(f64::NAN)).sum()
            };
            let run = |panels: usize| quad::gl_composite(slice, 0.0, PI, panels, 16);
            let (a, b) = (run(4), run(8));
            if !b.is_finite() {
                return Err(FracError::Quadrature { residual: (a - b).abs() });
            }
            Ok(PerimeterReport { value: b, method: "exact_slices".into(), exterior: 0.0, error_estimate: (a - b).abs() })
        }
        n => Err(FracError::Dimension { op: "frac_perimeter", n, supported: "n ∈ {1, 2}" }),
    }
}

/// Offsets w along `perp` (from c) where the topology of the slice
/// E ∩ {c + w perp + t dir} changes.
pub(crate) fn slice_breaks(e: &ShapeSet, c: &[f64], perp: &[f64]) -> Vec<f64> {
    let proj = |p: &[f64]| (p[0] - c[0]) * perp[0] + (p[1] - c[1]) * perp[1];
    match e {
        ShapeSet::Ball { center, radius } => vec![proj(center) - radius, proj(center) + radius],
        ShapeSet::Box { lo, hi } => [[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]].iter().map(|p| proj(p)).collect(),
        ShapeSet::Intersection { parts } => parts.iter().flat_map(|p| slice_breaks(p, c, perp)).collect(),
        _ => vec![],
    }
}

/// ∫_{box^c ∩ E} w(θ)|y − x|^{−p} dy for w ∈ {1, θ₀, θ₁}, by ray intersections.
pub(crate) fn exterior_shape(x: &[f64], lo: &[f64], hi: &[f64], e: &ShapeSet, p: f64) -> [f64; 3] {
    let n = x.len();
    let nf = n as f64;
    let shell = |a: f64, b: f64| -> f64 {
        let fb = if b.is_infinite() { 0.0 } else { b.powf(nf - p) };
        (a.powf(nf - p) - fb) / (p - nf)
    };
    let along =
        |d: &[f64], r: f64| -> f64 { clip_intervals(&e.line_intervals(x, d), r, f64::INFINITY).iter().map(|&(a, b)| shell(a, b)).sum() };
    if n == 1 {
        let a = along(&[1.0], hi[0] - x[0]);
        let b = along(&[-1.0], x[0] - lo[0]);
        return [a + b, a - b, 0.0];
    }
    let rule = quad::gauss_legendre(16);
    let mut out = [0.0; 3];
    for (t0, t1) in box_sectors(x, lo, hi) {
        let panels = 8;
        let dt = (t1 - t0) / panels as f64;
        for k in 0..panels {
            let (a, b) = (t0 + k as f64 * dt, t0 + (k + 1) as f64 * dt);
            let (cm, rad) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in rule.0.iter().zip(&rule.1) {
                let th = cm + rad * xi;
                let (s, c) = th.sin_cos();
                let v = wi * rad * along(&[c, s], box_exit(x, lo, hi, c, s));
                out[0] += v;
                out[1] += v * c;
                out[2] += v * s;
            }
        }
    }
    out
}

/// P_α(E; Ω) on a grid of spacing h: exact cell-pair weights inside the
/// window plus the exterior pairs integrated along rays. Ω = None means
/// the whole space (the window then covers E with a margin).
pub fn frac_perimeter_grid(e: &ShapeSet, alpha: f64, omega_region: Option<&BoundedRegion>, h: f64) -> Result<PerimeterReport> {
    check_open("frac_perimeter", alpha, 0.0, 1.0, "(0, 1)")?;
    let n = e.dim();
    let (lo, hi) = match omega_region {
        Some(BoundedRegion::Box { lo, hi }) => (lo.clone(), hi.clone()),
        Some(BoundedRegion::Ball { center, radius }) => {
            (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
        }
        None => {
            let (a, b) =
                e.bounding_box().ok_or_else(|| FracError::InvalidArgument("unbounded set has infinite fractional perimeter".into()))?;
            let pad = 4.0 * h;
            (a.iter().map(|v| ((v - pad) / h).floor() * h).collect::<Vec<f64>>(), b.iter().map(|v| ((v + pad) / h).ceil() * h).collect())
        }
    };
    let grid = GridSpec::window(&lo, &hi, h)?;
    let chi = rasterize_shape(e, &grid)?;
    let mask: Vec<f64> = (0..grid.len())
        .map(|i| match omega_region {
            Some(r) => {
                if r.contains(&grid.coord(i)) {
                    1.0
                } else {
                    0.0
                }
            }
            None => 1.0,
        })
        .collect();
    let k = pair_kernel(&grid, alpha, PairRule::CellExact);
    let c = &chi.values;
    let a1: Vec<f64> = (0..grid.len()).map(|i| mask[i] * (1.0 - c[i])).collect();
    let a2: Vec<f64> = (0..grid.len()).map(|i| (1.0 - mask[i]) * (1.0 - c[i])).collect();
    let a3: Vec<f64> = (0..grid.len()).map(|i| (1.0 - mask[i]) * c[i]).collect();
    let (k1, k2, k3) = (k.apply(&a1), k.apply(&a2), k.apply(&a3));
    let t: Vec<f64> = (0..grid.len()).map(|i| mask[i] * (2.0 * c[i] * k1[i] + 2.0 * (c[i] * k2[i] + (1.0 - c[i]) * k3[i]))).collect();
    let window = par::pairwise_sum(&t);
    // pairs with the complement of the window
    let p = n as f64 + alpha;
    let (glo, ghi) = (grid.box_lo(), grid.box_hi());
    let truncated = e.bounding_box().is_none_or(|(a, b)| (0..n).any(|d| a[d] < glo[d] || b[d] > ghi[d]));
    let ext_all = exterior_pairs(&ScalarField { values: (0..grid.len()).map(|i| mask[i] * c[i]).collect(), ..chi.clone() }, 1.0, alpha);
    let ext_shape = if truncated {
        let v = par::map_range(grid.len(), |i| {
            if mask[i] == 0.0 {
                return 0.0;
            }
            let x = grid.coord(i);
            let ein = exterior_shape(&x, &glo, &ghi, e, p)[0];
            // χ(x)=1: subtract pairs with E outside; χ(x)=0: add them
            if c[i] == 1.0 {
                -ein
            } else {
                ein
            }
        });
        2.0 * par::pairwise_sum(&v) * grid.cell_volume()
    } else {
        0.0
    };
    let exterior = ext_all + ext_shape;
    Ok(PerimeterReport { value: window + exterior, method: "grid_cell_exact".into(), exterior, error_estimate: 0.0 })
}

/// P_α(E; Ω): exact geometry for Ω = whole space, grid route otherwise.
pub fn frac_perimeter(e: &ShapeSet, alpha: f64, omega_region: Option<&BoundedRegion>, h: f64) -> Result<PerimeterReport> {
    match omega_region {
        None if e.bounding_box().is_some() => frac_perimeter_exact(e, alpha),
        _ => frac_perimeter_grid(e, alpha, omega_region, h),
    }
}

// ----------------------------------------------------- variation measures

fn variation_density(f: &ScalarField, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let backend = if is_binary(f) { Backend::for_indicator() } else { Backend::direct() };
    let peak = f.max_abs();
    let b = f.grid.boundary_max(&f.values);
    if peak > 0.0 && b > 1e-6 * peak {
        return Err(FracError::SupportTouchesBoundary { boundary: b, allowed: 1e-6 * peak });
    }
    adjoint_raw(f, alpha, &backend)
}

fn l1_on(grid: &GridSpec, g: &[Vec<f64>], region: Option<&BoundedRegion>) -> (f64, Vec<f64>) {
    let inside: Vec<bool> = (0..grid.len()).map(|i| region.is_none_or(|r| r.contains(&grid.coord(i)))).collect();
    let norms: Vec<f64> =
        (0..grid.len()).map(|i| if inside[i] { g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt() } else { 0.0 }).collect();
    let vec_sum: Vec<f64> = g
        .iter()
        .map(|c| par::pairwise_sum(&(0..grid.len()).map(|i| if inside[i] { c[i] } else { 0.0 }).collect::<Vec<_>>()) * grid.cell_volume())
        .collect();
    (par::pairwise_sum(&norms) * grid.cell_volume(), vec_sum)
}

/// f embedded (zero-padded) in a grid with a wider margin on every side.
fn padded(f: &ScalarField) -> Result<ScalarField> {
    let g = &f.grid;
    let pad: Vec<usize> = g.extents.iter().map(|&e| if g.n == 1 { e } else { e / 2 }).collect();
    let origin: Vec<f64> = (0..g.n).map(|d| g.origin[d] - pad[d] as f64 * g.h).collect();
    let extents: Vec<usize> = (0..g.n).map(|d| g.extents[d] + 2 * pad[d]).collect();
    let big = GridSpec::new(&origin, g.h, &extents)?;
    let mut v = vec![0.0; big.len()];
    for (i, val) in f.values.iter().enumerate() {
        let ii = g.unravel(i);
        let jj: Vec<usize> = (0..g.n).map(|d| ii[d] + pad[d]).collect();
        v[big.ravel(&jj)] = *val;
    }
    ScalarField::new(big, v)
}

/// |D^α f|(ℝⁿ): adjoint density on a padded grid plus the far field
/// μ|M| ∫ |y − c|^{−n−α} dy beyond it (M = ∫f, c the centroid).
fn whole_space_variation(f: &ScalarField, alpha: f64) -> Result<(f64, f64)> {
    let big = padded(f)?;
    let g = variation_density(&big, alpha)?;
    let (inner, _) = l1_on(&big.grid, &g, None);
    let tail = operators::TailModel::from_source(f, alpha);
    let n = f.grid.n;
    let c =
        if tail.mass == 0.0 { (0..n).map(|d| 0.5 * (f.grid.box_lo()[d] + f.grid.box_hi()[d])).collect() } else { tail.centroid.clone() };
    let far =
        mu(n, alpha)? * tail.mass.abs() * operators::exterior_radial(&c, &big.grid.box_lo(), &big.grid.box_hi(), n as f64 + alpha, None)[0];
    Ok((inner + far, far))
}

/// |D^α f|(Ω) as the L¹(Ω) norm of the adjoint output (the discrete sup is
/// attained at φ = −sgn-direction of that output). Ω = None is the whole
/// space.
pub fn frac_variation(f: &ScalarField, alpha: f64, region: Option<&BoundedRegion>) -> Result<VariationReport> {
    check_open("frac_variation", alpha, 0.0, 1.0, "(0, 1)")?;
    let eval = |f: &ScalarField| -> Result<(f64, f64)> {
        match region {
            None => whole_space_variation(f, alpha),
            Some(b) => {
                check_region_inside(&f.grid, b)?;
                let g = variation_density(f, alpha)?;
                Ok((l1_on(&f.grid, &g, Some(b)).0, 0.0))
            }
        }
    };
    let (value, far) = eval(f)?;
    // the far field drops the quadrupole, relative size (width / distance)²
    let mut budget = ErrorBudget { tail_term: 0.1 * far, ..Default::default() };
    if let Ok(cf) = f.coarsen() {
        if let Ok((cv, _)) = eval(&cf) {
            budget.quadrature_term = (value - cv).abs() / (2f64.powf(1.0 - alpha) - 1.0);
        }
    }
    let mut provenance = BTreeMap::new();
    provenance.insert("grid_h".into(), format!("{}", f.grid.h));
    provenance.insert("mu".into(), format!("{}", mu(f.grid.n, alpha)?));
    provenance.insert("far_field".into(), format!("{far}"));
    Ok(VariationReport { value, region: region.cloned(), method: VariationMethod::AdjointL1, budget, provenance })
}

/// The audit maximiser φ* = −g/|g| (zero where g vanishes).
pub fn variation_maximizer(f: &ScalarField, alpha: f64) -> Result<VectorField> {
    let g = variation_density(f, alpha)?;
    let comps = g
        .iter()
        .map(|c| {
            (0..f.grid.len())
                .map(|i| {
                    let nrm = g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
                    if nrm > 0.0 {
                        -c[i] / nrm
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    VectorField::new(f.grid.clone(), comps)
}

/// h^n Σ f·div^α_h φ with the direct backend.
pub fn pair_with_field(f: &ScalarField, phi: &VectorField, alpha: f64) -> Result<f64> {
    if f.grid != phi.grid {
        return invalid("pairing inputs live on different grids");
    }
    let (d, _) = operators::frac_divergence(phi, alpha, &Backend::direct())?;
    let t: Vec<f64> = f.values.iter().zip(&d.values).map(|(a, b)| a * b).collect();
    Ok(par::pairwise_sum(&t) * f.grid.cell_volume())
}

fn check_region_inside(grid: &GridSpec, b: &BoundedRegion) -> Result<()> {
    let (lo, hi) = (grid.box_lo(), grid.box_hi());
    let (blo, bhi): (Vec<f64>, Vec<f64>) = match b {
        BoundedRegion::Ball { center, radius } => {
            (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
        }
        BoundedRegion::Box { lo, hi } => (lo.clone(), hi.clone()),
    };
    if (0..grid.n).any(|d| blo[d] < lo[d] - 1e-12 || bhi[d] > hi[d] + 1e-12) {
        return invalid("region is clipped by the grid window");
    }
    Ok(())
}

/// (D^α f(B), |D^α f|(B)) from the adjoint density.
pub fn variation_on_region(f: &ScalarField, alpha: f64, b: &BoundedRegion) -> Result<VectorMeasureSample> {
    check_open("variation_on_region", alpha, 0.0, 1.0, "(0, 1)")?;
    check_region_inside(&f.grid, b)?;
    let g = variation_density(f, alpha)?;
    let (total, vector) = l1_on(&f.grid, &g, Some(b));
    Ok(VectorMeasureSample { region: b.clone(), vector, total })
}

/// Density of D^α χ_E on the window for a set that may extend beyond it:
/// the adjoint of the rasterised indicator plus μ ∫_{window^c ∩ E} k(y−x) dy
/// (evaluated only at nodes where `need` holds).
pub fn shape_variation_density(e: &ShapeSet, alpha: f64, grid: &GridSpec, need: &(dyn Fn(&[f64]) -> bool + Sync)) -> Result<Vec<Vec<f64>>> {
    let chi = rasterize_shape(e, grid)?;
    let mut g = adjoint_raw(&chi, alpha, &Backend::for_indicator())?;
    let n = grid.n;
    let m = mu(n, alpha)?;
    let (lo, hi) = (grid.box_lo(), grid.box_hi());
    let inside_window = e.bounding_box().is_some_and(|(a, b)| (0..n).all(|d| a[d] >= lo[d] && b[d] <= hi[d]));
    if !inside_window {
        let p = n as f64 + alpha;
        let add = par::map_range(grid.len(), |i| {
            let x = grid.coord(i);
            if need(&x) {
                exterior_shape(&x, &lo, &hi, e, p)
            } else {
                [0.0; 3]
            }
        });
        for d in 0..n {
            for i in 0..grid.len() {
                g[d][i] += m * add[i][d + 1];
            }
        }
    }
    Ok(g)
}

/// D^α χ_E(Ω) and |D^α χ_E|(Ω) for a library shape on a given window.
/// Ω = None is the whole space and needs a bounded shape inside the window.
pub fn shape_variation(e: &ShapeSet, alpha: f64, grid: &GridSpec, region: Option<&BoundedRegion>) -> Result<VectorMeasureSample> {
    check_open("shape_variation", alpha, 0.0, 1.0, "(0, 1)")?;
    match region {
        Some(b) => {
            check_region_inside(grid, b)?;
            let need = |x: &[f64]| b.contains(x);
            let g = shape_variation_density(e, alpha, grid, &need)?;
            let (total, vector) = l1_on(grid, &g, Some(b));
            Ok(VectorMeasureSample { region: b.clone(), vector, total })
        }
        None => {
            let (lo, hi) =
                e.bounding_box().ok_or_else(|| FracError::InvalidArgument("unbounded set has infinite total variation".into()))?;
            let (glo, ghi) = (grid.box_lo(), grid.box_hi());
            if (0..grid.n).any(|d| lo[d] < glo[d] || hi[d] > ghi[d]) {
                return invalid("whole-space variation needs the shape inside the window");
            }
            let chi = rasterize_shape(e, grid)?;
            let (total, _) = whole_space_variation(&chi, alpha)?;
            // D^α χ_E(ℝⁿ) = 0
            Ok(VectorMeasureSample { region: grid.region(), vector: vec![0.0; grid.n], total })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoareaReport {
    pub levels: Vec<f64>,
    pub accumulated: VectorField,
    /// ∫ |D^α χ_{f>t}|(Ω) dt
    pub level_total: f64,
    /// |D^α f|(Ω)
    pub variation: f64,
    /// ‖accumulated − adjoint(f)‖₁ / ‖adjoint(f)‖₁
    pub relative_l1_gap: f64,
    pub skipped: Vec<f64>,
}

/// Trapezoid accumulation over `levels` equispaced levels of D^α χ_{f>t}, min and max included.
pub fn coarea_integral(f: &ScalarField, alpha: f64, levels: usize, region: Option<&BoundedRegion>) -> Result<CoareaReport> {
    check_open("coarea_integral", alpha, 0.0, 1.0, "(0, 1)")?;
    if levels == 0 {
        return invalid("coarea needs at least one level");
    }
    let grid = &f.grid;
    let lo = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // trapezoid rule on `levels` equispaced levels including min and max
    let dt = if levels > 1 { (hi - lo) / (levels - 1) as f64 } else { hi - lo };
    let ts: Vec<f64> = (0..levels).map(|k| lo + k as f64 * dt).collect();
    let weight = |k: usize| if levels > 1 && (k == 0 || k + 1 == levels) { 0.5 * dt } else { dt };
    let mut acc = vec![vec![0.0; grid.len()]; grid.n];
    let mut level_total = 0.0;
    let mut skipped = Vec::new();
    let min_cells = 4usize.pow(grid.n as u32);
    // levels are independent; accumulate in level order afterwards
    let per_level = par::map_range(ts.len(), |k| -> Result<Option<(f64, Vec<Vec<f64>>)>> {
        let chi = f.map(|v| if v > ts[k] { 1.0 } else { 0.0 });
        let count = chi.values.iter().filter(|&&v| v == 1.0).count();
        if count < min_cells {
            return Ok(None);
        }
        let g = variation_density(&chi, alpha)?;
        let (tv, _) = l1_on(grid, &g, region);
        Ok(Some((tv, g)))
    });
    for (k, lvl) in per_level.into_iter().enumerate() {
        let w = weight(k);
        let Some((tv, g)) = lvl? else {
            skipped.push(ts[k]);
            continue;
        };
        level_total += tv * w;
        for d in 0..grid.n {
            for i in 0..grid.len() {
                acc[d][i] += g[d][i] * w;
            }
        }
    }
    // offset by the lowest level: D^α of a constant vanishes
    let gf = variation_density(f, alpha)?;
    let (variation, _) = l1_on(grid, &gf, region);
    let diff: Vec<Vec<f64>> = (0..grid.n).map(|d| (0..grid.len()).map(|i| acc[d][i] - gf[d][i]).collect()).collect();
    let (gap, _) = l1_on(grid, &diff, region);
    Ok(CoareaReport {
        levels: ts,
        accumulated: VectorField::new(grid.clone(), acc)?,
        level_total,
        variation,
        relative_l1_gap: if variation > 0.0 { gap / variation } else { 0.0 },
        skipped,
    })
}

/// ∇^α χ_E(x) = μ/(n+α−1) ∫_{∂E} ν_in(y)|y−x|^{1−n−α} dH^{n−1}(y), sampled
/// on the grid (nodes on ∂E are set to zero).
pub fn bv_measure_gradient(e: &ShapeSet, alpha: f64, grid: &GridSpec) -> Result<VectorField> {
    check_open("bv_measure_gradient", alpha, 0.0, 1.0, "(0, 1)")?;
    let n = grid.n;
    if e.dim() != n {
        return invalid("shape and grid dimensions differ");
    }
    let c = mu(n, alpha)? / (n as f64 + alpha - 1.0);
    let q = 1.0 - n as f64 - alpha;
    let eval = |x: &[f64]| -> Result<Vec<f64>> {
        match e {
            ShapeSet::IntervalUnion { intervals } => {
                let mut s = 0.0;
                for &(a, b) in intervals {
                    s += (x[0] - a).abs().powf(q) - (x[0] - b).abs().powf(q);
                }
                Ok(vec![c * s])
            }
            ShapeSet::HalfSpace { normal, offset } => {
                let dist = (crate::shapes::dot(x, normal) - offset).abs();
                if n == 1 {
                    Ok(vec![c * normal[0] * dist.powf(q)])
                } else {
                    // ∫_ℝ (d² + t²)^{(1−n−α)/2} dt over the boundary line
                    let line =
                        dist.powf(-alpha) * PI.sqrt() * crate::special::gamma(alpha / 2.0) / crate::special::gamma((1.0 + alpha) / 2.0);
                    Ok(normal.iter().map(|v| c * v * line).collect())
                }
            }
            ShapeSet::Ball { center, radius } if n == 2 => {
                let phi0 = (x[1] - center[1]).atan2(x[0] - center[0]);
                let f = |k: usize| {
                    move |t: f64| {
                        let th = phi0 + t;
                        let (s, co) = th.sin_cos();
                        let y = [center[0] + radius * co, center[1] + radius * s];
                        let r = (y[0] - x[0]).hypot(y[1] - x[1]);
                        let nu_in = [-co, -s];
                        nu_in[k] * r.powf(q) * radius
                    }
                };
                let mut out = vec![0.0; 2];
                for (k, o) in out.iter_mut().enumerate() {
                    let a = quad::adaptive(f(k), 0.0, PI, 1e-10)?.0;
                    let b = quad::adaptive(f(k), -PI, 0.0, 1e-10)?.0;
                    *o = c * (a + b);
                }
                Ok(out)
            }
            ShapeSet::Box { lo, hi } if n == 2 => {
                // edges with inner normals
                let edges = [
                    ([lo[0], lo[1]], [hi[0], lo[1]], [0.0, 1.0]),
                    ([lo[0], hi[1]], [hi[0], hi[1]], [0.0, -1.0]),
                    ([lo[0], lo[1]], [lo[0], hi[1]], [1.0, 0.0]),
                    ([hi[0], lo[1]], [hi[0], hi[1]], [-1.0, 0.0]),
                ];
                let mut out = vec![0.0; 2];
                for (p0, p1, nv) in edges {
                    let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
                    let dir = [(p1[0] - p0[0]) / len, (p1[1] - p0[1]) / len];
                    let foot = ((x[0] - p0[0]) * dir[0] + (x[1] - p0[1]) * dir[1]).clamp(0.0, len);
                    let f = |t: f64| {
                        let y = [p0[0] + t * dir[0], p0[1] + t * dir[1]];
                        (y[0] - x[0]).hypot(y[1] - x[1]).powf(q)
                    };
                    let v = quad::adaptive(f, 0.0, foot, 1e-10)?.0 + quad::adaptive(f, foot, len, 1e-10)?.0;
                    out[0] += c * nv[0] * v;
                    out[1] += c * nv[1] * v;
                }
                Ok(out)
            }
            _ => invalid("shape has no analytic boundary parametrisation for this route"),
        }
    };
    let samples = par::map_range(grid.len(), |i| eval(&grid.coord(i)));
    let mut comps = vec![vec![0.0; grid.len()]; n];
    for (i, s) in samples.into_iter().enumerate() {
        let v = s?;
        for d in 0..n {
            comps[d][i] = if v[d].is_finite() { v[d] } else { 0.0 };
        }
    }
    VectorField::new(grid.clone(), comps)
}

/// Unit-ball perimeter in the plane via the slice formula in closed form
/// (independent of the quadrature above; used in tests and reports).
pub fn disk_perimeter_closed_form(alpha: f64) -> f64 {
    let a = (1.0 - alpha) / 2.0;
    let beta = PI.sqrt() * crate::special::gamma(a + 1.0) / crate::special::gamma(a + 1.5);
    PI * 4.0 * 2f64.powf(1.0 - alpha) / (alpha * (1.0 - alpha)) * beta
}
