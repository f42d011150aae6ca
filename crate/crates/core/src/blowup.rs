//! Blow-up experiments at boundary points: rescaled sets E_r = (E − x)/r,
//! the direction D^α χ_E(B_r(x)) / |D^α χ_E|(B_r(x)), decay profiles and
//! L¹ convergence to a tangent half-space.
//!
//! Every rescaled set is rasterised afresh on one fixed window grid, and
//! values on B_r(x) are recovered from the unit ball through
//! D^α χ_E(B_r(x)) = r^{n−α} D^α χ_{E_r}(B_1).

use serde::{Deserialize, Serialize};

use crate::constants::decay_constants;
use crate::error::{check_open, invalid, FracError, Result};
use crate::fields::GridSpec;
use crate::measures::{shape_variation, slice_breaks};
use crate::par;
use crate::quad;
use crate::shapes::{clip_intervals, intersect_intervals, BoundedRegion, ShapeSet};

/// Fixed window [−half_width, half_width]^n sampled with spacing h, used
/// for every radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub half_width: f64,
    pub h: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy { half_width: 2.0, h: 1.0 / 32.0 }
    }
}

impl GridPolicy {
    fn grid(&self, n: usize) -> Result<GridSpec> {
        if !(self.half_width >= 1.0 + 2.0 * self.h) {
            return invalid("blow-up window must contain the unit ball with a margin");
        }
        // the unit ball must span at least 8 cells
        if self.h > 1.0 / 8.0 {
            return Err(FracError::Unresolved(format!("blow-up spacing {} leaves fewer than 8 cells across B_1", self.h)));
        }
        let w = self.half_width;
        GridSpec::window(&vec![-w; n], &vec![w; n], self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTrace {
    pub base_point: Vec<f64>,
    pub alpha: f64,
    pub radii: Vec<f64>,
    /// D^α χ_E(B_r(x))
    pub vectors: Vec<Vec<f64>>,
    /// |D^α χ_E|(B_r(x))
    pub totals: Vec<f64>,
    /// unit vector per radius, None where the total vanishes
    pub normals: Vec<Option<Vec<f64>>>,
    pub windows: Vec<f64>,
    /// [radius][window]: ‖χ_{E_r} − χ_H‖_{L¹(B_L)}
    pub l1_distances: Vec<Vec<f64>>,
    pub tangent_normal: Option<Vec<f64>>,
    /// largest angle (degrees) between the normals of the candidate H and ν
    pub tangent_angle_deg: Option<f64>,
}

impl BlowupTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialises")
    }

    /// Long format: radius,window,quantity,value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,window,quantity,value\n");
        for (k, r) in self.radii.iter().enumerate() {
            s += &format!("{r},,total,{}\n", self.totals[k]);
            for (d, v) in self.vectors[k].iter().enumerate() {
                s += &format!("{r},,vector_{d},{v}\n");
            }
            if let Some(nu) = &self.normals[k] {
                for (d, v) in nu.iter().enumerate() {
                    s += &format!("{r},,normal_{d},{v}\n");
                }
            }
            if let Some(row) = self.l1_distances.get(k) {
                for (w, v) in self.windows.iter().zip(row) {
                    s += &format!("{r},{w},l1_distance,{v}\n");
                }
            }
        }
        s
    }
}

/// E_r = (E − x)/r.
pub fn rescale(e: &ShapeSet, x: &[f64], r: f64) -> Result<ShapeSet> {
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("rescaling radius must be positive, got {r}"));
    }
    if x.len() != e.dim() {
        return invalid("base point and set differ in dimension");
    }
    Ok(e.rescale(x, r))
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return invalid("need at least one radius");
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return invalid("radii must be positive");
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("radii must be strictly decreasing");
    }
    Ok(())
}

fn unit(v: &[f64], total: f64) -> Option<Vec<f64>> {
    let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (total > 0.0 && len > 0.0).then(|| v.iter().map(|a| a / len).collect())
}

/// Angle in degrees between two unit vectors.
pub fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Vector and total of D^α χ_E on B_r(x) for each radius.
pub fn frac_normal_trace(e: &ShapeSet, x: &[f64], alpha: f64, radii: &[f64], policy: &GridPolicy) -> Result<BlowupTrace> {
    check_open("frac_normal_trace", alpha, 0.0, 1.0, "(0, 1)")?;
    check_radii(radii)?;
    let n = e.dim();
    if x.len() != n {
        return invalid("base point and set differ in dimension");
    }
    let grid = policy.grid(n)?;
    let unit_ball = BoundedRegion::ball(&vec![0.0; n], 1.0)?;
    let samples = par::map_range(radii.len(), |k| {
        let er = e.rescale(x, radii[k]);
        shape_variation(&er, alpha, &grid, Some(&unit_ball))
    });
    let mut trace = BlowupTrace {
        base_point: x.to_vec(),
        alpha,
        radii: radii.to_vec(),
        vectors: vec![],
        totals: vec![],
        normals: vec![],
        windows: vec![],
        l1_distances: vec![],
        tangent_normal: None,
        tangent_angle_deg: None,
    };
    for (k, s) in samples.into_iter().enumerate() {
        let s = s?;
        let scale = radii[k].powf(n as f64 - alpha);
        let v: Vec<f64> = s.vector.iter().map(|a| a * scale).collect();
        trace.normals.push(unit(&v, s.total));
        trace.totals.push(s.total * scale);
        trace.vectors.push(v);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    /// |D^α χ_E|(B_r(x))
    pub total: f64,
    /// A r^{n−α}
    pub bound_a: f64,
    /// |D^α χ_{E∩B_r(x)}|(ℝⁿ)
    pub intersection_total: f64,
    /// B r^{n−α}
    pub bound_b: f64,
    pub pass_a: bool,
    pub pass_b: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub alpha: f64,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub rows: Vec<DecayRow>,
    /// least-squares slope of log total against log r (None with < 2 usable radii)
    pub exponent_fit: Option<f64>,
    pub expected_exponent: f64,
}

impl DecayProfile {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass_a && r.pass_b)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,total,bound_a,intersection_total,bound_b,pass_a,pass_b\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{},{},{}\n", r.radius, r.total, r.bound_a, r.intersection_total, r.bound_b, r.pass_a, r.pass_b);
        }
        s
    }
}

/// Least-squares slope of (ln x, ln y) over strictly positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(p, q), (a, b)| (p + a, q + b));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(a, _)| (a - mx) * (a - mx)).sum();
    let sxy: f64 = pts.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn decay_profile(e: &ShapeSet, x: &[f64], alpha: f64, radii: &[f64], policy: &GridPolicy) -> Result<DecayProfile> {
    let trace = frac_normal_trace(e, x, alpha, radii, policy)?;
    let n = e.dim();
    let consts = decay_constants(n, alpha)?;
    let grid = policy.grid(n)?;
    let unit_ball = ShapeSet::ball(&vec![0.0; n], 1.0)?;
    let inter = par::map_range(radii.len(), |k| -> Result<f64> {
        let er = e.rescale(x, radii[k]);
        let cut = ShapeSet::Intersection { parts: vec![er, unit_ball.clone()] };
        // an empty or negligible piece has nothing to measure
        let occupied = (0..grid.len()).any(|i| cut.contains(&grid.coord(i)));
        if !occupied {
            return Ok(0.0);
        }
        Ok(shape_variation(&cut, alpha, &grid, None)?.total)
    });
    let p = n as f64 - alpha;
    let mut rows = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let it = inter[k].clone()? * r.powf(p);
        let (ba, bb) = (consts.a * r.powf(p), consts.b * r.powf(p));
        let total = trace.totals[k];
        rows.push(DecayRow {
            radius: r,
            total,
            bound_a: ba,
            intersection_total: it,
            bound_b: bb,
            pass_a: total <= ba * (1.0 + 1e-9),
            pass_b: it <= bb * (1.0 + 1e-9),
        });
    }
    Ok(DecayProfile { alpha, n, a: consts.a, b: consts.b, exponent_fit: loglog_slope(radii, &trace.totals), expected_exponent: p, rows })
}

/// Length of a union of sorted disjoint intervals.
fn total_length(v: &[(f64, f64)]) -> f64 {
    v.iter().map(|(a, b)| b - a).sum()
}

/// ‖χ_A − χ_B‖_{L¹(B_L(0))} computed from line intersections: exact in 1-d,
/// in 2-d an adaptive integral over parallel chords split where a chord
/// becomes tangent to one of the shapes.
pub fn symmetric_difference(a: &ShapeSet, b: &ShapeSet, radius: f64, dir: &[f64]) -> Result<f64> {
    let n = a.dim();
    if b.dim() != n {
        return invalid("shapes differ in dimension");
    }
    let on = |x: &[f64], d: &[f64]| -> f64 {
        let ia = clip_intervals(&a.line_intervals(x, d), -radius, radius);
        let ib = clip_intervals(&b.line_intervals(x, d), -radius, radius);
        total_length(&ia) + total_length(&ib) - 2.0 * total_length(&intersect_intervals(&ia, &ib))
    };
    if n == 1 {
        return Ok(on(&[0.0], &[1.0]));
    }
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let d = [dir[0] / len, dir[1] / len];
    let perp = [-d[1], d[0]];
    let ball = ShapeSet::ball(&[0.0, 0.0], radius)?;
    let chord = |w: f64| {
        let x = [w * perp[0], w * perp[1]];
        // parametrise by the chord of B_L so the window clip is exact
        let half = (radius * radius - w * w).max(0.0).sqrt();
        let ia = clip_intervals(&a.line_intervals(&x, &d), -half, half);
        let ib = clip_intervals(&b.line_intervals(&x, &d), -half, half);
        total_length(&ia) + total_length(&ib) - 2.0 * total_length(&intersect_intervals(&ia, &ib))
    };
    let c = [0.0, 0.0];
    let mut cuts: Vec<f64> =
        slice_breaks(a, &c, &perp).into_iter().chain(slice_breaks(b, &c, &perp)).chain(slice_breaks(&ball, &c, &perp)).collect();
    cuts.retain(|w| w.abs() <= radius);
    cuts.push(-radius);
    cuts.push(radius);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() < 1e-14);
    let mut s = 0.0;
    for w in cuts.windows(2) {
        s += quad::adaptive(chord, w[0], w[1], 1e-10)?.0;
    }
    Ok(s)
}

/// Distances of E_r to the half-space through 0 with inner normal ν taken
/// from the finest radius, plus the normal trace of that half-space.
pub fn tangent_convergence(
    e: &ShapeSet,
    x: &[f64],
    alpha: f64,
    radii: &[f64],
    windows: &[f64],
    policy: &GridPolicy,
) -> Result<BlowupTrace> {
    if windows.iter().any(|w| !(*w > 0.0)) {
        return invalid("window radii must be positive");
    }
    let mut trace = frac_normal_trace(e, x, alpha, radii, policy)?;
    let nu = trace
        .normals
        .last()
        .cloned()
        .flatten()
        .ok_or_else(|| FracError::InvalidArgument("no resolvable normal at the finest radius".into()))?;
    let n = e.dim();
    let h = ShapeSet::HalfSpace { normal: nu.clone(), offset: 0.0 };
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let er = e.rescale(x, r);
        let row = windows.iter().map(|&w| symmetric_difference(&er, &h, w, &nu)).collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let ht = frac_normal_trace(&h, &vec![0.0; n], alpha, radii, policy)?;
    let worst = ht.normals.iter().map(|m| m.as_ref().map_or(180.0, |m| angle_deg(m, &nu))).fold(0.0, f64::max);
    trace.windows = windows.to_vec();
    trace.l1_distances = rows;
    trace.tangent_normal = Some(nu);
    trace.tangent_angle_deg = Some(worst);
    Ok(trace)
}
