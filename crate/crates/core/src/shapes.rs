//! Analytic sets and bounded regions: membership, line intersections and rescaling.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::unit_ball_volume;

/// A bounded open region (ball or axis-aligned box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedRegion {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl BoundedRegion {
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        Ok(BoundedRegion::Ball { center: center.to_vec(), radius })
    }

    pub fn cube(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return invalid("box corners must satisfy lo < hi componentwise");
        }
        Ok(BoundedRegion::Box { lo: lo.to_vec(), hi: hi.to_vec() })
    }

    /// The interval (a, b) as a one-dimensional box.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::cube(&[a], &[b])
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundedRegion::Ball { center, .. } => center.len(),
            BoundedRegion::Box { lo, .. } => lo.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            BoundedRegion::Ball { center, radius } => dist2(x, center) < radius * radius,
            BoundedRegion::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v > a && v < b),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            BoundedRegion::Ball { radius, .. } => 2.0 * radius,
            BoundedRegion::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            BoundedRegion::Ball { center, radius } => unit_ball_volume(center.len() as f64) * radius.powi(center.len() as i32),
            BoundedRegion::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }

    pub fn to_shape(&self) -> ShapeSet {
        match self {
            BoundedRegion::Ball { center, radius } => ShapeSet::Ball { center: center.clone(), radius: *radius },
            BoundedRegion::Box { lo, hi } => ShapeSet::Box { lo: lo.clone(), hi: hi.clone() },
        }
    }

    /// Distance from `x` (inside) to the boundary along the unit direction `d`.
    pub fn exit_distance(&self, x: &[f64], d: &[f64]) -> f64 {
        self.to_shape().line_intervals(x, d).into_iter().find(|&(a, b)| a <= 0.0 && b > 0.0).map(|(_, b)| b).unwrap_or(0.0)
    }
}

/// Analytic description of a measurable set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSet {
    /// Disjoint ordered open intervals on the line.
    IntervalUnion {
        intervals: Vec<(f64, f64)>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// {x : x·normal ≥ offset}; `normal` is the inner unit normal.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    Intersection {
        parts: Vec<ShapeSet>,
    },
    Empty {
        n: usize,
    },
}

impl ShapeSet {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::interval_union(&[(a, b)])
    }

    pub fn interval_union(iv: &[(f64, f64)]) -> Result<Self> {
        for (k, &(a, b)) in iv.iter().enumerate() {
            if !(b > a) {
                return invalid(format!("interval {k} is empty: ({a}, {b})"));
            }
            if k > 0 && !(a > iv[k - 1].1) {
                return invalid("intervals must be disjoint and ordered");
            }
        }
        Ok(ShapeSet::IntervalUnion { intervals: iv.to_vec() })
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        Ok(ShapeSet::Ball { center: center.to_vec(), radius })
    }

    pub fn cube(lo: &[f64], hi: &[f64]) -> Result<Self> {
        BoundedRegion::cube(lo, hi).map(|r| r.to_shape())
    }

    pub fn half_space(normal: &[f64], offset: f64) -> Result<Self> {
        let len = norm(normal);
        if (len - 1.0).abs() > 1e-12 {
            return invalid(format!("half-space normal must be a unit vector (length {len})"));
        }
        Ok(ShapeSet::HalfSpace { normal: normal.to_vec(), offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            ShapeSet::IntervalUnion { .. } => 1,
            ShapeSet::Ball { center, .. } => center.len(),
            ShapeSet::Box { lo, .. } => lo.len(),
            ShapeSet::HalfSpace { normal, .. } => normal.len(),
            ShapeSet::Intersection { parts } => parts.first().map(|p| p.dim()).unwrap_or(1),
            ShapeSet::Empty { n } => *n,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ShapeSet::IntervalUnion { intervals } => intervals.iter().any(|&(a, b)| x[0] > a && x[0] < b),
            ShapeSet::Ball { center, radius } => dist2(x, center) < radius * radius,
            ShapeSet::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v > a && v < b),
            ShapeSet::HalfSpace { normal, offset } => dot(x, normal) >= *offset,
            ShapeSet::Intersection { parts } => parts.iter().all(|p| p.contains(x)),
            ShapeSet::Empty { .. } => false,
        }
    }

    /// Lebesgue measure (infinite for half-spaces).
    pub fn measure(&self) -> Option<f64> {
        match self {
            ShapeSet::IntervalUnion { intervals } => Some(intervals.iter().map(|(a, b)| b - a).sum()),
            ShapeSet::Ball { center, radius } => Some(unit_ball_volume(center.len() as f64) * radius.powi(center.len() as i32)),
            ShapeSet::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
            ShapeSet::HalfSpace { .. } => Some(f64::INFINITY),
            ShapeSet::Intersection { .. } => None,
            ShapeSet::Empty { .. } => Some(0.0),
        }
    }

    /// Smallest geometric length the shape needs resolved (interval length,
    /// gap between intervals, diameter, shortest edge). None for half-spaces.
    pub fn min_feature(&self) -> Option<f64> {
        match self {
            ShapeSet::IntervalUnion { intervals } => {
                let mut m = f64::INFINITY;
                for (k, &(a, b)) in intervals.iter().enumerate() {
                    m = m.min(b - a);
                    if k > 0 {
                        m = m.min(a - intervals[k - 1].1);
                    }
                }
                m.is_finite().then_some(m)
            }
            ShapeSet::Ball { radius, .. } => Some(2.0 * radius),
            ShapeSet::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).reduce(f64::min),
            ShapeSet::HalfSpace { .. } | ShapeSet::Empty { .. } => None,
            ShapeSet::Intersection { parts } => parts.iter().filter_map(|p| p.min_feature()).reduce(f64::min),
        }
    }

    /// Axis-aligned bounding box, None when unbounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ShapeSet::IntervalUnion { intervals } => {
                let a = intervals.first()?.0;
                let b = intervals.last()?.1;
                Some((vec![a], vec![b]))
            }
            ShapeSet::Ball { center, radius } => {
                Some((center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect()))
            }
            ShapeSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ShapeSet::HalfSpace { .. } => None,
            ShapeSet::Empty { .. } => None,
            ShapeSet::Intersection { parts } => {
                let mut out: Option<(Vec<f64>, Vec<f64>)> = None;
                for p in parts {
                    if let Some((lo, hi)) = p.bounding_box() {
                        out = Some(match out {
                            None => (lo, hi),
                            Some((l, h)) => {
                                (l.iter().zip(&lo).map(|(a, b)| a.max(*b)).collect(), h.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect())
                            }
                        });
                    }
                }
                out
            }
        }
    }

    /// Parameter intervals {t ∈ ℝ : x + t·d ∈ E}, sorted and disjoint.
    pub fn line_intervals(&self, x: &[f64], d: &[f64]) -> Vec<(f64, f64)> {
        let inf = f64::INFINITY;
        match self {
            ShapeSet::IntervalUnion { intervals } => {
                if d[0] == 0.0 {
                    return if self.contains(x) { vec![(-inf, inf)] } else { vec![] };
                }
                let mut v: Vec<(f64, f64)> = intervals
                    .iter()
                    .map(|&(a, b)| {
                        let (ta, tb) = ((a - x[0]) / d[0], (b - x[0]) / d[0]);
                        (ta.min(tb), ta.max(tb))
                    })
                    .collect();
                v.sort_by(|p, q| p.0.total_cmp(&q.0));
                v
            }
            ShapeSet::Ball { center, radius } => {
                let oc: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let a = dot(d, d);
                let b = 2.0 * dot(d, &oc);
                let c = dot(&oc, &oc) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc <= 0.0 {
                    return vec![];
                }
                let s = disc.sqrt();
                // numerically stable roots
                let q = -0.5 * (b + b.signum() * s);
                let (mut t0, mut t1) = if q != 0.0 { (q / a, c / q) } else { (-s / (2.0 * a), s / (2.0 * a)) };
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                vec![(t0, t1)]
            }
            ShapeSet::Box { lo, hi } => {
                let (mut t0, mut t1) = (-inf, inf);
                for k in 0..x.len() {
                    if d[k] == 0.0 {
                        if !(x[k] > lo[k] && x[k] < hi[k]) {
                            return vec![];
                        }
                    } else {
                        let (a, b) = ((lo[k] - x[k]) / d[k], (hi[k] - x[k]) / d[k]);
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                }
                if t1 > t0 {
                    vec![(t0, t1)]
                } else {
                    vec![]
                }
            }
            ShapeSet::HalfSpace { normal, offset } => {
                let dn = dot(d, normal);
                let gap = offset - dot(x, normal);
                if dn == 0.0 {
                    if gap <= 0.0 {
                        vec![(-inf, inf)]
                    } else {
                        vec![]
                    }
                } else if dn > 0.0 {
                    vec![(gap / dn, inf)]
                } else {
                    vec![(-inf, gap / dn)]
                }
            }
            ShapeSet::Intersection { parts } => {
                let mut acc = vec![(-inf, inf)];
                for p in parts {
                    acc = intersect_intervals(&acc, &p.line_intervals(x, d));
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            ShapeSet::Empty { .. } => vec![],
        }
    }

    /// The image of the set under y ↦ (y − x)/r.
    pub fn rescale(&self, x: &[f64], r: f64) -> ShapeSet {
        let map = |p: &[f64]| -> Vec<f64> { p.iter().zip(x).map(|(a, b)| (a - b) / r).collect() };
        match self {
            ShapeSet::IntervalUnion { intervals } => {
                ShapeSet::IntervalUnion { intervals: intervals.iter().map(|&(a, b)| ((a - x[0]) / r, (b - x[0]) / r)).collect() }
            }
            ShapeSet::Ball { center, radius } => ShapeSet::Ball { center: map(center), radius: radius / r },
            ShapeSet::Box { lo, hi } => ShapeSet::Box { lo: map(lo), hi: map(hi) },
            ShapeSet::HalfSpace { normal, offset } => ShapeSet::HalfSpace { normal: normal.clone(), offset: (offset - dot(x, normal)) / r },
            ShapeSet::Intersection { parts } => ShapeSet::Intersection { parts: parts.iter().map(|p| p.rescale(x, r)).collect() },
            ShapeSet::Empty { n } => ShapeSet::Empty { n: *n },
        }
    }

    /// λE for λ > 0.
    pub fn dilate(&self, lambda: f64) -> ShapeSet {
        self.rescale(&vec![0.0; self.dim()], 1.0 / lambda)
    }
}

pub(crate) fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Clip interval list to [lo, hi].
pub(crate) fn clip_intervals(v: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    intersect_intervals(v, &[(lo, hi)])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_line_intersection() {
        let b = ShapeSet::ball(&[0.0, 0.0], 1.0).unwrap();
        let iv = b.line_intervals(&[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 1.0).abs() < 1e-15 && (iv[0].1 - 1.0).abs() < 1e-15);
        assert!(b.line_intervals(&[0.0, 2.0], &[1.0, 0.0]).is_empty());
    }

    #[test]
    fn half_space_rescale_through_boundary_point_is_invariant() {
        let h = ShapeSet::half_space(&[1.0, 0.0], 0.0).unwrap();
        assert_eq!(h.rescale(&[0.0, 0.3], 0.01), h);
    }

    #[test]
    fn interval_rescale_tends_to_half_line() {
        let e = ShapeSet::interval(0.0, 1.0).unwrap();
        match e.rescale(&[0.0], 1e-3) {
            ShapeSet::IntervalUnion { intervals } => {
                assert_eq!(intervals[0].0, 0.0);
                assert!(intervals[0].1 >= 999.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn intersection_of_box_and_ball() {
        let s = ShapeSet::Intersection {
            parts: vec![ShapeSet::cube(&[0.0, -1.0], &[2.0, 1.0]).unwrap(), ShapeSet::ball(&[0.0, 0.0], 1.0).unwrap()],
        };
        let iv = s.line_intervals(&[0.0, 0.0], &[1.0, 0.0]);
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0).abs() < 1e-15 && (iv[0].1 - 1.0).abs() < 1e-15);
        assert!(s.contains(&[0.5, 0.0]) && !s.contains(&[-0.5, 0.0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ShapeSet::interval_union(&[(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(ShapeSet::half_space(&[1.0, 1.0], 0.0).is_err());
        assert!(ShapeSet::ball(&[0.0], 0.0).is_err());
    }
}
