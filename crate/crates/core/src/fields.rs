//! Uniform grids, sampled fields, analytic test functions and the smoothing
//! procedures (mollification, cutoff).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FracError, Result};
use crate::par;
use crate::quad;
use crate::shapes::{dist2, BoundedRegion, ShapeSet};

pub const DEFAULT_SAMPLE_CAP: usize = 1 << 24;

/// Uniform isotropic cell-centred grid. Sample k along axis d sits at
/// `origin[d] + k h`; storage is row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub origin: Vec<f64>,
    pub h: f64,
    pub extents: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: &[f64], h: f64, extents: &[usize]) -> Result<Self> {
        Self::with_cap(origin, h, extents, DEFAULT_SAMPLE_CAP)
    }

    pub fn with_cap(origin: &[f64], h: f64, extents: &[usize], cap: usize) -> Result<Self> {
        let n = origin.len();
        if !(1..=2).contains(&n) {
            return Err(FracError::Dimension { op: "grid", n, supported: "n ∈ {1, 2}" });
        }
        if extents.len() != n {
            return invalid("grid origin and extents differ in dimension");
        }
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("grid spacing must be positive, got {h}"));
        }
        if extents.iter().any(|&e| e < 2) {
            return invalid("grid needs at least 2 samples per axis");
        }
        let samples = extents.iter().product::<usize>();
        if samples > cap {
            return Err(FracError::GridTooLarge { samples, cap });
        }
        Ok(GridSpec { n, origin: origin.to_vec(), h, extents: extents.to_vec() })
    }

    /// Cells tiling the box [lo, hi] (rounded to a whole number of cells).
    pub fn window(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        let extents: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| ((b - a) / h).round().max(0.0) as usize).collect();
        let origin: Vec<f64> = lo.iter().map(|a| a + 0.5 * h).collect();
        Self::new(&origin, h, &extents)
    }

    /// Same cells, coarsened by taking every other sample (spacing 2h).
    pub fn coarsen(&self) -> Result<Self> {
        let ext: Vec<usize> = self.extents.iter().map(|e| e.div_ceil(2)).collect();
        Self::new(&self.origin, 2.0 * self.h, &ext)
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn box_lo(&self) -> Vec<f64> {
        self.origin.iter().map(|o| o - 0.5 * self.h).collect()
    }

    pub fn box_hi(&self) -> Vec<f64> {
        self.origin.iter().zip(&self.extents).map(|(o, &e)| o + (e as f64 - 0.5) * self.h).collect()
    }

    pub fn region(&self) -> BoundedRegion {
        BoundedRegion::Box { lo: self.box_lo(), hi: self.box_hi() }
    }

    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx / self.extents[1], idx % self.extents[1]]
        }
    }

    pub fn ravel(&self, i: &[usize]) -> usize {
        if self.n == 1 {
            i[0]
        } else {
            i[0] * self.extents[1] + i[1]
        }
    }

    pub fn axis_coord(&self, d: usize, k: usize) -> f64 {
        self.origin[d] + k as f64 * self.h
    }

    pub fn coord(&self, idx: usize) -> Vec<f64> {
        let i = self.unravel(idx);
        (0..self.n).map(|d| self.axis_coord(d, i[d])).collect()
    }

    /// Index of the node nearest to `x`, if inside the grid.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut i = [0usize; 2];
        for d in 0..self.n {
            let k = ((x[d] - self.origin[d]) / self.h).round();
            if k < 0.0 || k >= self.extents[d] as f64 {
                return None;
            }
            i[d] = k as usize;
        }
        Some(self.ravel(&i[..self.n]))
    }

    /// Largest magnitude over the outermost ring of samples.
    pub fn boundary_max(&self, v: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for (idx, x) in v.iter().enumerate() {
            let i = self.unravel(idx);
            let edge = (0..self.n).any(|d| i[d] == 0 || i[d] + 1 == self.extents[d]);
            if edge {
                m = m.max(x.abs());
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub support_hint: Option<BoundedRegion>,
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
    pub provenance: BTreeMap<String, String>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("field has {} samples, grid expects {}", values.len(), grid.len()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite sample at index {k}"));
        }
        Ok(ScalarField { grid, values, support_hint: None, provenance: BTreeMap::new() })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()], support_hint: None, provenance: BTreeMap::new() }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync + Send>(grid: &GridSpec, f: F) -> Result<Self> {
        let values = par::map_range(grid.len(), |i| f(&grid.coord(i)));
        Self::new(grid.clone(), values)
    }

    pub fn with_tag(mut self, k: &str, v: impl Into<String>) -> Self {
        self.provenance.insert(k.to_string(), v.into());
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        par::pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// Largest central-difference slope (a discrete Lipschitz constant).
    pub fn lipschitz(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for idx in 0..g.len() {
            let i = g.unravel(idx);
            let mut s2 = 0.0;
            for d in 0..g.n {
                let (lo, hi) = neighbours(g, &i, d);
                let a = lo.map(|k| self.values[k]).unwrap_or(0.0);
                let b = hi.map(|k| self.values[k]).unwrap_or(0.0);
                s2 += ((b - a) / (2.0 * g.h)).powi(2);
            }
            m = m.max(s2.sqrt());
        }
        m
    }

    /// Central-difference gradient (zero extension outside the grid).
    pub fn central_gradient(&self) -> VectorField {
        let g = &self.grid;
        let components = (0..g.n)
            .map(|d| {
                par::map_range(g.len(), |idx| {
                    let i = g.unravel(idx);
                    let (lo, hi) = neighbours(g, &i, d);
                    let a = lo.map(|k| self.values[k]).unwrap_or(0.0);
                    let b = hi.map(|k| self.values[k]).unwrap_or(0.0);
                    (b - a) / (2.0 * g.h)
                })
            })
            .collect();
        VectorField { grid: g.clone(), components, provenance: BTreeMap::new() }
    }

    /// Restriction to every other sample.
    pub fn coarsen(&self) -> Result<Self> {
        let cg = self.grid.coarsen()?;
        let values = (0..cg.len())
            .map(|idx| {
                let i = cg.unravel(idx);
                let fine: Vec<usize> = (0..cg.n).map(|d| 2 * i[d]).collect();
                self.values[self.grid.ravel(&fine)]
            })
            .collect();
        let mut out = ScalarField::new(cg, values)?;
        out.provenance = self.provenance.clone();
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        FieldContainer::scalar(self).to_json()
    }

    pub fn to_csv(&self) -> String {
        csv_export(&self.grid, &[&self.values], &self.provenance)
    }
}

pub(crate) fn neighbours(g: &GridSpec, i: &[usize; 2], d: usize) -> (Option<usize>, Option<usize>) {
    let mut lo = *i;
    let mut hi = *i;
    let a = if i[d] > 0 {
        lo[d] -= 1;
        Some(g.ravel(&lo[..g.n]))
    } else {
        None
    };
    let b = if i[d] + 1 < g.extents[d] {
        hi[d] += 1;
        Some(g.ravel(&hi[..g.n]))
    } else {
        None
    };
    (a, b)
}

impl VectorField {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.n {
            return invalid(format!("vector field has {} components in dimension {}", components.len(), grid.n));
        }
        for c in &components {
            if c.len() != grid.len() {
                return invalid("component length does not match the grid");
            }
            if c.iter().any(|v| !v.is_finite()) {
                return invalid("non-finite vector sample");
            }
        }
        Ok(VectorField { grid, components, provenance: BTreeMap::new() })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        VectorField { grid: grid.clone(), components: vec![vec![0.0; grid.len()]; grid.n], provenance: BTreeMap::new() }
    }

    /// φ(x) = s(x)·v for a scalar profile s and a constant vector v.
    pub fn from_scalar(s: &ScalarField, v: &[f64]) -> Result<Self> {
        if v.len() != s.grid.n {
            return invalid("direction vector has wrong dimension");
        }
        Self::new(s.grid.clone(), v.iter().map(|c| s.values.iter().map(|x| x * c).collect()).collect())
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64> + Sync + Send>(grid: &GridSpec, f: F) -> Result<Self> {
        let samples = par::map_range(grid.len(), |i| f(&grid.coord(i)));
        let comps = (0..grid.n).map(|d| samples.iter().map(|s| s[d]).collect()).collect();
        Self::new(grid.clone(), comps)
    }

    pub fn norm_at(&self, idx: usize) -> f64 {
        self.components.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0f64, |m, i| m.max(self.norm_at(i)))
    }

    /// h^n Σ |φ|.
    pub fn l1_norm(&self) -> f64 {
        let v: Vec<f64> = (0..self.grid.len()).map(|i| self.norm_at(i)).collect();
        par::pairwise_sum(&v) * self.grid.cell_volume()
    }

    /// h^n Σ φ·ψ.
    pub fn dot(&self, other: &VectorField) -> f64 {
        let v: Vec<f64> =
            (0..self.grid.len()).map(|i| self.components.iter().zip(&other.components).map(|(a, b)| a[i] * b[i]).sum()).collect();
        par::pairwise_sum(&v) * self.grid.cell_volume()
    }

    /// Central-difference divergence.
    pub fn central_divergence(&self) -> ScalarField {
        let g = &self.grid;
        let values = par::map_range(g.len(), |idx| {
            let i = g.unravel(idx);
            (0..g.n)
                .map(|d| {
                    let (lo, hi) = neighbours(g, &i, d);
                    let a = lo.map(|k| self.components[d][k]).unwrap_or(0.0);
                    let b = hi.map(|k| self.components[d][k]).unwrap_or(0.0);
                    (b - a) / (2.0 * g.h)
                })
                .sum()
        });
        ScalarField { grid: g.clone(), values, support_hint: None, provenance: BTreeMap::new() }
    }

    pub fn component(&self, d: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.components[d].clone(), support_hint: None, provenance: BTreeMap::new() }
    }

    pub fn to_json(&self) -> String {
        FieldContainer::vector(self).to_json()
    }

    pub fn to_csv(&self) -> String {
        let refs: Vec<&Vec<f64>> = self.components.iter().collect();
        csv_export(&self.grid, &refs, &self.provenance)
    }
}

/// Closed-form test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticFn {
    /// exp(−|x−c|²/(2σ²)), peak 1.
    Gaussian { center: Vec<f64>, sigma: f64 },
    /// exp(1 − 1/(1 − |x−c|²/R²)) on B_R(c), peak 1.
    Bump { center: Vec<f64>, radius: f64 },
    /// |x−b|^{α−1} sgn(x−b) − |x−a|^{α−1} sgn(x−a) on the line.
    AtomWitness { a: f64, b: f64, alpha: f64 },
    /// 1 on B_r(c), linear down to 0 on the annulus of width ε.
    RampAnnulus { center: Vec<f64>, r: f64, eps: f64 },
    /// (1 − |x−c|²/R²)^k on B_R(c).
    PolynomialBump { center: Vec<f64>, radius: f64, power: u32 },
}

impl AnalyticFn {
    pub fn gaussian(center: &[f64], sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return invalid("gaussian width must be positive");
        }
        Ok(AnalyticFn::Gaussian { center: center.to_vec(), sigma })
    }

    pub fn bump(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("bump radius must be positive");
        }
        Ok(AnalyticFn::Bump { center: center.to_vec(), radius })
    }

    pub fn atom_witness(a: f64, b: f64, alpha: f64) -> Result<Self> {
        if a == b {
            return invalid("atom witness needs a ≠ b");
        }
        crate::error::check_open("atom_witness", alpha, 0.0, 1.0, "(0, 1)")?;
        Ok(AnalyticFn::AtomWitness { a, b, alpha })
    }

    pub fn ramp_annulus(center: &[f64], r: f64, eps: f64) -> Result<Self> {
        if !(r > 0.0 && eps > 0.0) {
            return invalid("ramp annulus needs r > 0 and ε > 0");
        }
        Ok(AnalyticFn::RampAnnulus { center: center.to_vec(), r, eps })
    }

    pub fn polynomial_bump(center: &[f64], radius: f64, power: u32) -> Result<Self> {
        if !(radius > 0.0) || power == 0 {
            return invalid("polynomial bump needs radius > 0 and power ≥ 1");
        }
        Ok(AnalyticFn::PolynomialBump { center: center.to_vec(), radius, power })
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticFn::Gaussian { center, .. }
            | AnalyticFn::Bump { center, .. }
            | AnalyticFn::RampAnnulus { center, .. }
            | AnalyticFn::PolynomialBump { center, .. } => center.len(),
            AnalyticFn::AtomWitness { .. } => 1,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticFn::Gaussian { center, sigma } => (-dist2(x, center) / (2.0 * sigma * sigma)).exp(),
            AnalyticFn::Bump { center, radius } => {
                let s2 = dist2(x, center) / (radius * radius);
                if s2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - s2)).exp()
                } else {
                    0.0
                }
            }
            AnalyticFn::AtomWitness { a, b, alpha } => {
                let t = |c: f64| {
                    let d = x[0] - c;
                    d.abs().powf(alpha - 1.0) * d.signum()
                };
                t(*b) - t(*a)
            }
            AnalyticFn::RampAnnulus { center, r, eps } => {
                let d = dist2(x, center).sqrt();
                if d <= *r {
                    1.0
                } else if d < r + eps {
                    (r + eps - d) / eps
                } else {
                    0.0
                }
            }
            AnalyticFn::PolynomialBump { center, radius, power } => {
                let s2 = dist2(x, center) / (radius * radius);
                if s2 < 1.0 {
                    (1.0 - s2).powi(*power as i32)
                } else {
                    0.0
                }
            }
        }
    }

    /// Classical gradient where it exists.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let diff = |c: &[f64]| -> Vec<f64> { x.iter().zip(c).map(|(a, b)| a - b).collect() };
        match self {
            AnalyticFn::Gaussian { center, sigma } => {
                let f = self.eval(x);
                diff(center).iter().map(|d| -d / (sigma * sigma) * f).collect()
            }
            AnalyticFn::Bump { center, radius } => {
                let s2 = dist2(x, center) / (radius * radius);
                if s2 >= 1.0 {
                    return vec![0.0; x.len()];
                }
                let f = self.eval(x);
                let q = 1.0 - s2;
                diff(center).iter().map(|d| -f / (q * q) * 2.0 * d / (radius * radius)).collect()
            }
            AnalyticFn::AtomWitness { a, b, alpha } => {
                let t = |c: f64| (alpha - 1.0) * (x[0] - c).abs().powf(alpha - 2.0);
                vec![t(*b) - t(*a)]
            }
            AnalyticFn::RampAnnulus { center, r, eps } => {
                let d = dist2(x, center).sqrt();
                if d > *r && d < r + eps {
                    diff(center).iter().map(|v| -v / (d * eps)).collect()
                } else {
                    vec![0.0; x.len()]
                }
            }
            AnalyticFn::PolynomialBump { center, radius, power } => {
                let s2 = dist2(x, center) / (radius * radius);
                if s2 >= 1.0 {
                    return vec![0.0; x.len()];
                }
                let k = *power as f64;
                let c = -k * (1.0 - s2).powi(*power as i32 - 1) * 2.0 / (radius * radius);
                diff(center).iter().map(|d| c * d).collect()
            }
        }
    }

    /// Radius of a ball (about the centre) outside which |f| < 1e−16.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            AnalyticFn::Gaussian { sigma, .. } => Some(sigma * (2.0 * 16.0 * 10f64.ln()).sqrt()),
            AnalyticFn::Bump { radius, .. } | AnalyticFn::PolynomialBump { radius, .. } => Some(*radius),
            AnalyticFn::RampAnnulus { r, eps, .. } => Some(r + eps),
            AnalyticFn::AtomWitness { .. } => None,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            AnalyticFn::Gaussian { center, .. }
            | AnalyticFn::Bump { center, .. }
            | AnalyticFn::RampAnnulus { center, .. }
            | AnalyticFn::PolynomialBump { center, .. } => center.clone(),
            AnalyticFn::AtomWitness { a, b, .. } => vec![0.5 * (a + b)],
        }
    }

    /// Smallest length that must be resolved by the grid.
    pub fn min_feature(&self) -> f64 {
        match self {
            AnalyticFn::Gaussian { sigma, .. } => *sigma,
            AnalyticFn::Bump { radius, .. } | AnalyticFn::PolynomialBump { radius, .. } => *radius,
            AnalyticFn::RampAnnulus { r, eps, .. } => r.min(*eps),
            AnalyticFn::AtomWitness { a, b, .. } => (b - a).abs(),
        }
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Anything that can be put on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sampleable {
    Shape(ShapeSet),
    Function(AnalyticFn),
}

const MIN_CELLS_PER_FEATURE: f64 = 4.0;

/// Point samples at cell centres; indicators take values in {0, 1}.
pub fn rasterize(src: &Sampleable, grid: &GridSpec) -> Result<ScalarField> {
    match src {
        Sampleable::Shape(s) => rasterize_shape(s, grid),
        Sampleable::Function(f) => rasterize_fn(f, grid),
    }
}

pub fn rasterize_shape(shape: &ShapeSet, grid: &GridSpec) -> Result<ScalarField> {
    if shape.dim() != grid.n {
        return invalid(format!("shape dimension {} on a {}-d grid", shape.dim(), grid.n));
    }
    if let Some(m) = shape.min_feature() {
        if m < MIN_CELLS_PER_FEATURE * grid.h {
            return Err(FracError::Unresolved(format!(
                "feature of size {m} spans fewer than {MIN_CELLS_PER_FEATURE} cells of width {}",
                grid.h
            )));
        }
    }
    let mut out = ScalarField::from_fn(grid, |x| if shape.contains(x) { 1.0 } else { 0.0 })?;
    out.provenance.insert("source".into(), serde_json::to_string(shape).unwrap_or_default());
    out.provenance.insert("rasterization".into(), "cell_center".into());
    let truncated = match shape.bounding_box() {
        Some((lo, hi)) => {
            let (glo, ghi) = (grid.box_lo(), grid.box_hi());
            (0..grid.n).any(|d| lo[d] < glo[d] || hi[d] > ghi[d])
        }
        None => true,
    };
    out.provenance.insert("truncated".into(), truncated.to_string());
    if !truncated {
        out.support_hint = shape.bounding_box().and_then(|(lo, hi)| {
            let lo: Vec<f64> = lo.iter().map(|v| v - grid.h).collect();
            let hi: Vec<f64> = hi.iter().map(|v| v + grid.h).collect();
            BoundedRegion::cube(&lo, &hi).ok()
        });
    }
    Ok(out)
}

pub fn rasterize_fn(f: &AnalyticFn, grid: &GridSpec) -> Result<ScalarField> {
    if f.dim() != grid.n {
        return invalid(format!("function dimension {} on a {}-d grid", f.dim(), grid.n));
    }
    if f.min_feature() < MIN_CELLS_PER_FEATURE * grid.h {
        return Err(FracError::Unresolved(format!(
            "feature of size {} spans fewer than {MIN_CELLS_PER_FEATURE} cells of width {}",
            f.min_feature(),
            grid.h
        )));
    }
    let values = par::map_range(grid.len(), |i| f.eval(&grid.coord(i)));
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("function is singular at a grid node; use rasterize_cell_average");
    }
    let mut out = ScalarField::new(grid.clone(), values)?;
    out.provenance.insert("source".into(), f.describe());
    out.provenance.insert("rasterization".into(), "point".into());
    let c = f.center();
    match f.support_radius() {
        Some(r) => {
            let truncated = (0..grid.n).any(|d| c[d] - r < grid.box_lo()[d] || c[d] + r > grid.box_hi()[d]);
            out.provenance.insert("truncated".into(), truncated.to_string());
            out.support_hint = BoundedRegion::ball(&c, r).ok();
        }
        None => {
            out.provenance.insert("truncated".into(), "true".into());
        }
    }
    Ok(out)
}

/// Cell averages h^{−n}∫_cell f. Exact (via the antiderivative) for the atom
/// witness, tensor Gauss–Legendre otherwise.
pub fn rasterize_cell_average(f: &AnalyticFn, grid: &GridSpec) -> Result<ScalarField> {
    if f.dim() != grid.n {
        return invalid("function dimension does not match the grid");
    }
    let h = grid.h;
    let values = par::map_range(grid.len(), |i| {
        let x = grid.coord(i);
        match f {
            AnalyticFn::AtomWitness { a, b, alpha } => {
                let prim = |t: f64| ((t - b).abs().powf(*alpha) - (t - a).abs().powf(*alpha)) / alpha;
                (prim(x[0] + 0.5 * h) - prim(x[0] - 0.5 * h)) / h
            }
            _ => {
                if grid.n == 1 {
                    quad::gl(|t| f.eval(&[t]), x[0] - 0.5 * h, x[0] + 0.5 * h, 6) / h
                } else {
                    quad::gl(|s| quad::gl(|t| f.eval(&[s, t]), x[1] - 0.5 * h, x[1] + 0.5 * h, 6), x[0] - 0.5 * h, x[0] + 0.5 * h, 6)
                        / (h * h)
                }
            }
        }
    });
    let mut out = ScalarField::new(grid.clone(), values)?;
    out.provenance.insert("source".into(), f.describe());
    out.provenance.insert("rasterization".into(), "cell_average".into());
    Ok(out)
}

/// Standard bump exp(−1/(1−|x|²)) on B₁ (unnormalised).
pub fn mollifier_profile(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Discrete convolution with ρ_ε, renormalised to unit discrete mass.
pub fn mollify(f: &ScalarField, eps: f64) -> Result<ScalarField> {
    let g = &f.grid;
    if !(eps >= 2.0 * g.h) {
        return Err(FracError::Unresolved(format!("mollifier radius {eps} is below 2h = {}", 2.0 * g.h)));
    }
    let m = (eps / g.h).floor() as isize;
    let mut taps: Vec<(isize, isize, f64)> = Vec::new();
    let (ylo, yhi) = if g.n == 2 { (-m, m) } else { (0, 0) };
    for a in -m..=m {
        for b in ylo..=yhi {
            let r2 = ((a * a + b * b) as f64) * g.h * g.h / (eps * eps);
            let w = mollifier_profile(r2);
            if w > 0.0 {
                taps.push((a, b, w));
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.2).sum();
    taps.iter_mut().for_each(|t| t.2 /= total);
    let values = par::map_range(g.len(), |idx| {
        let i = g.unravel(idx);
        let mut s = 0.0;
        for &(a, b, w) in &taps {
            let j0 = i[0] as isize + a;
            let j1 = i[1] as isize + b;
            if j0 < 0 || j0 >= g.extents[0] as isize {
                continue;
            }
            if g.n == 2 && (j1 < 0 || j1 >= g.extents[1] as isize) {
                continue;
            }
            let j = if g.n == 1 { j0 as usize } else { g.ravel(&[j0 as usize, j1 as usize]) };
            s += w * f.values[j];
        }
        s
    });
    let mut out = ScalarField::new(g.clone(), values)?;
    out.provenance = f.provenance.clone();
    out.provenance.insert("mollified_eps".into(), format!("{eps}"));
    Ok(out)
}

pub fn mollify_vector(phi: &VectorField, eps: f64) -> Result<VectorField> {
    let comps = (0..phi.grid.n).map(|d| mollify(&phi.component(d), eps).map(|s| s.values)).collect::<Result<Vec<_>>>()?;
    VectorField::new(phi.grid.clone(), comps)
}

/// η_R(|x|): 1 on B_R, smoothstep down to 0 at R + 1 (Lipschitz constant 3/2).
pub fn cutoff_profile(t: f64, r: f64) -> f64 {
    let u = t - r;
    if u <= 0.0 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        1.0 - u * u * (3.0 - 2.0 * u)
    }
}

/// f·η_R with η_R centred at the origin.
pub fn cutoff_approximate(f: &ScalarField, r: f64) -> Result<ScalarField> {
    if !(r > 0.0) {
        return invalid("cutoff radius must be positive");
    }
    let g = &f.grid;
    let values = par::map_range(g.len(), |i| {
        let x = g.coord(i);
        let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let eta = cutoff_profile(t, r);
        if eta == 1.0 {
            f.values[i]
        } else {
            f.values[i] * eta
        }
    });
    let mut out = ScalarField::new(g.clone(), values)?;
    out.provenance = f.provenance.clone();
    out.provenance.insert("cutoff_radius".into(), format!("{r}"));
    Ok(out)
}

/// (h^n Σ_{x ∈ region} |f|^p)^{1/p}; p = ∞ gives the max.
pub fn lp_norm(f: &ScalarField, p: f64, region: Option<&BoundedRegion>) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("p must lie in [1, ∞], got {p}"));
    }
    let g = &f.grid;
    let inside = |i: usize| region.map(|r| r.contains(&g.coord(i))).unwrap_or(true);
    if p.is_infinite() {
        return Ok((0..g.len()).filter(|&i| inside(i)).fold(0.0f64, |m, i| m.max(f.values[i].abs())));
    }
    let terms: Vec<f64> = (0..g.len()).map(|i| if inside(i) { f.values[i].abs().powf(p) } else { 0.0 }).collect();
    Ok((par::pairwise_sum(&terms) * g.cell_volume()).powf(1.0 / p))
}

pub fn l1_distance(f: &ScalarField, g: &ScalarField, region: Option<&BoundedRegion>) -> Result<f64> {
    if f.grid != g.grid {
        return invalid("fields live on different grids");
    }
    let d = ScalarField { values: f.values.iter().zip(&g.values).map(|(a, b)| a - b).collect(), ..f.clone() };
    lp_norm(&d, 1.0, region)
}

/// Self-describing JSON container for a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldContainer {
    pub format: String,
    pub kind: String,
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
    pub support_hint: Option<BoundedRegion>,
    pub provenance: BTreeMap<String, String>,
}

pub const FIELD_FORMAT: &str = "fracbv-field/1";

impl FieldContainer {
    pub fn scalar(f: &ScalarField) -> Self {
        FieldContainer {
            format: FIELD_FORMAT.into(),
            kind: "scalar".into(),
            grid: f.grid.clone(),
            components: vec![f.values.clone()],
            support_hint: f.support_hint.clone(),
            provenance: f.provenance.clone(),
        }
    }

    pub fn vector(v: &VectorField) -> Self {
        FieldContainer {
            format: FIELD_FORMAT.into(),
            kind: "vector".into(),
            grid: v.grid.clone(),
            components: v.components.clone(),
            support_hint: None,
            provenance: v.provenance.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field container serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: FieldContainer = serde_json::from_str(s).map_err(|e| FracError::Parse(e.to_string()))?;
        if c.format != FIELD_FORMAT {
            return Err(FracError::Parse(format!("unknown field format `{}`", c.format)));
        }
        Ok(c)
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        if self.kind != "scalar" || self.components.len() != 1 {
            return Err(FracError::Parse("container does not hold a scalar field".into()));
        }
        let mut f = ScalarField::new(self.grid, self.components.into_iter().next().unwrap())?;
        f.support_hint = self.support_hint;
        f.provenance = self.provenance;
        Ok(f)
    }

    pub fn into_vector(self) -> Result<VectorField> {
        if self.kind != "vector" {
            return Err(FracError::Parse("container does not hold a vector field".into()));
        }
        let mut v = VectorField::new(self.grid, self.components)?;
        v.provenance = self.provenance;
        Ok(v)
    }
}

fn csv_export(grid: &GridSpec, comps: &[&Vec<f64>], prov: &BTreeMap<String, String>) -> String {
    let mut s = format!("# grid n={} h={} origin={:?} extents={:?}\n", grid.n, grid.h, grid.origin, grid.extents);
    for (k, v) in prov {
        s.push_str(&format!("# {k}={v}\n"));
    }
    let coords = ["x", "y"];
    let header: Vec<String> = coords[..grid.n]
        .iter()
        .map(|c| c.to_string())
        .chain((0..comps.len()).map(|d| if comps.len() == 1 { "value".to_string() } else { format!("v{d}") }))
        .collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for i in 0..grid.len() {
        let mut row: Vec<String> = grid.coord(i).iter().map(|v| format!("{v}")).collect();
        row.extend(comps.iter().map(|c| format!("{}", c[i])));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rasterizes_to_four_ones() {
        let g = GridSpec::window(&[-1.0], &[2.0], 0.25).unwrap();
        let f = rasterize_shape(&ShapeSet::interval(0.0, 1.0).unwrap(), &g).unwrap();
        assert_eq!(f.values.iter().filter(|&&v| v == 1.0).count(), 4);
        assert!((lp_norm(&f, 1.0, None).unwrap() - 1.0).abs() <= 0.25);
    }

    #[test]
    fn gaussian_peak_is_one() {
        let g = GridSpec::window(&[-2.0], &[2.0], 0.125).unwrap();
        let f = AnalyticFn::gaussian(&[g.coord(9)[0]], 1.0).unwrap();
        assert_eq!(rasterize_fn(&f, &g).unwrap().values[9], 1.0);
    }

    #[test]
    fn unresolved_shape_is_rejected() {
        let g = GridSpec::window(&[-1.0], &[2.0], 0.5).unwrap();
        assert!(rasterize_shape(&ShapeSet::interval(0.0, 1.0).unwrap(), &g).is_err());
    }

    #[test]
    fn half_space_is_right_half() {
        let g = GridSpec::window(&[-1.0, -1.0], &[1.0, 1.0], 0.25).unwrap();
        let f = rasterize_shape(&ShapeSet::half_space(&[1.0, 0.0], 0.0).unwrap(), &g).unwrap();
        for i in 0..g.len() {
            assert_eq!(f.values[i] == 1.0, g.coord(i)[0] > 0.0);
        }
    }

    #[test]
    fn mollify_preserves_mass_and_constants() {
        let g = GridSpec::window(&[-4.0], &[4.0], 1.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| if x[0].abs() < 2.0 { 1.0 } else { 0.0 }).unwrap();
        let m = mollify(&f, 0.25).unwrap();
        assert!((m.integral() - f.integral()).abs() < 1e-12 * f.integral());
        let mid = g.nearest(&[0.0]).unwrap();
        assert!((m.values[mid] - 1.0).abs() < 1e-14);
        assert!(m.values.iter().all(|&v| (-1e-15..=1.0 + 1e-15).contains(&v)));
        assert!(mollify(&f, 1.0 / 32.0).is_err());
    }

    #[test]
    fn cutoff_is_idempotent_on_supported_fields() {
        let g = GridSpec::window(&[-4.0, -4.0], &[4.0, 4.0], 0.125).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&[0.0, 0.0], 1.5).unwrap(), &g).unwrap();
        let once = cutoff_approximate(&f, 2.0).unwrap();
        let twice = cutoff_approximate(&once, 2.0).unwrap();
        assert_eq!(once.values, twice.values);
        assert_eq!(once.values, f.values);
    }

    #[test]
    fn container_round_trip() {
        let g = GridSpec::window(&[0.0], &[1.0], 0.125).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]).unwrap().with_tag("note", "ramp");
        let back = FieldContainer::from_json(&f.to_json()).unwrap().into_scalar().unwrap();
        assert_eq!(back, f);
    }
}
