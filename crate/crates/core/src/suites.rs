//! Named verification suites. Each one rebuilds an identity or inequality
//! of the fractional calculus on a grid and reports every comparison it
//! made, together with the inputs, constants and error budgets used.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::blowup::{decay_profile, GridPolicy};
use crate::constants::{c_div_sup_constant, embedding_constant, gamma_translation_constant, mu, omega};
use crate::error::{check_open, FracError, Result};
use crate::fields::{
    cutoff_approximate, lp_norm, mollify, rasterize_cell_average, rasterize_fn, rasterize_shape, AnalyticFn, GridSpec, ScalarField,
    VectorField,
};
use crate::measures::{coarea_integral, frac_perimeter, frac_variation, gagliardo_seminorm, pair_with_field, shape_variation};
use crate::operators::{
    self, adjoint_divergence, frac_divergence, frac_divergence_neg, frac_gradient, frac_laplacian, nl_divergence_remainder,
    nl_gradient_remainder, Backend, ErrorBudget, TailModel,
};
use crate::oracles::{atom_pairing, ftc_reconstruct, interval_gradient_l1, interval_gradient_l1_quadrature};
use crate::par;
use crate::shapes::{BoundedRegion, ShapeSet};

/// Slack applied to combined error budgets: the budgets are max-norm
/// estimates, not rigorous bounds.
pub const BUDGET_SLACK: f64 = 3.0;
/// Relative tolerance for identities that hold exactly in the discrete setting.
pub const EXACT_REL: f64 = 1e-12;
/// Relative tolerance absorbing rounding in inequalities.
pub const INEQ_REL: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub alpha: Option<f64>,
    pub h: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// |measured − expected| ≤ tolerance
    Equality,
    /// measured ≤ bound + tolerance
    UpperBound,
    /// measured ≥ bound − tolerance
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub measured: f64,
    pub expected_or_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite_id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub budgets: BTreeMap<String, ErrorBudget>,
    /// auxiliary measurements that are reported but not asserted
    pub observations: BTreeMap<String, f64>,
}

impl SuiteReport {
    fn new(id: &str) -> Self {
        SuiteReport {
            suite_id: id.into(),
            status: Status::Pass,
            reason: None,
            inputs: BTreeMap::new(),
            constants: BTreeMap::new(),
            checks: vec![],
            budgets: BTreeMap::new(),
            observations: BTreeMap::new(),
        }
    }

    fn input(&mut self, k: &str, v: impl ToString) {
        self.inputs.insert(k.into(), v.to_string());
    }

    fn constant(&mut self, k: &str, v: f64) {
        self.constants.insert(k.into(), v);
    }

    fn observe(&mut self, k: &str, v: f64) {
        self.observations.insert(k.into(), v);
    }

    fn budget(&mut self, k: &str, b: &ErrorBudget) {
        self.budgets.insert(k.into(), b.clone());
    }

    fn push(&mut self, name: String, kind: CheckKind, measured: f64, target: f64, tolerance: f64) {
        let pass = match kind {
            CheckKind::Equality => (measured - target).abs() <= tolerance,
            CheckKind::UpperBound => measured <= target + tolerance,
            CheckKind::LowerBound => measured >= target - tolerance,
        };
        self.checks.push(Check { name, kind, measured, expected_or_bound: target, tolerance, pass });
    }

    fn eq(&mut self, name: impl Into<String>, measured: f64, expected: f64, tol: f64) {
        self.push(name.into(), CheckKind::Equality, measured, expected, tol);
    }

    /// |measured − expected| ≤ rel·|expected|.
    fn eq_rel(&mut self, name: impl Into<String>, measured: f64, expected: f64, rel: f64) {
        self.push(name.into(), CheckKind::Equality, measured, expected, rel * expected.abs());
    }

    fn le(&mut self, name: impl Into<String>, measured: f64, bound: f64, tol: f64) {
        self.push(name.into(), CheckKind::UpperBound, measured, bound, tol);
    }

    fn ge(&mut self, name: impl Into<String>, measured: f64, bound: f64, tol: f64) {
        self.push(name.into(), CheckKind::LowerBound, measured, bound, tol);
    }

    fn finish(mut self) -> Self {
        if self.status != Status::Skip {
            self.status = if !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
            if self.checks.is_empty() && self.reason.is_none() {
                self.reason = Some("no checks were recorded".into());
            }
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

type SuiteFn = fn(&SuiteConfig, &mut SuiteReport) -> Result<()>;

const REGISTRY: &[(&str, SuiteFn)] = &[
    ("duality", duality),
    ("inversion", inversion),
    ("composition", composition),
    ("ftc", ftc),
    ("ftc_delta", ftc_delta),
    ("leibniz_grad", leibniz_grad),
    ("leibniz_div", leibniz_div),
    ("mollifier_commute", mollifier_commute),
    ("translation", translation),
    ("mollifier_distance", mollifier_distance),
    ("homogeneity", homogeneity),
    ("scaling_sets", scaling_sets),
    ("sobolev_bound", sobolev_bound),
    ("sup_bound", sup_bound),
    ("gns", gns),
    ("isoperimetric", isoperimetric),
    ("embedding", embedding),
    ("coarea", coarea),
    ("strict_interval", strict_interval),
    ("atom_pairing", atom_pairing_suite),
    ("ibp_ball", ibp_ball),
    ("approximation", approximation),
    ("decay_density", decay_density),
    ("lsc", lsc),
];

pub fn suite_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|(id, _)| *id).collect()
}

pub fn run_suite(id: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let (name, f) = REGISTRY.iter().find(|(k, _)| *k == id).ok_or_else(|| FracError::UnknownSuite(id.into()))?;
    let mut r = SuiteReport::new(name);
    if let Some(a) = cfg.alpha {
        r.input("alpha_override", a);
    }
    if let Some(h) = cfg.h {
        r.input("h_override", h);
    }
    if let Some(n) = cfg.n {
        r.input("n_override", n);
    }
    match f(cfg, &mut r) {
        Ok(()) => {}
        Err(e @ FracError::OrderOutOfRange { .. }) | Err(e @ FracError::Dimension { .. }) => {
            r.status = Status::Skip;
            r.reason = Some(e.to_string());
        }
        Err(e) => {
            r.status = Status::Fail;
            r.reason = Some(e.to_string());
        }
    }
    Ok(r.finish())
}

/// Every registered suite whose id is accepted by `filter`, in registry order.
pub fn run_all(cfg: &SuiteConfig, filter: Option<&dyn Fn(&str) -> bool>) -> Vec<SuiteReport> {
    let ids: Vec<&str> = suite_ids().into_iter().filter(|id| filter.is_none_or(|f| f(id))).collect();
    par::map_range(ids.len(), |k| run_suite(ids[k], cfg).expect("registered suite"))
}

pub fn reports_to_json(reports: &[SuiteReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialise")
}

/// One row per check: suite_id,check,kind,measured,expected_or_bound,tolerance,status.
pub fn reports_to_csv(reports: &[SuiteReport]) -> String {
    let mut s = String::from("suite_id,check,kind,measured,expected_or_bound,tolerance,status\n");
    for r in reports {
        let st = |p: bool| if p { "pass" } else { "fail" };
        if r.checks.is_empty() {
            s += &format!("{},,,,,,{}\n", r.suite_id, serde_json::to_string(&r.status).unwrap().trim_matches('"'));
        }
        for c in &r.checks {
            let kind = serde_json::to_string(&c.kind).unwrap();
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                r.suite_id,
                c.name,
                kind.trim_matches('"'),
                c.measured,
                c.expected_or_bound,
                c.tolerance,
                st(c.pass)
            );
        }
    }
    s
}

// ------------------------------------------------------------- helpers

fn alpha_of(cfg: &SuiteConfig, default: f64, r: &mut SuiteReport) -> Result<f64> {
    let a = cfg.alpha.unwrap_or(default);
    check_open("suite", a, 0.0, 1.0, "(0, 1)")?;
    r.input("alpha", a);
    r.constant("mu", mu(1, a)?);
    Ok(a)
}

fn h_of(cfg: &SuiteConfig, default: f64, r: &mut SuiteReport) -> f64 {
    let h = cfg.h.unwrap_or(default);
    r.input("h", h);
    h
}

fn window1(lo: f64, hi: f64, h: f64) -> Result<GridSpec> {
    GridSpec::window(&[lo], &[hi], h)
}

fn window2(w: f64, h: f64) -> Result<GridSpec> {
    GridSpec::window(&[-w, -w], &[w, w], h)
}

fn gauss(grid: &GridSpec, center: &[f64], sigma: f64) -> Result<ScalarField> {
    rasterize_fn(&AnalyticFn::gaussian(center, sigma)?, grid)
}

fn bump(grid: &GridSpec, center: &[f64], radius: f64) -> Result<ScalarField> {
    rasterize_fn(&AnalyticFn::bump(center, radius)?, grid)
}

fn dot(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let t: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    par::pairwise_sum(&t) * grid.cell_volume()
}

fn abs_dot(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let t: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x * y).abs()).collect();
    par::pairwise_sum(&t) * grid.cell_volume()
}

fn l1(grid: &GridSpec, a: &[f64]) -> f64 {
    let t: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    par::pairwise_sum(&t) * grid.cell_volume()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn bv_norm(f: &ScalarField, alpha: f64) -> Result<f64> {
    Ok(lp_norm(f, 1.0, None)? + frac_variation(f, alpha, None)?.value)
}

/// L¹(ℝⁿ) of a field that is O(|x|^{−n−α}) outside the window with leading
/// coefficient μ|m|: window sum plus the analytic exterior of that model.
fn l1_with_far_field(grid: &GridSpec, values: &[f64], mass: f64, centroid: &[f64], alpha: f64) -> Result<f64> {
    let far = mu(grid.n, alpha)?
        * mass.abs()
        * operators::exterior_radial(centroid, &grid.box_lo(), &grid.box_hi(), grid.n as f64 + alpha, None)[0];
    Ok(l1(grid, values) + far)
}

// ------------------------------------------------------------- suites

fn duality(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 256.0, r);
    let grid = window1(-8.0, 8.0, h)?;
    r.input("grid", "[-8, 8]");
    r.input("pairs", "gaussian(c=-0.5+0.1k, s=0.6+0.05k) x bump(c=0.3-0.07k, R=1+0.1k), k=0..9");
    for k in 0..10 {
        let kf = k as f64;
        let f = gauss(&grid, &[-0.5 + 0.1 * kf], 0.6 + 0.05 * kf)?;
        let p = bump(&grid, &[0.3 - 0.07 * kf], 1.0 + 0.1 * kf)?;
        let phi = VectorField::from_scalar(&p, &[1.0])?;
        // exact-transpose path
        let (div, div_budget) = frac_divergence(&phi, alpha, &Backend::direct())?;
        let g = adjoint_divergence(&f, alpha, &Backend::direct())?;
        let lhs = dot(&grid, &f.values, &div.values);
        let rhs = -dot(&grid, &g.components[0], &p.values);
        let scale = abs_dot(&grid, &f.values, &div.values).max(abs_dot(&grid, &g.components[0], &p.values));
        r.eq(format!("pair{k}_adjoint"), lhs - rhs, 0.0, EXACT_REL * scale);
        // independent discretisations on the two sides
        let (gf, grad_budget) = frac_gradient(&f, alpha, &Backend::fft())?;
        let rhs_fft = -dot(&grid, &gf.components[0], &p.values);
        let budget = div_budget.total() * l1(&grid, &f.values) + grad_budget.total() * l1(&grid, &p.values);
        r.eq(format!("pair{k}_independent"), lhs - rhs_fft, 0.0, BUDGET_SLACK * budget);
        if k == 0 {
            r.budget("divergence_direct", &div_budget);
            r.budget("gradient_fft", &grad_budget);
        }
    }
    Ok(())
}

fn inversion(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    r.input("f", "gaussian(0, 1)");
    r.input("refinement", "(half-width, h) = (8, 1/32), (16, 1/64), (32, 1/128)");
    let mut errs = vec![];
    for (k, (w, h)) in [(8.0, 1.0 / 32.0), (16.0, 1.0 / 64.0), (32.0, 1.0 / 128.0)].into_iter().enumerate() {
        let grid = window1(-w, w, h)?;
        let f = gauss(&grid, &[0.0], 1.0)?;
        let (phi, _) = frac_gradient(&f, alpha, &Backend::direct())?;
        let tail = TailModel::from_source(&f, alpha);
        let (u, budget) = frac_divergence_neg(&phi, alpha, Some(&tail))?;
        let diff: Vec<f64> = u.values.iter().zip(&f.values).map(|(a, b)| -a - b).collect();
        let e = l1(&grid, &diff) / l1(&grid, &f.values);
        r.observe(&format!("relative_l1_error_{k}"), e);
        r.budget(&format!("level{k}"), &budget);
        errs.push(e);
    }
    r.le("finest_relative_l1", errs[2], 0.05, 0.0);
    r.le("error_decreases_1", errs[1], errs[0], 0.0);
    r.le("error_decreases_2", errs[2], errs[1], 0.0);
    Ok(())
}

fn composition(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.4, r)?;
    let w = 32.0;
    let h = h_of(cfg, 1.0 / 32.0, r);
    r.input("f", "gaussian(0, 1)");
    r.input("grid", "[-32, 32]");
    r.constant("mu_n_alpha", mu(1, alpha)?);
    let run = |h: f64| -> Result<(GridSpec, Vec<f64>, Vec<f64>, ErrorBudget, f64)> {
        let grid = window1(-w, w, h)?;
        let f = gauss(&grid, &[0.0], 1.0)?;
        let (phi, _) = frac_gradient(&f, alpha, &Backend::direct())?;
        // ∇^α f is not compactly supported: cut the kernel beyond the
        // window and account for the neglected exterior separately
        let (div, _) = frac_divergence(&phi, alpha, &Backend::direct().with_radius(4.0 * w))?;
        let (lap, lb) = frac_laplacian(&f, 2.0 * alpha)?;
        let b = grid.boundary_max(&phi.components[0]);
        Ok((grid, div.values.iter().map(|v| -v).collect(), lap.values, lb, b))
    };
    let (grid, comp, lap, lap_budget, phi_edge) = run(h)?;
    let (cgrid, ccomp, _, _, _) = run(2.0 * h)?;
    r.budget("laplacian", &lap_budget);
    let m = mu(1, alpha)?;
    for k in 0..10 {
        let target = -2.25 + 0.5 * k as f64;
        let ci = cgrid.nearest(&[target]).expect("probe inside grid");
        let x = cgrid.coord(ci);
        let fi = grid.nearest(&x).expect("nested grid");
        let richardson = (comp[fi] - ccomp[ci]).abs() / (2f64.powf(1.0 - alpha) - 1.0);
        let (dl, dr) = (x[0] - grid.box_lo()[0], grid.box_hi()[0] - x[0]);
        let tail = m * phi_edge * (dl.powf(-alpha) + dr.powf(-alpha)) / alpha;
        let budget = richardson + tail + lap_budget.total();
        r.eq(format!("x={:.4}", x[0]), comp[fi], lap[fi], BUDGET_SLACK * budget);
        r.observe(&format!("relative_error_x={:.4}", x[0]), ((comp[fi] - lap[fi]) / lap[fi]).abs());
    }
    Ok(())
}

fn ftc(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 128.0, r);
    let count = (16.0 / h).round() as usize + 1;
    let grid = GridSpec::new(&[-8.0], h, &[count])?;
    let f = gauss(&grid, &[0.0], 1.0)?;
    r.input("f", "gaussian(0, 1)");
    r.input("grid", "nodes -8 + k h on [-8, 8]");
    let pairs = [
        (0.0, 1.0),
        (-1.0, 0.5),
        (-2.0, -0.25),
        (0.25, 2.0),
        (-0.5, 1.5),
        (1.0, -1.75),
        (-3.0, 0.0),
        (0.5, -1.25),
        (2.0, 3.0),
        (-0.75, 0.125),
    ];
    let g = |x: f64| (-0.5 * x * x).exp();
    for (x, y) in pairs {
        let got = ftc_reconstruct(&f, alpha, &[x], &[y])?;
        let want = g(y) - g(x);
        r.eq_rel(format!("x={x},y={y}"), got, want, 0.01);
    }
    Ok(())
}

fn ftc_delta(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    if cfg.n.unwrap_or(1) != 1 {
        return Err(FracError::Dimension { op: "ftc_delta", n: cfg.n.unwrap_or(1), supported: "n = 1" });
    }
    let h = h_of(cfg, 1.0 / 64.0, r);
    let grid = window1(-16.0, 16.0, h)?;
    let f = gauss(&grid, &[0.0], 1.0)?;
    let (gf, budget) = frac_gradient(&f, alpha, &Backend::fft())?;
    r.budget("gradient_fft", &budget);
    let m = mu(1, -alpha)?;
    r.constant("mu_1_minus_alpha", m);
    r.input("f", "gaussian(0, 1)");
    r.input("test_field", "cell integrals of mu_{1,-alpha}(sgn(z-y)|z-y|^(alpha-1) - sgn(z-x)|z-x|^(alpha-1))");
    let g = |x: f64| (-0.5 * x * x).exp();
    for (x, y) in [(0.0, 1.0), (-0.5, 1.0), (-1.5, 0.25)] {
        // ∫ sgn(t)|t|^{α−1} dt = |t|^α/α
        let prim = |z: f64| m * ((z - y).abs().powf(alpha) - (z - x).abs().powf(alpha)) / alpha;
        let w: Vec<f64> = (0..grid.len())
            .map(|i| {
                let c = grid.coord(i)[0];
                prim(c + 0.5 * h) - prim(c - 0.5 * h)
            })
            .collect();
        let t: Vec<f64> = w.iter().zip(&gf.components[0]).map(|(a, b)| a * b).collect();
        let got = -par::pairwise_sum(&t);
        r.eq_rel(format!("x={x},y={y}"), got, g(y) - g(x), 0.02);
    }
    Ok(())
}

fn leibniz_inputs(r: &mut SuiteReport, h: f64) -> Result<(GridSpec, ScalarField, ScalarField)> {
    let grid = window1(-4.0, 4.0, h)?;
    r.input("f", "bump(0, 1)");
    r.input("g", "bump(0.4, 1.2)");
    r.input("grid", "[-4, 4]");
    Ok((grid.clone(), bump(&grid, &[0.0], 1.0)?, bump(&grid, &[0.4], 1.2)?))
}

fn leibniz_grad(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 128.0, r);
    let (grid, f, g) = leibniz_inputs(r, h)?;
    let fg = ScalarField::new(grid.clone(), f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect())?;
    let (nl, nl_budget) = nl_gradient_remainder(&f, &g, alpha)?;
    r.budget("nl", &nl_budget);
    let rebuild = |backend: &Backend| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let (a, ba) = frac_gradient(&fg, alpha, backend)?;
        let (df, bf) = frac_gradient(&f, alpha, backend)?;
        let (dg, bg) = frac_gradient(&g, alpha, backend)?;
        let rhs: Vec<f64> =
            (0..grid.len()).map(|i| f.values[i] * dg.components[0][i] + g.values[i] * df.components[0][i] + nl.components[0][i]).collect();
        let budget = ba.total() + f.max_abs() * bg.total() + g.max_abs() * bf.total() + nl_budget.total();
        Ok((a.components[0].clone(), rhs, budget))
    };
    let (lhs, rhs, _) = rebuild(&Backend::direct())?;
    let res = max_abs(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    r.eq("exact_route_max_residual", res, 0.0, EXACT_REL * max_abs(&lhs));
    let (lhs, rhs, budget) = rebuild(&Backend::fft())?;
    let res = max_abs(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    r.eq("independent_route_max_residual", res, 0.0, BUDGET_SLACK * budget);
    // L¹ bounds for the remainder
    let m = mu(1, alpha)?;
    let mass = fg.integral();
    let nl_l1 = l1_with_far_field(&grid, &nl.components[0], mass, &TailModel::from_source(&fg, alpha).centroid, alpha)?;
    let sf2 = gagliardo_seminorm(&f, alpha / 2.0, 2.0)?;
    let sg2 = gagliardo_seminorm(&g, alpha / 2.0, 2.0)?;
    let sg1 = gagliardo_seminorm(&g, alpha, 1.0)?;
    r.observe("nl_l1", nl_l1);
    r.le("nl_l1<=mu[f]_{a/2,2}[g]_{a/2,2}", nl_l1, m * sf2 * sg2, INEQ_REL * nl_l1);
    r.le("nl_l1<=2mu|f|_inf[g]_{a,1}", nl_l1, 2.0 * m * f.max_abs() * sg1, INEQ_REL * nl_l1);
    Ok(())
}

fn leibniz_div(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 128.0, r);
    let (grid, f, p) = leibniz_inputs(r, h)?;
    let phi = VectorField::from_scalar(&p, &[1.0])?;
    let fphi =
        VectorField::from_scalar(&ScalarField::new(grid.clone(), f.values.iter().zip(&p.values).map(|(a, b)| a * b).collect())?, &[1.0])?;
    let (nl, nl_budget) = nl_divergence_remainder(&f, &phi, alpha)?;
    r.budget("nl", &nl_budget);
    let rebuild = |backend: &Backend| -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let (a, ba) = frac_divergence(&fphi, alpha, backend)?;
        let (dp, bp) = frac_divergence(&phi, alpha, backend)?;
        let (df, bf) = frac_gradient(&f, alpha, backend)?;
        let rhs: Vec<f64> =
            (0..grid.len()).map(|i| f.values[i] * dp.values[i] + p.values[i] * df.components[0][i] + nl.values[i]).collect();
        let budget = ba.total() + f.max_abs() * bp.total() + p.max_abs() * bf.total() + nl_budget.total();
        Ok((a.values, rhs, budget))
    };
    let (lhs, rhs, _) = rebuild(&Backend::direct())?;
    let res = max_abs(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    r.eq("exact_route_max_residual", res, 0.0, EXACT_REL * max_abs(&lhs));
    let (lhs, rhs, budget) = rebuild(&Backend::fft())?;
    let res = max_abs(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    r.eq("independent_route_max_residual", res, 0.0, BUDGET_SLACK * budget);
    let m = mu(1, alpha)?;
    let fp = ScalarField::new(grid.clone(), fphi.components[0].clone())?;
    let nl_l1 = l1_with_far_field(&grid, &nl.values, fp.integral(), &TailModel::from_source(&fp, alpha).centroid, alpha)?;
    let sp1 = gagliardo_seminorm(&p, alpha, 1.0)?;
    let sf1 = gagliardo_seminorm(&f, alpha, 1.0)?;
    r.observe("nl_l1", nl_l1);
    r.le("nl_l1<=2mu|f|_inf[phi]_{a,1}", nl_l1, 2.0 * m * f.max_abs() * sp1, INEQ_REL * nl_l1);
    r.le("nl_l1<=2mu|phi|_inf[f]_{a,1}", nl_l1, 2.0 * m * p.max_abs() * sf1, INEQ_REL * nl_l1);
    Ok(())
}

fn mollifier_commute(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 128.0, r);
    let eps = 0.25;
    let grid = window1(-4.0, 4.0, h)?;
    let p = bump(&grid, &[0.2], 1.0)?;
    let phi = VectorField::from_scalar(&p, &[1.0])?;
    r.input("phi", "bump(0.2, 1)");
    r.input("eps", eps);
    let interior: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let x = grid.coord(i)[0];
            x - grid.box_lo()[0] > 2.0 * eps && grid.box_hi()[0] - x > 2.0 * eps
        })
        .collect();
    let mphi = VectorField::from_scalar(&mollify(&p, eps)?, &[1.0])?;
    for (name, backend) in [("fft", Backend::fft()), ("direct", Backend::direct())] {
        let (d, b) = frac_divergence(&phi, alpha, &backend)?;
        let a = mollify(&d, eps)?;
        let (c, bc) = frac_divergence(&mphi, alpha, &backend)?;
        let res = interior.iter().map(|&i| (a.values[i] - c.values[i]).abs()).fold(0.0, f64::max);
        let scale = interior.iter().map(|&i| a.values[i].abs()).fold(0.0, f64::max);
        if name == "fft" {
            // both sides are the same discrete convolutions in a different order
            r.eq("fft_interior_max_residual", res, 0.0, EXACT_REL * scale);
        } else {
            r.budget("direct", &b.combine(&bc));
            r.eq("direct_interior_max_residual", res, 0.0, BUDGET_SLACK * (b.total() + bc.total()));
        }
    }
    Ok(())
}

fn translation(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 64.0, r);
    let gt = gamma_translation_constant(1, alpha)?;
    r.constant("gamma", gt.value);
    r.constant("gamma_closed_bound", gt.closed_bound);
    r.le("gamma<=closed_bound", gt.value, gt.closed_bound, 0.0);
    let grid = window1(-10.0, 10.0, h)?;
    let f = gauss(&grid, &[0.0], 1.0)?;
    r.input("f", "gaussian(0, 1)");
    let var = frac_variation(&f, alpha, None)?;
    r.budget("variation", &var.budget);
    for y in [0.05, 0.1, 0.25, 0.5, 1.0] {
        let fy = gauss(&grid, &[-y], 1.0)?;
        let lhs = crate::fields::l1_distance(&fy, &f, None)?;
        let rhs = gt.value * y.powf(alpha) * var.value;
        r.le(format!("y={y}"), lhs, rhs, INEQ_REL * rhs);
    }
    Ok(())
}

fn mollifier_distance(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 512.0, r);
    let gt = gamma_translation_constant(1, alpha)?;
    r.constant("gamma", gt.value);
    let grid = window1(-1.0, 2.0, h)?;
    let chi = rasterize_shape(&ShapeSet::interval(0.0, 1.0)?, &grid)?;
    let var = interval_gradient_l1(0.0, 1.0, alpha)?;
    r.constant("variation_oracle", var);
    r.input("f", "indicator of (0, 1)");
    for k in 0..5 {
        let eps = 1.0 / 64.0 * 2f64.powi(k);
        let m = mollify(&chi, eps)?;
        let lhs = crate::fields::l1_distance(&m, &chi, None)?;
        let rhs = gt.value * eps.powf(alpha) * var;
        r.le(format!("eps={eps}"), lhs, rhs, INEQ_REL * rhs);
    }
    Ok(())
}

fn homogeneity(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    r.input("lambda", 2);
    r.input("f", "gaussian(0, 1) on G1, gaussian(0, 1/2) = f(2x) on G2 = G1/2");
    let dims: Vec<usize> = match cfg.n {
        Some(n) => vec![n],
        None => vec![1, 2],
    };
    for n in dims {
        let (g1, g2) = match n {
            1 => (window1(-8.0, 8.0, 1.0 / 64.0)?, window1(-4.0, 4.0, 1.0 / 128.0)?),
            2 => (window2(6.0, 1.0 / 16.0)?, window2(3.0, 1.0 / 32.0)?),
            _ => return Err(FracError::Dimension { op: "homogeneity", n, supported: "n ∈ {1, 2}" }),
        };
        let c = vec![0.0; n];
        let (a, _) = frac_gradient(&gauss(&g1, &c, 1.0)?, alpha, &Backend::direct())?;
        let (b, _) = frac_gradient(&gauss(&g2, &c, 0.5)?, alpha, &Backend::direct())?;
        let s = 2f64.powf(alpha);
        let mut res: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for d in 0..n {
            for i in 0..g1.len() {
                res = res.max((b.components[d][i] - s * a.components[d][i]).abs());
                scale = scale.max(b.components[d][i].abs());
            }
        }
        r.eq(format!("n={n}_max_residual"), res, 0.0, 1e-10 * scale);
    }
    Ok(())
}

fn scaling_sets(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    r.input("lambda", 2);
    let dims: Vec<usize> = match cfg.n {
        Some(n) => vec![n],
        None => vec![1, 2],
    };
    for n in dims {
        let (e, g1, g2) = match n {
            1 => (ShapeSet::interval(0.0, 1.0)?, window1(-0.5, 1.5, 1.0 / 256.0)?, window1(-1.0, 3.0, 1.0 / 128.0)?),
            2 => (ShapeSet::ball(&[0.0, 0.0], 1.0)?, window2(1.5, 1.0 / 32.0)?, window2(3.0, 1.0 / 16.0)?),
            _ => return Err(FracError::Dimension { op: "scaling_sets", n, supported: "n ∈ {1, 2}" }),
        };
        let v1 = shape_variation(&e, alpha, &g1, None)?.total;
        let v2 = shape_variation(&e.dilate(2.0), alpha, &g2, None)?.total;
        r.observe(&format!("n={n}_variation_E"), v1);
        r.observe(&format!("n={n}_variation_2E"), v2);
        r.eq_rel(format!("n={n}_ratio"), v2 / v1, 2f64.powf(n as f64 - alpha), 0.01);
        if n == 1 {
            r.eq_rel("n=1_variation_vs_oracle", v1, interval_gradient_l1(0.0, 1.0, alpha)?, 0.05);
        }
    }
    Ok(())
}

fn sobolev_bound(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let m = mu(1, alpha)?;
    let fam: Vec<(&str, ScalarField)> = vec![
        ("gaussian", gauss(&window1(-8.0, 8.0, 1.0 / 64.0)?, &[0.0], 1.0)?),
        ("bump", bump(&window1(-2.0, 2.0, 1.0 / 256.0)?, &[0.0], 1.0)?),
        ("indicator", rasterize_shape(&ShapeSet::interval(0.0, 1.0)?, &window1(-1.0, 2.0, 1.0 / 256.0)?)?),
    ];
    r.input("family", "gaussian(0,1) h=1/64, bump(0,1) h=1/256, indicator(0,1) h=1/256");
    for (name, f) in fam {
        let v = frac_variation(&f, alpha, None)?.value;
        let s = gagliardo_seminorm(&f, alpha, 1.0)?;
        r.le(format!("{name}:|D^a f|<=mu[f]_{{a,1}}"), v, m * s, INEQ_REL * m * s);
    }
    Ok(())
}

fn sup_bound(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let dims: Vec<usize> = match cfg.n {
        Some(n) => vec![n],
        None => vec![1, 2],
    };
    r.input("phi", "bump(0, 1) in 1-d; (b, b/2) with b = bump(0, 1) in 2-d; U = B_1.05");
    for n in dims {
        let (grid, u) = match n {
            1 => (window1(-4.0, 4.0, 1.0 / 128.0)?, BoundedRegion::ball(&[0.0], 1.05)?),
            2 => (window2(3.0, 1.0 / 32.0)?, BoundedRegion::ball(&[0.0, 0.0], 1.05)?),
            _ => return Err(FracError::Dimension { op: "sup_bound", n, supported: "n ∈ {1, 2}" }),
        };
        let b = AnalyticFn::bump(&vec![0.0; n], 1.0)?;
        let weights: Vec<f64> = if n == 1 { vec![1.0] } else { vec![1.0, 0.5] };
        let base = rasterize_fn(&b, &grid)?;
        let comps: Vec<Vec<f64>> = weights.iter().map(|w| base.values.iter().map(|v| w * v).collect()).collect();
        let phi = VectorField::new(grid.clone(), comps)?;
        let classical = (0..grid.len())
            .map(|i| {
                let gr = b.gradient(&grid.coord(i));
                weights.iter().zip(&gr).map(|(w, g)| w * g).sum::<f64>().abs()
            })
            .fold(0.0, f64::max);
        let (d, budget) = frac_divergence(&phi, alpha, &Backend::direct())?;
        let c = c_div_sup_constant(n, alpha, &u)?;
        r.constant(&format!("C_{n}_alpha_U"), c);
        r.budget(&format!("n={n}"), &budget);
        let lhs = d.max_abs();
        r.le(format!("n={n}:|div^a phi|_inf<=C|div phi|_inf"), lhs, c * classical, budget.total());
    }
    Ok(())
}

fn refinement_ratios(r: &mut SuiteReport, items: &[(&str, &dyn Fn(&GridSpec) -> Result<(f64, f64)>)], hs: [f64; 2], w: f64) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (name, eval) in items {
        let mut ratios = [0.0; 2];
        for (k, &h) in hs.iter().enumerate() {
            let (num, den) = eval(&window2(w, h)?)?;
            ratios[k] = num / den;
        }
        r.observe(&format!("{name}_ratio_coarse"), ratios[0]);
        r.observe(&format!("{name}_ratio_fine"), ratios[1]);
        worst = worst.max(ratios[1]);
        r.le(format!("{name}:ratio_fine<=1.25*ratio_coarse"), ratios[1], 1.25 * ratios[0], 0.0);
    }
    r.observe("empirical_max_ratio", worst);
    Ok(())
}

fn gns(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let n = cfg.n.unwrap_or(2);
    if n != 2 {
        return Err(FracError::Dimension { op: "gns", n, supported: "n = 2 (the inequality fails on the line)" });
    }
    let q = 2.0 / (2.0 - alpha);
    r.input("q", q);
    r.input("grids", "[-2.5, 2.5]^2 at h = 1/16 and 1/32");
    r.constant("mu_2_alpha", mu(2, alpha)?);
    let ratio_of = |f: ScalarField| -> Result<(f64, f64)> { Ok((lp_norm(&f, q, None)?, frac_variation(&f, alpha, None)?.value)) };
    let g = |grid: &GridSpec| ratio_of(gauss(grid, &[0.0, 0.0], 0.4)?);
    let b = |grid: &GridSpec| ratio_of(bump(grid, &[0.0, 0.0], 1.0)?);
    let d = |grid: &GridSpec| ratio_of(rasterize_shape(&ShapeSet::ball(&[0.0, 0.0], 1.0)?, grid)?);
    let s = |grid: &GridSpec| ratio_of(rasterize_shape(&ShapeSet::cube(&[-0.75, -0.75], &[0.75, 0.75])?, grid)?);
    refinement_ratios(r, &[("gaussian", &g), ("bump", &b), ("disk", &d), ("square", &s)], [1.0 / 16.0, 1.0 / 32.0], 2.5)
}

fn isoperimetric(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let n = cfg.n.unwrap_or(2);
    if n != 2 {
        return Err(FracError::Dimension { op: "isoperimetric", n, supported: "n = 2" });
    }
    r.input("grids", "[-2, 2]^2 at h = 1/16 and 1/32");
    let ratio_of = move |e: ShapeSet, grid: &GridSpec| -> Result<(f64, f64)> {
        let vol = e.measure().unwrap_or(0.0);
        Ok((vol.powf((2.0 - alpha) / 2.0), shape_variation(&e, alpha, grid, None)?.total))
    };
    let d1 = |g: &GridSpec| ratio_of(ShapeSet::ball(&[0.0, 0.0], 0.5)?, g);
    let d2 = |g: &GridSpec| ratio_of(ShapeSet::ball(&[0.0, 0.0], 1.0)?, g);
    let s1 = |g: &GridSpec| ratio_of(ShapeSet::cube(&[-0.5, -0.5], &[0.5, 0.5])?, g);
    let s2 = |g: &GridSpec| ratio_of(ShapeSet::cube(&[-0.75, -0.75], &[0.75, 0.75])?, g);
    refinement_ratios(r, &[("disk_r0.5", &d1), ("disk_r1", &d2), ("square_1", &s1), ("square_1.5", &s2)], [1.0 / 16.0, 1.0 / 32.0], 2.0)
}

fn embedding(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let beta = alpha / 2.0;
    r.input("beta", beta);
    let c = embedding_constant(1, alpha, beta)?;
    r.constant("C_1_alpha_beta", c);
    let fam: Vec<(&str, ScalarField)> = vec![
        ("gaussian", gauss(&window1(-8.0, 8.0, 1.0 / 32.0)?, &[0.0], 1.0)?),
        ("bump", bump(&window1(-2.0, 2.0, 1.0 / 128.0)?, &[0.0], 1.0)?),
        ("indicator", rasterize_shape(&ShapeSet::interval(0.0, 1.0)?, &window1(-1.0, 2.0, 1.0 / 256.0)?)?),
    ];
    for (name, f) in fam {
        let lhs = gagliardo_seminorm(&f, beta, 1.0)?;
        let rhs = c * bv_norm(&f, alpha)?;
        r.le(format!("{name}:[f]_{{b,1}}<=C|f|_BV^a"), lhs, rhs, INEQ_REL * rhs);
    }
    Ok(())
}

fn coarea(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 512.0, r);
    // 64 levels leave a staircase error in f itself that does not shrink with h
    let levels = 256;
    r.input("levels", levels);
    r.input("grid", "[-2, 2]");
    let grid = window1(-2.0, 2.0, h)?;
    let fam = [("bump", AnalyticFn::bump(&[0.0], 1.0)?), ("polynomial_bump", AnalyticFn::polynomial_bump(&[0.2], 1.2, 3)?)];
    for (name, a) in fam {
        let f = rasterize_fn(&a, &grid)?;
        let c = coarea_integral(&f, alpha, levels, None)?;
        // thresholded level sets carry an O(h^{1−α}) bias in their variation:
        // the same run on the 2h grid gives its Richardson estimate
        let cc = coarea_integral(&f.coarsen()?, alpha, levels, None)?;
        let bias = (c.level_total - cc.level_total).abs() / (2f64.powf(1.0 - alpha) - 1.0);
        r.observe(&format!("{name}_skipped_levels"), c.skipped.len() as f64);
        r.observe(&format!("{name}_level_total"), c.level_total);
        r.observe(&format!("{name}_variation"), c.variation);
        r.observe(
            &format!("{name}_level_total_extrapolated"),
            c.level_total + (c.level_total - cc.level_total) / (2f64.powf(1.0 - alpha) - 1.0),
        );
        r.le(format!("{name}:relative_l1_gap"), c.relative_l1_gap, 0.05, 0.0);
        r.le(format!("{name}:|D^a f|<=int|D^a chi_t|dt"), c.variation, c.level_total, BUDGET_SLACK * bias);
    }
    Ok(())
}

fn strict_interval(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 512.0, r);
    let m = mu(1, alpha)?;
    let e = ShapeSet::interval(0.0, 1.0)?;
    let closed = interval_gradient_l1(0.0, 1.0, alpha)?;
    let (quad, quad_err) = interval_gradient_l1_quadrature(0.0, 1.0, alpha)?;
    let grid = window1(-1.0, 2.0, h)?;
    let var = frac_variation(&rasterize_shape(&e, &grid)?, alpha, None)?;
    let per = frac_perimeter(&e, alpha, None, h)?.value;
    let per_grid = crate::measures::frac_perimeter_grid(&e, alpha, None, h)?.value;
    r.constant("variation_closed_form", closed);
    r.constant("perimeter", per);
    r.observe("perimeter_grid", per_grid);
    r.observe("quadrature_error_estimate", quad_err);
    r.budget("grid_variation", &var.budget);
    r.eq_rel("oracle_quadrature_l1", quad, closed, 0.02);
    r.eq_rel("grid_adjoint_l1", var.value, closed, 0.05);
    r.le("|D^a chi|<mu*P", quad, m * per, 0.0);
    r.le("|D^a chi|_grid<mu*P_grid", var.value, m * per_grid, 0.0);
    let analytic = 1.0 - 2f64.powf(alpha - 1.0);
    r.constant("analytic_margin", analytic);
    r.ge("measured_margin>=0.9*analytic", 1.0 - var.value / (m * per_grid), 0.9 * analytic, 0.0);
    Ok(())
}

fn atom_pairing_suite(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 256.0, r);
    let grid = window1(-6.0, 7.0, h)?;
    let f = rasterize_cell_average(&AnalyticFn::atom_witness(0.0, 1.0, alpha)?, &grid)?;
    r.constant("mu_1_minus_alpha", mu(1, -alpha)?);
    r.input("f", "atom witness a=0, b=1 (cell averages)");
    let tests: Vec<(&str, AnalyticFn)> = vec![
        ("bump(0,1)", AnalyticFn::bump(&[0.0], 1.0)?),
        ("bump(1,1.5)", AnalyticFn::bump(&[1.0], 1.5)?),
        ("bump(0.3,1.5)", AnalyticFn::bump(&[0.3], 1.5)?),
        ("bump(-0.5,2)", AnalyticFn::bump(&[-0.5], 2.0)?),
        ("poly3(0.6,1.2)", AnalyticFn::polynomial_bump(&[0.6], 1.2, 3)?),
    ];
    for (name, t) in tests {
        let p = rasterize_fn(&t, &grid)?;
        let phi = VectorField::from_scalar(&p, &[1.0])?;
        let got = pair_with_field(&f, &phi, alpha)?;
        let want = atom_pairing(alpha, t.eval(&[0.0]), t.eval(&[1.0]))?;
        r.eq_rel(name, got, want, 0.02);
    }
    Ok(())
}

fn ibp_ball(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 256.0, r);
    let grid = window1(-3.0, 4.0, h)?;
    let p = bump(&grid, &[0.4], 1.5)?;
    let phi = VectorField::from_scalar(&p, &[1.0])?;
    let (divp, _) = frac_divergence(&phi, alpha, &Backend::direct())?;
    r.input("E", "(0, 1)");
    r.input("phi", "bump(0.4, 1.5)");
    let m = mu(1, alpha)?;
    // cell average of ∇^α χ_{(a,b)}
    let avg_grad = |a: f64, b: f64, x: f64| -> f64 {
        let prim = |t: f64| t.signum() * t.abs().powf(1.0 - alpha) / (1.0 - alpha);
        let cell = |c: f64| prim(x + 0.5 * h - c) - prim(x - 0.5 * h - c);
        m / alpha * (cell(a) - cell(b)) / h
    };
    let inside = |a: f64, b: f64, x: f64| x > a && x < b;
    for (c, rad) in [(0.25, 0.125), (0.625, 0.25), (0.5, 0.75)] {
        let (a, b) = (c - rad, c + rad);
        if [0.0, 1.0].iter().any(|e: &f64| (a - e).abs() < 2.0 * h || (b - e).abs() < 2.0 * h) {
            return Err(FracError::InvalidArgument("ball boundary within 2h of the set boundary".into()));
        }
        let chi_b = rasterize_shape(&ShapeSet::interval(a, b)?, &grid)?;
        let (nl, _) = nl_divergence_remainder(&chi_b, &phi, alpha)?;
        let mut t = [vec![], vec![], vec![], vec![]];
        for i in 0..grid.len() {
            let x = grid.coord(i)[0];
            let in_e = inside(0.0, 1.0, x);
            let in_b = inside(a, b, x);
            t[0].push(if in_e && in_b { divp.values[i] } else { 0.0 });
            t[1].push(if in_e { p.values[i] * avg_grad(a, b, x) } else { 0.0 });
            t[2].push(if in_e { nl.values[i] } else { 0.0 });
            t[3].push(if in_b { -p.values[i] * avg_grad(0.0, 1.0, x) } else { 0.0 });
        }
        let s: Vec<f64> = t.iter().map(|v| par::pairwise_sum(v) * h).collect();
        let scale: f64 = t.iter().map(|v| l1(&grid, v)).sum();
        r.observe(&format!("c={c},r={rad}_scale"), scale);
        r.eq(format!("c={c},r={rad}"), s[0] + s[1] + s[2], s[3], 0.02 * scale);
    }
    Ok(())
}

fn approximation(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 64.0, r);
    let grid = window1(-16.0, 16.0, h)?;
    let f = gauss(&grid, &[0.0], 1.0)?;
    r.input("f", "gaussian(0, 1)");
    r.input("sequence", "(eps, R) = (1/2, 1), (1/4, 2), (1/8, 4)");
    let norm = bv_norm(&f, alpha)?;
    r.constant("bv_norm_f", norm);
    let mut dist = vec![];
    for (k, (eps, rad)) in [(0.5, 1.0), (0.25, 2.0), (0.125, 4.0)].into_iter().enumerate() {
        let fk = cutoff_approximate(&mollify(&f, eps)?, rad)?;
        let diff = ScalarField::new(grid.clone(), fk.values.iter().zip(&f.values).map(|(a, b)| a - b).collect())?;
        let d = bv_norm(&diff, alpha)?;
        r.observe(&format!("distance_{k}"), d);
        dist.push(d);
    }
    r.le("distance_decreases_1", dist[1], dist[0], 0.0);
    r.le("distance_decreases_2", dist[2], dist[1], 0.0);
    r.le("last_distance<=0.05*|f|_BV^a", dist[2], 0.05 * norm, 0.0);
    Ok(())
}

fn decay_density(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let radii = [0.4, 0.2, 0.1, 0.05];
    r.input("radii", "0.4, 0.2, 0.1, 0.05");
    let cases: Vec<(&str, ShapeSet, Vec<f64>, GridPolicy)> = vec![
        ("interval@0", ShapeSet::interval(0.0, 1.0)?, vec![0.0], GridPolicy { half_width: 2.0, h: 1.0 / 256.0 }),
        ("disk@(1,0)", ShapeSet::ball(&[0.0, 0.0], 1.0)?, vec![1.0, 0.0], GridPolicy::default()),
    ];
    for (name, e, x, pol) in cases {
        if cfg.n.is_some_and(|n| n != e.dim()) {
            continue;
        }
        let n = e.dim();
        let d = decay_profile(&e, &x, alpha, &radii, &pol)?;
        let w = omega_frac(n as f64 - alpha);
        r.constant(&format!("A_{n}"), d.a);
        r.constant(&format!("B_{n}"), d.b);
        r.constant(&format!("omega_{n}-alpha"), w);
        for row in &d.rows {
            let p = n as f64 - alpha;
            // density ratio against A/ω_{n−α}
            r.le(format!("{name}:r={}:density", row.radius), row.total / (w * row.radius.powf(p)), d.a / w, 0.0);
            r.le(format!("{name}:r={}:intersection", row.radius), row.intersection_total, row.bound_b, 0.0);
        }
        if let Some(s) = d.exponent_fit {
            r.observe(&format!("{name}_exponent_fit"), s);
        }
    }
    Ok(())
}

/// ω_s = π^{s/2}/Γ(s/2 + 1) for real s.
fn omega_frac(s: f64) -> f64 {
    if s.fract() == 0.0 && (1.0..=2.0).contains(&s) {
        return omega(s as usize);
    }
    crate::special::unit_ball_volume(s)
}

fn lsc(cfg: &SuiteConfig, r: &mut SuiteReport) -> Result<()> {
    let alpha = alpha_of(cfg, 0.5, r)?;
    let h = h_of(cfg, 1.0 / 512.0, r);
    let grid = window1(-1.0, 2.0, h)?;
    let chi = rasterize_shape(&ShapeSet::interval(0.0, 1.0)?, &grid)?;
    let v = frac_variation(&chi, alpha, None)?;
    r.budget("indicator_variation", &v.budget);
    r.constant("variation_indicator", v.value);
    let eps = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    r.input("eps", "1/8, 1/16, 1/32");
    let mut seq = vec![];
    for e in eps {
        let fe = mollify(&chi, e)?;
        let ve = frac_variation(&fe, alpha, None)?.value;
        r.observe(&format!("variation_eps={e}"), ve);
        seq.push(ve);
    }
    // Aitken extrapolation of the sequence towards ε → 0
    let (d1, d2) = (seq[1] - seq[0], seq[2] - seq[1]);
    let limit = if (d1 - d2).abs() > 0.0 { seq[2] - d2 * d2 / (d2 - d1) } else { seq[2] };
    r.observe("extrapolated_limit", limit);
    r.ge("liminf>=|D^a chi|(1-0.02)", limit, v.value * 0.98, 0.0);
    Ok(())
}
