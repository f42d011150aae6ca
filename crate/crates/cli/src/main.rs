//! `fracbv` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod inputs;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracbv::blowup::{decay_profile, frac_normal_trace, tangent_convergence, GridPolicy};
use fracbv::fields::{rasterize_fn, rasterize_shape};
use fracbv::measures::{coarea_integral, frac_perimeter, frac_perimeter_exact, frac_perimeter_grid, frac_variation};
use fracbv::operators::{frac_divergence, frac_gradient, frac_laplacian, riesz_potential};
use fracbv::suites::{self, reports_to_csv, reports_to_json, Status, SuiteConfig};
use fracbv::{constants, Backend, BoundedRegion, ErrorBudget, FracError, ScalarField, VectorField};
use serde_json::{json, Value};

use config::{usage, RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(name = "fracbv", version, about = "Fractional gradients, perimeters, variation and blow-ups on uniform grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ∇^α of a function or a shape indicator
    Gradient,
    /// div^α of fn·direction
    Divergence,
    /// (−Δ)^{s/2} of a function
    Laplacian,
    /// I_s of a function
    Riesz,
    /// α-perimeter of a shape, in Ω = window when one is given
    Perimeter,
    /// |D^α f| of a function or a shape indicator
    Variation,
    /// level-set integral against the variation of a function
    Coarea,
    /// run one verification suite, or `all`
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
    /// decay and tangent behaviour of D^α χ_E at a point
    Blowup,
    /// closed-form and quadrature constants for (dim, alpha)
    Constants,
    /// list the verification suites
    Suites,
}

#[derive(Args, Debug, Default)]
struct Opts {
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    h: Option<f64>,
    /// lo,hi per axis
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    shape: Option<String>,
    #[arg(long = "fn", global = true, allow_hyphen_values = true)]
    function: Option<String>,
    #[arg(long, global = true)]
    backend: Option<String>,
    /// perimeter route: auto | exact | grid
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    direction: Option<String>,
    /// json | csv
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// worker cap; FRACBV_THREADS sets the default
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long, global = true)]
    radii: Option<String>,
    #[arg(long, global = true)]
    windows: Option<String>,
    #[arg(long, global = true)]
    half_width: Option<f64>,
    /// key = value file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// write the merged configuration here before running
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
}

impl Opts {
    fn to_config(&self) -> Result<RunConfig, UsageError> {
        let mut c = RunConfig::default();
        macro_rules! put {
            ($($key:literal => $v:expr),* $(,)?) => {$(
                if let Some(v) = &$v { c.set($key, v)?; }
            )*};
        }
        put!(
            "alpha" => self.alpha, "beta" => self.beta, "s" => self.s, "h" => self.h,
            "window" => self.window, "dim" => self.dim, "shape" => self.shape, "fn" => self.function,
            "backend" => self.backend, "method" => self.method, "direction" => self.direction, "out" => self.out,
            "threads" => self.threads, "levels" => self.levels, "point" => self.point,
            "radii" => self.radii, "windows" => self.windows, "half_width" => self.half_width,
        );
        if let Some(p) = &self.output {
            c.set("output", p.display())?;
        }
        Ok(c)
    }
}

enum Failure {
    Usage(String),
    Suites,
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

/// Library errors are input errors here; order errors name the flag that set the order.
fn lib_err(flag: &'static str) -> impl Fn(FracError) -> Failure {
    move |e| match e {
        FracError::OrderOutOfRange { value, range, .. } => Failure::Usage(format!("--{flag}: {value} outside admissible range {range}")),
        FracError::Dimension { n, supported, .. } => Failure::Usage(format!("--dim: {n} not supported ({supported})")),
        e => Failure::Usage(e.to_string()),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

struct Ctx {
    cfg: RunConfig,
    format: Format,
}

impl Ctx {
    fn alpha(&self) -> Result<f64, Failure> {
        let a = self.cfg.f64("alpha")?.unwrap_or(0.5);
        if !(a > 0.0 && a < 1.0) {
            return Err(Failure::Usage(format!("--alpha: {a} outside admissible range (0,1)")));
        }
        Ok(a)
    }

    fn inputs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for (k, _) in config::KEYS {
            if *k == "output" || *k == "threads" {
                continue;
            }
            if let Some(v) = self.cfg.get(k) {
                m.insert(k.to_string(), v.to_string());
            }
        }
        m
    }

    fn envelope(&self, command: &str, provenance: &str, budget: Option<&ErrorBudget>, result: Value) -> String {
        let mut v = json!({
            "command": command,
            "inputs": self.inputs(),
            "provenance": provenance,
            "result": result,
        });
        if let Some(b) = budget {
            v["budget"] = json!({ "total": b.total(), "terms": b });
        }
        serde_json::to_string_pretty(&v).expect("serialisable") + "\n"
    }

    fn function_field(&self, default_fn: &str) -> Result<ScalarField, Failure> {
        let n = inputs::dimension(&self.cfg)?;
        let f = inputs::parse_fn(self.cfg.get("fn").unwrap_or(default_fn), n)?;
        if f.dim() != n {
            return usage(format!("--fn: function lives in dimension {} but the grid has dimension {n}", f.dim())).map_err(Into::into);
        }
        let grid = inputs::grid(&self.cfg, n, Some(&inputs::Fit::of_fn(&f)))?;
        rasterize_fn(&f, &grid).map_err(lib_err("fn"))
    }

    /// Indicator of --shape when given, else --fn.
    fn shape_or_function(&self) -> Result<ScalarField, Failure> {
        match self.cfg.get("shape") {
            Some(s) => {
                let shape = inputs::parse_shape(s)?;
                let grid = inputs::grid(&self.cfg, shape.dim(), inputs::Fit::of_shape(&shape).as_ref())?;
                rasterize_shape(&shape, &grid).map_err(lib_err("shape"))
            }
            None => self.function_field("gaussian"),
        }
    }

    fn backend(&self) -> Result<Backend, Failure> {
        let s = self.cfg.get("backend").unwrap_or("direct");
        Backend::parse(s).map_err(|_| Failure::Usage(format!("--backend: `{s}` is not one of direct, fft, riesz")))
    }

    fn field_out(&self, command: &str, provenance: &str, budget: &ErrorBudget, field: FieldOut) -> String {
        match self.format {
            Format::Csv => {
                // the budget rides along in the provenance header

                match field {
                    FieldOut::Scalar(f) => f.with_tag("method", provenance).to_csv(),
                    FieldOut::Vector(mut v) => {
                        v.provenance.insert("method".into(), provenance.into());
                        v.to_csv()
                    }
                }
            }
            Format::Json => {
                let raw = match field {
                    FieldOut::Scalar(f) => f.to_json(),
                    FieldOut::Vector(v) => v.to_json(),
                };
                let v: Value = serde_json::from_str(&raw).expect("field json");
                self.envelope(command, provenance, Some(budget), v)
            }
        }
    }
}

enum FieldOut {
    Scalar(ScalarField),
    Vector(VectorField),
}

fn csv_table<T: std::fmt::Display>(rows: &[(&str, T)]) -> String {
    let mut s = String::from("quantity,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<String, Failure> {
    let flags = cli.opts.to_config()?;
    let cfg = match &cli.opts.config {
        Some(p) => RunConfig::load(p)?.overlay(&flags),
        None => flags,
    };
    if let Some(p) = &cli.opts.save_config {
        std::fs::write(p, cfg.to_text()).map_err(|e| Failure::Usage(format!("--save-config {}: {e}", p.display())))?;
    }
    set_threads(&cfg)?;
    let format = match cfg.get("out").unwrap_or("json") {
        "json" => Format::Json,
        "csv" => Format::Csv,
        o => return Err(Failure::Usage(format!("--out: `{o}` is not one of json, csv"))),
    };
    let ctx = Ctx { cfg, format };
    let cfg = &ctx.cfg;

    let text = match &cli.command {
        Command::Gradient => {
            let alpha = ctx.alpha()?;
            let f = ctx.shape_or_function()?;
            let backend = ctx.backend()?;
            let (g, b) = frac_gradient(&f, alpha, &backend).map_err(lib_err("alpha"))?;
            ctx.field_out("gradient", &format!("{:?}", backend.kind).to_lowercase(), &b, FieldOut::Vector(g))
        }
        Command::Divergence => {
            let alpha = ctx.alpha()?;
            let f = ctx.function_field("gaussian")?;
            let n = f.grid.n;
            let dir = match cfg.list("direction")? {
                Some(d) => d,
                None => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
            };
            let phi = VectorField::from_scalar(&f, &dir).map_err(lib_err("direction"))?;
            let backend = ctx.backend()?;
            let (d, b) = frac_divergence(&phi, alpha, &backend).map_err(lib_err("alpha"))?;
            ctx.field_out("divergence", &format!("{:?}", backend.kind).to_lowercase(), &b, FieldOut::Scalar(d))
        }
        Command::Laplacian | Command::Riesz => {
            let s = cfg.f64("s")?.unwrap_or(0.5);
            let f = ctx.function_field("gaussian")?;
            let (name, (out, b)) = if matches!(cli.command, Command::Laplacian) {
                ("laplacian", frac_laplacian(&f, s).map_err(lib_err("s"))?)
            } else {
                ("riesz", riesz_potential(&f, s).map_err(lib_err("s"))?)
            };
            ctx.field_out(name, "fft", &b, FieldOut::Scalar(out))
        }
        Command::Perimeter => {
            let alpha = ctx.alpha()?;
            let shape = inputs::parse_shape(cfg.get("shape").ok_or_else(|| Failure::Usage("--shape is required for perimeter".into()))?)?;
            let omega = match cfg.list("window")? {
                Some(w) => {
                    let n = shape.dim();
                    if w.len() != 2 * n {
                        return Err(Failure::Usage(format!("--window: expected {} numbers (lo,hi per axis)", 2 * n)));
                    }
                    let lo: Vec<f64> = (0..n).map(|d| w[2 * d]).collect();
                    let hi: Vec<f64> = (0..n).map(|d| w[2 * d + 1]).collect();
                    Some(BoundedRegion::cube(&lo, &hi).map_err(lib_err("window"))?)
                }
                None => None,
            };
            let h = cfg.f64("h")?.unwrap_or(1.0 / 512.0);
            let r = match cfg.get("method").unwrap_or("auto") {
                "auto" => frac_perimeter(&shape, alpha, omega.as_ref(), h),
                "exact" if omega.is_none() => frac_perimeter_exact(&shape, alpha),
                "exact" => return Err(Failure::Usage("--method: exact needs the whole space (drop --window)".into())),
                "grid" => frac_perimeter_grid(&shape, alpha, omega.as_ref(), h),
                m => return Err(Failure::Usage(format!("--method: `{m}` is not one of auto, exact, grid"))),
            }
            .map_err(lib_err("alpha"))?;
            match format {
                Format::Json => ctx.envelope("perimeter", &r.method, None, json!(r)),
                Format::Csv => csv_table(&[("value", r.value), ("error_estimate", r.error_estimate)]),
            }
        }
        Command::Variation => {
            let alpha = ctx.alpha()?;
            let f = ctx.shape_or_function()?;
            let r = frac_variation(&f, alpha, None).map_err(lib_err("alpha"))?;
            match format {
                Format::Json => ctx.envelope("variation", &format!("{:?}", r.method).to_lowercase(), Some(&r.budget), json!(r)),
                Format::Csv => csv_table(&[("value", r.value), ("budget", r.budget.total())]),
            }
        }
        Command::Coarea => {
            let alpha = ctx.alpha()?;
            let f = ctx.function_field("bump")?;
            let levels = cfg.usize("levels")?.unwrap_or(64);
            if levels == 0 {
                return Err(Failure::Usage("--levels: must be at least 1".into()));
            }
            let r = coarea_integral(&f, alpha, levels, None).map_err(lib_err("alpha"))?;
            let rows = [("level_total", r.level_total), ("variation", r.variation), ("relative_l1_gap", r.relative_l1_gap)];
            match format {
                Format::Json => ctx.envelope(
                    "coarea",
                    "adjoint",
                    None,
                    json!({
                        "levels": r.levels.len(),
                        "level_total": r.level_total,
                        "variation": r.variation,
                        "relative_l1_gap": r.relative_l1_gap,
                        "skipped": r.skipped,
                    }),
                ),
                Format::Csv => csv_table(&rows),
            }
        }
        Command::Verify { suite } => {
            let sc = SuiteConfig { alpha: cfg.f64("alpha")?, h: cfg.f64("h")?, n: cfg.usize("dim")? };
            let reports = if suite == "all" {
                suites::run_all(&sc, None)
            } else {
                vec![suites::run_suite(suite, &sc).map_err(|e| match e {
                    FracError::UnknownSuite(s) => Failure::Usage(format!("verify: unknown suite `{s}` (see `fracbv suites`)")),
                    e => Failure::Usage(e.to_string()),
                })?]
            };
            let text = match format {
                Format::Json => reports_to_json(&reports),
                Format::Csv => reports_to_csv(&reports),
            };
            if reports.iter().any(|r| r.status == Status::Fail) {
                emit(cfg, &text)?;
                return Err(Failure::Suites);
            }
            text
        }
        Command::Blowup => blowup(&ctx)?,
        Command::Constants => constants_table(&ctx)?,
        Command::Suites => suites::suite_ids().iter().map(|s| format!("{s}\n")).collect(),
    };
    emit(cfg, &text)?;
    Ok(text)
}

fn blowup(ctx: &Ctx) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let alpha = ctx.alpha()?;
    let shape = inputs::parse_shape(cfg.get("shape").ok_or_else(|| Failure::Usage("--shape is required for blowup".into()))?)?;
    let point = cfg.list("point")?.ok_or_else(|| Failure::Usage("--point is required for blowup".into()))?;
    if point.len() != shape.dim() {
        return Err(Failure::Usage(format!("--point: expected {} coordinates", shape.dim())));
    }
    let radii = cfg.list("radii")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::Usage("--radii: positive and strictly decreasing".into()));
    }
    let mut policy = GridPolicy::default();
    if let Some(w) = cfg.f64("half_width")? {
        policy.half_width = w;
    }
    if let Some(h) = cfg.f64("h")? {
        policy.h = h;
    }
    let trace = match cfg.list("windows")? {
        Some(w) => tangent_convergence(&shape, &point, alpha, &radii, &w, &policy),
        None => frac_normal_trace(&shape, &point, alpha, &radii, &policy),
    }
    .map_err(lib_err("alpha"))?;
    let decay = decay_profile(&shape, &point, alpha, &radii, &policy).map_err(lib_err("alpha"))?;
    Ok(match ctx.format {
        Format::Json => ctx.envelope("blowup", "adjoint", None, json!({ "trace": trace, "decay": decay })),
        Format::Csv => format!("{}\n{}", trace.to_csv(), decay.to_csv()),
    })
}

fn constants_table(ctx: &Ctx) -> Result<String, Failure> {
    let cfg = &ctx.cfg;
    let n = cfg.usize("dim")?.unwrap_or(1);
    let alpha = ctx.alpha()?;
    let e = lib_err("alpha");
    let mut m: BTreeMap<String, f64> = BTreeMap::new();
    m.insert("mu".into(), constants::mu(n, alpha).map_err(&e)?);
    m.insert("nu".into(), constants::nu(n, alpha).map_err(&e)?);
    m.insert("omega".into(), constants::omega(n));
    let unit = BoundedRegion::ball(&vec![0.0; n], 1.0).map_err(&e)?;
    m.insert("riesz_tail_bound_unit_ball".into(), constants::riesz_tail_bound(n, alpha, &unit).map_err(&e)?);
    m.insert("c_div_sup_unit_ball".into(), constants::c_div_sup_constant(n, alpha, &unit).map_err(&e)?);
    if n <= 2 {
        let g = constants::gamma_translation_constant(n, alpha).map_err(&e)?;
        m.insert("gamma_translation".into(), g.value);
        m.insert("gamma_translation_error".into(), g.error_estimate);
        m.insert("gamma_translation_closed_bound".into(), g.closed_bound);
        let beta = cfg.f64("beta")?.unwrap_or(alpha / 2.0);
        if !(beta > 0.0 && beta < alpha) {
            return Err(Failure::Usage(format!("--beta: {beta} outside admissible range (0,{alpha})")));
        }
        m.insert("embedding".into(), constants::embedding_constant(n, alpha, beta).map_err(lib_err("beta"))?);
        let d = constants::decay_constants(n, alpha).map_err(&e)?;
        m.insert("decay_a".into(), d.a);
        m.insert("decay_b".into(), d.b);
        m.insert("unit_ball_perimeter".into(), d.unit_ball_perimeter);
    }
    Ok(match ctx.format {
        Format::Json => ctx.envelope("constants", "closed_form+quadrature", None, json!(m)),
        Format::Csv => {
            let rows: Vec<(&str, f64)> = m.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            csv_table(&rows)
        }
    })
}

fn set_threads(cfg: &RunConfig) -> Result<(), Failure> {
    let from_env = match std::env::var("FRACBV_THREADS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| Failure::Usage(format!("FRACBV_THREADS: `{v}` is not a positive integer")))?),
        Err(_) => None,
    };
    let Some(t) = cfg.usize("threads")?.or(from_env) else { return Ok(()) };
    if t == 0 {
        return Err(Failure::Usage("--threads: must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = t;
    Ok(())
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match cfg.get("output") {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("--output {p}: {e}"))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Usage(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Suites) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
