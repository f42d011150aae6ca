//! Shape, function and grid selection from their text forms.

use fracbv::{AnalyticFn, GridSpec, ShapeSet};

use crate::config::{parse_list, usage, RunConfig, UsageError};

fn split_spec(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k.trim(), Some(v.trim())),
        None => (s.trim(), None),
    }
}

fn lib<T>(flag: &str, r: fracbv::Result<T>) -> Result<T, UsageError> {
    r.map_err(|e| UsageError(format!("--{flag}: {e}")))
}

pub fn parse_shape(s: &str) -> Result<ShapeSet, UsageError> {
    let (kind, args) = split_spec(s);
    let args = args.ok_or_else(|| UsageError(format!("--shape: `{kind}` needs parameters, e.g. interval:0,1")))?;
    match kind {
        "interval" => match parse_list("shape", args)?[..] {
            [a, b] => lib("shape", ShapeSet::interval(a, b)),
            _ => usage("--shape: interval takes a,b"),
        },
        "union" => {
            let mut iv = vec![];
            for part in args.split(';') {
                match parse_list("shape", part)?[..] {
                    [a, b] => iv.push((a, b)),
                    _ => return usage("--shape: union takes a,b;c,d;…"),
                }
            }
            lib("shape", ShapeSet::interval_union(&iv))
        }
        "ball" | "disk" => {
            let v = parse_list("shape", args)?;
            if !(2..=3).contains(&v.len()) {
                return usage("--shape: ball takes the centre coordinates then the radius");
            }
            let (c, r) = v.split_at(v.len() - 1);
            lib("shape", ShapeSet::ball(c, r[0]))
        }
        "cube" | "square" => {
            let v = parse_list("shape", args)?;
            if v.len() != 2 && v.len() != 4 {
                return usage("--shape: cube takes the low corner then the high corner");
            }
            let (lo, hi) = v.split_at(v.len() / 2);
            lib("shape", ShapeSet::cube(lo, hi))
        }
        "halfspace" => {
            let v = parse_list("shape", args)?;
            if !(2..=3).contains(&v.len()) {
                return usage("--shape: halfspace takes the unit normal then the offset");
            }
            let (n, o) = v.split_at(v.len() - 1);
            lib("shape", ShapeSet::half_space(n, o[0]))
        }
        _ => usage(format!("--shape: unknown shape `{kind}` (interval, union, ball, cube, halfspace)")),
    }
}

pub fn parse_fn(s: &str, dim: usize) -> Result<AnalyticFn, UsageError> {
    let (kind, args) = split_spec(s);
    let v = match args {
        Some(a) => parse_list("fn", a)?,
        None => vec![],
    };
    let origin = vec![0.0; dim];
    let centre_and = |v: &[f64], extra: usize| -> Result<(Vec<f64>, Vec<f64>), UsageError> {
        if v.len() < extra + 1 || v.len() > extra + 2 {
            return usage(format!("--fn: `{kind}` takes the centre coordinates then {extra} parameter(s)"));
        }
        let (c, p) = v.split_at(v.len() - extra);
        Ok((c.to_vec(), p.to_vec()))
    };
    match kind {
        "gaussian" if v.is_empty() => lib("fn", AnalyticFn::gaussian(&origin, 1.0)),
        "gaussian" => {
            let (c, p) = centre_and(&v, 1)?;
            lib("fn", AnalyticFn::gaussian(&c, p[0]))
        }
        "bump" if v.is_empty() => lib("fn", AnalyticFn::bump(&origin, 1.0)),
        "bump" => {
            let (c, p) = centre_and(&v, 1)?;
            lib("fn", AnalyticFn::bump(&c, p[0]))
        }
        "poly" => {
            let (c, p) = centre_and(&v, 2)?;
            if p[1] < 1.0 || p[1].fract() != 0.0 {
                return usage("--fn: poly power must be a positive integer");
            }
            lib("fn", AnalyticFn::polynomial_bump(&c, p[0], p[1] as u32))
        }
        _ => usage(format!("--fn: unknown function `{kind}` (gaussian, bump, poly)")),
    }
}

/// Dimension implied by the inputs: shape, window, --dim, function centre, else 1.
pub fn dimension(cfg: &RunConfig) -> Result<usize, UsageError> {
    if let Some(s) = cfg.get("shape") {
        return Ok(parse_shape(s)?.dim());
    }
    if let Some(w) = cfg.list("window")? {
        return Ok(w.len() / 2);
    }
    if let Some(n) = cfg.usize("dim")? {
        return Ok(n);
    }
    if let Some((kind, Some(args))) = cfg.get("fn").map(split_spec) {
        let k = parse_list("fn", args)?.len();
        let extra = if kind == "poly" { 2 } else { 1 };
        return Ok(k.saturating_sub(extra).max(1));
    }
    Ok(1)
}

/// Default box and spacing: the support padded by a quarter, resolved by
/// `cells` samples per feature length.
pub struct Fit {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub feature: f64,
    pub cells: f64,
}

impl Fit {
    pub fn of_fn(f: &AnalyticFn) -> Self {
        let c = f.center();
        let r = 1.25 * f.support_radius().unwrap_or(4.0 * f.min_feature());
        let cells = if c.len() == 1 { 16.0 } else { 8.0 };
        Fit { lo: c.iter().map(|x| x - r).collect(), hi: c.iter().map(|x| x + r).collect(), feature: f.min_feature(), cells }
    }

    pub fn of_shape(e: &ShapeSet) -> Option<Self> {
        let (lo, hi) = e.bounding_box()?;
        let pad = 0.25 * lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let cells = if lo.len() == 1 { 64.0 } else { 16.0 };
        Some(Fit {
            lo: lo.iter().map(|x| x - pad).collect(),
            hi: hi.iter().map(|x| x + pad).collect(),
            feature: e.min_feature().unwrap_or(1.0),
            cells,
        })
    }
}

pub fn grid(cfg: &RunConfig, n: usize, fit: Option<&Fit>) -> Result<GridSpec, UsageError> {
    if !(1..=2).contains(&n) {
        return usage(format!("--dim: {n} not supported (1 or 2)"));
    }
    let w = match (cfg.list("window")?, fit) {
        (Some(w), _) => w,
        (None, Some(f)) => f.lo.iter().zip(&f.hi).flat_map(|(a, b)| [*a, *b]).collect(),
        (None, None) if n == 1 => vec![-4.0, 4.0],
        (None, None) => vec![-2.0, 2.0, -2.0, 2.0],
    };
    if w.len() != 2 * n {
        return usage(format!("--window: expected {} numbers (lo,hi per axis), got {}", 2 * n, w.len()));
    }
    let h = match (cfg.f64("h")?, fit) {
        (Some(h), _) => h,
        (None, Some(f)) => f.feature / f.cells,
        (None, None) => {
            if n == 1 {
                1.0 / 128.0
            } else {
                1.0 / 32.0
            }
        }
    };
    if !(h > 0.0) {
        return usage(format!("--h: {h} must be positive"));
    }
    let lo: Vec<f64> = (0..n).map(|d| w[2 * d]).collect();
    let hi: Vec<f64> = (0..n).map(|d| w[2 * d + 1]).collect();
    lib("window", GridSpec::window(&lo, &hi, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_parse() {
        assert_eq!(parse_shape("interval:0,1").unwrap(), ShapeSet::interval(0.0, 1.0).unwrap());
        assert_eq!(parse_shape("ball:0,0,1").unwrap().dim(), 2);
        assert_eq!(parse_shape("cube:-1,-1,1,1").unwrap().dim(), 2);
        assert!(parse_shape("triangle:0,1").is_err());
        assert!(parse_shape("interval").is_err());
    }

    #[test]
    fn functions_parse() {
        assert_eq!(parse_fn("gaussian", 2).unwrap().dim(), 2);
        assert_eq!(parse_fn("bump:0.5,2", 1).unwrap(), AnalyticFn::bump(&[0.5], 2.0).unwrap());
        assert!(parse_fn("poly:0,1,2.5", 1).is_err());
    }

    #[test]
    fn window_must_match_dimension() {
        let mut c = RunConfig::default();
        c.set("window", "-1,1").unwrap();
        assert!(grid(&c, 2, None).is_err());
        assert_eq!(grid(&c, 1, None).unwrap().n, 1);
    }
}
