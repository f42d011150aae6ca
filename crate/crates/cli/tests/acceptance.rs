//! Acceptance criteria, run through the `fracbv` binary. Each criterion
//! prints one PASS/FAIL line; the test fails if any criterion does.

use std::io::Write;
use std::process::Command;

use fracbv::constants::{decay_constants, mu};
use fracbv::oracles::{interval_gradient, interval_gradient_l1};
use serde_json::Value;

const H512: &str = "0.001953125";

fn fracbv(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fracbv")).args(args).env_remove("FRACBV_THREADS").output().expect("spawn fracbv");
    let stderr = String::from_utf8_lossy(&out.stderr);
    if !stderr.is_empty() {
        say(&format!("  fracbv {}: {stderr}", args.join(" ")));
    }
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8"))
}

fn json(args: &[&str]) -> Value {
    let (code, out) = fracbv(args);
    assert_eq!(code, 0, "fracbv {args:?} exited {code}");
    serde_json::from_str(&out).expect("json")
}

/// Goes straight to the stream so the lines survive output capture.
fn say(line: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, notes: vec![] }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(note.into());
        }
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn suite<'a>(reports: &'a Value, id: &str) -> &'a Value {
    reports.as_array().unwrap().iter().find(|r| r["suite_id"] == id).unwrap_or_else(|| panic!("no suite {id}"))
}

fn checks<'a>(s: &'a Value, prefix: &str) -> Vec<&'a Value> {
    s["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with(prefix)).collect()
}

/// Every check in the suite passes and at least `min` of them carry `prefix`.
fn suite_passes(v: &mut Verdict, reports: &Value, id: &str, prefix: &str, min: usize) {
    let s = suite(reports, id);
    v.check(s["status"] == "pass", format!("{id}: status {}", s["status"]));
    for c in checks(s, "") {
        v.check(
            c["pass"] == true,
            format!("{id}/{}: measured {} vs {} ± {}", c["name"], c["measured"], c["expected_or_bound"], c["tolerance"]),
        );
    }
    let k = checks(s, prefix).len();
    v.check(k >= min, format!("{id}: {k} `{prefix}` checks, wanted {min}"));
}

fn interval_perimeter(v: &mut Verdict) {
    for a in ["0.25", "0.5", "0.75"] {
        let alpha: f64 = a.parse().unwrap();
        let want = 4.0 / (alpha * (1.0 - alpha));
        let r = json(&["perimeter", "--shape", "interval:0,1", "--alpha", a, "--method", "grid", "--h", H512]);
        let got = f(&r["result"]["value"]);
        v.check(((got - want) / want).abs() <= 0.01, format!("alpha {a}: {got} vs {want}"));
    }
}

fn interval_gradient_probes(v: &mut Verdict) {
    let alpha = 0.5;
    let r = json(&["gradient", "--shape", "interval:0,1", "--alpha", "0.5", "--backend", "direct", "--h", H512, "--window", "-1,2"]);
    let g = &r["result"];
    let (o, h) = (f(&g["grid"]["origin"][0]), f(&g["grid"]["h"]));
    let vals: Vec<f64> = g["components"][0].as_array().unwrap().iter().map(f).collect();
    let at = |x: f64| -> (f64, f64) {
        let k = ((x - o) / h).round() as usize;
        (o + k as f64 * h, vals[k])
    };
    let probes: Vec<f64> = (0..20)
        .map(|k| match k {
            0..=4 => -0.9 + 0.2 * k as f64,
            5..=9 => 0.05 + 0.1 * (k - 5) as f64,
            10..=14 => 0.55 + 0.1 * (k - 10) as f64,
            _ => 1.05 + 0.2 * (k - 15) as f64,
        })
        .collect();
    let mut scale: f64 = 0.0;
    for &x in &probes {
        let (xi, got) = at(x);
        let d = [0.0, 0.5, 1.0].iter().map(|p| (xi - p).abs()).fold(f64::INFINITY, f64::min);
        v.check(d >= 0.05 - h, format!("probe {xi} too close to a singular point"));
        let want = interval_gradient(0.0, 1.0, alpha, xi).unwrap();
        scale = scale.max(want.abs());
        v.check(((got - want) / want).abs() <= 0.02, format!("x={xi}: {got} vs {want}"));
    }
    // ½ falls between two samples; interpolate
    let k = ((0.5 - o) / h).floor() as usize;
    let t = (0.5 - (o + k as f64 * h)) / h;
    let mid = (1.0 - t) * vals[k] + t * vals[k + 1];
    v.check(mid.abs() <= 1e-3 * scale, format!("value at 1/2: {mid}, scale {scale}"));
}

fn interval_variation(v: &mut Verdict, reports: &Value) {
    suite_passes(v, reports, "strict_interval", "", 5);
    let want = interval_gradient_l1(0.0, 1.0, 0.5).unwrap();
    let r = json(&["variation", "--shape", "interval:0,1", "--alpha", "0.5", "--h", H512, "--window", "-1,2"]);
    let got = f(&r["result"]["value"]);
    v.check(((got - want) / want).abs() <= 0.05, format!("grid variation {got} vs {want}"));
    let s = suite(reports, "strict_interval");
    let margin = checks(s, "measured_margin")[0];
    let analytic = 1.0 - 2f64.powf(0.5 - 1.0);
    v.check(f(&margin["measured"]) >= 0.9 * analytic, format!("margin {} vs {analytic}", margin["measured"]));
    let strict = checks(s, "|D^a chi|<mu*P")[0];
    let mu_p = mu(1, 0.5).unwrap() * 16.0;
    v.check((f(&strict["expected_or_bound"]) - mu_p).abs() <= 1e-9 * mu_p, "strict bound is not mu*P");
}

fn decay_and_blowup(v: &mut Verdict) {
    let r = json(&[
        "blowup",
        "--shape",
        "ball:0,0,1",
        "--point",
        "1,0",
        "--alpha",
        "0.5",
        "--radii",
        "0.2,0.1,0.05,0.025",
        "--windows",
        "0.5,1,2",
    ]);
    let a = decay_constants(2, 0.5).unwrap().a;
    let decay = &r["result"]["decay"];
    for row in decay["rows"].as_array().unwrap() {
        let (rad, tot) = (f(&row["radius"]), f(&row["total"]));
        v.check(tot <= a * rad.powf(1.5), format!("r={rad}: {tot} > A r^(n-a)"));
    }
    let fit = f(&decay["exponent_fit"]);
    v.check((fit - 1.5).abs() <= 0.15, format!("exponent fit {fit}"));
    let dist = r["result"]["trace"]["l1_distances"].as_array().unwrap();
    for w in 0..3 {
        for k in 1..dist.len() {
            v.check(f(&dist[k][w]) < f(&dist[k - 1][w]), format!("window {w}: distance rises at radius {k}"));
        }
    }
    let hs =
        json(&["blowup", "--shape", "halfspace:0.6,0.8,0.3", "--point", "0.18,0.24", "--alpha", "0.5", "--radii", "0.2,0.1,0.05,0.025"]);
    for n in hs["result"]["trace"]["normals"].as_array().unwrap() {
        let n: Vec<f64> = n.as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default();
        let ok = n.len() == 2 && {
            let c = (n[0] * 0.6 + n[1] * 0.8) / n[0].hypot(n[1]);
            c.clamp(-1.0, 1.0).acos().to_degrees() <= 2.0
        };
        v.check(ok, format!("half-space normal {n:?}"));
    }
}

#[test]
fn acceptance() {
    // verify all three times: default pool, one worker, eight workers
    let (code_a, run_a) = fracbv(&["verify", "all"]);
    let (code_b, run_b) = fracbv(&["verify", "all", "--threads", "1"]);
    let (code_c, run_c) = fracbv(&["verify", "all", "--threads", "8"]);
    let reports: Value = serde_json::from_str(&run_a).expect("verify json");

    let mut rows: Vec<(&str, Verdict)> = vec![];
    let mut run = |title: &'static str, body: &mut dyn FnMut(&mut Verdict)| {
        let mut v = Verdict::new();
        body(&mut v);
        rows.push((title, v));
    };
    run("interval perimeter within 1% at h=1/512", &mut |v| interval_perimeter(v));
    run("interval gradient at 20 probes within 2%", &mut |v| interval_gradient_probes(v));
    run("interval variation, strict inequality and margin", &mut |v| interval_variation(v, &reports));
    run("adjoint duality, exact and independent", &mut |v| suite_passes(v, &reports, "duality", "pair", 20));
    run("inversion and composition", &mut |v| {
        suite_passes(v, &reports, "inversion", "error_decreases", 2);
        suite_passes(v, &reports, "composition", "x=", 10);
    });
    run("fractional FTC at 10 point pairs", &mut |v| suite_passes(v, &reports, "ftc", "x=", 10));
    run("Leibniz rules and L1 bounds", &mut |v| {
        suite_passes(v, &reports, "leibniz_grad", "nl_l1", 2);
        suite_passes(v, &reports, "leibniz_div", "nl_l1", 2);
    });
    run("homogeneity and set scaling", &mut |v| {
        suite_passes(v, &reports, "homogeneity", "n=", 2);
        suite_passes(v, &reports, "scaling_sets", "n=", 2);
    });
    run("translation and mollifier estimates", &mut |v| {
        suite_passes(v, &reports, "translation", "y=", 5);
        suite_passes(v, &reports, "mollifier_distance", "eps=", 5);
        let g = checks(suite(&reports, "translation"), "gamma<=closed_bound")[0];
        v.check((f(&g["expected_or_bound"]) - 23.8564).abs() < 1e-4, format!("closed bound {}", g["expected_or_bound"]));
    });
    run("decay, exponent fit, tangents, half-space normal", &mut |v| decay_and_blowup(v));
    run("atom witness pairing against 5 fields", &mut |v| suite_passes(v, &reports, "atom_pairing", "", 5));
    run("property suites", &mut |v| {
        for id in ["gns", "isoperimetric", "embedding", "coarea", "lsc"] {
            suite_passes(v, &reports, id, "", 1);
        }
    });
    run("determinism across runs and thread counts", &mut |v| {
        v.check(code_a == 0 && code_b == 0 && code_c == 0, format!("exit codes {code_a} {code_b} {code_c}"));
        v.check(run_a == run_b, "default pool and one worker differ");
        v.check(run_b == run_c, "one and eight workers differ");
        v.check(!run_a.is_empty(), "empty output");
    });

    say("acceptance:");
    for (i, (title, v)) in rows.iter().enumerate() {
        say(&format!("  [{}] {:>2}. {title}", if v.pass { "PASS" } else { "FAIL" }, i + 1));
        for n in &v.notes {
            say(&format!("         {n}"));
        }
    }
    let failed: Vec<usize> = rows.iter().enumerate().filter(|(_, (_, v))| !v.pass).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
