use fracbv::suites::*;

fn check<'a>(r: &'a SuiteReport, name: &str) -> &'a Check {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name} in {}", r.suite_id))
}

#[test]
fn strict_interval_headline() {
    let r = run_suite("strict_interval", &SuiteConfig { alpha: Some(0.5), ..Default::default() }).unwrap();
    assert!(r.passed(), "{}", reports_to_json(std::slice::from_ref(&r)));
    let c = check(&r, "|D^a chi|<mu*P");
    assert!((c.measured - 2.2568).abs() < 1e-4);
    assert!((c.expected_or_bound - 3.1915).abs() < 1e-4);
    assert!(r.constants.contains_key("mu"));
}

#[test]
fn interval_scaling_ratio() {
    let r = run_suite("scaling_sets", &SuiteConfig { n: Some(1), ..Default::default() }).unwrap();
    assert!(r.passed());
    let c = check(&r, "n=1_ratio");
    assert!((c.measured / 2f64.sqrt() - 1.0).abs() < 0.01);
}

#[test]
fn reports_are_reproducible() {
    let keep = |id: &str| matches!(id, "ftc" | "translation" | "atom_pairing");
    let a = reports_to_json(&run_all(&SuiteConfig::default(), Some(&keep)));
    let b = reports_to_json(&run_all(&SuiteConfig::default(), Some(&keep)));
    assert_eq!(a, b);
    fracbv::par::set_sequential(true);
    let c = reports_to_json(&run_all(&SuiteConfig::default(), Some(&keep)));
    fracbv::par::set_sequential(false);
    assert_eq!(a, c);
}

#[test]
fn csv_has_one_row_per_check() {
    let keep = |id: &str| id == "ftc";
    let reports = run_all(&SuiteConfig::default(), Some(&keep));
    let csv = reports_to_csv(&reports);
    assert_eq!(csv.lines().count(), 1 + reports[0].checks.len());
    assert!(csv.starts_with("suite_id,check,"));
}

#[test]
fn registry_order_is_stable() {
    let ids = suite_ids();
    assert_eq!(ids.len(), 24);
    assert_eq!(ids[0], "duality");
    let mut seen = std::collections::BTreeSet::new();
    assert!(ids.iter().all(|i| seen.insert(*i)));
}
