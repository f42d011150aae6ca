//! Blow-up behaviour of the fractional normal and the decay of the
//! variation measure at boundary points.

use fracbv::blowup::*;
use fracbv::constants::decay_constants;
use fracbv::ShapeSet;

fn disk() -> ShapeSet {
    ShapeSet::ball(&[0.0, 0.0], 1.0).unwrap()
}

const RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[test]
fn disk_decay_and_exponent() {
    let d = decay_profile(&disk(), &[1.0, 0.0], 0.5, &RADII, &GridPolicy::default()).unwrap();
    assert!(d.all_pass(), "{}", d.to_csv());
    let a = decay_constants(2, 0.5).unwrap().a;
    for row in &d.rows {
        assert!(row.total <= a * row.radius.powf(1.5));
    }
    let fit = d.exponent_fit.unwrap();
    assert!((fit - 1.5).abs() <= 0.15, "{fit}");
}

#[test]
fn disk_tangent_distances_shrink() {
    let t = tangent_convergence(&disk(), &[1.0, 0.0], 0.5, &RADII, &[0.5, 1.0, 2.0], &GridPolicy::default()).unwrap();
    let nu = t.tangent_normal.clone().unwrap();
    assert!(angle_deg(&nu, &[-1.0, 0.0]) < 0.5, "{nu:?}");
    for w in 0..3 {
        for k in 1..RADII.len() {
            assert!(t.l1_distances[k][w] < t.l1_distances[k - 1][w], "window {w}: {:?}", t.l1_distances);
        }
    }
    for n in t.normals.iter().flatten() {
        assert!(angle_deg(n, &[-1.0, 0.0]) < 2.0);
    }
}

#[test]
fn half_space_normal_is_constant() {
    let hs = ShapeSet::half_space(&[0.6, 0.8], 0.3).unwrap();
    let t = frac_normal_trace(&hs, &[0.18, 0.24], 0.5, &RADII, &GridPolicy::default()).unwrap();
    let first = t.normals[0].clone().unwrap();
    for n in t.normals.iter() {
        let n = n.as_ref().unwrap();
        assert!(angle_deg(n, &first) <= 2.0);
        assert!(angle_deg(n, &[0.6, 0.8]) <= 2.0);
    }
}

#[test]
fn interval_interior_point_has_positive_direction() {
    let iv = ShapeSet::interval(0.0, 1.0).unwrap();
    let pol = GridPolicy { half_width: 2.0, h: 1.0 / 256.0 };
    let t = frac_normal_trace(&iv, &[0.25], 0.5, &RADII, &pol).unwrap();
    for n in &t.normals {
        assert_eq!(n.as_deref(), Some(&[1.0][..]));
    }
}

#[test]
fn square_edge_tangent_is_the_edge_half_plane() {
    let sq = ShapeSet::cube(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let t = tangent_convergence(&sq, &[0.0, 1.0], 0.5, &[0.2, 0.1, 0.05], &[1.0], &GridPolicy::default()).unwrap();
    let nu = t.tangent_normal.unwrap();
    assert!(angle_deg(&nu, &[0.0, -1.0]) < 1.0, "{nu:?}");
    // below the corner scale the blow-up is exactly the half-plane
    assert!(t.l1_distances.last().unwrap()[0] < 1e-6, "{:?}", t.l1_distances);
}

#[test]
fn scaling_covariance_and_dilation_invariance() {
    // E at radius λr and x + (E − x)/λ at radius r blow up to the same set
    let lambda = 2.0;
    let x = [1.0, 0.0];
    let e = disk();
    let shrunk = ShapeSet::ball(&[1.0 - 1.0 / lambda, 0.0], 1.0 / lambda).unwrap();
    let radii = [0.2, 0.1];
    let big: Vec<f64> = radii.iter().map(|r| lambda * r).collect();
    let pol = GridPolicy::default();
    let a = frac_normal_trace(&e, &x, 0.5, &big, &pol).unwrap();
    let b = frac_normal_trace(&shrunk, &x, 0.5, &radii, &pol).unwrap();
    for k in 0..radii.len() {
        let want = lambda.powf(1.5) * b.totals[k];
        assert!((a.totals[k] / want - 1.0).abs() < 0.01, "{} vs {want}", a.totals[k]);
        let (na, nb) = (a.normals[k].as_ref().unwrap(), b.normals[k].as_ref().unwrap());
        assert!(angle_deg(na, nb) <= 2.0);
    }
}

#[test]
fn decay_bounds_across_orders() {
    let shapes: Vec<(ShapeSet, Vec<f64>, GridPolicy)> = vec![
        (ShapeSet::interval(0.0, 1.0).unwrap(), vec![0.0], GridPolicy { half_width: 2.0, h: 1.0 / 256.0 }),
        (disk(), vec![0.0, 1.0], GridPolicy::default()),
        (ShapeSet::cube(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(), vec![1.0, 0.3], GridPolicy::default()),
    ];
    for alpha in [0.25, 0.5, 0.75] {
        for (e, x, pol) in &shapes {
            let d = decay_profile(e, x, alpha, &[0.4, 0.2, 0.1], pol).unwrap();
            assert!(d.all_pass(), "alpha={alpha} {e:?}\n{}", d.to_csv());
        }
    }
}

#[test]
fn trace_serialises() {
    let iv = ShapeSet::interval(0.0, 1.0).unwrap();
    let pol = GridPolicy { half_width: 2.0, h: 1.0 / 128.0 };
    let t = frac_normal_trace(&iv, &[0.0], 0.5, &[0.5, 0.25], &pol).unwrap();
    let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(v["radii"].as_array().unwrap().len(), 2);
    assert!(t.to_csv().starts_with("radius,window,quantity,value"));
}
