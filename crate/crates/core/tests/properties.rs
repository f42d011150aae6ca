//! Invariants checked on randomly drawn parameters.

use std::f64::consts::PI;

use fracbv::constants::*;
use fracbv::fields::*;
use fracbv::measures::*;
use fracbv::operators::*;
use fracbv::oracles::*;
use fracbv::{BoundedRegion, ShapeSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Uniform noise, zero on the outer two layers (operators reject fields
/// whose support reaches the window edge).
fn noise(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = (grid.box_lo(), grid.box_hi());
    (0..grid.len())
        .map(|i| {
            let v = rng.random_range(-1.0..1.0);
            let x = grid.coord(i);
            let edge = (0..grid.n).any(|d| x[d] - lo[d] < 2.0 * grid.h || hi[d] - x[d] < 2.0 * grid.h);
            if edge {
                0.0
            } else {
                v
            }
        })
        .collect()
}

fn random_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::new(grid.clone(), noise(grid, rng)).unwrap()
}

fn random_vector(grid: &GridSpec, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::new(grid.clone(), (0..grid.n).map(|_| noise(grid, rng)).collect()).unwrap()
}

fn pair(grid: &GridSpec, a: &[f64], b: &[f64]) -> (f64, f64) {
    let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let m: f64 = a.iter().zip(b).map(|(x, y)| (x * y).abs()).sum();
    (s * grid.cell_volume(), m * grid.cell_volume())
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn mu_positive_nu_negative(n in 1usize..4, a in -0.99f64..0.99, b in 0.01f64..1.99) {
        prop_assert!(mu(n, a).unwrap() > 0.0);
        prop_assert!(nu(n, b).unwrap() < 0.0);
    }

    #[test]
    fn constants_are_bit_identical_on_repeat(n in 1usize..3, a in 0.05f64..0.95) {
        prop_assert_eq!(mu(n, a).unwrap().to_bits(), mu(n, a).unwrap().to_bits());
        prop_assert_eq!(nu(n, a).unwrap().to_bits(), nu(n, a).unwrap().to_bits());
        let u = BoundedRegion::ball(&vec![0.0; n], 1.0).unwrap();
        prop_assert_eq!(c_div_sup_constant(n, a, &u).unwrap().to_bits(), c_div_sup_constant(n, a, &u).unwrap().to_bits());
    }

    #[test]
    fn interval_closed_forms_scale_together(a in -3.0f64..3.0, len in 0.05f64..5.0, alpha in 0.05f64..0.95) {
        let p0 = interval_perimeter(0.0, 1.0, alpha).unwrap();
        let l0 = interval_gradient_l1(0.0, 1.0, alpha).unwrap();
        let s = len.powf(1.0 - alpha);
        let p = interval_perimeter(a, a + len, alpha).unwrap();
        let l = interval_gradient_l1(a, a + len, alpha).unwrap();
        prop_assert!((p / (p0 * s) - 1.0).abs() < 1e-12);
        prop_assert!((l / (l0 * s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollify_keeps_the_integral(c in -1.0f64..1.0, r in 0.4f64..1.5, k in 0u32..3) {
        let grid = GridSpec::window(&[-4.0], &[4.0], 1.0 / 128.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&[c], r).unwrap(), &grid).unwrap();
        let eps = 2f64.powi(-(k as i32)) * 0.25;
        let m = mollify(&f, eps).unwrap();
        prop_assert!((m.integral() - f.integral()).abs() <= 1e-12 * f.integral());
    }

    #[test]
    fn cutoff_is_idempotent_on_supported_fields(c in -1.0f64..1.0, s in 0.3f64..1.5, r in 2.6f64..4.0) {
        let grid = GridSpec::window(&[-8.0], &[8.0], 1.0 / 32.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&[c], s).unwrap(), &grid).unwrap();
        let once = cutoff_approximate(&f, r).unwrap();
        let twice = cutoff_approximate(&once, r).unwrap();
        prop_assert_eq!(once.values, twice.values);
    }

    #[test]
    fn rasterized_measure_is_close(a in -1.0f64..0.0, b in 0.2f64..1.0, cx in -0.3f64..0.3, r in 0.3f64..1.0) {
        let h = 1.0 / 64.0;
        let g1 = GridSpec::window(&[-2.0], &[2.0], h).unwrap();
        let iv = ShapeSet::interval(a, b).unwrap();
        let m = lp_norm(&rasterize_shape(&iv, &g1).unwrap(), 1.0, None).unwrap();
        // boundary proxy: two endpoints
        prop_assert!((m - (b - a)).abs() <= h * 2.0);
        let g2 = GridSpec::window(&[-2.0, -2.0], &[2.0, 2.0], h).unwrap();
        let disk = ShapeSet::ball(&[cx, 0.1], r).unwrap();
        let m = lp_norm(&rasterize_shape(&disk, &g2).unwrap(), 1.0, None).unwrap();
        prop_assert!((m - PI * r * r).abs() <= 2.0 * h * 2.0 * PI * r);
        let sq = ShapeSet::cube(&[cx - r, -r], &[cx + r, 0.5 * r]).unwrap();
        let m = lp_norm(&rasterize_shape(&sq, &g2).unwrap(), 1.0, None).unwrap();
        prop_assert!((m - sq.measure().unwrap()).abs() <= 2.0 * h * 5.0 * r);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn adjoint_identity_on_random_grids(seed in 0u64..10_000, two_d in any::<bool>(), alpha in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = if two_d {
            GridSpec::window(&[-1.0, -1.0], &[1.0, 1.0], 1.0 / 16.0).unwrap()
        } else {
            GridSpec::window(&[-2.0], &[2.0], 1.0 / 64.0).unwrap()
        };
        let f = random_field(&grid, &mut rng);
        let phi = random_vector(&grid, &mut rng);
        // the adjoint is the explicit transpose of the direct weights
        for backend in [Backend::direct(), Backend::direct().with_radius(0.5)] {
            let (div, _) = frac_divergence(&phi, alpha, &backend).unwrap();
            let g = adjoint_divergence(&f, alpha, &backend).unwrap();
            let (l, ls) = pair(&grid, &f.values, &div.values);
            let mut r = 0.0;
            let mut rs = 0.0;
            for d in 0..grid.n {
                let (a, b) = pair(&grid, &g.components[d], &phi.components[d]);
                r += a;
                rs += b;
            }
            prop_assert!((l + r).abs() <= 1e-12 * ls.max(rs), "{} vs {}", l, -r);
        }
    }

    #[test]
    fn translation_constant_below_closed_bound(alpha in 0.1f64..0.9) {
        let g = gamma_translation_constant(1, alpha).unwrap();
        prop_assert!(g.value <= g.closed_bound);
    }

    #[test]
    fn tail_bound_dominates_brute_force(a in -1.0f64..1.0, len in 0.2f64..3.0, r in 0.2f64..2.0, alpha in 0.1f64..0.9) {
        // 1-d: ∫_a^b |y−x|^{−α} dy = ((x−a)^{1−α} + (b−x)^{1−α})/(1−α)
        let u = BoundedRegion::cube(&[a], &[a + len]).unwrap();
        let best = (0..=200)
            .map(|k| {
                let x = a + len * k as f64 / 200.0;
                ((x - a).powf(1.0 - alpha) + (a + len - x).powf(1.0 - alpha)) / (1.0 - alpha)
            })
            .fold(0.0, f64::max);
        prop_assert!(best <= riesz_tail_bound(1, alpha, &u).unwrap());
        // 2-d disk: ∫_θ d(θ)^{1−α}/(1−α) dθ from each sample point
        let u = BoundedRegion::ball(&[0.0, 0.0], r).unwrap();
        let mut best: f64 = 0.0;
        for k in 0..=10 {
            let x = r * k as f64 / 10.0 * 0.999;
            let s: f64 = (0..720)
                .map(|j| {
                    let th = 2.0 * PI * (j as f64 + 0.5) / 720.0;
                    let c = x * th.cos();
                    let d = -c + (c * c + r * r - x * x).sqrt();
                    d.powf(1.0 - alpha) / (1.0 - alpha)
                })
                .sum::<f64>()
                * 2.0 * PI / 720.0;
            best = best.max(s);
        }
        prop_assert!(best <= riesz_tail_bound(2, alpha, &u).unwrap());
    }

    #[test]
    fn homogeneity_on_nested_grids(alpha in 0.1f64..0.9, c in -0.5f64..0.5) {
        let g1 = GridSpec::window(&[-8.0], &[8.0], 1.0 / 32.0).unwrap();
        let g2 = GridSpec::window(&[-4.0], &[4.0], 1.0 / 64.0).unwrap();
        let (a, _) = frac_gradient(&rasterize_fn(&AnalyticFn::gaussian(&[c], 1.0).unwrap(), &g1).unwrap(), alpha, &Backend::direct()).unwrap();
        let (b, _) = frac_gradient(&rasterize_fn(&AnalyticFn::gaussian(&[c / 2.0], 0.5).unwrap(), &g2).unwrap(), alpha, &Backend::direct()).unwrap();
        let s = 2f64.powf(alpha);
        let scale = b.max_norm();
        for i in 0..g1.len() {
            prop_assert!((b.components[0][i] - s * a.components[0][i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn variation_below_mu_times_gagliardo(c in -0.5f64..0.5, r in 0.5f64..1.2, alpha in 0.2f64..0.8) {
        let grid = GridSpec::window(&[-2.0], &[2.0], 1.0 / 128.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&[c], r).unwrap(), &grid).unwrap();
        let v = frac_variation(&f, alpha, None).unwrap().value;
        let bound = mu(1, alpha).unwrap() * gagliardo_seminorm(&f, alpha, 1.0).unwrap();
        prop_assert!(v <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn region_variation_is_monotone(c in -0.5f64..0.5, r1 in 0.2f64..1.0, dr in 0.05f64..0.8) {
        let grid = GridSpec::window(&[-3.0], &[3.0], 1.0 / 128.0).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&[c], 1.0).unwrap(), &grid).unwrap();
        let small = variation_on_region(&f, 0.5, &BoundedRegion::ball(&[0.0], r1).unwrap()).unwrap().total;
        let large = variation_on_region(&f, 0.5, &BoundedRegion::ball(&[0.0], r1 + dr).unwrap()).unwrap().total;
        prop_assert!(small <= large);
    }
}

#[test]
fn strict_margin_positive_across_alpha() {
    for k in 1..100 {
        let a = k as f64 / 100.0;
        let ratio = interval_gradient_l1(0.0, 1.0, a).unwrap() / (mu(1, a).unwrap() * interval_perimeter(0.0, 1.0, a).unwrap());
        assert!(1.0 - ratio > 0.0);
        assert!((1.0 - ratio - (1.0 - 2f64.powf(a - 1.0))).abs() < 1e-12);
    }
}

#[test]
fn pointwise_closed_form_integrates_to_l1() {
    // midpoint sum of |interval_gradient| with graded cells near the endpoints
    for a in [0.25, 0.5, 0.75] {
        let want = interval_gradient_l1(0.0, 1.0, a).unwrap();
        // samples that round onto an endpoint carry no weight
        let g = |x: f64| if x == 0.0 || x == 1.0 { 0.0 } else { interval_gradient(0.0, 1.0, a, x).unwrap().abs() };
        let mut s = 0.0;
        // |x − e| = t^{1/(1−α)·2}: graded both sides of each endpoint, out to 1e4
        let n = 20000;
        let p = 4.0 / (1.0 - a);
        for e in [0.0, 1.0] {
            for side in [-1.0, 1.0] {
                let span: f64 = if (e == 0.0) == (side > 0.0) { 0.5 } else { 1e4 };
                let u_max = span.powf(1.0 / p);
                for k in 0..n {
                    let u = u_max * (k as f64 + 0.5) / n as f64;
                    let d = u.powf(p);
                    let jac = p * u.powf(p - 1.0) * u_max / n as f64;
                    s += g(e + side * d) * jac;
                }
            }
        }
        // far tails beyond 1e4: |∇^α χ| ≈ μ(b−a)|x|^{−1−α}
        s += 2.0 * mu(1, a).unwrap() * 1e4f64.powf(-a) / a;
        assert!((s / want - 1.0).abs() < 5e-3, "a={a}: {s} vs {want}");
    }
}

#[test]
fn backends_agree_on_a_bump() {
    for (n, h) in [(1usize, 1.0 / 128.0), (2, 1.0 / 16.0)] {
        let grid = GridSpec::window(&vec![-3.0; n], &vec![3.0; n], h).unwrap();
        let f = rasterize_fn(&AnalyticFn::bump(&vec![0.1; n], 1.2).unwrap(), &grid).unwrap();
        let out: Vec<(VectorField, ErrorBudget)> =
            [Backend::direct(), Backend::riesz(), Backend::fft()].iter().map(|b| frac_gradient(&f, 0.5, b).unwrap()).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                let mut worst: f64 = 0.0;
                for d in 0..n {
                    for k in 0..grid.len() {
                        worst = worst.max((out[i].0.components[d][k] - out[j].0.components[d][k]).abs());
                    }
                }
                let allowed = 3.0 * (out[i].1.total() + out[j].1.total());
                assert!(worst <= allowed, "n={n} backends {i},{j}: {worst} > {allowed}");
            }
        }
    }
}

#[test]
fn direct_backend_refines_at_the_expected_order() {
    // interval closed form at probe points away from 0, ½, 1
    let alpha = 0.5;
    let probes = [-0.7, -0.3, 0.2, 0.35, 0.7, 0.85, 1.3, 1.6];
    let err = |h: f64| -> f64 {
        let grid = GridSpec::window(&[-2.0], &[3.0], h).unwrap();
        let chi = rasterize_shape(&ShapeSet::interval(0.0, 1.0).unwrap(), &grid).unwrap();
        let (g, _) = frac_gradient(&chi, alpha, &Backend::direct()).unwrap();
        probes
            .iter()
            .map(|&x| {
                let i = grid.nearest(&[x]).unwrap();
                let xi = grid.coord(i)[0];
                let want = interval_gradient(0.0, 1.0, alpha, xi).unwrap();
                ((g.components[0][i] - want) / want).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1.0 / 64.0), err(1.0 / 128.0));
    assert!(e1 / e2 >= 0.8 * 2f64.powf(1.0 - alpha), "{e1} -> {e2}");
}

#[test]
fn variation_matches_gradient_l1_for_smooth_fields() {
    let grid = GridSpec::window(&[-3.0], &[3.0], 1.0 / 128.0).unwrap();
    let f = rasterize_fn(&AnalyticFn::bump(&[0.0], 1.0).unwrap(), &grid).unwrap();
    let v = frac_variation(&f, 0.5, None).unwrap();
    // the whole-space variation includes the part of ∇^α f outside the
    // window: compare on the window only
    let win = grid.region();
    let vw = frac_variation(&f, 0.5, Some(&BoundedRegion::cube(&[-2.9], &[2.9]).unwrap())).unwrap().value;
    let (g, b) = frac_gradient(&f, 0.5, &Backend::direct()).unwrap();
    let inside: f64 = (0..grid.len()).filter(|&i| grid.coord(i)[0].abs() < 2.9).map(|i| g.components[0][i].abs()).sum::<f64>() * grid.h;
    assert!((vw - inside).abs() <= 3.0 * (b.total() * 6.0 + v.budget.total()), "{vw} vs {inside}");
    let _ = win;
}
