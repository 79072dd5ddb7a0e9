use proptest::prelude::*;
use wcp_core::statmodel::*;

/// Adaptive Simpson quadrature, independent of the library's Gauss-Legendre cdf.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Integral over [0, inf) split into unit-ish pieces up to a far cutoff.
fn total_mass(f: &dyn Fn(f64) -> f64, cutoff: f64) -> f64 {
    let mut edges = vec![0.0];
    let mut x = 1e-3;
    while x < cutoff {
        edges.push(x);
        x *= 1.5;
    }
    edges.push(cutoff);
    edges.windows(2).map(|w| simpson(f, w[0], w[1], 1e-12)).sum()
}

#[test]
fn riig_density_integrates_to_one_on_grid() {
    for alpha in [1.0, 2.0, 4.0] {
        for beta_frac in [0.0, 0.5, -0.5] {
            for delta in [0.5, 1.0, 2.0] {
                let p = RiIGParams::new(alpha, beta_frac * alpha, delta).unwrap();
                let f = |r: f64| riig_pdf(r, &p).unwrap();
                let cutoff = 60.0 * p.second_moment().sqrt() + 10.0;
                let mass = total_mass(&f, cutoff);
                assert!((mass - 1.0).abs() < 1e-6, "{p:?}: {mass}");
                let cdf = riig_cdf(cutoff, &p).unwrap();
                assert!((cdf - 1.0).abs() < 1e-6, "{p:?}: cdf {cdf}");
            }
        }
    }
}

#[test]
fn riig_named_cases_integrate_to_one() {
    for (a, b, d) in [(2.0, 0.0, 1.0), (4.0, 2.0, 0.5)] {
        let p = RiIGParams::new(a, b, d).unwrap();
        let mass = total_mass(&|r| riig_pdf(r, &p).unwrap(), 80.0);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
}

#[test]
fn riig_cdf_matches_quadrature_oracle() {
    let p = RiIGParams::new(4.0, 2.0, 0.5).unwrap();
    for x in [0.05, 0.3, 1.0, 2.2] {
        let want = total_mass(&|r| if r <= x { riig_pdf(r, &p).unwrap() } else { 0.0 }, x);
        let got = riig_cdf(x, &p).unwrap();
        assert!((got - want).abs() < 1e-8, "x={x}: {got} vs {want}");
    }
}

#[test]
fn nakagami_density_integrates_to_one_on_grid() {
    for m in [0.5, 1.0, 3.0] {
        for omega in [0.5, 1.0, 4.0] {
            let p = NakagamiParams::new(m, omega).unwrap();
            let mass = total_mass(&|r| nakagami_pdf(r, &p).unwrap(), 30.0 * omega.sqrt());
            assert!((mass - 1.0).abs() < 1e-6, "{p:?}: {mass}");
        }
    }
}

#[test]
fn nakagami_rayleigh_value_and_origin() {
    let p = NakagamiParams::new(1.0, 2.0).unwrap();
    assert!((nakagami_pdf(1.0, &p).unwrap() - (-0.5f64).exp()).abs() < 1e-14);
    assert_eq!(nakagami_pdf(0.0, &NakagamiParams::new(3.0, 1.0).unwrap()).unwrap(), 0.0);
    let half = nakagami_pdf(0.0, &NakagamiParams::new(0.5, 1.0).unwrap()).unwrap();
    assert!(half > 0.0 && half.is_finite());
}

#[test]
fn riig_samples_follow_the_density() {
    let p = RiIGParams::new(2.0, 0.8, 1.0).unwrap();
    let mut x = riig_sample(&p, 100_000, 5).unwrap();
    x.sort_by(f64::total_cmp);
    let cdf = riig_cdf_sorted(&x, &p).unwrap();
    let d = ks_statistic_sorted(&x, &cdf).unwrap();
    assert!(d < 0.01, "KS {d}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn riig_fit_recovers_delta() {
    let p = RiIGParams::new(2.0, 0.0, 1.0).unwrap();
    let errs: Vec<f64> = (0..20)
        .map(|seed| {
            let x = riig_sample(&p, 100_000, 1000 + seed).unwrap();
            let f = fit_riig_detailed(&x).unwrap();
            assert!(f.log_likelihood >= f.initial_log_likelihood);
            (f.params.delta - 1.0).abs()
        })
        .collect();
    let med = median(errs.clone());
    assert!(med < 0.1, "median delta error {med}; all {errs:?}");
}

#[test]
fn nakagami_fit_recovers_rayleigh() {
    let p = NakagamiParams::new(1.0, 2.0).unwrap();
    let ms: Vec<f64> = (0..20)
        .map(|seed| fit_nakagami(&nakagami_sample(&p, 100_000, seed).unwrap()).unwrap().m)
        .collect();
    for m in &ms {
        assert!((0.95..=1.05).contains(m), "{m}");
    }
}

#[test]
fn ks_on_quantile_grid_is_small() {
    let p = NakagamiParams::new(2.0, 1.0).unwrap();
    let n = 1000;
    // Quantiles by bisection on the model cdf.
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            let target = (i as f64 + 0.5) / n as f64;
            let (mut lo, mut hi) = (0.0, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if nakagami_cdf(mid, &p).unwrap() < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let d = ks_statistic(&xs, |x| nakagami_cdf(x, &p).unwrap()).unwrap();
    assert!(d <= 1.0 / n as f64 + 1e-9, "{d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_invariant_under_increasing_maps(xs in prop::collection::vec(0.01f64..5.0, 1..60)) {
        let cdf = |x: f64| 1.0 - (-x).exp();
        let d0 = ks_statistic(&xs, |x| if x <= 0.0 { 0.0 } else { cdf(x) }).unwrap();
        // y = x^3 + x, strictly increasing; the model cdf is composed with its inverse.
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x + x).collect();
        let inv = |y: f64| {
            let (mut lo, mut hi) = (0.0f64, 10.0f64);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m * m * m + m < y { lo = m } else { hi = m }
            }
            0.5 * (lo + hi)
        };
        let d1 = ks_statistic(&ys, |y| if y <= 0.0 { 0.0 } else { cdf(inv(y)) }).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9);
    }

    #[test]
    fn pp_transform_is_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!(a < b);
        prop_assert!(pp_transform(a).unwrap() < pp_transform(b).unwrap());
    }

    #[test]
    fn kl_is_nonnegative(
        raw in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 2..40)
    ) {
        let width = 0.1;
        let (e, m): (Vec<f64>, Vec<f64>) = raw.into_iter().unzip();
        let se: f64 = e.iter().sum::<f64>() * width;
        let sm: f64 = m.iter().sum::<f64>() * width;
        prop_assume!(se > 0.0);
        let e: Vec<f64> = e.iter().map(|v| v / se).collect();
        let m: Vec<f64> = m.iter().map(|v| v / sm).collect();
        let kl = kl_divergence_grid(&e, &m, width, KlMode::Strict).unwrap();
        prop_assert!(kl >= -1e-9);
        prop_assert!(kl_divergence_grid(&e, &e, width, KlMode::Strict).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nakagami_fit_is_scale_homogeneous(seed in 0u64..50, c in 0.1f64..10.0) {
        let p = NakagamiParams::new(1.7, 1.0).unwrap();
        let x = nakagami_sample(&p, 200, seed).unwrap();
        let a = fit_nakagami(&x).unwrap();
        let b = fit_nakagami(&x.iter().map(|v| v * c).collect::<Vec<_>>()).unwrap();
        prop_assert!((b.omega - c * c * a.omega).abs() < 1e-9 * b.omega);
        prop_assert!((b.m - a.m).abs() < 1e-9 * a.m);
    }

    #[test]
    fn pdfs_are_nonnegative(r in 0.0f64..50.0, alpha in 0.1f64..10.0, bf in -0.9f64..0.9, delta in 0.05f64..5.0) {
        let p = RiIGParams::new(alpha, bf * alpha, delta).unwrap();
        let v = riig_pdf(r, &p).unwrap();
        prop_assert!(v >= 0.0 && v.is_finite());
    }
}
