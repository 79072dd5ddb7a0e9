use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcp_core::imagecore::{BinaryMask, ImageGrid, ValueDomain};
use wcp_core::parametric::*;
use wcp_core::statmodel::{riig_moment_estimate, riig_sample, RiIGParams};

/// Signed field whose magnitudes are i.i.d. RiIG draws.
fn riig_field(side: usize, p: RiIGParams, seed: u64) -> ImageGrid {
    let amp = riig_sample(&p, side * side, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let data = amp
        .into_iter()
        .map(|a| if rng.random_bool(0.5) { a } else { -a })
        .collect();
    ImageGrid::new(side, side, data, ValueDomain::Coefficient).unwrap()
}

fn mean_and_cv(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt() / m)
}

#[test]
fn iid_field_map_centres_on_generating_delta() {
    let p = RiIGParams::new(2.0, 0.0, 1.0).unwrap();
    let g = riig_field(128, p, 1);
    let m = cp_image(&g, DEFAULT_WINDOW, MapModel::RiigDelta).unwrap();
    assert_eq!(m.grid.shape(), (128, 128));
    let (mean, _) = mean_and_cv(m.grid.data());
    assert!((mean - 1.0).abs() < 0.15, "mean delta {mean}");
    assert!(m.grid.data().iter().all(|&v| v > 0.0));
}

#[test]
fn stationary_field_map_is_locally_consistent() {
    let p = RiIGParams::new(1.0, 0.0, 0.5).unwrap();
    let m = cp_image(&riig_field(96, p, 2), DEFAULT_WINDOW, MapModel::RiigDelta).unwrap();
    let (_, cv) = mean_and_cv(m.grid.data());
    assert!(cv < 0.3, "cv {cv}");
}

#[test]
fn map_matches_brute_force_windows() {
    let p = RiIGParams::new(3.0, 0.0, 2.0).unwrap();
    let g = riig_field(24, p, 3);
    let m = cp_image(&g, 5, MapModel::RiigDelta).unwrap();
    let mut fallback_values = Vec::new();
    for y in 0..24 {
        for x in 0..24 {
            let mut win = Vec::new();
            for dy in -2isize..=2 {
                for dx in -2isize..=2 {
                    win.push(g.get_clamped(x as isize + dx, y as isize + dy).abs());
                }
            }
            let n = win.len() as f64;
            let m1 = win.iter().sum::<f64>() / n;
            let m2 = win.iter().map(|v| v * v).sum::<f64>() / n;
            let got = m.grid.get(x, y);
            let want = riig_moment_estimate(&win).unwrap().delta;
            if (got - want).abs() < 1e-8 * want {
                continue;
            }
            // Rayleigh-like windows have no moment solution and take the grid estimate.
            assert!(m1 * m1 / m2 >= 0.785, "({x},{y}): {got} vs {want}");
            fallback_values.push(got);
        }
    }
    assert_eq!(fallback_values.len(), m.fallbacks);
    assert!(fallback_values.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn sign_flips_do_not_change_the_map() {
    let p = RiIGParams::new(2.0, 0.5, 1.0).unwrap();
    let g = riig_field(40, p, 4);
    let flipped = ImageGrid::from_fn(40, 40, ValueDomain::Coefficient, |x, y| {
        if (x * 31 + y * 17) % 3 == 0 { -g.get(x, y) } else { g.get(x, y) }
    })
    .unwrap();
    for model in [MapModel::RiigDelta, MapModel::NakagamiM] {
        let a = cp_image(&g, 13, model).unwrap();
        let b = cp_image(&flipped, 13, model).unwrap();
        assert_eq!(a.grid, b.grid);
    }
}

#[test]
fn maps_are_bit_identical_across_runs() {
    let g = riig_field(64, RiIGParams::new(2.0, 0.0, 1.0).unwrap(), 5);
    let a = cp_image(&g, 13, MapModel::RiigDelta).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| cp_image(&g, 13, MapModel::RiigDelta).unwrap());
    assert_eq!(a.grid.data(), b.grid.data());
    let wa = wcp_image(&a, &g).unwrap();
    let wb = wcp_image(&b, &g).unwrap();
    assert_eq!(wa.data(), wb.data());
}

#[test]
fn full_mle_option_produces_positive_map() {
    let g = riig_field(20, RiIGParams::new(2.0, 0.0, 1.0).unwrap(), 6);
    let m = cp_image_with(
        &g,
        &CpOptions {
            window: 7,
            model: MapModel::RiigDelta,
            full_mle: true,
        },
    )
    .unwrap();
    assert!(m.grid.data().iter().all(|&v| v > 0.0 && v.is_finite()));
}

fn as_map(grid: ImageGrid) -> ParametricMap {
    ParametricMap {
        grid,
        model: MapModel::RiigDelta,
        window: 13,
        fallbacks: 0,
    }
}

#[test]
fn wcp_identity_annihilator_and_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sb = ImageGrid::from_fn(16, 16, ValueDomain::Coefficient, |_, _| rng.random_range(-5.0..5.0)).unwrap();
    let ones = as_map(ImageGrid::filled(16, 16, 1.0, ValueDomain::ParameterMap).unwrap());
    assert_eq!(wcp_image(&ones, &sb).unwrap().data(), sb.data());
    let zeros = as_map(ImageGrid::filled(16, 16, 0.0, ValueDomain::ParameterMap).unwrap());
    assert!(wcp_image(&zeros, &sb).unwrap().data().iter().all(|&v| v == 0.0));

    let cp = as_map(ImageGrid::from_fn(16, 16, ValueDomain::ParameterMap, |_, _| rng.random_range(0.1..3.0)).unwrap());
    let w = wcp_image(&cp, &sb).unwrap();
    for y in 0..16 {
        for x in 0..16 {
            assert_eq!(w.get(x, y), cp.grid.get(x, y) * sb.get(x, y));
        }
    }
    let wrong = ImageGrid::filled(8, 16, 1.0, ValueDomain::Coefficient).unwrap();
    assert!(wcp_image(&cp, &wrong).is_err());
}

#[test]
fn downsampled_disk_keeps_quarter_area() {
    let disk = BinaryMask::from_fn(128, 128, |x, y| {
        let (dx, dy) = (x as f64 - 63.5, y as f64 - 63.5);
        dx * dx + dy * dy <= 30.0 * 30.0
    })
    .unwrap();
    let half = roi_to_subband(&disk, 64, 64).unwrap();
    let ratio = half.count() as f64 / disk.count() as f64;
    assert!((ratio - 0.25).abs() < 0.025, "{ratio}");
    let (cx, cy) = half.centroid().unwrap();
    assert!((cx - 31.5).abs() < 0.5 && (cy - 31.5).abs() < 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wcp_is_bilinear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || ImageGrid::from_fn(9, 7, ValueDomain::Coefficient, |_, _| rng.random_range(-2.0..2.0)).unwrap();
        let (m1, m2, s) = (g(), g(), g());
        let combo = ImageGrid::from_fn(9, 7, ValueDomain::ParameterMap, |x, y| a * m1.get(x, y) + b * m2.get(x, y)).unwrap();
        let lhs = wcp_image(&as_map(combo), &s).unwrap();
        let r1 = weight(&m1, &s).unwrap();
        let r2 = weight(&m2, &s).unwrap();
        for i in 0..lhs.len() {
            prop_assert!((lhs.data()[i] - (a * r1.data()[i] + b * r2.data()[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn resampled_roi_is_never_empty(w in 1usize..40, h in 1usize..40, x in 0usize..100, y in 0usize..100) {
        let mut m = BinaryMask::empty(100, 100).unwrap();
        m.set(x, y, true);
        let r = roi_to_subband(&m, w, h).unwrap();
        prop_assert!(r.count() >= 1);
        prop_assert_eq!((r.width(), r.height()), (w, h));
    }
}
