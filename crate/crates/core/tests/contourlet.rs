use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcp_core::contourlet::{
    contourlet_decompose, contourlet_reconstruct, dfb_decompose, dfb_reconstruct,
    required_multiple, ContourletDecomposition,
};
use wcp_core::imagecore::{ImageGrid, ValueDomain};

fn random(side: usize, seed: u64) -> ImageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageGrid::from_fn(side, side, ValueDomain::Coefficient, |_, _| {
        rng.random_range(0.0..255.0)
    })
    .unwrap()
}

fn energy(g: &ImageGrid) -> f64 {
    g.data().iter().map(|v| v * v).sum()
}

fn all_coefficients(dec: &ContourletDecomposition) -> Vec<Vec<f64>> {
    let mut out = vec![dec.lowpass().data().to_vec()];
    out.extend(dec.bands().map(|(_, g)| g.data().to_vec()));
    out
}

#[test]
fn paper_spec_round_trip() {
    for seed in 0..3 {
        let img = random(256, seed);
        let dec = contourlet_decompose(&img, &[8, 8, 16, 32]).unwrap();
        let rec = contourlet_reconstruct(&dec).unwrap();
        let peak = img.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = img
            .data()
            .iter()
            .zip(rec.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err / peak < 1e-9, "seed {seed}: {err}");
    }
}

#[test]
fn band_counts_follow_spec() {
    let dec = contourlet_decompose(&random(256, 9), &[8, 8, 16, 32]).unwrap();
    assert_eq!(dec.level(3).unwrap().len(), 16);
    assert_eq!(dec.level(4).unwrap().len(), 32);
    let total: usize = dec.bands().map(|(_, g)| g.len()).sum::<usize>() + dec.lowpass().len();
    // The pyramid is overcomplete by the coarse bands only.
    assert_eq!(total, 256 * 256 + 128 * 128 + 64 * 64 + 32 * 32 + 16 * 16);
}

#[test]
fn constant_image_has_no_directional_energy() {
    let img = ImageGrid::filled(256, 256, 117.0, ValueDomain::RawU8).unwrap();
    let dec = contourlet_decompose(&img, &[8, 8, 16, 32]).unwrap();
    for ((l, d), g) in dec.bands() {
        assert!(g.data().iter().all(|v| v.abs() < 1e-9), "band ({l},{d})");
    }
}

#[test]
fn dfb_round_trip_and_critical_sampling() {
    let band = random(128, 4);
    let sb = dfb_decompose(&band, 8).unwrap();
    assert_eq!(sb.iter().map(|g| g.len()).sum::<usize>(), 16384);
    let rec = dfb_reconstruct(&sb, 128, 128).unwrap();
    let err = band
        .data()
        .iter()
        .zip(rec.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-9);
}

/// Frequency vector (row cycles, column cycles) at the centre of wedge `band`
/// of an `n`-direction filter bank, at radius about `radius` cycles.
fn wedge_centre(band: usize, n: usize, radius: f64) -> (i64, i64) {
    let h = n / 2;
    let b = (band % h) as f64;
    let slope = 1.0 - 2.0 * (b + 0.5) / h as f64;
    let major = radius / (1.0 + slope * slope).sqrt();
    if band < h {
        // Row/column slope runs from -1 up to +1 across the first half.
        let k2 = major.round() as i64;
        ((-slope * k2 as f64).round() as i64, k2)
    } else {
        let k1 = major.round() as i64;
        (k1, (slope * k1 as f64).round() as i64)
    }
}

fn wedge_share(side: usize, n: usize, band: usize) -> f64 {
    let (k1, k2) = wedge_centre(band, n, 0.3 * side as f64);
    let img = ImageGrid::from_fn(side, side, ValueDomain::Coefficient, |x, y| {
        (2.0 * PI * (k1 as f64 * y as f64 + k2 as f64 * x as f64) / side as f64).cos()
    })
    .unwrap();
    let sb = dfb_decompose(&img, n).unwrap();
    let e: Vec<f64> = sb.iter().map(energy).collect();
    e[band] / e.iter().sum::<f64>()
}

#[test]
fn oriented_sinusoid_lands_in_its_wedge() {
    for n in [4, 8] {
        for band in 0..n {
            let share = wedge_share(128, n, band);
            assert!(share >= 0.6, "{n} dirs, band {band}: share {share:.3}");
        }
    }
}

#[test]
fn narrow_wedges_capture_interior_directions() {
    // With 16 and 32 directions, wedges whose edge lies on a coarse split
    // boundary (slope 0 or +-1) share energy with the transition band of the
    // first two tree levels. Those get a looser check; all others the full one.
    for n in [16, 32] {
        let h = n / 2;
        let mut shares = Vec::new();
        for band in 0..n {
            let b = band % h;
            let share = wedge_share(128, n, band);
            let on_boundary = [0, h / 2 - 1, h / 2, h - 1].contains(&b);
            let floor = if on_boundary { 0.3 } else { 0.6 };
            assert!(share >= floor, "{n} dirs, band {band}: share {share:.3}");
            shares.push(share);
        }
        shares.sort_by(f64::total_cmp);
        assert!(shares[n / 2] >= 0.9, "{n} dirs: median share {:.3}", shares[n / 2]);
    }
}

#[test]
fn shift_by_sampling_period_permutes_coefficients() {
    let spec = [4, 8];
    let p = required_multiple(&spec).unwrap();
    let img = random(64, 21);
    let shifted = ImageGrid::from_fn(64, 64, ValueDomain::Coefficient, |x, y| {
        img.get((x + 64 - p) % 64, (y + 64 - 2 * p) % 64)
    })
    .unwrap();
    let a = all_coefficients(&contourlet_decompose(&img, &spec).unwrap());
    let b = all_coefficients(&contourlet_decompose(&shifted, &spec).unwrap());
    for (mut u, mut v) in a.into_iter().zip(b) {
        u.sort_by(f64::total_cmp);
        v.sort_by(f64::total_cmp);
        for (s, t) in u.iter().zip(&v) {
            assert!((s - t).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decomposition_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let spec = [4, 8];
        let x = random(32, seed);
        let y = random(32, seed + 7777);
        let combo = ImageGrid::from_fn(32, 32, ValueDomain::Coefficient, |i, j| {
            alpha * x.get(i, j) + beta * y.get(i, j)
        }).unwrap();
        let dx = all_coefficients(&contourlet_decompose(&x, &spec).unwrap());
        let dy = all_coefficients(&contourlet_decompose(&y, &spec).unwrap());
        let dc = all_coefficients(&contourlet_decompose(&combo, &spec).unwrap());
        for ((bx, by), bc) in dx.iter().zip(&dy).zip(&dc) {
            for ((u, v), w) in bx.iter().zip(by).zip(bc) {
                prop_assert!((alpha * u + beta * v - w).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_for_random_sizes(w in 5usize..70, h in 5usize..70, seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = ImageGrid::from_fn(w, h, ValueDomain::Coefficient, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let dec = contourlet_decompose(&img, &[2, 4, 8]).unwrap();
        let rec = contourlet_reconstruct(&dec).unwrap();
        prop_assert_eq!(rec.shape(), img.shape());
        for (a, b) in img.data().iter().zip(rec.data()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
