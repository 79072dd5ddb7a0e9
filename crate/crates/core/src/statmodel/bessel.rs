//! Modified Bessel functions needed by the RiIG density and its moment fit.

use std::f64::consts::PI;

/// ln K_{3/2}(z) for z > 0, from the closed form
/// K_{3/2}(z) = sqrt(pi / (2z)) e^{-z} (1 + 1/z).
pub fn ln_k3_2(z: f64) -> f64 {
    0.5 * (PI / (2.0 * z)).ln() - z + (1.0 / z).ln_1p()
}

/// ln I_0(x), accurate to about 1e-12 relative; even in x.
pub fn ln_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        // Power series sum (x^2/4)^k / (k!)^2; all terms positive.
        let q = 0.25 * x * x;
        let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0f64);
        loop {
            k += 1.0;
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum.ln()
    } else {
        // Hankel asymptotic expansion: I0(x) ~ e^x / sqrt(2 pi x) sum a_k / x^k.
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..=10 {
            let c = (2 * k - 1) as f64;
            term *= c * c / (8.0 * k as f64 * x);
            sum += term;
        }
        x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
    }
}

/// e^x K_0(x) for x > 0 (polynomial approximations, about 1e-7 relative).
pub fn k0_scaled(x: f64) -> f64 {
    if x <= 2.0 {
        let y = x * x / 4.0;
        let i0 = ln_i0(x).exp();
        let k0 = -(x / 2.0).ln() * i0
            + (-0.577_215_66
                + y * (0.422_784_20
                    + y * (0.230_697_56
                        + y * (0.034_885_90
                            + y * (0.002_626_98 + y * (0.000_107_50 + y * 0.000_007_4))))));
        k0 * x.exp()
    } else {
        let y = 2.0 / x;
        (1.253_314_14
            + y * (-0.078_323_58
                + y * (0.021_895_68
                    + y * (-0.010_624_46
                        + y * (0.005_878_72 + y * (-0.002_515_40 + y * 0.000_532_08))))))
            / x.sqrt()
    }
}
