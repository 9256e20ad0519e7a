//! Polyphase rational resampling (upsample by L, lowpass, downsample by M)
//! with a Kaiser-windowed sinc, matching the classic `resample(x, p, q)`
//! design: 2·10·max(L,M)+1 taps at the intermediate rate, β = 5, cutoff at
//! the tighter of the two Nyquist limits, group delay compensated.

use std::f64::consts::PI;

/// Zeroth-order modified Bessel function of the first kind, by its power
/// series.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half_sq = (x / 2.0) * (x / 2.0);
    for k in 1..64 {
        term *= half_sq / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-16 {
            break;
        }
    }
    sum
}

fn kaiser(n: usize, taps: usize, beta: f64) -> f64 {
    let c = (taps - 1) as f64 / 2.0;
    let r = (n as f64 - c) / c;
    bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / bessel_i0(beta)
}

/// Resamples `x` by the rational factor `up / down`. Output length is
/// `ceil(len * up / down)`; samples past the input edges are treated as
/// zero.
pub fn resample(x: &[f64], up: usize, down: usize) -> Vec<f64> {
    assert!(up > 0 && down > 0);
    if x.is_empty() {
        return Vec::new();
    }
    let max_ratio = up.max(down);
    let taps = 2 * 10 * max_ratio + 1;
    let center = (taps - 1) / 2;
    let fc = 0.5 / max_ratio as f64; // cycles per intermediate sample

    let filter: Vec<f64> = (0..taps)
        .map(|n| {
            let m = n as f64 - center as f64;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * m).sin() / (PI * m)
            };
            up as f64 * sinc * kaiser(n, taps, 5.0)
        })
        .collect();

    let out_len = (x.len() * up).div_ceil(down);
    let mut y = Vec::with_capacity(out_len);
    for j in 0..out_len {
        // Intermediate-rate index, shifted by the filter delay.
        let t = j * down + center;
        let i_min = (t.saturating_sub(taps - 1)).div_ceil(up);
        let i_max = (t / up).min(x.len() - 1);
        let mut acc = 0.0;
        let mut i = i_min;
        while i <= i_max {
            acc += filter[t - i * up] * x[i];
            i += 1;
        }
        y.push(acc);
    }
    y
}
