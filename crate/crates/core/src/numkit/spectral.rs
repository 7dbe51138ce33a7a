use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// One-sided DFT magnitude spectrum of a real signal: bins 1..=N/2,
/// excluding the DC bin so constant offsets do not register. Direct
/// O(N^2) evaluation; signals here are a few hundred samples.
pub fn dft_magnitudes(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut mags = Vec::with_capacity(n / 2);
    for k in 1..=n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &x) in signal.iter().enumerate() {
            let phase = TAU * (k * t) as f64 / n as f64;
            re += x * phase.cos();
            im -= x * phase.sin();
        }
        mags.push((re * re + im * im).sqrt());
    }
    mags
}

/// Sum of the `k` largest non-DC magnitude bins of the one-sided
/// spectrum. Used as the oscillation score of a joint trajectory; the
/// caller sums scores across joints.
///
/// Requires `signal.len() >= 2k + 1` so that at least `k` bins exist.
pub fn vibration_metric(signal: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Argument("vibration_metric: k must be positive".into()));
    }
    if signal.len() < 2 * k + 1 {
        return Err(Error::Argument(format!(
            "vibration_metric: need at least {} samples for k = {}, got {}",
            2 * k + 1,
            k,
            signal.len()
        )));
    }
    let mut mags = dft_magnitudes(signal);
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(mags[..k].iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_tone_has_closed_form_magnitude() {
        // x_t = A sin(2 pi f t / N) concentrates all energy in bin f with
        // magnitude A N / 2.
        let n = 64;
        for (f, a) in [(3usize, 1.0), (7, 2.5), (20, 0.3)] {
            let signal: Vec<f64> = (0..n)
                .map(|t| a * (TAU * (f * t) as f64 / n as f64).sin())
                .collect();
            let mags = dft_magnitudes(&signal);
            assert_relative_eq!(mags[f - 1], a * n as f64 / 2.0, max_relative = 1e-9);
            for (i, m) in mags.iter().enumerate() {
                if i != f - 1 {
                    assert!(m.abs() < 1e-8, "bin {} leaked {}", i + 1, m);
                }
            }
            assert_relative_eq!(
                vibration_metric(&signal, 1).unwrap(),
                a * n as f64 / 2.0,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn constant_signal_scores_zero() {
        let signal = vec![3.25; 50];
        assert!(vibration_metric(&signal, 5).unwrap() < 1e-9);
    }

    #[test]
    fn dc_offset_does_not_change_score() {
        let n = 48;
        let base: Vec<f64> = (0..n)
            .map(|t| (TAU * (5 * t) as f64 / n as f64).sin() + 0.3 * (TAU * (11 * t) as f64 / n as f64).cos())
            .collect();
        let shifted: Vec<f64> = base.iter().map(|x| x + 17.0).collect();
        let a = vibration_metric(&base, 3).unwrap();
        let b = vibration_metric(&shifted, 3).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn sum_takes_the_largest_bins() {
        let n = 64;
        let signal: Vec<f64> = (0..n)
            .map(|t| {
                2.0 * (TAU * (4 * t) as f64 / n as f64).sin()
                    + 1.0 * (TAU * (9 * t) as f64 / n as f64).sin()
                    + 0.5 * (TAU * (13 * t) as f64 / n as f64).sin()
            })
            .collect();
        let k2 = vibration_metric(&signal, 2).unwrap();
        assert_relative_eq!(k2, (2.0 + 1.0) * n as f64 / 2.0, max_relative = 1e-8);
        let k3 = vibration_metric(&signal, 3).unwrap();
        assert_relative_eq!(k3, 3.5 * n as f64 / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn short_signals_are_rejected() {
        assert!(vibration_metric(&[0.0; 10], 5).is_err());
        assert!(vibration_metric(&[0.0; 11], 5).is_ok());
        assert!(vibration_metric(&[1.0, 2.0, 3.0], 0).is_err());
    }
}
