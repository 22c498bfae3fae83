//! Revivals in finite-ring time series.
//!
//! After a quench the nearest-neighbour signal oscillates, collapses as the
//! quasi-particles spread, and reappears once they have crossed the ring.  The
//! detector tracks the peak-to-peak amplitude in a sliding window centred on
//! each cycle, waits for it to collapse, and reports the cycle where it peaks
//! again.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevivalOptions {
    /// Width of the sliding window, in cycles.
    pub window: usize,
    /// Collapse means the amplitude fell below this fraction of its initial value.
    pub collapse_fraction: f64,
    /// The revival peak must exceed the post-collapse floor by this factor.
    pub min_contrast: f64,
}

impl Default for RevivalOptions {
    fn default() -> Self {
        Self {
            window: 20,
            collapse_fraction: 0.1,
            min_contrast: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub collapse_cycle: usize,
    pub revival_cycle: usize,
    pub initial_amplitude: f64,
    pub revival_amplitude: f64,
}

/// Peak-to-peak amplitude in a window of `window` cycles centred on each cycle
/// (truncated at the ends).
pub fn windowed_amplitude(series: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..series.len())
        .map(|n| {
            let lo = n.saturating_sub(half);
            let hi = (n + window - half).min(series.len());
            let slice = &series[lo..hi];
            let max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = slice.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .collect()
}

/// First revival of a stroboscopic series, or `None` if the signal never
/// collapses or never comes back.
pub fn detect_revival(series: &[f64], options: &RevivalOptions) -> Option<Revival> {
    let w = options.window.max(2);
    if series.len() < 3 * w {
        return None;
    }
    let amplitude = windowed_amplitude(series, w);
    let initial = {
        let head = &series[..w];
        head.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - head.iter().copied().fold(f64::INFINITY, f64::min)
    };
    if initial <= 0.0 {
        return None;
    }
    let usable = series.len() - (w - w / 2);
    let collapse = (w..usable).find(|&n| amplitude[n] < options.collapse_fraction * initial)?;
    let (peak, peak_value) = (collapse..usable)
        .map(|n| (n, amplitude[n]))
        .fold((collapse, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    let floor = amplitude[collapse..peak.max(collapse + 1)]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if peak_value < options.min_contrast * floor || peak_value <= 0.0 {
        return None;
    }
    Some(Revival {
        collapse_cycle: collapse,
        revival_cycle: peak,
        initial_amplitude: initial,
        revival_amplitude: peak_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(n: usize, centre: f64, width: f64) -> f64 {
        let x = (n as f64 - centre) / width;
        (-x * x).exp() * (0.9 * n as f64).sin()
    }

    #[test]
    fn finds_planted_revival() {
        let series: Vec<f64> = (0..600).map(|n| burst(n, 0.0, 15.0) + 0.4 * burst(n, 400.0, 30.0)).collect();
        let r = detect_revival(&series, &RevivalOptions::default()).unwrap();
        assert!((r.revival_cycle as f64 - 400.0).abs() <= 10.0, "{r:?}");
        assert!(r.collapse_cycle < 100);
    }

    #[test]
    fn no_revival_in_pure_decay() {
        let series: Vec<f64> = (0..600).map(|n| burst(n, 0.0, 15.0)).collect();
        assert_eq!(detect_revival(&series, &RevivalOptions::default()), None);
    }

    #[test]
    fn constant_series_has_no_revival() {
        assert_eq!(detect_revival(&[0.3; 200], &RevivalOptions::default()), None);
    }
}
