//! Ergodicity of steady-state correlations.
//!
//! A steady-state measure `Q_S` is called ergodic when some Gibbs state of the
//! undriven chain at the time-averaged field `h̄ = (a + b)/2` reaches it, i.e.
//! when the horizontal line `Q_S` meets the curve `β̃ ↦ Q_G(h̄, β̃)`.  The score
//! is `η = max(0, Q_S − max_β̃ Q_G)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{
    steady_state_correlators, thermal_correlators, two_site_state, EvolutionError, QuadratureSettings,
    TwoSiteState,
};
use crate::floquet::golden_min;
use crate::measures::{concurrence, quantum_discord};
use crate::model::ModelParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgodicityError {
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("inverse-temperature grid must be increasing and positive")]
    InvalidGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    Concurrence,
    Discord,
}

impl Measure {
    pub fn evaluate(&self, state: &TwoSiteState) -> f64 {
        match self {
            Measure::Concurrence => concurrence(state),
            Measure::Discord => quantum_discord(state),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Concurrence => "concurrence",
            Measure::Discord => "discord",
        }
    }
}

pub fn averaged_field(params: &ModelParams) -> f64 {
    0.5 * (params.field_a + params.field_b)
}

/// Grid of Gibbs inverse temperatures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSettings {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Log-spaced points between the two.
    pub points: usize,
    pub quadrature: QuadratureSettings,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        Self {
            beta_min: 0.01,
            beta_max: 40.0,
            points: 400,
            quadrature: QuadratureSettings::default(),
        }
    }
}

impl GibbsSettings {
    pub fn betas(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (lo, hi) = (self.beta_min.ln(), self.beta_max.ln());
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCurve {
    pub field: f64,
    pub measure: Measure,
    pub points: Vec<(f64, f64)>,
    pub max_value: f64,
    pub beta_at_max: f64,
}

/// Measure of the Gibbs state of the undriven chain at `field` and `beta`.
pub fn gibbs_value(
    field: f64,
    beta: f64,
    measure: Measure,
    params: &ModelParams,
    quadrature: &QuadratureSettings,
) -> Result<f64, ErgodicityError> {
    let p = ModelParams {
        beta,
        ..params.undriven(field)
    };
    let c = thermal_correlators(&p, quadrature)?.value;
    Ok(measure.evaluate(&two_site_state(&c)?))
}

/// `Q_G(field, β̃)` on `betas`, with the maximum refined by golden section
/// between the neighbours of the largest grid value.  `params` supplies J and γ.
pub fn gibbs_curve(
    field: f64,
    betas: &[f64],
    measure: Measure,
    params: &ModelParams,
    quadrature: &QuadratureSettings,
) -> Result<GibbsCurve, ErgodicityError> {
    if betas.is_empty() || betas.windows(2).any(|w| w[1] <= w[0]) || betas[0] < 0.0 {
        return Err(ErgodicityError::InvalidGrid);
    }
    let values: Result<Vec<f64>, ErgodicityError> = betas
        .par_iter()
        .map(|&b| gibbs_value(field, b, measure, params, quadrature))
        .collect();
    let values = values?;
    let (imax, &vmax) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    let (mut beta_at_max, mut max_value) = (betas[imax], vmax);
    if imax > 0 && imax + 1 < betas.len() && vmax > 0.0 {
        let (b, neg) = golden_min(betas[imax - 1], betas[imax + 1], 1e-6 * betas[imax], |b| {
            -gibbs_value(field, b, measure, params, quadrature).unwrap_or(f64::NEG_INFINITY)
        });
        if -neg > max_value {
            beta_at_max = b;
            max_value = -neg;
        }
    }
    Ok(GibbsCurve {
        field,
        measure,
        points: betas.iter().copied().zip(values).collect(),
        max_value,
        beta_at_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub steady_value: f64,
    pub gibbs_max: f64,
    pub eta: f64,
    /// Inverse temperatures where the Gibbs curve crosses the steady value.
    pub intersections: Vec<f64>,
}

pub fn ergodicity_score(steady_value: f64, curve: &GibbsCurve) -> ErgodicityReport {
    let eta = (steady_value - curve.max_value).max(0.0);
    let mut intersections = Vec::new();
    for w in curve.points.windows(2) {
        let (b0, q0) = w[0];
        let (b1, q1) = w[1];
        let (d0, d1) = (q0 - steady_value, q1 - steady_value);
        if d0 == 0.0 {
            intersections.push(b0);
        } else if d0 * d1 < 0.0 {
            intersections.push(b0 + (b1 - b0) * d0 / (d0 - d1));
        }
    }
    if let Some(&(b, q)) = curve.points.last() {
        if q == steady_value {
            intersections.push(b);
        }
    }
    ErgodicityReport {
        steady_value,
        gibbs_max: curve.max_value,
        eta,
        intersections,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub period: f64,
    pub report: ErgodicityReport,
}

/// Steady-state value of `measure` for the drive in `params`.
pub fn steady_value(
    params: &ModelParams,
    measure: Measure,
    quadrature: &QuadratureSettings,
) -> Result<f64, ErgodicityError> {
    let c = steady_state_correlators(params, quadrature)?.value;
    Ok(measure.evaluate(&two_site_state(&c)?))
}

/// η for every drive period, against one Gibbs curve at `h̄`.
pub fn ergodicity_scan(
    params: &ModelParams,
    periods: &[f64],
    measure: Measure,
    gibbs: &GibbsSettings,
) -> Result<(GibbsCurve, Vec<ScanPoint>), ErgodicityError> {
    let curve = gibbs_curve(
        averaged_field(params),
        &gibbs.betas(),
        measure,
        params,
        &gibbs.quadrature,
    )?;
    let points: Result<Vec<ScanPoint>, ErgodicityError> = periods
        .par_iter()
        .map(|&period| {
            let p = ModelParams { period, ..*params };
            let q = steady_value(&p, measure, &gibbs.quadrature)?;
            Ok(ScanPoint {
                period,
                report: ergodicity_score(q, &curve),
            })
        })
        .collect();
    Ok((curve, points?))
}

/// First period, scanning upwards, at which η returns to zero after being
/// positive at the start of the scan.
pub fn critical_period(points: &[ScanPoint]) -> Option<f64> {
    let first = points.first()?;
    if first.report.eta <= 0.0 {
        return None;
    }
    points.iter().find(|p| p.report.eta <= 0.0).map(|p| p.period)
}

/// Largest η over a scan.
pub fn max_eta(points: &[ScanPoint]) -> f64 {
    points.iter().map(|p| p.report.eta).fold(0.0, f64::max)
}

/// Smallest field in `fields` (sorted ascending) from which every field on has
/// η = 0 for all measures, given `(b, max η per measure)` rows.
pub fn critical_field(rows: &[(f64, Vec<f64>)]) -> Option<f64> {
    let mut candidate = None;
    for (b, etas) in rows.iter().rev() {
        if etas.iter().all(|&e| e <= 0.0) {
            candidate = Some(*b);
        } else {
            break;
        }
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: Vec<(f64, f64)>) -> GibbsCurve {
        let (beta_at_max, max_value) = points
            .iter()
            .copied()
            .fold((0.0, f64::NEG_INFINITY), |a, v| if v.1 > a.1 { v } else { a });
        GibbsCurve {
            field: 0.7,
            measure: Measure::Concurrence,
            points,
            max_value,
            beta_at_max,
        }
    }

    #[test]
    fn score_above_and_below_curve() {
        let c = curve(vec![(1.0, 0.0), (2.0, 0.05), (3.0, 0.08), (4.0, 0.07)]);
        let above = ergodicity_score(0.1, &c);
        assert!((above.eta - 0.02).abs() < 1e-15);
        assert!(above.intersections.is_empty());
        let below = ergodicity_score(0.075, &c);
        assert_eq!(below.eta, 0.0);
        assert_eq!(below.intersections.len(), 2);
        assert!((below.intersections[0] - (2.0 + 25.0 / 30.0)).abs() < 1e-12);
    }

    #[test]
    fn critical_values() {
        let scan = |etas: &[f64]| -> Vec<ScanPoint> {
            etas.iter()
                .enumerate()
                .map(|(i, &eta)| ScanPoint {
                    period: 0.5 * (i + 1) as f64,
                    report: ErgodicityReport {
                        steady_value: 0.0,
                        gibbs_max: 0.0,
                        eta,
                        intersections: vec![],
                    },
                })
                .collect()
        };
        assert_eq!(critical_period(&scan(&[0.1, 0.05, 0.0, 0.0])), Some(1.5));
        assert_eq!(critical_period(&scan(&[0.0, 0.05])), None);
        let rows = vec![
            (0.0, vec![0.1, 0.2]),
            (0.5, vec![0.0, 0.01]),
            (1.0, vec![0.0, 0.0]),
            (1.5, vec![0.0, 0.0]),
        ];
        assert_eq!(critical_field(&rows), Some(1.0));
    }

    #[test]
    fn gibbs_grid_validation() {
        let p = ModelParams::default();
        let q = QuadratureSettings::default();
        assert_eq!(
            gibbs_curve(0.7, &[2.0, 1.0], Measure::Concurrence, &p, &q),
            Err(ErgodicityError::InvalidGrid)
        );
    }

    #[test]
    fn averaged_field_is_mean() {
        assert_eq!(averaged_field(&ModelParams::new(1.4, 0.0, 1.0, 1.0)), 0.7);
    }
}
