//! Correlation measures of two-qubit states and the power-law fit used for
//! relaxation exponents.  Entropies are in bits.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::TwoSiteState;
use crate::linalg::{eigvals_herm2, eigvals_herm4, entropy_bits, kron2, paulis, ONE};
use crate::C64;

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
pub fn concurrence(state: &TwoSiteState) -> f64 {
    let rho = state.matrix();
    let [_, _, y, _] = paulis();
    let yy = kron2(&y, &y);
    let flipped = yy * rho.conjugate() * yy;
    let root = sqrt_psd(rho);
    let m = root * flipped * root;
    let mut lambdas: Vec<f64> = eigvals_herm4(&m).iter().map(|&e| e.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

fn sqrt_psd(rho: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = ((rho + rho.adjoint()) * ONE.scale(0.5)).symmetric_eigen();
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| ONE * e.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Von Neumann entropy of a two-qubit state.
pub fn von_neumann_entropy(state: &TwoSiteState) -> f64 {
    entropy_bits(eigvals_herm4(state.matrix()))
}

fn entropy2(rho: &Matrix2<C64>) -> f64 {
    entropy_bits(eigvals_herm2(rho))
}

pub fn purity(state: &TwoSiteState) -> f64 {
    let rho = state.matrix();
    (rho * rho).trace().re
}

/// Trace norm `‖ρ − σ‖₁`, the sum of singular values without a factor ½.
pub fn trace_distance(a: &TwoSiteState, b: &TwoSiteState) -> f64 {
    eigvals_herm4(&(a.matrix() - b.matrix())).iter().map(|e| e.abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscordSettings {
    /// Points per axis of the (θ, φ) search grid.
    pub grid: usize,
    /// Simplex refinement stops once the spread of the conditional entropy
    /// over the simplex falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DiscordSettings {
    fn default() -> Self {
        Self {
            grid: 64,
            tolerance: 1e-10,
            max_iterations: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discord {
    pub discord: f64,
    pub mutual_information: f64,
    pub classical: f64,
    /// Measurement direction on the second spin.
    pub theta: f64,
    pub phi: f64,
}

/// Conditional entropy of the first spin after a projective measurement of
/// the second along a Bloch direction.
struct Conditional {
    first: Matrix2<C64>,
    moments: [Matrix2<C64>; 3],
}

impl Conditional {
    fn new(state: &TwoSiteState) -> Self {
        let rho = state.matrix();
        let [_, x, y, z] = paulis();
        // Tr_B[(I ⊗ σ) ρ]
        let partial = |s: &Matrix2<C64>| {
            Matrix2::from_fn(|i, j| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        acc += rho[(2 * i + k, 2 * j + l)] * s[(l, k)];
                    }
                }
                acc
            })
        };
        Self {
            first: state.reduced_first(),
            moments: [partial(&x), partial(&y), partial(&z)],
        }
    }

    fn entropy(&self, theta: f64, phi: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let dir = [st * cp, st * sp, ct];
        let along = self.moments[0] * ONE.scale(dir[0])
            + self.moments[1] * ONE.scale(dir[1])
            + self.moments[2] * ONE.scale(dir[2]);
        [1.0, -1.0]
            .iter()
            .map(|s| {
                let cond = (self.first + along * ONE.scale(*s)) * ONE.scale(0.5);
                let p = cond.trace().re;
                if p > 1e-15 {
                    p * entropy2(&(cond / ONE.scale(p)))
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Quantum discord with the measurement on the second spin, default search.
pub fn quantum_discord(state: &TwoSiteState) -> f64 {
    quantum_discord_with(state, &DiscordSettings::default()).discord
}

/// `D = S(ρ_B) − S(ρ_AB) + min_{θ,φ} Σ_± p_± S(ρ_{A|±})`.
///
/// A uniform grid in θ ∈ [0, π], φ ∈ [0, 2π) picks the start (first minimum in
/// scan order wins ties), then Nelder–Mead polishes it.
pub fn quantum_discord_with(state: &TwoSiteState, settings: &DiscordSettings) -> Discord {
    use std::f64::consts::PI;
    let cond = Conditional::new(state);
    let g = settings.grid.max(2);
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..g {
        let theta = PI * i as f64 / (g - 1) as f64;
        for j in 0..g {
            let phi = 2.0 * PI * j as f64 / g as f64;
            let v = cond.entropy(theta, phi);
            if v < best.2 {
                best = (theta, phi, v);
            }
        }
    }
    let step = [PI / (g - 1) as f64, 2.0 * PI / g as f64];
    let (point, value) = nelder_mead(
        |p| cond.entropy(p[0], p[1]),
        [best.0, best.1],
        step,
        settings.tolerance,
        settings.max_iterations,
    );
    let (point, value) = if value < best.2 { (point, value) } else { ([best.0, best.1], best.2) };
    let s_a = entropy2(&state.reduced_first());
    let s_b = entropy2(&state.reduced_second());
    let s_ab = von_neumann_entropy(state);
    let mutual = s_a + s_b - s_ab;
    let classical = s_a - value;
    Discord {
        discord: (mutual - classical).max(0.0),
        mutual_information: mutual,
        classical,
        theta: point[0],
        phi: point[1],
    }
}

/// Two-dimensional Nelder–Mead minimisation.
fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(&f);
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if values[2] - values[0] < tol {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = lerp(simplex[0], simplex[k], 0.5);
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let k = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[k], values[k])
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("power-law fit needs at least {needed} tail points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series is not positive at n = {n} (value {value:e}); it may have converged below the noise floor")]
    NonPositive { n: f64, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Consecutive points averaged (in log space) before fitting.
    pub block: usize,
    /// The fit uses `n ≥ tail_start · max n`; the default keeps the last
    /// three quarters of a decade.
    pub tail_start: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            block: 10,
            tail_start: 10f64.powf(-0.75),
            min_points: 20,
        }
    }
}

/// `d ≈ A n^{−B}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

/// Least squares on `ln d` against `ln n` over the tail of the series.
///
/// Points are grouped into blocks of `block` consecutive samples and the
/// logarithms are averaged per block, which damps oscillations and is exact for
/// a pure power law.
pub fn fit_power_law(series: &[(f64, f64)], options: &FitOptions) -> Result<PowerLawFit, FitError> {
    let n_max = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let tail: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|p| p.0 >= options.tail_start * n_max && p.0 > 0.0)
        .collect();
    if tail.len() < options.min_points.max(2) {
        return Err(FitError::TooFewPoints {
            needed: options.min_points.max(2),
            got: tail.len(),
        });
    }
    if let Some(&(n, value)) = tail.iter().find(|p| !(p.1 > 0.0)) {
        return Err(FitError::NonPositive { n, value });
    }
    let block = options.block.max(1);
    let points: Vec<(f64, f64)> = tail
        .chunks(block)
        .filter(|c| c.len() == block || block == 1)
        .map(|c| {
            let k = c.len() as f64;
            (
                c.iter().map(|p| p.0.ln()).sum::<f64>() / k,
                c.iter().map(|p| p.1.ln()).sum::<f64>() / k,
            )
        })
        .collect();
    if points.len() < 2 {
        return Err(FitError::TooFewPoints {
            needed: 2 * block,
            got: tail.len(),
        });
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(PowerLawFit {
        amplitude: intercept.exp(),
        exponent: -slope,
        residual,
        n_min: tail[0].0,
        n_max,
        points: tail.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn werner(p: f64) -> TwoSiteState {
        let mut singlet = Matrix4::from_element(ZERO);
        singlet[(1, 1)] = ONE * 0.5;
        singlet[(2, 2)] = ONE * 0.5;
        singlet[(1, 2)] = ONE * -0.5;
        singlet[(2, 1)] = ONE * -0.5;
        let rho = singlet * ONE.scale(p) + Matrix4::identity() * ONE.scale((1.0 - p) / 4.0);
        TwoSiteState::from_matrix(rho).unwrap()
    }

    fn product(a: Matrix2<C64>, b: Matrix2<C64>) -> TwoSiteState {
        TwoSiteState::from_matrix(kron2(&a, &b)).unwrap()
    }

    #[test]
    fn werner_concurrence() {
        assert!((concurrence(&werner(0.5)) - 0.25).abs() < 1e-12);
        assert!(concurrence(&werner(0.3)).abs() < 1e-12);
        assert!((concurrence(&werner(1.0)) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn werner_discord_closed_form() {
        for p in [0.1, 0.5, 0.9] {
            let d = quantum_discord(&werner(p));
            let s_ab = entropy_bits([(1.0 + 3.0 * p) / 4.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0]);
            let mutual = 2.0 - s_ab;
            let classical = 0.5 * (1.0 - p) * (1.0 - p).log2() + 0.5 * (1.0 + p) * (1.0 + p).log2();
            assert!((d - (mutual - classical)).abs() < 1e-8, "p = {p}");
        }
    }

    #[test]
    fn product_states_have_no_correlations() {
        let a = Matrix2::new(ONE * 0.7, C64::new(0.1, 0.2), C64::new(0.1, -0.2), ONE * 0.3);
        let b = Matrix2::new(ONE * 0.4, C64::new(-0.2, 0.0), C64::new(-0.2, 0.0), ONE * 0.6);
        let s = product(a, b);
        assert!(concurrence(&s) < 1e-10);
        assert!(quantum_discord(&s) < 1e-10);
    }

    #[test]
    fn trace_distance_and_purity() {
        let up = Matrix2::new(ONE, ZERO, ZERO, ZERO);
        let down = Matrix2::new(ZERO, ZERO, ZERO, ONE);
        let a = product(up, up);
        let b = product(down, down);
        assert!((trace_distance(&a, &b) - 2.0).abs() < 1e-14);
        assert!(trace_distance(&a, &a).abs() < 1e-14);
        assert!((purity(&a) - 1.0).abs() < 1e-14);
        assert!((purity(&werner(0.0)) - 0.25).abs() < 1e-14);
        assert!((von_neumann_entropy(&werner(0.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let series: Vec<(f64, f64)> = (1..=5000).map(|n| (n as f64, 3.0 * (n as f64).powf(-1.5))).collect();
        let fit = fit_power_law(&series, &FitOptions::default()).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-6);
        assert!((fit.amplitude - 3.0).abs() < 1e-5);
    }

    #[test]
    fn fit_errors() {
        let short: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64, 1.0)).collect();
        assert!(matches!(fit_power_law(&short, &FitOptions::default()), Err(FitError::TooFewPoints { .. })));
        let mut zero: Vec<(f64, f64)> = (1..=400).map(|n| (n as f64, 1.0 / n as f64)).collect();
        zero[350].1 = 0.0;
        assert!(matches!(fit_power_law(&zero, &FitOptions::default()), Err(FitError::NonPositive { .. })));
    }
}
