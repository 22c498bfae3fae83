//! Finite rings of N sites.
//!
//! A periodic spin ring is not a single free-fermion problem: the fermion
//! boundary condition depends on the fermion parity.  Even-parity states live
//! on the antiperiodic momenta φ = 2π(m − ½)/N, odd-parity states on the
//! periodic momenta φ = 2πm/N, which include the unpaired modes φ = 0 and π.
//! With `P` the parity operator the Gibbs state is
//!
//! ```text
//! ρ ∝ ½(X_A + X_A P) + ½(X_P − X_P P),    X = e^{−βH} on each momentum set
//! ```
//!
//! and each of the four products is a Gaussian operator that factorises over
//! modes.  Every term is evolved and contracted separately; the correlators are
//! their weighted average.  The weights are kept as logarithms.

use super::*;
use crate::model::{finite_kgrid, KGrid};
use std::f64::consts::PI;

/// Largest ring accepted by the finite-chain routines.
pub const MAX_SITES: usize = 1 << 20;

/// How a finite ring is reduced to momentum modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiniteScheme {
    /// Exact: both boundary sectors with parity projection.
    ParityProjected,
    /// Single pair grid with weights 1/N.  Approximate for finite N.
    Grid(KGrid),
}

struct Single {
    phi: f64,
    occupation: f64,
}

struct Term {
    log_weight: f64,
    sign: f64,
    pairs: Vec<PreparedPair>,
    singles: Vec<Single>,
}

impl Term {
    fn moments_at(&self, cycles: u64, weight: f64) -> [f64; 4] {
        let mut acc = sequential_sum(&self.pairs, |p| p.moments_at(cycles));
        for s in &self.singles {
            accumulate(&mut acc, weight, single_moments(s.phi, s.occupation));
        }
        acc
    }
}

/// `e^{−βH_k}` (times P_k when `parity`) divided by its trace, together with
/// `ln|trace|` and its sign.  `None` when the trace vanishes.
fn pair_factor(
    phi: f64,
    params: &ModelParams,
    parity: bool,
) -> Option<(f64, f64, Matrix2<C64>, f64)> {
    let c = block_coefficients(phi, params.field_a, params);
    let e = c.energy();
    let m = params.beta * e;
    let damp = (-2.0 * m).exp();
    let diag = 0.5 * (1.0 + damp);
    let off = if e > 0.0 { 0.5 * (1.0 - damp) / e } else { 0.0 };
    let odd_each = if parity { -(-m).exp() } else { (-m).exp() };
    let trace = if parity {
        let x = (-m).exp_m1();
        x * x
    } else {
        2.0 * diag + 2.0 * odd_each
    };
    if trace == 0.0 {
        return None;
    }
    let even = Matrix2::new(
        ONE * (diag - off * c.sigma_z),
        C64::new(0.0, off * c.sigma_y),
        C64::new(0.0, -off * c.sigma_y),
        ONE * (diag + off * c.sigma_z),
    ) / ONE.scale(trace);
    let log_weight = -params.beta * (c.identity - e) + trace.abs().ln();
    Some((log_weight, trace.signum(), even, 2.0 * odd_each / trace))
}

/// Same for an unpaired mode: levels `h/2` (empty) and `J cos φ − h/2` (filled).
fn single_factor(phi: f64, params: &ModelParams, parity: bool) -> Option<(f64, f64, f64)> {
    let h = params.field_a;
    let empty = 0.5 * h;
    let filled = params.coupling * phi.cos() - 0.5 * h;
    let low = empty.min(filled);
    let p0 = (-params.beta * (empty - low)).exp();
    let p1 = (-params.beta * (filled - low)).exp();
    let p1 = if parity { -p1 } else { p1 };
    let trace = p0 + p1;
    if trace == 0.0 {
        return None;
    }
    Some((-params.beta * low + trace.abs().ln(), trace.signum(), p1 / trace))
}

fn build_term(
    params: &ModelParams,
    pair_phis: &[f64],
    single_phis: &[f64],
    parity: bool,
    sector_sign: f64,
    weight: f64,
) -> Option<Term> {
    let mut log_weight = 0.0;
    let mut sign = sector_sign;
    let mut pairs = Vec::with_capacity(pair_phis.len());
    for &phi in pair_phis {
        let (lw, s, even, odd) = pair_factor(phi, params, parity)?;
        log_weight += lw;
        sign *= s;
        pairs.push(PreparedPair {
            phi,
            weight,
            even,
            odd,
            floquet: floquet_unitary(phi, params),
        });
    }
    let mut singles = Vec::with_capacity(single_phis.len());
    for &phi in single_phis {
        let (lw, s, occupation) = single_factor(phi, params, parity)?;
        log_weight += lw;
        sign *= s;
        singles.push(Single { phi, occupation });
    }
    Some(Term {
        log_weight,
        sign,
        pairs,
        singles,
    })
}

fn projected_terms(params: &ModelParams, n_sites: usize) -> Vec<Term> {
    let n = n_sites as f64;
    let weight = 1.0 / n;
    let half = n_sites / 2;
    let antiperiodic: Vec<f64> = (1..=half)
        .map(|m| 2.0 * PI * (m as f64 - 0.5) / n)
        .collect();
    let periodic: Vec<f64> = (1..half).map(|m| 2.0 * PI * m as f64 / n).collect();
    let unpaired = [0.0, PI];
    [
        build_term(params, &antiperiodic, &[], false, 1.0, weight),
        build_term(params, &antiperiodic, &[], true, 1.0, weight),
        build_term(params, &periodic, &unpaired, false, 1.0, weight),
        build_term(params, &periodic, &unpaired, true, -1.0, weight),
    ]
    .into_iter()
    .flatten()
    .collect()
}

fn check_sites(n_sites: usize) -> Result<(), EvolutionError> {
    if n_sites > MAX_SITES {
        return Err(EvolutionError::ChainTooLong { sites: n_sites });
    }
    if n_sites < 4 || n_sites % 2 != 0 {
        return Err(ModelError::InvalidChainLength(n_sites).into());
    }
    Ok(())
}

/// Correlators of an N-site ring for every entry of `cycles`.
pub fn finite_chain_series(
    params: &ModelParams,
    n_sites: usize,
    cycles: &[u64],
    scheme: FiniteScheme,
) -> Result<Vec<CorrelatorSet>, EvolutionError> {
    params.validate()?;
    check_sites(n_sites)?;
    match scheme {
        FiniteScheme::Grid(grid) => {
            let pairs = prepare(params, &finite_kgrid(n_sites, grid)?);
            Ok(cycles
                .par_iter()
                .map(|&n| CorrelatorSet::from_moments(sequential_sum(&pairs, |p| p.moments_at(n))))
                .collect())
        }
        FiniteScheme::ParityProjected => {
            let terms = projected_terms(params, n_sites);
            let top = terms
                .iter()
                .map(|t| t.log_weight)
                .fold(f64::NEG_INFINITY, f64::max);
            let weight = 1.0 / n_sites as f64;
            Ok(cycles
                .par_iter()
                .map(|&n| {
                    let parts: Vec<(f64, CorrelatorSet)> = terms
                        .iter()
                        .map(|t| {
                            (
                                t.sign * (t.log_weight - top).exp(),
                                CorrelatorSet::from_moments(t.moments_at(n, weight)),
                            )
                        })
                        .collect();
                    CorrelatorSet::scaled_sum(&parts)
                })
                .collect())
        }
    }
}

/// Correlators of an N-site ring after `cycles` periods.
pub fn finite_chain_correlators(
    params: &ModelParams,
    n_sites: usize,
    cycles: u64,
    scheme: FiniteScheme,
) -> Result<CorrelatorSet, EvolutionError> {
    Ok(finite_chain_series(params, n_sites, &[cycles], scheme)?[0])
}
