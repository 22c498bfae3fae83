//! Thermal initial states, stroboscopic evolution and two-site correlators.
//!
//! Every pair (k, −k) carries a 4×4 density block.  Only the even 2×2 block
//! evolves; the odd states `c†_k|0⟩`, `c†_{−k}|0⟩` are eigenstates of every
//! block Hamiltonian with the same energy and stay put.
//!
//! Nearest-neighbour correlators follow from three mode sums (weights as in
//! [`KMode`]):
//!
//! ```text
//! m_z  = Σ w · 2⟨m_z^k⟩
//! G    = Σ w · [2i sin φ ⟨X'_k⟩ + 2 cos φ (⟨m_z^k⟩ + 1)]      = ⟨B_j A_{j+1}⟩
//! G'   = Σ w · [2i sin φ ⟨X'_k⟩ − 2 cos φ (⟨m_z^k⟩ + 1)]      = ⟨A_j B_{j+1}⟩
//! Q    = Σ w · [−2 sin φ ⟨X_k⟩]                               = i⟨A_j A_{j+1}⟩
//! ```
//!
//! with Majoranas `A = c† + c`, `B = c† − c`, and then
//! `⟨σxσx⟩ = G`, `⟨σyσy⟩ = −G'`, `⟨σzσz⟩ = m_z² + G G' + Q²`,
//! `⟨σxσy⟩ = ⟨σyσx⟩ = −Q`.

mod finite;

use nalgebra::{Matrix2, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{floquet_unitary, gap_minima, FloquetData};
use crate::linalg::{eigvals_herm4, kron2, paulis, ONE, ZERO};
use crate::model::{block_coefficients, graded_kgrid, thermo_kgrid, KMode, ModelError, ModelParams};
use crate::C64;

pub use finite::{finite_chain_correlators, finite_chain_series, FiniteScheme};

/// Largest negative eigenvalue of a reconstructed two-site state that is
/// treated as round-off and clipped.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("momentum quadrature did not converge: {nodes} nodes still change correlators by {change:e}")]
    QuadratureNotConverged { nodes: usize, change: f64 },
    #[error("two-site state is not positive: smallest eigenvalue {min_eigenvalue:e}")]
    NonPhysicalState { min_eigenvalue: f64 },
    #[error("chain of {sites} sites is outside the supported range")]
    ChainTooLong { sites: usize },
}

/// Density block of one pair in the basis `{|0⟩, |k,−k⟩, |k⟩, |−k⟩}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockState {
    pub phi: f64,
    pub rho: Matrix4<C64>,
}

impl BlockState {
    fn even(&self) -> Matrix2<C64> {
        self.rho.fixed_view::<2, 2>(0, 0).into_owned()
    }

    fn odd_population(&self) -> f64 {
        self.rho[(2, 2)].re + self.rho[(3, 3)].re
    }
}

/// Even block and odd population of `e^{−βH_k}/Z_k`.
fn thermal_parts(phi: f64, h: f64, beta: f64, params: &ModelParams) -> (Matrix2<C64>, f64) {
    let c = block_coefficients(phi, h, params);
    let e = c.energy();
    // Everything is scaled by e^{β(c0 − ε)} so nothing overflows.
    let m = beta * e;
    let damp = (-2.0 * m).exp();
    let diag = 0.5 * (1.0 + damp);
    let off = if e > 0.0 { 0.5 * (1.0 - damp) / e } else { 0.0 };
    let odd = (-m).exp();
    let trace = 2.0 * diag + 2.0 * odd;
    let even = Matrix2::new(
        ONE * (diag - off * c.sigma_z),
        C64::new(0.0, off * c.sigma_y),
        C64::new(0.0, -off * c.sigma_y),
        ONE * (diag + off * c.sigma_z),
    ) / ONE.scale(trace);
    (even, 2.0 * odd / trace)
}

/// Normalised `e^{−βH_k}` of one pair.
pub fn thermal_block(phi: f64, h: f64, beta: f64, params: &ModelParams) -> BlockState {
    let (even, odd) = thermal_parts(phi, h, beta, params);
    let mut rho = Matrix4::from_element(ZERO);
    rho.fixed_view_mut::<2, 2>(0, 0).copy_from(&even);
    rho[(2, 2)] = ONE * (0.5 * odd);
    rho[(3, 3)] = ONE * (0.5 * odd);
    BlockState { phi, rho }
}

/// `Uⁿ ρ U†ⁿ` on the even block.
pub fn evolve(state: &BlockState, floquet: &FloquetData, cycles: u64) -> BlockState {
    let un = floquet.power(cycles);
    let even = un * state.even() * un.adjoint();
    let mut rho = state.rho;
    rho.fixed_view_mut::<2, 2>(0, 0).copy_from(&even);
    BlockState {
        phi: state.phi,
        rho,
    }
}

/// Dephasing of the even block in the Floquet eigenbasis: the infinite-time
/// average of the stroboscopic states.
pub fn dephase(state: &BlockState, floquet: &FloquetData) -> BlockState {
    if floquet.degenerate {
        return *state;
    }
    let rho_even = state.even();
    let even = floquet
        .eigenprojectors()
        .iter()
        .fold(Matrix2::zeros(), |acc, p| acc + p * rho_even * p);
    let mut rho = state.rho;
    rho.fixed_view_mut::<2, 2>(0, 0).copy_from(&even);
    BlockState {
        phi: state.phi,
        rho,
    }
}

/// `⟨X_k⟩` with `X_k = c†_k c†_{−k} − c_k c_{−k}`, `⟨X'_k⟩` with
/// `X'_k = c†_k c†_{−k} + c_k c_{−k}` (purely imaginary) and
/// `⟨m_z^k⟩ = ⟨n_k + n_{−k}⟩ − 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeExpectations {
    pub pairing: f64,
    pub pairing_conjugate: C64,
    pub magnetization: f64,
}

pub fn mode_expectations(state: &BlockState) -> ModeExpectations {
    expectations_from_parts(&state.even(), state.odd_population())
}

fn expectations_from_parts(even: &Matrix2<C64>, odd: f64) -> ModeExpectations {
    // c†_k c†_{−k} maps |0⟩ → |k,−k⟩ and c_k c_{−k} maps |k,−k⟩ → −|0⟩.
    let coherence = even[(0, 1)];
    ModeExpectations {
        pairing: 2.0 * coherence.re,
        pairing_conjugate: C64::new(0.0, 2.0 * coherence.im),
        magnetization: 2.0 * even[(1, 1)].re + odd - 1.0,
    }
}

/// Unweighted contribution `[m_z, G, G', Q]` of one pair.
fn pair_moments(phi: f64, e: &ModeExpectations) -> [f64; 4] {
    let (s, c) = phi.sin_cos();
    let occupation = e.magnetization + 1.0;
    let anomalous = -2.0 * s * e.pairing_conjugate.im;
    [
        2.0 * e.magnetization,
        anomalous + 2.0 * c * occupation,
        anomalous - 2.0 * c * occupation,
        -2.0 * s * e.pairing,
    ]
}

/// Contribution of an unpaired mode (φ = 0 or π) with occupation `n`.
fn single_moments(phi: f64, occupation: f64) -> [f64; 4] {
    let c = phi.cos();
    [
        2.0 * occupation - 1.0,
        2.0 * c * occupation,
        -2.0 * c * occupation,
        0.0,
    ]
}

fn accumulate(acc: &mut [f64; 4], w: f64, m: [f64; 4]) {
    for (a, v) in acc.iter_mut().zip(m) {
        *a += w * v;
    }
}

/// Nearest-neighbour correlators of a translation-invariant state.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelatorSet {
    pub mz: f64,
    pub txx: f64,
    pub tyy: f64,
    pub tzz: f64,
    pub txy: f64,
    pub tyx: f64,
}

impl CorrelatorSet {
    fn from_moments([mz, g, gp, q]: [f64; 4]) -> Self {
        Self {
            mz,
            txx: g,
            tyy: -gp,
            tzz: mz * mz + g * gp + q * q,
            txy: -q,
            tyx: -q,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.mz, self.txx, self.tyy, self.tzz, self.txy, self.tyx]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn scaled_sum(terms: &[(f64, CorrelatorSet)]) -> Self {
        let total: f64 = terms.iter().map(|t| t.0).sum();
        let mut out = [0.0; 6];
        for (w, c) in terms {
            for (o, v) in out.iter_mut().zip(c.as_array()) {
                *o += w * v;
            }
        }
        let [mz, txx, tyy, tzz, txy, tyx] = out.map(|v| v / total);
        Self {
            mz,
            txx,
            tyy,
            tzz,
            txy,
            tyx,
        }
    }
}

/// Initial even block, odd population and Floquet data of one pair.
#[derive(Clone, Debug)]
pub(crate) struct PreparedPair {
    pub phi: f64,
    pub weight: f64,
    pub even: Matrix2<C64>,
    pub odd: f64,
    pub floquet: FloquetData,
}

impl PreparedPair {
    fn new(mode: &KMode, params: &ModelParams) -> Self {
        let (even, odd) = thermal_parts(mode.phi, params.field_a, params.beta, params);
        Self {
            phi: mode.phi,
            weight: mode.weight,
            even,
            odd,
            floquet: floquet_unitary(mode.phi, params),
        }
    }

    fn moments_at(&self, cycles: u64) -> [f64; 4] {
        let even = if cycles == 0 {
            self.even
        } else {
            let un = self.floquet.power(cycles);
            un * self.even * un.adjoint()
        };
        pair_moments(self.phi, &expectations_from_parts(&even, self.odd))
    }

    fn steady_moments(&self) -> [f64; 4] {
        let even = if self.floquet.degenerate {
            self.even
        } else {
            self.floquet
                .eigenprojectors()
                .iter()
                .fold(Matrix2::zeros(), |acc, p| acc + p * self.even * p)
        };
        pair_moments(self.phi, &expectations_from_parts(&even, self.odd))
    }
}

const CHUNK: usize = 1024;

/// Deterministic weighted sum over prepared pairs: fixed chunks summed in
/// parallel, partial sums combined in order.
fn chunked_sum(pairs: &[PreparedPair], f: impl Fn(&PreparedPair) -> [f64; 4] + Sync) -> [f64; 4] {
    let partials: Vec<[f64; 4]> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = [0.0; 4];
            for p in chunk {
                accumulate(&mut acc, p.weight, f(p));
            }
            acc
        })
        .collect();
    partials.into_iter().fold([0.0; 4], |mut acc, p| {
        accumulate(&mut acc, 1.0, p);
        acc
    })
}

fn sequential_sum(pairs: &[PreparedPair], f: impl Fn(&PreparedPair) -> [f64; 4]) -> [f64; 4] {
    let mut total = [0.0; 4];
    for chunk in pairs.chunks(CHUNK) {
        let mut acc = [0.0; 4];
        for p in chunk {
            accumulate(&mut acc, p.weight, f(p));
        }
        accumulate(&mut total, 1.0, acc);
    }
    total
}

pub(crate) fn prepare(params: &ModelParams, modes: &[KMode]) -> Vec<PreparedPair> {
    modes.par_iter().map(|m| PreparedPair::new(m, params)).collect()
}

/// Correlators after `cycles` periods, summing over an explicit momentum grid.
pub fn correlators_on_grid(params: &ModelParams, modes: &[KMode], cycles: u64) -> CorrelatorSet {
    let pairs = prepare(params, modes);
    CorrelatorSet::from_moments(chunked_sum(&pairs, |p| p.moments_at(cycles)))
}

/// Infinite-time average of the correlators on an explicit grid.
pub fn steady_state_on_grid(params: &ModelParams, modes: &[KMode]) -> CorrelatorSet {
    let pairs = prepare(params, modes);
    CorrelatorSet::from_moments(chunked_sum(&pairs, PreparedPair::steady_moments))
}

/// Node-doubling policy for the thermodynamic-limit quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub initial_nodes: usize,
    pub tolerance: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            initial_nodes: 4096,
            tolerance: 1e-9,
            max_nodes: 1 << 20,
        }
    }
}

/// A converged result and the node count that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Converged<T> {
    pub value: T,
    pub nodes: usize,
}

/// Doubles the node count until `eval` moves by less than the tolerance.
fn converge<T>(
    settings: &QuadratureSettings,
    eval: impl Fn(&[PreparedPair]) -> T,
    distance: impl Fn(&T, &T) -> f64,
    prepare_at: impl Fn(usize) -> Result<Vec<PreparedPair>, ModelError>,
) -> Result<Converged<T>, EvolutionError> {
    let mut nodes = settings.initial_nodes;
    let mut previous = eval(&prepare_at(nodes)?);
    loop {
        let next_nodes = nodes * 2;
        if next_nodes > settings.max_nodes {
            return Err(EvolutionError::QuadratureNotConverged {
                nodes,
                change: f64::NAN,
            });
        }
        let next = eval(&prepare_at(next_nodes)?);
        let change = distance(&previous, &next);
        if change < settings.tolerance {
            return Ok(Converged {
                value: next,
                nodes: next_nodes,
            });
        }
        if next_nodes * 2 > settings.max_nodes {
            return Err(EvolutionError::QuadratureNotConverged {
                nodes: next_nodes,
                change,
            });
        }
        previous = next;
        nodes = next_nodes;
    }
}

fn thermo_pairs(params: &ModelParams, nodes: usize) -> Result<Vec<PreparedPair>, ModelError> {
    Ok(prepare(params, &thermo_kgrid(nodes)?))
}

/// Thermodynamic-limit correlators after `cycles` periods.
pub fn correlators_at_cycle(
    params: &ModelParams,
    cycles: u64,
    settings: &QuadratureSettings,
) -> Result<Converged<CorrelatorSet>, EvolutionError> {
    params.validate()?;
    converge(
        settings,
        |pairs| CorrelatorSet::from_moments(chunked_sum(pairs, |p| p.moments_at(cycles))),
        CorrelatorSet::max_abs_diff,
        |nodes| thermo_pairs(params, nodes),
    )
}

/// Thermodynamic-limit correlators of the initial thermal state at field `a`.
pub fn thermal_correlators(
    params: &ModelParams,
    settings: &QuadratureSettings,
) -> Result<Converged<CorrelatorSet>, EvolutionError> {
    correlators_at_cycle(params, 0, settings)
}

/// Thermodynamic-limit correlators for every entry of `cycles`.
///
/// The node count is converged jointly on the largest cycle and a few
/// intermediate ones, then reused for the whole series.
pub fn correlator_series(
    params: &ModelParams,
    cycles: &[u64],
    settings: &QuadratureSettings,
) -> Result<Converged<Vec<CorrelatorSet>>, EvolutionError> {
    params.validate()?;
    let probes = probe_cycles(cycles);
    let series = |pairs: &[PreparedPair], ns: &[u64]| -> Vec<CorrelatorSet> {
        ns.par_iter()
            .map(|&n| CorrelatorSet::from_moments(sequential_sum(pairs, |p| p.moments_at(n))))
            .collect()
    };
    let probe = converge(
        settings,
        |pairs| series(pairs, &probes),
        |a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.max_abs_diff(y))
                .fold(0.0, f64::max)
        },
        |nodes| thermo_pairs(params, nodes),
    )?;
    let pairs = thermo_pairs(params, probe.nodes)?;
    Ok(Converged {
        value: series(&pairs, cycles),
        nodes: probe.nodes,
    })
}

fn probe_cycles(cycles: &[u64]) -> Vec<u64> {
    let max = cycles.iter().copied().max().unwrap_or(0);
    let mut probes: Vec<u64> = [0, max / 4, max / 2, 3 * max / 4, max]
        .into_iter()
        .filter(|n| cycles.contains(n) || *n == max)
        .collect();
    probes.sort_unstable();
    probes.dedup();
    probes
}

/// Thermodynamic-limit correlators of the dephased (infinite-time) state.
pub fn steady_state_correlators(
    params: &ModelParams,
    settings: &QuadratureSettings,
) -> Result<Converged<CorrelatorSet>, EvolutionError> {
    params.validate()?;
    let breaks = near_closings(params);
    converge(
        settings,
        |pairs| CorrelatorSet::from_moments(chunked_sum(pairs, PreparedPair::steady_moments)),
        CorrelatorSet::max_abs_diff,
        |nodes| Ok(prepare(params, &graded_kgrid(nodes, &breaks)?)),
    )
}

/// Resolution of the zone-gap scan that places quadrature breakpoints.
const GAP_SCAN_POINTS: usize = 1025;
/// Gap minima with a rotation angle this close to 0 or π become breakpoints.
const NEAR_CLOSING_ANGLE: f64 = 0.05;

/// Momenta where the Floquet rotation nearly degenerates.  The dephasing
/// projectors swing round over a momentum range of order the remaining gap
/// there, far narrower than a quadrature panel.
fn near_closings(params: &ModelParams) -> Vec<f64> {
    gap_minima(params, GAP_SCAN_POINTS)
        .into_iter()
        .filter(|&phi| floquet_unitary(phi, params).zone_gap(params.period) * params.period < NEAR_CLOSING_ANGLE)
        .collect()
}

/// Reduced density matrix of two neighbouring spins, computational basis
/// `|s_j s_{j+1}⟩` with `|0⟩` the σz = +1 state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSiteState {
    rho: Matrix4<C64>,
}

impl TwoSiteState {
    /// Wraps a matrix after checking it is a density matrix.
    pub fn from_matrix(rho: Matrix4<C64>) -> Result<Self, EvolutionError> {
        let herm = (rho + rho.adjoint()) * ONE.scale(0.5);
        let trace: C64 = herm.trace();
        let rho = herm / trace;
        let min = eigvals_herm4(&rho)[0];
        if min < -NEGATIVITY_TOLERANCE || !min.is_finite() {
            return Err(EvolutionError::NonPhysicalState {
                min_eigenvalue: min,
            });
        }
        if min < 0.0 {
            return Ok(Self { rho: clip(&rho) });
        }
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// Reduced state of the first spin.
    pub fn reduced_first(&self) -> Matrix2<C64> {
        Matrix2::from_fn(|i, j| self.rho[(2 * i, 2 * j)] + self.rho[(2 * i + 1, 2 * j + 1)])
    }

    /// Reduced state of the second spin.
    pub fn reduced_second(&self) -> Matrix2<C64> {
        Matrix2::from_fn(|i, j| self.rho[(i, j)] + self.rho[(2 + i, 2 + j)])
    }
}

fn clip(rho: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = rho.symmetric_eigen();
    let vals = eig.eigenvalues.map(|e| e.max(0.0));
    let total: f64 = vals.iter().sum();
    let d = Matrix4::from_diagonal(&vals.map(|e| ONE * (e / total)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `ρ = ¼[I + m_z(Z⊗I + I⊗Z) + Σ_{αβ} t_{αβ} σα⊗σβ]`.
pub fn two_site_state(c: &CorrelatorSet) -> Result<TwoSiteState, EvolutionError> {
    let [id, x, y, z] = paulis();
    let rho = kron2(&id, &id)
        + (kron2(&z, &id) + kron2(&id, &z)) * ONE.scale(c.mz)
        + kron2(&x, &x) * ONE.scale(c.txx)
        + kron2(&y, &y) * ONE.scale(c.tyy)
        + kron2(&z, &z) * ONE.scale(c.tzz)
        + kron2(&x, &y) * ONE.scale(c.txy)
        + kron2(&y, &x) * ONE.scale(c.tyx);
    TwoSiteState::from_matrix(rho * ONE.scale(0.25))
}
