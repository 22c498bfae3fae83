//! Model parameters, the per-momentum block Hamiltonian and momentum grids.
//!
//! The chain is
//!
//! ```text
//! H(t) = Σ_j (J/4)[(1+γ) σx_j σx_{j+1} + (1−γ) σy_j σy_{j+1}] − (h(t)/2) Σ_j σz_j
//! ```
//!
//! with periodic boundaries.  After Jordan–Wigner and Fourier transformation
//! (`c_j = N^{-1/2} Σ_k e^{ikj} c_k`) each pair (k, −k) evolves in the basis
//! `{|0⟩, c†_k c†_{−k}|0⟩, c†_k|0⟩, c†_{−k}|0⟩}` under
//!
//! ```text
//! H_k = c0 I + [[c2, −i c1, 0, 0], [i c1, −c2, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
//! c0 = J cos φ,  c1 = Jγ sin φ,  c2 = h − J cos φ
//! ```
//!
//! so the even-parity 2×2 block is `c0 I + c1 σy + c2 σz`.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{I, ONE, ZERO};
use crate::quadrature::GaussLegendre;
use crate::C64;

/// Order of each Gauss–Legendre panel used by [`thermo_kgrid`].
pub const PANEL_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} is out of range ({expected})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("chain length {0} must be even and at least 4")]
    InvalidChainLength(usize),
    #[error("quadrature needs at least {PANEL_ORDER} nodes, got {0}")]
    InvalidNodeCount(usize),
}

/// Physical parameters.  Energies are in units of J and times in units of ħ/J
/// unless `coupling` is changed from 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub coupling: f64,
    pub anisotropy: f64,
    /// Field of the initial thermal state and of the first half-period.
    pub field_a: f64,
    /// Field of the second half-period.
    pub field_b: f64,
    pub period: f64,
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            anisotropy: 1.0,
            field_a: 1.4,
            field_b: 0.0,
            period: 0.3,
            beta: 20.0,
        }
    }
}

impl ModelParams {
    /// Ising-limit chain (J = 1, γ = 1) with the given drive and temperature.
    pub fn new(field_a: f64, field_b: f64, period: f64, beta: f64) -> Self {
        Self {
            field_a,
            field_b,
            period,
            beta,
            ..Self::default()
        }
    }

    /// Same parameters with a constant field `h` (no drive).
    pub fn undriven(&self, h: f64) -> Self {
        Self {
            field_a: h,
            field_b: h,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name, value: f64, ok: bool, expected| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter {
                    name,
                    value,
                    expected,
                })
            }
        };
        check("J", self.coupling, self.coupling > 0.0, "J > 0")?;
        check("gamma", self.anisotropy, true, "finite")?;
        check("a", self.field_a, true, "finite")?;
        check("b", self.field_b, true, "finite")?;
        check("tau", self.period, self.period > 0.0, "tau > 0")?;
        check("beta", self.beta, self.beta >= 0.0, "beta >= 0")?;
        Ok(())
    }
}

/// Field at time `t` inside the drive: `a` on `[mτ, mτ + τ/2)`, `b` on the
/// second half.  Times `t ≤ 0` belong to the initial state and return `a`.
pub fn pulse_field(t: f64, params: &ModelParams) -> f64 {
    if t <= 0.0 {
        return params.field_a;
    }
    let phase = t.rem_euclid(params.period);
    if phase < 0.5 * params.period {
        params.field_a
    } else {
        params.field_b
    }
}

/// One momentum mode with its weight in the mode sum.
///
/// Weights are normalised so that a correlator is `Σ weight · f(φ)`: a finite
/// chain uses `1/N` per pair and the thermodynamic limit uses `dφ/2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMode {
    pub phi: f64,
    pub weight: f64,
}

/// Coefficients of `c0 I + c1 σy + c2 σz` for the even block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockCoefficients {
    pub identity: f64,
    pub sigma_y: f64,
    pub sigma_z: f64,
}

impl BlockCoefficients {
    /// Half the even-block level splitting, `√(c1² + c2²)`.
    pub fn energy(&self) -> f64 {
        self.sigma_y.hypot(self.sigma_z)
    }
}

pub fn block_coefficients(phi: f64, h: f64, params: &ModelParams) -> BlockCoefficients {
    let j = params.coupling;
    BlockCoefficients {
        identity: j * phi.cos(),
        sigma_y: j * params.anisotropy * phi.sin(),
        sigma_z: h - j * phi.cos(),
    }
}

/// The 4×4 block Hamiltonian of the pair (k, −k).
pub fn block_hamiltonian(phi: f64, h: f64, params: &ModelParams) -> Matrix4<C64> {
    let c = block_coefficients(phi, h, params);
    let d = ONE * c.identity;
    let mut m = Matrix4::from_element(ZERO);
    m[(0, 0)] = d + c.sigma_z;
    m[(1, 1)] = d - c.sigma_z;
    m[(0, 1)] = -I * c.sigma_y;
    m[(1, 0)] = I * c.sigma_y;
    m[(2, 2)] = d;
    m[(3, 3)] = d;
    m
}

/// Pair momenta of a finite ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KGrid {
    /// φ = 2πm/N, m = 1..N/2, each treated as a pair.
    Periodic,
    /// φ = 2π(m − ½)/N, m = 1..N/2.
    Antiperiodic,
}

pub fn finite_kgrid(n_sites: usize, grid: KGrid) -> Result<Vec<KMode>, ModelError> {
    if n_sites < 4 || n_sites % 2 != 0 {
        return Err(ModelError::InvalidChainLength(n_sites));
    }
    let n = n_sites as f64;
    let shift = match grid {
        KGrid::Periodic => 0.0,
        KGrid::Antiperiodic => 0.5,
    };
    Ok((1..=n_sites / 2)
        .map(|m| KMode {
            phi: 2.0 * PI * (m as f64 - shift) / n,
            weight: 1.0 / n,
        })
        .collect())
}

/// Composite Gauss–Legendre grid on [0, π] with weights `dφ/2π`.
///
/// `nodes` is rounded up to a whole number of 16-point panels.
pub fn thermo_kgrid(nodes: usize) -> Result<Vec<KMode>, ModelError> {
    if nodes < PANEL_ORDER {
        return Err(ModelError::InvalidNodeCount(nodes));
    }
    let panels = nodes.div_ceil(PANEL_ORDER);
    let (xs, ws) = GaussLegendre::new(PANEL_ORDER).composite(0.0, PI, panels);
    Ok(xs
        .into_iter()
        .zip(ws)
        .map(|(phi, w)| KMode {
            phi,
            weight: w / (2.0 * PI),
        })
        .collect())
}

/// Halvings of the end panels in [`graded_kgrid`].
pub const GRADING_LEVELS: usize = 36;

/// Composite Gauss–Legendre grid on [0, π] with panel boundaries at `breaks`
/// and geometric refinement towards every boundary, including 0 and π.
///
/// `nodes` sets the uniform panel count as in [`thermo_kgrid`]; the graded
/// panels come on top.  Integrands with a narrow feature at a known momentum
/// converge as fast as smooth ones once that momentum is a break.
pub fn graded_kgrid(nodes: usize, breaks: &[f64]) -> Result<Vec<KMode>, ModelError> {
    if nodes < PANEL_ORDER {
        return Err(ModelError::InvalidNodeCount(nodes));
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < PI).collect();
    cuts.push(0.0);
    cuts.push(PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let panels = nodes.div_ceil(PANEL_ORDER);
    let rule = GaussLegendre::new(PANEL_ORDER);
    let mut modes = Vec::new();
    for w in cuts.windows(2) {
        let share = ((panels as f64) * (w[1] - w[0]) / PI).ceil().max(1.0) as usize;
        let (xs, ws) = rule.graded(w[0], w[1], share, (true, true), GRADING_LEVELS);
        modes.extend(xs.into_iter().zip(ws).map(|(phi, wt)| KMode {
            phi,
            weight: wt / (2.0 * PI),
        }));
    }
    Ok(modes)
}
