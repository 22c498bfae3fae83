//! One-period propagators of the two-step drive.
//!
//! For each pair the even block evolves under `U = U_b(τ/2) U_a(τ/2)`.  Only
//! the SU(2) part is stored; the common phase `e^{−i J cos φ τ}` multiplies
//! every state of the block and cancels in `U ρ U†`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{I, ONE};
use crate::model::{block_coefficients, ModelError, ModelParams};
use crate::C64;

/// Below this `|sin θ|` the rotation axis is numerically undefined.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the quasi-energy band is flat; no finite group velocity")]
    Dispersionless,
    #[error("need at least {min} momentum points, got {got}")]
    TooFewPoints { min: usize, got: usize },
}

/// `e^{−i phase} · matrix` with `matrix ∈ SU(2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinRotation {
    pub matrix: Matrix2<C64>,
    pub phase: f64,
}

impl SpinRotation {
    pub fn full(&self) -> Matrix2<C64> {
        self.matrix * C64::from_polar(1.0, -self.phase)
    }
}

/// `exp(−i H_even t)` for the even block at field `h`.
pub fn half_cycle_unitary(phi: f64, h: f64, duration: f64, params: &ModelParams) -> SpinRotation {
    let c = block_coefficients(phi, h, params);
    let e = c.energy();
    let cos = (e * duration).cos();
    let sinc = if e > 0.0 { (e * duration).sin() / e } else { duration };
    let matrix = Matrix2::new(
        ONE * cos - I * (sinc * c.sigma_z),
        ONE * (-sinc * c.sigma_y),
        ONE * (sinc * c.sigma_y),
        ONE * cos + I * (sinc * c.sigma_z),
    );
    SpinRotation {
        matrix,
        phase: c.identity * duration,
    }
}

/// Floquet data of one pair: `U = e^{−i phase} exp(−i θ n̂·σ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetData {
    pub phi: f64,
    pub unitary: Matrix2<C64>,
    pub phase: f64,
    /// Rotation angle θ = ε_F τ in [0, π].
    pub angle: f64,
    /// Quasi-energy ε_F = θ / τ.
    pub quasi_energy: f64,
    pub axis: Vector3<f64>,
    /// `U ∝ I`; the axis is meaningless and set to ẑ.
    pub degenerate: bool,
}

impl FloquetData {
    /// SU(2) part of `U^n`, rebuilt from angle and axis.
    pub fn power(&self, n: u64) -> Matrix2<C64> {
        if self.degenerate {
            let sign = if self.angle > 0.5 * PI && n % 2 == 1 { -1.0 } else { 1.0 };
            return Matrix2::identity() * (ONE * sign);
        }
        let t = self.angle * n as f64;
        rotation(t.cos(), t.sin(), &self.axis)
    }

    /// Distance of the quasi-energy from the zone centre or edge, in energy units.
    pub fn zone_gap(&self, period: f64) -> f64 {
        self.angle.min(PI - self.angle) / period
    }

    /// Projectors onto the eigenvectors of `U`.
    pub fn eigenprojectors(&self) -> [Matrix2<C64>; 2] {
        let n = self.axis;
        let ns = Matrix2::new(
            ONE * n.z,
            C64::new(n.x, -n.y),
            C64::new(n.x, n.y),
            ONE * -n.z,
        );
        let id = Matrix2::identity();
        [(id + ns) * (ONE * 0.5), (id - ns) * (ONE * 0.5)]
    }
}

/// `cos θ I − i sin θ n̂·σ`.
fn rotation(cos: f64, sin: f64, n: &Vector3<f64>) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(cos, -sin * n.z),
        C64::new(-sin * n.y, -sin * n.x),
        C64::new(sin * n.y, -sin * n.x),
        C64::new(cos, sin * n.z),
    )
}

pub fn floquet_unitary(phi: f64, params: &ModelParams) -> FloquetData {
    let half = 0.5 * params.period;
    let ua = half_cycle_unitary(phi, params.field_a, half, params);
    let ub = half_cycle_unitary(phi, params.field_b, half, params);
    let unitary = ub.matrix * ua.matrix;
    let (angle, axis, degenerate) = decompose(&unitary);
    FloquetData {
        phi,
        unitary,
        phase: ua.phase + ub.phase,
        angle,
        quasi_energy: angle / params.period,
        axis,
        degenerate,
    }
}

/// Angle and axis of an SU(2) matrix from the eigen-decomposition of its
/// Hermitian generator `i(U − U†)/2 = sin θ n̂·σ`.
fn decompose(u: &Matrix2<C64>) -> (f64, Vector3<f64>, bool) {
    let generator = (u - u.adjoint()) * (I * 0.5);
    let generator = (generator + generator.adjoint()) * (ONE * 0.5);
    let eig = generator.symmetric_eigen();
    let top = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let sin = eig.eigenvalues[top];
    let v = eig.eigenvectors.column(top);
    let overlap = (v.adjoint() * u * v)[(0, 0)];
    if sin.abs() < DEGENERACY_THRESHOLD {
        let trace = 0.5 * (u[(0, 0)] + u[(1, 1)]).re;
        let angle = if trace >= 0.0 { 0.0 } else { PI };
        return (angle, Vector3::z(), true);
    }
    let cross = v[0].conj() * v[1];
    let axis = Vector3::new(
        2.0 * cross.re,
        2.0 * cross.im,
        v[0].norm_sqr() - v[1].norm_sqr(),
    )
    .normalize();
    let angle = (-overlap.arg()).clamp(0.0, PI);
    (angle, axis, false)
}

/// Rotation angle and axis from composing the two half-period rotations
/// analytically.  Independent of [`floquet_unitary`]; used as a cross-check.
pub fn closed_form_rotation(phi: f64, params: &ModelParams) -> (f64, Vector3<f64>) {
    let half = 0.5 * params.period;
    let part = |h: f64| {
        let c = block_coefficients(phi, h, params);
        let e = c.energy();
        let sinc = if e > 0.0 { (e * half).sin() / e } else { half };
        ((e * half).cos(), Vector3::new(0.0, c.sigma_y, c.sigma_z) * sinc)
    };
    let (ca, va) = part(params.field_a);
    let (cb, vb) = part(params.field_b);
    let u0 = ca * cb - va.dot(&vb);
    let u = va * cb + vb * ca + vb.cross(&va);
    let norm = u.norm();
    let axis = if norm > 0.0 { u / norm } else { Vector3::z() };
    (norm.atan2(u0), axis)
}

/// Quasi-energies `(φ, ε_F)` on the given momenta.
pub fn band(params: &ModelParams, phis: &[f64]) -> Vec<(f64, f64)> {
    phis.par_iter()
        .map(|&phi| (phi, floquet_unitary(phi, params).quasi_energy))
        .collect()
}

/// `points` evenly spaced momenta covering [0, π] inclusive.
pub fn uniform_phis(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| PI * i as f64 / (points - 1) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupVelocity {
    pub max: f64,
    pub phi_at_max: f64,
    /// `(φ, |dε_F/dφ|)` on the grid.
    pub values: Vec<(f64, f64)>,
}

/// `|dε_F/dφ|` by finite differences on `points` uniform momenta in [0, π].
pub fn group_velocity(params: &ModelParams, points: usize) -> Result<GroupVelocity, FloquetError> {
    params.validate()?;
    if points < 3 {
        return Err(FloquetError::TooFewPoints { min: 3, got: points });
    }
    let phis = uniform_phis(points);
    let eps = band(params, &phis);
    let dphi = phis[1] - phis[0];
    let values: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let d = if i == 0 {
                (eps[1].1 - eps[0].1) / dphi
            } else if i == points - 1 {
                (eps[i].1 - eps[i - 1].1) / dphi
            } else {
                (eps[i + 1].1 - eps[i - 1].1) / (2.0 * dphi)
            };
            (phis[i], d.abs())
        })
        .collect();
    let (phi_at_max, max) = values
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    Ok(GroupVelocity {
        max,
        phi_at_max,
        values,
    })
}

/// Default momentum resolution for group velocities.
pub const VELOCITY_POINTS: usize = 4097;

/// Light-cone revival time `N / (2 max v_g)` in units of ħ/J.
pub fn revival_time(n_sites: usize, params: &ModelParams) -> Result<f64, FloquetError> {
    let v = group_velocity(params, VELOCITY_POINTS)?;
    if v.max < 1e-12 {
        return Err(FloquetError::Dispersionless);
    }
    Ok(n_sites as f64 / (2.0 * v.max))
}

/// Minimum of `min(ε_F τ, π − ε_F τ)/τ` over the zone at fixed drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneGap {
    pub phi: f64,
    pub gap: f64,
}

fn gap_at(phi: f64, params: &ModelParams) -> f64 {
    floquet_unitary(phi, params).zone_gap(params.period)
}

/// Golden-section minimisation of `f` on `[lo, hi]`.
pub fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Local minima of `values`, endpoints included when below their neighbour.
fn local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i == n - 1 || values[i] < values[i + 1];
            left && right
        })
        .collect()
}

fn refine_bracket(grid: &[f64], i: usize, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (x, fx) = golden_min(lo, hi, tol, &f);
    let at_grid = f(grid[i]);
    if at_grid < fx {
        (grid[i], at_grid)
    } else {
        (x, fx)
    }
}

/// Momenta of the interior local minima of the zone gap, refined by golden
/// section.  Near-closings there make the dephased state vary on a scale set by
/// the gap, so these are the natural quadrature breakpoints.
pub fn gap_minima(params: &ModelParams, points: usize) -> Vec<f64> {
    let phis = uniform_phis(points.max(3));
    let gaps: Vec<f64> = phis.iter().map(|&p| gap_at(p, params)).collect();
    local_minima(&gaps)
        .into_iter()
        .filter(|&i| i > 0 && i + 1 < phis.len())
        .map(|i| refine_bracket(&phis, i, 1e-14, |p| gap_at(p, params)).0)
        .collect()
}

/// Smallest zone gap over φ at the current drive.
pub fn min_zone_gap(params: &ModelParams, points: usize) -> ZoneGap {
    let phis = uniform_phis(points.max(3));
    let gaps: Vec<f64> = phis.iter().map(|&p| gap_at(p, params)).collect();
    let best = local_minima(&gaps)
        .into_iter()
        .map(|i| refine_bracket(&phis, i, 1e-13, |p| gap_at(p, params)))
        .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    ZoneGap {
        phi: best.0,
        gap: best.1,
    }
}

/// A quasi-energy touching 0 or π/τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandCrossing {
    pub period: f64,
    pub phi: f64,
    pub gap: f64,
}

/// Momenta where the band touches the zone centre or edge at the current drive.
pub fn band_crossings(params: &ModelParams, points: usize, tol: f64) -> Vec<BandCrossing> {
    let phis = uniform_phis(points.max(3));
    let gaps: Vec<f64> = phis.iter().map(|&p| gap_at(p, params)).collect();
    local_minima(&gaps)
        .into_iter()
        .map(|i| refine_bracket(&phis, i, 1e-13, |p| gap_at(p, params)))
        .filter(|&(_, g)| g < tol)
        .map(|(phi, gap)| BandCrossing {
            period: params.period,
            phi,
            gap,
        })
        .collect()
}

/// Drive periods in the span of `periods` at which the zone gap closes.
///
/// Local minima of the gap on the supplied grid are refined in τ by golden
/// section with an inner minimisation over φ; those below `tol` are returned.
pub fn locate_gap_closings(
    params: &ModelParams,
    periods: &[f64],
    phi_points: usize,
    tol: f64,
) -> Vec<BandCrossing> {
    let at = |tau: f64| {
        let p = ModelParams { period: tau, ..*params };
        min_zone_gap(&p, phi_points)
    };
    let gaps: Vec<f64> = periods.par_iter().map(|&t| at(t).gap).collect();
    let minima = local_minima(&gaps);
    minima
        .par_iter()
        .filter_map(|&i| {
            let (tau, _) = refine_bracket(periods, i, 1e-11, |t| at(t).gap);
            let z = at(tau);
            (z.gap < tol).then_some(BandCrossing {
                period: tau,
                phi: z.phi,
                gap: z.gap,
            })
        })
        .collect()
}
