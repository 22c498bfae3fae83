//! Invariant and oracle checks run by `spinchain validate`.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{
    correlators_at_cycle, correlators_on_grid, evolve, finite_chain_correlators, steady_state_correlators,
    thermal_block, two_site_state, EvolutionError, FiniteScheme, QuadratureSettings, TwoSiteState,
};
use crate::floquet::floquet_unitary;
use crate::linalg::{eigvals_herm4, kron2, ONE};
use crate::measures::{concurrence, quantum_discord, trace_distance};
use crate::model::{thermo_kgrid, ModelError, ModelParams};
use crate::oracle::{oracle_two_site, oracle_two_site_dense, OracleError, MAX_SITES};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ValidationError {
    /// True for inputs refused by a size guard rather than a numerical failure.
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            ValidationError::Oracle(OracleError::SitesOutOfRange(_) | OracleError::TooManyCycles(_))
                | ValidationError::Evolution(EvolutionError::ChainTooLong { .. })
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Ring length for the oracle comparison.
    pub sites: usize,
    /// Random parameter tuples compared against the oracle.
    pub tuples: usize,
    pub max_cycles: u64,
    pub seed: u64,
    pub quadrature: QuadratureSettings,
    /// Deliberately flips the sign of the pairing term in the momentum route;
    /// the oracle comparison must then fail.
    pub flip_pairing: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            sites: 8,
            tuples: 20,
            max_cycles: 50,
            seed: 2024,
            quadrature: QuadratureSettings::default(),
            flip_pairing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random drive in the ranges used throughout the checks.
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    ModelParams::new(
        rng.random_range(0.0..2.0),
        rng.random_range(0.0..2.0),
        rng.random_range(0.1..3.0),
        rng.random_range(0.5..20.0),
    )
}

fn random_unitary(rng: &mut impl Rng) -> Matrix2<C64> {
    let (a, b, c) = (
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::PI),
    );
    let (s, co) = (0.5 * c).sin_cos();
    Matrix2::new(
        C64::from_polar(co, a),
        C64::from_polar(-s, b),
        C64::from_polar(s, -b),
        C64::from_polar(co, -a),
    )
}

/// Largest deviation between the oracle and the parity-projected momentum
/// route over random tuples.
pub fn oracle_discrepancy(options: &ValidationOptions) -> Result<f64, ValidationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..options.tuples {
        let p = random_params(&mut rng);
        let n = rng.random_range(0..=options.max_cycles);
        let (_, exact) = oracle_two_site(options.sites, &p, n)?;
        let route = if options.flip_pairing {
            ModelParams {
                anisotropy: -p.anisotropy,
                ..p
            }
        } else {
            p
        };
        let mine = finite_chain_correlators(&route, options.sites, n, FiniteScheme::ParityProjected)?;
        worst = worst.max(exact.max_abs_diff(&mine));
    }
    Ok(worst)
}

pub fn run_validation(options: &ValidationOptions) -> Result<ValidationReport, ValidationError> {
    if options.sites > MAX_SITES {
        return Err(OracleError::SitesOutOfRange(options.sites).into());
    }
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5eed);

    checks.push(Check::at_most(
        &format!("oracle agreement, N = {}", options.sites),
        oracle_discrepancy(options)?,
        1e-10,
    ));

    let small = 6.min(options.sites);
    let p = random_params(&mut rng);
    let (sector, _) = oracle_two_site(small, &p, 9)?;
    let (dense, _) = oracle_two_site_dense(small, &p, 9)?;
    checks.push(Check::at_most(
        "momentum sectors agree with dense diagonalisation",
        (sector.matrix() - dense.matrix()).norm(),
        1e-10,
    ));

    let mut unitarity: f64 = 0.0;
    let mut block_defect: f64 = 0.0;
    for _ in 0..options.tuples {
        let p = random_params(&mut rng);
        let phi = rng.random_range(0.0..std::f64::consts::PI);
        let f = floquet_unitary(phi, &p);
        unitarity = unitarity.max((f.unitary * f.unitary.adjoint() - Matrix2::identity()).norm());
        let s = evolve(&thermal_block(phi, p.field_a, p.beta, &p), &f, rng.random_range(0..5000));
        let herm = (s.rho - s.rho.adjoint()).norm();
        let trace = (s.rho.trace() - ONE).norm();
        let negative = (-eigvals_herm4(&s.rho)[0]).max(0.0);
        block_defect = block_defect.max(herm).max(trace).max(negative);
    }
    checks.push(Check::at_most("Floquet unitarity", unitarity, 1e-12));
    checks.push(Check::at_most("block states stay normalised and positive", block_defect, 1e-12));

    let static_params = ModelParams::new(0.9, 0.9, 1.7, 6.0);
    let grid = thermo_kgrid(1024)?;
    let start = correlators_on_grid(&static_params, &grid, 0);
    let later = correlators_on_grid(&static_params, &grid, 1000);
    checks.push(Check::at_most(
        "constant field leaves the thermal state stationary",
        start.max_abs_diff(&later),
        1e-12,
    ));

    let mut bounds: f64 = 0.0;
    let mut lu: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for _ in 0..options.tuples.min(8) {
        let p = random_params(&mut rng);
        let n = rng.random_range(0..200);
        let c = correlators_on_grid(&p, &grid, n);
        symmetry = symmetry.max((c.txy - c.tyx).abs());
        let state = two_site_state(&c)?;
        let conc = concurrence(&state);
        let disc = quantum_discord(&state);
        bounds = bounds.max((-conc).max(conc - 1.0)).max(-disc);
        let local = kron2(&random_unitary(&mut rng), &random_unitary(&mut rng));
        let rotated = TwoSiteState::from_matrix(local * state.matrix() * local.adjoint())?;
        lu = lu.max((concurrence(&rotated) - conc).abs());
    }
    checks.push(Check::at_most("measure bounds", bounds, 0.0));
    checks.push(Check::at_most("concurrence invariant under local unitaries", lu, 1e-10));
    checks.push(Check::at_most("t_xy = t_yx", symmetry, 1e-14));

    let mut product_discord: f64 = 0.0;
    for _ in 0..4 {
        let rho = |rng: &mut ChaCha8Rng| {
            let u = random_unitary(rng);
            let w = rng.random_range(0.0..1.0);
            u * Matrix2::new(ONE * w, ONE * 0.0, ONE * 0.0, ONE * (1.0 - w)) * u.adjoint()
        };
        let s = TwoSiteState::from_matrix(kron2(&rho(&mut rng), &rho(&mut rng)))?;
        product_discord = product_discord.max(quantum_discord(&s));
    }
    checks.push(Check::at_most("discord vanishes on product states", product_discord, 1e-10));

    let reference = ModelParams::new(1.4, 0.0, 0.3, 20.0);
    let steady = two_site_state(&steady_state_correlators(&reference, &options.quadrature)?.value)?;
    let late = two_site_state(&correlators_at_cycle(&reference, 2000, &options.quadrature)?.value)?;
    checks.push(Check::at_most(
        "dephased state matches long-time evolution",
        trace_distance(&steady, &late),
        1e-3,
    ));

    let coarse = correlators_at_cycle(&reference, 300, &options.quadrature)?;
    let fine = correlators_on_grid(&reference, &thermo_kgrid(coarse.nodes * 2)?, 300);
    checks.push(Check::at_most(
        "quadrature stable under node doubling",
        coarse.value.max_abs_diff(&fine),
        options.quadrature.tolerance,
    ));

    Ok(ValidationReport { checks })
}
