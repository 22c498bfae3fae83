//! Exact diagonalisation of short rings, independent of the fermion mapping.
//!
//! Basis states are bit strings with site 0 as the most significant bit, so
//! dense operators follow the usual Kronecker order `σ_0 ⊗ σ_1 ⊗ …`.  Bit value
//! 0 is the σz = +1 state.
//!
//! [`oracle_two_site`] works in translation-momentum sectors, split further by
//! the parity of the number of flipped spins: the drive and the thermal state
//! commute with both, so each sector evolves on its own, and only the
//! sector-diagonal part of an observable contributes to its expectation.  The reduced state
//! of sites (0, 1) follows from the sixteen averaged Pauli products.
//! [`oracle_two_site_dense`] does the same with full 2^N matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Dyn, Matrix2, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::evolution::{CorrelatorSet, EvolutionError, TwoSiteState};
use crate::linalg::{expm_hermitian, kron2, matrix_power, paulis, ONE, ZERO};
use crate::model::{ModelError, ModelParams};
use crate::C64;

pub const MIN_SITES: usize = 2;
pub const MAX_SITES: usize = 12;
pub const MAX_CYCLES: u64 = 5000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact diagonalisation supports {MIN_SITES} to {MAX_SITES} sites, got {0}")]
    SitesOutOfRange(usize),
    #[error("exact diagonalisation supports at most {MAX_CYCLES} cycles, got {0}")]
    TooManyCycles(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] EvolutionError),
}

fn check(n_sites: usize, cycles: u64) -> Result<(), OracleError> {
    if !(MIN_SITES..=MAX_SITES).contains(&n_sites) {
        return Err(OracleError::SitesOutOfRange(n_sites));
    }
    if cycles > MAX_CYCLES {
        return Err(OracleError::TooManyCycles(cycles));
    }
    Ok(())
}

/// Two-site operator acting on sites (j, j+1); local index `2 b_j + b_{j+1}`.
type BondOp = nalgebra::Matrix4<C64>;

fn bond_hamiltonian(h: f64, params: &ModelParams) -> BondOp {
    let [id, x, y, z] = paulis();
    let j = params.coupling;
    let g = params.anisotropy;
    kron2(&x, &x) * ONE.scale(0.25 * j * (1.0 + g)) + kron2(&y, &y) * ONE.scale(0.25 * j * (1.0 - g))
        - kron2(&z, &id) * ONE.scale(0.5 * h)
}

fn site_bit(n_sites: usize, site: usize) -> usize {
    n_sites - 1 - site
}

/// `Σ_j o_{j,j+1}` applied to one basis state.
fn apply_bond_sum(n_sites: usize, op: &BondOp, state: usize, mut emit: impl FnMut(usize, C64)) {
    for j in 0..n_sites {
        let bj = site_bit(n_sites, j);
        let bk = site_bit(n_sites, (j + 1) % n_sites);
        let local_in = 2 * ((state >> bj) & 1) + ((state >> bk) & 1);
        for local_out in 0..4 {
            let amp = op[(local_out, local_in)];
            if amp == ZERO {
                continue;
            }
            let mut s = state & !(1 << bj) & !(1 << bk);
            s |= (local_out >> 1) << bj;
            s |= (local_out & 1) << bk;
            emit(s, amp);
        }
    }
}

fn dense_bond_sum(n_sites: usize, op: &BondOp) -> DMatrix<C64> {
    let dim = 1usize << n_sites;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for s in 0..dim {
        apply_bond_sum(n_sites, op, s, |t, amp| m[(t, s)] += amp);
    }
    m
}

/// Full `2^N × 2^N` Hamiltonian of the ring at field `h`.
pub fn build_dense(n_sites: usize, h: f64, params: &ModelParams) -> Result<DMatrix<C64>, OracleError> {
    check(n_sites, 0)?;
    params.validate()?;
    Ok(dense_bond_sum(n_sites, &bond_hamiltonian(h, params)))
}

/// Lattice translation `site j → j + 1` on basis states.
pub fn translate(n_sites: usize, state: usize) -> usize {
    // Site j sits at bit N−1−j, so moving every site up by one is a right rotation.
    let mask = (1usize << n_sites) - 1;
    ((state >> 1) | ((state & 1) << (n_sites - 1))) & mask
}

/// The sixteen operators `σα ⊗ σβ` on a bond, identity first.
fn pauli_products() -> Vec<BondOp> {
    let p = paulis();
    let mut out = Vec::with_capacity(16);
    for a in &p {
        for b in &p {
            out.push(kron2(a, b));
        }
    }
    out
}

fn state_from_expectations(values: &[f64], n_sites: usize) -> Result<(TwoSiteState, CorrelatorSet), OracleError> {
    // values are expectations of Σ_j (σα ⊗ σβ)_{j,j+1}.
    let per_bond: Vec<f64> = values.iter().map(|v| v / n_sites as f64).collect();
    let products = pauli_products();
    let mut rho = BondOp::from_element(ZERO);
    for (v, op) in per_bond.iter().zip(&products) {
        rho += op * ONE.scale(0.25 * v);
    }
    let at = |a: usize, b: usize| per_bond[4 * a + b];
    let correlators = CorrelatorSet {
        mz: at(3, 0),
        txx: at(1, 1),
        tyy: at(2, 2),
        tzz: at(3, 3),
        txy: at(1, 2),
        tyx: at(2, 1),
    };
    Ok((TwoSiteState::from_matrix(rho)?, correlators))
}

fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// One-period propagator and normalised-by-`e^{βE_0}` Gibbs weight of a block.
struct Dynamics {
    cycle: DMatrix<C64>,
    gibbs: DMatrix<C64>,
}

/// `f(H)` from the eigen-decomposition of H.
fn spectral(eig: &SymmetricEigen<C64, Dyn>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let w = f(e);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= w;
        }
    }
    scaled * v.adjoint()
}

/// `ea` is the decomposition of the first-half (and initial) Hamiltonian.
fn block_dynamics(ea: &SymmetricEigen<C64, Dyn>, hb: &DMatrix<C64>, params: &ModelParams, ground: f64) -> Dynamics {
    let half = C64::new(0.0, -0.5 * params.period);
    let cycle = expm_hermitian(hb, half) * spectral(ea, |e| (half * e).exp());
    let gibbs = spectral(ea, |e| ONE.scale((-params.beta * (e - ground)).exp()));
    Dynamics { cycle, gibbs }
}

fn lowest(eig: &SymmetricEigen<C64, Dyn>) -> f64 {
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn evolve_and_measure(d: &Dynamics, cycles: u64, observables: &[DMatrix<C64>]) -> (f64, Vec<f64>) {
    let un = matrix_power(&d.cycle, cycles);
    let rho = &un * &d.gibbs * un.adjoint();
    let z = rho.trace().re;
    let values = observables.iter().map(|o| trace_product(&rho, o).re).collect();
    (z, values)
}

/// Reduced state of two neighbouring spins after `cycles` periods, from full
/// dense matrices.  Practical up to about ten sites.
pub fn oracle_two_site_dense(
    n_sites: usize,
    params: &ModelParams,
    cycles: u64,
) -> Result<(TwoSiteState, CorrelatorSet), OracleError> {
    check(n_sites, cycles)?;
    params.validate()?;
    let ha = build_dense(n_sites, params.field_a, params)?;
    let hb = build_dense(n_sites, params.field_b, params)?;
    let ea = ha.symmetric_eigen();
    let dynamics = block_dynamics(&ea, &hb, params, lowest(&ea));
    let observables: Vec<DMatrix<C64>> = pauli_products().iter().map(|o| dense_bond_sum(n_sites, o)).collect();
    let (z, values) = evolve_and_measure(&dynamics, cycles, &observables);
    let values: Vec<f64> = values.iter().map(|v| v / z).collect();
    state_from_expectations(&values, n_sites)
}

/// Orbits of the translation group on basis states.
struct Orbits {
    /// Smallest state of each orbit.
    representatives: Vec<usize>,
    periods: Vec<usize>,
    /// For every state: (orbit index, l) with `T^l(rep) = state`.
    lookup: Vec<(usize, usize)>,
}

impl Orbits {
    fn new(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        let mut lookup = vec![(usize::MAX, 0); dim];
        let mut representatives = Vec::new();
        let mut periods = Vec::new();
        for s in 0..dim {
            if lookup[s].0 != usize::MAX {
                continue;
            }
            let idx = representatives.len();
            let mut x = s;
            let mut l = 0;
            loop {
                lookup[x] = (idx, l);
                x = translate(n_sites, x);
                l += 1;
                if x == s {
                    break;
                }
            }
            representatives.push(s);
            periods.push(l);
        }
        Self {
            representatives,
            periods,
            lookup,
        }
    }
}

/// Translation-invariant operators restricted to momentum `2πm/N` and one
/// spin-flip parity.
struct Sector<'a> {
    n_sites: usize,
    momentum: f64,
    orbits: &'a Orbits,
    /// Orbit index → position in the sector basis.
    position: Vec<Option<usize>>,
    members: Vec<usize>,
}

impl<'a> Sector<'a> {
    fn new(n_sites: usize, m: usize, parity: u32, orbits: &'a Orbits) -> Self {
        let mut position = vec![None; orbits.representatives.len()];
        let mut members = Vec::new();
        for (i, &r) in orbits.periods.iter().enumerate() {
            if (m * r) % n_sites == 0 && orbits.representatives[i].count_ones() % 2 == parity {
                position[i] = Some(members.len());
                members.push(i);
            }
        }
        Self {
            n_sites,
            momentum: 2.0 * PI * m as f64 / n_sites as f64,
            orbits,
            position,
            members,
        }
    }

    fn dim(&self) -> usize {
        self.members.len()
    }

    fn operator(&self, op: &BondOp) -> DMatrix<C64> {
        let d = self.dim();
        let mut out = DMatrix::from_element(d, d, ZERO);
        for (col, &orbit) in self.members.iter().enumerate() {
            let rep = self.orbits.representatives[orbit];
            let period = self.orbits.periods[orbit] as f64;
            apply_bond_sum(self.n_sites, op, rep, |s, amp| {
                let (target, shift) = self.orbits.lookup[s];
                if let Some(row) = self.position[target] {
                    let ratio = (period / self.orbits.periods[target] as f64).sqrt();
                    out[(row, col)] += amp * C64::from_polar(ratio, self.momentum * shift as f64);
                }
            });
        }
        out
    }
}

/// Reduced state of two neighbouring spins after `cycles` periods, from exact
/// diagonalisation in translation-momentum sectors.
pub fn oracle_two_site(
    n_sites: usize,
    params: &ModelParams,
    cycles: u64,
) -> Result<(TwoSiteState, CorrelatorSet), OracleError> {
    check(n_sites, cycles)?;
    params.validate()?;
    let orbits = Orbits::new(n_sites);
    let sectors: Vec<Sector> = (0..n_sites)
        .flat_map(|m| [0, 1].map(|parity| Sector::new(n_sites, m, parity, &orbits)))
        .filter(|s| s.dim() > 0)
        .collect();
    let ha_h = bond_hamiltonian(params.field_a, params);
    let hb_h = bond_hamiltonian(params.field_b, params);
    let hamiltonians: Vec<(SymmetricEigen<C64, Dyn>, DMatrix<C64>)> = sectors
        .par_iter()
        .map(|s| (s.operator(&ha_h).symmetric_eigen(), s.operator(&hb_h)))
        .collect();
    let ground = hamiltonians
        .iter()
        .map(|(ea, _)| lowest(ea))
        .fold(f64::INFINITY, f64::min);
    let products = pauli_products();
    let per_sector: Vec<(f64, Vec<f64>)> = sectors
        .par_iter()
        .zip(&hamiltonians)
        .map(|(s, (ea, hb))| {
            let d = block_dynamics(ea, hb, params, ground);
            let observables: Vec<DMatrix<C64>> = products.iter().map(|o| s.operator(o)).collect();
            evolve_and_measure(&d, cycles, &observables)
        })
        .collect();
    let z: f64 = per_sector.iter().map(|p| p.0).sum();
    let mut values = vec![0.0; 16];
    for (_, v) in &per_sector {
        for (acc, x) in values.iter_mut().zip(v) {
            *acc += x;
        }
    }
    let values: Vec<f64> = values.iter().map(|v| v / z).collect();
    state_from_expectations(&values, n_sites)
}

/// Dense translation operator, for tests of the sector construction.
pub fn dense_translation(n_sites: usize) -> DMatrix<C64> {
    let dim = 1usize << n_sites;
    let mut t = DMatrix::from_element(dim, dim, ZERO);
    for s in 0..dim {
        t[(translate(n_sites, s), s)] = ONE;
    }
    t
}

/// `σ` on one site of an N-site ring, dense.
pub fn dense_site_operator(n_sites: usize, site: usize, op: &Matrix2<C64>) -> DMatrix<C64> {
    let dim = 1usize << n_sites;
    let bit = site_bit(n_sites, site);
    DMatrix::from_fn(dim, dim, |r, c| {
        if (r & !(1 << bit)) != (c & !(1 << bit)) {
            return ZERO;
        }
        op[((r >> bit) & 1, (c >> bit) & 1)]
    })
}
