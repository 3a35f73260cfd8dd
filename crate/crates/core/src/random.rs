//! Seeded random operators, states and observables for tests and scenario sweeps.
//!
//! All generators draw from a caller-provided RNG; `rng(seed)` gives the
//! portable ChaCha stream used throughout, so sweeps are reproducible.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::apparatus::ApparatusModel;
use crate::instrument::{CPMap, Instrument};
use crate::observable::Observable;
use crate::ops::{ComplexOperator, Matrix, StateVector, C64};
use crate::state::DensityOperator;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(r: &mut R) -> C64 {
    C64::new(r.sample(StandardNormal), r.sample(StandardNormal))
}

pub fn random_matrix<R: Rng + ?Sized>(r: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| gaussian(r))
}

/// Ginibre matrix.
pub fn random_operator<R: Rng + ?Sized>(r: &mut R, dim: usize) -> ComplexOperator {
    ComplexOperator::from_matrix(random_matrix(r, dim, dim)).expect("square finite matrix")
}

pub fn random_hermitian<R: Rng + ?Sized>(r: &mut R, dim: usize) -> ComplexOperator {
    random_operator(r, dim).hermitian_part()
}

/// Haar-distributed pure state.
pub fn random_state<R: Rng + ?Sized>(r: &mut R, dim: usize) -> StateVector {
    StateVector::from_column(DVector::from_fn(dim, |_, _| gaussian(r)))
        .normalized()
        .expect("nonzero gaussian vector")
}

/// Haar unitary via QR with the phase of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(r: &mut R, dim: usize) -> ComplexOperator {
    let qr = random_matrix(r, dim, dim).qr();
    let (q, rr) = (qr.q(), qr.r());
    let phases = Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = rr[(i, i)];
            d / d.norm()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    ComplexOperator::from_matrix(q * phases).expect("square finite matrix")
}

/// Random density operator `G G† / Tr` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(r: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let g = random_matrix(r, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let op = ComplexOperator::from_matrix(m / C64::new(tr, 0.0)).expect("square finite matrix");
    DensityOperator::new(op.hermitian_part()).expect("Ginibre ensemble gives a valid state")
}

/// Full-rank random density operator.
pub fn random_mixed_density<R: Rng + ?Sized>(r: &mut R, dim: usize) -> DensityOperator {
    random_density(r, dim, dim)
}

/// Observable with `outcomes` distinct eigenvalues in a random eigenbasis.
/// Every outcome gets at least one eigenvector; the rest are assigned at random.
pub fn random_observable<R: Rng + ?Sized>(r: &mut R, dim: usize, outcomes: usize) -> Observable {
    assert!(
        outcomes >= 1 && outcomes <= dim,
        "need 1 <= outcomes <= dim"
    );
    let u = random_unitary(r, dim);
    let mut labels: Vec<usize> = (0..outcomes).collect();
    labels.extend((outcomes..dim).map(|_| r.random_range(0..outcomes)));
    labels.shuffle(r);

    let mut values: Vec<f64> = Vec::with_capacity(outcomes);
    let mut current = r.random_range(-2.0..0.0);
    for _ in 0..outcomes {
        values.push(current);
        current += r.random_range(0.25..1.5);
    }

    let projections = (0..outcomes)
        .map(|a| {
            let mut p = Matrix::zeros(dim, dim);
            for (col, &label) in labels.iter().enumerate() {
                if label == a {
                    let v = u.matrix().column(col);
                    p += v * v.adjoint();
                }
            }
            ComplexOperator::from_matrix(p).expect("square finite matrix")
        })
        .collect();
    Observable::new(values, projections).expect("random spectral measure is valid")
}

/// A-compatible instrument for a random observable: atom `a` has Kraus operators
/// `B_{a,k} E_a` where the `B_{a,k}` stack into an isometry, so `Σ_k M†M = E_a`.
pub fn random_instrument<R: Rng + ?Sized>(r: &mut R, dim: usize, outcomes: usize) -> Instrument {
    let observable = random_observable(r, dim, outcomes);
    let atoms = (0..outcomes)
        .map(|a| {
            let count = r.random_range(1..=3usize);
            let u = random_unitary(r, dim * count);
            let e = observable.projection(a).matrix();
            let kraus = (0..count)
                .map(|k| u.matrix().view((k * dim, 0), (dim, dim)) * e)
                .collect();
            CPMap::new(dim, dim, kraus).expect("square Kraus operators")
        })
        .collect();
    Instrument::new(observable, atoms).expect("atoms match observable")
}

/// Generic model: mixed `σ`, Haar-like coupling, random probe observable.
/// Probe outcomes correspond to measured outcomes by index where both exist.
pub fn random_apparatus<R: Rng + ?Sized>(r: &mut R, dim_h: usize, dim_k: usize) -> ApparatusModel {
    let rank = r.random_range(1..=dim_k);
    let sigma = random_density(r, dim_k, rank);
    let coupling = random_unitary(r, dim_h * dim_k);
    let probe_count = r.random_range(1..=dim_k);
    let probe = random_observable(r, dim_k, probe_count);
    let measured_count = r.random_range(1..=dim_h);
    let measured = random_observable(r, dim_h, measured_count);
    let correspondence = (0..probe.outcome_count())
        .map(|b| (b < measured.outcome_count()).then_some(b))
        .collect();
    ApparatusModel::new(sigma, coupling, probe, measured, correspondence)
        .expect("random model is well formed")
}
