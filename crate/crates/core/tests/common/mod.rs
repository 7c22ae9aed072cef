#![allow(dead_code)]

use pmd_entangle::channel::FiberSpec;
use pmd_entangle::linalg::ComplexMatrix;
use pmd_entangle::state::TwoQubitState;
use pmd_entangle::{C64, SPEED_OF_LIGHT};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn normal_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre-distributed mixed state of the given rank.
pub fn random_state<R: Rng>(rng: &mut R, rank: usize) -> TwoQubitState {
    let g = ComplexMatrix::from_fn(4, rank, |_, _| normal_c64(rng));
    let a = &g * &g.adjoint();
    let tr = a.trace().re;
    TwoQubitState::new(a.scale(1.0 / tr).hermitian_part()).unwrap()
}

/// Haar-ish single-qubit unitary from Euler angles.
pub fn random_unitary_2<R: Rng>(rng: &mut R) -> ComplexMatrix {
    let tau = std::f64::consts::TAU;
    let (a, b, c, d): (f64, f64, f64, f64) = (
        rng.random::<f64>() * tau,
        rng.random::<f64>() * tau,
        rng.random::<f64>().acos() * 2.0,
        rng.random::<f64>() * tau,
    );
    let (cos, sin) = ((c / 2.0).cos(), (c / 2.0).sin());
    let e = |x: f64| C64::from_polar(1.0, x);
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            e(d + (-a - b) / 2.0) * cos,
            -e(d + (-a + b) / 2.0) * sin,
            e(d + (a - b) / 2.0) * sin,
            e(d + (a + b) / 2.0) * cos,
        ],
    )
}

/// |Φ+> after a pure-dephasing channel with coherence factor `g`.
pub fn dephased_phi_plus(g: C64) -> TwoQubitState {
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, C64::new(0.5, 0.0));
    m.set(3, 3, C64::new(0.5, 0.0));
    m.set(0, 3, g * 0.5);
    m.set(3, 0, g.conj() * 0.5);
    TwoQubitState::new(m).unwrap()
}

/// Fiber whose differential group delay is exactly `tau` seconds.
pub fn fiber_with_delay(tau: f64) -> FiberSpec {
    FiberSpec::new(tau * SPEED_OF_LIGHT / 1e-3, 1e-3).unwrap()
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))².
pub fn uhlmann_fidelity(rho: &TwoQubitState, sigma: &TwoQubitState) -> f64 {
    let s = pmd_entangle::linalg::matrix_sqrt_psd(rho.matrix()).unwrap();
    let inner = (&(&s * sigma.matrix()) * &s).hermitian_part();
    let root: f64 = pmd_entangle::linalg::eigvals_hermitian(&inner)
        .unwrap()
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .sum();
    root * root
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
