//! Entanglement and nonlocality figures of merit, the closed-form
//! entanglement law for Gaussian spectra, and the distance-enhancement factor.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel::FiberSpec;
use crate::linalg::{eigh, ComplexMatrix};
use crate::state::{BellKind, TwoQubitState, NEGATIVE_EIGENVALUE_TOL};
use crate::{Error, Result, C64};

fn pauli(index: usize) -> ComplexMatrix {
    let (z, o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match index {
        0 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!("pauli index out of range"),
    }
}

/// σa ⊗ σb with 0 = identity, 1..=3 = x, y, z.
pub fn pauli_product(a: usize, b: usize) -> ComplexMatrix {
    pauli(a).kron(&pauli(b))
}

/// Wootters concurrence.
///
/// The λ_i are obtained as singular values of τ = Wᵀ(σy⊗σy)W where the
/// columns of W are the eigenvectors of ρ scaled by √p_i. These equal the
/// square roots of the eigenvalues of ρ(σy⊗σy)ρ*(σy⊗σy) without losing
/// precision on rank-deficient states.
pub fn concurrence(rho: &TwoQubitState) -> Result<f64> {
    let eig = eigh(rho.matrix())?;
    if eig.values[0] < -NEGATIVE_EIGENVALUE_TOL {
        return Err(Error::domain(format!(
            "state has negative eigenvalue {:.3e}",
            eig.values[0]
        )));
    }
    let w = {
        let mut v = eig.vectors.clone().into_inner();
        for (c, &p) in eig.values.iter().enumerate() {
            let s = p.max(0.0).sqrt();
            for r in 0..4 {
                v[(r, c)] *= s;
            }
        }
        v
    };
    let yy = pauli_product(2, 2).into_inner();
    let tau = w.transpose() * yy * &w;
    let mut s: Vec<f64> = tau.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// F = <B|ρ|B>
pub fn fidelity_with_bell(rho: &TwoQubitState, kind: BellKind) -> f64 {
    let b = kind.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            acc += b[r].conj() * rho.get(r, c) * b[c];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// Correlation matrix T_ab = Tr[ρ σa⊗σb], a, b ∈ {x, y, z}.
pub fn correlation_matrix(rho: &TwoQubitState) -> Matrix3<f64> {
    Matrix3::from_fn(|a, b| rho.expectation(&pauli_product(a + 1, b + 1)).re)
}

/// Maximal CHSH value over measurement settings, 2√(u1 + u2) with u1, u2 the
/// two largest eigenvalues of TᵀT.
pub fn chsh_max(rho: &TwoQubitState) -> f64 {
    let t = correlation_matrix(rho);
    let mut u: Vec<f64> = SymmetricEigen::new(t.transpose() * t)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0))
        .collect();
    u.sort_by(|a, b| b.total_cmp(a));
    2.0 * (u[0] + u[1]).sqrt()
}

/// Concurrence of |Φ+> after Gaussian-spectrum fibers:
/// E = exp[−C11/2·(τ1² + τ2² + 2Kτ1τ2)].
pub fn entanglement_gaussian(c11: f64, k: f64, fiber1: &FiberSpec, fiber2: &FiberSpec) -> f64 {
    let (t1, t2) = (fiber1.delay(), fiber2.delay());
    (-0.5 * c11 * (t1 * t1 + t2 * t2 + 2.0 * k * t1 * t2)).exp()
}

/// R(K) = 1/√(1 − |K|); `f64::INFINITY` at |K| = 1.
pub fn enhancement_closed_form(k: f64) -> Result<f64> {
    if !(k.is_finite() && k.abs() <= 1.0) {
        return Err(Error::domain(format!("|K| must be at most 1, got {k}")));
    }
    if k.abs() == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (1.0 - k.abs()).sqrt())
}

fn check_unit_interval(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// R = √(2 ln E(L,0) / ln E_K(L,L)) from one-arm and two-arm entanglement.
pub fn enhancement_from_entanglements(e_loc: f64, e_nl: f64) -> Result<f64> {
    check_unit_interval(e_loc, "one-arm entanglement")?;
    check_unit_interval(e_nl, "two-arm entanglement")?;
    Ok((2.0 * e_loc.ln() / e_nl.ln()).sqrt())
}

/// Effective Gaussian parameters consistent with a pair of measured
/// entanglement values, assuming matched arms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub k_effective: f64,
    /// C11·τ² for a single arm.
    pub c11_tau_sq: f64,
    pub r_closed_form: f64,
    pub r_from_entanglements: f64,
}

/// Inverts the entanglement law: C11τ² = −2 ln E(L,0) and
/// 1 + K = −ln E_K(L,L) / C11τ².
pub fn infer_effective_parameters(e_loc: f64, e_nl: f64) -> Result<EnhancementReport> {
    let r_from_entanglements = enhancement_from_entanglements(e_loc, e_nl)?;
    let c11_tau_sq = -2.0 * e_loc.ln();
    let k_effective = -e_nl.ln() / c11_tau_sq - 1.0;
    if k_effective > 1.0 {
        return Err(Error::domain(format!(
            "entanglement pair implies K = {k_effective:.4} > 1"
        )));
    }
    Ok(EnhancementReport {
        k_effective,
        c11_tau_sq,
        r_closed_form: enhancement_closed_form(k_effective)?,
        r_from_entanglements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Pol;

    fn dephased_phi_plus(g: C64) -> TwoQubitState {
        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(0, 0, C64::new(0.5, 0.0));
        m.set(3, 3, C64::new(0.5, 0.0));
        m.set(0, 3, g * 0.5);
        m.set(3, 0, g.conj() * 0.5);
        TwoQubitState::new(m).unwrap()
    }

    #[test]
    fn concurrence_examples() {
        assert!(
            (concurrence(&TwoQubitState::bell(BellKind::PhiPlus)).unwrap() - 1.0).abs() < 1e-14
        );
        assert!(concurrence(&TwoQubitState::maximally_mixed()).unwrap() < 1e-14);
        let c = concurrence(&dephased_phi_plus(C64::new(0.5, 0.0))).unwrap();
        assert!((c - 0.5).abs() < 1e-14);
        let c = concurrence(&dephased_phi_plus(C64::from_polar(0.3, 2.1))).unwrap();
        assert!((c - 0.3).abs() < 1e-14);
        assert!(concurrence(&TwoQubitState::product(Pol::H, Pol::V)).unwrap() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let phi = TwoQubitState::bell(BellKind::PhiPlus);
        assert!((fidelity_with_bell(&phi, BellKind::PhiPlus) - 1.0).abs() < 1e-15);
        assert!(fidelity_with_bell(&phi, BellKind::PsiMinus).abs() < 1e-15);
        for kind in [
            BellKind::PhiPlus,
            BellKind::PhiMinus,
            BellKind::PsiPlus,
            BellKind::PsiMinus,
        ] {
            let f = fidelity_with_bell(&TwoQubitState::maximally_mixed(), kind);
            assert!((f - 0.25).abs() < 1e-15);
        }
        let f = fidelity_with_bell(&dephased_phi_plus(C64::new(0.04, 0.0)), BellKind::PhiPlus);
        assert!((f - 0.52).abs() < 1e-15);
    }

    #[test]
    fn chsh_examples() {
        let s = chsh_max(&TwoQubitState::bell(BellKind::PhiPlus));
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let s = chsh_max(&TwoQubitState::product(Pol::H, Pol::H));
        assert!((s - 2.0).abs() < 1e-12);
        // T = diag(0.96, -0.96, 1) for the dephased Bell state
        let rho = dephased_phi_plus(C64::new(0.96, 0.0));
        let t = correlation_matrix(&rho);
        assert!((t[(0, 0)] - 0.96).abs() < 1e-14);
        assert!((t[(1, 1)] + 0.96).abs() < 1e-14);
        assert!((t[(2, 2)] - 1.0).abs() < 1e-14);
        let want = 2.0 * (1.0f64 + 0.96 * 0.96).sqrt();
        assert!((chsh_max(&rho) - want).abs() < 1e-12);
        assert!((want - 2.772).abs() < 1e-3);
    }

    #[test]
    fn entanglement_law_examples() {
        let none = FiberSpec::none();
        assert_eq!(entanglement_gaussian(4e25, 0.3, &none, &none), 1.0);

        let f = FiberSpec::new(1000.0, 4e-4).unwrap();
        assert_eq!(entanglement_gaussian(4e25, -1.0, &f, &f), 1.0);

        // C11τ² = 1 per arm, K = 0
        let tau = f.delay();
        let c11 = 1.0 / (tau * tau);
        let e = entanglement_gaussian(c11, 0.0, &f, &f);
        assert!((e - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_enhancement() {
        assert_eq!(enhancement_closed_form(0.0).unwrap(), 1.0);
        assert!((enhancement_closed_form(-0.75).unwrap() - 2.0).abs() < 1e-14);
        assert!((enhancement_closed_form(-0.9937).unwrap() - 12.6).abs() < 0.05);
        assert_eq!(enhancement_closed_form(-1.0).unwrap(), f64::INFINITY);
        assert!(enhancement_closed_form(1.2).is_err());
        let mut prev = 0.0;
        for i in 0..100 {
            let r = enhancement_closed_form(-(i as f64) / 100.0).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn enhancement_from_measured_pairs() {
        let r = enhancement_from_entanglements(0.04, 0.24).unwrap();
        let hand = (2.0 * 0.04f64.ln() / 0.24f64.ln()).sqrt();
        assert_eq!(r, hand);
        assert!((r - 2.12).abs() < 0.01);
        let r = enhancement_from_entanglements(0.04, 0.96).unwrap();
        assert!((r - 12.56).abs() < 0.02);
        let r = enhancement_from_entanglements(0.3, 0.09).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
        for (a, b) in [(0.0, 0.5), (0.5, 1.0), (1.2, 0.5), (0.5, -0.1)] {
            assert!(matches!(
                enhancement_from_entanglements(a, b),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn inferred_parameters() {
        let rep = infer_effective_parameters(0.04, 0.24).unwrap();
        assert!((rep.c11_tau_sq - 6.44).abs() < 0.005);
        assert!((rep.k_effective + 0.778).abs() < 5e-4);
        assert!((rep.r_from_entanglements - 2.12).abs() < 0.01);
        assert!((rep.r_closed_form - rep.r_from_entanglements).abs() < 1e-9);

        // substitute back: E_K(L,L) = exp(-C11τ²(1+K))
        let back = (-rep.c11_tau_sq * (1.0 + rep.k_effective)).exp();
        assert!((back - 0.24).abs() < 1e-14);

        let rep = infer_effective_parameters(0.04, 0.96).unwrap();
        assert!((rep.k_effective + 0.9937).abs() < 5e-5);
        assert!((rep.r_closed_form - 12.56).abs() < 0.02);

        let rep = infer_effective_parameters(0.5, 0.25).unwrap();
        assert!(rep.k_effective.abs() < 1e-14);
        assert!((rep.r_closed_form - 1.0).abs() < 1e-14);

        assert!(infer_effective_parameters(0.5, 0.01).is_err());
    }
}
