//! The bipartite polarization-mode-dispersion channel.
//!
//! Each photon travels through its own birefringent fiber, acquiring a
//! frequency-dependent phase between its H and V components. Averaged over
//! the joint spectrum, an operator |ij><kl| is multiplied by
//!
//! f_ijkl = G(s(i,k)·τ1, s(j,l)·τ2),   s(H,V) = +1, s(V,H) = −1, s(x,x) = 0,
//!
//! which reproduces the five listed cases (1, G(0,τ2), G(τ1,0), G(τ1,τ2),
//! G(τ1,−τ2)) and completes the remaining entries through f_klij = f*_ijkl.

use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::spectra::{GaussianJointSpectrum, TabulatedJointSpectrum};
use crate::state::{basis_index, Pol, TwoQubitState};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Birefringence used when a fiber's Δn is not given (panda-type PM fiber).
pub const DEFAULT_BIREFRINGENCE: f64 = 4.0e-4;

fn default_birefringence() -> f64 {
    DEFAULT_BIREFRINGENCE
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub length_m: f64,
    #[serde(default = "default_birefringence")]
    pub delta_n: f64,
}

impl FiberSpec {
    pub fn new(length_m: f64, delta_n: f64) -> Result<Self> {
        let f = Self { length_m, delta_n };
        f.validate()?;
        Ok(f)
    }

    pub fn with_default_birefringence(length_m: f64) -> Result<Self> {
        Self::new(length_m, DEFAULT_BIREFRINGENCE)
    }

    /// Fiber of zero length (no dephasing).
    pub fn none() -> Self {
        Self {
            length_m: 0.0,
            delta_n: DEFAULT_BIREFRINGENCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m.is_finite() && self.length_m >= 0.0) {
            return Err(Error::domain(format!(
                "fiber length must be >= 0, got {}",
                self.length_m
            )));
        }
        if !(self.delta_n.is_finite() && self.delta_n >= 0.0) {
            return Err(Error::domain(format!(
                "birefringence must be >= 0, got {}",
                self.delta_n
            )));
        }
        Ok(())
    }

    /// Differential group delay τ = Δn·L/c in seconds.
    pub fn delay(&self) -> f64 {
        self.delta_n * self.length_m / SPEED_OF_LIGHT
    }
}

/// Joint frequency distribution driving the channel.
#[derive(Clone, Debug, PartialEq)]
pub enum JointSpectrum {
    Gaussian(GaussianJointSpectrum),
    Tabulated(TabulatedJointSpectrum),
}

impl JointSpectrum {
    /// Decoherence function in the closed-form Gaussian phase convention,
    /// e^{+iω0(τ1+τ2)/2}. The tabulated transform uses e^{−iωτ}, so it is
    /// evaluated at (−τ1, −τ2), which conjugates G and leaves |G| unchanged.
    pub fn decoherence(&self, tau1: f64, tau2: f64) -> C64 {
        match self {
            JointSpectrum::Gaussian(s) => s.decoherence(tau1, tau2),
            JointSpectrum::Tabulated(s) => s.decoherence(-tau1, -tau2),
        }
    }
}

impl From<GaussianJointSpectrum> for JointSpectrum {
    fn from(s: GaussianJointSpectrum) -> Self {
        JointSpectrum::Gaussian(s)
    }
}

impl From<TabulatedJointSpectrum> for JointSpectrum {
    fn from(s: TabulatedJointSpectrum) -> Self {
        JointSpectrum::Tabulated(s)
    }
}

/// Delay signs (s1, s2) for every (row, column) = (|ij>, |kl>) entry:
/// f_ijkl = G(s1·τ1, s2·τ2). Rows and columns follow HH, HV, VH, VV.
pub const DELAY_SIGNS: [[(i8, i8); 4]; 4] = [
    //  HH        HV        VH        VV
    [(0, 0), (0, 1), (1, 0), (1, 1)],     // HH
    [(0, -1), (0, 0), (1, -1), (1, 0)],   // HV
    [(-1, 0), (-1, 1), (0, 0), (0, 1)],   // VH
    [(-1, -1), (-1, 0), (0, -1), (0, 0)], // VV
];

#[derive(Clone, Debug, PartialEq)]
pub struct PmdChannel {
    spectrum: JointSpectrum,
    fiber1: FiberSpec,
    fiber2: FiberSpec,
}

impl PmdChannel {
    pub fn new(
        spectrum: impl Into<JointSpectrum>,
        fiber1: FiberSpec,
        fiber2: FiberSpec,
    ) -> Result<Self> {
        fiber1.validate()?;
        fiber2.validate()?;
        Ok(Self {
            spectrum: spectrum.into(),
            fiber1,
            fiber2,
        })
    }

    /// One-arm channel: only the first photon passes through a fiber.
    pub fn local(spectrum: impl Into<JointSpectrum>, fiber: FiberSpec) -> Result<Self> {
        Self::new(spectrum, fiber, FiberSpec::none())
    }

    pub fn spectrum(&self) -> &JointSpectrum {
        &self.spectrum
    }

    pub fn fiber1(&self) -> &FiberSpec {
        &self.fiber1
    }

    pub fn fiber2(&self) -> &FiberSpec {
        &self.fiber2
    }

    pub fn delays(&self) -> (f64, f64) {
        (self.fiber1.delay(), self.fiber2.delay())
    }

    /// G at the channel's delays, the HH–VV coherence factor.
    pub fn decoherence(&self) -> C64 {
        let (t1, t2) = self.delays();
        self.spectrum.decoherence(t1, t2)
    }

    /// The coefficient f_ijkl multiplying |ij><kl|.
    pub fn coefficient(&self, i: Pol, j: Pol, k: Pol, l: Pol) -> C64 {
        let (s1, s2) = DELAY_SIGNS[basis_index(i, j)][basis_index(k, l)];
        if (s1, s2) == (0, 0) {
            return C64::new(1.0, 0.0);
        }
        let (t1, t2) = self.delays();
        self.spectrum
            .decoherence(f64::from(s1) * t1, f64::from(s2) * t2)
    }

    /// All sixteen coefficients as a matrix indexed like the density matrix.
    pub fn coefficient_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for i in Pol::ALL {
            for j in Pol::ALL {
                for k in Pol::ALL {
                    for l in Pol::ALL {
                        m.set(
                            basis_index(i, j),
                            basis_index(k, l),
                            self.coefficient(i, j, k, l),
                        );
                    }
                }
            }
        }
        m
    }

    /// Element-wise product of the coefficient table with ρ.
    pub fn apply(&self, rho: &TwoQubitState) -> TwoQubitState {
        let out = self.coefficient_matrix().hadamard(rho.matrix());
        TwoQubitState::new_unchecked(out)
    }

    /// Choi matrix J = Σ_ab |a><b| ⊗ Φ(|a><b|) on input ⊗ output.
    pub fn choi(&self) -> ChoiMatrix {
        let f = self.coefficient_matrix();
        let mut j = ComplexMatrix::zeros(16, 16);
        for a in 0..4 {
            for b in 0..4 {
                j.set(a * 4 + a, b * 4 + b, f.get(a, b));
            }
        }
        ChoiMatrix(j)
    }

    /// Largest deviation of the two-arm coefficients from the product of the
    /// single-arm ones.
    pub fn factorization_defect(&self) -> f64 {
        let (t1, t2) = self.delays();
        let g = |a, b| self.spectrum.decoherence(a, b);
        let plus = (g(t1, t2) - g(t1, 0.0) * g(0.0, t2)).norm();
        let minus = (g(t1, -t2) - g(t1, 0.0) * g(0.0, -t2)).norm();
        plus.max(minus)
    }

    /// Whether Φ_{L1,L2} = Φ_{L1} ⊗ Φ_{L2} within `tol`.
    pub fn is_factorizable(&self, tol: f64) -> bool {
        self.factorization_defect() <= tol
    }
}

/// 16×16 Choi matrix of a two-qubit channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix(pub ComplexMatrix);

impl ChoiMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(crate::linalg::eigvals_hermitian(&self.0)?[0])
    }

    /// max |Tr_out J − I|
    pub fn trace_preservation_error(&self) -> Result<f64> {
        let t = crate::linalg::partial_trace(&self.0, crate::linalg::Subsystem::Output)?;
        Ok(t.max_abs_diff(&ComplexMatrix::identity(4)))
    }
}

/// Rotates the HH–VV coherence of `rho` onto the positive real axis with a
/// local phase on the second photon. Concurrence and CHSH are unchanged.
pub fn compensate_phase(rho: &TwoQubitState) -> TwoQubitState {
    let c = rho.get(0, 3);
    if c.norm() == 0.0 {
        return rho.clone();
    }
    let theta = c.arg();
    let one = C64::new(1.0, 0.0);
    let phase = C64::from_polar(1.0, theta);
    let u = ComplexMatrix::from_diagonal(&[one, phase, one, phase]);
    rho.conjugate_by(&u)
}
