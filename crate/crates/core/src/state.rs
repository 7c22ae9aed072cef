//! Two-qubit polarization states.
//!
//! Basis order is fixed everywhere in the crate as |HH>, |HV>, |VH>, |VV>,
//! i.e. index `2·a + b` for photon polarizations `a`, `b` with H = 0, V = 1.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{eigh, ComplexMatrix};
use crate::{Error, Result, C64};

pub const TRACE_TOL: f64 = 1e-12;
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues down to this value are float noise and clamp to zero.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

/// Polarization of a single photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const ALL: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

/// Index of |ab> in the two-qubit basis.
pub fn basis_index(a: Pol, b: Pol) -> usize {
    2 * a.index() + b.index()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    /// (|HH> + |VV>)/√2, the distributed state.
    PhiPlus,
    /// (|HH> − |VV>)/√2
    PhiMinus,
    /// (|HV> + |VH>)/√2
    PsiPlus,
    /// (|HV> − |VH>)/√2
    PsiMinus,
}

impl BellKind {
    pub fn amplitudes(self) -> [C64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let p = C64::new(s, 0.0);
        match self {
            BellKind::PhiPlus => [p, z, z, p],
            BellKind::PhiMinus => [p, z, z, -p],
            BellKind::PsiPlus => [z, p, p, z],
            BellKind::PsiMinus => [z, p, -p, z],
        }
    }
}

/// A validated 4×4 density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState {
    rho: ComplexMatrix,
}

impl TwoQubitState {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if rho.dims() != (4, 4) {
            return Err(Error::domain(format!(
                "density matrix must be 4x4, got {}x{}",
                rho.rows(),
                rho.cols()
            )));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::domain(format!("trace is {tr}, expected 1")));
        }
        let herm = rho.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::domain(format!(
                "density matrix not Hermitian (max |rho - rho†| = {herm:.3e})"
            )));
        }
        let min = eigh(&rho)?.values[0];
        if min < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { rho })
    }

    /// For constructions that preserve the invariants by design.
    pub(crate) fn new_unchecked(rho: ComplexMatrix) -> Self {
        debug_assert_eq!(rho.dims(), (4, 4));
        Self { rho }
    }

    pub fn bell(kind: BellKind) -> Self {
        Self::pure(&kind.amplitudes()).expect("Bell amplitudes are normalised")
    }

    /// |ψ><ψ| for a normalised vector ψ.
    pub fn pure(psi: &[C64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::domain(format!(
                "state vector norm² is {norm}, expected 1"
            )));
        }
        Ok(Self::new_unchecked(ComplexMatrix::outer(psi, psi)))
    }

    pub fn maximally_mixed() -> Self {
        Self::new_unchecked(ComplexMatrix::identity(4).scale(0.25))
    }

    /// |ab><ab|
    pub fn product(a: Pol, b: Pol) -> Self {
        let mut diag = [0.0; 4];
        diag[basis_index(a, b)] = 1.0;
        Self::new_unchecked(ComplexMatrix::from_real_diagonal(&diag))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.rho.get(row, col)
    }

    /// Eigenvalues ascending, with float noise in [−1e-10, 0) clamped to 0.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.rho)
            .expect("density matrices are Hermitian")
            .values
            .into_iter()
            .map(|x| {
                if (-NEGATIVE_EIGENVALUE_TOL..0.0).contains(&x) {
                    0.0
                } else {
                    x
                }
            })
            .collect()
    }

    /// Tr[ρ·op]
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (&self.rho * op).trace()
    }

    /// U ρ U† for a 4×4 unitary U.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        let out = &(u * &self.rho) * &u.adjoint();
        Self::new_unchecked(out.hermitian_part())
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.rho - &other.rho;
        let ev = eigh(&diff.hermitian_part()).expect("difference of Hermitian matrices");
        0.5 * ev.values.iter().map(|x| x.abs()).sum::<f64>()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    re: f64,
    im: f64,
}

/// Serialized as 16 `{re, im}` entries in row-major order.
impl Serialize for TwoQubitState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = self
            .rho
            .to_row_major()
            .into_iter()
            .map(|z| Entry { re: z.re, im: z.im })
            .collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TwoQubitState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let entries = Vec::<Entry>::deserialize(deserializer)?;
        if entries.len() != 16 {
            return Err(D::Error::invalid_length(
                entries.len(),
                &"16 matrix entries",
            ));
        }
        let z: Vec<C64> = entries.iter().map(|e| C64::new(e.re, e.im)).collect();
        TwoQubitState::new(ComplexMatrix::from_row_slice(4, 4, &z)).map_err(D::Error::custom)
    }
}
