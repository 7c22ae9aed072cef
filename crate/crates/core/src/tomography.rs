//! Polarization state tomography from simulated coincidence counts.
//!
//! Sixteen product projectors are measured with equal acquisition time each;
//! counts are Poisson distributed with mean N·Tr[ρ P_i]. States are
//! reconstructed by linear inversion (with projection onto the physical set)
//! or by maximizing the Poisson likelihood.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, matrix_sqrt_psd, ComplexMatrix};
use crate::measures::{chsh_max, concurrence, fidelity_with_bell, pauli_product};
use crate::state::{BellKind, TwoQubitState};
use crate::{Error, Result, C64};

/// A rank-1 two-photon projector.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub label: String,
    pub projector: ComplexMatrix,
}

fn single_photon_state(c: char) -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match c {
        'H' => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        'V' => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        'D' => [C64::new(s, 0.0), C64::new(s, 0.0)],
        'R' => [C64::new(s, 0.0), C64::new(0.0, -s)],
        'L' => [C64::new(s, 0.0), C64::new(0.0, s)],
        _ => panic!("unknown polarization label {c}"),
    }
}

impl MeasurementSetting {
    /// Product projector from a two-letter label over {H, V, D, R, L}.
    pub fn from_label(label: &str) -> Self {
        let chars: Vec<char> = label.chars().collect();
        assert_eq!(chars.len(), 2, "setting labels have two letters");
        let (a, b) = (single_photon_state(chars[0]), single_photon_state(chars[1]));
        let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        Self {
            label: label.to_string(),
            projector: ComplexMatrix::outer(&v, &v),
        }
    }

    pub fn probability(&self, rho: &TwoQubitState) -> f64 {
        rho.expectation(&self.projector).re
    }
}

/// The sixteen-setting two-qubit tomography sequence.
pub const STANDARD_LABELS: [&str; 16] = [
    "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH", "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL",
];

pub fn standard_settings() -> Vec<MeasurementSetting> {
    STANDARD_LABELS
        .iter()
        .map(|l| MeasurementSetting::from_label(l))
        .collect()
}

/// Mean counts N·Tr[ρ P_i].
pub fn expected_counts(
    rho: &TwoQubitState,
    settings: &[MeasurementSetting],
    n_per_setting: f64,
) -> Vec<f64> {
    settings
        .iter()
        .map(|s| (n_per_setting * s.probability(rho)).max(0.0))
        .collect()
}

fn poisson_counts(
    rng: &mut ChaCha8Rng,
    rho: &TwoQubitState,
    settings: &[MeasurementSetting],
    n_per_setting: u64,
) -> Vec<u64> {
    expected_counts(rho, settings, n_per_setting as f64)
        .into_iter()
        .map(|mean| {
            if mean <= 0.0 {
                0
            } else {
                Poisson::new(mean)
                    .expect("positive finite mean")
                    .sample(rng) as u64
            }
        })
        .collect()
}

/// Poisson coincidence counts, deterministic for a given seed.
pub fn simulate_counts(
    rho: &TwoQubitState,
    settings: &[MeasurementSetting],
    n_per_setting: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if n_per_setting == 0 {
        return Err(Error::domain("counts per setting must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(poisson_counts(&mut rng, rho, settings, n_per_setting))
}

/// Real design matrix B_ik = Tr[P_i Γ_k] for the Hermitian basis Γ_k = σa⊗σb/2.
fn design_matrix(settings: &[MeasurementSetting]) -> (DMatrix<f64>, Vec<ComplexMatrix>) {
    let basis: Vec<ComplexMatrix> = (0..16)
        .map(|k| pauli_product(k / 4, k % 4).scale(0.5))
        .collect();
    let b = DMatrix::from_fn(settings.len(), 16, |i, k| {
        (&settings[i].projector * &basis[k]).trace().re
    });
    (b, basis)
}

fn check_inputs(settings: &[MeasurementSetting], counts: &[f64], n_per_setting: f64) -> Result<()> {
    if settings.len() != counts.len() {
        return Err(Error::domain(format!(
            "{} settings but {} counts",
            settings.len(),
            counts.len()
        )));
    }
    if !(n_per_setting.is_finite() && n_per_setting > 0.0) {
        return Err(Error::domain("counts per setting must be positive"));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::domain("counts must be finite and nonnegative"));
    }
    Ok(())
}

/// Closest unit-trace PSD matrix by eigenvalue clipping and renormalization.
pub fn project_to_physical(m: &ComplexMatrix) -> Result<TwoQubitState> {
    let eig = eigh(&m.hermitian_part())?;
    let total: f64 = eig.values.iter().map(|x| x.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::domain("estimate has no positive eigenvalues"));
    }
    let rho = eig.map_values(|x| x.max(0.0) / total).hermitian_part();
    Ok(TwoQubitState::new_unchecked(rho))
}

/// Least-squares inversion of measured frequencies followed by projection
/// onto the physical states.
pub fn reconstruct_linear(
    settings: &[MeasurementSetting],
    counts: &[f64],
    n_per_setting: f64,
) -> Result<TwoQubitState> {
    check_inputs(settings, counts, n_per_setting)?;
    let (b, basis) = design_matrix(settings);
    let svd = b.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if settings.len() < 16 || smin <= 1e-12 * smax {
        return Err(Error::domain(
            "measurement settings are not informationally complete",
        ));
    }
    let p = DVector::from_iterator(counts.len(), counts.iter().map(|c| c / n_per_setting));
    let r = svd.solve(&p, 1e-12 * smax).map_err(Error::domain)?;
    let mut m = ComplexMatrix::zeros(4, 4);
    for (k, g) in basis.iter().enumerate() {
        m = &m + &g.scale(r[k]);
    }
    project_to_physical(&m)
}

/// Σ_i [c_i ln μ_i − μ_i] with μ_i = N·Tr[ρ P_i] (constant terms dropped).
pub fn log_likelihood(
    rho: &TwoQubitState,
    settings: &[MeasurementSetting],
    counts: &[f64],
    n_per_setting: f64,
) -> f64 {
    settings
        .iter()
        .zip(counts)
        .map(|(s, &c)| {
            let mu = n_per_setting * s.probability(rho).max(0.0);
            if c == 0.0 {
                -mu
            } else if mu <= 0.0 {
                f64::NEG_INFINITY
            } else {
                c * mu.ln() - mu
            }
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Stop when the log-likelihood gain per iteration falls below
    /// `tol · (1 + |logL|)`.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MleReconstruction {
    pub state: TwoQubitState,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached; `state` is then the last iterate.
    pub converged: bool,
    /// Log-likelihood after every accepted iteration, starting point first.
    pub history: Vec<f64>,
}

// Share of I/4 mixed into the linear estimate so the iteration starts at full rank.
const MLE_START_MIXING: f64 = 1e-3;

fn normalized(t: &ComplexMatrix) -> (ComplexMatrix, TwoQubitState) {
    let a = &t.adjoint() * t;
    let tr = a.trace().re;
    let t = t.scale(1.0 / tr.sqrt());
    let rho = a.scale(1.0 / tr).hermitian_part();
    (t, TwoQubitState::new_unchecked(rho))
}

/// Maximum-likelihood reconstruction over ρ = T†T / Tr(T†T).
///
/// Each iteration is a gradient step T ← T(I + εM) where M is the
/// trace-projected likelihood gradient; ε is backtracked until the
/// log-likelihood does not decrease. The iteration starts from the
/// linear-inversion estimate, and that estimate is returned instead if it
/// scores higher than the final iterate.
pub fn reconstruct_mle(
    settings: &[MeasurementSetting],
    counts: &[f64],
    n_per_setting: f64,
    max_iter: usize,
    tol: f64,
) -> Result<MleReconstruction> {
    let linear = reconstruct_linear(settings, counts, n_per_setting)?;
    let linear_ll = log_likelihood(&linear, settings, counts, n_per_setting);

    let start = &linear.matrix().scale(1.0 - MLE_START_MIXING)
        + &ComplexMatrix::identity(4).scale(0.25 * MLE_START_MIXING);
    let (mut t, mut rho) = normalized(&matrix_sqrt_psd(&start)?);
    let mut ll = log_likelihood(&rho, settings, counts, n_per_setting);
    let mut history = vec![ll];
    let mut step = 0.1;
    let mut converged = false;
    let mut iterations = 0;
    let identity = ComplexMatrix::identity(4);

    while iterations < max_iter {
        iterations += 1;
        let mut grad = ComplexMatrix::zeros(4, 4);
        for (s, &c) in settings.iter().zip(counts) {
            let p = s.probability(&rho).max(f64::MIN_POSITIVE);
            grad = &grad + &s.projector.scale(c / p - n_per_setting);
        }
        let shift = rho.expectation(&grad).re;
        let m = &grad - &identity.scale(shift);
        let norm = m.as_inner().norm();
        if norm == 0.0 || !norm.is_finite() {
            converged = true;
            break;
        }
        let m = m.scale(1.0 / norm);

        let accepted = loop {
            let candidate = &t * &(&identity + &m.scale(step));
            let (ct, crho) = normalized(&candidate);
            let cll = log_likelihood(&crho, settings, counts, n_per_setting);
            if cll >= ll {
                break Some((ct, crho, cll));
            }
            step *= 0.5;
            if step < 1e-18 {
                break None;
            }
        };
        let Some((ct, crho, cll)) = accepted else {
            converged = true;
            break;
        };
        let gain = cll - ll;
        t = ct;
        rho = crho;
        ll = cll;
        history.push(ll);
        step = (step * 1.5).min(1.0);
        if gain <= tol * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
    }

    if linear_ll > ll {
        return Ok(MleReconstruction {
            state: linear,
            log_likelihood: linear_ll,
            iterations,
            converged,
            history,
        });
    }
    Ok(MleReconstruction {
        state: rho,
        log_likelihood: ll,
        iterations,
        converged,
        history,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Linear,
    Mle,
}

impl Estimator {
    pub fn reconstruct(
        self,
        settings: &[MeasurementSetting],
        counts: &[f64],
        n_per_setting: f64,
    ) -> Result<TwoQubitState> {
        match self {
            Estimator::Linear => reconstruct_linear(settings, counts, n_per_setting),
            Estimator::Mle => {
                let o = MleOptions::default();
                reconstruct_mle(settings, counts, n_per_setting, o.max_iter, o.tol).map(|r| r.state)
            }
        }
    }
}

/// Standard deviations of the derived figures of merit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBars {
    pub concurrence: f64,
    /// Fidelity with |Φ+>.
    pub fidelity: f64,
    pub chsh: f64,
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Parametric bootstrap: resample Poisson counts from `rho_hat`, reconstruct
/// each resample and report the spread of concurrence, fidelity and CHSH.
///
/// Resample `r` draws from ChaCha stream `r` of `seed`, so results do not
/// depend on scheduling.
pub fn bootstrap_errors(
    rho_hat: &TwoQubitState,
    settings: &[MeasurementSetting],
    n_per_setting: u64,
    n_resamples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<ErrorBars> {
    if n_resamples < 2 {
        return Err(Error::domain("bootstrap needs at least 2 resamples"));
    }
    if n_per_setting == 0 {
        return Err(Error::domain("counts per setting must be positive"));
    }
    let samples: Vec<[f64; 3]> = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let counts: Vec<f64> = poisson_counts(&mut rng, rho_hat, settings, n_per_setting)
                .into_iter()
                .map(|c| c as f64)
                .collect();
            let rho = estimator.reconstruct(settings, &counts, n_per_setting as f64)?;
            Ok([
                concurrence(&rho)?,
                fidelity_with_bell(&rho, BellKind::PhiPlus),
                chsh_max(&rho),
            ])
        })
        .collect::<Result<_>>()?;
    let column = |i: usize| sample_std(&samples.iter().map(|s| s[i]).collect::<Vec<_>>());
    Ok(ErrorBars {
        concurrence: column(0),
        fidelity: column(1),
        chsh: column(2),
    })
}

/// One simulated tomography experiment with its reconstruction.
#[derive(Clone, Debug, Serialize)]
pub struct TomographyRun {
    pub settings: Vec<String>,
    pub counts: Vec<u64>,
    pub n_per_setting: u64,
    pub seed: u64,
    pub estimator: Estimator,
    pub reconstructed: TwoQubitState,
    pub concurrence: f64,
    pub fidelity: f64,
    pub chsh: f64,
    pub error_bars: Option<ErrorBars>,
}

/// Simulates counts from `rho`, reconstructs, and optionally bootstraps
/// error bars (bootstrap seed is derived from `seed`).
pub fn run_tomography(
    rho: &TwoQubitState,
    n_per_setting: u64,
    n_resamples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<TomographyRun> {
    let settings = standard_settings();
    let counts = simulate_counts(rho, &settings, n_per_setting, seed)?;
    reconstruct_run(
        &settings,
        counts,
        n_per_setting,
        n_resamples,
        seed,
        estimator,
    )
}

/// Reconstruction and bootstrap for already measured counts.
pub fn reconstruct_run(
    settings: &[MeasurementSetting],
    counts: Vec<u64>,
    n_per_setting: u64,
    n_resamples: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<TomographyRun> {
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let reconstructed = estimator.reconstruct(settings, &as_f64, n_per_setting as f64)?;
    let error_bars = if n_resamples >= 2 {
        Some(bootstrap_errors(
            &reconstructed,
            settings,
            n_per_setting,
            n_resamples,
            seed.wrapping_add(1),
            estimator,
        )?)
    } else {
        None
    };
    Ok(TomographyRun {
        settings: settings.iter().map(|s| s.label.clone()).collect(),
        counts,
        n_per_setting,
        seed,
        estimator,
        concurrence: concurrence(&reconstructed)?,
        fidelity: fidelity_with_bell(&reconstructed, BellKind::PhiPlus),
        chsh: chsh_max(&reconstructed),
        reconstructed,
        error_bars,
    })
}

/// Writes `setting_label,count` rows.
pub fn write_counts_csv<W: Write>(writer: W, labels: &[String], counts: &[u64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["setting_label", "count"])?;
    for (l, c) in labels.iter().zip(counts) {
        w.write_record([l.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `setting_label,count` rows and orders them like `settings`.
pub fn read_counts_csv<R: Read>(reader: R, settings: &[MeasurementSetting]) -> Result<Vec<u64>> {
    #[derive(Deserialize)]
    struct Row {
        setting_label: String,
        count: u64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut found: Vec<Option<u64>> = vec![None; settings.len()];
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let idx = settings
            .iter()
            .position(|s| s.label == row.setting_label)
            .ok_or_else(|| {
                Error::config(
                    format!("row {}", line + 1),
                    format!("unknown setting `{}`", row.setting_label),
                )
            })?;
        if found[idx].replace(row.count).is_some() {
            return Err(Error::config(
                format!("row {}", line + 1),
                format!("duplicate setting `{}`", row.setting_label),
            ));
        }
    }
    found
        .into_iter()
        .zip(settings)
        .map(|(c, s)| {
            c.ok_or_else(|| Error::config("counts", format!("missing setting `{}`", s.label)))
        })
        .collect()
}
