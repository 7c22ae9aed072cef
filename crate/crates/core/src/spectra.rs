//! Joint two-photon frequency distributions and the decoherence function
//!
//! G(τ1, τ2) = ∫∫ P(ω1, ω2) exp[−i(ω1τ1 + ω2τ2)] dω1 dω2,
//!
//! evaluated in closed form for Gaussian spectra and by a weighted sum for
//! tabulated ones.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// FWHM / σ for a Gaussian line: 2√(2 ln 2).
pub fn fwhm_factor() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

/// A spectral width in one of the units used to specify sources and filters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralWidth {
    /// Wavelength FWHM around a center wavelength, both in nm.
    FwhmWavelengthNm { fwhm_nm: f64, center_nm: f64 },
    /// Frequency FWHM in Hz.
    FwhmFrequencyHz(f64),
    /// Standard deviation of angular frequency in rad/s.
    SigmaAngular(f64),
}

impl SpectralWidth {
    /// Standard deviation of angular frequency, rad/s.
    pub fn sigma_angular(&self) -> Result<f64> {
        sigma_from_width(self)
    }

    pub fn fwhm_hz_from_sigma(sigma: f64) -> Self {
        SpectralWidth::FwhmFrequencyHz(sigma * fwhm_factor() / (2.0 * PI))
    }

    pub fn fwhm_nm_from_sigma(sigma: f64, center_nm: f64) -> Self {
        let fwhm_hz = sigma * fwhm_factor() / (2.0 * PI);
        let center_m = center_nm * 1e-9;
        let fwhm_m = fwhm_hz * center_m * center_m / SPEED_OF_LIGHT;
        SpectralWidth::FwhmWavelengthNm {
            fwhm_nm: fwhm_m * 1e9,
            center_nm,
        }
    }
}

fn positive(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

/// Converts a width to σ_ω (rad/s) assuming a Gaussian line shape.
///
/// Wavelength widths convert through Δν = cΔλ/λ².
pub fn sigma_from_width(width: &SpectralWidth) -> Result<f64> {
    match *width {
        SpectralWidth::SigmaAngular(s) => positive(s, "sigma"),
        SpectralWidth::FwhmFrequencyHz(f) => {
            Ok(2.0 * PI * positive(f, "frequency FWHM")? / fwhm_factor())
        }
        SpectralWidth::FwhmWavelengthNm { fwhm_nm, center_nm } => {
            let dl = positive(fwhm_nm, "wavelength FWHM")? * 1e-9;
            let l = positive(center_nm, "center wavelength")? * 1e-9;
            let dnu = SPEED_OF_LIGHT * dl / (l * l);
            Ok(2.0 * PI * dnu / fwhm_factor())
        }
    }
}

/// Sign convention of the frequency correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSign {
    Anticorrelated,
    Correlated,
}

/// Correlation coefficient of the two photon frequencies for a pump of
/// width `pump_sigma` and photons of marginal width `photon_sigma`.
///
/// Energy conservation fixes Var(ω1 + ω2) to the pump variance, so
/// 2·C11·(1 + K) = σ_p², i.e. K = σ_p²/(2σ²) − 1. The sign flag returns ±|K|.
pub fn correlation_from_bandwidths(
    pump_sigma: f64,
    photon_sigma: f64,
    sign: CorrelationSign,
) -> Result<f64> {
    if !(pump_sigma.is_finite() && pump_sigma >= 0.0) {
        return Err(Error::domain(format!(
            "pump sigma must be nonnegative, got {pump_sigma}"
        )));
    }
    positive(photon_sigma, "photon sigma")?;
    let ratio = pump_sigma * pump_sigma / (photon_sigma * photon_sigma);
    if ratio > 4.0 {
        return Err(Error::domain(format!(
            "pump variance exceeds 4x the photon variance (ratio {ratio:.4}); |K| would exceed 1"
        )));
    }
    let k = 0.5 * ratio - 1.0;
    Ok(match sign {
        CorrelationSign::Anticorrelated => -k.abs(),
        CorrelationSign::Correlated => k.abs(),
    })
}

/// Bivariate Gaussian joint spectrum with equal marginal variances and
/// means ω0/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianJointSpectrum {
    /// Pump angular frequency, rad/s.
    pub omega0: f64,
    /// Variance of each photon's angular frequency, rad²/s².
    pub c11: f64,
    /// Correlation coefficient C12/C11.
    pub k: f64,
}

impl GaussianJointSpectrum {
    pub fn new(omega0: f64, c11: f64, k: f64) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(Error::domain("omega0 must be finite"));
        }
        positive(c11, "C11")?;
        if !(k.is_finite() && k.abs() <= 1.0) {
            return Err(Error::domain(format!("|K| must be at most 1, got {k}")));
        }
        Ok(Self { omega0, c11, k })
    }

    pub fn sigma(&self) -> f64 {
        self.c11.sqrt()
    }

    pub fn mean(&self) -> f64 {
        0.5 * self.omega0
    }

    /// Closed-form decoherence function.
    pub fn decoherence(&self, tau1: f64, tau2: f64) -> C64 {
        decoherence_gaussian(self, tau1, tau2)
    }

    /// Probability density at (ω1, ω2). Requires |K| < 1.
    pub fn density(&self, w1: f64, w2: f64) -> f64 {
        let mu = self.mean();
        let (x, y) = ((w1 - mu) / self.sigma(), (w2 - mu) / self.sigma());
        let one_minus = 1.0 - self.k * self.k;
        let q = (x * x - 2.0 * self.k * x * y + y * y) / one_minus;
        (-0.5 * q).exp() / (2.0 * PI * self.c11 * one_minus.sqrt())
    }
}

/// G(τ1, τ2) = exp[i·ω0/2·(τ1 + τ2) − C11/2·(τ1² + τ2² + 2Kτ1τ2)]
pub fn decoherence_gaussian(s: &GaussianJointSpectrum, tau1: f64, tau2: f64) -> C64 {
    let phase = 0.5 * s.omega0 * (tau1 + tau2);
    let decay = -0.5 * s.c11 * (tau1 * tau1 + tau2 * tau2 + 2.0 * s.k * tau1 * tau2);
    C64::from_polar(decay.exp(), phase)
}

/// Joint spectrum tabulated on a rectangular grid as probability mass per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedJointSpectrum {
    omega1: Vec<f64>,
    omega2: Vec<f64>,
    /// Row-major, `omega1.len()` rows by `omega2.len()` columns.
    weights: Vec<f64>,
}

fn strictly_increasing(grid: &[f64]) -> bool {
    grid.iter().all(|x| x.is_finite()) && grid.windows(2).all(|w| w[0] < w[1])
}

impl TabulatedJointSpectrum {
    /// Builds a spectrum, normalising total mass to 1.
    pub fn new(omega1: Vec<f64>, omega2: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if omega1.is_empty() || omega2.is_empty() {
            return Err(Error::domain("tabulated spectrum grid is empty"));
        }
        if !strictly_increasing(&omega1) || !strictly_increasing(&omega2) {
            return Err(Error::domain("frequency grids must be strictly increasing"));
        }
        if weights.len() != omega1.len() * omega2.len() {
            return Err(Error::domain(format!(
                "expected {} weights, got {}",
                omega1.len() * omega2.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("weights have zero total mass"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            omega1,
            omega2,
            weights,
        })
    }

    /// Midpoint discretisation of a Gaussian spectrum on a uniform grid of
    /// `points` per axis spanning ±`span_sigmas` marginal standard deviations.
    pub fn from_gaussian(
        s: &GaussianJointSpectrum,
        span_sigmas: f64,
        points: usize,
    ) -> Result<Self> {
        if points < 2 {
            return Err(Error::domain("need at least 2 grid points per axis"));
        }
        positive(span_sigmas, "grid span")?;
        if s.k.abs() >= 1.0 {
            return Err(Error::domain(
                "cannot tabulate a degenerate (|K| = 1) Gaussian",
            ));
        }
        let half = span_sigmas * s.sigma();
        let step = 2.0 * half / (points - 1) as f64;
        let grid: Vec<f64> = (0..points)
            .map(|i| s.mean() - half + step * i as f64)
            .collect();
        let weights = grid
            .iter()
            .flat_map(|&w1| grid.iter().map(move |&w2| (w1, w2)))
            .map(|(w1, w2)| s.density(w1, w2))
            .collect();
        Self::new(grid.clone(), grid, weights)
    }

    pub fn omega1(&self) -> &[f64] {
        &self.omega1
    }

    pub fn omega2(&self) -> &[f64] {
        &self.omega2
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.omega2.len() + j]
    }

    pub fn decoherence(&self, tau1: f64, tau2: f64) -> C64 {
        decoherence_quadrature(self, tau1, tau2)
    }

    /// Reads `omega1,omega2,weight` rows; cells absent from the file get zero weight.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            omega1: f64,
            omega2: f64,
            weight: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["omega1", "omega2", "weight"] {
            return Err(Error::config(
                "header",
                format!(
                    "expected `omega1,omega2,weight`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let rows: Vec<Row> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.is_empty() {
            return Err(Error::domain("tabulated spectrum grid is empty"));
        }
        let axis = |f: fn(&Row) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let g1 = axis(|r| r.omega1);
        let g2 = axis(|r| r.omega2);
        let mut weights = vec![0.0; g1.len() * g2.len()];
        for (line, r) in rows.iter().enumerate() {
            let i = g1.binary_search_by(|x| x.total_cmp(&r.omega1)).unwrap();
            let j = g2.binary_search_by(|x| x.total_cmp(&r.omega2)).unwrap();
            let cell = &mut weights[i * g2.len() + j];
            if *cell != 0.0 {
                return Err(Error::config(
                    format!("row {}", line + 1),
                    "duplicate grid cell",
                ));
            }
            *cell = r.weight;
        }
        Self::new(g1, g2, weights)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["omega1", "omega2", "weight"])?;
        for (i, &w1) in self.omega1.iter().enumerate() {
            for (j, &w2) in self.omega2.iter().enumerate() {
                w.write_record([
                    w1.to_string(),
                    w2.to_string(),
                    self.weight(i, j).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// G(τ1, τ2) = Σ_cells w·exp[−i(ω1τ1 + ω2τ2)]
pub fn decoherence_quadrature(s: &TabulatedJointSpectrum, tau1: f64, tau2: f64) -> C64 {
    let col_phase: Vec<C64> = s
        .omega2
        .iter()
        .map(|&w2| C64::from_polar(1.0, -w2 * tau2))
        .collect();
    s.omega1
        .iter()
        .enumerate()
        .map(|(i, &w1)| {
            let row = &s.weights[i * s.omega2.len()..(i + 1) * s.omega2.len()];
            let inner: C64 = row.iter().zip(&col_phase).map(|(&w, &p)| p * w).sum();
            C64::from_polar(1.0, -w1 * tau1) * inner
        })
        .sum()
}

/// Gaussian joint spectrum from a pump width and the per-photon filter width.
///
/// The photons are degenerate at `center_wavelength_nm`, so ω0 is twice their
/// angular frequency.
pub fn gaussian_from_scenario(
    pump_width: &SpectralWidth,
    filter_width: &SpectralWidth,
    center_wavelength_nm: f64,
    sign: CorrelationSign,
) -> Result<GaussianJointSpectrum> {
    let photon_sigma = sigma_from_width(filter_width)?;
    let pump_sigma = sigma_from_width(pump_width)?;
    let k = correlation_from_bandwidths(pump_sigma, photon_sigma, sign)?;
    let center = positive(center_wavelength_nm, "center wavelength")? * 1e-9;
    let omega0 = 2.0 * (2.0 * PI * SPEED_OF_LIGHT / center);
    GaussianJointSpectrum::new(omega0, photon_sigma * photon_sigma, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILTER: SpectralWidth = SpectralWidth::FwhmWavelengthNm {
        fwhm_nm: 4.0,
        center_nm: 702.2,
    };

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn sigma_conversions() {
        let s = sigma_from_width(&SpectralWidth::FwhmFrequencyHz(2.355e9)).unwrap();
        assert!(rel(s, 2.0 * PI * 1.0e9) < 1e-4);

        // Δν = c·4e-9/(702.2e-9)² = 2.43203e12 Hz; σ_ω = 2π·Δν/2.35482
        let hand = 2.0 * PI * (299_792_458.0 * 4e-9 / (702.2e-9f64 * 702.2e-9)) / 2.354_820_045;
        let s = sigma_from_width(&FILTER).unwrap();
        assert!(rel(s, hand) < 1e-9);
        assert!(rel(s, 6.49e12) < 1e-3, "{s}");

        assert_eq!(
            sigma_from_width(&SpectralWidth::SigmaAngular(3.5)).unwrap(),
            3.5
        );
    }

    #[test]
    fn sigma_rejects_nonpositive() {
        for w in [
            SpectralWidth::SigmaAngular(0.0),
            SpectralWidth::FwhmFrequencyHz(-1.0),
            SpectralWidth::FwhmWavelengthNm {
                fwhm_nm: 4.0,
                center_nm: 0.0,
            },
            SpectralWidth::FwhmFrequencyHz(f64::NAN),
        ] {
            assert!(matches!(sigma_from_width(&w), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn correlation_examples() {
        let a = CorrelationSign::Anticorrelated;
        assert_eq!(correlation_from_bandwidths(0.0, 1.0, a).unwrap(), -1.0);
        let k = correlation_from_bandwidths(2f64.sqrt(), 1.0, a).unwrap();
        assert!(k.abs() < 1e-15);

        let photon = sigma_from_width(&FILTER).unwrap();
        let pump = sigma_from_width(&SpectralWidth::FwhmFrequencyHz(10e6)).unwrap();
        let k = correlation_from_bandwidths(pump, photon, a).unwrap();
        let direct = pump * pump / (2.0 * photon * photon) - 1.0;
        assert_eq!(k, direct);
        assert!((k + 1.0).abs() < 1e-10);
        assert!(k + 1.0 > 0.0);

        assert!(correlation_from_bandwidths(2.1, 1.0, a).is_err());
        assert_eq!(correlation_from_bandwidths(2.0, 1.0, a).unwrap(), -1.0);
        assert_eq!(
            correlation_from_bandwidths(0.5, 1.0, CorrelationSign::Correlated).unwrap(),
            0.875
        );
    }

    #[test]
    fn gaussian_decoherence_examples() {
        let s = GaussianJointSpectrum::new(5.3e15, 4.2e25, -0.3).unwrap();
        assert_eq!(s.decoherence(0.0, 0.0), C64::new(1.0, 0.0));

        let frozen = GaussianJointSpectrum::new(0.0, 1.0, -1.0).unwrap();
        for tau in [0.1, 1.0, 7.0, 1e3] {
            assert_eq!(frozen.decoherence(tau, tau), C64::new(1.0, 0.0));
        }

        let s = GaussianJointSpectrum::new(0.0, 1.0, 0.0).unwrap();
        let g = s.decoherence(1.0, 0.0);
        assert!((g.re - (-0.5f64).exp()).abs() < 1e-15 && g.im == 0.0);
        assert!((g.re - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn gaussian_rejects_invalid_parameters() {
        assert!(GaussianJointSpectrum::new(0.0, 0.0, 0.0).is_err());
        assert!(GaussianJointSpectrum::new(0.0, 1.0, 1.5).is_err());
        assert!(GaussianJointSpectrum::new(f64::INFINITY, 1.0, 0.0).is_err());
    }

    #[test]
    fn quadrature_single_cell() {
        let s = TabulatedJointSpectrum::new(vec![2.0], vec![-3.0], vec![7.0]).unwrap();
        assert_eq!(s.weight(0, 0), 1.0);
        assert!((s.decoherence(0.0, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        let g = s.decoherence(0.4, 1.1);
        let want = C64::from_polar(1.0, -(2.0 * 0.4 - 3.0 * 1.1));
        assert!((g - want).norm() < 1e-15);
        assert!((g.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_gaussian_at_unit_delay() {
        let s = GaussianJointSpectrum::new(0.0, 4.0, -0.5).unwrap();
        let tab = TabulatedJointSpectrum::from_gaussian(&s, 6.0, 201).unwrap();
        let t = 1.0 / s.sigma();
        let (a, b) = (s.decoherence(t, t), tab.decoherence(t, t));
        assert!((a - b).norm() / a.norm() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn tabulated_validation() {
        assert!(TabulatedJointSpectrum::new(vec![], vec![1.0], vec![]).is_err());
        assert!(TabulatedJointSpectrum::new(vec![1.0, 1.0], vec![1.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedJointSpectrum::new(vec![1.0], vec![1.0], vec![-1.0]).is_err());
        assert!(TabulatedJointSpectrum::new(vec![1.0], vec![1.0], vec![0.0]).is_err());
        assert!(TabulatedJointSpectrum::new(vec![1.0, 2.0], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn csv_round_trip_and_sparse_cells() {
        let text = "omega1,omega2,weight\n1.0,5.0,1\n2.0,6.0,3\n";
        let s = TabulatedJointSpectrum::from_csv(text.as_bytes()).unwrap();
        assert_eq!(s.omega1(), &[1.0, 2.0]);
        assert_eq!(s.weight(0, 0), 0.25);
        assert_eq!(s.weight(0, 1), 0.0);
        assert_eq!(s.weight(1, 1), 0.75);

        let mut out = Vec::new();
        s.to_csv(&mut out).unwrap();
        let back = TabulatedJointSpectrum::from_csv(out.as_slice()).unwrap();
        assert_eq!(back, s);

        assert!(TabulatedJointSpectrum::from_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
        assert!(TabulatedJointSpectrum::from_csv("omega1,omega2,weight\n".as_bytes()).is_err());
        let dup = "omega1,omega2,weight\n1,1,1\n1,1,2\n";
        assert!(matches!(
            TabulatedJointSpectrum::from_csv(dup.as_bytes()),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn scenario_composition() {
        let pump = SpectralWidth::FwhmFrequencyHz(10e6);
        let s =
            gaussian_from_scenario(&pump, &FILTER, 702.2, CorrelationSign::Anticorrelated).unwrap();
        assert!((s.k + 1.0).abs() < 1e-10);
        assert!(rel(s.c11, 4.21e25) < 2e-3, "{}", s.c11);
        let omega_photon = 2.0 * PI * SPEED_OF_LIGHT / 702.2e-9;
        assert!(rel(s.omega0, 2.0 * omega_photon) < 1e-15);

        let pump = SpectralWidth::FwhmFrequencyHz(20e9);
        let s =
            gaussian_from_scenario(&pump, &FILTER, 702.2, CorrelationSign::Anticorrelated).unwrap();
        assert!(rel(s.k + 1.0, 3.4e-5) < 0.01, "{}", s.k + 1.0);

        let photon = sigma_from_width(&FILTER).unwrap();
        let pump = SpectralWidth::SigmaAngular(2f64.sqrt() * photon);
        let s =
            gaussian_from_scenario(&pump, &FILTER, 702.2, CorrelationSign::Anticorrelated).unwrap();
        assert!(s.k.abs() < 1e-12);
    }
}
