//! Nuisance quantities feeding the plug-in bandwidths: the covariate
//! density and its derivative at the evaluation point, the first two
//! y-derivatives of the conditional CDF at the quantile, and the
//! conditional density of Y there.
//!
//! Pilot bandwidth constants are conventional rules of thumb; they are
//! recorded in the outputs so downstream reports can audit them.

use crate::error::{Error, Result};
use crate::fractional::SortedSample;
use crate::special::{normal_pdf, Probability};

/// Scale constant of the local window for the cubic CDF fit. Paired with
/// the n^{-1/7} derivative-estimation rate; small enough to track the
/// curvature of bumps a few tenths of a covariate SD wide.
const PILOT_CUBIC_SCALE: f64 = 0.75;

/// Kernel density estimate of the covariate at a point, with derivative.
#[derive(Debug, Clone, Copy)]
pub struct DensityEstimate {
    value: f64,
    derivative: f64,
    pilot_bandwidths: (f64, f64),
}

impl DensityEstimate {
    /// Direct construction for callers supplying known or analytic values;
    /// `pilot_bandwidths` records provenance and may be zero.
    pub fn new(value: f64, derivative: f64, pilot_bandwidths: (f64, f64)) -> Self {
        DensityEstimate {
            value,
            derivative,
            pilot_bandwidths,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn derivative(&self) -> f64 {
        self.derivative
    }

    /// (value bandwidth, derivative bandwidth).
    pub fn pilot_bandwidths(&self) -> (f64, f64) {
        self.pilot_bandwidths
    }
}

/// First and second y-derivatives of F_{Y|X}(y; x0) at the pilot quantile.
#[derive(Debug, Clone, Copy)]
pub struct CdfDerivativeEstimate {
    d1: f64,
    d2: f64,
    pilot_xi_p: f64,
    pilot_bandwidth: f64,
}

impl CdfDerivativeEstimate {
    /// Direct construction for callers supplying known or analytic values.
    pub fn new(d1: f64, d2: f64, pilot_xi_p: f64, pilot_bandwidth: f64) -> Self {
        CdfDerivativeEstimate {
            d1,
            d2,
            pilot_xi_p,
            pilot_bandwidth,
        }
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn pilot_xi_p(&self) -> f64 {
        self.pilot_xi_p
    }

    pub fn pilot_bandwidth(&self) -> f64 {
        self.pilot_bandwidth
    }
}

/// Everything the bandwidth formulas and the bias evaluation consume.
#[derive(Debug, Clone, Copy)]
pub struct NuisanceSet {
    pub density: DensityEstimate,
    pub cdf_derivs: CdfDerivativeEstimate,
    /// Conditional density of Y at the pilot quantile, local window.
    pub f_y_given_x: f64,
    /// Covariate sample standard deviation, used by fallback bandwidths.
    pub sigma_x: f64,
}

fn sample_std(data: &[f64]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::InsufficientData {
            have: data.len(),
            need: 2,
        });
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let ss = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(Error::DegenerateData(
            "sample has zero variance".to_string(),
        ));
    }
    Ok(sd)
}

fn gaussian_kde(data: &[f64], x0: f64, h: f64) -> f64 {
    let sum: f64 = data.iter().map(|x| normal_pdf((x0 - x) / h)).sum();
    sum / (data.len() as f64 * h)
}

fn gaussian_kde_derivative(data: &[f64], x0: f64, h: f64) -> f64 {
    // d/dx0 of the kde: phi'(t) = -t phi(t) with t = (x0 - x)/h
    let sum: f64 = data
        .iter()
        .map(|x| {
            let t = (x0 - x) / h;
            -t * normal_pdf(t)
        })
        .sum();
    sum / (data.len() as f64 * h * h)
}

/// Gaussian-kernel density and derivative of the covariate at x0, with
/// normal-reference bandwidths (1.06 sigma n^{-1/5} for the value,
/// 1.06 sigma n^{-1/7} for the derivative).
pub fn kde_with_derivative(x_data: &[f64], x0: f64) -> Result<DensityEstimate> {
    if x_data.len() < 10 {
        return Err(Error::InsufficientData {
            have: x_data.len(),
            need: 10,
        });
    }
    let n = x_data.len() as f64;
    let sigma = sample_std(x_data)?;
    let h_value = 1.06 * sigma * n.powf(-0.2);
    let h_deriv = 1.06 * sigma * n.powf(-1.0 / 7.0);
    Ok(DensityEstimate {
        value: gaussian_kde(x_data, x0, h_value),
        derivative: gaussian_kde_derivative(x_data, x0, h_deriv),
        pilot_bandwidths: (h_value, h_deriv),
    })
}

/// Least squares of w on {1, z, z^2, z^3} via normal equations.
/// Returns the four coefficients, lowest order first.
fn fit_cubic(z: &[f64], w: &[f64]) -> Result<[f64; 4]> {
    debug_assert_eq!(z.len(), w.len());
    // accumulate X'X (symmetric, powers 0..6) and X'w
    let mut pow_sums = [0.0_f64; 7];
    let mut rhs = [0.0_f64; 4];
    for (&zi, &wi) in z.iter().zip(w) {
        let mut zp = 1.0;
        for (j, slot) in pow_sums.iter_mut().enumerate() {
            *slot += zp;
            if j < 4 {
                rhs[j] += wi * zp;
            }
            zp *= zi;
        }
    }
    let mut a = [[0.0_f64; 5]; 4];
    for (r, row) in a.iter_mut().enumerate() {
        row[..4].copy_from_slice(&pow_sums[r..r + 4]);
        row[4] = rhs[r];
    }
    // Gaussian elimination with partial pivoting
    let scale = pow_sums[0].max(1.0);
    for col in 0..4 {
        let pivot_row = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-10 * scale {
            return Err(Error::CollinearDesign);
        }
        a.swap(col, pivot_row);
        let (pivot, below) = a[col..].split_first_mut().unwrap();
        for row in below {
            let factor = row[col] / pivot[col];
            for (rc, &pc) in row[col..].iter_mut().zip(&pivot[col..]) {
                *rc -= factor * pc;
            }
        }
    }
    let mut beta = [0.0_f64; 4];
    for row in (0..4).rev() {
        let mut acc = a[row][4];
        for c in (row + 1)..4 {
            acc -= a[row][c] * beta[c];
        }
        beta[row] = acc / a[row][row];
    }
    Ok(beta)
}

/// Local cubic fit of the indicator 1{Y <= xi_p} on centered and scaled
/// covariate powers, returning the implied CDF y-derivatives at x0.
///
/// The pilot quantile xi_p is the package's own L-statistic at u = p over
/// the Y values inside the pilot window |X - x0| <= h_pilot.
pub fn local_cubic_cdf_derivs(
    x_data: &[f64],
    y_data: &[f64],
    x0: f64,
    p: Probability,
) -> Result<CdfDerivativeEstimate> {
    if x_data.len() != y_data.len() {
        return Err(Error::domain(format!(
            "x and y lengths differ: {} vs {}",
            x_data.len(),
            y_data.len()
        )));
    }
    let n = x_data.len() as f64;
    let sigma = sample_std(x_data)?;
    let h_pilot = PILOT_CUBIC_SCALE * sigma * n.powf(-1.0 / 7.0);

    let mut z = Vec::new();
    let mut y_local = Vec::new();
    for (&xi, &yi) in x_data.iter().zip(y_data) {
        if (xi - x0).abs() <= h_pilot {
            z.push((xi - x0) / h_pilot);
            y_local.push(yi);
        }
    }
    if z.len() < 8 {
        return Err(Error::InsufficientData {
            have: z.len(),
            need: 8,
        });
    }
    let xi_p = SortedSample::new(y_local.clone())?.quantile(p)?;
    let w: Vec<f64> = y_local
        .iter()
        .map(|&yi| if yi <= xi_p { 1.0 } else { 0.0 })
        .collect();
    let beta = fit_cubic(&z, &w)?;
    Ok(CdfDerivativeEstimate {
        d1: beta[1] / h_pilot,
        d2: 2.0 * beta[2] / (h_pilot * h_pilot),
        pilot_xi_p: xi_p,
        pilot_bandwidth: h_pilot,
    })
}

/// Bundle all plug-in inputs at (x0, p): covariate density and derivative,
/// conditional CDF derivatives, conditional density of Y at the pilot
/// quantile, and the covariate SD.
pub fn estimate_nuisances(
    x_data: &[f64],
    y_data: &[f64],
    x0: f64,
    p: Probability,
) -> Result<NuisanceSet> {
    let density = kde_with_derivative(x_data, x0)?;
    let cdf_derivs = local_cubic_cdf_derivs(x_data, y_data, x0, p)?;

    let h_pilot = cdf_derivs.pilot_bandwidth();
    let y_local: Vec<f64> = x_data
        .iter()
        .zip(y_data)
        .filter(|(&xi, _)| (xi - x0).abs() <= h_pilot)
        .map(|(_, &yi)| yi)
        .collect();
    let m = y_local.len() as f64;
    let sigma_y = sample_std(&y_local)?;
    let h_y = 1.06 * sigma_y * m.powf(-0.2);
    let f_y_given_x = gaussian_kde(&y_local, cdf_derivs.pilot_xi_p(), h_y);

    Ok(NuisanceSet {
        density,
        cdf_derivs,
        f_y_given_x,
        sigma_x: sample_std(x_data)?,
    })
}
