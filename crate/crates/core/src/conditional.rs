//! Conditional quantile intervals: restrict the sample to a local
//! covariate window around the evaluation point, then run the
//! unconditional machinery on the retained responses. The window width
//! comes from the plug-in rules when not supplied.

use crate::bandwidth::{plugin_one_sided, plugin_two_sided, BandwidthReport};
use crate::error::{Error, Result};
use crate::fractional::SortedSample;
use crate::nuisance::estimate_nuisances;
use crate::special::Probability;
use crate::unconditional::{confidence_interval, ConfidenceInterval, QuantileRequest, Side};

/// Covariate rows paired with responses. Continuous covariates are
/// windowed; discrete ones are matched exactly.
#[derive(Debug, Clone)]
pub struct XyData {
    x: Vec<Vec<f64>>,
    discrete: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl XyData {
    /// `x[i]` and `discrete[i]` describe observation i; `discrete` may be
    /// a vector of empty rows when there are no discrete covariates.
    pub fn new(x: Vec<Vec<f64>>, discrete: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || discrete.len() != y.len() {
            return Err(Error::domain(format!(
                "row counts differ: x {}, discrete {}, y {}",
                x.len(),
                discrete.len(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::domain("data set is empty"));
        }
        let x_dim = x[0].len();
        let d_dim = discrete[0].len();
        for (i, (xr, dr)) in x.iter().zip(&discrete).enumerate() {
            if xr.len() != x_dim || dr.len() != d_dim {
                return Err(Error::domain(format!("ragged covariate row {i}")));
            }
            if xr.iter().chain(dr.iter()).any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("non-finite covariate in row {i}")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite response value"));
        }
        Ok(Self { x, discrete, y })
    }

    /// Single continuous covariate, no discrete columns.
    pub fn univariate(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        Self::new(
            x.into_iter().map(|v| vec![v]).collect(),
            vec![Vec::new(); n],
            y,
        )
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn x_dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn discrete_dim(&self) -> usize {
        self.discrete[0].len()
    }
}

/// Evaluation point plus window width; `cell` fixes the discrete
/// covariates that must match exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWindow {
    x0: Vec<f64>,
    h: f64,
    cell: Option<Vec<f64>>,
}

impl LocalWindow {
    pub fn new(x0: Vec<f64>, h: f64, cell: Option<Vec<f64>>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!(
                "window width must be positive and finite, got {h}"
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite evaluation point"));
        }
        Ok(Self { x0, h, cell })
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell(&self) -> Option<&[f64]> {
        self.cell.as_deref()
    }

    fn contains(&self, x_row: &[f64], d_row: &[f64]) -> Result<bool> {
        if x_row.len() != self.x0.len() {
            return Err(Error::domain(format!(
                "evaluation point has {} coordinates, data has {}",
                self.x0.len(),
                x_row.len()
            )));
        }
        match (&self.cell, d_row.is_empty()) {
            (Some(cell), _) => {
                if cell.len() != d_row.len() {
                    return Err(Error::domain(format!(
                        "cell has {} coordinates, data has {}",
                        cell.len(),
                        d_row.len()
                    )));
                }
                if cell.iter().zip(d_row).any(|(a, b)| a != b) {
                    return Ok(false);
                }
            }
            (None, false) => {
                return Err(Error::domain(
                    "data has discrete covariates but no cell was given",
                ));
            }
            (None, true) => {}
        }
        Ok(self
            .x0
            .iter()
            .zip(x_row)
            .all(|(a, b)| (a - b).abs() <= self.h))
    }
}

/// Responses retained by a window, sorted.
#[derive(Debug, Clone)]
pub struct LocalSample {
    y_values: SortedSample,
    window: LocalWindow,
}

impl LocalSample {
    pub fn y_values(&self) -> &SortedSample {
        &self.y_values
    }

    pub fn n_local(&self) -> usize {
        self.y_values.n()
    }

    pub fn window(&self) -> &LocalWindow {
        &self.window
    }
}

/// Rows with matching discrete cell and sup-norm distance at most h from
/// x0 contribute their responses.
pub fn extract_local_sample(data: &XyData, window: &LocalWindow) -> Result<LocalSample> {
    let mut retained = Vec::new();
    for i in 0..data.n() {
        if window.contains(&data.x[i], &data.discrete[i])? {
            retained.push(data.y[i]);
        }
    }
    if retained.is_empty() {
        return Err(Error::EmptyWindow { h: window.h });
    }
    Ok(LocalSample {
        y_values: SortedSample::new(retained)?,
        window: window.clone(),
    })
}

/// Conditional interval at one point: the unconditional construction run
/// on the local sample, plus the provenance of the window width.
#[derive(Debug, Clone)]
pub struct ConditionalInterval {
    pub interval: ConfidenceInterval,
    pub local: LocalSample,
    /// Present when the width came from the plug-in rather than the caller.
    pub bandwidth: Option<BandwidthReport>,
}

/// Rows of `data` matching `cell`, as univariate (x, y) slices for the
/// nuisance estimators. Requires one continuous covariate.
fn cell_subsample(data: &XyData, cell: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
    if data.x_dim() != 1 {
        return Err(Error::domain(format!(
            "plug-in bandwidth needs one continuous covariate, data has {}; pass h explicitly",
            data.x_dim()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..data.n() {
        let keep = match cell {
            Some(c) => {
                if c.len() != data.discrete_dim() {
                    return Err(Error::domain(format!(
                        "cell has {} coordinates, data has {}",
                        c.len(),
                        data.discrete_dim()
                    )));
                }
                c.iter().zip(&data.discrete[i]).all(|(a, b)| a == b)
            }
            None => {
                if data.discrete_dim() != 0 {
                    return Err(Error::domain(
                        "data has discrete covariates but no cell was given",
                    ));
                }
                true
            }
        };
        if keep {
            xs.push(data.x[i][0]);
            ys.push(data.y[i]);
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyWindow { h: f64::INFINITY });
    }
    Ok((xs, ys))
}

pub(crate) fn plugin_bandwidth(
    data: &XyData,
    x0: &[f64],
    cell: Option<&[f64]>,
    request: &QuantileRequest,
    apply_large_n: bool,
) -> Result<BandwidthReport> {
    let (xs, ys) = cell_subsample(data, cell)?;
    let nuis = estimate_nuisances(&xs, &ys, x0[0], request.p())?;
    match request.side() {
        Side::TwoSided => plugin_two_sided(xs.len(), request.p(), &nuis, apply_large_n),
        side => plugin_one_sided(
            xs.len(),
            request.p(),
            request.alpha(),
            &nuis,
            side,
            apply_large_n,
        ),
    }
}

/// Interval for the conditional quantile at x0. When `h` is absent the
/// plug-in width for the request's side is computed from the rows
/// matching `cell` (univariate continuous covariate only).
pub fn conditional_interval(
    data: &XyData,
    x0: &[f64],
    cell: Option<&[f64]>,
    request: &QuantileRequest,
    h: Option<f64>,
    apply_large_n: bool,
) -> Result<ConditionalInterval> {
    let (width, report) = match h {
        Some(v) => (v, None),
        None => {
            let rep = plugin_bandwidth(data, x0, cell, request, apply_large_n)?;
            (rep.h(), Some(rep))
        }
    };
    let window = LocalWindow::new(x0.to_vec(), width, cell.map(<[f64]>::to_vec))?;
    let local = extract_local_sample(data, &window)?;
    let interval = confidence_interval(local.y_values(), request)?;
    Ok(ConditionalInterval {
        interval,
        local,
        bandwidth: report,
    })
}

/// How a family of intervals at several points shares the error budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointMode {
    /// Per-point level alpha / m; valid without any window assumptions.
    Bonferroni,
    /// Per-point level 1 - (1-alpha)^{1/m}; requires pairwise disjoint
    /// windows so the local samples are independent.
    IndependentWindows,
}

/// One evaluation point of a joint family.
#[derive(Debug, Clone)]
pub struct JointPoint {
    pub x0: Vec<f64>,
    pub cell: Option<Vec<f64>>,
    pub h: Option<f64>,
}

/// Simultaneous intervals at several points. Each point gets the
/// adjusted per-point level; plug-in widths are computed per point
/// before the disjointness check.
pub fn joint_intervals(
    data: &XyData,
    points: &[JointPoint],
    request: &QuantileRequest,
    mode: JointMode,
    apply_large_n: bool,
) -> Result<Vec<ConditionalInterval>> {
    if points.is_empty() {
        return Err(Error::domain("no evaluation points given"));
    }
    let m = points.len() as f64;
    let alpha = f64::from(request.alpha());
    let per_point = match mode {
        JointMode::Bonferroni => alpha / m,
        JointMode::IndependentWindows => 1.0 - (1.0 - alpha).powf(1.0 / m),
    };
    let adjusted = request.with_alpha(Probability::new(per_point)?)?;

    let mut results = Vec::with_capacity(points.len());
    for pt in points {
        results.push(conditional_interval(
            data,
            &pt.x0,
            pt.cell.as_deref(),
            &adjusted,
            pt.h,
            apply_large_n,
        )?);
    }

    if mode == JointMode::IndependentWindows {
        for i in 0..results.len() {
            for j in (i + 1)..results.len() {
                let (wi, wj) = (results[i].local.window(), results[j].local.window());
                if wi.cell() != wj.cell() {
                    continue;
                }
                let gap = wi
                    .x0()
                    .iter()
                    .zip(wj.x0())
                    .map(|(a, b)| (a - b).abs())
                    .fold(f64::NEG_INFINITY, f64::max);
                if gap <= wi.h() + wj.h() {
                    return Err(Error::ModeViolation(format!(
                        "windows at points {i} and {j} overlap: \
                         sup-norm gap {gap:.6} <= {:.6} + {:.6}",
                        wi.h(),
                        wj.h()
                    )));
                }
            }
        }
    }
    Ok(results)
}
