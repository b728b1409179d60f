//! Fractional index decomposition and L-statistic evaluation.
//!
//! The sample quantile at level u is represented by the fractional index
//! u(n+1) = k + ε and evaluated as the interpolation
//! (1−ε)·X_{n:k} + ε·X_{n:k+1} of adjacent order statistics.

use crate::error::{Error, Result, Tail};
use crate::special::Probability;

/// Snap u(n+1) to an integer when it is within this distance of one, so
/// representable boundaries like u = 0.5, n = 9 decompose with ε = 0.
const SNAP: f64 = 1e-12;

/// Decomposition of u(n+1) into integer part k and fractional part ε.
///
/// Evaluable against a sample of size n when 1 ≤ k ≤ n−1, or k = n with
/// ε = 0; `decompose` only constructs evaluable indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalIndex {
    u: Probability,
    k: usize,
    epsilon: f64,
    n: usize,
}

impl FractionalIndex {
    pub fn u(&self) -> Probability {
        self.u
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Sample size the decomposition was taken against.
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Split u(n+1) into (k, ε) with k = ⌊u(n+1)⌋.
///
/// ```
/// use qlstat::{fractional::decompose, Probability};
/// let idx = decompose(Probability::new(0.65).unwrap(), 11).unwrap();
/// assert_eq!(idx.k(), 7);
/// assert!((idx.epsilon() - 0.8).abs() < 1e-12);
/// ```
pub fn decompose(u: Probability, n: usize) -> Result<FractionalIndex> {
    let uv = u.value();
    if uv <= 0.0 || uv >= 1.0 {
        return Err(Error::domain(format!(
            "quantile level must lie strictly inside (0, 1), got {uv}"
        )));
    }
    if n == 0 {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let mut t = uv * (n + 1) as f64;
    if (t - t.round()).abs() < SNAP {
        t = t.round();
    }
    let k = t.floor() as usize;
    let epsilon = t - k as f64;
    if k < 1 {
        // u(n+1) < 1: the index falls below the smallest order statistic.
        let min_n = ((1.0 - uv) / uv).ceil() as usize;
        return Err(Error::ExtremeQuantile {
            tail: Tail::Low,
            n,
            min_n,
        });
    }
    if k > n || (k == n && epsilon > 0.0) {
        let min_n = (uv / (1.0 - uv)).ceil() as usize;
        return Err(Error::ExtremeQuantile {
            tail: Tail::High,
            n,
            min_n,
        });
    }
    Ok(FractionalIndex { u, k, epsilon, n })
}

/// A sample held in ascending order. Ties are permitted; the theory assumes
/// a continuous distribution, but real data need not.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sort and validate a raw sample. Rejects empty and non-finite input.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { have: 0, need: 1 });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "sample contains a non-finite value: {bad}"
            )));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(SortedSample { values })
    }

    /// Wrap data the caller has already sorted; verified in O(n).
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { have: 0, need: 1 });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "sample contains a non-finite value: {bad}"
            )));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::DegenerateData(
                "from_sorted called with unsorted values".to_string(),
            ));
        }
        Ok(SortedSample { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// kth smallest value, 1-indexed.
    pub fn order_statistic(&self, k: usize) -> Option<f64> {
        if k >= 1 && k <= self.values.len() {
            Some(self.values[k - 1])
        } else {
            None
        }
    }

    /// (1−ε)·X_{n:k} + ε·X_{n:k+1} for a decomposition taken at this n.
    ///
    /// When ε = 0 the result is X_{n:k} bit-for-bit.
    pub fn l_statistic(&self, idx: &FractionalIndex) -> Result<f64> {
        let n = self.n();
        if idx.n != n {
            return Err(Error::domain(format!(
                "index decomposed for n = {} applied to sample of n = {}",
                idx.n, n
            )));
        }
        let lo = self.values[idx.k - 1];
        if idx.epsilon == 0.0 {
            return Ok(lo);
        }
        let hi = self.values[idx.k];
        Ok((1.0 - idx.epsilon) * lo + idx.epsilon * hi)
    }

    /// Decompose u against this sample's size and evaluate in one step.
    pub fn quantile(&self, u: Probability) -> Result<f64> {
        let idx = decompose(u, self.n())?;
        self.l_statistic(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let idx = decompose(prob(0.65), 11).unwrap();
        assert_eq!(idx.k(), 7);
        assert!((idx.epsilon() - 0.8).abs() < 1e-12);

        let idx = decompose(prob(0.5), 9).unwrap();
        assert_eq!(idx.k(), 5);
        assert_eq!(idx.epsilon(), 0.0);

        let idx = decompose(prob(0.037), 99).unwrap();
        assert_eq!(idx.k(), 3);
        assert!((idx.epsilon() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn snap_guard_hits_representable_boundaries() {
        // k/(n+1) recovered for every k, even where u*(n+1) rounds off-integer
        for n in [9usize, 24, 99, 1000] {
            for k in 1..=n {
                let u = k as f64 / (n + 1) as f64;
                let idx = decompose(prob(u), n).unwrap();
                assert_eq!(idx.k(), k, "n={n} k={k}");
                assert_eq!(idx.epsilon(), 0.0, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn out_of_range_reports_tail_and_min_n() {
        match decompose(prob(0.037), 10) {
            Err(Error::ExtremeQuantile { tail, n, min_n }) => {
                assert_eq!(tail, Tail::Low);
                assert_eq!(n, 10);
                // need u(n+1) >= 1: n >= (1-u)/u = 26.03
                assert_eq!(min_n, 27);
            }
            other => panic!("expected ExtremeQuantile, got {other:?}"),
        }
        match decompose(prob(0.98), 10) {
            Err(Error::ExtremeQuantile { tail, min_n, .. }) => {
                assert_eq!(tail, Tail::High);
                // need u(n+1) <= n: n >= u/(1-u) = 49
                assert_eq!(min_n, 49);
            }
            other => panic!("expected ExtremeQuantile, got {other:?}"),
        }
        // boundary: u(n+1) = n exactly is evaluable with eps = 0
        let idx = decompose(prob(10.0 / 11.0), 10).unwrap();
        assert_eq!(idx.k(), 10);
        assert_eq!(idx.epsilon(), 0.0);
    }

    #[test]
    fn l_statistic_interpolates() {
        let sample = SortedSample::new((1..=11).map(f64::from).collect()).unwrap();
        let idx = decompose(prob(0.65), 11).unwrap();
        let v = sample.l_statistic(&idx).unwrap();
        assert!((v - 7.8).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_returns_the_constant() {
        let sample = SortedSample::new(vec![4.2; 17]).unwrap();
        for u in [0.1, 0.33, 0.5, 0.9] {
            assert_eq!(sample.quantile(prob(u)).unwrap(), 4.2);
        }
    }

    #[test]
    fn integer_index_is_exact() {
        let sample =
            SortedSample::new(vec![0.31, 1.7, 2.9, 3.1, 4.0, 5.5, 6.1, 7.7, 8.2]).unwrap();
        for k in 1..=9usize {
            let u = prob(k as f64 / 10.0);
            let got = sample.quantile(u).unwrap();
            assert_eq!(got.to_bits(), sample.order_statistic(k).unwrap().to_bits());
        }
    }

    #[test]
    fn unsorted_input_is_sorted_and_presorted_is_checked() {
        let sample = SortedSample::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(sample.values(), &[1.0, 2.0, 3.0]);
        assert!(SortedSample::from_sorted(vec![1.0, 3.0, 2.0]).is_err());
        assert!(SortedSample::new(vec![]).is_err());
        assert!(SortedSample::new(vec![1.0, f64::NAN]).is_err());
    }
}
