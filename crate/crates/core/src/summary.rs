//! Order-stable aggregation of Monte Carlo replications.

use serde::{Deserialize, Serialize};

/// The per-replication quantities every simulator reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub regret: f64,
    pub tau: f64,
    pub n_used: u64,
    pub misidentified: bool,
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q025: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q975: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub reps: u64,
    pub mean_regret: f64,
    pub std_error: f64,
    pub quantiles: Quantiles,
    pub mean_tau: f64,
    pub max_tau: f64,
    pub mean_n_used: f64,
    pub misid_rate: f64,
    pub capped_fraction: f64,
}

/// Pairwise summation over a slice in index order. The result depends only on
/// the values and their order, so it is identical however they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Standard error of the mean (sample variance, `n − 1` denominator).
pub fn std_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl RegretSummary {
    /// Summarizes replications given in replication-index order.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let n = records.len();
        let regrets: Vec<f64> = records.iter().map(|r| r.regret).collect();
        let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
        let used: Vec<f64> = records.iter().map(|r| r.n_used as f64).collect();
        let mut sorted = regrets.clone();
        sorted.sort_by(f64::total_cmp);
        let frac = |pred: fn(&RunRecord) -> bool| {
            if n == 0 {
                0.0
            } else {
                records.iter().filter(|r| pred(r)).count() as f64 / n as f64
            }
        };
        RegretSummary {
            reps: n as u64,
            mean_regret: mean(&regrets),
            std_error: std_error(&regrets),
            quantiles: Quantiles {
                q025: quantile_sorted(&sorted, 0.025),
                q25: quantile_sorted(&sorted, 0.25),
                q50: quantile_sorted(&sorted, 0.5),
                q75: quantile_sorted(&sorted, 0.75),
                q975: quantile_sorted(&sorted, 0.975),
            },
            mean_tau: mean(&taus),
            max_tau: taus.iter().copied().fold(f64::NAN, f64::max),
            mean_n_used: mean(&used),
            misid_rate: frac(|r| r.misidentified),
            capped_fraction: frac(|r| r.capped),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(regret: f64) -> RunRecord {
        RunRecord {
            regret,
            tau: regret * 2.0,
            n_used: 3,
            misidentified: regret > 1.0,
            capped: false,
        }
    }

    #[test]
    fn single_record() {
        let s = RegretSummary::from_records(&[rec(0.7)]);
        assert_eq!(s.mean_regret, 0.7);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.quantiles.q025, 0.7);
        assert_eq!(s.quantiles.q975, 0.7);
        assert_eq!(s.max_tau, 1.4);
    }

    #[test]
    fn known_quantiles() {
        let recs: Vec<RunRecord> = (0..=100).map(|k| rec(k as f64)).collect();
        let s = RegretSummary::from_records(&recs);
        assert_eq!(s.quantiles.q25, 25.0);
        assert_eq!(s.quantiles.q50, 50.0);
        assert_eq!(s.quantiles.q025, 2.5);
        assert!((s.misid_rate - 99.0 / 101.0).abs() < 1e-15);
        assert!((s.std_error - (101.0 * 102.0 / 12.0f64 / 101.0).sqrt()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn quantiles_ordered(values in proptest::collection::vec(-1e3f64..1e3, 1..300)) {
            let recs: Vec<RunRecord> = values.iter().map(|&v| rec(v)).collect();
            let s = RegretSummary::from_records(&recs);
            let q = s.quantiles;
            prop_assert!(q.q025 <= q.q25 && q.q25 <= q.q50 && q.q50 <= q.q75 && q.q75 <= q.q975);
            prop_assert!(s.std_error >= 0.0);
            let naive: f64 = values.iter().sum::<f64>() / values.len() as f64;
            prop_assert!((s.mean_regret - naive).abs() < 1e-9);
        }
    }
}
