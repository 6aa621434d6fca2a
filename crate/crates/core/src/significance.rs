//! Aggregation over seeded runs and the paired sign test.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{EvalReport, Metric};

/// Arithmetic mean and sample standard deviation (n - 1 denominator, 0.0 for
/// a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Summary { mean, std })
}

/// Reports of one configuration, one per seed.
#[derive(Debug, Clone)]
pub struct RunGroup {
    reports: Vec<EvalReport>,
}

impl RunGroup {
    pub fn new(reports: Vec<EvalReport>) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::RunGroup(
                "a run group needs at least one report".into(),
            ));
        }
        let seeds: Vec<u64> = reports.iter().filter_map(|r| r.seed).collect();
        let distinct: BTreeSet<u64> = seeds.iter().copied().collect();
        if distinct.len() != seeds.len() {
            return Err(Error::RunGroup(
                "seeds within a run group must be distinct".into(),
            ));
        }
        Ok(RunGroup { reports })
    }

    pub fn reports(&self) -> &[EvalReport] {
        &self.reports
    }

    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.reports.iter().map(|r| r.metric(metric)).collect()
    }

    pub fn summary(&self, metric: Metric) -> Summary {
        summarize(&self.values(metric)).expect("run group is non-empty")
    }
}

/// Mean and standard deviation of every metric over a run group.
pub fn aggregate(group: &RunGroup) -> Vec<(Metric, Summary)> {
    Metric::ALL
        .into_iter()
        .map(|m| (m, group.summary(m)))
        .collect()
}

/// Confidence levels checked by [`sign_test`], with their table markers.
pub const LEVELS: [(u32, &str); 3] = [(90, "†"), (95, "◇"), (99, "★")];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignTestResult {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
    /// Subset of {90, 95, 99}.
    pub significant_at: Vec<u32>,
}

impl SignTestResult {
    pub fn markers(&self) -> String {
        LEVELS
            .iter()
            .filter(|(l, _)| self.significant_at.contains(l))
            .map(|(_, m)| *m)
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c
}

/// Largest number of non-tied pairs handled with exact integer arithmetic.
const EXACT_LIMIT: u32 = 120;

/// One-sided paired sign test of "a is better than b". Ties are dropped;
/// p = P(X ≥ wins) for X ~ Binomial(wins + losses, 1/2).
pub fn sign_test(pairs: &[(f64, f64)]) -> Result<SignTestResult> {
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let wins = pairs.iter().filter(|(a, b)| a > b).count();
    let losses = pairs.iter().filter(|(a, b)| a < b).count();
    let ties = pairs.len() - wins - losses;
    let m = (wins + losses) as u32;

    let (p_value, significant_at) = if m == 0 {
        (1.0, Vec::new())
    } else if m <= EXACT_LIMIT {
        let tail: u128 = (wins as u32..=m).map(|k| binomial(m, k)).sum();
        let denom: u128 = 1u128 << m;
        let levels = LEVELS
            .iter()
            .map(|(l, _)| *l)
            // p ≤ 1 - L/100  ⇔  100·tail ≤ (100 - L)·2^m
            .filter(|l| tail * 100 <= u128::from(100 - l) * denom)
            .collect();
        (tail as f64 / denom as f64, levels)
    } else {
        // Log-space tail for very long run lists.
        let ln_half = 0.5f64.ln();
        let mut ln_c = 0.0f64;
        let mut terms = Vec::with_capacity(m as usize + 1);
        for k in 0..=m {
            if k > 0 {
                ln_c += f64::from(m - k + 1).ln() - f64::from(k).ln();
            }
            if k >= wins as u32 {
                terms.push(ln_c + f64::from(m) * ln_half);
            }
        }
        let p: f64 = terms.iter().map(|t| t.exp()).sum::<f64>().min(1.0);
        let levels = LEVELS
            .iter()
            .map(|(l, _)| *l)
            .filter(|l| p <= f64::from(100 - l) / 100.0)
            .collect();
        (p, levels)
    };

    Ok(SignTestResult {
        wins,
        losses,
        ties,
        p_value,
        significant_at,
    })
}
