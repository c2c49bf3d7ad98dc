//! False positive / false negative rates and their aggregation over trials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{MugError, Result};
use crate::screening::Method;
use crate::support::SupportSet;

/// `(FPR, FNR)` with `FPR = |S \ S*| / |S|` and `FNR = |S* \ S| / |S*|`.
///
/// An empty estimate has no false positives and an empty truth cannot be
/// missed, so both empty denominators give 0.
pub fn compute_fpr_fnr(estimate: &SupportSet, truth: &SupportSet) -> (f64, f64) {
    let fpr = if estimate.is_empty() {
        0.0
    } else {
        estimate.count_not_in(truth) as f64 / estimate.len() as f64
    };
    let fnr = if truth.is_empty() {
        0.0
    } else {
        truth.count_not_in(estimate) as f64 / truth.len() as f64
    };
    (fpr, fnr)
}

/// One method's outcome on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    #[serde(rename = "K")]
    pub k_groupings: usize,
    pub m: usize,
    pub trial: usize,
    pub cardinality: usize,
    pub fpr: f64,
    pub fnr: f64,
    pub contains_truth: bool,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
}

impl TrialRecord {
    /// Scores an estimate against the truth.
    pub fn score(
        method: Method,
        k_groupings: usize,
        m: usize,
        trial: usize,
        estimate: &SupportSet,
        truth: &SupportSet,
    ) -> Self {
        let (fpr, fnr) = compute_fpr_fnr(estimate, truth);
        TrialRecord {
            method,
            k_groupings,
            m,
            trial,
            cardinality: estimate.len(),
            fpr,
            fnr,
            contains_truth: truth.is_subset_of(estimate),
            wall_time_s: 0.0,
            beta_min: None,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(MugError::config(
                format!("trial record ({}, trial {})", self.method, self.trial),
                what.to_string(),
            ))
        };
        if !(0.0..=1.0).contains(&self.fpr) || !(0.0..=1.0).contains(&self.fnr) {
            return bad("rates outside [0, 1]");
        }
        if self.contains_truth != (self.fnr == 0.0) {
            return bad("contains_truth disagrees with fnr");
        }
        Ok(())
    }
}

/// Per-(method, K, m[, beta_min]) statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    #[serde(rename = "K")]
    pub k_groupings: usize,
    pub m: usize,
    pub fpr_mean: f64,
    pub fpr_std: f64,
    pub fnr_mean: f64,
    pub fnr_std: f64,
    pub card_mean: f64,
    pub containment_rate: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
    #[serde(skip)]
    pub card_std: f64,
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    method: Method,
    k_groupings: usize,
    m: usize,
    beta_min_bits: Option<u64>,
}

/// Groups records by `(method, K, m, beta_min)` and summarizes each group.
///
/// Values are summed in trial order within each group, so the output does not
/// depend on the order of `records`.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(MugError::EmptyInput("trial records"));
    }
    let mut groups: BTreeMap<(Key, u64), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = Key {
            method: r.method,
            k_groupings: r.k_groupings,
            m: r.m,
            beta_min_bits: r.beta_min.map(f64::to_bits),
        };
        // Sort beta_min numerically rather than by bit pattern.
        let order = r.beta_min.map_or(0, |b| total_order_key(b));
        groups.entry((key, order)).or_default().push(r);
    }
    let mut rows: Vec<((Key, u64), SummaryRow)> = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by(|a, b| a.trial.cmp(&b.trial).then(a.fpr.total_cmp(&b.fpr)).then(a.fnr.total_cmp(&b.fnr)));
            let fpr: Vec<f64> = members.iter().map(|r| r.fpr).collect();
            let fnr: Vec<f64> = members.iter().map(|r| r.fnr).collect();
            let card: Vec<f64> = members.iter().map(|r| r.cardinality as f64).collect();
            let (fpr_mean, fpr_std) = mean_std(&fpr);
            let (fnr_mean, fnr_std) = mean_std(&fnr);
            let (card_mean, card_std) = mean_std(&card);
            let contained = members.iter().filter(|r| r.contains_truth).count();
            let row = SummaryRow {
                method: key.0.method,
                k_groupings: key.0.k_groupings,
                m: key.0.m,
                fpr_mean,
                fpr_std,
                fnr_mean,
                fnr_std,
                card_mean,
                containment_rate: contained as f64 / members.len() as f64,
                trials: members.len(),
                beta_min: members[0].beta_min,
                card_std,
            };
            (key, row)
        })
        .collect();
    rows.sort_by_key(|((k, order), _)| (k.method, k.k_groupings, k.m, *order));
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

fn total_order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}
