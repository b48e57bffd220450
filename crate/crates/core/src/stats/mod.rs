//! Statistics store: labelled time series with running accumulators.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::kernel::SimTime;

/// Running moments and extrema of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub min: f64,
    pub max: f64,
    /// Running sum of squared deviations from the mean (Welford).
    m2: f64,
    mean: f64,
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator {
            count: 0,
            sum: 0.0,
            sum_sq: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            m2: 0.0,
            mean: 0.0,
        }
    }
}

impl Accumulator {
    pub fn add(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    /// `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    /// Sample variance; `None` with fewer than two values.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        Some((self.m2 / (self.count - 1) as f64).max(0.0))
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        iter.into_iter().for_each(|v| acc.add(v));
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatRecord {
    pub time: SimTime,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub records: Vec<StatRecord>,
    pub summary: Accumulator,
}

/// Labelled series in record order. Labels are dot-separated categories
/// such as `User3.USER.BudgetUtilization`.
#[derive(Debug, Clone, Default)]
pub struct StatStore {
    series: BTreeMap<String, Series>,
}

impl StatStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, label: &str, time: SimTime, value: f64) {
        let s = self.series.entry(label.to_string()).or_default();
        s.records.push(StatRecord { time, value });
        s.summary.add(value);
    }

    pub fn get(&self, label: &str) -> Option<&Series> {
        self.series.get(label)
    }

    /// Series whose label matches `pattern`, where a `*` segment matches any
    /// one segment. Sorted by label.
    pub fn query(&self, pattern: &str) -> Vec<(&str, &Series)> {
        self.series
            .iter()
            .filter(|(label, _)| label_matches(pattern, label))
            .map(|(l, s)| (l.as_str(), s))
            .collect()
    }

    /// Accumulator over every value of every matching series.
    pub fn summarize(&self, pattern: &str) -> Accumulator {
        self.query(pattern)
            .into_iter()
            .flat_map(|(_, s)| s.records.iter().map(|r| r.value))
            .collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// TSV dump: `label \t time \t value` rows, then one summary block per
    /// label.
    pub fn dump(&self) -> String {
        let mut out = String::from("label\ttime\tvalue\n");
        for (label, s) in &self.series {
            for r in &s.records {
                let _ = writeln!(out, "{label}\t{}\t{}", r.time, r.value);
            }
        }
        out.push_str("\nlabel\tcount\tmean\tstd\tmin\tmax\n");
        for (label, s) in &self.series {
            let a = &s.summary;
            let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
            let _ = writeln!(
                out,
                "{label}\t{}\t{}\t{}\t{}\t{}",
                a.count,
                fmt(a.mean()),
                fmt(a.std_dev()),
                a.min,
                a.max
            );
        }
        out
    }
}

pub fn label_matches(pattern: &str, label: &str) -> bool {
    let p: Vec<&str> = pattern.split('.').collect();
    let l: Vec<&str> = label.split('.').collect();
    p.len() == l.len() && p.iter().zip(&l).all(|(a, b)| *a == "*" || a == b)
}
