//! Train/test partitioning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Earliest items train, latest items test. No shuffling.
    Chronological,
    /// Per-label shuffle, keeping each label's share of the train side.
    StratifiedShuffle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    /// 66/34 chronological split used for forecasting.
    pub fn forecasting() -> Self {
        SplitSpec {
            train_fraction: 0.66,
            mode: SplitMode::Chronological,
            seed: 0,
        }
    }

    /// 70/30 stratified split used for classification.
    pub fn classification(seed: u64) -> Self {
        SplitSpec {
            train_fraction: 0.7,
            mode: SplitMode::StratifiedShuffle,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Splits a series in time order.
    pub fn split_series(&self, series: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
        if self.mode != SplitMode::Chronological {
            return Err(Error::Config(
                "time series can only be split chronologically".into(),
            ));
        }
        let (train, test) = chronological(series.len(), self.train_fraction)?;
        Ok((
            series.slice(train.start, train.end)?,
            series.slice(test.start, test.end)?,
        ))
    }

    /// Index partition of a labeled dataset. Both sides come back sorted.
    pub fn split_labeled(&self, labels: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        match self.mode {
            SplitMode::Chronological => {
                let (train, test) = chronological(labels.len(), self.train_fraction)?;
                Ok((train.collect(), test.collect()))
            }
            SplitMode::StratifiedShuffle => stratified(labels, self.train_fraction, self.seed),
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::too_short("split input items", 2, n));
    }
    Ok(())
}

/// Earliest `floor(n * f)` indices train, the rest test.
pub fn chronological(
    n: usize,
    train_fraction: f64,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    check_size(n)?;
    SplitSpec {
        train_fraction,
        mode: SplitMode::Chronological,
        seed: 0,
    }
    .validate()?;
    let n_train = (n as f64 * train_fraction + 1e-9).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} leaves an empty side for {n} items"
        )));
    }
    Ok((0..n_train, n_train..n))
}

/// Shuffles each label's indices and puts `round(n_label * f)` of them on the train side.
pub fn stratified(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    check_size(labels.len())?;
    SplitSpec {
        train_fraction,
        mode: SplitMode::StratifiedShuffle,
        seed,
    }
    .validate()?;
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in by_label {
        let mut r = rng::stream(seed, label as u64);
        idx.shuffle(&mut r);
        let k = (idx.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} leaves an empty side for {} items",
            labels.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Timestamp;
    use proptest::prelude::*;

    #[test]
    fn chronological_66_34() {
        let s = TimeSeries::new(Timestamp(0.0), 300.0, (0..100).map(f64::from).collect()).unwrap();
        let (train, test) = SplitSpec::forecasting().split_series(&s).unwrap();
        assert_eq!(train.len(), 66);
        assert_eq!(test.len(), 34);
        assert_eq!(train.values[65], 65.0);
        assert_eq!(test.values[0], 66.0);
        assert_eq!(test.start, Timestamp(66.0 * 300.0));
    }

    #[test]
    fn stratified_keeps_proportions() {
        // 4 normal / 3 near-failure / 3 failure at 70%.
        let labels = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
        let (train, test) = SplitSpec::classification(3).split_labeled(&labels).unwrap();
        let count = |idx: &[usize], l: usize| idx.iter().filter(|&&i| labels[i] == l).count();
        let got = [count(&train, 0), count(&train, 1), count(&train, 2)];
        for (g, want) in got.iter().zip([3usize, 2, 2]) {
            assert!(g.abs_diff(want) <= 1, "{got:?}");
        }
        assert_eq!(train.len() + test.len(), 10);
    }

    #[test]
    fn split_is_deterministic() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let a = SplitSpec::classification(9).split_labeled(&labels).unwrap();
        let b = SplitSpec::classification(9).split_labeled(&labels).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_small_input_names_minimum() {
        let err = chronological(1, 0.5).unwrap_err();
        assert!(err.to_string().contains("at least 2"), "{err}");
        assert!(chronological(2, 0.3).is_err());
        assert!(chronological(10, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_are_disjoint_and_exhaustive(
            labels in prop::collection::vec(0usize..3, 4..120),
            f in 0.2f64..0.8,
            seed in any::<u64>(),
            stratify in any::<bool>(),
        ) {
            let spec = SplitSpec {
                train_fraction: f,
                mode: if stratify { SplitMode::StratifiedShuffle } else { SplitMode::Chronological },
                seed,
            };
            if let Ok((train, test)) = spec.split_labeled(&labels) {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
                if !stratify {
                    prop_assert!(train.iter().all(|&i| test.iter().all(|&j| i < j)));
                }
            }
        }
    }
}
