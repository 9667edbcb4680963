//! Pooling training data across rotation speeds and interpolating new
//! same-label samples within each speed.

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use ndarray::Array2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::LabeledSet;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

/// Same-label neighbours considered as interpolation partners.
pub const NEIGHBOURS: usize = 5;

/// Interpolants generated per speed unless configured otherwise.
pub const DEFAULT_N_NEW: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpmDataset {
    pub rpm: u32,
    pub set: LabeledSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpmSplit {
    pub rpm: u32,
    pub train: LabeledSet,
    pub test: LabeledSet,
}

/// Where a pooled sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOrigin {
    pub rpm: u32,
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSet {
    pub set: LabeledSet,
    /// One entry per row of `set`.
    pub origin: Vec<SampleOrigin>,
}

impl AugmentedSet {
    pub fn count(&self, interpolated: bool) -> usize {
        self.origin.iter().filter(|o| o.interpolated == interpolated).count()
    }
}

fn check_schemas(per_rpm: &[RpmDataset]) -> Result<()> {
    if per_rpm.len() < 2 {
        return Err(Error::too_short("speed datasets to pool", 2, per_rpm.len()));
    }
    let first = &per_rpm[0].set;
    for d in &per_rpm[1..] {
        if d.set.features.names != first.features.names || d.set.class_names != first.class_names {
            return Err(Error::Data(format!(
                "schema of {} rpm ({:?}, classes {:?}) differs from {} rpm ({:?}, classes {:?})",
                d.rpm,
                d.set.features.names,
                d.set.class_names,
                per_rpm[0].rpm,
                first.features.names,
                first.class_names
            )));
        }
    }
    Ok(())
}

/// Stratified train/test split of every speed; speed `k` uses stream `k` of `seed`.
pub fn split_rpms(per_rpm: &[RpmDataset], train_fraction: f64, seed: u64) -> Result<Vec<RpmSplit>> {
    per_rpm
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let (train, test) = d.set.split(train_fraction, rng::child_seed(seed, k as u64))?;
            Ok(RpmSplit {
                rpm: d.rpm,
                train,
                test,
            })
        })
        .collect()
}

/// Concatenates the training sides of already split speeds.
pub fn pool_train_splits(splits: &[RpmSplit]) -> Result<AugmentedSet> {
    let parts: Vec<&LabeledSet> = splits.iter().map(|s| &s.train).collect();
    let set = LabeledSet::concat(&parts)?;
    let origin = splits
        .iter()
        .flat_map(|s| {
            std::iter::repeat_n(
                SampleOrigin {
                    rpm: s.rpm,
                    interpolated: false,
                },
                s.train.len(),
            )
        })
        .collect();
    Ok(AugmentedSet { set, origin })
}

/// The training split (fraction `train_fraction`) of every speed, pooled.
pub fn aggregate_rpms(per_rpm: &[RpmDataset], train_fraction: f64, seed: u64) -> Result<AugmentedSet> {
    check_schemas(per_rpm)?;
    pool_train_splits(&split_rpms(per_rpm, train_fraction, seed)?)
}

/// `α·a + (1 − α)·b`, componentwise.
pub fn convex_combination(a: &[f64], b: &[f64], alpha: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect()
}

/// `n_new` convex combinations `α·a + (1 − α)·b` of same-label pairs, where
/// `a` is drawn uniformly from labels with at least two samples and `b` from
/// the `NEIGHBOURS` nearest same-label samples to `a`. α is uniform on (0, 1).
pub fn interpolate_within_rpm(set: &LabeledSet, n_new: usize, seed: u64) -> Result<LabeledSet> {
    let width = set.features.width();
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); set.num_classes()];
    for (i, &l) in set.labels.iter().enumerate() {
        by_label[l].push(i);
    }
    let eligible: Vec<usize> = by_label
        .iter()
        .filter(|idx| idx.len() >= 2)
        .flatten()
        .copied()
        .collect();
    if eligible.is_empty() {
        return Err(Error::Data(
            "interpolation needs a label with at least two samples".into(),
        ));
    }
    let row = |i: usize| set.features.data.row(i).to_vec();
    // Neighbour pools are computed lazily, once per parent.
    let mut trees: Vec<Option<KdTree<f64, usize, Vec<f64>>>> = vec![None; set.num_classes()];
    let mut pools: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    let mut r = rng::seeded(seed);
    let mut data = Array2::zeros((n_new, width));
    let mut labels = Vec::with_capacity(n_new);
    for k in 0..n_new {
        let a = eligible[r.random_range(0..eligible.len())];
        let label = set.labels[a];
        if !pools.contains_key(&a) {
            let tree = trees[label].get_or_insert_with(|| {
                let mut t = KdTree::new(width);
                for &i in &by_label[label] {
                    t.add(row(i), i).expect("finite feature rows");
                }
                t
            });
            let pa = row(a);
            let near = tree
                .nearest(&pa, NEIGHBOURS + 1, &squared_euclidean)
                .map_err(|e| Error::Data(format!("neighbour search: {e:?}")))?;
            let mut pool: Vec<usize> = near.into_iter().map(|(_, &i)| i).filter(|&i| i != a).collect();
            pool.truncate(NEIGHBOURS);
            pools.insert(a, pool);
        }
        let pool = &pools[&a];
        let b = pool[r.random_range(0..pool.len())];
        let alpha = loop {
            let v: f64 = r.random();
            if v > 0.0 {
                break v;
            }
        };
        let mixed = convex_combination(&row(a), &row(b), alpha);
        data.row_mut(k).assign(&ndarray::Array1::from(mixed));
        labels.push(label);
    }
    LabeledSet::new(
        FeatureMatrix::new(set.features.names.clone(), data)?,
        labels,
        set.class_names.clone(),
    )
}

/// Pooled training splits plus `n_new` interpolants per speed, each speed
/// interpolating from its own training side only.
pub fn augment_splits(splits: &[RpmSplit], n_new: usize, seed: u64) -> Result<AugmentedSet> {
    let pooled = pool_train_splits(splits)?;
    if n_new == 0 {
        return Ok(pooled);
    }
    let extra: Vec<LabeledSet> = splits
        .par_iter()
        .enumerate()
        .map(|(k, s)| interpolate_within_rpm(&s.train, n_new, rng::child_seed(seed, k as u64)))
        .collect::<Result<_>>()?;
    let mut parts = vec![&pooled.set];
    parts.extend(extra.iter());
    let set = LabeledSet::concat(&parts)?;
    let mut origin = pooled.origin;
    for (s, e) in splits.iter().zip(&extra) {
        origin.extend(std::iter::repeat_n(
            SampleOrigin {
                rpm: s.rpm,
                interpolated: true,
            },
            e.len(),
        ));
    }
    Ok(AugmentedSet { set, origin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set_from(rows: Vec<[f64; 2]>, labels: Vec<usize>) -> LabeledSet {
        let n = rows.len();
        let data = Array2::from_shape_vec((n, 2), rows.into_iter().flatten().collect()).unwrap();
        LabeledSet::new(
            FeatureMatrix::new(vec!["x".into(), "z".into()], data).unwrap(),
            labels,
            vec!["normal".into(), "near-failure".into(), "failure".into()],
        )
        .unwrap()
    }

    fn grid_set(n: usize, shift: f64) -> LabeledSet {
        set_from(
            (0..n).map(|i| [i as f64 + shift, (i % 7) as f64]).collect(),
            (0..n).map(|i| i % 3).collect(),
        )
    }

    #[test]
    fn midpoint_of_a_pair() {
        let s = set_from(vec![[1.0, 2.0], [3.0, 4.0]], vec![0, 0]);
        let out = interpolate_within_rpm(&s, 200, 1).unwrap();
        assert_eq!(out.len(), 200);
        assert!(out.labels.iter().all(|&l| l == 0));
        // Every interpolant lies on the segment: z − x = 1.
        for r in out.features.data.rows() {
            assert!((r[1] - r[0] - 1.0).abs() < 1e-12);
            assert!(r[0] > 1.0 && r[0] < 3.0);
        }
        assert_eq!(convex_combination(&[1.0, 2.0], &[3.0, 4.0], 0.5), vec![2.0, 3.0]);
    }

    #[test]
    fn singleton_labels_contribute_nothing() {
        let s = set_from(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [9.0, 9.0]], vec![0, 0, 0, 2]);
        let out = interpolate_within_rpm(&s, 50, 2).unwrap();
        assert!(out.labels.iter().all(|&l| l == 0));
        let lone = set_from(vec![[0.0, 0.0], [1.0, 1.0]], vec![0, 1]);
        assert!(matches!(interpolate_within_rpm(&lone, 5, 0), Err(Error::Data(_))));
    }

    #[test]
    fn aggregation_counts_and_provenance() {
        let per = vec![
            RpmDataset { rpm: 300, set: grid_set(99, 0.0) },
            RpmDataset { rpm: 600, set: grid_set(99, 1000.0) },
        ];
        let agg = aggregate_rpms(&per, 0.7, 3).unwrap();
        // 33 per class, round(33 · 0.7) = 23 per class per speed.
        assert_eq!(agg.set.len(), 2 * 3 * 23);
        for (i, o) in agg.origin.iter().enumerate() {
            let x = agg.set.features.data[[i, 0]];
            assert_eq!(o.rpm, if x >= 1000.0 { 600 } else { 300 });
        }
        let splits = split_rpms(&per, 0.7, 3).unwrap();
        let aug = augment_splits(&splits, 40, 4).unwrap();
        assert_eq!(aug.set.len(), agg.set.len() + 2 * 40);
        assert_eq!(aug.count(true), 80);
        assert_eq!(aug, augment_splits(&splits, 40, 4).unwrap());
        // Interpolants never leave their speed's range.
        for (i, o) in aug.origin.iter().enumerate().filter(|(_, o)| o.interpolated) {
            let x = aug.set.features.data[[i, 0]];
            assert_eq!(o.rpm == 600, x >= 1000.0);
        }
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let mut other = grid_set(30, 0.0);
        other.features.names = vec!["x".into(), "y".into()];
        let per = vec![
            RpmDataset { rpm: 300, set: grid_set(30, 0.0) },
            RpmDataset { rpm: 400, set: other },
        ];
        assert!(matches!(aggregate_rpms(&per, 0.7, 0), Err(Error::Data(_))));
        assert!(aggregate_rpms(&per[..1], 0.7, 0).is_err());
    }

    proptest! {
        #[test]
        fn interpolants_stay_inside_some_same_label_parent_box(
            seed in 0u64..1000,
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0usize..3), 6..30),
        ) {
            let rows: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
            let labels: Vec<usize> = pts.iter().map(|p| p.2).collect();
            let s = set_from(rows.clone(), labels.clone());
            let mut counts = [0usize; 3];
            for &l in &labels { counts[l] += 1; }
            prop_assume!(counts.iter().any(|&c| c >= 2));
            let out = interpolate_within_rpm(&s, 25, seed).unwrap();
            prop_assert_eq!(out.len(), 25);
            for (r, &l) in out.features.data.rows().into_iter().zip(&out.labels) {
                prop_assert!(counts[l] >= 2);
                // Some same-label pair brackets the sample componentwise.
                let same: Vec<&[f64; 2]> = rows.iter().zip(&labels).filter(|(_, &m)| m == l).map(|(p, _)| p).collect();
                let inside = same.iter().any(|a| same.iter().any(|b| {
                    (0..2).all(|j| r[j] >= a[j].min(b[j]) - 1e-12 && r[j] <= a[j].max(b[j]) + 1e-12)
                }));
                prop_assert!(inside);
            }
        }
    }
}
