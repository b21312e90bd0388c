//! Stratified k-fold cross-validation.
//!
//! Fold assignment is reproducible from `(labels, k, seed)` alone:
//!
//! 1. A xoshiro256** generator is seeded from `seed` through SplitMix64
//!    (the reference `seed_from_u64` expansion).
//! 2. Classes are visited in lexicographic label order. Each class's sample
//!    indices, in dataset order, are shuffled by Fisher-Yates: for `i` from
//!    `len - 1` down to `1`, swap `i` with `j = below(i + 1)`.
//!    `below(n)` draws `x = next_u64()`, forms the 128-bit product `x * n`
//!    and returns its high word, rejecting draws whose low word is below
//!    `2^64 mod n`.
//! 3. The shuffled indices are dealt round-robin to folds. A single cursor
//!    runs over all classes, so the next class starts at the fold after the
//!    one the previous class ended on.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::classify::{predict_nb, train_nb};
use crate::entropy::FeatureVector;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pca::{fit_pca, project};
use crate::profile::Label;

pub const DEFAULT_FOLDS: usize = 10;

/// Uniform draw from `0..n` (Lemire's multiply-and-reject).
pub(crate) fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    assert!(n > 0);
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = u128::from(rng.next_u64()) * u128::from(n);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldAssignment {
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > labels.len() {
        return Err(Error::InvalidFolds {
            k,
            samples: labels.len(),
        });
    }
    let mut by_class: BTreeMap<&Label, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    if let Some((label, members)) = by_class.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::ClassTooSmall {
            label: label.to_string(),
            count: members.len(),
        });
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut cursor = 0usize;
    for members in by_class.values_mut() {
        for i in (1..members.len()).rev() {
            let j = below(&mut rng, i as u64 + 1) as usize;
            members.swap(i, j);
        }
        for &index in members.iter() {
            fold_of[index] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldAssignment { fold_of, k, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    /// Project onto this many principal components, fitted per training split.
    pub pca: Option<usize>,
    pub execution: Execution,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: DEFAULT_FOLDS,
            seed: 0,
            pca: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldScore {
    pub correct: usize,
    pub total: usize,
}

impl FoldScore {
    pub fn rate(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    /// Predicted label per sample, in dataset order.
    pub predictions: Vec<Label>,
}

impl CvReport {
    pub fn correct(&self) -> usize {
        self.folds.iter().map(|f| f.correct).sum()
    }

    pub fn total(&self) -> usize {
        self.folds.iter().map(|f| f.total).sum()
    }

    /// Total correct over total samples.
    pub fn pooled_rate(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Mean of the per-fold rates.
    pub fn fold_mean_rate(&self) -> f64 {
        self.folds.iter().map(FoldScore::rate).sum::<f64>() / self.folds.len() as f64
    }
}

pub fn cross_validate(features: &[FeatureVector], k: usize, seed: u64) -> Result<CvReport> {
    cross_validate_with(
        features,
        &CvOptions {
            folds: k,
            seed,
            ..CvOptions::default()
        },
    )
}

pub fn cross_validate_with(features: &[FeatureVector], options: &CvOptions) -> Result<CvReport> {
    let labels = features
        .iter()
        .map(|f| f.label.clone().ok_or_else(|| Error::MissingLabel(f.profile_id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let assignment = stratified_folds(&labels, options.folds, options.seed)?;

    let rounds = options.execution.try_map_range(options.folds, |fold| {
        let test = assignment.test_indices(fold);
        let train = assignment.train_indices(fold);
        let mut train_set: Vec<FeatureVector> = train.iter().map(|&i| features[i].clone()).collect();
        let mut test_set: Vec<FeatureVector> = test.iter().map(|&i| features[i].clone()).collect();
        if let Some(k) = options.pca {
            let model = fit_pca(&train_set.iter().map(|f| f.values.as_slice()).collect::<Vec<_>>())?;
            for f in train_set.iter_mut().chain(test_set.iter_mut()) {
                f.values = project(&model, &f.values, k)?;
            }
        }
        let model = train_nb(&train_set)?;
        test_set
            .iter()
            .zip(test)
            .map(|(f, i)| Ok((i, predict_nb(&model, f)?.label)))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut predictions = labels.clone();
    let folds = rounds
        .into_iter()
        .map(|round| {
            let total = round.len();
            let mut correct = 0;
            for (i, predicted) in round {
                if predicted == labels[i] {
                    correct += 1;
                }
                predictions[i] = predicted;
            }
            FoldScore { correct, total }
        })
        .collect();
    Ok(CvReport { folds, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(counts: &[(&str, usize)]) -> Vec<Label> {
        counts
            .iter()
            .flat_map(|&(name, n)| std::iter::repeat_n(Label::new(name).unwrap(), n))
            .collect()
    }

    fn class_fold_sizes(a: &FoldAssignment, labels: &[Label], class: &str) -> Vec<usize> {
        let mut sizes = vec![0; a.k()];
        for (i, l) in labels.iter().enumerate() {
            if l.as_str() == class {
                sizes[a.fold_of()[i]] += 1;
            }
        }
        sizes
    }

    #[test]
    fn twenty_four_per_class_fold_sizes() {
        let l = labels(&[("304", 24), ("316", 24)]);
        let a = stratified_folds(&l, 10, 0).unwrap();
        for class in ["304", "316"] {
            let mut sizes = class_fold_sizes(&a, &l, class);
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(sizes, vec![3, 3, 3, 3, 2, 2, 2, 2, 2, 2]);
        }
    }

    #[test]
    fn two_by_two() {
        let l = labels(&[("A", 2), ("B", 2)]);
        let a = stratified_folds(&l, 2, 99).unwrap();
        for fold in 0..2 {
            assert_eq!(class_fold_sizes(&a, &l, "A")[fold], 1);
            assert_eq!(class_fold_sizes(&a, &l, "B")[fold], 1);
        }
    }

    #[test]
    fn deterministic() {
        let l = labels(&[("304", 24), ("316", 24)]);
        assert_eq!(stratified_folds(&l, 10, 5).unwrap(), stratified_folds(&l, 10, 5).unwrap());
        assert_ne!(stratified_folds(&l, 10, 5).unwrap(), stratified_folds(&l, 10, 6).unwrap());
    }

    #[test]
    fn fold_errors() {
        let l = labels(&[("A", 2), ("B", 2)]);
        assert!(matches!(stratified_folds(&l, 1, 0), Err(Error::InvalidFolds { .. })));
        assert!(matches!(stratified_folds(&l, 5, 0), Err(Error::InvalidFolds { .. })));
        let l = labels(&[("A", 3), ("B", 1)]);
        assert!(matches!(stratified_folds(&l, 2, 0), Err(Error::ClassTooSmall { .. })));
    }

    #[test]
    fn small_classes_still_fill_every_fold() {
        let l = labels(&[("A", 2), ("B", 2), ("C", 2)]);
        let a = stratified_folds(&l, 5, 1).unwrap();
        for fold in 0..5 {
            assert!(!a.test_indices(fold).is_empty());
        }
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(3);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let x = below(&mut rng, 7) as usize;
            seen[x] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(below(&mut rng, 1), 0);
    }

    fn fv(label: &str, values: Vec<f64>) -> FeatureVector {
        FeatureVector::new("x", Some(Label::new(label).unwrap()), values).unwrap()
    }

    #[test]
    fn uninformative_features_score_near_chance() {
        let data: Vec<_> = (0..48).map(|i| fv(if i < 24 { "A" } else { "B" }, vec![1.0, 2.0])).collect();
        let rate = cross_validate(&data, 10, 0).unwrap().pooled_rate();
        assert!((0.3..=0.7).contains(&rate), "rate {rate}");
    }

    #[test]
    fn separated_classes_score_perfectly() {
        use rand::Rng;
        let mut rng = Xoshiro256StarStar::seed_from_u64(11);
        let data: Vec<_> = (0..48)
            .map(|i| {
                let class = if i % 2 == 0 { "A" } else { "B" };
                let offset = if i % 2 == 0 { 0.0 } else { 10.0 };
                let noise: f64 = rng.random_range(-0.5..0.5);
                fv(class, vec![offset + noise, rng.random_range(-1.0..1.0)])
            })
            .collect();
        // nearest class mean over the whole set already separates every sample
        let mean = |c: &str| {
            let rows: Vec<_> = data.iter().filter(|f| f.label.as_ref().unwrap().as_str() == c).collect();
            rows.iter().map(|f| f.values[0]).sum::<f64>() / rows.len() as f64
        };
        let (ma, mb) = (mean("A"), mean("B"));
        assert!(data.iter().all(|f| {
            let nearest = if (f.values[0] - ma).abs() < (f.values[0] - mb).abs() { "A" } else { "B" };
            nearest == f.label.as_ref().unwrap().as_str()
        }));
        let report = cross_validate(&data, 10, 0).unwrap();
        assert_eq!(report.pooled_rate(), 1.0);
        assert_eq!(report.fold_mean_rate(), 1.0);
        assert_eq!(report.total(), 48);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        use rand::Rng;
        let mut rng = Xoshiro256StarStar::seed_from_u64(2);
        let data: Vec<_> = (0..40)
            .map(|i| fv(if i % 2 == 0 { "A" } else { "B" }, (0..5).map(|_| rng.random_range(0.0..1.0)).collect()))
            .collect();
        for pca in [None, Some(2)] {
            let seq = cross_validate_with(&data, &CvOptions { folds: 10, seed: 4, pca, execution: Execution::Sequential }).unwrap();
            let par = cross_validate_with(&data, &CvOptions { folds: 10, seed: 4, pca, execution: Execution::Parallel }).unwrap();
            assert_eq!(seq, par);
        }
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(counts in prop::collection::vec(2usize..30, 1..5), k in 2usize..12, seed in any::<u64>()) {
            let names = ["a", "b", "c", "d", "e"];
            let classes: Vec<(&str, usize)> = counts.iter().enumerate().map(|(i, &n)| (names[i], n)).collect();
            let l = labels(&classes);
            prop_assume!(k <= l.len());
            let a = stratified_folds(&l, k, seed).unwrap();
            prop_assert!(a.fold_of().iter().all(|&f| f < k));
            let mut covered = vec![0; l.len()];
            for fold in 0..k {
                let test = a.test_indices(fold);
                prop_assert!(!test.is_empty());
                for i in test { covered[i] += 1; }
            }
            prop_assert!(covered.iter().all(|&c| c == 1));
            for (name, _) in &classes {
                let sizes = class_fold_sizes(&a, &l, name);
                let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
                prop_assert!(spread <= 1);
            }
        }

        #[test]
        fn rate_is_a_fraction(values in prop::collection::vec(-5f64..5.0, 30), seed in any::<u64>()) {
            let data: Vec<_> = values.iter().enumerate().map(|(i, &v)| fv(if i % 2 == 0 { "A" } else { "B" }, vec![v])).collect();
            let a = cross_validate(&data, 5, seed).unwrap();
            let b = cross_validate(&data, 5, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!((0.0..=1.0).contains(&a.pooled_rate()));
        }
    }
}
