use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Train / validation / test fractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.64,
            validation: 0.16,
            test: 0.20,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train", self.train),
            ("validation", self.validation),
            ("test", self.test),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} ratio must be positive, got {v}")));
            }
        }
        let total = self.train + self.validation + self.test;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// How fractional split sizes are rounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitRule {
    /// Validation and test get `⌊ratio·N⌋`; the remainder goes to train.
    #[default]
    Floor,
    /// Test gets `⌈test·N⌉`, then validation gets `⌈val/(train+val) · rest⌉`
    /// of what is left; the remainder goes to train. This is what two
    /// successive hold-out splits with ceiling rounding produce.
    TwoStageCeil,
}

// Guards ⌊·⌋ and ⌈·⌉ against ratio·N landing a few ulps off an integer.
const ROUNDING_SLACK: f64 = 1e-9;

/// Sizes of (train, validation, test) for `n` rows.
pub fn split_sizes(n: usize, ratios: SplitRatios, rule: SplitRule) -> Result<(usize, usize, usize)> {
    ratios.validate()?;
    let total = n as f64;
    let (val, test) = match rule {
        SplitRule::Floor => (
            (ratios.validation * total + ROUNDING_SLACK).floor() as usize,
            (ratios.test * total + ROUNDING_SLACK).floor() as usize,
        ),
        SplitRule::TwoStageCeil => {
            let test = (ratios.test * total - ROUNDING_SLACK).ceil() as usize;
            let rest = n - test;
            let share = ratios.validation / (ratios.validation + ratios.train);
            let val = (share * rest as f64 - ROUNDING_SLACK).ceil() as usize;
            (val, test)
        }
    };
    let train = n
        .checked_sub(val + test)
        .ok_or_else(|| Error::Config("split sizes exceed the dataset".into()))?;
    Ok((train, val, test))
}

/// Seeded shuffle of `0..n` partitioned contiguously into train, validation
/// and test index lists.
pub fn split_indices(n: usize, ratios: SplitRatios, rule: SplitRule, seed: u64) -> Result<[Vec<usize>; 3]> {
    let (train, val, _) = split_sizes(n, ratios, rule)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_part = order.split_off(train + val);
    let val_part = order.split_off(train);
    Ok([order, val_part, test_part])
}

/// Shuffles and partitions a dataset with the default floor rule.
///
/// Every split must end up nonempty.
pub fn split_dataset(ds: &Dataset, ratios: SplitRatios, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let [tr, va, te] = split_indices(ds.len(), ratios, SplitRule::Floor, seed)?;
    let pick = |idx: &[usize]| ds.with_instances(idx.iter().map(|&i| ds.instances()[i].clone()).collect());
    Ok((pick(&tr)?, pick(&va)?, pick(&te)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{Instance, Label};

    fn toy(n: usize) -> Dataset {
        let instances = (0..n)
            .map(|i| Instance::new(Label::from_bool(i % 2 == 0), vec![i as u32]))
            .collect();
        Dataset::new(1, n, instances).unwrap()
    }

    #[test]
    fn floor_rule_sizes() {
        let r = SplitRatios::default();
        assert_eq!(split_sizes(10, r, SplitRule::Floor).unwrap(), (7, 1, 2));
        assert_eq!(split_sizes(100, r, SplitRule::Floor).unwrap(), (64, 16, 20));
    }

    #[test]
    fn two_stage_rule_matches_published_split_counts() {
        let r = SplitRatios::default();
        assert_eq!(
            split_sizes(45_840_617, r, SplitRule::TwoStageCeil).unwrap(),
            (29_337_994, 7_334_499, 9_168_124)
        );
        assert_eq!(
            split_sizes(40_428_966, r, SplitRule::TwoStageCeil).unwrap(),
            (25_874_537, 6_468_635, 8_085_794)
        );
    }

    #[test]
    fn bad_ratios_are_rejected() {
        assert!(SplitRatios::new(0.8, 0.0, 0.2).is_err());
        assert!(SplitRatios::new(0.8, -0.1, 0.3).is_err());
        assert!(SplitRatios::new(0.5, 0.2, 0.2).is_err());
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let ds = toy(10);
        let (a, b, c) = split_dataset(&ds, SplitRatios::default(), 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (7, 1, 2));
        let mut ids: Vec<u32> = a.iter().chain(b.iter()).chain(c.iter()).map(|i| i.active[0]).collect();
        ids.sort();
        assert_eq!(ids, (0..10).collect::<Vec<u32>>());
        let again = split_dataset(&ds, SplitRatios::default(), 7).unwrap();
        assert_eq!((a, b, c), again);
    }
}
