use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Review, ReviewSet};
use crate::error::{Error, Result};
use crate::seeds;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldOptions {
    /// Deal each star level separately so every fold keeps the domain's
    /// rating mix.
    pub stratify: bool,
}

/// Assignment of every review to one `(domain, fold)` cell. Domain and
/// fold indices are 0-based; domains are indexed in name order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    options: FoldOptions,
    domains: Vec<String>,
    /// `[domain][fold]` -> review ids in dealing order.
    cells: Vec<Vec<Vec<String>>>,
    assignment: HashMap<String, (usize, usize)>,
}

/// Train and test review ids of one evaluation cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

pub fn make_fold_plan(set: &ReviewSet, k: usize, seed: u64) -> Result<FoldPlan> {
    make_fold_plan_with(set, k, seed, FoldOptions::default())
}

pub fn make_fold_plan_with(set: &ReviewSet, k: usize, seed: u64, options: FoldOptions) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config("folds", "must be at least 2"));
    }
    let mut by_domain: BTreeMap<&str, Vec<&Review>> = BTreeMap::new();
    for r in set {
        by_domain.entry(&r.domain).or_default().push(r);
    }
    let mut domains = Vec::new();
    let mut cells = Vec::new();
    let mut assignment = HashMap::with_capacity(set.len());
    for (d, (domain, mut reviews)) in by_domain.into_iter().enumerate() {
        if reviews.len() < k {
            return Err(Error::TooFewReviews {
                domain: domain.to_string(),
                count: reviews.len(),
                k,
            });
        }
        // Input order must not matter.
        reviews.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, domain));
        let dealt: Vec<&Review> = if options.stratify {
            let mut strata: BTreeMap<u8, Vec<&Review>> = BTreeMap::new();
            for r in reviews {
                strata.entry(r.stars.get()).or_default().push(r);
            }
            strata
                .into_values()
                .flat_map(|mut s| {
                    s.shuffle(&mut rng);
                    s
                })
                .collect()
        } else {
            reviews.shuffle(&mut rng);
            reviews
        };
        let mut folds = vec![Vec::new(); k];
        for (pos, r) in dealt.into_iter().enumerate() {
            folds[pos % k].push(r.id.clone());
            assignment.insert(r.id.clone(), (d, pos % k));
        }
        domains.push(domain.to_string());
        cells.push(folds);
    }
    Ok(FoldPlan {
        k,
        seed,
        options,
        domains,
        cells,
        assignment,
    })
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn options(&self) -> FoldOptions {
        self.options
    }

    /// Domain names in index order.
    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn domain_index(&self, name: &str) -> Option<usize> {
        self.domains.iter().position(|d| d == name)
    }

    /// `(domain index, fold index)` of a review.
    pub fn assignment(&self, id: &str) -> Option<(usize, usize)> {
        self.assignment.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn fold(&self, domain: usize, fold: usize) -> Result<&[String]> {
        self.check(domain, fold)?;
        Ok(&self.cells[domain][fold])
    }

    fn check(&self, domain: usize, fold: usize) -> Result<()> {
        if domain >= self.domains.len() {
            return Err(Error::InvalidInput(format!(
                "domain index {domain} out of range (plan has {})",
                self.domains.len()
            )));
        }
        if fold >= self.k {
            return Err(Error::InvalidInput(format!(
                "fold index {fold} out of range (plan has {})",
                self.k
            )));
        }
        Ok(())
    }

    /// Test on fold `fold` of `domain`; train on its other folds.
    pub fn in_domain_split(&self, domain: usize, fold: usize) -> Result<Split> {
        self.check(domain, fold)?;
        let train = (0..self.k)
            .filter(|&f| f != fold)
            .flat_map(|f| self.cells[domain][f].iter().cloned())
            .collect();
        Ok(Split {
            train,
            test: self.cells[domain][fold].clone(),
        })
    }

    /// Test on fold `fold` of `domain`; train on the same-numbered fold of
    /// every other domain, and only that fold.
    pub fn cross_domain_split(&self, domain: usize, fold: usize) -> Result<Split> {
        self.check(domain, fold)?;
        if self.domains.len() < 2 {
            return Err(Error::InvalidInput("cross-domain splits need at least 2 domains".into()));
        }
        let train = (0..self.domains.len())
            .filter(|&d| d != domain)
            .flat_map(|d| self.cells[d][fold].iter().cloned())
            .collect();
        Ok(Split {
            train,
            test: self.cells[domain][fold].clone(),
        })
    }

    /// CSV `review_id,domain,fold` with 1-based fold numbers, rows in
    /// domain and fold order.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["review_id", "domain", "fold"])
            .map_err(crate::corpus::csv_err)?;
        for (d, folds) in self.cells.iter().enumerate() {
            for (f, ids) in folds.iter().enumerate() {
                for id in ids {
                    w.write_record([id.as_str(), &self.domains[d], &(f + 1).to_string()])
                        .map_err(crate::corpus::csv_err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::Internal(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Stars;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn corpus(sizes: &[usize]) -> ReviewSet {
        let mut reviews = Vec::new();
        for (d, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                reviews.push(Review {
                    id: format!("d{d}-{i}"),
                    text: "ok".into(),
                    stars: Stars::new((i % 5) as u8 + 1).unwrap(),
                    domain: format!("d{d}"),
                    source: "t".into(),
                });
            }
        }
        ReviewSet::new(reviews).unwrap()
    }

    fn sizes(plan: &FoldPlan, d: usize) -> Vec<usize> {
        (0..plan.k()).map(|f| plan.fold(d, f).unwrap().len()).collect()
    }

    #[test]
    fn even_and_uneven_domains() {
        let plan = make_fold_plan(&corpus(&[20, 21]), 10, 1).unwrap();
        assert!(sizes(&plan, 0).iter().all(|&s| s == 2));
        let mut s = sizes(&plan, 1);
        s.sort();
        assert_eq!(s, [2, 2, 2, 2, 2, 2, 2, 2, 2, 3]);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let set = corpus(&[30, 15]);
        let a = make_fold_plan(&set, 10, 9).unwrap();
        assert_eq!(a, make_fold_plan(&set, 10, 9).unwrap());
        let mut rev = set.reviews().to_vec();
        rev.reverse();
        assert_eq!(a, make_fold_plan(&ReviewSet::new(rev).unwrap(), 10, 9).unwrap());
        assert_ne!(a, make_fold_plan(&set, 10, 10).unwrap());
    }

    #[test]
    fn too_few_reviews() {
        let err = make_fold_plan(&corpus(&[20, 9]), 10, 1).unwrap_err();
        assert!(matches!(err, Error::TooFewReviews { count: 9, k: 10, .. }));
        assert!(make_fold_plan(&corpus(&[20]), 1, 1).is_err());
    }

    #[test]
    fn two_domain_cross_split() {
        let plan = make_fold_plan(&corpus(&[20, 20]), 10, 3).unwrap();
        let split = plan.cross_domain_split(0, 2).unwrap();
        assert_eq!(split.train, plan.fold(1, 2).unwrap());
        assert_eq!(split.test, plan.fold(0, 2).unwrap());
        let single = make_fold_plan(&corpus(&[20]), 10, 3).unwrap();
        assert!(single.cross_domain_split(0, 0).is_err());
        assert!(plan.in_domain_split(2, 0).is_err());
        assert!(plan.in_domain_split(0, 10).is_err());
    }

    #[test]
    fn stratified_folds_balance_stars() {
        let plan = make_fold_plan_with(&corpus(&[100]), 10, 4, FoldOptions { stratify: true }).unwrap();
        let set = corpus(&[100]);
        let stars: HashMap<&str, u8> = set.iter().map(|r| (r.id.as_str(), r.stars.get())).collect();
        for f in 0..10 {
            let mut per = [0; 5];
            for id in plan.fold(0, f).unwrap() {
                per[usize::from(stars[id.as_str()]) - 1] += 1;
            }
            assert_eq!(per, [2; 5]);
        }
    }

    #[test]
    fn csv_lists_every_review() {
        let plan = make_fold_plan(&corpus(&[10, 12]), 5, 1).unwrap();
        let mut out = Vec::new();
        plan.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 23);
        assert!(text.starts_with("review_id,domain,fold\n"));
    }

    proptest! {
        #[test]
        fn split_invariants(
            sizes_in in prop::collection::vec(3usize..40, 2..5),
            k in 2usize..4,
            seed in any::<u64>(),
            stratify in any::<bool>(),
        ) {
            let set = corpus(&sizes_in);
            let plan = make_fold_plan_with(&set, k, seed, FoldOptions { stratify }).unwrap();
            prop_assert_eq!(plan.len(), set.len());
            let domain_of: HashMap<&str, &str> = set.iter().map(|r| (r.id.as_str(), r.domain.as_str())).collect();
            for d in 0..plan.domains().len() {
                let s = sizes(&plan, d);
                prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
                for f in 0..k {
                    let ind = plan.in_domain_split(d, f).unwrap();
                    let train: HashSet<&String> = ind.train.iter().collect();
                    prop_assert!(ind.test.iter().all(|id| !train.contains(id)));
                    prop_assert_eq!(ind.train.len() + ind.test.len(), sizes_in[d]);
                    prop_assert!(ind.train.iter().all(|id| domain_of[id.as_str()] == plan.domains()[d]));

                    let cross = plan.cross_domain_split(d, f).unwrap();
                    prop_assert!(cross.train.iter().all(|id| domain_of[id.as_str()] != plan.domains()[d]));
                    for other in (0..plan.domains().len()).filter(|&o| o != d) {
                        let from: Vec<&String> = cross.train.iter().filter(|id| plan.assignment(id).unwrap().0 == other).collect();
                        prop_assert_eq!(from.len(), plan.fold(other, f).unwrap().len());
                        prop_assert!(from.iter().all(|id| plan.assignment(id).unwrap().1 == f));
                    }
                }
            }
        }
    }
}
