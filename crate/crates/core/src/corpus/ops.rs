use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{Category, CorpusError, Dataset, LabelValue, Sentence};
use crate::util;

/// One cross-validation partition.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Dataset,
    pub validation: Dataset,
}

/// Held-out test set plus `k` rotating train/validation folds over the remainder.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub test: Dataset,
    /// Everything that is not test data; the union of every fold's train and
    /// validation sets.
    pub remainder: Dataset,
    pub folds: Vec<Fold>,
}

/// Count and share of one label value within a category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelShare {
    pub label: String,
    pub count: usize,
    pub proportion: f64,
}

impl Dataset {
    /// The sentence with its neighbours in the same document.
    pub fn sentence_context(
        &self,
        id: &str,
    ) -> Result<(Option<&Sentence>, &Sentence, Option<&Sentence>), CorpusError> {
        let pos = *self
            .by_id
            .get(id)
            .ok_or_else(|| CorpusError::UnknownSentence(id.to_string()))?;
        let sentence = &self.sentences[pos];
        let doc = &self.by_doc[&sentence.doc_id];
        let at = doc
            .iter()
            .position(|&p| p == pos)
            .expect("sentence indexed in its document");
        let predecessor = at.checked_sub(1).map(|i| &self.sentences[doc[i]]);
        let successor = doc.get(at + 1).map(|&p| &self.sentences[p]);
        Ok((predecessor, sentence, successor))
    }

    /// Ids of causal and non-causal sentences, in dataset order.
    fn partition_by_causality(&self) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
        let mut causal = Vec::new();
        let mut non_causal = Vec::new();
        for (pos, s) in self.sentences.iter().enumerate() {
            match self.causality(&s.id) {
                Some(true) => causal.push(pos),
                Some(false) => non_causal.push(pos),
                None => {
                    return Err(CorpusError::MissingLabel {
                        id: s.id.clone(),
                        category: Category::Causality,
                    })
                }
            }
        }
        Ok((causal, non_causal))
    }

    /// Random undersampling: keeps every minority-class sentence and a uniform
    /// sample without replacement of the majority class of equal size.
    pub fn undersample(&self, seed: u64) -> Result<Dataset, CorpusError> {
        let (causal, non_causal) = self.partition_by_causality()?;
        if causal.is_empty() {
            return Err(CorpusError::EmptyClass("causal"));
        }
        if non_causal.is_empty() {
            return Err(CorpusError::EmptyClass("non-causal"));
        }
        let (minority, majority) = if causal.len() <= non_causal.len() {
            (causal, non_causal)
        } else {
            (non_causal, causal)
        };
        let mut rng = util::rng(seed);
        let kept: HashSet<usize> =
            rand::seq::index::sample(&mut rng, majority.len(), minority.len())
                .into_iter()
                .map(|i| majority[i])
                .chain(minority.iter().copied())
                .collect();
        let ids: HashSet<&str> = kept
            .iter()
            .map(|&p| self.sentences[p].id.as_str())
            .collect();
        Ok(self
            .filter(|s| ids.contains(s.id.as_str()))
            .with_provenance("undersample_seed", seed.to_string()))
    }

    /// Stratified hold-out plus stratified `k`-fold partition of the rest.
    ///
    /// The test size is `round(test_fraction * n)`, apportioned to the two
    /// classes by largest remainder (causal first on ties). The remainder of
    /// each class is shuffled and dealt round-robin into the folds, continuing
    /// the deal across classes so that fold sizes differ by at most one.
    pub fn split(&self, test_fraction: f64, k: usize, seed: u64) -> Result<SplitPlan, CorpusError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(CorpusError::InvalidSplit(format!(
                "test fraction must lie strictly between 0 and 1, got {test_fraction}"
            )));
        }
        if k < 2 {
            return Err(CorpusError::InvalidSplit(format!(
                "k must be at least 2, got {k}"
            )));
        }
        let (mut causal, mut non_causal) = self.partition_by_causality()?;
        let n = self.len();
        let test_total = (test_fraction * n as f64).round() as usize;
        let quotas = apportion(test_total, &[causal.len(), non_causal.len()]);

        let mut rng = util::rng(seed);
        causal.shuffle(&mut rng);
        non_causal.shuffle(&mut rng);

        let mut test_ids = HashSet::new();
        let mut fold_members: Vec<HashSet<usize>> = vec![HashSet::new(); k];
        let mut next_fold = 0;
        for (class, quota, name) in [
            (&causal, quotas[0], "causal"),
            (&non_causal, quotas[1], "non-causal"),
        ] {
            let remaining = class.len() - quota;
            if remaining < k {
                return Err(CorpusError::InvalidSplit(format!(
                    "k = {k} exceeds the {remaining} {name} sentences left after holding out the test set"
                )));
            }
            test_ids.extend(class[..quota].iter().copied());
            for &pos in &class[quota..] {
                fold_members[next_fold].insert(pos);
                next_fold = (next_fold + 1) % k;
            }
        }

        let pick = |members: &HashSet<usize>| -> Dataset {
            let ids: HashSet<&str> = members
                .iter()
                .map(|&p| self.sentences[p].id.as_str())
                .collect();
            self.filter(|s| ids.contains(s.id.as_str()))
        };
        let test = pick(&test_ids);
        let remainder = self.filter(|s| !test_ids.contains(&self.by_id[&s.id]));
        let folds = (0..k)
            .map(|i| {
                let train: HashSet<usize> = fold_members
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .flat_map(|(_, m)| m.iter().copied())
                    .collect();
                Fold {
                    train: pick(&train),
                    validation: pick(&fold_members[i]),
                }
            })
            .collect();
        Ok(SplitPlan {
            test,
            remainder,
            folds,
        })
    }

    /// Label distribution of one category; dependent categories are counted
    /// over causal sentences only.
    pub fn category_distribution(
        &self,
        category: Category,
    ) -> Result<Vec<LabelShare>, CorpusError> {
        if self.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut counts = vec![0usize; category.value_names().len()];
        for labels in self.gold.values() {
            if category.is_dependent() && labels.causality() != Some(true) {
                continue;
            }
            if let Some(value) = labels.get(category) {
                let idx = value_index(value);
                counts[idx] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(CorpusError::NoLabels(category));
        }
        Ok(category
            .value_names()
            .iter()
            .zip(counts)
            .map(|(label, count)| LabelShare {
                label: label.to_string(),
                count,
                proportion: count as f64 / total as f64,
            })
            .collect())
    }
}

fn value_index(value: LabelValue) -> usize {
    use super::{Relationship, Temporality};
    match value {
        LabelValue::Binary(b) => usize::from(b),
        LabelValue::Relationship(Relationship::Cause)
        | LabelValue::Temporality(Temporality::Before) => 0,
        LabelValue::Relationship(Relationship::Enable)
        | LabelValue::Temporality(Temporality::Overlap) => 1,
        LabelValue::Relationship(Relationship::Prevent)
        | LabelValue::Temporality(Temporality::During) => 2,
    }
}

/// Largest-remainder apportionment of `total` over groups of the given sizes.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainder numerators, compared exactly in integers
    order.sort_by(|&a, &b| {
        ((sizes[b] * total) % n)
            .cmp(&((sizes[a] * total) % n))
            .then(a.cmp(&b))
    });
    let mut left = total - quotas.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            left -= 1;
        }
    }
    quotas
}
