use std::collections::{BTreeMap, HashSet};

use cira_core::Dataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignError {
    #[error("corpus has {available} sentences, the plan needs {required}")]
    InsufficientCorpus { required: usize, available: usize },
    #[error("no annotators given")]
    NoAnnotators,
    #[error("duplicate annotator `{0}`")]
    DuplicateAnnotator(String),
}

/// Per-annotator task queues. Every annotator receives a disjoint unique
/// set plus the whole shared overlap pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub seed: u64,
    pub overlap_pool: Vec<String>,
    pub queues: BTreeMap<String, Vec<String>>,
}

impl TaskPlan {
    pub fn required_size(annotators: usize, unique: usize, overlap: usize) -> usize {
        annotators * unique + overlap
    }

    pub fn is_overlap(&self, sentence_id: &str) -> bool {
        self.overlap_pool.iter().any(|s| s == sentence_id)
    }
}

/// Draws the plan from a seeded shuffle of the corpus. Queues interleave
/// unique and overlap sentences in random order.
pub fn assign_tasks(
    corpus: &Dataset,
    annotators: &[String],
    unique_per_annotator: usize,
    overlap_per_annotator: usize,
    seed: u64,
) -> Result<TaskPlan, AssignError> {
    if annotators.is_empty() {
        return Err(AssignError::NoAnnotators);
    }
    let mut seen = HashSet::new();
    for a in annotators {
        if !seen.insert(a) {
            return Err(AssignError::DuplicateAnnotator(a.clone()));
        }
    }
    let required = TaskPlan::required_size(
        annotators.len(),
        unique_per_annotator,
        overlap_per_annotator,
    );
    if required > corpus.len() {
        return Err(AssignError::InsufficientCorpus {
            required,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<String> = corpus.sentences().iter().map(|s| s.id.clone()).collect();
    ids.shuffle(&mut rng);
    let overlap_pool: Vec<String> = ids[..overlap_per_annotator].to_vec();
    let mut rest = ids[overlap_per_annotator..].chunks(unique_per_annotator.max(1));
    let mut queues = BTreeMap::new();
    for a in annotators {
        let mut queue: Vec<String> = if unique_per_annotator == 0 {
            Vec::new()
        } else {
            rest.next().expect("size checked").to_vec()
        };
        queue.extend(overlap_pool.iter().cloned());
        queue.shuffle(&mut rng);
        queues.insert(a.clone(), queue);
    }
    Ok(TaskPlan {
        seed,
        overlap_pool,
        queues,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn corpus(n: usize) -> Dataset {
        let texts: Vec<String> = (0..n).map(|i| format!("Sentence {i}.")).collect();
        Dataset::from_texts(&texts).unwrap()
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn study_design_needs_15500() {
        assert_eq!(TaskPlan::required_size(6, 2500, 500), 15_500);
        let err = assign_tasks(&corpus(15_499), &names(6), 2500, 500, 0).unwrap_err();
        assert_eq!(
            err,
            AssignError::InsufficientCorpus {
                required: 15_500,
                available: 15_499
            }
        );
        let plan = assign_tasks(&corpus(15_500), &names(6), 2500, 500, 0).unwrap();
        assert!(plan.queues.values().all(|q| q.len() == 3000));
        let distinct: HashSet<&String> = plan.queues.values().flatten().collect();
        assert_eq!(distinct.len(), 15_500);
    }

    #[test]
    fn single_annotator_without_overlap() {
        let plan = assign_tasks(&corpus(5), &names(1), 5, 0, 1).unwrap();
        assert!(plan.overlap_pool.is_empty());
        let mut q = plan.queues["a0"].clone();
        q.sort();
        let mut all: Vec<String> = corpus(5).sentences().iter().map(|s| s.id.clone()).collect();
        all.sort();
        assert_eq!(q, all);
    }

    #[test]
    fn rejects_bad_annotator_lists() {
        assert_eq!(
            assign_tasks(&corpus(5), &[], 1, 0, 0),
            Err(AssignError::NoAnnotators)
        );
        let dup = vec!["x".to_string(), "x".to_string()];
        assert!(matches!(
            assign_tasks(&corpus(5), &dup, 1, 0, 0),
            Err(AssignError::DuplicateAnnotator(_))
        ));
    }

    proptest! {
        #[test]
        fn plan_invariants(n in 1usize..5, unique in 0usize..6, overlap in 0usize..6, extra in 0usize..5, seed: u64) {
            let ds = corpus(TaskPlan::required_size(n, unique, overlap) + extra);
            let plan = assign_tasks(&ds, &names(n), unique, overlap, seed).unwrap();
            prop_assert_eq!(&plan, &assign_tasks(&ds, &names(n), unique, overlap, seed).unwrap());
            let mut owner: BTreeMap<&String, usize> = BTreeMap::new();
            for q in plan.queues.values() {
                let set: HashSet<&String> = q.iter().collect();
                prop_assert_eq!(set.len(), q.len());
                prop_assert_eq!(q.len(), unique + overlap);
                for p in &plan.overlap_pool {
                    prop_assert!(set.contains(p));
                }
                for s in q.iter().filter(|s| !plan.is_overlap(s)) {
                    *owner.entry(s).or_default() += 1;
                }
            }
            prop_assert!(owner.values().all(|&c| c == 1));
            prop_assert_eq!(owner.len(), n * unique);
        }
    }
}
