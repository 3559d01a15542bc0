use std::path::Path;
use std::sync::Mutex;

use cira_core::corpus::SchemaViolation;
use cira_core::AnnotationRecord;
use rusqlite::{params, Connection, OptionalExtension};
use serde::Serialize;

use crate::assign::TaskPlan;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("stored record is corrupt: {0}")]
    Corrupt(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] SchemaViolation),
    #[error("annotator `{annotator}` has no task for sentence `{sentence_id}`")]
    NoTask {
        annotator: String,
        sentence_id: String,
    },
    #[error("the store already holds a different task plan")]
    PlanMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRow {
    pub sentence_id: String,
    pub overlap: bool,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ack {
    pub annotator_id: String,
    pub sentence_id: String,
    pub version: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub submitted: u64,
    pub total: u64,
}

/// Which sentences an export or report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    All,
    Overlap,
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS tasks (
    annotator TEXT NOT NULL,
    sentence_id TEXT NOT NULL,
    position INTEGER NOT NULL,
    overlap INTEGER NOT NULL,
    status TEXT NOT NULL DEFAULT 'open',
    PRIMARY KEY (annotator, sentence_id)
);
CREATE TABLE IF NOT EXISTS annotations (
    annotator TEXT NOT NULL,
    sentence_id TEXT NOT NULL,
    version INTEGER NOT NULL,
    record TEXT NOT NULL,
    PRIMARY KEY (annotator, sentence_id, version)
);
";

/// SQLite persistence for tasks and versioned annotation records. One
/// connection behind a mutex serializes every write.
pub struct Store {
    conn: Mutex<Connection>,
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        Self::init(Connection::open(path)?)
    }

    pub fn open_in_memory() -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, StoreError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn: Mutex::new(conn),
        })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Writes the plan on first use; later calls must pass the same plan.
    pub fn install_plan(&self, plan: &TaskPlan) -> Result<(), StoreError> {
        let json = serde_json::to_string(plan)?;
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let existing: Option<String> = tx
            .query_row("SELECT value FROM meta WHERE key = 'plan'", [], |r| {
                r.get(0)
            })
            .optional()?;
        match existing {
            Some(stored) if stored == json => return Ok(()),
            Some(_) => return Err(StoreError::PlanMismatch),
            None => {}
        }
        tx.execute("INSERT INTO meta (key, value) VALUES ('plan', ?1)", [&json])?;
        {
            let mut insert =
                tx.prepare("INSERT INTO tasks (annotator, sentence_id, position, overlap) VALUES (?1, ?2, ?3, ?4)")?;
            for (annotator, queue) in &plan.queues {
                for (pos, sentence) in queue.iter().enumerate() {
                    insert.execute(params![
                        annotator,
                        sentence,
                        pos as i64,
                        plan.is_overlap(sentence)
                    ])?;
                }
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn has_tasks(&self, annotator: &str) -> Result<bool, StoreError> {
        let n: i64 = self.conn().query_row(
            "SELECT COUNT(*) FROM tasks WHERE annotator = ?1",
            [annotator],
            |r| r.get(0),
        )?;
        Ok(n > 0)
    }

    /// First open task in queue order.
    pub fn next_task(&self, annotator: &str) -> Result<Option<TaskRow>, StoreError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT sentence_id, overlap FROM tasks WHERE annotator = ?1 AND status = 'open'
                 ORDER BY position LIMIT 1",
                [annotator],
                |r| {
                    Ok(TaskRow {
                        sentence_id: r.get(0)?,
                        overlap: r.get(1)?,
                        status: TaskStatus::Open,
                    })
                },
            )
            .optional()?)
    }

    pub fn progress(&self, annotator: &str) -> Result<Progress, StoreError> {
        let (submitted, total): (i64, i64) = self.conn().query_row(
            "SELECT COALESCE(SUM(status = 'submitted'), 0), COUNT(*) FROM tasks WHERE annotator = ?1",
            [annotator],
            |r| Ok((r.get(0)?, r.get(1)?)),
        )?;
        Ok(Progress {
            submitted: submitted as u64,
            total: total as u64,
        })
    }

    /// Validates and stores `record` as the next version of its
    /// (annotator, sentence) pair and marks the task submitted.
    pub fn submit(&self, record: &AnnotationRecord) -> Result<Ack, StoreError> {
        record.validate()?;
        let json = serde_json::to_string(record)?;
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let updated = tx.execute(
            "UPDATE tasks SET status = 'submitted' WHERE annotator = ?1 AND sentence_id = ?2",
            params![record.annotator_id, record.sentence_id],
        )?;
        if updated == 0 {
            return Err(StoreError::NoTask {
                annotator: record.annotator_id.clone(),
                sentence_id: record.sentence_id.clone(),
            });
        }
        let version: u32 = tx.query_row(
            "SELECT COALESCE(MAX(version), 0) + 1 FROM annotations WHERE annotator = ?1 AND sentence_id = ?2",
            params![record.annotator_id, record.sentence_id],
            |r| r.get(0),
        )?;
        tx.execute(
            "INSERT INTO annotations (annotator, sentence_id, version, record) VALUES (?1, ?2, ?3, ?4)",
            params![record.annotator_id, record.sentence_id, version, json],
        )?;
        tx.commit()?;
        Ok(Ack {
            annotator_id: record.annotator_id.clone(),
            sentence_id: record.sentence_id.clone(),
            version,
        })
    }

    /// Every version of one pair, oldest first.
    pub fn history(
        &self,
        annotator: &str,
        sentence_id: &str,
    ) -> Result<Vec<AnnotationRecord>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT record FROM annotations WHERE annotator = ?1 AND sentence_id = ?2 ORDER BY version",
        )?;
        let rows = stmt.query_map(params![annotator, sentence_id], |r| r.get::<_, String>(0))?;
        rows.map(|r| Ok(serde_json::from_str(&r?)?)).collect()
    }

    /// Latest version of every pair, ordered by sentence then annotator.
    /// Runs in one read transaction, so the result is a consistent snapshot.
    pub fn current_records(&self, scope: Scope) -> Result<Vec<AnnotationRecord>, StoreError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let filter = match scope {
            Scope::All => "",
            Scope::Overlap => "AND t.overlap = 1",
        };
        let sql = format!(
            "SELECT a.record FROM annotations a
             JOIN tasks t ON t.annotator = a.annotator AND t.sentence_id = a.sentence_id
             WHERE a.version = (SELECT MAX(version) FROM annotations b
                                WHERE b.annotator = a.annotator AND b.sentence_id = a.sentence_id)
             {filter}
             ORDER BY a.sentence_id, a.annotator"
        );
        let records = {
            let mut stmt = tx.prepare(&sql)?;
            let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
            rows.map(|r| Ok(serde_json::from_str(&r?)?))
                .collect::<Result<Vec<AnnotationRecord>, StoreError>>()?
        };
        tx.commit()?;
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use chrono::Utc;
    use cira_core::{Category, Dataset, LabelSet, LabelValue, Relationship, Temporality};

    use super::*;
    use crate::assign::assign_tasks;

    fn setup() -> (Store, TaskPlan) {
        let texts: Vec<String> = (0..6).map(|i| format!("Sentence {i}.")).collect();
        let ds = Dataset::from_texts(&texts).unwrap();
        let plan = assign_tasks(&ds, &["a".into(), "b".into()], 2, 2, 3).unwrap();
        let store = Store::open_in_memory().unwrap();
        store.install_plan(&plan).unwrap();
        (store, plan)
    }

    fn record(annotator: &str, sentence: &str, labels: LabelSet) -> AnnotationRecord {
        AnnotationRecord {
            sentence_id: sentence.into(),
            annotator_id: annotator.into(),
            labels,
            cue_phrases: vec![],
            timestamp: Utc::now(),
        }
    }

    fn causal_enable() -> LabelSet {
        let mut l = LabelSet::causal(true);
        for c in Category::BINARY.into_iter().skip(1) {
            l.insert(c, LabelValue::Binary(true)).unwrap();
        }
        l.insert(
            Category::Relationship,
            LabelValue::Relationship(Relationship::Enable),
        )
        .unwrap();
        l.insert(
            Category::Temporality,
            LabelValue::Temporality(Temporality::Before),
        )
        .unwrap();
        l
    }

    #[test]
    fn plan_is_installed_once() {
        let (store, plan) = setup();
        store.install_plan(&plan).unwrap();
        let mut other = plan.clone();
        other.seed += 1;
        assert!(matches!(
            store.install_plan(&other),
            Err(StoreError::PlanMismatch)
        ));
        assert_eq!(
            store.progress("a").unwrap(),
            Progress {
                submitted: 0,
                total: 4
            }
        );
    }

    #[test]
    fn resubmission_keeps_history() {
        let (store, plan) = setup();
        let s = plan.queues["a"][0].clone();
        assert_eq!(store.next_task("a").unwrap().unwrap().sentence_id, s);
        store
            .submit(&record("a", &s, LabelSet::causal(false)))
            .unwrap();
        assert_ne!(store.next_task("a").unwrap().unwrap().sentence_id, s);
        let ack = store.submit(&record("a", &s, causal_enable())).unwrap();
        assert_eq!(ack.version, 2);
        let history = store.history("a", &s).unwrap();
        assert_eq!(history.len(), 2);
        let current = store.current_records(Scope::All).unwrap();
        assert_eq!(current.len(), 1);
        assert_eq!(current[0].labels, causal_enable());
        assert_eq!(store.progress("a").unwrap().submitted, 1);
    }

    #[test]
    fn rejects_invalid_and_unassigned() {
        let (store, plan) = setup();
        let s = plan.queues["a"][0].clone();
        let mut bad = LabelSet::causal(false);
        bad.insert(
            Category::Temporality,
            LabelValue::Temporality(Temporality::Before),
        )
        .unwrap();
        let err = store.submit(&record("a", &s, bad)).unwrap_err();
        assert!(matches!(
            err,
            StoreError::Invalid(SchemaViolation::DependentOnNonCausal { .. })
        ));
        let foreign = plan.queues["b"]
            .iter()
            .find(|s| !plan.is_overlap(s))
            .unwrap();
        assert!(matches!(
            store.submit(&record("a", foreign, LabelSet::causal(false))),
            Err(StoreError::NoTask { .. })
        ));
        assert!(store.current_records(Scope::All).unwrap().is_empty());
    }

    #[test]
    fn overlap_scope_filters() {
        let (store, plan) = setup();
        for s in &plan.queues["a"] {
            store
                .submit(&record("a", s, LabelSet::causal(false)))
                .unwrap();
        }
        assert_eq!(store.current_records(Scope::All).unwrap().len(), 4);
        let overlap = store.current_records(Scope::Overlap).unwrap();
        assert_eq!(overlap.len(), 2);
        assert!(overlap.iter().all(|r| plan.is_overlap(&r.sentence_id)));
    }

    #[test]
    fn persists_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sqlite");
        let texts = ["A.", "B."];
        let plan = assign_tasks(
            &Dataset::from_texts(&texts).unwrap(),
            &["a".into()],
            2,
            0,
            0,
        )
        .unwrap();
        {
            let store = Store::open(&path).unwrap();
            store.install_plan(&plan).unwrap();
            store
                .submit(&record("a", &plan.queues["a"][0], LabelSet::causal(false)))
                .unwrap();
        }
        let store = Store::open(&path).unwrap();
        store.install_plan(&plan).unwrap();
        assert_eq!(store.current_records(Scope::All).unwrap().len(), 1);
    }
}
