//! Corpus files: JSON Lines (one object per sentence) and CSV with flattened
//! `label.<Category>` columns.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use super::{label_from_json, Category, CorpusError, Dataset, LabelSet, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSON Lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!(
                "unknown corpus format `{other}` (expected jsonl or csv)"
            )),
        }
    }
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRow {
    pub id: String,
    pub doc_id: String,
    pub index_in_doc: u32,
    pub domain: String,
    pub year: Option<i32>,
    pub text: String,
    pub labels: LabelSet,
    pub cue_phrases: Vec<String>,
}

impl CorpusRow {
    pub fn from_dataset(dataset: &Dataset, sentence: &Sentence) -> Self {
        CorpusRow {
            id: sentence.id.clone(),
            doc_id: sentence.doc_id.clone(),
            index_in_doc: sentence.index_in_doc,
            domain: sentence.domain.clone(),
            year: sentence.year,
            text: sentence.text.clone(),
            labels: dataset.labels(&sentence.id).cloned().unwrap_or_default(),
            cue_phrases: dataset.cue_phrases(&sentence.id).to_vec(),
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Dataset, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dataset = read_corpus(BufReader::new(file), format)?;
    Ok(dataset.with_provenance("source", path.display().to_string()))
}

pub fn save_corpus(
    dataset: &Dataset,
    path: &Path,
    format: CorpusFormat,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_corpus(dataset, format, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Dataset, CorpusError> {
    let rows = match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(reader))?,
        CorpusFormat::Csv => read_csv(reader)?,
    };
    rows_to_dataset(rows)
}

pub fn write_corpus<W: Write>(
    dataset: &Dataset,
    format: CorpusFormat,
    out: W,
) -> std::io::Result<()> {
    let rows = dataset
        .sentences()
        .iter()
        .map(|s| CorpusRow::from_dataset(dataset, s));
    match format {
        CorpusFormat::Jsonl => write_jsonl(rows, out),
        CorpusFormat::Csv => write_csv(rows, out),
    }
}

pub fn write_jsonl<W: Write>(
    rows: impl Iterator<Item = CorpusRow>,
    mut out: W,
) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn rows_to_dataset(rows: Vec<(usize, CorpusRow)>) -> Result<Dataset, CorpusError> {
    let mut seen = HashSet::new();
    let mut doc_index = HashSet::new();
    let mut sentences = Vec::with_capacity(rows.len());
    let mut gold = BTreeMap::new();
    let mut cues = BTreeMap::new();
    for (line, row) in rows {
        if !seen.insert(row.id.clone()) {
            return Err(CorpusError::DuplicateId { id: row.id, line });
        }
        if !doc_index.insert((row.doc_id.clone(), row.index_in_doc)) {
            return Err(malformed(
                line,
                "index_in_doc",
                "duplicate index within document",
            ));
        }
        if row.text.trim().is_empty() {
            return Err(malformed(line, "text", "empty text"));
        }
        row.labels
            .validate(false)
            .map_err(|v| malformed(line, "labels", &v.to_string()))?;
        if !row.labels.is_empty() {
            gold.insert(row.id.clone(), row.labels);
        }
        if !row.cue_phrases.is_empty() {
            cues.insert(row.id.clone(), row.cue_phrases);
        }
        sentences.push(Sentence {
            id: row.id,
            text: row.text,
            doc_id: row.doc_id,
            index_in_doc: row.index_in_doc,
            domain: row.domain,
            year: row.year,
        });
    }
    Dataset::new(sentences, gold, cues)
}

fn malformed(line: usize, field: &str, message: &str) -> CorpusError {
    CorpusError::Malformed {
        line,
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<(usize, CorpusRow)>, CorpusError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| malformed(line_no, "<line>", &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| malformed(line_no, "<json>", &e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(line_no, "<json>", "expected an object"))?;
        let string = |field: &str| -> Result<String, CorpusError> {
            obj.get(field)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| malformed(line_no, field, "expected a string"))
        };
        let index_in_doc = obj
            .get("index_in_doc")
            .and_then(Value::as_u64)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| malformed(line_no, "index_in_doc", "expected a non-negative integer"))?;
        let year = match obj.get("year") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_i64()
                    .and_then(|y| i32::try_from(y).ok())
                    .ok_or_else(|| malformed(line_no, "year", "expected an integer or null"))?,
            ),
        };
        let mut labels = LabelSet::new();
        match obj.get("labels") {
            None | Some(Value::Null) => {}
            Some(Value::Object(map)) => {
                for (key, raw) in map {
                    let category: Category = key.parse().map_err(|_| {
                        malformed(line_no, &format!("labels.{key}"), "unknown category")
                    })?;
                    let value = label_from_json(category, raw)
                        .map_err(|m| malformed(line_no, &format!("labels.{key}"), &m))?;
                    labels.insert(category, value).map_err(|v| {
                        malformed(line_no, &format!("labels.{key}"), &v.to_string())
                    })?;
                }
            }
            Some(_) => return Err(malformed(line_no, "labels", "expected an object")),
        }
        let cue_phrases = match obj.get("cue_phrases") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| malformed(line_no, "cue_phrases", "expected an array of strings"))?,
            Some(_) => {
                return Err(malformed(
                    line_no,
                    "cue_phrases",
                    "expected an array of strings",
                ))
            }
        };
        rows.push((
            line_no,
            CorpusRow {
                id: string("id")?,
                doc_id: string("doc_id")?,
                index_in_doc,
                domain: obj
                    .get("domain")
                    .map(|v| v.as_str().map(str::to_string))
                    .unwrap_or(Some(String::new()))
                    .ok_or_else(|| malformed(line_no, "domain", "expected a string"))?,
                year,
                text: string("text")?,
                labels,
                cue_phrases,
            },
        ));
    }
    Ok(rows)
}

const CSV_FIXED: [&str; 6] = ["id", "doc_id", "index_in_doc", "domain", "year", "text"];

fn csv_header() -> Vec<String> {
    CSV_FIXED
        .iter()
        .map(|s| s.to_string())
        .chain(Category::ALL.iter().map(|c| format!("label.{}", c.name())))
        .chain(std::iter::once("cue_phrases".to_string()))
        .collect()
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<(usize, CorpusRow)>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, "<header>", &e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let fixed: Vec<Option<usize>> = CSV_FIXED.iter().map(|n| column(n)).collect();
    for (name, idx) in CSV_FIXED.iter().zip(&fixed) {
        if idx.is_none() && *name != "year" && *name != "domain" {
            return Err(malformed(1, name, "missing column"));
        }
    }
    let label_columns: Vec<(Category, usize)> = Category::ALL
        .iter()
        .filter_map(|c| column(&format!("label.{}", c.name())).map(|i| (*c, i)))
        .collect();
    if let Some(unknown) = headers
        .iter()
        .filter_map(|h| h.strip_prefix("label."))
        .find(|name| name.parse::<Category>().is_err())
    {
        return Err(malformed(
            1,
            &format!("label.{unknown}"),
            "unknown category",
        ));
    }
    let cue_column = column("cue_phrases");

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line_no = i + 2;
        let record = record.map_err(|e| malformed(line_no, "<row>", &e.to_string()))?;
        let cell = |idx: Option<usize>| idx.and_then(|i| record.get(i)).unwrap_or("");
        let index_in_doc = cell(fixed[2])
            .parse::<u32>()
            .map_err(|_| malformed(line_no, "index_in_doc", "expected a non-negative integer"))?;
        let year = match cell(fixed[4]) {
            "" => None,
            raw => Some(
                raw.parse::<i32>()
                    .map_err(|_| malformed(line_no, "year", "expected an integer"))?,
            ),
        };
        let mut labels = LabelSet::new();
        for (category, idx) in &label_columns {
            let raw = cell(Some(*idx));
            if raw.is_empty() {
                continue;
            }
            let field = format!("label.{}", category.name());
            let value = category
                .parse_value(raw)
                .map_err(|m| malformed(line_no, &field, &m))?;
            labels
                .insert(*category, value)
                .map_err(|v| malformed(line_no, &field, &v.to_string()))?;
        }
        let cue_phrases = match cell(cue_column) {
            "" => Vec::new(),
            raw => serde_json::from_str::<Vec<String>>(raw).map_err(|_| {
                malformed(line_no, "cue_phrases", "expected a JSON array of strings")
            })?,
        };
        rows.push((
            line_no,
            CorpusRow {
                id: cell(fixed[0]).to_string(),
                doc_id: cell(fixed[1]).to_string(),
                index_in_doc,
                domain: cell(fixed[3]).to_string(),
                year,
                text: cell(fixed[5]).to_string(),
                labels,
                cue_phrases,
            },
        ));
    }
    Ok(rows)
}

fn write_csv<W: Write>(rows: impl Iterator<Item = CorpusRow>, out: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(csv_header())?;
    for row in rows {
        let mut record = vec![
            row.id,
            row.doc_id,
            row.index_in_doc.to_string(),
            row.domain,
            row.year.map(|y| y.to_string()).unwrap_or_default(),
            row.text,
        ];
        record.extend(Category::ALL.iter().map(|c| {
            row.labels
                .get(*c)
                .map(|v| v.to_string())
                .unwrap_or_default()
        }));
        record.push(if row.cue_phrases.is_empty() {
            String::new()
        } else {
            serde_json::to_string(&row.cue_phrases)?
        });
        wtr.write_record(record)?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_ROWS: &str = r#"{"id":"d1#0","doc_id":"d1","index_in_doc":0,"domain":"aerospace","year":2012,"text":"If the process fails, an error message is shown.","labels":{"Causality":1,"Marked":1,"Relationship":"cause"},"cue_phrases":["if"]}
{"id":"d1#1","doc_id":"d1","index_in_doc":1,"domain":"aerospace","year":2012,"text":"The user has no admin rights.","labels":{"Causality":0},"cue_phrases":[]}
{"id":"d2#0","doc_id":"d2","index_in_doc":0,"domain":"smart city","year":null,"text":"The system shall log all requests.","labels":{},"cue_phrases":[]}
"#;

    #[test]
    fn parses_three_rows() {
        let ds = read_corpus(THREE_ROWS.as_bytes(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.causality("d1#0"), Some(true));
        assert_eq!(ds.causality("d2#0"), None);
        assert_eq!(ds.cue_phrases("d1#0"), ["if"]);
    }

    #[test]
    fn duplicate_id_names_line() {
        let mut text = String::new();
        for i in 0..4 {
            text.push_str(&format!(
                r#"{{"id":"s{i}","doc_id":"d","index_in_doc":{i},"domain":"x","year":null,"text":"t","labels":{{}},"cue_phrases":[]}}"#
            ));
            text.push('\n');
        }
        text.push_str(r#"{"id":"s1","doc_id":"d","index_in_doc":9,"domain":"x","year":null,"text":"t","labels":{},"cue_phrases":[]}"#);
        let err = read_corpus(text.as_bytes(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { line: 5, .. }));
        assert!(err.to_string().contains("duplicate id"));
        assert!(err.to_string().contains("line 5"));
    }

    #[test]
    fn malformed_row_names_line_and_field() {
        let text = r#"{"id":"a","doc_id":"d","index_in_doc":0,"text":"x"}
{"id":"b","doc_id":"d","index_in_doc":-1,"text":"y"}"#;
        let err = read_corpus(text.as_bytes(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            CorpusError::Malformed { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "index_in_doc");
            }
            other => panic!("unexpected {other}"),
        }
        let bad_label = r#"{"id":"a","doc_id":"d","index_in_doc":0,"text":"x","labels":{"Causality":0,"Temporality":"before"}}"#;
        let err = read_corpus(bad_label.as_bytes(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { ref field, .. } if field == "labels"));
    }

    #[test]
    fn csv_matches_jsonl() {
        let ds = read_corpus(THREE_ROWS.as_bytes(), CorpusFormat::Jsonl).unwrap();
        let mut buf = Vec::new();
        write_corpus(&ds, CorpusFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,doc_id,index_in_doc,domain,year,text,label.Causality,"));
        let back = read_corpus(buf.as_slice(), CorpusFormat::Csv).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn jsonl_is_written_back_byte_identically() {
        let ds = read_corpus(THREE_ROWS.as_bytes(), CorpusFormat::Jsonl).unwrap();
        let mut buf = Vec::new();
        write_corpus(&ds, CorpusFormat::Jsonl, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), THREE_ROWS);
    }
}
