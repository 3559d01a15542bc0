//! Cue-phrase lexicon, phrase matching, ambiguity factors and the rule-based
//! baseline.
//!
//! Phrases use a compact notation for surface variants:
//!
//! * `cause(s/ed)`: inflection suffixes (`cause`, `causes`, `caused`);
//! * `so (that)`: an optional trailing word;
//! * `to this/that end`: word alternatives.

mod ambiguity;
mod matching;

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ambiguity::{AfTable, AmbiguityStat, NON_AMBIGUOUS_AF};
pub use matching::{tokenize, CueMatch, Token};

const DEFAULT_LEXICON_CSV: &str = include_str!("../../data/cue_phrases.csv");

/// Version tag of the embedded lexicon file.
pub const DEFAULT_LEXICON_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("lexicon line {line}: {message}")]
    InvalidRow { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrammaticalType {
    Conjunction,
    Adverb,
    Pronoun,
    Adjective,
    Preposition,
    Verb,
}

impl GrammaticalType {
    pub fn as_str(self) -> &'static str {
        match self {
            GrammaticalType::Conjunction => "conjunction",
            GrammaticalType::Adverb => "adverb",
            GrammaticalType::Pronoun => "pronoun",
            GrammaticalType::Adjective => "adjective",
            GrammaticalType::Preposition => "preposition",
            GrammaticalType::Verb => "verb",
        }
    }
}

impl FromStr for GrammaticalType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "conjunction" => GrammaticalType::Conjunction,
            "adverb" => GrammaticalType::Adverb,
            "pronoun" => GrammaticalType::Pronoun,
            "adjective" => GrammaticalType::Adjective,
            "preposition" => GrammaticalType::Preposition,
            "verb" => GrammaticalType::Verb,
            other => return Err(format!("unknown grammatical type `{other}`")),
        })
    }
}

impl fmt::Display for GrammaticalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relation semantics a causal verb expresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationGroup {
    Cause,
    Enable,
    Prevent,
}

impl RelationGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationGroup::Cause => "cause",
            RelationGroup::Enable => "enable",
            RelationGroup::Prevent => "prevent",
        }
    }
}

impl FromStr for RelationGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "cause" => RelationGroup::Cause,
            "enable" => RelationGroup::Enable,
            "prevent" => RelationGroup::Prevent,
            other => return Err(format!("unknown relation group `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CuePhraseEntry {
    /// Phrase in lexicon notation, e.g. `result(s/ed) in`.
    pub phrase: String,
    pub grammatical_type: GrammaticalType,
    pub relation_group: Option<RelationGroup>,
}

impl CuePhraseEntry {
    pub fn new(
        phrase: &str,
        grammatical_type: GrammaticalType,
        relation_group: Option<RelationGroup>,
    ) -> Result<Self, String> {
        let phrase = phrase.trim().to_lowercase();
        if phrase.is_empty() {
            return Err("empty phrase".into());
        }
        if (grammatical_type == GrammaticalType::Verb) != relation_group.is_some() {
            return Err(format!(
                "`{phrase}`: relation group is required for verbs and forbidden otherwise"
            ));
        }
        let entry = Self {
            phrase,
            grammatical_type,
            relation_group,
        };
        if entry.surface_forms().iter().any(|f| f.is_empty()) {
            return Err(format!(
                "`{}`: notation expands to an empty form",
                entry.phrase
            ));
        }
        Ok(entry)
    }

    /// Every surface form the notation stands for, in expansion order.
    pub fn surface_forms(&self) -> Vec<String> {
        let mut forms = vec![String::new()];
        for word in self.phrase.split_whitespace() {
            let variants = expand_word(word);
            let mut next = Vec::with_capacity(forms.len() * variants.len());
            for prefix in &forms {
                for v in &variants {
                    next.push(match (prefix.is_empty(), v.is_empty()) {
                        (_, true) => prefix.clone(),
                        (true, false) => v.clone(),
                        (false, false) => format!("{prefix} {v}"),
                    });
                }
            }
            forms = next;
        }
        let mut unique = Vec::new();
        for f in forms {
            if !unique.contains(&f) {
                unique.push(f);
            }
        }
        unique
    }
}

/// Past-tense forms that do not follow the `+ed` / `+d` rule.
const IRREGULAR_PAST: &[(&str, &str)] = &[("permit", "permitted")];

fn expand_word(word: &str) -> Vec<String> {
    // optional word: "(that)"
    if let Some(inner) = word.strip_prefix('(').and_then(|w| w.strip_suffix(')')) {
        return vec![String::new(), inner.to_string()];
    }
    // inflection group: "cause(s/ed)"
    if let Some((stem, rest)) = word.split_once('(') {
        let suffixes = rest.trim_end_matches(')');
        let mut out = vec![stem.to_string()];
        for suffix in suffixes.split('/') {
            out.push(inflect(stem, suffix));
        }
        return out;
    }
    // alternatives: "this/that"
    word.split('/').map(str::to_string).collect()
}

fn inflect(stem: &str, suffix: &str) -> String {
    if suffix == "ed" {
        if let Some((_, past)) = IRREGULAR_PAST.iter().find(|(s, _)| *s == stem) {
            return past.to_string();
        }
        if stem.ends_with('e') {
            return format!("{stem}d");
        }
    }
    format!("{stem}{suffix}")
}

/// An immutable, ordered collection of cue phrases with precompiled matchers.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<CuePhraseEntry>,
    // per entry, per surface form, the lowercased token sequence
    forms: Vec<Vec<Vec<String>>>,
    // first token -> (entry, form) pairs starting with it
    by_first: HashMap<String, Vec<(usize, usize)>>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Lexicon {
    pub fn new(entries: Vec<CuePhraseEntry>) -> Self {
        let forms = entries
            .iter()
            .map(|e| {
                e.surface_forms()
                    .iter()
                    .map(|f| tokenize(f).into_iter().map(|t| t.text).collect())
                    .collect()
            })
            .collect::<Vec<Vec<Vec<String>>>>();
        let mut by_first: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (entry, entry_forms) in forms.iter().enumerate() {
            for (form, tokens) in entry_forms.iter().enumerate() {
                if let Some(first) = tokens.first() {
                    by_first
                        .entry(first.clone())
                        .or_default()
                        .push((entry, form));
                }
            }
        }
        Self {
            entries,
            forms,
            by_first,
        }
    }

    /// The lexicon shipped with the crate: 84 phrases in six grammatical
    /// types, verbs grouped by cause / enable / prevent.
    pub fn default_lexicon() -> Self {
        Self::from_csv(DEFAULT_LEXICON_CSV.as_bytes()).expect("embedded lexicon is valid")
    }

    /// Reads `phrase,grammatical_type,relation_group` rows.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LexiconError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let invalid = |message: String| LexiconError::InvalidRow { line, message };
            let phrase = row.get(0).unwrap_or_default();
            let gtype: GrammaticalType = row.get(1).unwrap_or_default().parse().map_err(invalid)?;
            let group = match row.get(2).map(str::trim).unwrap_or_default() {
                "" => None,
                raw => Some(raw.parse::<RelationGroup>().map_err(invalid)?),
            };
            let entry = CuePhraseEntry::new(phrase, gtype, group).map_err(invalid)?;
            if entries
                .iter()
                .any(|e: &CuePhraseEntry| e.phrase == entry.phrase)
            {
                return Err(invalid(format!("duplicate phrase `{}`", entry.phrase)));
            }
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["phrase", "grammatical_type", "relation_group"])
            .expect("in-memory write");
        for e in &self.entries {
            wtr.write_record([
                e.phrase.as_str(),
                e.grammatical_type.as_str(),
                e.relation_group.map(RelationGroup::as_str).unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("csv is utf-8")
    }

    pub fn entries(&self) -> &[CuePhraseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, phrase: &str) -> Option<&CuePhraseEntry> {
        self.entries.iter().find(|e| e.phrase == phrase)
    }

    /// Sub-lexicon of the entries accepted by `keep`.
    pub fn retain(&self, keep: impl Fn(&CuePhraseEntry) -> bool) -> Lexicon {
        Lexicon::new(self.entries.iter().filter(|e| keep(e)).cloned().collect())
    }

    /// Rule baseline: a sentence is causal iff it contains a cue phrase.
    pub fn rule_classify(&self, text: &str) -> bool {
        !self.match_phrases(text).is_empty()
    }

    /// Restricts the lexicon to phrases whose ambiguity factor on `table`
    /// reaches `min_af`. Phrases with undefined AF are dropped.
    pub fn with_min_af(&self, table: &AfTable, min_af: f64) -> Lexicon {
        self.retain(|e| {
            table
                .rows
                .iter()
                .find(|r| &r.entry == e)
                .and_then(AmbiguityStat::af)
                .is_some_and(|af| af >= min_af)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lexicon_inventory() {
        let lex = Lexicon::default_lexicon();
        assert_eq!(lex.len(), 84);
        let if_entry = lex.find("if").unwrap();
        assert_eq!(if_entry.grammatical_type, GrammaticalType::Conjunction);
        assert_eq!(if_entry.relation_group, None);
        let prevent = lex.find("prevent(s/ed)").unwrap();
        assert_eq!(prevent.grammatical_type, GrammaticalType::Verb);
        assert_eq!(prevent.relation_group, Some(RelationGroup::Prevent));
        assert_eq!(
            prevent.surface_forms(),
            ["prevent", "prevents", "prevented"]
        );
        let surface: usize = lex.entries().iter().map(|e| e.surface_forms().len()).sum();
        assert!(surface >= 90, "{surface} surface forms");
    }

    #[test]
    fn notation_expansion() {
        let e = |p: &str| {
            CuePhraseEntry::new(p, GrammaticalType::Verb, Some(RelationGroup::Cause)).unwrap()
        };
        assert_eq!(
            e("result(s/ed) in").surface_forms(),
            ["result in", "results in", "resulted in"]
        );
        assert_eq!(e("lead(s) to").surface_forms(), ["lead to", "leads to"]);
        assert_eq!(
            e("permit(s/ed)").surface_forms(),
            ["permit", "permits", "permitted"]
        );
        assert_eq!(e("need(s/ed)").surface_forms(), ["need", "needs", "needed"]);
        let so = CuePhraseEntry::new("so (that)", GrammaticalType::Conjunction, None).unwrap();
        assert_eq!(so.surface_forms(), ["so", "so that"]);
        let end = CuePhraseEntry::new("to this/that end", GrammaticalType::Adverb, None).unwrap();
        assert_eq!(end.surface_forms(), ["to this end", "to that end"]);
    }

    #[test]
    fn entry_invariants() {
        assert!(CuePhraseEntry::new("", GrammaticalType::Adverb, None).is_err());
        assert!(CuePhraseEntry::new(
            "if",
            GrammaticalType::Conjunction,
            Some(RelationGroup::Cause)
        )
        .is_err());
        assert!(CuePhraseEntry::new("cause", GrammaticalType::Verb, None).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let lex = Lexicon::default_lexicon();
        let back = Lexicon::from_csv(lex.to_csv().as_bytes()).unwrap();
        assert_eq!(back, lex);
        let bad = "phrase,grammatical_type,relation_group\nif,conjunction,\nfoo,noun,\n";
        match Lexicon::from_csv(bad.as_bytes()) {
            Err(LexiconError::InvalidRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rule_classify_examples() {
        let lex = Lexicon::default_lexicon();
        assert!(lex.rule_classify("If the user presses the button, a window appears"));
        assert!(!lex.rule_classify("The user has no admin rights."));
        assert!(!lex.rule_classify(""));
    }
}
