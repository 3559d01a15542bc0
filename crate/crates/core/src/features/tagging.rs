use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::tokenize;

/// Universal part-of-speech tags.
pub const UNIVERSAL_POS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

/// English dependency labels in the ClearNLP style.
pub const DEP_LABELS: [&str; 45] = [
    "ROOT",
    "acl",
    "acomp",
    "advcl",
    "advmod",
    "agent",
    "amod",
    "appos",
    "attr",
    "aux",
    "auxpass",
    "case",
    "cc",
    "ccomp",
    "compound",
    "conj",
    "csubj",
    "csubjpass",
    "dative",
    "dep",
    "det",
    "dobj",
    "expl",
    "intj",
    "mark",
    "meta",
    "neg",
    "nmod",
    "npadvmod",
    "nsubj",
    "nsubjpass",
    "nummod",
    "oprd",
    "parataxis",
    "pcomp",
    "pobj",
    "poss",
    "preconj",
    "predet",
    "prep",
    "prt",
    "punct",
    "quantmod",
    "relcl",
    "xcomp",
];

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("tagger `{tagger}` failed: {diagnostics}")]
    Failed { tagger: String, diagnostics: String },
    #[error("tagger `{tagger}` broke protocol: {message}")]
    Protocol { tagger: String, message: String },
    #[error("tag `{tag}` is not in the {inventory} inventory")]
    UnknownTag {
        tag: String,
        inventory: &'static str,
    },
    #[error("empty token surface")]
    EmptySurface,
    #[error("unknown tagger spec `{0}`; expected `rule` or `command:<program> [args]`")]
    UnknownSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    #[serde(rename = "text")]
    pub surface: String,
    pub pos: String,
    pub dep: String,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, pos: &str, dep: &str) -> Result<Self, TaggerError> {
        let token = Self {
            surface: surface.into(),
            pos: pos.to_string(),
            dep: dep.to_string(),
        };
        token.validate()?;
        Ok(token)
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        if self.surface.is_empty() {
            return Err(TaggerError::EmptySurface);
        }
        if !UNIVERSAL_POS.contains(&self.pos.as_str()) {
            return Err(TaggerError::UnknownTag {
                tag: self.pos.clone(),
                inventory: "part-of-speech",
            });
        }
        if !DEP_LABELS.contains(&self.dep.as_str()) {
            return Err(TaggerError::UnknownTag {
                tag: self.dep.clone(),
                inventory: "dependency",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagMode {
    Pos,
    Dep,
}

impl TagMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TagMode::Pos => "pos",
            TagMode::Dep => "dep",
        }
    }
}

impl fmt::Display for TagMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Produces POS and dependency tags for raw text.
pub trait Tagger: Send + Sync {
    fn tag(&self, text: &str) -> Result<Vec<TaggedToken>, TaggerError>;

    fn tag_batch(&self, texts: &[&str]) -> Result<Vec<Vec<TaggedToken>>, TaggerError> {
        texts.iter().map(|t| self.tag(t)).collect()
    }

    /// Identifier stored in checkpoint manifests; see [`tagger_from_spec`].
    fn spec(&self) -> String;
}

/// Renders tokens as `surface_TAG` joined by single spaces.
pub fn render_enriched(tokens: &[TaggedToken], mode: TagMode) -> String {
    tokens
        .iter()
        .map(|t| {
            let tag = match mode {
                TagMode::Pos => &t.pos,
                TagMode::Dep => &t.dep,
            };
            format!("{}_{}", t.surface, tag)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn enrich(text: &str, mode: TagMode, tagger: &dyn Tagger) -> Result<String, TaggerError> {
    Ok(render_enriched(&tagger.tag(text)?, mode))
}

/// Rebuilds a tagger from its [`Tagger::spec`] string.
pub fn tagger_from_spec(spec: &str) -> Result<Box<dyn Tagger>, TaggerError> {
    if spec == "rule" {
        return Ok(Box::new(RuleTagger));
    }
    if let Some(cmd) = spec.strip_prefix("command:") {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        if let Some(program) = parts.next() {
            return Ok(Box::new(CommandTagger::new(program, parts.collect())));
        }
    }
    Err(TaggerError::UnknownSpec(spec.to_string()))
}

impl FromStr for Box<dyn Tagger> {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        tagger_from_spec(s)
    }
}

/// Answers only for texts it was given up front.
#[derive(Debug, Clone, Default)]
pub struct FixedTagger {
    known: HashMap<String, Vec<TaggedToken>>,
}

impl FixedTagger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, tokens: Vec<TaggedToken>) {
        self.known.insert(text.into(), tokens);
    }

    pub fn with(mut self, text: impl Into<String>, tokens: Vec<TaggedToken>) -> Self {
        self.insert(text, tokens);
        self
    }
}

impl Tagger for FixedTagger {
    fn tag(&self, text: &str) -> Result<Vec<TaggedToken>, TaggerError> {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        self.known
            .get(text)
            .cloned()
            .ok_or_else(|| TaggerError::Failed {
                tagger: "fixed".into(),
                diagnostics: format!("no tags recorded for {text:?}"),
            })
    }

    fn spec(&self) -> String {
        "fixed".into()
    }
}

/// External tagger process speaking JSON lines.
///
/// Each input text is written to the child's stdin as one JSON string per
/// line; the child answers with one line per text holding a JSON array of
/// `{"text", "pos", "dep"}` objects. One process is spawned per batch.
#[derive(Debug, Clone)]
pub struct CommandTagger {
    program: String,
    args: Vec<String>,
}

impl CommandTagger {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    fn failed(&self, diagnostics: impl Into<String>) -> TaggerError {
        TaggerError::Failed {
            tagger: self.spec(),
            diagnostics: diagnostics.into(),
        }
    }
}

impl Tagger for CommandTagger {
    fn tag(&self, text: &str) -> Result<Vec<TaggedToken>, TaggerError> {
        Ok(self.tag_batch(&[text])?.pop().unwrap_or_default())
    }

    fn tag_batch(&self, texts: &[&str]) -> Result<Vec<Vec<TaggedToken>>, TaggerError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.failed(format!("cannot start: {e}")))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload: String = texts
            .iter()
            .map(|t| serde_json::to_string(t).expect("string serializes") + "\n")
            .collect();
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
        let stdout = child.stdout.take().expect("piped stdout");
        let mut out = Vec::with_capacity(texts.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| self.failed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let tokens: Vec<TaggedToken> =
                serde_json::from_str(&line).map_err(|e| TaggerError::Protocol {
                    tagger: self.spec(),
                    message: format!("response {}: {e}", out.len() + 1),
                })?;
            for t in &tokens {
                t.validate()?;
            }
            out.push(tokens);
        }
        let output = child
            .wait_with_output()
            .map_err(|e| self.failed(e.to_string()))?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(self.failed(format!(
                "{}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        if out.len() != texts.len() {
            return Err(TaggerError::Protocol {
                tagger: self.spec(),
                message: format!("expected {} responses, got {}", texts.len(), out.len()),
            });
        }
        Ok(out)
    }

    fn spec(&self) -> String {
        std::iter::once(format!("command:{}", self.program))
            .chain(self.args.iter().cloned())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Dictionary-and-suffix tagger for English requirements text.
///
/// It needs no model files and covers the common sentence shapes of
/// specifications (conditional clauses, modal and passive verb groups,
/// noun compounds); for parser-quality tags plug in a [`CommandTagger`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "these", "those", "each", "every", "all", "any", "some", "no",
    "another", "either", "neither", "both",
];
const POSSESSIVES: &[&str] = &["its", "their", "his", "her", "our", "your", "my"];
const PRONOUNS: &[&str] = &[
    "i",
    "you",
    "he",
    "she",
    "it",
    "we",
    "they",
    "me",
    "him",
    "us",
    "them",
    "which",
    "who",
    "whom",
    "whose",
    "what",
    "something",
    "anything",
    "nothing",
    "everything",
    "someone",
    "anyone",
    "itself",
    "themselves",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "shall", "should", "will", "would", "can", "could", "may", "might", "must",
];
const BE_FORMS: &[&str] = &["is", "are", "was", "were", "be", "been", "being", "am"];
const SUBORDINATORS: &[&str] = &[
    "if", "because", "since", "unless", "although", "though", "while", "whereas", "when",
    "whenever", "until", "once", "whether", "provided", "as",
];
const COORDINATORS: &[&str] = &["and", "or", "but", "nor", "yet"];
const ADPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "for", "with", "by", "from", "into", "onto", "upon", "about", "over",
    "under", "through", "during", "without", "within", "between", "against", "via", "per",
    "across", "among", "towards", "toward", "despite", "except", "like", "after", "before", "to",
    "due",
];
const ADVERBS: &[&str] = &[
    "also",
    "then",
    "thus",
    "therefore",
    "hence",
    "only",
    "very",
    "always",
    "never",
    "however",
    "already",
    "still",
    "again",
    "consequently",
    "accordingly",
    "otherwise",
    "here",
    "there",
    "now",
    "more",
    "most",
    "less",
    "too",
    "so",
    "else",
    "even",
    "just",
    "immediately",
    "furthermore",
];
const VERBS: &[&str] = &[
    "show", "display", "send", "store", "provide", "allow", "enable", "support", "create",
    "update", "delete", "start", "stop", "check", "validate", "generate", "notify", "use",
    "contain", "receive", "require", "ensure", "fail", "occur", "return", "save", "load", "open",
    "close", "select", "enter", "click", "print", "cause", "prevent", "lead", "result", "trigger",
    "restart", "reject", "accept", "exceed", "need", "want", "run", "become", "remain", "make",
    "get", "take", "give", "keep", "let", "set", "read", "write", "inform",
];
const PARTICIPLES: &[&str] = &[
    "done", "made", "sent", "set", "put", "built", "kept", "left", "read", "shown", "written",
    "given", "taken", "known", "seen", "found", "held", "run", "sold", "told", "paid", "met",
    "led", "shut", "begun", "chosen",
];
const ADJ_SUFFIXES: &[&str] = &[
    "able", "ible", "al", "ous", "ive", "ful", "less", "ic", "ent", "ant",
];

fn in_list(list: &[&str], w: &str) -> bool {
    list.contains(&w)
}

fn is_participle(w: &str) -> bool {
    in_list(PARTICIPLES, w) || (w.len() > 3 && (w.ends_with("ed") || w.ends_with("en")))
}

fn is_verb_form(w: &str) -> bool {
    let stem = w
        .strip_suffix("es")
        .filter(|s| in_list(VERBS, s))
        .or_else(|| w.strip_suffix('s').filter(|s| in_list(VERBS, s)));
    in_list(VERBS, w) || stem.is_some() || is_participle(w) || (w.len() > 4 && w.ends_with("ing"))
}

fn nominal(pos: &str) -> bool {
    matches!(pos, "NOUN" | "PROPN" | "PRON")
}

impl RuleTagger {
    #[allow(clippy::if_same_then_else)]
    fn pos_tags(words: &[String], lower: &[String]) -> Vec<&'static str> {
        let n = words.len();
        let mut pos: Vec<&'static str> = vec!["X"; n];
        for i in 0..n {
            let w = lower[i].as_str();
            let next = lower.get(i + 1).map(String::as_str).unwrap_or("");
            let prev = if i > 0 { pos[i - 1] } else { "" };
            pos[i] = if !w.chars().any(char::is_alphanumeric) {
                if w.chars().all(|c| "%$€£+=<>&*#@§".contains(c)) {
                    "SYM"
                } else {
                    "PUNCT"
                }
            } else if w
                .chars()
                .all(|c| c.is_ascii_digit() || c == '.' || c == ',')
            {
                "NUM"
            } else if w == "not" || w == "n't" {
                "PART"
            } else if w == "to" {
                if is_verb_form(next) && !next.ends_with("ing") && !in_list(DETERMINERS, next) {
                    "PART"
                } else {
                    "ADP"
                }
            } else if w == "that" {
                if in_list(DETERMINERS, next) || in_list(PRONOUNS, next) || prev == "VERB" {
                    "SCONJ"
                } else {
                    "DET"
                }
            } else if in_list(&["after", "before"], w) {
                if in_list(DETERMINERS, next) || next.chars().next().is_some_and(char::is_numeric) {
                    "ADP"
                } else {
                    "SCONJ"
                }
            } else if in_list(SUBORDINATORS, w) && !(w == "as" && i > 0 && prev != "PUNCT") {
                "SCONJ"
            } else if in_list(DETERMINERS, w) {
                "DET"
            } else if in_list(POSSESSIVES, w) || in_list(PRONOUNS, w) {
                "PRON"
            } else if in_list(AUXILIARIES, w) {
                let main_verb = matches!(w, "has" | "have" | "had" | "do" | "does" | "did")
                    && (in_list(DETERMINERS, next)
                        || in_list(PRONOUNS, next)
                        || in_list(POSSESSIVES, next));
                if main_verb {
                    "VERB"
                } else {
                    "AUX"
                }
            } else if in_list(COORDINATORS, w) {
                "CCONJ"
            } else if in_list(ADPOSITIONS, w) {
                "ADP"
            } else if in_list(ADVERBS, w) || (w.len() > 4 && w.ends_with("ly")) {
                "ADV"
            } else if matches!(prev, "AUX" | "PART")
                && (is_verb_form(w) || !in_list(DETERMINERS, w))
                && !ADJ_SUFFIXES
                    .iter()
                    .any(|s| w.ends_with(s) && !is_participle(w))
            {
                "VERB"
            } else if i > 0
                && matches!(prev, "NOUN" | "PROPN" | "PRON")
                && w.ends_with('s')
                && !w.ends_with("ss")
                && (next.is_empty()
                    || in_list(DETERMINERS, next)
                    || in_list(ADPOSITIONS, next)
                    || in_list(ADVERBS, next)
                    || !next.chars().any(char::is_alphanumeric)
                    || in_list(POSSESSIVES, next)
                    || in_list(PRONOUNS, next))
            {
                "VERB"
            } else if in_list(VERBS, w)
                && matches!(prev, "NOUN" | "PRON" | "PROPN" | "ADV" | "")
                && i + 1 < n
            {
                "VERB"
            } else if is_verb_form(w)
                && !in_list(VERBS, w)
                && matches!(prev, "NOUN" | "PRON" | "PROPN")
            {
                "VERB"
            } else if ADJ_SUFFIXES
                .iter()
                .any(|s| w.len() > s.len() + 2 && w.ends_with(s))
                && !w.ends_with("ment")
            {
                "ADJ"
            } else if i > 0 && words[i].chars().next().is_some_and(char::is_uppercase) {
                "PROPN"
            } else {
                "NOUN"
            };
        }
        pos
    }

    fn dep_labels(lower: &[String], pos: &[&'static str]) -> Vec<&'static str> {
        let n = pos.len();
        let mut dep: Vec<&'static str> = vec!["dep"; n];
        // clause segmentation: a subordinator opens a dependent clause that
        // runs to the next comma; a comma after it reopens the main clause
        let mut clauses: Vec<(usize, usize, bool)> = Vec::new();
        let mut start = 0;
        let mut subordinate = false;
        for i in 0..n {
            if pos[i] == "SCONJ" && i > start {
                clauses.push((start, i, subordinate));
                start = i;
                subordinate = true;
            } else if pos[i] == "SCONJ" {
                subordinate = true;
            } else if lower[i] == "," && subordinate {
                clauses.push((start, i + 1, subordinate));
                start = i + 1;
                subordinate = false;
            }
        }
        if start < n {
            clauses.push((start, n, subordinate));
        }
        if !clauses.iter().any(|c| !c.2) {
            if let Some(last) = clauses.first_mut() {
                last.2 = false;
            }
        }
        let mut root_taken = false;
        for &(s, e, sub) in &clauses {
            let head = (s..e)
                .find(|&i| pos[i] == "VERB")
                .or_else(|| (s..e).rev().find(|&i| pos[i] == "AUX"))
                .or_else(|| (s..e).find(|&i| nominal(pos[i])));
            let passive = head.is_some_and(|h| {
                pos[h] == "VERB"
                    && is_participle(&lower[h])
                    && (s..h).any(|j| pos[j] == "AUX" && in_list(BE_FORMS, &lower[j]))
            });
            if let Some(h) = head {
                dep[h] = if sub {
                    "advcl"
                } else if root_taken {
                    "conj"
                } else {
                    root_taken = true;
                    "ROOT"
                };
            }
            let mut after_adp = false;
            for i in s..e {
                if Some(i) == head {
                    after_adp = false;
                    continue;
                }
                let next = pos.get(i + 1).copied().unwrap_or("");
                let before_head = head.is_some_and(|h| i < h);
                dep[i] = match pos[i] {
                    "PUNCT" | "SYM" => "punct",
                    "DET" => "det",
                    "SCONJ" => "mark",
                    "CCONJ" => "cc",
                    "NUM" => "nummod",
                    "ADV" => "advmod",
                    "PART" if lower[i] == "to" => "aux",
                    "PART" => "neg",
                    "ADP" => {
                        after_adp = true;
                        "prep"
                    }
                    "AUX" => {
                        let last_be = in_list(BE_FORMS, &lower[i])
                            && !(i + 1..head.unwrap_or(i))
                                .any(|j| pos[j] == "AUX" && in_list(BE_FORMS, &lower[j]));
                        if passive && before_head && last_be {
                            "auxpass"
                        } else {
                            "aux"
                        }
                    }
                    "ADJ" => {
                        if matches!(next, "NOUN" | "PROPN" | "ADJ") {
                            "amod"
                        } else if head.is_some_and(|h| pos[h] == "AUX" && h < i) {
                            "acomp"
                        } else {
                            "amod"
                        }
                    }
                    "PRON" if in_list(POSSESSIVES, &lower[i]) => "poss",
                    "VERB" => {
                        if i > 0 && lower[i - 1] == "to" {
                            "xcomp"
                        } else {
                            "conj"
                        }
                    }
                    p if nominal(p) => {
                        if matches!(next, "NOUN" | "PROPN") && p != "PRON" {
                            "compound"
                        } else if after_adp {
                            after_adp = false;
                            "pobj"
                        } else if before_head {
                            if passive {
                                "nsubjpass"
                            } else {
                                "nsubj"
                            }
                        } else if head.is_some_and(|h| pos[h] == "AUX") {
                            "attr"
                        } else {
                            "dobj"
                        }
                    }
                    _ => "dep",
                };
            }
        }
        dep
    }
}

impl Tagger for RuleTagger {
    fn tag(&self, text: &str) -> Result<Vec<TaggedToken>, TaggerError> {
        let chars: Vec<char> = text.chars().collect();
        let tokens = tokenize(text);
        let words: Vec<String> = tokens
            .iter()
            .map(|t| chars[t.start..t.end].iter().collect())
            .collect();
        let lower: Vec<String> = tokens.into_iter().map(|t| t.text).collect();
        let pos = Self::pos_tags(&words, &lower);
        let dep = Self::dep_labels(&lower, &pos);
        Ok(words
            .into_iter()
            .zip(pos.into_iter().zip(dep))
            .map(|(surface, (pos, dep))| TaggedToken {
                surface,
                pos: pos.to_string(),
                dep: dep.to_string(),
            })
            .collect())
    }

    fn spec(&self) -> String {
        "rule".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENTENCE: &str = "If the process fails, an error message is shown.";

    #[test]
    fn rule_tagger_on_conditional_requirement() {
        assert_eq!(
            enrich(SENTENCE, TagMode::Pos, &RuleTagger).unwrap(),
            "If_SCONJ the_DET process_NOUN fails_VERB ,_PUNCT an_DET error_NOUN message_NOUN is_AUX shown_VERB ._PUNCT"
        );
        assert_eq!(
            enrich(SENTENCE, TagMode::Dep, &RuleTagger).unwrap(),
            "If_mark the_det process_nsubj fails_advcl ,_punct an_det error_compound message_nsubjpass is_auxpass shown_ROOT ._punct"
        );
    }

    #[test]
    fn rule_tagger_shapes() {
        let tags = RuleTagger
            .tag("The system shall restart the service when the user logs in.")
            .unwrap();
        let roots = tags.iter().filter(|t| t.dep == "ROOT").count();
        assert_eq!(roots, 1);
        let restart = tags.iter().find(|t| t.surface == "restart").unwrap();
        assert_eq!(
            (restart.pos.as_str(), restart.dep.as_str()),
            ("VERB", "ROOT")
        );
        assert!(tags.iter().all(|t| t.validate().is_ok()));
        assert!(RuleTagger.tag("").unwrap().is_empty());
    }

    #[test]
    fn empty_text_enriches_to_empty() {
        assert_eq!(enrich("", TagMode::Pos, &RuleTagger).unwrap(), "");
        assert_eq!(enrich("", TagMode::Dep, &FixedTagger::new()).unwrap(), "");
    }

    #[test]
    fn token_validation() {
        assert!(TaggedToken::new("x", "NOUN", "dobj").is_ok());
        assert!(matches!(
            TaggedToken::new("", "NOUN", "dobj"),
            Err(TaggerError::EmptySurface)
        ));
        assert!(matches!(
            TaggedToken::new("x", "NN", "dobj"),
            Err(TaggerError::UnknownTag { .. })
        ));
        assert!(matches!(
            TaggedToken::new("x", "NOUN", "obj"),
            Err(TaggerError::UnknownTag { .. })
        ));
    }

    #[test]
    fn fixed_tagger_reports_unknown_text() {
        let err = FixedTagger::new().tag("unknown").unwrap_err();
        assert!(err.to_string().contains("unknown"));
    }

    #[test]
    fn spec_round_trip() {
        assert_eq!(tagger_from_spec("rule").unwrap().spec(), "rule");
        assert_eq!(
            tagger_from_spec("command:python3 tag.py --fast")
                .unwrap()
                .spec(),
            "command:python3 tag.py --fast"
        );
        assert!(tagger_from_spec("spacy").is_err());
    }

    #[cfg(unix)]
    #[test]
    fn command_tagger_protocol() {
        // echoes every input as a single NOUN token
        let script = r#"while IFS= read -r line; do printf '[{"text":"w","pos":"NOUN","dep":"ROOT"}]\n'; done"#;
        let tagger = CommandTagger::new("sh", vec!["-c".into(), script.into()]);
        let out = tagger.tag_batch(&["a", "b\nc"]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1][0].pos, "NOUN");

        let broken = CommandTagger::new("sh", vec!["-c".into(), "echo oops >&2; exit 3".into()]);
        let err = broken.tag("x").unwrap_err().to_string();
        assert!(err.contains("oops"), "{err}");

        let missing = CommandTagger::new("/nonexistent/tagger", vec![]);
        assert!(matches!(missing.tag("x"), Err(TaggerError::Failed { .. })));
    }
}
