use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const BASE_MAX_LEN: usize = 128;
pub const ENRICHED_MAX_LEN: usize = 384;

const PAD: &str = "[PAD]";
const UNK: &str = "[UNK]";
const CLS: &str = "[CLS]";
const SEP: &str = "[SEP]";
const MASK: &str = "[MASK]";
const MAX_WORD_CHARS: usize = 100;

/// Fixed-length encoder input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub token_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    /// Whether subword tokens were cut to fit.
    pub truncated: bool,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Positions carrying real tokens (CLS, subwords, SEP).
    pub fn active_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Greedy longest-match-first subword tokenizer with a BERT-style
/// `vocab.txt` (one token per line, id = line number).
#[derive(Debug, Clone, PartialEq)]
pub struct WordPieceTokenizer {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    lowercase: bool,
    pad: u32,
    unk: u32,
    cls: u32,
    sep: u32,
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

impl WordPieceTokenizer {
    pub fn from_tokens(vocab: Vec<String>, lowercase: bool) -> Result<Self, FeatureError> {
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let special = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| FeatureError::VocabFile {
                    path: "<memory>".into(),
                    message: format!("missing special token {name}"),
                })
        };
        Ok(Self {
            pad: special(PAD)?,
            unk: special(UNK)?,
            cls: special(CLS)?,
            sep: special(SEP)?,
            vocab,
            index,
            lowercase,
        })
    }

    pub fn from_vocab_file(path: &Path, lowercase: bool) -> Result<Self, FeatureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let tokens = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_string())
            .collect();
        Self::from_tokens(tokens, lowercase).map_err(|e| match e {
            FeatureError::VocabFile { message, .. } => FeatureError::VocabFile {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn save_vocab(&self, path: &Path) -> Result<(), FeatureError> {
        let mut text = self.vocab.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Builds a lowercasing vocabulary from `texts`: special tokens, every
    /// character seen (as word start and as `##` continuation), then whole
    /// words by descending frequency until `vocab_size` is reached.
    pub fn train<S: AsRef<str>>(texts: &[S], vocab_size: usize) -> Self {
        let mut words: BTreeMap<String, u64> = BTreeMap::new();
        let mut chars: BTreeMap<char, ()> = BTreeMap::new();
        for t in texts {
            for w in basic_tokenize(t.as_ref(), true) {
                chars.extend(w.chars().map(|c| (c, ())));
                *words.entry(w).or_default() += 1;
            }
        }
        let mut vocab: Vec<String> = [PAD, UNK, CLS, SEP, MASK]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for &c in chars.keys() {
            vocab.push(c.to_string());
        }
        for &c in chars.keys() {
            if c.is_alphanumeric() {
                vocab.push(format!("##{c}"));
            }
        }
        let mut by_freq: Vec<(String, u64)> = words
            .into_iter()
            .filter(|(w, _)| w.chars().count() > 1)
            .collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (w, _) in by_freq {
            if vocab.len() >= vocab_size {
                break;
            }
            vocab.push(w);
        }
        Self::from_tokens(vocab, true).expect("special tokens present")
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn pad_id(&self) -> u32 {
        self.pad
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn id_to_token(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    fn wordpiece(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.unk);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece.insert_str(0, "##");
                }
                if let Some(&id) = self.index.get(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk);
                    return;
                }
            }
        }
        out.extend(pieces);
    }

    /// Subword ids without special tokens.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for w in basic_tokenize(text, self.lowercase) {
            self.wordpiece(&w, &mut out);
        }
        out
    }

    /// CLS + subwords + SEP, truncated or padded to `max_len`.
    pub fn encode(&self, text: &str, max_len: usize) -> EncodedSequence {
        assert!(max_len >= 2, "max_len must leave room for CLS and SEP");
        let mut pieces = self.tokenize(text);
        let truncated = pieces.len() > max_len - 2;
        pieces.truncate(max_len - 2);
        let mut token_ids = Vec::with_capacity(max_len);
        token_ids.push(self.cls);
        token_ids.extend(pieces);
        token_ids.push(self.sep);
        let active = token_ids.len();
        token_ids.resize(max_len, self.pad);
        let mut attention_mask = vec![1u8; active];
        attention_mask.resize(max_len, 0);
        EncodedSequence {
            token_ids,
            attention_mask,
            truncated,
        }
    }

    /// Sequence length including CLS and SEP, before truncation.
    pub fn encoded_len(&self, text: &str) -> usize {
        self.tokenize(text).len() + 2
    }
}

/// Whitespace split followed by splitting off every punctuation character.
fn basic_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = if lowercase {
            chunk.to_lowercase()
        } else {
            chunk.to_string()
        };
        let mut current = String::new();
        for c in chunk.chars().filter(|c| !c.is_control()) {
            if is_punctuation(c) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Encodes at one of the two supported lengths.
pub fn encode_for_transformer(
    text: &str,
    max_len: usize,
    tokenizer: &WordPieceTokenizer,
) -> Result<EncodedSequence, FeatureError> {
    if max_len != BASE_MAX_LEN && max_len != ENRICHED_MAX_LEN {
        return Err(FeatureError::MaxLen(max_len));
    }
    Ok(tokenizer.encode(text, max_len))
}

/// Share of `texts` whose encoded length (with CLS and SEP) is at most `max_len`.
pub fn token_length_coverage<S: AsRef<str>>(
    texts: &[S],
    tokenizer: &WordPieceTokenizer,
    max_len: usize,
) -> Result<f64, FeatureError> {
    if texts.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let fitting = texts
        .iter()
        .filter(|t| tokenizer.encoded_len(t.as_ref()) <= max_len)
        .count();
    Ok(fitting as f64 / texts.len() as f64)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn tok() -> WordPieceTokenizer {
        let vocab = [
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "if", "the", "process", "fail", "##s",
            ",", ".", "_", "s", "##conj",
        ];
        WordPieceTokenizer::from_tokens(vocab.iter().map(|s| s.to_string()).collect(), true)
            .unwrap()
    }

    #[test]
    fn greedy_longest_match() {
        let t = tok();
        let ids = t.tokenize("If the process fails.");
        let pieces: Vec<_> = ids.iter().map(|&i| t.id_to_token(i).unwrap()).collect();
        assert_eq!(pieces, ["if", "the", "process", "fail", "##s", "."]);
        assert_eq!(t.tokenize("zzz"), vec![t.unk_id()]);
        let tagged: Vec<_> = t
            .tokenize("If_SCONJ")
            .iter()
            .map(|&i| t.id_to_token(i).unwrap())
            .collect();
        assert_eq!(tagged, ["if", "_", "s", "##conj"]);
    }

    #[test]
    fn padding_contract() {
        let t = tok();
        let e = t.encode("the process", 8);
        assert_eq!(e.token_ids, vec![2, 6, 7, 3, 0, 0, 0, 0]);
        assert_eq!(e.attention_mask, vec![1, 1, 1, 1, 0, 0, 0, 0]);
        assert!(!e.truncated);
        assert_eq!(e.active_len(), 4);
    }

    #[test]
    fn truncation_contract() {
        let t = tok();
        let long = vec!["the"; 1000].join(" ");
        let e = encode_for_transformer(&long, 128, &t).unwrap();
        assert_eq!(e.len(), 128);
        assert!(e.truncated);
        assert_eq!(e.token_ids[0], t.cls_id());
        assert_eq!(e.token_ids[127], t.sep_id());
        assert!(matches!(
            encode_for_transformer("x", 64, &t),
            Err(FeatureError::MaxLen(64))
        ));
    }

    #[test]
    fn coverage_bounds() {
        let t = tok();
        let texts = ["the", "the the the", "the the the the the the"];
        assert_eq!(token_length_coverage(&texts, &t, 3).unwrap(), 1.0 / 3.0);
        assert_eq!(token_length_coverage(&texts, &t, usize::MAX).unwrap(), 1.0);
        assert!(token_length_coverage::<&str>(&[], &t, 128).is_err());
    }

    #[test]
    fn trained_vocabulary_covers_corpus() {
        let texts = ["The system shall log errors.", "Errors shall be logged!"];
        let t = WordPieceTokenizer::train(&texts, 1000);
        for text in texts {
            assert!(!t.tokenize(text).contains(&t.unk_id()));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        t.save_vocab(&path).unwrap();
        assert_eq!(WordPieceTokenizer::from_vocab_file(&path, true).unwrap(), t);
    }

    #[test]
    fn vocab_without_specials_is_rejected() {
        assert!(WordPieceTokenizer::from_tokens(vec!["a".into()], true).is_err());
    }

    proptest! {
        #[test]
        fn encoding_invariants(text in "[a-z ,.]{0,300}", long in proptest::bool::ANY) {
            let t = tok();
            let max_len = if long { 384 } else { 128 };
            let e = encode_for_transformer(&text, max_len, &t).unwrap();
            prop_assert_eq!(e.len(), max_len);
            prop_assert_eq!(e.token_ids[0], t.cls_id());
            let active = e.active_len();
            prop_assert!(e.attention_mask[..active].iter().all(|&m| m == 1));
            prop_assert!(e.token_ids[active..].iter().all(|&id| id == t.pad_id()));
            prop_assert_eq!(e.token_ids[active - 1], t.sep_id());
            prop_assert_eq!(&e, &encode_for_transformer(&text, max_len, &t).unwrap());
        }
    }
}
