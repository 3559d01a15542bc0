use serde::Serialize;

use super::Lexicon;

/// A word or punctuation token with its character span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    /// Start offset in characters (not bytes).
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace and punctuation. Letters and digits form words;
/// a hyphen or apostrophe between two word characters stays inside the word
/// so hyphenated words are single tokens. Every other non-space character is
/// a token of its own.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            i += 1;
            while i < chars.len() {
                let joiner = matches!(chars[i], '-' | '\'' | '’')
                    && i + 1 < chars.len()
                    && chars[i + 1].is_alphanumeric();
                if chars[i].is_alphanumeric() {
                    i += 1;
                } else if joiner {
                    i += 2;
                } else {
                    break;
                }
            }
        } else {
            i += 1;
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect::<String>().to_lowercase(),
            start,
            end: i,
        });
    }
    tokens
}

/// A lexicon hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CueMatch {
    /// Index of the entry in the lexicon.
    #[serde(skip)]
    pub entry: usize,
    /// The entry's phrase in lexicon notation.
    pub phrase: String,
    /// Character span of the match.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    entry: usize,
    first: usize,
    len: usize,
}

impl Lexicon {
    fn candidates(&self, tokens: &[Token]) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            let Some(forms) = self.by_first.get(tok.text.as_str()) else {
                continue;
            };
            for &(entry, form) in forms {
                let form = &self.forms[entry][form];
                let end = i + form.len();
                if end <= tokens.len()
                    && tokens[i..end]
                        .iter()
                        .zip(form.iter())
                        .all(|(t, f)| &t.text == f)
                {
                    out.push(Candidate {
                        entry,
                        first: i,
                        len: form.len(),
                    });
                }
            }
        }
        out
    }

    /// Case-insensitive, word-boundary matching of every lexicon phrase.
    /// Overlapping hits are resolved longest first (earlier start, then
    /// lexicon order, break ties); the result is ordered by position.
    pub fn match_phrases(&self, text: &str) -> Vec<CueMatch> {
        let tokens = tokenize(text);
        let mut candidates = self.candidates(&tokens);
        candidates.sort_by(|a, b| {
            b.len
                .cmp(&a.len)
                .then(a.first.cmp(&b.first))
                .then(a.entry.cmp(&b.entry))
        });
        let mut taken = vec![false; tokens.len()];
        let mut accepted = Vec::new();
        for c in candidates {
            let range = c.first..c.first + c.len;
            if taken[range.clone()].iter().any(|t| *t) {
                continue;
            }
            taken[range].iter_mut().for_each(|t| *t = true);
            accepted.push(c);
        }
        accepted.sort_by_key(|c| c.first);
        accepted
            .into_iter()
            .map(|c| CueMatch {
                entry: c.entry,
                phrase: self.entries[c.entry].phrase.clone(),
                start: tokens[c.first].start,
                end: tokens[c.first + c.len - 1].end,
            })
            .collect()
    }

    /// For every entry, whether any of its surface forms occurs in `text`,
    /// regardless of overlaps with other entries.
    pub fn entries_present(&self, text: &str) -> Vec<bool> {
        let tokens = tokenize(text);
        let mut present = vec![false; self.entries.len()];
        for c in self.candidates(&tokens) {
            present[c.entry] = true;
        }
        present
    }
}
