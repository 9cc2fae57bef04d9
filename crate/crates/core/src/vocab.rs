//! Input and output vocabularies with one-hot indexing.
//!
//! Input vocabularies reserve `<ID>`, `<PAD>`, `<UNK>` at the front and fill
//! the rest with the most frequent context tokens; output vocabularies
//! reserve `<UNK>` and fill with the most frequent original names. Ties break
//! lexicographically so builds are reproducible regardless of counting order.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::context::{AbstractToken, Context, ID_TOKEN, PAD_TOKEN};
use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "<UNK>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabKind {
    Input,
    Output,
}

/// Frequency table used to build vocabularies and to measure coverage.
/// Reserved tokens (`ID`, `PAD`, `UNK`) are never counted.
#[derive(Debug, Clone, Default)]
pub struct FreqTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FreqTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        *self.counts.entry(token.to_string()).or_insert(0) += 1;
        self.total += 1;
    }

    /// Counts the literal tokens of a context; `ID` and `PAD` are reserved
    /// vocabulary entries and are not counted.
    pub fn add_context(&mut self, ctx: &Context) {
        for tok in &ctx.tokens {
            if let AbstractToken::Text(s) = tok {
                self.add(s);
            }
        }
    }

    pub fn merge(&mut self, other: &FreqTable) {
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += v;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Entries sorted by descending count, ties lexicographically ascending.
    fn ranked(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> =
            self.counts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A one-hot vector: a single set bit in a vector of the vocabulary's width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    pub length: usize,
    pub hot: usize,
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub kind: VocabKind,
    entries: Vec<String>,
    index: HashMap<String, usize>,
    /// Set when the corpus had fewer distinct tokens than requested, so the
    /// vocabulary is shorter than asked for.
    pub truncated: bool,
}

impl Vocabulary {
    /// Builds an input vocabulary of (at most) `size` entries: the three
    /// specials plus the `size − 3` most frequent tokens.
    pub fn build_input(freqs: &FreqTable, size: usize) -> Self {
        let specials = vec![ID_TOKEN, PAD_TOKEN, UNK_TOKEN];
        Self::build(VocabKind::Input, specials, freqs, size)
    }

    /// Builds an output vocabulary of (at most) `size` entries: `<UNK>` plus
    /// the `size − 1` most frequent names.
    pub fn build_output(freqs: &FreqTable, size: usize) -> Self {
        Self::build(VocabKind::Output, vec![UNK_TOKEN], freqs, size)
    }

    fn build(kind: VocabKind, specials: Vec<&str>, freqs: &FreqTable, size: usize) -> Self {
        let slots = size.saturating_sub(specials.len());
        let ranked = freqs.ranked();
        let truncated = ranked.len() < slots;
        let mut entries: Vec<String> = specials.into_iter().map(str::to_string).collect();
        entries.extend(ranked.into_iter().take(slots).map(|(tok, _)| tok.to_string()));
        let index = entries.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Vocabulary { kind, entries, index, truncated }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &str {
        &self.entries[i]
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id_pos(&self) -> usize {
        0
    }

    pub fn pad_pos(&self) -> usize {
        debug_assert_eq!(self.kind, VocabKind::Input);
        1
    }

    pub fn unk_pos(&self) -> usize {
        match self.kind {
            VocabKind::Input => 2,
            VocabKind::Output => 0,
        }
    }

    fn special_count(&self) -> usize {
        match self.kind {
            VocabKind::Input => 3,
            VocabKind::Output => 1,
        }
    }

    /// One-hot of a token string; unknown tokens map to `<UNK>`.
    pub fn one_hot(&self, token: &str) -> OneHot {
        let hot = self.position(token).unwrap_or_else(|| self.unk_pos());
        OneHot { length: self.len(), hot }
    }

    /// One-hot of an abstract token against an input vocabulary.
    pub fn one_hot_abstract(&self, token: &AbstractToken) -> OneHot {
        debug_assert_eq!(self.kind, VocabKind::Input);
        let hot = match token {
            AbstractToken::Id => self.id_pos(),
            AbstractToken::Pad => self.pad_pos(),
            AbstractToken::Text(s) => self.position(s).unwrap_or_else(|| self.unk_pos()),
        };
        OneHot { length: self.len(), hot }
    }

    /// Elementwise one-hot encoding of a context: `2·q` vectors of width
    /// `|V|`, for a total bit length of `|V|·2·q`.
    pub fn encode_context(&self, ctx: &Context) -> Vec<OneHot> {
        ctx.tokens.iter().map(|t| self.one_hot_abstract(t)).collect()
    }

    /// Unique and occurrence coverage of the corpus by the non-special
    /// entries, as percentages.
    pub fn coverage(&self, corpus: &FreqTable) -> Result<Coverage> {
        if corpus.total() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut covered_unique = 0usize;
        let mut covered_occ = 0u64;
        for (token, count) in corpus.iter() {
            if self.position(token).map(|p| p >= self.special_count()).unwrap_or(false) {
                covered_unique += 1;
                covered_occ += count;
            }
        }
        Ok(Coverage {
            unique_pct: 100.0 * covered_unique as f64 / corpus.distinct() as f64,
            occurrence_pct: 100.0 * covered_occ as f64 / corpus.total() as f64,
        })
    }

    // ── Persistence ──────────────────────────────────────────────────────────

    /// Line-oriented form: a header then one entry per line in index order.
    pub fn serialize(&self) -> String {
        let kind = match self.kind {
            VocabKind::Input => "input",
            VocabKind::Output => "output",
        };
        let mut out = format!("#vocab v1 kind={} size={}\n", kind, self.len());
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Model("empty vocab file".into()))?;
        let rest = header
            .strip_prefix("#vocab v1 kind=")
            .ok_or_else(|| Error::Model(format!("bad vocab header: {header}")))?;
        let (kind_str, size_str) = rest
            .split_once(" size=")
            .ok_or_else(|| Error::Model(format!("bad vocab header: {header}")))?;
        let kind = match kind_str {
            "input" => VocabKind::Input,
            "output" => VocabKind::Output,
            other => return Err(Error::Model(format!("unknown vocab kind: {other}"))),
        };
        let size: usize = size_str
            .parse()
            .map_err(|_| Error::Model(format!("bad vocab size: {size_str}")))?;
        let entries: Vec<String> = lines.map(str::to_string).collect();
        if entries.len() != size {
            return Err(Error::Model(format!(
                "vocab size mismatch: header says {size}, found {}",
                entries.len()
            )));
        }
        let expected_specials: &[&str] = match kind {
            VocabKind::Input => &[ID_TOKEN, PAD_TOKEN, UNK_TOKEN],
            VocabKind::Output => &[UNK_TOKEN],
        };
        for (i, s) in expected_specials.iter().enumerate() {
            if entries.get(i).map(String::as_str) != Some(*s) {
                return Err(Error::Model(format!("vocab missing special {s} at position {i}")));
            }
        }
        let index = entries.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(Vocabulary { kind, entries, index, truncated: false })
    }

    /// SHA-256 of the serialized form, as lowercase hex.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.serialize().as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub unique_pct: f64,
    pub occurrence_pct: f64,
}
