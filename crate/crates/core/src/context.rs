//! Usage-context extraction.
//!
//! Works on the filtered token stream. Every local-name occurrence projects
//! to `ID`, out-of-range positions project to `PAD`, and everything else
//! keeps its literal text. A context is the `q` projected tokens on each side
//! of one occurrence; a usage summary is the first `l` contexts of a name,
//! padded with all-`PAD` contexts.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::js::{Analysis, BindingId, ScopedName, Token};

/// Spelling used for the local-name placeholder in dumps and vocab files.
pub const ID_TOKEN: &str = "<ID>";
/// Spelling used for the padding token in dumps and vocab files.
pub const PAD_TOKEN: &str = "<PAD>";

/// A projected token: literal text, the local-name placeholder, or padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbstractToken {
    Text(String),
    Id,
    Pad,
}

impl AbstractToken {
    pub fn as_str(&self) -> &str {
        match self {
            AbstractToken::Text(s) => s,
            AbstractToken::Id => ID_TOKEN,
            AbstractToken::Pad => PAD_TOKEN,
        }
    }
}

/// The `2·q` projected tokens around one occurrence, the occurrence itself
/// excluded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    pub tokens: Vec<AbstractToken>,
}

impl Context {
    /// An all-`PAD` context of width `2·q`.
    pub fn padding(q: usize) -> Self {
        Context { tokens: vec![AbstractToken::Pad; 2 * q] }
    }

    pub fn is_all_pad(&self) -> bool {
        self.tokens.iter().all(|t| matches!(t, AbstractToken::Pad))
    }
}

/// Exactly `l` contexts for one name: the first `l` occurrences in stream
/// order, padded out with all-`PAD` contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageSummary {
    pub owner: ScopedName,
    pub contexts: Vec<Context>,
}

fn binding_set(names: &[ScopedName]) -> HashSet<BindingId> {
    names.iter().map(|n| n.binding).collect()
}

/// Projects stream position `k`: `PAD` out of range, `ID` for an occurrence
/// of any name in `names`, otherwise the literal token text. Total over all
/// integers.
pub fn project(stream: &[Token], names: &HashSet<BindingId>, k: isize) -> AbstractToken {
    if k < 0 || k as usize >= stream.len() {
        return AbstractToken::Pad;
    }
    let tok = &stream[k as usize];
    match tok.binding {
        Some(b) if names.contains(&b) => AbstractToken::Id,
        _ => AbstractToken::Text(tok.text.clone()),
    }
}

/// The context of the occurrence at stream index `k`: positions `k−q .. k−1`
/// then `k+1 .. k+q`, each projected.
pub fn context_at(
    stream: &[Token],
    names: &HashSet<BindingId>,
    k: usize,
    q: usize,
) -> Result<Context> {
    let is_occurrence =
        stream.get(k).and_then(|t| t.binding).map(|b| names.contains(&b)).unwrap_or(false);
    if !is_occurrence {
        return Err(Error::Occurrence { index: k });
    }
    let mut tokens = Vec::with_capacity(2 * q);
    for off in (1..=q).rev() {
        tokens.push(project(stream, names, k as isize - off as isize));
    }
    for off in 1..=q {
        tokens.push(project(stream, names, k as isize + off as isize));
    }
    Ok(Context { tokens })
}

/// The usage summary of `n`: contexts of its first `min(occurrences, l)`
/// occurrences in stream order, then all-`PAD` contexts up to length `l`.
pub fn usage_summary(
    stream: &[Token],
    names: &[ScopedName],
    n: &ScopedName,
    q: usize,
    l: usize,
) -> Result<UsageSummary> {
    let set = binding_set(names);
    summary_with_set(stream, &set, n, q, l)
}

fn summary_with_set(
    stream: &[Token],
    set: &HashSet<BindingId>,
    n: &ScopedName,
    q: usize,
    l: usize,
) -> Result<UsageSummary> {
    let occurrences: Vec<usize> = stream
        .iter()
        .enumerate()
        .filter(|(_, t)| t.binding == Some(n.binding))
        .map(|(k, _)| k)
        .collect();
    if occurrences.is_empty() {
        return Err(Error::UnknownName { name: n.name.clone() });
    }
    let mut contexts = Vec::with_capacity(l);
    for &k in occurrences.iter().take(l) {
        contexts.push(context_at(stream, set, k, q)?);
    }
    while contexts.len() < l {
        contexts.push(Context::padding(q));
    }
    Ok(UsageSummary { owner: n.clone(), contexts })
}

/// Summaries for every name, ordered by first occurrence in the stream.
pub fn extract_all(
    stream: &[Token],
    names: &[ScopedName],
    q: usize,
    l: usize,
) -> Result<Vec<UsageSummary>> {
    let set = binding_set(names);
    let mut with_first: Vec<(usize, &ScopedName)> = Vec::with_capacity(names.len());
    for n in names {
        let first = stream
            .iter()
            .position(|t| t.binding == Some(n.binding))
            .ok_or_else(|| Error::UnknownName { name: n.name.clone() })?;
        with_first.push((first, n));
    }
    with_first.sort_by_key(|&(first, _)| first);
    with_first
        .into_iter()
        .map(|(_, n)| summary_with_set(stream, &set, n, q, l))
        .collect()
}

/// One-line debug form: `<scope-path>:<name>` then every token of the
/// summary, tab-separated.
pub fn dump_line(summary: &UsageSummary, analysis: &Analysis) -> String {
    let mut line = format!(
        "{}:{}",
        analysis.scopes.path(summary.owner.scope),
        summary.owner.name
    );
    for ctx in &summary.contexts {
        for tok in &ctx.tokens {
            line.push('\t');
            line.push_str(tok.as_str());
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::js::{analyze, filter_tokens, mangle};

    fn prepared(source: &str) -> (Vec<Token>, Vec<ScopedName>) {
        let analysis = analyze(source).unwrap();
        (filter_tokens(&analysis.tokens), analysis.names)
    }

    fn text(t: &AbstractToken) -> &str {
        t.as_str()
    }

    fn ctx_texts(c: &Context) -> Vec<&str> {
        c.tokens.iter().map(text).collect()
    }

    #[test]
    fn project_covers_all_three_cases() {
        let (stream, names) = prepared("var x = 1");
        let set: HashSet<BindingId> = names.iter().map(|n| n.binding).collect();
        assert_eq!(project(&stream, &set, 1), AbstractToken::Id);
        assert_eq!(project(&stream, &set, -1), AbstractToken::Pad);
        assert_eq!(project(&stream, &set, 0), AbstractToken::Text("var".into()));
        assert_eq!(project(&stream, &set, 99), AbstractToken::Pad);
    }

    #[test]
    fn context_mixes_pad_locals_and_globals() {
        // Filtered stream: [var, x, =, y, ;] with x local, y global.
        let (stream, names) = prepared("var x = y;");
        let set: HashSet<BindingId> = names.iter().map(|n| n.binding).collect();
        let ctx = context_at(&stream, &set, 1, 2).unwrap();
        assert_eq!(ctx_texts(&ctx), ["<PAD>", "var", "=", "y"]);
    }

    #[test]
    fn context_at_start_pads_left() {
        let (stream, names) = prepared("var x;\nx = 1;");
        let set: HashSet<BindingId> = names.iter().map(|n| n.binding).collect();
        // Occurrence of x at index 3 (stream: var x ; x = 1 ;).
        let ctx = context_at(&stream, &set, 3, 1).unwrap();
        assert_eq!(ctx_texts(&ctx), [";", "="]);
        let first = context_at(&stream, &set, 1, 1).unwrap();
        assert_eq!(ctx_texts(&first), ["var", ";"]);
    }

    #[test]
    fn neighboring_locals_project_to_id() {
        let (stream, names) = prepared("function f(a, b) { return a + b; }");
        let set: HashSet<BindingId> = names.iter().map(|n| n.binding).collect();
        // Filtered: function f a , b { return a + b ; }
        let k = stream.iter().position(|t| t.text == "+").unwrap();
        let ctx = context_at(&stream, &set, k - 1, 1).unwrap();
        assert_eq!(ctx_texts(&ctx), ["return", "+"]);
        let ctx = context_at(&stream, &set, k + 1, 1).unwrap();
        assert_eq!(ctx_texts(&ctx), ["+", ";"]);
        // With a wider window, the other parameter shows up as ID.
        let wide = context_at(&stream, &set, k - 1, 2).unwrap();
        assert_eq!(ctx_texts(&wide), ["{", "return", "+", "<ID>"]);
        // a and b sit next to each other in the parameter list.
        let a_decl = context_at(&stream, &set, 2, 1).unwrap();
        assert_eq!(ctx_texts(&a_decl), ["f", ","]);
        let b_decl = context_at(&stream, &set, 4, 2).unwrap();
        assert_eq!(ctx_texts(&b_decl), ["<ID>", ",", "{", "return"]);
    }

    #[test]
    fn non_occurrence_index_is_an_error() {
        let (stream, names) = prepared("var x = 1;");
        let set: HashSet<BindingId> = names.iter().map(|n| n.binding).collect();
        assert!(matches!(context_at(&stream, &set, 0, 1), Err(Error::Occurrence { index: 0 })));
    }

    #[test]
    fn summary_pads_missing_occurrences() {
        let (stream, names) = prepared("var lonely = 1;");
        let s = usage_summary(&stream, &names, &names[0], 1, 2).unwrap();
        assert_eq!(s.contexts.len(), 2);
        assert!(!s.contexts[0].is_all_pad());
        assert!(s.contexts[1].is_all_pad());
    }

    #[test]
    fn summary_truncates_to_first_l_occurrences() {
        let src = "var n = 0; n = n + n; n = n + n; n = n + n;";
        let (stream, names) = prepared(src);
        let s = usage_summary(&stream, &names, &names[0], 1, 5).unwrap();
        assert_eq!(s.contexts.len(), 5);
        assert!(s.contexts.iter().all(|c| !c.is_all_pad()));
        // First five of the ten occurrences, in stream order: the declaration
        // context comes first.
        assert_eq!(ctx_texts(&s.contexts[0]), ["var", "="]);
    }

    #[test]
    fn counter_increment_summary_matches_hand_derivation() {
        // Filtered stream: var i ; i = i + 1 ;  (indices 0..=8)
        // i occurs at 1, 3, 5; q=2, l=3.
        let (stream, names) = prepared("var i; i = i + 1;");
        let s = usage_summary(&stream, &names, &names[0], 2, 3).unwrap();
        assert_eq!(ctx_texts(&s.contexts[0]), ["<PAD>", "var", ";", "<ID>"]);
        assert_eq!(ctx_texts(&s.contexts[1]), ["<ID>", ";", "=", "<ID>"]);
        assert_eq!(ctx_texts(&s.contexts[2]), ["<ID>", "=", "+", "1"]);
    }

    #[test]
    fn extract_all_orders_by_first_occurrence() {
        let src = "function f(second, first) { return first + second; }";
        // Declaration order is (second, first); stream order too, since the
        // parameter list is the first occurrence of each.
        let (stream, names) = prepared(src);
        let all = extract_all(&stream, &names, 1, 2).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].owner.name, "second");
        assert_eq!(all[1].owner.name, "first");
    }

    #[test]
    fn extract_all_of_empty_set_is_empty() {
        let (stream, names) = prepared("g(1);");
        assert!(names.is_empty());
        assert!(extract_all(&stream, &names, 2, 2).unwrap().is_empty());
    }

    #[test]
    fn shapes_always_match_parameters() {
        let (stream, names) = prepared("function f(a){var b = a; return b + a;}");
        for q in 1..4 {
            for l in 1..4 {
                for s in extract_all(&stream, &names, q, l).unwrap() {
                    assert_eq!(s.contexts.len(), l);
                    assert!(s.contexts.iter().all(|c| c.tokens.len() == 2 * q));
                }
            }
        }
    }

    #[test]
    fn target_occurrence_is_excluded_from_its_own_window() {
        // The occurrence itself never appears in its context slots; its other
        // occurrences show up as ID.
        let (stream, names) = prepared("var v; v = v;");
        let s = usage_summary(&stream, &names, &names[0], 1, 3).unwrap();
        // Stream: var v ; v = v ;  -> contexts around 1, 3, 5.
        assert_eq!(ctx_texts(&s.contexts[0]), ["var", ";"]);
        assert_eq!(ctx_texts(&s.contexts[1]), [";", "="]);
        assert_eq!(ctx_texts(&s.contexts[2]), ["=", ";"]);
        // Widening the window pulls the *other* occurrences in as ID while
        // the target slot itself stays excluded.
        let wide = usage_summary(&stream, &names, &names[0], 2, 3).unwrap();
        assert_eq!(ctx_texts(&wide.contexts[1]), ["<ID>", ";", "=", "<ID>"]);
    }

    #[test]
    fn summaries_are_invariant_under_mangling() {
        let src = "function f(amount){var total = amount + g; return total * amount;}";
        let out = mangle(src, 0).unwrap();
        let orig = analyze(src).unwrap();
        let min = analyze(&out.minified).unwrap();
        let orig_sums =
            extract_all(&filter_tokens(&orig.tokens), &orig.names, 2, 3).unwrap();
        let min_sums = extract_all(&filter_tokens(&min.tokens), &min.names, 2, 3).unwrap();
        assert_eq!(orig_sums.len(), min_sums.len());
        for (a, b) in orig_sums.iter().zip(&min_sums) {
            assert_eq!(a.owner.binding, b.owner.binding);
            assert_eq!(a.contexts, b.contexts);
        }
    }

    #[test]
    fn dump_line_spells_specials() {
        let analysis = analyze("function f(a){return a;}").unwrap();
        let stream = filter_tokens(&analysis.tokens);
        let s = usage_summary(&stream, &analysis.names, &analysis.names[0], 1, 3).unwrap();
        let line = dump_line(&s, &analysis);
        // Two occurrence contexts then a padding context.
        assert_eq!(line, "0/0:a\tf\t{\treturn\t;\t<PAD>\t<PAD>");
    }
}
