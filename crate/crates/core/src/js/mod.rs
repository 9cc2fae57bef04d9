//! Token-level analysis of the supported JavaScript subset: lexing, scope
//! resolution, the local-name set, and a deterministic mangler for producing
//! training data.

pub mod ast;
pub mod lexer;
pub mod mangle;
pub mod parser;
pub mod scope;

pub use lexer::{is_keyword, tokenize, BindingId, Token, TokenKind, KEYWORDS};
pub use mangle::{mangle, short_name, MangleOutput, RenameEntry, RenameMap};
pub use scope::{
    analyze, resolve_local_names, Analysis, Binding, GlobalRef, Scope, ScopeId, ScopeKind,
    ScopeTree, ScopedName,
};

/// Drops every `.` punctuator and every `(` / `)` punctuator from the stream.
/// Order, spans, and binding annotations of the remaining tokens are kept.
/// Idempotent.
pub fn filter_tokens(stream: &[Token]) -> Vec<Token> {
    stream
        .iter()
        .filter(|t| {
            !(t.kind == TokenKind::Punctuator && matches!(t.text.as_str(), "." | "(" | ")"))
        })
        .cloned()
        .collect()
}

/// Rewrites `source` by substituting each binding's occurrences with its new
/// name, splicing at the original identifier spans so everything else is
/// preserved byte for byte.
pub fn splice_renames(
    source: &str,
    analysis: &Analysis,
    renames: &[(BindingId, String)],
) -> String {
    let mut edits: Vec<(usize, usize, &str)> = Vec::new();
    for (binding, new_name) in renames {
        let b = analysis.scopes.binding(*binding);
        if b.name == *new_name {
            continue;
        }
        for &tok in &b.occurrences {
            let (start, end) = analysis.tokens[tok].span;
            edits.push((start, end, new_name));
        }
    }
    edits.sort_by_key(|&(start, _, _)| start);
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for (start, end, text) in edits {
        out.push_str(&source[cursor..start]);
        out.push_str(text);
        cursor = end;
    }
    out.push_str(&source[cursor..]);
    out
}

/// Structural alpha-equivalence of two analyses: identical token kinds,
/// identical scope-tree shape, every token bound to the same binding id on
/// both sides, and identical global reference names. Renaming locals
/// preserves all of these; anything else does not.
pub fn alpha_equivalent(a: &Analysis, b: &Analysis) -> bool {
    if a.tokens.len() != b.tokens.len() {
        return false;
    }
    for (ta, tb) in a.tokens.iter().zip(&b.tokens) {
        if ta.kind != tb.kind || ta.binding != tb.binding {
            return false;
        }
        // Only local-name occurrences may differ in text.
        if ta.binding.is_none() && ta.text != tb.text {
            return false;
        }
    }
    let (sa, sb) = (a.scopes.scopes(), b.scopes.scopes());
    if sa.len() != sb.len() {
        return false;
    }
    for (xa, xb) in sa.iter().zip(sb) {
        if xa.parent != xb.parent || xa.kind != xb.kind || xa.decl_order != xb.decl_order {
            return false;
        }
    }
    let (ba, bb) = (a.scopes.bindings(), b.scopes.bindings());
    if ba.len() != bb.len() {
        return false;
    }
    for (xa, xb) in ba.iter().zip(bb) {
        if xa.scope != xb.scope || xa.occurrences != xb.occurrences {
            return false;
        }
    }
    let (ga, gb) = (a.scopes.global_refs(), b.scopes.global_refs());
    ga.len() == gb.len()
        && ga
            .iter()
            .zip(gb)
            .all(|(xa, xb)| xa.name == xb.name && xa.token == xb.token && xa.scope == xb.scope)
}
