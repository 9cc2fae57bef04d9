//! Greedy semantics-preserving name assignment.
//!
//! Every minified name contributes its best remaining prediction to a
//! max-probability priority queue. Popping commits the prediction if it
//! causes no conflict; otherwise the name's next-ranked prediction is pushed
//! back. A name whose ranking runs out falls back to a fresh synthetic
//! `v<k>`. Conflicts are checked conservatively: a candidate is rejected if
//! it is a keyword, if any binding on the ancestor chain or in the subtree of
//! the declaring scope already carries it, or if a global of that name is
//! referenced anywhere in the subtree.

use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::Embedding;
use crate::bundle::ModelBundle;
use crate::context::extract_all;
use crate::error::{Error, Result};
use crate::js::{self, is_keyword, Analysis, BindingId};
use crate::predictor::{rank, RankedPredictions};

/// Names that are never assigned even though they lex as identifiers.
const UNASSIGNABLE: &[&str] = &["undefined", "NaN", "Infinity"];

pub fn assignable_name(name: &str) -> bool {
    !is_keyword(name) && !UNASSIGNABLE.contains(&name)
}

/// Per-binding prediction map mirroring the rename-map layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMap {
    pub version: u32,
    pub entries: Vec<PredictionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub scope: String,
    pub min: String,
    pub pred: String,
    pub prob: f64,
    /// 1-based rank of the committed prediction; 0 marks the synthetic
    /// fallback.
    pub rank: usize,
}

impl PredictionMap {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("prediction map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid prediction map: {e}")))
    }
}

/// Wall-clock milliseconds per recovery phase.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub extract_ms: f64,
    pub embed_ms: f64,
    pub predict_ms: f64,
    pub assign_ms: f64,
}

impl PhaseTimings {
    pub fn total_ms(&self) -> f64 {
        self.extract_ms + self.embed_ms + self.predict_ms + self.assign_ms
    }
}

#[derive(Debug)]
pub struct RecoveryOutput {
    pub source: String,
    pub map: PredictionMap,
    pub timings: PhaseTimings,
}

/// One committed assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub binding: BindingId,
    pub name: String,
    pub prob: f64,
    /// 1-based rank in the name's ranking; 0 for the fallback.
    pub rank: usize,
}

/// Queue element: highest probability pops first; ties pop the smaller
/// (scope-path, minified-name) pair first.
#[derive(Debug, Clone)]
struct Pending {
    prob: f64,
    binding: BindingId,
    candidate: String,
    /// Index into the ranking just past `candidate`.
    cursor: usize,
    /// 1-based rank of `candidate` in the full ranking.
    rank: usize,
    tie: (String, String),
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.prob
            .total_cmp(&other.prob)
            .then_with(|| other.tie.cmp(&self.tie))
    }
}

/// Walks a ranking from `cursor`, skipping `<UNK>` and other unassignable
/// entries. Returns the candidate, its probability, its 1-based rank, and
/// the cursor to resume from.
pub fn next_prediction(
    ranked: &RankedPredictions,
    cursor: usize,
) -> Result<(String, f64, usize, usize)> {
    let entries = ranked.entries();
    let mut at = cursor;
    while at < entries.len() {
        let e = &entries[at];
        at += 1;
        if e.unk || !assignable_name(&e.name) {
            continue;
        }
        return Ok((e.name.clone(), e.prob, at, at));
    }
    Err(Error::Exhausted)
}

/// Tracks committed assignments during the greedy loop.
pub struct AssignmentState<'a> {
    analysis: &'a Analysis,
    assigned: HashMap<BindingId, String>,
    by_name: HashMap<String, Vec<BindingId>>,
}

impl<'a> AssignmentState<'a> {
    pub fn new(analysis: &'a Analysis) -> Self {
        AssignmentState { analysis, assigned: HashMap::new(), by_name: HashMap::new() }
    }

    pub fn assigned(&self) -> &HashMap<BindingId, String> {
        &self.assigned
    }

    fn commit(&mut self, binding: BindingId, name: String) {
        self.by_name.entry(name.clone()).or_default().push(binding);
        self.assigned.insert(binding, name);
    }

    /// Whether `candidate` can be assigned to `binding` without breaking the
    /// binding structure.
    pub fn no_conflicts(&self, binding: BindingId, candidate: &str) -> bool {
        if !assignable_name(candidate) {
            return false;
        }
        let tree = &self.analysis.scopes;
        let scope = tree.binding(binding).scope;
        if let Some(holders) = self.by_name.get(candidate) {
            for &other in holders {
                if other == binding {
                    continue;
                }
                let other_scope = tree.binding(other).scope;
                // Ancestor-or-self and descendant scopes both end up visible
                // in a common scope; only disjoint branches may share a name.
                if tree.is_ancestor_or_self(other_scope, scope)
                    || tree.is_ancestor_or_self(scope, other_scope)
                {
                    return false;
                }
            }
        }
        // A global referenced anywhere under the declaring scope would be
        // captured by the new name.
        !tree
            .global_refs()
            .iter()
            .any(|g| g.name == candidate && tree.is_ancestor_or_self(scope, g.scope))
    }

    /// Smallest `v<k>` that passes the conflict check.
    fn fallback_name(&self, binding: BindingId) -> String {
        let mut k = 0usize;
        loop {
            let name = format!("v{k}");
            if self.no_conflicts(binding, &name) {
                return name;
            }
            k += 1;
        }
    }
}

/// Runs the greedy assignment over per-binding rankings. Returns one
/// assignment per binding, ordered by binding id.
pub fn assign_names(
    analysis: &Analysis,
    rankings: &HashMap<BindingId, RankedPredictions>,
) -> Vec<Assignment> {
    let mut state = AssignmentState::new(analysis);
    let mut results: HashMap<BindingId, Assignment> = HashMap::new();
    let mut queue: BinaryHeap<Pending> = BinaryHeap::new();

    let mut bindings: Vec<BindingId> =
        analysis.names.iter().map(|n| n.binding).collect();
    bindings.sort_unstable();

    let tie_key = |binding: BindingId| {
        let b = analysis.scopes.binding(binding);
        (analysis.scopes.path(b.scope).to_string(), b.name.clone())
    };

    let empty = RankedPredictions::from_entries(Vec::new());
    for &binding in &bindings {
        let ranking = rankings.get(&binding).unwrap_or(&empty);
        match next_prediction(ranking, 0) {
            Ok((candidate, prob, cursor, rank)) => queue.push(Pending {
                prob,
                binding,
                candidate,
                cursor,
                rank,
                tie: tie_key(binding),
            }),
            Err(_) => {
                let name = state.fallback_name(binding);
                state.commit(binding, name.clone());
                results.insert(binding, Assignment { binding, name, prob: 0.0, rank: 0 });
            }
        }
    }

    while let Some(p) = queue.pop() {
        if state.no_conflicts(p.binding, &p.candidate) {
            state.commit(p.binding, p.candidate.clone());
            results.insert(
                p.binding,
                Assignment { binding: p.binding, name: p.candidate, prob: p.prob, rank: p.rank },
            );
            continue;
        }
        let ranking = rankings.get(&p.binding).unwrap_or(&empty);
        match next_prediction(ranking, p.cursor) {
            Ok((candidate, prob, cursor, rank)) => {
                queue.push(Pending { prob, binding: p.binding, candidate, cursor, rank, tie: p.tie });
            }
            Err(_) => {
                let name = state.fallback_name(p.binding);
                state.commit(p.binding, name.clone());
                results
                    .insert(p.binding, Assignment { binding: p.binding, name, prob: 0.0, rank: 0 });
            }
        }
    }

    bindings.into_iter().map(|b| results.remove(&b).expect("all bindings assigned")).collect()
}

/// Applies assignments to the source and emits the prediction map.
pub fn apply_assignments(
    source: &str,
    analysis: &Analysis,
    assignments: &[Assignment],
) -> (String, PredictionMap) {
    let renames: Vec<(BindingId, String)> =
        assignments.iter().map(|a| (a.binding, a.name.clone())).collect();
    let recovered = js::splice_renames(source, analysis, &renames);
    let mut entries: Vec<PredictionEntry> = assignments
        .iter()
        .map(|a| {
            let b = analysis.scopes.binding(a.binding);
            PredictionEntry {
                scope: analysis.scopes.path(b.scope).to_string(),
                min: b.name.clone(),
                pred: a.name.clone(),
                prob: a.prob,
                rank: a.rank,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.scope.cmp(&b.scope).then_with(|| a.min.cmp(&b.min)));
    (recovered, PredictionMap { version: 1, entries })
}

/// Full recovery with injected rankings, for tests and for the real path.
pub fn recover_with_predictions(
    source: &str,
    rankings: &HashMap<BindingId, RankedPredictions>,
) -> Result<(String, PredictionMap)> {
    let analysis = js::analyze(source)?;
    let assignments = assign_names(&analysis, rankings);
    Ok(apply_assignments(source, &analysis, &assignments))
}

/// End-to-end recovery of one minified source file with a trained bundle.
pub fn recover_names(source: &str, bundle: &ModelBundle) -> Result<RecoveryOutput> {
    bundle.validate()?;
    let q = bundle.hyper.q;
    let l = bundle.hyper.l;

    let t0 = Instant::now();
    let analysis = js::analyze(source)?;
    let stream = js::filter_tokens(&analysis.tokens);
    let summaries = extract_all(&stream, &analysis.names, q, l)?;
    let extract_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let embedded: Vec<(BindingId, Vec<Embedding>)> = summaries
        .iter()
        .map(|s| {
            bundle
                .autoencoder
                .embed_summary(s, &bundle.input_vocab)
                .map(|e| (s.owner.binding, e))
        })
        .collect::<Result<_>>()?;
    let embed_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = Instant::now();
    let mut rankings = HashMap::new();
    for (binding, embs) in &embedded {
        let dist = bundle.predictor.predict_distribution(embs)?;
        rankings.insert(*binding, rank(&dist, &bundle.output_vocab)?);
    }
    let predict_ms = t2.elapsed().as_secs_f64() * 1e3;

    let t3 = Instant::now();
    let assignments = assign_names(&analysis, &rankings);
    let (recovered, map) = apply_assignments(source, &analysis, &assignments);
    let assign_ms = t3.elapsed().as_secs_f64() * 1e3;

    Ok(RecoveryOutput {
        source: recovered,
        map,
        timings: PhaseTimings { extract_ms, embed_ms, predict_ms, assign_ms },
    })
}
