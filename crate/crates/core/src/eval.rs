//! Filtered ranking, MRR / Hits@K and per-relation reports.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::kgdata::{Split, Triple, TripleStore};
use crate::model::{Model, ModelError};

/// Cut-offs reported as Hits@K.
pub const HITS_AT: [usize; 3] = [1, 3, 10];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot evaluate on empty split '{0}'")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Lookup(#[from] ModelError),
}

/// Known true tails per `(head, relation)`, used to drop competitors that
/// are themselves correct answers.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(usize, usize), HashSet<usize>>,
}

impl FilterIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_store(store: &TripleStore, splits: &[Split]) -> Self {
        let mut idx = Self::new();
        for &s in splits {
            idx.extend(store.split(s));
        }
        idx
    }

    pub fn extend(&mut self, triples: &[Triple]) {
        for t in triples {
            self.tails.entry((t.head, t.relation)).or_default().insert(t.tail);
        }
    }

    pub fn is_known(&self, h: usize, r: usize, t: usize) -> bool {
        self.tails.get(&(h, r)).is_some_and(|s| s.contains(&t))
    }
}

/// Rank of `target` given all candidate scores (higher is better). Every
/// candidate `e != target` for which `skip(e)` holds is ignored; ties count
/// against the target.
pub fn rank_from_scores(scores: &[f64], target: usize, skip: impl Fn(usize) -> bool) -> usize {
    let s_t = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(e, &s)| e != target && !skip(e) && !(s < s_t))
        .count()
}

/// Filtered rank of the tail of `triple`.
pub fn filtered_rank(m: &Model, filter: &FilterIndex, triple: Triple) -> Result<usize, ModelError> {
    let emb = m.embed_all();
    filtered_rank_with(m, filter, triple, &emb)
}

/// Rank of the tail of `triple` without any filtering.
pub fn raw_rank(m: &Model, triple: Triple) -> Result<usize, ModelError> {
    let emb = m.embed_all();
    let scores = m.score_all_tails(triple.head, triple.relation, &emb)?;
    check_tail(m, triple.tail)?;
    Ok(rank_from_scores(&scores, triple.tail, |_| false))
}

fn check_tail(m: &Model, t: usize) -> Result<(), ModelError> {
    if t >= m.n_entities {
        return Err(ModelError::EntityOutOfRange(t));
    }
    Ok(())
}

fn filtered_rank_with(m: &Model, filter: &FilterIndex, triple: Triple, emb: &[f64]) -> Result<usize, ModelError> {
    check_tail(m, triple.tail)?;
    let scores = m.score_all_tails(triple.head, triple.relation, emb)?;
    Ok(rank_from_scores(&scores, triple.tail, |e| {
        filter.is_known(triple.head, triple.relation, e)
    }))
}

/// Aggregate metrics over a set of ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub count: usize,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl Metrics {
    /// Reciprocal ranks are summed in sorted order, so the result does not
    /// depend on the order of `ranks`.
    pub fn from_ranks(ranks: &[usize]) -> Self {
        let mut ranks = ranks.to_vec();
        ranks.sort_unstable();
        let n = ranks.len() as f64;
        let frac = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            count: ranks.len(),
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: frac(HITS_AT[0]),
            hits3: frac(HITS_AT[1]),
            hits10: frac(HITS_AT[2]),
        }
    }

    pub fn hits(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.hits1),
            3 => Some(self.hits3),
            10 => Some(self.hits10),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: Metrics,
    /// Keyed by base relation id; inverse queries count towards the relation
    /// they invert.
    pub per_relation: BTreeMap<usize, Metrics>,
}

impl EvalReport {
    pub fn mrr(&self) -> f64 {
        self.total.mrr
    }

    pub fn triple_count(&self) -> usize {
        self.total.count
    }

    /// Builds a report from `(relation, rank)` pairs.
    pub fn from_ranks(ranked: &[(usize, usize)]) -> Self {
        let all: Vec<usize> = ranked.iter().map(|&(_, r)| r).collect();
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(rel, rank) in ranked {
            groups.entry(rel).or_default().push(rank);
        }
        Self {
            total: Metrics::from_ranks(&all),
            per_relation: groups
                .into_iter()
                .map(|(r, ranks)| (r, Metrics::from_ranks(&ranks)))
                .collect(),
        }
    }

    /// CSV with header `relation,count,mrr,hits1,hits3,hits10`, one row per
    /// relation and a final `TOTAL` row.
    pub fn to_csv(&self, relation_names: &[String]) -> String {
        let mut out = String::from("relation,count,mrr,hits1,hits3,hits10\n");
        let row = |out: &mut String, name: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{name},{},{:.6},{:.6},{:.6},{:.6}",
                m.count, m.mrr, m.hits1, m.hits3, m.hits10
            );
        };
        for (r, m) in &self.per_relation {
            row(&mut out, &relation_label(relation_names, *r), m);
        }
        row(&mut out, "TOTAL", &self.total);
        out
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self, relation_names: &[String]) -> String {
        let width = self
            .per_relation
            .keys()
            .map(|&r| relation_label(relation_names, r).len())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}\n",
            "relation", "count", "MRR", "H@1", "H@3", "H@10"
        );
        let row = |out: &mut String, name: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>7}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}",
                m.count, m.mrr, m.hits1, m.hits3, m.hits10
            );
        };
        for (r, m) in &self.per_relation {
            row(&mut out, &relation_label(relation_names, *r), m);
        }
        row(&mut out, "TOTAL", &self.total);
        out
    }
}

fn relation_label(names: &[String], r: usize) -> String {
    names.get(r).cloned().unwrap_or_else(|| r.to_string())
}

/// Filtered tail-prediction metrics on `split`, filtering with every
/// triple in `filter_splits`. On an augmented store the split already holds
/// the reversed triples, so head prediction is covered by inverse queries.
pub fn evaluate(m: &Model, store: &TripleStore, split: Split, filter_splits: &[Split]) -> Result<EvalReport, EvalError> {
    let filter = FilterIndex::from_store(store, filter_splits);
    evaluate_triples(m, store.split(split), &filter, |r| store.base_of(r))
        .map_err(|e| e.with_split(split))
}

impl EvalError {
    fn with_split(self, split: Split) -> Self {
        match self {
            EvalError::EmptySplit(_) => EvalError::EmptySplit(split.name()),
            other => other,
        }
    }
}

/// Ranks `triples` in parallel and folds relations through `group`.
pub fn evaluate_triples(
    m: &Model,
    triples: &[Triple],
    filter: &FilterIndex,
    group: impl Fn(usize) -> usize + Sync,
) -> Result<EvalReport, EvalError> {
    if triples.is_empty() {
        return Err(EvalError::EmptySplit("input"));
    }
    let emb = m.embed_all();
    let ranked = triples
        .par_iter()
        .map(|&t| filtered_rank_with(m, filter, t, &emb).map(|r| (group(t.relation), r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_ranks(&ranked))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_one_two_four() {
        let m = Metrics::from_ranks(&[1, 2, 4]);
        assert!((m.mrr - 1.75 / 3.0).abs() < 1e-12);
        assert!((m.hits1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.hits3 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.hits10, 1.0);
    }

    #[test]
    fn unique_best_ranks_first() {
        assert_eq!(rank_from_scores(&[0.1, 0.9, 0.3], 1, |_| false), 1);
    }

    #[test]
    fn ties_are_pessimistic() {
        let scores = [0.5; 6];
        assert_eq!(rank_from_scores(&scores, 2, |_| false), 6);
        assert_eq!(rank_from_scores(&scores, 2, |e| e == 0 || e == 5), 4);
    }

    #[test]
    fn filtered_competitor_is_skipped() {
        let scores = [0.2, 0.9, 0.5];
        assert_eq!(rank_from_scores(&scores, 2, |_| false), 2);
        assert_eq!(rank_from_scores(&scores, 2, |e| e == 1), 1);
    }

    #[test]
    fn target_is_never_filtered() {
        let scores = [0.2, 0.9, 0.5];
        assert_eq!(rank_from_scores(&scores, 1, |_| true), 1);
    }

    #[test]
    fn per_relation_recomposes_total() {
        let ranked = [(0, 1), (0, 3), (1, 2), (1, 7), (1, 1), (2, 11)];
        let rep = EvalReport::from_ranks(&ranked);
        let weighted: f64 = rep
            .per_relation
            .values()
            .map(|m| m.mrr * m.count as f64)
            .sum::<f64>()
            / rep.triple_count() as f64;
        assert!((weighted - rep.mrr()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_total_row() {
        let rep = EvalReport::from_ranks(&[(0, 1), (1, 2)]);
        let csv = rep.to_csv(&["a".into(), "b".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "relation,count,mrr,hits1,hits3,hits10");
        assert!(lines[1].starts_with("a,1,1.000000"));
        assert!(lines[3].starts_with("TOTAL,2,0.750000"));
    }
}
