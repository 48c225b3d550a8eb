//! Triple ingestion, dictionaries, inverse-relation augmentation and
//! per-relation structure statistics.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Suffix appended to a relation name to name its inverse.
pub const INVERSE_SUFFIX: &str = "_inv";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected 3 tab-separated fields, found {fields}")]
    Parse {
        path: String,
        line: usize,
        fields: usize,
    },
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("store is already augmented with inverse relations")]
    AlreadyAugmented,
    #[error("unknown entity '{0}'")]
    UnknownEntity(String),
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

/// A triple of dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self { head, relation, tail }
    }
}

/// Bidirectional name <-> dense id map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dictionary {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Dictionary {
    pub fn from_names(names: Vec<String>) -> Self {
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, ids }
    }

    /// Returns the id of `name`, inserting it if new.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// SHA-256 over the names in id order, newline separated.
    pub fn digest(&self) -> String {
        names_digest(&self.names)
    }
}

pub fn names_digest(names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

/// Entity and relation dictionaries plus the three id-triple splits.
///
/// Relation ids `0..base_relations` are the relations read from the data.
/// After [`TripleStore::augment_inverse`] the inverse of relation `r` has id
/// `r + base_relations`.
#[derive(Debug, Clone)]
pub struct TripleStore {
    pub entities: Dictionary,
    pub relations: Dictionary,
    base_relations: usize,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    augmented: bool,
    test_only: Vec<usize>,
}

type NamedTriple<'a> = (&'a str, &'a str, &'a str);

impl TripleStore {
    /// Builds a store from named triples. Dictionaries are filled in order of
    /// first appearance across train, valid, test. Duplicates inside a split
    /// are dropped.
    pub fn from_named(
        train: &[NamedTriple<'_>],
        valid: &[NamedTriple<'_>],
        test: &[NamedTriple<'_>],
    ) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::EmptySplit("train"));
        }
        let mut entities = Dictionary::default();
        let mut relations = Dictionary::default();
        let mut convert = |rows: &[NamedTriple<'_>]| {
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(rows.len());
            for &(h, r, t) in rows {
                let tr = Triple::new(entities.intern(h), relations.intern(r), entities.intern(t));
                if seen.insert(tr) {
                    out.push(tr);
                }
            }
            out
        };
        let train = convert(train);
        let valid = convert(valid);
        let test = convert(test);

        let in_train: HashSet<usize> = train.iter().flat_map(|t| [t.head, t.tail]).collect();
        let mut test_only: Vec<usize> = valid
            .iter()
            .chain(&test)
            .flat_map(|t| [t.head, t.tail])
            .filter(|e| !in_train.contains(e))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        test_only.sort_unstable();

        Ok(Self {
            base_relations: relations.len(),
            entities,
            relations,
            train,
            valid,
            test,
            augmented: false,
            test_only,
        })
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn valid(&self) -> &[Triple] {
        &self.valid
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// All relations, inverses included.
    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    /// Maps an inverse relation id back to the relation it inverts.
    pub fn base_of(&self, relation: usize) -> usize {
        relation % self.base_relations
    }

    /// Entities that occur in valid or test but never in train.
    pub fn test_only_entities(&self) -> &[usize] {
        &self.test_only
    }

    /// Number of distinct triples over the three splits, inverses excluded.
    pub fn base_triple_count(&self) -> usize {
        [&self.train, &self.valid, &self.test]
            .iter()
            .flat_map(|s| s.iter())
            .filter(|t| t.relation < self.base_relations)
            .count()
    }

    /// Adds `r_inv` for every relation and `(t, r_inv, h)` for every triple
    /// in every split. Fails without touching the store if already done.
    pub fn augment_inverse(&mut self) -> Result<(), DataError> {
        if self.augmented {
            return Err(DataError::AlreadyAugmented);
        }
        let base = self.base_relations;
        let names: Vec<String> = self.relations.names().to_vec();
        for n in names {
            self.relations.intern(&format!("{n}{INVERSE_SUFFIX}"));
        }
        for split in [&mut self.train, &mut self.valid, &mut self.test] {
            let reversed: Vec<Triple> = split
                .iter()
                .map(|t| Triple::new(t.tail, t.relation + base, t.head))
                .collect();
            split.extend(reversed);
        }
        self.augmented = true;
        Ok(())
    }

    pub fn entity_id(&self, name: &str) -> Result<usize, DataError> {
        self.entities
            .id(name)
            .ok_or_else(|| DataError::UnknownEntity(name.to_string()))
    }

    pub fn relation_id(&self, name: &str) -> Result<usize, DataError> {
        self.relations
            .id(name)
            .ok_or_else(|| DataError::UnknownRelation(name.to_string()))
    }

    /// Edges of one base relation over all splits.
    fn relation_edges(&self, relation: usize) -> Vec<(usize, usize)> {
        let base = self.base_of(relation);
        let mut edges: Vec<(usize, usize)> = [&self.train, &self.valid, &self.test]
            .iter()
            .flat_map(|s| s.iter())
            .filter(|t| t.relation == base)
            .map(|t| (t.head, t.tail))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Writes the store as three TSV files (`train.txt`, `valid.txt`,
    /// `test.txt`) containing only base-relation triples.
    pub fn write_tsv(&self, dir: &Path) -> Result<(), DataError> {
        std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for split in [Split::Train, Split::Valid, Split::Test] {
            let mut text = String::new();
            for t in self.split(split).iter().filter(|t| t.relation < self.base_relations) {
                let _ = writeln!(
                    text,
                    "{}\t{}\t{}",
                    self.entities.names[t.head], self.relations.names[t.relation], self.entities.names[t.tail]
                );
            }
            let path = dir.join(format!("{}.txt", split.name()));
            std::fs::write(&path, text).map_err(|source| DataError::Io { path, source })?;
        }
        Ok(())
    }
}

/// Parses TSV rows `head\trelation\ttail`. Blank lines are skipped.
pub fn parse_tsv<'a>(text: &'a str, path: &str) -> Result<Vec<NamedTriple<'a>>, DataError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DataError::Parse {
                path: path.to_string(),
                line: i + 1,
                fields: fields.len(),
            });
        }
        rows.push((fields[0], fields[1], fields[2]));
    }
    Ok(rows)
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads train/valid/test TSV files. Valid and test may be omitted.
pub fn load_triples(
    train: &Path,
    valid: Option<&Path>,
    test: Option<&Path>,
) -> Result<TripleStore, DataError> {
    let train_text = read(train)?;
    let valid_text = valid.map(read).transpose()?.unwrap_or_default();
    let test_text = test.map(read).transpose()?.unwrap_or_default();
    let display = |p: Option<&Path>| p.map(|p| p.display().to_string()).unwrap_or_default();
    let train_rows = parse_tsv(&train_text, &train.display().to_string())?;
    let valid_rows = parse_tsv(&valid_text, &display(valid))?;
    let test_rows = parse_tsv(&test_text, &display(test))?;
    TripleStore::from_named(&train_rows, &valid_rows, &test_rows)
}

/// Strongly connected components of a graph on `0..n`, in reverse
/// topological order (every edge goes from a later component to an earlier
/// one or stays inside a component). Returns the component of each node and
/// the component count.
fn strong_components(n: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut n_comp = 0;
    // explicit call stack of (node, next child position)
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        calls.push((root, 0));
        while let Some(&mut (u, ref mut child)) = calls.last_mut() {
            if *child == 0 {
                index[u] = next_index;
                low[u] = next_index;
                next_index += 1;
                stack.push(u);
                on_stack[u] = true;
            }
            if let Some(&v) = adj[u].get(*child) {
                *child += 1;
                if index[v] == UNSEEN {
                    calls.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                loop {
                    let w = stack.pop().expect("node on stack");
                    on_stack[w] = false;
                    comp[w] = n_comp;
                    if w == u {
                        break;
                    }
                }
                n_comp += 1;
            }
        }
    }
    (comp, n_comp)
}

/// Target components handled per sweep of the reachability bitsets.
const REACH_CHUNK_WORDS: usize = 64;

/// Krackhardt hierarchy score of a directed edge list: among ordered pairs
/// `(u, v)`, `u != v`, with `v` reachable from `u`, the fraction whose
/// reverse is not reachable.
///
/// Pairs inside one strongly connected component are reciprocal and pairs
/// across components are not, so only the total size of the components
/// reachable from each component is needed. That is computed over the
/// condensed DAG with bitsets, a block of target components at a time.
pub fn krackhardt_edges(edges: &[(usize, usize)]) -> Result<f64, DataError> {
    if edges.is_empty() {
        return Err(DataError::UndefinedMetric("relation has no edges".into()));
    }
    let mut local: HashMap<usize, usize> = HashMap::new();
    for &(u, v) in edges {
        let n = local.len();
        local.entry(u).or_insert(n);
        let n = local.len();
        local.entry(v).or_insert(n);
    }
    let n = local.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[local[&u]].push(local[&v]);
    }
    let (comp, n_comp) = strong_components(n, &adj);
    let mut size = vec![0usize; n_comp];
    for &c in &comp {
        size[c] += 1;
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            if comp[u] != comp[v] {
                succ[comp[u]].push(comp[v]);
            }
        }
    }
    for s in succ.iter_mut() {
        s.sort_unstable();
        s.dedup();
    }

    // below[c] = total size of components reachable from c, c excluded
    let mut below = vec![0usize; n_comp];
    let block = REACH_CHUNK_WORDS * 64;
    let mut bits = vec![0u64; n_comp * REACH_CHUNK_WORDS];
    for start in (0..n_comp).step_by(block) {
        let end = (start + block).min(n_comp);
        bits.iter_mut().for_each(|w| *w = 0);
        // successors always have smaller ids, so ascending order visits
        // them first
        for c in 0..n_comp {
            let (done, rest) = bits.split_at_mut(c * REACH_CHUNK_WORDS);
            let row = &mut rest[..REACH_CHUNK_WORDS];
            for &d in &succ[c] {
                if (start..end).contains(&d) {
                    let k = d - start;
                    row[k / 64] |= 1 << (k % 64);
                }
                let src = &done[d * REACH_CHUNK_WORDS..(d + 1) * REACH_CHUNK_WORDS];
                for (w, s) in row.iter_mut().zip(src) {
                    *w |= s;
                }
            }
            for (wi, &w) in row.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let k = wi * 64 + w.trailing_zeros() as usize;
                    below[c] += size[start + k];
                    w &= w - 1;
                }
            }
        }
    }

    let one_way: usize = (0..n_comp).map(|c| size[c] * below[c]).sum();
    let reciprocal: usize = size.iter().map(|&k| k * (k - 1)).sum();
    let connected = one_way + reciprocal;
    if connected == 0 {
        return Err(DataError::UndefinedMetric("relation has no connected pairs".into()));
    }
    Ok(one_way as f64 / connected as f64)
}

/// Krackhardt hierarchy score of one relation's graph over all splits.
/// 1 for a pure hierarchy, 0 when every connected pair is reciprocal.
pub fn krackhardt_score(store: &TripleStore, relation: usize) -> Result<f64, DataError> {
    if relation >= store.num_relations() {
        return Err(DataError::UnknownRelation(relation.to_string()));
    }
    krackhardt_edges(&store.relation_edges(relation))
}

/// One row of the per-relation statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationStats {
    pub relation: String,
    pub count: usize,
    pub khs: Option<f64>,
}

/// Per base relation: triple count over all splits and Krackhardt score.
pub fn relation_stats(store: &TripleStore) -> Vec<RelationStats> {
    (0..store.base_relations())
        .map(|r| RelationStats {
            relation: store.relations.names()[r].clone(),
            count: store.relation_edges(r).len(),
            khs: krackhardt_score(store, r).ok(),
        })
        .collect()
}

/// Parameters of the synthetic tree + ring knowledge graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Tree depth counted in node levels, root included.
    pub levels: usize,
    pub branching: usize,
    /// Leaves are linked in consecutive rings of this length; 0 puts all
    /// leaves in one ring.
    pub cycle_size: usize,
    pub seed: u64,
}

/// A balanced tree under relation `isa` (child -> parent) plus rings under
/// relation `next` over the leaves, split 80/10/10 by `seed`.
pub fn make_synthetic(spec: SyntheticSpec) -> TripleStore {
    assert!(spec.levels >= 2, "synthetic tree needs at least 2 levels");
    assert!(spec.branching >= 1, "synthetic tree needs branching >= 1");
    let mut names: Vec<String> = vec!["n0".to_string()];
    let mut edges: Vec<(usize, &str, usize)> = Vec::new();
    let mut frontier = vec![0usize];
    for _ in 1..spec.levels {
        let mut next = Vec::with_capacity(frontier.len() * spec.branching);
        for &parent in &frontier {
            for _ in 0..spec.branching {
                let id = names.len();
                names.push(format!("n{id}"));
                edges.push((id, "isa", parent));
                next.push(id);
            }
        }
        frontier = next;
    }
    let ring = if spec.cycle_size == 0 {
        frontier.len()
    } else {
        spec.cycle_size
    };
    for chunk in frontier.chunks(ring.max(2)) {
        if chunk.len() < 2 {
            continue;
        }
        for (i, &u) in chunk.iter().enumerate() {
            edges.push((u, "next", chunk[(i + 1) % chunk.len()]));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    edges.shuffle(&mut rng);
    let n = edges.len();
    let n_valid = (n as f64 * 0.1).round() as usize;
    let n_test = (n as f64 * 0.1).round() as usize;
    let n_train = n - n_valid - n_test;
    let named: Vec<NamedTriple<'_>> = edges
        .iter()
        .map(|(h, r, t)| (names[*h].as_str(), *r, names[*t].as_str()))
        .collect();
    let mut store = TripleStore::from_named(
        &named[..n_train],
        &named[n_train..n_train + n_valid],
        &named[n_train + n_valid..],
    )
    .expect("synthetic train split is never empty");
    // entity ids follow tree order rather than first appearance
    store.remap_entities(Dictionary::from_names(names));
    store
}

impl TripleStore {
    fn remap_entities(&mut self, dict: Dictionary) {
        let map: Vec<usize> = self
            .entities
            .names()
            .iter()
            .map(|n| dict.id(n).expect("entity present in new dictionary"))
            .collect();
        for split in [&mut self.train, &mut self.valid, &mut self.test] {
            for t in split.iter_mut() {
                t.head = map[t.head];
                t.tail = map[t.tail];
            }
        }
        for e in self.test_only.iter_mut() {
            *e = map[*e];
        }
        self.test_only.sort_unstable();
        self.entities = dict;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(train: &[NamedTriple<'_>]) -> TripleStore {
        TripleStore::from_named(train, &[], &[]).unwrap()
    }

    #[test]
    fn duplicate_rows_collapse() {
        let text = "a\tr\tb\na\tr\tb\nb\tr\tc\n";
        let rows = parse_tsv(text, "mem").unwrap();
        let s = store(&rows);
        assert_eq!(s.train().len(), 2);
        assert_eq!(s.num_entities(), 3);
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_tsv("a\tr\tb\nbad row\n", "f.tsv").unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, fields: 1, .. }));
        assert!(err.to_string().contains("f.tsv:2"));
    }

    #[test]
    fn empty_train_is_rejected() {
        assert!(matches!(
            TripleStore::from_named(&[], &[("a", "r", "b")], &[]),
            Err(DataError::EmptySplit("train"))
        ));
    }

    #[test]
    fn test_only_entities_are_kept_and_flagged() {
        let s = TripleStore::from_named(&[("a", "r", "b")], &[], &[("a", "r", "z")]).unwrap();
        assert_eq!(s.num_entities(), 3);
        assert_eq!(s.test_only_entities(), &[2]);
    }

    #[test]
    fn dictionary_round_trip() {
        let s = store(&[("a", "r", "b"), ("b", "s", "c"), ("c", "r", "a")]);
        for id in 0..s.num_entities() {
            assert_eq!(s.entities.id(s.entities.name(id).unwrap()), Some(id));
        }
        for id in 0..s.num_relations() {
            assert_eq!(s.relations.id(s.relations.name(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn augmentation_adds_inverses_once() {
        let mut s = TripleStore::from_named(&[("a", "r", "b")], &[("b", "r", "c")], &[]).unwrap();
        s.augment_inverse().unwrap();
        assert_eq!(s.num_relations(), 2);
        assert_eq!(s.relations.name(1), Some("r_inv"));
        assert!(s.train().contains(&Triple::new(1, 1, 0)));
        assert_eq!(s.train().len(), 2);
        assert_eq!(s.valid().len(), 2);
        let before = s.train().to_vec();
        assert!(matches!(s.augment_inverse(), Err(DataError::AlreadyAugmented)));
        assert_eq!(s.train(), &before[..]);
        assert_eq!(s.num_relations(), 2);
        assert_eq!(s.base_of(1), 0);
    }

    #[test]
    fn khs_examples() {
        assert_eq!(krackhardt_edges(&[(0, 1), (1, 2)]).unwrap(), 1.0);
        assert_eq!(krackhardt_edges(&[(0, 1), (1, 0)]).unwrap(), 0.0);
        assert!(krackhardt_edges(&[]).is_err());
        assert!(krackhardt_edges(&[(3, 3)]).is_err());
    }

    /// Exhaustive reachability by BFS from every node.
    fn brute_force_khs(edges: &[(usize, usize)]) -> Option<f64> {
        use std::collections::VecDeque;
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
        }
        let reach: Vec<HashSet<usize>> = (0..n)
            .map(|src| {
                let mut seen = HashSet::new();
                let mut queue = VecDeque::from([src]);
                while let Some(u) = queue.pop_front() {
                    for &v in &adj[u] {
                        if seen.insert(v) {
                            queue.push_back(v);
                        }
                    }
                }
                seen.remove(&src);
                seen
            })
            .collect();
        let (mut connected, mut one_way) = (0, 0);
        for u in 0..n {
            for &v in &reach[u] {
                connected += 1;
                if !reach[v].contains(&u) {
                    one_way += 1;
                }
            }
        }
        (connected > 0).then(|| one_way as f64 / connected as f64)
    }

    proptest::proptest! {
        #[test]
        fn khs_matches_brute_force(
            edges in proptest::collection::vec((0usize..50, 0usize..50), 1..120)
        ) {
            let fast = krackhardt_edges(&edges).ok();
            let slow = brute_force_khs(&edges);
            match (fast, slow) {
                (Some(a), Some(b)) => proptest::prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}"),
                (a, b) => proptest::prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn khs_handles_deep_chains() {
        let edges: Vec<(usize, usize)> = (0..20_000).map(|i| (i, i + 1)).collect();
        assert_eq!(krackhardt_edges(&edges).unwrap(), 1.0);
    }

    #[test]
    fn khs_chain_with_back_edge() {
        // a->b->c->d plus d->c. Reachable pairs: (a,b),(a,c),(a,d),(b,c),
        // (b,d),(c,d),(d,c); only (c,d),(d,c) are reciprocal: 5/7.
        let v = krackhardt_edges(&[(0, 1), (1, 2), (2, 3), (3, 2)]).unwrap();
        assert!((v - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn synthetic_counts_and_scores() {
        let s = make_synthetic(SyntheticSpec {
            levels: 3,
            branching: 3,
            cycle_size: 0,
            seed: 7,
        });
        assert_eq!(s.num_entities(), 13);
        let isa = s.relation_id("isa").unwrap();
        let next = s.relation_id("next").unwrap();
        assert_eq!(s.relation_edges(isa).len(), 12);
        assert_eq!(s.relation_edges(next).len(), 9);
        assert_eq!(krackhardt_score(&s, isa).unwrap(), 1.0);
        assert_eq!(krackhardt_score(&s, next).unwrap(), 0.0);
        assert_eq!(s.train().len() + s.valid().len() + s.test().len(), 21);
        assert_eq!(s.valid().len(), 2);
        assert_eq!(s.test().len(), 2);
        assert_eq!(s.entities.name(0), Some("n0"));
    }

    #[test]
    fn synthetic_is_seed_deterministic() {
        let spec = SyntheticSpec {
            levels: 4,
            branching: 3,
            cycle_size: 9,
            seed: 1,
        };
        let a = make_synthetic(spec);
        let b = make_synthetic(spec);
        assert_eq!(a.train(), b.train());
        assert_eq!(a.test(), b.test());
        assert_eq!(a.num_entities(), 40);
    }
}
