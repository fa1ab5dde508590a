//! Synthetic datasets with injected cross-column patterns, and expert
//! sessions that walk the injected correlations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution as _, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::env::{ActionSpec, EpisodeState, Trajectory};
use crate::seed::{self, EngineRng};
use crate::tabular::{
    canonical_number, AggFunc, ColumnKind, Dataset, FilterOp, FilterPredicate, Grouping, Value,
};
use crate::{math, Error, Result};

/// Length of every generated text cell.
pub const TEXT_LEN: usize = 12;
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// Where an injected substring sits inside a text cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Position {
    Start,
    Middle,
    End,
}

impl Position {
    pub fn filter_op(self) -> FilterOp {
        match self {
            Position::Start => FilterOp::StartsWith,
            Position::Middle => FilterOp::Contains,
            Position::End => FilterOp::EndsWith,
        }
    }
}

/// One injectable pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PatternSpec {
    Category { label: String },
    Gaussian { mu: f64, sigma: f64 },
    Substring { text: String, position: Position },
}

/// The patterns of one column and their base sampling weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPatterns {
    pub column: String,
    pub patterns: Vec<PatternSpec>,
    pub weights: Vec<f64>,
}

impl ColumnPatterns {
    pub fn validate(&self) -> Result<()> {
        if self.patterns.is_empty() || self.patterns.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "column `{}`: need matching nonempty patterns and weights",
                self.column
            )));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidInput(format!("column `{}`: negative weight", self.column)));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "column `{}`: weights sum to {total}",
                self.column
            )));
        }
        for p in &self.patterns {
            match p {
                PatternSpec::Gaussian { sigma, .. } if sigma.is_nan() || *sigma <= 0.0 => {
                    return Err(Error::InvalidInput(format!("column `{}`: sigma <= 0", self.column)))
                }
                PatternSpec::Substring { text, .. } if text.is_empty() || text.len() > TEXT_LEN => {
                    return Err(Error::InvalidInput(format!(
                        "column `{}`: bad substring `{text}`",
                        self.column
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// A dependency of `dst_col` patterns on `src_col` patterns. Each link is
/// a pair of pattern indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correlation {
    pub src_col: String,
    pub dst_col: String,
    pub links: Vec<(usize, usize)>,
}

/// Correlations over the columns of a schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationDag {
    pub nodes: Vec<String>,
    pub edges: Vec<Correlation>,
}

impl CorrelationDag {
    fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// `(src, dst)` node indices of every edge.
    pub fn edge_indices(&self) -> Result<Vec<(usize, usize)>> {
        self.edges
            .iter()
            .map(|e| Ok((self.node_index(&e.src_col)?, self.node_index(&e.dst_col)?)))
            .collect()
    }

    /// Node indices in a topological order, smallest index first among
    /// ready nodes. Fails on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let edges = self.edge_indices()?;
        let mut indeg = vec![0usize; n];
        for &(_, d) in &edges {
            indeg[d] += 1;
        }
        let mut ready: alloc::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &(s, d) in &edges {
                if s == v {
                    indeg[d] -= 1;
                    if indeg[d] == 0 {
                        ready.insert(d);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidInput("correlation graph has a cycle".into()));
        }
        Ok(order)
    }

    /// Number of edges each node takes part in.
    pub fn degrees(&self) -> Result<Vec<usize>> {
        let mut deg = vec![0; self.nodes.len()];
        for (s, d) in self.edge_indices()? {
            deg[s] += 1;
            deg[d] += 1;
        }
        Ok(deg)
    }

    pub fn validate(&self, patterns: &[ColumnPatterns]) -> Result<()> {
        self.topological_order()?;
        for e in &self.edges {
            if e.src_col == e.dst_col {
                return Err(Error::InvalidInput(format!("self-correlation on `{}`", e.src_col)));
            }
            let count = |c: &str| {
                patterns
                    .iter()
                    .find(|p| p.column == c)
                    .map(|p| p.patterns.len())
                    .ok_or_else(|| Error::UnknownColumn(c.to_string()))
            };
            let (ns, nd) = (count(&e.src_col)?, count(&e.dst_col)?);
            if e.links.iter().any(|&(a, b)| a >= ns || b >= nd) {
                return Err(Error::InvalidInput(format!(
                    "link index out of range on `{}` -> `{}`",
                    e.src_col, e.dst_col
                )));
            }
        }
        Ok(())
    }
}

/// Shape of the random correlation graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DagConfig {
    /// Most edges any one column may take part in.
    pub cap: usize,
    pub max_edges: usize,
    pub max_links: usize,
}

impl Default for DagConfig {
    fn default() -> Self {
        Self {
            cap: 2,
            max_edges: 3,
            max_links: 2,
        }
    }
}

/// Three categorical, three numeric and two text columns.
pub fn paper_schema() -> Vec<(String, ColumnKind)> {
    [
        ("c1", ColumnKind::Categorical),
        ("c2", ColumnKind::Categorical),
        ("c3", ColumnKind::Categorical),
        ("n1", ColumnKind::Numeric),
        ("n2", ColumnKind::Numeric),
        ("n3", ColumnKind::Numeric),
        ("t1", ColumnKind::Text),
        ("t2", ColumnKind::Text),
    ]
    .iter()
    .map(|(n, k)| (n.to_string(), *k))
    .collect()
}

fn flat_simplex(rng: &mut EngineRng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

fn random_text(rng: &mut EngineRng, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

/// Draw `n_patterns` patterns per column with flat-Dirichlet weights.
pub fn generate_patterns(
    schema: &[(String, ColumnKind)],
    n_patterns: usize,
    seed: u64,
) -> Result<Vec<ColumnPatterns>> {
    if n_patterns == 0 {
        return Err(Error::InvalidConfig("n_patterns must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(schema.len());
    for (col, kind) in schema {
        let patterns = (0..n_patterns)
            .map(|i| match kind {
                ColumnKind::Categorical => PatternSpec::Category {
                    label: format!("cat_{col}_{i}"),
                },
                ColumnKind::Numeric => PatternSpec::Gaussian {
                    mu: rng.random_range(0.0..=100.0),
                    sigma: rng.random_range(1.0..=10.0),
                },
                ColumnKind::Text => {
                    let len = rng.random_range(3..=6);
                    let position = [Position::Start, Position::Middle, Position::End]
                        [rng.random_range(0..3)];
                    PatternSpec::Substring {
                        text: random_text(&mut rng, len),
                        position,
                    }
                }
            })
            .collect();
        let weights = flat_simplex(&mut rng, n_patterns);
        out.push(ColumnPatterns {
            column: col.clone(),
            patterns,
            weights,
        });
    }
    Ok(out)
}

/// Random acyclic correlations: edges only run forward along a random
/// permutation of the columns, and no column exceeds `cfg.cap` edges.
pub fn generate_correlations(
    schema: &[(String, ColumnKind)],
    patterns: &[ColumnPatterns],
    seed: u64,
    cfg: &DagConfig,
) -> Result<CorrelationDag> {
    if cfg.cap == 0 || cfg.max_links == 0 {
        return Err(Error::InvalidConfig("cap and max_links must be at least 1".into()));
    }
    if patterns.len() != schema.len()
        || patterns.iter().zip(schema).any(|(p, (c, _))| p.column != *c)
    {
        return Err(Error::SchemaMismatch("patterns do not follow the schema".into()));
    }
    let n = schema.len();
    let nodes: Vec<String> = schema.iter().map(|(c, _)| c.clone()).collect();
    let mut rng = seed::rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            candidates.push((perm[i], perm[j]));
        }
    }
    candidates.shuffle(&mut rng);
    let target = if candidates.is_empty() {
        0
    } else {
        rng.random_range(1..=cfg.max_edges.max(1))
    };
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    for (s, d) in candidates {
        if edges.len() == target {
            break;
        }
        if deg[s] >= cfg.cap || deg[d] >= cfg.cap {
            continue;
        }
        deg[s] += 1;
        deg[d] += 1;
        let (ns, nd) = (patterns[s].patterns.len(), patterns[d].patterns.len());
        let k = rng.random_range(1..=cfg.max_links.min(ns));
        let mut srcs: Vec<usize> = (0..ns).collect();
        srcs.shuffle(&mut rng);
        let mut links: Vec<(usize, usize)> =
            srcs[..k].iter().map(|&a| (a, rng.random_range(0..nd))).collect();
        links.sort_unstable();
        edges.push(Correlation {
            src_col: nodes[s].clone(),
            dst_col: nodes[d].clone(),
            links,
        });
    }
    Ok(CorrelationDag { nodes, edges })
}

/// A populated dataset together with the pattern each cell was drawn from.
#[derive(Debug, Clone)]
pub struct PopulatedRows {
    pub dataset: Dataset,
    /// `assignments[col][row]` is the pattern index realised in that cell.
    pub assignments: Vec<Vec<usize>>,
}

fn check_inputs(
    schema: &[(String, ColumnKind)],
    patterns: &[ColumnPatterns],
    dag: &CorrelationDag,
) -> Result<()> {
    if patterns.len() != schema.len() {
        return Err(Error::SchemaMismatch("one pattern table per column expected".into()));
    }
    for (p, (c, kind)) in patterns.iter().zip(schema) {
        if p.column != *c {
            return Err(Error::SchemaMismatch(format!("pattern table `{}` for column `{c}`", p.column)));
        }
        p.validate()?;
        let ok = p.patterns.iter().all(|pat| {
            matches!(
                (pat, kind),
                (PatternSpec::Category { .. }, ColumnKind::Categorical)
                    | (PatternSpec::Gaussian { .. }, ColumnKind::Numeric)
                    | (PatternSpec::Substring { .. }, ColumnKind::Text)
            )
        });
        if !ok {
            return Err(Error::SchemaMismatch(format!("pattern kind mismatch on `{c}`")));
        }
    }
    if dag.nodes.iter().map(String::as_str).ne(schema.iter().map(|(c, _)| c.as_str())) {
        return Err(Error::SchemaMismatch("graph nodes differ from schema".into()));
    }
    dag.validate(patterns)
}

fn sample_index(rng: &mut EngineRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn realize(rng: &mut EngineRng, pattern: &PatternSpec) -> Value {
    match pattern {
        PatternSpec::Category { label } => Value::Text(label.clone()),
        PatternSpec::Gaussian { mu, sigma } => {
            let normal = Normal::new(*mu, *sigma).expect("sigma validated");
            Value::Number(math::round(normal.sample(rng)) + 0.0)
        }
        PatternSpec::Substring { text, position } => {
            let free = TEXT_LEN - text.len();
            let offset = match position {
                Position::Start => 0,
                Position::End => free,
                Position::Middle if free >= 2 => rng.random_range(1..free),
                Position::Middle => free / 2,
            };
            let mut s = random_text(rng, offset);
            s.push_str(text);
            s.push_str(&random_text(rng, free - offset));
            Value::Text(s)
        }
    }
}

/// Populate `n_rows` rows. Columns are filled in topological order; each
/// incoming link whose source pattern fired in the row multiplies the
/// weight of its destination pattern by `m`. Numeric draws are rounded to
/// integers.
pub fn populate_rows_traced(
    name: &str,
    schema: &[(String, ColumnKind)],
    patterns: &[ColumnPatterns],
    dag: &CorrelationDag,
    n_rows: usize,
    m: f64,
    seed: u64,
) -> Result<PopulatedRows> {
    if n_rows == 0 {
        return Err(Error::InvalidConfig("n_rows must be at least 1".into()));
    }
    if !m.is_finite() || m < 1.0 {
        return Err(Error::InvalidConfig(format!("multiplier must be >= 1, got {m}")));
    }
    check_inputs(schema, patterns, dag)?;
    let order = dag.topological_order()?;
    let edges = dag.edge_indices()?;
    let mut incoming: Vec<Vec<(usize, &[(usize, usize)])>> = vec![Vec::new(); schema.len()];
    for ((s, d), e) in edges.iter().zip(&dag.edges) {
        incoming[*d].push((*s, &e.links));
    }
    let mut rng = seed::rng(seed);
    let mut assignments = vec![vec![0usize; n_rows]; schema.len()];
    let mut rows = Vec::with_capacity(n_rows);
    let mut fired = vec![0usize; schema.len()];
    let mut cells = vec![Value::Null; schema.len()];
    for r in 0..n_rows {
        for &c in &order {
            let mut w = patterns[c].weights.clone();
            for (src, links) in &incoming[c] {
                for &(a, b) in links.iter() {
                    if fired[*src] == a {
                        w[b] *= m;
                    }
                }
            }
            let p = sample_index(&mut rng, &w);
            fired[c] = p;
            assignments[c][r] = p;
            cells[c] = realize(&mut rng, &patterns[c].patterns[p]);
        }
        rows.push(cells.clone());
    }
    let dataset = Dataset::from_rows(name, schema.to_vec(), rows)?;
    Ok(PopulatedRows {
        dataset,
        assignments,
    })
}

/// [`populate_rows_traced`] without the pattern trace.
pub fn populate_rows(
    name: &str,
    schema: &[(String, ColumnKind)],
    patterns: &[ColumnPatterns],
    dag: &CorrelationDag,
    n_rows: usize,
    m: f64,
    seed: u64,
) -> Result<Dataset> {
    populate_rows_traced(name, schema, patterns, dag, n_rows, m, seed).map(|p| p.dataset)
}

struct Walker<'a> {
    ds: &'a Dataset,
    patterns: &'a [ColumnPatterns],
    dag: &'a CorrelationDag,
    children: Vec<Vec<usize>>,
    episode: EpisodeState,
    actions: Vec<ActionSpec>,
}

impl Walker<'_> {
    fn emit(&mut self, action: ActionSpec) -> Result<()> {
        self.episode.step(self.ds, &action)?;
        self.actions.push(action);
        Ok(())
    }

    fn filter_for(&self, col: usize, pattern: usize) -> Result<ActionSpec> {
        let name = &self.dag.nodes[col];
        let pred = match &self.patterns[col].patterns[pattern] {
            PatternSpec::Category { label } => FilterPredicate::new(name.clone(), FilterOp::Eq, label.clone()),
            PatternSpec::Substring { text, position } => {
                FilterPredicate::new(name.clone(), position.filter_op(), text.clone())
            }
            PatternSpec::Gaussian { mu, .. } => {
                let ci = self.ds.column_index(name)?;
                let col = self.ds.column(ci);
                let d = self.episode.current();
                let source: &[u32] = d.rows();
                let nearest = if source.is_empty() {
                    None
                } else {
                    nearest_value(source.iter().map(|&r| col.codes()[r as usize]), col, *mu)
                };
                let nearest = nearest.or_else(|| nearest_value(col.codes().iter().copied(), col, *mu));
                let term = nearest.map(canonical_number).unwrap_or_else(|| canonical_number(math::round(*mu)));
                FilterPredicate::new(name.clone(), FilterOp::Eq, term)
            }
        };
        Ok(ActionSpec::Filter(pred))
    }

    /// Apply the destination side of edge `e` and recurse. Returns the
    /// number of displays pushed, which the caller backs out of.
    fn visit_edge(&mut self, e: usize, src_pattern: Option<usize>, rng: &mut EngineRng) -> Result<usize> {
        let edge = &self.dag.edges[e];
        let (s, d) = (
            self.dag.node_index(&edge.src_col)?,
            self.dag.node_index(&edge.dst_col)?,
        );
        let matching: Vec<(usize, usize)> = match src_pattern {
            Some(p) => edge.links.iter().copied().filter(|l| l.0 == p).collect(),
            None => Vec::new(),
        };
        let pool = if matching.is_empty() { &edge.links } else { &matching };
        let (a, b) = pool[rng.random_range(0..pool.len())];
        let mut pushed = 0;
        if src_pattern.is_none() {
            let act = self.filter_for(s, a)?;
            self.emit(act)?;
            pushed += 1;
        }
        let kinds = (
            self.ds.column(self.ds.column_index(&edge.src_col)?).kind(),
            self.ds.column(self.ds.column_index(&edge.dst_col)?).kind(),
        );
        let group = kinds == (ColumnKind::Categorical, ColumnKind::Categorical) && rng.random_bool(0.5);
        let next_pattern = if group {
            self.emit(ActionSpec::Group(Grouping::new(
                edge.src_col.clone(),
                edge.dst_col.clone(),
                AggFunc::Count,
            )))?;
            None
        } else {
            let act = self.filter_for(d, b)?;
            self.emit(act)?;
            Some(b)
        };
        pushed += 1;
        let children = self.children[d].clone();
        for child in children {
            let inner = self.visit_subtree(child, next_pattern, rng)?;
            for _ in 0..inner {
                self.emit(ActionSpec::Back)?;
            }
        }
        Ok(pushed)
    }

    /// Below the root only the destination operation is emitted, so the
    /// source filter already on the stack is reused.
    fn visit_subtree(&mut self, e: usize, src_pattern: Option<usize>, rng: &mut EngineRng) -> Result<usize> {
        let edge = &self.dag.edges[e];
        let fake = src_pattern.or_else(|| Some(edge.links[rng.random_range(0..edge.links.len())].0));
        self.visit_edge(e, fake, rng)
    }
}

fn nearest_value(codes: impl Iterator<Item = u32>, col: &crate::tabular::Column, mu: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for code in codes {
        if let Some(v) = col.value(code).as_number() {
            best = match best {
                Some(b) if (b - mu).abs() < (v - mu).abs() => Some(b),
                Some(b) if (b - mu).abs() == (v - mu).abs() && b <= v => Some(b),
                _ => Some(v),
            };
        }
    }
    best
}

/// Generate `count` expert sessions by depth-first walks over `dag`.
///
/// Components are visited from their roots in topological order. A root
/// edge emits a filter on the source pattern followed by an operation on
/// the linked destination pattern; deeper edges emit only the destination
/// operation. Every push is undone with BACK, so each component starts and
/// ends on the initial display.
pub fn generate_expert_trajectories(
    ds: &Dataset,
    patterns: &[ColumnPatterns],
    dag: &CorrelationDag,
    count: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if dag.edges.is_empty() {
        return Err(Error::InvalidInput("correlation graph has no edges".into()));
    }
    check_inputs(&ds.schema(), patterns, dag)?;
    let order = dag.topological_order()?;
    let rank: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges = dag.edge_indices()?;
    let mut children = vec![Vec::new(); dag.nodes.len()];
    let mut indeg = vec![0; dag.nodes.len()];
    for (e, &(s, d)) in edges.iter().enumerate() {
        children[s].push(e);
        indeg[d] += 1;
    }
    for list in &mut children {
        list.sort_by_key(|&e| (rank[&edges[e].1], e));
    }
    let roots: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&v| indeg[v] == 0 && !children[v].is_empty())
        .collect();

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = seed::rng(seed::derive_indexed(seed, "expert", i as u64));
        let mut walker = Walker {
            ds,
            patterns,
            dag,
            children: children.clone(),
            episode: EpisodeState::new(ds, usize::MAX),
            actions: Vec::new(),
        };
        for &root in &roots {
            for e in children[root].clone() {
                let pushed = walker.visit_edge(e, None, &mut rng)?;
                for _ in 0..pushed {
                    walker.emit(ActionSpec::Back)?;
                }
            }
        }
        out.push(Trajectory::from_actions(ds, &walker.actions)?);
    }
    Ok(out)
}

/// Shuffle and split trajectories into train and eval parts; the train
/// part gets `round(train_fraction * n)` of them.
pub fn split_trajectories(
    trajectories: Vec<Trajectory>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let mut rng = seed::rng(seed);
    let mut all = trajectories;
    all.shuffle(&mut rng);
    let n_train = math::round(train_fraction * all.len() as f64) as usize;
    let eval = all.split_off(n_train);
    Ok((all, eval))
}

/// End-to-end synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rows: usize,
    pub patterns_per_column: usize,
    pub multiplier: f64,
    pub dag: DagConfig,
    pub trajectories: usize,
    pub train_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 1000,
            patterns_per_column: 4,
            multiplier: 5.0,
            dag: DagConfig::default(),
            trajectories: 250,
            train_fraction: 0.8,
        }
    }
}

/// Everything produced for one synthetic dataset.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub patterns: Vec<ColumnPatterns>,
    pub dag: CorrelationDag,
    pub train: Vec<Trajectory>,
    pub eval: Vec<Trajectory>,
}

/// Run the whole pipeline for one dataset. Sub-seeds are derived from
/// `seed` by label.
pub fn synthesize(
    name: &str,
    schema: &[(String, ColumnKind)],
    cfg: &SynthConfig,
    seed: u64,
) -> Result<SyntheticDataset> {
    let patterns = generate_patterns(schema, cfg.patterns_per_column, seed::derive(seed, "patterns"))?;
    let dag = generate_correlations(schema, &patterns, seed::derive(seed, "dag"), &cfg.dag)?;
    let dataset = populate_rows(
        name,
        schema,
        &patterns,
        &dag,
        cfg.rows,
        cfg.multiplier,
        seed::derive(seed, "rows"),
    )?;
    let trajectories = generate_expert_trajectories(
        &dataset,
        &patterns,
        &dag,
        cfg.trajectories,
        seed::derive(seed, "experts"),
    )?;
    let (train, eval) = split_trajectories(trajectories, cfg.train_fraction, seed::derive(seed, "split"))?;
    Ok(SyntheticDataset {
        dataset,
        patterns,
        dag,
        train,
        eval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{replay, HeadLayout};
    use proptest::prelude::*;

    fn two_cat_schema() -> Vec<(String, ColumnKind)> {
        vec![
            ("a".to_string(), ColumnKind::Categorical),
            ("b".to_string(), ColumnKind::Categorical),
        ]
    }

    fn single_link(w: [f64; 2], links: Vec<(usize, usize)>) -> (Vec<ColumnPatterns>, CorrelationDag) {
        let schema = two_cat_schema();
        let patterns = schema
            .iter()
            .map(|(c, _)| ColumnPatterns {
                column: c.clone(),
                patterns: (0..2)
                    .map(|i| PatternSpec::Category {
                        label: format!("cat_{c}_{i}"),
                    })
                    .collect(),
                weights: w.to_vec(),
            })
            .collect();
        let dag = CorrelationDag {
            nodes: vec!["a".into(), "b".into()],
            edges: vec![Correlation {
                src_col: "a".into(),
                dst_col: "b".into(),
                links,
            }],
        };
        (patterns, dag)
    }

    /// P(dst = q | src = p) / P(dst = q | src != p) from the trace.
    fn ratio(trace: &PopulatedRows, p: usize, q: usize) -> f64 {
        let (src, dst) = (&trace.assignments[0], &trace.assignments[1]);
        let (mut hit_f, mut n_f, mut hit_n, mut n_n) = (0.0, 0.0, 0.0, 0.0);
        for (s, d) in src.iter().zip(dst) {
            if *s == p {
                n_f += 1.0;
                hit_f += f64::from(u8::from(*d == q));
            } else {
                n_n += 1.0;
                hit_n += f64::from(u8::from(*d == q));
            }
        }
        (hit_f / n_f) / (hit_n / n_n)
    }

    #[test]
    fn patterns_are_deterministic_and_well_formed() {
        let schema = paper_schema();
        let a = generate_patterns(&schema, 4, 9).unwrap();
        assert_eq!(a, generate_patterns(&schema, 4, 9).unwrap());
        assert_ne!(a, generate_patterns(&schema, 4, 10).unwrap());
        for p in &a {
            p.validate().unwrap();
        }
        assert_eq!(
            a[0].patterns[2],
            PatternSpec::Category {
                label: "cat_c1_2".into()
            }
        );
        for p in &a[3].patterns {
            let PatternSpec::Gaussian { mu, sigma } = p else { panic!() };
            assert!((0.0..=100.0).contains(mu) && (1.0..=10.0).contains(sigma));
        }
        for p in &a[6].patterns {
            let PatternSpec::Substring { text, .. } = p else { panic!() };
            assert!((3..=6).contains(&text.len()));
            assert!(text.bytes().all(|b| b.is_ascii_lowercase()));
        }
        assert!(generate_patterns(&schema, 0, 1).is_err());
    }

    #[test]
    fn one_pattern_gets_all_the_weight() {
        let p = generate_patterns(&paper_schema(), 1, 3).unwrap();
        assert!(p.iter().all(|c| c.weights == vec![1.0]));
    }

    #[test]
    fn weights_sum_to_one_over_many_draws() {
        for seed in 0..100 {
            for c in generate_patterns(&paper_schema(), 5, seed).unwrap() {
                let total: f64 = c.weights.iter().sum();
                assert!((total - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn single_column_has_no_edges() {
        let schema = vec![("x".to_string(), ColumnKind::Numeric)];
        let p = generate_patterns(&schema, 3, 1).unwrap();
        let dag = generate_correlations(&schema, &p, 1, &DagConfig::default()).unwrap();
        assert!(dag.edges.is_empty());
    }

    #[test]
    fn cap_one_limits_destinations() {
        let schema = paper_schema();
        let cfg = DagConfig {
            cap: 1,
            max_edges: 6,
            max_links: 2,
        };
        for seed in 0..100 {
            let p = generate_patterns(&schema, 3, seed).unwrap();
            let dag = generate_correlations(&schema, &p, seed, &cfg).unwrap();
            assert!(!dag.edges.is_empty());
            dag.topological_order().unwrap();
            let mut as_dst = vec![0; schema.len()];
            for (_, d) in dag.edge_indices().unwrap() {
                as_dst[d] += 1;
            }
            assert!(as_dst.iter().all(|&n| n <= 1));
            dag.validate(&p).unwrap();
        }
    }

    #[test]
    fn cycle_is_rejected() {
        let (_, mut dag) = single_link([0.5, 0.5], vec![(0, 0)]);
        dag.edges.push(Correlation {
            src_col: "b".into(),
            dst_col: "a".into(),
            links: vec![(0, 0)],
        });
        assert!(dag.topological_order().is_err());
    }

    #[test]
    fn without_boost_frequencies_follow_base_weights() {
        // chi-square goodness of fit, 1 dof, critical value at 0.01 is 6.635
        let (patterns, dag) = single_link([0.3, 0.7], vec![(0, 0)]);
        let trace = populate_rows_traced("t", &two_cat_schema(), &patterns, &dag, 10_000, 1.0, 4).unwrap();
        let n0 = trace.assignments[1].iter().filter(|&&p| p == 0).count() as f64;
        let n = 10_000.0;
        let chi2 = (n0 - 0.3 * n).powi(2) / (0.3 * n) + ((n - n0) - 0.7 * n).powi(2) / (0.7 * n);
        assert!(chi2 < 6.635, "chi2 = {chi2}");
    }

    #[test]
    fn uniform_pair_link_ratio_matches_closed_form() {
        // fired: 5w / (5w + 1 - w) = 5/6, not fired: w = 1/2
        let (patterns, dag) = single_link([0.5, 0.5], vec![(0, 1)]);
        let trace = populate_rows_traced("t", &two_cat_schema(), &patterns, &dag, 10_000, 5.0, 11).unwrap();
        let r = ratio(&trace, 0, 1);
        assert!((r - 5.0 / 3.0).abs() < 0.1, "ratio {r}");
    }

    #[test]
    fn light_link_ratio_exceeds_two() {
        let (patterns, dag) = single_link([0.9, 0.1], vec![(0, 1)]);
        let trace = populate_rows_traced("t", &two_cat_schema(), &patterns, &dag, 10_000, 5.0, 12).unwrap();
        let r = ratio(&trace, 0, 1);
        assert!(r >= 2.0, "ratio {r}");
    }

    #[test]
    fn paper_schema_dataset_shape() {
        let s = synthesize("d", &paper_schema(), &SynthConfig::default(), 5).unwrap();
        assert_eq!(s.dataset.row_count(), 1000);
        assert_eq!(s.dataset.width(), 8);
        let kinds: Vec<ColumnKind> = s.dataset.columns().iter().map(|c| c.kind()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == ColumnKind::Categorical).count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == ColumnKind::Numeric).count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == ColumnKind::Text).count(), 2);
        for c in s.dataset.columns().iter().filter(|c| c.kind() == ColumnKind::Text) {
            assert!(c.texts().iter().all(|t| t.len() == TEXT_LEN));
        }
        assert_eq!(s.train.len() + s.eval.len(), 250);
        assert_eq!(s.train.len(), 200);
    }

    #[test]
    fn cells_depend_on_ancestors_only() {
        // a column with no incoming edges is unaffected by the multiplier
        let (patterns, dag) = single_link([0.5, 0.5], vec![(0, 1)]);
        let schema = two_cat_schema();
        let a = populate_rows_traced("t", &schema, &patterns, &dag, 500, 1.0, 3).unwrap();
        let b = populate_rows_traced("t", &schema, &patterns, &dag, 500, 9.0, 3).unwrap();
        assert_eq!(a.assignments[0], b.assignments[0]);
    }

    #[test]
    fn single_edge_trajectory_shape() {
        let (patterns, dag) = single_link([0.5, 0.5], vec![(1, 0)]);
        let ds = populate_rows("t", &two_cat_schema(), &patterns, &dag, 300, 5.0, 2).unwrap();
        let trajs = generate_expert_trajectories(&ds, &patterns, &dag, 20, 7).unwrap();
        let mut saw_group = false;
        for t in &trajs {
            let acts = t.actions();
            assert_eq!(acts.len(), 4);
            assert_eq!(
                acts[0],
                ActionSpec::Filter(FilterPredicate::new("a", FilterOp::Eq, "cat_a_1"))
            );
            match &acts[1] {
                ActionSpec::Filter(p) => assert_eq!(p.term, "cat_b_0"),
                ActionSpec::Group(g) => {
                    saw_group = true;
                    assert_eq!((g.grp_col.as_str(), g.agg_col.as_str(), g.agg_func), ("a", "b", AggFunc::Count));
                }
                other => panic!("unexpected {other:?}"),
            }
            assert_eq!(&acts[2..], &[ActionSpec::Back, ActionSpec::Back]);
        }
        assert!(saw_group);
    }

    #[test]
    fn chain_returns_to_initial_display() {
        let schema: Vec<(String, ColumnKind)> = ["a", "b", "c", "d"]
            .iter()
            .map(|c| (c.to_string(), ColumnKind::Categorical))
            .collect();
        let patterns: Vec<ColumnPatterns> = schema
            .iter()
            .map(|(c, _)| ColumnPatterns {
                column: c.clone(),
                patterns: (0..3)
                    .map(|i| PatternSpec::Category {
                        label: format!("cat_{c}_{i}"),
                    })
                    .collect(),
                weights: vec![1.0 / 3.0; 3],
            })
            .collect();
        let edge = |s: &str, d: &str| Correlation {
            src_col: s.into(),
            dst_col: d.into(),
            links: vec![(0, 1), (2, 2)],
        };
        let dag = CorrelationDag {
            nodes: schema.iter().map(|(c, _)| c.clone()).collect(),
            edges: vec![edge("a", "b"), edge("b", "c"), edge("c", "d")],
        };
        let ds = populate_rows("t", &schema, &patterns, &dag, 400, 5.0, 1).unwrap();
        for t in generate_expert_trajectories(&ds, &patterns, &dag, 10, 3).unwrap() {
            let acts = t.actions();
            let backs = acts.iter().filter(|a| **a == ActionSpec::Back).count();
            assert_eq!(backs, acts.len() - backs);
            assert_eq!(backs, 4);
            let mut ep = EpisodeState::new(&ds, acts.len());
            for a in &acts {
                ep.step(&ds, a).unwrap();
            }
            assert_eq!(ep.depth(), 1);
        }
    }

    #[test]
    fn numeric_filters_hit_existing_values() {
        let s = synthesize("d", &paper_schema(), &SynthConfig::default(), 21).unwrap();
        let layout = HeadLayout::for_dataset(&s.dataset, 20).unwrap();
        for t in s.train.iter().chain(&s.eval) {
            let steps = replay(&s.dataset, t, &layout).unwrap();
            let mut ep = EpisodeState::new(&s.dataset, t.len());
            for st in &steps {
                ep.step(&s.dataset, &st.action).unwrap();
                if let ActionSpec::Filter(p) = &st.action {
                    let col = s.dataset.column_index(&p.column).unwrap();
                    if s.dataset.column(col).kind() == ColumnKind::Numeric {
                        assert!(ep.current().filtered_count() > 0);
                    }
                }
            }
            assert_eq!(ep.depth(), 1);
        }
    }

    #[test]
    fn split_is_four_to_one() {
        let s = synthesize("d", &paper_schema(), &SynthConfig::default(), 2).unwrap();
        let all: Vec<Trajectory> = s.train.iter().chain(&s.eval).cloned().collect();
        let (tr, ev) = split_trajectories(all.clone(), 0.8, 1).unwrap();
        assert_eq!((tr.len(), ev.len()), (200, 50));
        assert_eq!(split_trajectories(all, 0.8, 1).unwrap().0, tr);
    }

    #[test]
    fn mismatched_dataset_is_rejected() {
        let (patterns, dag) = single_link([0.5, 0.5], vec![(0, 0)]);
        let other = Dataset::from_rows(
            "x",
            vec![("z".into(), ColumnKind::Categorical)],
            vec![vec![Value::Text("q".into())]],
        )
        .unwrap();
        assert!(generate_expert_trajectories(&other, &patterns, &dag, 1, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn synthesis_is_pure_and_replayable(seed in any::<u64>()) {
            let cfg = SynthConfig { rows: 200, trajectories: 6, ..SynthConfig::default() };
            let a = synthesize("p", &paper_schema(), &cfg, seed).unwrap();
            let b = synthesize("p", &paper_schema(), &cfg, seed).unwrap();
            prop_assert_eq!(&a.train, &b.train);
            prop_assert_eq!(&a.patterns, &b.patterns);
            let layout = HeadLayout::for_dataset(&a.dataset, 20).unwrap();
            for t in a.train.iter().chain(&a.eval) {
                prop_assert!(replay(&a.dataset, t, &layout).is_ok());
                let pushes = t.actions().iter().filter(|x| x.kind().is_operation()).count();
                let backs = t.actions().iter().filter(|x| **x == ActionSpec::Back).count();
                prop_assert_eq!(pushes, backs);
                prop_assert!(t.len() <= 12);
            }
        }
    }
}
