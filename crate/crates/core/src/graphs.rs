//! Admissible graphs: labeled DAGs whose labels increase along every edge,
//! and two-type graphs with aerial and boundary vertices.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A one-type admissible graph on vertices `1..=n`. Every edge `(s, t)` has
/// `s < t`, so the graph is acyclic; edges are stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdmissibleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl AdmissibleGraph {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        for &(s, t) in &edges {
            if s == 0 || t == 0 || s > n || t > n {
                return Err(Error::InvalidGraph(format!("edge ({s},{t}) outside 1..={n}")));
            }
            if s == t {
                return Err(Error::InvalidGraph(format!("self-loop at {s}")));
            }
            if s > t {
                return Err(Error::InvalidGraph(format!("edge ({s},{t}) decreases the labeling")));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("parallel edges".into()));
        }
        Ok(AdmissibleGraph { n, edges })
    }

    /// The ladder family: `upper` vertices above the edge `b -> c`, each
    /// pointing at both `b` and `c`, and `lower` vertices each receiving an
    /// edge from `b` and from `c`. `ladder(0, 0)` is the single edge and
    /// `ladder(1, 1)` is the four-vertex chain with both diagonals missing
    /// except `(1,3)` and `(2,4)`.
    pub fn ladder(upper: usize, lower: usize) -> Self {
        let b = upper + 1;
        let c = upper + 2;
        let mut edges = Vec::with_capacity(2 * (upper + lower) + 1);
        for u in 1..=upper {
            edges.push((u, b));
            edges.push((u, c));
        }
        edges.push((b, c));
        for l in c + 1..=c + lower {
            edges.push((b, l));
            edges.push((c, l));
        }
        AdmissibleGraph::new(c + lower, edges).expect("ladder graphs are admissible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn is_connected(&self) -> bool {
        weakly_connected(self.n, self.edges.iter().copied())
    }

    pub fn key(&self) -> String {
        let mut key = format!("g:n={};e=", self.n);
        for (s, t) in &self.edges {
            key.push_str(&format!("({s},{t})"));
        }
        key
    }

    pub fn parse(key: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadKey { key: key.to_string(), reason: reason.to_string() };
        let rest = key.strip_prefix("g:n=").ok_or_else(|| bad("expected prefix `g:n=`"))?;
        let (n, edges) = rest.split_once(";e=").ok_or_else(|| bad("expected `;e=`"))?;
        let n: usize = n.parse().map_err(|_| bad("vertex count is not an integer"))?;
        let mut parsed = Vec::new();
        for (s, t) in parse_pairs(edges).ok_or_else(|| bad("malformed edge list"))? {
            let s = s.parse().map_err(|_| bad("bad source label"))?;
            let t = t.parse().map_err(|_| bad("bad target label"))?;
            parsed.push((s, t));
        }
        let graph = AdmissibleGraph::new(n, parsed).map_err(|e| bad(&e.to_string()))?;
        if graph.key() != key {
            return Err(bad("edges are not in canonical order"));
        }
        Ok(graph)
    }

    /// Relabel vertices through `perm` (`perm[v-1]` is the new label of `v`).
    /// Returns `None` when the relabeling breaks the increasing-label rule.
    pub fn relabel(&self, perm: &[usize]) -> Option<AdmissibleGraph> {
        let edges: Vec<_> = self.edges.iter().map(|&(s, t)| (perm[s - 1], perm[t - 1])).collect();
        if edges.iter().any(|&(s, t)| s > t) {
            return None;
        }
        AdmissibleGraph::new(self.n, edges).ok()
    }
}

impl fmt::Display for AdmissibleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn parse_pairs(text: &str) -> Option<Vec<(&str, &str)>> {
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('(')?;
        let close = inner.find(')')?;
        let (pair, tail) = (&inner[..close], &inner[close + 1..]);
        out.push(pair.split_once(',')?);
        rest = tail;
    }
    Some(out)
}

fn weakly_connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (s, t) in edges {
        let (a, b) = (find(&mut parent, s - 1), find(&mut parent, t - 1));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

/// Number of labelings `1..=n` of an arbitrary digraph on vertices `1..=n`
/// that increase along every edge (its linear extensions). Errors on cycles.
pub fn count_labelings(n: usize, edges: &[(usize, usize)]) -> Result<u64> {
    assert!(n <= 20, "labeling count limited to 20 vertices");
    let mut preds = vec![0u32; n];
    for &(s, t) in edges {
        if s == 0 || t == 0 || s > n || t > n {
            return Err(Error::InvalidGraph(format!("edge ({s},{t}) outside 1..={n}")));
        }
        if s == t {
            return Err(Error::Cyclic);
        }
        preds[t - 1] |= 1 << (s - 1);
    }
    // ways[S] = number of ways to place the vertex set S on labels 1..|S|.
    let mut ways = vec![0u64; 1 << n];
    ways[0] = 1;
    for set in 0..(1usize << n) {
        if ways[set] == 0 {
            continue;
        }
        for v in 0..n {
            if set & (1 << v) == 0 && (preds[v] as usize) & !set == 0 {
                ways[set | (1 << v)] += ways[set];
            }
        }
    }
    match ways[(1 << n) - 1] {
        0 => Err(Error::Cyclic),
        k => Ok(k),
    }
}

/// Isomorphism class of admissible graphs, with its representative chosen
/// as the smallest canonical key among all of its admissible labelings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphShape {
    pub representative: AdmissibleGraph,
    /// Bijective labelings increasing along every edge (linear extensions).
    pub labeling_count: u64,
    /// Distinct labeled graphs among those labelings.
    pub labeled_graphs: Vec<AdmissibleGraph>,
}

impl GraphShape {
    pub fn of(graph: &AdmissibleGraph) -> GraphShape {
        let labeled = admissible_relabelings(graph);
        let labeling_count = count_labelings(graph.n(), graph.edges()).expect("admissible graphs are acyclic");
        GraphShape { representative: labeled[0].clone(), labeling_count, labeled_graphs: labeled }
    }

    pub fn automorphisms(&self) -> u64 {
        self.labeling_count / self.labeled_graphs.len() as u64
    }
}

/// All distinct admissible labelings of the shape of `graph`, sorted by key.
pub fn admissible_relabelings(graph: &AdmissibleGraph) -> Vec<AdmissibleGraph> {
    let n = graph.n();
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut found = std::collections::BTreeSet::new();
    permute_all(&mut perm, 0, &mut |p| {
        if let Some(g) = graph.relabel(p) {
            found.insert((g.key(), g));
        }
    });
    found.into_iter().map(|(_, g)| g).collect()
}

pub fn permute_all(perm: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute_all(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Every admissible graph with `n` vertices and `e` edges, in lexicographic
/// order of edge sets.
pub fn enumerate_graphs(n: usize, e: usize, connected: bool) -> Vec<AdmissibleGraph> {
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|s| (s + 1..=n).map(move |t| (s, t))).collect();
    let mut out = Vec::new();
    if e > pairs.len() || n == 0 {
        return out;
    }
    let mut chosen = Vec::with_capacity(e);
    choose(&pairs, e, 0, &mut chosen, &mut |edges| {
        let g = AdmissibleGraph::new(n, edges.to_vec()).expect("pairs are admissible");
        if !connected || g.is_connected() {
            out.push(g);
        }
    });
    out
}

fn choose(
    pairs: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    for i in start..=pairs.len().saturating_sub(needed) {
        if i >= pairs.len() {
            break;
        }
        chosen.push(pairs[i]);
        choose(pairs, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Group the admissible graphs with `n` vertices and `e` edges into shapes.
pub fn enumerate_shapes(n: usize, e: usize, connected: bool) -> Vec<GraphShape> {
    let mut shapes: BTreeMap<String, GraphShape> = BTreeMap::new();
    for g in enumerate_graphs(n, e, connected) {
        let shape = GraphShape::of(&g);
        shapes.entry(shape.representative.key()).or_insert(shape);
    }
    shapes.into_values().collect()
}

/// Necessary condition for the graph operator to be nonzero on inputs of the
/// given multivector arities and coefficient degrees.
pub fn contribution_filter(g: &AdmissibleGraph, arities: &[usize], poly_degrees: &[usize]) -> Result<bool> {
    for list in [arities, poly_degrees] {
        if list.len() != g.n() {
            return Err(Error::LengthMismatch { expected: g.n(), got: list.len() });
        }
    }
    Ok((1..=g.n()).all(|v| g.out_degree(v) <= arities[v - 1] && g.in_degree(v) <= poly_degrees[v - 1]))
}

/// A directed acyclic graph on `1..=n` with arbitrary labels, together with
/// its admissible relabeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDag {
    pub n: usize,
    /// Edges sorted lexicographically.
    pub edges: Vec<(usize, usize)>,
    /// Relabeling by the smallest topological order.
    pub canonical: AdmissibleGraph,
    /// Sign of the edge reordering induced by the relabeling.
    pub sign: i32,
}

impl LabeledDag {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        let order = topological_order(n, &edges).ok_or(Error::Cyclic)?;
        let mut perm = vec![0; n];
        for (pos, &v) in order.iter().enumerate() {
            perm[v - 1] = pos + 1;
        }
        let mapped: Vec<(usize, usize)> = edges.iter().map(|&(s, t)| (perm[s - 1], perm[t - 1])).collect();
        let sign = sort_sign(&mapped);
        let canonical = AdmissibleGraph::new(n, mapped)?;
        Ok(LabeledDag { n, edges, canonical, sign })
    }
}

/// Every labeled DAG on `1..=n` with `e` edges and no parallel edges,
/// regardless of whether labels increase along edges.
pub fn labeled_dags(n: usize, e: usize, connected: bool) -> Vec<LabeledDag> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for g in enumerate_graphs(n, e, connected) {
        let mut perm: Vec<usize> = (1..=n).collect();
        permute_all(&mut perm, 0, &mut |p| {
            let mut edges: Vec<(usize, usize)> = g.edges().iter().map(|&(s, t)| (p[s - 1], p[t - 1])).collect();
            edges.sort_unstable();
            if seen.insert(edges.clone()) {
                out.push(LabeledDag::new(n, edges).expect("relabeled DAG"));
            }
        });
    }
    out.sort_by(|a, b| a.edges.cmp(&b.edges));
    out
}

/// Edge target in a two-type graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Aerial(usize),
    Boundary(usize),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Aerial(v) => write!(f, "{v}"),
            Target::Boundary(k) => write!(f, "b{k}"),
        }
    }
}

/// A graph with `n` aerial vertices and `m` boundary vertices; every edge
/// starts at an aerial vertex. Edges are kept in canonical order: by source,
/// aerial targets before boundary targets, each ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoTypeGraph {
    n: usize,
    m: usize,
    edges: Vec<(usize, Target)>,
}

impl TwoTypeGraph {
    /// Builds an admissible two-type graph: acyclic, with aerial labels
    /// increasing along aerial edges.
    pub fn new(n: usize, m: usize, edges: Vec<(usize, Target)>) -> Result<Self> {
        let g = Self::with_any_labels(n, m, edges)?;
        if g.edges.iter().any(|&(s, t)| matches!(t, Target::Aerial(a) if a < s)) {
            return Err(Error::InvalidGraph("aerial edge decreases the labeling".into()));
        }
        Ok(g)
    }

    /// Builds a two-type graph without the labeling and acyclicity rules;
    /// such graphs appear inside sums over all labelings and in cycle checks.
    pub fn with_any_labels(n: usize, m: usize, mut edges: Vec<(usize, Target)>) -> Result<Self> {
        if 2 * n + m < 2 {
            return Err(Error::InvalidGraph("need 2n + m >= 2".into()));
        }
        for &(s, t) in &edges {
            if s == 0 || s > n {
                return Err(Error::InvalidGraph(format!("source {s} outside 1..={n}")));
            }
            match t {
                Target::Aerial(a) if a == 0 || a > n => {
                    return Err(Error::InvalidGraph(format!("aerial target {a} outside 1..={n}")))
                }
                Target::Aerial(a) if a == s => return Err(Error::InvalidGraph(format!("self-loop at {s}"))),
                Target::Boundary(k) if k == 0 || k > m => {
                    return Err(Error::InvalidGraph(format!("boundary target b{k} outside 1..={m}")))
                }
                _ => {}
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("parallel edges".into()));
        }
        Ok(TwoTypeGraph { n, m, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, Target)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn has_cycle(&self) -> bool {
        let aerial: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|&(s, t)| match t {
                Target::Aerial(a) => Some((s, a)),
                Target::Boundary(_) => None,
            })
            .collect();
        topological_order(self.n, &aerial).is_none()
    }

    pub fn is_admissible(&self) -> bool {
        !self.has_cycle() && self.edges.iter().all(|&(s, t)| !matches!(t, Target::Aerial(a) if a < s))
    }

    pub fn key(&self) -> String {
        let mut key = format!("g2:n={};m={};e=", self.n, self.m);
        for (s, t) in &self.edges {
            key.push_str(&format!("({s},{t})"));
        }
        key
    }

    pub fn parse(key: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadKey { key: key.to_string(), reason: reason.to_string() };
        let rest = key.strip_prefix("g2:n=").ok_or_else(|| bad("expected prefix `g2:n=`"))?;
        let (n, rest) = rest.split_once(";m=").ok_or_else(|| bad("expected `;m=`"))?;
        let (m, edges) = rest.split_once(";e=").ok_or_else(|| bad("expected `;e=`"))?;
        let n: usize = n.parse().map_err(|_| bad("aerial count is not an integer"))?;
        let m: usize = m.parse().map_err(|_| bad("boundary count is not an integer"))?;
        let mut parsed = Vec::new();
        for (s, t) in parse_pairs(edges).ok_or_else(|| bad("malformed edge list"))? {
            let s = s.parse().map_err(|_| bad("bad source label"))?;
            let t = match t.strip_prefix('b') {
                Some(k) => Target::Boundary(k.parse().map_err(|_| bad("bad boundary label"))?),
                None => Target::Aerial(t.parse().map_err(|_| bad("bad target label"))?),
            };
            parsed.push((s, t));
        }
        let graph = TwoTypeGraph::with_any_labels(n, m, parsed).map_err(|e| bad(&e.to_string()))?;
        if graph.key() != key {
            return Err(bad("edges are not in canonical order"));
        }
        Ok(graph)
    }

    /// Relabel an acyclic graph into admissible form using the smallest
    /// topological order of its aerial vertices. Returns the relabeled graph,
    /// the permutation (`perm[v-1]` = new label of `v`), and the sign of the
    /// induced reordering of the canonical edge list.
    pub fn canonical_relabeling(&self) -> Option<(TwoTypeGraph, Vec<usize>, i32)> {
        let aerial: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|&(s, t)| match t {
                Target::Aerial(a) => Some((s, a)),
                _ => None,
            })
            .collect();
        let order = topological_order(self.n, &aerial)?;
        let mut perm = vec![0; self.n];
        for (pos, &v) in order.iter().enumerate() {
            perm[v - 1] = pos + 1;
        }
        let mapped: Vec<(usize, Target)> = self
            .edges
            .iter()
            .map(|&(s, t)| {
                let t = match t {
                    Target::Aerial(a) => Target::Aerial(perm[a - 1]),
                    b => b,
                };
                (perm[s - 1], t)
            })
            .collect();
        let sign = sort_sign(&mapped);
        let graph = TwoTypeGraph::new(self.n, self.m, mapped).ok()?;
        Some((graph, perm, sign))
    }
}

impl fmt::Display for TwoTypeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Sign of the permutation that sorts `items`.
pub fn sort_sign<T: Ord>(items: &[T]) -> i32 {
    let mut inversions = 0usize;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if items[i] > items[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Smallest-first topological order of vertices `1..=n`, or `None` on a cycle.
pub fn topological_order(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n + 1];
    for &(_, t) in edges {
        indeg[t] += 1;
    }
    let mut ready: std::collections::BTreeSet<usize> = (1..=n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &(s, t) in edges {
            if s == v {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert(t);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}
