//! Polyvector fields on a truncated graded space, the Schouten bracket, graph
//! operators and the Taylor components built from them.
//!
//! A term `c x^a dx_{i1} ^ ... ^ dx_{ik}` is stored with even coordinates
//! `x` and odd directions `xi`, so a polyvector is a superfunction. A graph
//! operator is `mu . D_{e1} . ... . D_{ek}` applied to `g_1 (x) ... (x) g_n`,
//! where `D_(s,t) = sum_i d/dxi_i on factor s . d/dx_i on factor t` and the
//! last edge acts first. Odd derivatives pick up Koszul signs from the
//! factors they pass.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngExt};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graphs::{contribution_filter, enumerate_graphs, labeled_dags, AdmissibleGraph, GraphShape, Target};
use crate::scalar::{factorial, format_rational, parse_rational, rational, Rational, Scalar};
use crate::weights::WeightTable;

/// Dimensions of the graded pieces `V_0, V_1, ...`. Coordinates are ordered
/// by weight; coordinate `x_j` dual to `V_a` has weight `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedSpaceSpec {
    dims: Vec<usize>,
    weights: Vec<u32>,
}

pub const MAX_COORDINATES: usize = 32;

impl GradedSpaceSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let weights: Vec<u32> = dims.iter().enumerate().flat_map(|(a, &d)| std::iter::repeat_n(a as u32, d)).collect();
        if weights.is_empty() {
            return Err(Error::InvalidSpace("need at least one coordinate".into()));
        }
        if weights.len() > MAX_COORDINATES {
            return Err(Error::InvalidSpace(format!("at most {MAX_COORDINATES} coordinates")));
        }
        Ok(GradedSpaceSpec { dims, weights })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total coordinate count.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Weight of coordinate `j` (0-based).
    pub fn weight(&self, j: usize) -> u32 {
        self.weights[j]
    }

    /// Inner degree contribution `-sum mono_j w_j` of a monomial.
    pub fn mono_degree(&self, mono: &[u32]) -> i64 {
        -mono.iter().zip(&self.weights).map(|(&e, &w)| e as i64 * w as i64).sum::<i64>()
    }

    pub fn wedge_degree(&self, wedge: u32) -> i64 {
        wedge_indices(wedge).map(|j| self.weights[j] as i64).sum()
    }
}

/// 0-based indices of the set bits of a wedge, ascending.
pub fn wedge_indices(wedge: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&j| wedge & (1 << j) != 0)
}

/// Sign of `xi_i` moved to the front of the sorted wedge.
fn position_sign(wedge: u32, i: usize) -> i64 {
    if (wedge & ((1u32 << i) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Product of two sorted wedges as a sorted wedge with its sign.
pub fn wedge_product(a: u32, b: u32) -> Option<(u32, i64)> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0;
    for j in wedge_indices(b) {
        swaps += (a >> j).count_ones() - (a >> j & 1);
    }
    Some((a | b, if swaps % 2 == 0 { 1 } else { -1 }))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub wedge: u32,
    pub mono: Vec<u32>,
}

impl TermKey {
    pub fn arity(&self) -> usize {
        self.wedge.count_ones() as usize
    }

    pub fn wedge_list(&self) -> Vec<usize> {
        wedge_indices(self.wedge).map(|j| j + 1).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyvector<C = Rational> {
    space: GradedSpaceSpec,
    terms: BTreeMap<TermKey, C>,
}

impl<C: Scalar> Polyvector<C> {
    pub fn zero(space: &GradedSpaceSpec) -> Self {
        Polyvector { space: space.clone(), terms: BTreeMap::new() }
    }

    /// Single term `coeff x^mono xi_{wedge[0]} ... xi_{wedge[k-1]}` with
    /// 1-based wedge indices in any order.
    pub fn monomial(space: &GradedSpaceSpec, coeff: C, mono: &[u32], wedge: &[usize]) -> Result<Self> {
        let mut p = Polyvector::zero(space);
        p.add_term(coeff, mono, wedge)?;
        Ok(p)
    }

    pub fn add_term(&mut self, coeff: C, mono: &[u32], wedge: &[usize]) -> Result<()> {
        let d = self.space.dim();
        if mono.len() != d {
            return Err(Error::LengthMismatch { expected: d, got: mono.len() });
        }
        let mut mask = 0u32;
        let mut sign = 1;
        for &j in wedge {
            if j == 0 || j > d {
                return Err(Error::Format(format!("wedge index {j} outside 1..={d}")));
            }
            match wedge_product(mask, 1 << (j - 1)) {
                Some((m, s)) => {
                    mask = m;
                    sign *= s;
                }
                None => return Ok(()),
            }
        }
        self.accumulate(TermKey { wedge: mask, mono: mono.to_vec() }, coeff.scale_int(sign));
        Ok(())
    }

    pub(crate) fn accumulate(&mut self, key: TermKey, coeff: C) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn space(&self) -> &GradedSpaceSpec {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &[u32], wedge: &[usize]) -> C {
        let mask = wedge.iter().fold(0u32, |m, &j| m | 1 << (j - 1));
        self.terms.get(&TermKey { wedge: mask, mono: mono.to_vec() }).cloned().unwrap_or_else(C::zero)
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.accumulate(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Polyvector::zero(&self.space);
        for (key, c) in &self.terms {
            out.accumulate(key.clone(), c.clone() * k.clone());
        }
        out
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Polyvector<D> {
        let mut out = Polyvector::zero(&self.space);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), f(c));
        }
        out
    }

    /// Arities present.
    pub fn arities(&self) -> BTreeSet<usize> {
        self.terms.keys().map(TermKey::arity).collect()
    }

    /// The arity when all terms share it.
    pub fn arity(&self) -> Option<usize> {
        let a = self.arities();
        (a.len() == 1).then(|| *a.iter().next().unwrap())
    }

    /// Parity of the arity when all terms share it (zero counts as even).
    pub fn parity(&self) -> Option<usize> {
        let p: BTreeSet<usize> = self.arities().into_iter().map(|a| a % 2).collect();
        match p.len() {
            0 => Some(0),
            1 => p.into_iter().next(),
            _ => None,
        }
    }

    pub fn max_arity(&self) -> usize {
        self.arities().into_iter().max().unwrap_or(0)
    }

    pub fn max_poly_degree(&self) -> usize {
        self.terms.keys().map(|k| k.mono.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    /// Inner degrees present: `sum_{wedge} w - sum mono w`.
    pub fn inner_degrees(&self) -> BTreeSet<i64> {
        self.terms.keys().map(|k| self.space.wedge_degree(k.wedge) + self.space.mono_degree(&k.mono)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let mut terms: Vec<(&TermKey, &C)> = self.terms.iter().collect();
        terms.sort_by(|a, b| (a.0.wedge_list(), &a.0.mono).cmp(&(b.0.wedge_list(), &b.0.mono)));
        json!({
            "space": {"dims": self.space.dims},
            "terms": terms.iter().map(|(k, c)| json!({
                "coeff": c.to_text(),
                "mono": k.mono,
                "wedge": k.wedge_list(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl Polyvector<Rational> {
    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.to_string());
        let dims = value
            .pointer("/space/dims")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing space.dims"))?
            .iter()
            .map(|d| d.as_u64().map(|d| d as usize).ok_or_else(|| bad("dims must be nonnegative integers")))
            .collect::<Result<Vec<_>>>()?;
        let space = GradedSpaceSpec::new(dims)?;
        let mut p = Polyvector::zero(&space);
        for term in value.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))? {
            let coeff = match term.get("coeff") {
                Some(Value::String(s)) => parse_rational(s).ok_or_else(|| bad("coeff must be p/q"))?,
                Some(Value::Number(n)) if n.is_i64() => rational(n.as_i64().unwrap(), 1),
                _ => return Err(bad("coeff must be a string p/q")),
            };
            let ints = |field: &str| -> Result<Vec<u64>> {
                term.get(field)
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad(&format!("term lacks {field}")))?
                    .iter()
                    .map(|x| x.as_u64().ok_or_else(|| bad(&format!("{field} entries must be nonnegative integers"))))
                    .collect()
            };
            let mono: Vec<u32> = ints("mono")?.into_iter().map(|x| x as u32).collect();
            let wedge: Vec<usize> = ints("wedge")?.into_iter().map(|x| x as usize).collect();
            if wedge.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("wedge indices must be strictly increasing"));
            }
            p.add_term(coeff, &mono, &wedge)?;
        }
        Ok(p)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn to_f64(&self) -> Polyvector<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn convert<C: Scalar>(&self) -> Polyvector<C> {
        self.map_coeffs(C::from_rational)
    }
}

/// Accumulator for a product of tensor factors after all edges act:
/// coefficient, merged monomial, merged wedge, boundary derivatives.
pub(crate) struct Leaf<'a, C> {
    pub coeff: C,
    pub mono: Vec<u32>,
    pub wedge: u32,
    pub derivs: &'a [Vec<u32>],
}

/// Apply `mu . D_{e1} ... D_{ek}` to `factors (x) b_1 (x) ... (x) b_boundary`,
/// where boundary slots only collect the derivatives sent to them. Edges
/// are 1-based `(source, target)`.
pub(crate) fn contract<C: Scalar>(
    dim: usize,
    factors: &[&Polyvector<C>],
    boundary: usize,
    edges: &[(usize, Target)],
    emit: &mut dyn FnMut(Leaf<'_, C>),
) {
    let n = factors.len();
    let lists: Vec<Vec<(&TermKey, &C)>> = factors.iter().map(|p| p.terms.iter().collect()).collect();
    if lists.iter().any(Vec::is_empty) {
        return;
    }
    // Cheap filter: a vertex cannot send more edges than its widest term has directions.
    let mut out_degree = vec![0usize; n];
    for &(s, _) in edges {
        out_degree[s - 1] += 1;
    }
    if (0..n).any(|v| out_degree[v] > factors[v].max_arity()) {
        return;
    }
    let mut choice = vec![0usize; n];
    loop {
        let mut monos: Vec<Vec<u32>> = (0..n).map(|v| lists[v][choice[v]].0.mono.clone()).collect();
        let mut wedges: Vec<u32> = (0..n).map(|v| lists[v][choice[v]].0.wedge).collect();
        let mut derivs = vec![vec![0u32; dim]; boundary];
        let feasible = (0..n).all(|v| out_degree[v] <= wedges[v].count_ones() as usize);
        if feasible {
            let coeffs: Vec<&C> = (0..n).map(|v| lists[v][choice[v]].1).collect();
            descend(dim, edges, edges.len(), &mut monos, &mut wedges, &mut derivs, 1, &coeffs, emit);
        }
        // odometer
        let mut v = 0;
        loop {
            if v == n {
                return;
            }
            choice[v] += 1;
            if choice[v] < lists[v].len() {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn descend<C: Scalar>(
    dim: usize,
    edges: &[(usize, Target)],
    remaining: usize,
    monos: &mut [Vec<u32>],
    wedges: &mut [u32],
    derivs: &mut [Vec<u32>],
    mult: i64,
    coeffs: &[&C],
    emit: &mut dyn FnMut(Leaf<'_, C>),
) {
    if remaining == 0 {
        let mut mono = vec![0u32; dim];
        let mut wedge = 0u32;
        let mut sign = 1i64;
        for (m, &w) in monos.iter().zip(wedges.iter()) {
            for (a, b) in mono.iter_mut().zip(m) {
                *a += b;
            }
            match wedge_product(wedge, w) {
                Some((merged, s)) => {
                    wedge = merged;
                    sign *= s;
                }
                None => return,
            }
        }
        let mut coeff = C::from_int(mult * sign);
        for &c in coeffs {
            coeff = coeff * c.clone();
        }
        emit(Leaf { coeff, mono, wedge, derivs });
        return;
    }
    let (s, target) = edges[remaining - 1];
    let src = s - 1;
    let koszul: u32 = wedges[..src].iter().map(|w| w.count_ones()).sum();
    let koszul = if koszul % 2 == 0 { 1 } else { -1 };
    let source_wedge = wedges[src];
    for i in 0..dim {
        if source_wedge & (1 << i) == 0 {
            continue;
        }
        let sign = koszul * position_sign(source_wedge, i);
        match target {
            Target::Aerial(t) => {
                let e = monos[t - 1][i];
                if e == 0 {
                    continue;
                }
                monos[t - 1][i] -= 1;
                wedges[src] &= !(1 << i);
                descend(dim, edges, remaining - 1, monos, wedges, derivs, mult * sign * e as i64, coeffs, emit);
                wedges[src] |= 1 << i;
                monos[t - 1][i] += 1;
            }
            Target::Boundary(b) => {
                derivs[b - 1][i] += 1;
                wedges[src] &= !(1 << i);
                descend(dim, edges, remaining - 1, monos, wedges, derivs, mult * sign, coeffs, emit);
                wedges[src] |= 1 << i;
                derivs[b - 1][i] -= 1;
            }
        }
    }
}

fn check_inputs<C: Scalar>(n: usize, gammas: &[&Polyvector<C>]) -> Result<GradedSpaceSpec> {
    if gammas.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: gammas.len() });
    }
    let space = gammas.first().map(|g| g.space.clone()).ok_or(Error::LengthMismatch { expected: n, got: 0 })?;
    if gammas.iter().any(|g| g.space != space) {
        return Err(Error::SpaceMismatch);
    }
    Ok(space)
}

/// Operator of a directed graph on `1..=n` with arbitrary labels; vertex `v`
/// carries `gammas[v-1]` and edges act in the given order.
pub fn dag_operator<C: Scalar>(n: usize, edges: &[(usize, usize)], gammas: &[&Polyvector<C>]) -> Result<Polyvector<C>> {
    let space = check_inputs(n, gammas)?;
    let edges: Vec<(usize, Target)> = edges.iter().map(|&(s, t)| (s, Target::Aerial(t))).collect();
    let mut out = Polyvector::zero(&space);
    contract(space.dim(), gammas, 0, &edges, &mut |leaf| {
        out.accumulate(TermKey { wedge: leaf.wedge, mono: leaf.mono }, leaf.coeff);
    });
    Ok(out)
}

/// The operator `L_Gamma(gamma_1 (x) ... (x) gamma_n)` of an admissible graph.
pub fn apply_graph_operator<C: Scalar>(g: &AdmissibleGraph, gammas: &[&Polyvector<C>]) -> Result<Polyvector<C>> {
    dag_operator(g.n(), g.edges(), gammas)
}

/// Schouten bracket, `sum_i dA/dxi_i dB/dx_i + (-1)^{pq} dB/dxi_i dA/dx_i`
/// for arities `p`, `q`; equivalently the sum of both single-edge operators.
/// It satisfies `[b, a] = (-1)^{pq} [a, b]`, i.e. `-(-1)^{(deg a+1)(deg b+1)+1}`
/// in the Lie grading `deg = arity - 1`.
pub fn schouten<C: Scalar>(a: &Polyvector<C>, b: &Polyvector<C>) -> Result<Polyvector<C>> {
    let forward = dag_operator(2, &[(1, 2)], &[a, b])?;
    let backward = dag_operator(2, &[(2, 1)], &[a, b])?;
    forward.add(&backward)
}

/// How graph weights are assembled into `L_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Sum over every labeled DAG of weight times operator. Each admissible
    /// graph then enters with `W / (number of its admissible labelings)`
    /// after alternation.
    #[default]
    Natural,
    /// Signed sum over all `n!` permutations of `sum_Gamma W_Gamma L_Gamma`.
    Literal,
}

impl Normalization {
    pub fn token(self) -> &'static str {
        match self {
            Normalization::Natural => "natural",
            Normalization::Literal => "literal",
        }
    }
}

/// Keys of the connected admissible graphs feeding `L_n`.
pub fn required_keys(n: usize) -> Vec<String> {
    if n < 2 {
        return Vec::new();
    }
    enumerate_graphs(n, 2 * n - 3, true).iter().map(AdmissibleGraph::key).collect()
}

/// Koszul sign of listing items with the given parities in `order`.
pub fn koszul_sign(parities: &[usize], order: &[usize]) -> i64 {
    let mut odd_swaps = 0;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[i] > order[j] && parities[order[i]] % 2 == 1 && parities[order[j]] % 2 == 1 {
                odd_swaps += 1;
            }
        }
    }
    if odd_swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

fn parities<C: Scalar>(gammas: &[&Polyvector<C>]) -> Result<Vec<usize>> {
    gammas.iter().enumerate().map(|(i, g)| g.parity().ok_or(Error::Inhomogeneous(i + 1))).collect()
}

/// Taylor component `L_n`. `L_1 = 0`; `L_2` is the Schouten bracket.
pub fn taylor_l_n<C: Scalar>(gammas: &[&Polyvector<C>], weights: &WeightTable, norm: Normalization) -> Result<Polyvector<C>> {
    let n = gammas.len();
    let space = check_inputs(n, gammas)?;
    if n < 2 {
        return Ok(Polyvector::zero(&space));
    }
    let keys = required_keys(n);
    weights.require(&keys)?;
    let mut out = Polyvector::zero(&space);
    match norm {
        Normalization::Natural => {
            for dag in labeled_dags(n, 2 * n - 3, true) {
                let w: C = weights.scalar(&dag.canonical.key())?;
                if w.is_zero() {
                    continue;
                }
                let term = dag_operator(n, &dag.edges, gammas)?;
                out = out.add(&term.scale(&w.scale_int(dag.sign as i64)))?;
            }
        }
        Normalization::Literal => {
            let par = parities(gammas)?;
            let graphs = enumerate_graphs(n, 2 * n - 3, true);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut result = Ok(());
            crate::graphs::permute_all(&mut perm, 0, &mut |p| {
                if result.is_err() {
                    return;
                }
                let sign = koszul_sign(&par, p);
                let args: Vec<&Polyvector<C>> = p.iter().map(|&i| gammas[i]).collect();
                for g in &graphs {
                    let step = (|| -> Result<()> {
                        let w: C = weights.scalar(&g.key())?;
                        if !w.is_zero() {
                            let term = apply_graph_operator(g, &args)?;
                            out = out.add(&term.scale(&w.scale_int(sign)))?;
                        }
                        Ok(())
                    })();
                    if step.is_err() {
                        result = step;
                        return;
                    }
                }
            });
            result?;
        }
    }
    Ok(out)
}

/// Left side of the quadratic relation of order `N`:
/// `sum_{i+j=N+1} sum_{unshuffles (S, rest), |S|=i} eps L_j(L_i(x_S), x_rest)`,
/// with `eps` the Koszul sign of moving `x_S` to the front.
pub fn linfty_residual<C: Scalar>(
    big_n: usize,
    gs: &[&Polyvector<C>],
    weights: &WeightTable,
    norm: Normalization,
) -> Result<Polyvector<C>> {
    let space = check_inputs(big_n, gs)?;
    let par = parities(gs)?;
    let mut out = Polyvector::zero(&space);
    for i in 2..big_n {
        for subset in subsets(big_n, i) {
            let rest: Vec<usize> = (0..big_n).filter(|k| !subset.contains(k)).collect();
            let order: Vec<usize> = subset.iter().chain(&rest).copied().collect();
            let eps = koszul_sign(&par, &order);
            let inner_args: Vec<&Polyvector<C>> = subset.iter().map(|&k| gs[k]).collect();
            let inner = taylor_l_n(&inner_args, weights, norm)?;
            if inner.is_zero() {
                continue;
            }
            let mut outer_args: Vec<&Polyvector<C>> = vec![&inner];
            outer_args.extend(rest.iter().map(|&k| gs[k]));
            let term = taylor_l_n(&outer_args, weights, norm)?;
            out = out.add(&term.scale(&C::from_int(eps)))?;
        }
    }
    Ok(out)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

fn require_bivector<C: Scalar>(alpha: &Polyvector<C>) -> Result<()> {
    if alpha.arities().iter().all(|&a| a == 2) {
        Ok(())
    } else {
        Err(Error::NotBivector)
    }
}

/// True when some graph feeding `L_n` can act nontrivially on `n` copies of `alpha`.
pub fn order_contributes<C: Scalar>(alpha: &Polyvector<C>, n: usize) -> bool {
    let arity = vec![alpha.max_arity(); n];
    let degree = vec![alpha.max_poly_degree(); n];
    enumerate_graphs(n, 2 * n - 3, true).iter().any(|g| contribution_filter(g, &arity, &degree).unwrap_or(false))
}

/// Terms `(1/n!) L_n(alpha, ..., alpha)` of the quasi-Poisson equation for
/// `n = 2, 4, ..., 2 max_terms`, stopping once no graph can contribute.
pub fn quasi_poisson_residual<C: Scalar>(
    alpha: &Polyvector<C>,
    max_terms: usize,
    weights: &WeightTable,
    norm: Normalization,
) -> Result<Vec<(usize, Polyvector<C>)>> {
    require_bivector(alpha)?;
    let mut out = Vec::new();
    for k in 1..=max_terms {
        let n = 2 * k;
        if !order_contributes(alpha, n) {
            break;
        }
        let args = vec![alpha; n];
        let term = taylor_l_n(&args, weights, norm)?;
        let scale = C::from_rational(&rational(1, factorial(n) as i64));
        out.push((n, term.scale(&scale)));
    }
    Ok(out)
}

/// One isomorphism class of `G_{4,5}` in the obstruction.
#[derive(Clone, Debug)]
pub struct ShapeContribution<C> {
    pub shape: GraphShape,
    /// Sum of the weights of the admissible labelings of the shape.
    pub weight_sum: C,
    /// Whether the degree filter lets the shape act on the input.
    pub passes_filter: bool,
    /// Part of `(1/4!) L_4(alpha^4)` coming from this shape.
    pub value: Polyvector<C>,
}

#[derive(Clone, Debug)]
pub struct Obstruction<C> {
    pub shapes: Vec<ShapeContribution<C>>,
    pub total: Polyvector<C>,
}

/// `(1/4!) L_4(alpha^4)` split by graph shape.
pub fn first_obstruction<C: Scalar>(alpha: &Polyvector<C>, weights: &WeightTable, norm: Normalization) -> Result<Obstruction<C>> {
    require_bivector(alpha)?;
    weights.require(&required_keys(4))?;
    let arity = [alpha.max_arity(); 4];
    let degree = [alpha.max_poly_degree(); 4];
    let args = [alpha; 4];
    let mut total = Polyvector::zero(alpha.space());
    let mut shapes = Vec::new();
    for shape in crate::graphs::enumerate_shapes(4, 5, true) {
        let mut weight_sum = C::zero();
        let mut value = Polyvector::zero(alpha.space());
        // Every labeled DAG of the shape gives the same weight times operator
        // on equal even inputs; the natural sum has 4!/|Aut| of them.
        let copies = match norm {
            Normalization::Natural => rational(1, shape.labeling_count as i64),
            Normalization::Literal => rational(1, 1),
        };
        for g in &shape.labeled_graphs {
            let w: C = weights.scalar(&g.key())?;
            weight_sum = weight_sum + w.clone();
            let term = apply_graph_operator(g, &args)?;
            value = value.add(&term.scale(&(w * C::from_rational(&copies))))?;
        }
        let passes_filter = contribution_filter(&shape.representative, &arity, &degree)?;
        total = total.add(&value)?;
        shapes.push(ShapeContribution { shape, weight_sum, passes_filter, value });
    }
    Ok(Obstruction { shapes, total })
}

/// Random polyvector with `terms` terms of the given arity, coefficient
/// polynomial degree at most `max_degree`, and small integer coefficients.
pub fn random_polyvector<R: Rng + ?Sized>(
    space: &GradedSpaceSpec,
    arity: usize,
    max_degree: u32,
    terms: usize,
    rng: &mut R,
) -> Polyvector<Rational> {
    let d = space.dim();
    let mut p = Polyvector::zero(space);
    if arity > d {
        return p;
    }
    for _ in 0..terms {
        let mut wedge: Vec<usize> = (1..=d).collect();
        for i in (1..d).rev() {
            wedge.swap(i, rng.random_range(0..=i));
        }
        wedge.truncate(arity);
        let mut mono = vec![0u32; d];
        let degree = rng.random_range(0..=max_degree);
        for _ in 0..degree {
            mono[rng.random_range(0..d)] += 1;
        }
        let mut c = rng.random_range(-3i64..=3);
        if c == 0 {
            c = 1;
        }
        p.add_term(rational(c, 1), &mono, &wedge).expect("indices in range");
    }
    p
}

/// Random inputs of the given arities drawn from a seeded stream.
pub fn random_tuple(space: &GradedSpaceSpec, arities: &[usize], max_degree: u32, terms: usize, seed: u64) -> Vec<Polyvector> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    arities.iter().map(|&a| random_polyvector(space, a, max_degree, terms, &mut rng)).collect()
}

/// Render a polyvector as `coeff*x1^a*...*d1^d2` terms.
pub fn render<C: Scalar>(p: &Polyvector<C>) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (k, c) in &p.terms {
        let mut factors = Vec::new();
        for (j, &e) in k.mono.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(format!("x{}", j + 1)),
                _ => factors.push(format!("x{}^{}", j + 1, e)),
            }
        }
        let wedge: Vec<String> = k.wedge_list().iter().map(|j| format!("d{j}")).collect();
        if !wedge.is_empty() {
            factors.push(wedge.join("^"));
        }
        let coeff = c.to_text();
        parts.push(if factors.is_empty() { coeff } else { format!("{coeff}*{}", factors.join("*")) });
    }
    parts.join(" + ")
}

pub fn format_coeff(r: &Rational) -> String {
    format_rational(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn space(d: usize) -> GradedSpaceSpec {
        GradedSpaceSpec::new(vec![d]).unwrap()
    }

    fn pv(s: &GradedSpaceSpec, terms: &[(i64, &[u32], &[usize])]) -> Polyvector {
        let mut p = Polyvector::zero(s);
        for &(c, m, w) in terms {
            p.add_term(rational(c, 1), m, w).unwrap();
        }
        p
    }

    #[test]
    fn vector_field_commutator() {
        let s = space(2);
        let a = pv(&s, &[(1, &[1, 0], &[2])]);
        let b = pv(&s, &[(1, &[0, 1], &[1])]);
        let expected = pv(&s, &[(1, &[1, 0], &[1]), (-1, &[0, 1], &[2])]);
        assert_eq!(schouten(&a, &b).unwrap(), expected);
    }

    #[test]
    fn bivector_with_function() {
        let s = space(2);
        let pi = pv(&s, &[(1, &[0, 0], &[1, 2])]);
        let f = pv(&s, &[(1, &[1, 1], &[])]);
        // [d1^d2, x1 x2] = x2 d2 - x1 d1
        let expected = pv(&s, &[(1, &[0, 1], &[2]), (-1, &[1, 0], &[1])]);
        assert_eq!(schouten(&pi, &f).unwrap(), expected);
    }

    #[test]
    fn single_edge_example() {
        let s = space(2);
        let g1 = pv(&s, &[(1, &[0, 0], &[1])]);
        let g2 = pv(&s, &[(1, &[1, 0], &[2])]);
        let edge = AdmissibleGraph::new(2, vec![(1, 2)]).unwrap();
        assert_eq!(apply_graph_operator(&edge, &[&g1, &g2]).unwrap(), pv(&s, &[(1, &[0, 0], &[2])]));
    }

    #[test]
    fn wedge_signs() {
        let s = space(3);
        let p = pv(&s, &[(1, &[0, 0, 0], &[2, 1])]);
        assert_eq!(p.coefficient(&[0, 0, 0], &[1, 2]), rational(-1, 1));
        let q = pv(&s, &[(1, &[0, 0, 0], &[1, 1])]);
        assert!(q.is_zero());
        assert_eq!(wedge_product(0b001, 0b100), Some((0b101, 1)));
        assert_eq!(wedge_product(0b100, 0b011), Some((0b111, 1)));
        assert_eq!(wedge_product(0b010, 0b001), Some((0b011, -1)));
    }

    #[test]
    fn json_round_trip() {
        let s = GradedSpaceSpec::new(vec![2, 1]).unwrap();
        let p = pv(&s, &[(3, &[1, 0, 2], &[1, 3]), (-1, &[0, 0, 0], &[2])]);
        let text = p.to_json().to_string();
        assert_eq!(Polyvector::parse(&text).unwrap(), p);
        assert!(Polyvector::parse(r#"{"space":{"dims":[2]},"terms":[{"coeff":"1","mono":[0],"wedge":[1]}]}"#).is_err());
        assert!(Polyvector::parse(r#"{"space":{"dims":[2]},"terms":[{"coeff":"1","mono":[0,0],"wedge":[2,1]}]}"#).is_err());
    }

    #[test]
    fn inner_degree_of_graded_terms() {
        let s = GradedSpaceSpec::new(vec![1, 1]).unwrap();
        // x2 has weight 1: x2 d2 has inner degree 0, d2 alone has degree 1
        let p = pv(&s, &[(1, &[0, 1], &[2]), (1, &[0, 0], &[2])]);
        assert_eq!(p.inner_degrees(), [0, 1].into_iter().collect());
    }

    #[test]
    fn l2_is_schouten() {
        let s = space(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let table = WeightTable::single_edge();
        for _ in 0..20 {
            let a = random_polyvector(&s, rng.random_range(0..=3), 2, 3, &mut rng);
            let b = random_polyvector(&s, rng.random_range(0..=3), 2, 3, &mut rng);
            let l2 = taylor_l_n(&[&a, &b], &table, Normalization::Natural).unwrap();
            assert_eq!(l2, schouten(&a, &b).unwrap());
            let lit = taylor_l_n(&[&a, &b], &table, Normalization::Literal).unwrap();
            assert_eq!(lit, l2);
        }
    }

    #[test]
    fn missing_weights_are_named() {
        let s = space(2);
        let a = pv(&s, &[(1, &[1, 0], &[1, 2])]);
        let err = taylor_l_n(&[&a, &a, &a], &WeightTable::single_edge(), Normalization::Natural).unwrap_err();
        assert!(matches!(err, Error::MissingWeights(keys) if keys == vec!["g:n=3;e=(1,2)(1,3)(2,3)".to_string()]));
    }
}
