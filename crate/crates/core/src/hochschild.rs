//! Polynomial algebra, Hochschild cochains as polydifferential operators,
//! the Gerstenhaber bracket, the HKR map and the two-type graph operators.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graphs::{Target, TwoTypeGraph};
use crate::polyfields::{contract, koszul_sign, subsets, taylor_l_n, GradedSpaceSpec, Normalization, Polyvector};
use crate::scalar::{factorial, rational, Rational, Scalar};
use crate::weights::{cached_weight_two_type, Sampling, WeightCache, WeightTable};

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C = Rational> {
    space: GradedSpaceSpec,
    terms: BTreeMap<Vec<u32>, C>,
}

fn add_into<K: Ord, C: Scalar>(map: &mut BTreeMap<K, C>, key: K, coeff: C) {
    if coeff.is_zero() {
        return;
    }
    match map.entry(key) {
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

/// `prod_j a_j! / (a_j - d_j)!`, or 0 when some `d_j > a_j`.
fn falling(a: &[u32], d: &[u32]) -> i64 {
    let mut out = 1i64;
    for (&a, &d) in a.iter().zip(d) {
        if d > a {
            return 0;
        }
        for k in 0..d {
            out *= (a - k) as i64;
        }
    }
    out
}

impl<C: Scalar> Polynomial<C> {
    pub fn zero(space: &GradedSpaceSpec) -> Self {
        Polynomial { space: space.clone(), terms: BTreeMap::new() }
    }

    pub fn monomial(space: &GradedSpaceSpec, coeff: C, mono: &[u32]) -> Result<Self> {
        if mono.len() != space.dim() {
            return Err(Error::LengthMismatch { expected: space.dim(), got: mono.len() });
        }
        let mut p = Polynomial::zero(space);
        add_into(&mut p.terms, mono.to_vec(), coeff);
        Ok(p)
    }

    pub fn space(&self) -> &GradedSpaceSpec {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &[u32]) -> C {
        self.terms.get(mono).cloned().unwrap_or_else(C::zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Polynomial::zero(&self.space);
        for (m, c) in &self.terms {
            add_into(&mut out.terms, m.clone(), c.clone() * k.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let mut out = Polynomial::zero(&self.space);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let m: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                add_into(&mut out.terms, m, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// `d^beta` of the polynomial.
    pub fn derivative(&self, beta: &[u32]) -> Self {
        let mut out = Polynomial::zero(&self.space);
        for (m, c) in &self.terms {
            let f = falling(m, beta);
            if f != 0 {
                let mono: Vec<u32> = m.iter().zip(beta).map(|(a, d)| a - d).collect();
                add_into(&mut out.terms, mono, c.scale_int(f));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }
}

/// One term `c x^out d^{derivs[0]} (x) ... (x) d^{derivs[l-1]}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpKey {
    pub out: Vec<u32>,
    pub derivs: Vec<Vec<u32>>,
}

/// An `arity`-cochain `f_1 (x) ... (x) f_l -> sum c x^out prod_s d^{derivs[s]} f_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyDiffOperator<C = Rational> {
    space: GradedSpaceSpec,
    arity: usize,
    terms: BTreeMap<OpKey, C>,
}

impl<C: Scalar> PolyDiffOperator<C> {
    pub fn zero(space: &GradedSpaceSpec, arity: usize) -> Self {
        PolyDiffOperator { space: space.clone(), arity, terms: BTreeMap::new() }
    }

    /// The multiplication `f (x) g -> fg`.
    pub fn multiplication(space: &GradedSpaceSpec) -> Self {
        let mut op = PolyDiffOperator::zero(space, 2);
        let z = vec![0; space.dim()];
        op.add_term(C::one(), z.clone(), vec![z.clone(), z]).expect("shapes match");
        op
    }

    pub fn identity(space: &GradedSpaceSpec) -> Self {
        let mut op = PolyDiffOperator::zero(space, 1);
        let z = vec![0; space.dim()];
        op.add_term(C::one(), z.clone(), vec![z]).expect("shapes match");
        op
    }

    /// A polynomial as a 0-cochain.
    pub fn from_polynomial(p: &Polynomial<C>) -> Self {
        let mut op = PolyDiffOperator::zero(&p.space, 0);
        for (m, c) in &p.terms {
            add_into(&mut op.terms, OpKey { out: m.clone(), derivs: Vec::new() }, c.clone());
        }
        op
    }

    pub fn add_term(&mut self, coeff: C, out: Vec<u32>, derivs: Vec<Vec<u32>>) -> Result<()> {
        let d = self.space.dim();
        if derivs.len() != self.arity {
            return Err(Error::LengthMismatch { expected: self.arity, got: derivs.len() });
        }
        if out.len() != d || derivs.iter().any(|b| b.len() != d) {
            return Err(Error::LengthMismatch { expected: d, got: out.len() });
        }
        add_into(&mut self.terms, OpKey { out, derivs }, coeff);
        Ok(())
    }

    pub fn space(&self) -> &GradedSpaceSpec {
        &self.space
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &C)> {
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

    pub fn coefficient(&self, out: &[u32], derivs: &[Vec<u32>]) -> C {
        self.terms.get(&OpKey { out: out.to_vec(), derivs: derivs.to_vec() }).cloned().unwrap_or_else(C::zero)
    }

    /// Sum; a zero operator adapts to the other operand's arity.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if self.arity != other.arity {
            return Err(Error::LengthMismatch { expected: self.arity, got: other.arity });
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&C::from_int(-1)))
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = PolyDiffOperator::zero(&self.space, self.arity);
        for (key, c) in &self.terms {
            add_into(&mut out.terms, key.clone(), c.clone() * k.clone());
        }
        out
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> PolyDiffOperator<D> {
        let mut out = PolyDiffOperator::zero(&self.space, self.arity);
        for (k, c) in &self.terms {
            add_into(&mut out.terms, k.clone(), f(c));
        }
        out
    }

    /// Inner degrees `-sum out w + sum derivs w` present.
    pub fn inner_degrees(&self) -> BTreeSet<i64> {
        self.terms
            .keys()
            .map(|k| self.space.mono_degree(&k.out) - k.derivs.iter().map(|b| self.space.mono_degree(b)).sum::<i64>())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, args: &[&Polynomial<C>]) -> Result<Polynomial<C>> {
        if args.len() != self.arity {
            return Err(Error::LengthMismatch { expected: self.arity, got: args.len() });
        }
        if args.iter().any(|a| a.space != self.space) {
            return Err(Error::SpaceMismatch);
        }
        let mut out = Polynomial::zero(&self.space);
        for (k, c) in &self.terms {
            let mut term = Polynomial::monomial(&self.space, c.clone(), &k.out)?;
            for (beta, f) in k.derivs.iter().zip(args) {
                term = term.mul(&f.derivative(beta))?;
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// `a o_i b`: `b` inserted into slot `i` (1-based) of `a`.
    pub fn insert(&self, i: usize, b: &Self) -> Result<Self> {
        if self.space != b.space {
            return Err(Error::SpaceMismatch);
        }
        assert!(i >= 1 && i <= self.arity, "slot {i} outside 1..={}", self.arity);
        let q = b.arity;
        let d = self.space.dim();
        let mut out = PolyDiffOperator::zero(&self.space, self.arity + q - 1);
        for (ka, ca) in &self.terms {
            let beta = &ka.derivs[i - 1];
            for (kb, cb) in &b.terms {
                // distribute beta over x^{out_b} and the q slots of b
                for_each_split(beta, q + 1, &mut |parts: &[Vec<u32>], multinomial: i64| {
                    let f = falling(&kb.out, &parts[0]);
                    if f == 0 {
                        return;
                    }
                    let mut out_mono = ka.out.clone();
                    for j in 0..d {
                        out_mono[j] += kb.out[j] - parts[0][j];
                    }
                    let mut derivs = Vec::with_capacity(out.arity);
                    derivs.extend(ka.derivs[..i - 1].iter().cloned());
                    for l in 0..q {
                        derivs.push(kb.derivs[l].iter().zip(&parts[l + 1]).map(|(x, y)| x + y).collect());
                    }
                    derivs.extend(ka.derivs[i..].iter().cloned());
                    let coeff = (ca.clone() * cb.clone()).scale_int(f * multinomial);
                    add_into(&mut out.terms, OpKey { out: out_mono, derivs }, coeff);
                });
            }
        }
        Ok(out)
    }

    /// `a o b = sum_i (-1)^{(i-1)(q-1)} a o_i b`.
    pub fn compose(&self, b: &Self) -> Result<Self> {
        let q = b.arity as i64;
        let mut out = PolyDiffOperator::zero(&self.space, (self.arity + b.arity).saturating_sub(1));
        for i in 1..=self.arity {
            let sign = if ((i as i64 - 1) * (q - 1)).rem_euclid(2) == 0 { 1 } else { -1 };
            out = out.add(&self.insert(i, b)?.scale(&C::from_int(sign)))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "space": {"dims": self.space.dims()},
            "arity": self.arity,
            "terms": self.terms.iter().map(|(k, c)| json!({
                "coeff": c.to_text(),
                "mono": k.out,
                "deriv": k.derivs,
            })).collect::<Vec<_>>(),
        })
    }
}

impl PolyDiffOperator<Rational> {
    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.to_string());
        let nums = |v: &Value| -> Result<Vec<u32>> {
            v.as_array()
                .ok_or_else(|| bad("expected an integer list"))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as u32).ok_or_else(|| bad("expected nonnegative integers")))
                .collect()
        };
        let dims = value.pointer("/space/dims").ok_or_else(|| bad("missing space.dims"))?;
        let space = GradedSpaceSpec::new(nums(dims)?.into_iter().map(|d| d as usize).collect())?;
        let arity = value.get("arity").and_then(Value::as_u64).ok_or_else(|| bad("missing arity"))? as usize;
        let mut op = PolyDiffOperator::zero(&space, arity);
        for term in value.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))? {
            let coeff = match term.get("coeff") {
                Some(Value::String(s)) => crate::scalar::parse_rational(s).ok_or_else(|| bad("bad coefficient"))?,
                Some(Value::Number(n)) => rational(n.as_i64().ok_or_else(|| bad("bad coefficient"))?, 1),
                _ => return Err(bad("missing coeff")),
            };
            let out = nums(term.get("mono").ok_or_else(|| bad("missing mono"))?)?;
            let derivs = term
                .get("deriv")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing deriv"))?
                .iter()
                .map(nums)
                .collect::<Result<Vec<_>>>()?;
            op.add_term(coeff, out, derivs)?;
        }
        Ok(op)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_json(&value)
    }
}

/// Visit every way of writing `beta = parts[0] + ... + parts[k-1]`, with the
/// multinomial coefficient `beta! / prod parts!`.
fn for_each_split(beta: &[u32], k: usize, visit: &mut dyn FnMut(&[Vec<u32>], i64)) {
    let d = beta.len();
    let mut parts = vec![vec![0u32; d]; k];
    fn rec(beta: &[u32], j: usize, parts: &mut Vec<Vec<u32>>, mult: i64, visit: &mut dyn FnMut(&[Vec<u32>], i64)) {
        if j == beta.len() {
            visit(parts, mult);
            return;
        }
        let k = parts.len();
        // compositions of beta[j] into k parts
        fn comp(
            left: u32,
            slot: usize,
            beta: &[u32],
            j: usize,
            parts: &mut Vec<Vec<u32>>,
            mult: i64,
            visit: &mut dyn FnMut(&[Vec<u32>], i64),
        ) {
            let k = parts.len();
            if slot == k - 1 {
                parts[slot][j] = left;
                let coeff = mult / (1..=left as i64).product::<i64>();
                rec(beta, j + 1, parts, coeff, visit);
                parts[slot][j] = 0;
                return;
            }
            for take in 0..=left {
                parts[slot][j] = take;
                let coeff = mult / (1..=take as i64).product::<i64>();
                comp(left - take, slot + 1, beta, j, parts, coeff, visit);
            }
            parts[slot][j] = 0;
        }
        let _ = k;
        let start = mult * (1..=beta[j] as i64).product::<i64>();
        comp(beta[j], 0, beta, j, parts, start, visit);
    }
    rec(beta, 0, &mut parts, 1, visit);
}

/// Gerstenhaber bracket `a o b - (-1)^{(p-1)(q-1)} b o a`.
pub fn gerstenhaber<C: Scalar>(a: &PolyDiffOperator<C>, b: &PolyDiffOperator<C>) -> Result<PolyDiffOperator<C>> {
    let (p, q) = (a.arity as i64, b.arity as i64);
    let sign = if ((p - 1) * (q - 1)).rem_euclid(2) == 0 { 1 } else { -1 };
    let ab = a.compose(b)?;
    let ba = b.compose(a)?;
    ab.sub(&ba.scale(&C::from_int(sign)))
}

/// Hochschild differential `d a = [mu, a]`.
pub fn hoch_differential<C: Scalar>(a: &PolyDiffOperator<C>) -> Result<PolyDiffOperator<C>> {
    gerstenhaber(&PolyDiffOperator::multiplication(&a.space), a)
}

/// HKR map `f_1 (x) ... (x) f_k -> (1/k!) gamma(df_1 ^ ... ^ df_k)`.
pub fn hkr<C: Scalar>(gamma: &Polyvector<C>) -> Result<PolyDiffOperator<C>> {
    let space = gamma.space();
    let k = match gamma.arity() {
        Some(k) => k,
        None if gamma.is_zero() => 0,
        None => return Err(Error::Inhomogeneous(1)),
    };
    let d = space.dim();
    let scale = C::from_rational(&rational(1, factorial(k) as i64));
    let mut op = PolyDiffOperator::zero(space, k);
    for (key, c) in gamma.terms() {
        let idx = key.wedge_list();
        let mut perm: Vec<usize> = (0..k).collect();
        crate::graphs::permute_all(&mut perm, 0, &mut |p| {
            let sign = crate::graphs::sort_sign(p) as i64;
            let derivs: Vec<Vec<u32>> = p
                .iter()
                .map(|&a| {
                    let mut b = vec![0u32; d];
                    b[idx[a] - 1] = 1;
                    b
                })
                .collect();
            add_into(&mut op.terms, OpKey { out: key.mono.clone(), derivs }, (c.clone() * scale.clone()).scale_int(sign));
        });
    }
    Ok(op)
}

/// Sign `(-1)^{p(p-1)/2}` relating the graph operators to the HKR
/// normalization on `p`-cochains.
pub fn twist_sign(p: usize) -> i64 {
    if (p * p.saturating_sub(1) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn twist<C: Scalar>(op: &PolyDiffOperator<C>) -> PolyDiffOperator<C> {
    op.scale(&C::from_int(twist_sign(op.arity)))
}

/// Operator `U_Gamma(gamma_1, ..., gamma_n)` of a two-type graph, as the
/// contraction of the inputs along edges with boundary vertex `b_j`
/// collecting the derivatives applied to argument `j`. Terms in which a
/// vertex keeps unused directions are dropped.
pub fn u_gamma<C: Scalar>(g: &TwoTypeGraph, gammas: &[&Polyvector<C>]) -> Result<PolyDiffOperator<C>> {
    if gammas.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), got: gammas.len() });
    }
    let space = gammas.first().map(|p| p.space().clone()).ok_or(Error::LengthMismatch { expected: 1, got: 0 })?;
    if gammas.iter().any(|p| *p.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let mut op = PolyDiffOperator::zero(&space, g.m());
    if g.has_cycle() {
        return Ok(op);
    }
    contract(space.dim(), gammas, g.m(), g.edges(), &mut |leaf| {
        if leaf.wedge == 0 {
            add_into(&mut op.terms, OpKey { out: leaf.mono, derivs: leaf.derivs.to_vec() }, leaf.coeff);
        }
    });
    Ok(op)
}

/// A labeled two-type graph entering `F_n`, with its admissible relabeling
/// and the sign of the induced edge reordering.
#[derive(Clone, Debug)]
pub struct GraphTerm {
    pub graph: TwoTypeGraph,
    pub canonical: TwoTypeGraph,
    pub sign: i32,
}

/// Acyclic two-type graphs whose aerial vertex `v` has out-degree
/// `out_degrees[v-1]`, with `m = sum - 2n + 2` boundary vertices and every
/// vertex touched by an edge (other graphs have weight 0).
pub fn two_type_graphs(out_degrees: &[usize]) -> Vec<GraphTerm> {
    let n = out_degrees.len();
    let total: usize = out_degrees.iter().sum();
    if n == 0 || total + 2 < 2 * n {
        return Vec::new();
    }
    let m = total + 2 - 2 * n;
    if n == 1 && m == 0 {
        return Vec::new();
    }
    let options: Vec<Vec<Vec<Target>>> = (1..=n)
        .map(|v| {
            let targets: Vec<Target> = (1..=n)
                .filter(|&a| a != v)
                .map(Target::Aerial)
                .chain((1..=m).map(Target::Boundary))
                .collect();
            subsets(targets.len(), out_degrees[v - 1])
                .into_iter()
                .map(|s| s.into_iter().map(|i| targets[i]).collect())
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    if options.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let edges: Vec<(usize, Target)> =
            (0..n).flat_map(|v| options[v][choice[v]].iter().map(move |&t| (v + 1, t))).collect();
        let mut touched_aerial = vec![false; n];
        let mut touched_boundary = vec![false; m];
        for &(s, t) in &edges {
            touched_aerial[s - 1] = true;
            match t {
                Target::Aerial(a) => touched_aerial[a - 1] = true,
                Target::Boundary(b) => touched_boundary[b - 1] = true,
            }
        }
        if touched_aerial.iter().all(|&x| x) && touched_boundary.iter().all(|&x| x) {
            let graph = TwoTypeGraph::with_any_labels(n, m, edges).expect("valid endpoints");
            if let Some((canonical, _, sign)) = graph.canonical_relabeling() {
                out.push(GraphTerm { graph, canonical, sign });
            }
        }
        let mut v = 0;
        loop {
            if v == n {
                return out;
            }
            choice[v] += 1;
            if choice[v] < options[v].len() {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}

fn input_arities<C: Scalar>(gammas: &[&Polyvector<C>]) -> Result<Vec<usize>> {
    gammas
        .iter()
        .enumerate()
        .map(|(i, g)| match g.arity() {
            Some(a) => Ok(a),
            None if g.is_zero() => Ok(0),
            None => Err(Error::Inhomogeneous(i + 1)),
        })
        .collect()
}

/// Canonical two-type graphs whose weights `F_n` needs on inputs of these arities.
pub fn required_two_type(arities: &[usize]) -> Vec<TwoTypeGraph> {
    let set: BTreeSet<TwoTypeGraph> = two_type_graphs(arities).into_iter().map(|t| t.canonical).collect();
    set.into_iter().collect()
}

/// Estimate (or fetch) the two-type weights needed by `F_n` on these arities.
pub fn two_type_weights(arities: &[usize], sampling: Sampling, cache: &WeightCache, table: &mut WeightTable) -> Result<()> {
    for g in required_two_type(arities) {
        if !table.contains(&g.key()) {
            table.insert(cached_weight_two_type(&g, sampling, cache)?);
        }
    }
    Ok(())
}

/// Every weight `morphism_residual` needs on inputs of these arities:
/// one-type weights up to `n = k` and two-type weights for each `F` call.
pub fn morphism_weights(arities: &[usize], sampling: Sampling, cache: &WeightCache) -> Result<WeightTable> {
    let k = arities.len();
    let mut table = WeightTable::single_edge();
    for n in 3..=k {
        table.extend_one_type(n, sampling, cache)?;
    }
    let mut lists: BTreeSet<Vec<usize>> = BTreeSet::new();
    for size in 1..=k {
        for s in subsets(k, size) {
            let chosen: Vec<usize> = s.iter().map(|&x| arities[x]).collect();
            lists.insert(chosen.clone());
            let total: usize = chosen.iter().sum();
            if size >= 2 && total + 3 >= 2 * size {
                let edges = 2 * size - 3;
                let mut list = vec![total - edges];
                list.extend((0..k).filter(|x| !s.contains(x)).map(|x| arities[x]));
                lists.insert(list);
            }
        }
    }
    for list in lists {
        two_type_weights(&list, sampling, cache, &mut table)?;
    }
    Ok(table)
}

/// `F_n` in the label-summed form: every labeled graph contributes its
/// weight times its operator. A function under `n = 1` maps to itself.
pub fn f_n_natural<C: Scalar>(gammas: &[&Polyvector<C>], weights: &WeightTable) -> Result<PolyDiffOperator<C>> {
    let n = gammas.len();
    let arities = input_arities(gammas)?;
    let space = gammas.first().map(|p| p.space().clone()).ok_or(Error::LengthMismatch { expected: 1, got: 0 })?;
    let m = (arities.iter().sum::<usize>() + 2).saturating_sub(2 * n);
    let mut out = PolyDiffOperator::zero(&space, m);
    if gammas.iter().any(|g| g.is_zero()) {
        return Ok(out);
    }
    if n == 1 && arities[0] == 0 {
        let mut op = PolyDiffOperator::zero(&space, 0);
        for (k, c) in gammas[0].terms() {
            add_into(&mut op.terms, OpKey { out: k.mono.clone(), derivs: Vec::new() }, c.clone());
        }
        return Ok(op);
    }
    let terms = two_type_graphs(&arities);
    weights.require(&terms.iter().map(|t| t.canonical.key()).collect::<BTreeSet<_>>())?;
    for t in terms {
        let w: C = weights.scalar(&t.canonical.key())?;
        if w.is_zero() {
            continue;
        }
        let u = u_gamma(&t.graph, gammas)?;
        out = out.add(&u.scale(&w.scale_int(t.sign as i64)))?;
    }
    Ok(out)
}

/// Morphism component `f_n = twist(F_n)`, normalized so that `f_1 = hkr`.
pub fn f_n_with<C: Scalar>(gammas: &[&Polyvector<C>], weights: &WeightTable) -> Result<PolyDiffOperator<C>> {
    Ok(twist(&f_n_natural(gammas, weights)?))
}

/// `f_n` with weights estimated on demand through the cache.
pub fn f_n(gammas: &[&Polyvector], sampling: Sampling, cache: &WeightCache) -> Result<PolyDiffOperator<f64>> {
    let arities = input_arities(gammas)?;
    let mut table = WeightTable::new();
    two_type_weights(&arities, sampling, cache, &mut table)?;
    let inputs: Vec<Polyvector<f64>> = gammas.iter().map(|g| g.to_f64()).collect();
    let refs: Vec<&Polyvector<f64>> = inputs.iter().collect();
    f_n_with(&refs, &table)
}

/// Degree-one shifted differential `Q1(A) = -dA`.
pub fn q1<C: Scalar>(a: &PolyDiffOperator<C>) -> Result<PolyDiffOperator<C>> {
    Ok(hoch_differential(a)?.scale(&C::from_int(-1)))
}

/// Shifted bracket `Q2(A, B) = (-1)^{p-1} [A, B]` for a `p`-cochain `A`.
pub fn q2<C: Scalar>(a: &PolyDiffOperator<C>, b: &PolyDiffOperator<C>) -> Result<PolyDiffOperator<C>> {
    let sign = if a.arity % 2 == 1 { 1 } else { -1 };
    Ok(gerstenhaber(a, b)?.scale(&C::from_int(sign)))
}

/// Left side minus right side of the morphism relation of order `k`:
/// `sum eps F(L_i(x_S), x_rest) - Q1 F_k(x) - 1/2 sum_{S,T} eps Q2(F(x_S), F(x_T))`,
/// for the label-summed components, reported after the HKR twist.
/// `weights` must hold the one-type weights for `L_i` and the two-type
/// weights for every `F` that appears.
pub fn morphism_residual<C: Scalar>(gammas: &[&Polyvector<C>], weights: &WeightTable) -> Result<PolyDiffOperator<C>> {
    let k = gammas.len();
    let space = gammas.first().map(|p| p.space().clone()).ok_or(Error::LengthMismatch { expected: 1, got: 0 })?;
    let par: Vec<usize> = input_arities(gammas)?.into_iter().map(|a| a % 2).collect();
    let mut out = PolyDiffOperator::zero(&space, 0);
    for i in 2..=k {
        for s in subsets(k, i) {
            let rest: Vec<usize> = (0..k).filter(|x| !s.contains(x)).collect();
            let order: Vec<usize> = s.iter().chain(&rest).copied().collect();
            let eps = koszul_sign(&par, &order);
            let inner_args: Vec<&Polyvector<C>> = s.iter().map(|&x| gammas[x]).collect();
            let inner = taylor_l_n(&inner_args, weights, Normalization::Natural)?;
            if inner.is_zero() {
                continue;
            }
            let mut args: Vec<&Polyvector<C>> = vec![&inner];
            args.extend(rest.iter().map(|&x| gammas[x]));
            out = out.add(&f_n_natural(&args, weights)?.scale(&C::from_int(eps)))?;
        }
    }
    out = out.sub(&q1(&f_n_natural(gammas, weights)?)?)?;
    let half = C::from_rational(&rational(1, 2));
    for size in 1..k {
        for s in subsets(k, size) {
            let rest: Vec<usize> = (0..k).filter(|x| !s.contains(x)).collect();
            let order: Vec<usize> = s.iter().chain(&rest).copied().collect();
            let eps = koszul_sign(&par, &order);
            let left: Vec<&Polyvector<C>> = s.iter().map(|&x| gammas[x]).collect();
            let right: Vec<&Polyvector<C>> = rest.iter().map(|&x| gammas[x]).collect();
            let a = f_n_natural(&left, weights)?;
            let b = f_n_natural(&right, weights)?;
            out = out.sub(&q2(&a, &b)?.scale(&half.scale_int(eps)))?;
        }
    }
    Ok(twist(&out))
}

/// Every monomial of total degree at most `max_degree`.
pub fn monomials(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; dim]];
    for _ in 0..max_degree {
        let mut next = out.clone();
        for m in &out {
            for j in 0..dim {
                let mut e = m.clone();
                e[j] += 1;
                next.push(e);
            }
        }
        next.sort();
        next.dedup();
        out = next;
    }
    out
}

/// Output coefficients of `op` on every tuple of probe monomials of degree
/// at most 2; the operator norm is their largest absolute value.
pub fn probe_outputs<C: Scalar>(op: &PolyDiffOperator<C>) -> Result<Vec<C>> {
    let space = op.space().clone();
    let probes: Vec<Polynomial<C>> =
        monomials(space.dim(), 2).iter().map(|m| Polynomial::monomial(&space, C::one(), m)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut idx = vec![0usize; op.arity()];
    loop {
        let args: Vec<&Polynomial<C>> = idx.iter().map(|&i| &probes[i]).collect();
        out.extend(op.apply(&args)?.terms().map(|(_, c)| c.clone()));
        let mut v = 0;
        loop {
            if v == idx.len() {
                return Ok(out);
            }
            idx[v] += 1;
            if idx[v] < probes.len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}
