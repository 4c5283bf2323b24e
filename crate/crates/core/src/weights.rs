//! Graph weights: Monte-Carlo estimates over gauge-fixed charts, the closed
//! ladder formula, and a persistent text cache.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Chart};
use crate::graphs::{enumerate_graphs, AdmissibleGraph, TwoTypeGraph};
use crate::scalar::{factorial, format_rational, parse_rational, Rational};

/// Samples per independently seeded chunk. Fixed so results do not depend
/// on the number of worker threads.
pub const CHUNK: u64 = 1 << 14;
pub const MAX_SAMPLES: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Mean of the chart integrand.
    Mc,
    /// Mean of the local degree of the edge-angle map (one-type only).
    McDegree,
    Exact,
    ZeroByCycle,
}

impl Method {
    pub fn token(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::McDegree => "mc-degree",
            Method::Exact => "exact",
            Method::ZeroByCycle => "zero-by-cycle",
        }
    }

    pub fn parse(token: &str) -> Option<Method> {
        Some(match token {
            "mc" => Method::Mc,
            "mc-degree" => Method::McDegree,
            "exact" => Method::Exact,
            "zero-by-cycle" => Method::ZeroByCycle,
            _ => return None,
        })
    }

    pub fn is_sampled(self) -> bool {
        matches!(self, Method::Mc | Method::McDegree)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One-type estimator choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Estimator {
    Chart,
    #[default]
    Degree,
}

impl Estimator {
    pub fn method(self) -> Method {
        match self {
            Estimator::Chart => Method::Mc,
            Estimator::Degree => Method::McDegree,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightEstimate {
    pub key: String,
    pub method: Method,
    pub value: f64,
    /// Present for exact and zero-by-cycle records.
    pub exact: Option<Rational>,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl WeightEstimate {
    pub fn exact(key: String, value: Rational) -> Self {
        let method = if value.is_zero() { Method::ZeroByCycle } else { Method::Exact };
        Self::exact_with(key, method, value)
    }

    fn exact_with(key: String, method: Method, value: Rational) -> Self {
        WeightEstimate {
            key,
            method,
            value: crate::scalar::Scalar::to_f64(&value),
            exact: Some(value),
            stderr: 0.0,
            samples: 0,
            seed: 0,
        }
    }

    /// `|value - target| <= k * stderr`, with an absolute floor.
    pub fn agrees_with(&self, target: f64, k: f64, floor: f64) -> bool {
        (self.value - target).abs() <= (k * self.stderr).max(floor)
    }

    fn value_text(&self) -> String {
        match &self.exact {
            Some(r) => format_rational(r),
            None => format!("{:.17e}", self.value),
        }
    }
}

impl fmt::Display for WeightEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "{} {} {}", self.key, self.method, format_rational(r)),
            None => write!(
                f,
                "{} {} {:.6} +/- {:.6} (samples={}, seed={})",
                self.key, self.method, self.value, self.stderr, self.samples, self.seed
            ),
        }
    }
}

/// Mean and standard error of `f` over `samples` uniform points of the open
/// unit cube of dimension `dim`. Chunk `k` draws from a ChaCha8 stream
/// `(seed, k)` and chunk results are summed in chunk order.
pub fn monte_carlo<F>(dim: usize, samples: u64, seed: u64, f: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(Error::SampleBound(samples));
    }
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut u = vec![0.0; dim];
            // Welford accumulation inside the chunk.
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..count {
                for x in u.iter_mut() {
                    *x = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                }
                let v = f(&u);
                let delta = v - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (v - mean);
            }
            (count as f64, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in partial {
        let total = n + nb;
        let delta = mb - mean;
        mean += delta * nb / total;
        m2 += m2b + delta * delta * n * nb / total;
        n = total;
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

/// Weight of a one-type graph with `2n - 3` edges.
pub fn estimate_weight(g: &AdmissibleGraph, samples: u64, seed: u64) -> Result<WeightEstimate> {
    estimate_weight_with(g, samples, seed, Estimator::Chart)
}

pub fn estimate_weight_with(
    g: &AdmissibleGraph,
    samples: u64,
    seed: u64,
    estimator: Estimator,
) -> Result<WeightEstimate> {
    let dim = 2 * g.n() as isize - 3;
    if dim < 1 || g.edge_count() as isize != dim {
        return Err(Error::DimensionMismatch { edges: g.edge_count(), dim: dim.max(0) as usize });
    }
    let chart = Chart::one_type(g)?;
    let d = chart.dim;
    let (value, stderr) = match estimator {
        Estimator::Chart => {
            let scale = PI.powi(-(d as i32));
            monte_carlo(d, samples, seed, |u| {
                let (config, jac) = geometry::sample(&chart, u).expect("dimension checked");
                let v = geometry::integrand(g, &chart, &config).expect("dimension checked") * jac * scale;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            })?
        }
        Estimator::Degree => monte_carlo(d, samples, seed, |u| {
            let y: Vec<f64> = u.iter().map(|&x| -PI * x).collect();
            match geometry::angle_preimage(g, &chart, &y) {
                Some(config) => {
                    let det = geometry::integrand(g, &chart, &config).expect("dimension checked");
                    if det > 0.0 {
                        1.0
                    } else if det < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            }
        })?,
    };
    Ok(WeightEstimate { key: g.key(), method: estimator.method(), value, exact: None, stderr, samples, seed })
}

/// Closed formula `(-1)^{m+n} (3^{m+n+1} - 1) / ((m+n+1) 2^{m+n+1})` for the
/// ladder family.
pub fn ladder_weight_exact(m: u32, n: u32) -> Rational {
    let k = m + n + 1;
    let num = Pow::pow(BigInt::from(3), k) - BigInt::one();
    let den = BigInt::from(k) * Pow::pow(BigInt::from(2), k);
    let value = Rational::new(num, den);
    if (m + n) % 2 == 1 {
        -value
    } else {
        value
    }
}

/// Weight of a two-type graph with `2n + m - 2` edges under the modified
/// propagator; exactly 0 for graphs with an oriented cycle.
pub fn estimate_weight_two_type(g: &TwoTypeGraph, samples: u64, seed: u64) -> Result<WeightEstimate> {
    let dim = 2 * g.n() + g.m();
    if dim <= 2 || g.edge_count() + 2 != dim || g.n() == 0 {
        return Err(Error::DimensionMismatch { edges: g.edge_count(), dim: dim.saturating_sub(2) });
    }
    if g.has_cycle() {
        return Ok(WeightEstimate::exact_with(g.key(), Method::ZeroByCycle, Rational::zero()));
    }
    let chart = Chart::two_type(g)?;
    let d = chart.dim;
    let scale = PI.powi(-(d as i32)) / factorial(g.m()) as f64;
    let (value, stderr) = monte_carlo(d, samples, seed, |u| {
        let (config, jac) = geometry::sample(&chart, u).expect("dimension checked");
        let v = geometry::integrand_two_type(g, &chart, &config).expect("dimension checked") * jac * scale;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    })?;
    Ok(WeightEstimate { key: g.key(), method: Method::Mc, value, exact: None, stderr, samples, seed })
}

/// Append-only weight store, one tab-separated record per line:
/// `key method value stderr samples seed`. Later records win.
#[derive(Debug)]
pub struct WeightCache {
    path: Option<PathBuf>,
    records: Mutex<BTreeMap<String, WeightEstimate>>,
}

impl WeightCache {
    pub fn in_memory() -> Self {
        WeightCache { path: None, records: Mutex::new(BTreeMap::new()) }
    }

    /// Open (or lazily create) the cache file at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let io = |source| Error::CacheIo { path: path.display().to_string(), source };
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record = parse_record(&line).map_err(|reason| Error::CacheRecord { line: i + 1, reason })?;
                records.insert(record.key.clone(), record);
            }
        }
        Ok(WeightCache { path: Some(path), records: Mutex::new(records) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<WeightEstimate> {
        self.records.lock().expect("cache lock").get(key).cloned()
    }

    /// A stored record usable for a request with these sampling parameters.
    pub fn lookup(&self, key: &str, method: Method, samples: u64, seed: u64) -> Option<WeightEstimate> {
        self.get(key).filter(|r| {
            !r.method.is_sampled() || (r.method == method && r.samples == samples && r.seed == seed)
        })
    }

    pub fn insert(&self, record: WeightEstimate) -> Result<()> {
        let mut records = self.records.lock().expect("cache lock");
        if let Some(path) = &self.path {
            let io = |source| Error::CacheIo { path: path.display().to_string(), source };
            let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            writeln!(file, "{}", format_record(&record)).map_err(io)?;
        }
        records.insert(record.key.clone(), record);
        Ok(())
    }

    pub fn records(&self) -> Vec<WeightEstimate> {
        self.records.lock().expect("cache lock").values().cloned().collect()
    }
}

pub fn format_record(r: &WeightEstimate) -> String {
    format!("{}\t{}\t{}\t{:.17e}\t{}\t{}", r.key, r.method, r.value_text(), r.stderr, r.samples, r.seed)
}

pub fn parse_record(line: &str) -> std::result::Result<WeightEstimate, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 fields, found {}", fields.len()));
    }
    let method = Method::parse(fields[1]).ok_or_else(|| format!("unknown method {:?}", fields[1]))?;
    let stderr: f64 = fields[3].parse().map_err(|_| "bad stderr".to_string())?;
    let samples: u64 = fields[4].parse().map_err(|_| "bad sample count".to_string())?;
    let seed: u64 = fields[5].parse().map_err(|_| "bad seed".to_string())?;
    let (value, exact) = if method.is_sampled() {
        (fields[2].parse().map_err(|_| "bad value".to_string())?, None)
    } else {
        let r = parse_rational(fields[2]).ok_or("bad rational value")?;
        (crate::scalar::Scalar::to_f64(&r), Some(r))
    };
    Ok(WeightEstimate { key: fields[0].to_string(), method, value, exact, stderr, samples, seed })
}

/// Sampling parameters shared by table builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Sampling { samples, seed, estimator: Estimator::default() }
    }
}

/// Cached one-type weight: exact for the single edge, otherwise sampled.
pub fn cached_weight(g: &AdmissibleGraph, sampling: Sampling, cache: &WeightCache) -> Result<WeightEstimate> {
    let key = g.key();
    if g.n() == 2 {
        return Ok(WeightEstimate::exact(key, Rational::one()));
    }
    let method = sampling.estimator.method();
    if let Some(hit) = cache.lookup(&key, method, sampling.samples, sampling.seed) {
        return Ok(hit);
    }
    let estimate = estimate_weight_with(g, sampling.samples, sampling.seed, sampling.estimator)?;
    cache.insert(estimate.clone())?;
    Ok(estimate)
}

pub fn cached_weight_two_type(g: &TwoTypeGraph, sampling: Sampling, cache: &WeightCache) -> Result<WeightEstimate> {
    let key = g.key();
    if g.has_cycle() {
        return Ok(WeightEstimate::exact_with(key, Method::ZeroByCycle, Rational::zero()));
    }
    if g.n() == 1 && g.edge_count() == g.m() {
        return Ok(WeightEstimate::exact(key, crate::scalar::rational(1, crate::scalar::factorial(g.m()) as i64)));
    }
    if let Some(hit) = cache.lookup(&key, Method::Mc, sampling.samples, sampling.seed) {
        return Ok(hit);
    }
    let estimate = estimate_weight_two_type(g, sampling.samples, sampling.seed)?;
    cache.insert(estimate.clone())?;
    Ok(estimate)
}

/// Weights of every connected graph with `n` vertices and `2n - 3` edges,
/// keyed by canonical key.
pub fn weight_table(n: usize, sampling: Sampling, cache: &WeightCache) -> Result<BTreeMap<String, WeightEstimate>> {
    if n < 2 {
        return Err(Error::InvalidGraph("weight tables need n >= 2".into()));
    }
    let mut table = BTreeMap::new();
    for g in enumerate_graphs(n, 2 * n - 3, true) {
        table.insert(g.key(), cached_weight(&g, sampling, cache)?);
    }
    Ok(table)
}

/// Weights consumed by the algebra, keyed by canonical graph key. Each
/// entry owns a slot index so sensitivities can be traced back to it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<String, (u32, WeightEstimate)>,
    stderr: Vec<f64>,
}

impl WeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, estimate: WeightEstimate) {
        match self.entries.get_mut(&estimate.key) {
            Some((index, slot)) => {
                self.stderr[*index as usize] = estimate.stderr;
                *slot = estimate;
            }
            None => {
                let index = self.stderr.len() as u32;
                self.stderr.push(estimate.stderr);
                self.entries.insert(estimate.key.clone(), (index, estimate));
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&WeightEstimate> {
        self.entries.get(key).map(|(_, w)| w)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightEstimate> {
        self.entries.values().map(|(_, w)| w)
    }

    /// Standard errors indexed by slot, for [`crate::scalar::Sensitive::error_bound`].
    pub fn stderrs(&self) -> &[f64] {
        &self.stderr
    }

    /// The weight as a coefficient of ring `C`.
    pub fn scalar<C: crate::scalar::Scalar>(&self, key: &str) -> Result<C> {
        let (index, w) = self.entries.get(key).ok_or_else(|| Error::MissingWeights(vec![key.to_string()]))?;
        C::from_weight(w.value, w.exact.as_ref(), *index).ok_or_else(|| Error::InexactWeight(key.to_string()))
    }

    /// Fail with every key in `keys` that the table lacks.
    pub fn require<'a>(&self, keys: impl IntoIterator<Item = &'a String>) -> Result<()> {
        let missing: Vec<String> = keys.into_iter().filter(|k| !self.contains(k)).cloned().collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingWeights(missing))
        }
    }

    /// Table holding only the exact single-edge weight.
    pub fn single_edge() -> Self {
        let mut table = WeightTable::new();
        table.insert(WeightEstimate::exact("g:n=2;e=(1,2)".into(), Rational::one()));
        table
    }

    /// Add the connected one-type weights with `n` vertices.
    pub fn extend_one_type(&mut self, n: usize, sampling: Sampling, cache: &WeightCache) -> Result<()> {
        for (_, w) in weight_table(n, sampling, cache)? {
            self.insert(w);
        }
        Ok(())
    }
}

impl FromIterator<WeightEstimate> for WeightTable {
    fn from_iter<I: IntoIterator<Item = WeightEstimate>>(iter: I) -> Self {
        let mut table = WeightTable::new();
        for w in iter {
            table.insert(w);
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Target;
    use crate::scalar::rational;

    #[test]
    fn ladder_formula_values() {
        assert_eq!(ladder_weight_exact(0, 0), rational(1, 1));
        assert_eq!(ladder_weight_exact(1, 1), rational(13, 12));
        assert_eq!(ladder_weight_exact(2, 0), rational(13, 12));
        assert_eq!(ladder_weight_exact(1, 0), rational(-1, 1));
    }

    #[test]
    fn single_edge_weight_is_one() {
        let g = AdmissibleGraph::new(2, vec![(1, 2)]).unwrap();
        let w = estimate_weight(&g, 10_000, 1).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
        let w = estimate_weight_with(&g, 10_000, 1, Estimator::Degree).unwrap();
        assert_eq!(w.value, 1.0);
    }

    #[test]
    fn dimension_checks() {
        let g = AdmissibleGraph::new(3, vec![(1, 2)]).unwrap();
        assert!(matches!(estimate_weight(&g, 10, 1), Err(Error::DimensionMismatch { .. })));
        let single = AdmissibleGraph::new(2, vec![(1, 2)]).unwrap();
        assert!(matches!(estimate_weight(&single, 0, 1), Err(Error::SampleBound(0))));
        let lone = TwoTypeGraph::new(1, 0, vec![]).unwrap();
        assert!(estimate_weight_two_type(&lone, 10, 1).is_err());
    }

    #[test]
    fn cycle_weight_is_exactly_zero() {
        let g = TwoTypeGraph::with_any_labels(2, 0, vec![(1, Target::Aerial(2)), (2, Target::Aerial(1))]).unwrap();
        let w = estimate_weight_two_type(&g, 10, 1).unwrap();
        assert_eq!(w.method, Method::ZeroByCycle);
        assert_eq!(w.value, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let g = AdmissibleGraph::ladder(1, 0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| estimate_weight(&g, 50_000, 9).unwrap());
        let b = three.install(|| estimate_weight(&g, 50_000, 9).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn records_round_trip() {
        let exact = WeightEstimate::exact("g:n=2;e=(1,2)".into(), rational(1, 1));
        let sampled = WeightEstimate {
            key: "g:n=3;e=(1,2)(1,3)(2,3)".into(),
            method: Method::Mc,
            value: -0.0123456789,
            exact: None,
            stderr: 0.001,
            samples: 1000,
            seed: 5,
        };
        for r in [exact, sampled] {
            assert_eq!(parse_record(&format_record(&r)).unwrap(), r);
        }
        assert!(parse_record("a\tb").is_err());
    }
}
