//! Command-line front end: graph enumeration, weight estimation and the
//! algebraic checks, with text or JSON reports.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use formality::graphs::{enumerate_graphs, enumerate_shapes, AdmissibleGraph, TwoTypeGraph};
use formality::hochschild::{morphism_residual, morphism_weights, probe_outputs};
use formality::polyfields::{
    first_obstruction, linfty_residual, order_contributes, quasi_poisson_residual, random_tuple, render,
    GradedSpaceSpec, Normalization, Polyvector,
};
use formality::scalar::{assess, format_rational, Assessment, Sensitive};
use formality::weights::{
    estimate_weight_two_type, estimate_weight_with, ladder_weight_exact, Estimator, Sampling, WeightCache,
    WeightEstimate, WeightTable,
};
use formality::{Error, CALIBRATION, CONVENTIONS};
use serde_json::{json, Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "formality", version, about = "Graph weights and formality checks")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Weight cache file.
    #[arg(long, global = true, env = "FORMALITY_CACHE")]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Worker threads for sampling (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Residuals pass when within this many propagated error bounds.
    #[arg(long, global = true, default_value_t = 3.0, value_parser = positive)]
    pub tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, global = true, value_enum, default_value_t = EstimatorArg::Degree)]
    pub estimator: EstimatorArg,
    #[arg(long, global = true, value_enum, default_value_t = NormArg::Natural)]
    pub normalization: NormArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorArg {
    Chart,
    Degree,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormArg {
    Natural,
    Literal,
}

impl RunConfig {
    fn sampling(&self) -> Sampling {
        let estimator = match self.estimator {
            EstimatorArg::Chart => Estimator::Chart,
            EstimatorArg::Degree => Estimator::Degree,
        };
        Sampling { samples: self.samples, seed: self.seed, estimator }
    }

    fn normalization(&self) -> Normalization {
        match self.normalization {
            NormArg::Natural => Normalization::Natural,
            NormArg::Literal => Normalization::Literal,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Admissible graph enumeration.
    #[command(subcommand)]
    Graphs(GraphsCmd),
    /// Weight estimation.
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Algebraic checks; exit 1 when a residual exceeds tolerance.
    #[command(subcommand)]
    Check(CheckCmd),
}

#[derive(Subcommand, Debug)]
pub enum GraphsCmd {
    Enum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long)]
        connected: bool,
        /// Group labeled graphs by isomorphism class.
        #[arg(long)]
        shapes: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum WeightCmd {
    /// Sample the weight of one graph key (`g:` or `g2:`).
    Mc {
        #[arg(long)]
        graph: String,
    },
    /// Closed ladder formula.
    Ladder {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
    },
    /// Weights of all connected graphs with `n` vertices, by shape.
    Table {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum CheckCmd {
    /// Quadratic relation of order N on random inputs.
    Linfty {
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Input arities; alternates bivectors and vector fields when absent.
        #[arg(long, value_delimiter = ',')]
        arities: Option<Vec<usize>>,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 2)]
        terms: usize,
    },
    /// Quasi-Poisson equation for a bivector file.
    Poisson {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_terms: usize,
    },
    /// First obstruction for a bivector file, split by shape.
    Obstruction {
        #[arg(long)]
        input: PathBuf,
    },
    /// Morphism relation of order k on random inputs.
    Formality {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, value_delimiter = ',')]
        arities: Option<Vec<usize>>,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 2)]
        terms: usize,
    },
}

/// Rendered output and exit status of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Report {
    format: Format,
    text: String,
    doc: Map<String, Value>,
}

impl Report {
    fn new(format: Format) -> Self {
        Report { format, text: String::new(), doc: Map::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn set(&mut self, key: &str, value: Value) {
        self.doc.insert(key.to_string(), value);
    }

    fn header(&mut self, command: &str, config: &RunConfig) {
        let sampling = config.sampling();
        self.line(format!("command: {command}"));
        self.line(format!("calibration: {CALIBRATION}"));
        for (id, desc) in CONVENTIONS {
            self.line(format!("convention {id}: {desc}"));
        }
        self.line(format!("estimator: {}", sampling.estimator.method()));
        self.line(format!("normalization: {}", config.normalization().token()));
        self.line(format!("samples: {}", config.samples));
        self.line(format!("seed: {}", config.seed));
        self.line(format!("tolerance: {}", config.tolerance));
        self.set("command", json!(command));
        self.set("calibration", json!(CALIBRATION));
        self.set(
            "conventions",
            Value::Object(CONVENTIONS.iter().map(|(k, v)| (k.to_string(), json!(v))).collect()),
        );
        self.set("estimator", json!(sampling.estimator.method().token()));
        self.set("normalization", json!(config.normalization().token()));
        self.set("samples", json!(config.samples));
        self.set("seed", json!(config.seed));
        self.set("tolerance", json!(config.tolerance));
    }

    fn weights<'a>(&mut self, table: impl IntoIterator<Item = &'a WeightEstimate>) {
        let mut list = Vec::new();
        for w in table {
            self.line(format!("weight {}", weight_text(w)));
            list.push(weight_json(w));
        }
        self.set("weights", Value::Array(list));
    }

    fn finish(self) -> String {
        match self.format {
            Format::Text => self.text,
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&Value::Object(self.doc)).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

fn weight_text(w: &WeightEstimate) -> String {
    match &w.exact {
        Some(r) => format!("{} {} {}", w.key, format_rational(r), w.method),
        None => format!("{} {:.6} ± {:.6} {} samples={} seed={}", w.key, w.value, w.stderr, w.method, w.samples, w.seed),
    }
}

fn weight_json(w: &WeightEstimate) -> Value {
    json!({
        "key": w.key,
        "method": w.method.token(),
        "value": w.value,
        "exact": w.exact.as_ref().map(format_rational),
        "stderr": w.stderr,
        "samples": w.samples,
        "seed": w.seed,
    })
}

fn assessment_json(a: &Assessment) -> Value {
    json!({"norm": a.norm, "bound": a.bound, "worst_ratio": a.worst_ratio, "pass": a.pass})
}

fn assessment_text(a: &Assessment) -> String {
    format!(
        "norm={:.3e} bound={:.3e} ratio={:.3} {}",
        a.norm,
        a.bound,
        a.worst_ratio,
        if a.pass { "pass" } else { "FAIL" }
    )
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Parse arguments (including the program name) and run.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    if cli.config.workers > 0 {
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.config.workers).build_global();
    }
    match dispatch(&cli) {
        Ok((stdout, pass)) => Outcome { stdout, stderr: String::new(), code: if pass { EXIT_OK } else { EXIT_TOLERANCE } },
        Err(Failure::Usage(msg)) => Outcome { stdout: String::new(), stderr: format!("error: {msg}\n"), code: EXIT_USAGE },
        Err(Failure::Io(msg)) => Outcome { stdout: String::new(), stderr: format!("error: {msg}\n"), code: EXIT_IO },
    }
}

fn open_cache(config: &RunConfig) -> Result<WeightCache, Failure> {
    match &config.cache {
        Some(path) => Ok(WeightCache::open(path)?),
        None => Ok(WeightCache::in_memory()),
    }
}

fn dispatch(cli: &Cli) -> Result<(String, bool), Failure> {
    let config = &cli.config;
    match &cli.command {
        Command::Graphs(GraphsCmd::Enum { n, edges, connected, shapes }) => {
            Ok((cmd_graphs(*n, *edges, *connected, *shapes, config.format), true))
        }
        Command::Weight(cmd) => cmd_weight(cmd, config),
        Command::Check(cmd) => cmd_check(cmd, config),
    }
}

fn cmd_graphs(n: usize, edges: usize, connected: bool, shapes: bool, format: Format) -> String {
    let mut out = String::new();
    if !shapes {
        let graphs = enumerate_graphs(n, edges, connected);
        return match format {
            Format::Text => {
                for g in &graphs {
                    writeln!(out, "{}", g.key()).unwrap();
                }
                out
            }
            Format::Json => {
                let keys: Vec<String> = graphs.iter().map(AdmissibleGraph::key).collect();
                let mut s = serde_json::to_string_pretty(&json!({"graphs": keys, "count": keys.len()})).unwrap();
                s.push('\n');
                s
            }
        };
    }
    let groups = enumerate_shapes(n, edges, connected);
    let labeled: usize = groups.iter().map(|s| s.labeled_graphs.len()).sum();
    match format {
        Format::Text => {
            for s in &groups {
                writeln!(
                    out,
                    "shape {} labeling_count={} automorphisms={}",
                    s.representative.key(),
                    s.labeling_count,
                    s.automorphisms()
                )
                .unwrap();
                for g in &s.labeled_graphs {
                    writeln!(out, "  {}", g.key()).unwrap();
                }
            }
            writeln!(out, "shapes={} labeled={}", groups.len(), labeled).unwrap();
            out
        }
        Format::Json => {
            let list: Vec<Value> = groups
                .iter()
                .map(|s| {
                    json!({
                        "representative": s.representative.key(),
                        "labeling_count": s.labeling_count,
                        "automorphisms": s.automorphisms(),
                        "labeled_graphs": s.labeled_graphs.iter().map(AdmissibleGraph::key).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({"shapes": list, "labeled": labeled})).unwrap();
            s.push('\n');
            s
        }
    }
}

/// Sample one graph, reusing a cached record with the same method, samples and seed.
fn sample_key(key: &str, config: &RunConfig, cache: &WeightCache) -> Result<WeightEstimate, Failure> {
    let sampling = config.sampling();
    if key.starts_with("g2:") {
        let g = TwoTypeGraph::parse(key)?;
        if let Some(hit) = cache.lookup(key, formality::weights::Method::Mc, sampling.samples, sampling.seed) {
            return Ok(hit);
        }
        let w = estimate_weight_two_type(&g, sampling.samples, sampling.seed)?;
        cache.insert(w.clone())?;
        Ok(w)
    } else {
        let g = AdmissibleGraph::parse(key)?;
        if let Some(hit) = cache.lookup(key, sampling.estimator.method(), sampling.samples, sampling.seed) {
            return Ok(hit);
        }
        let w = estimate_weight_with(&g, sampling.samples, sampling.seed, sampling.estimator)?;
        cache.insert(w.clone())?;
        Ok(w)
    }
}

fn cmd_weight(cmd: &WeightCmd, config: &RunConfig) -> Result<(String, bool), Failure> {
    let mut r = Report::new(config.format);
    match cmd {
        WeightCmd::Mc { graph } => {
            let cache = open_cache(config)?;
            let w = sample_key(graph, config, &cache)?;
            r.header("weight mc", config);
            r.line(format!("graph: {}", w.key));
            r.line(format!("value: {:.6} ± {:.6}", w.value, w.stderr));
            r.line(format!("method: {}", w.method));
            r.set("graph", json!(w.key));
            r.set("weight", weight_json(&w));
        }
        WeightCmd::Ladder { m, n } => {
            let g = AdmissibleGraph::ladder(*m as usize, *n as usize);
            let value = format_rational(&ladder_weight_exact(*m, *n));
            r.line(format!("graph: {}", g.key()));
            r.line(format!("formula: {value}"));
            r.set("graph", json!(g.key()));
            r.set("formula", json!(value));
        }
        WeightCmd::Table { n } => {
            if *n < 2 {
                return Err(Failure::Usage("weight tables need n >= 2".into()));
            }
            let cache = open_cache(config)?;
            r.header("weight table", config);
            let mut shapes = Vec::new();
            let mut magnitudes = Vec::new();
            for shape in enumerate_shapes(*n, 2 * n - 3, true) {
                r.line(format!("shape {} labeling_count={}", shape.representative.key(), shape.labeling_count));
                let mut entries = Vec::new();
                let mut sum = 0.0;
                let mut var = 0.0;
                for g in &shape.labeled_graphs {
                    let w = if *n == 2 {
                        WeightEstimate::exact(g.key(), formality::scalar::rational(1, 1))
                    } else {
                        sample_key(&g.key(), config, &cache)?
                    };
                    r.line(format!("  {}", weight_text(&w)));
                    sum += w.value;
                    var += w.stderr * w.stderr;
                    magnitudes.push(w.value.abs());
                    entries.push(weight_json(&w));
                }
                r.line(format!("  sum {:.6} ± {:.6}", sum, var.sqrt()));
                shapes.push(json!({
                    "representative": shape.representative.key(),
                    "labeling_count": shape.labeling_count,
                    "weights": entries,
                    "sum": sum,
                    "sum_stderr": var.sqrt(),
                }));
            }
            magnitudes.sort_by(f64::total_cmp);
            let mags: Vec<String> = magnitudes.iter().map(|m| format!("{m:.6}")).collect();
            r.line(format!("magnitudes: {}", mags.join(" ")));
            r.set("shapes", Value::Array(shapes));
            r.set("magnitudes", json!(magnitudes));
        }
    }
    Ok((r.finish(), true))
}

fn read_bivector(path: &PathBuf) -> Result<Polyvector, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Polyvector::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn default_arities(count: usize, trial: usize) -> Vec<usize> {
    (0..count).map(|j| if trial % 2 == 0 { 2 } else { 1 + j % 2 }).collect()
}

fn coefficients(p: &Polyvector<Sensitive>) -> Vec<Sensitive> {
    p.terms().map(|(_, c)| c.clone()).collect()
}

fn cmd_check(cmd: &CheckCmd, config: &RunConfig) -> Result<(String, bool), Failure> {
    let sampling = config.sampling();
    let norm = config.normalization();
    let tol = config.tolerance;
    let mut r = Report::new(config.format);
    let mut pass = true;
    match cmd {
        CheckCmd::Linfty { big_n, dims, trials, arities, degree, terms } => {
            if *big_n < 3 {
                return Err(Failure::Usage("the relation needs N >= 3".into()));
            }
            let space = GradedSpaceSpec::new(dims.clone())?;
            let cache = open_cache(config)?;
            let mut table = WeightTable::single_edge();
            for n in 3..*big_n {
                table.extend_one_type(n, sampling, &cache)?;
            }
            r.header("check linfty", config);
            r.set("N", json!(big_n));
            r.weights(table.iter());
            let mut results = Vec::new();
            for t in 0..*trials {
                let ar = arities.clone().unwrap_or_else(|| default_arities(*big_n, t));
                if ar.len() != *big_n {
                    return Err(Failure::Usage(format!("expected {big_n} arities, got {}", ar.len())));
                }
                let inputs = random_tuple(&space, &ar, *degree, *terms, config.seed.wrapping_add(t as u64));
                let sens: Vec<Polyvector<Sensitive>> = inputs.iter().map(|p| p.convert()).collect();
                let refs: Vec<&Polyvector<Sensitive>> = sens.iter().collect();
                let res = linfty_residual(*big_n, &refs, &table, norm)?;
                let a = assess(&coefficients(&res), table.stderrs(), tol);
                pass &= a.pass;
                r.line(format!("trial {t} arities={ar:?} {}", assessment_text(&a)));
                results.push(json!({"trial": t, "arities": ar, "residual": assessment_json(&a)}));
            }
            r.set("trials", Value::Array(results));
        }
        CheckCmd::Poisson { input, max_terms } => {
            let alpha = read_bivector(input)?;
            let cache = open_cache(config)?;
            let mut table = WeightTable::single_edge();
            for k in 2..=*max_terms {
                if order_contributes(&alpha, 2 * k) {
                    table.extend_one_type(2 * k, sampling, &cache)?;
                }
            }
            r.header("check poisson", config);
            r.line(format!("input: {}", render(&alpha)));
            r.set("input", alpha.to_json());
            r.weights(table.iter());
            let a: Polyvector<Sensitive> = alpha.convert();
            let orders = quasi_poisson_residual(&a, *max_terms, &table, norm)?;
            let mut total = Polyvector::zero(a.space());
            let mut list = Vec::new();
            for (n, term) in &orders {
                let s = assess(&coefficients(term), table.stderrs(), tol);
                r.line(format!("order {n} {}", assessment_text(&s)));
                list.push(json!({"order": n, "term": assessment_json(&s)}));
                total = total.add(term)?;
            }
            let s = assess(&coefficients(&total), table.stderrs(), tol);
            pass &= s.pass;
            r.line(format!("total {}", assessment_text(&s)));
            r.set("orders", Value::Array(list));
            r.set("total", assessment_json(&s));
        }
        CheckCmd::Obstruction { input } => {
            let alpha = read_bivector(input)?;
            let cache = open_cache(config)?;
            let mut table = WeightTable::single_edge();
            table.extend_one_type(4, sampling, &cache)?;
            r.header("check obstruction", config);
            r.line(format!("input: {}", render(&alpha)));
            r.set("input", alpha.to_json());
            r.weights(table.iter());
            let a: Polyvector<Sensitive> = alpha.convert();
            let obs = first_obstruction(&a, &table, norm)?;
            let mut list = Vec::new();
            for s in &obs.shapes {
                let v = assess(&coefficients(&s.value), table.stderrs(), tol);
                let w = &s.weight_sum;
                r.line(format!(
                    "shape {} labeling_count={} weight_sum={:.6} ± {:.6} filter={} {}",
                    s.shape.representative.key(),
                    s.shape.labeling_count,
                    w.value,
                    w.error_bound(table.stderrs()),
                    if s.passes_filter { "pass" } else { "zero" },
                    assessment_text(&v)
                ));
                list.push(json!({
                    "representative": s.shape.representative.key(),
                    "labeling_count": s.shape.labeling_count,
                    "weight_sum": w.value,
                    "weight_sum_bound": w.error_bound(table.stderrs()),
                    "passes_filter": s.passes_filter,
                    "value": assessment_json(&v),
                }));
            }
            let t = assess(&coefficients(&obs.total), table.stderrs(), tol);
            pass &= t.pass;
            r.line(format!("total {}", assessment_text(&t)));
            r.set("shapes", Value::Array(list));
            r.set("total", assessment_json(&t));
        }
        CheckCmd::Formality { k, dims, trials, arities, degree, terms } => {
            if *k == 0 {
                return Err(Failure::Usage("k must be positive".into()));
            }
            let space = GradedSpaceSpec::new(dims.clone())?;
            let cache = open_cache(config)?;
            let patterns: Vec<Vec<usize>> = (0..*trials)
                .map(|t| arities.clone().unwrap_or_else(|| (0..*k).map(|j| 1 + (t + j) % 2).collect()))
                .collect();
            if let Some(bad) = patterns.iter().find(|p| p.len() != *k) {
                return Err(Failure::Usage(format!("expected {k} arities, got {}", bad.len())));
            }
            let mut table = WeightTable::new();
            for p in &patterns {
                for w in morphism_weights(p, sampling, &cache)?.iter() {
                    table.insert(w.clone());
                }
            }
            r.header("check formality", config);
            r.set("k", json!(k));
            r.weights(table.iter());
            let mut results = Vec::new();
            for (t, ar) in patterns.iter().enumerate() {
                let inputs = random_tuple(&space, ar, *degree, *terms, config.seed.wrapping_add(t as u64));
                let sens: Vec<Polyvector<Sensitive>> = inputs.iter().map(|p| p.convert()).collect();
                let refs: Vec<&Polyvector<Sensitive>> = sens.iter().collect();
                let res = morphism_residual(&refs, &table)?;
                let a = assess(&probe_outputs(&res)?, table.stderrs(), tol);
                pass &= a.pass;
                r.line(format!("trial {t} arities={ar:?} {}", assessment_text(&a)));
                results.push(json!({"trial": t, "arities": ar, "residual": assessment_json(&a)}));
            }
            r.set("trials", Value::Array(results));
        }
    }
    r.line(format!("status: {}", if pass { "pass" } else { "FAIL" }));
    r.set("pass", json!(pass));
    Ok((r.finish(), pass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_rejects_nonpositive_and_nonfinite() {
        assert_eq!(positive("2.5"), Ok(2.5));
        for bad in ["0", "-1", "inf", "NaN", "x"] {
            assert!(positive(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn global_options_after_subcommand() {
        let cli = Cli::try_parse_from(["formality", "weight", "ladder", "--m", "1", "--n", "2", "--seed", "9"]).unwrap();
        assert_eq!(cli.config.seed, 9);
        assert_eq!(cli.config.samples, 200_000);
        assert!(matches!(cli.command, Command::Weight(WeightCmd::Ladder { m: 1, n: 2 })));
    }

    #[test]
    fn default_arities_alternate() {
        assert_eq!(default_arities(3, 0), vec![2, 2, 2]);
        assert_eq!(default_arities(3, 1), vec![1, 2, 1]);
    }

    #[test]
    fn text_header_lists_conventions() {
        let cli = Cli::try_parse_from(["formality", "weight", "ladder", "--m", "1", "--n", "1"]).unwrap();
        let mut r = Report::new(Format::Text);
        r.header("weight ladder", &cli.config);
        let text = r.finish();
        assert!(text.starts_with("command: weight ladder\ncalibration: 0.5\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("convention ")).count(), CONVENTIONS.len());
    }

    #[test]
    fn exact_weights_print_as_rationals() {
        let w = WeightEstimate::exact("g:n=2;e=(1,2)".into(), formality::scalar::rational(1, 1));
        assert_eq!(weight_text(&w), "g:n=2;e=(1,2) 1 exact");
    }

    #[test]
    fn failures_map_to_exit_codes() {
        assert_eq!(run_args(["formality", "graphs", "enum", "--n", "2"]).code, EXIT_USAGE);
        assert_eq!(run_args(["formality", "graphs", "enum", "--n", "2", "--edges", "1"]).code, 0);
    }
}
