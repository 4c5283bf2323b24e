//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use formality::geometry::{modified_angle, C64};
use formality::graphs::{enumerate_graphs, enumerate_shapes, AdmissibleGraph, Target, TwoTypeGraph};
use formality::hochschild::{
    f_n_with, gerstenhaber, hkr, hoch_differential, morphism_residual, morphism_weights, probe_outputs,
    PolyDiffOperator,
};
use formality::polyfields::{
    apply_graph_operator, dag_operator, linfty_residual, quasi_poisson_residual, random_tuple, schouten, taylor_l_n,
    GradedSpaceSpec, Normalization, Polyvector,
};
use formality::scalar::{assess, rational, Rational, Sensitive};
use formality::weights::{
    estimate_weight_two_type, estimate_weight_with, ladder_weight_exact, Estimator, Sampling, WeightCache,
    WeightEstimate, WeightTable,
};
use num_bigint::BigInt;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(w: &WeightEstimate, target: f64) -> bool {
    w.agrees_with(target, 3.0, 1e-12)
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let elapsed = start.elapsed();
    if elapsed > limit {
        v.pass = false;
    }
    v.detail = format!("{} [{:.1}s, limit {}s]", v.detail, elapsed.as_secs_f64(), limit.as_secs());
    v
}

fn one_type(key: &str, samples: u64) -> WeightEstimate {
    let g = AdmissibleGraph::parse(key).expect("canonical key");
    estimate_weight_with(&g, samples, SEED, Estimator::Degree).expect("valid graph")
}

fn criterion_1() -> Verdict {
    timed(Duration::from_secs(60), || {
        let w = one_type("g:n=2;e=(1,2)", 1_000_000);
        let pass = within(&w, 1.0) && w.stderr <= 0.005;
        verdict(pass, format!("W = {:.6} ± {:.6} ({})", w.value, w.stderr, w.method))
    })
}

fn criterion_2() -> Verdict {
    timed(Duration::from_secs(900), || {
        let w = one_type("g:n=4;e=(1,2)(1,3)(2,3)(2,4)(3,4)", 1_000_000);
        let pass = within(&w, 13.0 / 12.0) && w.stderr <= 0.01;
        verdict(pass, format!("W = {:.5} ± {:.5}, target 13/12 = {:.5}", w.value, w.stderr, 13.0 / 12.0))
    })
}

/// Independent evaluation of `(-1)^{m+n} (3^{m+n+1} - 1) / ((m+n+1) 2^{m+n+1})`.
fn ladder_oracle(m: u32, n: u32) -> Rational {
    let k = m + n + 1;
    let num = BigInt::from(3).pow(k) - 1;
    let den = BigInt::from(k) * BigInt::from(2).pow(k);
    let r = Rational::new(num, den);
    if (m + n) % 2 == 0 {
        r
    } else {
        -r
    }
}

fn criterion_3() -> Verdict {
    let mut exact_ok = true;
    for total in 0..=6u32 {
        for m in 0..=total {
            exact_ok &= ladder_weight_exact(m, total - m) == ladder_oracle(m, total - m);
        }
    }
    let mut parts = vec![format!("formula {}", if exact_ok { "matches" } else { "differs" })];
    let mut mc_ok = true;
    for (m, n) in [(1usize, 1usize), (2, 0)] {
        let g = AdmissibleGraph::ladder(m, n);
        let w = one_type(&g.key(), 1_000_000);
        let target = formality::scalar::Scalar::to_f64(&ladder_weight_exact(m as u32, n as u32));
        let ok = within(&w, target);
        mc_ok &= ok;
        parts.push(format!("ladder({m},{n}) MC {:.5} ± {:.5} vs {:.5}", w.value, w.stderr, target));
    }
    verdict(exact_ok && mc_ok, parts.join("; "))
}

fn criterion_4() -> Verdict {
    let shapes = enumerate_shapes(4, 5, true);
    let mut magnitudes = Vec::new();
    println!("  G(4,5) weight table:");
    for s in &shapes {
        for g in &s.labeled_graphs {
            let w = one_type(&g.key(), 400_000);
            println!(
                "    {} labeling_count={} W={:+.5} ± {:.5}",
                g.key(),
                s.labeling_count,
                w.value,
                w.stderr
            );
            magnitudes.push(w);
        }
    }
    let found = |t: f64| magnitudes.iter().any(|w| (w.value.abs() - t).abs() <= 3.0 * w.stderr + 1e-12);
    let targets = [("13/12", 13.0 / 12.0), ("1/3", 1.0 / 3.0), ("7/12", 7.0 / 12.0)];
    let missing: Vec<&str> = targets.iter().filter(|(_, t)| !found(*t)).map(|(n, _)| *n).collect();
    let pass = shapes.len() == 7 && missing.is_empty();
    verdict(pass, format!("{} shapes (expected 7); magnitudes missing: {:?}", shapes.len(), missing))
}

fn random_operator(space: &GradedSpaceSpec, arity: usize, rng: &mut ChaCha8Rng) -> PolyDiffOperator {
    let d = space.dim();
    let mut op = PolyDiffOperator::zero(space, arity);
    for _ in 0..rng.random_range(1..=2) {
        let mut out = vec![0u32; d];
        for _ in 0..rng.random_range(0..=2) {
            out[rng.random_range(0..d)] += 1;
        }
        let derivs = (0..arity)
            .map(|_| {
                let mut b = vec![0u32; d];
                for _ in 0..rng.random_range(0..=2) {
                    b[rng.random_range(0..d)] += 1;
                }
                b
            })
            .collect();
        let c = rng.random_range(-3i64..=3);
        op.add_term(rational(if c == 0 { 1 } else { c }, 1), out, derivs).unwrap();
    }
    op
}

fn criterion_5() -> Verdict {
    timed(Duration::from_secs(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let cases = 100;
        let mut failures = Vec::new();
        let space = |rng: &mut ChaCha8Rng| GradedSpaceSpec::new(vec![rng.random_range(1..=3)]).unwrap();
        let table = WeightTable::single_edge();

        // graded Jacobi for the Schouten bracket
        let mut bad = 0;
        for c in 0..cases {
            let s = space(&mut rng);
            let ar: Vec<usize> = (0..3).map(|_| rng.random_range(0..=s.dim().min(3))).collect();
            let xs = random_tuple(&s, &ar, 2, 2, SEED + c);
            let refs: Vec<&Polyvector> = xs.iter().collect();
            bad += usize::from(!linfty_residual(3, &refs, &table, Normalization::Natural).unwrap().is_zero());
        }
        if bad > 0 {
            failures.push(format!("schouten jacobi {bad}"));
        }

        // L_2 equals the Schouten bracket
        let mut bad = 0;
        for c in 0..cases {
            let s = space(&mut rng);
            let ar: Vec<usize> = (0..2).map(|_| rng.random_range(0..=s.dim().min(3))).collect();
            let xs = random_tuple(&s, &ar, 2, 2, SEED + 1000 + c);
            let l2 = taylor_l_n(&[&xs[0], &xs[1]], &table, Normalization::Natural).unwrap();
            bad += usize::from(l2 != schouten(&xs[0], &xs[1]).unwrap());
        }
        if bad > 0 {
            failures.push(format!("l2 vs schouten {bad}"));
        }

        // Gerstenhaber Jacobi, d^2 = 0, d hkr = 0
        let (mut jac, mut dd, mut dh) = (0, 0, 0);
        for c in 0..cases {
            let s = space(&mut rng);
            let ops: Vec<PolyDiffOperator> = (0..3).map(|_| random_operator(&s, rng.random_range(0..=2), &mut rng)).collect();
            let (a, b, cc) = (&ops[0], &ops[1], &ops[2]);
            let (p, q) = (a.arity() as i64, b.arity() as i64);
            let lhs = gerstenhaber(a, &gerstenhaber(b, cc).unwrap()).unwrap();
            let sign = if ((p - 1) * (q - 1)).rem_euclid(2) == 0 { 1 } else { -1 };
            let rhs = gerstenhaber(&gerstenhaber(a, b).unwrap(), cc)
                .unwrap()
                .add(&gerstenhaber(b, &gerstenhaber(a, cc).unwrap()).unwrap().scale(&rational(sign, 1)))
                .unwrap();
            jac += usize::from(lhs.sub(&rhs).map(|r| !r.is_zero()).unwrap_or(true));
            dd += usize::from(!hoch_differential(&hoch_differential(a).unwrap()).unwrap().is_zero());
            let g = &random_tuple(&s, &[rng.random_range(0..=s.dim().min(3))], 2, 2, SEED + 2000 + c)[0];
            dh += usize::from(!hoch_differential(&hkr(g).unwrap()).unwrap().is_zero());
        }
        for (name, n) in [("gerstenhaber jacobi", jac), ("d^2", dd), ("d hkr", dh)] {
            if n > 0 {
                failures.push(format!("{name} {n}"));
            }
        }

        // inner degree of L_Gamma on homogeneous inputs, graded space (1,1,1)
        let graded = GradedSpaceSpec::new(vec![1, 1, 1]).unwrap();
        let mut bad = 0;
        for c in 0..cases {
            let n = rng.random_range(2..=4usize);
            let graphs = enumerate_graphs(n, 2 * n - 3, true);
            let g = &graphs[rng.random_range(0..graphs.len())];
            let xs: Vec<Polyvector> = (0..n)
                .map(|j| {
                    let a = rng.random_range(1..=3);
                    random_tuple(&graded, &[a], 2, 1, SEED + 3000 + c * 8 + j as u64).remove(0)
                })
                .collect();
            let refs: Vec<&Polyvector> = xs.iter().collect();
            let expected: i64 = xs.iter().map(|x| *x.inner_degrees().iter().next().unwrap()).sum();
            let out = apply_graph_operator(g, &refs).unwrap();
            bad += usize::from(out.inner_degrees().iter().any(|&d| d != expected));
            let _ = dag_operator(n, g.edges(), &refs).unwrap();
        }
        if bad > 0 {
            failures.push(format!("inner degree {bad}"));
        }
        verdict(failures.is_empty(), format!("6 suites x {cases} cases; failures: {failures:?}"))
    })
}

fn so3() -> Polyvector {
    let s = GradedSpaceSpec::new(vec![3]).unwrap();
    let mut p = Polyvector::zero(&s);
    p.add_term(rational(1, 1), &[0, 0, 1], &[1, 2]).unwrap();
    p.add_term(rational(1, 1), &[1, 0, 0], &[2, 3]).unwrap();
    p.add_term(rational(-1, 1), &[0, 1, 0], &[1, 3]).unwrap();
    p
}

fn criterion_6() -> Verdict {
    let mut inputs = vec![so3()];
    let s4 = GradedSpaceSpec::new(vec![4]).unwrap();
    for c in 0..4 {
        let raw = random_tuple(&s4, &[2], 1, 4, SEED + 50 + c).remove(0);
        let mut lin = Polyvector::zero(&s4);
        for (k, v) in raw.terms() {
            if k.mono.iter().sum::<u32>() == 1 {
                lin.add_term(v.clone(), &k.mono, &k.wedge_list()).unwrap();
            }
        }
        inputs.push(lin);
    }
    let mut nonzero_graphs = 0;
    let mut reduced = true;
    let mut table = WeightTable::single_edge();
    for g in enumerate_graphs(4, 5, true) {
        // any value works: every operator vanishes
        table.insert(WeightEstimate::exact(g.key(), rational(1, 7)));
    }
    for a in &inputs {
        for g in enumerate_graphs(4, 5, true) {
            nonzero_graphs += usize::from(!apply_graph_operator(&g, &[a, a, a, a]).unwrap().is_zero());
        }
        let orders = quasi_poisson_residual(a, 2, &table, Normalization::Natural).unwrap();
        let half = schouten(a, a).unwrap().scale(&rational(1, 2));
        let total = orders.iter().fold(Polyvector::zero(a.space()), |acc, (_, t)| acc.add(t).unwrap());
        reduced &= total == half;
    }
    verdict(
        nonzero_graphs == 0 && reduced,
        format!("{} linear bivectors: {nonzero_graphs} nonzero L_Gamma, quasi-Poisson = 1/2 {{a,a}}: {reduced}", inputs.len()),
    )
}

fn criterion_7() -> Verdict {
    timed(Duration::from_secs(1800), || {
        let s = GradedSpaceSpec::new(vec![2]).unwrap();
        let exact = WeightTable::single_edge();
        let mut n3_bad = 0;
        for c in 0..20 {
            let ar: Vec<usize> = (0..3).map(|j| 1 + ((c + j) % 2) as usize).collect();
            let xs = random_tuple(&s, &ar, 2, 3, SEED + 70 + c);
            let refs: Vec<&Polyvector> = xs.iter().collect();
            n3_bad += usize::from(!linfty_residual(3, &refs, &exact, Normalization::Natural).unwrap().is_zero());
        }
        let cache = WeightCache::in_memory();
        let sampling = Sampling { samples: 400_000, seed: SEED, estimator: Estimator::Degree };
        let mut table = WeightTable::single_edge();
        table.extend_one_type(3, sampling, &cache).unwrap();
        table.extend_one_type(4, sampling, &cache).unwrap();
        let mut worst: f64 = 0.0;
        let mut n5_fail = 0;
        let tuples = 10;
        for c in 0..tuples {
            let ar: Vec<usize> = (0..5).map(|j| if c % 2 == 0 { 2 } else { 1 + j % 2 }).collect();
            let xs = random_tuple(&s, &ar, 2, 3, SEED + 90 + c as u64);
            let sens: Vec<Polyvector<Sensitive>> = xs.iter().map(|x| x.convert()).collect();
            let refs: Vec<&Polyvector<Sensitive>> = sens.iter().collect();
            let res = linfty_residual(5, &refs, &table, Normalization::Natural).unwrap();
            let coeffs: Vec<Sensitive> = res.terms().map(|(_, v)| v.clone()).collect();
            let a = assess(&coeffs, table.stderrs(), 3.0);
            worst = worst.max(a.worst_ratio);
            n5_fail += usize::from(!a.pass);
        }
        verdict(
            n3_bad == 0 && n5_fail == 0,
            format!("N=3: {n3_bad}/20 nonzero; N=5: {n5_fail}/{tuples} over bound, worst |r|/bound {worst:.3}"),
        )
    })
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut border_max: f64 = 0.0;
    for _ in 0..1000 {
        let upper = C64::new(rng.random_range(-2.0..2.0), rng.random_range(0.1..2.0));
        let phi = rng.random_range(0.0..PI);
        let lower = C64::new(upper.re + upper.im * phi.cos(), upper.im * phi.sin());
        border_max = border_max.max(modified_angle(upper, lower).map(f64::abs).unwrap_or(f64::INFINITY));
    }
    // winding as `lower` runs once over the part of a small circle around
    // `upper` inside the domain, i.e. sin(phi) <= -r / (2 Im upper)
    let upper = C64::new(0.3, 1.0);
    let r = 0.2;
    let edge = (r / (2.0 * upper.im)).asin();
    let (start, end) = (PI + edge, 2.0 * PI - edge);
    let steps = 4000;
    let mut total = 0.0;
    let mut prev = modified_angle(upper, upper + C64::from_polar(r, start)).unwrap();
    for k in 1..=steps {
        let phi = start + (end - start) * k as f64 / steps as f64;
        let cur = modified_angle(upper, upper + C64::from_polar(r, phi)).unwrap();
        let mut d = cur - prev;
        d -= PI * (d / PI).round();
        total += d;
        prev = cur;
    }
    let winding = total / PI;
    let mut fans = Vec::new();
    let mut fans_ok = true;
    for k in 1..=3usize {
        let g = TwoTypeGraph::new(1, k, (1..=k).map(|b| (1, Target::Boundary(b))).collect()).unwrap();
        let w = estimate_weight_two_type(&g, 400_000, SEED).unwrap();
        let target = 1.0 / (1..=k).product::<usize>() as f64;
        fans_ok &= within(&w, target);
        fans.push(format!("W(1,{k}) = {:.5} ± {:.5}", w.value, w.stderr));
    }
    let pass = border_max <= 1e-9 && (winding.abs() - 1.0).abs() < 1e-6 && fans_ok;
    verdict(pass, format!("border max |theta| = {border_max:.1e}; winding {winding:.6}; {}", fans.join(", ")))
}

fn criterion_9() -> Verdict {
    let s = GradedSpaceSpec::new(vec![2]).unwrap();
    // sampled fan weights, so that f_1 = hkr is a measurement
    let mut fan_table = WeightTable::new();
    for k in 1..=2usize {
        let g = TwoTypeGraph::new(1, k, (1..=k).map(|b| (1, Target::Boundary(b))).collect()).unwrap();
        fan_table.insert(estimate_weight_two_type(&g, 400_000, SEED).unwrap());
    }
    let mut f1_ok = true;
    let mut k1_ok = true;
    for c in 0..6u64 {
        let arity = 1 + (c % 2) as usize;
        let g = random_tuple(&s, &[arity], 2, 3, SEED + 200 + c).remove(0);
        let gs: Polyvector<Sensitive> = g.convert();
        let f1 = f_n_with(&[&gs], &fan_table).unwrap();
        let h: PolyDiffOperator<Sensitive> = hkr(&g).unwrap().map_coeffs(|c| Sensitive::constant(formality::scalar::Scalar::to_f64(c)));
        let diff = f1.sub(&h).unwrap();
        let coeffs: Vec<Sensitive> = diff.terms().map(|(_, v)| v.clone()).collect();
        f1_ok &= assess(&coeffs, fan_table.stderrs(), 3.0).pass;
        let r = morphism_residual(&[&gs], &fan_table).unwrap();
        k1_ok &= assess(&probe_outputs(&r).unwrap(), fan_table.stderrs(), 3.0).pass;
    }
    let cache = WeightCache::in_memory();
    let sampling = Sampling { samples: 400_000, seed: SEED, estimator: Estimator::Degree };
    let mut k2_fail = 0;
    let mut worst: f64 = 0.0;
    let pairs = [[1usize, 1], [1, 1], [1, 1], [1, 1], [1, 1], [2, 1], [2, 2]];
    for (c, ar) in pairs.iter().enumerate() {
        let mut table = morphism_weights(ar, sampling, &cache).unwrap();
        for w in fan_table.iter() {
            table.insert(w.clone());
        }
        let xs = random_tuple(&s, ar, 2, 2, SEED + 300 + c as u64);
        let sens: Vec<Polyvector<Sensitive>> = xs.iter().map(|x| x.convert()).collect();
        let r = morphism_residual(&[&sens[0], &sens[1]], &table).unwrap();
        let a = assess(&probe_outputs(&r).unwrap(), table.stderrs(), 3.0);
        worst = worst.max(a.worst_ratio);
        k2_fail += usize::from(!a.pass);
    }
    verdict(
        f1_ok && k1_ok && k2_fail == 0,
        format!(
            "f_1 = hkr: {f1_ok}; k=1 residual: {k1_ok}; k=2: {k2_fail}/{} over bound (5 vector-field pairs + 2 with bivectors), worst ratio {worst:.3}",
            pairs.len()
        ),
    )
}

fn criterion_10() -> Verdict {
    let triangle = one_type("g:n=3;e=(1,2)(1,3)(2,3)", 400_000);
    let ladder = one_type(&AdmissibleGraph::ladder(1, 0).key(), 400_000);
    let formula = formality::scalar::Scalar::to_f64(&ladder_weight_exact(1, 0));
    let measured = triangle.stderr <= 0.01 && ladder.stderr <= 0.01;
    let vanish = triangle.value.abs() <= 3.0 * triangle.stderr && ladder.value.abs() <= 3.0 * ladder.stderr;
    let supports = if vanish {
        "odd-vertex vanishing"
    } else if within(&ladder, formula) {
        "closed ladder formula"
    } else {
        "neither"
    };
    verdict(
        measured,
        format!(
            "triangle {:+.5} ± {:.5}; ladder(1,0) {} {:+.5} ± {:.5} (formula {formula:+.4}); supports: {supports}",
            triangle.value,
            triangle.stderr,
            AdmissibleGraph::ladder(1, 0).key(),
            ladder.value,
            ladder.stderr
        ),
    )
}

fn cli(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_formality")).args(args).env_remove("FORMALITY_CACHE").output().unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn criterion_11() -> Verdict {
    let runs: &[&[&str]] = &[
        &["weight", "mc", "--graph", "g:n=4;e=(1,2)(1,3)(2,3)(2,4)(3,4)", "--samples", "100000", "--seed", "3"],
        &["weight", "mc", "--graph", "g2:n=2;m=1;e=(1,2)(1,b1)(2,b1)", "--samples", "100000", "--seed", "3"],
        &["--format", "json", "weight", "table", "--n", "3", "--samples", "50000"],
        &["check", "linfty", "--N", "5", "--trials", "2", "--samples", "50000"],
        &["check", "formality", "--k", "2", "--trials", "2", "--samples", "50000"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let a = cli(args);
        let b = cli(args);
        let mut one_worker = args.to_vec();
        one_worker.extend(["--workers", "1"]);
        let c = cli(&one_worker);
        if a != b || a != c || a.0.is_empty() {
            differing.push(args.join(" "));
        }
    }
    verdict(differing.is_empty(), format!("{} commands repeated and rerun on one worker; differing: {differing:?}", runs.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Verdict)> = vec![
        ("single-edge weight", criterion_1),
        ("example-1 weight", criterion_2),
        ("ladder oracle", criterion_3),
        ("G(4,5) census", criterion_4),
        ("exact algebra suite", criterion_5),
        ("linear-bivector lemma", criterion_6),
        ("L-infinity relations", criterion_7),
        ("modified propagator", criterion_8),
        ("f_1 = hkr and morphism", criterion_9),
        ("odd-vertex investigation", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        failed += usize::from(!v.pass);
        println!("criterion {:>2} {}: {} | {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, name, v.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
