//! End-to-end acceptance criteria. Each test prints one PASS/FAIL line.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use lpbound::bounds::{log_bound, preset_bound, validity_check, Cone, Preset, SigmaInequality, Validity};
use lpbound::entropy_cone::step_function;
use lpbound::evaluator::{brute_force_join, generic_join, partitioned_evaluate, DEFAULT_BUDGET};
use lpbound::query::stats::{json_rational, log2_bound};
use lpbound::relalg::generate::{power_law_graph, random_relation};
use lpbound::relalg::{degree_sequence, empirical_entropy, generate_alpha_beta, lp_norm};
use lpbound::scalar::{frac, int, ratio_to_f64};
use lpbound::seqnorm::{power_sums_to_sequence, sequence_to_power_sums};
use lpbound::worstcase::worst_case_database;
use lpbound::{ConcreteStatistic, Database, Norm, Query, Rational, SetFunction, StatisticSpec, VarSet};
use lpbound_cli::{cmd_bound, compare};
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

/// Slack allowed when comparing a bound in bits against a measured size.
const SOUNDNESS_TOLERANCE_BITS: f64 = 1e-9;
/// Slack for the entropy-versus-norm inequality, in bits.
const NORM_INEQUALITY_TOLERANCE_BITS: f64 = 1e-9;
/// Maximum distance between the cycle bound and `log₂‖deg‖_p^p`, in bits.
const CYCLE_BOUND_TOLERANCE_BITS: f64 = 0.2;
/// Relative slack when ordering bound/true ratios.
const RATIO_ORDER_TOLERANCE: f64 = 1e-9;
const NON_SHANNON_TIME_LIMIT: Duration = Duration::from_secs(5);

const SOUNDNESS_TRIALS: u64 = 1000;
const NORM_TRIALS: u64 = 1000;
const SIMPLE_TRIALS: u64 = 200;
const EVALUATOR_TRIALS: u64 = 500;
const CONVERTER_TRIALS: u64 = 5000;

fn report(name: &str, ok: bool, detail: impl AsRef<str>) {
    println!("[{}] {name}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(ok, "{name}: {}", detail.as_ref());
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Runs `trial(seed)` for every seed across all cores; returns the failures.
fn parallel_trials<F>(count: u64, trial: F) -> Vec<String>
where
    F: Fn(u64) -> Result<(), String> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()) as u64;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let trial = &trial;
                s.spawn(move || (w..count).step_by(workers as usize).filter_map(|seed| trial(seed).err()).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

const SHAPES: [&str; 4] = [
    "Q(A,B,C) :- R(A,B), S(B,C).",
    "Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D).",
    "Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(Z,X).",
    "Q(C,A,B,D) :- R(C,A), S(C,B), T(C,D).",
];

fn random_instance(rng: &mut StdRng, max_tuples: usize) -> (Query, Database) {
    let q = Query::parse(SHAPES[rng.gen_range(0..SHAPES.len())]).unwrap();
    let mut db = Database::new();
    for atom in &q.atoms {
        let size = rng.gen_range(1..=max_tuples);
        let domain = rng.gen_range(3..=10);
        db.insert(random_relation(rng, &atom.relation, &["a", "b"], size, domain));
    }
    (q, db)
}

fn norms(list: &[i64]) -> Vec<Norm> {
    list.iter().map(|&p| Norm::int(p)).chain([Norm::Infinity]).collect()
}

#[test]
fn non_shannon_gap_fixture() {
    let start = Instant::now();
    let query = fixture("non_shannon.query");
    let stats_path = fixture("non_shannon_stats.json");
    let out = cmd_bound(&query, &stats_path, Cone::Polymatroid, false).unwrap();
    let got = json_rational(&out.json["log2_bound"]);

    let dir = tempfile::TempDir::new().unwrap();
    let mut scaled: Value = serde_json::from_str(&std::fs::read_to_string(&stats_path).unwrap()).unwrap();
    for s in scaled.as_array_mut().unwrap() {
        let b = json_rational(&s["b"]).unwrap() * int(3);
        s["b"] = Value::String(lpbound::scalar::format_rational(&b));
    }
    let scaled_path = dir.path().join("scaled.json");
    std::fs::write(&scaled_path, scaled.to_string()).unwrap();
    let out3 = cmd_bound(&query, &scaled_path, Cone::Polymatroid, false).unwrap();
    let got3 = json_rational(&out3.json["log2_bound"]);
    let elapsed = start.elapsed();

    let q = lpbound_cli::load_query(&query).unwrap();
    let stats = lpbound_cli::load_statistics(&q, &stats_path).unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(fixture("non_shannon_polymatroid.json")).unwrap()).unwrap();
    let h = SetFunction::<Rational>::from_json(&q.varnames, &v).unwrap();
    let terms_match = stats.iter().all(|s| h.stat_term(&s.spec) == s.b);

    let ok = got == Some(frac(35, 9)) && got3 == Some(frac(35, 3)) && elapsed < NON_SHANNON_TIME_LIMIT && terms_match;
    let show = |r: &Option<Rational>| r.as_ref().map_or("none".into(), lpbound::scalar::format_rational);
    report(
        "non_shannon_gap_fixture",
        ok,
        format!(
            "bound {} (expected 35/9), scaled {} (expected 35/3), {:.2?}, fixture stat terms {}",
            show(&got),
            show(&got3),
            elapsed,
            if terms_match { "match b" } else { "DIFFER" }
        ),
    );
}

#[test]
fn agm_recovery() {
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [2u64, 1000, 4096, 12345] {
        let b = log2_bound(&int(n as i64)).unwrap();
        for (text, factor) in [
            ("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(Z,X).", frac(3, 2)),
            ("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), U(D,A).", int(2)),
        ] {
            let q = Query::parse(text).unwrap();
            let stats: Vec<_> = q
                .atoms
                .iter()
                .enumerate()
                .map(|(j, a)| ConcreteStatistic::new(StatisticSpec::new(j, VarSet::EMPTY, a.varset(), Norm::int(1)), b.clone()))
                .collect();
            let got = log_bound(&q, &stats, Cone::Polymatroid).unwrap().logbound;
            let good = got == Some(&b * &factor);
            ok &= good;
            detail.push(format!("N={n} {}atoms {}", q.atoms.len(), if good { "exact" } else { "MISMATCH" }));
        }
    }
    report("agm_recovery", ok, detail.join(", "));
}

#[test]
fn soundness_suite() {
    let start = Instant::now();
    let failures = parallel_trials(SOUNDNESS_TRIALS, |seed| {
        let mut rng = StdRng::seed_from_u64(seed);
        let (q, db) = random_instance(&mut rng, 50);
        let (r, _) = preset_bound(&q, &db, &Preset::LpNorms(norms(&[1, 2, 3]))).map_err(|e| e.to_string())?;
        let out = generic_join(&q, &db).map_err(|e| e.to_string())?.len();
        let bound = r.logbound.as_ref().map_or(f64::INFINITY, ratio_to_f64);
        if out > 0 && (out as f64).log2() > bound + SOUNDNESS_TOLERANCE_BITS {
            return Err(format!("seed {seed}: |Q| = {out} exceeds 2^{bound}"));
        }
        Ok(())
    });
    report(
        "soundness_suite",
        failures.is_empty(),
        format!("{SOUNDNESS_TRIALS} trials, {} violations, {:.1?}; {}", failures.len(), start.elapsed(), failures.first().map_or("", String::as_str)),
    );
}

#[test]
fn entropy_norm_inequality_suite() {
    let failures = parallel_trials(NORM_TRIALS, |seed| {
        let mut rng = StdRng::seed_from_u64(10_000 + seed);
        let arity = rng.gen_range(2..=4);
        let cols: Vec<String> = (0..arity).map(|i| format!("c{i}")).collect();
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        let (size, domain) = (rng.gen_range(1..=60), rng.gen_range(2..=6));
        let r = random_relation(&mut rng, "R", &cols, size, domain);
        let full = (1u32 << arity) - 1;
        let u = VarSet(rng.gen_range(0..=full));
        let v = VarSet(rng.gen_range(1..=full));
        let p = match rng.gen_range(0..6) {
            0 => Norm::Infinity,
            1 => Norm::Finite(frac(rng.gen_range(1..8), rng.gen_range(1..4))),
            k => Norm::int(k as i64 - 1),
        };
        let weights: Option<Vec<f64>> = rng.gen_bool(0.5).then(|| (0..r.len()).map(|_| rng.gen_range(0.01..10.0)).collect());
        let h = empirical_entropy(&r, weights.as_deref()).map_err(|e| e.to_string())?.h;
        let spec = StatisticSpec::new(0, u, v, p.clone());
        let d = degree_sequence(&r, &v.iter().collect::<Vec<_>>(), &u.iter().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        let lhs = h.stat_term(&spec);
        let rhs = lp_norm(&d, &p).map_err(|e| e.to_string())?;
        if lhs > rhs + NORM_INEQUALITY_TOLERANCE_BITS {
            return Err(format!("seed {seed}: {lhs} > {rhs} for p = {p}"));
        }
        Ok(())
    });
    report(
        "entropy_norm_inequality_suite",
        failures.is_empty(),
        format!("{NORM_TRIALS} relations, {} violations {}", failures.len(), failures.first().map_or("", String::as_str)),
    );
}

fn random_simple_stats(rng: &mut StdRng, q: &Query) -> Vec<ConcreteStatistic> {
    let mut stats = Vec::new();
    for (j, atom) in q.atoms.iter().enumerate() {
        let y = atom.varset();
        stats.push(ConcreteStatistic::new(StatisticSpec::new(j, VarSet::EMPTY, y, Norm::int(1)), frac(rng.gen_range(4..=16), 4)));
        for _ in 0..rng.gen_range(0..=2) {
            let vars: Vec<usize> = y.iter().collect();
            let u = if rng.gen_bool(0.7) { VarSet::singleton(vars[rng.gen_range(0..vars.len())]) } else { VarSet::EMPTY };
            let rest: Vec<usize> = y.minus(u).iter().collect();
            let v = VarSet::singleton(rest[rng.gen_range(0..rest.len())]);
            let p = match rng.gen_range(0..4) {
                0 => Norm::Infinity,
                k => Norm::int(k),
            };
            stats.push(ConcreteStatistic::new(StatisticSpec::new(j, u, v, p), frac(rng.gen_range(0..=12), 4)));
        }
    }
    stats
}

#[test]
fn simple_statistics_collapse_and_tightness() {
    let failures = parallel_trials(SIMPLE_TRIALS, |seed| {
        let mut rng = StdRng::seed_from_u64(20_000 + seed);
        let q = Query::parse(SHAPES[rng.gen_range(0..SHAPES.len())]).unwrap();
        let stats = random_simple_stats(&mut rng, &q);
        let gamma = log_bound(&q, &stats, Cone::Polymatroid).map_err(|e| e.to_string())?;
        let normal = log_bound(&q, &stats, Cone::Normal).map_err(|e| e.to_string())?;
        if gamma.logbound != normal.logbound {
            return Err(format!("seed {seed}: Γ {:?} ≠ N {:?}", gamma.logbound, normal.logbound));
        }
        let wc = worst_case_database(&q, &stats).map_err(|e| format!("seed {seed}: {e}"))?;
        let achieved = (wc.output_size.max(1) as f64).log2();
        if !wc.satisfied {
            return Err(format!("seed {seed}: worst-case database violates the statistics"));
        }
        if achieved < wc.log_bound() - wc.normal.c as f64 - SOUNDNESS_TOLERANCE_BITS {
            return Err(format!("seed {seed}: |Q(D)| = 2^{achieved} below bound {} − c {}", wc.log_bound(), wc.normal.c));
        }
        Ok(())
    });

    let q = Query::parse("Q(X,Y,Z) :- R1(X,Y), R2(Y,Z), R3(Z,X), S1(X), S2(Y), S3(Z).").unwrap();
    let mut example_ok = true;
    let mut example = Vec::new();
    for b in [int(10), frac(23, 2), int(14)] {
        let mut stats = Vec::new();
        for j in 0..3 {
            let a = &q.atoms[j];
            let spec = StatisticSpec::new(j, VarSet::singleton(a.vars[0]), VarSet::singleton(a.vars[1]), Norm::int(4));
            stats.push(ConcreteStatistic::new(spec, &b / int(4)));
        }
        for j in 3..6 {
            stats.push(ConcreteStatistic::new(StatisticSpec::new(j, VarSet::EMPTY, q.atoms[j].varset(), Norm::int(1)), b.clone()));
        }
        let wc = worst_case_database(&q, &stats).unwrap();
        let big_b = 2f64.powf(ratio_to_f64(&b));
        let logb = wc.bound.logbound.clone().unwrap();
        let product_ceiling = &logb * frac(3, 5);
        let good = logb == b
            && wc.output_size == big_b.floor() as u64
            && wc.output_size as f64 >= big_b / 2.0
            && wc.satisfied
            && product_ceiling < logb;
        example_ok &= good;
        example.push(format!("b={} |Q(D)|={}", lpbound::scalar::format_rational(&b), wc.output_size));
    }
    report(
        "simple_statistics_collapse_and_tightness",
        failures.is_empty() && example_ok,
        format!(
            "{SIMPLE_TRIALS} instances, {} failures {}; normal-database example: {}",
            failures.len(),
            failures.first().map_or("", String::as_str),
            example.join(", ")
        ),
    );
}

#[test]
fn evaluator_equivalence() {
    let failures = parallel_trials(EVALUATOR_TRIALS, |seed| {
        let mut rng = StdRng::seed_from_u64(30_000 + seed);
        let (q, db) = random_instance(&mut rng, 30);
        let oracle = brute_force_join(&q, &db, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let generic = generic_join(&q, &db).map_err(|e| e.to_string())?;
        let (r, stats) = preset_bound(&q, &db, &Preset::LpNorms(norms(&[1, 2, 3]))).map_err(|e| e.to_string())?;
        let (part, pr) = partitioned_evaluate(&q, &db, &stats, &r.certificate).map_err(|e| format!("seed {seed}: {e}"))?;
        if oracle.tuples() != generic.tuples() || generic.tuples() != part.tuples() {
            return Err(format!("seed {seed}: outputs differ ({} / {} / {})", oracle.len(), generic.len(), part.len()));
        }
        for (k, &i) in pr.partitioned.iter().enumerate() {
            let spec = &stats[i].spec;
            let n = db.get(&q.atoms[spec.atom].relation).unwrap().len() as f64;
            let per_band = if spec.p.is_infinite() { 1.0 } else { 2f64.powf(spec.p.to_f64()).ceil() };
            let cap = per_band * (n + 1.0).log2().ceil();
            if pr.part_counts[k] as f64 > cap {
                return Err(format!("seed {seed}: {} parts exceed {cap}", pr.part_counts[k]));
            }
        }
        Ok(())
    });
    report(
        "evaluator_equivalence",
        failures.is_empty(),
        format!("{EVALUATOR_TRIALS} instances, {} failures {}", failures.len(), failures.first().map_or("", String::as_str)),
    );
}

#[test]
fn converter_round_trip() {
    let failures = parallel_trials(CONVERTER_TRIALS, |seed| {
        let mut rng = StdRng::seed_from_u64(40_000 + seed);
        let m = rng.gen_range(1..=6);
        let mut d: Vec<u64> = (0..m).map(|_| rng.gen_range(1..=16)).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        let back = power_sums_to_sequence(&sequence_to_power_sums(&d)).map_err(|e| format!("{d:?}: {e}"))?;
        if back.degrees() != d.as_slice() {
            return Err(format!("{d:?} came back as {:?}", back.degrees()));
        }
        Ok(())
    });
    let rejected = power_sums_to_sequence(&[int(1), int(5)]).is_err();
    report(
        "converter_round_trip",
        failures.is_empty() && rejected,
        format!(
            "{CONVERTER_TRIALS} sequences, {} failures {}; (1,5) {}",
            failures.len(),
            failures.first().map_or("", String::as_str),
            if rejected { "rejected" } else { "ACCEPTED" }
        ),
    );
}

#[test]
fn modular_cone_diagnostic() {
    let u = VarSet::singleton(0);
    let v = VarSet::singleton(1);
    let ineq = SigmaInequality {
        terms: vec![
            (StatisticSpec::new(0, v, u, Norm::int(2)), frac(2, 3)),
            (StatisticSpec::new(1, u, v, Norm::int(2)), frac(2, 3)),
        ],
        rhs: int(1),
    };
    let modular = validity_check(2, &ineq, Cone::Modular).unwrap();
    let gamma = validity_check(2, &ineq, Cone::Polymatroid).unwrap();
    let (ok, detail) = match &gamma {
        Validity::Invalid { counterexample, gap } => {
            let step = step_function::<Rational>(u.union(v), 2);
            let k = counterexample.get(u.union(v)).clone();
            let along_step = !k.is_zero() && *counterexample == step.scaled(&k);
            let replay = ineq.lhs_minus_rhs(2).eval(counterexample);
            (
                modular.is_valid() && gap.is_negative() && replay == *gap && along_step,
                format!(
                    "modular {}, Γ invalid with LHS−RHS = {} at {}·h^{{U,V}}",
                    if modular.is_valid() { "valid" } else { "INVALID" },
                    lpbound::scalar::format_rational(gap),
                    lpbound::scalar::format_rational(&k)
                ),
            )
        }
        Validity::Valid => (false, "Γ reported valid".into()),
    };
    report("modular_cone_diagnostic", ok, detail);
}

#[test]
fn triangle_preset_ordering() {
    let mut rng = StdRng::seed_from_u64(2024);
    let e = power_law_graph(&mut rng, 400, 2000, 1.1);
    let q = Query::parse("Q(X,Y,Z) :- E(X,Y), E(Y,Z), E(Z,X).").unwrap();
    let mut db = Database::new();
    db.insert(e);
    let presets = [Preset::LpNorms(vec![Norm::int(2)]), Preset::LpNorms(norms(&[1])), Preset::LpNorms(vec![Norm::int(1)])];
    let (rows, truth) = compare(&q, &db, &presets, true).unwrap();
    let r: Vec<f64> = rows.iter().map(|r| r.ratio.unwrap()).collect();
    let ok = r.iter().all(|x| *x >= 1.0 - RATIO_ORDER_TOLERANCE)
        && r[0] <= r[1] * (1.0 + RATIO_ORDER_TOLERANCE)
        && r[1] <= r[2] * (1.0 + RATIO_ORDER_TOLERANCE);
    report(
        "triangle_preset_ordering",
        ok,
        format!("|Q| = {}, ratios {{2}} {:.3}, {{1,inf}} {:.3}, {{1}} {:.3}", truth.unwrap(), r[0], r[1], r[2]),
    );
}

#[test]
fn cycle_lp_norm_coverage() {
    let m = 4096u64;
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [2i64, 3] {
        let a = 1.0 / (p as f64 + 1.0);
        let ab = generate_alpha_beta(m, a, a).unwrap();
        let vars: Vec<String> = (0..=p).map(|i| format!("X{i}")).collect();
        let atoms: Vec<String> = (0..=p as usize).map(|i| format!("R({},{})", vars[i], vars[(i + 1) % (p as usize + 1)])).collect();
        let q = Query::parse(&format!("Q({}) :- {}.", vars.join(","), atoms.join(", "))).unwrap();
        let mut db = Database::new();
        db.insert(ab.relation.clone());
        let d = degree_sequence(&ab.relation, &[1], &[0]).unwrap();
        let target = p as f64 * lp_norm(&d, &Norm::int(p)).unwrap();
        let lp: Vec<i64> = (1..=p).collect();
        let (r, _) = preset_bound(&q, &db, &Preset::LpNorms(norms(&lp))).unwrap();
        let (agm, _) = preset_bound(&q, &db, &Preset::Agm).unwrap();
        let (panda, _) = preset_bound(&q, &db, &Preset::panda()).unwrap();
        let bits = |x: &Option<Rational>| x.as_ref().map_or(f64::INFINITY, ratio_to_f64);
        let (b, ba, bp) = (bits(&r.logbound), bits(&agm.logbound), bits(&panda.logbound));
        let good = (b - target).abs() <= CYCLE_BOUND_TOLERANCE_BITS && b < ba && b < bp;
        ok &= good;
        detail.push(format!(
            "p={p}: bound {b:.4} vs log2 ||deg||_p^p {target:.4}, AGM {ba:.4} (analytic {:.4}), PANDA {bp:.4} (analytic {:.4})",
            (p as f64 + 1.0) / 2.0 * (m as f64).log2(),
            2.0 * p as f64 / (p as f64 + 1.0) * (m as f64).log2()
        ));
    }
    report("cycle_lp_norm_coverage", ok, detail.join("; "));
}
