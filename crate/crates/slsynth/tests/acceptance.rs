//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slsynth::cli::run;
use slsynth::corpus::write_corpus;
use slsynth::format::{config_to_string, document_to_line, grammar_to_string, parse_document, parse_grammar};
use slsynth_core::grammar::build::grammar;
use slsynth_core::*;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn random_params(rng: &mut ChaCha8Rng) -> GenParams {
    let rules_max = rng.random_range(1..=4);
    let deps_max = rng.random_range(1..=4);
    GenParams {
        num_categories: rng.random_range(2..=30),
        nmg_category_ratio: rng.random_range(0.0..0.6),
        rules_per_category: DistSpec::Uniform { min: 1, max: rules_max },
        units_per_category: DistSpec::Uniform { min: 1, max: rng.random_range(1..=3) },
        deps_per_rule: DistSpec::Uniform { min: 0, max: deps_max },
        permutation_prob: rng.random_range(0.0..=1.0),
        height_limit: rng.random_range(2..=6),
        seed: rng.random(),
        ..GenParams::default()
    }
}

/// Forward chaining over `C :- D1..Dk`, driven by a count of unproved body
/// atoms per clause.
fn horn_derivable(g: &Grammar) -> Vec<bool> {
    let n = g.categories.len();
    let mut clauses: Vec<(usize, Vec<usize>)> = Vec::new();
    for r in &g.mg_rules {
        clauses.push((r.head.index(), r.left.iter().chain(&r.right).map(|c| c.index()).collect()));
    }
    for r in &g.nmg_rules {
        clauses.push((r.head.index(), vec![r.dependent.index()]));
    }
    let mut waiting: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing: Vec<usize> = Vec::with_capacity(clauses.len());
    let mut agenda = Vec::new();
    for (i, (head, body)) in clauses.iter_mut().enumerate() {
        body.sort_unstable();
        body.dedup();
        missing.push(body.len());
        for &b in body.iter() {
            waiting[b].push(i);
        }
        if body.is_empty() {
            agenda.push(*head);
        }
    }
    let mut proved = vec![false; n];
    while let Some(c) = agenda.pop() {
        if proved[c] {
            continue;
        }
        proved[c] = true;
        for &i in &waiting[c] {
            missing[i] -= 1;
            if missing[i] == 0 {
                agenda.push(clauses[i].0);
            }
        }
    }
    proved
}

/// Least depth of every category, by rounds of "some rule whose dependents
/// all have a depth".
fn layered_heights(g: &Grammar) -> Vec<Option<u32>> {
    let n = g.categories.len();
    let mut h: Vec<Option<u32>> = vec![None; n];
    for round in 1..=n as u32 + 1 {
        let prev = h.clone();
        for (c, hc) in h.iter_mut().enumerate() {
            if hc.is_some() {
                continue;
            }
            let cat = CategoryId(c as u32);
            let mg = g
                .mg_rules
                .iter()
                .any(|r| r.head == cat && r.left.iter().chain(&r.right).all(|d| prev[d.index()].is_some()));
            let nmg = g.nmg_rules.iter().any(|r| r.head == cat && prev[r.dependent.index()].is_some());
            if mg || nmg {
                *hc = Some(round);
            }
        }
    }
    h
}

fn finiteness_repair() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut bad, mut first) = (0, String::new());
    let mut note = |i: usize, msg: String| {
        bad += 1;
        if first.is_empty() {
            first = format!("; first failure at draw {i}: {msg}");
        }
    };
    for i in 0..1000 {
        let p = random_params(&mut rng);
        let g = match generate_grammar(&p) {
            Ok(g) => g,
            Err(e) => {
                note(i, e.to_string());
                continue;
            }
        };
        let h = compute_heights(&g).unwrap();
        let oracle = horn_derivable(&g);
        let layered = layered_heights(&g);
        let finite = is_finite(&g).unwrap();
        let max_ok = h.max().finite().is_some_and(|m| m <= p.height_limit);
        let agree = (0..g.categories.len()).all(|c| {
            let hc = h.get(CategoryId(c as u32));
            hc.is_finite() == oracle[c] && hc.finite() == layered[c]
        });
        if !(finite && max_ok && agree && oracle.iter().all(|&x| x)) {
            note(i, format!("finite={finite} max_ok={max_ok} oracle_agrees={agree}"));
        }
    }
    check(bad == 0, format!("{} of 1000 grammars finite, within limit and oracle-confirmed{first}", 1000 - bad))
}

fn tree_depth(t: &SyntaxTree) -> u32 {
    let parents = t.parents();
    (0..t.len())
        .map(|mut n| {
            let mut d = 1;
            while let Some(p) = parents[n] {
                n = p as usize;
                d += 1;
            }
            d
        })
        .max()
        .unwrap_or(0)
}

fn derivation_conformance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut trees, mut violations, mut too_deep, mut deepest) = (0, 0, 0, 0);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let g = generate_grammar(&p).unwrap();
        let d = Deriver::new(&g).unwrap();
        let mut trng = ChaCha8Rng::seed_from_u64(rng.random());
        for _ in 0..100 {
            let t = d.derive(g.root, &mut trng).unwrap();
            violations += tree_conforms(&t, &g).len();
            let depth = tree_depth(&t);
            deepest = deepest.max(depth);
            too_deep += usize::from(depth > p.height_limit);
            trees += 1;
        }
    }
    check(
        trees == 10_000 && violations == 0 && too_deep == 0,
        format!("{trees} trees, {violations} violations, {too_deep} over the depth limit, deepest {deepest}"),
    )
}

fn temporal_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut docs, mut violations, mut warnings, mut markers, mut clamped) = (0u64, 0, 0, 0u64, 0u64);
    let mut first = String::new();
    for gi in 0..100 {
        let p = GenParams {
            nmg_category_ratio: 0.5,
            translation_std: 0.1,
            duration_scale_mean: 0.5,
            ..random_params(&mut rng)
        };
        let g = generate_grammar(&p).unwrap();
        let d = Deriver::new(&g).unwrap();
        for j in 0..100u64 {
            let gd = generate_document(&d, format!("{gi}-{j}"), document_seed(p.seed, j), p.translation_std).unwrap();
            let r = check_constraints(&gd.tree, &gd.valuation, &gd.solution);
            if first.is_empty() && !r.violations.is_empty() {
                first = format!("; first: {:?}", r.violations[0]);
            }
            violations += r.violations.len();
            warnings += r.warnings.len();
            markers += gd.tree.nodes.iter().filter(|n| n.unit.sync != SyncType::Mg).count() as u64;
            clamped += gd.solution.clamped.len() as u64;
            docs += 1;
        }
    }
    let rate = clamped as f64 / markers.max(1) as f64;
    check(
        docs == 10_000 && violations == 0 && rate < 0.01,
        format!(
            "{docs} documents, {violations} violations, clamp rate {:.4}% ({clamped} of {markers} markers, {warnings} warnings){first}",
            rate * 100.0
        ),
    )
}

fn distribution_conformance() -> Outcome {
    use CategoryKind::{Mg, Nmg};
    let theta = 0.6;
    let g = grammar(&[("S", Mg)]).with_mg("S", &[], &[]).with_units(SyncType::NmgFull, theta);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = derive_tree(&g, g.root, &mut rng).unwrap();
    let xs: Vec<f64> = (0..10_000)
        .map(|_| match draw_valuation(&t, 0.1, &mut rng).timings[0] {
            NodeTiming::Mg { duration } => duration,
            other => panic!("expected a manual timing, got {other:?}"),
        })
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mean_err = (mean / (2.0 * theta) - 1.0).abs();
    let shape = mean * mean / var;
    let shape_err = (shape / 2.0 - 1.0).abs();

    let sigma = 0.1;
    let g = grammar(&[("S", Mg), ("Q", Nmg)]).with_mg("S", &["Q"], &[]).with_nmg("Q", "S").with_mg("S", &[], &[]);
    let g = g.with_units(SyncType::NmgStart, 0.5);
    let d = Deriver::new(&g).unwrap();
    let mut shifts = Vec::with_capacity(10_000);
    while shifts.len() < 10_000 {
        let t = d.derive(g.root, &mut rng).unwrap();
        for timing in draw_valuation(&t, sigma, &mut rng).timings {
            if let NodeTiming::NmgStart { start_shift, .. } = timing {
                shifts.push(start_shift);
            }
        }
    }
    shifts.truncate(10_000);
    let tn = shifts.len() as f64;
    let tmean = shifts.iter().sum::<f64>() / tn;
    let bound = 3.0 * sigma / tn.sqrt();
    check(
        mean_err < 0.05 && shape_err < 0.05 && tmean.abs() <= bound,
        format!(
            "duration mean {mean:.4} vs {:.4} ({:.2}% off), shape {shape:.3} ({:.2}% off), translation mean {tmean:+.5} within ±{bound:.5}",
            2.0 * theta,
            mean_err * 100.0,
            shape_err * 100.0
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> (i32, String) {
    let args = std::iter::once("slsynth".to_string()).chain(args.iter().map(|a| {
        if a.contains('.') {
            dir.join(a).display().to_string()
        } else {
            a.to_string()
        }
    }));
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(args, &mut o, &mut e);
    (code, String::from_utf8_lossy(&e).into_owned())
}

fn determinism() -> Outcome {
    let p = GenParams {
        num_categories: 16,
        nmg_category_ratio: 0.4,
        permutation_prob: 0.5,
        seed: 77,
        ..GenParams::default()
    };
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, d) in dirs.iter().enumerate() {
        let d = d.path();
        fs::write(d.join("cfg.json"), config_to_string(&p)).unwrap();
        let jobs = if i == 0 { "1" } else { "4" };
        let steps: [&[&str]; 2] = [
            &["gen-grammar", "--config", "cfg.json", "--out", "g.json"],
            &[
                "gen-corpus",
                "--grammar",
                "g.json",
                "--n",
                "2000",
                "--seed",
                "9",
                "--out",
                "c.jsonl",
                "--manifest",
                "m.json",
                "--jobs",
                jobs,
            ],
        ];
        for s in steps {
            let (code, err) = cli(d, s);
            if code != 0 {
                return check(false, format!("{s:?} exited {code}: {err}"));
            }
        }
    }
    let same = ["g.json", "c.jsonl", "m.json"]
        .iter()
        .all(|f| fs::read(dirs[0].path().join(f)).unwrap() == fs::read(dirs[1].path().join(f)).unwrap());
    let d = dirs[0].path();
    let (code, err) = cli(d, &["gen-corpus", "--grammar", "g.json", "--from-manifest", "m.json", "--out", "re.jsonl"]);
    let regen = code == 0 && fs::read(d.join("c.jsonl")).unwrap() == fs::read(d.join("re.jsonl")).unwrap();
    check(
        same && regen,
        format!("identical across runs and job counts: {same}; manifest regeneration byte-identical: {regen} {err}"),
    )
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut grammars_ok, mut docs_ok, mut docs) = (0, 0, 0);
    for i in 0..1000 {
        let p = random_params(&mut rng);
        let g = generate_grammar(&p).unwrap();
        let text = grammar_to_string(&g);
        if parse_grammar(&text).is_ok_and(|b| b == g && grammar_to_string(&b) == text) {
            grammars_ok += 1;
        }
        if i % 10 == 0 {
            let (bytes, _) = write_corpus(&g, 10, i, &g.params, 1, Vec::new()).unwrap();
            for line in String::from_utf8(bytes).unwrap().lines() {
                docs += 1;
                let Ok(doc) = parse_document(line, 1) else { continue };
                let again = document_to_line(&doc);
                if again == format!("{line}\n").as_bytes()
                    && parse_document(std::str::from_utf8(&again).unwrap().trim_end(), 1).is_ok_and(|d| d == doc)
                {
                    docs_ok += 1;
                }
            }
        }
    }
    check(
        grammars_ok == 1000 && docs == 1000 && docs_ok == 1000,
        format!("{grammars_ok}/1000 grammars and {docs_ok}/{docs} documents round-trip byte for byte"),
    )
}

fn hand_document(heads: &[Head]) -> AnnotatedDocument {
    AnnotatedDocument {
        doc_id: "hand".into(),
        seed: 0,
        units: (0..heads.len() as u32)
            .map(|i| DocUnit {
                node: i,
                unit: 0,
                category: "S".into(),
                sync: SyncType::Mg,
                start: Micros(i as i64 * 100_000),
                end: Micros((i as i64 + 1) * 100_000),
            })
            .collect(),
        dependencies: heads
            .iter()
            .enumerate()
            .map(|(i, &head)| Dependency { head, dependent: i as u32, rule: 0 })
            .collect(),
    }
}

fn scorer_correctness() -> Outcome {
    use Head::{Node, Root};
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut gold_ok = true;
    for c in 0..20 {
        let g = generate_grammar(&random_params(&mut rng)).unwrap();
        let docs: Vec<_> = generate_corpus_vec(&g, 50, c);
        let r = score(&docs, docs.iter().map(Prediction::from_gold)).unwrap();
        gold_ok &= r.uas() == 1.0 && r.root_accuracy() == 1.0;
    }

    // Gold: 1 <- 0, 2 <- 0, 3 <- 1, 4 <- 1. Predicted: 1 <- 0 (right),
    // 2 <- 3 (wrong), 3 <- 1 (right), 4 <- 0 (wrong).
    let gold = hand_document(&[Root, Node(0), Node(0), Node(1), Node(1)]);
    let pred = Prediction {
        doc_id: "hand".into(),
        dependencies: [Root, Node(0), Node(3), Node(1), Node(0)]
            .iter()
            .enumerate()
            .map(|(i, &head)| Attachment { head, dependent: i as u32, rule: None })
            .collect(),
    };
    let hand = score([&gold], [pred]).unwrap().uas();

    use CategoryKind::Mg;
    let chain = grammar(&[("S", Mg), ("A", Mg), ("B", Mg)])
        .with_mg("S", &[], &["A"])
        .with_mg("S", &[], &[])
        .with_mg("A", &[], &["B"])
        .with_mg("A", &[], &[])
        .with_mg("B", &[], &["S"])
        .with_mg("B", &[], &[]);
    let chain = chain.with_units(SyncType::NmgFull, 0.5);
    let docs = generate_corpus_vec(&chain, 500, 8);
    let r = score(&docs, docs.iter().map(baseline_parse)).unwrap();
    let mg = r.sync(SyncType::Mg);
    check(
        gold_ok && hand == 0.5 && mg.score() == 1.0 && mg.total > 0,
        format!(
            "gold vs gold = 1.0 on 20 corpora: {gold_ok}; hand 2-of-4 = {hand}; baseline MG UAS on chain grammar {:.3} ({}/{})",
            mg.score(),
            mg.correct,
            mg.total
        ),
    )
}

fn generate_corpus_vec(g: &Grammar, n: u64, seed: u64) -> Vec<AnnotatedDocument> {
    slsynth::generate_corpus(g, n, seed, &g.params).unwrap().collect::<Result<_, _>>().unwrap()
}

fn word_order_dial() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut zero_marked, mut missing_sibling, mut height_changed, mut checked_rules) = (0, 0, 0, 0);
    for _ in 0..200 {
        let base = random_params(&mut rng);
        let g0 = generate_grammar(&GenParams { permutation_prob: 0.0, ..base.clone() }).unwrap();
        zero_marked += g0.mg_rules.iter().filter(|r| r.permutation_of.is_some()).count();

        let g1 = generate_grammar(&GenParams { permutation_prob: 1.0, ..base.clone() }).unwrap();
        let mut siblings: BTreeMap<u32, usize> = BTreeMap::new();
        for r in &g1.mg_rules {
            if let Some(o) = r.permutation_of {
                *siblings.entry(o).or_default() += 1;
            }
        }
        for r in g1.mg_rules.iter().filter(|r| r.permutation_of.is_none() && r.left.len() + r.right.len() + 1 >= 2) {
            checked_rules += 1;
            missing_sibling += usize::from(!siblings.contains_key(&r.id));
        }

        let before = compute_heights(&g0).unwrap();
        let mut irng = ChaCha8Rng::seed_from_u64(rng.random());
        let injected = inject_permutations(g0.clone(), 1.0, &mut irng);
        height_changed += usize::from(compute_heights(&injected).unwrap() != before);
    }
    check(
        zero_marked == 0 && missing_sibling == 0 && height_changed == 0 && checked_rules > 0,
        format!(
            "p=0 permutation rules: {zero_marked}; p=1 rules without sibling: {missing_sibling} of {checked_rules}; height maps changed: {height_changed} of 200"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 finiteness repair", finiteness_repair, Some(Duration::from_secs(30))),
        ("2 derivation conformance", derivation_conformance, Some(Duration::from_secs(60))),
        ("3 temporal correctness", temporal_correctness, None),
        ("4 distribution conformance", distribution_conformance, None),
        ("5 determinism", determinism, None),
        ("6 round-trip formats", round_trip, None),
        ("7 scorer correctness", scorer_correctness, None),
        ("8 word-order dial", word_order_dial, None),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t = Instant::now();
        let out = f();
        let took = t.elapsed();
        let in_time = budget.is_none_or(|b| took <= b);
        let ok = out.ok && in_time;
        failed += usize::from(!ok);
        let budget = budget.map_or(String::new(), |b| format!(" / {}s budget", b.as_secs()));
        println!("{} {name}: {} [{:.2}s{budget}]", if ok { "PASS" } else { "FAIL" }, out.detail, took.as_secs_f64());
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
