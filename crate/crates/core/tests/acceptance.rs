//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.

#![allow(clippy::needless_range_loop)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use coco_core::augment::{generate, Generators};
use coco_core::classify::{loss_and_gradient, train, BuiltinClassifier, ConstantClassifier, HttpClassifier, StubServer};
use coco_core::corpus::{emit_corpus, Corpus, Method};
use coco_core::depgraph::{
    betweenness_centrality, closeness_centrality, degree_centrality, shortest_dependency_path, topological_distance,
};
use coco_core::evalkit::{ablation_run, score, spurious_benchmark, AblationConfig, GeneratorSet, SpuriousConfig};
use coco_core::pipeline::{run_pipeline, PipelineConfig, AUGMENTED_FILE, CAD_FILE, MODEL_FILE, REPORT_FILE};
use coco_core::synco::{
    generate_synco, is_flip, pair_entities, select_replacements, Neighbor, SynCoConfig,
};
use coco_core::{CentralityProfile, CoarsePos, DepGraph, EntityMention, EntityRole, Predictor, SemCoConfig, TagEmbeddings, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn centrality_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_err: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(2..=10);
        let extra = rng.gen_range(0.0..0.5);
        let (n, edges) = random_connected(n, extra, &mut rng);
        let g = DepGraph::from_edges(n, &edges);
        let adj = adjacency(n, &edges);
        let pairs = [
            ("BC", betweenness_centrality(&g), naive_betweenness(&adj)),
            ("CC", closeness_centrality(&g).map_err(|e| e.to_string())?, naive_closeness(&adj)),
            ("DC", degree_centrality(&g).map_err(|e| e.to_string())?, naive_degree(&adj)),
        ];
        for (name, got, want) in pairs {
            for (v, (a, b)) in got.iter().zip(&want).enumerate() {
                let err = (a - b).abs();
                max_err = max_err.max(err);
                ensure(err <= 1e-9, || format!("graph {case} ({n} nodes) {name}[{v}]: {a} vs {b}"))?;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("200 graphs, max error {max_err:.1e}, {:.2?}", start.elapsed()))
}

fn sdp_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut found = 0;
    for case in 0..200 {
        let n = rng.gen_range(2..=12);
        let (n, mut edges) = random_graph(n, rng.gen_range(0.1..0.6), &mut rng);
        let cut = rng.gen_range(1..n);
        let e1 = EntityMention::new("a", rng.gen_range(0..cut), cut, EntityRole::E1);
        let e2_start = rng.gen_range(cut..n);
        let e2 = EntityMention::new("b", e2_start, rng.gen_range(e2_start + 1..=n), EntityRole::E2);
        let g = DepGraph::from_edges(n, &edges);
        let sdp = shortest_dependency_path(&g, &e1, &e2);
        let oracle = bfs_span_distance(&g, &e1, &e2);
        ensure(sdp.found == oracle.is_some(), || format!("graph {case}: found={} oracle={oracle:?}", sdp.found))?;
        if let Some(d) = oracle {
            found += 1;
            ensure(sdp.path.len() == d + 1, || format!("graph {case}: path {:?} vs distance {d}", sdp.path))?;
            ensure(e1.contains(sdp.path[0]) && e2.contains(*sdp.path.last().unwrap()), || {
                format!("graph {case}: endpoints of {:?}", sdp.path)
            })?;
            for w in sdp.path.windows(2) {
                ensure(g.neighbors(w[0]).contains(&w[1]), || format!("graph {case}: {w:?} not adjacent"))?;
            }
        }
        // replay, and replay on the same graph built from shuffled edges
        ensure(shortest_dependency_path(&g, &e1, &e2) == sdp, || format!("graph {case}: replay differs"))?;
        edges.shuffle(&mut rng);
        let shuffled = DepGraph::from_edges(n, &edges);
        ensure(shortest_dependency_path(&shuffled, &e1, &e2) == sdp, || {
            format!("graph {case}: edge order changed the path")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 graphs ({found} connected pairs), {:.2?}", start.elapsed()))
}

fn profile(agg: Vec<f64>) -> CentralityProfile {
    let n = agg.len();
    CentralityProfile {
        bc: vec![0.0; n],
        cc: vec![0.0; n],
        dc: vec![0.0; n],
        agg,
    }
}

fn worked_examples() -> Outcome {
    let td = topological_distance(1.24, 1.17);
    ensure((td - 0.07).abs() < 1e-12, || format!("TD(1.24, 1.17) = {td}"))?;
    ensure(topological_distance(1.24, 0.56) > 0.2, || "TD(1.24, 0.56) should exceed 0.2".into())?;

    // wine 1.24 against grapes 1.17 pairs; against farms 0.56 alone it does not
    let o = wine_original();
    let c = grapes_candidate();
    let po = profile(vec![0.0, 0.0, 1.24, 0.0, 0.0, 9.0]);
    let pairs = pair_entities(&o, &c, &po, &profile(vec![0.0, 0.0, 0.0, 1.17, 0.0, 5.0]), 0.2);
    ensure(pairs.len() == 1 && pairs[0].candidate.start == 3, || format!("wine should pair with grapes: {pairs:?}"))?;
    let pairs = pair_entities(&o, &c, &po, &profile(vec![0.0, 0.0, 0.0, 5.0, 0.0, 0.56]), 0.2);
    ensure(pairs.is_empty(), || format!("TD 0.68 must be rejected: {pairs:?}"))?;

    let original = [
        Neighbor { index: 1, class: CoarsePos::Verb, avgc: 0.43 },
        Neighbor { index: 3, class: CoarsePos::Verb, avgc: 0.50 },
    ];
    let candidate = [Neighbor { index: 1, class: CoarsePos::Verb, avgc: 1.00 }];
    let chosen = select_replacements(&original, &candidate);
    ensure(chosen.len() == 1 && chosen[0].target == 3, || format!("expected `produced` to be replaced: {chosen:?}"))?;

    let tags = TagEmbeddings::from_samples(30, 5, [&o, &c]);
    let flips = ConstantClassifier::new(labels(), "Entity-Origin");
    let cf = generate_synco(&o, &[c], &tags, &SynCoConfig::default(), &flips)
        .map_err(|e| e.to_string())?
        .ok_or("no counterfactual emitted")?;
    let text = cf.sample.text();
    ensure(text == "They drank wine bought from wineries", || format!("got `{text}`"))?;
    ensure(cf.sample.label == "Entity-Origin", || format!("label {}", cf.sample.label))?;
    Ok(format!("TD 0.07, 0.68 rejected, produced replaced, `{text}` / {}", cf.sample.label))
}

fn fuzz_setup() -> (Vec<coco_core::AnnotatedSample>, Arc<coco_core::WordVectors>, BuiltinClassifier) {
    let corpus = fuzzed_corpus(500, 21);
    for s in &corpus {
        s.validate(&labels(), true).expect("fuzzed samples are valid");
    }
    let wv = Arc::new(fuzz_vectors(16, 22));
    let model = train(&corpus, &labels(), &wv, &TrainConfig::default()).expect("training succeeds");
    (corpus, Arc::clone(&wv), BuiltinClassifier::new(model, wv))
}

/// Gates wide open so that most pairings turn into edits.
fn fuzz_generators() -> Generators {
    let synco = SynCoConfig {
        tdt: 1.0,
        fst: -1.0,
        ..SynCoConfig::default()
    };
    let semco = SemCoConfig {
        sst: -1.0,
        ..SemCoConfig::default()
    };
    let mut g = Generators::both(synco, semco);
    g.tag_seed = 3;
    g
}

fn entity_invariance() -> Outcome {
    let (corpus, wv, verifier) = fuzz_setup();
    let cad = generate(&corpus, &wv, &fuzz_generators(), &verifier).map_err(|e| e.to_string())?;
    let mut violations = Vec::new();
    for cf in &cad {
        let source = corpus.iter().find(|s| s.id == cf.source_id).ok_or("unknown source")?;
        if cf.sample.entity_surfaces() != source.entity_surfaces() {
            violations.push(format!("{}: entity surfaces changed", cf.sample.id));
        }
        if cf.sample.label == source.label {
            violations.push(format!("{}: label unchanged", cf.sample.id));
        }
        if cf.sample.entities.iter().any(|e| e.end > cf.sample.len()) {
            violations.push(format!("{}: span out of range", cf.sample.id));
        }
    }
    let by = |m| cad.iter().filter(|cf| cf.method == m).count();
    let (syn, sem) = (by(Method::SynCo), by(Method::SemCo));
    ensure(syn > 0 && sem > 0, || format!("both generators must emit something (SynCo {syn}, SemCo {sem})"))?;
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    let resized = cad.iter().filter(|cf| cf.edges_stale).count();
    Ok(format!(
        "{} counterfactuals (SynCo {syn}, SemCo {sem}, {resized} resized), 0 violations",
        cad.len()
    ))
}

fn verification_soundness() -> Outcome {
    let (corpus, wv, verifier) = fuzz_setup();
    let cad = generate(&corpus, &wv, &fuzz_generators(), &verifier).map_err(|e| e.to_string())?;
    ensure(!cad.is_empty(), || "nothing emitted".into())?;
    let samples: Vec<_> = cad.iter().map(|cf| cf.sample.clone()).collect();
    let again = verifier.predict_batch(&samples).map_err(|e| e.to_string())?;
    let mut bad = 0;
    for (cf, p) in cad.iter().zip(&again) {
        let source = corpus.iter().find(|s| s.id == cf.source_id).ok_or("unknown source")?;
        if !cf.verified || p.label != cf.predicted_label || !is_flip(&p.label, &source.label, &cf.sample.label, false) {
            bad += 1;
        }
    }
    ensure(bad == 0, || format!("{bad} of {} fail the flip criterion", cad.len()))?;
    Ok(format!("{} of {} re-checked counterfactuals flip", cad.len(), cad.len()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("corpus.jsonl");
    emit_corpus(&Corpus::from_samples(header(), fuzzed_corpus(200, 31)), &input).map_err(|e| e.to_string())?;
    let vectors = dir.path().join("vectors.txt");
    let wv = fuzz_vectors(16, 32);
    let lines: Vec<String> = ["wine", "grapes", "farm", "city", "drank", "bought", "in", "from", "the", "is"]
        .iter()
        .map(|w| {
            let v: Vec<String> = wv.lookup(w).iter().map(|x| x.to_string()).collect();
            format!("{w} {}", v.join(" "))
        })
        .collect();
    std::fs::write(&vectors, lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    let run = |out: &str| -> Result<Vec<Vec<u8>>, String> {
        let mut cfg = PipelineConfig::parse(r#"{"seed": 7, "embeddings": {"dim": 16}}"#).map_err(|e| e.to_string())?;
        cfg.embeddings_path = Some(vectors.clone());
        cfg.input_corpus = Some(input.clone());
        cfg.output_dir = dir.path().join(out);
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
        [CAD_FILE, MODEL_FILE, REPORT_FILE, AUGMENTED_FILE]
            .iter()
            .map(|f| std::fs::read(dir.path().join(out).join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    let a = run("first")?;
    let b = run("second")?;
    for (name, (x, y)) in [CAD_FILE, MODEL_FILE, REPORT_FILE, AUGMENTED_FILE].iter().zip(a.iter().zip(&b)) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    ensure(!a[0].is_empty(), || "cad.jsonl is empty".into())?;
    Ok(format!("cad.jsonl ({} B), model.bin ({} B), report.json identical", a[0].len(), a[1].len()))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let classes = rng.gen_range(2..=4);
        let dim = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let l2 = rng.gen_range(0.0..0.01);
        let mut w: Vec<f64> = (0..classes * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b: Vec<f64> = (0..classes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xs: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<usize> = (0..m).map(|_| rng.gen_range(0..classes)).collect();
        let x_refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, grad) = loss_and_gradient(&w, &b, &x_refs, &ys, l2);
        let h = 1e-5;
        let mut check = |analytic: f64, numeric: f64, what: String| -> Result<(), String> {
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || format!("case {case} {what}: analytic {analytic} numeric {numeric}"))
        };
        for i in 0..w.len() {
            let orig = w[i];
            w[i] = orig + h;
            let up = loss_and_gradient(&w, &b, &x_refs, &ys, l2).0;
            w[i] = orig - h;
            let down = loss_and_gradient(&w, &b, &x_refs, &ys, l2).0;
            w[i] = orig;
            check(grad.weights[i], (up - down) / (2.0 * h), format!("w[{i}]"))?;
        }
        for k in 0..b.len() {
            let orig = b[k];
            b[k] = orig + h;
            let up = loss_and_gradient(&w, &b, &x_refs, &ys, l2).0;
            b[k] = orig - h;
            let down = loss_and_gradient(&w, &b, &x_refs, &ys, l2).0;
            b[k] = orig;
            check(grad.bias[k], (up - down) / (2.0 * h), format!("b[{k}]"))?;
        }
    }
    Ok(format!("50 instances, worst relative error {worst:.1e}"))
}

struct OracleMetrics {
    micro_p: f64,
    micro_r: f64,
    micro_f1: f64,
    macro_f1: f64,
    per_label: Vec<(f64, f64, f64)>,
}

fn confusion_oracle(gold: &[usize], pred: &[usize], k: usize, negative: usize) -> OracleMetrics {
    let mut cm = vec![vec![0usize; k]; k];
    for (&g, &p) in gold.iter().zip(pred) {
        cm[g][p] += 1;
    }
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let f = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let mut per_label = Vec::new();
    let (mut tp_sum, mut pred_sum, mut gold_sum) = (0, 0, 0);
    for c in 0..k {
        let tp = cm[c][c];
        let predicted: usize = (0..k).map(|r| cm[r][c]).sum();
        let actual: usize = cm[c].iter().sum();
        let (p, r) = (div(tp, predicted), div(tp, actual));
        per_label.push((p, r, f(p, r)));
        if c != negative {
            tp_sum += tp;
            pred_sum += predicted;
            gold_sum += actual;
        }
    }
    let (micro_p, micro_r) = (div(tp_sum, pred_sum), div(tp_sum, gold_sum));
    let positives: Vec<usize> = (0..k).filter(|&c| c != negative).collect();
    let macro_f1 = positives.iter().map(|&c| per_label[c].2).sum::<f64>() / positives.len() as f64;
    OracleMetrics {
        micro_p,
        micro_r,
        micro_f1: f(micro_p, micro_r),
        macro_f1,
        per_label,
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for case in 0..100 {
        let k = rng.gen_range(2..=5);
        let n = rng.gen_range(0..=50);
        let names: Vec<String> = (0..k).map(|i| format!("L{i}")).collect();
        let negative = rng.gen_range(0..k);
        let gold: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let name = |v: &[usize]| v.iter().map(|&i| names[i].clone()).collect::<Vec<_>>();
        let got = score(&name(&gold), &name(&pred), &names, Some(&names[negative])).map_err(|e| e.to_string())?;
        let want = confusion_oracle(&gold, &pred, k, negative);
        let same = got.micro_precision == want.micro_p
            && got.micro_recall == want.micro_r
            && got.micro_f1 == want.micro_f1
            && got.macro_f1 == want.macro_f1
            && got
                .per_label
                .iter()
                .zip(&want.per_label)
                .all(|(l, &(p, r, f))| l.precision == p && l.recall == r && l.f1 == f);
        ensure(same, || format!("case {case}: {got:?}"))?;
    }
    Ok("100 instances identical to the confusion-matrix oracle".into())
}

fn robustness_direction() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut deltas = Vec::new();
    for seed in 0..10 {
        let bench = spurious_benchmark(seed, &SpuriousConfig::default());
        let mut cfg = AblationConfig {
            tag_dim: 30,
            tag_seed: seed,
            ..AblationConfig::default()
        };
        cfg.train.seed = seed;
        cfg.synco.seed = seed;
        cfg.semco.seed = seed;
        let table = ablation_run(&bench.train, &bench.test, &bench.header, Arc::new(bench.vectors), &cfg, &[GeneratorSet::Both])
            .map_err(|e| e.to_string())?;
        let ori = table.row("Ori").ok_or("no Ori row")?.report.accuracy;
        let cad = table.row("+CoCo").ok_or("no +CoCo row")?.report.accuracy;
        if cad >= ori {
            wins += 1;
        }
        deltas.push(cad - ori);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    ensure(wins >= 8, || format!("CAD >= Ori in only {wins}/10 seeds; deltas {deltas:?}"))?;
    ensure(mean > 0.0, || format!("mean improvement {mean}"))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("CAD >= Ori in {wins}/10 seeds, mean improvement {mean:+.3}, {:.2?}", start.elapsed()))
}

fn loopback_equivalence() -> Outcome {
    let corpus = fuzzed_corpus(100, 61);
    let wv = Arc::new(fuzz_vectors(16, 62));
    let model = train(&corpus, &labels(), &wv, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let local = BuiltinClassifier::new(model.clone(), Arc::clone(&wv));
    let stub = StubServer::spawn("127.0.0.1:0", BuiltinClassifier::new(model, Arc::clone(&wv))).map_err(|e| e.to_string())?;
    let remote = HttpClassifier::new(stub.endpoint(), labels()).with_batch_size(32);
    let a = local.predict_batch(&corpus).map_err(|e| e.to_string())?;
    let b = remote.predict_batch(&corpus).map_err(|e| e.to_string())?;
    ensure(a.len() == 100 && a == b, || "remote predictions differ from local ones".into())?;
    Ok("100 samples, labels and scores identical".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("centrality oracle", centrality_oracle),
        ("SDP oracle", sdp_oracle),
        ("worked examples", worked_examples),
        ("entity invariance", entity_invariance),
        ("verification soundness", verification_soundness),
        ("determinism", determinism),
        ("gradient check", gradient_check),
        ("metric oracle", metric_oracle),
        ("robustness direction", robustness_direction),
        ("loopback equivalence", loopback_equivalence),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name:<24} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<24} {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
