use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use coco_core::augment::generate;
use coco_core::classify::{BuiltinClassifier, ClassifyError, LinearRcModel, Predictor, StubServer};
use coco_core::corpus::{emit_corpus, load_corpus, Corpus, Record};
use coco_core::evalkit::{ablation_run, score, spurious_benchmark, AblationConfig, GeneratorSet, SpuriousConfig};
use coco_core::pipeline::{cad_corpus, run_pipeline, verifier, ErrorKind, PipelineConfig, PipelineError};
use coco_core::synco::GenerateError;
use coco_core::{AggregationMode, AnnotatedSample, CentralityProfile, DepGraph, Layer, WordVectors};
use serde_json::{json, Value};

use crate::{Command, LayerArg, VectorArgs, VerifyArgs};

type Result<T> = std::result::Result<T, PipelineError>;

fn input(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::new(stage, ErrorKind::Input, e)
}

fn classifier(stage: &'static str) -> impl Fn(ClassifyError) -> PipelineError {
    move |e| match e {
        ClassifyError::Io { .. } => PipelineError::new(stage, ErrorKind::Input, e),
        other => PipelineError::new(stage, ErrorKind::Classifier, other),
    }
}

fn generation(e: GenerateError) -> PipelineError {
    match e {
        GenerateError::Classifier(e) => PipelineError::new("generate", ErrorKind::Classifier, e),
        other => PipelineError::new("generate", ErrorKind::Generation, other),
    }
}

fn base_config() -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    cfg.apply_env()?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<Corpus> {
    load_corpus(path).map_err(|e| input("ingest")(&e))
}

fn originals(corpus: &Corpus) -> Vec<AnnotatedSample> {
    corpus.samples().cloned().collect()
}

fn vectors(cfg: &PipelineConfig) -> Result<Arc<WordVectors>> {
    cfg.load_vectors()
        .map(Arc::new)
        .map_err(|e| input("embeddings")(&e))
}

fn load_model(path: &Path, labels: Option<&[String]>, wv: &WordVectors) -> Result<LinearRcModel> {
    let model = LinearRcModel::load(path).map_err(classifier("model"))?;
    if model.word_dim() != wv.dim() {
        return Err(PipelineError::new(
            "model",
            ErrorKind::Classifier,
            format!("model expects {}-d word vectors, embeddings are {}-d", model.word_dim(), wv.dim()),
        ));
    }
    if let Some(labels) = labels {
        if model.labels() != labels {
            return Err(PipelineError::new(
                "model",
                ErrorKind::Classifier,
                "model labels differ from the corpus header",
            ));
        }
    }
    Ok(model)
}

/// Writes one line per item to `output`, or to stdout.
fn write_lines(output: Option<&Path>, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out: Box<dyn Write> = match output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| input("output")(&e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let written = lines
        .into_iter()
        .try_for_each(|line| writeln!(out, "{line}"))
        .and_then(|()| out.flush());
    match written {
        // a closed pipe (`coco ... | head`) is not an error
        Err(e) if output.is_none() && e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| input("output")(&e)),
    }
}

fn write_json(output: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    write_lines(output, [text])
}

fn write_corpus_file(corpus: &Corpus, path: &Path) -> Result<()> {
    emit_corpus(corpus, path).map_err(|e| input("output")(&e))
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::IngestValidate { corpus } => ingest_validate(&corpus),
        Command::Centrality {
            corpus,
            layer,
            agg,
            output,
        } => centrality(&corpus, layer, &agg, output.as_deref()),
        Command::TrainClassifier {
            corpus,
            output,
            train,
            vectors: v,
        } => {
            let mut cfg = base_config()?;
            train.apply(&mut cfg)?;
            v.apply(&mut cfg)?;
            train_classifier(&corpus, &output, &cfg)
        }
        Command::Predict {
            corpus,
            model,
            output,
            vectors: v,
        } => predict(&corpus, &model, output.as_deref(), &v),
        Command::Synco {
            corpus,
            output,
            synco,
            generation,
            verify,
            vectors: v,
        } => {
            let mut cfg = base_config()?;
            synco.apply(&mut cfg)?;
            generation.apply(&mut cfg)?;
            verify.apply(&mut cfg)?;
            v.apply(&mut cfg)?;
            cfg.semco_enabled = false;
            run_generators(&corpus, &output, &cfg, &verify)
        }
        Command::Semco {
            corpus,
            output,
            semco,
            generation,
            verify,
            vectors: v,
        } => {
            let mut cfg = base_config()?;
            semco.apply(&mut cfg)?;
            generation.apply(&mut cfg)?;
            verify.apply(&mut cfg)?;
            v.apply(&mut cfg)?;
            cfg.synco_enabled = false;
            run_generators(&corpus, &output, &cfg, &verify)
        }
        Command::Generate {
            corpus,
            output,
            synco,
            semco,
            generation,
            verify,
            vectors: v,
        } => {
            let mut cfg = base_config()?;
            synco.apply(&mut cfg)?;
            semco.apply(&mut cfg)?;
            generation.apply(&mut cfg)?;
            verify.apply(&mut cfg)?;
            v.apply(&mut cfg)?;
            run_generators(&corpus, &output, &cfg, &verify)
        }
        Command::Augment { corpus, cad, output } => augment(&corpus, &cad, &output),
        Command::Evaluate {
            gold,
            pred,
            negative_label,
            include_negative,
            output,
        } => evaluate(&gold, &pred, negative_label, include_negative, output.as_deref()),
        Command::Robustness {
            seed,
            confound_rate,
            train_size,
            test_size,
            dump,
            output,
        } => {
            let cfg = SpuriousConfig {
                train_size,
                test_size,
                confound_rate,
                ..SpuriousConfig::default()
            };
            robustness(seed, &cfg, dump.as_deref(), output.as_deref())
        }
        Command::Run { args } => run(&args),
        Command::ServeStub {
            model,
            addr,
            vectors: v,
        } => serve_stub(&model, &addr, &v),
    }
}

fn ingest_validate(path: &Path) -> Result<()> {
    let corpus = load(path)?;
    let cads = corpus.counterfactuals().count();
    println!(
        "{}: {} samples, {} counterfactuals, {} labels (negative `{}`)",
        path.display(),
        corpus.len() - cads,
        cads,
        corpus.header.labels.len(),
        corpus.header.negative_label
    );
    Ok(())
}

fn centrality(path: &Path, layer: LayerArg, agg: &str, output: Option<&Path>) -> Result<()> {
    let mode: AggregationMode = agg
        .parse()
        .map_err(|e: String| PipelineError::new("config", ErrorKind::Config, format!("--agg: {e}")))?;
    let layer = match layer {
        LayerArg::Syn => Layer::Syntactic,
        LayerArg::Sem => Layer::Semantic,
    };
    let corpus = load(path)?;
    let mut lines = Vec::with_capacity(corpus.len());
    for sample in corpus.samples() {
        let profile = CentralityProfile::compute(&DepGraph::build(sample, layer), mode)
            .map_err(|e| input("centrality")(&format!("sample `{}`: {e}", sample.id)))?;
        lines.push(format!(
            r#"{{"id":{},"bc":{},"cc":{},"dc":{},"agg":{}}}"#,
            json!(sample.id),
            json!(profile.bc),
            json!(profile.cc),
            json!(profile.dc),
            json!(profile.agg)
        ));
    }
    write_lines(output, lines)
}

fn train_classifier(path: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let corpus = load(path)?;
    let wv = vectors(cfg)?;
    let samples = originals(&corpus);
    let model = coco_core::classify::train(&samples, &corpus.header.labels, &wv, &cfg.train_config())
        .map_err(classifier("train"))?;
    model.save(output).map_err(classifier("output"))?;
    println!(
        "trained on {} samples, {} labels, {}-d features -> {}",
        samples.len(),
        model.labels().len(),
        model.feature_dim(),
        output.display()
    );
    Ok(())
}

fn predict(path: &Path, model: &Path, output: Option<&Path>, v: &VectorArgs) -> Result<()> {
    let mut cfg = base_config()?;
    v.apply(&mut cfg)?;
    let corpus = load(path)?;
    let wv = vectors(&cfg)?;
    let model = load_model(model, Some(&corpus.header.labels), &wv)?;
    let samples = originals(&corpus);
    let predictions = BuiltinClassifier::new(model, wv)
        .predict_batch(&samples)
        .map_err(classifier("predict"))?;
    let lines = samples
        .iter()
        .zip(predictions)
        .map(|(s, p)| format!(r#"{{"id":{},"label":{},"scores":{}}}"#, json!(s.id), json!(p.label), json!(p.scores)));
    write_lines(output, lines)
}

fn run_generators(path: &Path, output: &Path, cfg: &PipelineConfig, verify: &VerifyArgs) -> Result<()> {
    let corpus = load(path)?;
    let samples = originals(&corpus);
    let wv = vectors(cfg)?;
    let classifier_box: Box<dyn Predictor> = match &verify.model {
        Some(model) => Box::new(BuiltinClassifier::new(
            load_model(model, Some(&corpus.header.labels), &wv)?,
            Arc::clone(&wv),
        )),
        None => verifier(&cfg.classifier, &samples, &corpus.header, &wv, &cfg.train_config())
            .map_err(classifier("verifier"))?,
    };
    let cad = generate(&samples, &wv, &cfg.generators(), classifier_box.as_ref()).map_err(generation)?;
    write_corpus_file(&cad_corpus(&corpus.header, &cad), output)?;
    println!("{} counterfactuals from {} samples -> {}", cad.len(), samples.len(), output.display());
    Ok(())
}

fn augment(path: &Path, cad_path: &Path, output: &Path) -> Result<()> {
    let corpus = load(path)?;
    let cad = load(cad_path)?;
    if !cad.is_empty() && cad.header != corpus.header {
        return Err(PipelineError::new(
            "augment",
            ErrorKind::Input,
            "counterfactual file header differs from the corpus header",
        ));
    }
    let ids: std::collections::HashSet<&str> = corpus.samples().map(|s| s.id.as_str()).collect();
    let mut records: Vec<Record> = corpus
        .records
        .iter()
        .filter(|r| matches!(r, Record::Sample(_)))
        .cloned()
        .collect();
    for cf in cad.counterfactuals() {
        if !ids.contains(cf.source_id.as_str()) {
            return Err(PipelineError::new(
                "augment",
                ErrorKind::Input,
                format!("counterfactual `{}` has no source `{}` in the corpus", cf.sample.id, cf.source_id),
            ));
        }
        records.push(Record::Counterfactual(cf.clone()));
    }
    let n = records.len();
    write_corpus_file(&Corpus::new(corpus.header.clone(), records), output)?;
    println!("{n} samples -> {}", output.display());
    Ok(())
}

/// Reads `{"id","label"}` lines; corpus files work too since their sample
/// lines carry both keys. Lines with a `format` key are skipped.
fn read_predictions(path: &Path) -> Result<HashMap<String, String>> {
    let err = input("evaluate");
    let file = File::open(path).map_err(|e| err(&format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(&e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| err(&format!("{}:{}: {e}", path.display(), i + 1)))?;
        if value.get("format").is_some() {
            continue;
        }
        let field = |k: &str| {
            value
                .get(k)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| err(&format!("{}:{}: missing string `{k}`", path.display(), i + 1)))
        };
        out.insert(field("id")?, field("label")?);
    }
    Ok(out)
}

fn evaluate(
    gold: &Path,
    pred: &Path,
    negative_label: Option<String>,
    include_negative: bool,
    output: Option<&Path>,
) -> Result<()> {
    let corpus = load(gold)?;
    let predictions = read_predictions(pred)?;
    let mut gold_labels = Vec::new();
    let mut pred_labels = Vec::new();
    for s in corpus.samples() {
        let p = predictions
            .get(&s.id)
            .ok_or_else(|| input("evaluate")(&format!("no prediction for `{}`", s.id)))?;
        gold_labels.push(s.label.clone());
        pred_labels.push(p.clone());
    }
    let negative = if include_negative {
        None
    } else {
        Some(negative_label.unwrap_or_else(|| corpus.header.negative_label.clone())).filter(|n| !n.is_empty())
    };
    let report = score(&gold_labels, &pred_labels, &corpus.header.labels, negative.as_deref())
        .map_err(|e| input("evaluate")(&e))?;
    write_json(output, &serde_json::to_value(&report).expect("report serializes"))
}

fn robustness(seed: u64, cfg: &SpuriousConfig, dump: Option<&Path>, output: Option<&Path>) -> Result<()> {
    if !(0.0..=1.0).contains(&cfg.confound_rate) {
        return Err(PipelineError::new(
            "config",
            ErrorKind::Config,
            format!("--confound-rate must be in [0, 1], got {}", cfg.confound_rate),
        ));
    }
    let bench = spurious_benchmark(seed, cfg);
    if let Some(dir) = dump {
        let err = input("output");
        std::fs::create_dir_all(dir).map_err(|e| err(&e))?;
        write_corpus_file(&Corpus::from_samples(bench.header.clone(), bench.train.clone()), &dir.join("train.jsonl"))?;
        write_corpus_file(&Corpus::from_samples(bench.header.clone(), bench.test.clone()), &dir.join("test.jsonl"))?;
        bench.vectors.save(dir.join("vectors.txt")).map_err(|e| err(&e))?;
    }
    let mut ablation = AblationConfig {
        tag_dim: coco_core::embed::DEFAULT_TAG_DIM,
        tag_seed: seed,
        ..AblationConfig::default()
    };
    ablation.train.seed = seed;
    ablation.synco.seed = seed;
    ablation.semco.seed = seed;
    let table = ablation_run(
        &bench.train,
        &bench.test,
        &bench.header,
        Arc::new(bench.vectors),
        &ablation,
        &GeneratorSet::ALL,
    )
    .map_err(|e| PipelineError::new("robustness", ErrorKind::Classifier, e))?;
    for row in &table.rows {
        log::info!("{:<7} cad {:>5}  accuracy {:.4}", row.config, row.cad_size, row.report.accuracy);
    }
    write_json(output, &table.to_json())
}

#[derive(Debug, Default, PartialEq)]
struct RunArgs {
    config: Option<PathBuf>,
    print_config: bool,
    overrides: Vec<(String, String)>,
}

/// An optional config path, then `--key value` or `--key=value` pairs and
/// `--print-config`.
fn parse_run_args(args: &[String]) -> Result<RunArgs> {
    let bad = |m: String| PipelineError::new("config", ErrorKind::Config, m);
    let mut out = RunArgs::default();
    let mut it = args.iter().peekable();
    if let Some(first) = it.next_if(|a| !a.starts_with("--")) {
        out.config = Some(PathBuf::from(first));
    }
    while let Some(arg) = it.next() {
        if arg == "--print-config" {
            out.print_config = true;
            continue;
        }
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| bad(format!("expected `--key value`, got `{arg}`")))?;
        match key.split_once('=') {
            Some((k, v)) => out.overrides.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| bad(format!("`--{key}` needs a value")))?;
                out.overrides.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

fn run(args: &[String]) -> Result<()> {
    let args = parse_run_args(args)?;
    let mut cfg = match &args.config {
        Some(path) => coco_core::pipeline::validate_config(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env()?;
    for (key, value) in args.overrides {
        match key.as_str() {
            // paths stay strings even when they look like numbers
            "embeddings.path" | "input.corpus" | "input.test" | "output.dir" => {
                cfg.set(&key, &Value::String(value))?
            }
            _ => cfg.set_flag(&key, &value)?,
        }
    }
    if args.print_config {
        return write_json(None, &cfg.to_json());
    }
    let report = run_pipeline(&cfg)?;
    write_json(None, &serde_json::to_value(&report).expect("report serializes"))?;
    log::info!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn serve_stub(model: &Path, addr: &str, v: &VectorArgs) -> Result<()> {
    let mut cfg = base_config()?;
    v.apply(&mut cfg)?;
    let wv = vectors(&cfg)?;
    let model = load_model(model, None, &wv)?;
    let server = StubServer::spawn(addr, BuiltinClassifier::new(model, wv))
        .map_err(|e| input("serve")(&e))?;
    println!("{}", server.endpoint());
    io::stdout().flush().ok();
    server.join();
    Ok(())
}
