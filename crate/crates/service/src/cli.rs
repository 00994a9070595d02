use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use seqnovelty::baselines::{
    bow_sp_features, pattern_features, patterns_json, prefixspan_top_k, IsolationForest, KnnLcs,
    KnnMinkowski,
};
use seqnovelty::clustering::{
    partition_corpus, project_topics, ClusterDefinition, ProjectionParams,
};
use seqnovelty::corpus::{
    bag_of_words, discretize_time_series, read_anomaly_indices, read_labels, read_sequence_file,
    read_time_series, tokenize_text, windowize, BinConfig, Corpus, Label, MixtureGenerator,
    PointLabel,
};
use seqnovelty::detector::{
    evaluate, format_table, train_detector, DetectorConfig, EvalReport, NoveltyDetector, Router,
    ScoredSequence, ThresholdPolicy,
};
use seqnovelty::lda::{run_ensemble, EnsembleParams, EnsembleSpec, FoldInParams, TopicSet};
use seqnovelty::lstm::{ModelDims, TrainConfig};
use seqnovelty_service::api::evaluate_detector;
use seqnovelty_service::{router, AppState, ServiceConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "seqnov", version, about = "Novelty detection for discrete sequences")]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a sequence file (plus optional label sidecar) into a corpus.
    Ingest(IngestArgs),
    /// Bin a time series into symbols and cut it into labeled windows.
    Discretize(DiscretizeArgs),
    /// Sample a synthetic mixture corpus, split into train/validation/test.
    Synth(SynthArgs),
    /// Fit an LDA ensemble.
    Lda(LdaArgs),
    /// Emit the topic projection consumed by the clustering UI.
    ProjectTopics(ProjectArgs),
    /// Check or build a cluster definition over a topic set.
    Cluster(ClusterArgs),
    /// Train a detector bundle.
    Train(TrainArgs),
    /// Score sequences with a detector.
    Score(ScoreArgs),
    /// Evaluate a detector on labeled data.
    Eval(EvalArgs),
    /// Run a classical baseline.
    Baseline(BaselineArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// One sequence per line, whitespace separated.
    #[arg(long)]
    sequences: PathBuf,
    /// `normal` / `novel` per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_frequency: usize,
    /// Treat lines as free text: lowercase and split on non-alphanumerics.
    #[arg(long)]
    text: bool,
    /// Reuse the vocabulary of an existing corpus instead of building one.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiscretizeArgs {
    /// One value per line.
    #[arg(long)]
    series: PathBuf,
    /// JSON list of anomalous point indices.
    #[arg(long)]
    anomalies: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    low: f64,
    #[arg(long, default_value_t = 100.0)]
    high: f64,
    #[arg(long, default_value_t = 0.1)]
    bin_width: f64,
    #[arg(long, default_value_t = 40)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    min_frequency: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    components: usize,
    #[arg(long, default_value_t = 12)]
    private: usize,
    #[arg(long, default_value_t = 24)]
    shared: usize,
    #[arg(long, default_value_t = 4)]
    branching: usize,
    #[arg(long, default_value_t = 0.3)]
    rate: f64,
    #[arg(long, default_value_t = 900)]
    normal: usize,
    #[arg(long, default_value_t = 300)]
    novel: usize,
    #[arg(long, default_value_t = 20)]
    min_len: usize,
    #[arg(long, default_value_t = 40)]
    max_len: usize,
    #[arg(long, default_value_t = 0.7)]
    train: f64,
    #[arg(long, default_value_t = 0.15)]
    validation: f64,
    /// Receives train.json, validation.json and test.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LdaArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Topic count of each run.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_runs")]
    ks: Option<Vec<usize>>,
    /// Number of runs with K drawn from `k_min..=k_max`.
    #[arg(long)]
    random_runs: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    topicset: PathBuf,
    /// Corpus supplying the vocabulary.
    #[arg(long)]
    corpus: PathBuf,
    /// JSON object mapping words to class labels.
    #[arg(long)]
    word_classes: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    top_words: usize,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    topicset: PathBuf,
    /// Existing definition to validate.
    #[arg(long, group = "source")]
    definition: Option<PathBuf>,
    /// Topic groups, e.g. `0,3,4;1,2;5`.
    #[arg(long, group = "source")]
    groups: Option<String>,
    /// One cluster per topic.
    #[arg(long, group = "source")]
    per_topic: bool,
    /// One cluster holding every topic.
    #[arg(long, group = "source")]
    single: bool,
    #[arg(long, default_value = "cli")]
    name: String,
    /// Training corpus; prints the partition sizes.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouterKind {
    Informed,
    Single,
    Kmeans,
    /// Argmax topic of a single-run topic set.
    Lda,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "informed")]
    router: RouterKind,
    #[arg(long)]
    topicset: Option<PathBuf>,
    #[arg(long)]
    definition: Option<PathBuf>,
    /// k-means cluster count; picked by silhouette when absent.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    #[arg(long, default_value_t = 128)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5.0)]
    clip_norm: f64,
    #[arg(long, default_value_t = 200)]
    max_len: usize,
    #[arg(long, default_value_t = 100)]
    fold_in_iterations: usize,
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    detector: PathBuf,
    /// Sequence file of raw tokens.
    #[arg(long, conflicts_with = "corpus")]
    sequences: Option<PathBuf>,
    /// Corpus JSON encoded with the detector's vocabulary.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detector: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Threshold-selection corpus; defaults to half of the test corpus.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Global detector to report next to the decomposed one.
    #[arg(long)]
    global: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    per_cluster_thresholds: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Knn,
    KnnLcs,
    Isoforest,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureKind {
    Bow,
    Sp,
    BowSp,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    kind: BaselineKind,
    #[arg(long)]
    train: PathBuf,
    /// Corpus to score; evaluated when it holds both labels.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "bow")]
    features: FeatureKind,
    #[arg(long, default_value_t = 800)]
    top_patterns: usize,
    #[arg(long, default_value_t = 2)]
    min_support: usize,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 256)]
    subsample: usize,
    /// Per-sequence scores as JSON.
    #[arg(long)]
    scores_out: Option<PathBuf>,
    /// Mined patterns as JSON (pattern features only).
    #[arg(long)]
    patterns_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// TOML or JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_vec_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Discretize(a) => discretize(a),
        Command::Synth(a) => synth(a, seed),
        Command::Lda(a) => lda(a, seed),
        Command::ProjectTopics(a) => project(a, seed),
        Command::Cluster(a) => cluster(a),
        Command::Train(a) => train(a, seed),
        Command::Score(a) => score(a),
        Command::Eval(a) => eval(a, seed),
        Command::Baseline(a) => baseline(a, seed),
        Command::Serve(a) => serve(a, seed),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let docs = if a.text {
        fs::read_to_string(&a.sequences)?
            .lines()
            .map(tokenize_text)
            .collect::<Vec<_>>()
    } else {
        read_sequence_file(&a.sequences)?
    };
    let labels = a.labels.as_deref().map(read_labels).transpose()?;
    let corpus = match &a.vocabulary {
        Some(v) => {
            let base: Corpus = read_json(v)?;
            Corpus::encode_with(base.vocabulary, &docs, labels.as_deref())?
        }
        None => Corpus::from_raw(&docs, labels.as_deref(), a.min_frequency)?,
    };
    write_json(&a.out, &corpus)?;
    println!(
        "{} sequences, vocabulary {} ({} normal, {} novel)",
        corpus.len(),
        corpus.vocabulary.len(),
        corpus.count(Label::Normal),
        corpus.count(Label::Novel)
    );
    Ok(())
}

fn discretize(a: DiscretizeArgs) -> Result<()> {
    let values = read_time_series(&a.series)?;
    let cfg = BinConfig::new(a.low, a.high, a.bin_width, a.window)?;
    let symbols = discretize_time_series(&values, &cfg)?;
    let anomalies = a.anomalies.as_deref().map(read_anomaly_indices).transpose()?.unwrap_or_default();
    let points = PointLabel::from_indices(values.len(), &anomalies)?;
    let windows = windowize(&symbols, &points, cfg.window_length)?;
    let (docs, labels): (Vec<Vec<String>>, Vec<Label>) = windows.into_iter().unzip();
    let corpus = Corpus::from_raw(&docs, Some(&labels), a.min_frequency)?;
    write_json(&a.out, &corpus)?;
    println!(
        "{} windows ({} novel), {} bins",
        corpus.len(),
        corpus.count(Label::Novel),
        cfg.num_bins()
    );
    Ok(())
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let gen = MixtureGenerator::partially_disjoint(
        a.components,
        a.private,
        a.shared,
        a.branching,
        a.rate,
        seed,
    )?;
    let corpus = gen.generate(a.normal, a.novel, (a.min_len, a.max_len), seed)?;
    let (train, val, test) = corpus.stratified_split(a.train, a.validation, seed)?;
    fs::create_dir_all(&a.out_dir)?;
    write_json(&a.out_dir.join("train.json"), &train)?;
    write_json(&a.out_dir.join("validation.json"), &val)?;
    write_json(&a.out_dir.join("test.json"), &test)?;
    write_json(&a.out_dir.join("generator.json"), &gen)?;
    println!("train {}, validation {}, test {}", train.len(), val.len(), test.len());
    Ok(())
}

fn lda(a: LdaArgs, seed: u64) -> Result<()> {
    let corpus: Corpus = read_json(&a.corpus)?;
    let spec = match (a.ks, a.random_runs) {
        (Some(ks), _) => EnsembleSpec::Fixed(ks),
        (None, Some(n)) => EnsembleSpec::Random {
            num_runs: n,
            k_min: a.k_min,
            k_max: a.k_max,
        },
        (None, None) => bail!("give --ks or --random-runs"),
    };
    let params = EnsembleParams {
        spec,
        alpha: a.alpha,
        beta: a.beta,
        iterations: a.iterations,
        burn_in: a.burn_in,
        seed,
    };
    let set = run_ensemble(&corpus, &params)?;
    write_json(&a.out, &set)?;
    println!("{} runs, {} topics", set.runs.len(), set.len());
    Ok(())
}

fn project(a: ProjectArgs, seed: u64) -> Result<()> {
    let set: TopicSet = read_json(&a.topicset)?;
    let corpus: Corpus = read_json(&a.corpus)?;
    let classes: HashMap<String, String> = match &a.word_classes {
        Some(p) => read_json(p)?,
        None => HashMap::new(),
    };
    let mut params = ProjectionParams {
        top_words: a.top_words,
        ..Default::default()
    };
    params.tsne.perplexity = a.perplexity;
    params.tsne.iterations = a.iterations;
    params.tsne.seed = seed;
    let projection = project_topics(&set, &corpus.vocabulary, &classes, &params)?;
    write_json(&a.out, &projection)?;
    println!(
        "{} topics projected (KL {:.4} -> {:.4})",
        projection.topics.len(),
        projection.tsne_kl[0],
        projection.tsne_kl[1]
    );
    Ok(())
}

fn parse_groups(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(';')
        .map(|g| {
            g.split(',')
                .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad topic id `{t}`")))
                .collect()
        })
        .collect()
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let set: TopicSet = read_json(&a.topicset)?;
    let def = if let Some(p) = &a.definition {
        read_json::<ClusterDefinition>(p)?
    } else if let Some(g) = &a.groups {
        ClusterDefinition::from_groups(a.name.clone(), &parse_groups(g)?)?
    } else if a.per_topic {
        ClusterDefinition::per_topic(set.len())?
    } else if a.single {
        ClusterDefinition::single(set.len())
    } else {
        bail!("give one of --definition, --groups, --per-topic, --single");
    };
    def.validate(set.len())?;
    println!("definition `{}`: {} clusters over {} topics", def.name, def.k, set.len());
    if let Some(c) = &a.corpus {
        let corpus: Corpus = read_json(c)?;
        let p = partition_corpus(&corpus, &set, &def)?;
        println!("partition sizes {:?}", p.sizes());
    }
    if let Some(out) = &a.out {
        write_json(out, &def)?;
    }
    Ok(())
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let corpus: Corpus = read_json(&a.corpus)?;
    let fold_in = FoldInParams {
        iterations: a.fold_in_iterations,
        seed,
    };
    let topicset = || -> Result<TopicSet> {
        read_json(a.topicset.as_deref().context("--topicset is required for this router")?)
    };
    let router = match a.router {
        RouterKind::Single => Router::Single,
        RouterKind::Informed => {
            let def: ClusterDefinition =
                read_json(a.definition.as_deref().context("--definition is required")?)?;
            Router::informed(topicset()?, def, fold_in)?
        }
        RouterKind::Lda => Router::lda_argmax(topicset()?, fold_in)?,
        RouterKind::Kmeans => {
            let (r, scores) = Router::kmeans(&corpus, a.k, seed, 100)?;
            for (k, s) in scores {
                println!("k = {k}: silhouette {s:.4}");
            }
            r
        }
    };
    let config = DetectorConfig {
        dims: ModelDims {
            embed_dim: a.embed_dim,
            hidden_dim: a.hidden_dim,
        },
        train: TrainConfig {
            epochs: a.epochs,
            batch_size: a.batch_size,
            learning_rate: a.learning_rate,
            clip_norm: a.clip_norm,
            max_len: a.max_len,
            seed,
            ..Default::default()
        },
    };
    let det = train_detector(&corpus, router, &config)?;
    det.save(&a.out)?;
    println!(
        "{} detector with {} clusters, sizes {:?}",
        det.router.kind(),
        det.k(),
        det.cluster_sizes
    );
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let det = NoveltyDetector::load(&a.detector)?;
    let encoded: Vec<Vec<u32>> = match (&a.sequences, &a.corpus) {
        (Some(p), _) => read_sequence_file(p)?
            .iter()
            .map(|d| det.vocabulary.encode(d))
            .collect::<Result<_, _>>()?,
        (None, Some(p)) => read_json::<Corpus>(p)?
            .sequences
            .into_iter()
            .map(|s| s.tokens)
            .collect(),
        (None, None) => bail!("give --sequences or --corpus"),
    };
    let refs: Vec<&[u32]> = encoded.iter().map(Vec::as_slice).collect();
    let scores = det.score_batch(&refs)?;
    match &a.out {
        Some(out) => write_json(out, &scores)?,
        None => {
            for s in &scores {
                println!("{}\t{}", s.cluster, s.perplexity);
            }
        }
    }
    Ok(())
}

fn split_validation(test: Corpus, validation: Option<&Path>, seed: u64) -> Result<(Corpus, Corpus)> {
    Ok(match validation {
        Some(v) => (test, read_json(v)?),
        None => {
            let (_, val, test) = test.stratified_split(0.0, 0.5, seed)?;
            (test, val)
        }
    })
}

fn print_reports(reports: &[EvalReport], out: Option<&Path>) -> Result<()> {
    print!("{}", format_table(reports));
    if let Some(out) = out {
        if reports.len() == 1 {
            write_json(out, &reports[0])?;
        } else {
            write_json(out, &reports)?;
        }
    }
    Ok(())
}

fn eval(a: EvalArgs, seed: u64) -> Result<()> {
    let det = NoveltyDetector::load(&a.detector)?;
    let (test, val) = split_validation(read_json(&a.test)?, a.validation.as_deref(), seed)?;
    let policy = if a.per_cluster_thresholds {
        ThresholdPolicy::YoudenPerCluster
    } else {
        ThresholdPolicy::YoudenGlobal
    };
    let global = a.global.as_deref().map(NoveltyDetector::load).transpose()?;
    let method = a
        .method
        .unwrap_or_else(|| format!("{} LSTM (k={})", det.router.kind(), det.k()));
    let mut reports = vec![evaluate_detector(&det, &method, &test, &val, policy, global.as_ref())?];
    if let Some(g) = &global {
        reports.push(evaluate_detector(g, "Global LSTM", &test, &val, policy, None)?);
    }
    print_reports(&reports, a.out.as_deref())
}

fn baseline(a: BaselineArgs, seed: u64) -> Result<()> {
    let train: Corpus = read_json(&a.train)?;
    let test: Corpus = read_json(&a.test)?;
    let validation: Option<Corpus> = a.validation.as_deref().map(read_json).transpose()?;
    let train_seqs = train.token_lists();
    let v = train.vocabulary.len();

    let (name, scorer): (String, Box<dyn Fn(&[u32]) -> Result<f64>>) = match a.kind {
        BaselineKind::Knn => {
            let knn = KnnMinkowski::fit(&train_seqs, a.p)?;
            let k = a.k;
            (
                format!("kNN (Minkowski p={}, k={k})", a.p),
                Box::new(move |s| Ok(knn.score(s, k)?)),
            )
        }
        BaselineKind::KnnLcs => {
            let knn = KnnLcs::fit(&train_seqs)?;
            let k = a.k;
            (format!("kNN (LCS, k={k})"), Box::new(move |s| Ok(knn.score(s, k)?)))
        }
        BaselineKind::Isoforest => {
            let patterns = match a.features {
                FeatureKind::Bow => Vec::new(),
                _ => prefixspan_top_k(&train_seqs, a.top_patterns, a.min_support)?,
            };
            if let Some(p) = &a.patterns_out {
                write_json(p, &patterns_json(&patterns, &train.vocabulary))?;
            }
            let kind = a.features;
            let features = move |s: &[u32]| match kind {
                FeatureKind::Bow => bag_of_words(s, v),
                FeatureKind::Sp => pattern_features(s, &patterns),
                FeatureKind::BowSp => bow_sp_features(s, v, &patterns),
            };
            let x: Vec<Vec<f64>> = train_seqs.iter().map(|s| features(s)).collect();
            let forest = IsolationForest::fit(&x, a.trees, a.subsample, seed)?;
            let label = match kind {
                FeatureKind::Bow => "BoW",
                FeatureKind::Sp => "SP",
                FeatureKind::BowSp => "BoW+SP",
            };
            (
                format!("IsoForest ({label})"),
                Box::new(move |s| Ok(forest.score(&features(s))?)),
            )
        }
    };

    let score_all = |c: &Corpus| -> Result<Vec<ScoredSequence>> {
        c.sequences
            .iter()
            .map(|s| {
                Ok(ScoredSequence {
                    cluster: 0,
                    score: scorer(&s.tokens)?,
                    label: s.label,
                })
            })
            .collect()
    };
    let scored = score_all(&test)?;
    if let Some(p) = &a.scores_out {
        let plain: Vec<f64> = scored.iter().map(|s| s.score).collect();
        write_json(p, &plain)?;
    }
    if test.count(Label::Normal) == 0 || test.count(Label::Novel) == 0 {
        for s in &scored {
            println!("{}", s.score);
        }
        return Ok(());
    }
    let (t, val) = match validation {
        Some(v) => (scored, score_all(&v)?),
        None => {
            let (_, val, t) = test.stratified_split(0.0, 0.5, seed)?;
            (score_all(&t)?, score_all(&val)?)
        }
    };
    let report = evaluate(name, &t, &val, ThresholdPolicy::YoudenGlobal)?;
    print_reports(&[report], a.out.as_deref())
}

fn serve(a: ServeArgs, seed: u64) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig {
            seed,
            ..Default::default()
        },
    };
    if let Some(r) = a.root {
        config.root = r;
    }
    if let Some(h) = a.host {
        config.host = h;
    }
    if let Some(u) = a.ui_dir {
        config.ui_dir = Some(u);
    }
    config = config.with_env()?;
    if let Some(p) = a.port {
        config.port = p;
    }
    let addr = format!("{}:{}", config.host, config.port);
    let state = AppState::new(config)?;
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
