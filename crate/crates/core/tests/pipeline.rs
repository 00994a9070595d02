use seqnovelty::clustering::{partition_corpus, ClusterDefinition};
use seqnovelty::corpus::{Label, MixtureGenerator};
use seqnovelty::detector::{train_detector, DetectorConfig, NoveltyDetector, Router};
use seqnovelty::lda::{fold_in_topicset, run_ensemble, EnsembleParams, FoldInParams};
use seqnovelty::lstm::{ModelDims, TrainConfig};
use seqnovelty::par;

fn small_config(seed: u64) -> DetectorConfig {
    DetectorConfig {
        dims: ModelDims {
            embed_dim: 6,
            hidden_dim: 6,
        },
        train: TrainConfig {
            epochs: 2,
            seed,
            ..Default::default()
        },
    }
}

#[test]
fn fold_in_agrees_with_training_assignment() {
    let gen = MixtureGenerator::partially_disjoint(2, 10, 2, 3, 0.3, 1).unwrap();
    let corpus = gen.generate(80, 0, (30, 40), 2).unwrap();
    let set = run_ensemble(&corpus, &EnsembleParams::fixed(vec![2], 3)).unwrap();
    let def = ClusterDefinition::per_topic(set.len()).unwrap();
    let partition = partition_corpus(&corpus, &set, &def).unwrap();
    let router = Router::informed(set.clone(), def, FoldInParams { iterations: 100, seed: 4 }).unwrap();
    let agree = corpus
        .sequences
        .iter()
        .zip(&partition.labels)
        .filter(|(s, &l)| router.route(&s.tokens) == l)
        .count();
    assert!(agree >= 76, "fold-in agreed on {agree}/80");
    let probs = fold_in_topicset(&corpus.sequences[0].tokens, &set, &FoldInParams::default());
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn bundle_round_trip_scores_identically() {
    let gen = MixtureGenerator::partially_disjoint(2, 5, 5, 3, 0.3, 5).unwrap();
    let all = gen.generate(60, 20, (5, 12), 6).unwrap();
    let train = all.filter(|s| s.label == Label::Normal);
    let set = run_ensemble(&train, &EnsembleParams::fixed(vec![2, 2], 7)).unwrap();
    let def = ClusterDefinition::from_groups("two", &[vec![0, 2], vec![1, 3]]).unwrap();
    let router = Router::informed(set, def, FoldInParams::default()).unwrap();
    let det = train_detector(&train, router, &small_config(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    det.save(dir.path()).unwrap();
    let back = NoveltyDetector::load(dir.path()).unwrap();
    assert_eq!(back.score_corpus(&all).unwrap(), det.score_corpus(&all).unwrap());
}

#[test]
fn detector_training_matches_on_both_paths() {
    let gen = MixtureGenerator::partially_disjoint(3, 4, 4, 2, 0.3, 9).unwrap();
    let train = gen.generate(60, 0, (5, 10), 10).unwrap();
    let run = || {
        let (router, _) = Router::kmeans(&train, Some(3), 11, 50).unwrap();
        train_detector(&train, router, &small_config(12)).unwrap()
    };
    let a = run();
    let b = par::sequential(run);
    assert_eq!(a.score_corpus(&train).unwrap(), b.score_corpus(&train).unwrap());
}

#[test]
fn novel_training_data_is_rejected() {
    let gen = MixtureGenerator::partially_disjoint(1, 4, 0, 2, 0.3, 1).unwrap();
    let corpus = gen.generate(5, 1, (3, 5), 2).unwrap();
    assert!(train_detector(&corpus, Router::Single, &small_config(0)).is_err());
}
