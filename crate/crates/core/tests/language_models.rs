use seqnovelty::corpus::Vocabulary;
use seqnovelty::lstm::{train, LstmLanguageModel, ModelDims, TrainConfig};
use seqnovelty::par;

const V: usize = 8;

fn cycle(pattern: &[u32], len: usize, shift: usize) -> Vec<u32> {
    (0..len).map(|i| pattern[(i + shift) % pattern.len()]).collect()
}

fn fit(seqs: &[Vec<u32>], seed: u64) -> LstmLanguageModel {
    let dims = ModelDims {
        embed_dim: 8,
        hidden_dim: 12,
    };
    let mut model = LstmLanguageModel::init(V, dims, seed).unwrap();
    let refs: Vec<&[u32]> = seqs.iter().map(Vec::as_slice).collect();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 8,
        learning_rate: 1e-2,
        seed,
        ..Default::default()
    };
    train(&mut model, &refs, &cfg).unwrap();
    model
}

#[test]
fn model_prefers_its_own_language() {
    // language A cycles 3 4 5, language B cycles 5 4 3 6 7
    let a: Vec<Vec<u32>> = (0..24).map(|i| cycle(&[3, 4, 5], 6 + i % 7, i)).collect();
    let b: Vec<Vec<u32>> = (0..24).map(|i| cycle(&[5, 4, 3, 6, 7], 6 + i % 7, i)).collect();
    let model = fit(&a, 1);
    let mean = |seqs: &[Vec<u32>]| {
        seqs.iter().map(|s| model.perplexity(s).unwrap()).sum::<f64>() / seqs.len() as f64
    };
    let (pa, pb) = (mean(&a), mean(&b));
    assert!(pa < 1.5, "in-language perplexity {pa}");
    assert!(pb > 3.0 * pa, "out-of-language {pb} vs {pa}");
}

#[test]
fn checkpoint_round_trip_preserves_scores() {
    let a: Vec<Vec<u32>> = (0..10).map(|i| cycle(&[3, 4, 5, 6], 5 + i, i)).collect();
    let model = fit(&a, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    model.save(&path).unwrap();
    let back = LstmLanguageModel::load(&path).unwrap();
    assert_eq!(back, model);
    for s in &a {
        assert_eq!(
            back.perplexity(s).unwrap().to_bits(),
            model.perplexity(s).unwrap().to_bits()
        );
    }
}

#[test]
fn training_is_identical_on_both_paths() {
    let a: Vec<Vec<u32>> = (0..20).map(|i| cycle(&[3, 7, 4], 4 + i % 5, i)).collect();
    let parallel = fit(&a, 3);
    let sequential = par::sequential(|| fit(&a, 3));
    assert_eq!(parallel.params(), sequential.params());
}

#[test]
fn end_marker_is_predicted() {
    let model = LstmLanguageModel::init(V, ModelDims::default(), 0).unwrap();
    let dists = model.forward(&[3, 4]).unwrap();
    assert_eq!(dists.len(), 3);
    let nll = model.target_nll(&[3, 4]).unwrap();
    assert!((nll[2] + dists[2][Vocabulary::EOS_ID as usize].ln()).abs() < 1e-12);
}
