//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string,
//! which keeps the JS side to a `JSON.parse`.

use alcrowd_core::corpus::{normalize_tweet, tokenize};
use alcrowd_core::learners::{Hyperparams, LearnerKind, ProbDist};
use alcrowd_core::simulator::{
    generate_synthetic_corpus, prepare_repeat, run_active_learning, CellSeeds, ExperimentConfig,
    LearnerSpec, SynthSpec,
};
use alcrowd_core::strategies::{
    entropy_score, kl_qbc_score, least_confident_score, vote_entropy_score, StrategyKind,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Normalized {
    norm_text: String,
    tokens: Vec<String>,
}

pub fn normalize_json(raw: &str) -> String {
    let norm_text = normalize_tweet(raw);
    let tokens = tokenize(&norm_text);
    serde_json::to_string(&Normalized { norm_text, tokens }).expect("plain data serializes")
}

/// Normalized text and tokens of a raw tweet.
#[wasm_bindgen]
pub fn normalize(raw: &str) -> String {
    normalize_json(raw)
}

#[derive(Serialize)]
struct ScoreCurves {
    p: Vec<f64>,
    least_confident: Vec<f64>,
    entropy: Vec<f64>,
}

pub fn score_curves_json(points: usize) -> alcrowd_core::Result<String> {
    let n = points.clamp(2, 2001);
    let p: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut lc = Vec::with_capacity(n);
    let mut ent = Vec::with_capacity(n);
    for &q in &p {
        let d = ProbDist::binary(q);
        lc.push(least_confident_score(&d)?);
        ent.push(entropy_score(&d)?);
    }
    Ok(serde_json::to_string(&ScoreCurves {
        p,
        least_confident: lc,
        entropy: ent,
    })
    .expect("plain data serializes"))
}

/// Least-confident and entropy scores over a grid of P(positive).
#[wasm_bindgen]
pub fn score_curves(points: usize) -> Result<String, JsError> {
    score_curves_json(points).map_err(to_js)
}

#[derive(Serialize)]
struct CommitteeScores {
    votes: Vec<usize>,
    consensus: Vec<f64>,
    vote_entropy: f64,
    kl_divergence: f64,
}

pub fn committee_scores_json(p_positive: &[f64]) -> alcrowd_core::Result<String> {
    let members: Vec<ProbDist> = p_positive
        .iter()
        .map(|&p| ProbDist::new(vec![1.0 - p, p]))
        .collect::<alcrowd_core::Result<_>>()?;
    let ballots: Vec<usize> = members.iter().map(|m| m.argmax()).collect();
    let mut votes = vec![0usize; 2];
    for &b in &ballots {
        votes[b] += 1;
    }
    let consensus = (0..2)
        .map(|c| members.iter().map(|m| m.probs()[c]).sum::<f64>() / members.len().max(1) as f64)
        .collect();
    Ok(serde_json::to_string(&CommitteeScores {
        vote_entropy: vote_entropy_score(&ballots, 2)?,
        kl_divergence: kl_qbc_score(&members)?,
        votes,
        consensus,
    })
    .expect("plain data serializes"))
}

/// Vote entropy and KL disagreement of a committee, one P(positive) per member.
#[wasm_bindgen]
pub fn committee_scores(p_positive: &[f64]) -> Result<String, JsError> {
    committee_scores_json(p_positive).map_err(to_js)
}

#[derive(Serialize)]
struct DemoCurve {
    strategy: StrategyKind,
    labels_used: Vec<usize>,
    f1_pos: Vec<f64>,
}

pub fn al_demo_json(seed: u64, n_docs: usize, signal: f64, batch_size: usize) -> alcrowd_core::Result<String> {
    let spec = SynthSpec {
        n_docs,
        class_vocab: 1500,
        background_vocab: 1000,
        signal,
        noise: 0.0,
        zipf_exponent: 0.5,
        seed,
        ..SynthSpec::default()
    };
    let docs = generate_synthetic_corpus(&spec)?;
    let test_size = n_docs / 4;
    let config = ExperimentConfig {
        train_size: 0,
        test_size,
        seed_size: batch_size,
        batch_size,
        repeats: 1,
        master_seed: seed,
        ..ExperimentConfig::default()
    };
    let ctx = prepare_repeat(&config, &docs, 0)?;
    let learner = LearnerSpec::Single(LearnerKind::Lr);
    let curves = [StrategyKind::Random, StrategyKind::Entropy]
        .into_iter()
        .map(|strategy| {
            let run = run_active_learning(
                &ctx,
                strategy,
                &learner,
                0,
                batch_size,
                &Hyperparams::default(),
                CellSeeds::for_repeat(seed, 0),
            )?;
            Ok(DemoCurve {
                strategy,
                labels_used: run.cells.iter().map(|c| c.labels_used).collect(),
                f1_pos: run.cells.iter().map(|c| c.f1_pos).collect(),
            })
        })
        .collect::<alcrowd_core::Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&curves).expect("plain data serializes"))
}

/// Random vs entropy learning curves of logistic regression on a small
/// synthetic corpus.
#[wasm_bindgen]
pub fn al_demo(seed: u32, n_docs: usize, signal: f64, batch_size: usize) -> Result<String, JsError> {
    al_demo_json(u64::from(seed), n_docs, signal, batch_size).map_err(to_js)
}
