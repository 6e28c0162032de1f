//! Synthetic labeled corpora with class-indicative and background tokens.
//!
//! Each token slot of a document is drawn from its class's indicative
//! vocabulary with probability `signal`, otherwise from a shared background
//! vocabulary. Both draws follow a Zipf law over vocabulary rank, so rare
//! indicative words keep turning up as more documents are labeled. The
//! emitted label is flipped with probability `noise`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_docs: usize,
    /// Indicative tokens per class; the two classes never share them.
    pub class_vocab: usize,
    pub background_vocab: usize,
    /// Probability that a document's true class is positive.
    pub balance: f64,
    /// Probability that a token slot draws from the class vocabulary.
    pub signal: f64,
    /// Probability that the emitted label is flipped.
    pub noise: f64,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_docs: 1000,
            class_vocab: 200,
            background_vocab: 2000,
            balance: 0.5,
            signal: 0.9,
            noise: 0.02,
            doc_len_min: 8,
            doc_len_max: 16,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::DegenerateSpec(m.to_string()));
        if self.n_docs == 0 {
            return fail("n_docs must be at least 1");
        }
        if self.class_vocab == 0 || self.background_vocab == 0 {
            return fail("vocabulary sizes must be at least 1");
        }
        for (name, p) in [
            ("balance", self.balance),
            ("signal", self.signal),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::DegenerateSpec(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.doc_len_min == 0 || self.doc_len_max < self.doc_len_min {
            return fail("document length range is empty");
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return fail("zipf_exponent must be finite and non-negative");
        }
        Ok(())
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable, unique pseudo-word for a token index.
pub fn pseudo_word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    // offset so every word has at least two syllables
    let mut n = index + base;
    let mut syllables = Vec::new();
    while n > 0 {
        let s = n % base;
        syllables.push([CONSONANTS[s / VOWELS.len()], VOWELS[s % VOWELS.len()]]);
        n /= base;
    }
    syllables
        .iter()
        .rev()
        .flat_map(|s| s.iter().map(|&b| b as char))
        .collect()
}

fn zipf(n: usize, exponent: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-exponent)))
        .expect("vocabulary is non-empty")
}

pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<Vec<Document>> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let class_dist = zipf(spec.class_vocab, spec.zipf_exponent);
    let background_dist = zipf(spec.background_vocab, spec.zipf_exponent);
    let width = spec.n_docs.to_string().len().max(6);

    let docs = (0..spec.n_docs)
        .map(|i| {
            let class: Label = Label::from(rng.gen_bool(spec.balance));
            let len = rng.gen_range(spec.doc_len_min..=spec.doc_len_max);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let token = if rng.gen_bool(spec.signal) {
                        usize::from(class) * spec.class_vocab + class_dist.sample(&mut rng)
                    } else {
                        2 * spec.class_vocab + background_dist.sample(&mut rng)
                    };
                    pseudo_word(token)
                })
                .collect();
            let label = if rng.gen_bool(spec.noise) { 1 - class } else { class };
            let mut doc = Document::new(format!("syn-{i:0width$}"), words.join(" "))
                .with_label(label)
                .with_lang("en");
            doc.source = Some("synthetic".into());
            doc
        })
        .collect();
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pseudo_words_are_unique() {
        let words: HashSet<String> = (0..20_000).map(pseudo_word).collect();
        assert_eq!(words.len(), 20_000);
        assert!(words.iter().all(|w| w.len() >= 4));
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SynthSpec {
            n_docs: 50,
            seed: 17,
            ..SynthSpec::default()
        };
        assert_eq!(
            generate_synthetic_corpus(&spec).unwrap(),
            generate_synthetic_corpus(&spec).unwrap()
        );
    }

    #[test]
    fn full_balance_gives_one_class() {
        let spec = SynthSpec {
            n_docs: 30,
            balance: 1.0,
            noise: 0.0,
            ..SynthSpec::default()
        };
        let docs = generate_synthetic_corpus(&spec).unwrap();
        assert!(docs.iter().all(|d| d.label == Some(1)));
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        for spec in [
            SynthSpec {
                class_vocab: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                background_vocab: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                n_docs: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                signal: 1.5,
                ..SynthSpec::default()
            },
            SynthSpec {
                doc_len_min: 5,
                doc_len_max: 4,
                ..SynthSpec::default()
            },
        ] {
            assert!(matches!(
                generate_synthetic_corpus(&spec),
                Err(Error::DegenerateSpec(_))
            ));
        }
    }
}
