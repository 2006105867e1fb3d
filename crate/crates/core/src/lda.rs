//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! [`TopicModel`] holds the frozen topic-word counts and is what gets
//! persisted; [`TopicModelState`] adds the per-token assignments and
//! document-topic counts of the training corpus.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::features::{FeatureBlock, SparseVector};
use crate::textprep::TokenizedDoc;
use crate::tfidf::Vocabulary;

pub const FORMAT_HEADER: &str = "# motivmine-lda v1";
pub const DEFAULT_SWEEPS: usize = 1000;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_FOLD_IN_SWEEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
    pub fold_in_sweeps: usize,
    /// Record the collapsed log-likelihood after every sweep.
    pub track_likelihood: bool,
}

impl LdaParams {
    /// `alpha = 50 / k`, `beta = 0.01`, 1000 sweeps.
    pub fn new(k: usize) -> LdaParams {
        LdaParams {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: DEFAULT_BETA,
            sweeps: DEFAULT_SWEEPS,
            seed: 0,
            fold_in_sweeps: DEFAULT_FOLD_IN_SWEEPS,
            track_likelihood: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("topic count must be in 1..=65535, got {}", self.k)));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidArgument("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// Topic-word counts with their priors: everything needed to rank terms and
/// fold in unseen documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub sweeps_done: usize,
    vocab: Vocabulary,
    /// Row-major `k x V`.
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
}

impl TopicModel {
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_kw[k * self.vocab.len() + w]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    /// `phi[k][w] = (n_kw + beta) / (n_k + V beta)`.
    pub fn topic_word_prob(&self, k: usize, w: usize) -> f64 {
        let v = self.vocab.len() as f64;
        (self.topic_word_count(k, w) as f64 + self.beta) / (self.n_k[k] as f64 + v * self.beta)
    }

    pub fn top_terms(&self, n: usize) -> TopicSummary {
        let v = self.vocab.len();
        let topics = (0..self.k)
            .map(|k| {
                let mut ranked: Vec<(String, f64)> = (0..v)
                    .map(|w| (self.vocab.term(w).to_string(), self.topic_word_prob(k, w)))
                    .collect();
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                ranked.truncate(n);
                ranked
            })
            .collect();
        TopicSummary {
            topics,
            labels: vec![None; self.k],
        }
    }

    fn word_ids(&self, tokens: &[String]) -> Vec<u32> {
        tokens
            .iter()
            .filter_map(|t| self.vocab.index_of(t))
            .map(|i| i as u32)
            .collect()
    }

    /// Topic proportions for an unseen document: Gibbs sweeps over its tokens
    /// with the topic-word counts held fixed.
    pub fn fold_in(&self, tokens: &[String], sweeps: usize, seed: u64, stream: u64) -> Vec<f64> {
        let words = self.word_ids(tokens);
        let k = self.k;
        if words.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        let mut n_dk = vec![0u32; k];
        for &t in &z {
            n_dk[t] += 1;
        }
        let v = self.vocab.len();
        let vbeta = v as f64 * self.beta;
        let mut p = vec![0.0; k];
        for _ in 0..sweeps {
            for (i, &w) in words.iter().enumerate() {
                n_dk[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (n_dk[t] as f64 + self.alpha) * (self.n_kw[t * v + w as usize] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    p[t] = total;
                }
                let new = sample_cumulative(&p, total, &mut rng);
                z[i] = new;
                n_dk[new] += 1;
            }
        }
        theta(&n_dk, words.len(), self.alpha)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "K={}", self.k).unwrap();
        writeln!(out, "alpha={:?}", self.alpha).unwrap();
        writeln!(out, "beta={:?}", self.beta).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "sweeps={}", self.sweeps_done).unwrap();
        writeln!(out, "V={}", self.vocab.len()).unwrap();
        writeln!(out, "vocab_hash={}", self.vocab.fingerprint()).unwrap();
        let v = self.vocab.len();
        for k in 0..self.k {
            let row: Vec<String> = self.n_kw[k * v..(k + 1) * v].iter().map(u32::to_string).collect();
            writeln!(out, "{}", row.join("\t")).unwrap();
        }
        out
    }

    /// Parses [`TopicModel::to_text`] output. The vocabulary must be the one
    /// the model was fitted with; its hash is checked.
    pub fn from_text(text: &str, vocab: Vocabulary) -> Result<TopicModel> {
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(Error::Format("not a motivmine LDA model (missing header)".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().unwrap_or_default();
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| Error::Format(format!("expected `{name}=`, found `{line}`")))
        };
        let num_err = |name: &str| Error::Format(format!("bad value for `{name}`"));
        let k: usize = field("K")?.parse().map_err(|_| num_err("K"))?;
        let alpha: f64 = field("alpha")?.parse().map_err(|_| num_err("alpha"))?;
        let beta: f64 = field("beta")?.parse().map_err(|_| num_err("beta"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| num_err("seed"))?;
        let sweeps_done: usize = field("sweeps")?.parse().map_err(|_| num_err("sweeps"))?;
        let v: usize = field("V")?.parse().map_err(|_| num_err("V"))?;
        let hash = field("vocab_hash")?;
        if v != vocab.len() || hash != vocab.fingerprint() {
            return Err(Error::Format("LDA model was fitted with a different vocabulary".into()));
        }
        let mut n_kw = Vec::with_capacity(k * v);
        for row in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing count row for topic {row}")))?;
            let before = n_kw.len();
            for cell in line.split('\t').filter(|c| !c.is_empty()) {
                n_kw.push(cell.parse::<u32>().map_err(|_| Error::Format(format!("bad count in topic {row}")))?);
            }
            if n_kw.len() - before != v {
                return Err(Error::Format(format!("topic {row} has {} counts, expected {v}", n_kw.len() - before)));
            }
        }
        let n_k = (0..k).map(|t| n_kw[t * v..(t + 1) * v].iter().sum()).collect();
        Ok(TopicModel {
            k,
            alpha,
            beta,
            seed,
            sweeps_done,
            vocab,
            n_kw,
            n_k,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: Vocabulary) -> Result<TopicModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, vocab)
    }
}

/// Ranked terms per topic; labels are filled in by hand if at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topics: Vec<Vec<(String, f64)>>,
    pub labels: Vec<Option<String>>,
}

#[derive(Debug, Clone)]
pub struct TopicModelState {
    pub model: TopicModel,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    /// Row-major `D x k`.
    n_dk: Vec<u32>,
    pub log_likelihood: Vec<f64>,
}

impl TopicModelState {
    pub fn k(&self) -> usize {
        self.model.k
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn sweeps_done(&self) -> usize {
        self.model.sweeps_done
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.z
    }

    pub fn doc_words(&self, d: usize) -> &[u32] {
        &self.docs[d]
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.model.k + k]
    }

    /// Full conditional of token `(d, i)` given every other assignment:
    /// `p(k) ∝ (n_dk + alpha)(n_kw + beta) / (n_k + V beta)` with the token's
    /// own assignment excluded from the counts.
    pub fn conditional_distribution(&self, d: usize, i: usize) -> Vec<f64> {
        let m = &self.model;
        let k_own = self.z[d][i] as usize;
        let w = self.docs[d][i] as usize;
        let v = m.vocab.len();
        let own = |k: usize| if k == k_own { 1.0 } else { 0.0 };
        let mut p: Vec<f64> = (0..m.k)
            .map(|k| {
                let ndk = self.n_dk[d * m.k + k] as f64 - own(k);
                let nkw = m.n_kw[k * v + w] as f64 - own(k);
                let nk = m.n_k[k] as f64 - own(k);
                (ndk + m.alpha) * (nkw + m.beta) / (nk + v as f64 * m.beta)
            })
            .collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    /// `theta[k] = (n_dk + alpha) / (len + k alpha)`.
    pub fn doc_topic_features(&self, d: usize) -> Vec<f64> {
        let k = self.model.k;
        theta(&self.n_dk[d * k..(d + 1) * k], self.docs[d].len(), self.model.alpha)
    }

    pub fn top_terms(&self, n: usize) -> TopicSummary {
        self.model.top_terms(n)
    }

    /// Checks the three count-conservation identities against the
    /// assignments.
    pub fn check_invariants(&self) -> Result<()> {
        let m = &self.model;
        let v = m.vocab.len();
        let mut n_dk = vec![0u32; self.docs.len() * m.k];
        let mut n_kw = vec![0u32; m.k * v];
        for (d, (words, z)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in words.iter().zip(z) {
                n_dk[d * m.k + t as usize] += 1;
                n_kw[t as usize * v + w as usize] += 1;
            }
        }
        if n_dk != self.n_dk {
            return Err(Error::Numerical("doc-topic counts disagree with assignments".into()));
        }
        if n_kw != m.n_kw {
            return Err(Error::Numerical("topic-word counts disagree with assignments".into()));
        }
        for k in 0..m.k {
            let row: u32 = m.n_kw[k * v..(k + 1) * v].iter().sum();
            if row != m.n_k[k] {
                return Err(Error::Numerical(format!("topic {k}: word counts sum to {row}, total is {}", m.n_k[k])));
            }
        }
        for (d, words) in self.docs.iter().enumerate() {
            let s: u32 = self.n_dk[d * m.k..(d + 1) * m.k].iter().sum();
            if s as usize != words.len() {
                return Err(Error::Numerical(format!("doc {d}: topic counts sum to {s}, length is {}", words.len())));
            }
        }
        let total_tokens: usize = self.docs.iter().map(Vec::len).sum();
        if m.n_k.iter().map(|&c| c as usize).sum::<usize>() != total_tokens {
            return Err(Error::Numerical("topic totals do not sum to the token count".into()));
        }
        Ok(())
    }

    /// Collapsed joint log-likelihood `log p(w, z)`.
    pub fn log_likelihood(&self) -> f64 {
        let m = &self.model;
        let v = m.vocab.len() as f64;
        let k = m.k as f64;
        let mut ll = m.k as f64 * (ln_gamma(v * m.beta) - v * ln_gamma(m.beta));
        for t in 0..m.k {
            let row = &m.n_kw[t * m.vocab.len()..(t + 1) * m.vocab.len()];
            ll += row.iter().map(|&c| ln_gamma(c as f64 + m.beta)).sum::<f64>();
            ll -= ln_gamma(m.n_k[t] as f64 + v * m.beta);
        }
        let d = self.docs.len() as f64;
        ll += d * (ln_gamma(k * m.alpha) - k * ln_gamma(m.alpha));
        for (di, words) in self.docs.iter().enumerate() {
            let row = &self.n_dk[di * m.k..(di + 1) * m.k];
            ll += row.iter().map(|&c| ln_gamma(c as f64 + m.alpha)).sum::<f64>();
            ll -= ln_gamma(words.len() as f64 + k * m.alpha);
        }
        ll
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, p: &mut [f64]) {
        let k = self.model.k;
        let v = self.model.vocab.len();
        let alpha = self.model.alpha;
        let beta = self.model.beta;
        let vbeta = v as f64 * beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dk[d * k + old] -= 1;
                self.model.n_kw[old * v + w] -= 1;
                self.model.n_k[old] -= 1;

                let ndk = &self.n_dk[d * k..(d + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (ndk[t] as f64 + alpha) * (self.model.n_kw[t * v + w] as f64 + beta)
                        / (self.model.n_k[t] as f64 + vbeta);
                    p[t] = total;
                }
                let new = sample_cumulative(p, total, rng);

                self.z[d][i] = new as u16;
                self.n_dk[d * k + new] += 1;
                self.model.n_kw[new * v + w] += 1;
                self.model.n_k[new] += 1;
            }
        }
        self.model.sweeps_done += 1;
    }

    /// Topic-proportion block for the training documents, read from the
    /// final state.
    pub fn feature_block(&self) -> FeatureBlock {
        let rows = (0..self.docs.len())
            .map(|d| SparseVector::from_dense(&self.doc_topic_features(d)))
            .collect();
        FeatureBlock::new("lda", topic_column_names(self.model.k), rows)
    }
}

pub fn topic_column_names(k: usize) -> Vec<String> {
    (1..=k).map(|t| format!("topic_{t:02}")).collect()
}

/// Folds in each document with its own RNG stream, so results do not depend
/// on thread count.
pub fn fold_in_block(model: &TopicModel, docs: &[TokenizedDoc], sweeps: usize, seed: u64) -> FeatureBlock {
    let rows = docs
        .par_iter()
        .enumerate()
        .map(|(i, d)| SparseVector::from_dense(&model.fold_in(&d.tokens, sweeps, seed, i as u64)))
        .collect();
    FeatureBlock::new("lda", topic_column_names(model.k), rows)
}

fn theta(n_dk: &[u32], len: usize, alpha: f64) -> Vec<f64> {
    let k = n_dk.len() as f64;
    let denom = len as f64 + k * alpha;
    n_dk.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

fn sample_cumulative(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub fn fit(docs: &[TokenizedDoc], vocab: &Vocabulary, params: &LdaParams) -> Result<TopicModelState> {
    fit_with(docs, vocab, params, |_, _| Ok(()))
}

/// Like [`fit`], calling `observer(state, sweep)` after initialization
/// (sweep 0) and after every sweep.
pub fn fit_with<F>(docs: &[TokenizedDoc], vocab: &Vocabulary, params: &LdaParams, mut observer: F) -> Result<TopicModelState>
where
    F: FnMut(&TopicModelState, usize) -> Result<()>,
{
    params.validate()?;
    let k = params.k;
    let v = vocab.len();
    let mut state = TopicModelState {
        model: TopicModel {
            k,
            alpha: params.alpha,
            beta: params.beta,
            seed: params.seed,
            sweeps_done: 0,
            vocab: vocab.clone(),
            n_kw: vec![0; k * v],
            n_k: vec![0; k],
        },
        docs: Vec::with_capacity(docs.len()),
        z: Vec::with_capacity(docs.len()),
        n_dk: vec![0; docs.len() * k],
        log_likelihood: Vec::new(),
    };
    for d in docs {
        let words = state.model.word_ids(&d.tokens);
        state.docs.push(words);
    }
    if state.docs.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for d in 0..state.docs.len() {
        let mut zd = Vec::with_capacity(state.docs[d].len());
        for &w in &state.docs[d] {
            let t = rng.random_range(0..k);
            zd.push(t as u16);
            state.n_dk[d * k + t] += 1;
            state.model.n_kw[t * v + w as usize] += 1;
            state.model.n_k[t] += 1;
        }
        state.z.push(zd);
    }
    observer(&state, 0)?;

    let mut p = vec![0.0; k];
    for s in 1..=params.sweeps {
        state.sweep(&mut rng, &mut p);
        debug_assert!(state.check_invariants().is_ok());
        if params.track_likelihood {
            let ll = state.log_likelihood();
            state.log_likelihood.push(ll);
        }
        observer(&state, s)?;
    }
    Ok(state)
}
