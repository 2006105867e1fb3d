//! Experiment configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::LdaParams;
use crate::model::SvmParams;
use crate::tfidf::DEFAULT_MIN_DF;

/// Feature blocks, in concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Structured,
    Tfidf,
    Lda,
    Liwc,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::Structured, Block::Tfidf, Block::Lda, Block::Liwc];

    pub fn name(self) -> &'static str {
        match self {
            Block::Structured => "structured",
            Block::Tfidf => "tfidf",
            Block::Lda => "lda",
            Block::Liwc => "liwc",
        }
    }
}

/// One of the six feature-set configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ModelId(u8);

impl ModelId {
    pub fn new(id: u8) -> Result<ModelId> {
        if (1..=6).contains(&id) {
            Ok(ModelId(id))
        } else {
            Err(Error::Config(format!("model id must be 1..6, got {id}")))
        }
    }

    pub fn all() -> impl Iterator<Item = ModelId> {
        (1..=6).map(ModelId)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// 1: structured; 2: tfidf; 3: tfidf + lda + liwc; 4: structured + tfidf;
    /// 5: structured + lda + liwc; 6: all four.
    pub fn blocks(self) -> &'static [Block] {
        use Block::*;
        match self.0 {
            1 => &[Structured],
            2 => &[Tfidf],
            3 => &[Tfidf, Lda, Liwc],
            4 => &[Structured, Tfidf],
            5 => &[Structured, Lda, Liwc],
            6 => &[Structured, Tfidf, Lda, Liwc],
            _ => unreachable!("validated in ModelId::new"),
        }
    }
}

impl TryFrom<u8> for ModelId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        ModelId::new(v)
    }
}

impl From<ModelId> for u8 {
    fn from(m: ModelId) -> u8 {
        m.0
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model_id: ModelId,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub min_df: usize,
    pub lda: LdaParams,
    pub svm: SvmParams,
    pub threshold: f64,
    pub dictionary: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Restricts dictionary features to these columns when set.
    pub liwc_columns: Option<Vec<String>>,
    pub top_coefficients: usize,
    pub top_terms_per_topic: usize,
    pub error_analysis_terms: usize,
    /// Fold-to-fold weighted F1 range above which a warning is raised.
    pub cv_spread_warning: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model_id: ModelId(1),
            train_fraction: 0.75,
            split_seed: 0,
            cv_folds: 5,
            cv_seed: 1,
            min_df: DEFAULT_MIN_DF,
            lda: LdaParams { seed: 2, ..LdaParams::new(15) },
            svm: SvmParams { seed: 3, ..SvmParams::default() },
            threshold: 0.0,
            dictionary: None,
            stopwords: None,
            liwc_columns: None,
            top_coefficients: 25,
            top_terms_per_topic: 10,
            error_analysis_terms: 100,
            cv_spread_warning: 0.1,
        }
    }
}

impl ExperimentConfig {
    /// Derives every stage seed from one base seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.split_seed = seed;
        self.cv_seed = seed.wrapping_add(1);
        self.lda.seed = seed.wrapping_add(2);
        self.svm.seed = seed.wrapping_add(3);
    }

    /// Sets the topic count and resets alpha to `50 / k`.
    pub fn set_topics(&mut self, k: usize) {
        self.lda.k = k;
        self.lda.alpha = 50.0 / k.max(1) as f64;
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "model_id" => self.model_id = ModelId::new(parse(key, value)?)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "seed" => self.set_seed(parse(key, value)?),
            "split_seed" => self.split_seed = parse(key, value)?,
            "cv_folds" => self.cv_folds = parse(key, value)?,
            "cv_seed" => self.cv_seed = parse(key, value)?,
            "min_df" => self.min_df = parse(key, value)?,
            "k_topics" => self.set_topics(parse(key, value)?),
            "lda_alpha" => self.lda.alpha = parse(key, value)?,
            "lda_beta" => self.lda.beta = parse(key, value)?,
            "lda_sweeps" => self.lda.sweeps = parse(key, value)?,
            "lda_seed" => self.lda.seed = parse(key, value)?,
            "fold_in_sweeps" => self.lda.fold_in_sweeps = parse(key, value)?,
            "svm_c" => self.svm.c = parse(key, value)?,
            "svm_epochs" => self.svm.epochs = parse(key, value)?,
            "svm_tol" => self.svm.tol = parse(key, value)?,
            "svm_seed" => self.svm.seed = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "dic" => self.dictionary = Some(PathBuf::from(value)),
            "stopwords" => self.stopwords = Some(PathBuf::from(value)),
            "liwc_columns" => {
                self.liwc_columns = Some(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            }
            "top_coefficients" => self.top_coefficients = parse(key, value)?,
            "top_terms" => self.top_terms_per_topic = parse(key, value)?,
            "error_analysis_terms" => self.error_analysis_terms = parse(key, value)?,
            "cv_spread_warning" => self.cv_spread_warning = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// values may be double-quoted. Later keys override earlier ones, so
    /// `k_topics` should precede an explicit `lda_alpha`.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            config
                .set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.cv_folds < 2 {
            return fail(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if self.min_df == 0 {
            return fail("min_df must be at least 1".into());
        }
        if self.lda.k == 0 || self.lda.sweeps == 0 || !positive(self.lda.alpha) || !positive(self.lda.beta) {
            return fail("LDA needs k >= 1, sweeps >= 1 and positive priors".into());
        }
        if !positive(self.svm.c) || self.svm.epochs == 0 {
            return fail("SVM needs C > 0 and at least one epoch".into());
        }
        for p in [&self.dictionary, &self.stopwords].into_iter().flatten() {
            if !p.exists() {
                return fail(format!("resource not found: {}", p.display()));
            }
        }
        Ok(())
    }
}

/// False for NaN as well as for non-positive values.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_blocks_match_design_table() {
        use Block::*;
        let expected: [(u8, &[Block]); 6] = [
            (1, &[Structured]),
            (2, &[Tfidf]),
            (3, &[Tfidf, Lda, Liwc]),
            (4, &[Structured, Tfidf]),
            (5, &[Structured, Lda, Liwc]),
            (6, &[Structured, Tfidf, Lda, Liwc]),
        ];
        for (id, blocks) in expected {
            assert_eq!(ModelId::new(id).unwrap().blocks(), blocks);
        }
        assert!(ModelId::new(0).is_err());
        assert!(ModelId::new(7).is_err());
    }

    #[test]
    fn parses_flat_file() {
        let c = ExperimentConfig::parse(
            "# experiment\nmodel_id = 4\nseed=10\nk_topics = 5 # fewer\nsvm_c = 0.5\nliwc_columns = \"WC, Dic\"\n",
        )
        .unwrap();
        assert_eq!(c.model_id.get(), 4);
        assert_eq!(c.split_seed, 10);
        assert_eq!(c.svm.seed, 13);
        assert_eq!(c.lda.k, 5);
        assert_eq!(c.lda.alpha, 10.0);
        assert_eq!(c.svm.c, 0.5);
        assert_eq!(c.liwc_columns, Some(vec!["WC".to_string(), "Dic".to_string()]));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(ExperimentConfig::parse("nope = 1"), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("model_id = 9").is_err());
        assert!(ExperimentConfig::parse("train_fraction = 1.5").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
        assert!(ExperimentConfig::parse("dic = /does/not/exist.dic").is_err());
    }
}
