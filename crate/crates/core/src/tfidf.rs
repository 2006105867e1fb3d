//! Vocabulary fitting and TFIDF document vectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
pub use crate::features::SparseVector;
use crate::features::FeatureBlock;
use crate::textprep::TokenizedDoc;

pub const DEFAULT_MIN_DF: usize = 2;

/// Terms seen in at least `min_df` training documents, indexed in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    pub n_docs: usize,
    pub min_df: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn idf(&self, index: usize) -> f64 {
        (self.n_docs as f64 / self.doc_freq[index] as f64).ln()
    }

    fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize, min_df: usize) -> Vocabulary {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            doc_freq,
            n_docs,
            min_df,
        }
    }

    /// Text form: `N=<n> min_df=<m>` header, then `term<TAB>index<TAB>df` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("N={} min_df={}\n", self.n_docs, self.min_df);
        for (i, (t, df)) in self.terms.iter().zip(&self.doc_freq).enumerate() {
            writeln!(out, "{t}\t{i}\t{df}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocabulary> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty vocabulary file".into()))?;
        let mut n_docs = None;
        let mut min_df = None;
        for part in header.split_whitespace() {
            match part.split_once('=') {
                Some(("N", v)) => n_docs = v.parse().ok(),
                Some(("min_df", v)) => min_df = v.parse().ok(),
                _ => {}
            }
        }
        let (Some(n_docs), Some(min_df)) = (n_docs, min_df) else {
            return Err(Error::Format(format!("bad vocabulary header `{header}`")));
        };
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        for (line_no, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = || Error::Format(format!("vocabulary line {}: `{line}`", line_no + 2));
            let mut fields = line.split('\t');
            let term = fields.next().ok_or_else(bad)?;
            let index: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let df: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if index != terms.len() || df == 0 || df > n_docs {
                return Err(bad());
            }
            terms.push(term.to_string());
            dfs.push(df);
        }
        Ok(Vocabulary::from_parts(terms, dfs, n_docs, min_df))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// SHA-256 of the text form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

pub fn build_vocabulary(docs: &[TokenizedDoc], min_df: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument("cannot build a vocabulary from zero documents".into()));
    }
    if min_df == 0 {
        return Err(Error::InvalidArgument("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, n)| (t.to_string(), n))
        .unzip();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    Ok(Vocabulary::from_parts(terms, doc_freq, docs.len(), min_df))
}

/// Raw-count tf times `ln(N / df)`, before normalization.
pub fn raw_weights(doc: &TokenizedDoc, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &doc.tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let pairs = counts
        .into_iter()
        .map(|(i, tf)| (i, tf as f64 * vocab.idf(i)))
        .collect();
    SparseVector::from_pairs(vocab.len(), pairs)
}

/// L2-normalized TFIDF vector; all-zero vectors are left as is.
pub fn transform(doc: &TokenizedDoc, vocab: &Vocabulary) -> SparseVector {
    let mut v = raw_weights(doc, vocab);
    let norm = v.norm_squared().sqrt();
    if norm > 0.0 {
        v.scale(1.0 / norm);
    }
    v
}

pub fn transform_block(docs: &[TokenizedDoc], vocab: &Vocabulary) -> FeatureBlock {
    let rows = docs.par_iter().map(|d| transform(d, vocab)).collect();
    FeatureBlock::new("tfidf", vocab.terms().to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc {
            record_id: String::new(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            unfiltered: vec![],
            raw_sentence_count: 1,
        }
    }

    /// Dense nested-loop oracle over (term, doc).
    fn dense_oracle(docs: &[TokenizedDoc], min_df: usize) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut all: Vec<String> = docs.iter().flat_map(|d| d.tokens.clone()).collect();
        all.sort();
        all.dedup();
        let n = docs.len() as f64;
        let terms: Vec<String> = all
            .into_iter()
            .filter(|t| docs.iter().filter(|d| d.tokens.contains(t)).count() >= min_df)
            .collect();
        let rows = docs
            .iter()
            .map(|d| {
                let mut row: Vec<f64> = terms
                    .iter()
                    .map(|t| {
                        let tf = d.tokens.iter().filter(|x| *x == t).count() as f64;
                        let df = docs.iter().filter(|e| e.tokens.contains(t)).count() as f64;
                        tf * (n / df).ln()
                    })
                    .collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
                row
            })
            .collect();
        (terms, rows)
    }

    #[test]
    fn document_frequency_counts_documents() {
        let docs = [doc(&["a", "b"]), doc(&["b", "c"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(v.doc_freq(v.index_of("b").unwrap()), 2);
        let v2 = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(v2.terms(), ["b"]);
        let v3 = build_vocabulary(&[doc(&["a", "a", "a"])], 1).unwrap();
        assert_eq!(v3.doc_freq(0), 1);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let docs = [doc(&["a"]), doc(&["b"])];
        assert!(matches!(build_vocabulary(&docs, 2), Err(Error::EmptyVocabulary { min_df: 2 })));
    }

    #[test]
    fn hand_computed_weight() {
        let docs = [doc(&["a", "b", "a"]), doc(&["b", "c"]), doc(&["c", "c", "c"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let w = raw_weights(&docs[0], &v);
        let a = w.get(v.index_of("a").unwrap());
        assert!((a - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!((a - 2.1972).abs() < 1e-4);
    }

    #[test]
    fn ubiquitous_terms_get_zero_weight() {
        let docs = [doc(&["x", "a"]), doc(&["x", "b"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let t = transform(&docs[0], &v);
        assert_eq!(t.get(v.index_of("x").unwrap()), 0.0);
    }

    #[test]
    fn empty_doc_gives_empty_vector() {
        let v = build_vocabulary(&[doc(&["a"])], 1).unwrap();
        let t = transform(&doc(&[]), &v);
        assert_eq!(t.dimension(), 1);
        assert_eq!(t.nnz(), 0);
    }

    #[test]
    fn text_round_trip() {
        let docs = [doc(&["a", "b"]), doc(&["b", "c"]), doc(&["b"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert!(v.to_text().starts_with("N=3 min_df=1\n"));
    }

    fn corpus() -> impl Strategy<Value = Vec<Vec<usize>>> {
        proptest::collection::vec(proptest::collection::vec(0usize..50, 0..15), 1..20)
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(raw in corpus(), min_df in 1usize..3) {
            let docs: Vec<TokenizedDoc> = raw
                .iter()
                .map(|d| doc(&d.iter().map(|i| format!("t{i:02}")).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>()))
                .collect();
            let (terms, dense) = dense_oracle(&docs, min_df);
            match build_vocabulary(&docs, min_df) {
                Err(Error::EmptyVocabulary { .. }) => prop_assert!(terms.is_empty()),
                Err(e) => prop_assert!(false, "{e}"),
                Ok(v) => {
                    prop_assert_eq!(v.terms(), &terms[..]);
                    for (d, row) in docs.iter().zip(&dense) {
                        let out = transform(d, &v).to_dense();
                        for (a, b) in out.iter().zip(row) {
                            prop_assert!((a - b).abs() <= 1e-12);
                        }
                        let norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn larger_count_never_lower_weight(extra in 1usize..5) {
            let mut d1 = vec!["a", "b"];
            d1.extend(std::iter::repeat_n("a", extra));
            let docs = [doc(&d1), doc(&["c"]), doc(&["c"])];
            let v = build_vocabulary(&docs, 1).unwrap();
            let w = raw_weights(&docs[0], &v);
            // a and b share df = 1; a occurs more often.
            prop_assert!(w.get(v.index_of("a").unwrap()) >= w.get(v.index_of("b").unwrap()));
        }
    }
}
