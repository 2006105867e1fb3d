//! LIWC-style `.dic` dictionaries and per-document category percentages.
//!
//! A dictionary file has a `%` line, category declarations `ID<TAB>NAME`, a
//! second `%` line, then entries `PATTERN<TAB>ID(<TAB>ID)*`. A pattern ending
//! in `*` matches every word starting with the part before the star.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureBlock, SparseVector};
use crate::textprep::TokenizedDoc;

const BUNDLED_MINI: &str = include_str!("../data/mini.dic");

/// General text statistics emitted ahead of the dictionary categories.
pub const GENERAL_COLUMNS: [&str; 4] = ["WC", "WPS", "Sixltr", "Dic"];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    categories: Vec<(u32, String)>,
    exact: BTreeMap<String, BTreeSet<u32>>,
    prefixes: BTreeMap<String, BTreeSet<u32>>,
}

impl Lexicon {
    /// Small open dictionary with a Dutch function-word core, for tests and
    /// demos. Real LIWC dictionaries are user-supplied.
    pub fn bundled_mini() -> Lexicon {
        parse_dic(BUNDLED_MINI).expect("bundled dictionary parses")
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_dic(&text)
    }

    pub fn categories(&self) -> &[(u32, String)] {
        &self.categories
    }

    pub fn exact_entries(&self) -> &BTreeMap<String, BTreeSet<u32>> {
        &self.exact
    }

    pub fn prefix_entries(&self) -> &BTreeMap<String, BTreeSet<u32>> {
        &self.prefixes
    }

    /// Category ids matched by `word`: union of its exact entry and every
    /// prefix entry it starts with.
    pub fn categories_of(&self, word: &str) -> BTreeSet<u32> {
        let mut out = self.exact.get(word).cloned().unwrap_or_default();
        for (end, c) in word.char_indices() {
            let prefix = &word[..end + c.len_utf8()];
            if let Some(ids) = self.prefixes.get(prefix) {
                out.extend(ids);
            }
        }
        out
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("%\n");
        for (id, name) in &self.categories {
            writeln!(out, "{id}\t{name}").unwrap();
        }
        out.push_str("%\n");
        let mut entries: Vec<(String, &BTreeSet<u32>)> = self
            .exact
            .iter()
            .map(|(w, ids)| (w.clone(), ids))
            .chain(self.prefixes.iter().map(|(p, ids)| (format!("{p}*"), ids)))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (pattern, ids) in entries {
            out.push_str(&pattern);
            for id in ids {
                write!(out, "\t{id}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn column_names(&self) -> Vec<String> {
        GENERAL_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.categories.iter().map(|(_, n)| n.clone()))
            .collect()
    }
}

pub fn parse_dic(text: &str) -> Result<Lexicon> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lexicon = Lexicon::default();
    let mut delimiters = 0;
    let mut declared = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "%" {
            delimiters += 1;
            continue;
        }
        let err = |message: String| Error::Dictionary { line: line_no, message };
        let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
        match delimiters {
            0 => return Err(Error::Format(format!("line {line_no}: content before the opening `%`"))),
            1 => {
                let id: u32 = fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| err(format!("bad category id in `{line}`")))?;
                let name = fields
                    .next()
                    .ok_or_else(|| err(format!("category {id} has no name")))?;
                if !declared.insert(id) {
                    return Err(err(format!("category {id} declared twice")));
                }
                lexicon.categories.push((id, name.to_string()));
            }
            2 => {
                let pattern = fields.next().expect("nonempty line").to_lowercase();
                let mut ids = BTreeSet::new();
                for f in fields {
                    let id: u32 = f.parse().map_err(|_| err(format!("bad category id `{f}`")))?;
                    if !declared.contains(&id) {
                        return Err(err(format!("entry `{pattern}` references undeclared category {id}")));
                    }
                    ids.insert(id);
                }
                let (map, key) = match pattern.strip_suffix('*') {
                    Some("") => return Err(err("empty prefix pattern `*`".into())),
                    Some(prefix) => (&mut lexicon.prefixes, prefix.to_string()),
                    None => (&mut lexicon.exact, pattern),
                };
                map.entry(key).or_default().extend(ids);
            }
            _ => return Err(Error::Format(format!("line {line_no}: more than two `%` delimiter lines"))),
        }
    }
    if delimiters < 2 {
        return Err(Error::Format("dictionary needs two `%` delimiter lines".into()));
    }
    Ok(lexicon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiwcFeatures {
    pub wc: usize,
    pub wps: f64,
    pub sixltr: f64,
    pub dic: f64,
    /// Percent of words per category, in declaration order.
    pub categories: Vec<(String, f64)>,
}

impl LiwcFeatures {
    pub fn category(&self, name: &str) -> Option<f64> {
        self.categories.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        [self.wc as f64, self.wps, self.sixltr, self.dic]
            .into_iter()
            .chain(self.categories.iter().map(|(_, v)| *v))
            .collect()
    }
}

pub fn extract<S: AsRef<str>>(tokens: &[S], sentence_count: usize, lexicon: &Lexicon) -> LiwcFeatures {
    let wc = tokens.len();
    let mut per_category = vec![0usize; lexicon.categories.len()];
    let slot: BTreeMap<u32, usize> = lexicon.categories.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut in_dic = 0;
    let mut long = 0;
    for t in tokens {
        let t = t.as_ref();
        if t.chars().count() > 6 {
            long += 1;
        }
        let ids = lexicon.categories_of(t);
        if !ids.is_empty() {
            in_dic += 1;
        }
        for id in ids {
            per_category[slot[&id]] += 1;
        }
    }
    let pct = |n: usize| if wc == 0 { 0.0 } else { 100.0 * n as f64 / wc as f64 };
    LiwcFeatures {
        wc,
        wps: if wc == 0 { 0.0 } else { wc as f64 / sentence_count.max(1) as f64 },
        sixltr: pct(long),
        dic: pct(in_dic),
        categories: lexicon
            .categories
            .iter()
            .zip(per_category)
            .map(|((_, name), n)| (name.clone(), pct(n)))
            .collect(),
    }
}

/// Dictionary features over the pre-stopword token stream of each document.
pub fn extract_block(docs: &[TokenizedDoc], lexicon: &Lexicon) -> FeatureBlock {
    let rows = docs
        .par_iter()
        .map(|d| SparseVector::from_dense(&extract(&d.unfiltered, d.raw_sentence_count, lexicon).to_vec()))
        .collect();
    FeatureBlock::new("liwc", lexicon.column_names(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE: &str = "%\n1\tpronoun\n%\nik\t1\njij*\t1\n";

    /// Scans every entry for every token.
    fn brute_force(word: &str, lexicon: &Lexicon) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for (w, ids) in lexicon.exact_entries() {
            if w == word {
                out.extend(ids);
            }
        }
        for (p, ids) in lexicon.prefix_entries() {
            if word.starts_with(p.as_str()) {
                out.extend(ids);
            }
        }
        out
    }

    #[test]
    fn parses_worked_example() {
        let lex = parse_dic(EXAMPLE).unwrap();
        assert_eq!(lex.categories(), &[(1, "pronoun".to_string())]);
        assert_eq!(lex.exact_entries().len(), 1);
        assert_eq!(lex.prefix_entries().len(), 1);
        assert!(lex.prefix_entries().contains_key("jij"));
    }

    #[test]
    fn empty_dictionary_is_valid() {
        let lex = parse_dic("%\n%\n").unwrap();
        assert!(lex.categories().is_empty());
        let f = extract(&["a"], 1, &lex);
        assert_eq!(f.dic, 0.0);
    }

    #[test]
    fn undeclared_category_reports_line() {
        match parse_dic("%\n1\tpronoun\n%\nik\t1\nzelf\t9\n") {
            Err(Error::Dictionary { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_delimiters() {
        assert!(matches!(parse_dic("1\tpronoun\n"), Err(Error::Format(_))));
        assert!(matches!(parse_dic("%\n1\tpronoun\n"), Err(Error::Format(_))));
    }

    #[test]
    fn entries_are_lowercased_and_blank_lines_ignored() {
        let lex = parse_dic("%\n\n1\tx\n%\n\nIK\t1\n").unwrap();
        assert!(lex.exact_entries().contains_key("ik"));
    }

    #[test]
    fn worked_extraction() {
        let lex = parse_dic(EXAMPLE).unwrap();
        let f = extract(&["ik", "loop", "jijzelf"], 1, &lex);
        assert_eq!(f.wc, 3);
        assert!((f.category("pronoun").unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert!((f.dic - 66.67).abs() < 0.01);
        assert_eq!(f.wps, 3.0);
    }

    #[test]
    fn empty_tokens_give_zeros() {
        let f = extract::<&str>(&[], 0, &Lexicon::bundled_mini());
        assert_eq!(f.wc, 0);
        assert!(f.to_vec().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sixltr_counts_characters() {
        let f = extract(&["studeren", "één", "psychologie"], 1, &parse_dic("%\n%\n").unwrap());
        assert!((f.sixltr - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bundled_columns_include_function_word_categories() {
        let names = Lexicon::bundled_mini().column_names();
        for want in [
            "WC", "WPS", "Sixltr", "Dic", "ppron", "i", "we", "you", "shehe", "they", "ipron", "article", "verb",
            "auxverb", "past", "present", "future", "adverb", "preps", "conj", "negate", "funct", "pronoun",
        ] {
            assert!(names.iter().any(|n| n == want), "missing {want}");
        }
    }

    fn random_lexicon() -> impl Strategy<Value = Lexicon> {
        let entry = ("[a-e]{1,4}", any::<bool>(), proptest::collection::btree_set(1u32..5, 1..3));
        proptest::collection::vec(entry, 0..25).prop_map(|entries| {
            let mut text = String::from("%\n1\ta\n2\tb\n3\tc\n4\td\n%\n");
            for (w, star, ids) in entries {
                text.push_str(&w);
                if star {
                    text.push('*');
                }
                for id in ids {
                    text.push_str(&format!("\t{id}"));
                }
                text.push('\n');
            }
            parse_dic(&text).unwrap()
        })
    }

    proptest! {
        #[test]
        fn serialize_round_trips(lex in random_lexicon()) {
            prop_assert_eq!(parse_dic(&lex.serialize()).unwrap(), lex);
        }

        #[test]
        fn indexed_matcher_equals_scan(lex in random_lexicon(), words in proptest::collection::vec("[a-e]{0,6}", 0..30)) {
            for w in &words {
                prop_assert_eq!(lex.categories_of(w), brute_force(w, &lex));
            }
        }

        #[test]
        fn percentages_bounded_and_wc_additive(
            lex in random_lexicon(),
            a in proptest::collection::vec("[a-e]{1,8}", 0..20),
            b in proptest::collection::vec("[a-e]{1,8}", 0..20),
        ) {
            let fa = extract(&a, 1, &lex);
            let fb = extract(&b, 1, &lex);
            let joined: Vec<String> = a.iter().chain(&b).cloned().collect();
            let f = extract(&joined, 2, &lex);
            prop_assert_eq!(f.wc, fa.wc + fb.wc);
            prop_assert!(f.dic >= 0.0 && f.dic <= 100.0);
            for (_, pct) in &f.categories {
                prop_assert!(*pct >= 0.0 && *pct <= f.dic + 1e-12);
            }
        }
    }
}
