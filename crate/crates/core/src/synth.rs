//! Synthetic applicant records with controllable class balance and planted
//! signal in the text and in the structured variables.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Cohort, Dataset, Discipline, Grades, Label, PriorEducation, ProgramMap, StudentRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_records: usize,
    /// Fraction of dropouts.
    pub positive_rate: f64,
    /// Probability that a content word is a class-marker word.
    pub text_signal: f64,
    /// Probability that a marker word comes from the record's own class.
    pub marker_purity: f64,
    /// Shift of structured predictors for dropouts, in standard deviations.
    pub structured_signal: f64,
    pub mean_words: usize,
    pub background_vocabulary: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_records: 7060,
            positive_rate: 0.25,
            text_signal: 0.12,
            marker_purity: 0.75,
            structured_signal: 0.6,
            mean_words: 45,
            background_vocabulary: 800,
            seed: 0,
        }
    }
}

const PROGRAMS: [(&str, Discipline); 12] = [
    ("PSY", Discipline::Social),
    ("LAW", Discipline::Social),
    ("ECO", Discipline::Social),
    ("SOC", Discipline::Social),
    ("PED", Discipline::Social),
    ("CHEM", Discipline::Stem),
    ("MATH", Discipline::Stem),
    ("PHYS", Discipline::Stem),
    ("BIO", Discipline::Stem),
    ("HIST", Discipline::Humanities),
    ("LIT", Discipline::Humanities),
    ("PHIL", Discipline::Humanities),
];

const ONSETS: [&str; 16] = ["b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "st", "gr"];
const VOWELS: [&str; 8] = ["a", "e", "i", "o", "u", "aa", "ee", "oe"];
const CODAS: [&str; 8] = ["", "n", "r", "k", "l", "s", "t", "ng"];

/// Function words that the bundled stopword list and dictionary know about.
const FUNCTION_WORDS: [&str; 24] = [
    "ik", "wil", "de", "het", "een", "en", "omdat", "mijn", "ben", "heb", "is", "van", "voor", "met", "ook", "niet",
    "wij", "jij", "dat", "zal", "was", "heel", "naar", "op",
];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(VOWELS.choose(rng).unwrap());
        w.push_str(CODAS.choose(rng).unwrap());
    }
    w
}

fn word_pool(rng: &mut ChaCha8Rng, n: usize, taken: &mut std::collections::BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = pseudo_word(rng);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Generates a labeled dataset and the program to discipline map.
pub fn generate(params: &SynthParams) -> (Dataset, ProgramMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut taken = std::collections::BTreeSet::new();
    let background = word_pool(&mut rng, params.background_vocabulary, &mut taken);
    let dropout_markers = word_pool(&mut rng, 25, &mut taken);
    let retention_markers = word_pool(&mut rng, 25, &mut taken);
    // Zipf-like background: weight 1 / rank.
    let cumulative: Vec<f64> = background
        .iter()
        .enumerate()
        .scan(0.0, |acc, (i, _)| {
            *acc += 1.0 / (i + 1) as f64;
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().unwrap();
    let grade_noise = Normal::new(0.0, 0.7).unwrap();
    let shift = params.structured_signal;

    let mut records = Vec::with_capacity(params.n_records);
    for i in 0..params.n_records {
        let dropout = rng.random_bool(params.positive_rate);
        let label = if dropout { Label::Dropout } else { Label::Retention };
        let s = if dropout { -shift } else { 0.0 };

        let base_grade = 6.85 + 0.6 * s;
        let grade = |rng: &mut ChaCha8Rng| -> Option<f64> {
            if rng.random_bool(0.08) {
                None
            } else {
                let g: f64 = base_grade + grade_noise.sample(rng);
                Some((g.clamp(1.0, 10.0) * 10.0).round() / 10.0)
            }
        };
        let grades = Grades {
            dutch: grade(&mut rng),
            english: grade(&mut rng),
            math: grade(&mut rng),
        };
        let cohort = if rng.random_bool(0.5) { Cohort::Y2014 } else { Cohort::Y2015 };
        let age_years = 18.0 + rng.random_range(0.0..1.5) + if dropout { 1.2 * shift * rng.random::<f64>() } else { 0.0 };
        let days = (age_years * 365.25) as i64;
        let date_of_birth = cohort.academic_year_start() - chrono::Duration::days(days);
        let (program, discipline) = *PROGRAMS.choose(&mut rng).unwrap();
        let prior_education = *[
            PriorEducation::PreUniversityPending,
            PriorEducation::PreUniversityPending,
            PriorEducation::PreUniversityPending,
            PriorEducation::PreUniversityObtained,
            PriorEducation::Propaedeutic,
            PriorEducation::Other,
        ]
        .choose(&mut rng)
        .unwrap();
        let maybe = |rng: &mut ChaCha8Rng, p: f64| if rng.random_bool(0.05) { None } else { Some(rng.random_bool(p.clamp(0.0, 1.0))) };
        let ability_belief = maybe(&mut rng, 0.72 + 0.1 * s);
        let interest = maybe(&mut rng, 0.95 + 0.05 * s);
        let gender = maybe(&mut rng, 0.45);
        let previously_enrolled = rng.random_bool((0.09 - 0.05 * s).clamp(0.0, 1.0));
        let multiple_requests = rng.random_bool(0.04);

        let n_words = rng.random_range(params.mean_words / 2..=params.mean_words * 3 / 2).max(1);
        let mut text = String::new();
        let mut sentence_len = 0;
        for w in 0..n_words {
            let word: &str = if rng.random_bool(0.3) {
                FUNCTION_WORDS.choose(&mut rng).unwrap()
            } else if rng.random_bool(params.text_signal) {
                let own = rng.random_bool(params.marker_purity);
                let pool = if own == dropout { &dropout_markers } else { &retention_markers };
                pool.choose(&mut rng).unwrap()
            } else {
                let u = rng.random::<f64>() * total_weight;
                let idx = cumulative.partition_point(|&c| c < u).min(background.len() - 1);
                &background[idx]
            };
            if sentence_len == 0 {
                if w > 0 {
                    text.push(' ');
                }
                let mut chars = word.chars();
                if let Some(first) = chars.next() {
                    text.extend(first.to_uppercase());
                    text.push_str(chars.as_str());
                }
            } else {
                text.push(' ');
                text.push_str(word);
            }
            sentence_len += 1;
            if sentence_len >= 6 && rng.random_bool(0.25) || w + 1 == n_words {
                text.push(if rng.random_bool(0.1) { '!' } else { '.' });
                sentence_len = 0;
            }
        }
        if rng.random_bool(0.1) {
            text.push_str(&format!(" In {} begin ik.", cohort.year()));
        }

        records.push(StudentRecord {
            id: format!("S{:05}", i + 1),
            cohort,
            prior_education,
            grades,
            ability_belief,
            interest,
            gender,
            date_of_birth,
            program: program.to_string(),
            discipline,
            previously_enrolled,
            multiple_requests,
            motivation_text: text,
            label: Some(label),
        });
    }
    let map = ProgramMap::new(PROGRAMS.iter().map(|(p, d)| (p.to_string(), *d)));
    (Dataset::new(records).expect("ids are unique"), map)
}
