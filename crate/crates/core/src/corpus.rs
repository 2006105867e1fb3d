//! Student records, dataset ingestion, structured-feature encoding and
//! train/test and cross-validation splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureBlock, SparseVector};

/// Column order of the CSV interchange format.
pub const CSV_COLUMNS: [&str; 16] = [
    "id",
    "cohort",
    "prior_education",
    "grade_nl",
    "grade_en",
    "grade_math",
    "ability_belief",
    "interest",
    "gender",
    "date_of_birth",
    "program",
    "discipline",
    "previously_enrolled",
    "multiple_requests",
    "motivation_text",
    "label",
];

const OPTIONAL_COLUMNS: [&str; 7] = [
    "grade_nl",
    "grade_en",
    "grade_math",
    "ability_belief",
    "interest",
    "gender",
    "discipline",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Retention = 0,
    Dropout = 1,
}

impl Label {
    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Retention),
            1 => Some(Label::Dropout),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_dropout(self) -> bool {
        self == Label::Dropout
    }

    /// +1 for the positive (dropout) class, -1 otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Dropout => 1.0,
            Label::Retention => -1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Retention => f.write_str("Retention"),
            Label::Dropout => f.write_str("Dropout"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cohort {
    Y2014,
    Y2015,
}

impl Cohort {
    pub fn code(self) -> u8 {
        match self {
            Cohort::Y2014 => 1,
            Cohort::Y2015 => 2,
        }
    }

    pub fn year(self) -> i32 {
        match self {
            Cohort::Y2014 => 2014,
            Cohort::Y2015 => 2015,
        }
    }

    /// First day of the academic year, used as the age anchor.
    pub fn academic_year_start(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year(), 9, 1).expect("valid date")
    }

    fn parse(s: &str) -> Option<Cohort> {
        match s {
            "2014" | "1" => Some(Cohort::Y2014),
            "2015" | "2" => Some(Cohort::Y2015),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorEducation {
    /// Pre-university diploma still to be obtained.
    PreUniversityPending,
    PreUniversityObtained,
    Propaedeutic,
    Other,
}

impl PriorEducation {
    pub const ALL: [PriorEducation; 4] = [
        PriorEducation::PreUniversityPending,
        PriorEducation::PreUniversityObtained,
        PriorEducation::Propaedeutic,
        PriorEducation::Other,
    ];

    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            PriorEducation::PreUniversityPending => "preuniversity_pending",
            PriorEducation::PreUniversityObtained => "preuniversity_obtained",
            PriorEducation::Propaedeutic => "propaedeutic",
            PriorEducation::Other => "other",
        }
    }

    fn parse(s: &str) -> Option<PriorEducation> {
        let s = s.to_ascii_lowercase();
        PriorEducation::ALL
            .into_iter()
            .find(|p| s == p.name() || s == p.code().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discipline {
    Stem,
    Social,
    Humanities,
}

impl Discipline {
    pub const ALL: [Discipline; 3] = [Discipline::Stem, Discipline::Social, Discipline::Humanities];

    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Discipline::Stem => "stem",
            Discipline::Social => "social",
            Discipline::Humanities => "humanities",
        }
    }

    pub fn parse(s: &str) -> Option<Discipline> {
        let s = s.to_ascii_lowercase();
        Discipline::ALL
            .into_iter()
            .find(|d| s == d.name() || s == d.code().to_string())
    }
}

/// High-school marks on the Dutch 1-10 scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Grades {
    pub dutch: Option<f64>,
    pub english: Option<f64>,
    pub math: Option<f64>,
}

impl Grades {
    /// Mean of the present marks when at least two are present.
    pub fn hsgpa(&self) -> Option<f64> {
        let present: Vec<f64> = [self.dutch, self.english, self.math].into_iter().flatten().collect();
        (present.len() >= 2).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub id: String,
    pub cohort: Cohort,
    pub prior_education: PriorEducation,
    pub grades: Grades,
    pub ability_belief: Option<bool>,
    pub interest: Option<bool>,
    /// `Some(true)` for male.
    pub gender: Option<bool>,
    pub date_of_birth: NaiveDate,
    pub program: String,
    pub discipline: Discipline,
    pub previously_enrolled: bool,
    pub multiple_requests: bool,
    pub motivation_text: String,
    pub label: Option<Label>,
}

impl StudentRecord {
    pub fn age(&self) -> f64 {
        age_at(self.date_of_birth, self.cohort.academic_year_start())
    }

    fn to_fields(&self) -> Vec<Option<String>> {
        let grade = |g: Option<f64>| g.map(|v| v.to_string());
        let flag = |b: bool| Some(u8::from(b).to_string());
        vec![
            Some(self.id.clone()),
            Some(self.cohort.year().to_string()),
            Some(self.prior_education.code().to_string()),
            grade(self.grades.dutch),
            grade(self.grades.english),
            grade(self.grades.math),
            self.ability_belief.and_then(flag),
            self.interest.and_then(flag),
            self.gender.and_then(flag),
            Some(self.date_of_birth.format("%Y-%m-%d").to_string()),
            Some(self.program.clone()),
            Some(self.discipline.code().to_string()),
            flag(self.previously_enrolled),
            flag(self.multiple_requests),
            Some(self.motivation_text.clone()),
            self.label.map(|l| l.code().to_string()),
        ]
    }
}

/// Fractional age in years: whole calendar years plus the elapsed fraction of
/// the current birthday year.
pub fn age_at(date_of_birth: NaiveDate, at: NaiveDate) -> f64 {
    if at < date_of_birth {
        return -age_at(at, date_of_birth);
    }
    let anniversary = |years: i32| {
        date_of_birth
            .checked_add_months(Months::new(12 * years as u32))
            .expect("date in range")
    };
    let mut years = at.year() - date_of_birth.year();
    if anniversary(years) > at {
        years -= 1;
    }
    let last = anniversary(years);
    let next = anniversary(years + 1);
    let elapsed = (at - last).num_days() as f64;
    let span = (next - last).num_days() as f64;
    years as f64 + elapsed / span
}

/// Program code to discipline lookup, loaded from a two-column CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgramMap {
    map: BTreeMap<String, Discipline>,
}

impl ProgramMap {
    pub fn new(entries: impl IntoIterator<Item = (String, Discipline)>) -> Self {
        Self {
            map: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, program: &str) -> Option<Discipline> {
        self.map.get(program).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Discipline)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Reads `program,discipline` rows. A header row is skipped if its second
    /// field is not a discipline.
    pub fn load(path: &Path) -> Result<ProgramMap> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut map = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::Row {
                row: i + 1,
                message: e.to_string(),
            })?;
            if row.len() != 2 {
                return Err(Error::Row {
                    row: i + 1,
                    message: format!("expected 2 fields, found {}", row.len()),
                });
            }
            match Discipline::parse(row[1].trim()) {
                Some(d) => {
                    map.insert(row[0].trim().to_string(), d);
                }
                None if i == 0 => continue,
                None => {
                    return Err(Error::Row {
                        row: i + 1,
                        message: format!("unknown discipline `{}`", &row[1]),
                    })
                }
            }
        }
        Ok(ProgramMap { map })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["program", "discipline"]).map_err(|e| csv_error(path, e))?;
        for (p, d) in &self.map {
            w.write_record([p.as_str(), d.name()]).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {:?}", path.display(), other)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<StudentRecord>,
}

impl Dataset {
    pub fn new(records: Vec<StudentRecord>) -> Result<Dataset> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Dataset { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Result<Vec<Label>> {
        let missing: Vec<String> = self
            .records
            .iter()
            .filter(|r| r.label.is_none())
            .map(|r| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Unlabeled { ids: missing });
        }
        Ok(self.records.iter().filter_map(|r| r.label).collect())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn save(&self, path: &Path, format: DataFormat) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        match format {
            DataFormat::Csv => {
                let mut w = csv::Writer::from_writer(file);
                w.write_record(CSV_COLUMNS).map_err(|e| csv_error(path, e))?;
                for r in &self.records {
                    let fields: Vec<String> = r.to_fields().into_iter().map(Option::unwrap_or_default).collect();
                    w.write_record(&fields).map_err(|e| csv_error(path, e))?;
                }
                w.flush().map_err(|e| Error::io(path, e))
            }
            DataFormat::Jsonl => {
                let mut w = std::io::BufWriter::new(file);
                for r in &self.records {
                    let obj: serde_json::Map<String, serde_json::Value> = CSV_COLUMNS
                        .iter()
                        .zip(r.to_fields())
                        .map(|(k, v)| (k.to_string(), v.map_or(serde_json::Value::Null, serde_json::Value::String)))
                        .collect();
                    serde_json::to_writer(&mut w, &obj).map_err(|e| Error::Format(e.to_string()))?;
                    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
                }
                w.flush().map_err(|e| Error::io(path, e))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses from the file extension; anything but `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Training data must carry a label column.
    pub require_label: bool,
    pub program_map: Option<ProgramMap>,
}

pub fn load_dataset(path: &Path, format: DataFormat, options: &LoadOptions) -> Result<Dataset> {
    let records = match format {
        DataFormat::Csv => load_csv(path, options)?,
        DataFormat::Jsonl => load_jsonl(path, options)?,
    };
    Dataset::new(records)
}

fn required_columns(options: &LoadOptions) -> impl Iterator<Item = &'static str> + '_ {
    CSV_COLUMNS
        .into_iter()
        .filter(move |c| !OPTIONAL_COLUMNS.contains(c) && (*c != "label" || options.require_label))
}

fn load_csv(path: &Path, options: &LoadOptions) -> Result<Vec<StudentRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    if let Some(missing) = required_columns(options).find(|c| !index.contains_key(c)) {
        return Err(Error::MissingColumn {
            column: missing.to_string(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| Error::Row {
            row: row_number,
            message: e.to_string(),
        })?;
        let get = |col: &str| -> Option<String> {
            index
                .get(col)
                .and_then(|&j| row.get(j))
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.to_string())
        };
        out.push(parse_record(&get, options, row_number)?);
    }
    Ok(out)
}

fn load_jsonl(path: &Path, options: &LoadOptions) -> Result<Vec<StudentRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut row_number = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        row_number += 1;
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| Error::Row {
                row: row_number,
                message: e.to_string(),
            })?;
        if let Some(missing) = required_columns(options).find(|c| !obj.contains_key(*c)) {
            return Err(Error::MissingColumn {
                column: missing.to_string(),
            });
        }
        let get = |col: &str| -> Option<String> {
            match obj.get(col)? {
                serde_json::Value::Null => None,
                serde_json::Value::String(s) if s.trim().is_empty() => None,
                serde_json::Value::String(s) => Some(s.clone()),
                serde_json::Value::Bool(b) => Some(u8::from(*b).to_string()),
                other => Some(other.to_string()),
            }
        };
        out.push(parse_record(&get, options, row_number)?);
    }
    Ok(out)
}

fn parse_record(
    get: &dyn Fn(&str) -> Option<String>,
    options: &LoadOptions,
    row: usize,
) -> Result<StudentRecord> {
    let bad = |message: String| Error::Row { row, message };
    let required = |col: &str| get(col).ok_or_else(|| bad(format!("missing value for `{col}`")));

    let id = required("id")?.trim().to_string();
    let cohort_raw = required("cohort")?;
    let cohort = Cohort::parse(cohort_raw.trim()).ok_or_else(|| bad(format!("invalid cohort `{cohort_raw}`")))?;
    let prior_raw = required("prior_education")?;
    let prior_education =
        PriorEducation::parse(prior_raw.trim()).ok_or_else(|| bad(format!("invalid prior_education `{prior_raw}`")))?;
    let dob_raw = required("date_of_birth")?;
    let date_of_birth = NaiveDate::parse_from_str(dob_raw.trim(), "%Y-%m-%d")
        .map_err(|_| bad(format!("invalid date_of_birth `{dob_raw}`")))?;
    let program = required("program")?.trim().to_string();
    let declared = get("discipline").and_then(|s| Discipline::parse(s.trim()));
    let mapped = options.program_map.as_ref().and_then(|m| m.get(&program));
    let discipline = match (declared, mapped) {
        (Some(d), Some(m)) if d != m => {
            return Err(bad(format!(
                "discipline `{}` inconsistent with program `{program}` (mapped to `{}`)",
                d.name(),
                m.name()
            )))
        }
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => return Err(bad(format!("no discipline for program `{program}`"))),
    };
    let strict_flag = |col: &str| -> Result<bool> {
        let raw = required(col)?;
        parse_bool(&raw).ok_or_else(|| bad(format!("invalid boolean `{raw}` for `{col}`")))
    };
    let previously_enrolled = strict_flag("previously_enrolled")?;
    let multiple_requests = strict_flag("multiple_requests")?;
    let motivation_text = get("motivation_text").unwrap_or_default();
    let label = match get("label") {
        None => None,
        Some(raw) => Some(
            raw.trim()
                .parse::<u8>()
                .ok()
                .and_then(Label::from_code)
                .ok_or_else(|| bad(format!("invalid label `{raw}`")))?,
        ),
    };
    if options.require_label && label.is_none() {
        return Err(bad("missing label".into()));
    }

    Ok(StudentRecord {
        id,
        cohort,
        prior_education,
        grades: Grades {
            dutch: get("grade_nl").and_then(|s| parse_grade(&s)),
            english: get("grade_en").and_then(|s| parse_grade(&s)),
            math: get("grade_math").and_then(|s| parse_grade(&s)),
        },
        ability_belief: get("ability_belief").and_then(|s| parse_bool(&s)),
        interest: get("interest").and_then(|s| parse_bool(&s)),
        gender: get("gender").and_then(|s| parse_bool(&s)),
        date_of_birth,
        program,
        discipline,
        previously_enrolled,
        multiple_requests,
        motivation_text,
        label,
    })
}

/// Accepts `7`, `7.5` and the Dutch decimal comma `7,5`; out-of-range marks
/// are treated as missing.
fn parse_grade(s: &str) -> Option<f64> {
    let g: f64 = s.trim().replace(',', ".").parse().ok()?;
    (1.0..=10.0).contains(&g).then_some(g)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    /// Sample standard deviation; 1 for constant or single-row columns.
    pub scale: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Standardizer {
        let n = values.len();
        if n == 0 {
            return Standardizer { mean: 0.0, scale: 1.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        Standardizer {
            mean,
            scale: if sd > 0.0 && sd.is_finite() { sd } else { 1.0 },
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }
}

/// Imputation and scaling constants for a dense column with missing values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseColumn {
    pub impute: f64,
    pub standardizer: Standardizer,
}

impl DenseColumn {
    fn fit(values: &[Option<f64>]) -> DenseColumn {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let impute = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        let filled: Vec<f64> = values.iter().map(|v| v.unwrap_or(impute)).collect();
        DenseColumn {
            impute,
            standardizer: Standardizer::fit(&filled),
        }
    }

    fn encode(&self, v: Option<f64>) -> (f64, f64) {
        match v {
            Some(v) => (self.standardizer.apply(v), 0.0),
            None => (self.standardizer.apply(self.impute), 1.0),
        }
    }
}

/// Structured-feature constants fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub program_levels: Vec<String>,
    pub hsgpa: DenseColumn,
    pub age: DenseColumn,
    /// Training modes for imputing missing booleans.
    pub ability_belief_mode: bool,
    pub interest_mode: bool,
    pub gender_mode: bool,
}

impl FeatureSchema {
    pub const VERSION: u32 = 1;

    pub fn fit(dataset: &Dataset) -> FeatureSchema {
        let recs = &dataset.records;
        let program_levels: Vec<String> = recs
            .iter()
            .map(|r| r.program.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let hsgpa: Vec<Option<f64>> = recs.iter().map(|r| r.grades.hsgpa()).collect();
        let age: Vec<Option<f64>> = recs.iter().map(|r| Some(r.age())).collect();
        let mode = |f: fn(&StudentRecord) -> Option<bool>| {
            let (yes, no) = recs.iter().filter_map(f).fold((0usize, 0usize), |(y, n), b| {
                if b {
                    (y + 1, n)
                } else {
                    (y, n + 1)
                }
            });
            yes > no
        };
        FeatureSchema {
            version: Self::VERSION,
            program_levels,
            hsgpa: DenseColumn::fit(&hsgpa),
            age: DenseColumn::fit(&age),
            ability_belief_mode: mode(|r| r.ability_belief),
            interest_mode: mode(|r| r.interest),
            gender_mode: mode(|r| r.gender),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = PriorEducation::ALL
            .iter()
            .map(|p| format!("prior_education={}", p.name()))
            .collect();
        cols.extend(
            [
                "hsgpa",
                "hsgpa_missing",
                "ability_belief",
                "ability_belief_missing",
                "interest",
                "interest_missing",
                "gender",
                "gender_missing",
                "age",
                "cohort",
            ]
            .map(String::from),
        );
        cols.extend(self.program_levels.iter().map(|p| format!("program={p}")));
        cols.extend(Discipline::ALL.iter().map(|d| format!("discipline={}", d.name())));
        cols.push("previously_enrolled".into());
        cols.push("multiple_requests".into());
        cols
    }

    /// Encodes one record; the flag reports an unseen program level.
    fn encode_record(&self, r: &StudentRecord) -> (Vec<f64>, bool) {
        let mut row = Vec::with_capacity(self.program_levels.len() + 20);
        row.extend(PriorEducation::ALL.iter().map(|&p| indicator(r.prior_education == p)));
        let (hsgpa, hsgpa_missing) = self.hsgpa.encode(r.grades.hsgpa());
        row.push(hsgpa);
        row.push(hsgpa_missing);
        for (value, mode) in [
            (r.ability_belief, self.ability_belief_mode),
            (r.interest, self.interest_mode),
            (r.gender, self.gender_mode),
        ] {
            row.push(indicator(value.unwrap_or(mode)));
            row.push(indicator(value.is_none()));
        }
        row.push(self.age.encode(Some(r.age())).0);
        row.push(f64::from(r.cohort.code()));
        let program_pos = self.program_levels.binary_search(&r.program).ok();
        row.extend((0..self.program_levels.len()).map(|j| indicator(program_pos == Some(j))));
        row.extend(Discipline::ALL.iter().map(|&d| indicator(r.discipline == d)));
        row.push(indicator(r.previously_enrolled));
        row.push(indicator(r.multiple_requests));
        (row, program_pos.is_none())
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct StructuredEncoding {
    pub block: FeatureBlock,
    pub schema: FeatureSchema,
    /// Test-mode records whose program was not seen in training.
    pub unseen_programs: usize,
}

/// Encodes structured variables. With `schema = None` the schema is fitted on
/// `dataset` first (training mode).
pub fn encode_structured(dataset: &Dataset, schema: Option<&FeatureSchema>) -> StructuredEncoding {
    let schema = match schema {
        Some(s) => s.clone(),
        None => FeatureSchema::fit(dataset),
    };
    let mut unseen_programs = 0;
    let rows = dataset
        .records
        .iter()
        .map(|r| {
            let (row, unseen) = schema.encode_record(r);
            if unseen {
                unseen_programs += 1;
            }
            SparseVector::from_dense(&row)
        })
        .collect();
    if unseen_programs > 0 {
        log::warn!("{unseen_programs} records with programs unseen in training; program dummies left at zero");
    }
    StructuredEncoding {
        block: FeatureBlock::new("structured", schema.column_names(), rows),
        schema,
        unseen_programs,
    }
}

/// Seeded uniform permutation; the first `floor(n * train_fraction)` indices
/// form the training part.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Guard against 0.29 * 100 = 28.999...
    let n_train = ((n as f64 * train_fraction) + 1e-9).floor() as usize;
    let test = order.split_off(n_train.min(n));
    Ok((order, test))
}

pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    dataset.labels()?;
    let (train, test) = split_indices(dataset.len(), train_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Seeded k-fold partition of `0..n`; validation sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} records")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0usize; n];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}

pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    kfold_indices(dataset.len(), k, seed)
}
