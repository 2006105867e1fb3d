use std::path::PathBuf;

use motivmine::corpus::{load_dataset, DataFormat, LoadOptions, CSV_COLUMNS};
use motivmine::synth::{self, SynthParams};
use motivmine::{Error, ErrorKind, Label};

const HEADER: &str = "id,cohort,prior_education,grade_nl,grade_en,grade_math,ability_belief,interest,gender,date_of_birth,program,discipline,previously_enrolled,multiple_requests,motivation_text,label";

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn training() -> LoadOptions {
    LoadOptions {
        require_label: true,
        program_map: None,
    }
}

#[test]
fn header_matches_documented_columns() {
    assert_eq!(CSV_COLUMNS.join(","), HEADER);
}

#[test]
fn empty_file_with_header_gives_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "empty.csv", &format!("{HEADER}\n"));
    let ds = load_dataset(&p, DataFormat::Csv, &training()).unwrap();
    assert!(ds.is_empty());
}

#[test]
fn grades_with_empty_third_field() {
    let dir = tempfile::tempdir().unwrap();
    let row = "S1,2014,1,7,8,,1,1,0,1996-03-01,PSY,social,0,0,Ik wil psychologie studeren.,0";
    let p = write(&dir, "one.csv", &format!("{HEADER}\n{row}\n"));
    let ds = load_dataset(&p, DataFormat::Csv, &training()).unwrap();
    let g = ds.records[0].grades;
    assert_eq!((g.dutch, g.english, g.math), (Some(7.0), Some(8.0), None));
    assert_eq!(g.hsgpa(), Some(7.5));
    assert_eq!(ds.records[0].label, Some(Label::Retention));
}

#[test]
fn out_of_range_optional_value_becomes_missing() {
    let dir = tempfile::tempdir().unwrap();
    let row = "S1,2014,1,12,\"6,5\",x,1,1,maybe,1996-03-01,PSY,social,0,0,tekst,1";
    let p = write(&dir, "one.csv", &format!("{HEADER}\n{row}\n"));
    let r = &load_dataset(&p, DataFormat::Csv, &training()).unwrap().records[0];
    assert_eq!(r.grades.dutch, None);
    assert_eq!(r.grades.english, Some(6.5));
    assert_eq!(r.grades.math, None);
    assert_eq!(r.gender, None);
}

#[test]
fn missing_required_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let header = HEADER.replace(",motivation_text", "");
    let p = write(&dir, "bad.csv", &format!("{header}\n"));
    match load_dataset(&p, DataFormat::Csv, &training()) {
        Err(Error::MissingColumn { column }) => assert_eq!(column, "motivation_text"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn label_only_required_when_training() {
    let dir = tempfile::tempdir().unwrap();
    let header = HEADER.replace(",label", "");
    let row = "S1,2015,2,7,7,7,1,1,1,1997-01-01,LAW,social,0,1,tekst";
    let p = write(&dir, "unlabeled.csv", &format!("{header}\n{row}\n"));
    assert!(matches!(load_dataset(&p, DataFormat::Csv, &training()), Err(Error::MissingColumn { .. })));
    let ds = load_dataset(&p, DataFormat::Csv, &LoadOptions::default()).unwrap();
    assert_eq!(ds.records[0].label, None);
    assert!(matches!(ds.labels(), Err(Error::Unlabeled { .. })));
}

#[test]
fn malformed_row_reports_row_number() {
    let dir = tempfile::tempdir().unwrap();
    let good = "S1,2014,1,7,8,,1,1,0,1996-03-01,PSY,social,0,0,tekst,0";
    let bad = "S2,2014,1,7,8,,1,1,0,not-a-date,PSY,social,0,0,tekst,0";
    let p = write(&dir, "rows.csv", &format!("{HEADER}\n{good}\n{bad}\n"));
    match load_dataset(&p, DataFormat::Csv, &training()) {
        Err(e @ Error::Row { row: 2, .. }) => assert_eq!(e.kind(), ErrorKind::Data),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_and_jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, _) = synth::generate(&SynthParams {
        n_records: 50,
        ..SynthParams::default()
    });
    for (name, format) in [("d.csv", DataFormat::Csv), ("d.jsonl", DataFormat::Jsonl)] {
        let p = dir.path().join(name);
        ds.save(&p, format).unwrap();
        assert_eq!(DataFormat::from_path(&p), format);
        assert_eq!(load_dataset(&p, format, &training()).unwrap(), ds);
    }
}

#[test]
fn jsonl_missing_key_and_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "x.jsonl", "{\"id\": \"S1\"}\n");
    assert!(matches!(load_dataset(&p, DataFormat::Jsonl, &training()), Err(Error::MissingColumn { .. })));
    let p = write(&dir, "y.jsonl", "not json\n");
    assert!(load_dataset(&p, DataFormat::Jsonl, &training()).is_err());
}
