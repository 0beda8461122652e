use quasiperiodic::scan::{
    export, gap_persistence, import_json, spectrum_scan, Format, ScanConfig, ScanReport, CSV_HEADER,
};

fn small() -> ScanConfig {
    ScanConfig {
        lambda: 4.0,
        n: 40,
        grid: 8,
        seed: 11,
        ..ScanConfig::default()
    }
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn json_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let rep = gap_persistence(&small(), &[6, 8]).unwrap().finest;
    export(&rep, Format::Json, &path).unwrap();
    assert_eq!(import_json(&path).unwrap(), rep);
}

#[test]
fn csv_rows_are_gaps_plus_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let cfg = ScanConfig {
        potential: "cos".into(),
        omega: "golden".into(),
        lambda: 5.0,
        ..small()
    };
    let rep = spectrum_scan(&cfg).unwrap();
    assert!(!rep.gaps.is_empty());
    export(&rep, Format::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), rep.gaps.len() + rep.eigenvalues.len());
    assert_eq!(rows.iter().filter(|r| r.starts_with("gap,")).count(), rep.gaps.len());
    // 17 significant digits survive the trip
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(first, rep.gaps[0].left);
    assert!(text.contains(&format!("# seed: {}", cfg.seed)));
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let mut rep: ScanReport = spectrum_scan(&small()).unwrap();
    rep.gaps.clear();
    rep.eigenvalues.clear();
    rep.phase_indices.clear();
    export(&rep, Format::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(data_rows(&text).is_empty());
    assert!(text.lines().any(|l| l == CSV_HEADER.join(",")));
}

#[test]
fn io_errors_carry_the_path() {
    let rep = spectrum_scan(&small()).unwrap();
    let bad = std::path::Path::new("/nonexistent-dir/out.csv");
    let err = export(&rep, Format::Csv, bad).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/out.csv"), "{err}");
}
