use fewmode::config::*;
use fewmode::run::*;
use fewmode::Error;

fn small(name: &str, count: usize) -> RunConfig {
    let mut cfg = preset(name).unwrap();
    cfg.grid.count = count;
    cfg
}

#[test]
fn every_preset_resolves_and_round_trips() {
    assert_eq!(preset_names().len(), PRESETS.len());
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.name, name);
        let run = cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(run.grid.len(), cfg.grid.count);
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg, "{name}");
    }
}

#[test]
fn unknown_preset_and_fields_are_config_errors() {
    assert!(matches!(preset("no-such-preset"), Err(Error::Config { .. })));
    let text = preset("double-delta-one-mode").unwrap().to_toml().unwrap().replace("count = 1000", "count = \"many\"");
    match RunConfig::from_toml(&text) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "grid.count"),
        other => panic!("{other:?}"),
    }
    let text = format!("{}\n[extra]\nx = 1\n", preset("double-delta-one-mode").unwrap().to_toml().unwrap());
    assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config { .. })));
}

#[test]
fn sweep_parameters_apply_only_where_meaningful() {
    let map = preset("thin-mirror-single-mode-map").unwrap();
    let c = map.with_parameter(SweepParameter::Eta, 0.1).unwrap();
    assert!(c.sweep.is_none());
    assert!(matches!(c.geometry, GeometryConfig::ThinMirror { eta, .. } if eta == 0.1));
    assert!(map.with_parameter(SweepParameter::NMid, 3.0).is_err());
    assert!(map.with_parameter(SweepParameter::BIn, 3.0).is_err());
    let sweep = map.sweep.unwrap();
    for eta in [0.01, 0.1, 0.19] {
        assert!(sweep.values.contains(&eta));
    }
}

#[test]
fn resonant_atom_tracks_the_empty_cavity_peak() {
    let run = preset("thin-mirror-atom-good-cavity").unwrap().resolve().unwrap();
    let omega_a = run.atom.unwrap().omega_a;
    let peak = fewmode::interaction::transmission_peak(&run.spec, omega_a - 0.5, omega_a + 0.5).unwrap();
    assert!((omega_a - peak).abs() < 1e-8);
}

#[test]
fn spectrum_files_carry_the_oracle_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("double-delta-one-mode", 64);
    let out = run_spectrum(&cfg, dir.path()).unwrap();
    assert_eq!(out.files.len(), 2);
    let mut reader = csv::Reader::from_path(&out.files[0]).unwrap();
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (full, oracle) = (col("t_full_abs2"), col("t_oracle_abs2"));
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let a: f64 = rec[full].parse().unwrap();
        let b: f64 = rec[oracle].parse().unwrap();
        assert!((a - b).abs() < 1e-6);
        n += 1;
    }
    assert_eq!(n, 64);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.files[1]).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 64);
    assert_eq!(manifest["config"]["name"], "double-delta-one-mode");
    assert!(manifest["conventions"]["length"].as_str().unwrap().contains("L = 1"));
    assert!(manifest["tolerances"]["q_orthogonality"].is_number());
}

#[test]
fn sweep_writes_an_index() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("thin-mirror-single-mode-map", 41);
    cfg.sweep.as_mut().unwrap().values = vec![0.01, 0.1, 0.19];
    let out = run_sweep(&cfg, dir.path()).unwrap();
    assert!(out.files.len() >= 6);
    let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 4);
    assert!(index.starts_with("index,value,csv,omega_a,peak_x"));
}

#[test]
fn spectrum_rows_are_independent_of_thread_count() {
    let run = small("thin-mirror-atom-good-cavity", 50).resolve().unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| compute_spectrum(&run).unwrap());
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| compute_spectrum(&run).unwrap());
    for (a, b) in serial.iter().zip(&parallel) {
        assert_eq!(csv_record(&run, a), csv_record(&run, b));
    }
}

#[test]
fn drive_rows_report_steady_states() {
    let run = small("double-cavity-drive-sweep", 21).resolve().unwrap();
    let rows = compute_spectrum(&run).unwrap();
    let header = csv_header(&run);
    assert!(header.iter().any(|h| h == "sigma_z"));
    for r in &rows {
        let d = r.drive.unwrap();
        assert!(d.residual < 1e-12);
        assert!((-1.0..=0.0).contains(&d.sigma_z));
    }
}
