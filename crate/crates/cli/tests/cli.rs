use std::path::PathBuf;
use std::process::{Command, Output};

use serde::Deserialize;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccss"))
}

fn preset(name: &str) -> String {
    format!("{}/presets/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, body: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows<T: for<'de> Deserialize<'de>>(csv_text: &str) -> Vec<T> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .unwrap()
}

fn is_prob(p: Option<f64>) -> bool {
    p.map_or(true, |p| (0.0..=1.0).contains(&p))
}

#[derive(Debug, Deserialize)]
struct LocalRow {
    pf: f64,
    tau: f64,
    pd_analytic: Option<f64>,
    pd_complex_model: f64,
    pd_mc: Option<f64>,
    mc_ci: Option<f64>,
    m: f64,
    snr_db: f64,
}

#[derive(Debug, Deserialize)]
struct SystemRow {
    rule: String,
    pf_target: Option<f64>,
    threshold: f64,
    pf_analytic: Option<f64>,
    pd_analytic: Option<f64>,
    pf_mc: f64,
    pd_mc: f64,
    pd_ci: f64,
}

#[derive(Debug, Deserialize)]
struct LoptRow {
    l: usize,
    p_d: f64,
    p_f: f64,
    p_tot: f64,
    p_tot_mc: Option<f64>,
    is_lopt: u8,
}

#[derive(Debug, Deserialize)]
struct ComplexityRow {
    variables: u32,
    c_fg: u128,
    c_cn: u128,
}

const MINIMAL: &str = "n = 10\ntrials = 2000\n\n[local]\nm = 1\nsnr_db = 4\npf = [0.01, 0.1, 0.5]\n";

#[test]
fn minimal_local_roc_has_three_rows() {
    let path = scratch("minimal.toml", MINIMAL);
    let text = stdout_ok(&["local-roc", "--scenario", &path]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "pf,tau,pd_analytic,pd_complex_model,pd_mc,mc_ci,m,snr_db");
    let parsed: Vec<LocalRow> = rows(&text);
    assert_eq!(parsed.len(), 3);
    for r in &parsed {
        assert!(is_prob(Some(r.pf)) && is_prob(r.pd_analytic) && is_prob(Some(r.pd_complex_model)));
        assert!(is_prob(r.pd_mc) && r.mc_ci.unwrap() > 0.0 && r.tau > 0.0);
        assert_eq!((r.m, r.snr_db), (1.0, 4.0));
        assert!((r.pd_mc.unwrap() - r.pd_analytic.unwrap()).abs() <= r.mc_ci.unwrap() + 0.005);
    }
}

#[test]
fn nakagami_m_below_half_is_a_config_error() {
    let path = scratch("bad_m.toml", "n = 10\n[local]\nm = 0.3\nsnr_db = 4\n");
    let out = run(&["local-roc", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("m >= 1/2") && err.contains("line 3"), "{err}");
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let path = scratch("bad_key.toml", "n = 10\n[local]\nm = 1\nsnr_db = 4\nsnr = 3\n");
    let out = run(&["local-roc", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
    let out = run(&["local-roc", "--scenario", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["system-roc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn complexity_reproduces_single_branch_row() {
    let text = stdout_ok(&["complexity", "--cards", "2"]);
    assert!(text.lines().any(|l| l == "6,60,384"), "{text}");
    let parsed: Vec<ComplexityRow> = rows(&text);
    assert!(parsed.iter().any(|r| (r.variables, r.c_fg, r.c_cn) == (40, 280, 640)));
    let text = stdout_ok(&["complexity", "--scenario", &preset("complexity.toml"), "--census"]);
    assert!(text.starts_with("variables,c_fg,c_cn,card,k,graph"));
    assert!(text.contains("\n6,60,384,2,1,full,"));
    assert!(text.contains("\n40,1040,10240,4,10,chain,"));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let cases: [Vec<&str>; 3] = [
        vec!["local-roc", "--scenario", "", "--trials", "5000"],
        vec!["system-roc", "--scenario", "", "--trials", "10000"],
        vec!["lopt", "--scenario", "", "--trials", "3000"],
    ];
    let files = [preset("fig3_m1.toml"), preset("fig9_hetero.toml"), preset("fig7_k15.toml")];
    for (mut args, file) in cases.into_iter().zip(&files) {
        args[2] = file;
        let one = stdout_ok(&[args.as_slice(), &["--workers", "1"]].concat());
        let four = stdout_ok(&[args.as_slice(), &["--workers", "4"]].concat());
        let again = stdout_ok(&[args.as_slice(), &["--workers", "1"]].concat());
        assert_eq!(one, four, "{args:?}");
        assert_eq!(one, again, "{args:?}");
    }
}

#[test]
fn system_roc_round_trips_and_stays_in_range() {
    let text = stdout_ok(&["system-roc", "--scenario", &preset("fig10_low.toml"), "--trials", "10000"]);
    let parsed: Vec<SystemRow> = rows(&text);
    assert_eq!(parsed.len(), 3 * 5 + 11);
    for r in &parsed {
        assert!(is_prob(r.pf_target) && is_prob(r.pf_analytic) && is_prob(r.pd_analytic));
        assert!(is_prob(Some(r.pf_mc)) && is_prob(Some(r.pd_mc)) && r.pd_ci >= 0.0);
        assert!(r.threshold.is_finite());
        if r.rule.starts_with("counting_") {
            assert!((r.pd_mc - r.pd_analytic.unwrap()).abs() <= r.pd_ci + 0.01);
        }
    }
}

#[test]
fn lopt_marks_one_row_and_agrees_with_argmin() {
    let text = stdout_ok(&["lopt", "--scenario", &preset("fig7_k20.toml"), "--trials", "0"]);
    let parsed: Vec<LoptRow> = rows(&text);
    assert_eq!(parsed.len(), 20);
    let marked: Vec<&LoptRow> = parsed.iter().filter(|r| r.is_lopt == 1).collect();
    assert_eq!(marked.len(), 1);
    let best = parsed.iter().map(|r| r.p_tot).fold(f64::INFINITY, f64::min);
    assert!(marked[0].p_tot <= best + 1e-9);
    for r in &parsed {
        assert!(r.p_tot_mc.is_none());
        assert!((r.p_tot - (1.0 - r.p_d + r.p_f)).abs() < 1e-8 && (1..=20).contains(&r.l));
    }
}

#[test]
fn json_mirrors_csv() {
    let path = scratch("json.toml", MINIMAL);
    let csv_text = stdout_ok(&["croc", "--scenario", &path]);
    let json_text = stdout_ok(&["croc", "--scenario", &path, "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let jrows = doc["rows"].as_array().unwrap();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let cols: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(cols, header.iter().collect::<Vec<_>>());
    let records: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), jrows.len());
    for (rec, jr) in records.iter().zip(jrows) {
        for (name, cell) in header.iter().zip(rec.iter()) {
            let v = &jr[name];
            if cell.is_empty() {
                assert!(v.is_null());
            } else {
                assert_eq!(cell.parse::<f64>().unwrap(), v.as_f64().unwrap(), "{name}");
            }
        }
    }
    assert_eq!(doc["params"]["trials"], 2000);
}

#[test]
fn mc_model_leaves_the_analytic_column_empty() {
    let path = scratch("mc.toml", MINIMAL);
    let text = stdout_ok(&["local-roc", "--scenario", &path, "--model", "mc"]);
    let parsed: Vec<LocalRow> = rows(&text);
    assert!(parsed.iter().all(|r| r.pd_analytic.is_none() && r.pd_mc.is_some()));
    let out = run(&["local-roc", "--scenario", &path, "--model", "mc", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let path = scratch("outflag.toml", MINIMAL);
    let dest = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("outflag.csv");
    let shown = stdout_ok(&["local-roc", "--scenario", &path]);
    stdout_ok(&["local-roc", "--scenario", &path, "--out", dest.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(dest).unwrap(), shown);
}

#[test]
fn validate_passes_and_reports_every_check() {
    let out = run(&["validate", "--trials", "10000"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().count() > 10);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",PASS")), "{text}");
    let out = run(&["validate", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_preset_parses() {
    let dir = std::fs::read_dir(format!("{}/presets", env!("CARGO_MANIFEST_DIR"))).unwrap();
    for entry in dir {
        let path = entry.unwrap().path();
        let src = std::fs::read_to_string(&path).unwrap();
        let sc = ccss_cli::scenario::Scenario::parse(&src, &path.display().to_string()).unwrap();
        if sc.file.network.is_some() {
            sc.network(ccss_core::PdRoute::Phi2).unwrap();
        }
        if sc.file.local.is_some() {
            assert!(!sc.local_pf_grid().unwrap().is_empty());
        }
    }
}
