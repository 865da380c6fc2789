use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fecam_core::cam::{default_guard, DEFAULT_MARGIN_FRACTION};
use fecam_core::device::{CellConfig, DeviceParams};
use fecam_core::hdc::HdcConfig;
use fecam_core::sensing::{DEFAULT_E_STAGE, DEFAULT_T_STAGE};
use serde_json::Value;
use tempfile::TempDir;

fn fecam(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fecam"));
    cmd.args(args).env_remove("FECAM_OUT_DIR");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ideal_bcam_sweep_is_a_staircase() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[device]\nsigma_vth = 0.0\n[mc]\nwordlength = 8\ntrials = 3\n",
    );
    let out = tmp.path().join("out");
    run_ok(&mut fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(&out)]));
    let rows = csv_rows(&out.join("bcam-sweep.csv"));
    assert_eq!(rows.len(), 18);
    let i_on = 0.1 / 1e6;
    for r in &rows {
        let k: f64 = r[1].parse().unwrap();
        let (m1, s1): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        let (m2, s2): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!(s1.abs() < 1e-6 * i_on && s2.abs() < 1e-6 * i_on);
        let (expect1, expect2) = match &r[0] {
            "case-i" => (k * i_on, 8.0 * i_on),
            "case-ii" => (0.0, (8.0 - k) * i_on),
            other => panic!("unexpected scenario {other}"),
        };
        assert!((m1 - expect1).abs() < 0.01 * i_on, "{r:?}");
        assert!((m2 - expect2).abs() < 0.01 * i_on, "{r:?}");
        assert_eq!(&r[8], "0");
        assert_eq!(&r[9], "1");
    }
}

#[test]
fn unknown_key_is_named_in_the_error() {
    let tmp = TempDir::new().unwrap();
    for (text, key) in [
        ("[device]\nsigma_vht = 0.0\n", "sigma_vht"),
        ("wordlenght = 4\n", "wordlenght"),
        ("[mcc]\ntrials = 4\n", "mcc"),
    ] {
        let cfg = write_config(tmp.path(), "bad.toml", text);
        let out = fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(tmp.path())])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(key), "{key} not in {err}");
    }
}

#[test]
fn schema_violations_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    for (text, needle) in [
        ("[mc]\nwordlength = \"eight\"\n", "wordlength"),
        ("[ladder]\nmargin_fraction = 0.7\n", "ladder.margin_fraction"),
        ("[hdc]\nthreshold = 5000\n", "hdc.threshold"),
        ("kind = \"nonsense\"\n", "kind"),
    ] {
        let cfg = write_config(tmp.path(), "bad.toml", text);
        let out = fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(tmp.path())])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{needle} not in {err}");
    }
}

#[test]
fn infeasible_guard_exits_with_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[ladder]\nm_guard = 0.9\n[mc]\ntrials = 2\n");
    let out = fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(tmp.path())])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("bcam-sweep.csv").exists());
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.toml");
    let out = fecam(&["bcam-sweep", "--config", s(&missing)]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dumped_defaults_equal_module_defaults() {
    let out = run_ok(&mut fecam(&["dump-config", "bcam-sweep"]));
    let v: toml::Table = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let dev: DeviceParams = v["device"].clone().try_into().unwrap();
    assert_eq!(dev, DeviceParams::binary());
    let cell: CellConfig = v["cell"].clone().try_into().unwrap();
    assert_eq!(cell, CellConfig::default());
    assert_eq!(v["ladder"]["m_guard"].as_float(), Some(default_guard(&dev)));
    assert_eq!(v["ladder"]["margin_fraction"].as_float(), Some(DEFAULT_MARGIN_FRACTION));
    assert_eq!(v["adc"]["t_stage"].as_float(), Some(DEFAULT_T_STAGE));
    assert_eq!(v["adc"]["e_stage"].as_float(), Some(DEFAULT_E_STAGE));
    let h = HdcConfig::default();
    assert_eq!(v["hdc"]["k"].as_integer(), Some(h.k as i64));
    assert_eq!(v["hdc"]["stride"].as_integer(), Some(h.stride as i64));
    assert_eq!(v["hdc"]["dim"].as_integer(), Some(h.dim as i64));
    let scenarios: Vec<&str> = v["mc"]["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap())
        .collect();
    assert_eq!(scenarios, ["case-i", "case-ii"]);

    let out = run_ok(&mut fecam(&["dump-config", "mcam-worst"]));
    let v: toml::Table = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let dev: DeviceParams = v["device"].clone().try_into().unwrap();
    assert_eq!(dev, DeviceParams::four_level());
    assert_eq!(v["mc"]["wordlength"].as_integer(), Some(64));
}

#[test]
fn dumped_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let first = run_ok(&mut fecam(&["dump-config", "limiter-ablation", "--seed", "9"])).stdout;
    let cfg = tmp.path().join("dump.toml");
    fs::write(&cfg, &first).unwrap();
    let second = run_ok(&mut fecam(&["dump-config", "--config", s(&cfg)])).stdout;
    assert_eq!(first, second);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "formats = [\"csv\", \"json\", \"svg\"]\n[mc]\ntrials = 20\nscenarios = [\"mixed\"]\n",
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        run_ok(&mut fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(dir)]));
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n.to_string_lossy().ends_with(".svg")));
    assert!(names.len() >= 4);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn seed_flag_changes_the_sample() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[mc]\ntrials = 5\nscenarios = [\"mixed\"]\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok(&mut fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(&a), "--seed", "1"]));
    run_ok(&mut fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(&b), "--seed", "2"]));
    assert_ne!(
        fs::read(a.join("bcam-sweep.csv")).unwrap(),
        fs::read(b.join("bcam-sweep.csv")).unwrap()
    );
}

#[test]
fn device_iv_defaults_give_sixty_devices_with_two_reads_per_state() {
    let tmp = TempDir::new().unwrap();
    let out = run_ok(&mut fecam(&["device-iv", "--out", s(tmp.path())]));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("device-iv:"));
    let reads = csv_rows(&tmp.path().join("device-iv-reads.csv"));
    assert_eq!(reads.len(), 60 * 2 * 2);
    let mut devices: Vec<&str> = reads.iter().map(|r| r.get(0).unwrap()).collect();
    devices.dedup();
    assert_eq!(devices.len(), 60);
    for r in &reads {
        let (i_fet, i_cell): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!(i_cell <= i_fet * (1.0 + 1e-12) && i_cell <= 0.1 / 1e6);
    }
    let curves = csv_rows(&tmp.path().join("device-iv.csv"));
    // 151 gate points from -0.5 V to 2.5 V in 20 mV steps.
    assert_eq!(curves.len(), 60 * 2 * 151);
    let v = read_json(&tmp.path().join("device-iv.json"));
    assert_eq!(v["kind"], "device-iv");
    assert_eq!(v["metrics"]["devices"], 60);
}

#[test]
fn svg_only_format_writes_plots() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[device_iv]\ndevices = 3\n");
    run_ok(&mut fecam(&[
        "device-iv", "--config", s(&cfg), "--out", s(tmp.path()), "--format", "svg",
    ]));
    let names: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "c.toml")
        .collect();
    assert!(!names.is_empty());
    for n in &names {
        assert!(n.ends_with(".svg"), "{n}");
        let text = fs::read_to_string(tmp.path().join(n)).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn bench_report_on_empty_list_is_empty() {
    let tmp = TempDir::new().unwrap();
    let out = run_ok(&mut fecam(&["bench-report", "--out", s(tmp.path())]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 runs"));
    let v = read_json(&tmp.path().join("bench-report.json"));
    assert_eq!(v["runs"].as_array().unwrap().len(), 0);
    assert_eq!(v["missing"].as_array().unwrap().len(), 0);
    assert_eq!(v["label"], "model-derived, not paper-validated");
    assert!(csv_rows(&tmp.path().join("bench-report.csv")).is_empty());
}

#[test]
fn bench_report_lists_and_skips_missing_inputs() {
    let tmp = TempDir::new().unwrap();
    let garbage = write_config(tmp.path(), "garbage.json", "{ not json");
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!(
            "[bench]\ninputs = [{:?}, {:?}]\n",
            s(&tmp.path().join("absent.json")),
            s(&garbage)
        ),
    );
    let out = run_ok(&mut fecam(&["bench-report", "--config", s(&cfg), "--out", s(tmp.path())]));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v = read_json(&tmp.path().join("bench-report.json"));
    assert_eq!(v["runs"].as_array().unwrap().len(), 0);
    assert_eq!(v["missing"].as_array().unwrap().len(), 2);
}

#[test]
fn doubling_wordlength_doubles_sense_latency() {
    let tmp = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for n in [32, 64] {
        let cfg = write_config(
            tmp.path(),
            &format!("w{n}.toml"),
            &format!("[device]\nsigma_vth = 0.0\n[mc]\nwordlength = {n}\ntrials = 1\nscenarios = [\"case-i\"]\n"),
        );
        let dir = tmp.path().join(format!("w{n}"));
        run_ok(&mut fecam(&["bcam-sweep", "--config", s(&cfg), "--out", s(&dir)]));
        inputs.push(dir.join("bcam-sweep.json"));
    }
    let cfg = write_config(
        tmp.path(),
        "bench.toml",
        &format!("[bench]\ninputs = [{:?}, {:?}]\n", s(&inputs[0]), s(&inputs[1])),
    );
    run_ok(&mut fecam(&["bench-report", "--config", s(&cfg), "--out", s(tmp.path())]));
    let v = read_json(&tmp.path().join("bench-report.json"));
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let lat = |i: usize| runs[i]["sense_latency_per_word"].as_f64().unwrap();
    let energy = |i: usize| runs[i]["sense_energy_per_word"].as_f64().unwrap();
    assert!((lat(1) / lat(0) - 2.0).abs() < 1e-12);
    assert!((energy(1) / energy(0) - 2.0).abs() < 1e-12);
}

#[test]
fn out_dir_env_var_is_honored() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("from-env");
    let mut cmd = fecam(&["adc-sweep"]);
    cmd.env("FECAM_OUT_DIR", &dir).current_dir(tmp.path());
    run_ok(&mut cmd);
    assert!(dir.join("adc-sweep.csv").is_file());
    assert!(!tmp.path().join("fecam-out").exists());
}

#[test]
fn adc_sweep_is_linear_in_threshold() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[adc]\nwordlength = 16\n");
    run_ok(&mut fecam(&["adc-sweep", "--config", s(&cfg), "--out", s(tmp.path())]));
    let rows = csv_rows(&tmp.path().join("adc-sweep.csv"));
    assert_eq!(rows.len(), 16);
    for (i, r) in rows.iter().enumerate() {
        let t = (i + 1) as f64;
        let lat: f64 = r[2].parse().unwrap();
        assert!((lat - (t + 1.0) * DEFAULT_T_STAGE).abs() < 1e-9 * lat);
    }
}

#[test]
fn genome_query_finds_planted_patterns_in_a_fasta_reference() {
    let tmp = TempDir::new().unwrap();
    let reference = "ACGTTGCAAGGCTTACCGATAGGCTAACGTTAGCCATGCATTGACCGTAGGTCATGCAAT";
    let fasta = write_config(
        tmp.path(),
        "ref.fa",
        &format!(">chr\n{}\n{}\n", &reference[..30], &reference[30..]),
    );
    let queries = write_config(tmp.path(), "q.txt", "gatagGCTAACGTTAG\n\nTTTTTTTTTTTTTTTT\n");
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!(
            "[device]\nsigma_vth = 0.0\n[hdc]\nreference = {:?}\nqueries = {:?}\n",
            s(&fasta),
            s(&queries)
        ),
    );
    run_ok(&mut fecam(&["genome-query", "--config", s(&cfg), "--out", s(tmp.path())]));
    let rows = csv_rows(&tmp.path().join("genome-query.csv"));
    let hits: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string(), r[2].to_string()))
        .collect();
    let start = reference.find("GATAGGCTAACGTTAG").unwrap().to_string();
    assert_eq!(hits, [("0".to_string(), start, "0".to_string())]);
    let v = read_json(&tmp.path().join("genome-query.json"));
    assert_eq!(v["metrics"]["oracle_agreement"], 1.0);
}

#[test]
fn malformed_fasta_is_reported_with_position() {
    let tmp = TempDir::new().unwrap();
    let fasta = write_config(tmp.path(), "ref.fa", ">r\nACGTACGT\nACGXACGT\n");
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &format!("[hdc]\nreference = {:?}\n", s(&fasta)),
    );
    let out = fecam(&["genome-build", "--config", s(&cfg), "--out", s(tmp.path())])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column 4"), "{err}");
}

#[test]
fn full_default_pipeline_feeds_the_bench_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let kinds = [
        "device-iv",
        "bcam-sweep",
        "limiter-ablation",
        "mcam-worst",
        "adc-sweep",
        "genome-build",
        "genome-query",
    ];
    for kind in kinds {
        let o = run_ok(&mut fecam(&[kind, "--out", s(&out)]));
        let line = String::from_utf8(o.stdout).unwrap();
        assert_eq!(line.lines().count(), 1, "{line}");
        assert!(line.starts_with(kind));
    }
    let inputs: Vec<String> = kinds
        .iter()
        .map(|k| format!("{:?}", s(&out.join(format!("{k}.json")))))
        .collect();
    let cfg = write_config(
        tmp.path(),
        "bench.toml",
        &format!("[bench]\ninputs = [{}]\n", inputs.join(", ")),
    );
    run_ok(&mut fecam(&["bench-report", "--config", s(&cfg), "--out", s(&out)]));
    let v = read_json(&out.join("bench-report.json"));
    assert_eq!(v["label"], "model-derived, not paper-validated");
    assert!(v["missing"].as_array().unwrap().is_empty());
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), kinds.len());
    let mandatory = [
        "input",
        "kind",
        "wordlength",
        "segments",
        "entries",
        "error_rate",
        "step1_margin",
        "step2_margin",
        "sense_latency_per_word",
        "sense_energy_per_word",
        "latency_per_query",
        "energy_per_query",
    ];
    for (run, kind) in runs.iter().zip(kinds) {
        assert_eq!(run["kind"], kind);
        for key in mandatory {
            assert!(run.get(key).is_some(), "{kind} lacks {key}");
        }
        assert!(run["latency_per_query"].as_f64().unwrap() > 0.0);
    }
    let genome = &runs[6];
    assert_eq!(genome["segments"], 16);
    assert_eq!(
        genome["latency_per_query"].as_f64().unwrap(),
        genome["sense_latency_per_word"].as_f64().unwrap() * 16.0 * genome["entries"].as_f64().unwrap()
    );
}

#[test]
fn run_takes_the_kind_from_the_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "kind = \"adc-sweep\"\n[adc]\nwordlength = 4\n");
    let out = run_ok(&mut fecam(&["run", "--config", s(&cfg), "--out", s(tmp.path())]));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("adc-sweep:"));
    assert_eq!(csv_rows(&tmp.path().join("adc-sweep.csv")).len(), 4);

    let cfg = write_config(tmp.path(), "none.toml", "seed = 3\n");
    let out = fecam(&["run", "--config", s(&cfg)]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind"));
}
