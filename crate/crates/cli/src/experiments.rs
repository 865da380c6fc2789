use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use fecam_core::cam::{make_ladder, SearchVoltageLadder};
use fecam_core::device::{cell_current, fet_current, sample_device, DeviceParams};
use fecam_core::hdc::{
    build_index, oracle_match, parse_fasta, query, random_sequence, read_queries, GenomeIndex,
};
use fecam_core::montecarlo::{
    run_bcam_sweep, run_limiter_ablation, run_mcam_worst_case, McExperimentConfig, McResult,
    Scenario, TrialRecord,
};
use fecam_core::sensing::{sense_cost, stages_for_threshold, AdcConfig};
use fecam_core::stats::{fit_line, mean_std};
use serde_json::{json, Value};

use crate::config::{Effective, Kind};
use crate::output::Artifacts;
use crate::svg::{Chart, Style};
use crate::CliError;

pub const BENCH_LABEL: &str = "model-derived, not paper-validated";

pub fn run(eff: &Effective) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::new(eff.kind.name());
    match eff.kind {
        Kind::DeviceIv => device_iv(eff, &mut out)?,
        Kind::BcamSweep => bcam_sweep(eff, &mut out)?,
        Kind::LimiterAblation => limiter_ablation(eff, &mut out)?,
        Kind::McamWorst => mcam_worst(eff, &mut out)?,
        Kind::AdcSweep => adc_sweep(eff, &mut out)?,
        Kind::GenomeBuild => genome_build(eff, &mut out)?,
        Kind::GenomeQuery => genome_query(eff, &mut out)?,
        Kind::BenchReport => bench_report(eff, &mut out)?,
    }
    Ok(out)
}

fn summary(eff: &Effective, wordlength: usize, segments: usize, entries: usize, metrics: Value) -> Value {
    // Where the files land does not change what they contain.
    let mut config = json!(eff);
    if let Some(c) = config.as_object_mut() {
        c.remove("out_dir");
    }
    json!({
        "kind": eff.kind.name(),
        "wordlength": wordlength,
        "segments": segments,
        "entries": entries,
        "metrics": metrics,
        "config": config,
    })
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(fecam_core::Error::from)?;
    for r in rows {
        w.write_record(&r).map_err(fecam_core::Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn ladder(eff: &Effective) -> Result<SearchVoltageLadder, CliError> {
    Ok(make_ladder(&eff.device, eff.ladder.m_guard)?)
}

fn mc_config(eff: &Effective, scenario: Scenario) -> McExperimentConfig {
    McExperimentConfig {
        wordlength: eff.mc.wordlength,
        trials: eff.mc.trials,
        seed: eff.seed,
        scenario,
        device: eff.device.clone(),
        cell: eff.cell,
        m_guard: Some(eff.ladder.m_guard),
        margin_fraction: eff.ladder.margin_fraction,
    }
}

fn device_seed(seed: u64, device: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ device as u64
}

fn read_names(p: &DeviceParams) -> Vec<String> {
    if p.num_levels() == 2 {
        vec!["vsl2".into(), "vsl3".into()]
    } else {
        (0..p.num_levels()).map(|s| format!("read{s}")).collect()
    }
}

fn device_iv(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let p = &eff.device;
    let iv = &eff.device_iv;
    let ladder = ladder(eff)?;
    let steps = ((iv.vg_max - iv.vg_min) / iv.vg_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| iv.vg_min + i as f64 * iv.vg_step).collect();
    // Reads at the step-2 voltage of each symbol: VSL2 and VSL3 for binary.
    let reads: Vec<f64> = (0..p.num_levels()).map(|s| ladder.step_voltages(s as u8).1).collect();
    let names = read_names(p);

    let mut curves = Vec::new();
    let mut read_rows = Vec::new();
    let mut fefet_chart = Chart::new("FeFET I_D-V_G", "V_G (V)", "I_D (A)").log_y();
    let mut cell_chart = Chart::new("1FeFET1R I_D-V_G", "V_G (V)", "I_D (A)").log_y();
    // (state, read) -> (fefet, cell) samples
    let mut on = vec![vec![(Vec::new(), Vec::new()); reads.len()]; p.num_levels()];
    for d in 0..iv.devices {
        for (s, on_state) in on.iter_mut().enumerate() {
            let dev = sample_device(p, s, device_seed(eff.seed, d))?;
            let vth = dev.vth();
            let mut pf = Vec::with_capacity(grid.len());
            let mut pc = Vec::with_capacity(grid.len());
            for &vg in &grid {
                let f = fet_current(vg, eff.cell.vd, vth, p)?;
                let c = cell_current(vg, &dev, &eff.cell, p)?;
                curves.push(vec![d.to_string(), s.to_string(), format!("{vg:.4}"), sci(f), sci(c)]);
                pf.push((vg, f));
                pc.push((vg, c));
            }
            let label = format!("state {s}");
            fefet_chart.push(&label, pf, Style::Line, s);
            cell_chart.push(&label, pc, Style::Line, s);
            for (r, &vg) in reads.iter().enumerate() {
                let f = fet_current(vg, eff.cell.vd, vth, p)?;
                let c = cell_current(vg, &dev, &eff.cell, p)?;
                read_rows.push(vec![
                    d.to_string(),
                    s.to_string(),
                    names[r].clone(),
                    format!("{vg:.4}"),
                    sci(f),
                    sci(c),
                ]);
                on_state[r].0.push(f);
                on_state[r].1.push(c);
            }
        }
    }
    // ON reads: a state read at or above its own level.
    let mut stats = Vec::new();
    let (mut worst_fefet, mut worst_cell) = (0.0f64, 0.0f64);
    for (s, per_read) in on.iter().enumerate() {
        for (r, (f, c)) in per_read.iter().enumerate() {
            let (mf, sf) = mean_std(f);
            let (mc, sc) = mean_std(c);
            let is_on = r >= s;
            if is_on {
                worst_fefet = worst_fefet.max(sf / mf);
                worst_cell = worst_cell.max(sc / mc);
            }
            stats.push(json!({
                "state": s, "read": names[r], "on": is_on,
                "fefet_mean": mf, "fefet_std": sf, "cell_mean": mc, "cell_std": sc,
            }));
        }
    }
    out.csv(
        "",
        csv_bytes(&["device", "state", "vg", "i_fefet", "i_cell"], curves)?,
    );
    out.csv(
        "reads",
        csv_bytes(&["device", "state", "read", "vg", "i_fefet", "i_cell"], read_rows)?,
    );
    out.svg("fefet", fefet_chart.render());
    out.svg("cell", cell_chart.render());
    out.json(summary(
        eff,
        1,
        1,
        iv.devices,
        json!({
            "devices": iv.devices,
            "reads": stats,
            "on_cv_fefet": worst_fefet,
            "on_cv_cell": worst_cell,
        }),
    ));
    out.line = format!(
        "device-iv: {} devices, worst ON-current CV {:.2}% bare FeFET, {:.2}% with limiter",
        iv.devices,
        100.0 * worst_fefet,
        100.0 * worst_cell
    );
    Ok(())
}

fn separation_json(r: &McResult) -> Value {
    json!({
        "step1_margin": r.step1.margin,
        "step1_overlap": r.step1.overlap_fraction,
        "step2_margin": r.step2.margin,
        "step2_overlap": r.step2.overlap_fraction,
    })
}

fn trial_rows<'a>(r: &'a McResult, extra: &'a str) -> impl Iterator<Item = Vec<String>> + 'a {
    r.records.iter().map(move |t: &TrialRecord| {
        let mut row = vec![
            r.scenarios[t.scenario].id.clone(),
            t.trial.to_string(),
            sci(t.i_mls1),
            sci(t.i_mls2),
            t.above.to_string(),
            t.below.to_string(),
            t.decoded.to_string(),
            t.truth.to_string(),
        ];
        if !extra.is_empty() {
            row.insert(0, extra.to_string());
        }
        row
    })
}

const TRIAL_HEADER: [&str; 8] = ["scenario", "trial", "i_mls1", "i_mls2", "above", "below", "decoded", "truth"];

/// Deterministic horizontal spread for strip plots.
fn jitter(trial: usize) -> f64 {
    ((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 11) as f64 / (1u64 << 53) as f64 * 0.5 - 0.25
}

fn bcam_sweep(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let n = eff.mc.wordlength;
    let mut table = Vec::new();
    let mut trials = Vec::new();
    let mut results = Vec::new();
    let mut chart = Chart::new("Matchline current vs mismatches", "mismatch count k", "I_ML / I_ON");
    for (c, &scenario) in eff.mc.scenarios.iter().enumerate() {
        let res = run_bcam_sweep(&mc_config(eff, scenario))?;
        let ion = res.i_on_nominal;
        let mut mean1 = Vec::new();
        let mut mean2 = Vec::new();
        for (k, s) in res.scenarios.iter().enumerate() {
            table.push(vec![
                s.id.split('/').next().unwrap_or("").to_string(),
                k.to_string(),
                sci(s.mean_i_mls1),
                sci(s.std_i_mls1),
                sci(s.mean_i_mls2),
                sci(s.std_i_mls2),
                format!("{:.6}", s.mean_i_mls1 / ion),
                format!("{:.6}", n as f64 - s.mean_i_mls2 / ion),
                format!("{}", s.error_rate),
                format!("{}", s.adc_accuracy),
            ]);
            mean1.push((k as f64, s.mean_i_mls1 / ion));
            mean2.push((k as f64, s.mean_i_mls2 / ion));
        }
        let pts1 = res
            .records
            .iter()
            .map(|t| (t.scenario as f64 + jitter(t.trial) * 0.5, t.i_mls1 / ion))
            .collect();
        let pts2 = res
            .records
            .iter()
            .map(|t| (t.scenario as f64 + jitter(t.trial) * 0.5, t.i_mls2 / ion))
            .collect();
        let name = scenario_name(scenario);
        chart.push(&format!("{name} step 1"), pts1, Style::Markers, 2 * c);
        chart.push(&format!("{name} step 1"), mean1, Style::Line, 2 * c);
        chart.push(&format!("{name} step 2"), pts2, Style::Markers, 2 * c + 1);
        chart.push(&format!("{name} step 2"), mean2, Style::Line, 2 * c + 1);
        trials.extend(trial_rows(&res, "").collect::<Vec<_>>());
        results.push(res);
    }
    out.csv(
        "",
        csv_bytes(
            &[
                "scenario",
                "k",
                "mean_i_mls1",
                "std_i_mls1",
                "mean_i_mls2",
                "std_i_mls2",
                "step1_count",
                "step2_count",
                "error_rate",
                "adc_accuracy",
            ],
            table,
        )?,
    );
    out.csv("trials", csv_bytes(&TRIAL_HEADER, trials)?);
    out.svg("", chart.render());
    let total: usize = results.iter().map(|r| r.records.len()).sum();
    let error_rate = results
        .iter()
        .map(|r| r.error_rate * r.records.len() as f64)
        .sum::<f64>()
        / total as f64;
    let adc = results
        .iter()
        .map(|r| r.adc_accuracy * r.records.len() as f64)
        .sum::<f64>()
        / total as f64;
    let worst = |f: fn(&McResult) -> Option<f64>| {
        results.iter().filter_map(f).fold(None, |a: Option<f64>, m| Some(a.map_or(m, |a| a.min(m))))
    };
    let m1 = worst(|r| r.step1.margin);
    let m2 = worst(|r| r.step2.margin);
    out.json(summary(
        eff,
        n,
        1,
        1,
        json!({
            "trials": total,
            "error_rate": error_rate,
            "adc_accuracy": adc,
            "step1_margin": m1,
            "step2_margin": m2,
            "scenarios": results.iter().map(|r| json!({
                "scenario": scenario_name(r.config.scenario),
                "summaries": r.scenarios,
                "separation": separation_json(r),
            })).collect::<Vec<_>>(),
        }),
    ));
    out.line = format!(
        "bcam-sweep: N={n}, {total} trials, error rate {:.4}%, ADC accuracy {:.4}%",
        100.0 * error_rate,
        100.0 * adc
    );
    Ok(())
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::CaseI => "case-i",
        Scenario::CaseII => "case-ii",
        Scenario::Mixed => "mixed",
        Scenario::Random => "random",
        Scenario::McamOneCell => "mcam-one-cell",
    }
}

fn limiter_ablation(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let n = eff.mc.wordlength;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut charts = [
        Chart::new("Step 1 distributions", "St0Sr1 count (jittered)", "I_MLS1 / I_ON"),
        Chart::new("Step 2 distributions", "St1Sr0 count (jittered)", "I_MLS2 / I_ON"),
    ];
    for &scenario in &eff.mc.scenarios {
        let ab = run_limiter_ablation(&mc_config(eff, scenario))?;
        for (label, r, color) in [("limiter-on", &ab.with_limiter, 0), ("limiter-off", &ab.without_limiter, 1)] {
            rows.extend(trial_rows(r, label).collect::<Vec<_>>());
            let ion = r.i_on_nominal;
            let off = if color == 0 { -0.15 } else { 0.15 };
            charts[0].push(
                label,
                r.records
                    .iter()
                    .map(|t| (t.above as f64 + off + 0.2 * jitter(t.trial), t.i_mls1 / ion))
                    .collect(),
                Style::Markers,
                color,
            );
            charts[1].push(
                label,
                r.records
                    .iter()
                    .map(|t| (t.below as f64 + off + 0.2 * jitter(t.trial), t.i_mls2 / ion))
                    .collect(),
                Style::Markers,
                color,
            );
        }
        runs.push((scenario, ab));
    }
    let mut header = vec!["limiter"];
    header.extend(TRIAL_HEADER);
    out.csv("", csv_bytes(&header, rows)?);
    out.svg("step1", charts[0].render());
    out.svg("step2", charts[1].render());
    let (s0, first) = &runs[0];
    let on = &first.with_limiter;
    let off = &first.without_limiter;
    out.json(summary(
        eff,
        n,
        1,
        1,
        json!({
            "error_rate": on.error_rate,
            "step1_margin": on.step1.margin,
            "step2_margin": on.step2.margin,
            "runs": runs.iter().map(|(s, ab)| json!({
                "scenario": scenario_name(*s),
                "limiter_on": { "error_rate": ab.with_limiter.error_rate, "separation": separation_json(&ab.with_limiter) },
                "limiter_off": { "error_rate": ab.without_limiter.error_rate, "separation": separation_json(&ab.without_limiter) },
            })).collect::<Vec<_>>(),
        }),
    ));
    out.line = format!(
        "limiter-ablation: N={n}, {}: step-2 overlap {:.2}% without limiter vs {:.2}% with; step-1 overlap {:.2}% vs {:.2}%",
        scenario_name(*s0),
        100.0 * off.step2.overlap_fraction,
        100.0 * on.step2.overlap_fraction,
        100.0 * off.step1.overlap_fraction,
        100.0 * on.step1.overlap_fraction,
    );
    Ok(())
}

fn mcam_worst(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let n = eff.mc.wordlength;
    let res = run_mcam_worst_case(&mc_config(eff, Scenario::McamOneCell))?;
    let ion = res.i_on_nominal;
    let mut charts = [
        Chart::new("MCAM step 1", "scenario", "I_MLS1 / I_ON"),
        Chart::new("MCAM step 2", "scenario", "I_MLS2 / I_ON"),
    ];
    for (i, s) in res.scenarios.iter().enumerate() {
        let (a, b) = res.samples(i);
        let x = |t: usize| i as f64 + jitter(t);
        charts[0].push(&s.id, a.iter().enumerate().map(|(t, &v)| (x(t), v / ion)).collect(), Style::Markers, i);
        charts[1].push(&s.id, b.iter().enumerate().map(|(t, &v)| (x(t), v / ion)).collect(), Style::Markers, i);
    }
    out.csv("", csv_bytes(&TRIAL_HEADER, trial_rows(&res, ""))?);
    out.svg("step1", charts[0].render());
    out.svg("step2", charts[1].render());
    let accuracy: Vec<Value> = res
        .scenarios
        .iter()
        .map(|s| json!({ "scenario": s.id, "accuracy": 1.0 - s.error_rate, "summary": s }))
        .collect();
    out.json(summary(
        eff,
        n,
        1,
        1,
        json!({
            "error_rate": res.error_rate,
            "step1_margin": res.step1.margin,
            "step2_margin": res.step2.margin,
            "scenarios": accuracy,
        }),
    ));
    let worst = res.scenarios.iter().map(|s| 1.0 - s.error_rate).fold(1.0, f64::min);
    out.line = format!(
        "mcam-worst: N={n}, {} trials per scenario, worst classification accuracy {:.2}%",
        eff.mc.trials,
        100.0 * worst
    );
    Ok(())
}

fn adc_config(eff: &Effective, wordlength: usize) -> AdcConfig {
    AdcConfig {
        t_stage: eff.adc.t_stage,
        e_stage: eff.adc.e_stage,
        ..AdcConfig::new(eff.cell.i_on_nominal(), wordlength + 1)
    }
}

fn adc_sweep(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let n = eff.adc.wordlength;
    let adc = adc_config(eff, n);
    adc.validate()?;
    let mut rows = Vec::new();
    let (mut ts, mut lat, mut en) = (Vec::new(), Vec::new(), Vec::new());
    for t in 1..=n {
        let stages = stages_for_threshold(t);
        let c = sense_cost(stages, &adc)?;
        rows.push(vec![t.to_string(), stages.to_string(), sci(c.latency), sci(c.energy)]);
        ts.push(t as f64);
        lat.push(c.latency);
        en.push(c.energy);
    }
    let fit = |ys: &[f64]| fit_line(&ts, ys);
    let (fl, fe) = (fit(&lat), fit(&en));
    let mut cl = Chart::new("Sensing latency", "Hamming threshold", "latency (s)");
    cl.push("latency", ts.iter().copied().zip(lat.iter().copied()).collect(), Style::Line, 0);
    let mut ce = Chart::new("Sensing energy", "Hamming threshold", "energy (J)");
    ce.push("energy", ts.iter().copied().zip(en.iter().copied()).collect(), Style::Line, 1);
    out.csv("", csv_bytes(&["threshold", "stages", "latency", "energy"], rows)?);
    out.svg("latency", cl.render());
    out.svg("energy", ce.render());
    let fit_json = |f: &Option<fecam_core::stats::LineFit>| {
        f.map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared }))
    };
    out.json(summary(
        eff,
        n,
        1,
        1,
        json!({
            "thresholds": n,
            "latency_fit": fit_json(&fl),
            "energy_fit": fit_json(&fe),
        }),
    ));
    out.line = format!(
        "adc-sweep: thresholds 1..={n}, latency R^2 {:.6}, energy R^2 {:.6}",
        fl.map_or(f64::NAN, |f| f.r_squared),
        fe.map_or(f64::NAN, |f| f.r_squared)
    );
    Ok(())
}

struct Reference {
    seq: String,
    source: String,
}

fn load_reference(eff: &Effective) -> Result<Reference, CliError> {
    match &eff.hdc.reference {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| CliError::Config(format!("hdc.reference {}: {e}", path.display())))?;
            let records = parse_fasta(BufReader::new(file))?;
            let rec = records.into_iter().nth(eff.hdc.record).ok_or_else(|| {
                CliError::Config(format!(
                    "hdc.record {} not present in {}",
                    eff.hdc.record,
                    path.display()
                ))
            })?;
            Ok(Reference {
                source: format!("fasta:{}", rec.id),
                seq: rec.seq,
            })
        }
        None => Ok(Reference {
            seq: random_sequence(eff.hdc.synthetic_length, eff.seed),
            source: format!("synthetic:{}", eff.hdc.synthetic_length),
        }),
    }
}

fn build(eff: &Effective, reference: &Reference) -> Result<GenomeIndex, CliError> {
    Ok(build_index(
        &reference.seq,
        &eff.hdc.index_config(eff.seed, eff.ladder.m_guard),
        eff.device.clone(),
        eff.cell,
    )?)
}

fn genome_build(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let reference = load_reference(eff)?;
    let index = build(eff, &reference)?;
    let entries = index
        .positions()
        .iter()
        .enumerate()
        .map(|(e, p)| vec![e.to_string(), p.to_string()]);
    out.csv("entries", csv_bytes(&["entry", "offset"], entries)?);
    let mut array = Vec::new();
    index.array().write_csv(&mut array)?;
    out.csv("array", array);
    out.json(summary(
        eff,
        64,
        index.segments(),
        index.entries(),
        json!({
            "reference": reference.source,
            "reference_length": reference.seq.len(),
            "k": index.k(),
            "stride": index.stride(),
            "dim": index.dim(),
            "rows": index.array().rows(),
        }),
    ));
    out.line = format!(
        "genome-build: {} bases, {} entries x {} segments ({} CAM rows)",
        reference.seq.len(),
        index.entries(),
        index.segments(),
        index.array().rows()
    );
    Ok(())
}

fn load_queries(eff: &Effective, reference: &str) -> Result<Vec<String>, CliError> {
    if let Some(path) = &eff.hdc.queries {
        let file = fs::File::open(path)
            .map_err(|e| CliError::Config(format!("hdc.queries {}: {e}", path.display())))?;
        return Ok(read_queries(BufReader::new(file))?);
    }
    let k = eff.hdc.k;
    let n = eff.hdc.synthetic_queries;
    let windows = reference.len() + 1 - k;
    let present = n.div_ceil(2);
    let mut out: Vec<String> = (0..present)
        .map(|i| {
            let p = i * windows / present;
            reference[p..p + k].to_string()
        })
        .collect();
    let pool = random_sequence((n - present) * k, eff.seed ^ 0x5eed);
    out.extend((0..n - present).map(|i| pool[i * k..(i + 1) * k].to_string()));
    Ok(out)
}

fn genome_query(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let reference = load_reference(eff)?;
    let index = build(eff, &reference)?;
    let queries = load_queries(eff, &reference.seq)?;
    let threshold = eff.hdc.threshold;
    let mut rows = Vec::new();
    let mut per_query = Vec::new();
    let mut agree = 0usize;
    for (qi, pattern) in queries.iter().enumerate() {
        let res = query(&index, pattern, threshold)?;
        for h in &res.hits {
            rows.push(vec![qi.to_string(), h.offset.to_string(), h.distance.to_string()]);
        }
        let exact: BTreeSet<usize> = res.hits.iter().filter(|h| h.distance == 0).map(|h| h.offset).collect();
        let oracle: BTreeSet<usize> = oracle_match(&reference.seq, pattern)
            .into_iter()
            .filter(|o| o % index.stride() == 0)
            .collect();
        let ok = exact == oracle;
        agree += ok as usize;
        per_query.push(json!({
            "query": qi, "pattern": pattern, "hits": res.hits.len(),
            "exact_hits": exact.len(), "oracle_hits": oracle.len(), "oracle_agrees": ok,
        }));
    }
    out.csv("", csv_bytes(&["query", "offset", "distance"], rows.iter().cloned())?);
    let agreement = if queries.is_empty() { 1.0 } else { agree as f64 / queries.len() as f64 };
    out.json(summary(
        eff,
        64,
        index.segments(),
        index.entries(),
        json!({
            "reference": reference.source,
            "queries": queries.len(),
            "threshold": threshold,
            "total_hits": rows.len(),
            "oracle_agreement": agreement,
            "per_query": per_query,
        }),
    ));
    out.line = format!(
        "genome-query: {} queries over {} entries, {} hits at threshold {threshold}, exact-match oracle agreement {:.1}%",
        queries.len(),
        index.entries(),
        rows.len(),
        100.0 * agreement
    );
    Ok(())
}

/// Key metrics of one earlier run, with the analytic sensing cost per query.
fn bench_entry(eff: &Effective, path: &Path, v: &Value) -> Result<Value, String> {
    let field = |k: &str| v.get(k).and_then(Value::as_u64).ok_or(format!("missing `{k}`"));
    let kind = v.get("kind").and_then(Value::as_str).ok_or("missing `kind`")?;
    let wordlength = field("wordlength")? as usize;
    let segments = field("segments")? as usize;
    let entries = field("entries")? as usize;
    let metrics = v.get("metrics").cloned().unwrap_or(Value::Null);
    let pick = |k: &str| metrics.get(k).cloned().unwrap_or(Value::Null);
    // A full thermometer read of a word takes one stage per cell.
    let adc = adc_config(eff, wordlength);
    let word = sense_cost(wordlength, &adc).map_err(|e| e.to_string())?;
    let per_query = (segments * entries) as f64;
    Ok(json!({
        "input": path.display().to_string(),
        "kind": kind,
        "wordlength": wordlength,
        "segments": segments,
        "entries": entries,
        "error_rate": pick("error_rate"),
        "step1_margin": pick("step1_margin"),
        "step2_margin": pick("step2_margin"),
        "sense_latency_per_word": word.latency,
        "sense_energy_per_word": word.energy,
        "latency_per_query": word.latency * per_query,
        "energy_per_query": word.energy * per_query,
    }))
}

fn bench_report(eff: &Effective, out: &mut Artifacts) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for path in &eff.bench.inputs {
        let parsed = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| e.to_string()))
            .and_then(|v| bench_entry(eff, path, &v));
        match parsed {
            Ok(r) => rows.push(r),
            Err(why) => {
                eprintln!("warning: skipping {}: {why}", path.display());
                skipped.push(json!({ "input": path.display().to_string(), "reason": why }));
            }
        }
    }
    let cols = [
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
    let csv_rows = rows.iter().map(|r| {
        cols.iter()
            .map(|c| match &r[*c] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            })
            .collect()
    });
    out.csv("", csv_bytes(&cols, csv_rows)?);
    out.json(json!({
        "label": BENCH_LABEL,
        "t_stage": eff.adc.t_stage,
        "e_stage": eff.adc.e_stage,
        "runs": rows,
        "missing": skipped,
    }));
    out.line = format!(
        "bench-report ({BENCH_LABEL}): {} runs, {} skipped",
        rows.len(),
        skipped.len()
    );
    Ok(())
}
