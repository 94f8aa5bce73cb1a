use std::path::Path;

use anyhow::{anyhow, Context};
use kawasaki_core::geometry::{lemma7_energy, summarize, RectBox};
use kawasaki_core::landscape::{
    barrier, compare_barriers, in_b, in_p1, in_p2, region_t, summary_energy, verify_proof_inequalities, BarrierKind,
    RectSpec,
};
use kawasaki_core::model::{
    derive_constants, format_rational, hamiltonian, rational_to_f64, Configuration, DerivedConstants, ModelParams,
};
use kawasaki_core::oracle::{scan_boundary_of_b, ScanLimits};
use kawasaki_core::refpath::build_reference_path;
use kawasaki_core::simulator::{
    beta_stats, centred_corner, fate, parse_rect, recurrence, run_many, GateCheck, Kernel, SimConfig, Target,
    TrajectorySample,
};
use num_rational::Rational64;
use serde::Serialize;
use serde_json::json;

use crate::config::{read_params, ParamFile};
use crate::{Cli, Command, McArgs};

#[derive(Debug)]
pub enum Failure {
    /// Malformed input: exit status 2.
    Parse(anyhow::Error),
    /// Well-formed input the model rejects: exit status 3.
    Domain(anyhow::Error),
}

type Result<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn parse_err(self) -> Result<T>;
    fn domain_err(self) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn parse_err(self) -> Result<T> {
        self.map_err(|e| Failure::Parse(e.into()))
    }

    fn domain_err(self) -> Result<T> {
        self.map_err(|e| Failure::Domain(e.into()))
    }
}

/// Named output files plus a one-line summary.
struct Emit {
    files: Vec<(String, String)>,
    summary: String,
}

impl Emit {
    fn json<T: Serialize>(name: &str, value: &T, summary: String) -> Self {
        let text = serde_json::to_string_pretty(value).expect("serializable report") + "\n";
        Self { files: vec![(name.to_string(), text)], summary }
    }
}

/// With an output directory the files are written there and the summary goes
/// to stdout; otherwise the file contents go to stdout and the summary to
/// stderr.
fn emit(out: Option<&Path>, e: Emit) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).domain_err()?;
            for (name, text) in &e.files {
                let path = dir.join(name);
                std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display())).domain_err()?;
            }
            println!("{}", e.summary);
        }
        None => {
            for (_, text) in &e.files {
                print!("{text}");
            }
            eprintln!("{}", e.summary);
        }
    }
    Ok(())
}

fn csv_text<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat CSV row");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 CSV")
}

fn load_params(cli: &Cli) -> Result<(ParamFile, DerivedConstants)> {
    let file = match &cli.params {
        Some(path) => read_params(path).parse_err()?,
        None => ParamFile::default(),
    };
    let p = &file.params;
    let params = ModelParams::new(p.u1, p.u2, p.delta, p.beta, p.l0).domain_err()?;
    let dc = derive_constants(&params, file.strict).domain_err()?;
    Ok((ParamFile { params, ..file }, dc))
}

fn read_grid(path: &Path) -> Result<Configuration> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).parse_err()?;
    Configuration::from_grid(&text).with_context(|| format!("in {}", path.display())).parse_err()
}

fn parse_pair(text: &str, what: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|_| anyhow!("bad {what} {text:?}")).parse_err()?,
            b.parse().map_err(|_| anyhow!("bad {what} {text:?}")).parse_err()?,
        )),
        _ => Err(Failure::Parse(anyhow!("{what} must be `a,b`, got {text:?}"))),
    }
}

/// Split on commas that are not inside parentheses, so `one,R(4,3)` gives two
/// targets.
fn split_targets(text: &str) -> Vec<String> {
    let (mut out, mut cur, mut depth) = (Vec::new(), String::new(), 0);
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().domain_err()?;
    }
    let (file, dc) = load_params(cli)?;
    let p = &file.params;
    let out = cli.out.as_deref();
    let e = match &cli.command {
        Command::Constants => constants(p, &dc),
        Command::Energy { grid } => energy(p, &dc, &read_grid(grid)?),
        Command::Classify { grid } => classify(p, &dc, &read_grid(grid)?),
        Command::Barriers { l1, l2, max } => barriers(p, &dc, *l1, *l2, *max)?,
        Command::Refpath { anchor } => refpath(p, &dc, parse_pair(anchor, "anchor")?)?,
        Command::Simulate { mc, start, targets, full_gate_check } => {
            simulate(cli.seed, p, mc, start, targets, *full_gate_check)?
        }
        Command::Fate { mc, rect } => fate_cmd(cli.seed, p, mc, rect)?,
        Command::Recurrence { mc, max_particles } => recurrence_cmd(cli.seed, p, mc, *max_particles)?,
        Command::OracleScan { window, max_particles, max_free } => {
            oracle_scan(p, &dc, window, ScanLimits { max_particles: *max_particles, max_free: *max_free })?
        }
        Command::Inequalities { kmax } => {
            let r = verify_proof_inequalities(&dc, *kmax);
            let failed = r.families.iter().filter(|f| f.applicable && !f.passed).count();
            let summary = format!("{} families, {failed} failing, all passed: {}", r.families.len(), r.all_passed());
            Emit::json("inequalities.json", &r, summary)
        }
    };
    emit(out, e)
}

fn constants(p: &ModelParams, dc: &DerivedConstants) -> Emit {
    let mut warnings = Vec::new();
    if dc.eps > p.u2 / 100 {
        warnings.push("eps > U2/100: the critical droplet is small and finite-size effects are strong");
    }
    let value = json!({ "params": p, "constants": dc, "warnings": warnings });
    let summary = format!(
        "eps={} l2*={} s*={} Gamma={} V*={} regime={}",
        format_rational(dc.eps),
        dc.l2star,
        dc.sstar,
        format_rational(dc.gamma),
        format_rational(dc.vstar),
        dc.regime
    );
    Emit::json("constants.json", &value, summary)
}

fn energy(p: &ModelParams, dc: &DerivedConstants, cfg: &Configuration) -> Emit {
    let p = p.with_l0(cfg.l0());
    let h = hamiltonian(cfg, &p);
    let g = summarize(cfg);
    let value = json!({
        "energy": format_rational(h),
        "energy_f64": rational_to_f64(h),
        "decomposition": format_rational(lemma7_energy(cfg, &p)),
        "descriptor_energy": format_rational(summary_energy(&g, dc)),
        "particles": cfg.particles(),
        "summary": g,
        "grid": cfg.to_grid(),
    });
    Emit::json("energy.json", &value, format!("H={} particles={}", format_rational(h), cfg.particles()))
}

fn classify(p: &ModelParams, dc: &DerivedConstants, cfg: &Configuration) -> Emit {
    let (b, p1, p2) = (in_b(cfg, dc), in_p1(cfg, dc), in_p2(cfg, dc));
    let h = hamiltonian(cfg, &p.with_l0(cfg.l0()));
    let value = json!({
        "B": b.member,
        "rule": b.rule.clone().unwrap_or_else(|| "none".to_string()),
        "P1": p1.member,
        "P2": p2.member,
        "energy": format_rational(h),
        "verdicts": { "B": b, "P1": p1, "P2": p2 },
        "summary": summarize(cfg),
        "grid": cfg.to_grid(),
    });
    let summary = format!("B={} P1={} P2={} H={}", b.member, p1.member, p2.member, format_rational(h));
    Emit::json("classify.json", &value, summary)
}

#[derive(Serialize)]
struct BarrierRow {
    l1: i64,
    l2: i64,
    region: String,
    t_region: String,
    minimal: String,
    value: String,
    value_f64: f64,
    add_row: String,
    add_column: String,
    remove_row: String,
    remove_column: String,
    row_to_column: String,
    column_to_row: String,
}

fn barrier_row(l1: i64, l2: i64, dc: &DerivedConstants, l0: usize) -> Result<BarrierRow> {
    let c = compare_barriers(l1, l2, dc).domain_err()?;
    let b = |k| barrier(k, l1, l2, dc).map(format_rational).domain_err();
    Ok(BarrierRow {
        l1,
        l2,
        region: c.region.to_string(),
        t_region: region_t(l1, l2, dc, l0).to_string(),
        minimal: c.minimal.iter().map(|k| k.name()).collect::<Vec<_>>().join("|"),
        value: format_rational(c.value),
        value_f64: rational_to_f64(c.value),
        add_row: b(BarrierKind::AddRow)?,
        add_column: b(BarrierKind::AddColumn)?,
        remove_row: b(BarrierKind::RemoveRow)?,
        remove_column: b(BarrierKind::RemoveColumn)?,
        row_to_column: b(BarrierKind::RowToColumn)?,
        column_to_row: b(BarrierKind::ColumnToRow)?,
    })
}

fn barriers(p: &ModelParams, dc: &DerivedConstants, l1: Option<i64>, l2: Option<i64>, max: Option<i64>) -> Result<Emit> {
    match (l1, l2) {
        (Some(l1), Some(l2)) => {
            let row = barrier_row(l1, l2, dc, p.l0)?;
            let summary = format!("R({l1},{l2}): region {} minimal {} = {}", row.region, row.minimal, row.value);
            Ok(Emit::json("barriers.json", &row, summary))
        }
        (None, None) => {
            let max = max.unwrap_or(p.l0 as i64);
            if max < 1 {
                return Err(Failure::Domain(anyhow!("--max must be at least 1")));
            }
            let rows: Vec<BarrierRow> = (1..=max)
                .flat_map(|l2| (1..=max).map(move |l1| (l1, l2)))
                .map(|(l1, l2)| barrier_row(l1, l2, dc, p.l0))
                .collect::<Result<_>>()?;
            let summary = format!("{} rectangles up to side {max}", rows.len());
            Ok(Emit { files: vec![("barriers.csv".into(), csv_text(&rows))], summary })
        }
        _ => Err(Failure::Parse(anyhow!("give both --l1 and --l2, or neither for a sweep"))),
    }
}

#[derive(Serialize)]
struct RefpathRow {
    step: usize,
    stage: String,
    op: &'static str,
    s: i64,
    particles: usize,
    energy_num: i64,
    energy_den: i64,
    energy: f64,
    #[serde(rename = "inP1")]
    in_p1: bool,
    #[serde(rename = "inP2")]
    in_p2: bool,
}

fn refpath(p: &ModelParams, dc: &DerivedConstants, anchor: (usize, usize)) -> Result<Emit> {
    let path = build_reference_path(dc, p.l0, anchor).domain_err()?;
    let rows: Vec<RefpathRow> = path
        .states()
        .enumerate()
        .map(|(i, c)| {
            let e = path.energies[i];
            RefpathRow {
                step: i,
                stage: path.tags[i].step.to_string(),
                op: path.tags[i].op,
                s: summarize(&c).s,
                particles: c.particles(),
                energy_num: *e.numer(),
                energy_den: *e.denom(),
                energy: rational_to_f64(e),
                in_p1: in_p1(&c, dc).member,
                in_p2: in_p2(&c, dc).member,
            }
        })
        .collect();
    let peak = path.max_energy();
    let summary = format!(
        "{} states, max energy {} (Gamma {}), {} states at the maximum",
        rows.len(),
        format_rational(peak),
        format_rational(dc.gamma),
        path.argmax().len()
    );
    Ok(Emit { files: vec![("refpath.csv".into(), csv_text(&rows))], summary })
}

fn sim_config(seed: u64, p: &ModelParams, mc: &McArgs, runs: usize, cap: u64) -> Result<SimConfig> {
    let kernel: Kernel = mc.kernel.parse().parse_err()?;
    let beta = mc.beta.unwrap_or(p.beta);
    let params = ModelParams::new(p.u1, p.u2, p.delta, beta, p.l0).domain_err()?;
    let cfg = SimConfig::new(params, seed, mc.runs.unwrap_or(runs), mc.cap.unwrap_or(cap)).domain_err()?;
    Ok(cfg.with_kernel(kernel))
}

#[derive(Serialize)]
struct RunRow {
    seed: u64,
    run: u64,
    start: String,
    outcome: String,
    steps: u64,
    gate_hit: bool,
    max_energy: String,
    max_energy_f64: f64,
}

fn run_rows(samples: &[TrajectorySample]) -> Vec<RunRow> {
    samples
        .iter()
        .map(|s| RunRow {
            seed: s.seed,
            run: s.run,
            start: s.start.clone(),
            outcome: s.outcome_label(),
            steps: s.steps,
            gate_hit: s.gate_hit,
            max_energy: format_rational(s.max_energy),
            max_energy_f64: rational_to_f64(s.max_energy),
        })
        .collect()
}

fn capped_note(capped: usize) -> String {
    if capped > 0 {
        eprintln!("warning: {capped} runs reached the step cap");
        format!(", {capped} capped")
    } else {
        String::new()
    }
}

fn simulate(seed: u64, p: &ModelParams, mc: &McArgs, start: &str, targets: &str, full: bool) -> Result<Emit> {
    let targets: Vec<Target> =
        split_targets(targets).iter().map(|t| t.parse::<Target>()).collect::<std::result::Result<_, _>>().parse_err()?;
    let mut cfg = sim_config(seed, p, mc, 100, 100_000_000)?.with_targets(targets);
    if full {
        cfg.gate_check = GateCheck::Full;
    }
    let l0 = p.l0;
    let init = match start {
        "zero" | "0" | "empty" => Configuration::empty(l0),
        "one" | "1" | "full" => Configuration::full(l0),
        s => match parse_rect(s) {
            Some((l1, l2)) => {
                let r = RectSpec::new(l1, l2);
                if !r.fits(l0) {
                    return Err(Failure::Domain(anyhow!("rectangle {s} does not fit the box")));
                }
                let (x0, y0) = centred_corner(l0, l1, l2);
                Configuration::rectangle(l0, x0, y0, l1 as usize, l2 as usize)
            }
            None => read_grid(Path::new(s))?,
        },
    };
    let samples = run_many(&cfg, start, |_, _| init.clone()).domain_err()?;
    let stats = beta_stats(cfg.params.beta, samples);
    let capped = stats.runs - stats.completed;
    let value = json!({
        "beta": stats.beta,
        "seed": seed,
        "kernel": cfg.kernel,
        "cap": cfg.cap,
        "start": start,
        "targets": cfg.targets,
        "capped": capped,
        "stats": stats,
    });
    let summary = format!(
        "beta={} runs={} completed={} mean={:.4e} gate fraction={:.3}{}",
        stats.beta,
        stats.runs,
        stats.completed,
        stats.mean,
        stats.gate_fraction,
        capped_note(capped)
    );
    let files = vec![
        ("runs.csv".to_string(), csv_text(&run_rows(&stats.samples))),
        ("summary.json".to_string(), serde_json::to_string_pretty(&value).expect("serializable") + "\n"),
    ];
    Ok(Emit { files, summary })
}

fn fate_cmd(seed: u64, p: &ModelParams, mc: &McArgs, rect: &str) -> Result<Emit> {
    let (l1, l2) = parse_rect(rect).ok_or_else(|| anyhow!("bad rectangle {rect:?}")).parse_err()?;
    let cfg = sim_config(seed, p, mc, 200, 1 << 50)?;
    let r = fate(RectSpec::new(l1, l2), &cfg).domain_err()?;
    let summary = format!(
        "{rect} beta={} zero first {}/{} one first {}/{}{}",
        r.beta,
        r.zero_first,
        r.runs,
        r.one_first,
        r.runs,
        capped_note(r.capped)
    );
    let files = vec![
        ("runs.csv".to_string(), csv_text(&run_rows(&r.samples))),
        ("summary.json".to_string(), serde_json::to_string_pretty(&r).expect("serializable") + "\n"),
    ];
    Ok(Emit { files, summary })
}

fn recurrence_cmd(seed: u64, p: &ModelParams, mc: &McArgs, max_particles: Option<usize>) -> Result<Emit> {
    if mc.cap.is_some() {
        return Err(Failure::Parse(anyhow!("the recurrence cap is fixed by beta; --cap is not accepted")));
    }
    let cfg = sim_config(seed, p, mc, 50, 1)?;
    let r = recurrence(&cfg, None, max_particles.unwrap_or(p.l0 * p.l0)).domain_err()?;
    let summary = format!("beta={} {}/{} starts hit within {} steps", r.beta, r.hits, r.states, r.cap);
    let files = vec![
        ("runs.csv".to_string(), csv_text(&run_rows(&r.samples))),
        ("summary.json".to_string(), serde_json::to_string_pretty(&r).expect("serializable") + "\n"),
    ];
    Ok(Emit { files, summary })
}

fn oracle_scan(p: &ModelParams, dc: &DerivedConstants, window: &str, limits: ScanLimits) -> Result<Emit> {
    let parts: Vec<usize> = window
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("window must be `x0,y0,w,h`, got {window:?}"))
        .parse_err()?;
    let [x0, y0, w, h] = parts[..] else {
        return Err(Failure::Parse(anyhow!("window must be `x0,y0,w,h`, got {window:?}")));
    };
    let r = scan_boundary_of_b(p, dc, RectBox { x0, y0, w, h }, limits).domain_err()?;
    let ratio = |x: Option<Rational64>| x.map(|v| (*v.numer(), *v.denom()));
    let value = json!({
        "gamma_num": dc.gamma.numer(),
        "gamma_den": dc.gamma.denom(),
        "h_min_num": ratio(r.h_min).map(|x| x.0),
        "h_min_den": ratio(r.h_min).map(|x| x.1),
        "passed": r.passed(),
        "minimizers": r.examples.iter().map(|m| json!({
            "before": m.before, "after": m.after,
            "h_before": format_rational(m.h_before), "h_after": format_rational(m.h_after),
            "before_in_p2": m.before_in_p2, "energy_order": m.energy_order, "multiplicity": m.multiplicity,
        })).collect::<Vec<_>>(),
        "counts": {
            "minimizers": r.minimizers,
            "minimizers_not_in_p2": r.minimizers_not_in_p2,
            "minimizers_energy_order_violated": r.minimizers_energy_order_violated,
            "clusters_scanned": r.clusters_scanned,
            "states_scanned": r.states_scanned,
            "exit_pairs": r.exit_pairs,
            "p1_members": r.p1_members,
            "p1_without_continuation": r.p1_without_continuation,
        },
        "elapsed": r.elapsed_ms,
    });
    let summary = format!(
        "H_min={} Gamma={} minimizers={} passed={} ({} ms)",
        r.h_min.map_or("none".to_string(), format_rational),
        format_rational(dc.gamma),
        r.minimizers,
        r.passed(),
        r.elapsed_ms
    );
    Ok(Emit::json("oracle_scan.json", &value, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_lists_keep_rectangles_whole() {
        assert_eq!(split_targets("one, R(4,3),P"), vec!["one", "R(4,3)", "P"]);
        assert_eq!(split_targets("zero"), vec!["zero"]);
    }
}
