use std::path::Path;

use thiserror::Error;

use unbalance_core::bounds::{band_report, BoundsCell, EnvelopeBox, VufBand};
use unbalance_core::feeder::FeederFiles;
use unbalance_core::metrics::symmetrical_components;
use unbalance_core::powerflow::SolveOptions;
use unbalance_core::scenario::{
    compare_before_after, read_json, run_scenario, run_study, Comparison, PvSpec, ScenarioRun, ScenarioSpec,
    StudyManifest, StudyResult,
};
use unbalance_core::{
    load_feeder, BoundsError, FeederError, IndexSet, Metric, MetricError, PhasorTriple, ScenarioError, SequenceSet,
};

use crate::output::{csv_string, fixed, json_string, opt_fixed, Format, Table};
use crate::{BoundsArgs, MetricsArgs, OutputArgs, RunArgs, StudyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}")]
    EmptyBand(String),
    #[error("{0}")]
    Solve(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Metric(_) => 3,
            CliError::EmptyBand(_) => 4,
            CliError::Solve(_) => 5,
        }
    }
}

impl From<FeederError> for CliError {
    fn from(e: FeederError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::EmptyBand { .. } => CliError::EmptyBand(e.to_string()),
            BoundsError::InvalidQuery(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Solve { .. } => CliError::Solve(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), CliError> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn provenance(feeder: Option<&Path>) -> Result<String, CliError> {
    let Some(dir) = feeder else {
        return Ok("provenance: no feeder files used\n".into());
    };
    let files = FeederFiles::hash_dir(dir)?;
    let parts: Vec<String> = files.digests.iter().map(|(n, h)| format!("{n} sha256:{h}")).collect();
    Ok(format!("provenance: {}; {}\n", dir.display(), parts.join("; ")))
}

/// Machine-readable result of `metrics`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsOutput {
    pub input: PhasorTriple,
    pub sequence: SequenceSet,
    pub indices: IndexSet,
}

pub fn metrics(args: &MetricsArgs, out: &OutputArgs) -> Result<(), CliError> {
    let input = match (&args.mags, &args.file) {
        (Some(m), None) => {
            let a = &args.angles;
            if m.len() != 3 || a.len() != 3 {
                return Err(CliError::Input(format!(
                    "expected three magnitudes and three angles, got {} and {}",
                    m.len(),
                    a.len()
                )));
            }
            PhasorTriple::from_polar([m[0], m[1], m[2]], [a[0], a[1], a[2]])
                .map_err(|e| CliError::Input(e.to_string()))?
        }
        (None, Some(path)) => read_json::<PhasorTriple>(path)?,
        _ => return Err(CliError::Input("give either --mags or --file".into())),
    };
    let indices = IndexSet::compute(&input)?;
    let report = MetricsOutput {
        input,
        sequence: symmetrical_components(&input),
        indices,
    };
    let p = out.precision as usize;
    let text = match out.format {
        Format::Json => json_string(&report),
        Format::Csv => {
            let (header, rows) = metric_rows(&report.indices, p);
            csv_string(&header, &rows)
        }
        Format::Table => {
            let (header, rows) = metric_rows(&report.indices, p);
            let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            t.rows = rows;
            format!("{}{}", t.render(), provenance(None)?)
        }
    };
    emit(out, &text)
}

fn metric_rows(set: &IndexSet, p: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["index", "value_percent", "quantity", "quantity_value"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for m in Metric::ALL {
        let d = set.get(m);
        for (name, v) in &d.intermediates {
            rows.push(vec![m.name().into(), fixed(d.value, p), name.clone(), format!("{v:.prec$}", prec = p.max(6))]);
        }
    }
    (header, rows)
}

pub fn bounds(args: &BoundsArgs, out: &OutputArgs) -> Result<(), CliError> {
    let bands: Vec<VufBand> = if args.band.is_empty() {
        vec![VufBand::new(1.0, 2.0)?]
    } else {
        args.band
            .chunks(2)
            .map(|c| VufBand::new(c[0], c[1]))
            .collect::<Result<_, _>>()?
    };
    let envelope = EnvelopeBox::new(args.mag_lo, args.mag_hi, args.angle_dev)?;
    if args.resolution < 2 {
        return Err(CliError::Input(format!("resolution must be at least 2, got {}", args.resolution)));
    }
    let cells = band_report(&bands, envelope, args.resolution, args.refine)?;
    let p = out.precision as usize;
    let text = match out.format {
        Format::Json => json_string(&cells),
        Format::Csv => {
            let (header, rows) = bounds_rows(&cells, p);
            csv_string(&header, &rows)
        }
        Format::Table => {
            let mut text = String::new();
            for band in &bands {
                let mut t = Table::new(&["index", "lower", "upper", "samples"])
                    .titled(format!("VUF band {}% to {}%", band.lo, band.hi));
                for c in cells.iter().filter(|c| c.band == *band) {
                    let name = format!("{}/VUF", c.index.name());
                    t.push(match &c.result {
                        Some(r) => vec![name, fixed(r.lower, p), fixed(r.upper, p), r.samples_in_band.to_string()],
                        None => vec![name, "-".into(), "-".into(), "0".into()],
                    });
                }
                text.push_str(&t.render());
                text.push('\n');
            }
            text.push_str(&provenance(None)?);
            text
        }
    };
    emit(out, &text)?;
    if let Some(err) = cells.iter().find_map(|c| c.error.clone()) {
        return Err(CliError::EmptyBand(err));
    }
    Ok(())
}

fn bounds_rows(cells: &[BoundsCell], p: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["band_lo", "band_hi", "index", "lower", "upper", "samples_in_band", "error"]
        .map(String::from)
        .to_vec();
    let rows = cells
        .iter()
        .map(|c| {
            let (lo, hi, n) = match &c.result {
                Some(r) => (fixed(r.lower, p), fixed(r.upper, p), r.samples_in_band.to_string()),
                None => (String::new(), String::new(), "0".into()),
            };
            vec![
                c.band.lo.to_string(),
                c.band.hi.to_string(),
                c.index.name().into(),
                lo,
                hi,
                n,
                c.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    (header, rows)
}

const RUN_HEADER: [&str; 18] = [
    "scenario", "leg", "record", "bus", "distance_m", "va_pu", "vb_pu", "vc_pu", "vuf", "lvur", "cigre", "pvur1",
    "pvur2", "err_lvur", "err_cigre", "err_pvur1", "err_pvur2", "diagnostic",
];

/// Per-bus rows followed by max/min/mean rows, in one rectangular layout.
fn run_rows(run: &ScenarioRun, leg: &str, p: usize) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for b in &run.report.buses {
        let mut row = vec![
            run.scenario.clone(),
            leg.into(),
            "bus".into(),
            b.bus.to_string(),
            fixed(b.distance_m, p),
        ];
        row.extend(b.magnitudes_pu.iter().map(|m| fixed(*m, p.max(4))));
        row.extend(Metric::ALL.iter().map(|m| opt_fixed(b.indices.as_ref().map(|i| i.value(*m)), p)));
        row.extend(Metric::RELATIVE.iter().map(|m| opt_fixed(b.errors.as_ref().and_then(|e| e.get(*m)), p)));
        row.push(b.diagnostic.clone().unwrap_or_default());
        rows.push(row);
    }
    type Pick = fn(&unbalance_core::scenario::Stat) -> f64;
    let picks: [(&str, Pick); 3] = [("max", |s| s.max), ("min", |s| s.min), ("mean", |s| s.mean)];
    for (name, pick) in picks {
        let mut row = vec![
            run.scenario.clone(),
            leg.into(),
            name.into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        row.extend(Metric::ALL.iter().map(|m| fixed(pick(&run.summary.get(*m).value), p)));
        row.extend(Metric::RELATIVE.iter().map(|m| opt_fixed(run.summary.get(*m).error.as_ref().map(pick), p)));
        row.push(String::new());
        rows.push(row);
    }
    rows
}

fn delta_row(c: &Comparison, p: usize) -> Vec<String> {
    let mut row = vec![c.scenario.clone(), String::new(), "delta_mean".into()];
    row.extend(std::iter::repeat_n(String::new(), 5));
    row.extend(Metric::ALL.iter().map(|m| fixed(c.delta(*m).mean_value, p)));
    row.extend(Metric::RELATIVE.iter().map(|m| opt_fixed(c.delta(*m).mean_error, p)));
    row.push(String::new());
    row
}

fn leg_name(run: &ScenarioRun) -> String {
    match &run.pv {
        Some(_) => "with_pv".into(),
        None => "without_pv".into(),
    }
}

fn run_tables(run: &ScenarioRun, p: usize) -> String {
    let title = format!(
        "{} ({}): {} iterations, |V| {} to {} p.u., source {} kW",
        run.scenario,
        run.pv.as_deref().unwrap_or("no PV"),
        run.solve.iterations,
        fixed(run.solve.min_magnitude_pu, 4),
        fixed(run.solve.max_magnitude_pu, 4),
        fixed(run.solve.source_kw, 2),
    );
    let mut buses = Table::new(&[
        "bus", "dist_m", "VUF", "LVUR", "CIGRE", "PVUR1", "PVUR2", "|LVUR-VUF|", "|PVUR1-VUF|", "|PVUR2-VUF|",
    ])
    .titled(title);
    for b in &run.report.buses {
        let mut row = vec![b.bus.to_string(), fixed(b.distance_m, 1)];
        row.extend(Metric::ALL.iter().map(|m| opt_fixed(b.indices.as_ref().map(|i| i.value(*m)), p)));
        for m in [Metric::Lvur, Metric::Pvur1, Metric::Pvur2] {
            row.push(opt_fixed(b.errors.as_ref().and_then(|e| e.get(m)), p));
        }
        buses.push(row);
    }
    let mut text = buses.render();
    for b in run.report.buses.iter().filter(|b| b.diagnostic.is_some()) {
        text.push_str(&format!("bus {}: {}\n", b.bus, b.diagnostic.as_deref().unwrap_or("")));
    }
    if run.report.degenerate_selection {
        text.push_str("warning: main line too short for nine distinct representative buses\n");
    }
    let mut summary = Table::new(&["index", "max", "min", "mean", "err_max", "err_min", "err_mean"]);
    for s in &run.summary.metrics {
        let e = s.error.as_ref();
        summary.push(vec![
            s.metric.name().into(),
            fixed(s.value.max, p),
            fixed(s.value.min, p),
            fixed(s.value.mean, p),
            opt_fixed(e.map(|e| e.max), p),
            opt_fixed(e.map(|e| e.min), p),
            opt_fixed(e.map(|e| e.mean), p),
        ]);
    }
    text.push('\n');
    text.push_str(&summary.render());
    text
}

fn delta_table(c: &Comparison, p: usize) -> String {
    let mut t = Table::new(&["index", "delta_mean_value", "delta_mean_error"])
        .titled(format!("{}: change after {} (negative = lower)", c.scenario, c.pv));
    for d in &c.deltas {
        t.push(vec![d.metric.name().into(), fixed(d.mean_value, p), opt_fixed(d.mean_error, p)]);
    }
    t.render()
}

fn verbose_trajectory(run: &ScenarioRun) {
    eprintln!(
        "solve {} [{}]: {} iterations, max residual {:.3e} kVA",
        run.scenario,
        leg_name(run),
        run.solve.iterations,
        run.solve.max_residual_kva
    );
    for (i, d) in run.solve.trajectory.iter().enumerate() {
        eprintln!("  iteration {:>3}: max |dV| = {d:.3e} p.u.", i + 1);
    }
}

pub fn run(args: &RunArgs, out: &OutputArgs) -> Result<(), CliError> {
    let model = load_feeder(&args.feeder)?;
    let spec: ScenarioSpec = read_json(&args.scenario)?;
    let pv: Option<PvSpec> = args.pv.as_deref().map(read_json).transpose()?;
    let opts = SolveOptions::default();
    let p = out.precision as usize;

    let text = if args.compare_pv {
        let pv = pv.as_ref().expect("clap enforces --pv with --compare-pv");
        let c = compare_before_after(&model, &spec, pv, args.buses, &opts)?;
        if out.verbose {
            verbose_trajectory(&c.before);
            verbose_trajectory(&c.after);
        }
        match out.format {
            Format::Json => json_string(&c),
            Format::Csv => {
                let mut rows = run_rows(&c.before, "without_pv", p);
                rows.extend(run_rows(&c.after, "with_pv", p));
                rows.push(delta_row(&c, p));
                csv_string(&RUN_HEADER.map(String::from), &rows)
            }
            Format::Table => format!(
                "{}\n{}\n{}{}",
                run_tables(&c.before, p),
                run_tables(&c.after, p),
                delta_table(&c, p),
                provenance(Some(&args.feeder))?
            ),
        }
    } else {
        let r = run_scenario(&model, &spec, pv.as_ref(), args.buses, &opts)?;
        if out.verbose {
            verbose_trajectory(&r);
        }
        match out.format {
            Format::Json => json_string(&r),
            Format::Csv => csv_string(&RUN_HEADER.map(String::from), &run_rows(&r, &leg_name(&r), p)),
            Format::Table => format!("{}{}", run_tables(&r, p), provenance(Some(&args.feeder))?),
        }
    };
    emit(out, &text)
}

fn study_tables(result: &StudyResult, p: usize) -> String {
    let mut vuf = Table::new(&["scenario", "leg", "VUF max", "VUF min", "VUF mean"]).titled("VUF statistics");
    let mut errors = Table::new(&["scenario", "leg", "index", "err max", "err min", "err mean"])
        .titled("Absolute error against VUF");
    let mut deltas = Table::new(&["scenario", "VUF", "|LVUR-VUF|", "|PVUR1-VUF|", "|PVUR2-VUF|"])
        .titled("Mean change after PV (negative = lower)");
    for c in &result.comparisons {
        for (leg, run) in [("without PV", &c.before), ("with PV", &c.after)] {
            let s = run.summary.get(Metric::Vuf).value;
            vuf.push(vec![c.scenario.clone(), leg.into(), fixed(s.max, p), fixed(s.min, p), fixed(s.mean, p)]);
            for m in [Metric::Lvur, Metric::Pvur1, Metric::Pvur2] {
                let e = run.summary.get(m).error.expect("relative index has errors");
                errors.push(vec![
                    c.scenario.clone(),
                    leg.into(),
                    m.name().into(),
                    fixed(e.max, p),
                    fixed(e.min, p),
                    fixed(e.mean, p),
                ]);
            }
        }
        deltas.push(vec![
            c.scenario.clone(),
            fixed(c.delta(Metric::Vuf).mean_value, p),
            opt_fixed(c.delta(Metric::Lvur).mean_error, p),
            opt_fixed(c.delta(Metric::Pvur1).mean_error, p),
            opt_fixed(c.delta(Metric::Pvur2).mean_error, p),
        ]);
    }
    format!("{}\n{}\n{}", vuf.render(), errors.render(), deltas.render())
}

pub fn study(args: &StudyArgs, out: &OutputArgs) -> Result<(), CliError> {
    let (feeder_dir, entries) = StudyManifest::load(&args.manifest)?;
    let model = load_feeder(&feeder_dir)?;
    let result = run_study(&model, &entries, args.buses, &SolveOptions::default())?;
    if out.verbose {
        for c in &result.comparisons {
            verbose_trajectory(&c.before);
            verbose_trajectory(&c.after);
        }
    }
    let p = out.precision as usize;
    let text = match out.format {
        Format::Json => json_string(&result),
        Format::Csv => {
            let mut rows = Vec::new();
            for c in &result.comparisons {
                rows.extend(run_rows(&c.before, "without_pv", p));
                rows.extend(run_rows(&c.after, "with_pv", p));
                rows.push(delta_row(c, p));
            }
            csv_string(&RUN_HEADER.map(String::from), &rows)
        }
        Format::Table => format!("{}{}", study_tables(&result, p), provenance(Some(&feeder_dir))?),
    };
    emit(out, &text)
}
