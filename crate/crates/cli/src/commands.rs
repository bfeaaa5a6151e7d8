//! Subcommand implementations.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use kspace_core::dynamics::{integrate_in_c, integrate_in_time};
use kspace_core::montecarlo::run_ensemble_with;
use kspace_core::stability::{
    attracting_fixed_point, hysteresis, sweep_plateau, StartContamination,
};
use kspace_core::{Error, FixedPointResult, ScanControl, StepControl, Trajectory};
use serde_json::{json, Map, Value};

use crate::args::{
    Command, CompareArgs, FixedPointArgs, Format, OutputArgs, PlotArgs, ScanArgs, ScenarioArgs,
    SimulateArgs, StartChoice, SweepArgs, TrajectoryArgs,
};
use crate::output::{self, Cell, CsvTable};
use crate::plot::{self, LinePlot, Series};
use crate::scenario::{Scenario, ScenarioDraft};
use crate::CliError;

/// Result of one subcommand: an optional data table, a JSON report and the
/// material for an optional plot.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub table: Option<CsvTable>,
    pub report: Map<String, Value>,
    pub plot: Option<PlotData>,
}

#[derive(Debug, Clone)]
pub enum PlotData {
    Trajectory {
        points: Vec<(f64, f64)>,
        asymptote: f64,
        normalized: bool,
    },
    Heatmap {
        r_prag: Vec<f64>,
        r_comp: Vec<f64>,
        values: Vec<f64>,
    },
    Envelope {
        c: Vec<f64>,
        k_min: Vec<f64>,
        k_max: Vec<f64>,
        k_mean: Vec<f64>,
        normalized: bool,
    },
    Compare {
        c: Vec<f64>,
        k_ode: Vec<f64>,
        k_min: Vec<f64>,
        k_max: Vec<f64>,
        normalized: bool,
    },
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Trajectory(a) => {
            let s = resolve_scenario(&a.scenario)?;
            emit(&trajectory(&s, &a)?, &a.output, &a.plot, false)
        }
        Command::FixedPoint(a) => {
            let s = resolve_scenario(&a.scenario)?;
            let report = Value::Object(fixed_point(&s, &a)?);
            let text = output::to_json_text(&report);
            match &a.out {
                Some(path) => write_file(path, text.as_bytes()),
                None => print_stdout(&text),
            }
        }
        Command::Sweep(a) => {
            let s = resolve_scenario(&a.scenario)?;
            emit(&sweep(&s, &a)?, &a.output, &a.plot, false)
        }
        Command::Simulate(a) => {
            let s = resolve_scenario(&a.scenario)?;
            emit(&simulate(&s, &a)?, &a.output, &a.plot, false)
        }
        Command::Compare(a) => {
            let s = resolve_scenario(&a.scenario)?;
            emit(&compare(&s, &a)?, &a.output, &a.plot, true)
        }
    }
}

/// Preset, then scenario file, then individual flags.
pub fn resolve_scenario(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let mut draft = args
        .preset
        .map(ScenarioDraft::from_preset)
        .unwrap_or_default();
    if let Some(path) = &args.scenario {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        draft
            .apply_text(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    }
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if args.$field.is_some() { draft.$field = args.$field; })*
        };
    }
    apply!(
        p_err,
        b_min,
        b_max,
        r_prag,
        r_comp,
        c0,
        cp0,
        c_end,
        steps,
        epochs,
        seed,
        checkpoint_every
    );
    if let Some(b) = args.b {
        draft.b_min = Some(b);
        draft.b_max = Some(b);
    }
    Ok(draft.resolve()?)
}

fn scan_control(args: &ScanArgs) -> ScanControl {
    ScanControl {
        scan_step: args.scan_step,
        tol: args.tol,
        ..ScanControl::default()
    }
}

fn fixed_point_json(r: &FixedPointResult) -> Value {
    json!({
        "k_star": r.k_star,
        "bracket": [r.bracket.0, r.bracket.1],
        "f_residual": r.f_residual,
        "iterations": r.iterations,
        "kind": format!("{:?}", r.kind).to_lowercase(),
    })
}

pub fn trajectory(s: &Scenario, a: &TrajectoryArgs) -> Result<Artifact, CliError> {
    let params = s.model_params()?;
    let initial = s.initial_state();
    let ctl = StepControl {
        dc: a.dc,
        ..StepControl::default()
    };
    let mut diagnostics = Map::new();
    let traj: Trajectory = match integrate_in_c(&params, &initial, s.c_end, &ctl) {
        Ok(t) => {
            diagnostics.insert("domain".into(), json!("c"));
            diagnostics.insert("dc".into(), json!(a.dc));
            t
        }
        Err(e @ Error::SingularDenominator { .. }) if a.time_domain => {
            let t_end = a.t_end.unwrap_or(s.steps as f64);
            let t = integrate_in_time(&params, &initial, t_end, a.dt, &ctl)?;
            diagnostics.insert("domain".into(), json!("time"));
            diagnostics.insert("dt".into(), json!(a.dt));
            diagnostics.insert("t_end".into(), json!(t_end));
            diagnostics.insert("fallback_reason".into(), json!(e.to_string()));
            t
        }
        Err(e) => return Err(e.into()),
    };
    diagnostics.insert("steps".into(), json!(traj.steps()));
    diagnostics.insert("clamp_count".into(), json!(traj.clamp_count()));
    diagnostics.insert("samples".into(), json!(traj.samples().len()));
    let asymptote = attracting_fixed_point(&params, initial.k(), &ScanControl::default())?;

    let time_domain = traj.first().t.is_some();
    let norm = if a.output.normalize { s.c0 as f64 } else { 1.0 };
    let mut table = CsvTable::new(if time_domain {
        &["c", "c_p", "k", "t"]
    } else {
        &["c", "c_p", "k"]
    });
    for sm in traj.samples() {
        let mut row = vec![
            Cell::Real(sm.c / norm),
            Cell::Real(sm.c_p / norm),
            Cell::Real(sm.k),
        ];
        if let Some(t) = sm.t {
            row.push(Cell::Real(t));
        }
        table.push(&row);
    }
    let last = traj.last();
    let mut report = output::document("kspace.trajectory", "trajectory", s, a.output.normalize);
    report.insert("asymptote".into(), fixed_point_json(&asymptote));
    report.insert(
        "final".into(),
        json!({ "c": last.c, "c_p": last.c_p, "k": last.k }),
    );
    report.insert("diagnostics".into(), Value::Object(diagnostics));
    Ok(Artifact {
        table: Some(table),
        report,
        plot: Some(PlotData::Trajectory {
            points: traj
                .samples()
                .iter()
                .map(|sm| (sm.c / norm, sm.k))
                .collect(),
            asymptote: asymptote.k_star,
            normalized: a.output.normalize,
        }),
    })
}

pub fn fixed_point(s: &Scenario, a: &FixedPointArgs) -> Result<Map<String, Value>, CliError> {
    let params = s.model_params()?;
    let h = hysteresis(&params, &scan_control(&a.scan))?;
    let mut report = output::document("kspace.fixed_point", "fixed-point", s, false);
    report.insert("k_up".into(), json!(h.k_up));
    report.insert("k_down".into(), json!(h.k_down));
    report.insert("bistable".into(), json!(h.bistable));
    report.insert(
        "residuals".into(),
        json!({ "up": h.up.f_residual, "down": h.down.f_residual }),
    );
    report.insert(
        "brackets".into(),
        json!({ "up": [h.up.bracket.0, h.up.bracket.1], "down": [h.down.bracket.0, h.down.bracket.1] }),
    );
    report.insert("up".into(), fixed_point_json(&h.up));
    report.insert("down".into(), fixed_point_json(&h.down));
    report.insert(
        "scan".into(),
        json!({ "scan_step": a.scan.scan_step, "tol": a.scan.tol }),
    );
    Ok(report)
}

/// Parses `start:stop:count` into `count` evenly spaced values.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad =
        |why: &str| CliError::Usage(format!("axis {spec:?}: {why}, expected start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(bad("wrong number of fields"));
    };
    let start: f64 = start.trim().parse().map_err(|_| bad("bad start"))?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad("bad stop"))?;
    let count: usize = count.trim().parse().map_err(|_| bad("bad count"))?;
    if count == 0 {
        return Err(bad("count must be at least 1"));
    }
    if count == 1 {
        if start != stop {
            return Err(bad("a single point needs start = stop"));
        }
        return Ok(vec![start]);
    }
    let span = stop - start;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                start + span * i as f64 / (count - 1) as f64
            }
        })
        .collect())
}

pub fn sweep(s: &Scenario, a: &SweepArgs) -> Result<Artifact, CliError> {
    let params = s.model_params()?;
    let r_prag = parse_axis(&a.r_prag_axis)?;
    let r_comp = parse_axis(&a.r_comp_axis)?;
    let start = match a.k0 {
        StartChoice::Clean => StartContamination::Clean,
        StartChoice::Contaminated => StartContamination::contaminated(),
    };
    let grid = sweep_plateau(&params, &r_prag, &r_comp, start, &scan_control(&a.scan))?;
    let mut table = CsvTable::new(&["r_prag", "r_comp", "k_final"]);
    for (rp, rc, k) in grid.cells() {
        table.push(&[Cell::Real(rp), Cell::Real(rc), Cell::Real(k)]);
    }
    let mut report = output::document("kspace.sweep", "sweep", s, a.output.normalize);
    report.insert(
        "start".into(),
        json!({ "choice": format!("{:?}", a.k0).to_lowercase(), "k0": start.k0() }),
    );
    report.insert("r_prag_axis".into(), json!(r_prag));
    report.insert("r_comp_axis".into(), json!(r_comp));
    report.insert(
        "scan".into(),
        json!({ "scan_step": a.scan.scan_step, "tol": a.scan.tol }),
    );
    Ok(Artifact {
        table: Some(table),
        report,
        plot: Some(PlotData::Heatmap {
            r_prag,
            r_comp,
            values: grid.values,
        }),
    })
}

pub fn simulate(s: &Scenario, a: &SimulateArgs) -> Result<Artifact, CliError> {
    if a.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let env = run_ensemble_with(&s.mc_config(), a.threads)?;
    let norm = if a.output.normalize { s.c0 as f64 } else { 1.0 };
    let mut table = CsvTable::new(&["step", "c_mean", "k_min", "k_max", "k_mean"]);
    for cp in &env.checkpoints {
        table.push(&[
            Cell::Int(cp.step),
            Cell::Real(cp.c_mean / norm),
            Cell::Real(cp.k_min),
            Cell::Real(cp.k_max),
            Cell::Real(cp.k_mean),
        ]);
    }
    let mut report = output::document("kspace.simulate", "simulate", s, a.output.normalize);
    report.insert("seed".into(), json!(s.seed));
    report.insert("epoch_seeds".into(), json!(env.epoch_seeds));
    report.insert("checkpoints".into(), json!(env.checkpoints.len()));
    let col = |f: fn(&kspace_core::montecarlo::EnvelopeCheckpoint) -> f64| -> Vec<f64> {
        env.checkpoints.iter().map(f).collect()
    };
    Ok(Artifact {
        table: Some(table),
        report,
        plot: Some(PlotData::Envelope {
            c: env.checkpoints.iter().map(|cp| cp.c_mean / norm).collect(),
            k_min: col(|cp| cp.k_min),
            k_max: col(|cp| cp.k_max),
            k_mean: col(|cp| cp.k_mean),
            normalized: a.output.normalize,
        }),
    })
}

/// Summary of a mean-field vs ensemble comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub checkpoints_total: usize,
    pub checkpoints_compared: usize,
    pub containment_fraction: f64,
    /// Largest distance of the mean-field `k` outside `[k_min, k_max]`.
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn compare(s: &Scenario, a: &CompareArgs) -> Result<Artifact, CliError> {
    if a.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    if !(a.slack >= 0.0 && (0.0..=1.0).contains(&a.min_fraction) && a.c_limit > 0.0) {
        return Err(CliError::Validation(
            "need slack >= 0, min_fraction in [0, 1] and c_limit > 0".into(),
        ));
    }
    let params = s.model_params()?;
    let initial = s.initial_state();
    let env = run_ensemble_with(&s.mc_config(), a.threads)?;
    let c0 = s.c0 as f64;
    let limit = a.c_limit * c0;
    let candidates: Vec<_> = env
        .checkpoints
        .iter()
        .filter(|cp| cp.c_mean <= limit && cp.c_mean >= c0)
        .collect();
    let c_hi = candidates.iter().map(|cp| cp.c_mean).fold(c0, f64::max);
    let ode = if c_hi > c0 {
        Some(integrate_in_c(
            &params,
            &initial,
            c_hi,
            &StepControl::default(),
        )?)
    } else {
        None
    };
    let ode_k = |c: f64| match &ode {
        Some(t) => t.k_at(c),
        None => (c == c0).then(|| initial.k()),
    };

    let norm = if a.output.normalize { c0 } else { 1.0 };
    let mut table = CsvTable::new(&["step", "c_mean", "k_ode", "k_min", "k_max"]);
    let (mut inside, mut compared, mut max_dev) = (0usize, 0usize, 0.0f64);
    let mut series = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for cp in candidates {
        let Some(k) = ode_k(cp.c_mean) else { continue };
        compared += 1;
        let dev = (cp.k_min - k).max(k - cp.k_max).max(0.0);
        max_dev = max_dev.max(dev);
        if dev <= a.slack {
            inside += 1;
        }
        table.push(&[
            Cell::Int(cp.step),
            Cell::Real(cp.c_mean / norm),
            Cell::Real(k),
            Cell::Real(cp.k_min),
            Cell::Real(cp.k_max),
        ]);
        series.0.push(cp.c_mean / norm);
        series.1.push(k);
        series.2.push(cp.k_min);
        series.3.push(cp.k_max);
    }
    let fraction = if compared == 0 {
        0.0
    } else {
        inside as f64 / compared as f64
    };
    let summary = Comparison {
        checkpoints_total: env.checkpoints.len(),
        checkpoints_compared: compared,
        containment_fraction: fraction,
        max_deviation: max_dev,
        pass: compared > 0 && fraction >= a.min_fraction,
    };
    let mut report = output::document("kspace.compare", "compare", s, a.output.normalize);
    report.insert("checkpoints_total".into(), json!(summary.checkpoints_total));
    report.insert(
        "checkpoints_compared".into(),
        json!(summary.checkpoints_compared),
    );
    report.insert(
        "containment_fraction".into(),
        json!(summary.containment_fraction),
    );
    report.insert("max_deviation".into(), json!(summary.max_deviation));
    report.insert("pass".into(), json!(summary.pass));
    report.insert(
        "criteria".into(),
        json!({ "slack": a.slack, "min_fraction": a.min_fraction, "c_limit": a.c_limit }),
    );
    report.insert("seed".into(), json!(s.seed));
    report.insert("epoch_seeds".into(), json!(env.epoch_seeds));
    Ok(Artifact {
        table: Some(table),
        report,
        plot: Some(PlotData::Compare {
            c: series.0,
            k_ode: series.1,
            k_min: series.2,
            k_max: series.3,
            normalized: a.output.normalize,
        }),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    output::write_atomic(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

/// Writes an artifact. CSV output goes to `--out` with the report in a JSON
/// sidecar; JSON output is one document holding the report and a `rows`
/// array. Without `--out` the data goes to stdout, unless `report_to_stdout`
/// asks for the report there instead.
pub fn emit(
    art: &Artifact,
    out: &OutputArgs,
    plot_args: &PlotArgs,
    report_to_stdout: bool,
) -> Result<(), CliError> {
    let report_text = output::to_json_text(&Value::Object(art.report.clone()));
    let data_text = match (out.format, &art.table) {
        (Format::Csv, Some(t)) => Some(t.as_str().to_string()),
        (Format::Json, Some(t)) => {
            let mut doc = art.report.clone();
            doc.insert("rows".into(), output::rows_as_json(t));
            Some(output::to_json_text(&Value::Object(doc)))
        }
        (_, None) => None,
    };
    match (&out.out, data_text) {
        (Some(path), Some(data)) => {
            write_file(path, data.as_bytes())?;
            if out.format == Format::Csv {
                write_file(&output::sidecar_path(path), report_text.as_bytes())?;
            }
            if report_to_stdout {
                print_stdout(&report_text)?;
            }
        }
        (Some(path), None) => write_file(path, report_text.as_bytes())?,
        (None, data) => match data {
            Some(d) if !report_to_stdout => print_stdout(&d)?,
            _ => print_stdout(&report_text)?,
        },
    }
    if let (Some(path), Some(data)) = (&plot_args.emit_plot, &art.plot) {
        emit_plot(path, data, art.table.as_ref())?;
    }
    Ok(())
}

fn emit_plot(path: &Path, data: &PlotData, table: Option<&CsvTable>) -> Result<(), CliError> {
    if plot::wants_svg(path) {
        let svg = match data {
            PlotData::Heatmap {
                r_prag,
                r_comp,
                values,
            } => plot::heatmap_svg("final contamination", r_prag, r_comp, values),
            _ => plot::line_svg(&line_plot(data)),
        };
        return write_file(path, svg.as_bytes());
    }
    let csv = path.with_extension("csv");
    if let Some(t) = table {
        write_file(&csv, t.as_str().as_bytes())?;
    }
    let script = match *data {
        PlotData::Trajectory {
            asymptote,
            normalized,
            ..
        } => plot::trajectory_script(&csv, path, asymptote, normalized),
        PlotData::Heatmap { .. } => plot::sweep_script(&csv, path),
        PlotData::Envelope { normalized, .. } => plot::envelope_script(&csv, path, normalized),
        PlotData::Compare { normalized, .. } => plot::compare_script(&csv, path, normalized),
    };
    write_file(path, script.as_bytes())
}

fn line_plot(data: &PlotData) -> LinePlot {
    let series = |label: &str, color: &'static str, xs: &[f64], ys: &[f64], dashed: bool| Series {
        label: label.into(),
        color,
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        dashed,
    };
    let x_label = |normalized: bool| if normalized { "c / c0" } else { "c" }.to_string();
    match data {
        PlotData::Trajectory {
            points,
            asymptote,
            normalized,
        } => {
            let (x0, x1) = (
                points.first().map_or(0.0, |p| p.0),
                points.last().map_or(1.0, |p| p.0),
            );
            LinePlot {
                title: "contamination trajectory".into(),
                x_label: x_label(*normalized),
                y_label: "k".into(),
                series: vec![
                    Series {
                        label: "mean field".into(),
                        color: "black",
                        points: points.clone(),
                        dashed: false,
                    },
                    Series {
                        label: format!("asymptote {}", output::format_sig(*asymptote)),
                        color: "blue",
                        points: vec![(x0, *asymptote), (x1, *asymptote)],
                        dashed: true,
                    },
                ],
            }
        }
        PlotData::Envelope {
            c,
            k_min,
            k_max,
            k_mean,
            normalized,
        } => LinePlot {
            title: "Monte Carlo envelope".into(),
            x_label: x_label(*normalized),
            y_label: "k".into(),
            series: vec![
                series("max", "red", c, k_max, false),
                series("min", "green", c, k_min, false),
                series("mean", "gray", c, k_mean, true),
            ],
        },
        PlotData::Compare {
            c,
            k_ode,
            k_min,
            k_max,
            normalized,
        } => LinePlot {
            title: "mean field vs Monte Carlo".into(),
            x_label: x_label(*normalized),
            y_label: "k".into(),
            series: vec![
                series("max", "red", c, k_max, false),
                series("min", "green", c, k_min, false),
                series("mean field", "black", c, k_ode, false),
            ],
        },
        PlotData::Heatmap { .. } => unreachable!("heatmaps are not line plots"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Preset;

    fn preset(p: Preset) -> ScenarioArgs {
        ScenarioArgs {
            preset: Some(p),
            ..ScenarioArgs::default()
        }
    }

    #[test]
    fn axes() {
        assert_eq!(
            parse_axis("0:4:9").unwrap(),
            vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
        );
        assert_eq!(parse_axis("0:0:1").unwrap(), vec![0.0]);
        assert_eq!(parse_axis("1:0:3").unwrap(), vec![1.0, 0.5, 0.0]);
        for bad in ["0:4", "0:4:0", "a:1:2", "0:1:1", "0:1:2:3"] {
            assert!(matches!(parse_axis(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn flags_override_preset() {
        let mut args = preset(Preset::B);
        args.r_prag = Some(0.5);
        args.b = Some(9);
        let s = resolve_scenario(&args).unwrap();
        assert_eq!(
            (s.r_prag, s.r_comp, s.b_min, s.b_max, s.cp0),
            (0.5, 2.0, 9, 9, 200)
        );
    }

    #[test]
    fn scenario_file_between_preset_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        fs::write(&path, "r_comp = 4\nseed = 9\n").unwrap();
        let mut args = preset(Preset::B);
        args.scenario = Some(path);
        args.seed = Some(11);
        let s = resolve_scenario(&args).unwrap();
        assert_eq!((s.r_comp, s.seed, s.p_err), (4.0, 11, 0.1));
    }

    #[test]
    fn missing_scenario_file_is_io() {
        let mut args = preset(Preset::B);
        args.scenario = Some("/nonexistent/kspace.txt".into());
        assert_eq!(resolve_scenario(&args).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn odd_base_range_has_no_mean_field() {
        let mut s = Preset::B.scenario();
        s.b_min = 2;
        s.b_max = 7;
        let args = FixedPointArgs {
            scenario: ScenarioArgs::default(),
            scan: ScanArgs {
                scan_step: 1e-3,
                tol: 1e-9,
            },
            out: None,
        };
        assert_eq!(fixed_point(&s, &args).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn compare_zero_contamination() {
        let mut s = Preset::B.scenario();
        s.p_err = 0.0;
        s.cp0 = 0;
        s.steps = 500;
        s.epochs = 3;
        let args = CompareArgs {
            scenario: ScenarioArgs::default(),
            output: OutputArgs::default(),
            plot: PlotArgs::default(),
            threads: Some(1),
            slack: 0.02,
            min_fraction: 0.95,
            c_limit: 5.0,
        };
        let art = compare(&s, &args).unwrap();
        assert_eq!(art.report["max_deviation"], json!(0.0));
        assert_eq!(art.report["pass"], json!(true));
    }
}
