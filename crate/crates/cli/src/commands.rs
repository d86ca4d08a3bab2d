use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};

use cumcal::casestudy::{run_case_study, CaseStudyOptions, FittedModel};
use cumcal::inference::{DfRule, EFFECTIVE_SIZE_THRESHOLD};
use cumcal::io::{
    read_dataset_csv, read_report_json, read_study_json, write_report_json, write_study_json,
    AnalysisOptions, AnalysisReport, Config, CsvOptions,
};
use cumcal::plot::{
    render_binned_calibration_plot, render_cumulative_plot, render_study_figure, Overlay,
    PlotStyle,
};
use cumcal::sim::{
    run_null_study, run_power_study, Family, StudyKind, StudyOptions, StudyResult,
    NULL_REPLICATIONS, POWER_REPLICATIONS,
};
use cumcal::{cumulative_process, CalibrationDataset, Execution};

use crate::{
    CaseStudyArgs, Cli, Command, DataArgs, DfRuleArg, FamilyArg, NullArgs, OutputArgs, PlotArgs,
    PowerArgs, SimulateCommand, StudyCommon, TestArgs,
};

/// A problem with the user's flags or files rather than with the tool.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// 2 for bad input, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<cumcal::Error>() {
            return match e {
                cumcal::Error::Write { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Simulate(SimulateCommand::Null(args)) => cmd_simulate_null(&args),
        Command::Simulate(SimulateCommand::Power(args)) => cmd_simulate_power(&args),
        Command::Plot(args) => cmd_plot(&args),
        Command::Casestudy(args) => cmd_casestudy(&args),
    }
}

/// RFC 3339 time, pinned by `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0));
    pinned
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn csv_options(args: &DataArgs) -> CsvOptions {
    CsvOptions {
        prediction_column: args.prediction_column.clone(),
        outcome_column: args.outcome_column.clone(),
        clamp_epsilon: args.clamp,
    }
}

fn style(alpha: f64) -> Result<PlotStyle> {
    let style = PlotStyle {
        significance_level: alpha,
        ..PlotStyle::default()
    };
    style
        .validate()
        .map_err(|_| input_error(format!("--alpha must lie in (0, 1), got {alpha}")))?;
    Ok(style)
}

fn out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "dataset".into())
}

fn df_rule(arg: DfRuleArg) -> DfRule {
    match arg {
        DfRuleArg::GMinus2 => DfRule::GMinus2,
        DfRuleArg::G => DfRule::G,
    }
}

/// Writes BM, BB and grouped plots for one dataset; returns the paths.
fn write_dataset_figures(
    data: &CalibrationDataset,
    report: &AnalysisReport,
    groups: usize,
    style: &PlotStyle,
    dir: &Path,
    name: &str,
) -> Result<Vec<PathBuf>> {
    let process = cumulative_process(data);
    let mut written = Vec::new();
    let bm = dir.join(format!("{name}.bm.svg"));
    write_text(&bm, &render_cumulative_plot(&process, Overlay::Bm(&report.bm), style)?)?;
    written.push(bm);
    let bb = dir.join(format!("{name}.bb.svg"));
    write_text(&bb, &render_cumulative_plot(&process, Overlay::Bb(&report.bb), style)?)?;
    written.push(bb);
    if groups >= 2 {
        match render_binned_calibration_plot(data, groups, style) {
            Ok(svg) => {
                let path = dir.join(format!("{name}.binned.svg"));
                write_text(&path, &svg)?;
                written.push(path);
            }
            Err(e) => eprintln!("warning: grouped calibration plot skipped: {e}"),
        }
    }
    Ok(written)
}

fn print_summary(report: &AnalysisReport) {
    let d = &report.dataset;
    println!(
        "n = {}, events = {}, mean prediction = {:.4}, total variance T = {:.3}",
        d.n, d.events, d.mean_prediction, d.total_variance
    );
    let bm = &report.bm;
    println!(
        "BM test:  S* = {:.4} (C* = {:.5}) at π* = {:.4}, p = {:.4}",
        bm.s_star, bm.c_star, bm.location.prediction, bm.p_value
    );
    let bb = &report.bb;
    println!(
        "BB test:  S_n = {:.4}, p_A = {:.4}; B* = {:.4} at π* = {:.4}, p_B = {:.4}; unified p = {:.4}",
        bb.s_n, bb.p_a, bb.b_star, bb.location_bridge.prediction, bb.p_b, bb.p_unified
    );
    if let Some(hl) = &report.hosmer_lemeshow {
        println!(
            "Hosmer-Lemeshow: X² = {:.4} on {} df ({} groups), p = {:.4}",
            hl.statistic, hl.df, hl.groups, hl.p_value
        );
    }
    if let Some(w) = &report.weak_calibration {
        match w.p_value {
            Some(p) => println!(
                "Weak calibration: intercept = {:.4}, slope = {:.4}, LR = {:.4}, p = {:.4}",
                w.intercept, w.slope, w.lr_statistic, p
            ),
            None => println!("Weak calibration: recalibration fit did not converge"),
        }
    }
    if let Some(mc) = &report.monte_carlo {
        println!(
            "Monte Carlo ({} replications, seed {}): BM p = {:.4}, BB p = {:.4}",
            mc.bm.replications, mc.bm.seed, mc.bm.p_value, mc.bb.p_value
        );
    }
    if d.effective_size_warning {
        eprintln!(
            "warning: total variance {:.2} is below {EFFECTIVE_SIZE_THRESHOLD}; asymptotic p-values may be unreliable, consider --mc",
            d.total_variance
        );
    }
    if d.tie_flag {
        eprintln!("warning: tied predictions; statistics may depend on the input order of tied observations");
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let style = style(args.alpha)?;
    if args.mc == Some(0) {
        return Err(input_error("--mc needs at least 1 replication"));
    }
    let data = read_dataset_csv(&args.input, &csv_options(&args.data))
        .with_context(|| format!("reading {}", args.input.display()))?;
    let opts = AnalysisOptions {
        hl_groups: (args.groups > 0).then_some(args.groups),
        hl_df_rule: df_rule(args.df_rule),
        weak_calibration: true,
        monte_carlo: args.mc.map(|reps| (reps, args.seed)),
        exec: exec(args.sequential),
    };
    let mut report = AnalysisReport::analyze(&data, &opts, timestamp())?;
    report.input = Some(args.input.display().to_string());

    let dir = out_dir(&args.output.out_dir)?;
    let name = stem(&args.input);
    let report_path = dir.join(format!("{name}.report.json"));
    write_report_json(&report, &report_path)?;
    print_summary(&report);
    println!("report: {}", report_path.display());
    if !args.output.no_plots {
        for path in write_dataset_figures(&data, &report, args.groups, &style, &dir, &name)? {
            println!("figure: {}", path.display());
        }
    }
    Ok(())
}

fn load_config(common: &StudyCommon, allowed: &[&str]) -> Result<Config> {
    let Some(path) = &common.config else {
        return Ok(Config::default());
    };
    let config = Config::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(key) = config.keys().find(|k| !allowed.contains(k)) {
        return Err(input_error(format!(
            "{}: unknown key `{key}` (expected one of {})",
            path.display(),
            allowed.join(", ")
        )));
    }
    Ok(config)
}

fn pick<T: Clone>(flag: &Option<T>, from_config: Option<T>, default: T) -> T {
    flag.clone().or(from_config).unwrap_or(default)
}

fn check_grid<T>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        Err(input_error(format!("grid `{name}` is empty")))
    } else {
        Ok(())
    }
}

fn print_study(study: &StudyResult) {
    for cell in &study.cells {
        let s = &cell.scenario;
        let head = match study.kind {
            StudyKind::Null => format!("beta0 = {:>6.3}, n = {:>6}", s.beta0, s.n),
            StudyKind::Power => format!("a = {:>6.3}, b = {:>6.3}, n = {:>6}", s.a, s.b, s.n),
        };
        let cols: Vec<String> = cell
            .tests
            .iter()
            .map(|t| format!("{} {:.3}", t.test.label(), t.proportion))
            .collect();
        println!("{head}  |  {}", cols.join("  "));
        let diag = &cell.diagnostics;
        if diag.lr_not_converged > 0 || diag.hl_failed > 0 {
            println!(
                "    ({} LR fits did not converge, {} HL tests could not be computed)",
                diag.lr_not_converged, diag.hl_failed
            );
        }
    }
}

fn finish_study(study: &StudyResult, output: &OutputArgs, name: &str) -> Result<()> {
    let dir = out_dir(&output.out_dir)?;
    print_study(study);
    let json = dir.join(format!("{name}.json"));
    write_study_json(study, &json)?;
    println!("study: {}", json.display());
    if !output.no_plots {
        let svg = dir.join(format!("{name}.svg"));
        write_text(&svg, &render_study_figure(study, &PlotStyle::default())?)?;
        println!("figure: {}", svg.display());
    }
    Ok(())
}

fn cmd_simulate_null(args: &NullArgs) -> Result<()> {
    let c = &args.common;
    let config = load_config(c, &["beta0", "n", "reps", "seed"])?;
    let beta0 = pick(&args.beta0, config.get_list("beta0")?, vec![-2.0, -1.0, 0.0]);
    let n = pick(&c.n, config.get_list("n")?, vec![50, 100, 250, 1000]);
    let reps = pick(&c.reps, config.get("reps")?, NULL_REPLICATIONS);
    let seed = pick(&c.seed, config.get("seed")?, 1);
    check_grid("beta0", &beta0)?;
    check_grid("n", &n)?;
    let opts = StudyOptions {
        exec: exec(c.sequential),
        ..StudyOptions::default()
    };
    let study = run_null_study(&beta0, &n, reps, seed, &opts)?;
    finish_study(&study, &c.output, "null_study")
}

fn cmd_simulate_power(args: &PowerArgs) -> Result<()> {
    let c = &args.common;
    let config = load_config(c, &["family", "a", "b", "n", "reps", "seed", "groups", "df_rule"])?;
    let family = match (args.family, config.raw("family")) {
        (Some(FamilyArg::LogitLinear), _) => Family::LogitLinear,
        (Some(FamilyArg::LogitPower), _) => Family::LogitPower,
        (None, Some("logit-linear")) | (None, None) => Family::LogitLinear,
        (None, Some("logit-power")) => Family::LogitPower,
        (None, Some(other)) => {
            return Err(input_error(format!(
                "unknown family `{other}` (expected logit-linear or logit-power)"
            )))
        }
    };
    let df = match (args.df_rule, config.raw("df_rule")) {
        (Some(r), _) => df_rule(r),
        (None, Some("g-minus2" | "g-minus-2")) => DfRule::GMinus2,
        (None, Some("g")) | (None, None) => DfRule::G,
        (None, Some(other)) => return Err(input_error(format!("unknown df_rule `{other}`"))),
    };
    let paper_a = vec![-0.25, -0.125, 0.0, 0.125, 0.25];
    let paper_b = vec![0.5, 0.75, 1.0, 4.0 / 3.0, 2.0];
    let a = pick(&args.a, config.get_list("a")?, paper_a);
    let b = pick(&args.b, config.get_list("b")?, paper_b);
    let n = pick(&c.n, config.get_list("n")?, vec![100, 250, 1000]);
    let reps = pick(&c.reps, config.get("reps")?, POWER_REPLICATIONS);
    let seed = pick(&c.seed, config.get("seed")?, 1);
    let groups = pick(&args.groups, config.get("groups")?, 10);
    for (name, len) in [("a", a.len()), ("b", b.len()), ("n", n.len())] {
        if len == 0 {
            return Err(input_error(format!("grid `{name}` is empty")));
        }
    }
    let opts = StudyOptions {
        exec: exec(c.sequential),
        hl_groups: groups,
        hl_df_rule: df,
        ..StudyOptions::default()
    };
    let study = run_power_study(family, &a, &b, &n, reps, seed, &opts)?;
    let name = match family {
        Family::LogitPower => "power_logit_power",
        _ => "power_logit_linear",
    };
    finish_study(&study, &c.output, name)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let style = style(args.alpha)?;
    let dir = out_dir(&args.out_dir)?;
    if let Some(path) = &args.study {
        let study =
            read_study_json(path).with_context(|| format!("reading {}", path.display()))?;
        let svg = dir.join(format!("{}.svg", stem(path)));
        write_text(&svg, &render_study_figure(&study, &style)?)?;
        println!("figure: {}", svg.display());
        return Ok(());
    }
    let (Some(report_path), Some(data_path)) = (&args.report, &args.data) else {
        return Err(input_error("--report needs --data"));
    };
    let report = read_report_json(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let data = read_dataset_csv(data_path, &csv_options(&args.columns))
        .with_context(|| format!("reading {}", data_path.display()))?;
    let stats = cumcal::walk_statistics(&cumulative_process(&data));
    if data.len() != report.dataset.n
        || !close(stats.s_star, report.bm.s_star)
        || !close(stats.b_star, report.bb.b_star)
    {
        return Err(input_error(format!(
            "{} does not match the statistics recorded in {}",
            data_path.display(),
            report_path.display()
        )));
    }
    let name = stem(report_path);
    let name = name.strip_suffix(".report").unwrap_or(&name);
    for path in write_dataset_figures(&data, &report, args.groups, &style, &dir, name)? {
        println!("figure: {}", path.display());
    }
    Ok(())
}

fn case_model(model: &FittedModel, style: &PlotStyle, output: &OutputArgs, dir: &Path) -> Result<()> {
    let data = &model.validation;
    let report = AnalysisReport::analyze(data, &AnalysisOptions::default(), timestamp())?;
    println!(
        "== {} model ({} training observations, {} holdout) ==",
        model.name,
        model.training_size,
        data.len()
    );
    print_summary(&report);
    let name = format!("casestudy_{}", model.name);
    let report_path = dir.join(format!("{name}.report.json"));
    write_report_json(&report, &report_path)?;
    println!("report: {}", report_path.display());
    if !output.no_plots {
        for path in write_dataset_figures(data, &report, 10, style, dir, &name)? {
            println!("figure: {}", path.display());
        }
    }
    Ok(())
}

fn cmd_casestudy(args: &CaseStudyArgs) -> Result<()> {
    let style = style(args.alpha)?;
    let opts = CaseStudyOptions {
        seed: args.seed,
        development_size: args.development_size,
        small_size: args.small_size,
        holdout_size: args.holdout_size,
    };
    let study = run_case_study(&opts)?;
    let dir = out_dir(&args.output.out_dir)?;
    for model in &study.models {
        if !model.converged {
            eprintln!("warning: {} model fit did not converge", model.name);
        }
        case_model(model, &style, &args.output, &dir)?;
    }
    Ok(())
}
