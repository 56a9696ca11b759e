//! The `simulate`, `stability`, `basins`, `compare` and `sweep` experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use scfgame_core::dynamics::{
    integrate, sample_basins, BasinReport, IntegratorConfig, Terminal, Trajectory,
};
use scfgame_core::model::{ModelParams, StrategyState, PARAM_NAMES};
use scfgame_core::stability::{
    boundary_equilibria, classify, classify_full_cooperation, compare_models, enumerate_equilibria,
    ess_conditions, Equilibrium, EquilibriumKind, EssConditionReport, ModelComparison, ModelTag,
    StabilityClass, DEFAULT_TOL,
};

use crate::config::{ConfigError, ExperimentConfig, GeneratedStates, InitialStates};
use crate::svg::phase_plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage, config and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    /// Parses a comma-separated list such as `csv,json`.
    pub fn parse(list: &str) -> Result<Self, CliError> {
        let mut f = Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
            }
        }
        if !(f.csv || f.json || f.svg) {
            return Err(CliError::Usage(
                "--format needs at least one of csv,json,svg".into(),
            ));
        }
        Ok(f)
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub formats: Option<Formats>,
}

impl Overrides {
    pub fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(out) = &self.out {
            config.outputs.dir = out.clone();
        }
        if let Some(f) = self.formats {
            config.outputs.csv = f.csv;
            config.outputs.json = f.json;
            config.outputs.svg = f.svg;
        }
        if let Some(seed) = self.seed {
            config.basins.seed = seed;
            if let InitialStates::Generated(GeneratedStates::Random(r)) = &mut config.initial_states
            {
                r.seed = seed;
            }
        }
        config
    }
}

/// Files written and the text meant for standard output.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub stdout: String,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io {
            path: self.dir.join(name),
            source: std::io::Error::other(e),
        };
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: self.dir.join(name),
            source: std::io::Error::other(e.to_string()),
        })?;
        self.write(name, &bytes)
    }

    fn effective_config(&mut self, config: &ExperimentConfig) -> Result<(), CliError> {
        if config.outputs.json {
            let mut text = config.to_json();
            text.push('\n');
            self.write("config.json", text.as_bytes())?;
        }
        Ok(())
    }

    fn finish(self, stdout: String) -> CommandOutput {
        CommandOutput {
            files: self.files,
            stdout,
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn fmt_point(p: &StrategyState) -> String {
    format!("({:.6}, {:.6}, {:.6})", p.x, p.y, p.z)
}

fn terminal_label(t: &Terminal) -> String {
    match t {
        Terminal::ConvergedTo(p) => match p.vertex_index() {
            Some(i) => format!("E{i}"),
            None => fmt_point(p),
        },
        Terminal::MaxTimeReached => "max_time".into(),
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    index: usize,
    initial: StrategyState,
    terminal: Terminal,
    final_state: StrategyState,
    final_time: f64,
    samples: usize,
    max_excursion: f64,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    params: &'a ModelParams,
    integrator: &'a IntegratorConfig,
    trajectories: Vec<TrajectorySummary>,
}

pub fn cmd_simulate(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let starts = config.initial_states.resolve(None);
    if starts.is_empty() {
        return Err(CliError::Usage(
            "simulate needs at least one entry in initial_states".into(),
        ));
    }
    let trajectories: Vec<Trajectory> = starts
        .par_iter()
        .map(|s| integrate(&config.params, *s, &config.integrator))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut out = Writer::new(&config.outputs.dir)?;
    out.effective_config(config)?;
    if config.outputs.csv {
        for (i, t) in trajectories.iter().enumerate() {
            let rows: Vec<Vec<String>> = t
                .samples
                .iter()
                .map(|s| vec![num(s.t), num(s.state.x), num(s.state.y), num(s.state.z)])
                .collect();
            out.csv(
                &format!("trajectories/trajectory_{i:03}.csv"),
                &["t", "x", "y", "z"],
                &rows,
            )?;
        }
    }
    if config.outputs.svg {
        out.write("phase.svg", phase_plot(&trajectories).as_bytes())?;
    }

    let summaries: Vec<TrajectorySummary> = trajectories
        .iter()
        .enumerate()
        .map(|(index, t)| TrajectorySummary {
            index,
            initial: t.samples[0].state,
            terminal: t.terminal,
            final_state: t.final_state(),
            final_time: t.samples.last().map(|s| s.t).unwrap_or(0.0),
            samples: t.samples.len(),
            max_excursion: t.max_excursion,
        })
        .collect();

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:>4}  {:<32}  {:>10}  terminal",
        "run", "initial", "t_end"
    );
    for s in &summaries {
        let _ = writeln!(
            text,
            "{:>4}  {:<32}  {:>10.2}  {}",
            s.index,
            fmt_point(&s.initial),
            s.final_time,
            terminal_label(&s.terminal)
        );
    }

    if config.outputs.json {
        out.json(
            "simulate.json",
            &SimulateReport {
                params: &config.params,
                integrator: &config.integrator,
                trajectories: summaries,
            },
        )?;
    }
    Ok(out.finish(text))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumEntry {
    pub label: String,
    pub kind: EquilibriumKind,
    pub point: StrategyState,
    pub eigenvalues: Vec<Eigenvalue>,
    pub class: StabilityClass,
    pub tol: f64,
}

fn entry(params: &ModelParams, eq: &Equilibrium) -> EquilibriumEntry {
    let c = classify(params, eq, DEFAULT_TOL);
    EquilibriumEntry {
        label: eq.label(),
        kind: eq.kind,
        point: eq.point,
        eigenvalues: c
            .eigenvalues
            .iter()
            .map(|l| Eigenvalue { re: l.re, im: l.im })
            .collect(),
        class: c.class,
        tol: c.tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub params: ModelParams,
    pub equilibria: Vec<EquilibriumEntry>,
    /// Isolated equilibria inside the faces `x = 1`, `y = 1`, `z = 1`.
    pub boundary_equilibria: Vec<EquilibriumEntry>,
    pub ess_conditions: EssConditionReport,
    pub model_tag: ModelTag,
}

pub fn stability_report(params: &ModelParams) -> StabilityReport {
    let conditions = ess_conditions(params);
    StabilityReport {
        params: *params,
        equilibria: enumerate_equilibria(params)
            .iter()
            .map(|e| entry(params, e))
            .collect(),
        boundary_equilibria: boundary_equilibria(params)
            .iter()
            .map(|e| entry(params, e))
            .collect(),
        model_tag: conditions.model_tag,
        ess_conditions: conditions,
    }
}

fn fmt_eigen(e: &Eigenvalue) -> String {
    if e.im == 0.0 {
        format!("{:.6}", e.re)
    } else {
        format!("{:.6}{:+.6}i", e.re, e.im)
    }
}

fn conditions_table(text: &mut String, report: &EssConditionReport) {
    let _ = writeln!(text, "E8 conditions ({}):", report.model_tag);
    for c in &report.conditions {
        let _ = writeln!(
            text,
            "  {}  {:<36}  lhs {:>10.6}  rhs {:>10.6}  margin {:>+10.6}  {}",
            c.label,
            c.inequality,
            c.lhs,
            c.rhs,
            c.margin,
            if c.satisfied { "ok" } else { "FAILS" }
        );
    }
}

/// Human-readable table of a stability report.
pub fn render_stability(report: &StabilityReport) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<9} {:<32} {:<14} eigenvalues",
        "point", "coordinates", "class"
    );
    for e in report.equilibria.iter().chain(&report.boundary_equilibria) {
        let eig: Vec<String> = e.eigenvalues.iter().map(fmt_eigen).collect();
        let _ = writeln!(
            text,
            "{:<9} {:<32} {:<14} {}",
            e.label,
            fmt_point(&e.point),
            e.class.to_string(),
            eig.join(", ")
        );
    }
    conditions_table(&mut text, &report.ess_conditions);
    if let Some(note) = &report.ess_conditions.conditions[0].note {
        let _ = writeln!(text, "  note: {note}");
    }
    text
}

pub fn cmd_stability(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let report = stability_report(&config.params);
    let mut out = Writer::new(&config.outputs.dir)?;
    out.effective_config(config)?;
    if config.outputs.json {
        out.json("stability.json", &report)?;
    }
    if config.outputs.csv {
        let rows: Vec<Vec<String>> = report
            .equilibria
            .iter()
            .chain(&report.boundary_equilibria)
            .map(|e| {
                let mut row = vec![
                    e.label.clone(),
                    num(e.point.x),
                    num(e.point.y),
                    num(e.point.z),
                    e.class.to_string(),
                ];
                for l in &e.eigenvalues {
                    row.push(num(l.re));
                    row.push(num(l.im));
                }
                row
            })
            .collect();
        out.csv(
            "stability.csv",
            &[
                "label", "x", "y", "z", "class", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
                "eig3_re", "eig3_im",
            ],
            &rows,
        )?;
    }
    Ok(out.finish(render_stability(&report)))
}

#[derive(Serialize)]
struct BasinsFile<'a> {
    params: &'a ModelParams,
    integrator: &'a IntegratorConfig,
    report: &'a BasinReport,
}

pub fn cmd_basins(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    if config.basins.samples == 0 {
        return Err(CliError::Usage("basins.samples must be at least 1".into()));
    }
    let report = sample_basins(
        &config.params,
        config.basins.samples,
        config.basins.seed,
        &config.integrator,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut out = Writer::new(&config.outputs.dir)?;
    out.effective_config(config)?;
    let total = report.total_samples as f64;
    let mut rows: Vec<Vec<String>> = report
        .attractor_counts
        .iter()
        .map(|(k, c)| vec![k.label(), c.to_string(), num(*c as f64 / total)])
        .collect();
    rows.push(vec![
        "unresolved".into(),
        report.unresolved.to_string(),
        num(report.unresolved as f64 / total),
    ]);
    if config.outputs.json {
        out.json(
            "basins.json",
            &BasinsFile {
                params: &config.params,
                integrator: &config.integrator,
                report: &report,
            },
        )?;
    }
    if config.outputs.csv {
        out.csv("basins.csv", &["attractor", "count", "share"], &rows)?;
    }

    let mut text = format!("{} samples, seed {}\n", report.total_samples, report.seed);
    for row in &rows {
        let _ = writeln!(text, "  {:<36} {:>7}  {:>8}", row[0], row[1], row[2]);
    }
    Ok(out.finish(text))
}

#[derive(Serialize)]
struct CompareFile<'a> {
    params: &'a ModelParams,
    comparison: &'a ModelComparison,
}

pub fn render_comparison(c: &ModelComparison) -> String {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<4} {:<36} {:>12} {:>12} {:>10}",
        "cond", "inequality (blockchain form)", "baseline", "blockchain", "shift"
    );
    for i in 0..3 {
        let b = &c.baseline.conditions[i];
        let k = &c.blockchain.conditions[i];
        let flag = match (b.satisfied, k.satisfied) {
            (false, true) => "  <- now satisfied",
            (true, false) => "  <- now fails",
            _ => "",
        };
        let _ = writeln!(
            text,
            "{:<4} {:<36} {:>+12.6} {:>+12.6} {:>+10.6}{flag}",
            b.label, k.inequality, b.margin, k.margin, c.margin_shift[i]
        );
    }
    let _ = writeln!(
        text,
        "E8: baseline {} -> blockchain {}{}",
        c.baseline_e8,
        c.blockchain_e8,
        if c.stability_flip() {
            "  (becomes ESS)"
        } else {
            ""
        }
    );
    let _ = writeln!(text, "pareto_flag: {}", c.pareto_flag);
    text
}

pub fn cmd_compare(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let comparison = compare_models(&config.params).map_err(|e| {
        CliError::Usage(format!(
            "{e}: set at least one of m1, m2, m3 above zero to compare against the baseline"
        ))
    })?;
    let mut out = Writer::new(&config.outputs.dir)?;
    out.effective_config(config)?;
    if config.outputs.json {
        out.json(
            "compare.json",
            &CompareFile {
                params: &config.params,
                comparison: &comparison,
            },
        )?;
    }
    if config.outputs.csv {
        let rows: Vec<Vec<String>> = (0..3)
            .map(|i| {
                let b = &comparison.baseline.conditions[i];
                let k = &comparison.blockchain.conditions[i];
                vec![
                    b.label.clone(),
                    num(b.margin),
                    num(k.margin),
                    num(comparison.margin_shift[i]),
                    b.satisfied.to_string(),
                    k.satisfied.to_string(),
                ]
            })
            .collect();
        out.csv(
            "compare.csv",
            &[
                "condition",
                "baseline_margin",
                "blockchain_margin",
                "shift",
                "baseline_satisfied",
                "blockchain_satisfied",
            ],
            &rows,
        )?;
    }
    Ok(out.finish(render_comparison(&comparison)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: ModelParams,
    pub e8_class: StabilityClass,
    pub margins: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basin_share_e8: Option<f64>,
}

/// One row per grid cell, in lexicographic grid order.
pub fn sweep_rows(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs a `sweep` grid in the config".into()))?;
    let cells = grid.cells(&config.params);
    let samples = config.basins.sweep_samples;
    cells
        .par_iter()
        .map(|p| {
            let basin_share_e8 = if samples > 0 {
                let r = sample_basins(p, samples, config.basins.seed, &config.integrator)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                Some(r.vertex_share(8))
            } else {
                None
            };
            Ok(SweepRow {
                params: *p,
                e8_class: classify_full_cooperation(p, DEFAULT_TOL).class,
                margins: ess_conditions(p).margins(),
                basin_share_e8,
            })
        })
        .collect()
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let rows = sweep_rows(config)?;
    let mut out = Writer::new(&config.outputs.dir)?;
    out.effective_config(config)?;
    let with_share = config.basins.sweep_samples > 0;

    let mut header: Vec<&str> = PARAM_NAMES.to_vec();
    header.extend(["e8_class", "margin_a1", "margin_a2", "margin_a3"]);
    if with_share {
        header.push("basin_share_e8");
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row: Vec<String> = r
                .params
                .named_values()
                .iter()
                .map(|(_, v)| num(*v))
                .collect();
            row.push(r.e8_class.to_string());
            row.extend(r.margins.iter().map(|m| num(*m)));
            if let Some(s) = r.basin_share_e8 {
                row.push(num(s));
            }
            row
        })
        .collect();
    if config.outputs.csv {
        out.csv("sweep.csv", &header, &table)?;
    }
    if config.outputs.json {
        out.json("sweep.json", &rows)?;
    }

    let axes: Vec<&str> = config
        .sweep
        .as_ref()
        .map(|g| g.axes.iter().map(|(n, _)| *n).collect())
        .unwrap_or_default();
    let mut text = String::new();
    for name in &axes {
        let _ = write!(text, "{name:>10} ");
    }
    let _ = writeln!(
        text,
        "{:<14} {:>10} {:>10} {:>10}",
        "e8_class", "A1", "A2", "A3"
    );
    for r in &rows {
        for name in &axes {
            let _ = write!(text, "{:>10.4} ", r.params.get(name).unwrap_or(f64::NAN));
        }
        let _ = writeln!(
            text,
            "{:<14} {:>+10.4} {:>+10.4} {:>+10.4}",
            r.e8_class.to_string(),
            r.margins[0],
            r.margins[1],
            r.margins[2]
        );
    }
    Ok(out.finish(text))
}
