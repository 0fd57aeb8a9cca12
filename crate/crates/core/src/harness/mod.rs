//! Monte Carlo recovery experiments and the data-mode workflow.
//!
//! Every trial draws its ground truth and observation from seeds derived from
//! the master seed and the trial's parameter values, so results do not depend
//! on the thread count or on which other cells are run. Trials run on a
//! dedicated worker pool and are collected in canonical (cell, trial) order.

pub mod stats;
pub mod svg;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::io::{fmt_f64, KvConfig};
use crate::sdp::{solve, SdpConfig};
use crate::synth::{
    derive_seed, generate_ground_truth, incomplete_covariance, sample_observation, DataTable, NoiseSpec,
};
use crate::theory::rescaled_parameter;
use crate::witness::{certify_solution, WitnessTolerances};

pub use stats::spearman;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exp1,
    Exp2,
}

/// Which `(d, s)` pairs are run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Largest `d` with every `s`, plus the reference `s` with every `d`.
    Slices,
    /// Every `(d, s)` with `s <= d`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub layout: Layout,
    pub d_list: Vec<usize>,
    pub s_list: Vec<usize>,
    /// `s` held fixed while `d` varies in the slices layout.
    pub s_ref: usize,
    pub gap_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub rho_list: Vec<f64>,
    pub bound: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Solver settings; `rho` is overridden per cell.
    pub solver: SdpConfig,
    /// Run the witness certificate on every converged trial.
    pub certify: bool,
}

const P_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

impl ExperimentConfig {
    pub fn exp1() -> Self {
        Self {
            mode: Mode::Exp1,
            layout: Layout::Slices,
            d_list: vec![20, 50, 100],
            s_list: vec![5, 10, 20],
            s_ref: 10,
            gap_list: vec![20.0],
            sigma_list: vec![0.1],
            p_list: P_GRID.to_vec(),
            rho_list: vec![0.1],
            bound: 5.0,
            trials: 30,
            master_seed: 0,
            solver: SdpConfig::default(),
            certify: true,
        }
    }

    pub fn exp2() -> Self {
        Self {
            mode: Mode::Exp2,
            layout: Layout::Full,
            d_list: vec![100],
            s_list: vec![50],
            s_ref: 50,
            gap_list: vec![10.0, 30.0, 50.0],
            sigma_list: vec![0.1, 0.3, 0.5],
            p_list: P_GRID.to_vec(),
            rho_list: vec![0.1, 0.01],
            bound: 5.0,
            trials: 30,
            master_seed: 0,
            solver: SdpConfig::default(),
            certify: true,
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Exp1 => Self::exp1(),
            Mode::Exp2 => Self::exp2(),
        }
    }

    /// Overrides fields from a flat config. Recognized keys: `layout`
    /// (`slices` | `full`), `d`, `s`, `s_ref`, `gap`, `sigma_normal`, `p`,
    /// `rho` (lists are comma-separated), `bound`, `trials`, `seed`, `tol`,
    /// `max_iter`, `eta`, `certify`.
    pub fn apply(&mut self, kv: &KvConfig) -> Result<()> {
        const KNOWN: [&str; 15] = [
            "layout", "d", "s", "s_ref", "gap", "sigma_normal", "p", "rho", "bound", "trials", "seed", "tol",
            "max_iter", "eta", "certify",
        ];
        if let Some(k) = kv.keys().find(|k| !KNOWN.contains(k)) {
            return Err(Error::Parse(format!("unknown config key {k:?}")));
        }
        if let Some(l) = kv.get("layout") {
            self.layout = match l {
                "slices" => Layout::Slices,
                "full" => Layout::Full,
                other => return Err(Error::Parse(format!("layout must be slices or full, got {other:?}"))),
            };
        }
        macro_rules! set {
            ($field:expr, list $key:literal) => {
                if let Some(v) = kv.get_list($key)? {
                    $field = v;
                }
            };
            ($field:expr, $key:literal) => {
                if let Some(v) = kv.get_parsed($key)? {
                    $field = v;
                }
            };
        }
        set!(self.d_list, list "d");
        set!(self.s_list, list "s");
        set!(self.s_ref, "s_ref");
        set!(self.gap_list, list "gap");
        set!(self.sigma_list, list "sigma_normal");
        set!(self.p_list, list "p");
        set!(self.rho_list, list "rho");
        set!(self.bound, "bound");
        set!(self.trials, "trials");
        set!(self.master_seed, "seed");
        set!(self.solver.max_iter, "max_iter");
        set!(self.solver.eta_support, "eta");
        set!(self.certify, "certify");
        if let Some(t) = kv.get_parsed::<f64>("tol")? {
            self.solver.tol_primal = t;
            self.solver.tol_dual = t;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        let lists = [
            ("d", self.d_list.is_empty()),
            ("s", self.s_list.is_empty()),
            ("gap", self.gap_list.is_empty()),
            ("sigma_normal", self.sigma_list.is_empty()),
            ("p", self.p_list.is_empty()),
            ("rho", self.rho_list.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return invalid(format!("{name} list must be nonempty"));
        }
        if let Some(p) = self.p_list.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return invalid(format!("p values must lie in (0, 1), got {p}"));
        }
        if self.s_list.contains(&0) || self.d_list.contains(&0) {
            return invalid("d and s must be positive");
        }
        if self.pairs().is_empty() {
            return invalid("no (d, s) pair with s <= d");
        }
        for &sig in &self.sigma_list {
            NoiseSpec::new(self.bound, sig)?;
        }
        for &rho in &self.rho_list {
            SdpConfig { rho, ..self.solver.clone() }.validate()?;
        }
        Ok(())
    }

    /// `(d, s)` pairs in run order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        match self.layout {
            Layout::Full => {
                for &d in &self.d_list {
                    for &s in &self.s_list {
                        out.push((d, s));
                    }
                }
            }
            Layout::Slices => {
                let d_max = *self.d_list.iter().max().unwrap_or(&0);
                for &s in &self.s_list {
                    out.push((d_max, s));
                }
                for &d in &self.d_list {
                    out.push((d, self.s_ref));
                }
            }
        }
        let mut seen = Vec::new();
        out.retain(|&(d, s)| {
            let keep = s <= d && !seen.contains(&(d, s));
            seen.push((d, s));
            keep
        });
        out
    }

    /// All cells in canonical order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (d, s) in self.pairs() {
            for &gap in &self.gap_list {
                for &sigma_normal in &self.sigma_list {
                    for &p in &self.p_list {
                        for &rho in &self.rho_list {
                            out.push(Cell {
                                d,
                                s,
                                gap,
                                sigma_normal,
                                p,
                                rho,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub d: usize,
    pub s: usize,
    pub gap: f64,
    pub sigma_normal: f64,
    pub p: f64,
    pub rho: f64,
}

const PURPOSE_TRUTH: u64 = 1;
const PURPOSE_OBSERVE: u64 = 2;

/// Seed of the ground truth: shared by every `p`, `sigma` and `rho` of a trial.
pub fn truth_seed(master: u64, cell: &Cell, trial: usize) -> u64 {
    derive_seed(
        master,
        &[PURPOSE_TRUTH, cell.d as u64, cell.s as u64, cell.gap.to_bits(), trial as u64],
    )
}

/// Seed of the observation: shared across `rho` so that best-over-rho compares
/// solutions on the same data.
pub fn observation_seed(master: u64, cell: &Cell, trial: usize) -> u64 {
    derive_seed(
        master,
        &[
            PURPOSE_OBSERVE,
            cell.d as u64,
            cell.s as u64,
            cell.gap.to_bits(),
            cell.sigma_normal.to_bits(),
            cell.p.to_bits(),
            trial as u64,
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub d: usize,
    pub s: usize,
    pub gap: f64,
    pub sigma_normal: f64,
    pub bound: f64,
    pub p: f64,
    pub rho: f64,
    pub trial: usize,
    pub seed: u64,
    pub recovered: bool,
    pub support_size: usize,
    pub iterations: usize,
    pub converged: bool,
    pub certified: bool,
    pub rescaled: f64,
}

pub fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let gt = generate_ground_truth(cell.d, cell.s, cell.gap, truth_seed(cfg.master_seed, cell, trial))?;
    let noise = NoiseSpec::new(cfg.bound, cell.sigma_normal)?;
    let seed = observation_seed(cfg.master_seed, cell, trial);
    let obs = sample_observation(&gt.m_star, cell.p, &noise, seed)?;
    let solver = SdpConfig {
        rho: cell.rho,
        ..cfg.solver.clone()
    };
    let sol = solve(&obs.m, &solver)?;
    let certified = cfg.certify
        && sol.converged
        && cell.rho > 0.0
        && certify_solution(
            &obs.m,
            &gt.support,
            &gt.support_signs(),
            cell.rho,
            &sol,
            solver.tol_primal,
            &WitnessTolerances::default(),
        )
        .map(|o| o.certified)
        .unwrap_or(false);
    Ok(TrialRecord {
        d: cell.d,
        s: cell.s,
        gap: cell.gap,
        sigma_normal: cell.sigma_normal,
        bound: cfg.bound,
        p: cell.p,
        rho: cell.rho,
        trial,
        seed,
        recovered: sol.converged && sol.support == gt.support,
        support_size: sol.support.len(),
        iterations: sol.iterations,
        converged: sol.converged,
        certified,
        rescaled: rescaled_parameter(&gt.m_star, &gt.support, cell.p)?,
    })
}

/// Runs every (cell, trial) on a pool of `threads` workers.
pub fn run_trials(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let jobs: Vec<(Cell, usize)> = cfg
        .cells()
        .into_iter()
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(|(c, t)| run_trial(cfg, c, *t)).collect())
}

/// Recovery statistics for one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub recovery_rate: f64,
    pub certified_rate: f64,
    pub unconverged: usize,
    pub mean_rescaled: f64,
    pub mean_iterations: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for chunk in records.chunk_by(|a, b| cell_of(a) == cell_of(b)) {
        let n = chunk.len() as f64;
        out.push(CellSummary {
            cell: cell_of(&chunk[0]),
            trials: chunk.len(),
            recovery_rate: chunk.iter().filter(|r| r.recovered).count() as f64 / n,
            certified_rate: chunk.iter().filter(|r| r.certified).count() as f64 / n,
            unconverged: chunk.iter().filter(|r| !r.converged).count(),
            mean_rescaled: chunk.iter().map(|r| r.rescaled).sum::<f64>() / n,
            mean_iterations: chunk.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
        });
    }
    out
}

fn cell_of(r: &TrialRecord) -> Cell {
    Cell {
        d: r.d,
        s: r.s,
        gap: r.gap,
        sigma_normal: r.sigma_normal,
        p: r.p,
        rho: r.rho,
    }
}

/// Best recovery rate over `rho` for each `(d, s, gap, sigma, p)`, ties going
/// to the first `rho` in config order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestOverRho {
    pub d: usize,
    pub s: usize,
    pub gap: f64,
    pub sigma_normal: f64,
    pub p: f64,
    pub best_rho: f64,
    pub recovery_rate: f64,
}

pub fn best_over_rho(summaries: &[CellSummary]) -> Vec<BestOverRho> {
    let mut out: Vec<BestOverRho> = Vec::new();
    for s in summaries {
        let c = &s.cell;
        match out
            .iter_mut()
            .find(|b| b.d == c.d && b.s == c.s && b.gap == c.gap && b.sigma_normal == c.sigma_normal && b.p == c.p)
        {
            Some(b) if s.recovery_rate > b.recovery_rate => {
                b.recovery_rate = s.recovery_rate;
                b.best_rho = c.rho;
            }
            Some(_) => {}
            None => out.push(BestOverRho {
                d: c.d,
                s: c.s,
                gap: c.gap,
                sigma_normal: c.sigma_normal,
                p: c.p,
                best_rho: c.rho,
                recovery_rate: s.recovery_rate,
            }),
        }
    }
    out
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_trials_csv<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record([
        "d", "s", "gap", "sigma_normal", "bound", "p", "rho", "trial", "seed", "recovered", "support_size",
        "iterations", "converged", "certified", "rescaled",
    ])?;
    for r in records {
        wtr.write_record([
            r.d.to_string(),
            r.s.to_string(),
            fmt_f64(r.gap),
            fmt_f64(r.sigma_normal),
            fmt_f64(r.bound),
            fmt_f64(r.p),
            fmt_f64(r.rho),
            r.trial.to_string(),
            r.seed.to_string(),
            (r.recovered as u8).to_string(),
            r.support_size.to_string(),
            r.iterations.to_string(),
            (r.converged as u8).to_string(),
            (r.certified as u8).to_string(),
            fmt_f64(r.rescaled),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, summaries: &[CellSummary]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record([
        "d", "s", "gap", "sigma_normal", "p", "rho", "trials", "recovery_rate", "certified_rate", "unconverged",
        "mean_rescaled", "mean_iterations",
    ])?;
    for s in summaries {
        let c = &s.cell;
        wtr.write_record([
            c.d.to_string(),
            c.s.to_string(),
            fmt_f64(c.gap),
            fmt_f64(c.sigma_normal),
            fmt_f64(c.p),
            fmt_f64(c.rho),
            s.trials.to_string(),
            fmt_f64(s.recovery_rate),
            fmt_f64(s.certified_rate),
            s.unconverged.to_string(),
            fmt_f64(s.mean_rescaled),
            fmt_f64(s.mean_iterations),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_best_csv<W: Write>(w: W, best: &[BestOverRho]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["d", "s", "gap", "sigma_normal", "p", "best_rho", "recovery_rate"])?;
    for b in best {
        wtr.write_record([
            b.d.to_string(),
            b.s.to_string(),
            fmt_f64(b.gap),
            fmt_f64(b.sigma_normal),
            fmt_f64(b.p),
            fmt_f64(b.best_rho),
            fmt_f64(b.recovery_rate),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Named SVG documents.
pub type Plots = Vec<(String, String)>;

/// Recovery rate against `p` and against the mean rescaled parameter, one line
/// per `(d, s)`; one pair of plots per `(gap, sigma, rho)` combination.
pub fn exp1_plots(summaries: &[CellSummary]) -> Plots {
    let mut groups: BTreeMap<(u64, u64, u64), Vec<&CellSummary>> = BTreeMap::new();
    for s in summaries {
        let c = &s.cell;
        groups
            .entry((c.gap.to_bits(), c.sigma_normal.to_bits(), c.rho.to_bits()))
            .or_default()
            .push(s);
    }
    let multi = groups.len() > 1;
    let mut out = Vec::new();
    for (k, (_, cells)) in groups.iter().enumerate() {
        let suffix = if multi { format!("_{}", k + 1) } else { String::new() };
        let mut by_ds: Vec<((usize, usize), Vec<&CellSummary>)> = Vec::new();
        for s in cells {
            let key = (s.cell.d, s.cell.s);
            match by_ds.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(s),
                None => by_ds.push((key, vec![s])),
            }
        }
        let c0 = cells[0].cell;
        let label = |d: usize, s: usize| format!("d={d}, s={s}");
        let vs_p: Vec<svg::Series> = by_ds
            .iter()
            .map(|((d, s), v)| svg::Series {
                label: label(*d, *s),
                points: v.iter().map(|c| (c.cell.p, c.recovery_rate)).collect(),
            })
            .collect();
        let vs_r: Vec<svg::Series> = by_ds
            .iter()
            .map(|((d, s), v)| {
                let mut pts: Vec<(f64, f64)> = v.iter().map(|c| (c.mean_rescaled, c.recovery_rate)).collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                svg::Series {
                    label: label(*d, *s),
                    points: pts,
                }
            })
            .collect();
        let title = format!("gap {}, sigma {}, rho {}", c0.gap, c0.sigma_normal, c0.rho);
        out.push((
            format!("exp1_rate_vs_p{suffix}.svg"),
            svg::line_chart(&title, "p", "exact recovery rate", &vs_p, Some((0.0, 1.0))),
        ));
        out.push((
            format!("exp1_rate_vs_rescaled{suffix}.svg"),
            svg::line_chart(&title, "rescaled parameter", "exact recovery rate", &vs_r, Some((0.0, 1.0))),
        ));
    }
    out
}

/// One plot per `sigma`, one line per gap, rate (best over `rho`) against `p`.
pub fn exp2_plots(best: &[BestOverRho]) -> Plots {
    let mut sigmas: Vec<f64> = Vec::new();
    for b in best {
        if !sigmas.contains(&b.sigma_normal) {
            sigmas.push(b.sigma_normal);
        }
    }
    sigmas
        .iter()
        .enumerate()
        .map(|(k, &sig)| {
            let mut series: Vec<svg::Series> = Vec::new();
            for b in best.iter().filter(|b| b.sigma_normal == sig) {
                let label = format!("gap={} (d={}, s={})", b.gap, b.d, b.s);
                match series.iter_mut().find(|s| s.label == label) {
                    Some(s) => s.points.push((b.p, b.recovery_rate)),
                    None => series.push(svg::Series {
                        label,
                        points: vec![(b.p, b.recovery_rate)],
                    }),
                }
            }
            (
                format!("exp2_sigma_{}.svg", k + 1),
                svg::line_chart(
                    &format!("sigma_normal = {sig}"),
                    "p",
                    "exact recovery rate (best rho)",
                    &series,
                    Some((0.0, 1.0)),
                ),
            )
        })
        .collect()
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<CellSummary>,
    pub best: Vec<BestOverRho>,
    pub plots: Plots,
}

pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    let records = run_trials(cfg, threads)?;
    let summaries = summarize(&records);
    let best = best_over_rho(&summaries);
    let plots = match cfg.mode {
        Mode::Exp1 => exp1_plots(&summaries),
        Mode::Exp2 => exp2_plots(&best),
    };
    Ok(ExperimentOutput {
        records,
        summaries,
        best,
        plots,
    })
}

pub fn run_experiment1(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    if cfg.mode != Mode::Exp1 {
        return invalid("run_experiment1 needs an exp1 config");
    }
    run_experiment(cfg, threads)
}

pub fn run_experiment2(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    if cfg.mode != Mode::Exp2 {
        return invalid("run_experiment2 needs an exp2 config");
    }
    run_experiment(cfg, threads)
}

impl ExperimentOutput {
    /// Writes `trials.csv`, `summary.csv`, `best.csv` and the plots into
    /// `dir`, returning the written paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, bytes)?;
            paths.push(p);
            Ok(())
        };
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &self.records)?;
        emit("trials.csv", buf)?;
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &self.summaries)?;
        emit("summary.csv", buf)?;
        let mut buf = Vec::new();
        write_best_csv(&mut buf, &self.best)?;
        emit("best.csv", buf)?;
        for (name, svg) in &self.plots {
            emit(name, svg.clone().into_bytes())?;
        }
        Ok(paths)
    }
}

/// Result of solving on an incomplete-data covariance.
#[derive(Clone, Debug, Serialize)]
pub struct DataModeReport {
    pub rho: f64,
    pub eta: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub observed_fraction: f64,
    /// Selected column names, in column order.
    pub selected: Vec<String>,
    /// 1-based column indices of the support.
    pub support: Vec<usize>,
    pub diag: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

pub fn run_data_mode(table: &DataTable, solver: &SdpConfig) -> Result<DataModeReport> {
    let cov = incomplete_covariance(table)?;
    let sol = solve(&cov.c, solver)?;
    let warning = match sol.support.len() {
        0 => Some("empty support: rho is too large for this covariance".to_owned()),
        1 => Some("singleton support: rho may be too large".to_owned()),
        _ => None,
    };
    Ok(DataModeReport {
        rho: solver.rho,
        eta: solver.eta_support,
        n_rows: table.n_rows(),
        n_cols: table.n_cols(),
        observed_fraction: cov.observed_fraction,
        selected: sol.support.iter().map(|&i| table.headers[i].clone()).collect(),
        support: sol.support.iter().map(|i| i + 1).collect(),
        diag: sol.diag(),
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
        warning,
    })
}
