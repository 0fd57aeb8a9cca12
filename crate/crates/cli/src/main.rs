//! `spca`: generate instances, observe them, solve, certify, evaluate the
//! recovery conditions and run the Monte Carlo experiments.
//!
//! Exit codes: 0 success, 2 invalid input, 3 non-convergence.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spca_core::harness::{run_data_mode, run_experiment, ExperimentConfig, Mode};
use spca_core::io::{read_matrix_csv, read_table, write_mask_csv, write_matrix_csv, KvConfig, SolutionExport};
use spca_core::sdp::{solve, SdpConfig};
use spca_core::synth::{generate_ground_truth, generate_rank_one, sample_observation, NoiseSpec};
use spca_core::theory::{theory_report, ModelParams};
use spca_core::witness::{certify_solution, check, construct, WitnessTolerances};
use spca_core::{sym_eig, Error, SymMatrix};

#[derive(Parser)]
#[command(name = "spca", version, about = "Sparse leading-eigenvector support recovery from incomplete noisy matrices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a ground-truth matrix with a sparse leading eigenvector.
    Generate(GenerateArgs),
    /// Sample a masked noisy observation of a matrix.
    Observe(ObserveArgs),
    /// Solve the penalized semidefinite program.
    Solve(SolveArgs),
    /// Build and check the primal-dual witness for a support.
    Witness(WitnessArgs),
    /// Evaluate the closed-form recovery conditions.
    Theory(TheoryArgs),
    /// Recovery rate against observation probability for several (d, s).
    Exp1(ExpArgs),
    /// Recovery rate against observation probability for several gaps and noise levels.
    Exp2(ExpArgs),
    /// Support selection on the covariance of a table with missing cells.
    Cov(CovArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    /// lambda_1 - lambda_2 (or lambda_1 with --rank-one).
    #[arg(long, default_value_t = 20.0)]
    gap: f64,
    #[arg(long)]
    rank_one: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ObserveArgs {
    /// Matrix CSV to observe.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    bound: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_normal: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Flat key = value file with keys rho, eta, tol, max_iter, tau, adaptive_tau.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Also write the full solution matrix.
    #[arg(long)]
    write_x: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    /// Observed matrix CSV.
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth CSV; support and signs are read from its leading eigenvector.
    #[arg(long, conflicts_with_all = ["support", "signs"])]
    truth: Option<PathBuf>,
    /// 1-based comma-separated support.
    #[arg(long, value_delimiter = ',', requires = "signs")]
    support: Vec<usize>,
    /// Comma-separated +1/-1 signs matching --support.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    signs: Vec<f64>,
    /// Also solve and compare the solution with the witness.
    #[arg(long)]
    compare: bool,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    /// Ground-truth CSV.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    bound: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_normal: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Confidence exponent.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// Flat key = value file; see the README for keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Run every (d, s) pair instead of the two slices.
    #[arg(long)]
    full_grid: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CovArgs {
    /// Table CSV with a header row; empty cells and NA are missing.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => Failure::NotConverged(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn read_matrix(path: &Path) -> Result<SymMatrix, Failure> {
    let f = File::open(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(read_matrix_csv(BufReader::new(f))?)
}

fn write_matrix(path: &Path, m: &SymMatrix) -> CmdResult {
    write_matrix_csv(BufWriter::new(File::create(path)?), m)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

/// Writes JSON to `dir/name` when an output directory is given, else stdout.
fn emit_json<T: Serialize>(out: Option<&Path>, name: &str, v: &T) -> CmdResult {
    let text = to_json(v) + "\n";
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn solver_config(flags: &SolverFlags) -> Result<SdpConfig, Failure> {
    let mut cfg = SdpConfig::default();
    if let Some(path) = &flags.config {
        let kv = KvConfig::parse(&fs::read_to_string(path)?)?;
        const KNOWN: [&str; 6] = ["rho", "eta", "tol", "max_iter", "tau", "adaptive_tau"];
        if let Some(k) = kv.keys().find(|k| !KNOWN.contains(k)) {
            return Err(Failure::Invalid(format!("unknown config key {k:?}")));
        }
        cfg.rho = kv.get_parsed("rho")?.unwrap_or(cfg.rho);
        cfg.eta_support = kv.get_parsed("eta")?.unwrap_or(cfg.eta_support);
        cfg.max_iter = kv.get_parsed("max_iter")?.unwrap_or(cfg.max_iter);
        cfg.tau = kv.get_parsed("tau")?.unwrap_or(cfg.tau);
        cfg.adaptive_tau = kv.get_parsed("adaptive_tau")?.unwrap_or(cfg.adaptive_tau);
        if let Some(t) = kv.get_parsed("tol")? {
            cfg.tol_primal = t;
            cfg.tol_dual = t;
        }
    }
    if let Some(r) = flags.rho {
        cfg.rho = r;
    }
    if let Some(e) = flags.eta {
        cfg.eta_support = e;
    }
    if let Some(t) = flags.tol {
        cfg.tol_primal = t;
        cfg.tol_dual = t;
    }
    if let Some(m) = flags.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TruthExport {
    d: usize,
    s: usize,
    support: Vec<usize>,
    eigenvalues: Vec<f64>,
    u1: Vec<f64>,
    seed: u64,
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    let gt = if a.rank_one {
        generate_rank_one(a.d, a.s, a.gap, a.seed)?
    } else {
        generate_ground_truth(a.d, a.s, a.gap, a.seed)?
    };
    fs::create_dir_all(&a.out)?;
    write_matrix(&a.out.join("m_star.csv"), &gt.m_star)?;
    emit_json(
        Some(&a.out),
        "truth.json",
        &TruthExport {
            d: gt.d,
            s: gt.s,
            support: gt.support.iter().map(|i| i + 1).collect(),
            eigenvalues: gt.eigenvalues.clone(),
            u1: gt.u1().to_vec(),
            seed: a.seed,
        },
    )
}

#[derive(Serialize)]
struct ObservationExport {
    p: f64,
    bound: f64,
    sigma_normal: f64,
    noise_variance: f64,
    observed_fraction: f64,
    seed: u64,
}

fn cmd_observe(a: &ObserveArgs) -> CmdResult {
    let m_star = read_matrix(&a.input)?;
    let noise = NoiseSpec::new(a.bound, a.sigma_normal)?;
    let obs = sample_observation(&m_star, a.p, &noise, a.seed)?;
    fs::create_dir_all(&a.out)?;
    write_matrix(&a.out.join("m.csv"), &obs.m)?;
    write_mask_csv(BufWriter::new(File::create(a.out.join("mask.csv"))?), &obs.mask)?;
    emit_json(
        Some(&a.out),
        "observation.json",
        &ObservationExport {
            p: a.p,
            bound: a.bound,
            sigma_normal: a.sigma_normal,
            noise_variance: noise.variance(),
            observed_fraction: obs.mask.observed_fraction_upper(),
            seed: a.seed,
        },
    )
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let m = read_matrix(&a.input)?;
    let cfg = solver_config(&a.solver)?;
    let sol = solve(&m, &cfg)?;
    emit_json(a.out.as_deref(), "solution.json", &SolutionExport::from(&sol))?;
    if a.write_x {
        let dir = a.out.as_deref().unwrap_or(Path::new("."));
        write_matrix(&dir.join("x_hat.csv"), &sol.x_hat)?;
    }
    if !sol.converged {
        return Err(Failure::NotConverged(format!(
            "no convergence after {} iterations (primal {:e}, dual {:e})",
            sol.iterations, sol.primal_residual, sol.dual_residual
        )));
    }
    Ok(())
}

/// Support (0-based) and signs of the exactly-nonzero entries of the leading
/// eigenvector of `m`, up to a relative tolerance.
fn support_from_truth(m: &SymMatrix) -> Result<(Vec<usize>, Vec<f64>), Failure> {
    let eig = sym_eig(m)?;
    let u = &eig.vectors[0];
    let cut = 1e-10 * u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let support: Vec<usize> = (0..u.len()).filter(|&i| u[i].abs() > cut).collect();
    let signs = support.iter().map(|&i| u[i].signum()).collect();
    Ok((support, signs))
}

fn cmd_witness(a: &WitnessArgs) -> CmdResult {
    let m = read_matrix(&a.input)?;
    let (support, signs) = match &a.truth {
        Some(p) => support_from_truth(&read_matrix(p)?)?,
        None => {
            if a.support.is_empty() {
                return Err(Failure::Invalid("give --truth or --support with --signs".into()));
            }
            if a.support.contains(&0) {
                return Err(Failure::Invalid("--support is 1-based".into()));
            }
            (a.support.iter().map(|i| i - 1).collect(), a.signs.clone())
        }
    };
    let cfg = solver_config(&a.solver)?;
    let tol = WitnessTolerances::default();
    if a.compare {
        let sol = solve(&m, &cfg)?;
        if !sol.converged {
            return Err(Failure::NotConverged(format!(
                "solver did not converge after {} iterations; refusing to certify",
                sol.iterations
            )));
        }
        let outcome = certify_solution(&m, &support, &signs, cfg.rho, &sol, cfg.tol_primal, &tol)?;
        emit_json(a.out.as_deref(), "witness.json", &outcome)
    } else {
        let triple = construct(&m, &support, &signs, cfg.rho)?;
        let report = check(&triple, &m, &tol)?;
        emit_json(a.out.as_deref(), "witness.json", &report)
    }
}

fn cmd_theory(a: &TheoryArgs) -> CmdResult {
    let m_star = read_matrix(&a.truth)?;
    let (support, _) = support_from_truth(&m_star)?;
    let u1 = sym_eig(&m_star)?.vectors[0].clone();
    let noise = NoiseSpec::new(a.bound, a.sigma_normal)?;
    let model = ModelParams {
        p: a.p,
        sigma2: noise.variance(),
        bound: a.bound,
    };
    let report = theory_report(&m_star, &support, &u1, &model, a.rho, a.c)?;
    emit_json(a.out.as_deref(), "theory.json", &report)
}

fn cmd_experiment(mode: Mode, a: &ExpArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::for_mode(mode);
    if let Some(path) = &a.config {
        cfg.apply(&KvConfig::parse(&fs::read_to_string(path)?)?)?;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if a.full_grid {
        cfg.layout = spca_core::harness::Layout::Full;
    }
    if let Some(r) = a.rho {
        cfg.rho_list = vec![r];
    }
    if let Some(e) = a.eta {
        cfg.solver.eta_support = e;
    }
    let out = run_experiment(&cfg, a.threads)?;
    let paths = out.write_to(&a.out)?;
    for s in &out.summaries {
        let c = &s.cell;
        println!(
            "d={:<4} s={:<3} gap={:<5} sigma={:<5} rho={:<6} p={:<4} rate={:.3} certified={:.3} unconverged={}",
            c.d, c.s, c.gap, c.sigma_normal, c.rho, c.p, s.recovery_rate, s.certified_rate, s.unconverged
        );
    }
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_cov(a: &CovArgs) -> CmdResult {
    let f = File::open(&a.input).map_err(|e| Failure::Invalid(format!("{}: {e}", a.input.display())))?;
    let table = read_table(BufReader::new(f))?;
    let cfg = solver_config(&SolverFlags {
        rho: Some(a.rho),
        eta: a.eta,
        tol: a.tol,
        max_iter: a.max_iter,
        config: None,
    })?;
    let report = run_data_mode(&table, &cfg)?;
    println!(
        "{} rows x {} columns, observed fraction {:.4}",
        report.n_rows, report.n_cols, report.observed_fraction
    );
    println!("rho = {}, eta = {}", report.rho, report.eta);
    for (name, &j) in report.selected.iter().zip(&report.support) {
        println!("  {name:<24} diag = {:.6}", report.diag[j - 1]);
    }
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = &a.out {
        emit_json(Some(dir), "support.json", &report)?;
    } else {
        println!("{}", to_json(&report));
    }
    if !report.converged {
        return Err(Failure::NotConverged(format!(
            "no convergence after {} iterations",
            report.iterations
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Observe(a) => cmd_observe(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Witness(a) => cmd_witness(a),
        Cmd::Theory(a) => cmd_theory(a),
        Cmd::Exp1(a) => cmd_experiment(Mode::Exp1, a),
        Cmd::Exp2(a) => cmd_experiment(Mode::Exp2, a),
        Cmd::Cov(a) => cmd_cov(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
