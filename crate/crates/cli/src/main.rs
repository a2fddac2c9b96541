use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use metafeat_core::autoencoder::{
    autoencode_min, dictionary_size_bound, parse_images, sparse_autoencode, sparsity_bound, write_decompositions, write_images,
};
use metafeat_core::boolean::{parse_bool, write_bool, Monomial, TargetSet};
use metafeat_core::harness::acceptance::{run_criterion, CRITERIA};
use metafeat_core::harness::run::trial_seed;
use metafeat_core::harness::{generate_instance, run_experiment, Scenario, ScenarioConfig};
use metafeat_core::lp::{solve_lp, LinearProgram, SimplexOptions};
use metafeat_core::polynomial::{mq_interpolate, MultilinearPolynomial};
use metafeat_core::sampling::MqOracle;
use metafeat_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "metafeat", version, about = "Planted lifelong-learning experiments over shared metafeatures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a planted instance and its hidden truth to files
    Gen(ExperimentArgs),
    /// Run a scenario experiment and check its bounds
    Run(ExperimentArgs),
    /// Minimum dictionary for an IMG v1 or BOOL v1 file
    Autoencode(AutoencodeArgs),
    /// LP relaxation plus randomized rounding for an IMG v1 or BOOL v1 file
    SparseAutoencode(SparseArgs),
    /// Recover a POLY v1 polynomial from membership queries
    Interpolate(InterpolateArgs),
    /// Run the acceptance suite
    Verify(VerifyArgs),
    /// Solve an LP v1 file
    LpSolve(LpArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario when no configuration file is given
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as one JSON object
    #[arg(long)]
    json: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Further overrides as key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct AutoencodeArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SparseArgs {
    input: PathBuf,
    /// Anchor-set weight
    #[arg(long, default_value_t = 2)]
    c: usize,
    /// Per-target sparsity
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    max_retries: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InterpolateArgs {
    input: PathBuf,
    /// Term budget; defaults to the file's term count
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers; all by default
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LpArgs {
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

fn exit_for(e: &Error) -> u8 {
    if e.is_budget_or_assumption() {
        return EXIT_BUDGET;
    }
    match e.root() {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        _ => EXIT_CHECK,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(&a),
        Cmd::Run(a) => cmd_run(&a),
        Cmd::Autoencode(a) => cmd_autoencode(&a),
        Cmd::SparseAutoencode(a) => cmd_sparse(&a),
        Cmd::Interpolate(a) => cmd_interpolate(&a),
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::LpSolve(a) => cmd_lp(&a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

type CmdResult = Result<u8, Error>;

fn load_config(a: &ExperimentArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&a.config, &a.scenario) {
        (Some(p), _) => {
            let mut c = ScenarioConfig::parse(&fs::read_to_string(p)?)?;
            if let Some(s) = &a.scenario {
                c.scenario = s.parse::<Scenario>()?;
            }
            c
        }
        (None, Some(s)) => ScenarioConfig::defaults(s.parse()?),
        (None, None) => return Err(Error::InvalidArgument("either --config or --scenario is required".into())),
    };
    let numeric: [(&str, Option<String>); 11] = [
        ("seed", a.seed.map(|v| v.to_string())),
        ("trials", a.trials.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("m", a.m.map(|v| v.to_string())),
        ("k", a.k.map(|v| v.to_string())),
        ("r", a.r.map(|v| v.to_string())),
        ("tau", a.tau.map(|v| v.to_string())),
        ("c", a.c.map(|v| v.to_string())),
        ("eps", a.eps.map(|v| v.to_string())),
        ("delta", a.delta.map(|v| v.to_string())),
        ("B", a.b.map(|v| v.to_string())),
    ];
    for (k, v) in numeric {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_gen(a: &ExperimentArgs) -> CmdResult {
    let cfg = load_config(a)?;
    let out = a.out.clone().ok_or_else(|| Error::InvalidArgument("gen needs --out".into()))?;
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let mut violated = 0;
    for trial in 0..cfg.trials {
        let inst = generate_instance(&cfg, trial_seed(&cfg, trial)).map_err(|e| e.at_trial(trial))?;
        let dir = out.join(format!("trial_{trial:03}"));
        fs::create_dir_all(&dir)?;
        for (name, text) in inst.files() {
            fs::write(dir.join(name), text)?;
        }
        let v = inst.assumption_violations(&cfg);
        for msg in &v {
            eprintln!("trial {trial}: assumption violated: {msg}");
        }
        violated += !v.is_empty() as usize;
    }
    println!("wrote {} planted {} instance(s) to {}", cfg.trials, cfg.scenario, out.display());
    Ok(if violated > 0 { EXIT_BUDGET } else { 0 })
}

fn cmd_run(a: &ExperimentArgs) -> CmdResult {
    let cfg = load_config(a)?;
    let report = run_experiment(&cfg)?;
    if let Some(dir) = &a.out {
        report.write_to(dir)?;
    }
    if a.json {
        println!("{}", report.summary_json());
    } else {
        print!("{}", report.summary_text(true));
    }
    Ok(match report.status() {
        "pass" => 0,
        "fail" => EXIT_CHECK,
        _ => EXIT_BUDGET,
    })
}

enum Input {
    Images { w: usize, h: usize },
    Bool,
}

fn read_targets(path: &Path) -> Result<(TargetSet, Input), Error> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with("IMG") {
        let (w, h, images) = parse_images(&text)?;
        Ok((TargetSet::from_targets(w * h, images)?, Input::Images { w, h }))
    } else {
        let (n, monomials) = parse_bool(&text)?;
        Ok((TargetSet::from_targets(n, monomials)?, Input::Bool))
    }
}

fn write_dictionary(out: &Path, input: &Input, n: usize, d: &[Monomial], decomp: &[Vec<usize>]) -> Result<(), Error> {
    fs::create_dir_all(out)?;
    match input {
        Input::Images { w, h } => fs::write(out.join("dictionary.img"), write_images(*w, *h, d))?,
        Input::Bool => fs::write(out.join("dictionary.bool"), write_bool(n, d))?,
    }
    fs::write(out.join("decompositions.txt"), write_decompositions(d.len(), decomp))?;
    Ok(())
}

fn cmd_autoencode(a: &AutoencodeArgs) -> CmdResult {
    let (ts, input) = read_targets(&a.input)?;
    let enc = autoencode_min(&ts);
    if let Some(out) = &a.out {
        write_dictionary(out, &input, ts.n(), enc.dictionary.metafeatures(), &enc.decompositions)?;
    }
    let failures: Vec<usize> = enc.reconstruction_failures.iter().map(|i| i + 1).collect();
    if a.json {
        println!(
            "{}",
            json!({
                "inputs": ts.len(),
                "dictionary_size": enc.dictionary.len(),
                "reconstruction_failures": failures,
                "dictionary": enc.dictionary.metafeatures().iter().map(|m| m.to_index_list()).collect::<Vec<_>>(),
            })
        );
    } else {
        println!("inputs={}\ndictionary_size={}", ts.len(), enc.dictionary.len());
        for (i, m) in enc.dictionary.metafeatures().iter().enumerate() {
            println!("metafeature.{}={}", i + 1, m.to_index_list());
        }
        println!("reconstruction_failures={}", failures.len());
    }
    Ok(if failures.is_empty() { 0 } else { EXIT_CHECK })
}

fn cmd_sparse(a: &SparseArgs) -> CmdResult {
    let (ts, input) = read_targets(&a.input)?;
    let enc = sparse_autoencode(&ts, a.c, a.k, a.seed, a.max_retries, &SimplexOptions::default())?;
    let r = &enc.rounding;
    if let Some(out) = &a.out {
        write_dictionary(out, &input, ts.n(), r.dictionary.metafeatures(), &r.relevant)?;
    }
    let sparsity = r.relevant.iter().map(Vec::len).max().unwrap_or(0);
    let s_bound = sparsity_bound(a.k, ts.n(), ts.len());
    let lp_size = enc.solution.objective;
    let d_bound = dictionary_size_bound(lp_size.ceil() as usize, ts.n(), ts.len());
    if a.json {
        println!(
            "{}",
            json!({
                "inputs": ts.len(),
                "candidates": enc.lp_instance.candidates.len(),
                "lp_objective": lp_size,
                "lp_pivots": enc.solution.pivots,
                "retries": r.retries,
                "dictionary_size": r.dictionary.len(),
                "max_sparsity": sparsity,
                "sparsity_bound": s_bound,
            })
        );
    } else {
        println!("inputs={}\ncandidates={}", ts.len(), enc.lp_instance.candidates.len());
        println!("lp_objective={lp_size}\nlp_pivots={}\nretries={}", enc.solution.pivots, r.retries);
        println!("dictionary_size={}\ndictionary_size_bound={d_bound:.3}", r.dictionary.len());
        println!("max_sparsity={sparsity}\nsparsity_bound={s_bound:.3}");
    }
    Ok(if (sparsity as f64) <= s_bound { 0 } else { EXIT_CHECK })
}

fn cmd_interpolate(a: &InterpolateArgs) -> CmdResult {
    let target = MultilinearPolynomial::parse(&fs::read_to_string(&a.input)?)?;
    let t_max = a.t.unwrap_or(target.len().max(1));
    let mut mq = MqOracle::new(target.clone());
    let mut eq = mq.eq_oracle();
    let got = mq_interpolate(&mut mq, Some(&mut eq), t_max)?;
    let exact = got.polynomial.approx_eq(&target, 1e-9);
    if a.json {
        println!(
            "{}",
            json!({
                "terms": got.polynomial.len(),
                "mq_queries": got.mq_queries,
                "eq_queries": got.eq_queries,
                "exact": exact,
                "polynomial": got.polynomial.to_text(),
            })
        );
    } else {
        print!("{}", got.polynomial.to_text());
        println!("# mq_queries={} eq_queries={} exact={exact}", got.mq_queries, got.eq_queries);
    }
    Ok(if exact { 0 } else { EXIT_CHECK })
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let ids: Vec<u8> = if a.criteria.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { a.criteria.clone() };
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|c| c.0 == **i)) {
        return Err(Error::InvalidArgument(format!("no criterion {bad}")));
    }
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_criterion(id);
        if !a.json {
            println!("{}", o.line());
        }
        outcomes.push(o);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    if a.json {
        let rows: Vec<_> = outcomes
            .iter()
            .map(|o| json!({ "criterion": o.id, "name": o.name, "passed": o.passed, "detail": o.detail, "secs": o.secs }))
            .collect();
        println!("{}", json!({ "criteria": rows, "passed": passed }));
    }
    Ok(if passed { 0 } else { EXIT_CHECK })
}

fn cmd_lp(a: &LpArgs) -> CmdResult {
    let lp = LinearProgram::parse(&fs::read_to_string(&a.input)?)?;
    let sol = solve_lp(&lp, &SimplexOptions::default())?;
    if a.json {
        println!(
            "{}",
            json!({ "status": sol.status.to_string(), "objective": sol.objective, "values": sol.values, "pivots": sol.pivots })
        );
    } else {
        println!("status={}\nobjective={}\npivots={}", sol.status, sol.objective, sol.pivots);
        for (i, v) in sol.values.iter().enumerate() {
            println!("x{}={v}", i + 1);
        }
    }
    Ok(0)
}
