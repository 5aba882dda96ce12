use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use walkplan::checks::{verify_theorems, CheckError, CheckOptions, TheoremReport};
use walkplan::constructor::{build_base, construct_optimal, BaseSolutions};
use walkplan::milp::{build_model, to_lp_string};
use walkplan::solver::{
    branch_and_bound, brute_force_with_cap, quotient_remainder, solve_tsp, GlobalBound,
    SolveRecord, SolverOptions, DEFAULT_ENUMERATION_CAP,
};
use walkplan::{load_instance, random_euclidean_instance, Instance, Time};

const EXIT_USAGE: u8 = 1;
const EXIT_PROPERTY: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "walkplan", version, about = "Minimum revisit-time patrol walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one visit count and print the result document.
    Solve(SolveArgs),
    /// Optimal values for every visit count from n to --k-max, as CSV.
    Sweep(SweepArgs),
    /// Check the structural properties of optimal walks.
    VerifyTheorems(VerifyArgs),
    /// Write the mixed-integer model in LP text format.
    ExportMilp(ExportArgs),
    /// Generate a random Euclidean instance in points form.
    GenInstance(GenArgs),
    /// Exhaustive enumeration for small cases.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Override the instance's depot.
    #[arg(long)]
    depot: Option<usize>,
    #[arg(long, default_value_t = 300.0)]
    budget_seconds: f64,
    /// Output file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Tsp,
    Brute,
    Bnb,
    Construct,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Method::Bnb)]
    method: Method,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    instance: PathBuf,
    #[arg(long)]
    k_max: usize,
    /// Use branch-and-bound for every k, without the derived lower bound.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance files; random instances are generated when none are given.
    instances: Vec<PathBuf>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    count: u64,
    #[arg(long, default_value_t = 100.0)]
    side: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    side: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: f64,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyTheorems(a) => cmd_verify(a),
        Command::ExportMilp(a) => cmd_export(a),
        Command::GenInstance(a) => cmd_gen(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load(path: &Path, depot: Option<usize>) -> Result<Instance> {
    let inst = load_instance(path).with_context(|| format!("loading {}", path.display()))?;
    match depot {
        Some(d) => Ok(inst.with_depot(d)?),
        None => Ok(inst),
    }
}

fn solver_options(c: &Common) -> Result<SolverOptions> {
    if !(c.budget_seconds > 0.0 && c.budget_seconds.is_finite()) {
        bail!("--budget-seconds must be positive");
    }
    Ok(SolverOptions::default().with_budget(Duration::from_secs_f64(c.budget_seconds)))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn record_text(rec: &SolveRecord) -> String {
    let mut s = serde_json::to_string_pretty(rec).expect("records serialize");
    s.push('\n');
    s
}

fn cmd_solve(a: SolveArgs) -> Result<u8> {
    let inst = load(&a.instance, a.common.depot)?;
    let opts = solver_options(&a.common)?;
    let rec = match a.method {
        Method::Tsp => {
            if a.k != inst.n() {
                bail!("the tour method solves k = n = {} only", inst.n());
            }
            solve_tsp(&inst)?.to_record()
        }
        Method::Brute => brute_force_with_cap(&inst, a.k, DEFAULT_ENUMERATION_CAP)?.to_record(),
        Method::Bnb => branch_and_bound(&inst, a.k, &opts)?.to_record(),
        Method::Construct => {
            let started = std::time::Instant::now();
            let (base, records) = build_base(&inst, &opts)?;
            let (walk, value) = construct_optimal(&base, a.k)?;
            SolveRecord {
                k: a.k,
                value,
                walk: walk.into_seq(),
                certified: base.all_certified(),
                nodes: records.iter().map(|r| r.nodes).sum(),
                seconds: started.elapsed().as_secs_f64(),
            }
        }
    };
    emit(&a.common.out, &record_text(&rec))?;
    Ok(if rec.certified { 0 } else { EXIT_BUDGET })
}

struct SweepRow {
    k: usize,
    value: Time,
    method: &'static str,
    certified: bool,
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    let inst = load(&a.instance, a.common.depot)?;
    let n = inst.n();
    if a.k_max < n {
        bail!("--k-max must be at least n = {n}");
    }
    let opts = solver_options(&a.common)?;
    let (base, _) = build_base(&inst, &opts)?;
    let top = if n == 2 { n } else { 2 * n - 1 };
    let mut rows = Vec::new();
    for k in n..=a.k_max {
        if n == 2 && k % 2 == 1 {
            continue;
        }
        let row = if a.exact {
            let warm = construct_optimal(&base, k)?.0.into_seq();
            let o = opts
                .clone()
                .with_global_bound(GlobalBound::None)
                .with_incumbent(warm);
            let r = branch_and_bound(&inst, k, &o)?;
            SweepRow {
                k,
                value: r.value,
                method: "bnb",
                certified: r.certified,
            }
        } else if k <= top {
            let e = base.get(k).expect("base range solved");
            SweepRow {
                k,
                value: e.value,
                method: if k == n { "tsp" } else { "bnb" },
                certified: e.certified,
            }
        } else {
            let (_, value) = construct_optimal(&base, k)?;
            SweepRow {
                k,
                value,
                method: "constructed",
                certified: base.all_certified(),
            }
        };
        rows.push(row);
    }
    let mut csv = String::from("k,value,method,certified,value_raw\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.2},{},{},{}\n",
            r.k, r.value, r.method, r.certified, r.value
        ));
    }
    emit(&a.common.out, &csv)?;
    eprint!("{}", sweep_summary(&base, &rows));
    Ok(if rows.iter().all(|r| r.certified) {
        0
    } else {
        EXIT_BUDGET
    })
}

fn sweep_summary(base: &BaseSolutions<'_>, rows: &[SweepRow]) -> String {
    let n = base.instance().n();
    let start = n * n - n;
    let (Some(rn), Some(rn1)) = (base.get(n), base.get(n + 1)) else {
        return format!("two-valued regime starts at k = {start}\n");
    };
    let tail: Vec<&SweepRow> = rows.iter().filter(|r| r.k >= start).collect();
    if tail.is_empty() {
        return format!("two-valued regime starts at k = {start} (beyond --k-max)\n");
    }
    let holds = tail.iter().all(|r| {
        let expect = if quotient_remainder(r.k, n).1 == 0 { rn.value } else { rn1.value };
        (r.value - expect).abs() <= 1e-6
    });
    format!(
        "two-valued regime starts at k = {start}: values {:.2} (n | k) and {:.2} otherwise; {} on {} rows\n",
        rn.value,
        rn1.value,
        if holds { "holds" } else { "VIOLATED" },
        tail.len()
    )
}

fn cmd_verify(a: VerifyArgs) -> Result<u8> {
    let solver = solver_options(&a.common)?;
    let mut instances = Vec::new();
    if a.instances.is_empty() {
        for seed in a.seed..a.seed + a.count {
            instances.push(random_euclidean_instance(a.n, seed, a.side)?);
        }
    } else {
        for p in &a.instances {
            match load_instance(p) {
                Ok(inst) => instances.push(match a.common.depot {
                    Some(d) => inst.with_depot(d)?,
                    None => inst,
                }),
                Err(e) => {
                    eprintln!("{}: validation failed: {e}", p.display());
                    return Ok(EXIT_PROPERTY);
                }
            }
        }
    }
    let opts = CheckOptions {
        k_max: a.k_max,
        solver,
        ..CheckOptions::default()
    };
    let mut reports: Vec<TheoremReport> = Vec::new();
    let mut text = String::new();
    for inst in &instances {
        match verify_theorems(inst, &opts) {
            Ok(r) => {
                text.push_str(&r.to_string());
                reports.push(r);
            }
            Err(CheckError::Metric(m)) => {
                let worst = m.worst().expect("invalid reports name a triple");
                eprintln!(
                    "{}: validation failed: triangle inequality violated at ({}, {}, {}) by {}",
                    inst.name(),
                    worst.u,
                    worst.v,
                    worst.w,
                    worst.magnitude
                );
                return Ok(EXIT_PROPERTY);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let passed = reports.iter().all(TheoremReport::all_passed);
    let certified = reports.iter().all(|r| r.certified);
    text.push_str(&format!(
        "{} instance(s): {}\n",
        reports.len(),
        if passed { "all properties pass" } else { "FAILURES" }
    ));
    match &a.common.out {
        Some(p) => {
            let json = serde_json::to_string_pretty(&reports)?;
            fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(if !passed {
        EXIT_PROPERTY
    } else if !certified {
        EXIT_BUDGET
    } else {
        0
    })
}

fn cmd_export(a: ExportArgs) -> Result<u8> {
    let inst = load(&a.instance, a.common.depot)?;
    let model = build_model(&inst, a.k)?;
    let lp = to_lp_string(&model);
    emit(&a.common.out, &lp)?;
    let counts = format!(
        "binaries={} continuous={} rows={}",
        model.num_binaries(),
        model.num_continuous(),
        model.rows().len()
    );
    if a.common.out.is_some() {
        println!("{counts}");
    } else {
        eprintln!("{counts}");
    }
    Ok(0)
}

fn cmd_gen(a: GenArgs) -> Result<u8> {
    let inst = random_euclidean_instance(a.n, a.seed, a.side)?;
    let text = inst.to_points_json().expect("generated instances carry points");
    emit(&a.out, &text)?;
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Result<u8> {
    let inst = load(&a.instance, a.common.depot)?;
    let r = brute_force_with_cap(&inst, a.k, a.cap)?;
    emit(&a.common.out, &record_text(&r.to_record()))?;
    Ok(0)
}
