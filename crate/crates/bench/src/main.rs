use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbm_bench::config::RunConfig;
use lbm_bench::output::write_run;
use lbm_bench::{run, scenario_catalog, BenchError};
use lbm_core::diagnostics::critical_dt_check;

#[derive(Parser)]
#[command(name = "lbm-bench", version, about = "Run lattice Boltzmann benchmark scenarios and audit their solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// List the scenario catalog.
    List,
    /// Check the time step against dx^2 / (6 D).
    Check {
        #[arg(long)]
        dx: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long = "D")]
        d: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file with flat `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, conflicts_with_all = ["dx", "dt"])]
    case: Option<usize>,
    #[arg(long, requires = "dt")]
    dx: Option<f64>,
    #[arg(long, requires = "dx")]
    dt: Option<f64>,
    /// Dirichlet discretization: standard or weighted_split.
    #[arg(long)]
    bc: Option<String>,
    /// Output directory (default: $LBM_BENCH_OUT/<run> or runs/<run>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Obstacle mask file for S7.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Advance the S7 flow together with the species.
    #[arg(long)]
    coevolve: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, BenchError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let over = RunConfig {
            scenario: self.scenario,
            case: self.case,
            dx: self.dx,
            dt: self.dt,
            bc: self.bc,
            out: self.out,
            sample_every: self.sample_every,
            threads: self.threads,
            mask: self.mask,
            coevolve: self.coevolve.then_some(true),
        };
        Ok(base.merge(over))
    }
}

fn run_command(args: RunArgs) -> Result<bool, BenchError> {
    let cfg = args.into_config()?;
    let req = cfg.to_request()?;
    let dir = cfg.out_dir()?;
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| run(&req))?;
    let files = write_run(&out, &dir)?;

    println!("{} {} ({}, {})", out.scenario, out.title, out.method, out.lattice);
    println!(
        "dx = {:e}, dt = {:e}, bc = {}, steps = {}, t = {}",
        out.case.dx,
        out.case.dt,
        out.bc.name(),
        out.steps,
        out.end_time
    );
    for s in &out.series {
        if let Some(last) = s.report.last() {
            println!(
                "  {}: u_min = {:e}, u_max = {:e}, N_neg = {}/{}",
                s.name, last.u_min, last.u_max, last.n_neg, s.report.n
            );
        }
        let v = &s.report.verdicts;
        for (name, verdict) in [
            ("maximum principle", &v.maximum_principle),
            ("non-negativity", &v.non_negativity),
            ("decay", &v.decay),
        ] {
            if let Some(verdict) = verdict {
                println!("    {name}: {verdict}");
            }
        }
    }
    for c in &out.comparisons {
        println!("  comparison {} <= {}: {}", c.lower, c.upper, c.verdict);
    }
    for n in &out.notes {
        println!("  note: {n}");
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(out.violated())
}

fn main() -> ExitCode {
    // usage errors exit 1 so that 2 keeps meaning "violations found"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::List => {
            for sc in scenario_catalog() {
                let cases: Vec<String> = sc.cases.iter().map(|c| format!("({:e}, {:e})", c.dx, c.dt)).collect();
                println!("{}  {:?}/{:?}  T = {}  {}", sc.id, sc.method, sc.lattice, sc.end_time, sc.title);
                println!("    cases (dx, dt): {}", cases.join(" "));
            }
            Ok(false)
        }
        Command::Check { dx, dt, d } => critical_dt_check(dx, dt, d).map_err(BenchError::from).map(|c| {
            println!("threshold dx^2/(6D) = {:e}", c.threshold);
            println!("dt = {dt:e} {}", if c.satisfied { "satisfies it" } else { "is below it" });
            false
        }),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
