use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use data_pricing::discretization::{build_space, GridParams, Scheme};
use data_pricing::harness::{
    prepare, run_adversarial_prepared, run_stochastic_prepared, sweep, sweep_means, write_run, write_sweep,
    ExperimentConfig, Prepared, RunOutput,
};
use data_pricing::offline::{best_in_space, brute_force_opt};
use data_pricing::{PricingError, Result};

#[derive(Parser)]
#[command(name = "data-pricing", version, about = "Pricing experiments for data sold by amount")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Overrides the seed list of the config with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SchemeArg {
    Monotone,
    Smooth,
    Diminishing,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Monotone => Scheme::Monotone,
            SchemeArg::Smooth => Scheme::Smooth,
            SchemeArg::Diminishing => Scheme::Diminishing,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grid sizes, exact space size and the closed-form bound.
    Discretize {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "L")]
        smoothness: Option<f64>,
        #[arg(long = "J")]
        diminishing: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Best curve of the configured space under the stochastic distribution.
    OfflineOpt {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force optimum against the best curve of the space.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        resolution: f64,
        #[command(flatten)]
        common: Common,
    },
    /// UCB runs against stochastic buyers.
    SimulateStochastic {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// FTPL runs against an oblivious adversary.
    SimulateAdversarial {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Every (horizon, seed) pair of the [sweep] section.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.run.seeds = vec![seed];
        if let Some(s) = cfg.sweep.as_mut() {
            s.seeds = None;
        }
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| PricingError::Io(e.to_string()))
}

fn save(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), format!("{text}\n"))?;
    }
    Ok(())
}

fn discretize(
    scheme: Scheme,
    eps: f64,
    m: usize,
    n: usize,
    smoothness: Option<f64>,
    diminishing: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let mut params = GridParams::new(eps, m, n);
    if let Some(l) = smoothness {
        params = params.with_smoothness(l);
    }
    if let Some(j) = diminishing {
        params = params.with_diminishing(j);
    }
    let report = build_space(&params, scheme)?.size_report();
    println!("scheme={} eps={eps} m={m} N={n}", scheme.name());
    println!("|W|={}", report.value_grid_len);
    println!("data_grid={}", report.data_grid_len);
    println!("exact_count={}", report.exact_count.as_deref().unwrap_or("overflow"));
    println!("size_bound={:e}", report.size_bound);
    save(out, "discretize.json", &to_json(&report)?)
}

fn offline_opt(prep: &Prepared, out: Option<&Path>) -> Result<()> {
    let q = prep.config.distribution()?;
    let best = best_in_space(prep.table.instance(), &q, prep.table.space())?;
    println!("space_size={}", prep.table.num_curves());
    println!("best_index={}", best.index);
    println!("revenue={}", best.revenue);
    println!("boundaries={:?}", best.curve.boundaries());
    println!("values={:?}", best.curve.values());
    save(out, "offline_opt.json", &to_json(&best)?)
}

fn oracle_check(prep: &Prepared, resolution: f64, out: Option<&Path>) -> Result<()> {
    let q = prep.config.distribution()?;
    let instance = prep.table.instance();
    let oracle = brute_force_opt(instance, &q, resolution)?;
    let best = best_in_space(instance, &q, prep.table.space())?;
    let eps = prep.epsilon;
    let allowed = 2.0 * eps / (1.0 + eps) + resolution;
    let gap = oracle.revenue - best.revenue;
    let report = serde_json::json!({
        "epsilon": eps,
        "resolution": resolution,
        "oracle_revenue": oracle.revenue,
        "space_revenue": best.revenue,
        "gap": gap,
        "allowed_gap": allowed,
        "within": gap <= allowed + 1e-9,
    });
    println!("oracle_revenue={}", oracle.revenue);
    println!("space_revenue={}", best.revenue);
    println!("gap={gap}");
    println!("allowed_gap={allowed}");
    println!("within={}", gap <= allowed + 1e-9);
    save(out, "oracle_check.json", &to_json(&report)?)
}

fn simulate(cfg: &ExperimentConfig, adversarial: bool) -> Result<()> {
    let prep = prepare(cfg, cfg.run.horizon)?;
    println!("seed,space_size,benchmark,total_revenue,final_regret");
    for &seed in &cfg.run.seeds {
        let run: RunOutput = if adversarial {
            run_adversarial_prepared(&prep, seed)?
        } else {
            run_stochastic_prepared(&prep, seed)?
        };
        write_run(&run, &cfg.output.dir)?;
        let s = &run.summary;
        println!(
            "{seed},{},{},{},{}",
            s.space_size, s.benchmark.value, s.total_revenue, s.final_regret
        );
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let rows = sweep(cfg)?;
    write_sweep(&rows, Path::new(&cfg.output.dir).join("sweep.csv"))?;
    println!("horizon,runs,mean_regret,ratio");
    for m in sweep_means(&rows) {
        let ratio = m.ratio.map(|r| r.to_string()).unwrap_or_default();
        println!("{},{},{},{ratio}", m.horizon, m.runs, m.mean_regret);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Discretize {
            scheme,
            eps,
            m,
            n,
            smoothness,
            diminishing,
            common,
        } => discretize(scheme.into(), eps, m, n, smoothness, diminishing, common.out.as_deref()),
        Command::OfflineOpt { config, common } => {
            let cfg = load(&config, &common)?;
            offline_opt(&prepare(&cfg, cfg.run.horizon)?, common.out.as_deref())
        }
        Command::OracleCheck {
            config,
            resolution,
            common,
        } => {
            let cfg = load(&config, &common)?;
            oracle_check(&prepare(&cfg, cfg.run.horizon)?, resolution, common.out.as_deref())
        }
        Command::SimulateStochastic { config, common } => simulate(&load(&config, &common)?, false),
        Command::SimulateAdversarial { config, common } => simulate(&load(&config, &common)?, true),
        Command::Sweep { config, common } => run_sweep(&load(&config, &common)?),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let msg: Vec<&str> = text.lines().take_while(|l| !l.trim().is_empty()).collect();
            eprintln!("error[usage]: {}", one_line(msg.join(" ").trim_start_matches("error: ")));
            if let Some(usage) = text.lines().find(|l| l.starts_with("Usage:")) {
                eprintln!("{usage}");
            }
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
