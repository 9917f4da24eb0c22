//! Command-line interface: market simulation, regret experiments, the full
//! bound-verification report, and the penalty/rule conversion demo.
//!
//! Every flag can also come from a flat `key=value` config file passed with
//! `--config`; explicit command-line flags win on conflict.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use marketlearn::scoring::{penalty_from_rule, rule_from_penalty, ScoringRule};
use marketlearn::{make_log_rule, make_quadratic_rule, ProbVector, SplitMix64};
use marketlearn_bench::{
    run_experiment, run_simulate, verify_all, AlgoChoice, BenchError, ExperimentConfig, GenChoice,
    MarketChoice, RunStatus, SimulateConfig,
};

#[derive(Parser)]
#[command(
    name = "marketlearn",
    about = "Cost-function market makers, scoring rules, and no-regret learners, with every bound checked numerically"
)]
struct Cli {
    /// Flat key=value config file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded random trade session and write the market session CSV.
    Simulate {
        /// lmsr | quad
        #[arg(long)]
        market: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trades: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a learner against a loss generator; write the regret trace CSV
    /// and print the `final_regret,bound,status` summary line.
    Regret {
        /// wm | ogd | ftl | reduction
        #[arg(long)]
        algo: Option<String>,
        /// lmsr | quad (used by --algo reduction)
        #[arg(long)]
        market: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t: Option<usize>,
        /// alt | bernoulli | uniform | adaptive
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the tuned epsilon (or eta).
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Run the full bound-verification report; exit 0 iff every check passes.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Show the penalty induced by a scoring rule and the rule regenerated
    /// from it at sampled points (the conversion round trip).
    Convert {
        /// log-rule | quad-rule
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run() -> Result<i32, BenchError> {
    let cli = Cli::parse();
    let file_cfg = load_config(cli.config.as_deref())?;

    match cli.command {
        Command::Simulate {
            market,
            b,
            n,
            trades,
            seed,
            out,
        } => {
            let cfg = SimulateConfig {
                market: parse_market(&require(merge(market, &file_cfg, "market")?, "market")?)?,
                b: merge(b, &file_cfg, "b")?.unwrap_or(1.0),
                n: merge(n, &file_cfg, "n")?.unwrap_or(2),
                trades: require(merge(trades, &file_cfg, "trades")?, "trades")?,
                seed: merge(seed, &file_cfg, "seed")?.unwrap_or(0),
                out: require(merge(out, &file_cfg, "out")?, "out")?,
            };
            let summary = run_simulate(&cfg)?;
            let prices: Vec<String> = summary.final_prices.iter().map(|p| p.to_string()).collect();
            println!(
                "collected={} worst_loss={} prices={}",
                summary.collected,
                summary.worst_loss,
                prices.join(",")
            );
            Ok(0)
        }
        Command::Regret {
            algo,
            market,
            b,
            n,
            t,
            gen,
            seed,
            out,
            rate,
        } => {
            let cfg = ExperimentConfig {
                algo: parse_algo(&require(merge(algo, &file_cfg, "algo")?, "algo")?)?,
                market: parse_market(
                    &merge(market, &file_cfg, "market")?.unwrap_or_else(|| "lmsr".into()),
                )?,
                b: merge(b, &file_cfg, "b")?.unwrap_or(1.0),
                n: merge(n, &file_cfg, "n")?.unwrap_or(2),
                t: require(merge(t, &file_cfg, "t")?, "t")?,
                rate_override: merge(rate, &file_cfg, "rate")?,
                generator: parse_gen(
                    &merge(gen, &file_cfg, "gen")?.unwrap_or_else(|| "uniform".into()),
                )?,
                seed: merge(seed, &file_cfg, "seed")?.unwrap_or(0),
                out: merge(out, &file_cfg, "out")?,
            };
            let (summary, _) = run_experiment(&cfg)?;
            println!("{}", summary.line());
            Ok(if summary.status == RunStatus::Fail {
                1
            } else {
                0
            })
        }
        Command::Verify { seed } => {
            let seed = merge(seed, &file_cfg, "seed")?.unwrap_or(0);
            let report = verify_all(seed)?;
            print!("{}", report.render());
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Convert { from, b, n } => {
            let from = require(merge(from, &file_cfg, "from")?, "from")?;
            let b = merge(b, &file_cfg, "b")?.unwrap_or(1.0);
            let n = merge(n, &file_cfg, "n")?.unwrap_or(3);
            let rule = parse_rule(&from, b)?;
            print_conversion(&rule, n)?;
            Ok(0)
        }
    }
}

fn print_conversion(rule: &ScoringRule, n: usize) -> Result<(), BenchError> {
    let alpha = penalty_from_rule(rule);
    let back = rule_from_penalty(&alpha)?;
    println!("penalty: {alpha:?}");
    println!("point | alpha(p) | scores s_i(p) | regenerated scores | max gap");
    let mut rng = SplitMix64::new(1);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let p = ProbVector::new(rng.simplex_point(n, 0.02))?;
        let original = rule.scores(&p);
        let regen = back.scores(&p);
        let gap = original
            .iter()
            .zip(regen.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!(
            "[{}] | {:.6} | [{}] | [{}] | {gap:.3e}",
            fmt(p.as_slice()),
            alpha.value(p.as_slice()),
            fmt(&original),
            fmt(&regen),
        );
    }
    println!("round_trip_max_gap={worst:.3e}");
    Ok(())
}

fn load_config(path: Option<&std::path::Path>) -> Result<HashMap<String, String>, BenchError> {
    let mut map = HashMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
            None => {
                return Err(BenchError::Config(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    Ok(map)
}

/// Command-line value if present, else the config-file value.
fn merge<T: FromStr>(
    cli: Option<T>,
    cfg: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, BenchError> {
    if cli.is_some() {
        return Ok(cli);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| BenchError::Config(format!("config key {key}: cannot parse {raw:?}"))),
        None => Ok(None),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, BenchError> {
    value.ok_or_else(|| BenchError::Config(format!("missing required flag --{flag}")))
}

fn parse_market(s: &str) -> Result<MarketChoice, BenchError> {
    match s {
        "lmsr" => Ok(MarketChoice::Lmsr),
        "quad" => Ok(MarketChoice::Quad),
        other => Err(BenchError::Config(format!(
            "unknown market {other:?} (expected lmsr or quad)"
        ))),
    }
}

fn parse_algo(s: &str) -> Result<AlgoChoice, BenchError> {
    match s {
        "wm" => Ok(AlgoChoice::Wm),
        "ogd" => Ok(AlgoChoice::Ogd),
        "ftl" => Ok(AlgoChoice::Ftl),
        "reduction" => Ok(AlgoChoice::Reduction),
        other => Err(BenchError::Config(format!(
            "unknown algo {other:?} (expected wm, ogd, ftl, or reduction)"
        ))),
    }
}

fn parse_gen(s: &str) -> Result<GenChoice, BenchError> {
    match s {
        "alt" => Ok(GenChoice::Alt),
        "bernoulli" => Ok(GenChoice::Bernoulli),
        "uniform" => Ok(GenChoice::Uniform),
        "adaptive" => Ok(GenChoice::Adaptive),
        other => Err(BenchError::Config(format!(
            "unknown generator {other:?} (expected alt, bernoulli, uniform, or adaptive)"
        ))),
    }
}

fn parse_rule(s: &str, b: f64) -> Result<ScoringRule, BenchError> {
    match s {
        "log-rule" => Ok(make_log_rule(b)?),
        "quad-rule" => Ok(make_quadratic_rule(b)?),
        other => Err(BenchError::Config(format!(
            "unknown rule {other:?} (expected log-rule or quad-rule)"
        ))),
    }
}
