use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use entsched_core::agents::{load_checkpoint, save_checkpoint, train, Model, Net};
use entsched_core::harness::{
    compare_strategies, paired_test, read_results_csv, run_batch, run_sweep, summarize_results, write_results_csv,
    write_sweep_csv, BatchSpec, EpisodeFactory, PreinfoSource, SweepAxis, SweepSpec,
};
use entsched_core::preinfo::preinfo_from_qmcs_csv;
use entsched_core::rng::derive_seed;
use entsched_core::{generate_preinfo, Config, PreInfo, StrategyConfig, StrategyKind};
use entsched_qmcs::{run_bk, BkConfig};

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "entsched", version, about = "Entanglement scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample pre-information (fidelity and success probability per pair).
    GenPreinfo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_qubits: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a batch of episodes with one strategy.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<StrategyKind>,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Use this pre-information file for every episode.
        #[arg(long)]
        preinfo: Option<PathBuf>,
        /// `i,j,F,R,C,branch` table from `qmcs`; pairs it lacks are sampled.
        #[arg(long, conflicts_with = "preinfo")]
        qmcs_csv: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a learned scheduler and write its checkpoint.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch history as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Start from these weights instead of a fresh initialisation.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Evaluate a checkpoint against greedy on common environments.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Batches over a parameter axis and a set of strategies.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `sigma_fidelity` or `n_qubits`.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "random,mst,greedy")]
        strategies: Vec<StrategyKind>,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Per-episode results CSV.
        #[arg(long)]
        out: PathBuf,
        /// Per-row summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Record wall time per episode; off keeps reruns byte-identical.
        #[arg(long)]
        wall_time: bool,
    },
    /// Quantum-jump simulation of heralded entanglement for a list of pairs.
    Qmcs {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pairs as `i-j`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0-1")]
        pairs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summary statistics of a results CSV, optionally paired against another.
    Stats {
        results: PathBuf,
        /// Baseline results with the same episode seeds, in the same order.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Fraction of `N_q` spanned by the histogram.
        #[arg(long, default_value_t = 0.75)]
        stop_fraction: f64,
    },
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    StrategyKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown strategy {s:?}; expected one of {}", names.join(", "))
    })
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

fn writer(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn model_for(kind: StrategyKind, ckpt: Option<&Path>) -> CliResult<Option<Model>> {
    match (kind.needs_model(), ckpt) {
        (true, Some(p)) => Ok(Some(load_checkpoint(p)?)),
        (true, None) => Err(format!("strategy {kind} needs --ckpt").into()),
        (false, _) => Ok(None),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenPreinfo { config, n_qubits, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut gen = cfg.gen;
            if let Some(s) = seed {
                gen.rng_seed = s;
            }
            let pre = generate_preinfo(&gen, n_qubits.unwrap_or(cfg.sim.n_qubits))?;
            pre.save(&out)?;
        }
        Command::Simulate { config, strategy, ckpt, preinfo, qmcs_csv, episodes, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let kind = strategy.unwrap_or(cfg.strategy.kind);
            let source = if let Some(p) = preinfo {
                PreinfoSource::Fixed(Arc::new(PreInfo::load(&p)?))
            } else if let Some(p) = qmcs_csv {
                PreinfoSource::Fixed(Arc::new(preinfo_from_qmcs_csv(File::open(p)?, cfg.sim.n_qubits, &cfg.gen)?))
            } else {
                PreinfoSource::Generate(cfg.gen)
            };
            let factory = EpisodeFactory::new(cfg.sim, source);
            let model = model_for(kind, ckpt.as_deref())?;
            let spec = BatchSpec {
                factory: &factory,
                strategy: StrategyConfig { kind, ..cfg.strategy },
                model: model.as_ref(),
                mixing_weight: cfg.train.mixing_weight,
                n_episodes: episodes.unwrap_or(cfg.batch.n_episodes),
                base_seed: seed.unwrap_or(cfg.batch.base_seed),
                parallel: true,
            };
            let results = run_batch(&spec)?;
            if let Some(p) = out.as_deref() {
                write_results_csv(&results, true, writer(Some(p))?)?;
            }
            print_json(&summarize_results(&results, cfg.sim.stop_fraction)?)?;
        }
        Command::Train { config, out, history, init } => {
            let cfg = load_config(config.as_deref())?;
            let net = match init {
                Some(p) => Net::from_model(&load_checkpoint(p)?),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.train.rng_seed, "init", 0));
                    Net::new(&cfg.model, cfg.sim.n_qubits, &mut rng)?
                }
            };
            let factory = EpisodeFactory::new(cfg.sim, PreinfoSource::Generate(cfg.gen));
            let mut log = match history.as_deref() {
                Some(p) => {
                    let mut w = writer(Some(p))?;
                    writeln!(w, "epoch,mean_mu,loss,running_mu")?;
                    Some(w)
                }
                None => None,
            };
            let mut io_err = None;
            let outcome = train(&factory, &cfg.strategy, net, &cfg.train, &mut |s| {
                if let Some(w) = log.as_mut() {
                    if let Err(e) = writeln!(w, "{},{},{},{}", s.epoch, s.mean_mu, s.loss, s.running_mu) {
                        io_err.get_or_insert(e);
                    }
                }
                if s.epoch % 50 == 0 {
                    eprintln!("epoch {:>5}  mu {:.3}  running {:.3}  loss {:.3e}", s.epoch, s.mean_mu, s.running_mu, s.loss);
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            if let Some(mut w) = log {
                w.flush()?;
            }
            save_checkpoint(&outcome.best.to_model(), &out)?;
            eprintln!("kept epoch {} with running mu {:.3}", outcome.best_epoch, outcome.best_running_mu);
        }
        Command::Evaluate { ckpt, config, episodes, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let model = load_checkpoint(&ckpt)?;
            let kind = train::strategy_for(model.variant());
            let factory = EpisodeFactory::new(cfg.sim, PreinfoSource::Generate(cfg.gen));
            let batch = |kind: StrategyKind, model: Option<&Model>| {
                run_batch(&BatchSpec {
                    factory: &factory,
                    strategy: StrategyConfig { kind, ..cfg.strategy },
                    model,
                    mixing_weight: cfg.train.mixing_weight,
                    n_episodes: episodes.unwrap_or(cfg.batch.n_episodes),
                    base_seed: seed.unwrap_or(cfg.batch.base_seed),
                    parallel: true,
                })
            };
            let learned = batch(kind, Some(&model))?;
            let greedy = batch(StrategyKind::Greedy, None)?;
            if let Some(p) = out.as_deref() {
                let mut all = learned.clone();
                all.extend(greedy.iter().cloned());
                write_results_csv(&all, true, writer(Some(p))?)?;
            }
            let s_learned = summarize_results(&learned, cfg.sim.stop_fraction)?;
            let s_greedy = summarize_results(&greedy, cfg.sim.stop_fraction)?;
            let (delta, gain) = compare_strategies(&s_greedy, &s_learned);
            let mu = |r: &[entsched_core::harness::EpisodeResult]| r.iter().map(|x| x.mu_peak).collect::<Vec<_>>();
            let test = paired_test(&mu(&greedy), &mu(&learned))?;
            print_json(&serde_json::json!({
                "strategy": kind.name(),
                "learned": s_learned,
                "greedy": s_greedy,
                "delta_mu": delta,
                "two_pow_delta_mu": gain,
                "paired_test": test,
            }))?;
        }
        Command::Sweep { config, axis, values, strategies, ckpt, out, summary, wall_time } => {
            let cfg = load_config(config.as_deref())?;
            let axis = SweepAxis::parse(&axis).ok_or_else(|| format!("unknown sweep axis {axis:?}"))?;
            let model = match strategies.iter().find(|k| k.needs_model()) {
                Some(&k) => model_for(k, ckpt.as_deref())?,
                None => None,
            };
            let spec = SweepSpec {
                axis,
                values,
                strategies,
                sim: cfg.sim,
                gen: cfg.gen,
                strategy: cfg.strategy,
                n_episodes: cfg.batch.n_episodes,
                base_seed: cfg.batch.base_seed,
                model: model.as_ref(),
                mixing_weight: cfg.train.mixing_weight,
            };
            let (results, rows) = run_sweep(&spec)?;
            write_results_csv(&results, wall_time, writer(Some(&out))?)?;
            write_sweep_csv(&rows, writer(summary.as_deref())?)?;
        }
        Command::Qmcs { config, pairs, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut results = BTreeMap::new();
            for p in &pairs {
                let (i, j) = p
                    .split_once('-')
                    .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| format!("pair {p:?} is not of the form i-j"))?;
                if i == j {
                    return Err(format!("pair {p:?} joins a qubit to itself").into());
                }
                let (i, j) = (i.min(j), i.max(j));
                let bk = BkConfig { seed: derive_seed(cfg.qmcs.seed, "pair", (i * 1_000_003 + j) as u64), ..cfg.qmcs };
                eprintln!("pair {i}-{j}");
                results.insert((i, j), run_bk(&bk)?);
            }
            let mut w = csv::Writer::from_writer(writer(Some(&out))?);
            w.write_record(["i", "j", "F", "R", "C", "branch"])?;
            for ((i, j), r) in &results {
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    r.fidelity().to_string(),
                    r.rate().to_string(),
                    r.cost.to_string(),
                    r.chosen_branch.number().to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::Stats { results, against, stop_fraction } => {
            let a = read_results_csv(File::open(&results)?)?;
            let sa = summarize_results(&a, stop_fraction)?;
            match against {
                None => print_json(&sa)?,
                Some(p) => {
                    let b = read_results_csv(File::open(p)?)?;
                    if a.iter().zip(&b).any(|(x, y)| x.seed != y.seed) || a.len() != b.len() {
                        return Err("paired results must list the same episode seeds in the same order".into());
                    }
                    let sb = summarize_results(&b, stop_fraction)?;
                    let (delta, gain) = compare_strategies(&sb, &sa);
                    let mu = |r: &[entsched_core::harness::EpisodeResult]| r.iter().map(|x| x.mu_peak).collect::<Vec<_>>();
                    print_json(&serde_json::json!({
                        "results": sa,
                        "baseline": sb,
                        "delta_mu": delta,
                        "two_pow_delta_mu": gain,
                        "paired_test": paired_test(&mu(&b), &mu(&a))?,
                    }))?;
                }
            }
        }
    }
    Ok(())
}
