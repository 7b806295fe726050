use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noisesync::config::{preset, ExperimentConfig};
use noisesync::experiment::{self, render_dfs_report};
use noisesync::format::sig9;
use noisesync::mems::{mems_reference, render_table};
use noisesync::{Error, Result};

/// Noise-induced synchronization in open XY spin chains.
#[derive(Parser)]
#[command(name = "noisesync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (dotted-key TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in preset, e.g. paper-5q.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration; write metrics.csv and summary.json.
    Simulate,
    /// Scan the (gamma, delta) grid; write sweep.csv.
    Sweep,
    /// Check the synchronization conditions of a chain.
    DfsCheck {
        #[arg(long)]
        n_sites: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        noise_sites: Option<Vec<usize>>,
    },
    /// Print the closed-form edge state for a chain length.
    Mems {
        #[arg(long)]
        n_sites: Option<usize>,
    },
    /// Export the synthesized noise ensemble of every noise site.
    NoiseGen,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("--config and --preset are mutually exclusive".into())),
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => preset("paper-5q")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match &cli.command {
        Command::Simulate => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cli.workers)
                .build_global()
                .map_err(|e| Error::Config(format!("--workers: {e}")))?;
            let run = experiment::run_single(&cfg)?;
            experiment::write_single(&run, &out)?;
            let s = &run.summary;
            println!("{}: N = {}, sector dimension {}", s.name, s.n_sites, s.sector_dim);
            for p in &s.pearson {
                let v = p.value.map_or("undefined".into(), sig9);
                println!("  C{}{} at Jt = {}: {v}", p.sites[0], p.sites[1], sig9(s.probe.jt));
            }
            println!("  concurrence {}, purity {}", sig9(s.probe.concurrence), sig9(s.probe.purity));
            println!("  sync conditions {}", if s.sync.satisfied { "satisfied" } else { "violated" });
            println!("wrote {}", out.display());
        }
        Command::Sweep => {
            let grid = experiment::run_sweep(&cfg, cli.workers)?;
            experiment::write_sweep(&grid, &out)?;
            let failed = grid.cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} cells ({failed} failed); wrote {}", grid.cells.len(), out.join("sweep.csv").display());
        }
        Command::DfsCheck { n_sites, noise_sites } => {
            let mut cfg = cfg;
            if let Some(n) = n_sites {
                cfg.chain.n_sites = *n;
            }
            if let Some(u) = noise_sites {
                cfg.chain.noise_sites = u.clone();
            }
            let spec = cfg.chain_spec()?;
            let report = experiment::dfs_report(&spec)?;
            print!("{}", render_dfs_report(&report));
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let mut f = std::fs::File::create(dir.join("dfs.json"))?;
                serde_json::to_writer_pretty(&mut f, &report)?;
                writeln!(f)?;
            }
        }
        Command::Mems { n_sites } => {
            let r = mems_reference(n_sites.unwrap_or(cfg.chain.n_sites))?;
            print!("{}", render_table(&r));
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let mut f = std::fs::File::create(dir.join(format!("mems_{}.csv", r.n_sites)))?;
                writeln!(f, "key,value")?;
                let m = r.matrix.matrix();
                for row in 0..4 {
                    for col in 0..4 {
                        writeln!(f, "m{row}{col},{}", sig9(m[(row, col)].re))?;
                    }
                }
                for (k, v) in [
                    ("p1", r.params.p1),
                    ("p2", r.params.p2),
                    ("p3", r.params.p3),
                    ("p4", r.params.p4),
                    ("concurrence", r.concurrence),
                    ("purity", r.purity),
                    ("initial_overlap", r.initial_overlap),
                ] {
                    writeln!(f, "{k},{}", sig9(v))?;
                }
            }
        }
        Command::NoiseGen => {
            for e in experiment::noise_gen(&cfg, &out)? {
                println!(
                    "site {}: {} samples, variance {} (target {}), skewness {}",
                    e.site,
                    e.stats.samples,
                    sig9(e.stats.variance),
                    sig9(e.target_variance),
                    sig9(e.stats.skewness)
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
