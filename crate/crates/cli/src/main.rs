use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sorkin_core::campaign::{
    aggregate_campaign, analyze_raw_set, emit_results, raw_dir, read_summary, run_campaign,
    theory_orders, CampaignSummary, ExperimentConfig, RegimeSelection, SetResult,
};
use sorkin_core::gtable::fmt_f64;
use sorkin_core::hierarchy::expanded_formula;
use sorkin_core::PhaseGrid;

#[derive(Parser)]
#[command(
    name = "sorkin",
    version,
    about = "Many-particle higher-order interference in a five-slit setup"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "SORKIN_OUTPUT_DIR", default_value = "sorkin-output")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Ideal interference orders and Sorkin parameters.
    Theory {
        #[command(flatten)]
        common: Common,
        /// Grid points over [-3π, 3π].
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Simulate a randomized measurement campaign and analyze it.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        regime: Option<RegimeSelection>,
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// 120 s per configuration and 250 frames of 850 rows.
        #[arg(long)]
        paper_scale: bool,
        /// Keep time-tag and frame files under OUT/raw.
        #[arg(long)]
        write_raw: bool,
    },
    /// Analyze raw time-tag or frame files written by `simulate --write-raw`.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory holding set_NNNN folders (default: OUT/raw).
        #[arg(long)]
        raw: Option<PathBuf>,
        #[arg(long)]
        regime: Option<RegimeSelection>,
    },
    /// Compare the two ABCDE patterns of each raw set.
    CheckAlignment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        raw: Option<PathBuf>,
        #[arg(long)]
        regime: Option<RegimeSelection>,
        /// Only this set.
        #[arg(long)]
        set: Option<usize>,
    },
    /// Print a summary written by `simulate` or `analyze`.
    Report {
        #[command(flatten)]
        common: Common,
        /// Summary file (default: OUT/summary.json).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn load_config(common: &Common, paper_scale: bool) -> Result<ExperimentConfig> {
    match &common.config {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None if paper_scale => Ok(ExperimentConfig::paper_scale()),
        None => Ok(ExperimentConfig::desk()),
    }
}

fn theory(common: &Common, points: usize) -> Result<()> {
    let config = load_config(common, false)?;
    let setup = config.interferometer()?;
    let grid = PhaseGrid::uniform(-3.0 * PI, 3.0 * PI, points)?;
    let orders = theory_orders(&setup, &grid)?;
    let zero = grid
        .zero_index()
        .context("use an odd number of points so the grid contains δ = 0")?;

    fs::create_dir_all(&common.out).with_context(|| common.out.display().to_string())?;
    let mut csv = String::from("m,n,base,delta,value\n");
    for o in &orders {
        for (d, v) in grid.values().iter().zip(&o.normalized) {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                o.order,
                o.slits,
                o.base,
                fmt_f64(*d),
                fmt_f64(*v)
            ));
        }
    }
    let path = common.out.join("theory_curves.csv");
    fs::write(&path, csv).with_context(|| path.display().to_string())?;

    for o in &orders {
        println!("{}", expanded_formula(o.order, o.base)?);
        println!("    normalized at δ = 0: {:.12}", o.normalized[zero]);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn print_summary(summary: &CampaignSummary) {
    for r in &summary.regimes {
        println!("{} regime, {} sets", r.regime.tag(), r.sets);
        for (name, k) in [("kappa1", &r.kappa1), ("kappa2", &r.kappa2)] {
            println!(
                "  {name}: mean {:.4e}  sd {}  stderr {}  mean sigma {:.4e}",
                k.mean,
                k.std_dev.map_or("-".into(), |v| format!("{v:.4e}")),
                k.std_error.map_or("-".into(), |v| format!("{v:.4e}")),
                k.mean_sigma
            );
        }
        for o in &r.orders {
            match &o.stats {
                Some(s) => println!(
                    "  I({})_{} [{}]: {:.5} ± {:.5} (theory {:.5}, {} sets)",
                    o.m,
                    o.n,
                    o.base,
                    s.mean,
                    s.std_dev.unwrap_or(s.mean_sigma),
                    o.theory,
                    s.count
                ),
                None => println!("  I({})_{} [{}]: undefined in every set", o.m, o.n, o.base),
            }
        }
        println!(
            "  alignment: {:.1}% of sets pass, worst deviation {:.3e}",
            100.0 * r.alignment_pass_fraction,
            r.max_alignment_deviation
        );
    }
}

fn finish(config: &ExperimentConfig, sets: &[SetResult], out: &Path) -> Result<()> {
    let setup = config.interferometer()?;
    let summary = aggregate_campaign(sets, &setup)?;
    emit_results(&summary, sets, &setup, out)?;
    let path = out.join("config.toml");
    fs::write(&path, config.to_toml()?).with_context(|| path.display().to_string())?;
    print_summary(&summary);
    println!("results in {}", out.display());
    Ok(())
}

fn raw_sets(root: &Path) -> Result<Vec<usize>> {
    let mut sets = Vec::new();
    let entries = fs::read_dir(root).with_context(|| format!("reading {}", root.display()))?;
    for e in entries {
        let name = e?.file_name();
        if let Some(n) = name.to_str().and_then(|s| s.strip_prefix("set_")) {
            sets.push(
                n.parse::<usize>()
                    .with_context(|| format!("bad set folder {n}"))?,
            );
        }
    }
    sets.sort_unstable();
    if sets.is_empty() {
        bail!("no set_NNNN folders in {}", root.display());
    }
    Ok(sets)
}

fn analyze_all(
    config: &ExperimentConfig,
    root: &Path,
    only: Option<usize>,
) -> Result<Vec<SetResult>> {
    let mut out = Vec::new();
    for regime in config.regime.regimes() {
        for set in raw_sets(root)? {
            if only.is_some_and(|o| o != set) || !raw_dir(root, regime, set).is_dir() {
                continue;
            }
            out.push(analyze_raw_set(root, regime, set, config)?);
        }
    }
    if out.is_empty() {
        bail!("no raw data found under {}", root.display());
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory { common, points } => theory(&common, points),
        Command::Simulate {
            common,
            regime,
            sets,
            seed,
            paper_scale,
            write_raw,
        } => {
            let mut config = load_config(&common, paper_scale)?;
            if let Some(r) = regime {
                config.regime = r;
            }
            if let Some(n) = sets {
                config.sets = n;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            config.validate()?;
            let raw = common.out.join("raw");
            let sets = run_campaign(&config, write_raw.then_some(raw.as_path()))?;
            finish(&config, &sets, &common.out)
        }
        Command::Analyze {
            common,
            raw,
            regime,
        } => {
            let mut config = load_config(&common, false)?;
            if let Some(r) = regime {
                config.regime = r;
            }
            let root = raw.unwrap_or_else(|| common.out.join("raw"));
            let sets = analyze_all(&config, &root, None)?;
            finish(&config, &sets, &common.out)
        }
        Command::CheckAlignment {
            common,
            raw,
            regime,
            set,
        } => {
            let mut config = load_config(&common, false)?;
            if let Some(r) = regime {
                config.regime = r;
            }
            let root = raw.unwrap_or_else(|| common.out.join("raw"));
            let sets = analyze_all(&config, &root, set)?;
            let mut failed = 0;
            for s in &sets {
                let a = &s.alignment;
                println!(
                    "set {:4} {:9} deviation {:.3e} {}",
                    s.set_index,
                    s.regime.tag(),
                    a.deviation,
                    if a.passed { "pass" } else { "FAIL" }
                );
                failed += usize::from(!a.passed);
            }
            if failed > 0 {
                bail!("{failed} of {} sets failed the alignment check", sets.len());
            }
            Ok(())
        }
        Command::Report { common, summary } => {
            let path = summary.unwrap_or_else(|| common.out.join("summary.json"));
            print_summary(&read_summary(&path)?);
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    run(cli)
}
