use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skyrmion_core::harness::{self, ExperimentConfig, ExperimentKind, RunOutput};
use skyrmion_core::oracle::{residual_table, OracleFamily};

#[derive(Parser)]
#[command(name = "skyrmion", version, about = "Skyrmion numbers of two-photon states under local noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single state through one channel; prints N and optionally dumps fields.
    Simulate(RunArgs),
    /// Clean vs noisy N for every target winding.
    Table(RunArgs),
    /// N against a constant noise probability p.
    Sweep(RunArgs),
    /// N along the identity → retarder/diattenuator deformation.
    Homotopy(RunArgs),
    /// Topology table through a depolarizer saturating outside a disc.
    Compactify(RunArgs),
    /// Pipeline vs closed-form Stokes residuals for the (1, 12) state.
    Oracle(OracleArgs),
    /// CPTP classification and invariant checks.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fixed reduction order and zeroed wall times (byte-stable CSV).
    #[arg(long)]
    deterministic: bool,
    /// Overrides nx and ny.
    #[arg(long)]
    resolution: Option<usize>,
    /// Write SKGF snapshots of the unit Stokes field and Skyrmion density.
    #[arg(long)]
    dump_fields: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn load(args: &RunArgs, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(kind) = experiment {
        cfg.run.experiment = kind;
    }
    if args.deterministic {
        cfg.run.deterministic = true;
    }
    if let Some(n) = args.resolution {
        cfg.grid.nx = n;
        cfg.grid.ny = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_snapshots(out: &RunOutput, dir: &Path) -> Result<()> {
    for snap in &out.snapshots {
        for (name, dump) in &snap.dumps {
            let path = dir.join(format!("{}_{}.skgf", snap.label, name));
            dump.write_file(&path).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn run_experiment(args: &RunArgs, kind: ExperimentKind) -> Result<()> {
    let cfg = load(args, Some(kind))?;
    fs::create_dir_all(&args.out)?;
    let out = harness::run(&cfg, args.dump_fields)?;
    let csv_name = cfg.run.csv.clone().unwrap_or_else(|| format!("{}.csv", cfg.experiment_id()));
    let csv_path = args.out.join(csv_name);
    out.result.write_csv_file(&csv_path)?;
    write_snapshots(&out, &args.out)?;
    println!("{:>10} {:>4} {:>4} {:>12} {:>12} {:>8}", "value", "l1", "l2", "N_initial", "N_final", "valid");
    for r in &out.result.rows {
        println!(
            "{:>10.4} {:>4} {:>4} {:>12.6} {:>12.6} {:>8.4}{}",
            r.sweep_value,
            r.l1,
            r.l2,
            r.n_initial,
            r.n_final,
            r.valid_fraction,
            if r.boundary_phi.is_nan() {
                String::new()
            } else {
                format!("  boundary_phi={:.4}", r.boundary_phi)
            }
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let rows = residual_table(args.samples, args.seed);
    let path = args.out.join("oracle.csv");
    harness::write_oracle_csv(&rows, fs::File::create(&path)?)?;
    for family in OracleFamily::ALL {
        let worst = rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.relative_error)
            .fold(0.0, f64::max);
        println!("{:<18} max relative error {worst:.3e}", family.name());
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn verify(args: &RunArgs) -> Result<()> {
    let cfg = load(args, None)?;
    fs::create_dir_all(&args.out)?;
    let checks = harness::verify_suite(&cfg)?;
    let path = args.out.join("verify.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["check", "value", "tolerance", "passed"])?;
    let mut failed = 0;
    for c in &checks {
        w.write_record([
            c.name.clone(),
            harness::fmt_f64(c.value),
            harness::fmt_f64(c.tolerance),
            c.passed.to_string(),
        ])?;
        println!("{} {:<40} {:.3e} (tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
        failed += usize::from(!c.passed);
    }
    w.flush()?;
    println!("wrote {}", path.display());
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(a) => run_experiment(a, ExperimentKind::Simulate),
        Command::Table(a) => run_experiment(a, ExperimentKind::Table),
        Command::Sweep(a) => run_experiment(a, ExperimentKind::Sweep),
        Command::Homotopy(a) => run_experiment(a, ExperimentKind::Homotopy),
        Command::Compactify(a) => run_experiment(a, ExperimentKind::Compactify),
        Command::Oracle(a) => oracle(a),
        Command::Verify(a) => verify(a),
    }
}
