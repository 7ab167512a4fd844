use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sasakian_core::curvature::KBranch;
use sasakian_core::diffcalc::Strategy;
use sasakian_core::exprdsl::{load_config, RunConfig};
use sasakian_core::report::{ResidualReport, EXIT_CONFIG};
use sasakian_core::suite;

/// Numerical verification of Tanaka-Webster biharmonic hypersurfaces in the
/// Sasakian space form R^{2m+1}(-3).
#[derive(Parser)]
#[command(name = "sasakian", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Almost contact, contact metric, K-contact, Sasakian and Tanaka-Webster identities
    Axioms(Common),
    /// Closed-form vs numeric curvature and the k adjudication
    Curvature(Common),
    /// Geometry of the configured level set
    Surface(Common),
    /// Direct and split Tanaka-Webster bitension
    Biharmonic(Common),
    /// D-perp decomposition, eigenvalue pairing, Codazzi and the gradient dichotomies
    Pseudohopf(Common),
    /// k, l and the proper-CMC bound on c for the configured m
    Constants(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    k_branch: Option<KBranchArg>,
    #[arg(long, value_enum, hide = true)]
    test_fault: Option<Fault>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Jet,
    Fd,
}

#[derive(Clone, Copy, ValueEnum)]
enum KBranchArg {
    Lemma,
    Alt,
    Auto,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    FlipPhi,
}

impl Common {
    fn load(&self) -> Result<RunConfig, String> {
        let mut cfg = load_config(&self.config).map_err(|e| e.to_string())?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.samples {
            cfg.samples = n as usize;
        }
        if let Some(s) = self.strategy {
            cfg.set_strategy(match s {
                StrategyArg::Jet => Strategy::Jet,
                StrategyArg::Fd => Strategy::Fd,
            });
        }
        if let Some(k) = self.k_branch {
            cfg.k_branch = match k {
                KBranchArg::Lemma => KBranch::Lemma,
                KBranchArg::Alt => KBranch::Alt,
                KBranchArg::Auto => KBranch::Auto,
            };
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig, &Common) -> ResidualReport) = match &cli.command {
        Command::Axioms(c) => (c, |cfg, c| {
            let model = suite::model_of(cfg);
            let model = if c.test_fault == Some(Fault::FlipPhi) { model.with_flipped_phi() } else { model };
            suite::axioms::run_with_model(cfg, model)
        }),
        Command::Curvature(c) => (c, |cfg, _| suite::curvature::run(cfg)),
        Command::Surface(c) => (c, |cfg, _| suite::surface::run(cfg)),
        Command::Biharmonic(c) => (c, |cfg, _| suite::biharmonic::run(cfg)),
        Command::Pseudohopf(c) => (c, |cfg, _| suite::pseudohopf::run(cfg)),
        Command::Constants(c) => (c, |cfg, _| suite::curvature::constants_report(cfg)),
    };
    let cfg = match common.load() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut report = run(&cfg, common);
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    report.timestamp = Some(format!("unix:{secs}"));
    print!("{}", report.to_table());
    if let Some(path) = &common.json_out {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
