use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twophoton::commands::{self, ChshSettingsRecord, CommandError, CommandResult};
use twophoton::events_io::write_events_csv;
use twophoton::format::{fmt_sig9, sig9};
use twophoton::parallel::{thread_pool, THREADS_ENV};
use twophoton::table_io::write_table_csv;
use twophoton::OutputEnvelope;
use twophoton_core::bell::ChshSettings;
use twophoton_core::optimize::{DEFAULT_ETA_TOL, DEFAULT_SIMPLEX_TOL, DEFAULT_STARTS};

/// Two-photon polarization Bell experiment simulator.
///
/// Angles are read in radians unless --degrees is given; output angles are always radians.
#[derive(Debug, Parser)]
#[command(name = "twophoton", version)]
struct Cli {
    /// Read every input angle in degrees.
    #[arg(long, global = true)]
    degrees: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads for sampling and optimization.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Detector efficiency in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Probability of recognizing a double click, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct SettingsArgs {
    /// ψ₁,ψ₁′,ψ₂,ψ₂′ (defaults to the ideal optimum).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    settings: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Joint outcome table beside its closed form.
    Probs {
        #[arg(long, allow_hyphen_values = true)]
        theta1: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta2: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Correlation E(ψ₁, ψ₂) by closed form and from the table.
    Correlation {
        #[arg(long, allow_hyphen_values = true)]
        psi1: f64,
        #[arg(long, allow_hyphen_values = true)]
        psi2: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// CHSH value at fixed settings.
    Chsh {
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Multistart maximization of the CHSH value.
    Optimize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = DEFAULT_SIMPLEX_TOL)]
        tol: f64,
    },
    /// Lowest efficiency that still allows a violation.
    CriticalEta {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_ETA_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_STARTS)]
        starts: usize,
    },
    /// Station-1 bunching probabilities over a polarizer scan.
    HomScan {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start: f64,
        /// Scan end; defaults to a quarter turn.
        #[arg(long, allow_hyphen_values = true)]
        end: Option<f64>,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta2: f64,
    },
    /// Seeded event sampling with a CHSH estimate.
    Sample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Events per setting pair.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[command(flatten)]
        settings: SettingsArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Event CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match thread_pool(cli.threads) {
        Ok(pool) => pool,
        Err(e) => return fail(&CommandError::Usage(e.to_string())),
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CommandError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn run(cli: &Cli) -> CommandResult<()> {
    let angle = |x: f64| if cli.degrees { x.to_radians() } else { x };
    let settings = |s: &SettingsArgs| -> CommandResult<ChshSettingsRecord> {
        match s.settings.as_deref() {
            Some(&[a, b, c, d]) => {
                Ok(ChshSettings::new(angle(a), angle(b), angle(c), angle(d)).into())
            }
            Some(v) => Err(CommandError::Usage(format!(
                "--settings takes 4 angles, got {}",
                v.len()
            ))),
            None => Ok(ChshSettings::standard().into()),
        }
    };
    let csv_only_for = |name: &str| -> CommandResult<()> {
        if cli.format == Format::Csv {
            return Err(CommandError::Usage(format!(
                "{name} has no CSV output; CSV covers probs, hom-scan and sample"
            )));
        }
        Ok(())
    };
    let stdout = io::stdout();
    match &cli.command {
        Command::Probs {
            theta1,
            theta2,
            model,
        } => {
            let p = commands::ProbsParams {
                theta1: angle(*theta1),
                theta2: angle(*theta2),
                eta: model.eta,
                alpha: model.alpha,
            };
            match cli.format {
                Format::Json => print(&commands::probs(&p)?),
                Format::Csv => write_table_csv(stdout.lock(), &commands::probs_table(&p)?)?,
            }
        }
        Command::Correlation { psi1, psi2, model } => {
            csv_only_for("correlation")?;
            let p = commands::CorrelationParams {
                psi1: angle(*psi1),
                psi2: angle(*psi2),
                eta: model.eta,
                alpha: model.alpha,
            };
            print(&commands::correlation(&p)?);
        }
        Command::Chsh { settings: s, model } => {
            csv_only_for("chsh")?;
            let p = commands::ChshParams {
                settings: settings(s)?,
                eta: model.eta,
                alpha: model.alpha,
            };
            print(&commands::chsh_value(&p)?);
        }
        Command::Optimize { model, starts, tol } => {
            csv_only_for("optimize")?;
            let p = commands::OptimizeParams {
                eta: model.eta,
                alpha: model.alpha,
                starts: *starts,
                tol: *tol,
            };
            print(&commands::optimize(&p)?);
        }
        Command::CriticalEta { alpha, tol, starts } => {
            csv_only_for("critical-eta")?;
            let env = commands::critical_eta(&commands::CriticalEtaParams {
                alpha: *alpha,
                tol: *tol,
                starts: *starts,
            })?;
            if let Some(published) = env.results["published"].as_f64() {
                let computed = env.results["eta_critical"].as_f64().unwrap_or(f64::NAN);
                eprintln!("published: {published} (computed {})", fmt_sig9(computed));
            }
            print(&env);
        }
        Command::HomScan {
            start,
            end,
            points,
            theta2,
        } => {
            let p = commands::HomScanParams {
                start: angle(*start),
                end: end.map_or(std::f64::consts::FRAC_PI_2, angle),
                points: *points,
                theta2: angle(*theta2),
            };
            match cli.format {
                Format::Json => print(&commands::hom_scan(&p)?),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(stdout.lock());
                    for r in commands::hom_rows(&p)? {
                        w.serialize(commands::HomRow {
                            theta1: sig9(r.theta1),
                            p43: sig9(r.p43),
                            p53: sig9(r.p53),
                            p63: sig9(r.p63),
                        })?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::Sample {
            seed,
            n,
            settings: s,
            model,
            out,
        } => {
            let p = commands::SampleParams {
                seed: *seed,
                n_per_setting: *n,
                eta: model.eta,
                alpha: model.alpha,
                settings: settings(s)?,
            };
            match (cli.format, out) {
                (Format::Csv, None) => {
                    write_events_csv(stdout.lock(), &commands::sample_events(&p)?)?
                }
                _ => print(&commands::sample(&p, out.as_deref())?),
            }
        }
        Command::Validate => {
            csv_only_for("validate")?;
            let (env, report) = commands::validate()?;
            eprintln!(
                "state at theta1 = pi/8, theta2 = 0: {}",
                report.sample_state
            );
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                eprintln!(
                    "{status} {} (worst {:.3e}, limit {:.0e})",
                    c.name, c.deviation, c.tolerance
                );
            }
            print(&env);
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CommandError::Validation { failed });
            }
        }
    }
    Ok(())
}

fn print(env: &OutputEnvelope) {
    let mut out = io::stdout().lock();
    // a closed pipe is not worth a panic
    let _ = writeln!(out, "{}", env.to_json());
}
