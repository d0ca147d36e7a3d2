use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use liu_logit::simulation::{default_d_grid, DEFAULT_MASTER_SEED};
use liu_logit::{canonical_beta, ConditionConvention, IrlsOptions, SimulationConfig, StochasticRestriction};
use liu_logit_cli::commands::{run_compare, run_diagnose, run_fit, run_simulate, CompareOptions};
use liu_logit_cli::data::load_csv;
use liu_logit_cli::manifest::{config_from_manifest, push_irls, Manifest};
use liu_logit_cli::restriction_file::read_restriction;
use liu_logit_cli::{parse_list, CliError, Result};

/// Liu-type and stochastic restricted estimators for logistic regression.
#[derive(Parser)]
#[command(name = "liu-logit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the logistic MLE by IRLS and print estimates with standard errors.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        irls: IrlsArgs,
        /// Write fit.csv and manifest.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Correlation matrix and condition number of the predictors.
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
        /// Condition number after scaling columns to unit length (default).
        #[arg(long, conflicts_with = "raw_condition")]
        scaled_condition: bool,
        /// Condition number of the unscaled X'X.
        #[arg(long)]
        raw_condition: bool,
        /// Write correlation.csv and manifest.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// SMSE table of all five estimators over a d grid, with MSE matrix verdicts.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        /// Restriction file; defaults to the bundled four-coefficient restriction.
        #[arg(long)]
        restrictions: Option<PathBuf>,
        /// Comma separated d values in (0, 1).
        #[arg(long)]
        d_grid: Option<String>,
        /// Set h = H beta_hat so the restriction agrees with the MLE.
        #[arg(long)]
        h_at_mle: bool,
        #[command(flatten)]
        irls: IrlsArgs,
        /// Write smse.csv, verdicts.csv and manifest.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Monte Carlo study over (n, rho, d).
    Simulate {
        /// Rerun from a manifest written by an earlier run.
        #[arg(long, conflicts_with_all = ["seed", "reps", "n_values", "rho_values", "d_grid", "restrictions", "redraw_design", "fixed_h"])]
        config: Option<PathBuf>,
        /// Master seed [default: 20170101].
        #[arg(long)]
        seed: Option<u64>,
        /// Replications per (n, rho) block [default: 1000].
        #[arg(long)]
        reps: Option<usize>,
        /// Comma separated sample sizes.
        #[arg(long)]
        n_values: Option<String>,
        /// Comma separated correlation parameters in [0, 1).
        #[arg(long)]
        rho_values: Option<String>,
        /// Comma separated d values in (0, 1).
        #[arg(long)]
        d_grid: Option<String>,
        /// Restriction file; defaults to the bundled four-coefficient restriction.
        #[arg(long)]
        restrictions: Option<PathBuf>,
        /// Draw a new design in every replication.
        #[arg(long)]
        redraw_design: bool,
        /// Keep one draw of h for all replications of a block.
        #[arg(long)]
        fixed_h: bool,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for tables, results.csv and manifest.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column name, or zero-based index.
    #[arg(long, default_value = "y")]
    response: String,
}

#[derive(Args)]
struct IrlsArgs {
    /// Score tolerance for IRLS.
    #[arg(long, default_value_t = IrlsOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = IrlsOptions::default().max_iter)]
    max_iter: usize,
}

impl IrlsArgs {
    fn options(&self) -> IrlsOptions {
        IrlsOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..IrlsOptions::default()
        }
    }
}

fn restriction_or_default(path: Option<&Path>) -> Result<StochasticRestriction> {
    match path {
        Some(p) => read_restriction(p),
        None => Ok(StochasticRestriction::reference_four_parameter()),
    }
}

fn d_grid_or_default(text: Option<&str>) -> Result<Vec<f64>> {
    match text {
        Some(t) => parse_list(t, "d-grid"),
        None => Ok(default_d_grid()),
    }
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.into(), source: e })?;
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { data, irls, out_dir } => {
            let dataset = load_csv(&data.data, &data.response)?;
            let out = run_fit(&dataset, &irls.options())?;
            print!("{}", out.render());
            if let Some(dir) = out_dir {
                let mut m = Manifest::new("fit");
                m.push("data", data.data.display());
                m.push("response", &data.response);
                push_irls(&mut m, &irls.options());
                write_outputs(&dir, &[("fit.csv", out.csv()), ("manifest.csv", m.to_csv()?)])?;
            }
        }
        Command::Diagnose { data, raw_condition, out_dir, .. } => {
            let dataset = load_csv(&data.data, &data.response)?;
            let convention = if raw_condition { ConditionConvention::Raw } else { ConditionConvention::UnitLength };
            let out = run_diagnose(&dataset, convention)?;
            print!("{}", out.render());
            if let Some(dir) = out_dir {
                let mut m = Manifest::new("diagnose");
                m.push("data", data.data.display());
                m.push("response", &data.response);
                m.push("condition_convention", if raw_condition { "raw" } else { "unit-length" });
                write_outputs(&dir, &[("correlation.csv", out.csv()), ("manifest.csv", m.to_csv()?)])?;
            }
        }
        Command::Compare { data, restrictions, d_grid, h_at_mle, irls, out_dir } => {
            let dataset = load_csv(&data.data, &data.response)?;
            let restriction = restriction_or_default(restrictions.as_deref())?;
            let options = CompareOptions {
                d_grid: d_grid_or_default(d_grid.as_deref())?,
                h_at_mle,
                irls: irls.options(),
            };
            let out = run_compare(&dataset, &restriction, &options)?;
            print!("{}", out.render());
            if let Some(dir) = out_dir {
                let manifest = out.manifest(&data.data, &data.response, &options);
                print_written(&out.write(&dir, &manifest)?);
            }
        }
        Command::Simulate {
            config,
            seed,
            reps,
            n_values,
            rho_values,
            d_grid,
            restrictions,
            redraw_design,
            fixed_h,
            threads,
            out_dir,
        } => {
            let config = match config {
                Some(path) => config_from_manifest(&Manifest::read(&path)?)?,
                None => {
                    let defaults = SimulationConfig::default();
                    let restriction = restriction_or_default(restrictions.as_deref())?;
                    let p = restriction.p();
                    SimulationConfig {
                        n_values: match n_values {
                            Some(t) => parse_list(&t, "n-values")?,
                            None => defaults.n_values,
                        },
                        rho_values: match rho_values {
                            Some(t) => parse_list(&t, "rho-values")?,
                            None => defaults.rho_values,
                        },
                        d_grid: d_grid_or_default(d_grid.as_deref())?,
                        p,
                        replications: reps.unwrap_or(defaults.replications),
                        master_seed: seed.unwrap_or(DEFAULT_MASTER_SEED),
                        beta_true: canonical_beta(p),
                        restriction,
                        redraw_design,
                        fixed_h,
                        irls: defaults.irls,
                    }
                }
            };
            let (result, files) = run_simulate(&config, &out_dir, threads)?;
            for (n, rho, failed) in result.failures() {
                if failed > 0 {
                    eprintln!("n = {n}, rho = {rho}: {failed} of {} replications failed", config.replications);
                }
            }
            print_written(&files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
