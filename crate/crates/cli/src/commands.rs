use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use liu_logit::comparison::compare_against_sraulle;
use liu_logit::diagnostics::HIGH_CORRELATION;
use liu_logit::estimators::all_reports;
use liu_logit::table::results_csv;
use liu_logit::{
    diagnostics, emit_table, fit_mle, mle_report, run_monte_carlo, smse_over_grid, ComparisonVerdict,
    ConditionConvention, DVector, Dataset, DiagnosticsReport, IrlsOptions, LiuParameter, MleFit, SimulationConfig,
    SimulationResult, SmseGrid, StochasticRestriction,
};

use crate::manifest::{push_irls, simulation_manifest, Manifest};
use crate::restriction_file::format_restriction;
use crate::{CliError, Result};

fn feature_names(data: &Dataset) -> Vec<String> {
    match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=data.p()).map(|j| format!("x{j}")).collect(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Fits the MLE and refuses a fit that stopped short of the tolerance.
pub fn converged_fit(data: &Dataset, irls: &IrlsOptions) -> Result<MleFit> {
    let fit = fit_mle(data, irls)?;
    fit.ensure_converged()?;
    Ok(fit)
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub names: Vec<String>,
    pub fit: MleFit,
    pub standard_errors: DVector<f64>,
    pub smse: f64,
}

pub fn run_fit(data: &Dataset, irls: &IrlsOptions) -> Result<FitOutput> {
    let fit = converged_fit(data, irls)?;
    let report = mle_report(&fit)?;
    Ok(FitOutput {
        names: feature_names(data),
        standard_errors: report.covariance.diagonal().map(f64::sqrt),
        smse: report.smse,
        fit,
    })
}

impl FitOutput {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(9);
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}", "predictor", "estimate", "std. error");
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>12.6}  {:>12.6}",
                self.fit.beta_hat[j], self.standard_errors[j]
            );
        }
        let _ = writeln!(out, "\niterations: {}", self.fit.iterations);
        let _ = writeln!(out, "score norm: {:.3e}", self.fit.gradient_norm);
        let _ = writeln!(out, "trace of inverse information (MLE SMSE): {:.6}", self.smse);
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("predictor,estimate,std_error\n");
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{}", self.fit.beta_hat[j], self.standard_errors[j]);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DiagnoseOutput {
    pub names: Vec<String>,
    pub report: DiagnosticsReport,
}

pub fn run_diagnose(data: &Dataset, convention: ConditionConvention) -> Result<DiagnoseOutput> {
    Ok(DiagnoseOutput {
        names: feature_names(data),
        report: diagnostics(data, convention)?,
    })
}

impl DiagnoseOutput {
    pub fn render(&self) -> String {
        let mut out = String::from("correlation matrix\n");
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(8);
        let _ = write!(out, "{:width$}", "");
        for name in &self.names {
            let _ = write!(out, "  {name:>width$}");
        }
        out.push('\n');
        let r = &self.report.correlation_matrix;
        for (i, name) in self.names.iter().enumerate() {
            let _ = write!(out, "{name:<width$}");
            for j in 0..self.names.len() {
                let _ = write!(out, "  {:>width$.4}", r[(i, j)]);
            }
            out.push('\n');
        }
        let convention = match self.report.convention {
            ConditionConvention::UnitLength => "columns scaled to unit length",
            ConditionConvention::Raw => "raw columns",
        };
        let _ = writeln!(
            out,
            "\ncondition number sqrt(max/min eigenvalue of X'X), {convention}: {:.4}",
            self.report.condition_number
        );
        if self.report.flagged_pairs.is_empty() {
            let _ = writeln!(out, "no pairs with |r| > {HIGH_CORRELATION}");
        } else {
            let _ = writeln!(out, "pairs with |r| > {HIGH_CORRELATION}:");
            for (i, j, v) in &self.report.flagged_pairs {
                let _ = writeln!(out, "  {} / {}: {v:.4}", self.names[*i], self.names[*j]);
            }
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("variable");
        for name in &self.names {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(name);
            for j in 0..self.names.len() {
                let _ = write!(out, ",{}", self.report.correlation_matrix[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub d_grid: Vec<f64>,
    /// Replace `h` by `H beta_hat`, making the restriction agree with the fit.
    pub h_at_mle: bool,
    pub irls: IrlsOptions,
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub names: Vec<String>,
    pub fit: MleFit,
    /// Coefficients used for the bias terms: the MLE itself.
    pub beta_ref: DVector<f64>,
    pub restriction: StochasticRestriction,
    pub grid: SmseGrid,
    /// The four comparisons against SRAULLE, for each `d`.
    pub verdicts: Vec<Vec<ComparisonVerdict>>,
    /// SRMLE point estimate.
    pub srmle: DVector<f64>,
}

pub fn run_compare(data: &Dataset, restriction: &StochasticRestriction, options: &CompareOptions) -> Result<CompareOutput> {
    if restriction.p() != data.p() {
        return Err(CliError::Input(format!(
            "restriction declares p = {} but the data have {} predictors",
            restriction.p(),
            data.p()
        )));
    }
    let grid: Vec<LiuParameter> = options
        .d_grid
        .iter()
        .map(|d| LiuParameter::new(*d))
        .collect::<liu_logit::Result<_>>()?;
    let fit = converged_fit(data, &options.irls)?;
    let restriction = if options.h_at_mle {
        restriction.with_h(restriction.h_matrix() * &fit.beta_hat)?
    } else {
        restriction.clone()
    };
    let beta_ref = fit.beta_hat.clone();
    let table = smse_over_grid(&fit, &restriction, &grid, &beta_ref)?;
    let mut verdicts = Vec::with_capacity(grid.len());
    let mut srmle = None;
    for d in &grid {
        let reports = all_reports(&fit, &restriction, *d, &beta_ref)?;
        srmle.get_or_insert_with(|| reports[liu_logit::EstimatorKind::Srmle.index()].beta.clone());
        verdicts.push(compare_against_sraulle(&reports)?);
    }
    Ok(CompareOutput {
        names: feature_names(data),
        srmle: srmle.expect("non-empty grid"),
        fit,
        beta_ref,
        restriction,
        grid: table,
        verdicts,
    })
}

impl CompareOutput {
    pub fn smse_text(&self) -> String {
        let mut out = String::from("SMSE with bias evaluated at the estimated coefficients (plug-in)\n");
        let _ = write!(out, "{:<9}", "");
        for d in &self.grid.d_values {
            let _ = write!(out, "  {:>10}", format!("d = {d}"));
        }
        out.push('\n');
        for row in &self.grid.rows {
            let _ = write!(out, "{:<9}", row.kind.label());
            for v in &row.smse {
                let _ = write!(out, "  {v:>10.4}");
            }
            out.push('\n');
        }
        out
    }

    pub fn smse_csv(&self) -> String {
        let mut out = String::from("estimator");
        for d in &self.grid.d_values {
            let _ = write!(out, ",d={d}");
        }
        out.push('\n');
        for row in &self.grid.rows {
            out.push_str(row.kind.label());
            for v in &row.smse {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out =
            String::from("d,first,second,verdict,lambda_max,trace_gap,min_difference_eigenvalue,certificate\n");
        for (d, row) in self.grid.d_values.iter().zip(&self.verdicts) {
            for v in row {
                let lambda = v.lambda_max.map_or_else(|| "NA".to_string(), |l| l.to_string());
                let _ = writeln!(
                    out,
                    "{d},{},{},{},{lambda},{},{},\"{}\"",
                    v.first,
                    v.second,
                    v.superior,
                    v.trace_gap,
                    v.difference_eigenvalues[0],
                    v.certificate
                );
            }
        }
        out
    }

    pub fn verdicts_text(&self) -> String {
        let mut out = String::from("MSE matrix comparisons (B = SRAULLE)\n");
        for (d, row) in self.grid.d_values.iter().zip(&self.verdicts) {
            for v in row {
                let _ = writeln!(out, "d = {d:<5} {:<7} vs {}: {} [{}]", v.first, v.second, v.superior, v.certificate);
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::from("estimates\n");
        let _ = writeln!(out, "{:<10}  {:>12}  {:>12}", "predictor", "MLE", "SRMLE");
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{name:<10}  {:>12.6}  {:>12.6}", self.fit.beta_hat[j], self.srmle[j]);
        }
        out.push('\n');
        out.push_str(&self.smse_text());
        out.push('\n');
        out.push_str(&self.verdicts_text());
        out
    }

    pub fn manifest(&self, data_path: &Path, response: &str, options: &CompareOptions) -> Manifest {
        let mut m = Manifest::new("compare");
        m.push("data", data_path.display());
        m.push("response", response);
        m.push("d_grid", options.d_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(" "));
        m.push("h_at_mle", options.h_at_mle);
        push_irls(&mut m, &options.irls);
        m.push("restriction", format_restriction(&self.restriction));
        m
    }

    pub fn write(&self, dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>> {
        create_dir(dir)?;
        let files = [
            ("smse.csv", self.smse_csv()),
            ("verdicts.csv", self.verdicts_csv()),
            ("manifest.csv", manifest.to_csv()?),
        ];
        files
            .into_iter()
            .map(|(name, text)| {
                let path = dir.join(name);
                write_file(&path, &text)?;
                Ok(path)
            })
            .collect()
    }
}

/// Writes `table_n{n}.txt`, `table_n{n}.csv` for each `n`, `results.csv`
/// and `manifest.csv` into `dir`.
pub fn write_simulation(config: &SimulationConfig, result: &SimulationResult, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, text: &str| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, text)?;
        written.push(path);
        Ok(())
    };
    for &n in &config.n_values {
        let table = emit_table(result, n)?;
        put(format!("table_n{n}.txt"), &table.text)?;
        put(format!("table_n{n}.csv"), &table.csv)?;
    }
    put("results.csv".into(), &results_csv(result))?;
    put("manifest.csv".into(), &simulation_manifest(config, Some(result)).to_csv()?)?;
    Ok(written)
}

/// Runs the Monte Carlo study on a pool of `threads` workers (rayon's
/// default when `None`) and writes its files.
pub fn run_simulate(config: &SimulationConfig, dir: &Path, threads: Option<usize>) -> Result<(SimulationResult, Vec<PathBuf>)> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Input("threads: must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("threads: {e}")))?;
    let result = pool.install(|| run_monte_carlo(config))?;
    let files = write_simulation(config, &result, dir)?;
    Ok((result, files))
}
