//! Run manifests: a two-column `key,value` CSV holding every input needed to
//! repeat a run. Lists are space separated and floats use shortest
//! round-trip formatting, so a rerun sees bit-identical inputs.

use std::path::Path;

use liu_logit::{DVector, IrlsOptions, SimulationConfig, SimulationResult};

use crate::restriction_file::{format_restriction, parse_restriction};
use crate::{CliError, Result};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("command", command);
        m.push("format_version", FORMAT_VERSION);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Input(format!("manifest: missing key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| CliError::Input(format!("manifest: {key}: cannot parse '{raw}'")))
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        crate::parse_list(self.require(key)?, &format!("manifest: {key}"))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Input(format!("manifest: {e}"));
        w.write_record(["key", "value"]).map_err(io)?;
        for (k, v) in &self.entries {
            w.write_record([k, v]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(format!("manifest: {e}")))?;
        Ok(String::from_utf8(bytes).expect("manifest is valid UTF-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::Input(format!("manifest: {e}")))?;
            if record.len() != 2 {
                return Err(CliError::Input(format!("manifest: expected 2 fields, found {}", record.len())));
            }
            entries.push((record[0].to_string(), record[1].to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| CliError::io(path, e))
    }
}

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn push_irls(m: &mut Manifest, irls: &IrlsOptions) {
    m.push("irls_tol", irls.tol);
    m.push("irls_max_iter", irls.max_iter);
    m.push("irls_separation_cap", irls.separation_cap);
}

/// Everything in `config`, plus per-block failure counts when a result is
/// supplied. The failure counts are informational and ignored on reload.
pub fn simulation_manifest(config: &SimulationConfig, result: Option<&SimulationResult>) -> Manifest {
    let mut m = Manifest::new("simulate");
    m.push("master_seed", config.master_seed);
    m.push("replications", config.replications);
    m.push("p", config.p);
    m.push("n_values", join(&config.n_values));
    m.push("rho_values", join(&config.rho_values));
    m.push("d_grid", join(&config.d_grid));
    m.push("beta_true", join(config.beta_true.iter()));
    m.push("redraw_design", config.redraw_design);
    m.push("fixed_h", config.fixed_h);
    push_irls(&mut m, &config.irls);
    m.push("restriction", format_restriction(&config.restriction));
    if let Some(result) = result {
        for (n, rho, failed) in result.failures() {
            m.push(&format!("failed_replications n={n} rho={rho}"), failed);
        }
    }
    m
}

pub fn config_from_manifest(m: &Manifest) -> Result<SimulationConfig> {
    match m.get("command") {
        Some("simulate") => {}
        other => {
            return Err(CliError::Input(format!(
                "manifest: expected command 'simulate', found {}",
                other.unwrap_or("none")
            )))
        }
    }
    if m.get("format_version") != Some(FORMAT_VERSION) {
        return Err(CliError::Input(format!("manifest: unsupported format_version (expected {FORMAT_VERSION})")));
    }
    let config = SimulationConfig {
        n_values: m.parse_list("n_values")?,
        rho_values: m.parse_list("rho_values")?,
        d_grid: m.parse_list("d_grid")?,
        p: m.parse("p")?,
        replications: m.parse("replications")?,
        master_seed: m.parse("master_seed")?,
        restriction: parse_restriction(m.require("restriction")?)?,
        beta_true: DVector::from_vec(m.parse_list("beta_true")?),
        redraw_design: m.parse("redraw_design")?,
        fixed_h: m.parse("fixed_h")?,
        irls: IrlsOptions {
            tol: m.parse("irls_tol")?,
            max_iter: m.parse("irls_max_iter")?,
            separation_cap: m.parse("irls_separation_cap")?,
        },
    };
    config.validate()?;
    Ok(config)
}
