//! Command implementations behind the `robust-loss-lab` binary.
//!
//! Every command is a pure function of its JSON config document (plus a
//! handful of flags); outputs are written once at the end of a run, use `.`
//! as the decimal separator and `\n` line endings, and floats print in
//! Rust's shortest round-trip form, so repeated runs are byte-identical.

use std::error::Error;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::distributions::{NoiseFamily, NoiseSpec};
use crate::interp::{
    interpret_config_with, log_domain_interpretation, BoundConvention, BoxRegressionConfig,
    UncertaintyTable, ROW_LABELS,
};
use crate::losses::{
    huber, huber_grad, kl_loss, kl_loss_grad, lower_bound_params, upper_bound_params, HuberParams,
};
use crate::toyfit::{noise_sweep, PolyModel, SweepDetail, SweepPoint, ToyConfig};
use crate::verify::{run_verify, ToleranceProfile, VerifyReport};

/// Output serialization of the interpretation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

/// Command-level failure.
#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        message: String,
    },
    /// A config field failed validation; `field` is its path in the document.
    Invalid {
        field: String,
        message: String,
    },
    UnknownPreset {
        name: String,
    },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Parse { path, message } => write!(f, "{}: {message}", path.display()),
            Self::Invalid { field, message } => write!(f, "config field `{field}`: {message}"),
            Self::UnknownPreset { name } => {
                write!(f, "unknown preset `{name}`; available: paper-table1")
            }
        }
    }
}

impl Error for CliError {}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Parse a JSON config document. Unknown keys are rejected by the schema
/// types themselves.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// loss-table

/// Config of the `loss-table` command: evaluate the Huber loss, its two
/// KL-Laplace bound configurations, and their derivatives on a grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossTableConfig {
    pub alphas: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl LossTableConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "must list at least one transition point"));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if !(a.is_finite() && *a > 0.0) {
                return Err(invalid(
                    format!("alphas[{i}]"),
                    format!("must be > 0, got {a}"),
                ));
            }
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite()) || self.x_min >= self.x_max {
            return Err(invalid(
                "x_min/x_max",
                format!("need x_min < x_max, got [{}, {}]", self.x_min, self.x_max),
            ));
        }
        if self.n_points < 2 {
            return Err(invalid("n_points", "must be at least 2"));
        }
        Ok(())
    }
}

/// Write one CSV per alpha, named `<stem>_alpha=<value>.<ext>`, with columns
/// `x,huber,huber_grad,kl_lower,kl_lower_grad,kl_upper,kl_upper_grad`.
pub fn cmd_loss_table(cfg: &LossTableConfig, out_path: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let mut written = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let hub = HuberParams::new(alpha).expect("validated above");
        let lower = lower_bound_params(alpha).expect("validated above");
        let upper = upper_bound_params(alpha).expect("validated above");
        let mut out =
            String::from("x,huber,huber_grad,kl_lower,kl_lower_grad,kl_upper,kl_upper_grad\n");
        let step = (cfg.x_max - cfg.x_min) / (cfg.n_points - 1) as f64;
        for i in 0..cfg.n_points {
            let x = if i == cfg.n_points - 1 {
                cfg.x_max
            } else {
                cfg.x_min + step * i as f64
            };
            out.push_str(&format!(
                "{x},{},{},{},{},{},{}\n",
                huber(x, &hub),
                huber_grad(x, &hub),
                kl_loss(x, &lower),
                kl_loss_grad(x, &lower),
                kl_loss(x, &upper),
                kl_loss_grad(x, &upper),
            ));
        }
        let path = path_with_suffix(out_path, &format!("_alpha={alpha}"));
        write_file(&path, &out)?;
        written.push(path);
    }
    Ok(written)
}

/// Insert `suffix` before the extension: `curves.csv` -> `curves_alpha=1.csv`.
fn path_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

// ---------------------------------------------------------------------------
// verify

/// Run the invariant suite of the loss and divergence modules.
pub fn cmd_verify(profile: &ToleranceProfile) -> VerifyReport {
    run_verify(profile, None)
}

// ---------------------------------------------------------------------------
// toyfit

fn default_theta_star() -> Vec<f64> {
    vec![-10.0, 20.0, 15.0, -25.0, -3.0, 6.0]
}

fn default_fit_degree_count() -> usize {
    8
}

fn default_n_samples() -> usize {
    2000
}

fn default_delta() -> f64 {
    2.0
}

fn default_noise_family() -> NoiseFamily {
    NoiseFamily::Laplace
}

fn default_iterations() -> usize {
    20_000
}

fn default_repeats() -> usize {
    5
}

fn default_seed() -> u64 {
    42
}

/// Config of the `toyfit` command: a noise-scale sweep of grid searches.
///
/// Defaults reproduce the desk-scale experiment: the quintic ground truth
/// with two extra fitted degrees, 2000 samples on `[-2, 2]`, Laplace noise,
/// 20000 full-batch steps, 5 repeats, seed 42.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyfitRunConfig {
    /// Ground-truth polynomial coefficients, ascending powers.
    #[serde(default = "default_theta_star")]
    pub theta_star: Vec<f64>,
    #[serde(default = "default_fit_degree_count")]
    pub fit_degree_count: usize,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_noise_family")]
    pub noise_family: NoiseFamily,
    pub noise_scales: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub lr_grid: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ToyfitRunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.base_config()?
            .validate()
            .map_err(|e| invalid(e.field, e.message))?;
        for (name, grid) in [
            ("noise_scales", &self.noise_scales),
            ("alpha_grid", &self.alpha_grid),
            ("lr_grid", &self.lr_grid),
        ] {
            if grid.is_empty() {
                return Err(invalid(name, "must not be empty"));
            }
        }
        for (i, s) in self.noise_scales.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(invalid(
                    format!("noise_scales[{i}]"),
                    format!("must be >= 0, got {s}"),
                ));
            }
        }
        for (i, a) in self.alpha_grid.iter().enumerate() {
            if !(a.is_finite() && *a > 0.0) {
                return Err(invalid(
                    format!("alpha_grid[{i}]"),
                    format!("must be > 0, got {a}"),
                ));
            }
        }
        for (i, lr) in self.lr_grid.iter().enumerate() {
            if !(lr.is_finite() && *lr > 0.0) {
                return Err(invalid(
                    format!("lr_grid[{i}]"),
                    format!("must be > 0, got {lr}"),
                ));
            }
        }
        if self.iterations < 1 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.repeats < 1 {
            return Err(invalid("repeats", "must be at least 1"));
        }
        Ok(())
    }

    /// The sweep's base config; the sweep substitutes each noise scale.
    pub fn base_config(&self) -> Result<ToyConfig, CliError> {
        let theta_star = PolyModel::new(self.theta_star.clone())
            .map_err(|e| invalid("theta_star", e.to_string()))?;
        Ok(ToyConfig {
            theta_star,
            fit_degree_count: self.fit_degree_count,
            n_samples: self.n_samples,
            delta: self.delta,
            noise: NoiseSpec {
                family: self.noise_family,
                scale: 0.0,
            },
            seed: self.seed,
        })
    }
}

/// Paths written by [`cmd_toyfit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyfitOutputs {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

#[derive(Serialize)]
struct SweepSidecar<'a> {
    points: &'a [SweepPoint],
    details: &'a [SweepDetail],
}

/// Run the noise sweep and write its curve as CSV plus a JSON sidecar with
/// the full per-cell grid tables.
///
/// CSV columns: `noise_scale,repeat,optimal_alpha,best_lr,best_rmse`; a
/// repeat whose whole grid diverged carries `NaN` in the result columns.
pub fn cmd_toyfit(cfg: &ToyfitRunConfig, out_path: &Path) -> Result<ToyfitOutputs, CliError> {
    cfg.validate()?;
    let base = cfg.base_config()?;
    let (points, details) = noise_sweep(
        &base,
        &cfg.noise_scales,
        &cfg.alpha_grid,
        &cfg.lr_grid,
        cfg.iterations,
        cfg.repeats,
    );

    let mut csv = String::from("noise_scale,repeat,optimal_alpha,best_lr,best_rmse\n");
    for point in &points {
        for (repeat, outcome) in point.repeats.iter().enumerate() {
            match outcome {
                Some(r) => csv.push_str(&format!(
                    "{},{repeat},{},{},{}\n",
                    point.scale, r.optimal_alpha, r.best_lr, r.best_rmse
                )),
                None => csv.push_str(&format!("{},{repeat},NaN,NaN,NaN\n", point.scale)),
            }
        }
    }
    write_file(out_path, &csv)?;

    let sidecar_path = out_path.with_extension("grid.json");
    let sidecar = serde_json::to_string_pretty(&SweepSidecar {
        points: &points,
        details: &details,
    })
    .expect("sweep results serialize");
    write_file(&sidecar_path, &sidecar)?;

    Ok(ToyfitOutputs {
        csv: out_path.to_path_buf(),
        sidecar: sidecar_path,
    })
}

// ---------------------------------------------------------------------------
// interp

/// Config of the `interp` command: one or more detector loss configurations.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpRunConfig {
    pub configs: Vec<BoxRegressionConfig>,
}

impl InterpRunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.configs.is_empty() {
            return Err(invalid("configs", "must list at least one configuration"));
        }
        for (i, cfg) in self.configs.iter().enumerate() {
            cfg.validate()
                .map_err(|e| invalid(format!("configs[{i}].{}", e.field), e.message))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct CoordCells {
    x: String,
    y: String,
    w: String,
    h: String,
}

#[derive(Serialize)]
struct LogDomainCells {
    label: String,
    prediction: String,
}

#[derive(Serialize)]
struct InterpColumnJson {
    name: String,
    label: CoordCells,
    prediction: CoordCells,
    /// Exact log-domain reading for the size coordinates (dimensionless).
    log_domain_w: LogDomainCells,
    log_domain_h: LogDomainCells,
}

/// Render the interpretation tables of the given configurations.
///
/// One column per configuration; rows are the four ground-truth scales then
/// the four prediction scales, cells as reduced fractions of the symbolic
/// anchor dimensions. The JSON format additionally carries the exact
/// log-domain reading for the size coordinates.
pub fn cmd_interp(
    configs: &[BoxRegressionConfig],
    format: Format,
    convention: BoundConvention,
) -> Result<String, CliError> {
    InterpRunConfig {
        configs: configs.to_vec(),
    }
    .validate()?;
    let tables: Vec<UncertaintyTable> = configs
        .iter()
        .map(|cfg| interpret_config_with(cfg, convention))
        .collect();

    Ok(match format {
        Format::Csv => {
            let mut out = String::from("target");
            for table in &tables {
                out.push(',');
                out.push_str(&table.name);
            }
            out.push('\n');
            for (row, label) in ROW_LABELS.iter().enumerate() {
                out.push_str(label);
                for table in &tables {
                    let cell = table.rows().nth(row).expect("eight rows").1;
                    out.push(',');
                    out.push_str(&cell.to_string());
                }
                out.push('\n');
            }
            out
        }
        Format::Markdown => {
            let mut out = String::from("| target |");
            for table in &tables {
                out.push_str(&format!(" {} |", table.name));
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(tables.len()));
            out.push('\n');
            for (row, label) in ROW_LABELS.iter().enumerate() {
                out.push_str(&format!("| {label} |"));
                for table in &tables {
                    let cell = table.rows().nth(row).expect("eight rows").1;
                    out.push_str(&format!(" {cell} |"));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let columns: Vec<InterpColumnJson> = configs
                .iter()
                .zip(&tables)
                .map(|(cfg, table)| {
                    let log_w = log_domain_interpretation(&cfg.w).expect("w is a size");
                    let log_h = log_domain_interpretation(&cfg.h).expect("h is a size");
                    InterpColumnJson {
                        name: table.name.clone(),
                        label: CoordCells {
                            x: table.labels[0].to_string(),
                            y: table.labels[1].to_string(),
                            w: table.labels[2].to_string(),
                            h: table.labels[3].to_string(),
                        },
                        prediction: CoordCells {
                            x: table.predictions[0].to_string(),
                            y: table.predictions[1].to_string(),
                            w: table.predictions[2].to_string(),
                            h: table.predictions[3].to_string(),
                        },
                        log_domain_w: LogDomainCells {
                            label: log_w.0.to_string(),
                            prediction: log_w.1.to_string(),
                        },
                        log_domain_h: LogDomainCells {
                            label: log_h.0.to_string(),
                            prediction: log_h.1.to_string(),
                        },
                    }
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&columns).expect("columns serialize");
            out.push('\n');
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::paper_table1_presets;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("robust-loss-lab-cli-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn loss_table_zero_row_and_huber_column() {
        let dir = tmp_dir("loss-table");
        let cfg = LossTableConfig {
            alphas: vec![1.0],
            x_min: -5.0,
            x_max: 5.0,
            n_points: 11,
        };
        let files = cmd_loss_table(&cfg, &dir.join("curves.csv")).unwrap();
        assert_eq!(files, vec![dir.join("curves_alpha=1.csv")]);
        let text = fs::read_to_string(&files[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "x,huber,huber_grad,kl_lower,kl_lower_grad,kl_upper,kl_upper_grad"
        );
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[6], "0,0,0,0,0,0,0");
        let at_three: Vec<&str> = lines[9].split(',').collect();
        assert_eq!(at_three[0], "3");
        assert_eq!(at_three[1], "2.5");
    }

    #[test]
    fn loss_table_rejects_reversed_range() {
        let cfg = LossTableConfig {
            alphas: vec![1.0],
            x_min: 5.0,
            x_max: -5.0,
            n_points: 11,
        };
        let err = cmd_loss_table(&cfg, Path::new("unused.csv")).unwrap_err();
        assert!(matches!(err, CliError::Invalid { .. }));
    }

    #[test]
    fn toyfit_single_cell_and_determinism() {
        let dir = tmp_dir("toyfit");
        let cfg = ToyfitRunConfig {
            theta_star: default_theta_star(),
            fit_degree_count: 4,
            n_samples: 64,
            delta: 2.0,
            noise_family: NoiseFamily::Laplace,
            noise_scales: vec![0.5],
            alpha_grid: vec![1.0],
            lr_grid: vec![1e-6],
            iterations: 300,
            repeats: 1,
            seed: 7,
        };
        let first = cmd_toyfit(&cfg, &dir.join("sweep.csv")).unwrap();
        let csv_a = fs::read(&first.csv).unwrap();
        let sidecar_a = fs::read(&first.sidecar).unwrap();

        let lines: Vec<String> = String::from_utf8(csv_a.clone())
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect();
        assert_eq!(
            lines[0],
            "noise_scale,repeat,optimal_alpha,best_lr,best_rmse"
        );
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("0.5,0,1,0.000001,"));

        let second = cmd_toyfit(&cfg, &dir.join("sweep.csv")).unwrap();
        assert_eq!(csv_a, fs::read(&second.csv).unwrap());
        assert_eq!(sidecar_a, fs::read(&second.sidecar).unwrap());
    }

    #[test]
    fn toyfit_flags_diverged_rows() {
        let dir = tmp_dir("toyfit-div");
        let cfg = ToyfitRunConfig {
            theta_star: default_theta_star(),
            fit_degree_count: 4,
            n_samples: 64,
            delta: 2.0,
            noise_family: NoiseFamily::Laplace,
            noise_scales: vec![0.5],
            alpha_grid: vec![1.0],
            lr_grid: vec![1e9],
            iterations: 50,
            repeats: 2,
            seed: 7,
        };
        let outputs = cmd_toyfit(&cfg, &dir.join("diverged.csv")).unwrap();
        let text = fs::read_to_string(&outputs.csv).unwrap();
        assert_eq!(text.lines().count(), 3);
        for line in text.lines().skip(1) {
            assert!(line.ends_with("NaN,NaN,NaN"), "line: {line}");
        }
    }

    #[test]
    fn toyfit_validation_reports_field_paths() {
        let mut cfg = ToyfitRunConfig {
            theta_star: default_theta_star(),
            fit_degree_count: 8,
            n_samples: 100,
            delta: 2.0,
            noise_family: NoiseFamily::Laplace,
            noise_scales: vec![0.5, -1.0],
            alpha_grid: vec![1.0],
            lr_grid: vec![1e-7],
            iterations: 10,
            repeats: 1,
            seed: 0,
        };
        match cfg.validate().unwrap_err() {
            CliError::Invalid { field, .. } => assert_eq!(field, "noise_scales[1]"),
            other => panic!("unexpected error {other:?}"),
        }
        cfg.noise_scales = vec![0.5];
        cfg.lr_grid = vec![0.0];
        match cfg.validate().unwrap_err() {
            CliError::Invalid { field, .. } => assert_eq!(field, "lr_grid[0]"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let json = r#"{"noise_scales": [1.0], "alpha_grid": [1.0], "lr_grid": [1e-7], "typo": 3}"#;
        let err = serde_json::from_str::<ToyfitRunConfig>(json).unwrap_err();
        assert!(err.to_string().contains("typo"));
    }

    #[test]
    fn interp_formats_agree_on_values() {
        let presets = paper_table1_presets();
        let csv = cmd_interp(&presets, Format::Csv, BoundConvention::Lower).unwrap();
        let json = cmd_interp(&presets, Format::Json, BoundConvention::Lower).unwrap();
        let md = cmd_interp(&presets, Format::Markdown, BoundConvention::Lower).unwrap();

        // Spot-check one cell across the three formats.
        let csv_impl_proposal: Vec<&str> = csv
            .lines()
            .find(|l| l.starts_with("w~"))
            .unwrap()
            .split(',')
            .collect();
        assert_eq!(csv_impl_proposal[3], "w_a");
        assert!(json.contains("\"w\": \"w_a\""));
        assert!(md
            .lines()
            .any(|l| l.starts_with("| w~ |") && l.contains(" w_a |")));
    }

    #[test]
    fn interp_trivial_config_is_all_anchor_dims() {
        let json = r#"{
            "name": "trivial",
            "x": {"lambda": 1, "alpha": 1, "sigma": 1, "mu": 0, "loss_form": "raw", "coordinate": "center_x"},
            "y": {"lambda": 1, "alpha": 1, "sigma": 1, "mu": 0, "loss_form": "raw", "coordinate": "center_y"},
            "w": {"lambda": 1, "alpha": 1, "sigma": 1, "mu": 0, "loss_form": "raw", "coordinate": "width"},
            "h": {"lambda": 1, "alpha": 1, "sigma": 1, "mu": 0, "loss_form": "raw", "coordinate": "height"}
        }"#;
        let cfg: BoxRegressionConfig = serde_json::from_str(json).unwrap();
        let csv = cmd_interp(&[cfg], Format::Csv, BoundConvention::Lower).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("target,trivial"));
        for (line, label) in lines.zip(ROW_LABELS) {
            let dim = if label.starts_with('x') || label.starts_with('w') {
                "w_a"
            } else {
                "h_a"
            };
            assert_eq!(line, format!("{label},{dim}"));
        }
    }
}
