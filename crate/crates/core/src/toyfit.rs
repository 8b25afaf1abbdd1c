//! Polynomial-fitting experiment: synthesize noisy datasets, fit by
//! full-batch gradient descent under a Huber loss, score by test RMSE, and
//! sweep noise scales to trace how the optimal transition point moves with
//! the label noise.
//!
//! Everything here is a pure function of the configuration and its seed.
//! Grid cells and sweep repeats run in parallel, each on data derived from
//! `(seed, task index)` substreams, so results are bit-identical regardless
//! of scheduling.

use std::error::Error;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_noise, sample_uniform, NoiseSpec, RngState};
use crate::losses::{huber, huber_grad, HuberParams};

// Substream tags for dataset synthesis and sweep seeding.
const STREAM_X: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SWEEP: u64 = 3;

/// Dense polynomial; `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyModel {
    coeffs: Vec<f64>,
}

/// Invalid polynomial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum PolyError {
    Empty,
    NonFiniteCoeff { index: usize, value: f64 },
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "polynomial needs at least one coefficient"),
            Self::NonFiniteCoeff { index, value } => {
                write!(f, "coefficient {index} must be finite, got {value}")
            }
        }
    }
}

impl Error for PolyError {}

impl PolyModel {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::Empty);
        }
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(PolyError::NonFiniteCoeff { index, value });
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Horner evaluation of the polynomial at `x`.
pub fn poly_eval(m: &PolyModel, x: f64) -> f64 {
    eval_coeffs(&m.coeffs, x)
}

fn eval_coeffs(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub type Dataset = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn index(&self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

/// Experiment configuration: ground-truth polynomial, fitted coefficient
/// count `K`, sample count, covariate half-range, noise, and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub theta_star: PolyModel,
    pub fit_degree_count: usize,
    pub n_samples: usize,
    pub delta: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
}

/// Invalid toy-experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.fit_degree_count < 1 {
            return Err(invalid("fit_degree_count", "must be at least 1"));
        }
        if self.n_samples < self.fit_degree_count {
            return Err(invalid(
                "n_samples",
                format!(
                    "must be at least fit_degree_count ({}) for identifiability",
                    self.fit_degree_count
                ),
            ));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", format!("must be > 0, got {}", self.delta)));
        }
        self.noise
            .validate()
            .map_err(|e| invalid("noise.scale", e.to_string()))?;
        Ok(())
    }
}

/// Synthesize one split of the dataset.
///
/// Covariates are uniform on `[-delta, delta]`; the train split adds one
/// noise draw per point, the test split adds none. The two splits draw from
/// disjoint substreams of the seed, so their covariates differ.
pub fn make_dataset(cfg: &ToyConfig, split: Split) -> Dataset {
    let mut x_rng = RngState::new(cfg.seed).split(STREAM_X).split(split.index());
    let mut noise_rng = RngState::new(cfg.seed)
        .split(STREAM_NOISE)
        .split(split.index());
    let noise = match split {
        Split::Train => Some(&mut noise_rng),
        Split::Test => None,
    };
    make_dataset_with_streams(cfg, &mut x_rng, noise)
}

/// Synthesize a dataset from caller-provided substreams.
///
/// Passing the same covariate stream with and without a noise stream yields
/// the clean and perturbed views of identical covariates.
pub fn make_dataset_with_streams(
    cfg: &ToyConfig,
    x_rng: &mut RngState,
    mut noise_rng: Option<&mut RngState>,
) -> Dataset {
    (0..cfg.n_samples)
        .map(|_| {
            let x = sample_uniform(-cfg.delta, cfg.delta, x_rng);
            let mut y = poly_eval(&cfg.theta_star, x);
            if let Some(rng) = noise_rng.as_deref_mut() {
                y += sample_noise(&cfg.noise, rng);
            }
            (x, y)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
}

/// Optimizer settings for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub loss: HuberParams<f64>,
    pub learning_rate: f64,
    pub iterations: usize,
    pub init: Init,
}

/// The fit blew up; the learning rate is too large for this transition
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivergenceError {
    pub iteration: usize,
}

impl fmt::Display for DivergenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fit diverged at iteration {} (learning rate too large for this alpha)",
            self.iteration
        )
    }
}

impl Error for DivergenceError {}

// A trajectory whose training loss grows this far past its starting point
// is not coming back; the Huber slope is capped at alpha, so a blown-up fit
// random-walks at a scale set by the learning rate instead of overflowing.
const DIVERGENCE_LOSS_FACTOR: f64 = 1e8;

/// Full-batch gradient descent on the summed Huber loss of the residuals.
///
/// Starts from all-zero coefficients and runs exactly `iterations` steps.
/// The gradient of `sum_i H_a(y_i - F(x_i))` with respect to `coeffs[k]` is
/// `-sum_i huber_grad(y_i - F(x_i)) * x_i^k`.
///
/// Aborts with [`DivergenceError`] when a coefficient becomes non-finite or
/// the training loss explodes past `1e8 * max(1, initial loss)`.
pub fn fit(
    train: &Dataset,
    k: usize,
    settings: &FitSettings,
) -> Result<PolyModel, DivergenceError> {
    assert!(!train.is_empty(), "fit needs a non-empty training set");
    assert!(k >= 1, "fit needs at least one coefficient");
    let Init::Zeros = settings.init;
    let mut theta = vec![0.0f64; k];
    let mut grad = vec![0.0f64; k];
    let mut loss_ceiling = f64::INFINITY;
    for iteration in 0..settings.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &(x, y) in train {
            let residual = y - eval_coeffs(&theta, x);
            loss += huber(residual, &settings.loss);
            let slope = huber_grad(residual, &settings.loss);
            let mut power = 1.0;
            for g in grad.iter_mut() {
                *g -= slope * power;
                power *= x;
            }
        }
        if iteration == 0 {
            loss_ceiling = DIVERGENCE_LOSS_FACTOR * loss.max(1.0);
        }
        if loss.is_nan() || loss > loss_ceiling {
            return Err(DivergenceError { iteration });
        }
        let mut finite = true;
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= settings.learning_rate * g;
            finite &= t.is_finite();
        }
        if !finite {
            return Err(DivergenceError { iteration });
        }
    }
    Ok(PolyModel { coeffs: theta })
}

/// Summed Huber training loss of a model on a dataset.
pub fn training_loss(m: &PolyModel, data: &Dataset, loss: &HuberParams<f64>) -> f64 {
    data.iter()
        .map(|&(x, y)| huber(y - poly_eval(m, x), loss))
        .sum()
}

/// Root mean square error of the model on a dataset.
pub fn rmse(m: &PolyModel, test: &Dataset) -> f64 {
    assert!(!test.is_empty(), "rmse needs a non-empty dataset");
    let sum: f64 = test
        .iter()
        .map(|&(x, y)| {
            let d = y - poly_eval(m, x);
            d * d
        })
        .sum();
    (sum / test.len() as f64).sqrt()
}

/// One `(alpha, learning rate)` cell of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub alpha: f64,
    pub lr: f64,
    /// Test RMSE; `+inf` when the fit diverged.
    pub rmse: f64,
    pub diverged: bool,
}

/// Full grid-search outcome. `best_rmse` is the minimum over the table;
/// ties break towards the smallest `alpha`, then the smallest learning rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub best_alpha: f64,
    pub best_lr: f64,
    pub best_rmse: f64,
    pub table: Vec<GridCell>,
}

/// Every cell of the grid diverged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllDivergedError;

impl fmt::Display for AllDivergedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "every (alpha, learning rate) cell diverged")
    }
}

impl Error for AllDivergedError {}

/// Fit every `(alpha, lr)` cell on the train split and score it on the test
/// split. Cells run in parallel on shared datasets.
pub fn grid_search(
    cfg: &ToyConfig,
    alpha_grid: &[f64],
    lr_grid: &[f64],
    iterations: usize,
) -> Result<GridSearchResult, AllDivergedError> {
    assert!(
        !alpha_grid.is_empty() && !lr_grid.is_empty(),
        "grid_search needs non-empty grids"
    );
    let train = make_dataset(cfg, Split::Train);
    let test = make_dataset(cfg, Split::Test);

    let cells: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| lr_grid.iter().map(move |&lr| (a, lr)))
        .collect();

    let table: Vec<GridCell> = cells
        .into_par_iter()
        .map(|(alpha, lr)| {
            let settings = FitSettings {
                loss: HuberParams::new(alpha).expect("alpha grid entries must be positive"),
                learning_rate: lr,
                iterations,
                init: Init::Zeros,
            };
            match fit(&train, cfg.fit_degree_count, &settings) {
                Ok(model) => GridCell {
                    alpha,
                    lr,
                    rmse: rmse(&model, &test),
                    diverged: false,
                },
                Err(_) => GridCell {
                    alpha,
                    lr,
                    rmse: f64::INFINITY,
                    diverged: true,
                },
            }
        })
        .collect();

    let best = table
        .iter()
        .min_by(|a, b| {
            (a.rmse, a.alpha, a.lr)
                .partial_cmp(&(b.rmse, b.alpha, b.lr))
                .expect("rmse values are never NaN")
        })
        .expect("grid is non-empty");
    if best.diverged {
        return Err(AllDivergedError);
    }
    Ok(GridSearchResult {
        best_alpha: best.alpha,
        best_lr: best.lr,
        best_rmse: best.rmse,
        table,
    })
}

/// Winning cell of one sweep repeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepeatResult {
    pub optimal_alpha: f64,
    pub best_lr: f64,
    pub best_rmse: f64,
}

/// One noise scale of a sweep. A `None` repeat means every grid cell
/// diverged for that repeat's data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub scale: f64,
    /// Mean of `optimal_alpha` over the successful repeats; `None` when all
    /// repeats diverged.
    pub mean_optimal_alpha: Option<f64>,
    pub repeats: Vec<Option<RepeatResult>>,
}

/// Grid tables behind one sweep, per `(scale, repeat)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDetail {
    pub scale: f64,
    pub repeat: usize,
    pub seed: u64,
    pub grid: Option<GridSearchResult>,
}

/// Run [`grid_search`] once per `(scale, repeat)` with a fresh derived seed
/// and record the winning `alpha` curve.
///
/// A repeat whose whole grid diverges is flagged as a gap, not an error.
pub fn noise_sweep(
    base: &ToyConfig,
    noise_scales: &[f64],
    alpha_grid: &[f64],
    lr_grid: &[f64],
    iterations: usize,
    repeats: usize,
) -> (Vec<SweepPoint>, Vec<SweepDetail>) {
    assert!(
        !noise_scales.is_empty(),
        "noise_sweep needs at least one scale"
    );
    assert!(repeats >= 1, "noise_sweep needs at least one repeat");

    let sweep_root = RngState::new(base.seed).split(STREAM_SWEEP);
    let mut points = Vec::with_capacity(noise_scales.len());
    let mut details = Vec::with_capacity(noise_scales.len() * repeats);

    for (scale_index, &scale) in noise_scales.iter().enumerate() {
        let scale_root = sweep_root.split(scale_index as u64);
        let mut repeat_results = Vec::with_capacity(repeats);
        for repeat in 0..repeats {
            let seed = scale_root.split(repeat as u64).seed();
            let cfg = ToyConfig {
                noise: NoiseSpec {
                    family: base.noise.family,
                    scale,
                },
                seed,
                ..base.clone()
            };
            let grid = grid_search(&cfg, alpha_grid, lr_grid, iterations).ok();
            details.push(SweepDetail {
                scale,
                repeat,
                seed,
                grid: grid.clone(),
            });
            repeat_results.push(grid.map(|g| RepeatResult {
                optimal_alpha: g.best_alpha,
                best_lr: g.best_lr,
                best_rmse: g.best_rmse,
            }));
        }
        let successes: Vec<f64> = repeat_results
            .iter()
            .flatten()
            .map(|r| r.optimal_alpha)
            .collect();
        let mean = if successes.is_empty() {
            None
        } else {
            Some(successes.iter().sum::<f64>() / successes.len() as f64)
        };
        points.push(SweepPoint {
            scale,
            mean_optimal_alpha: mean,
            repeats: repeat_results,
        });
    }
    (points, details)
}
