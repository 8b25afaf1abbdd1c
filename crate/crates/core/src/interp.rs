//! Interprets bounding-box-regression loss hyper-parameters as label and
//! prediction uncertainty scales.
//!
//! A detector regresses normalized targets: center displacements divided by
//! the anchor dimension, and log size ratios. With a target scaling `sigma`,
//! shift `mu`, loss weight `lambda` and Huber transition `alpha`, the
//! per-coordinate residual rewrites to `(displacement) / (sigma * anchor)`
//! for centers, and the same form for sizes under the first-order
//! approximation `ln r ~ r - 1`. Reading the weighted Huber loss as a
//! KL-Laplace loss via its lower bound then assigns
//!
//! ```text
//! label scale      = alpha * sigma * anchor
//! prediction scale = sigma * anchor / (alpha * w_eff)
//! ```
//!
//! where `w_eff` is the total loss weight: `lambda` for a raw `lambda * H_a`
//! loss, `lambda / alpha` when the implementation divides the Huber loss by
//! `alpha`. All arithmetic is exact rational; anchors stay symbolic.

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// Regressed box coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    CenterX,
    CenterY,
    Width,
    Height,
}

impl Coordinate {
    /// Anchor dimension the coordinate is normalized by.
    pub fn anchor_dim(&self) -> AnchorDim {
        match self {
            Coordinate::CenterX | Coordinate::Width => AnchorDim::AnchorWidth,
            Coordinate::CenterY | Coordinate::Height => AnchorDim::AnchorHeight,
        }
    }

    pub fn is_size(&self) -> bool {
        matches!(self, Coordinate::Width | Coordinate::Height)
    }
}

/// How the detector weights the Huber loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    /// `lambda * H_alpha(residual)`
    Raw,
    /// `(lambda / alpha) * H_alpha(residual)`
    AlphaScaled,
}

/// Symbolic anchor dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorDim {
    AnchorWidth,
    AnchorHeight,
}

impl AnchorDim {
    pub fn symbol(&self) -> &'static str {
        match self {
            AnchorDim::AnchorWidth => "w_a",
            AnchorDim::AnchorHeight => "h_a",
        }
    }
}

/// Loss hyper-parameters of one box coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateLossSpec {
    pub lambda: Rational,
    pub alpha: Rational,
    pub sigma: Rational,
    pub mu: Rational,
    pub loss_form: LossForm,
    pub coordinate: Coordinate,
}

/// Invalid interpretation input.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl Error for InterpError {}

impl CoordinateLossSpec {
    pub fn validate(&self) -> Result<(), InterpError> {
        for (name, value) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("sigma", self.sigma),
        ] {
            if !value.is_positive() {
                return Err(InterpError {
                    field: name.to_string(),
                    message: format!("must be > 0, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Total multiplier on the Huber loss.
    pub fn effective_weight(&self) -> Rational {
        match self.loss_form {
            LossForm::Raw => self.lambda,
            LossForm::AlphaScaled => self.lambda / self.alpha,
        }
    }
}

/// One detector's box-regression loss: a spec per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegressionConfig {
    pub name: String,
    pub x: CoordinateLossSpec,
    pub y: CoordinateLossSpec,
    pub w: CoordinateLossSpec,
    pub h: CoordinateLossSpec,
}

impl BoxRegressionConfig {
    pub fn validate(&self) -> Result<(), InterpError> {
        let expect = [
            ("x", &self.x, Coordinate::CenterX),
            ("y", &self.y, Coordinate::CenterY),
            ("w", &self.w, Coordinate::Width),
            ("h", &self.h, Coordinate::Height),
        ];
        for (field, spec, coordinate) in expect {
            if spec.coordinate != coordinate {
                return Err(InterpError {
                    field: format!("{}.coordinate", field),
                    message: format!("expected {coordinate:?}, got {:?}", spec.coordinate),
                });
            }
            spec.validate().map_err(|e| InterpError {
                field: format!("{}.{}", field, e.field),
                message: e.message,
            })?;
        }
        Ok(())
    }

    pub fn coordinates(&self) -> [&CoordinateLossSpec; 4] {
        [&self.x, &self.y, &self.w, &self.h]
    }
}

/// Exact coefficient times a symbolic anchor dimension, e.g. `2/5 * w_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncertaintyScale {
    pub coefficient: Rational,
    pub anchor_dim: AnchorDim,
}

impl fmt::Display for UncertaintyScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = self.anchor_dim.symbol();
        let (num, den) = (self.coefficient.num(), self.coefficient.den());
        match (num, den) {
            (1, 1) => write!(f, "{sym}"),
            (1, d) => write!(f, "{sym}/{d}"),
            (n, 1) => write!(f, "{n}*{sym}"),
            (n, d) => write!(f, "{n}*{sym}/{d}"),
        }
    }
}

/// Which side of the Huber/KL-Laplace sandwich the interpretation reads the
/// loss through. `Lower` (`H_a ~ D_{a,1/a}`) is the convention used
/// throughout; `Upper` (`H_a ~ D_{a/2,1/a}`) halves the label scale and is
/// exposed for sensitivity inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundConvention {
    #[default]
    Lower,
    Upper,
}

/// Rational coefficient `c` such that the residual scaling is
/// `c / anchor_dim`, i.e. `target residual = displacement * c / anchor`.
///
/// For centers this is exact; for sizes it holds under the first-order log
/// approximation. The coefficient is `1 / sigma`.
pub fn residual_gamma(spec: &CoordinateLossSpec) -> Rational {
    Rational::ONE / spec.sigma
}

/// Label and prediction uncertainty scales of one coordinate, under the
/// lower-bound convention.
pub fn interpret_coordinate(spec: &CoordinateLossSpec) -> (UncertaintyScale, UncertaintyScale) {
    interpret_coordinate_with(spec, BoundConvention::Lower)
}

/// Label and prediction uncertainty scales under a chosen bound convention.
pub fn interpret_coordinate_with(
    spec: &CoordinateLossSpec,
    convention: BoundConvention,
) -> (UncertaintyScale, UncertaintyScale) {
    let dim = spec.coordinate.anchor_dim();
    let w_eff = spec.effective_weight();
    let mut label = spec.alpha * spec.sigma;
    if convention == BoundConvention::Upper {
        label = label / Rational::from_int(2);
    }
    let prediction = spec.sigma / (spec.alpha * w_eff);
    (
        UncertaintyScale {
            coefficient: label,
            anchor_dim: dim,
        },
        UncertaintyScale {
            coefficient: prediction,
            anchor_dim: dim,
        },
    )
}

/// Dimensionless `(label, prediction)` scales of the exact log-domain
/// reading for size coordinates: the loss on `ln(pred) - ln(truth)` is
/// `D_{alpha sigma, sigma / (alpha w_eff)}`. `None` for centers.
pub fn log_domain_interpretation(spec: &CoordinateLossSpec) -> Option<(Rational, Rational)> {
    if !spec.coordinate.is_size() {
        return None;
    }
    let w_eff = spec.effective_weight();
    Some((spec.alpha * spec.sigma, spec.sigma / (spec.alpha * w_eff)))
}

/// Row labels of the interpretation table: ground-truth scales first, then
/// prediction scales, each in x, y, w, h order.
pub const ROW_LABELS: [&str; 8] = ["x*", "y*", "w*", "h*", "x~", "y~", "w~", "h~"];

/// Eight-row uncertainty table for one detector configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyTable {
    pub name: String,
    pub labels: [UncertaintyScale; 4],
    pub predictions: [UncertaintyScale; 4],
}

impl UncertaintyTable {
    /// Cells in table row order, paired with [`ROW_LABELS`].
    pub fn rows(&self) -> impl Iterator<Item = (&'static str, &UncertaintyScale)> {
        ROW_LABELS
            .iter()
            .copied()
            .zip(self.labels.iter().chain(self.predictions.iter()))
    }
}

/// Interpret all four coordinates of a configuration, lower-bound convention.
pub fn interpret_config(cfg: &BoxRegressionConfig) -> UncertaintyTable {
    interpret_config_with(cfg, BoundConvention::Lower)
}

/// Interpret all four coordinates under a chosen bound convention.
pub fn interpret_config_with(
    cfg: &BoxRegressionConfig,
    convention: BoundConvention,
) -> UncertaintyTable {
    let per_coord: Vec<(UncertaintyScale, UncertaintyScale)> = cfg
        .coordinates()
        .iter()
        .map(|spec| interpret_coordinate_with(spec, convention))
        .collect();
    UncertaintyTable {
        name: cfg.name.clone(),
        labels: [
            per_coord[0].0,
            per_coord[1].0,
            per_coord[2].0,
            per_coord[3].0,
        ],
        predictions: [
            per_coord[0].1,
            per_coord[1].1,
            per_coord[2].1,
            per_coord[3].1,
        ],
    }
}

/// Max of `|ln r - (r - 1)|` over an `n_grid`-point grid on
/// `[ratio_lo, ratio_hi]`, endpoints included.
///
/// The error function is decreasing below 1 and increasing above, so the
/// maximum sits at an endpoint.
pub fn log_target_approx_error(ratio_lo: f64, ratio_hi: f64, n_grid: usize) -> f64 {
    assert!(
        ratio_lo > 0.0 && ratio_lo <= ratio_hi,
        "need 0 < ratio_lo <= ratio_hi"
    );
    assert!(n_grid >= 1, "need at least one grid point");
    let step = if n_grid == 1 {
        0.0
    } else {
        (ratio_hi - ratio_lo) / (n_grid - 1) as f64
    };
    (0..n_grid)
        .map(|i| {
            let r = if i == n_grid - 1 {
                ratio_hi
            } else {
                ratio_lo + step * i as f64
            };
            (r.ln() - (r - 1.0)).abs()
        })
        .fold(0.0, f64::max)
}

fn spec(
    coordinate: Coordinate,
    lambda: Rational,
    alpha: Rational,
    sigma: Rational,
    loss_form: LossForm,
) -> CoordinateLossSpec {
    CoordinateLossSpec {
        lambda,
        alpha,
        sigma,
        mu: Rational::ZERO,
        loss_form,
        coordinate,
    }
}

fn config(
    name: &str,
    lambda: Rational,
    alpha: Rational,
    sigma_center: Rational,
    sigma_size: Rational,
    loss_form: LossForm,
) -> BoxRegressionConfig {
    BoxRegressionConfig {
        name: name.to_string(),
        x: spec(Coordinate::CenterX, lambda, alpha, sigma_center, loss_form),
        y: spec(Coordinate::CenterY, lambda, alpha, sigma_center, loss_form),
        w: spec(Coordinate::Width, lambda, alpha, sigma_size, loss_form),
        h: spec(Coordinate::Height, lambda, alpha, sigma_size, loss_form),
    }
}

/// The ten box-regression configurations of the case study: the published
/// and as-implemented two-stage detector settings plus three proposed
/// variants, each with its proposal and detection stage. All target shifts
/// are zero.
pub fn paper_table1_presets() -> Vec<BoxRegressionConfig> {
    let r = |n, d| Rational::new(n, d).unwrap();
    let one = Rational::ONE;
    vec![
        config(
            "publication-proposal",
            r(10, 1),
            one,
            one,
            one,
            LossForm::Raw,
        ),
        config(
            "publication-detection",
            r(10, 1),
            one,
            one,
            one,
            LossForm::Raw,
        ),
        config(
            "implementation-proposal",
            one,
            r(1, 9),
            one,
            one,
            LossForm::AlphaScaled,
        ),
        config(
            "implementation-detection",
            one,
            one,
            r(1, 10),
            r(1, 5),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-a-proposal",
            r(1, 4),
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-a-detection",
            r(1, 2),
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-b-proposal",
            r(1, 2),
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-b-detection",
            one,
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-c-proposal",
            r(1, 4),
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
        config(
            "experiment-c-detection",
            one,
            one,
            r(1, 20),
            r(1, 10),
            LossForm::AlphaScaled,
        ),
    ]
}

/// Look up a preset collection by name. `paper-table1` is the only one.
pub fn preset(name: &str) -> Option<Vec<BoxRegressionConfig>> {
    match name {
        "paper-table1" => Some(paper_table1_presets()),
        _ => None,
    }
}
