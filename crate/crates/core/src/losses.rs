//! Robust loss functions for scalar regression residuals.
//!
//! The Huber loss `H_a(x)` is quadratic for `|x| <= a` and linear beyond.
//! The KL-Laplace loss
//!
//! ```text
//! D_{a,b}(x) = (a * exp(-|x|/a) + |x| - a) / b
//! ```
//!
//! is the Kullback-Leibler divergence between two Laplace distributions with
//! location difference `x`, label-noise scale `a` and prediction-noise scale
//! `b`, shifted so its minimum is zero. The two losses sandwich each other:
//!
//! ```text
//! D_{a,1/a}(x) <= H_a(x) <= D_{a/2,1/a}(x)
//! ```
//!
//! with both bounds tight (see [`lower_bound_params`] / [`upper_bound_params`]).
//! [`rescale_params`] and [`huber_equivalent_params`] implement the exact
//! calculus for absorbing input and output scalings into the parameters.

use std::error::Error;
use std::fmt;

use crate::scalar::Real;

/// Invalid loss parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamError {
    /// The named parameter is NaN or infinite.
    NonFinite { name: &'static str, value: f64 },
    /// The named parameter is zero or negative.
    NonPositive { name: &'static str, value: f64 },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { name, value } => write!(f, "{name} must be finite, got {value}"),
            Self::NonPositive { name, value } => write!(f, "{name} must be > 0, got {value}"),
        }
    }
}

impl Error for ParamError {}

fn check_positive<F: Real>(name: &'static str, value: F) -> Result<F, ParamError> {
    let as_f64 = value.to_f64().unwrap_or(f64::NAN);
    if !value.is_finite() {
        Err(ParamError::NonFinite {
            name,
            value: as_f64,
        })
    } else if value <= F::zero() {
        Err(ParamError::NonPositive {
            name,
            value: as_f64,
        })
    } else {
        Ok(value)
    }
}

/// Transition point of the Huber loss.
///
/// `alpha` is the residual magnitude where the loss switches from quadratic
/// to linear behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams<F> {
    alpha: F,
}

impl<F: Real> HuberParams<F> {
    /// Rejects non-finite and non-positive transition points.
    pub fn new(alpha: F) -> Result<Self, ParamError> {
        Ok(Self {
            alpha: check_positive("alpha", alpha)?,
        })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }
}

/// Parameters of the KL-Laplace loss: label-noise scale `alpha` and
/// prediction-noise scale `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlLossParams<F> {
    alpha: F,
    beta: F,
}

impl<F: Real> KlLossParams<F> {
    /// Rejects non-finite and non-positive scales.
    pub fn new(alpha: F, beta: F) -> Result<Self, ParamError> {
        Ok(Self {
            alpha: check_positive("alpha", alpha)?,
            beta: check_positive("beta", beta)?,
        })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }
}

/// Absolute-value loss `|x|`.
pub fn l1<F: Real>(x: F) -> F {
    x.abs()
}

/// Half squared loss `x^2 / 2`.
pub fn l2<F: Real>(x: F) -> F {
    F::from_f64(0.5) * x * x
}

/// Huber loss: `x^2 / 2` for `|x| <= alpha`, `alpha * (|x| - alpha/2)` beyond.
///
/// Continuous and once differentiable at the transition.
pub fn huber<F: Real>(x: F, p: &HuberParams<F>) -> F {
    let a = p.alpha;
    let ax = x.abs();
    if ax <= a {
        F::from_f64(0.5) * x * x
    } else {
        a * (ax - F::from_f64(0.5) * a)
    }
}

/// Derivative of [`huber`]: `x` inside the transition, `alpha * sign(x)` beyond.
///
/// Both branches agree at `|x| = alpha`, so the value there is simply `x`.
pub fn huber_grad<F: Real>(x: F, p: &HuberParams<F>) -> F {
    let a = p.alpha;
    if x.abs() <= a {
        x
    } else {
        a * x.signum()
    }
}

/// KL-Laplace loss `(alpha * exp(-|x|/alpha) + |x| - alpha) / beta`.
///
/// Non-negative, even in `x`, and zero only at `x = 0`. The exponential term
/// is evaluated directly; for small `|x|/alpha` the quadratic regime dominates
/// and the absolute rounding error stays below `1e-15 * alpha / beta`.
pub fn kl_loss<F: Real>(x: F, p: &KlLossParams<F>) -> F {
    let a = p.alpha;
    let ax = x.abs();
    (a * (-ax / a).exp() + ax - a) / p.beta
}

/// Derivative of [`kl_loss`]: `sign(x) * (1 - exp(-|x|/alpha)) / beta`.
///
/// The derivative exists at zero and equals zero there.
pub fn kl_loss_grad<F: Real>(x: F, p: &KlLossParams<F>) -> F {
    if x == F::zero() {
        return F::zero();
    }
    x.signum() * (F::one() - (-x.abs() / p.alpha).exp()) / p.beta
}

/// Second derivative of [`kl_loss`]: `exp(-|x|/alpha) / (alpha * beta)`.
///
/// Exists at zero, where it equals `1 / (alpha * beta)`.
pub fn kl_loss_hess<F: Real>(x: F, p: &KlLossParams<F>) -> F {
    (-x.abs() / p.alpha).exp() / (p.alpha * p.beta)
}

/// Piecewise approximation of [`kl_loss`] obtained by dropping the
/// exponential term: `x^2 / (2 alpha beta)` for `|x| <= alpha`, else
/// `(|x| - alpha) / beta`.
///
/// The gap to the exact loss is at most `alpha / beta` and vanishes as
/// `|x| / alpha` grows.
pub fn kl_loss_piecewise_approx<F: Real>(x: F, p: &KlLossParams<F>) -> F {
    let a = p.alpha;
    let ax = x.abs();
    if ax <= a {
        x * x / (F::from_f64(2.0) * a * p.beta)
    } else {
        (ax - a) / p.beta
    }
}

/// Parameters `(alpha, 1/alpha)` for which the KL-Laplace loss bounds the
/// Huber loss with transition `alpha` from below, tightly.
pub fn lower_bound_params<F: Real>(alpha: F) -> Result<KlLossParams<F>, ParamError> {
    let alpha = check_positive("alpha", alpha)?;
    KlLossParams::new(alpha, alpha.recip())
}

/// Parameters `(alpha/2, 1/alpha)` for which the KL-Laplace loss bounds the
/// Huber loss with transition `alpha` from above, tightly.
pub fn upper_bound_params<F: Real>(alpha: F) -> Result<KlLossParams<F>, ParamError> {
    let alpha = check_positive("alpha", alpha)?;
    KlLossParams::new(F::from_f64(0.5) * alpha, alpha.recip())
}

/// Absorbs an input scaling `gamma` and an output weight `lambda` into the
/// parameters: `lambda * kl_loss(gamma * x, p)` equals
/// `kl_loss(x, rescale_params(p, gamma, lambda))` exactly, for all `x`.
pub fn rescale_params<F: Real>(
    p: &KlLossParams<F>,
    gamma: F,
    lambda: F,
) -> Result<KlLossParams<F>, ParamError> {
    let gamma = check_positive("gamma", gamma)?;
    let lambda = check_positive("lambda", lambda)?;
    KlLossParams::new(p.alpha / gamma, p.beta / (gamma * lambda))
}

/// KL-Laplace parameters `(alpha/gamma, 1/(alpha gamma lambda))` for which
/// `lambda * huber(gamma * x, alpha)` is approximated by
/// `kl_loss(x, huber_equivalent_params(alpha, gamma, lambda))`.
///
/// This is the lower-bound reading of the sandwich, `H_a ~ D_{a,1/a}`,
/// carried through [`rescale_params`]; the true value sits between this
/// configuration and the one derived from [`upper_bound_params`].
pub fn huber_equivalent_params<F: Real>(
    alpha: F,
    gamma: F,
    lambda: F,
) -> Result<KlLossParams<F>, ParamError> {
    let alpha = check_positive("alpha", alpha)?;
    let gamma = check_positive("gamma", gamma)?;
    let lambda = check_positive("lambda", lambda)?;
    KlLossParams::new(alpha / gamma, (alpha * gamma * lambda).recip())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(alpha: f64) -> HuberParams<f64> {
        HuberParams::new(alpha).unwrap()
    }

    fn kp(alpha: f64, beta: f64) -> KlLossParams<f64> {
        KlLossParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(HuberParams::new(0.0).is_err());
        assert!(HuberParams::new(-1.0).is_err());
        assert!(HuberParams::new(f64::NAN).is_err());
        assert!(HuberParams::new(f64::INFINITY).is_err());
        assert!(KlLossParams::new(1.0, 0.0).is_err());
        assert!(KlLossParams::new(-2.0, 1.0).is_err());
        assert!(KlLossParams::new(1.0, f64::NAN).is_err());
        let err = KlLossParams::<f64>::new(1.0, -3.0).unwrap_err();
        assert_eq!(
            err,
            ParamError::NonPositive {
                name: "beta",
                value: -3.0
            }
        );
    }

    #[test]
    fn l1_values() {
        assert_eq!(l1(0.0), 0.0);
        assert_eq!(l1(-3.0), 3.0);
        assert_eq!(l1(2.5), 2.5);
    }

    #[test]
    fn l2_values() {
        assert_eq!(l2(0.0), 0.0);
        assert_eq!(l2(2.0), 2.0);
        assert_eq!(l2(-2.0), 2.0);
    }

    #[test]
    fn huber_values() {
        let p = hp(1.0);
        assert_eq!(huber(0.0, &p), 0.0);
        assert_eq!(huber(1.0, &p), 0.5);
        assert_eq!(huber(3.0, &p), 2.5);
    }

    #[test]
    fn huber_grad_values() {
        assert_eq!(huber_grad(0.0, &hp(1.0)), 0.0);
        assert_eq!(huber_grad(0.5, &hp(1.0)), 0.5);
        assert_eq!(huber_grad(-7.0, &hp(2.0)), -2.0);
    }

    #[test]
    fn huber_grad_continuous_at_transition() {
        for alpha in [0.1, 1.0, 10.0] {
            let p = hp(alpha);
            // Quadratic branch value at |x| = alpha equals the linear branch value.
            assert_eq!(huber_grad(alpha, &p), alpha);
            assert_eq!(huber_grad(-alpha, &p), -alpha);
            assert_eq!(alpha * alpha.signum(), alpha);
        }
    }

    #[test]
    fn kl_loss_values() {
        let p = kp(1.0, 1.0);
        assert_eq!(kl_loss(0.0, &p), 0.0);
        let expected = (-10.0f64).exp() + 9.0;
        assert!((kl_loss(10.0, &p) - expected).abs() < 1e-15);
        for x in [0.25, 1.0, 3.5, 80.0] {
            assert_eq!(kl_loss(x, &p), kl_loss(-x, &p));
        }
    }

    #[test]
    fn kl_loss_grad_values() {
        assert_eq!(kl_loss_grad(0.0, &kp(1.0, 1.0)), 0.0);
        assert_eq!(kl_loss_grad(0.0, &kp(0.3, 7.0)), 0.0);
        let g = kl_loss_grad(100.0, &kp(1.0, 2.0));
        assert!((g - 0.5).abs() < 1e-15);
        let g = kl_loss_grad(-1.0, &kp(1.0, 1.0));
        assert!((g + (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn kl_loss_hess_values() {
        // Limit at zero is 1/(alpha beta), exactly.
        assert_eq!(kl_loss_hess(0.0, &kp(2.0, 3.0)), 1.0 / 6.0);
        let h = kl_loss_hess(1.0, &kp(1.0, 1.0));
        assert!((h - (-1.0f64).exp()).abs() < 1e-16);
        assert!(kl_loss_hess(1e4, &kp(1.0, 1.0)) < 1e-300);
    }

    #[test]
    fn piecewise_approx_values() {
        assert_eq!(kl_loss_piecewise_approx(0.0, &kp(1.0, 1.0)), 0.0);
        assert_eq!(kl_loss_piecewise_approx(0.5, &kp(1.0, 1.0)), 0.125);
        assert_eq!(kl_loss_piecewise_approx(3.0, &kp(1.0, 2.0)), 1.0);
    }

    #[test]
    fn bound_param_configurations() {
        let lo = lower_bound_params(1.0).unwrap();
        assert_eq!((lo.alpha(), lo.beta()), (1.0, 1.0));
        let lo = lower_bound_params(10.0).unwrap();
        assert_eq!((lo.alpha(), lo.beta()), (10.0, 0.1));
        let lo = lower_bound_params(0.1).unwrap();
        assert_eq!((lo.alpha(), lo.beta()), (0.1, 10.0));

        let up = upper_bound_params(1.0).unwrap();
        assert_eq!((up.alpha(), up.beta()), (0.5, 1.0));
        let up = upper_bound_params(10.0).unwrap();
        assert_eq!((up.alpha(), up.beta()), (5.0, 0.1));
        let up = upper_bound_params(2.0).unwrap();
        assert_eq!((up.alpha(), up.beta()), (1.0, 0.5));
    }

    #[test]
    fn rescale_param_examples() {
        let p = rescale_params(&kp(1.0, 1.0), 2.0, 1.0).unwrap();
        assert_eq!((p.alpha(), p.beta()), (0.5, 0.5));
        let p = rescale_params(&kp(1.0, 1.0), 1.0, 4.0).unwrap();
        assert_eq!((p.alpha(), p.beta()), (1.0, 0.25));
        let p = rescale_params(&kp(0.7, 3.0), 1.0, 1.0).unwrap();
        assert_eq!((p.alpha(), p.beta()), (0.7, 3.0));
    }

    #[test]
    fn huber_equivalent_param_examples() {
        let p = huber_equivalent_params(1.0, 1.0, 1.0).unwrap();
        assert_eq!((p.alpha(), p.beta()), (1.0, 1.0));

        // gamma = 1/w with weight 10 maps to scales (w, w/10).
        let w = 16.0f64;
        let p = huber_equivalent_params(1.0, 1.0 / w, 10.0).unwrap();
        assert!((p.alpha() - w).abs() < 1e-12 * w);
        assert!((p.beta() - w / 10.0).abs() < 1e-12 * w);

        // alpha = 1/9 with weight 9 maps to scales (w/9, w).
        let p = huber_equivalent_params(1.0 / 9.0, 1.0 / w, 9.0).unwrap();
        assert!((p.alpha() - w / 9.0).abs() < 1e-12 * w);
        assert!((p.beta() - w).abs() < 1e-12 * w);
    }

    #[test]
    fn second_order_approximation_near_zero() {
        for (alpha, beta) in [(1.0, 1.0), (0.1, 3.0), (10.0, 0.2)] {
            let p = kp(alpha, beta);
            for i in 1..=50 {
                let x = alpha / 10.0 * i as f64 / 50.0;
                let quad = x * x / (2.0 * alpha * beta);
                let rel = (kl_loss(x, &p) - quad).abs() / quad;
                assert!(rel < 0.1, "alpha={alpha} x={x} rel={rel}");
            }
        }
    }

    #[test]
    fn piecewise_gap_bounded_and_vanishing() {
        for (alpha, beta) in [(1.0, 1.0), (0.1, 3.0), (10.0, 0.2)] {
            let p = kp(alpha, beta);
            let bound = alpha / beta;
            let mut last = f64::INFINITY;
            for i in 0..400 {
                let x = alpha * (0.05 * i as f64);
                let gap = (kl_loss(x, &p) - kl_loss_piecewise_approx(x, &p)).abs();
                assert!(gap <= bound + 1e-15, "gap {gap} exceeds {bound}");
                if x > alpha {
                    assert!(gap <= last + 1e-15);
                    last = gap;
                }
            }
            let far =
                (kl_loss(60.0 * alpha, &p) - kl_loss_piecewise_approx(60.0 * alpha, &p)).abs();
            assert!(far < 1e-20 * bound.max(1.0));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let p = KlLossParams::<f32>::new(1.0, 1.0).unwrap();
        assert_eq!(kl_loss(0.0f32, &p), 0.0);
        assert!((kl_loss(10.0f32, &p) - 9.000045).abs() < 1e-5);
        let h = HuberParams::<f32>::new(1.0).unwrap();
        assert_eq!(huber(3.0f32, &h), 2.5);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = KlLossParams<f64>> {
            ((0.05f64..20.0), (0.05f64..20.0)).prop_map(|(a, b)| KlLossParams::new(a, b).unwrap())
        }

        proptest! {
            #[test]
            fn non_negative_and_zero_only_at_origin(
                x in -1e3f64..1e3,
                p in params(),
                alpha in 0.01f64..100.0,
            ) {
                let hub = HuberParams::new(alpha).unwrap();
                prop_assert!(kl_loss(x, &p) >= 0.0);
                prop_assert!(huber(x, &hub) >= 0.0);
                if x != 0.0 {
                    prop_assert!(kl_loss(x, &p) > 0.0);
                    prop_assert!(huber(x, &hub) > 0.0);
                }
            }

            #[test]
            fn even_symmetry_exact(x in -1e3f64..1e3, p in params(), alpha in 0.01f64..100.0) {
                let hub = HuberParams::new(alpha).unwrap();
                prop_assert_eq!(kl_loss(x, &p), kl_loss(-x, &p));
                prop_assert_eq!(huber(x, &hub), huber(-x, &hub));
            }

            #[test]
            fn sandwich_holds_pointwise(x in -1e3f64..1e3, alpha in 0.01f64..100.0) {
                let hub = HuberParams::new(alpha).unwrap();
                let lo = lower_bound_params(alpha).unwrap();
                let up = upper_bound_params(alpha).unwrap();
                let h = huber(x, &hub);
                let slack = 1e-12 * h.max(1.0);
                prop_assert!(kl_loss(x, &lo) <= h + slack);
                prop_assert!(h <= kl_loss(x, &up) + slack);
            }

            #[test]
            fn rescale_identity(
                x in -100.0f64..100.0,
                p in params(),
                gamma in 0.1f64..10.0,
                lambda in 0.1f64..10.0,
            ) {
                let q = rescale_params(&p, gamma, lambda).unwrap();
                let lhs = lambda * kl_loss(gamma * x, &p);
                let rhs = kl_loss(x, &q);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
    }
}
