//! Numeric verification suite for the loss and divergence invariants.
//!
//! Each check evaluates one invariant over deterministic grids or sampled
//! inputs and reports its worst violation against a tolerance. The CLI's
//! `verify` subcommand runs the whole suite and exits non-zero if any check
//! fails.

use std::fmt;

use crate::distributions::RngState;
use crate::divergence::{
    kl_numeric, laplace_cross_entropy, laplace_entropy, laplace_kl, LaplaceDist, QuadratureSpec,
};
use crate::losses::{
    huber, huber_grad, kl_loss, kl_loss_grad, kl_loss_hess, kl_loss_piecewise_approx,
    lower_bound_params, rescale_params, upper_bound_params, HuberParams, KlLossParams,
};

/// Tolerances of the verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceProfile {
    /// Relative slack of the bound sandwich, against `max(1, huber)`.
    pub sandwich_rel: f64,
    /// Tightness residuals at `x = 50 alpha`, against `max(1, alpha^2)`.
    pub tightness_rel: f64,
    /// Gradient vs central finite differences, relative.
    pub gradient_rel: f64,
    /// Hessian vs second-order central differences, relative.
    pub hessian_rel: f64,
    /// Second-order approximation for `|x| < alpha / 10`, relative.
    pub second_order_rel: f64,
    /// Rescale identity, against `max(1, |value|)`.
    pub rescale_rel: f64,
    /// Closed-form KL vs quadrature oracle, against `max(1, value)`.
    pub oracle_rel: f64,
    /// KL = cross entropy - entropy, against `max(1, |value|)`.
    pub identity_rel: f64,
    /// KL vs loss when all scales agree, against `max(1, |value|)`.
    pub linkage_rel: f64,
    /// Points per bound-sandwich grid.
    pub sandwich_grid: usize,
    /// Sampled cases for the quadrature oracle.
    pub oracle_cases: usize,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            sandwich_rel: 1e-12,
            tightness_rel: 1e-10,
            gradient_rel: 1e-5,
            hessian_rel: 1e-4,
            second_order_rel: 0.1,
            rescale_rel: 1e-12,
            oracle_rel: 1e-7,
            identity_rel: 1e-14,
            linkage_rel: 1e-14,
            sandwich_grid: 100_000,
            oracle_cases: 100,
        }
    }
}

/// Test hook: deliberately perturb derived parameters to prove the suite
/// catches violations. `lower_bound_alpha_factor` multiplies the label scale
/// of the lower-bound configuration; 1.0 is a no-op.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultInjection {
    pub lower_bound_alpha_factor: f64,
}

impl Default for FaultInjection {
    fn default() -> Self {
        Self {
            lower_bound_alpha_factor: 1.0,
        }
    }
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_violation: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Extra per-case numbers worth reporting, one line each.
    pub detail: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str, max_violation: f64, threshold: f64) -> Self {
        Self {
            name,
            max_violation,
            threshold,
            passed: max_violation <= threshold,
            detail: Vec::new(),
        }
    }

    fn with_detail(mut self, detail: Vec<String>) -> Self {
        self.detail = detail;
        self
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<24} max_violation={:9.3e} threshold={:9.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_violation,
            self.threshold,
        )
    }
}

/// Full suite outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&check.to_string());
            out.push('\n');
            for line in &check.detail {
                out.push_str("    ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

const ALPHAS: [f64; 3] = [0.1, 1.0, 10.0];
const SAMPLE_SEED: u64 = 0x5EED_CAFE;

fn sample_in(rng: &mut RngState, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_open01()
}

/// Run the whole invariant suite.
pub fn run_verify(profile: &ToleranceProfile, fault: Option<&FaultInjection>) -> VerifyReport {
    let fault = fault.copied().unwrap_or_default();
    let checks = vec![
        check_non_negativity(),
        check_even_symmetry(),
        check_bound_sandwich(profile, &fault),
        check_tightness_limits(profile),
        check_gradient_fd(profile),
        check_hessian_fd(profile),
        check_second_order(profile),
        check_piecewise_gap(),
        check_rescale_identity(profile),
        check_huber_grad_continuity(),
        check_kl_oracle(profile),
        check_kl_identity(profile),
        check_kl_non_negative(),
        check_loss_linkage(profile),
        check_case_symmetry(),
    ];
    VerifyReport { checks }
}

fn sampled_params(n: usize) -> Vec<KlLossParams<f64>> {
    let mut rng = RngState::new(SAMPLE_SEED).split(1);
    (0..n)
        .map(|_| {
            KlLossParams::new(
                sample_in(&mut rng, 0.05, 20.0),
                sample_in(&mut rng, 0.05, 20.0),
            )
            .unwrap()
        })
        .collect()
}

fn check_non_negativity() -> CheckResult {
    let mut rng = RngState::new(SAMPLE_SEED).split(2);
    let mut violation = 0.0f64;
    for p in sampled_params(50) {
        let hub = HuberParams::new(p.alpha()).unwrap();
        for _ in 0..200 {
            let x = sample_in(&mut rng, -100.0, 100.0);
            violation = violation.max(-kl_loss(x, &p)).max(-huber(x, &hub));
            if x != 0.0 && (kl_loss(x, &p) <= 0.0 || huber(x, &hub) <= 0.0) {
                violation = violation.max(1.0);
            }
        }
        if kl_loss(0.0, &p) != 0.0 || huber(0.0, &hub) != 0.0 {
            violation = violation.max(1.0);
        }
    }
    CheckResult::new("non-negativity", violation, 0.0)
}

fn check_even_symmetry() -> CheckResult {
    let mut rng = RngState::new(SAMPLE_SEED).split(3);
    let mut violation = 0.0f64;
    for p in sampled_params(50) {
        let hub = HuberParams::new(p.alpha()).unwrap();
        for _ in 0..200 {
            let x = sample_in(&mut rng, -100.0, 100.0);
            violation = violation
                .max((kl_loss(x, &p) - kl_loss(-x, &p)).abs())
                .max((huber(x, &hub) - huber(-x, &hub)).abs());
        }
    }
    CheckResult::new("even-symmetry", violation, 0.0)
}

fn check_bound_sandwich(profile: &ToleranceProfile, fault: &FaultInjection) -> CheckResult {
    let mut violation = f64::NEG_INFINITY;
    for alpha in ALPHAS {
        let hub = HuberParams::new(alpha).unwrap();
        let lower =
            KlLossParams::new(alpha * fault.lower_bound_alpha_factor, alpha.recip()).unwrap();
        let upper = upper_bound_params(alpha).unwrap();
        let n = profile.sandwich_grid;
        for i in 0..n {
            let x = -100.0 * alpha + 200.0 * alpha * i as f64 / (n - 1) as f64;
            let h = huber(x, &hub);
            let scale = h.max(1.0);
            violation = violation
                .max((kl_loss(x, &lower) - h) / scale)
                .max((h - kl_loss(x, &upper)) / scale);
        }
    }
    CheckResult::new("bound-sandwich", violation, profile.sandwich_rel)
}

fn check_tightness_limits(profile: &ToleranceProfile) -> CheckResult {
    let mut violation = 0.0f64;
    let mut detail = Vec::new();
    for alpha in ALPHAS {
        let hub = HuberParams::new(alpha).unwrap();
        let lower = lower_bound_params(alpha).unwrap();
        let upper = upper_bound_params(alpha).unwrap();
        let x = 50.0 * alpha;
        let h = huber(x, &hub);
        let upper_residual = (kl_loss(x, &upper) - h).abs();
        let lower_residual = (h - kl_loss(x, &lower) - 0.5 * alpha * alpha).abs();
        let scale = (alpha * alpha).max(1.0);
        violation = violation
            .max(upper_residual / scale)
            .max(lower_residual / scale);
        detail.push(format!(
            "alpha={alpha}: |upper - huber| = {upper_residual:e}, |huber - lower - alpha^2/2| = {lower_residual:e}"
        ));
    }
    CheckResult::new("tightness-limits", violation, profile.tightness_rel).with_detail(detail)
}

fn check_gradient_fd(profile: &ToleranceProfile) -> CheckResult {
    let mut violation = 0.0f64;
    for p in sampled_params(20) {
        let alpha = p.alpha();
        // Log-spaced |x| from 1e-3 alpha to 100 alpha, both signs. Below
        // that the finite difference hits the rounding floor of the direct
        // exponential evaluation, not a gradient defect.
        for i in 0..40 {
            let magnitude = 1e-3 * alpha * (1e5f64).powf(i as f64 / 39.0);
            for x in [magnitude, -magnitude] {
                let h = 1e-6 * x.abs().max(1.0);
                if x.abs() < 10.0 * h {
                    continue;
                }
                let fd = (kl_loss(x + h, &p) - kl_loss(x - h, &p)) / (2.0 * h);
                let g = kl_loss_grad(x, &p);
                violation = violation.max((fd - g).abs() / g.abs());
            }
        }
        // The analytic gradient vanishes at the origin and one-sided
        // quotients shrink towards it: |kl(h)/h| <= h / (alpha beta).
        if kl_loss_grad(0.0, &p) != 0.0 {
            violation = violation.max(1.0);
        }
        for h in [1e-2, 1e-3, 1e-4, 1e-5] {
            let h = h * alpha.max(1.0);
            let quotient = kl_loss(h, &p) / h;
            violation = violation.max(quotient.abs() * p.alpha() * p.beta() / h - 1.0);
        }
    }
    CheckResult::new("gradient-fd", violation.max(0.0), profile.gradient_rel)
}

fn check_hessian_fd(profile: &ToleranceProfile) -> CheckResult {
    let mut violation = 0.0f64;
    for p in sampled_params(20) {
        let alpha = p.alpha();
        // Second differences are only well conditioned where the curvature
        // has not decayed; stay within a few transition widths of zero.
        for i in 1..=25 {
            let x = 0.2 * alpha * i as f64;
            let h = 1e-4 * alpha.max(x);
            let fd = (kl_loss(x + h, &p) - 2.0 * kl_loss(x, &p) + kl_loss(x - h, &p)) / (h * h);
            let analytic = kl_loss_hess(x, &p);
            violation = violation.max((fd - analytic).abs() / analytic);
        }
        let at_zero = 1.0 / (p.alpha() * p.beta());
        if kl_loss_hess(0.0, &p) != at_zero {
            violation = violation.max(1.0);
        }
        // One-sided difference of the gradient at the origin.
        let h = 1e-4 * alpha;
        let one_sided = (kl_loss_grad(h, &p) - kl_loss_grad(0.0, &p)) / h;
        violation = violation.max((one_sided - at_zero).abs() / at_zero);
    }
    CheckResult::new("hessian-fd", violation, profile.hessian_rel)
}

fn check_second_order(profile: &ToleranceProfile) -> CheckResult {
    let mut violation = 0.0f64;
    for p in sampled_params(20) {
        let alpha = p.alpha();
        for i in 1..=50 {
            let x = alpha / 10.0 * i as f64 / 50.0;
            let quad = x * x / (2.0 * p.alpha() * p.beta());
            violation = violation.max((kl_loss(x, &p) - quad).abs() / quad);
        }
    }
    CheckResult::new("second-order-approx", violation, profile.second_order_rel)
}

fn check_piecewise_gap() -> CheckResult {
    let mut violation = 0.0f64;
    for p in sampled_params(20) {
        let bound = p.alpha() / p.beta();
        for i in 0..200 {
            let x = p.alpha() * 0.05 * i as f64;
            let gap = (kl_loss(x, &p) - kl_loss_piecewise_approx(x, &p)).abs();
            violation = violation.max(gap / bound - 1.0);
        }
        // The gap is the dropped exponential term; far out it is gone.
        let far =
            (kl_loss(60.0 * p.alpha(), &p) - kl_loss_piecewise_approx(60.0 * p.alpha(), &p)).abs();
        violation = violation.max(far / bound - 1e-15);
    }
    CheckResult::new("piecewise-gap", violation.max(0.0), 0.0)
}

fn check_rescale_identity(profile: &ToleranceProfile) -> CheckResult {
    let mut rng = RngState::new(SAMPLE_SEED).split(4);
    let mut violation = 0.0f64;
    for p in sampled_params(50) {
        for _ in 0..20 {
            let x = sample_in(&mut rng, -100.0, 100.0);
            let gamma = sample_in(&mut rng, 0.1, 10.0);
            let lambda = sample_in(&mut rng, 0.1, 10.0);
            let q = rescale_params(&p, gamma, lambda).unwrap();
            let lhs = lambda * kl_loss(gamma * x, &p);
            let rhs = kl_loss(x, &q);
            violation = violation.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    CheckResult::new("rescale-identity", violation, profile.rescale_rel)
}

fn check_huber_grad_continuity() -> CheckResult {
    let mut violation = 0.0f64;
    for alpha in [0.1f64, 0.7, 1.0, 3.0, 10.0] {
        let hub = HuberParams::new(alpha).unwrap();
        for x in [alpha, -alpha] {
            // Quadratic branch yields x; linear branch yields alpha sign(x).
            let quadratic = huber_grad(x, &hub);
            let linear = alpha * x.signum();
            violation = violation.max((quadratic - linear).abs());
        }
    }
    CheckResult::new("huber-grad-continuity", violation, 0.0)
}

fn sampled_dists(n: usize, split: u64) -> Vec<(LaplaceDist<f64>, LaplaceDist<f64>)> {
    let mut rng = RngState::new(SAMPLE_SEED).split(split);
    (0..n)
        .map(|_| {
            let p = LaplaceDist::new(
                sample_in(&mut rng, -10.0, 10.0),
                sample_in(&mut rng, 0.05, 20.0),
            )
            .unwrap();
            let q = LaplaceDist::new(
                sample_in(&mut rng, -10.0, 10.0),
                sample_in(&mut rng, 0.05, 20.0),
            )
            .unwrap();
            (p, q)
        })
        .collect()
}

fn check_kl_oracle(profile: &ToleranceProfile) -> CheckResult {
    let spec = QuadratureSpec::default();
    let mut violation = 0.0f64;
    let mut ordered = [false, false];
    for (p, q) in sampled_dists(profile.oracle_cases, 5) {
        ordered[usize::from(p.mu() < q.mu())] = true;
        let exact = laplace_kl(&p, &q);
        let estimate = kl_numeric(&p, &q, &spec).expect("default spec is valid");
        violation = violation.max((exact - estimate).abs() / exact.max(1.0));
    }
    // Both orderings of the locations must occur so the case-split integral
    // is exercised on both branches.
    if !(ordered[0] && ordered[1]) {
        violation = violation.max(1.0);
    }
    CheckResult::new("kl-oracle", violation, profile.oracle_rel)
}

fn check_kl_identity(profile: &ToleranceProfile) -> CheckResult {
    let mut violation = 0.0f64;
    for (p, q) in sampled_dists(200, 6) {
        let kl = laplace_kl(&p, &q);
        let via_entropy = laplace_cross_entropy(&p, &q) - laplace_entropy(&p);
        violation = violation.max((kl - via_entropy).abs() / kl.abs().max(1.0));
    }
    CheckResult::new("kl-identity", violation, profile.identity_rel)
}

fn check_kl_non_negative() -> CheckResult {
    let mut violation = 0.0f64;
    for (p, q) in sampled_dists(200, 7) {
        violation = violation.max(-laplace_kl(&p, &q) - 1e-14);
        if laplace_kl(&p, &p) != 0.0 {
            violation = violation.max(1.0);
        }
        // Distinct parameters must give a strictly positive divergence.
        if laplace_kl(&p, &q) <= 1e-14 && (p.mu() != q.mu() || p.b() != q.b()) {
            violation = violation.max(1.0);
        }
    }
    CheckResult::new("kl-non-negativity", violation.max(0.0), 0.0)
}

fn check_loss_linkage(profile: &ToleranceProfile) -> CheckResult {
    let mut rng = RngState::new(SAMPLE_SEED).split(8);
    let mut violation = 0.0f64;
    for _ in 0..200 {
        let mu1 = sample_in(&mut rng, -10.0, 10.0);
        let mu2 = sample_in(&mut rng, -10.0, 10.0);
        let alpha = sample_in(&mut rng, 0.05, 20.0);
        let p = LaplaceDist::new(mu1, alpha).unwrap();
        let q = LaplaceDist::new(mu2, alpha).unwrap();
        let kl = laplace_kl(&p, &q);
        let loss = kl_loss(mu1 - mu2, &KlLossParams::new(alpha, alpha).unwrap());
        violation = violation.max((kl - loss).abs() / kl.abs().max(1.0));
    }
    CheckResult::new("loss-linkage", violation, profile.linkage_rel)
}

fn check_case_symmetry() -> CheckResult {
    let mut violation = 0.0f64;
    for (p, q) in sampled_dists(200, 9) {
        let swapped_p = LaplaceDist::new(q.mu(), p.b()).unwrap();
        let swapped_q = LaplaceDist::new(p.mu(), q.b()).unwrap();
        violation = violation.max((laplace_kl(&p, &q) - laplace_kl(&swapped_p, &swapped_q)).abs());
    }
    CheckResult::new("location-swap-symmetry", violation, 0.0)
}
