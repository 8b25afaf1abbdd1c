//! Fitting-path checks against the independent least-squares oracle, plus
//! the Monte Carlo behaviour of the noise sweep at unit-test scale. The full
//! six-scale trend run lives in the acceptance suite.

mod common;

use common::{least_squares_fit, spearman};
use robust_loss_lab::distributions::{NoiseFamily, NoiseSpec};
use robust_loss_lab::losses::HuberParams;
use robust_loss_lab::toyfit::{
    fit, grid_search, make_dataset, noise_sweep, rmse, FitSettings, Init, PolyModel, Split,
    ToyConfig,
};

fn quintic() -> PolyModel {
    PolyModel::new(vec![-10.0, 20.0, 15.0, -25.0, -3.0, 6.0]).unwrap()
}

fn noiseless(n_samples: usize, k: usize, seed: u64) -> ToyConfig {
    ToyConfig {
        theta_star: quintic(),
        fit_degree_count: k,
        n_samples,
        delta: 2.0,
        noise: NoiseSpec::none(),
        seed,
    }
}

// In the pure quadratic regime (alpha far above every residual) gradient
// descent and the closed-form least-squares solve minimize the same
// objective, so their test errors must agree.
#[test]
fn small_scale_fit_matches_least_squares() {
    let cfg = noiseless(50, 3, 7);
    let train = make_dataset(&cfg, Split::Train);
    let test = make_dataset(&cfg, Split::Test);

    let ls = PolyModel::new(least_squares_fit(&train, 3)).unwrap();
    let settings = FitSettings {
        loss: HuberParams::new(1e6).unwrap(),
        learning_rate: 2e-3,
        iterations: 50_000,
        init: Init::Zeros,
    };
    let gd = fit(&train, 3, &settings).unwrap();

    // K < degree(theta_star): both solutions carry the same model bias.
    let gap = (rmse(&gd, &test) - rmse(&ls, &test)).abs();
    assert!(gap < 1e-2, "gap {gap}");
}

#[test]
fn full_degree_fit_recovers_the_polynomial() {
    let cfg = noiseless(200, 6, 11);
    let train = make_dataset(&cfg, Split::Train);
    let test = make_dataset(&cfg, Split::Test);

    let ls = PolyModel::new(least_squares_fit(&train, 6)).unwrap();
    assert!(rmse(&ls, &test) < 1e-6, "least squares should interpolate");

    let settings = FitSettings {
        loss: HuberParams::new(1e6).unwrap(),
        learning_rate: 6e-5,
        iterations: 60_000,
        init: Init::Zeros,
    };
    let gd = fit(&train, 6, &settings).unwrap();
    assert!(rmse(&gd, &test) < 1e-2, "rmse {}", rmse(&gd, &test));
}

#[test]
fn grid_search_subsumes_the_consistency_cell() {
    let cfg = noiseless(200, 6, 11);
    let result = grid_search(&cfg, &[1.0, 1e6], &[1e-7, 6e-5], 60_000).unwrap();
    assert!(result.best_rmse < 1e-2, "best_rmse {}", result.best_rmse);
    assert_eq!(result.table.len(), 4);
}

#[test]
fn spearman_helper_behaves() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[5.0, 1.0, 0.0]) + 1.0).abs() < 1e-12);
    // Average ranks on ties.
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]);
    assert!(rho > 0.9 && rho <= 1.0, "rho {rho}");
}

// Zero label noise: every transition point can drive the test error to the
// per-budget floor, so no alpha is meaningfully worse than another. The
// argmin itself lands on the largest grid value because wider quadratic
// regions descend fastest from the zero init at a fixed step budget.
#[test]
fn zero_noise_sweep_pins_its_winner() {
    let base = ToyConfig {
        theta_star: quintic(),
        fit_degree_count: 6,
        n_samples: 500,
        delta: 2.0,
        noise: NoiseSpec {
            family: NoiseFamily::Laplace,
            scale: 0.0,
        },
        seed: 42,
    };
    let (points, _) = noise_sweep(&base, &[0.0], &[0.25, 1.0, 4.0], &[6e-6, 2e-5], 20_000, 3);
    assert_eq!(points.len(), 1);
    for repeat in points[0].repeats.iter().flatten() {
        assert_eq!(repeat.optimal_alpha, 4.0);
        assert!(repeat.best_rmse < 0.02, "rmse {}", repeat.best_rmse);
    }
}

// Monte Carlo ordering: a bigger label-noise scale pushes the optimal
// transition point up.
#[test]
fn optimal_alpha_orders_with_the_noise_scale() {
    let base = ToyConfig {
        theta_star: quintic(),
        fit_degree_count: 6,
        n_samples: 2000,
        delta: 2.0,
        noise: NoiseSpec {
            family: NoiseFamily::Laplace,
            scale: 0.0,
        },
        seed: 42,
    };
    let (points, _) = noise_sweep(
        &base,
        &[0.4, 4.0],
        &[0.25, 1.0, 4.0],
        &[6e-6, 2e-5],
        40_000,
        5,
    );
    let low = points[0].mean_optimal_alpha.expect("no diverged repeats");
    let high = points[1].mean_optimal_alpha.expect("no diverged repeats");
    assert!(
        low < high,
        "expected mean optimal alpha to grow with the noise scale, got {low} vs {high}"
    );
}
