mod common;

use common::*;
use wgpca::core1d::{exp_map, exp_measure, wasserstein_sq_between, DiscreteMeasure1D, Grid1D, LoggedDataset};
use wgpca::logpca::{fit_log_pca, fit_log_pca_logged, logpca_reconstruction_error, logpca_reconstruction_errors};
use wgpca::Error;

fn gauss(grid: &Grid1D, m: f64, s: f64) -> DiscreteMeasure1D {
    DiscreteMeasure1D::from_fn(grid.clone(), |x| (-0.5 * ((x - m) / s).powi(2)).exp()).unwrap()
}

fn translates(grid: &Grid1D) -> LoggedDataset {
    let data: Vec<_> = [-1.0, -0.4, 0.2, 0.5, 0.7].iter().map(|&c| gauss(grid, c, 1.0)).collect();
    LoggedDataset::new(data, grid, 10_000).unwrap()
}

#[test]
fn translates_give_one_constant_direction() {
    let grid = Grid1D::uniform(-10.0, 10.0, 401).unwrap();
    let logged = translates(&grid);
    let m = fit_log_pca_logged(&logged, 2).unwrap();
    assert!(m.eigenvalues[1] <= 1e-4 * m.eigenvalues[0]);
    let u = &m.directions[0];
    let one = vec![1.0; grid.len()];
    let cos = logged.space.dot(u, &one).abs() / logged.space.norm(&one);
    assert!(cos >= 0.9999);
    assert!(logpca_reconstruction_error(&m, &logged, 1, 10_000).unwrap() <= 1e-6);
}

#[test]
fn identical_measures_have_no_variance() {
    let grid = Grid1D::uniform(-5.0, 5.0, 101).unwrap();
    let mu = gauss(&grid, 0.2, 0.9);
    let logged = LoggedDataset::with_barycenter(vec![mu.clone(); 4], mu).unwrap();
    let m = fit_log_pca_logged(&logged, 3).unwrap();
    assert!(m.eigenvalues.iter().all(|&l| l.abs() <= 1e-20));
    assert!(logpca_reconstruction_error(&m, &logged, 3, 1000).unwrap() <= 1e-20);
}

#[test]
fn location_scale_family_is_two_dimensional() {
    let logged = default_logged();
    let m = fit_log_pca_logged(&logged, 5).unwrap();
    assert!(m.eigenvalues[1] > 1e-2 * m.eigenvalues[0]);
    assert!(m.eigenvalues[2] <= 1e-4 * m.eigenvalues[0]);
    let res = m.linear_residual(&logged, 2).unwrap();
    assert!(res <= 1e-3 * logged.total_variance(), "residual {res}");
}

#[test]
fn directions_are_orthonormal_and_residual_is_the_spectral_tail() {
    let grid = Grid1D::uniform(-8.0, 8.0, 300).unwrap();
    let mut r = rng(41);
    let data: Vec<_> = (0..12).map(|_| random_histogram(&mut r, &grid)).collect();
    let logged = LoggedDataset::new(data, &grid, 4000).unwrap();
    let m = fit_log_pca_logged(&logged, 11).unwrap();
    for a in 0..m.k() {
        for b in 0..m.k() {
            let g = logged.space.dot(&m.directions[a], &m.directions[b]);
            let e = if a == b { 1.0 } else { 0.0 };
            assert!((g - e).abs() <= 1e-8, "<u{a}, u{b}> = {g}");
        }
    }
    assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    let floor = m.linear_residual(&logged, m.k()).unwrap();
    for kk in 0..=m.k() {
        let tail: f64 = m.eigenvalues[kk..].iter().sum();
        assert!((m.linear_residual(&logged, kk).unwrap() - floor - tail).abs() <= 1e-8);
    }
    // scores are inner products with the logs, largest |score| positive
    for k in 0..m.k() {
        for i in 0..m.n() {
            assert!((m.scores[i][k] - logged.space.dot(&logged.logs[i], &m.directions[k])).abs() <= 1e-12);
        }
        let top = m.scores.iter().map(|s| s[k]).max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        assert!(top > 0.0);
    }
}

#[test]
fn reconstruction_error_shrinks_with_more_components() {
    let grid = Grid1D::uniform(-8.0, 8.0, 256).unwrap();
    let mut r = rng(42);
    let data: Vec<_> = (0..10).map(|_| random_histogram(&mut r, &grid)).collect();
    let logged = LoggedDataset::new(data, &grid, 4000).unwrap();
    let m = fit_log_pca_logged(&logged, 9).unwrap();
    let errs: Vec<f64> = (0..=9).map(|k| logpca_reconstruction_error(&m, &logged, k, 4000).unwrap()).collect();
    assert!(errs.iter().all(|&e| e >= 0.0));
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{errs:?}");
    }
    // full rank: every datum comes back, up to the exp-log round trip
    // and the part of its log outside the fitted span
    for (i, e) in logpca_reconstruction_errors(&m, &logged, 9, 4000).unwrap().iter().enumerate() {
        let lin = logged.space.dist_sq(&logged.logs[i], &m.projection(i, 9).unwrap());
        let trip = wasserstein_sq_between(&exp_measure(&logged.barycenter, &logged.logs[i]).unwrap(), &logged.data[i], 4000)
            .unwrap();
        assert!(e.sqrt() <= trip.sqrt() + lin.sqrt() + 1e-9, "datum {i}: {e} vs {trip} + {lin}");
        assert!(*e <= 1e-4 * logged.space.norm_sq(&logged.logs[i]), "datum {i}: {e}");
    }
}

#[test]
fn zero_projection_returns_the_barycenter() {
    let grid = Grid1D::uniform(-10.0, 10.0, 401).unwrap();
    let logged = translates(&grid);
    let m = fit_log_pca_logged(&logged, 2).unwrap();
    let back = m.reconstruct(0, 0).unwrap();
    assert!(wasserstein_sq_between(&back, &m.barycenter, 10_000).unwrap() <= 1e-18);
}

#[test]
fn folded_reconstructions_keep_unit_mass() {
    // two scale families far apart: projected maps fold for some data
    let grid = Grid1D::uniform(-10.0, 10.0, 256).unwrap();
    let data: Vec<_> = [(-3.0, 0.3), (3.0, 3.0), (0.0, 0.4), (-1.0, 2.5), (2.0, 0.3)]
        .iter()
        .map(|&(m, s)| gauss(&grid, m, s))
        .collect();
    let m = fit_log_pca(&data, 1, 10_000).unwrap();
    let folds = m.fold_counts(1).unwrap();
    assert!(folds.iter().any(|&f| f > 0), "no fold produced");
    for i in 0..m.n() {
        let g = m.reconstruct(i, 1).unwrap();
        assert!((g.grid().integrate(g.density()) - 1.0).abs() <= 1e-3);
        assert!(g.density().iter().all(|x| x.is_finite()));
    }
    let v = m.projection(0, 1).unwrap();
    let g = exp_map(&m.barycenter, &v).unwrap();
    assert!(g.density().iter().all(|x| x.is_finite()));
}

#[test]
fn bad_requests_are_rejected() {
    let grid = Grid1D::uniform(-10.0, 10.0, 101).unwrap();
    let logged = translates(&grid);
    assert!(matches!(fit_log_pca_logged(&logged, 5), Err(Error::Parameter(_))));
    assert!(matches!(fit_log_pca_logged(&logged, 0), Err(Error::Parameter(_))));
    let m = fit_log_pca_logged(&logged, 2).unwrap();
    assert!(matches!(m.reconstruct(9, 1), Err(Error::Parameter(_))));
    assert!(matches!(m.reconstruct(0, 3), Err(Error::Parameter(_))));
    assert!(matches!(fit_log_pca(&[gauss(&grid, 0.0, 1.0)], 1, 100), Err(Error::Parameter(_))));
}
