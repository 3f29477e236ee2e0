mod common;

use rand::Rng;

use common::*;
use wgpca::core1d::{
    barycenter, exp_map, exp_measure, feasibility_violation, log_map, pushforward, pushforward_density,
    wasserstein_distance, wasserstein_sq_between, DiscreteMeasure1D, Grid1D, LoggedDataset, QuantileFn,
    TangentSpace,
};
use wgpca::Error;

fn gauss(grid: &Grid1D, m: f64, s: f64) -> DiscreteMeasure1D {
    DiscreteMeasure1D::from_fn(grid.clone(), |x| (-0.5 * ((x - m) / s).powi(2)).exp()).unwrap()
}

fn bump(grid: &Grid1D, lo: f64, hi: f64) -> DiscreteMeasure1D {
    DiscreteMeasure1D::from_fn(grid.clone(), |x| if x >= lo && x <= hi { 1.0 } else { 0.0 }).unwrap()
}

/// Level `alpha` quantile by bisection on a fine Riemann sum of `f`.
fn brute_quantile(f: impl Fn(f64) -> f64, a: f64, b: f64, alpha: f64) -> f64 {
    let m = 200_000;
    let h = (b - a) / m as f64;
    let masses: Vec<f64> = (0..m).map(|i| f(a + (i as f64 + 0.5) * h) * h).collect();
    let total: f64 = masses.iter().sum();
    let mut acc = 0.0;
    for (i, w) in masses.iter().enumerate() {
        if acc + w >= alpha * total {
            return a + (i as f64 + (alpha * total - acc) / w) * h;
        }
        acc += w;
    }
    b
}

#[test]
fn uniform_quantile_table() {
    let grid = Grid1D::uniform(0.0, 1.0, 11).unwrap();
    let q = DiscreteMeasure1D::from_fn(grid, |_| 1.0).unwrap().quantile(5).unwrap();
    for (x, e) in q.quantile.iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
        assert!((x - e).abs() < 1e-12);
    }
    assert!(q.cdf.windows(2).all(|w| w[1] >= w[0]));
    assert!((q.cdf.last().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn concentrated_quantile_sits_on_its_cell() {
    let grid = Grid1D::uniform(0.0, 10.0, 101).unwrap();
    let mut d = vec![0.0; 101];
    d[40] = 10.0;
    let m = DiscreteMeasure1D::new(grid, d).unwrap();
    let q = m.quantile(50).unwrap();
    for x in &q.quantile[1..] {
        assert!((x - 4.0).abs() <= 0.1 + 1e-12);
    }
}

#[test]
fn gaussian_quantiles_match_brute_inversion() {
    let grid = Grid1D::uniform(-5.0, 5.0, 201).unwrap();
    let m = gauss(&grid, 0.0, 1.0);
    let q = m.quantile(1001).unwrap();
    assert!(q.quantile[500].abs() <= grid.spacing(0));
    let f = |x: f64| (-0.5 * x * x).exp();
    for (k, alpha) in [(100, 0.1), (250, 0.25), (900, 0.9)] {
        let oracle = brute_quantile(f, -5.0, 5.0, alpha);
        assert!((q.quantile[k] - oracle).abs() <= grid.spacing(0), "alpha {alpha}: {} vs {oracle}", q.quantile[k]);
    }
}

#[test]
fn quantile_inverts_the_cdf_on_the_support() {
    let grid = Grid1D::uniform(-6.0, 6.0, 241).unwrap();
    let mut r = rng(3);
    for _ in 0..5 {
        let m = random_histogram(&mut r, &grid);
        for &x in grid.points().iter().step_by(7) {
            let a = m.cdf(x);
            if a <= 1e-9 || a >= 1.0 - 1e-9 {
                continue;
            }
            assert!((m.quantile_at(a) - x).abs() <= grid.spacing(0));
        }
    }
}

#[test]
fn non_normalized_measure_is_rejected() {
    let grid = Grid1D::uniform(0.0, 1.0, 11).unwrap();
    assert!(matches!(DiscreteMeasure1D::new(grid, vec![2.0; 11]), Err(Error::Validation(_))));
}

#[test]
fn distance_examples() {
    let grid = Grid1D::uniform(-1.0, 2.0, 3001).unwrap();
    let mu = bump(&grid, 0.0, 1.0);
    assert_eq!(wasserstein_distance(&mu, &mu, 10_000).unwrap(), 0.0);
    // exact translate by 300 cells
    let mut shifted = vec![0.0; grid.len()];
    shifted[300..].copy_from_slice(&mu.density()[..grid.len() - 300]);
    let nu = DiscreteMeasure1D::new(grid.clone(), shifted).unwrap();
    let d = wasserstein_distance(&mu, &nu, 10_000).unwrap();
    assert!((d - 0.3).abs() <= 1e-4, "d = {d}");
    assert!((d - wasserstein_distance(&nu, &mu, 10_000).unwrap()).abs() < 1e-14);

    let grid = Grid1D::uniform(-10.0, 10.0, 2001).unwrap();
    let d = wasserstein_distance(&gauss(&grid, 0.0, 1.0), &gauss(&grid, 1.0, 2.0), 10_000).unwrap();
    assert!((d - 2f64.sqrt()).abs() <= 1e-3, "d = {d}");
    assert!(matches!(wasserstein_distance(&mu, &mu, 1), Err(Error::Parameter(_))));
}

#[test]
fn distance_across_different_grids() {
    let a = gauss(&Grid1D::uniform(-8.0, 8.0, 801).unwrap(), 0.5, 1.0);
    let b = gauss(&Grid1D::uniform(-6.0, 9.0, 1201).unwrap(), -0.5, 1.0);
    assert!((wasserstein_distance(&a, &b, 10_000).unwrap() - 1.0).abs() <= 1e-3);
}

#[test]
fn barycenter_of_repeated_measure_is_itself() {
    let grid = Grid1D::uniform(-6.0, 6.0, 241).unwrap();
    let mut r = rng(11);
    let mu = random_histogram(&mut r, &grid);
    let bar = barycenter(&[mu.clone(), mu.clone()], &grid, 4000).unwrap();
    let (qa, qb) = (mu.quantile(200).unwrap(), bar.quantile(200).unwrap());
    for (x, y) in qa.quantile[1..199].iter().zip(&qb.quantile[1..199]) {
        assert!((x - y).abs() <= grid.spacing(0));
    }
}

#[test]
fn barycenter_of_gaussians_averages_parameters() {
    let grid = Grid1D::uniform(-10.0, 10.0, 512).unwrap();
    let params = [(-1.0, 0.8), (0.5, 1.5), (2.0, 1.0), (0.0, 1.2)];
    let data: Vec<_> = params.iter().map(|&(m, s)| gauss(&grid, m, s)).collect();
    let bar = barycenter(&data, &grid, 10_000).unwrap();
    let m = params.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let s = params.iter().map(|p| p.1).sum::<f64>() / 4.0;
    assert!((bar.mean() - m).abs() <= 1e-2, "mean {}", bar.mean());
    assert!((bar.std_dev() - s).abs() <= 1e-2, "sd {}", bar.std_dev());
    assert!(matches!(barycenter(&[], &grid, 100), Err(Error::Parameter(_))));
}

#[test]
fn disjoint_bumps_average_to_the_middle() {
    let grid = Grid1D::uniform(-5.0, 5.0, 1001).unwrap();
    let bar = barycenter(&[bump(&grid, -3.5, -2.5), bump(&grid, 2.5, 3.5)], &grid, 10_000).unwrap();
    assert!(bar.mean().abs() <= 1e-3);
    let target = bump(&grid, -0.5, 0.5);
    assert!(wasserstein_distance(&bar, &target, 10_000).unwrap() <= 2.0 * grid.spacing(0));
}

#[test]
fn log_map_examples() {
    let grid = Grid1D::uniform(-10.0, 10.0, 801).unwrap();
    let bar = gauss(&grid, 0.0, 1.0);
    let space = TangentSpace::from_barycenter(&bar);
    // past x ~ 8 the density is below 1e-15 and the cdf is flat in floating point
    let w = log_map(&bar, &bar);
    assert!(space.norm(&w) <= 1e-6);
    for (x, y) in grid.points().iter().zip(&w) {
        if x.abs() <= 6.0 {
            assert!(y.abs() <= 1e-9);
        }
    }
    let w = log_map(&bar, &gauss(&grid, 0.7, 1.0));
    let c = space.dot(&w, &vec![1.0; grid.len()]);
    assert!((c - 0.7).abs() <= 1e-3);
    // T(x) = 2x, so the log is the identity where the barycenter has mass
    let w = log_map(&bar, &gauss(&grid, 0.0, 2.0));
    for (x, y) in grid.points().iter().zip(&w) {
        if x.abs() <= 3.0 {
            assert!((y - x).abs() <= 2e-2, "w({x}) = {y}");
        }
    }
}

#[test]
fn exp_map_examples() {
    let grid = Grid1D::uniform(-8.0, 8.0, 321).unwrap();
    let bar = gauss(&grid, 0.0, 1.0);
    let same = exp_map(&bar, &vec![0.0; grid.len()]).unwrap();
    assert!(wasserstein_distance(&same, &bar, 10_000).unwrap() <= 1e-9);
    let moved = exp_map(&bar, &vec![1.5; grid.len()]).unwrap();
    assert!((moved.mean() - 1.5).abs() <= 1e-6);
    assert!((moved.std_dev() - bar.std_dev()).abs() <= 1e-3);
}

#[test]
fn exp_inverts_log() {
    let grid = Grid1D::uniform(-8.0, 8.0, 401).unwrap();
    let mut r = rng(21);
    let data: Vec<_> = (0..6).map(|_| random_histogram(&mut r, &grid)).collect();
    let logged = LoggedDataset::new(data, &grid, 10_000).unwrap();
    for (w, nu) in logged.logs.iter().zip(&logged.data) {
        let back = exp_measure(&logged.barycenter, w).unwrap();
        let d = wasserstein_sq_between(&back, nu, 10_000).unwrap().sqrt();
        assert!(d <= 2.0 * grid.spacing(0), "round trip off by {d}");
    }
}

#[test]
fn pushforward_examples() {
    let grid = Grid1D::uniform(0.0, 1.0, 101).unwrap();
    let rho = DiscreteMeasure1D::from_fn(grid.clone(), |_| 1.0).unwrap();
    let same = pushforward_density(&rho, grid.points()).unwrap();
    assert!(max_abs_diff(same.density(), rho.density()) <= 1e-12);

    let doubled: Vec<f64> = grid.points().iter().map(|x| 2.0 * x).collect();
    let g = pushforward_density(&rho, &doubled).unwrap();
    assert!((g.grid().last() - 2.0).abs() <= 1e-12);
    for (x, f) in g.grid().points().iter().zip(g.density()) {
        if *x > 0.01 && *x < 1.99 {
            assert!((f - 0.5).abs() <= 1e-9);
        }
    }

    let constant = vec![0.3; grid.len()];
    assert!(matches!(pushforward(&rho, &constant), Err(Error::DegenerateMap(_))));
}

#[test]
fn folded_uniform_matches_monte_carlo() {
    let grid = Grid1D::uniform(0.0, 1.0, 201).unwrap();
    let rho = DiscreteMeasure1D::from_fn(grid.clone(), |_| 1.0).unwrap();
    let t: Vec<f64> = grid.points().iter().map(|x| (x - 0.5).abs() + 0.5).collect();
    let pf = pushforward(&rho, &t).unwrap();
    assert!((pf.raw_mass() - 1.0).abs() <= 1e-3);
    let mut r = rng(8);
    let n = 400_000;
    let bins = 10;
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let y = (r.gen::<f64>() - 0.5).abs() + 0.5;
        counts[(((y - 0.5) * 2.0 * bins as f64) as usize).min(bins - 1)] += 1;
    }
    for (b, &cnt) in counts.iter().enumerate() {
        let lo = 0.5 + b as f64 / (2.0 * bins as f64);
        let hi = lo + 1.0 / (2.0 * bins as f64);
        let exact = pf.cdf(hi) - pf.cdf(lo);
        assert!((exact - cnt as f64 / n as f64).abs() <= 5e-3, "bin {b}");
        assert!((pf.density_at(0.5 * (lo + hi)) - 2.0).abs() <= 1e-9);
    }
    assert!(pf.cdf(0.4999) <= 1e-12);
}

#[test]
fn inner_product_examples() {
    let grid = Grid1D::uniform(0.0, 4.0, 33).unwrap();
    let space = TangentSpace::from_weights(grid, vec![0.25; 33]).unwrap();
    assert!((space.norm_sq(&vec![1.0; 33]) - 33.0 / 4.0).abs() <= 1e-12);
    let mut r = rng(1);
    let u: Vec<f64> = (0..33).map(|_| r.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..33).map(|_| r.gen_range(-1.0..1.0)).collect();
    assert_eq!(space.dot(&u, &vec![0.0; 33]), 0.0);
    assert!((space.dot(&u, &v) - space.dot(&v, &u)).abs() <= 1e-15);
    let other = TangentSpace::from_weights(Grid1D::uniform(0.0, 4.0, 17).unwrap(), vec![0.5; 17]).unwrap();
    let a = std::sync::Arc::new(space).vector(u).unwrap();
    let b = std::sync::Arc::new(other).vector(vec![0.0; 17]).unwrap();
    assert!(matches!(a.inner(&b), Err(Error::Validation(_))));
}

#[test]
fn logs_are_centered_and_feasible() {
    // the residual is O(h^2) from the difference quotient of the barycenter
    let (grid, data, _) = gaussian_set(100, 512, 1);
    let logged = LoggedDataset::new(data, &grid, 10_000).unwrap();
    assert!(logged.centering_residual() <= 1e-3);
    for w in &logged.logs {
        assert!(feasibility_violation(logged.grid(), w) <= 1e-9);
    }
}

#[test]
fn log_maps_are_isometric() {
    let grid = Grid1D::uniform(-8.0, 8.0, 512).unwrap();
    let mut r = rng(13);
    let data: Vec<_> = (0..8).map(|_| random_histogram(&mut r, &grid)).collect();
    let logged = LoggedDataset::new(data, &grid, 10_000).unwrap();
    for i in 0..4 {
        let j = i + 4;
        let d = wasserstein_distance(&logged.data[i], &logged.data[j], 10_000).unwrap();
        let t = logged.space.dist_sq(&logged.logs[i], &logged.logs[j]).sqrt();
        assert!((d - t).abs() <= 1e-3 * d + 1e-6, "d = {d}, tangent {t}");
    }
}

#[test]
fn geodesics_have_constant_speed() {
    let grid = Grid1D::uniform(-8.0, 8.0, 401).unwrap();
    let bar = gauss(&grid, 0.0, 1.0);
    let bumpf = |x: f64| (1.0 - (x / 6.0).powi(2)).max(0.0).powi(2);
    let v0: Vec<f64> = grid.points().iter().map(|&x| -0.5 * bumpf(x)).collect();
    let v1: Vec<f64> = grid.points().iter().map(|&x| (0.8 + 0.1 * x) * bumpf(x)).collect();
    assert!(feasibility_violation(&grid, &v0) <= 1e-12 && feasibility_violation(&grid, &v1) <= 1e-12);
    let at = |t: f64| {
        let v: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        exp_measure(&bar, &v).unwrap()
    };
    let (g0, g1) = (at(0.0), at(1.0));
    let full = wasserstein_sq_between(&g0, &g1, 10_000).unwrap().sqrt();
    for t in [0.25, 0.5, 0.8] {
        let d = wasserstein_sq_between(&g0, &at(t), 10_000).unwrap().sqrt();
        assert!((d - t * full).abs() <= 1e-3 * full, "t = {t}: {d} vs {}", t * full);
    }
}

#[test]
fn pushforwards_conserve_mass() {
    let grid = Grid1D::uniform(-5.0, 5.0, 201).unwrap();
    let mut r = rng(77);
    for _ in 0..20 {
        let rho = random_histogram(&mut r, &grid);
        let t: Vec<f64> = grid
            .points()
            .iter()
            .map(|x| x + r.gen_range(-2.0..2.0) * (x * r.gen_range(0.2..2.0)).sin())
            .collect();
        let g = pushforward_density(&rho, &t).unwrap();
        let pf = pushforward(&rho, &t).unwrap();
        assert!((pf.raw_mass() - 1.0).abs() <= 1e-3);
        assert!((g.grid().integrate(g.density()) - 1.0).abs() <= 1e-9);
    }
}
