mod common;

use std::sync::OnceLock;

use rand::Rng;

use common::*;
use wgpca::core1d::{exp_map, feasibility_violation, DiscreteMeasure1D, Grid1D, LoggedDataset, TangentSpace};
use wgpca::gpca_iter::{default_t0_grid, fit_component, fit_iterative, gpca_reconstruction_error, FbConfig, T0Search};
use wgpca::gpca_surface::{
    fit_surface, project_simplex, surface_grad, surface_objective, surface_reconstruction_error, SurfaceModel,
};

fn gauss(grid: &Grid1D, m: f64, s: f64) -> DiscreteMeasure1D {
    DiscreteMeasure1D::from_fn(grid.clone(), |x| (-0.5 * ((x - m) / s).powi(2)).exp()).unwrap()
}

struct K2 {
    logged: LoggedDataset,
    iterative: Vec<T0Search>,
    surface: SurfaceModel,
}

fn k2() -> &'static K2 {
    static CELL: OnceLock<K2> = OnceLock::new();
    CELL.get_or_init(|| {
        let (grid, data, _) = gaussian_set(40, 128, 2);
        let logged = LoggedDataset::new(data, &grid, 4000).unwrap();
        let config = FbConfig {
            t0_grid: default_t0_grid(5),
            max_outer: 400,
            require_converged: false,
            ..FbConfig::default()
        };
        let iterative = fit_iterative(&logged, 2, &config).unwrap();
        let init: Vec<Vec<f64>> = iterative.iter().map(|s| s.best.direction.clone()).collect();
        let t0: Vec<f64> = iterative.iter().map(|s| s.best.t0).collect();
        let surface = fit_surface(
            &logged,
            &init,
            &t0,
            &FbConfig {
                max_outer: 1500,
                ..FbConfig::default()
            },
        )
        .unwrap();
        K2 {
            logged,
            iterative,
            surface,
        }
    })
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(31);
    for _ in 0..20 {
        let dim = r.gen_range(3..15);
        let k = r.gen_range(1..4);
        let n = r.gen_range(1..5);
        let grid = Grid1D::uniform(0.0, 2.0, dim).unwrap();
        let space = TangentSpace::from_weights(grid, (0..dim).map(|_| r.gen_range(0.02..0.3)).collect()).unwrap();
        let logs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let dirs: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let t0: Vec<f64> = (0..k).map(|_| r.gen_range(-0.8..0.8)).collect();
        let alpha: Vec<Vec<f64>> = (0..n)
            .map(|_| project_simplex(&(0..2 * k).map(|_| r.gen_range(0.0..0.5)).collect::<Vec<_>>()))
            .collect();
        let (gv, ga) = surface_grad(&space, &logs, &dirs, &t0, &alpha);
        for l in 0..k {
            let fd = central_diff(
                |x| {
                    let mut d = dirs.clone();
                    d[l] = x.to_vec();
                    surface_objective(&space, &logs, &d, &t0, &alpha)
                },
                &dirs[l],
                1e-6,
            );
            assert!(max_abs_diff(&gv[l], &fd) <= 1e-6 * (1.0 + inf_norm(&fd)));
        }
        for i in 0..n {
            let fd = central_diff(
                |x| {
                    let mut a = alpha.clone();
                    a[i] = x.to_vec();
                    surface_objective(&space, &logs, &dirs, &t0, &a)
                },
                &alpha[i],
                1e-6,
            );
            assert!(max_abs_diff(&ga[i], &fd) <= 1e-6 * (1.0 + inf_norm(&fd)));
        }
    }
}

#[test]
fn one_direction_matches_the_iterative_fit() {
    let (grid, data, _) = gaussian_set(30, 128, 3);
    let logged = LoggedDataset::new(data, &grid, 4000).unwrap();
    let c = fit_component(&logged, &[], 0.0, &FbConfig::default()).unwrap();
    let model = fit_surface(&logged, &[c.direction.clone()], &[c.t0], &FbConfig::default()).unwrap();
    let h = model.objective / logged.n() as f64;
    assert!((h - c.h).abs() <= 1e-3 * c.h, "surface {h} vs iterative {}", c.h);
    let u = model.directions[0].clone();
    let cos = logged.space.dot(&u, &c.direction).abs() / (logged.space.norm(&u) * logged.space.norm(&c.direction));
    assert!(cos >= 0.999, "cos = {cos}");
}

#[test]
fn reference_only_dataset_has_zero_objective() {
    let grid = Grid1D::uniform(-5.0, 5.0, 81).unwrap();
    let m = gauss(&grid, -0.4, 0.9);
    let logged = LoggedDataset::with_barycenter(vec![m.clone(); 4], m).unwrap();
    let init: Vec<f64> = grid.points().iter().map(|x| 0.1 * x.sin()).collect();
    let model = fit_surface(&logged, &[init.clone(), init.iter().map(|x| x * x).collect()], &[0.0, 0.2], &FbConfig::default())
        .unwrap();
    assert!(model.objective <= 1e-20, "J = {}", model.objective);
}

#[test]
fn data_on_the_surface_are_recovered() {
    let grid = Grid1D::uniform(-8.0, 8.0, 161).unwrap();
    let bar = gauss(&grid, 0.0, 1.0);
    let v1: Vec<f64> = vec![0.8; grid.len()];
    let v2: Vec<f64> = grid.points().iter().map(|x| 0.3 * x).collect();
    let t0 = [0.0, 0.0];
    let mut r = rng(5);
    let data: Vec<DiscreteMeasure1D> = (0..12)
        .map(|_| {
            let a = project_simplex(&(0..4).map(|_| r.gen_range(0.0..0.6)).collect::<Vec<_>>());
            let c1 = a[0] * (t0[0] + 1.0) + a[1] * (t0[0] - 1.0);
            let c2 = a[2] * (t0[1] + 1.0) + a[3] * (t0[1] - 1.0);
            let w: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| c1 * x + c2 * y).collect();
            exp_map(&bar, &w).unwrap()
        })
        .collect();
    let logged = LoggedDataset::with_barycenter(data, bar).unwrap();
    let model = fit_surface(&logged, &[v1, v2], &t0, &FbConfig::default()).unwrap();
    let scale = logged.logs.iter().map(|w| logged.space.norm_sq(w)).sum::<f64>();
    assert!(model.objective <= 1e-4 * scale, "J = {} against {scale}", model.objective);
}

#[test]
fn two_directions_are_not_worse_than_iterative() {
    let m = k2();
    let comps: Vec<_> = m.iterative.iter().map(|s| &s.best).collect();
    let r_iter = gpca_reconstruction_error(&comps, &m.logged, 4000).unwrap();
    let r_surf = surface_reconstruction_error(&m.surface, &m.logged, 4000).unwrap();
    assert!(r_surf <= 1.1 * r_iter, "surface {r_surf} vs iterative {r_iter}");
}

#[test]
fn fitted_surface_satisfies_its_invariants() {
    let m = k2();
    let s = &m.surface;
    assert!(s.endpoint_violation(&m.logged.space) <= 1e-9);
    assert!(s.simplex_violation() <= 1e-9);
    assert!(s.independent(), "min singular value {}", s.min_singular);
    for w in s.trace.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "trace increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn random_surface_points_are_feasible() {
    let m = k2();
    let mut r = rng(17);
    for _ in 0..100 {
        let raw: Vec<f64> = (0..2 * m.surface.k()).map(|_| r.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum::<f64>() + r.gen_range(0.0..1.0);
        let alpha: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let v = m.surface.point(&alpha);
        assert!(feasibility_violation(m.logged.grid(), &v) <= 1e-9);
    }
}
