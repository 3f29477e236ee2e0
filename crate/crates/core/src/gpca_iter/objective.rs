use crate::core1d::TangentSpace;
use crate::error::{Error, Result};

/// `F(v, t) = sum_i ||w_i - (t0 + t_i) v||^2` in the weighted norm.
pub fn objective_f(space: &TangentSpace, logs: &[Vec<f64>], v: &[f64], t: &[f64], t0: f64) -> f64 {
    let p = space.weights();
    logs.iter()
        .zip(t)
        .map(|(w, &ti)| {
            let s = t0 + ti;
            p.iter()
                .zip(w.iter().zip(v))
                .map(|(pj, (wj, vj))| {
                    let r = wj - s * vj;
                    pj * r * r
                })
                .sum::<f64>()
        })
        .sum()
}

/// Euclidean gradients of [`objective_f`] with respect to `v` and `t`.
pub fn grad_f(space: &TangentSpace, logs: &[Vec<f64>], v: &[f64], t: &[f64], t0: f64) -> (Vec<f64>, Vec<f64>) {
    let p = space.weights();
    let n = v.len();
    let mut gv = vec![0.0; n];
    let mut gt = vec![0.0; logs.len()];
    for (i, w) in logs.iter().enumerate() {
        let s = t0 + t[i];
        let mut acc = 0.0;
        for j in 0..n {
            let r = s * v[j] - w[j];
            gv[j] += 2.0 * p[j] * s * r;
            acc += p[j] * v[j] * r;
        }
        gt[i] = 2.0 * acc;
    }
    (gv, gt)
}

/// `M = 2 f_inf max{n a^2 + N g, n g + N (1 + |t0|)^2}` with
/// `g = 2 (1 + |t0|) a + w_inf`.
pub fn lipschitz_bound(n: usize, dim: usize, t0: f64, f_inf: f64, w_inf: f64, alpha: f64) -> f64 {
    let s = 1.0 + t0.abs();
    let gamma = 2.0 * s * alpha + w_inf;
    let (n, dim) = (n as f64, dim as f64);
    2.0 * f_inf * (n * alpha * alpha + dim * gamma).max(n * gamma + dim * s * s)
}

/// Lipschitz bound from a logged dataset on its own domain.
pub fn lipschitz_for(space: &TangentSpace, logs: &[Vec<f64>], t0: f64) -> f64 {
    let w_inf = logs
        .iter()
        .flat_map(|w| w.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    lipschitz_bound(
        logs.len(),
        space.len(),
        t0,
        space.max_weight(),
        w_inf,
        space.grid().width(),
    )
}

/// `clamp(<w, v> / ||v||^2 - t0, [-1, 1])`.
pub fn project_time(space: &TangentSpace, w: &[f64], v: &[f64], t0: f64) -> Result<f64> {
    let nv = space.norm_sq(v);
    if !(nv > 0.0) {
        return Err(Error::Parameter("projection onto a zero direction".into()));
    }
    Ok((space.dot(w, v) / nv - t0).clamp(-1.0, 1.0))
}

/// `H(t0, v) = (1/n) sum_i min_{t in [-1, 1]} ||w_i - (t0 + t) v||^2`.
pub fn h_value(space: &TangentSpace, logs: &[Vec<f64>], v: &[f64], t0: f64) -> f64 {
    let n = logs.len() as f64;
    if space.norm_sq(v) == 0.0 {
        return logs.iter().map(|w| space.norm_sq(w)).sum::<f64>() / n;
    }
    let t: Vec<f64> = logs
        .iter()
        .map(|w| project_time(space, w, v, t0).unwrap())
        .collect();
    objective_f(space, logs, v, &t, t0) / n
}
