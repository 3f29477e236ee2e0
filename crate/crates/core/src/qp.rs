//! Small dense convex quadratic programs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `min 0.5 x'Hx + g'x` subject to `A x <= b`, by a primal active-set
/// method started from the feasible point `x0`. `H` must be positive
/// definite.
pub(crate) fn solve_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: DVector<f64>,
) -> Result<DVector<f64>> {
    let n = h.nrows();
    let m = a.nrows();
    let scale = h.amax().max(g.amax()).max(1e-300);
    let mut x = x0;
    let mut working: Vec<usize> = Vec::new();
    for _ in 0..(50 * (m + n) + 100) {
        let k = working.len();
        let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        for (r, &i) in working.iter().enumerate() {
            for c in 0..n {
                kkt[(n + r, c)] = a[(i, c)];
                kkt[(c, n + r)] = a[(i, c)];
            }
        }
        let mut rhs = DVector::<f64>::zeros(n + k);
        let grad = h * &x + g;
        for c in 0..n {
            rhs[c] = -grad[c];
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Qp("singular KKT system".into()))?;
        let p = sol.rows(0, n).into_owned();
        if p.amax() <= 1e-13 * (1.0 + x.amax()) {
            // multipliers of A_W x <= b_W are sol[n..]
            let mut worst = None;
            let mut worst_val = -1e-12 * scale;
            for r in 0..k {
                let lam = sol[n + r];
                if lam < worst_val {
                    worst_val = lam;
                    worst = Some(r);
                }
            }
            match worst {
                None => return Ok(x),
                Some(r) => {
                    working.remove(r);
                    continue;
                }
            }
        }
        let mut step = 1.0;
        let mut block = None;
        let pn = p.norm();
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let ai = a.row(i);
            let ap = ai.dot(&p.transpose());
            // rows in the span of the working set have a.p = 0 up to round-off
            if ap > 1e-12 * ai.norm() * pn {
                let slack = (b[i] - a.row(i).dot(&x.transpose())).max(0.0);
                let s = slack / ap;
                if s < step {
                    step = s;
                    block = Some(i);
                }
            }
        }
        x += &p * step;
        if let Some(i) = block {
            working.push(i);
        }
    }
    Err(Error::Qp("active-set iteration cap exceeded".into()))
}
