//! Primal-dual interior point (Frisch-Newton with Mehrotra correction) for
//! the bounded dual of quantile regression:
//!
//! ```text
//! min -y'a   s.t.  X'a = (1 - tau) X'1,   0 <= a <= 1.
//! ```
//!
//! The multipliers of the equality constraint are `-beta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const STEP: f64 = 0.99995;
const GAP_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;

pub(crate) struct IpmSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
}

fn max_step(v: &[f64], dv: &[f64], sign: f64) -> f64 {
    let mut a = f64::INFINITY;
    for (x, dx) in v.iter().zip(dv) {
        let dx = sign * dx;
        if dx < 0.0 {
            a = a.min(-x / dx);
        }
    }
    a
}

pub(crate) fn solve(x: &[f64], y: &[f64], d: usize, tau: f64) -> Result<IpmSolution> {
    let n = y.len();
    let row = |t: usize| &x[t * d..(t + 1) * d];
    let at_mul = |v: &DVector<f64>, out: &mut [f64]| {
        for t in 0..n {
            out[t] = row(t).iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
    };
    let a_mul = |v: &[f64]| {
        let mut out = DVector::zeros(d);
        for t in 0..n {
            for (o, xi) in out.iter_mut().zip(row(t)) {
                *o += xi * v[t];
            }
        }
        out
    };
    let c: Vec<f64> = y.iter().map(|v| -v).collect();
    let b = a_mul(&vec![1.0 - tau; n]);

    let mut xv = vec![1.0 - tau; n];
    let mut sv = vec![tau; n];
    // Least-squares start for the multipliers.
    let xtx = {
        let mut m = DMatrix::zeros(d, d);
        for t in 0..n {
            let r = row(t);
            for i in 0..d {
                for k in 0..d {
                    m[(i, k)] += r[i] * r[k];
                }
            }
        }
        m
    };
    let mut lambda = xtx
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient { rank: 0, columns: d })?
        .solve(&a_mul(&c));
    let mut fit = vec![0.0; n];
    at_mul(&lambda, &mut fit);
    let resid: Vec<f64> = c.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let shift = 1e-2 * (1.0 + resid.iter().map(|v| v.abs()).sum::<f64>() / n as f64);
    let mut z: Vec<f64> = resid.iter().map(|r| r.max(0.0) + shift).collect();
    let mut w: Vec<f64> = resid.iter().map(|r| (-r).max(0.0) + shift).collect();

    let mut dx = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let mut theta = vec![0.0; n];
    let mut qv = vec![0.0; n];
    let mut rd = vec![0.0; n];

    for it in 0..MAX_ITER {
        at_mul(&lambda, &mut fit);
        for t in 0..n {
            rd[t] = c[t] - fit[t] - z[t] + w[t];
        }
        let rp = &b - a_mul(&xv);
        let gap: f64 = (0..n).map(|t| xv[t] * z[t] + sv[t] * w[t]).sum();
        let primal: f64 = c.iter().zip(&xv).map(|(a, b)| a * b).sum();
        let infeas = rp.amax() + rd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gap < GAP_TOL * (1.0 + primal.abs()) && infeas < 1e-8 * (1.0 + primal.abs()) {
            return Ok(IpmSolution {
                beta: lambda.iter().map(|v| -v).collect(),
                iterations: it,
            });
        }

        for t in 0..n {
            theta[t] = 1.0 / (z[t] / xv[t] + w[t] / sv[t]);
        }
        let mut m = DMatrix::zeros(d, d);
        for t in 0..n {
            let r = row(t);
            for i in 0..d {
                for k in 0..=i {
                    m[(i, k)] += theta[t] * r[i] * r[k];
                }
            }
        }
        for i in 0..d {
            for k in 0..i {
                m[(k, i)] = m[(i, k)];
            }
        }
        let chol = m.cholesky().ok_or_else(|| Error::NonConvergence {
            iterations: it,
            detail: "normal-equation matrix lost positive definiteness".into(),
        })?;

        // Newton direction for complementarity right-hand sides (rxz, rsw).
        let mut direction = |rxz: &dyn Fn(usize) -> f64,
                             rsw: &dyn Fn(usize) -> f64,
                             dx: &mut [f64],
                             dz: &mut [f64],
                             dw: &mut [f64]|
         -> DVector<f64> {
            for t in 0..n {
                qv[t] = rd[t] - rxz(t) / xv[t] + rsw(t) / sv[t];
            }
            let tq: Vec<f64> = (0..n).map(|t| theta[t] * qv[t]).collect();
            let rhs = &rp + a_mul(&tq);
            let dl = chol.solve(&rhs);
            let mut adl = vec![0.0; n];
            at_mul(&dl, &mut adl);
            for t in 0..n {
                dx[t] = theta[t] * (adl[t] - qv[t]);
                dz[t] = (rxz(t) - z[t] * dx[t]) / xv[t];
                dw[t] = (rsw(t) + w[t] * dx[t]) / sv[t];
            }
            dl
        };

        let _ = direction(&|t| -xv[t] * z[t], &|t| -sv[t] * w[t], &mut dx, &mut dz, &mut dw);
        let ap = 1.0f64.min(max_step(&xv, &dx, 1.0).min(max_step(&sv, &dx, -1.0)));
        let ad = 1.0f64.min(max_step(&z, &dz, 1.0).min(max_step(&w, &dw, 1.0)));
        let mu = gap / (2 * n) as f64;
        let mu_aff: f64 = (0..n)
            .map(|t| (xv[t] + ap * dx[t]) * (z[t] + ad * dz[t]) + (sv[t] - ap * dx[t]) * (w[t] + ad * dw[t]))
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3);
        let (ax, az, aw) = (dx.clone(), dz.clone(), dw.clone());
        let dl = direction(
            &|t| sigma * mu - xv[t] * z[t] - ax[t] * az[t],
            &|t| sigma * mu - sv[t] * w[t] + ax[t] * aw[t],
            &mut dx,
            &mut dz,
            &mut dw,
        );
        let ap = 1.0f64.min(STEP * max_step(&xv, &dx, 1.0).min(max_step(&sv, &dx, -1.0)));
        let ad = 1.0f64.min(STEP * max_step(&z, &dz, 1.0).min(max_step(&w, &dw, 1.0)));
        for t in 0..n {
            xv[t] += ap * dx[t];
            sv[t] -= ap * dx[t];
            z[t] += ad * dz[t];
            w[t] += ad * dw[t];
        }
        lambda += ad * dl;
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        detail: "interior point did not reach the duality-gap tolerance".into(),
    })
}
