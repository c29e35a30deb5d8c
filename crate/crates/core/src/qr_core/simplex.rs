//! Vertex-exact minimization of convex piecewise-linear functions
//!
//! ```text
//! F(beta) = q'beta + sum_t [ a (r_t)_+ + b (r_t)_- ],   r = y - X beta,
//! ```
//!
//! with a secondary linear objective `c2'beta` used to break ties between
//! optimal vertices lexicographically. Quantile regression is `a = tau`,
//! `b = 1 - tau`, `q = 0`.
//!
//! A vertex is a basis `h` of `d` observations with zero residuals and
//! nonsingular `X_h`. Edges leave the vertex by releasing one basic
//! observation to either side; the step along an edge is a long step that
//! passes every breakpoint while the directional derivative stays negative.
//! Entering edges follow the steepest reduced cost; after a degenerate pivot
//! the rule switches to lowest index until progress resumes, which prevents
//! cycling.

use nalgebra::DMatrix;

use super::dataset::dot;
use crate::error::{Error, Result};

pub(crate) struct Program<'a> {
    /// Row-major `n x d` design.
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub d: usize,
    /// Slope applied to positive residuals.
    pub pos: f64,
    /// Slope applied to negative residuals (as a cost on `-r`).
    pub neg: f64,
    pub linear: Option<&'a [f64]>,
    pub tiebreak: Option<&'a [f64]>,
}

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    pub beta: Vec<f64>,
    pub iterations: usize,
}

const ZERO_RESIDUAL: f64 = 1e-12;
const REDUCED_COST: f64 = 1e-10;

impl Program<'_> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.x[t * self.d..(t + 1) * self.d]
    }

    /// Residual of observation `t`, set to exactly zero when it is within
    /// rounding of zero.
    pub fn residual(&self, t: usize, beta: &[f64]) -> f64 {
        let row = self.row(t);
        let fit = dot(row, beta);
        let r = self.y[t] - fit;
        let scale = self.y[t].abs() + row.iter().zip(beta).map(|(a, b)| (a * b).abs()).sum::<f64>();
        if r.abs() <= ZERO_RESIDUAL * scale {
            0.0
        } else {
            r
        }
    }
}

/// Selects `d` linearly independent observations, scanning `order`.
pub(crate) fn greedy_basis(x: &[f64], d: usize, order: &[usize]) -> Result<Vec<usize>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut basis = Vec::with_capacity(d);
    for &t in order {
        let row = &x[t * d..(t + 1) * d];
        let norm0 = dot(row, row).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = row.iter().map(|a| a / norm0).collect();
        for _ in 0..2 {
            for u in &q {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 {
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
            basis.push(t);
            if basis.len() == d {
                return Ok(basis);
            }
        }
    }
    Err(Error::RankDeficient {
        rank: basis.len(),
        columns: d,
    })
}

struct Breakpoint {
    ratio: f64,
    t: usize,
    w: f64,
}

/// Runs the simplex from the basis picked greedily along `start_order`.
pub(crate) fn solve(p: &Program, start_order: &[usize], max_iter: usize) -> Result<Vertex> {
    let basis = greedy_basis(p.x, p.d, start_order)?;
    solve_from(p, basis, max_iter)
}

pub(crate) fn solve_from(p: &Program, mut basis: Vec<usize>, max_iter: usize) -> Result<Vertex> {
    let (n, d) = (p.n(), p.d);
    let zeros = vec![0.0; d];
    let q = p.linear.unwrap_or(&zeros);
    let c2 = p.tiebreak.unwrap_or(&zeros);
    let mut colabs = vec![0.0; d];
    for t in 0..n {
        for (c, v) in colabs.iter_mut().zip(p.row(t)) {
            *c += v.abs();
        }
    }
    let q_abs: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    let c2_abs: Vec<f64> = c2.iter().map(|v| v.abs()).collect();

    // +1: counted at the positive-residual slope, -1: at the negative one.
    let mut label = vec![0i8; n];
    let mut position = vec![usize::MAX; n];
    let mut bland = false;
    let mut r = vec![0.0; n];
    let mut iterations = 0usize;

    loop {
        position.iter_mut().for_each(|v| *v = usize::MAX);
        for (j, &t) in basis.iter().enumerate() {
            position[t] = j;
        }
        let xh = DMatrix::from_fn(d, d, |i, k| p.x[basis[i] * d + k]);
        let inv = xh.lu().try_inverse().ok_or_else(|| Error::NonConvergence {
            iterations,
            detail: "basis matrix became singular".into(),
        })?;
        let beta: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|k| inv[(i, k)] * p.y[basis[k]]).sum())
            .collect();
        for t in 0..n {
            r[t] = if position[t] != usize::MAX { 0.0 } else { p.residual(t, &beta) };
            // Zero residuals keep the side they were last assigned to.
            if r[t] > 0.0 || (r[t] == 0.0 && label[t] == 0) {
                label[t] = 1;
            } else if r[t] < 0.0 {
                label[t] = -1;
            }
        }

        let mut g = vec![0.0; d];
        for t in (0..n).filter(|&t| position[t] == usize::MAX) {
            let slope = if label[t] > 0 { p.pos } else { -p.neg };
            for (gi, xi) in g.iter_mut().zip(p.row(t)) {
                *gi += slope * xi;
            }
        }
        let qg: Vec<f64> = q.iter().zip(&g).map(|(a, b)| a - b).collect();

        // Candidate edges: (reduced cost, variable index, basis slot, side).
        let mut best: Option<(f64, usize, usize, f64)> = None;
        let mut tols = vec![(0.0, 0.0, 0.0); d];
        for j in 0..d {
            let delta: Vec<f64> = (0..d).map(|i| inv[(i, j)]).collect();
            let da: Vec<f64> = delta.iter().map(|v| v.abs()).collect();
            let v = dot(&delta, &qg);
            let d2 = dot(&delta, c2);
            let tol = REDUCED_COST * ((p.pos + p.neg) * dot(&da, &colabs) + dot(&da, &q_abs));
            let tol2 = REDUCED_COST * dot(&da, &c2_abs);
            tols[j] = (tol, tol2, d2);
            for (sigma, dd, dd2) in [(1.0, v + p.neg, d2), (-1.0, -v + p.pos, -d2)] {
                let improving = dd < -tol || (dd.abs() <= tol && dd2 < -tol2);
                if !improving {
                    continue;
                }
                let index = 2 * basis[j] + usize::from(sigma < 0.0);
                let better = match best {
                    None => true,
                    Some((bd, bi, _, _)) => {
                        if bland {
                            index < bi
                        } else {
                            dd < bd || (dd == bd && index < bi)
                        }
                    }
                };
                if better {
                    best = Some((dd, index, j, sigma));
                }
            }
        }
        let Some((dd, _, j, sigma)) = best else {
            return Ok(Vertex { beta, iterations });
        };
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                iterations,
                detail: format!("simplex iteration cap reached; last reduced cost {dd:.3e}"),
            });
        }
        iterations += 1;

        let (tol, tol2, d2) = tols[j];
        let d2 = sigma * d2;
        let delta: Vec<f64> = (0..d).map(|i| sigma * inv[(i, j)]).collect();
        let mut bps: Vec<Breakpoint> = Vec::new();
        for t in (0..n).filter(|&t| position[t] == usize::MAX) {
            let w = dot(p.row(t), &delta);
            let crosses = (label[t] > 0 && w > 0.0) || (label[t] < 0 && w < 0.0);
            if crosses {
                bps.push(Breakpoint {
                    ratio: (r[t] / w).max(0.0),
                    t,
                    w,
                });
            }
        }
        bps.sort_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.t.cmp(&b.t)));

        let mut slope = dd;
        let mut stop = None;
        for (k, bp) in bps.iter().enumerate() {
            slope += (p.pos + p.neg) * bp.w.abs();
            if slope > tol || (slope.abs() <= tol && d2 >= -tol2) {
                stop = Some(k);
                break;
            }
        }
        let Some(k) = stop else {
            return Err(Error::Unbounded(format!(
                "objective decreases without bound along edge {j} after {} breakpoints",
                bps.len()
            )));
        };

        let leaving = basis[j];
        if bps[k].ratio == 0.0 {
            // Degenerate: the vertex does not move; swap in the lowest-index
            // zero-ratio observation.
            basis[j] = bps[0].t;
            bland = true;
        } else {
            for bp in &bps[..k] {
                label[bp.t] = -label[bp.t];
            }
            basis[j] = bps[k].t;
            bland = false;
        }
        label[leaving] = if sigma > 0.0 { -1 } else { 1 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qr_program<'a>(x: &'a [f64], y: &'a [f64], d: usize, tau: f64) -> Program<'a> {
        Program {
            x,
            y,
            d,
            pos: tau,
            neg: 1.0 - tau,
            linear: None,
            tiebreak: None,
        }
    }

    #[test]
    fn median_of_three() {
        let y = [1.0, 2.0, 9.0];
        let x = [1.0; 3];
        let p = qr_program(&x, &y, 1, 0.5);
        let v = solve(&p, &[2, 0, 1], 100).unwrap();
        assert_eq!(v.beta, vec![2.0]);
    }

    #[test]
    fn tiebreak_selects_lower_endpoint() {
        let y = [4.0, 1.0, 3.0, 2.0];
        let x = [1.0; 4];
        let c2 = [1.0];
        for start in 0..4 {
            let p = Program {
                tiebreak: Some(&c2),
                ..qr_program(&x, &y, 1, 0.5)
            };
            let v = solve(&p, &[start], 100).unwrap();
            assert_eq!(v.beta, vec![2.0], "start {start}");
        }
    }

    #[test]
    fn unbounded_detected() {
        // -3 beta + (beta - 0)_+ + (beta - 1)_+ has slope -1 for large beta.
        let y = [0.0, 1.0];
        let x = [1.0, 1.0];
        let q = [-3.0];
        let p = Program {
            x: &x,
            y: &y,
            d: 1,
            pos: 0.0,
            neg: 1.0,
            linear: Some(&q),
            tiebreak: None,
        };
        assert!(matches!(solve(&p, &[0], 100), Err(Error::Unbounded(_))));
    }

    #[test]
    fn greedy_basis_skips_dependent_rows() {
        let x = [1.0, 0.0, 2.0, 0.0, 1.0, 1.0];
        assert_eq!(greedy_basis(&x, 2, &[0, 1, 2]).unwrap(), vec![0, 2]);
        assert!(greedy_basis(&x, 2, &[0, 1]).is_err());
    }
}
