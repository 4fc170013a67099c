//! Restarted GMRES with right preconditioning.

use crate::error::Result;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Approximately solve `A x = b` with `A` applied through `apply` and
/// preconditioner `precond ≈ A⁻¹`; returns `x` and the Arnoldi estimate of
/// the final relative residual.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, GmresOutcome)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            GmresOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut total = 0;
    let mut r = b.to_vec();
    let mut rel = 1.0;
    while total < max_iter {
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let zj = precond(&v[j]);
            let mut w = apply(&zj)?;
            z.push(zj);
            for i in 0..=j {
                h[i][j] = dot(&w, &v[i]);
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= h[i][j] * vk;
                }
            }
            h[j + 1][j] = norm(&w);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            let hn = h[j + 1][j];
            h[j][j] = cs[j] * h[j][j] + sn[j] * hn;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= rtol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = if h[i][i] == 0.0 { 0.0 } else { (g[i] - s) / h[i][i] };
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[k]) {
                *xi += yk * zi;
            }
        }
        if rel <= rtol {
            break;
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
    Ok((
        x,
        GmresOutcome {
            iterations: total,
            relative_residual: rel,
        },
    ))
}
