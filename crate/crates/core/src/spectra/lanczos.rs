//! Restarted Lanczos for the top of a symmetric spectrum, with known
//! eigenvectors projected out.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub struct TopEigen {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(x, q);
        axpy(x, -c, q);
    }
}

/// Largest eigenvalue of `op` on the orthogonal complement of `deflate`
/// (orthonormal vectors assumed invariant under `op`).
pub fn top_eigen(
    op: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    dim: usize,
    deflate: &[Vec<f64>],
    tol: f64,
    max_matvecs: usize,
    krylov: usize,
) -> Result<TopEigen> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out(&mut start, deflate);
    let nrm = norm(&start);
    if nrm == 0.0 {
        return Err(Error::InvalidParameter("deflation removes the whole space".into()));
    }
    start.iter_mut().for_each(|v| *v /= nrm);

    let m_max = krylov.min(dim.saturating_sub(deflate.len())).max(1);
    let mut matvecs = 0;
    let mut best = (f64::NAN, start.clone(), f64::INFINITY);
    loop {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m_max {
            let mut w = op(&basis[j]);
            matvecs += 1;
            project_out(&mut w, deflate);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                project_out(&mut w, &basis);
            }
            let b = norm(&w);
            if j + 1 == m_max || b < 1e-13 {
                beta.push(b);
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|v| *v /= b);
            basis.push(w);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let s = eig.eigenvectors.column(idx);
        let mut x = vec![0.0; dim];
        for (q, &c) in basis.iter().zip(s.iter()) {
            axpy(&mut x, c, q);
        }
        project_out(&mut x, deflate);
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut r = op(&x);
        matvecs += 1;
        project_out(&mut r, deflate);
        axpy(&mut r, -theta, &x);
        let res = norm(&r);
        if res < best.2 {
            best = (theta, x.clone(), res);
        }
        if res <= tol || k < m_max {
            return Ok(TopEigen {
                value: best.0,
                vector: best.1,
                residual: best.2,
                matvecs,
            });
        }
        if matvecs >= max_matvecs {
            return Err(Error::NoConvergence {
                iterations: matvecs,
                residual: best.2,
            });
        }
        start = x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..300).map(|i| 1.0 - i as f64 / 300.0).collect();
        let dd = d.clone();
        let op = move |x: &[f64]| x.iter().zip(&dd).map(|(a, b)| a * b).collect::<Vec<_>>();
        let mut e0 = vec![0.0; 300];
        e0[0] = 1.0;
        let top = top_eigen(&op, 300, &[e0], 1e-10, 100_000, 120).unwrap();
        assert!((top.value - d[1]).abs() < 1e-10);
        assert!(top.residual <= 1e-10);
    }
}
