#![allow(dead_code)]

use consreg_core::rng::SeededRng;
use consreg_core::Matrix;
use nalgebra::DMatrix;

pub struct Problem {
    pub x: Matrix,
    pub s: Matrix,
    pub y: Matrix,
}

/// Random regression problem whose `S` is correlated with both `X` and `Y`.
pub fn random_problem(rng: &mut SeededRng, n: usize, d: usize, q: usize, c: usize) -> Problem {
    let x = Matrix::from_fn(n, d, |_, _| rng.standard_normal());
    let s = Matrix::from_fn(n, q, |i, j| x[(i, j % d)] + 0.5 * rng.standard_normal());
    let w = Matrix::from_fn(d, c, |_, _| rng.standard_normal());
    let mut y = x.matmul(&w);
    for i in 0..n {
        for v in y.row_mut(i) {
            *v += 0.1 * rng.standard_normal() + 2.0;
        }
    }
    Problem { x, s, y }
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn centering(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

pub fn rbf_gram(x: &DMatrix<f64>, z: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), z.nrows(), |i, j| {
        let d2 = (x.row(i) - z.row(j)).norm_squared();
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
}

pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius() / b.frobenius().max(f64::MIN_POSITIVE)
}
