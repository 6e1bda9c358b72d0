//! Oracles written against nalgebra directly, independent of `aatgs::linear`.
#![allow(dead_code)]

pub mod props;

use aatgs::FixedPointProblem;
use nalgebra::{DMatrix, DVector};

pub fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Orthonormal basis of `span{r, Ar, …, A^{j−1}r}` by classical Gram-Schmidt
/// applied twice to each new power-like vector.
pub fn krylov_columns(a: &DMatrix<f64>, r: &[f64], j: usize) -> DMatrix<f64> {
    let n = r.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(j);
    let mut v = DVector::from_column_slice(r);
    for _ in 0..j {
        for _ in 0..2 {
            let coeffs: Vec<f64> = cols.iter().map(|c| c.dot(&v)).collect();
            for (c, s) in cols.iter().zip(coeffs) {
                v -= c * s;
            }
        }
        let norm = v.norm();
        assert!(norm > 1e-13, "Krylov space saturated");
        let q = v / norm;
        v = a * &q;
        cols.push(q);
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Minimizer of `‖b − Ax‖₂` over `x0 + K_j(A, b − Ax0)` by dense least squares.
pub fn brute_force_gmres(a: &DMatrix<f64>, b: &[f64], x0: &[f64], j: usize) -> Vec<f64> {
    let x0v = DVector::from_column_slice(x0);
    let r0 = DVector::from_column_slice(b) - a * &x0v;
    let v = krylov_columns(a, r0.as_slice(), j);
    let av = a * &v;
    let y = av.svd(true, true).solve(&r0, 1e-15).unwrap();
    (x0v + v * y).as_slice().to_vec()
}

/// Distance of `u` from the span of the orthonormal columns of `basis`, relative to `‖u‖`.
pub fn distance_from_span(basis: &DMatrix<f64>, u: &[f64]) -> f64 {
    let u = DVector::from_column_slice(u);
    let proj = basis * (basis.transpose() * &u);
    (&u - proj).norm() / u.norm()
}

/// Anderson acceleration with an SVD least-squares solve each step, no restarts.
/// Returns the residual norms of `x_0 … x_steps`.
pub fn dense_anderson<P: FixedPointProblem>(
    p: &P,
    x0: &[f64],
    beta: f64,
    window: Option<usize>,
    steps: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x0.len();
    let mut xs = vec![DVector::from_column_slice(x0)];
    let mut fs = vec![DVector::from_vec(p.residual(x0).unwrap())];
    let x1 = &xs[0] + &fs[0] * beta;
    fs.push(DVector::from_vec(p.residual(x1.as_slice()).unwrap()));
    xs.push(x1);
    while xs.len() <= steps {
        let k = xs.len() - 1;
        let first = window.map_or(0, |m| k.saturating_sub(m));
        let cols = k - first;
        let dx = DMatrix::from_fn(n, cols, |i, c| xs[first + c + 1][i] - xs[first + c][i]);
        let df = DMatrix::from_fn(n, cols, |i, c| fs[first + c + 1][i] - fs[first + c][i]);
        let f = fs[k].clone();
        let g = df.clone().svd(true, true).solve(&f, 0.0).unwrap();
        let next = &xs[k] - &dx * &g + (&f - &df * &g) * beta;
        fs.push(DVector::from_vec(p.residual(next.as_slice()).unwrap()));
        xs.push(next);
    }
    (
        xs.iter().map(|x| x.as_slice().to_vec()).collect(),
        fs.iter().map(|f| f.norm()).collect(),
    )
}

/// Central differences of `value`, one coordinate at a time.
pub fn central_differences<F: Fn(&[f64]) -> f64>(value: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = value(&probe);
            probe[k] = x[k] - h;
            let down = value(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Gaussian vector from a seeded ChaCha stream.
pub fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
