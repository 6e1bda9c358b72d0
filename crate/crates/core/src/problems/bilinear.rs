//! Regularized bilinear saddle point `min_x max_y xᵀAy + bᵀx + cᵀy`.
//!
//! With `z = [x; y]` the residual is
//!
//! ```text
//! f(z) = [ −A y − b ;  Aᵀ(x − β(A y + b)) + c ]
//! ```
//!
//! which vanishes at `x* = −A⁻ᵀc`, `y* = −A⁻¹b`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linear::{gaussian_matrix, gaussian_vec};
use crate::problem::FixedPointProblem;
use crate::vector::relative_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearGameSpec {
    pub n: usize,
    pub beta_game: f64,
    pub seed: u64,
}

impl BilinearGameSpec {
    pub fn new(n: usize, beta_game: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("bilinear game needs n >= 1".into()));
        }
        if !(beta_game >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "game regularization must be non-negative, got {beta_game}"
            )));
        }
        Ok(Self { n, beta_game, seed })
    }
}

#[derive(Debug, Clone)]
pub struct BilinearGame {
    spec: BilinearGameSpec,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    solution: Vec<f64>,
    z0: Vec<f64>,
    name: String,
}

impl BilinearGame {
    /// Draws `A`, `b`, `c` and the starting point from the seed. `A` is scaled
    /// to unit spectral norm.
    pub fn generate(spec: BilinearGameSpec) -> Result<Self> {
        let n = spec.n;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let raw = gaussian_matrix(&mut rng, n, n);
        let sv = raw.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::InvalidParameter(format!(
                "seed {} produced a numerically singular game matrix",
                spec.seed
            )));
        }
        let a = raw / smax;
        let b = DVector::from_vec(gaussian_vec(&mut rng, n));
        let c = DVector::from_vec(gaussian_vec(&mut rng, n));
        let z0 = gaussian_vec(&mut rng, 2 * n);

        let lu = a.clone().lu();
        let y_star = -lu
            .solve(&b)
            .ok_or_else(|| Error::InvalidParameter("game matrix is singular".into()))?;
        let x_star = -a
            .transpose()
            .lu()
            .solve(&c)
            .ok_or_else(|| Error::InvalidParameter("game matrix is singular".into()))?;
        let mut solution = x_star.as_slice().to_vec();
        solution.extend_from_slice(y_star.as_slice());

        Ok(Self {
            name: format!("bilinear(n={}, beta={})", n, spec.beta_game),
            spec,
            a,
            b,
            c,
            solution,
            z0,
        })
    }

    pub fn spec(&self) -> &BilinearGameSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn solution(&self) -> &[f64] {
        &self.solution
    }

    /// `‖z − z*‖ / ‖z*‖`
    pub fn distance_to_solution(&self, z: &[f64]) -> f64 {
        relative_distance(z, &self.solution)
    }

    /// The `2n × 2n` Jacobian `[0, −A; Aᵀ, −βAᵀA]`.
    pub fn jacobian(&self) -> DMatrix<f64> {
        let n = self.spec.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, n), (n, n)).copy_from(&(-&self.a));
        m.view_mut((n, 0), (n, n)).copy_from(&self.a.transpose());
        let ata = self.a.transpose() * &self.a;
        m.view_mut((n, n), (n, n))
            .copy_from(&(-self.spec.beta_game * ata));
        m
    }

    /// The constant part `[−b; c − βAᵀb]` so that `f(z) = J z + offset`.
    pub fn offset(&self) -> DVector<f64> {
        let n = self.spec.n;
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&(-&self.b));
        let lower = &self.c - self.spec.beta_game * (self.a.transpose() * &self.b);
        v.rows_mut(n, n).copy_from(&lower);
        v
    }
}

impl FixedPointProblem for BilinearGame {
    fn dim(&self) -> usize {
        2 * self.spec.n
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let n = self.spec.n;
        let x = DVector::from_column_slice(&z[..n]);
        let y = DVector::from_column_slice(&z[n..]);
        let ay_b = &self.a * y + &self.b;
        let top = -&ay_b;
        let bottom = self.a.tr_mul(&(x - self.spec.beta_game * &ay_b)) + &self.c;
        let mut out = top.as_slice().to_vec();
        out.extend_from_slice(bottom.as_slice());
        Ok(out)
    }

    /// The game step doubles as the mixing parameter, as in alternating GDA.
    fn default_beta(&self) -> f64 {
        self.spec.beta_game
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn initial_point(&self) -> Vec<f64> {
        self.z0.clone()
    }
}
