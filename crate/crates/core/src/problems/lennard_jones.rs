//! Lennard-Jones cluster relaxation from a perturbed FCC lattice.
//!
//! Coordinates are packed as `x[3i..3i+3] = Y_i`. The residual handed to the
//! solvers is `f(x) = −∇E(x)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::problem::FixedPointProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LennardJonesSpec {
    pub cells_per_side: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Standard deviation of the Gaussian displacement applied to every coordinate.
    pub perturbation_scale: f64,
    pub seed: u64,
}

impl Default for LennardJonesSpec {
    fn default() -> Self {
        Self {
            cells_per_side: 3,
            epsilon: 1.0,
            delta: 1.0,
            perturbation_scale: 0.05,
            seed: 0,
        }
    }
}

impl LennardJonesSpec {
    pub fn atom_count(&self) -> usize {
        4 * self.cells_per_side.pow(3)
    }

    /// Cubic cell edge whose nearest-neighbour distance sits at the pair minimum `2^{1/6}δ`.
    pub fn lattice_constant(&self) -> f64 {
        2f64.powf(1.0 / 6.0) * self.delta * 2f64.sqrt()
    }
}

/// FCC positions with four atoms per cubic cell plus seeded Gaussian noise.
pub fn fcc_initial(spec: &LennardJonesSpec) -> Vec<f64> {
    const OFFSETS: [[f64; 3]; 4] = [
        [0.0, 0.0, 0.0],
        [0.5, 0.5, 0.0],
        [0.5, 0.0, 0.5],
        [0.0, 0.5, 0.5],
    ];
    let a = spec.lattice_constant();
    let k = spec.cells_per_side;
    let mut x = Vec::with_capacity(3 * spec.atom_count());
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                for off in OFFSETS {
                    x.push((i as f64 + off[0]) * a);
                    x.push((j as f64 + off[1]) * a);
                    x.push((l as f64 + off[2]) * a);
                }
            }
        }
    }
    if spec.perturbation_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.perturbation_scale).expect("finite positive scale");
        for v in &mut x {
            *v += noise.sample(&mut rng);
        }
    }
    x
}

/// Total pair energy and its gradient.
pub fn lj_energy_and_gradient(spec: &LennardJonesSpec, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x.len() % 3 != 0 {
        return Err(Error::DimensionMismatch {
            expected: 3 * (x.len() / 3 + 1),
            got: x.len(),
        });
    }
    let atoms = x.len() / 3;
    let d6 = spec.delta.powi(6);
    let d12 = d6 * d6;
    let mut energy = 0.0;
    let mut grad = vec![0.0; x.len()];
    for i in 0..atoms {
        let yi = &x[3 * i..3 * i + 3];
        for j in 0..i {
            let yj = &x[3 * j..3 * j + 3];
            let diff = [yi[0] - yj[0], yi[1] - yj[1], yi[2] - yj[2]];
            let r2 = diff.iter().map(|d| d * d).sum::<f64>();
            if r2 == 0.0 {
                return Err(Error::Domain(format!("atoms {j} and {i} coincide")));
            }
            let inv6 = 1.0 / (r2 * r2 * r2);
            let inv12 = inv6 * inv6;
            energy += 4.0 * spec.epsilon * (d12 * inv12 - d6 * inv6);
            // (dE/dr) / r
            let scale = 4.0 * spec.epsilon * (-12.0 * d12 * inv12 + 6.0 * d6 * inv6) / r2;
            for k in 0..3 {
                grad[3 * i + k] += scale * diff[k];
                grad[3 * j + k] -= scale * diff[k];
            }
        }
    }
    Ok((energy, grad))
}

#[derive(Debug, Clone)]
pub struct LennardJonesProblem {
    spec: LennardJonesSpec,
    name: String,
}

impl LennardJonesProblem {
    pub fn new(spec: LennardJonesSpec) -> Self {
        Self {
            name: format!("lennard_jones(atoms={})", spec.atom_count()),
            spec,
        }
    }

    pub fn spec(&self) -> &LennardJonesSpec {
        &self.spec
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        Ok(lj_energy_and_gradient(&self.spec, x)?.0)
    }
}

impl FixedPointProblem for LennardJonesProblem {
    fn dim(&self) -> usize {
        3 * self.spec.atom_count()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let (_, mut g) = lj_energy_and_gradient(&self.spec, x)?;
        g.iter_mut().for_each(|v| *v = -*v);
        Ok(g)
    }

    fn default_beta(&self) -> f64 {
        1.5e-4
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn initial_point(&self) -> Vec<f64> {
        fcc_initial(&self.spec)
    }
}
