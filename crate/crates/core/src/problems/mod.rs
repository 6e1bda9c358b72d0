//! Benchmark problems, each exposed as a [`FixedPointProblem`](crate::problem::FixedPointProblem).

pub mod bilinear;
pub mod bratu;
pub mod hequation;
pub mod lennard_jones;
pub mod logistic;

pub use bilinear::{BilinearGame, BilinearGameSpec};
pub use bratu::{bratu_residual, BratuProblem, BratuSpec};
pub use hequation::{hequation_residual, HEquationProblem, HEquationSpec};
pub use lennard_jones::{
    fcc_initial, lj_energy_and_gradient, LennardJonesProblem, LennardJonesSpec,
};
pub use logistic::{
    load_madelon, logreg_loss_and_gradient, parse_madelon, LogRegSpec, LogisticProblem,
};
