//! Reference linear algebra used to check AATGS against Krylov theory.
//!
//! For `f(x) = b − Ax` with full depth and no restarts, the intermediate
//! `x̄_j` of AATGS is the `j`-th GMRES iterate and `f_{j+1} = (I − βA) f̄_j`.
//! When `A` is symmetric the triangular factor `S` is banded (only the
//! diagonal and two superdiagonals survive) and `θ_j = Q_jᵀ f_j` has at most
//! two nonzero trailing entries. This module provides the operators, a plain
//! full GMRES, and checks that measure how far a run is from those facts.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::{FixedPointProblem, SolverConfig, Window};
use crate::solver::Aatgs;
use crate::tgs::PairedBasis;
use crate::vector::{axpy, dot, norm2, relative_distance, sub};

/// Dense matrix with symmetry metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
    symmetric: bool,
    spectrum_hint: Option<(f64, f64)>,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>, symmetric: bool) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            symmetric,
            spectrum_hint: None,
        })
    }

    pub fn with_spectrum(mut self, lambda_min: f64, lambda_max: f64) -> Self {
        self.spectrum_hint = Some((lambda_min, lambda_max));
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn spectrum_hint(&self) -> Option<(f64, f64)> {
        self.spectrum_hint
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        // Column-major storage: accumulate columns.
        for (j, vj) in v.iter().enumerate() {
            if *vj != 0.0 {
                axpy(*vj, self.matrix.column(j).as_slice(), &mut out);
            }
        }
        out
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|j| dot(self.matrix.column(j).as_slice(), v))
            .collect()
    }

    /// `κ = λ_max / λ_min` when a positive spectrum is known.
    pub fn condition_number(&self) -> Option<f64> {
        match self.spectrum_hint {
            Some((lo, hi)) if self.symmetric && lo > 0.0 => Some(hi / lo),
            _ => None,
        }
    }

    /// `‖I − βA‖₂`, in closed form for symmetric operators with a known
    /// spectrum and by power iteration on `(I − βA)ᵀ(I − βA)` otherwise.
    pub fn norm_i_minus_beta_a(&self, beta: f64) -> f64 {
        if let (true, Some((lo, hi))) = (self.symmetric, self.spectrum_hint) {
            return (1.0 - beta * lo).abs().max((1.0 - beta * hi).abs());
        }
        let apply = |v: &[f64]| {
            let mut out = v.to_vec();
            axpy(-beta, &self.apply(v), &mut out);
            out
        };
        let apply_t = |v: &[f64]| {
            let mut out = v.to_vec();
            axpy(-beta, &self.apply_transpose(v), &mut out);
            out
        };
        power_iteration(self.dim(), |v| apply_t(&apply(v)), 1e-8).sqrt()
    }

    /// Largest `|(Au, v) − (u, Av)|` relative to `‖A‖_F ‖u‖ ‖v‖` over `trials` random pairs.
    pub fn symmetry_residual(&self, seed: u64, trials: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.matrix.norm();
        (0..trials)
            .map(|_| {
                let u = gaussian_vec(&mut rng, self.dim());
                let v = gaussian_vec(&mut rng, self.dim());
                let gap = (dot(&self.apply(&u), &v) - dot(&u, &self.apply(&v))).abs();
                gap / (scale * norm2(&u) * norm2(&v))
            })
            .fold(0.0, f64::max)
    }
}

/// Dominant eigenvalue of a symmetric positive semidefinite map.
fn power_iteration(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>, tol: f64) -> f64 {
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + (i as f64 * 0.618_033_988_749).fract())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = apply(&v);
        let next = norm2(&w);
        if next == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / next).collect();
        if (next - lambda).abs() <= tol * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Filled column by column so a seed maps to the same matrix regardless of layout.
    DMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| StandardNormal.sample(rng)),
    )
}

/// Fixture families for the Krylov checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `Qᵀ diag(λ) Q` with `λ` evenly spaced over `[lambda_min, lambda_max]` and `Q` random orthogonal.
    SpdSpectrum { lambda_min: f64, lambda_max: f64 },
    /// `shift·I + spread·G/√n` with `G` standard Gaussian.
    NonsymmetricRandom { shift: f64, spread: f64 },
    /// `I + S` with `S` skew-symmetric of scale `skew_scale`.
    SkewPlusIdentity { skew_scale: f64 },
    /// 1-D Dirichlet Laplacian `tridiag(−1, 2, −1)`.
    BandedLaplacian,
}

pub fn make_test_operator(kind: OperatorKind, n: usize, seed: u64) -> Result<LinearOperator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "operator dimension must be >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    match kind {
        OperatorKind::SpdSpectrum {
            lambda_min,
            lambda_max,
        } => {
            if !(lambda_min > 0.0 && lambda_max >= lambda_min && lambda_max.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "spectrum must satisfy 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
                )));
            }
            let q = gaussian_matrix(&mut rng, n, n).qr().q();
            let eig = DVector::from_iterator(
                n,
                (0..n).map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (nf - 1.0)),
            );
            let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            let a = (&a + a.transpose()) * 0.5;
            Ok(LinearOperator::new(a, true)?.with_spectrum(lambda_min, lambda_max))
        }
        OperatorKind::NonsymmetricRandom { shift, spread } => {
            let g = gaussian_matrix(&mut rng, n, n);
            let a = DMatrix::identity(n, n) * shift + g * (spread / nf.sqrt());
            LinearOperator::new(a, false)
        }
        OperatorKind::SkewPlusIdentity { skew_scale } => {
            let g = gaussian_matrix(&mut rng, n, n);
            let s = (&g - g.transpose()) * (0.5 * skew_scale / nf.sqrt());
            LinearOperator::new(DMatrix::identity(n, n) + s, false)
        }
        OperatorKind::BandedLaplacian => {
            let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
                0 => 2.0,
                1 => -1.0,
                _ => 0.0,
            });
            let theta = std::f64::consts::PI / (nf + 1.0);
            let lo = 2.0 - 2.0 * theta.cos();
            let hi = 2.0 - 2.0 * (nf * theta).cos();
            Ok(LinearOperator::new(a, true)?.with_spectrum(lo, hi))
        }
    }
}

/// `f(x) = b − Ax`.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    op: LinearOperator,
    b: Vec<f64>,
    name: String,
}

impl LinearProblem {
    pub fn new(op: LinearOperator, b: Vec<f64>) -> Result<Self> {
        if b.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: b.len(),
            });
        }
        Ok(Self {
            op,
            b,
            name: "linear".into(),
        })
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.op
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

impl FixedPointProblem for LinearProblem {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(sub(&self.b, &self.op.apply(x)))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Arnoldi process with modified Gram-Schmidt.
struct Arnoldi {
    basis: Vec<Vec<f64>>,
    /// Column `k` holds `h_{0..=k+1, k}`.
    hessenberg: Vec<Vec<f64>>,
    beta: f64,
    lucky: bool,
}

fn arnoldi(op: &LinearOperator, r0: &[f64], steps: usize) -> Arnoldi {
    let beta = norm2(r0);
    let mut out = Arnoldi {
        basis: Vec::with_capacity(steps + 1),
        hessenberg: Vec::with_capacity(steps),
        beta,
        lucky: false,
    };
    if beta == 0.0 {
        out.lucky = true;
        return out;
    }
    out.basis.push(r0.iter().map(|v| v / beta).collect());
    for k in 0..steps {
        let mut w = op.apply(&out.basis[k]);
        let mut h = Vec::with_capacity(k + 2);
        for v in &out.basis {
            let s = dot(&w, v);
            axpy(-s, v, &mut w);
            h.push(s);
        }
        let norm = norm2(&w);
        h.push(norm);
        out.hessenberg.push(h);
        let scale = out.hessenberg[k]
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        if norm <= 1e-14 * scale {
            out.lucky = true;
            break;
        }
        out.basis.push(w.into_iter().map(|v| v / norm).collect());
    }
    out
}

/// Orthonormal basis of `span{r, Ar, …, A^{j−1}r}` (shorter on lucky breakdown).
pub fn krylov_basis(op: &LinearOperator, r: &[f64], j: usize) -> Vec<Vec<f64>> {
    let mut a = arnoldi(op, r, j);
    a.basis.truncate(j);
    a.basis
}

/// `j`-th full GMRES iterate: minimizes `‖b − Ax‖₂` over `x0 + K_j(A, r0)`.
pub fn gmres_iterate(op: &LinearOperator, b: &[f64], x0: &[f64], j: usize) -> Result<Vec<f64>> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if b.len() != n { b.len() } else { x0.len() },
        });
    }
    if j > n {
        return Err(Error::InvalidParameter(format!(
            "GMRES step {j} exceeds dimension {n}"
        )));
    }
    let r0 = sub(b, &op.apply(x0));
    let arn = arnoldi(op, &r0, j);
    let k = arn.hessenberg.len();
    if k == 0 {
        return Ok(x0.to_vec());
    }
    // Rows = k+1 unless the last subdiagonal vanished.
    let rows = if arn.lucky { k } else { k + 1 };
    let h = DMatrix::from_fn(rows, k, |r, c| {
        arn.hessenberg[c].get(r).copied().unwrap_or(0.0)
    });
    let mut rhs = DVector::zeros(rows);
    rhs[0] = arn.beta;
    let qr = h.qr();
    let qtb = qr.q().transpose() * rhs;
    let y = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::InvalidParameter("singular Hessenberg factor".into()))?;
    let mut x = x0.to_vec();
    for (c, v) in arn.basis.iter().take(k).enumerate() {
        axpy(y[c], v, &mut x);
    }
    Ok(x)
}

/// Right-hand side of `‖r_{j+1}‖ ≤ 2‖I − βA‖ ((√κ − 1)/(√κ + 1))^j ‖r₀‖`.
pub fn spd_bound(kappa: f64, norm_i_minus_beta_a: f64, j: u32, r0_norm: f64) -> f64 {
    let s = kappa.sqrt();
    2.0 * norm_i_minus_beta_a * ((s - 1.0) / (s + 1.0)).powi(j as i32) * r0_norm
}

fn full_depth(beta: f64) -> SolverConfig {
    SolverConfig::new(Window::Unbounded, beta).without_restart()
}

fn run_checked<'a>(solver: &mut Aatgs<'a, LinearProblem>) -> Result<crate::solver::StepReport> {
    let report = solver.step()?;
    if report.breakdown_restart {
        return Err(Error::Breakdown {
            step: report.step,
            s_jj: report.s_jj,
            delta_f_norm: f64::NAN,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiscrepancy {
    pub step: usize,
    /// `‖x̄_j − x_j^GMRES‖ / ‖x_j^GMRES‖`
    pub iterate_gap: f64,
    /// `‖f_{j+1} − (I − βA) f̄_j‖ / ‖f̄_j‖`
    pub richardson_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresEquivalenceReport {
    pub steps: Vec<StepDiscrepancy>,
}

impl GmresEquivalenceReport {
    pub fn max_iterate_gap(&self) -> f64 {
        self.steps.iter().map(|s| s.iterate_gap).fold(0.0, f64::max)
    }

    pub fn max_richardson_gap(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.richardson_gap)
            .fold(0.0, f64::max)
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let _ = writeln!(
                out,
                "step={} iterate_gap={:.3e} richardson_gap={:.3e}",
                s.step, s.iterate_gap, s.richardson_gap
            );
        }
        let _ = writeln!(
            out,
            "max_iterate_gap={:.3e} max_richardson_gap={:.3e}",
            self.max_iterate_gap(),
            self.max_richardson_gap()
        );
        out
    }
}

/// Runs AATGS(∞) on `f(x) = b − Ax` and compares each `x̄_j` with GMRES and
/// each `f_{j+1}` with one Richardson step from `f̄_j`.
pub fn check_gmres_equivalence(
    op: &LinearOperator,
    b: &[f64],
    x0: &[f64],
    beta: f64,
    steps: usize,
) -> Result<GmresEquivalenceReport> {
    let problem = LinearProblem::new(op.clone(), b.to_vec())?;
    let mut solver = Aatgs::start(&problem, full_depth(beta), x0)?;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let report = run_checked(&mut solver)?;
        let j = report.step;
        let gm = gmres_iterate(op, b, x0, j)?;
        let f_bar = &report.combined.f_bar;
        let mut predicted = f_bar.clone();
        axpy(-beta, &op.apply(f_bar), &mut predicted);
        let f_bar_norm = match norm2(f_bar) {
            n if n > 0.0 => n,
            _ => 1.0,
        };
        out.push(StepDiscrepancy {
            step: j,
            iterate_gap: relative_distance(&report.combined.x_bar, &gm),
            richardson_gap: norm2(&sub(solver.f(), &predicted)) / f_bar_norm,
        });
    }
    Ok(GmresEquivalenceReport { steps: out })
}

/// Largest `|s_ij| / max|s|` over entries with `i < j − 2`.
pub fn band_violation(basis: &PairedBasis) -> f64 {
    let max_s = basis
        .columns()
        .flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.diag)))
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    if max_s == 0.0 {
        return 0.0;
    }
    basis
        .columns()
        .flat_map(|c| {
            (0..c.coeffs.len())
                .filter(move |&k| c.row_index(k) + 2 < c.index)
                .map(move |k| c.coeffs[k].abs())
        })
        .fold(0.0, f64::max)
        / max_s
}

/// Largest `|θ_k|` over all but the last two entries.
pub fn theta_tail(theta: &[f64]) -> f64 {
    theta
        .iter()
        .take(theta.len().saturating_sub(2))
        .fold(0.0_f64, |a, v| a.max(v.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBandReport {
    /// `band_violation` after the last step.
    pub band_ratio: f64,
    /// Largest `theta_tail(θ_j) / ‖f_j‖` over all steps.
    pub theta_ratio: f64,
    /// Largest relative gap between AATGS(3) and AATGS(∞) iterates.
    pub window3_gap: f64,
}

impl SymmetricBandReport {
    pub fn to_key_value(&self) -> String {
        format!(
            "band_ratio={:.3e} theta_ratio={:.3e} window3_gap={:.3e}\n",
            self.band_ratio, self.theta_ratio, self.window3_gap
        )
    }
}

/// Measures the short-recurrence structure of a full-depth run and compares it
/// with a window-3 run on the same problem.
pub fn check_symmetric_band(
    op: &LinearOperator,
    b: &[f64],
    x0: &[f64],
    beta: f64,
    steps: usize,
) -> Result<SymmetricBandReport> {
    let problem = LinearProblem::new(op.clone(), b.to_vec())?;
    let mut full = Aatgs::start(&problem, full_depth(beta), x0)?;
    let short_cfg = SolverConfig::new(Window::Bounded(3), beta).without_restart();
    let mut short = Aatgs::start(&problem, short_cfg, x0)?;
    let mut theta_ratio = 0.0_f64;
    let mut window3_gap = relative_distance(short.x(), full.x());
    for _ in 0..steps {
        let f_norm = norm2(full.f());
        let report = run_checked(&mut full)?;
        theta_ratio = theta_ratio.max(theta_tail(&report.theta) / f_norm);
        run_checked(&mut short)?;
        window3_gap = window3_gap.max(relative_distance(short.x(), full.x()));
    }
    Ok(SymmetricBandReport {
        band_ratio: band_violation(full.basis()),
        theta_ratio,
        window3_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdBoundStep {
    pub step: usize,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdBoundReport {
    pub steps: Vec<SpdBoundStep>,
}

impl SpdBoundReport {
    /// Largest `measured / bound`.
    pub fn max_ratio(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.measured / s.bound)
            .fold(0.0, f64::max)
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let _ = writeln!(
                out,
                "step={} residual={:.6e} bound={:.6e}",
                s.step, s.measured, s.bound
            );
        }
        let _ = writeln!(out, "max_ratio={:.4}", self.max_ratio());
        out
    }
}

/// Compares `‖r_{j+1}‖` of AATGS(∞) with the SPD bound for `j = 1..=steps`.
pub fn check_spd_bound(
    op: &LinearOperator,
    b: &[f64],
    x0: &[f64],
    beta: f64,
    steps: usize,
) -> Result<SpdBoundReport> {
    let kappa = op.condition_number().ok_or_else(|| {
        Error::InvalidParameter("SPD bound needs a symmetric operator with known spectrum".into())
    })?;
    let norm = op.norm_i_minus_beta_a(beta);
    let problem = LinearProblem::new(op.clone(), b.to_vec())?;
    let r0 = norm2(&problem.residual(x0)?);
    let mut solver = Aatgs::start(&problem, full_depth(beta), x0)?;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let report = run_checked(&mut solver)?;
        out.push(SpdBoundStep {
            step: report.step,
            measured: report.residual_norm,
            bound: spd_bound(kappa, norm, report.step as u32, r0),
        });
    }
    Ok(SpdBoundReport { steps: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    /// Largest `‖q_i + A u_i‖₂`.
    pub pairing_gap: f64,
    /// Largest distance of `u_i / ‖u_i‖` from `K_i(A, f₀)`.
    pub krylov_gap: f64,
}

/// Checks `Q = −AU` and `span U_j = K_j(A, f₀)` for a full-depth run.
pub fn check_krylov_identities(
    op: &LinearOperator,
    b: &[f64],
    x0: &[f64],
    beta: f64,
    steps: usize,
) -> Result<KrylovReport> {
    let problem = LinearProblem::new(op.clone(), b.to_vec())?;
    let f0 = problem.residual(x0)?;
    let mut solver = Aatgs::start(&problem, full_depth(beta), x0)?;
    for _ in 0..steps {
        run_checked(&mut solver)?;
    }
    let basis = solver.basis();
    let krylov = krylov_basis(op, &f0, basis.len());
    let mut pairing_gap = 0.0_f64;
    let mut krylov_gap = 0.0_f64;
    for i in 0..basis.len() {
        let u = basis.u(i);
        let mut gap = basis.q(i).to_vec();
        axpy(1.0, &op.apply(u), &mut gap);
        pairing_gap = pairing_gap.max(norm2(&gap));

        let mut rem = u.to_vec();
        for v in krylov.iter().take(i + 1) {
            let s = dot(&rem, v);
            axpy(-s, v, &mut rem);
        }
        krylov_gap = krylov_gap.max(norm2(&rem) / norm2(u));
    }
    Ok(KrylovReport {
        pairing_gap,
        krylov_gap,
    })
}
