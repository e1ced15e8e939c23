//! Continuous-time algebraic Riccati equation and LQR state feedback.
//!
//! The stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` is read off the
//! stable invariant subspace of the Hamiltonian
//! `H = [[A, −BR⁻¹Bᵀ], [−Q, −Aᵀ]]`. The subspace is isolated with the
//! scaled Newton iteration for the matrix sign function: `sign(H) + I`
//! annihilates exactly the stable directions, so `[I; P]` spans its null
//! space. A few Newton steps on the Riccati residual then polish `P` to
//! working precision.

use nalgebra::{DMatrix, Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{linearize, DynamicsError, ManipulatorParams, State4};

/// Lower bound applied to every state weight so `Q` stays positive definite.
pub const Q_FLOOR: f64 = 1e-6;

/// Control weight shared by both joints.
pub const DEFAULT_R: f64 = 1e-4;

const SIGN_MAX_ITERS: usize = 100;
const SIGN_TOL: f64 = 1e-12;
const REFINE_STEPS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CareError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("control weight matrix R is not positive definite")]
    RNotPositiveDefinite,
    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(&'static str),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Diagonal LQR weights `Q = diag(q)`, `R = diag(r, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqrWeights {
    pub q: [f64; 4],
    pub r: f64,
}

impl LqrWeights {
    /// Floors every state weight at [`Q_FLOOR`].
    pub fn new(q: [f64; 4], r: f64) -> Self {
        Self {
            q: q.map(|v| v.max(Q_FLOOR)),
            r,
        }
    }

    pub fn q_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::from(self.q))
    }

    pub fn r_matrix(&self) -> Matrix2<f64> {
        Matrix2::from_diagonal_element(self.r)
    }
}

/// State-feedback gain for the arm: `u = −K (x − x_target)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMatrix(pub Matrix2x4<f64>);

impl GainMatrix {
    pub fn from_dmatrix(k: &DMatrix<f64>) -> Result<Self, CareError> {
        if k.shape() != (2, 4) {
            return Err(CareError::Dimension(format!(
                "expected a 2x4 gain, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self(Matrix2x4::from_fn(|r, c| k[(r, c)])))
    }

    pub fn rows(&self) -> [[f64; 4]; 2] {
        let k = &self.0;
        [
            [k[(0, 0)], k[(0, 1)], k[(0, 2)], k[(0, 3)]],
            [k[(1, 0)], k[(1, 1)], k[(1, 2)], k[(1, 3)]],
        ]
    }

    pub fn from_rows(rows: [[f64; 4]; 2]) -> Self {
        Self(Matrix2x4::from_fn(|r, c| rows[r][c]))
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `AᵀP + PA − PGP + Q` with `G = BR⁻¹Bᵀ`.
fn care_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * p + p * a - p * g * p + q
}

/// Residual `‖AᵀP + PA − PBR⁻¹BᵀP + Q‖∞`.
pub fn care_residual_norm(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64, CareError> {
    let r_inv_bt = r
        .clone()
        .cholesky()
        .ok_or(CareError::RNotPositiveDefinite)?
        .solve(&b.transpose());
    Ok(inf_norm(&care_residual(a, &(b * r_inv_bt), q, p)))
}

/// Matrix sign function by determinant-scaled Newton iteration.
fn matrix_sign(h: DMatrix<f64>) -> Result<DMatrix<f64>, CareError> {
    let dim = h.nrows();
    let mut z = h;
    let mut scaling = true;
    for _ in 0..SIGN_MAX_ITERS {
        let lu = z.clone().lu();
        let u = lu.u();
        let log_det: f64 = u.diagonal().iter().map(|d| d.abs().ln()).sum();
        if !log_det.is_finite() {
            return Err(CareError::NoStabilizingSolution(
                "Hamiltonian has eigenvalues on the imaginary axis",
            ));
        }
        let z_inv = lu.try_inverse().ok_or(CareError::NoStabilizingSolution(
            "Hamiltonian has eigenvalues on the imaginary axis",
        ))?;
        let c = if scaling { (log_det / dim as f64).exp() } else { 1.0 };
        let next = (&z / c + z_inv * c) * 0.5;
        let step = (&next - &z).abs().sum();
        let size = next.abs().sum();
        z = next;
        if !size.is_finite() {
            return Err(CareError::NoStabilizingSolution("sign iteration diverged"));
        }
        if step <= SIGN_TOL * size {
            return Ok(z);
        }
        // Scaling only helps far from convergence; it stalls the quadratic phase.
        if step < 1e-2 * size {
            scaling = false;
        }
    }
    Err(CareError::NoStabilizingSolution("sign iteration did not converge"))
}

/// Solves `X` in `LᵀX + XL = −F` for small dense `L` via the Kronecker form.
fn solve_lyapunov(l: &DMatrix<f64>, f: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    let lt = l.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(&lt) + lt.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-f).as_slice());
    let x = op.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(n, n, x.as_slice()))
}

fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Stabilizing solution `P` of the continuous-time algebraic Riccati equation.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, CareError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(CareError::Dimension(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_inv_bt = r
        .clone()
        .cholesky()
        .ok_or(CareError::RNotPositiveDefinite)?
        .solve(&b.transpose());
    let g = symmetrize(&(b * r_inv_bt));

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = matrix_sign(h)?;
    // trace(sign H) = #unstable − #stable; a Hamiltonian splits evenly.
    if w.trace().abs() > 0.5 {
        return Err(CareError::NoStabilizingSolution(
            "stable subspace has the wrong dimension",
        ));
    }

    // (W + I)[I; P] = 0  =>  [W12; W22 + I] P = −[W11 + I; W21]
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + DMatrix::identity(n, n)));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + DMatrix::identity(n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));

    let svd = lhs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(CareError::NoStabilizingSolution("stable subspace basis is singular"));
    }
    let p = svd
        .solve(&rhs, 0.0)
        .map_err(|_| CareError::NoStabilizingSolution("stable subspace basis is singular"))?;
    let mut p = symmetrize(&p);
    if !p.iter().all(|x| x.is_finite()) {
        return Err(CareError::NoStabilizingSolution("non-finite solution"));
    }

    let target = 1e-3 * 1e-8 * inf_norm(q).max(1.0);
    let mut res = care_residual(a, &g, q, &p);
    let mut res_norm = inf_norm(&res);
    for _ in 0..REFINE_STEPS {
        if res_norm <= target {
            break;
        }
        let closed = a - &g * &p;
        let Some(delta) = solve_lyapunov(&closed, &res) else {
            break;
        };
        let candidate = symmetrize(&(&p + delta));
        let cand_res = care_residual(a, &g, q, &candidate);
        let cand_norm = inf_norm(&cand_res);
        if !(cand_norm < res_norm) {
            break;
        }
        p = candidate;
        res = cand_res;
        res_norm = cand_norm;
    }
    Ok(p)
}

/// `K = R⁻¹BᵀP`.
pub fn lqr_gain(
    p: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, CareError> {
    if b.nrows() != p.nrows() || r.shape() != (b.ncols(), b.ncols()) {
        return Err(CareError::Dimension(format!(
            "P {:?}, B {:?}, R {:?}",
            p.shape(),
            b.shape(),
            r.shape()
        )));
    }
    let chol = r.clone().cholesky().ok_or(CareError::RNotPositiveDefinite)?;
    Ok(chol.solve(&(b.transpose() * p)))
}

/// Linearizes the arm at rest at `theta` and synthesizes the LQR gain there.
pub fn synthesize_gain(
    params: &ManipulatorParams,
    theta: &Vector2<f64>,
    weights: &LqrWeights,
) -> Result<GainMatrix, CareError> {
    let (a, b) = linearize(params, theta)?;
    let a = DMatrix::from_column_slice(4, 4, a.as_slice());
    let b = DMatrix::from_column_slice(4, 2, b.as_slice());
    let q = DMatrix::from_column_slice(4, 4, weights.q_matrix().as_slice());
    let r = DMatrix::from_column_slice(2, 2, weights.r_matrix().as_slice());
    let p = solve_care(&a, &b, &q, &r)?;
    GainMatrix::from_dmatrix(&lqr_gain(&p, &b, &r)?)
}

/// Regulator torque `−K (x − x_target)`, clamped to `±limits` when given.
pub fn feedback_torque(
    k: &GainMatrix,
    state: &State4,
    target: &State4,
    limits: Option<&[f64; 2]>,
) -> Vector2<f64> {
    let err = state.to_vector() - target.to_vector();
    let mut tau = -(k.0 * err);
    if let Some(lim) = limits {
        for i in 0..2 {
            tau[i] = tau[i].clamp(-lim[i], lim[i]);
        }
    }
    tau
}
