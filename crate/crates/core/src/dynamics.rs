//! Rigid-body model of the planar two-link arm and its fixed-step propagation.
//!
//! The arm moves in a plane with no gravity, so the equations of motion reduce
//! to `M(θ)·θ̈ + C(θ, θ̇) = τ`. Two Coriolis models are provided: the
//! controller-facing [`CoriolisVariant::PaperVerbatim`] terms, and a textbook
//! [`CoriolisVariant::StandardPhysical`] model whose inertia matrix and
//! Coriolis terms both derive from [`kinetic_energy`], used for conservation
//! diagnostics.

use nalgebra::{Matrix2, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative pivot threshold below which the inertia matrix is treated as singular.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid manipulator parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("inertia matrix is singular (det = {det:e})")]
    SingularInertia { det: f64 },
}

/// Mass properties and torque limits of the two links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulatorParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    /// Distance from joint to centre of mass along each link.
    pub r1: f64,
    pub r2: f64,
    pub i1: f64,
    pub i2: f64,
    pub tau_max: [f64; 2],
}

impl ManipulatorParams {
    /// Builds uniform slender links: COM at mid-length, `I = m·l²/3`.
    pub fn from_mass_length(
        m1: f64,
        m2: f64,
        l1: f64,
        l2: f64,
        tau_max: [f64; 2],
    ) -> Result<Self, DynamicsError> {
        let params = Self {
            m1,
            m2,
            l1,
            l2,
            r1: l1 / 2.0,
            r2: l2 / 2.0,
            i1: m1 * l1 * l1 / 3.0,
            i2: m2 * l2 * l2 / 3.0,
            tau_max,
        };
        params.validate()?;
        Ok(params)
    }

    /// The reference arm: 20 kg / 10 kg links of 1 m, limits of 400 and 150 N·m.
    pub fn reference() -> Self {
        Self::from_mass_length(20.0, 10.0, 1.0, 1.0, [400.0, 150.0])
            .expect("reference parameters are valid")
    }

    /// Same arm with masses and lengths scaled; derived quantities recomputed.
    pub fn scaled(&self, factors: [f64; 4]) -> Result<Self, DynamicsError> {
        Self::from_mass_length(
            self.m1 * factors[0],
            self.m2 * factors[1],
            self.l1 * factors[2],
            self.l2 * factors[3],
            self.tau_max,
        )
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("i1", self.i1),
            ("i2", self.i2),
            ("tau_max[0]", self.tau_max[0]),
            ("tau_max[1]", self.tau_max[1]),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Joint angles (unwrapped, rad) and joint rates (rad/s).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct State4 {
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl State4 {
    pub const fn new(theta1: f64, theta2: f64, omega1: f64, omega2: f64) -> Self {
        Self {
            theta1,
            theta2,
            omega1,
            omega2,
        }
    }

    /// A configuration at rest.
    pub const fn at_rest(theta1: f64, theta2: f64) -> Self {
        Self::new(theta1, theta2, 0.0, 0.0)
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.theta1, self.theta2, self.omega1, self.omega2)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn angles(&self) -> Vector2<f64> {
        Vector2::new(self.theta1, self.theta2)
    }

    pub fn rates(&self) -> Vector2<f64> {
        Vector2::new(self.omega1, self.omega2)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoriolisVariant {
    /// Inertia and Coriolis terms exactly as printed for the controller model.
    #[default]
    PaperVerbatim,
    /// Energy-consistent textbook model (inertia matrix is the Hessian of the
    /// kinetic energy). Only used for conservation checks.
    StandardPhysical,
}

/// Controller-model inertia matrix.
///
/// `M11 = m1 r1² + m2 (l1² + r2²) + I1 + m2 l1 r2 cos θ2`,
/// `M12 = M21 = m2 r2² + ½ m2 l1 r2 cos θ2`, `M22 = m2 r2² + I2`.
pub fn inertia_matrix(params: &ManipulatorParams, theta2: f64) -> Matrix2<f64> {
    let p = params;
    let coupling = p.m2 * p.l1 * p.r2 * theta2.cos();
    let m11 = p.m1 * p.r1 * p.r1 + p.m2 * (p.l1 * p.l1 + p.r2 * p.r2) + p.i1 + coupling;
    let m12 = p.m2 * p.r2 * p.r2 + 0.5 * coupling;
    let m22 = p.m2 * p.r2 * p.r2 + p.i2;
    Matrix2::new(m11, m12, m12, m22)
}

/// Inertia matrix consistent with [`kinetic_energy`], where link 2 spins at
/// the absolute rate `ω1 + ω2`.
pub fn standard_inertia_matrix(params: &ManipulatorParams, theta2: f64) -> Matrix2<f64> {
    let p = params;
    let h = p.m2 * p.l1 * p.r2 * theta2.cos();
    let m22 = p.m2 * p.r2 * p.r2 + p.i2;
    let m12 = m22 + h;
    let m11 = p.m1 * p.r1 * p.r1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.r2 * p.r2) + p.i2 + 2.0 * h;
    Matrix2::new(m11, m12, m12, m22)
}

/// Inertia matrix of the selected model.
pub fn model_inertia(
    params: &ManipulatorParams,
    theta2: f64,
    variant: CoriolisVariant,
) -> Matrix2<f64> {
    match variant {
        CoriolisVariant::PaperVerbatim => inertia_matrix(params, theta2),
        CoriolisVariant::StandardPhysical => standard_inertia_matrix(params, theta2),
    }
}

/// Velocity-product terms `C(θ, θ̇)`.
///
/// `PaperVerbatim` keeps the printed `(2θ̇1 + 1)` factor and the `l2` in the
/// second row. `StandardPhysical` is `C1 = −h(2θ̇1θ̇2 + θ̇2²)`, `C2 = h θ̇1²`
/// with `h = m2 l1 r2 sin θ2`.
pub fn coriolis_vector(
    params: &ManipulatorParams,
    state: &State4,
    variant: CoriolisVariant,
) -> Vector2<f64> {
    let p = params;
    let s2 = state.theta2.sin();
    let (w1, w2) = (state.omega1, state.omega2);
    match variant {
        CoriolisVariant::PaperVerbatim => {
            // The printed constant in (2w1 + 1) only ever appears multiplied by w2.
            let c1 = -0.5 * p.m2 * p.l1 * p.r2 * w2 * (2.0 * w1 + 1.0) * s2;
            let c2 = -0.5 * p.m2 * p.l2 * p.r2 * w1 * w2 * s2;
            Vector2::new(c1, c2)
        }
        CoriolisVariant::StandardPhysical => {
            let h = p.m2 * p.l1 * p.r2 * s2;
            Vector2::new(-h * (2.0 * w1 * w2 + w2 * w2), h * w1 * w1)
        }
    }
}

fn solve_2x2(m: &Matrix2<f64>, rhs: &Vector2<f64>) -> Result<Vector2<f64>, DynamicsError> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = m[(0, 0)].abs().max(m[(1, 1)].abs()).max(1.0);
    if !(det.abs() > SINGULAR_TOL * scale * scale) {
        return Err(DynamicsError::SingularInertia { det });
    }
    Ok(Vector2::new(
        (m[(1, 1)] * rhs[0] - m[(0, 1)] * rhs[1]) / det,
        (m[(0, 0)] * rhs[1] - m[(1, 0)] * rhs[0]) / det,
    ))
}

fn invert_2x2(m: &Matrix2<f64>) -> Result<Matrix2<f64>, DynamicsError> {
    let c0 = solve_2x2(m, &Vector2::new(1.0, 0.0))?;
    let c1 = solve_2x2(m, &Vector2::new(0.0, 1.0))?;
    Ok(Matrix2::from_columns(&[c0, c1]))
}

/// Joint accelerations `θ̈ = M⁻¹(τ − C)`; gravity is identically zero.
pub fn forward_dynamics(
    params: &ManipulatorParams,
    state: &State4,
    tau: &Vector2<f64>,
    variant: CoriolisVariant,
) -> Result<Vector2<f64>, DynamicsError> {
    let m = model_inertia(params, state.theta2, variant);
    let c = coriolis_vector(params, state, variant);
    solve_2x2(&m, &(tau - c))
}

fn state_derivative(
    params: &ManipulatorParams,
    x: &Vector4<f64>,
    tau: &Vector2<f64>,
    variant: CoriolisVariant,
) -> Result<Vector4<f64>, DynamicsError> {
    let acc = forward_dynamics(params, &State4::from_vector(x), tau, variant)?;
    Ok(Vector4::new(x[2], x[3], acc[0], acc[1]))
}

/// One classical Runge–Kutta step with the torque held over the whole step.
pub fn rk4_step(
    params: &ManipulatorParams,
    state: &State4,
    tau: &Vector2<f64>,
    dt: f64,
    variant: CoriolisVariant,
) -> Result<State4, DynamicsError> {
    let x = state.to_vector();
    let k1 = state_derivative(params, &x, tau, variant)?;
    let k2 = state_derivative(params, &(x + k1 * (0.5 * dt)), tau, variant)?;
    let k3 = state_derivative(params, &(x + k2 * (0.5 * dt)), tau, variant)?;
    let k4 = state_derivative(params, &(x + k3 * dt), tau, variant)?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    Ok(State4::from_vector(&next))
}

/// Kinetic energy from the COM velocities of both links plus their spin.
///
/// Link 2's rotational term uses its absolute angular rate `ω1 + ω2`.
pub fn kinetic_energy(params: &ManipulatorParams, state: &State4) -> f64 {
    let p = params;
    let (t1, t12) = (state.theta1, state.theta1 + state.theta2);
    let (w1, w12) = (state.omega1, state.omega1 + state.omega2);
    // d/dt of the COM positions.
    let v1 = Vector2::new(-p.r1 * t1.sin() * w1, p.r1 * t1.cos() * w1);
    let v2 = Vector2::new(
        -p.l1 * t1.sin() * w1 - p.r2 * t12.sin() * w12,
        p.l1 * t1.cos() * w1 + p.r2 * t12.cos() * w12,
    );
    0.5 * p.m1 * v1.norm_squared()
        + 0.5 * p.m2 * v2.norm_squared()
        + 0.5 * p.i1 * w1 * w1
        + 0.5 * p.i2 * w12 * w12
}

/// Rest-point linearization of the controller model about `theta`.
///
/// Rates and Coriolis terms are zeroed, so `A = [[0, I], [0, 0]]` and
/// `B = [[0], [M(θ)⁻¹]]`.
pub fn linearize(
    params: &ManipulatorParams,
    theta: &Vector2<f64>,
) -> Result<(Matrix4<f64>, Matrix4x2<f64>), DynamicsError> {
    let m_inv = invert_2x2(&inertia_matrix(params, theta[1]))?;
    let mut a = Matrix4::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    let mut b = Matrix4x2::zeros();
    b.fixed_view_mut::<2, 2>(2, 0).copy_from(&m_inv);
    Ok((a, b))
}
