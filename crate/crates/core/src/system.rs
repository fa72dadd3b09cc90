//! Per-step operator `A` and right-hand side for implicit Euler and
//! Crank–Nicolson time stepping.

use crate::assembly::ScalarForms;
use crate::error::AssemblyError;
use crate::mesh2d::NodalTensorField;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    CrankNicolson,
}

/// `A` is shared by all six tensor components.
#[derive(Debug, Clone)]
pub struct SteppedSystem {
    pub scheme: Scheme,
    pub dt: f64,
    pub matrix: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
}

/// Euler: `A = M/Δt + K`; Crank–Nicolson: `A = M/Δt + K/2`.
pub fn build_system(forms: &ScalarForms, dt: f64, scheme: Scheme) -> Result<SteppedSystem, AssemblyError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(AssemblyError::NonPositiveTimeStep(dt));
    }
    let stiffness = forms.stiffness();
    let k_weight = match scheme {
        Scheme::Euler => 1.0,
        Scheme::CrankNicolson => 0.5,
    };
    let matrix = forms.mass.linear_combination(1.0 / dt, &stiffness, k_weight);
    Ok(SteppedSystem { scheme, dt, matrix, stiffness, mass: forms.mass.clone() })
}

impl SteppedSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Time at which the source is sampled for the step ending at `t_n`.
    pub fn load_time(&self, t_n: f64) -> f64 {
        match self.scheme {
            Scheme::Euler => t_n,
            Scheme::CrankNicolson => t_n - 0.5 * self.dt,
        }
    }

    /// `M U_prev/Δt + load` (Euler) or `M U_prev/Δt − K U_prev/2 + load`
    /// (Crank–Nicolson); `load` must be assembled at [`Self::load_time`].
    pub fn rhs(&self, u_prev: &NodalTensorField, load: &NodalTensorField) -> Result<NodalTensorField, AssemblyError> {
        let mut out = apply_block(&self.mass, u_prev)?.scaled(1.0 / self.dt);
        if self.scheme == Scheme::CrankNicolson {
            out.axpy(-0.5, &apply_block(&self.stiffness, u_prev)?);
        }
        if load.len() != out.len() {
            return Err(AssemblyError::DimensionMismatch { expected: out.len(), got: load.len() });
        }
        out.axpy(1.0, load);
        Ok(out)
    }
}

/// Applies the scalar matrix `a` to each tensor component of `field`.
pub fn apply_block(a: &CsrMatrix, field: &NodalTensorField) -> Result<NodalTensorField, AssemblyError> {
    if field.len() != a.dim() {
        return Err(AssemblyError::DimensionMismatch { expected: a.dim(), got: field.len() });
    }
    let mut out = NodalTensorField::zeros(field.len());
    a.matvec_tensor_into(&field.0, &mut out.0);
    Ok(out)
}
