use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::TimeDepOperator;
use crate::qspace::DensityMatrix;

use super::CollapseSet;

/// Largest Hilbert-space dimension the oracle accepts (superoperator is
/// `dim² × dim²`).
pub const ORACLE_MAX_DIM: usize = 30;

/// Column-stacked Liouvillian, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
pub fn liouvillian(h: &DMatrix<C64>, c: &CollapseSet) -> DMatrix<C64> {
    let n = h.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let i = C64::new(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
    for ch in c.active() {
        let a = &ch.op.mat;
        let ada = a.adjoint() * a;
        let rate = C64::new(ch.rate, 0.0);
        let jump = a.conjugate().kronecker(a);
        let anti = id.kronecker(&ada) + ada.transpose().kronecker(&id);
        l += (jump - anti * C64::new(0.5, 0.0)) * rate;
    }
    l
}

/// `ρ(t) = unvec(exp(𝓛 t) vec ρ0)` for a time-independent Hamiltonian.
pub fn propagate_expm_oracle(
    h_static: &TimeDepOperator,
    rho0: &DensityMatrix,
    c: &CollapseSet,
    duration: f64,
) -> Result<DensityMatrix> {
    if !h_static.is_static() {
        return Err(Error::Oracle("Hamiltonian has rotating terms".into()));
    }
    if h_static.space() != rho0.space || c.space != rho0.space {
        return Err(Error::SpaceMismatch);
    }
    let n = rho0.space.total_dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::Oracle(format!(
            "dimension {n} exceeds oracle limit {ORACLE_MAX_DIM}"
        )));
    }
    if duration == 0.0 {
        return Ok(rho0.clone());
    }
    let gen = liouvillian(&h_static.static_part.mat, c) * C64::new(duration, 0.0);
    let prop = gen.exp();
    let v = DVector::from_column_slice(rho0.mat.as_slice());
    let out = prop * v;
    Ok(DensityMatrix {
        space: rho0.space,
        mat: DMatrix::from_column_slice(n, n, out.as_slice()),
    })
}
