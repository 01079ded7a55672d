//! Hybrid phase space `Ξ = ℝ^{2n} ⊕ ℝ^s`.
//!
//! Vectors are ordered as (Q-block, P-block, X-block): indices `0..n` hold
//! positions, `n..2n` momenta, `2n..d` the classical coordinates.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub s: usize,
}

impl Dims {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n + s == 0 {
            return Err(Error::Dimensions("empty system: n = s = 0".into()));
        }
        Ok(Dims { n, s })
    }

    /// Total dimension `2n + s`.
    #[inline]
    pub fn d(&self) -> usize {
        2 * self.n + self.s
    }

    /// Dimension of the quantum block.
    #[inline]
    pub fn q(&self) -> usize {
        2 * self.n
    }

    pub fn is_pure_quantum(&self) -> bool {
        self.s == 0
    }

    pub fn is_pure_classical(&self) -> bool {
        self.n == 0
    }

    pub fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.d() {
            return Err(Error::Shape(format!("{what}: length {len}, expected d = {}", self.d())));
        }
        Ok(())
    }

    /// Builds `ξ = (ζ, k)` from its quantum and classical parts.
    pub fn join<T: Real>(&self, zeta: &DVector<T>, k: &DVector<T>) -> Result<DVector<T>> {
        if zeta.len() != self.q() || k.len() != self.s {
            return Err(Error::Shape(format!(
                "join: got ({}, {}), expected ({}, {})",
                zeta.len(),
                k.len(),
                self.q(),
                self.s
            )));
        }
        let mut xi = DVector::zeros(self.d());
        xi.rows_mut(0, self.q()).copy_from(zeta);
        xi.rows_mut(self.q(), self.s).copy_from(k);
        Ok(xi)
    }

    pub fn quantum_part<T: Real>(&self, xi: &DVector<T>) -> DVector<T> {
        xi.rows(0, self.q()).into_owned()
    }

    pub fn classical_part<T: Real>(&self, xi: &DVector<T>) -> DVector<T> {
        xi.rows(self.q(), self.s).into_owned()
    }

    pub fn embed_quantum<T: Real>(&self, zeta: &DVector<T>) -> DVector<T> {
        let mut xi = DVector::zeros(self.d());
        xi.rows_mut(0, self.q()).copy_from(zeta);
        xi
    }

    pub fn embed_classical<T: Real>(&self, k: &DVector<T>) -> DVector<T> {
        let mut xi = DVector::zeros(self.d());
        xi.rows_mut(self.q(), self.s).copy_from(k);
        xi
    }
}

pub fn make_dims(n: usize, s: usize) -> Result<Dims> {
    Dims::new(n, s)
}

/// Canonical symplectic form on `Ξ`; zero on the classical block.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm<T: Real> {
    pub dims: Dims,
    pub sigma: DMatrix<T>,
}

impl<T: Real> SymplecticForm<T> {
    pub fn new(dims: Dims) -> Self {
        let d = dims.d();
        let n = dims.n;
        let mut sigma = DMatrix::zeros(d, d);
        for i in 0..n {
            sigma[(i, i + n)] = T::one();
            sigma[(i + n, i)] = -T::one();
        }
        SymplecticForm { dims, sigma }
    }

    /// The `2n × 2n` quantum block.
    pub fn quantum_block(&self) -> DMatrix<T> {
        let q = self.dims.q();
        self.sigma.view((0, 0), (q, q)).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.sigma
    }
}

pub fn symplectic_form<T: Real>(dims: Dims) -> SymplecticForm<T> {
    SymplecticForm::new(dims)
}

/// `P₁ξ`: keeps the first `2n` entries.
pub fn project_quantum<T: Real>(dims: Dims, xi: &DVector<T>) -> Result<DVector<T>> {
    dims.check_len("project_quantum", xi.len())?;
    let mut out = xi.clone();
    out.rows_mut(dims.q(), dims.s).fill(T::zero());
    Ok(out)
}

/// `P₀ξ`: keeps the last `s` entries.
pub fn project_classical<T: Real>(dims: Dims, xi: &DVector<T>) -> Result<DVector<T>> {
    dims.check_len("project_classical", xi.len())?;
    let mut out = xi.clone();
    out.rows_mut(0, dims.q()).fill(T::zero());
    Ok(out)
}

/// Symplectic product `ξᵀση` without forming the matrix.
pub fn symplectic_product<T: Real>(dims: Dims, xi: &DVector<T>, eta: &DVector<T>) -> T {
    let n = dims.n;
    let mut acc = T::zero();
    for i in 0..n {
        acc += xi[i] * eta[i + n] - xi[i + n] * eta[i];
    }
    acc
}

/// `exp((i/2) ξᵀση)`, the phase in `W(ξ)W(η) = e^{-(i/2)ξᵀση} W(ξ+η)`.
pub fn weyl_phase<T: Real>(
    xi: &DVector<T>,
    eta: &DVector<T>,
    sigma: &SymplecticForm<T>,
) -> Result<Complex<T>> {
    sigma.dims.check_len("weyl_phase xi", xi.len())?;
    sigma.dims.check_len("weyl_phase eta", eta.len())?;
    Ok(cis(symplectic_product(sigma.dims, xi, eta) * T::lit(0.5)))
}
