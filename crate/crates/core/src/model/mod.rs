//! Dynamical data `(Z, A, ν, α)` of a quasi-free hybrid semigroup.

pub mod levy;
pub mod modelfile;

use nalgebra::{Complex, DMatrix, DVector};

pub use levy::{Jump, LevyComponent, LevyDiagnostics, LevyMeasure};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, hermitian_min_eigenvalue, max_abs, vnorm};
use crate::phase_space::{Dims, SymplecticForm};
use crate::scalar::{Real, cis};

/// Entries at or below this magnitude count as zero in structural tests.
pub const STRUCTURAL_ZERO: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingTriplet<T: Real> {
    pub a: DMatrix<T>,
    pub nu: LevyMeasure<T>,
    pub alpha: DVector<T>,
}

impl<T: Real> GeneratingTriplet<T> {
    pub fn gaussian(a: DMatrix<T>, alpha: DVector<T>) -> Self {
        let d = alpha.len();
        GeneratingTriplet { a, nu: LevyMeasure::empty(d), alpha }
    }
}

/// Lévy–Khintchine symbol with the unit-ball cutoff.
pub fn levy_symbol<T: Real>(triplet: &GeneratingTriplet<T>, xi: &DVector<T>) -> Complex<T> {
    let quad = (xi.transpose() * &triplet.a * xi)[(0, 0)];
    let lin = triplet.alpha.dot(xi);
    Complex::new(-quad * T::lit(0.5), lin) + triplet.nu.jump_symbol(xi)
}

/// Block views of a `d × d` matrix in the (quantum, classical) split.
pub fn blocks<T: Real>(dims: Dims, m: &DMatrix<T>) -> [DMatrix<T>; 4] {
    let q = dims.q();
    let s = dims.s;
    [
        m.view((0, 0), (q, q)).into_owned(),
        m.view((0, q), (q, s)).into_owned(),
        m.view((q, 0), (s, q)).into_owned(),
        m.view((q, q), (s, s)).into_owned(),
    ]
}

fn assemble<T: Real>(dims: Dims, b11: &DMatrix<T>, b10: &DMatrix<T>, b01: &DMatrix<T>, b00: &DMatrix<T>) -> DMatrix<T> {
    let q = dims.q();
    let s = dims.s;
    let mut m = DMatrix::zeros(dims.d(), dims.d());
    m.view_mut((0, 0), (q, q)).copy_from(b11);
    m.view_mut((0, q), (q, s)).copy_from(b10);
    m.view_mut((q, 0), (s, q)).copy_from(b01);
    m.view_mut((q, q), (s, s)).copy_from(b00);
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport<T: Real> {
    pub pass: bool,
    pub min_eigenvalue: T,
    pub b: DMatrix<T>,
}

/// `B = ½(σZ − Zᵀσᵀ)`.
pub fn b_matrix<T: Real>(z: &DMatrix<T>, sigma: &SymplecticForm<T>) -> DMatrix<T> {
    let s = &sigma.sigma;
    (s * z - z.transpose() * s.transpose()) * T::lit(0.5)
}

/// Checks `A + iB ⪰ 0` through its minimum eigenvalue.
pub fn noise_positivity_check<T: Real>(
    a: &DMatrix<T>,
    z: &DMatrix<T>,
    sigma: &SymplecticForm<T>,
    tol: T,
) -> Result<PositivityReport<T>> {
    let d = sigma.dims.d();
    if a.shape() != (d, d) || z.shape() != (d, d) {
        return Err(Error::Shape(format!("A and Z must be {d}×{d}")));
    }
    if asymmetry(a) > T::sym_tol() {
        return Err(Error::Input(format!("A is not symmetric (relative asymmetry {:e})", asymmetry(a))));
    }
    let b = b_matrix(z, sigma);
    let min_eigenvalue = hermitian_min_eigenvalue(a, &b);
    Ok(PositivityReport { pass: min_eigenvalue >= -tol, min_eigenvalue, b })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split<T: Real> {
    /// `D¹¹ = ½(Z¹¹σ₁ + σ₁ᵀZ¹¹ᵀ)`, symmetric.
    pub d11: DMatrix<T>,
    /// Full `d × d` antisymmetric `B`.
    pub b: DMatrix<T>,
}

pub fn hamiltonian_dissipative_split<T: Real>(z: &DMatrix<T>, sigma: &SymplecticForm<T>) -> Split<T> {
    let [z11, ..] = blocks(sigma.dims, z);
    let s1 = sigma.quantum_block();
    let d11 = (&z11 * &s1 + s1.transpose() * z11.transpose()) * T::lit(0.5);
    Split { d11, b: b_matrix(z, sigma) }
}

/// Inverse of [`hamiltonian_dissipative_split`] on the quantum rows.
pub fn drift_from_split<T: Real>(
    dims: Dims,
    d11: &DMatrix<T>,
    b11: &DMatrix<T>,
    b10: &DMatrix<T>,
    z01: &DMatrix<T>,
    z00: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let q = dims.q();
    let s = dims.s;
    let ok = d11.shape() == (q, q) && b11.shape() == (q, q) && b10.shape() == (q, s) && z01.shape() == (s, q) && z00.shape() == (s, s);
    if !ok {
        return Err(Error::Shape(format!("split blocks do not match n = {}, s = {}", dims.n, dims.s)));
    }
    let s1 = SymplecticForm::<T>::new(Dims { n: dims.n, s: 0 }).sigma;
    let z11 = d11 * s1.transpose() - &s1 * b11;
    let z10 = s1.transpose() * b10 * T::lit(2.0);
    Ok(assemble(dims, &z11, &z10, z01, z00))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteractionFlags {
    pub k1: bool,
    pub k2: bool,
    pub k3: bool,
    pub k4: bool,
}

impl InteractionFlags {
    pub fn any(&self) -> bool {
        self.k1 || self.k2 || self.k3 || self.k4
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T: Real> {
    pub positivity: PositivityReport<T>,
    pub levy: LevyDiagnostics,
    pub interactions: InteractionFlags,
}

impl<T: Real> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.positivity.pass && self.levy.ok
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridModel<T: Real> {
    pub dims: Dims,
    pub sigma: SymplecticForm<T>,
    pub z: DMatrix<T>,
    pub triplet: GeneratingTriplet<T>,
    pub report: Option<ValidationReport<T>>,
}

impl<T: Real> HybridModel<T> {
    /// Shape-checked but not yet validated.
    pub fn unchecked(dims: Dims, z: DMatrix<T>, a: DMatrix<T>, nu: LevyMeasure<T>, alpha: DVector<T>) -> Result<Self> {
        let d = dims.d();
        if z.shape() != (d, d) {
            return Err(Error::Shape(format!("Z is {}×{}, expected {d}×{d}", z.nrows(), z.ncols())));
        }
        if a.shape() != (d, d) {
            return Err(Error::Shape(format!("A is {}×{}, expected {d}×{d}", a.nrows(), a.ncols())));
        }
        if alpha.len() != d {
            return Err(Error::Shape(format!("alpha has length {}, expected {d}", alpha.len())));
        }
        if nu.dim != d {
            return Err(Error::Shape(format!("Lévy measure lives in dimension {}, expected {d}", nu.dim)));
        }
        Ok(HybridModel { dims, sigma: SymplecticForm::new(dims), z, triplet: GeneratingTriplet { a, nu, alpha }, report: None })
    }

    /// Builds and validates with the default eigenvalue tolerance.
    pub fn new(dims: Dims, z: DMatrix<T>, a: DMatrix<T>, nu: LevyMeasure<T>, alpha: DVector<T>) -> Result<Self> {
        let mut m = Self::unchecked(dims, z, a, nu, alpha)?;
        m.validate(T::eig_tol())?;
        Ok(m)
    }

    /// Runs all checks, stores the report, and fails on the first violated
    /// condition.
    pub fn validate(&mut self, tol: T) -> Result<&ValidationReport<T>> {
        let report = self.diagnose(tol)?;
        let levy_ok = report.levy.ok;
        let pos = report.positivity.clone();
        let problems = report.levy.problems.clone();
        self.report = Some(report);
        if !levy_ok {
            self.report = None;
            return Err(Error::LevyMeasure(problems));
        }
        if !pos.pass {
            self.report = None;
            return Err(Error::Positivity { min_eigenvalue: pos.min_eigenvalue.as_f64() });
        }
        Ok(self.report.as_ref().expect("set above"))
    }

    /// Report without failing on a negative verdict.
    pub fn diagnose(&self, tol: T) -> Result<ValidationReport<T>> {
        let positivity = noise_positivity_check(&self.triplet.a, &self.z, &self.sigma, tol)?;
        let levy = self.triplet.nu.validate();
        Ok(ValidationReport { positivity, levy, interactions: classify_interactions(self) })
    }

    pub fn is_validated(&self) -> bool {
        self.report.is_some()
    }

    pub fn d(&self) -> usize {
        self.dims.d()
    }

    pub fn z_blocks(&self) -> [DMatrix<T>; 4] {
        blocks(self.dims, &self.z)
    }

    pub fn a_blocks(&self) -> [DMatrix<T>; 4] {
        blocks(self.dims, &self.triplet.a)
    }

    pub fn psi(&self, xi: &DVector<T>) -> Complex<T> {
        levy_symbol(&self.triplet, xi)
    }

    /// `β̃ = α + Σ_{|η|≥1} w η`, the drift of the mean.
    pub fn beta_tilde(&self) -> DVector<T> {
        &self.triplet.alpha + self.triplet.nu.tail_first_moment()
    }

    /// Drift once small jumps are uncompensated: `α − Σ_{|η|<1} w η`.
    pub fn effective_drift(&self) -> DVector<T> {
        &self.triplet.alpha - self.triplet.nu.small_jump_compensator()
    }

    /// Same drift and Gaussian part, no jumps.
    pub fn gaussian_part(&self) -> Self {
        let mut m = self.clone();
        m.triplet.nu = LevyMeasure::empty(self.d());
        m
    }

    pub fn split(&self) -> Split<T> {
        hamiltonian_dissipative_split(&self.z, &self.sigma)
    }

    pub fn cast<U: Real>(&self) -> HybridModel<U> {
        let cm = |m: &DMatrix<T>| m.map(|x| U::lit(x.as_f64()));
        let cv = |v: &DVector<T>| v.map(|x| U::lit(x.as_f64()));
        let comps = self
            .triplet
            .nu
            .components
            .iter()
            .map(|c| match c {
                LevyComponent::Atom { weight, eta } => LevyComponent::Atom { weight: U::lit(weight.as_f64()), eta: cv(eta) },
                LevyComponent::Line { direction, nodes } => LevyComponent::Line {
                    direction: cv(direction),
                    nodes: nodes.iter().map(|(v, w)| (U::lit(v.as_f64()), U::lit(w.as_f64()))).collect(),
                },
            })
            .collect();
        HybridModel {
            dims: self.dims,
            sigma: SymplecticForm::new(self.dims),
            z: cm(&self.z),
            triplet: GeneratingTriplet { a: cm(&self.triplet.a), nu: LevyMeasure { dim: self.d(), components: comps }, alpha: cv(&self.triplet.alpha) },
            report: None,
        }
    }
}

/// Interaction flags of the generator.
pub fn classify_interactions<T: Real>(model: &HybridModel<T>) -> InteractionFlags {
    let zero = T::lit(STRUCTURAL_ZERO);
    let nz = |m: &DMatrix<T>| m.len() > 0 && max_abs(m) > zero;
    let [_, z10, z01, _] = model.z_blocks();
    let [_, a10, _, _] = model.a_blocks();
    let q = model.dims.q();
    let s = model.dims.s;
    let k4 = model.triplet.nu.jumps().iter().any(|j| {
        let p1 = vnorm(&j.eta.rows(0, q).into_owned());
        let p0 = vnorm(&j.eta.rows(q, s).into_owned());
        p1 > zero && p0 > zero
    });
    InteractionFlags { k1: nz(&z01), k2: nz(&z10), k3: nz(&a10), k4 }
}

/// Pure quantum semigroup obtained when `Z⁰¹ = 0`.
pub fn reduce_quantum<T: Real>(model: &HybridModel<T>) -> Result<HybridModel<T>> {
    let [z11, _, z01, _] = model.z_blocks();
    if z01.len() > 0 && max_abs(&z01) > T::lit(STRUCTURAL_ZERO) {
        return Err(Error::NotAutonomous("Z⁰¹ ≠ 0, the quantum component is driven by the classical one".into()));
    }
    if model.dims.n == 0 {
        return Err(Error::Dimensions("no quantum component to reduce to".into()));
    }
    reduce(model, 0..model.dims.q(), z11, Dims { n: model.dims.n, s: 0 })
}

/// Pure classical semigroup obtained when `Z¹⁰ = 0`.
pub fn reduce_classical<T: Real>(model: &HybridModel<T>) -> Result<HybridModel<T>> {
    let [_, z10, _, z00] = model.z_blocks();
    if z10.len() > 0 && max_abs(&z10) > T::lit(STRUCTURAL_ZERO) {
        return Err(Error::NotAutonomous("Z¹⁰ ≠ 0, the classical component is driven by the quantum one".into()));
    }
    if model.dims.s == 0 {
        return Err(Error::Dimensions("no classical component to reduce to".into()));
    }
    let q = model.dims.q();
    reduce(model, q..model.d(), z00, Dims { n: 0, s: model.dims.s })
}

fn reduce<T: Real>(model: &HybridModel<T>, range: std::ops::Range<usize>, zr: DMatrix<T>, dims: Dims) -> Result<HybridModel<T>> {
    let m = range.len();
    let st = range.start;
    let a = model.triplet.a.view((st, st), (m, m)).into_owned();
    let nu = model.triplet.nu.push_forward(range.clone());
    let mut drift = model.triplet.alpha.rows(st, m).into_owned();
    for j in model.triplet.nu.jumps() {
        let img = j.eta.rows(st, m).into_owned();
        if vnorm(&img) < T::one() && !j.small() {
            drift += img * j.weight;
        }
    }
    let mut out = HybridModel::unchecked(dims, zr, a, nu, drift)?;
    out.validate(T::eig_tol())?;
    Ok(out)
}

/// Real part of `Σ w (e^{iηᵀξ} − 1)` is never positive; this helper exposes
/// `e^{iηᵀξ}` for callers assembling jump sums themselves.
#[inline]
pub fn jump_phase<T: Real>(eta: &DVector<T>, xi: &DVector<T>) -> Complex<T> {
    cis(eta.dot(xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::phase_space::make_dims;
    use proptest::prelude::*;

    fn m(r: usize, c: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, x)
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn symbol_pure_gaussian() {
        let t = GeneratingTriplet::gaussian(m(2, 2, &[2.0, 0.5, 0.5, 1.0]), v(&[0.0, 0.0]));
        let xi = v(&[1.0, -2.0]);
        let want = -0.5 * (2.0 - 2.0 + 4.0);
        assert!((levy_symbol(&t, &xi) - Complex::new(want, 0.0)).norm() < 1e-15);
        assert_eq!(levy_symbol(&t, &v(&[0.0, 0.0])), Complex::new(0.0, 0.0));
    }

    #[test]
    fn symbol_single_large_atom() {
        let eta = v(&[0.0, 2.0]);
        let t = GeneratingTriplet { a: DMatrix::zeros(2, 2), nu: LevyMeasure::empty(2).with_atom(1.0, eta.clone()), alpha: v(&[0.0, 0.0]) };
        let xi = v(&[0.3, 0.4]);
        let want = Complex::new(0.0, 0.8f64).exp() - 1.0;
        assert!((levy_symbol(&t, &xi) - want).norm() < 1e-15);
    }

    #[test]
    fn symbol_momentum_kicks_reduce_to_uncompensated_form() {
        // Kicks on the momentum axis; small-kick compensation absorbed by β₂.
        let (a1, a2, a3) = (0.5, 0.6, 0.1);
        let nodes = vec![(0.4, 0.3), (1.5, 0.2)];
        let beta2 = 0.4 * 0.3;
        let t = GeneratingTriplet {
            a: m(2, 2, &[a1, a3, a3, a2]),
            nu: LevyMeasure::empty(2).with_line(v(&[0.0, 1.0]), nodes.clone()),
            alpha: v(&[0.0, beta2]),
        };
        let zeta = v(&[0.7, -1.3]);
        let quad = a1 * 0.49 + 2.0 * a3 * 0.7 * -1.3 + a2 * 1.69;
        let mut want = Complex::new(-0.5 * quad, 0.0);
        for (vv, w) in nodes {
            want += (Complex::new(0.0, vv * zeta[1]).exp() - 1.0) * w;
        }
        assert!((levy_symbol(&t, &zeta) - want).norm() < 1e-14);
    }

    #[test]
    fn positivity_trivial() {
        let dims = make_dims(1, 1).unwrap();
        let s = SymplecticForm::<f64>::new(dims);
        let r = noise_positivity_check(&DMatrix::zeros(3, 3), &DMatrix::zeros(3, 3), &s, 1e-10).unwrap();
        assert!(r.pass);
        assert!(r.min_eigenvalue.abs() < 1e-15);
        let bad = m(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(noise_positivity_check(&bad, &DMatrix::zeros(3, 3), &s, 1e-10).is_err());
    }

    fn opto_z(om: f64, g: f64) -> DMatrix<f64> {
        m(2, 2, &[0.0, -om, om, -g])
    }

    #[test]
    fn optomechanical_positivity_family() {
        let dims = make_dims(1, 0).unwrap();
        let s = SymplecticForm::new(dims);
        let (a3, g) = (0.2, 0.3);
        let z = opto_z(1.0, g);
        for &(a1, a2) in &[(1.0, 1.0), (0.2, 0.3), (0.5, 0.1), (0.25, 0.25)] {
            let r = noise_positivity_check(&m(2, 2, &[a1, a3, a3, a2]), &z, &s, 1e-10).unwrap();
            let analytic = a1 * a2 >= a3 * a3 + g * g / 4.0 && a1 >= 0.0 && a2 >= 0.0;
            assert_eq!(r.pass, analytic, "a1={a1} a2={a2}");
        }
    }

    #[test]
    fn optomechanical_split() {
        let (om, g) = (1.3, 0.4);
        let dims = make_dims(1, 0).unwrap();
        let s = SymplecticForm::new(dims);
        let sp = hamiltonian_dissipative_split(&opto_z(om, g), &s);
        assert!((&sp.d11 - m(2, 2, &[om, g / 2.0, g / 2.0, om])).abs().max() < 1e-15);
        assert!((&sp.b - &s.sigma * (-g / 2.0)).abs().max() < 1e-15);
        let z = drift_from_split(dims, &sp.d11, &sp.b, &DMatrix::zeros(2, 0), &DMatrix::zeros(0, 2), &DMatrix::zeros(0, 0)).unwrap();
        assert!((z - opto_z(om, g)).abs().max() < 1e-15);
    }

    #[test]
    fn zero_split() {
        let dims = make_dims(2, 1).unwrap();
        let s = SymplecticForm::new(dims);
        let sp = hamiltonian_dissipative_split(&DMatrix::<f64>::zeros(5, 5), &s);
        assert_eq!(sp.d11, DMatrix::zeros(4, 4));
        assert_eq!(sp.b, DMatrix::zeros(5, 5));
        let z = drift_from_split::<f64>(dims, &DMatrix::zeros(4, 4), &DMatrix::zeros(4, 4), &DMatrix::zeros(4, 1), &DMatrix::zeros(1, 4), &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(z, DMatrix::zeros(5, 5));
    }

    fn decoupled() -> HybridModel<f64> {
        let dims = make_dims(1, 1).unwrap();
        let z = m(3, 3, &[0.0, -1.0, 0.0, 1.0, -0.5, 0.0, 0.0, 0.0, -0.2]);
        let a = m(3, 3, &[0.6, 0.0, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0, 0.3]);
        let nu = LevyMeasure::empty(3).with_atom(0.2, v(&[0.0, 2.0, 0.0])).with_atom(0.1, v(&[0.0, 0.0, -0.5]));
        HybridModel::new(dims, z, a, nu, v(&[0.1, 0.2, 0.3])).unwrap()
    }

    #[test]
    fn decoupled_flags_and_reductions() {
        let md = decoupled();
        let f = classify_interactions(&md);
        assert!(!f.any());
        let q = reduce_quantum(&md).unwrap();
        assert_eq!(q.z, m(2, 2, &[0.0, -1.0, 1.0, -0.5]));
        assert_eq!(q.triplet.a, m(2, 2, &[0.6, 0.0, 0.0, 0.6]));
        assert_eq!(q.triplet.alpha, v(&[0.1, 0.2]));
        assert_eq!(q.triplet.nu.jumps().len(), 1);
        let c = reduce_classical(&md).unwrap();
        assert_eq!(c.z, m(1, 1, &[-0.2]));
        assert_eq!(c.triplet.alpha, v(&[0.3]));
        assert_eq!(c.triplet.nu.jumps()[0].eta, v(&[-0.5]));
    }

    #[test]
    fn reduction_compensator_correction() {
        // |η| = √(0.5² + 1²) ≥ 1 but |P₁η| = 0.5 < 1.
        let dims = make_dims(1, 1).unwrap();
        let z = m(3, 3, &[0.0, -1.0, 0.0, 1.0, -0.5, 0.0, 0.0, 0.0, -0.2]);
        let a = m(3, 3, &[0.6, 0.0, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0, 0.3]);
        let nu = LevyMeasure::empty(3).with_atom(0.4, v(&[0.0, 0.5, 1.0]));
        let md = HybridModel::new(dims, z, a, nu, v(&[0.0, 0.0, 0.0])).unwrap();
        let q = reduce_quantum(&md).unwrap();
        assert!((q.triplet.alpha[1] - 0.4 * 0.5).abs() < 1e-15);
        assert_eq!(q.triplet.alpha[0], 0.0);
        // Classical image has |P₀η| = 1, no correction.
        let c = reduce_classical(&md).unwrap();
        assert_eq!(c.triplet.alpha[0], 0.0);
        // Both symbols agree on the embedded subspace.
        let zeta = v(&[0.3, -1.7]);
        let full = md.psi(&v(&[0.3, -1.7, 0.0]));
        assert!((q.psi(&zeta) - full).norm() < 1e-14);
        let k = v(&[2.2]);
        assert!((c.psi(&k) - md.psi(&v(&[0.0, 0.0, 2.2]))).norm() < 1e-14);
    }

    #[test]
    fn reduction_refused_when_coupled() {
        let dims = make_dims(1, 1).unwrap();
        let z = m(3, 3, &[0.0, -1.0, 0.0, 1.0, -0.5, 0.0, 0.7, 0.0, -0.2]);
        let a = DMatrix::identity(3, 3);
        let md = HybridModel::new(dims, z, a, LevyMeasure::empty(3), v(&[0.0, 0.0, 0.0])).unwrap();
        let e = reduce_quantum(&md).unwrap_err();
        assert!(e.to_string().contains("reduced dynamics is not autonomous"));
        assert!(reduce_classical(&md).is_ok());
    }

    #[test]
    fn cast_round_trip() {
        let md = decoupled();
        let f: HybridModel<f32> = md.cast();
        let back: HybridModel<f64> = f.cast();
        assert!((back.z - &md.z).abs().max() < 1e-7);
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |x| DMatrix::from_row_slice(n, n, &x))
    }

    proptest! {
        #[test]
        fn split_round_trip(n in 1usize..3, s in 0usize..3, seed in arb_matrix(7)) {
            let dims = make_dims(n, s).unwrap();
            let d = dims.d();
            let z = seed.view((0, 0), (d, d)).into_owned();
            let sig = SymplecticForm::new(dims);
            let sp = hamiltonian_dissipative_split(&z, &sig);
            let [b11, b10, _, _] = blocks(dims, &sp.b);
            let [_, _, z01, z00] = blocks(dims, &z);
            prop_assert!((&sp.d11 - sp.d11.transpose()).abs().max() < 1e-14);
            prop_assert!((&sp.b + sp.b.transpose()).abs().max() < 1e-14);
            let back = drift_from_split(dims, &sp.d11, &b11, &b10, &z01, &z00).unwrap();
            prop_assert!((back - &z).abs().max() < 1e-13);
        }

        #[test]
        fn hermiticity_of_symbol(seed in arb_matrix(4), xs in prop::collection::vec(-3.0f64..3.0, 4), w in 0.01f64..2.0) {
            let a = &seed * seed.transpose();
            let nu = LevyMeasure::empty(4).with_atom(w, v(&[0.3, 0.0, 0.1, 0.2])).with_atom(w, v(&[0.0, 2.0, 0.0, -1.0]));
            let t = GeneratingTriplet { a, nu, alpha: v(&[0.1, -0.2, 0.3, 0.4]) };
            let xi = DVector::from_vec(xs);
            let p = levy_symbol(&t, &xi);
            let q = levy_symbol(&t, &(-&xi));
            prop_assert!((p.conj() - q).norm() < 1e-12);
            prop_assert!(p.re <= 1e-12);
        }

        #[test]
        fn full_condition_implies_quantum_block(seed in arb_matrix(4), zs in arb_matrix(4)) {
            let dims = make_dims(1, 2).unwrap();
            let sig = SymplecticForm::new(dims);
            let a = &seed * seed.transpose();
            let r = noise_positivity_check(&a, &zs, &sig, 1e-10).unwrap();
            if r.pass {
                let [a11, ..] = blocks(dims, &a);
                let [b11, ..] = blocks(dims, &r.b);
                prop_assert!(hermitian_min_eigenvalue(&a11, &b11) >= -1e-9);
                prop_assert!(hermitian_min_eigenvalue(&a11, &(-b11)) >= -1e-9);
            }
        }
    }

    #[test]
    fn no_dissipation_forces_no_information() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dims = make_dims(1, 2).unwrap();
        let sig = SymplecticForm::new(dims);
        for _ in 0..300 {
            let mut z = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            z[(0, 2)] = 0.5 + rng.random_range(0.0..1.0);
            let c = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let off = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let mut a = DMatrix::zeros(4, 4);
            a.view_mut((2, 2), (2, 2)).copy_from(&(&c * c.transpose()));
            a.view_mut((0, 2), (2, 2)).copy_from(&off);
            a.view_mut((2, 0), (2, 2)).copy_from(&off.transpose());
            let r = noise_positivity_check(&a, &z, &sig, 1e-10).unwrap();
            assert!(!r.pass);
        }
        let ev = symmetric_eigenvalues(&m(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(ev, vec![1.0, 2.0]);
    }
}
