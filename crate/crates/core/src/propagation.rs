//! Propagators `S_t = e^{Zt}`, integrated symbols `Ψ_t`, evolved
//! characteristic functions, equilibria and means.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, integral_expm_transpose, norm1, spectral_abscissa, van_loan_gramian, vnorm};
use crate::model::HybridModel;
use crate::quadrature::{composite_rule, integrate, QuadResult, QuadSettings};
use crate::scalar::{c0, cabs, cexp, cis, Real};

/// `S_t = exp(Zt)`. Negative `t` is accepted and returns the inverse flow.
pub fn propagator<T: Real>(z: &DMatrix<T>, t: T) -> DMatrix<T> {
    expm(&(z * t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propagator<T: Real> {
    pub z: DMatrix<T>,
    pub t: T,
    pub st: DMatrix<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(z: &DMatrix<T>, t: T) -> Self {
        Propagator { z: z.clone(), t, st: propagator(z, t) }
    }

    pub fn apply(&self, xi: &DVector<T>) -> DVector<T> {
        &self.st * xi
    }
}

fn check_xi<T: Real>(model: &HybridModel<T>, xi: &DVector<T>) -> Result<()> {
    model.dims.check_len("xi", xi.len())
}

/// `Ψ_t(ξ) = ∫₀ᵗ ψ(S_τξ) dτ` by adaptive Gauss–Legendre, with the achieved
/// error estimate.
pub fn capital_psi_detailed<T: Real>(
    model: &HybridModel<T>,
    t: T,
    xi: &DVector<T>,
    settings: QuadSettings<T>,
) -> Result<QuadResult<T>> {
    check_xi(model, xi)?;
    if t < T::zero() {
        return Err(Error::Input("negative time".into()));
    }
    if t == T::zero() || xi.iter().all(|x| *x == T::zero()) {
        return Ok(QuadResult { value: c0(), error: T::zero(), subdivisions: 0 });
    }
    let z = &model.z;
    integrate(|tau| model.psi(&(propagator(z, tau) * xi)), T::zero(), t, settings)
}

pub fn capital_psi<T: Real>(model: &HybridModel<T>, t: T, xi: &DVector<T>) -> Result<Complex<T>> {
    Ok(capital_psi_detailed(model, t, xi, QuadSettings::default())?.value)
}

/// `f_t(ξ) = e^{Ψ_t(ξ)}`.
pub fn noise_function<T: Real>(model: &HybridModel<T>, t: T, xi: &DVector<T>) -> Result<Complex<T>> {
    Ok(cexp(capital_psi(model, t, xi)?))
}

/// `χ_t(ξ) = e^{Ψ_t(ξ)} χ₀(S_tξ)`.
pub fn evolve_cf<T: Real, F>(model: &HybridModel<T>, chi0: F, t: T, xi: &DVector<T>) -> Result<Complex<T>>
where
    F: Fn(&DVector<T>) -> Complex<T>,
{
    if xi.iter().all(|x| *x == T::zero()) {
        check_xi(model, xi)?;
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let psi = capital_psi(model, t, xi)?;
    Ok(cexp(psi) * chi0(&(propagator(&model.z, t) * xi)))
}

/// Gaussian data of `Ψ_t`: `A_t = ∫S_τᵀAS_τ dτ` and `a_t = ∫S_τᵀα_eff dτ`
/// with `α_eff = α − Σ_{|η|<1} wη`.
pub fn gaussian_integrals<T: Real>(model: &HybridModel<T>, t: T) -> (DMatrix<T>, DVector<T>) {
    let at = van_loan_gramian(&model.z, &model.triplet.a, t);
    let drift = integral_expm_transpose(&model.z, t) * model.effective_drift();
    (at, drift)
}

/// Cached evaluator of `ξ ↦ Ψ_t(ξ)` for many `ξ` at one `t`.
///
/// The Gaussian part is exact (Van Loan); jumps use a composite
/// Gauss–Legendre grid whose panel count is doubled until the values at
/// probes of norm `xi_max` stop moving by more than `tol`.
#[derive(Clone, Debug)]
pub struct CumulantField<T: Real> {
    pub t: T,
    pub st: DMatrix<T>,
    pub a_t: DMatrix<T>,
    pub drift_t: DVector<T>,
    pub panels: usize,
    pub xi_max: T,
    nodes: Vec<(T, DVector<T>)>,
}

const FIELD_ORDER: usize = 15;
const FIELD_MAX_PANELS: usize = 1 << 15;

impl<T: Real> CumulantField<T> {
    pub fn new(model: &HybridModel<T>, t: T, xi_max: T) -> Result<Self> {
        Self::with_tol(model, t, xi_max, T::quad_tol())
    }

    pub fn with_tol(model: &HybridModel<T>, t: T, xi_max: T, tol: T) -> Result<Self> {
        if t < T::zero() {
            return Err(Error::Input("negative time".into()));
        }
        let (a_t, drift_t) = gaussian_integrals(model, t);
        let st = propagator(&model.z, t);
        let jumps = model.triplet.nu.jumps();
        if jumps.is_empty() || t == T::zero() {
            return Ok(CumulantField { t, st, a_t, drift_t, panels: 0, xi_max, nodes: Vec::new() });
        }
        let d = model.d();
        let mut probes: Vec<DVector<T>> = (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = xi_max;
                e
            })
            .collect();
        for j in &jumps {
            let n = vnorm(&j.eta);
            probes.push(&j.eta * (xi_max / n));
        }
        let eta_max = model.triplet.nu.max_jump();
        let rate = (norm1(&model.z) * eta_max * xi_max + T::one()) * t;
        let mut panels = (rate / T::lit(8.0)).ceil().as_f64().max(1.0) as usize;
        panels = panels.min(FIELD_MAX_PANELS);
        let mut nodes = build_nodes(model, t, panels);
        let mut prev: Vec<Complex<T>> = probes.iter().map(|p| jump_sum(&nodes, p)).collect();
        loop {
            if panels * 2 > FIELD_MAX_PANELS {
                return Err(Error::Quadrature { subdivisions: panels, estimate: f64::NAN });
            }
            let finer = build_nodes(model, t, panels * 2);
            let next: Vec<Complex<T>> = probes.iter().map(|p| jump_sum(&finer, p)).collect();
            let diff = prev.iter().zip(&next).fold(T::zero(), |m, (a, b)| m.max(cabs(*a - *b)));
            nodes = finer;
            panels *= 2;
            prev = next;
            if diff <= tol {
                break;
            }
        }
        Ok(CumulantField { t, st, a_t, drift_t, panels, xi_max, nodes })
    }

    /// `Ψ_t(ξ)`.
    pub fn psi(&self, xi: &DVector<T>) -> Complex<T> {
        let quad = (xi.transpose() * &self.a_t * xi)[(0, 0)];
        Complex::new(-quad * T::lit(0.5), self.drift_t.dot(xi)) + jump_sum(&self.nodes, xi)
    }

    pub fn gaussian_psi(&self, xi: &DVector<T>) -> Complex<T> {
        let quad = (xi.transpose() * &self.a_t * xi)[(0, 0)];
        Complex::new(-quad * T::lit(0.5), self.drift_t.dot(xi))
    }

    pub fn f(&self, xi: &DVector<T>) -> Complex<T> {
        cexp(self.psi(xi))
    }

    /// `S_tξ`.
    pub fn transport(&self, xi: &DVector<T>) -> DVector<T> {
        &self.st * xi
    }
}

fn build_nodes<T: Real>(model: &HybridModel<T>, t: T, panels: usize) -> Vec<(T, DVector<T>)> {
    let (tau, w) = composite_rule(T::zero(), t, panels, FIELD_ORDER);
    let jumps = model.triplet.nu.jumps();
    let mut out = Vec::with_capacity(tau.len() * jumps.len());
    for (ti, wi) in tau.iter().zip(&w) {
        let stt = propagator(&model.z, *ti).transpose();
        for j in &jumps {
            out.push((*wi * j.weight, &stt * &j.eta));
        }
    }
    out
}

fn jump_sum<T: Real>(nodes: &[(T, DVector<T>)], xi: &DVector<T>) -> Complex<T> {
    let mut acc = c0::<T>();
    for (w, u) in nodes {
        acc += (cis(u.dot(xi)) - T::one()) * *w;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumValue<T: Real> {
    pub value: Complex<T>,
    /// Analytic bound on the neglected `∫_T^∞`.
    pub tail_bound: T,
    /// Integration horizon `T`.
    pub horizon: T,
    pub decay_rate: T,
}

/// How fast `S_tξ` decays, or why it does not.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contraction<T: Real> {
    pub rate: T,
    pub horizon: T,
    pub residual: T,
}

const UNDAMPED_TOL: f64 = 1e-12;
/// `|S_Tξ| / (1 + |ξ|)` accepted as contracted.
const CONTRACTION_TOL: f64 = 1e-14;
const MAX_HORIZON: f64 = 6400.0;
/// `e^{−c T}` at the horizon is `e^{−HORIZON_DECAYS}`.
const HORIZON_DECAYS: f64 = 40.0;

/// Decay rate and probe horizon for the direction `xi`.
pub fn contraction<T: Real>(z: &DMatrix<T>, xi: &DVector<T>) -> Result<Contraction<T>> {
    let absc = spectral_abscissa(z);
    let xn = vnorm(xi);
    if absc < -T::lit(UNDAMPED_TOL) {
        let c = -absc;
        let horizon = (T::lit(HORIZON_DECAYS) / c).max(T::lit(50.0));
        let residual = vnorm(&(propagator(z, horizon) * xi));
        return Ok(Contraction { rate: c, horizon, residual });
    }
    if xn == T::zero() {
        return Ok(Contraction { rate: T::one(), horizon: T::zero(), residual: T::zero() });
    }
    let delta = T::lit(CONTRACTION_TOL) * (T::one() + xn);
    let mut t = T::lit(50.0);
    let mut prev = vnorm(&(propagator(z, t) * xi));
    loop {
        let next_t = t * T::lit(2.0);
        let r = vnorm(&(propagator(z, next_t) * xi));
        if r < delta && r < prev {
            let rate = if r > T::zero() { (prev / r).ln() / (next_t - t) } else { T::one() };
            return Ok(Contraction { rate, horizon: next_t, residual: r });
        }
        if next_t >= T::lit(MAX_HORIZON) {
            let why = if absc.abs() <= T::lit(UNDAMPED_TOL) {
                "S_t does not contract along this direction (undamped or neutral modes)"
            } else {
                "S_t does not contract along this direction"
            };
            return Err(Error::NoEquilibrium(format!("{why}: |S_Tξ| = {:e} at T = {}", r.as_f64(), next_t.as_f64())));
        }
        t = next_t;
        prev = r;
    }
}

fn tail_bound<T: Real>(model: &HybridModel<T>, c: Contraction<T>) -> T {
    let r = c.residual;
    let k = c.rate;
    let two = T::lit(2.0);
    let anorm = norm1(&model.triplet.a);
    let mut b = vnorm(&model.triplet.alpha) * r / k + anorm * r * r / (two * two * k);
    for j in model.triplet.nu.jumps() {
        let e = vnorm(&j.eta);
        if j.small() {
            b += j.weight * e * e * r * r / (two * two * k);
        } else {
            b += j.weight * e * r / k;
        }
    }
    b
}

/// `Ψ_∞(ξ) = ∫₀^∞ ψ(S_τξ) dτ`.
pub fn equilibrium_psi<T: Real>(model: &HybridModel<T>, xi: &DVector<T>) -> Result<EquilibriumValue<T>> {
    check_xi(model, xi)?;
    let c = contraction(&model.z, xi)?;
    let field = CumulantField::new(model, c.horizon, vnorm(xi))?;
    Ok(EquilibriumValue { value: field.psi(xi), tail_bound: tail_bound(model, c), horizon: c.horizon, decay_rate: c.rate })
}

/// Equilibrium characteristic function; independent of the initial state.
pub fn equilibrium_cf<T: Real>(model: &HybridModel<T>, xi: &DVector<T>) -> Result<Complex<T>> {
    Ok(cexp(equilibrium_psi(model, xi)?.value))
}

/// Evaluator of `Ψ_∞` on a whole contracting model.
#[derive(Clone, Debug)]
pub struct EquilibriumField<T: Real> {
    pub field: CumulantField<T>,
    pub rate: T,
}

impl<T: Real> EquilibriumField<T> {
    pub fn new(model: &HybridModel<T>, xi_max: T) -> Result<Self> {
        let absc = spectral_abscissa(&model.z);
        if !(absc < -T::lit(UNDAMPED_TOL)) {
            return Err(Error::NoEquilibrium(format!("spectral abscissa {:e} is not negative", absc.as_f64())));
        }
        let rate = -absc;
        let horizon = (T::lit(HORIZON_DECAYS) / rate).max(T::lit(50.0));
        Ok(EquilibriumField { field: CumulantField::new(model, horizon, xi_max)?, rate })
    }

    pub fn psi(&self, xi: &DVector<T>) -> Complex<T> {
        self.field.psi(xi)
    }
}

/// Hessian of `ξ ↦ Re Ψ(ξ)` at 0 by the 4-point central difference, negated
/// so that a Gaussian `−½ξᵀCξ` returns `C`.
pub fn quadratic_form_at_zero<T: Real, F>(f: F, dim: usize, h: T) -> DMatrix<T>
where
    F: Fn(&DVector<T>) -> Complex<T>,
{
    let mut hess = DMatrix::zeros(dim, dim);
    let four = T::lit(4.0);
    for i in 0..dim {
        for j in i..dim {
            let e = |si: T, sj: T| {
                let mut x = DVector::zeros(dim);
                x[i] += si * h;
                x[j] += sj * h;
                f(&x).re
            };
            let val = (e(T::one(), T::one()) - e(T::one(), -T::one()) - e(-T::one(), T::one()) + e(-T::one(), -T::one()))
                / (four * h * h);
            hess[(i, j)] = -val;
            hess[(j, i)] = -val;
        }
    }
    hess
}

/// `⟨R⟩_t = S_tᵀm₀ + ∫₀ᵗ S_τᵀβ̃ dτ`.
pub fn mean_evolution<T: Real>(model: &HybridModel<T>, m0: &DVector<T>, t: T) -> Result<DVector<T>> {
    check_xi(model, m0)?;
    let st = propagator(&model.z, t);
    Ok(st.transpose() * m0 + integral_expm_transpose(&model.z, t) * model.beta_tilde())
}

/// Right-hand side `Zᵀ⟨R⟩ + β̃` of the mean equation.
pub fn mean_rhs<T: Real>(model: &HybridModel<T>, m: &DVector<T>) -> DVector<T> {
    model.z.transpose() * m + model.beta_tilde()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSymbol<T: Real> {
    pub psi: Complex<T>,
    /// Richardson-extrapolated `lim Ψ_h/h`.
    pub extrapolated: Complex<T>,
    pub residual: T,
}

/// `ψ(ξ)` together with a numerical check `Ψ_h(ξ)/h → ψ(ξ)`.
pub fn generator_symbol<T: Real>(model: &HybridModel<T>, xi: &DVector<T>) -> Result<GeneratorSymbol<T>> {
    check_xi(model, xi)?;
    let psi = model.psi(xi);
    let h = T::lit(1e-3);
    let d1 = capital_psi(model, h, xi)? / h;
    let h2 = h * T::lit(0.5);
    let d2 = capital_psi(model, h2, xi)? / h2;
    let extrapolated = d2 * T::lit(2.0) - d1;
    Ok(GeneratorSymbol { psi, extrapolated, residual: cabs(extrapolated - psi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevyMeasure;
    use crate::phase_space::make_dims;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn m(r: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, r, x)
    }

    fn toy() -> HybridModel<f64> {
        let dims = make_dims(1, 1).unwrap();
        let z = m(3, &[0.0, -1.0, 0.2, 1.0, -0.4, 0.0, 0.0, 0.3, -0.5]);
        let a = m(3, &[0.8, 0.1, 0.0, 0.1, 0.8, 0.05, 0.0, 0.05, 0.6]);
        let nu = LevyMeasure::empty(3)
            .with_atom(0.3, v(&[0.0, 0.5, 0.0]))
            .with_atom(0.2, v(&[0.0, 0.0, 1.5]))
            .with_line(v(&[0.0, 0.6, 0.8]), vec![(0.7, 0.1), (-2.0, 0.05)]);
        HybridModel::new(dims, z, a, nu, v(&[0.1, -0.2, 0.3])).unwrap()
    }

    #[test]
    fn zero_drift_is_linear_in_time() {
        let mut md = toy();
        md.z = DMatrix::zeros(3, 3);
        md.report = None;
        let xi = v(&[0.4, -1.1, 0.9]);
        let got = capital_psi(&md, 2.5, &xi).unwrap();
        assert!((got - md.psi(&xi) * 2.5).norm() < 1e-12);
        assert_eq!(propagator(&md.z, 3.0), DMatrix::identity(3, 3));
    }

    #[test]
    fn trivial_values() {
        let md = toy();
        assert_eq!(capital_psi(&md, 0.0, &v(&[1.0, 2.0, 3.0])).unwrap(), c0());
        assert_eq!(capital_psi(&md, 4.0, &v(&[0.0, 0.0, 0.0])).unwrap(), c0());
        assert_eq!(noise_function(&md, 0.0, &v(&[1.0, 2.0, 3.0])).unwrap(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn field_matches_adaptive() {
        let md = toy();
        let f = CumulantField::new(&md, 3.0, 4.0).unwrap();
        for xi in [v(&[1.0, -2.0, 0.5]), v(&[0.0, 0.0, 4.0]), v(&[-0.3, 2.2, -1.7])] {
            let a = capital_psi(&md, 3.0, &xi).unwrap();
            assert!((f.psi(&xi) - a).norm() < 1e-9, "{} vs {}", f.psi(&xi), a);
        }
    }

    #[test]
    fn semigroup_identity() {
        let md = toy();
        let xi = v(&[0.7, -1.2, 0.4]);
        let (t, s) = (1.3, 2.1);
        let lhs = capital_psi(&md, t + s, &xi).unwrap();
        let st = propagator(&md.z, t);
        let rhs = capital_psi(&md, t, &xi).unwrap() + capital_psi(&md, s, &(&st * &xi)).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn gaussian_noise_function_closed_form() {
        let md = toy().gaussian_part();
        let xi = v(&[0.3, 0.9, -0.6]);
        let t = 2.0;
        let (at, drift) = gaussian_integrals(&md, t);
        let want = Complex::new(-0.5 * (xi.transpose() * &at * &xi)[(0, 0)], drift.dot(&xi)).exp();
        assert!((noise_function(&md, t, &xi).unwrap() - want).norm() < 1e-9);
    }

    #[test]
    fn noise_function_bounded_and_hermitian() {
        let md = toy();
        let xi = v(&[1.5, -0.4, 2.0]);
        let f = noise_function(&md, 1.7, &xi).unwrap();
        let g = noise_function(&md, 1.7, &(-&xi)).unwrap();
        assert!(f.norm() <= 1.0);
        assert!((f.conj() - g).norm() < 1e-12);
    }

    #[test]
    fn evolve_cf_t0_and_origin() {
        let md = toy();
        let chi0 = |x: &DVector<f64>| Complex::new(-0.25 * x.norm_squared(), 0.1 * x[2]).exp();
        let xi = v(&[0.5, 0.5, -1.0]);
        assert!((evolve_cf(&md, chi0, 0.0, &xi).unwrap() - chi0(&xi)).norm() < 1e-15);
        assert_eq!(evolve_cf(&md, chi0, 3.0, &v(&[0.0, 0.0, 0.0])).unwrap(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn means_closed_form_vs_rk4() {
        let md = toy();
        let m0 = v(&[1.0, -0.5, 2.0]);
        let t = 4.0;
        let n = 4000;
        let h = t / n as f64;
        let mut y = m0.clone();
        for _ in 0..n {
            let k1 = mean_rhs(&md, &y);
            let k2 = mean_rhs(&md, &(&y + &k1 * (h / 2.0)));
            let k3 = mean_rhs(&md, &(&y + &k2 * (h / 2.0)));
            let k4 = mean_rhs(&md, &(&y + &k3 * h));
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        assert!((mean_evolution(&md, &m0, t).unwrap() - y).abs().max() < 1e-10);
    }

    #[test]
    fn mean_zero_drift() {
        let mut md = toy();
        md.z = DMatrix::zeros(3, 3);
        md.triplet.nu = LevyMeasure::empty(3);
        let m0 = v(&[1.0, 2.0, 3.0]);
        let got = mean_evolution(&md, &m0, 2.0).unwrap();
        assert!((got - (&m0 + &md.triplet.alpha * 2.0)).abs().max() < 1e-14);
    }

    #[test]
    fn generator_symbol_converges() {
        let md = toy();
        let xi = v(&[0.6, -0.3, 1.1]);
        let g = generator_symbol(&md, &xi).unwrap();
        assert!(g.residual < 1e-6, "{}", g.residual);
        let h = 1e-3;
        let e1 = (capital_psi(&md, h, &xi).unwrap() / h - g.psi).norm();
        let e2 = (capital_psi(&md, h / 10.0, &xi).unwrap() / (h / 10.0) - g.psi).norm();
        assert!(e2 < e1 / 5.0);
        assert_eq!(generator_symbol(&md, &v(&[0.0, 0.0, 0.0])).unwrap().psi, c0());
    }

    #[test]
    fn equilibrium_of_scalar_ou() {
        let dims = make_dims(0, 1).unwrap();
        let md = HybridModel::new(dims, m(1, &[-0.5]), m(1, &[0.8]), LevyMeasure::empty(1), v(&[0.0])).unwrap();
        let e = equilibrium_psi(&md, &v(&[1.0])).unwrap();
        assert!((e.value.re + 0.5 * 0.8 / (2.0 * 0.5)).abs() < 1e-9);
        assert!(e.tail_bound < 1e-8);
    }

    #[test]
    fn undamped_refused() {
        let dims = make_dims(1, 0).unwrap();
        let md = HybridModel::new(dims, m(2, &[0.0, -1.0, 1.0, 0.0]), DMatrix::zeros(2, 2), LevyMeasure::empty(2), v(&[0.0, 0.0])).unwrap();
        let e = equilibrium_psi(&md, &v(&[1.0, 0.0])).unwrap_err();
        assert!(e.to_string().contains("no equilibrium along this direction"));
        assert!(EquilibriumField::new(&md, 1.0).is_err());
    }

    #[test]
    fn hessian_of_quadratic() {
        let c = m(2, &[1.3, -0.2, -0.2, 0.7]);
        let h = quadratic_form_at_zero(|x: &DVector<f64>| Complex::new(-0.5 * (x.transpose() * &c * x)[(0, 0)], x[0]), 2, 1.0);
        assert!((h - c).abs().max() < 1e-13);
    }
}
