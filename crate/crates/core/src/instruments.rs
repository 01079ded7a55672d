//! Transition instruments of the observed classical component, through
//! their characteristic operators `Γ_t(k|x)[W₁(ζ)] = e^{Ψ_t(ξ)} W(S_tξ)(x)`.

use nalgebra::{Complex, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::HybridModel;
use crate::propagation::{capital_psi, propagator, quadratic_form_at_zero, CumulantField};
use crate::scalar::{c0, cabs, cexp, cis, Real};
use crate::states::GaussianHybridState;

/// Conditioning probabilities below this are refused.
pub const PROBABILITY_THRESHOLD: f64 = 1e-8;

/// `coefficient · e^{i xᵀx_phase} · W₁(out_zeta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylAction<T: Real> {
    pub log_coefficient: Complex<T>,
    pub coefficient: Complex<T>,
    pub out_zeta: DVector<T>,
    pub x_phase: DVector<T>,
}

pub fn characteristic_operator<T: Real>(
    model: &HybridModel<T>,
    t: T,
    k: &DVector<T>,
    zeta: &DVector<T>,
) -> Result<WeylAction<T>> {
    let xi = model.dims.join(zeta, k)?;
    let log_coefficient = capital_psi(model, t, &xi)?;
    let out = propagator(&model.z, t) * xi;
    Ok(WeylAction {
        log_coefficient,
        coefficient: cexp(log_coefficient),
        out_zeta: model.dims.quantum_part(&out),
        x_phase: model.dims.classical_part(&out),
    })
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Input("at least one time is required".into()));
    }
    if times[0] < T::zero() {
        return Err(Error::Input("times must be non-negative".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Backward recursion: returns `(Σ_l Ψ_{t_l − t_{l−1}}(ξ_l), ξ₁)`.
fn backward<T: Real>(model: &HybridModel<T>, times: &[T], ks: &[DVector<T>], zeta: &DVector<T>) -> Result<(Complex<T>, DVector<T>)> {
    check_times(times)?;
    if ks.len() != times.len() {
        return Err(Error::Shape(format!("{} k-vectors for {} times", ks.len(), times.len())));
    }
    let dims = model.dims;
    for k in ks {
        dims.check_len("k", dims.q() + k.len())?;
    }
    let m = times.len();
    let mut xi = dims.join(zeta, &ks[m - 1])?;
    let mut total = c0::<T>();
    for l in (0..m).rev() {
        if l + 1 < m {
            xi = propagator(&model.z, times[l + 1] - times[l]) * xi + dims.embed_classical(&ks[l]);
        }
        let prev = if l == 0 { T::zero() } else { times[l - 1] };
        total += capital_psi(model, times[l] - prev, &xi)?;
    }
    Ok((total, xi))
}

/// `log E[exp(i Σ k_lᵀX(t_l))]`-type multi-time function with a quantum
/// argument `ζ`, closed against a Gaussian hybrid initial state.
pub fn multi_time_log_cf<T: Real>(
    model: &HybridModel<T>,
    initial: &GaussianHybridState<T>,
    times: &[T],
    ks: &[DVector<T>],
    zeta: &DVector<T>,
) -> Result<Complex<T>> {
    model.dims.check_len("initial state", initial.dim())?;
    let (total, xi1) = backward(model, times, ks, zeta)?;
    let eta = propagator(&model.z, times[0]) * xi1;
    Ok(total + initial.log_cf(&eta))
}

pub fn multi_time_cf<T: Real>(
    model: &HybridModel<T>,
    initial: &GaussianHybridState<T>,
    times: &[T],
    ks: &[DVector<T>],
    zeta: &DVector<T>,
) -> Result<Complex<T>> {
    if zeta.iter().chain(ks.iter().flat_map(|k| k.iter())).all(|x| *x == T::zero()) {
        check_times(times)?;
        return Ok(Complex::new(T::one(), T::zero()));
    }
    Ok(cexp(multi_time_log_cf(model, initial, times, ks, zeta)?))
}

/// Largest mismatch between `Γ_{t+t'}` and `Γ_{t'}` followed by `Γ_t` with
/// zero intermediate argument, over the probes.
pub fn composition_check<T: Real>(
    model: &HybridModel<T>,
    t: T,
    t2: T,
    probes: &[DVector<T>],
    zeta: &DVector<T>,
) -> Result<T> {
    let mut worst = T::zero();
    let s = model.dims.s;
    for k in probes {
        let one = characteristic_operator(model, t + t2, k, zeta)?;
        let (total, xi1) = if t2 == T::zero() {
            let xi = model.dims.join(zeta, k)?;
            (capital_psi(model, t, &xi)?, xi)
        } else {
            backward(model, &[t, t + t2], &[DVector::zeros(s), k.clone()], zeta)?
        };
        let out = propagator(&model.z, t) * xi1;
        let coef = cexp(total);
        let r = cabs(coef - one.coefficient)
            + (model.dims.quantum_part(&out) - &one.out_zeta).amax()
            + (model.dims.classical_part(&out) - &one.x_phase).amax();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Axis-aligned box `Π [lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Box<T: Real> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
}

impl<T: Real> Box<T> {
    pub fn new(lower: DVector<T>, upper: DVector<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape("box bounds differ in length".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(a, b)| !(a < b)) {
            return Err(Error::Input("box needs lower < upper on every axis".into()));
        }
        Ok(Box { lower, upper })
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        x.iter().zip(self.lower.iter().zip(self.upper.iter())).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// `∫_E e^{−ikᵀz} dz`.
    pub fn fourier(&self, k: &DVector<T>) -> Complex<T> {
        let mut acc = Complex::new(T::one(), T::zero());
        for i in 0..k.len() {
            let (a, b, ki) = (self.lower[i], self.upper[i], k[i]);
            let f = if ki.abs() * (b - a) < T::lit(1e-8) {
                cis(-ki * (a + b) * T::lit(0.5)) * (b - a)
            } else {
                (cis(-ki * a) - cis(-ki * b)) / Complex::new(T::zero(), ki)
            };
            acc *= f;
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditioningSettings<T: Real> {
    /// Half-width of the retained law in standard deviations.
    pub sigmas: T,
    /// `−ln |χ|` reached at the edge of the `k` grid for a Gaussian law.
    pub decay: T,
    pub max_points: usize,
}

impl<T: Real> Default for ConditioningSettings<T> {
    fn default() -> Self {
        ConditioningSettings { sigmas: T::lit(12.0), decay: T::lit(50.0), max_points: 1 << 22 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalProbability<T: Real> {
    /// Clamped to `[0, 1]`.
    pub value: T,
    pub raw: T,
    /// `|integrand|` on the boundary of the `k` grid.
    pub edge_magnitude: T,
    pub points: usize,
}

/// Riemann grid in `k` together with the box clipped to the bulk of the law.
struct KGrid<T: Real> {
    step: Vec<T>,
    count: Vec<usize>,
    clipped: Option<Box<T>>,
}

impl<T: Real> KGrid<T> {
    fn len(&self) -> usize {
        self.count.iter().product()
    }

    fn point(&self, mut flat: usize) -> DVector<T> {
        let s = self.count.len();
        let mut k = DVector::zeros(s);
        for i in (0..s).rev() {
            let c = self.count[i];
            let j = flat % c;
            flat /= c;
            k[i] = (T::from_usize_lossy(j) - T::from_usize_lossy(c / 2)) * self.step[i];
        }
        k
    }

    fn on_edge(&self, mut flat: usize) -> bool {
        let mut edge = false;
        for i in (0..self.count.len()).rev() {
            let c = self.count[i];
            let j = flat % c;
            flat /= c;
            edge |= j == 0 || j == c - 1;
        }
        edge
    }

    fn weight(&self) -> T {
        self.step.iter().fold(T::one(), |w, h| w * *h / T::two_pi())
    }
}

struct Conditioner<'a, T: Real> {
    model: &'a HybridModel<T>,
    rho0: &'a GaussianHybridState<T>,
    t: T,
    x: &'a DVector<T>,
}

impl<'a, T: Real> Conditioner<'a, T> {
    fn new(model: &'a HybridModel<T>, rho0: &'a GaussianHybridState<T>, t: T, x: &'a DVector<T>) -> Result<Self> {
        if model.dims.s == 0 {
            return Err(Error::Dimensions("no classical component to observe".into()));
        }
        if rho0.dim() != model.dims.q() {
            return Err(Error::Shape(format!("quantum state has dimension {}, expected {}", rho0.dim(), model.dims.q())));
        }
        model.dims.check_len("x", model.dims.q() + x.len())?;
        if t < T::zero() {
            return Err(Error::Input("negative time".into()));
        }
        Ok(Conditioner { model, rho0, t, x })
    }

    /// `Ψ_t(ξ) + i xᵀP₀S_tξ + log χ_{ρ₀}(P₁S_tξ)` with `psi` supplying `Ψ_t`.
    fn log_integrand<F: Fn(&DVector<T>) -> Complex<T>>(&self, st: &nalgebra::DMatrix<T>, psi: F, xi: &DVector<T>) -> Complex<T> {
        let out = st * xi;
        let dims = self.model.dims;
        psi(xi) + Complex::new(T::zero(), self.x.dot(&dims.classical_part(&out))) + self.rho0.log_cf(&dims.quantum_part(&out))
    }

    fn grid(&self, e: &Box<T>, settings: &ConditioningSettings<T>) -> Result<KGrid<T>> {
        let dims = self.model.dims;
        let s = dims.s;
        if e.lower.len() != s {
            return Err(Error::Shape(format!("box has dimension {}, expected {s}", e.lower.len())));
        }
        let st = propagator(&self.model.z, self.t);
        let log_phi = |k: &DVector<T>| -> Complex<T> {
            let xi = dims.embed_classical(k);
            self.log_integrand(&st, |x| capital_psi(self.model, self.t, x).unwrap_or_else(|_| c0()), &xi)
        };
        let mut h = T::lit(1e-3);
        let mut cov = quadratic_form_at_zero(log_phi, s, h);
        let scale = (0..s).fold(T::zero(), |m, i| m.max(cov[(i, i)]));
        if scale > T::zero() {
            h = T::lit(0.1) / scale.sqrt();
            cov = quadratic_form_at_zero(log_phi, s, h);
        }
        let mut step = Vec::with_capacity(s);
        let mut count = Vec::with_capacity(s);
        let mut lower = e.lower.clone();
        let mut upper = e.upper.clone();
        let mut empty = false;
        for i in 0..s {
            let var = cov[(i, i)];
            if !(var > T::zero()) {
                return Err(Error::Grid(format!("the law has no spread along axis {}", i + 1)));
            }
            let sd = var.sqrt();
            let mut ei = DVector::zeros(s);
            ei[i] = h;
            let mean = (log_phi(&ei) - log_phi(&(-&ei))).im / (h * T::lit(2.0));
            let reach = settings.sigmas * sd;
            lower[i] = lower[i].max(mean - reach);
            upper[i] = upper[i].min(mean + reach);
            empty |= !(lower[i] < upper[i]);
            let period = reach * T::lit(2.5);
            let hk = T::two_pi() / period;
            let kmax = (settings.decay * T::lit(2.0)).sqrt() / sd;
            let half = (kmax / hk).ceil().as_f64() as usize;
            step.push(hk);
            count.push(2 * half + 1);
        }
        let total = count.iter().try_fold(1usize, |a, c| a.checked_mul(*c));
        match total {
            Some(n) if n <= settings.max_points => {}
            _ => return Err(Error::Grid(format!("conditioning grid {count:?} exceeds {} points", settings.max_points))),
        }
        let clipped = if empty { None } else { Some(Box { lower, upper }) };
        Ok(KGrid { step, count, clipped })
    }

    /// `(2π)^{−s} Σ_k h^s ∫_E e^{−ikᵀz}dz · integrand(ζ, k)` and the edge magnitude.
    fn numerator(&self, grid: &KGrid<T>, zeta: &DVector<T>) -> Result<(Complex<T>, T)> {
        let Some(e) = &grid.clipped else {
            return Ok((c0(), T::zero()));
        };
        let dims = self.model.dims;
        let radius = (0..grid.count.len())
            .fold(T::zero(), |r, i| r.hypot(grid.step[i] * T::from_usize_lossy(grid.count[i] / 2)))
            .hypot(zeta.iter().fold(T::zero(), |r, z| r.hypot(*z)));
        let field = CumulantField::new(self.model, self.t, radius)?;
        let st = &field.st;
        let parts: Vec<(Complex<T>, T)> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.point(i);
                let xi = dims.join(zeta, &k).expect("lengths checked");
                let g = cexp(self.log_integrand(st, |x| field.psi(x), &xi));
                let edge = if grid.on_edge(i) { cabs(g) } else { T::zero() };
                (e.fourier(&k) * g, edge)
            })
            .collect();
        let (sum, edge) = parts.iter().fold((c0::<T>(), T::zero()), |(s, m), (v, e)| (s + *v, m.max(*e)));
        Ok((sum * grid.weight(), edge))
    }
}

/// Probability that `X(t) ∈ E` given `X(0) = x` and the quantum state `ρ₀`.
pub fn conditional_probability<T: Real>(
    model: &HybridModel<T>,
    rho0: &GaussianHybridState<T>,
    t: T,
    e: &Box<T>,
    x: &DVector<T>,
    settings: &ConditioningSettings<T>,
) -> Result<ConditionalProbability<T>> {
    let c = Conditioner::new(model, rho0, t, x)?;
    if t == T::zero() {
        let raw = if e.contains(x) { T::one() } else { T::zero() };
        return Ok(ConditionalProbability { value: raw, raw, edge_magnitude: T::zero(), points: 0 });
    }
    let grid = c.grid(e, settings)?;
    let (num, edge_magnitude) = c.numerator(&grid, &DVector::zeros(model.dims.q()))?;
    let raw = num.re;
    Ok(ConditionalProbability { value: raw.max(T::zero()).min(T::one()), raw, edge_magnitude, points: grid.len() })
}

/// Characteristic function at `ζ` of the quantum state conditioned on
/// `X(t) ∈ E`.
pub fn conditional_state_cf<T: Real>(
    model: &HybridModel<T>,
    rho0: &GaussianHybridState<T>,
    t: T,
    e: &Box<T>,
    x: &DVector<T>,
    zeta: &DVector<T>,
    settings: &ConditioningSettings<T>,
) -> Result<Complex<T>> {
    Ok(conditional_state_cfs(model, rho0, t, e, x, std::slice::from_ref(zeta), settings)?[0])
}

/// As [`conditional_state_cf`] for several `ζ` sharing one grid.
pub fn conditional_state_cfs<T: Real>(
    model: &HybridModel<T>,
    rho0: &GaussianHybridState<T>,
    t: T,
    e: &Box<T>,
    x: &DVector<T>,
    zetas: &[DVector<T>],
    settings: &ConditioningSettings<T>,
) -> Result<Vec<Complex<T>>> {
    let c = Conditioner::new(model, rho0, t, x)?;
    for z in zetas {
        model.dims.check_len("zeta", z.len() + model.dims.s)?;
    }
    if t == T::zero() {
        if !e.contains(x) {
            return Err(Error::VanishingProbability(0.0));
        }
        return Ok(zetas.iter().map(|z| rho0.cf(z)).collect());
    }
    let grid = c.grid(e, settings)?;
    let (p, _) = c.numerator(&grid, &DVector::zeros(model.dims.q()))?;
    if !(p.re > T::lit(PROBABILITY_THRESHOLD)) {
        return Err(Error::VanishingProbability(p.re.as_f64()));
    }
    zetas.iter().map(|z| Ok(c.numerator(&grid, z)?.0 / p.re)).collect()
}
