//! Gaussian hybrid states, grid-sampled characteristic functions and their
//! Fourier inversion to Wigner functions.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, hermitian_min_eigenvalue};
use crate::model::HybridModel;
use crate::phase_space::{symplectic_product, Dims, SymplecticForm};
use crate::propagation::{gaussian_integrals, propagator, CumulantField};
use crate::scalar::{cabs, cexp, cis, Real};

/// Largest number of grid samples any transform will allocate.
pub const MAX_GRID_SAMPLES: usize = 1 << 27;

/// `|χ|` on the grid boundary above which inversions carry a warning.
pub const EDGE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHybridState<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility<T: Real> {
    pub pass: bool,
    pub min_eigenvalue: T,
}

/// Minimum eigenvalue of `cov + (i/2)σ`.
pub fn quantum_admissibility<T: Real>(cov: &DMatrix<T>, sigma: &SymplecticForm<T>, tol: T) -> Admissibility<T> {
    let half = &sigma.sigma * T::lit(0.5);
    let min_eigenvalue = hermitian_min_eigenvalue(cov, &half);
    Admissibility { pass: min_eigenvalue >= -tol, min_eigenvalue }
}

impl<T: Real> GaussianHybridState<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let d = mean.len();
        if cov.shape() != (d, d) {
            return Err(Error::Shape(format!("covariance is {}×{}, expected {d}×{d}", cov.nrows(), cov.ncols())));
        }
        if asymmetry(&cov) > T::sym_tol() {
            return Err(Error::Input("covariance is not symmetric".into()));
        }
        Ok(GaussianHybridState { mean, cov })
    }

    /// Rejects states violating `cov + (i/2)σ ⪰ 0`.
    pub fn admissible(mean: DVector<T>, cov: DMatrix<T>, dims: Dims) -> Result<Self> {
        let st = Self::new(mean, cov)?;
        dims.check_len("state mean", st.mean.len())?;
        let r = quantum_admissibility(&st.cov, &SymplecticForm::new(dims), T::eig_tol());
        if !r.pass {
            return Err(Error::Input(format!(
                "state violates cov + (i/2)σ ⪰ 0 (minimum eigenvalue {:e})",
                r.min_eigenvalue.as_f64()
            )));
        }
        Ok(st)
    }

    /// Vacuum on the quantum block, `classical_var·I` on the classical one.
    pub fn vacuum(dims: Dims, classical_var: T) -> Self {
        let d = dims.d();
        let mut cov = DMatrix::identity(d, d) * T::lit(0.5);
        for i in dims.q()..d {
            cov[(i, i)] = classical_var;
        }
        GaussianHybridState { mean: DVector::zeros(d), cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cf(&self, xi: &DVector<T>) -> Complex<T> {
        gaussian_cf(self, xi)
    }

    pub fn log_cf(&self, xi: &DVector<T>) -> Complex<T> {
        let quad = (xi.transpose() * &self.cov * xi)[(0, 0)];
        Complex::new(-quad * T::lit(0.5), self.mean.dot(xi))
    }

    /// The quantum factor of the state, `ζ ↦ χ(ζ, 0)`.
    pub fn quantum_marginal(&self, dims: Dims) -> GaussianHybridState<T> {
        let q = dims.q();
        GaussianHybridState { mean: self.mean.rows(0, q).into_owned(), cov: self.cov.view((0, 0), (q, q)).into_owned() }
    }

    pub fn classical_marginal(&self, dims: Dims) -> GaussianHybridState<T> {
        let q = dims.q();
        let s = dims.s;
        GaussianHybridState { mean: self.mean.rows(q, s).into_owned(), cov: self.cov.view((q, q), (s, s)).into_owned() }
    }
}

/// `exp(i·meanᵀξ − ½ξᵀ cov ξ)`.
pub fn gaussian_cf<T: Real>(state: &GaussianHybridState<T>, xi: &DVector<T>) -> Complex<T> {
    cexp(state.log_cf(xi))
}

/// Closed-form evolution of a Gaussian state under a jump-free model.
pub fn evolve_gaussian<T: Real>(model: &HybridModel<T>, state: &GaussianHybridState<T>, t: T) -> Result<GaussianHybridState<T>> {
    if !model.triplet.nu.is_empty() {
        return Err(Error::Input("Gaussian evolution needs a model without jumps".into()));
    }
    model.dims.check_len("state mean", state.mean.len())?;
    let st = propagator(&model.z, t);
    let (at, drift) = gaussian_integrals(model, t);
    Ok(GaussianHybridState { mean: st.transpose() * &state.mean + drift, cov: st.transpose() * &state.cov * &st + at })
}

/// `χ(ζ, 0)`.
pub fn quantum_marginal_cf<T: Real, F>(chi: F, dims: Dims, zeta: &DVector<T>) -> Result<Complex<T>>
where
    F: Fn(&DVector<T>) -> Complex<T>,
{
    let k = DVector::zeros(dims.s);
    Ok(chi(&dims.join(zeta, &k)?))
}

/// Minimum eigenvalue of `[χ(ξ_k − ξ_l) e^{(i/2)ξ_kᵀσξ_l}]_{kl}`.
pub fn twisted_pd_min_eigenvalue<T: Real, F>(chi: F, points: &[DVector<T>], dims: Dims) -> T
where
    F: Fn(&DVector<T>) -> Complex<T>,
{
    let n = points.len();
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let v = chi(&(&points[k] - &points[l])) * cis(symplectic_product(dims, &points[k], &points[l]) * T::lit(0.5));
            re[(k, l)] = v.re;
            im[(k, l)] = v.im;
        }
    }
    let re = (&re + re.transpose()) * T::lit(0.5);
    let im = (&im - im.transpose()) * T::lit(0.5);
    hermitian_min_eigenvalue(&re, &im)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis<T: Real> {
    pub center: T,
    pub step: T,
    pub count: usize,
}

impl<T: Real> GridAxis<T> {
    /// Symmetric axis `(j − N/2)·step` through 0.
    pub fn symmetric(step: T, count: usize) -> Self {
        GridAxis { center: T::zero(), step, count }
    }

    /// Symmetric axis reaching `±half_width` with `count` points.
    pub fn spanning(half_width: T, count: usize) -> Self {
        GridAxis { center: T::zero(), step: half_width * T::lit(2.0) / T::from_usize_lossy(count), count }
    }

    #[inline]
    pub fn point(&self, j: usize) -> T {
        self.center + (T::from_usize_lossy(j) - T::from_usize_lossy(self.count / 2)) * self.step
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.count).map(|j| self.point(j)).collect()
    }

    /// Dual axis after a transform, centred at `center`.
    pub fn dual(&self, center: T) -> Self {
        GridAxis { center, step: T::two_pi() / (T::from_usize_lossy(self.count) * self.step), count: self.count }
    }

    pub fn extent(&self) -> T {
        self.step * T::from_usize_lossy(self.count)
    }
}

fn grid_len<T: Real>(axes: &[GridAxis<T>]) -> Result<usize> {
    let mut total: usize = 1;
    for (i, a) in axes.iter().enumerate() {
        if a.count < 2 || !a.count.is_power_of_two() {
            return Err(Error::Grid(format!("axis {i}: count {} is not a power of two ≥ 2", a.count)));
        }
        if !(a.step > T::zero()) {
            return Err(Error::Grid(format!("axis {i}: step must be positive")));
        }
        total = total.checked_mul(a.count).ok_or_else(|| Error::Grid("grid size overflows".into()))?;
    }
    if total > MAX_GRID_SAMPLES {
        return Err(Error::Grid(format!("{total} samples exceed the limit of {MAX_GRID_SAMPLES}")));
    }
    Ok(total)
}

fn unravel<T: Real>(axes: &[GridAxis<T>], mut flat: usize, out: &mut [usize]) {
    for a in (0..axes.len()).rev() {
        out[a] = flat % axes[a].count;
        flat /= axes[a].count;
    }
}

fn coords<T: Real>(axes: &[GridAxis<T>], flat: usize) -> DVector<T> {
    let mut idx = vec![0; axes.len()];
    unravel(axes, flat, &mut idx);
    DVector::from_iterator(axes.len(), idx.iter().zip(axes).map(|(j, a)| a.point(*j)))
}

/// Characteristic function sampled on a rectangular grid, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCF<T: Real> {
    pub axes: Vec<GridAxis<T>>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> GridCF<T> {
    pub fn sample<F>(axes: Vec<GridAxis<T>>, f: F) -> Result<Self>
    where
        F: Fn(&DVector<T>) -> Complex<T> + Sync,
    {
        let n = grid_len(&axes)?;
        let values = (0..n).into_par_iter().map(|i| f(&coords(&axes, i))).collect();
        Ok(GridCF { axes, values })
    }

    pub fn point(&self, flat: usize) -> DVector<T> {
        coords(&self.axes, flat)
    }

    /// Largest `|χ|` on the boundary of the grid.
    pub fn edge_magnitude(&self) -> T {
        edge_max(&self.axes, |i| cabs(self.values[i]))
    }

    /// Value at the origin when the grid contains it.
    pub fn at_origin(&self) -> Option<Complex<T>> {
        if self.axes.iter().any(|a| a.center != T::zero()) {
            return None;
        }
        let mut flat = 0;
        for a in &self.axes {
            flat = flat * a.count + a.count / 2;
        }
        Some(self.values[flat])
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        push_header(&mut out, header, &self.axes, "xi");
        let d = self.axes.len();
        out.push_str(&(1..=d).map(|i| format!("xi{i}")).collect::<Vec<_>>().join(","));
        out.push_str(",re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = self.point(i);
            for x in p.iter() {
                out.push_str(&format!("{:.16e},", x.as_f64()));
            }
            out.push_str(&format!("{:.16e},{:.16e}\n", v.re.as_f64(), v.im.as_f64()));
        }
        out
    }
}

fn edge_max<T: Real, F: Fn(usize) -> T>(axes: &[GridAxis<T>], f: F) -> T {
    let n: usize = axes.iter().map(|a| a.count).product();
    let mut idx = vec![0; axes.len()];
    let mut best = T::zero();
    for i in 0..n {
        unravel(axes, i, &mut idx);
        if idx.iter().zip(axes).any(|(j, a)| *j == 0 || *j == a.count - 1) {
            best = best.max(f(i));
        }
    }
    best
}

fn push_header<T: Real>(out: &mut String, header: &[String], axes: &[GridAxis<T>], name: &str) {
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for (i, a) in axes.iter().enumerate() {
        out.push_str(&format!(
            "# axis {name}{}: center={:.16e} step={:.16e} count={}\n",
            i + 1,
            a.center.as_f64(),
            a.step.as_f64(),
            a.count
        ));
    }
}

/// Real density on a rectangular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid<T: Real> {
    pub axes: Vec<GridAxis<T>>,
    pub values: Vec<T>,
    /// Product of the axis steps; the quadrature weight of each sample.
    pub cell_volume: T,
    /// `|χ|` on the boundary of the source grid.
    pub edge_magnitude: T,
    /// Largest `|Im W|` left by the inversion.
    pub imag_residual: T,
    pub warnings: Vec<String>,
}

impl<T: Real> DensityGrid<T> {
    pub fn integral(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a + *v) * self.cell_volume
    }

    pub fn min_value(&self) -> T {
        self.values.iter().skip(1).fold(self.values[0], |m, v| m.min(*v))
    }

    /// `∫ min(W, 0)`, zero for a non-negative density.
    pub fn negative_mass(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a + v.min(T::zero())) * self.cell_volume
    }

    pub fn point(&self, flat: usize) -> DVector<T> {
        coords(&self.axes, flat)
    }

    /// Largest `|W|` on the boundary of the grid.
    pub fn boundary_max(&self) -> T {
        edge_max(&self.axes, |i| self.values[i].abs())
    }

    pub fn argmax(&self) -> DVector<T> {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.point(best)
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        push_header(&mut out, header, &self.axes, "z");
        out.push_str(&format!("# integral={:.16e} min={:.16e} negative_mass={:.16e} edge_cf={:.16e}\n",
            self.integral().as_f64(), self.min_value().as_f64(), self.negative_mass().as_f64(), self.edge_magnitude.as_f64()));
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        let d = self.axes.len();
        out.push_str(&(1..=d).map(|i| format!("z{i}")).collect::<Vec<_>>().join(","));
        out.push_str(",density\n");
        for (i, v) in self.values.iter().enumerate() {
            let p = self.point(i);
            for x in p.iter() {
                out.push_str(&format!("{:.16e},", x.as_f64()));
            }
            out.push_str(&format!("{:.16e}\n", v.as_f64()));
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Inverse,
    Forward,
}

fn sign_pow(j: usize) -> i32 {
    if j % 2 == 0 { 1 } else { -1 }
}

/// Pre- and post-factors along one axis.
fn axis_factors<T: Real>(src: &GridAxis<T>, dst: &GridAxis<T>, dir: Direction) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let n = src.count;
    let half = sign_pow(n / 2);
    match dir {
        Direction::Inverse => {
            // W_m = (h/2π)(−1)^{m+N/2} Σ_j (−1)^j e^{−i z₀ ξ_j} χ_j e^{−2πi mj/N}
            let pre = (0..n).map(|j| cis(-dst.center * src.point(j)) * T::lit(sign_pow(j) as f64)).collect();
            let scale = src.step / T::two_pi();
            let post = (0..n).map(|m| Complex::new(scale * T::lit((sign_pow(m) * half) as f64), T::zero())).collect();
            (pre, post)
        }
        Direction::Forward => {
            // χ_j = h_z (−1)^{j+N/2} e^{i z₀ ξ_j} Σ_m (−1)^m W_m e^{2πi mj/N}
            let pre = (0..n).map(|m| Complex::new(T::lit(sign_pow(m) as f64), T::zero())).collect();
            let post = (0..n)
                .map(|j| cis(src.center * dst.point(j)) * (src.step * T::lit((sign_pow(j) * half) as f64)))
                .collect();
            (pre, post)
        }
    }
}

fn transform_axes<T: Real + FftNum>(
    data: &mut [Complex<T>],
    shape: &[usize],
    factors: &[(Vec<Complex<T>>, Vec<Complex<T>>)],
    dir: Direction,
) {
    let mut planner = FftPlanner::<T>::new();
    let total = data.len();
    for (a, (pre, post)) in factors.iter().enumerate() {
        let n = shape[a];
        let stride: usize = shape[a + 1..].iter().product();
        let fft = match dir {
            Direction::Inverse => planner.plan_fft_forward(n),
            Direction::Forward => planner.plan_fft_inverse(n),
        };
        let lines: Vec<usize> = (0..total / n)
            .map(|l| {
                let outer = l / stride;
                let inner = l % stride;
                outer * n * stride + inner
            })
            .collect();
        let src: &[Complex<T>] = data;
        let done: Vec<Vec<Complex<T>>> = lines
            .par_iter()
            .map(|&base| {
                let mut buf: Vec<Complex<T>> = (0..n).map(|j| src[base + j * stride] * pre[j]).collect();
                fft.process(&mut buf);
                buf.iter().zip(post).map(|(x, p)| *x * *p).collect()
            })
            .collect();
        for (base, line) in lines.iter().zip(done) {
            for (j, v) in line.into_iter().enumerate() {
                data[base + j * stride] = v;
            }
        }
    }
}

/// `W(z) = (2π)^{−d} ∫ e^{−izᵀξ} χ(ξ) dξ` on the dual grid centred at
/// `center`. Negative values are kept.
pub fn wigner_from_cf<T: Real + FftNum>(cf: &GridCF<T>, center: &[T]) -> Result<DensityGrid<T>> {
    if center.len() != cf.axes.len() {
        return Err(Error::Shape(format!("center has length {}, grid has {} axes", center.len(), cf.axes.len())));
    }
    grid_len(&cf.axes)?;
    let dst: Vec<GridAxis<T>> = cf.axes.iter().zip(center).map(|(a, c)| a.dual(*c)).collect();
    let factors: Vec<_> = cf.axes.iter().zip(&dst).map(|(s, d)| axis_factors(s, d, Direction::Inverse)).collect();
    let shape: Vec<usize> = cf.axes.iter().map(|a| a.count).collect();
    let mut data = cf.values.clone();
    transform_axes(&mut data, &shape, &factors, Direction::Inverse);
    let imag_residual = data.iter().fold(T::zero(), |m, v| m.max(v.im.abs()));
    let values = data.iter().map(|v| v.re).collect();
    let edge_magnitude = cf.edge_magnitude();
    let mut warnings = Vec::new();
    if edge_magnitude > T::lit(EDGE_TOLERANCE) {
        warnings.push(format!(
            "characteristic function reaches {:e} on the grid edge; the density may be aliased",
            edge_magnitude.as_f64()
        ));
    }
    let cell_volume = dst.iter().fold(T::one(), |v, a| v * a.step);
    Ok(DensityGrid { axes: dst, values, cell_volume, edge_magnitude, imag_residual, warnings })
}

/// Forward transform back onto the characteristic-function grid `axes`.
pub fn cf_from_density<T: Real + FftNum>(density: &DensityGrid<T>, axes: &[GridAxis<T>]) -> Result<GridCF<T>> {
    if axes.len() != density.axes.len() {
        return Err(Error::Shape("axis count mismatch".into()));
    }
    for (a, z) in axes.iter().zip(&density.axes) {
        let dual = a.dual(z.center);
        if a.count != z.count || (dual.step - z.step).abs() > z.step * T::lit(1e-12) {
            return Err(Error::Grid("density grid is not the dual of the requested axes".into()));
        }
    }
    let factors: Vec<_> = density.axes.iter().zip(axes).map(|(s, d)| axis_factors(s, d, Direction::Forward)).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.count).collect();
    let mut data: Vec<Complex<T>> = density.values.iter().map(|v| Complex::new(*v, T::zero())).collect();
    transform_axes(&mut data, &shape, &factors, Direction::Forward);
    Ok(GridCF { axes: axes.to_vec(), values: data })
}

/// Density of the classical component from `k ↦ χ(0, k)`.
pub fn classical_marginal_density<T: Real + FftNum, F>(
    chi: F,
    dims: Dims,
    axes: Vec<GridAxis<T>>,
    center: &[T],
) -> Result<DensityGrid<T>>
where
    F: Fn(&DVector<T>) -> Complex<T> + Sync,
{
    if axes.len() != dims.s {
        return Err(Error::Shape(format!("{} axes for s = {}", axes.len(), dims.s)));
    }
    let cf = GridCF::sample(axes, |k| chi(&dims.embed_classical(k)))?;
    wigner_from_cf(&cf, center)
}

/// Grid samples of `χ_t = e^{Ψ_t} χ₀ ∘ S_t`.
pub fn sample_evolved_cf<T: Real, F>(
    model: &HybridModel<T>,
    chi0: F,
    t: T,
    axes: Vec<GridAxis<T>>,
) -> Result<GridCF<T>>
where
    F: Fn(&DVector<T>) -> Complex<T> + Sync,
{
    if axes.len() != model.d() {
        return Err(Error::Shape(format!("{} axes for d = {}", axes.len(), model.d())));
    }
    let radius = axes.iter().fold(T::zero(), |r, a| r.hypot(a.step * T::from_usize_lossy(a.count / 2)));
    let field = CumulantField::new(model, t, radius)?;
    GridCF::sample(axes, |xi| field.f(xi) * chi0(&field.transport(xi)))
}

/// Default grid size per axis for a `d`-dimensional inversion.
pub fn default_grid_count(d: usize) -> usize {
    match d {
        0 | 1 => 1024,
        2 => 128,
        3 => 64,
        4 => 32,
        5 => 16,
        _ => 8,
    }
}
