//! Worked models with closed-form oracles: a quasi-free quantum linear
//! Boltzmann equation, an optomechanical oscillator, a classical damped
//! oscillator and a hybrid oscillator with an observed output.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::modelfile::ModelSpec;
use crate::model::{HybridModel, LevyMeasure};
use crate::phase_space::Dims;
use crate::scalar::Real;

fn mat<T: Real>(r: usize, c: usize, x: &[f64]) -> DMatrix<T> {
    DMatrix::from_row_slice(r, c, &x.iter().map(|v| T::lit(*v)).collect::<Vec<_>>())
}

fn vecn<T: Real>(x: &[f64]) -> DVector<T> {
    DVector::from_iterator(x.len(), x.iter().map(|v| T::lit(*v)))
}

fn unit<T: Real>(d: usize, i: usize) -> DVector<T> {
    let mut e = DVector::zeros(d);
    e[i] = T::one();
    e
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be positive, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be non-negative, got {x}")))
    }
}

fn check_nodes(nodes: &[(f64, f64)]) -> Result<()> {
    for (v, w) in nodes {
        if *v == 0.0 || !v.is_finite() {
            return Err(Error::Input("jump nodes must be non-zero".into()));
        }
        positive("node weight", *w)?;
    }
    Ok(())
}

/// `λ± = −γ/2 ± iω`, `ω = √(Ω² − γ²/4)`.
pub fn damped_eigenvalues(omega: f64, gamma: f64) -> (Complex<f64>, Complex<f64>) {
    let w = (omega * omega - gamma * gamma / 4.0).sqrt();
    (Complex::new(-gamma / 2.0, w), Complex::new(-gamma / 2.0, -w))
}

/// Closed form of `S_tᵀ` for `Zᵀ = [[0, Ω], [−Ω, −γ]]` (underdamped).
pub fn damped_oscillator_st_transpose(omega: f64, gamma: f64, t: f64) -> DMatrix<f64> {
    let (lp, lm) = damped_eigenvalues(omega, gamma);
    let two_iw = lp - lm;
    let ep = (lp * t).exp() / two_iw;
    let em = (lm * t).exp() / two_iw;
    let o = Complex::new(omega, 0.0);
    let m = [
        ep * (-lm) + em * lp,
        ep * o - em * o,
        -ep * o + em * o,
        ep * lp - em * lm,
    ];
    DMatrix::from_row_slice(2, 2, &m.iter().map(|c| c.re).collect::<Vec<_>>())
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumBoltzmannParams {
    pub m: f64,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `(radius, weight)`; each shell puts `weight` on `±radius·e_j` for the
    /// three momentum axes.
    pub shells: Vec<(f64, f64)>,
}

impl Default for QuantumBoltzmannParams {
    fn default() -> Self {
        QuantumBoltzmannParams { m: 1.0, gamma: 0.5, a1: 1.0, a2: 0.5, a3: 0.1, shells: vec![(0.4, 0.2), (1.5, 0.05)] }
    }
}

impl QuantumBoltzmannParams {
    pub fn check(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("gamma", self.gamma)?;
        non_negative("a1", self.a1)?;
        non_negative("a2", self.a2)?;
        let bound = self.a3 * self.a3 + self.gamma * self.gamma / 4.0;
        if self.a1 * self.a2 < bound {
            return Err(Error::Input(format!("need a1·a2 ≥ a3² + γ²/4 = {bound:e}, got {:e}", self.a1 * self.a2)));
        }
        for (r, w) in &self.shells {
            positive("shell radius", *r)?;
            positive("shell weight", *w)?;
        }
        Ok(())
    }

    pub fn build<T: Real>(&self) -> Result<HybridModel<T>> {
        self.check()?;
        let dims = Dims::new(3, 0)?;
        let mut z = DMatrix::<T>::zeros(6, 6);
        let mut a = DMatrix::<T>::zeros(6, 6);
        for i in 0..3 {
            z[(i + 3, i)] = T::lit(1.0 / self.m);
            z[(i + 3, i + 3)] = T::lit(-self.gamma);
            a[(i, i)] = T::lit(self.a1);
            a[(i + 3, i + 3)] = T::lit(self.a2);
            a[(i, i + 3)] = T::lit(self.a3);
            a[(i + 3, i)] = T::lit(self.a3);
        }
        let mut nu = LevyMeasure::empty(6);
        for (r, w) in &self.shells {
            for j in 3..6 {
                nu = nu.with_line(unit(6, j), vec![(T::lit(*r), T::lit(*w)), (T::lit(-*r), T::lit(*w))]);
            }
        }
        HybridModel::new(dims, z, a, nu, DVector::zeros(6))
    }

    /// `S_t` in position/momentum blocks.
    pub fn propagator_oracle(&self, t: f64) -> DMatrix<f64> {
        let e = (-self.gamma * t).exp();
        let mut s = DMatrix::zeros(6, 6);
        for i in 0..3 {
            s[(i, i)] = 1.0;
            s[(i + 3, i)] = (1.0 - e) / (self.m * self.gamma);
            s[(i + 3, i + 3)] = e;
        }
        s
    }

    /// Coefficient `a₂/(4γ)` of `−|k|²` in the long-time momentum CF.
    pub fn momentum_gaussian_coefficient(&self) -> f64 {
        self.a2 / (4.0 * self.gamma)
    }

    /// Long-time jump exponent `Σ ∫₀^∞ (e^{iηᵀ(0,k)e^{−γτ}} − 1) dτ` along the
    /// momentum vector `k`.
    pub fn momentum_jump_exponent(&self, k: &[f64; 3], panels: usize) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (r, w) in &self.shells {
            for (j, kj) in k.iter().enumerate() {
                let _ = j;
                for sign in [1.0, -1.0] {
                    let u = sign * r * kj;
                    acc += Complex::new(*w, 0.0) * ein(u, panels) / self.gamma;
                }
            }
        }
        acc
    }

    /// Spread of the jump symbol over directions of fixed `|k|`; zero for a
    /// rotation-invariant measure.
    pub fn shell_anisotropy(&self, radius: f64) -> f64 {
        let n = 64;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rr = (1.0 - y * y).sqrt();
            let th = golden * i as f64;
            let k = [radius * rr * th.cos(), radius * y, radius * rr * th.sin()];
            let mut val = 0.0;
            for (r, w) in &self.shells {
                for kj in k {
                    val += 2.0 * w * ((r * kj).cos() - 1.0);
                }
            }
            lo = lo.min(val);
            hi = hi.max(val);
        }
        hi - lo
    }
}

/// `∫₀ᵘ (e^{iv} − 1)/v dv` by composite Simpson.
fn ein(u: f64, panels: usize) -> Complex<f64> {
    if u == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    let n = panels.max(2) & !1;
    let h = u / n as f64;
    let f = |v: f64| {
        if v == 0.0 {
            Complex::new(0.0, 1.0)
        } else {
            (Complex::new(0.0, v).exp() - 1.0) / v
        }
    };
    let mut acc = f(0.0) + f(u);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct OptomechanicalParams {
    pub omega: f64,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Momentum kicks `(v, weight)`.
    pub nodes: Vec<(f64, f64)>,
}

impl Default for OptomechanicalParams {
    fn default() -> Self {
        let a3 = 0.05;
        let g = 0.3;
        let a = (1.2 * (a3 * a3 + g * g / 4.0) as f64).sqrt();
        OptomechanicalParams { omega: 1.0, gamma: g, a1: a, a2: a, a3, nodes: vec![(0.4, 0.5), (-1.2, 0.1)] }
    }
}

impl OptomechanicalParams {
    pub fn check(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("gamma", self.gamma)?;
        if self.omega * self.omega <= self.gamma * self.gamma / 4.0 {
            return Err(Error::Input("overdamped parameters: need Ω² > γ²/4".into()));
        }
        positive("a1", self.a1)?;
        positive("a2", self.a2)?;
        let bound = self.a3 * self.a3 + self.gamma * self.gamma / 4.0;
        if self.a1 * self.a2 < bound {
            return Err(Error::Input(format!("need a1·a2 ≥ a3² + γ²/4 = {bound:e}, got {:e}", self.a1 * self.a2)));
        }
        check_nodes(&self.nodes)
    }

    pub fn build<T: Real>(&self) -> Result<HybridModel<T>> {
        self.check()?;
        let dims = Dims::new(1, 0)?;
        let z = mat(2, 2, &[0.0, -self.omega, self.omega, -self.gamma]);
        let a = mat(2, 2, &[self.a1, self.a3, self.a3, self.a2]);
        let nodes: Vec<(T, T)> = self.nodes.iter().map(|(v, w)| (T::lit(*v), T::lit(*w))).collect();
        let nu = LevyMeasure::empty(2).with_line(unit(2, 1), nodes);
        let small: f64 = self.nodes.iter().filter(|(v, _)| v.abs() < 1.0).map(|(v, w)| v * w).sum();
        HybridModel::new(dims, z, a, nu, vecn(&[0.0, small]))
    }

    pub fn eigenvalues(&self) -> (Complex<f64>, Complex<f64>) {
        damped_eigenvalues(self.omega, self.gamma)
    }

    pub fn st_transpose_oracle(&self, t: f64) -> DMatrix<f64> {
        damped_oscillator_st_transpose(self.omega, self.gamma, t)
    }

    /// `(0, Σ w·v)`.
    pub fn mean_force(&self) -> [f64; 2] {
        [0.0, self.nodes.iter().map(|(v, w)| v * w).sum()]
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalOscillatorParams {
    pub omega: f64,
    pub gamma: f64,
    pub a22: f64,
    /// Jumps of the momentum `(v, weight)`.
    pub nodes: Vec<(f64, f64)>,
    /// Constant force on the momentum.
    pub eta2: f64,
}

impl Default for ClassicalOscillatorParams {
    fn default() -> Self {
        ClassicalOscillatorParams { omega: 1.0, gamma: 0.4, a22: 0.8, nodes: vec![(1.2, 0.5)], eta2: 0.0 }
    }
}

impl ClassicalOscillatorParams {
    pub fn check(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("gamma", self.gamma)?;
        if self.omega * self.omega <= self.gamma * self.gamma / 4.0 {
            return Err(Error::Input("overdamped parameters: need Ω² > γ²/4".into()));
        }
        non_negative("A22", self.a22)?;
        check_nodes(&self.nodes)
    }

    pub fn build<T: Real>(&self) -> Result<HybridModel<T>> {
        self.check()?;
        let dims = Dims::new(0, 2)?;
        let z = mat(2, 2, &[0.0, -self.omega, self.omega, -self.gamma]);
        let a = mat(2, 2, &[0.0, 0.0, 0.0, self.a22]);
        let nodes: Vec<(T, T)> = self.nodes.iter().map(|(v, w)| (T::lit(*v), T::lit(*w))).collect();
        let nu = if nodes.is_empty() { LevyMeasure::empty(2) } else { LevyMeasure::empty(2).with_line(unit(2, 1), nodes) };
        let small: f64 = self.nodes.iter().filter(|(v, _)| v.abs() < 1.0).map(|(v, w)| v * w).sum();
        HybridModel::new(dims, z, a, nu, vecn(&[0.0, self.eta2 + small]))
    }

    /// `(A₂₂/(2γ))·I`.
    pub fn equilibrium_covariance(&self) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * (self.a22 / (2.0 * self.gamma))
    }

    pub fn st_transpose_oracle(&self, t: f64) -> DMatrix<f64> {
        damped_oscillator_st_transpose(self.omega, self.gamma, t)
    }

    /// `(0, η̃₂ + Σ w·v)`.
    pub fn mean_force(&self) -> [f64; 2] {
        [0.0, self.eta2 + self.nodes.iter().map(|(v, w)| v * w).sum::<f64>()]
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct HybridOptoParams {
    pub omega: f64,
    pub gamma: f64,
    pub c: f64,
    pub b: f64,
    pub g: f64,
    pub a11: f64,
    pub a12: f64,
    pub a22_1: f64,
    pub a22_2: f64,
    pub a24: f64,
    pub a33: f64,
    pub a44: f64,
    pub alpha0: f64,
    /// Jumps of `x₁` as `(v, weight)`.
    pub nodes: Vec<(f64, f64)>,
}

impl Default for HybridOptoParams {
    fn default() -> Self {
        HybridOptoParams {
            omega: 1.0,
            gamma: 0.3,
            c: 0.7,
            b: 0.5,
            g: 0.2,
            a11: 0.5,
            a12: 0.05,
            a22_1: 0.06,
            a22_2: 0.03,
            a24: 0.05,
            a33: 0.4,
            a44: 0.5,
            alpha0: 0.1,
            nodes: vec![(0.5, 0.3), (1.5, 0.2), (-2.0, 0.1)],
        }
    }
}

impl HybridOptoParams {
    pub fn a22(&self) -> f64 {
        self.a22_1 + self.a22_2
    }

    pub fn check(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("gamma", self.gamma)?;
        positive("c", self.c)?;
        if self.omega * self.omega <= self.gamma * self.gamma / 4.0 {
            return Err(Error::Input("overdamped parameters: need Ω² > γ²/4".into()));
        }
        for (n, x) in [("A11", self.a11), ("A22¹", self.a22_1), ("A22²", self.a22_2), ("A33", self.a33), ("A44", self.a44)] {
            non_negative(n, x)?;
        }
        let q = self.a12 * self.a12 + self.gamma * self.gamma / 4.0;
        if self.a11 * self.a22_1 < q {
            return Err(Error::Input(format!("need A11·A22¹ ≥ A12² + γ²/4 = {q:e}")));
        }
        let o = self.a24 * self.a24 + self.g * self.g / 4.0;
        if self.a22_2 * self.a44 < o {
            return Err(Error::Input(format!("need A22²·A44 ≥ A24² + g²/4 = {o:e}")));
        }
        check_nodes(&self.nodes)
    }

    pub fn z(&self) -> DMatrix<f64> {
        let (o, gm, c, b, g) = (self.omega, self.gamma, self.c, self.b, self.g);
        DMatrix::from_row_slice(4, 4, &[0.0, -o, 0.0, g, o, -gm, 0.0, 0.0, 0.0, b, -c, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn a(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 4, &[
            self.a11, self.a12, 0.0, 0.0,
            self.a12, self.a22(), 0.0, self.a24,
            0.0, 0.0, self.a33, 0.0,
            0.0, self.a24, 0.0, self.a44,
        ])
    }

    pub fn build<T: Real>(&self) -> Result<HybridModel<T>> {
        self.check()?;
        let dims = Dims::new(1, 2)?;
        let z = self.z().map(T::lit);
        let a = self.a().map(T::lit);
        let nodes: Vec<(T, T)> = self.nodes.iter().map(|(v, w)| (T::lit(*v), T::lit(*w))).collect();
        let nu = if nodes.is_empty() { LevyMeasure::empty(4) } else { LevyMeasure::empty(4).with_line(unit(4, 2), nodes) };
        HybridModel::new(dims, z, a, nu, vecn(&[0.0, 0.0, self.alpha0, 0.0]))
    }

    pub fn eigenvalues(&self) -> (Complex<f64>, Complex<f64>) {
        damped_eigenvalues(self.omega, self.gamma)
    }

    /// `ξ(t) = S_tξ(0)` in closed form.
    pub fn flow_oracle(&self, xi0: &[f64; 4], t: f64) -> [f64; 4] {
        let (lp, lm) = self.eigenvalues();
        let (o, gm, c, b, g) = (self.omega, self.gamma, self.c, self.b, self.g);
        let [z1, z2, k1, k2] = *xi0;
        let big_g = g * k2 / o;
        let d1 = z1 - gm * big_g / o;
        let d2 = z2 - big_g;
        let two_iw = lp - lm;
        let xp = (-lm * d1 - d2 * o) / two_iw;
        let yp = (lp * d2 + d1 * o) / two_iw;
        let ep = (lp * t).exp();
        let ec = (-c * t).exp();
        let xi1 = 2.0 * (xp * ep).re + gm * big_g / o;
        let xi2 = 2.0 * (yp * ep).re + big_g;
        let ell = 2.0 * (yp * (ep - ec) / (lp + c)).re + big_g * (1.0 - ec) / c;
        [xi1, xi2, ec * k1 + b * ell, k2]
    }

    /// Output direction `ξ(t;κ) = S_t(0, 0, 0, κ)`.
    pub fn output_direction(&self, t: f64, kappa: f64) -> [f64; 4] {
        self.flow_oracle(&[0.0, 0.0, 0.0, kappa], t)
    }

    /// `ξ(∞;κ) = κ(gγ/Ω², g/Ω, bg/(cΩ), 1)`.
    pub fn output_direction_limit(&self, kappa: f64) -> [f64; 4] {
        let (o, gm, c, b, g) = (self.omega, self.gamma, self.c, self.b, self.g);
        [kappa * g * gm / (o * o), kappa * g / o, kappa * b * g / (c * o), kappa]
    }

    /// `J₃(u) = Σ w (e^{ivu} − 1 − i·1_{|v|<1} v u)`.
    pub fn j3(&self, u: f64) -> Complex<f64> {
        self.nodes
            .iter()
            .map(|(v, w)| {
                let comp = if v.abs() < 1.0 { v * u } else { 0.0 };
                (Complex::new(0.0, v * u).exp() - 1.0 - Complex::new(0.0, comp)) * *w
            })
            .sum()
    }

    /// `ψ(ξ(∞;κ))` as a sum of drift, Gaussian and jump terms.
    pub fn output_symbol_limit(&self, kappa: f64) -> Complex<f64> {
        let (o, gm, c, b, g) = (self.omega, self.gamma, self.c, self.b, self.g);
        let quad = g * g * gm * gm * self.a11 / o.powi(4)
            + g * g * self.a22() / (o * o)
            + 2.0 * g * g * gm * self.a12 / o.powi(3)
            + 2.0 * g * self.a24 / o
            + self.a44
            + b * b * g * g * self.a33 / (c * c * o * o);
        Complex::new(-kappa * kappa * quad / 2.0, b * g * self.alpha0 * kappa / (c * o)) + self.j3(b * g * kappa / (c * o))
    }

    /// Gaussian covariance of the long-time reduced quantum state.
    pub fn reduced_quantum_covariance(&self) -> DMatrix<f64> {
        let (o, gm, c, b) = (self.omega, self.gamma, self.c, self.b);
        let den = o * o + c * c + c * gm;
        let base = (self.a11 + self.a22()) / (2.0 * gm);
        let q22 = base + self.a33 * b * b / (2.0 * gm * den);
        let q11 = base + self.a11 * gm / (2.0 * o * o) + self.a12 / o + self.a33 * b * b * (c + gm) / (2.0 * c * gm * den);
        let q12 = -self.a11 / (2.0 * o);
        DMatrix::from_row_slice(2, 2, &[q11, q12, q12, q22])
    }

    /// The reduced covariance in the form `A₁₁ = A₂₂ + A₁₂/Ω`, `A₁₂ = 0`,
    /// `A₂₂ = (A₁₁+A₂₂)/(2γ) + A₃₃b²(γ/2 + c)/(2cγ(Ω² + γc + c²))`.
    pub fn reference_reduced_quantum_covariance(&self) -> DMatrix<f64> {
        let (o, gm, c, b) = (self.omega, self.gamma, self.c, self.b);
        let q22 = (self.a11 + self.a22()) / (2.0 * gm) + self.a33 * b * b * (gm / 2.0 + c) / (2.0 * c * gm * (o * o + gm * c + c * c));
        DMatrix::from_row_slice(2, 2, &[q22 + self.a12 / o, 0.0, 0.0, q22])
    }

    /// Imaginary part `bα⁰ζ₁/(cΩ)` of the long-time reduced exponent.
    pub fn reduced_quantum_drift(&self, zeta: &[f64; 2]) -> f64 {
        self.b * self.alpha0 * zeta[0] / (self.c * self.omega)
    }

    /// `log Tr{ρ₀ e^{iQgκ}} − A₄₄κ²/(2Δ)` for a Gaussian `ρ₀`.
    pub fn increment_log_cf_limit<T: Real>(&self, rho0: &crate::states::GaussianHybridState<T>, kappa: f64, delta: f64) -> Complex<f64> {
        let zeta = vecn::<T>(&[self.g * kappa, 0.0]);
        let l = rho0.log_cf(&zeta);
        Complex::new(l.re.as_f64() - self.a44 * kappa * kappa / (2.0 * delta), l.im.as_f64())
    }
}

// ---------------------------------------------------------------------------

/// Built-in models by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    QuantumBoltzmann,
    Optomechanical,
    ClassicalOscillator,
    HybridOpto,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::QuantumBoltzmann, Example::Optomechanical, Example::ClassicalOscillator, Example::HybridOpto];

    pub fn name(self) -> &'static str {
        match self {
            Example::QuantumBoltzmann => "boltzmann",
            Example::Optomechanical => "optomechanical",
            Example::ClassicalOscillator => "classical-oscillator",
            Example::HybridOpto => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::Input(format!("unknown example {name:?}; known: boltzmann, optomechanical, classical-oscillator, hybrid")))
    }

    /// Default parameter set.
    pub fn build<T: Real>(self) -> Result<HybridModel<T>> {
        match self {
            Example::QuantumBoltzmann => QuantumBoltzmannParams::default().build(),
            Example::Optomechanical => OptomechanicalParams::default().build(),
            Example::ClassicalOscillator => ClassicalOscillatorParams::default().build(),
            Example::HybridOpto => HybridOptoParams::default().build(),
        }
    }

    pub fn spec(self) -> Result<ModelSpec> {
        Ok(ModelSpec::from_model(&self.build::<f64>()?))
    }

    /// Default parameters with scalar fields replaced by name.
    pub fn build_with<T: Real>(self, overrides: &[(String, f64)]) -> Result<HybridModel<T>> {
        match self {
            Example::QuantumBoltzmann => {
                let mut p = QuantumBoltzmannParams::default();
                for (k, v) in overrides {
                    *match k.as_str() {
                        "m" => &mut p.m,
                        "gamma" => &mut p.gamma,
                        "a1" => &mut p.a1,
                        "a2" => &mut p.a2,
                        "a3" => &mut p.a3,
                        _ => return Err(unknown(self, k)),
                    } = *v;
                }
                p.build()
            }
            Example::Optomechanical => {
                let mut p = OptomechanicalParams::default();
                for (k, v) in overrides {
                    *match k.as_str() {
                        "omega" => &mut p.omega,
                        "gamma" => &mut p.gamma,
                        "a1" => &mut p.a1,
                        "a2" => &mut p.a2,
                        "a3" => &mut p.a3,
                        _ => return Err(unknown(self, k)),
                    } = *v;
                }
                p.build()
            }
            Example::ClassicalOscillator => {
                let mut p = ClassicalOscillatorParams::default();
                for (k, v) in overrides {
                    *match k.as_str() {
                        "omega" => &mut p.omega,
                        "gamma" => &mut p.gamma,
                        "a22" => &mut p.a22,
                        "eta2" => &mut p.eta2,
                        _ => return Err(unknown(self, k)),
                    } = *v;
                }
                p.build()
            }
            Example::HybridOpto => {
                let mut p = HybridOptoParams::default();
                for (k, v) in overrides {
                    *match k.as_str() {
                        "omega" => &mut p.omega,
                        "gamma" => &mut p.gamma,
                        "c" => &mut p.c,
                        "b" => &mut p.b,
                        "g" => &mut p.g,
                        "a11" => &mut p.a11,
                        "a12" => &mut p.a12,
                        "a22_1" => &mut p.a22_1,
                        "a22_2" => &mut p.a22_2,
                        "a24" => &mut p.a24,
                        "a33" => &mut p.a33,
                        "a44" => &mut p.a44,
                        "alpha0" => &mut p.alpha0,
                        _ => return Err(unknown(self, k)),
                    } = *v;
                }
                p.build()
            }
        }
    }
}

fn unknown(e: Example, key: &str) -> Error {
    Error::Input(format!("example {} has no parameter {key:?}", e.name()))
}

pub fn build_quantum_boltzmann<T: Real>(p: &QuantumBoltzmannParams) -> Result<HybridModel<T>> {
    p.build()
}

pub fn build_optomechanical<T: Real>(p: &OptomechanicalParams) -> Result<HybridModel<T>> {
    p.build()
}

pub fn build_classical_oscillator<T: Real>(p: &ClassicalOscillatorParams) -> Result<HybridModel<T>> {
    p.build()
}

pub fn build_hybrid_opto<T: Real>(p: &HybridOptoParams) -> Result<HybridModel<T>> {
    p.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_abscissa, van_loan_gramian};
    use crate::model::classify_interactions;
    use crate::propagation::{equilibrium_psi, propagator, quadratic_form_at_zero};
    use crate::states::GaussianHybridState;

    /// `∫₀^∞ S_τᵀAS_τ dτ` from the Kronecker form of `ZᵀX + XZ + A = 0`.
    fn lyapunov(z: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = z.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let k = id.kronecker(&z.transpose()) + z.transpose().kronecker(&id);
        let rhs = DVector::from_iterator(n * n, a.iter().map(|x| -x));
        let x = k.lu().solve(&rhs).unwrap();
        DMatrix::from_iterator(n, n, x.iter().copied())
    }

    #[test]
    fn all_examples_validate() {
        for e in Example::ALL {
            let m = e.build::<f64>().unwrap();
            assert!(m.is_validated(), "{}", e.name());
            assert_eq!(Example::from_name(e.name()).unwrap(), e);
        }
        assert!(Example::from_name("nope").is_err());
        let m: HybridModel<f64> = Example::HybridOpto.build_with(&[("g".into(), 0.0)]).unwrap();
        assert_eq!(m.z[(0, 3)], 0.0);
        assert!(Example::HybridOpto.build_with::<f64>(&[("zz".into(), 1.0)]).is_err());
        assert!(Example::Optomechanical.build_with::<f64>(&[("gamma".into(), 3.0)]).is_err());
    }

    #[test]
    fn boltzmann() {
        let p = QuantumBoltzmannParams::default();
        let md: HybridModel<f64> = p.build().unwrap();
        assert!(md.triplet.nu.small_jump_compensator().iter().all(|x| *x == 0.0));
        assert!(md.beta_tilde().iter().all(|x| *x == 0.0));
        for t in [0.0, 0.3, 2.0, 9.0] {
            assert!((propagator(&md.z, t) - p.propagator_oracle(t)).amax() < 1e-12);
        }
        let bad = QuantumBoltzmannParams { a2: 0.0, ..p.clone() };
        assert!(bad.build::<f64>().is_err());
        let xi = DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.6, -0.3, 0.9]);
        let eq = equilibrium_psi(&md, &xi).unwrap();
        let k = [0.6, -0.3, 0.9];
        let k2: f64 = k.iter().map(|x| x * x).sum();
        let want = Complex::new(-p.momentum_gaussian_coefficient() * k2, 0.0) + p.momentum_jump_exponent(&k, 4000);
        assert!((eq.value - want).norm() < 1e-6, "{} vs {}", eq.value, want);
        let gp = md.gaussian_part();
        let hess = quadratic_form_at_zero(
            |k: &DVector<f64>| equilibrium_psi(&gp, &DVector::from_column_slice(&[0.0, 0.0, 0.0, k[0], k[1], k[2]])).unwrap().value,
            3,
            1.0,
        );
        for i in 0..3 {
            assert!((hess[(i, i)] / 2.0 - p.momentum_gaussian_coefficient()).abs() < 1e-6);
        }
        assert!(p.shell_anisotropy(1.0) > 0.0);
        let iso = QuantumBoltzmannParams { shells: vec![], ..p };
        assert_eq!(iso.shell_anisotropy(1.0), 0.0);
    }

    #[test]
    fn optomechanical() {
        let p = OptomechanicalParams::default();
        let md: HybridModel<f64> = p.build().unwrap();
        for i in 0..100 {
            let t = i as f64 * 10.0 / p.gamma / 99.0;
            let err = (propagator(&md.z, t).transpose() - p.st_transpose_oracle(t)).amax();
            assert!(err <= 1e-10, "t={t} err={err}");
        }
        let bt = md.beta_tilde();
        assert_eq!(bt[0], 0.0);
        assert!((bt[1] - p.mean_force()[1]).abs() < 1e-15);
        let (lp, lm) = p.eigenvalues();
        assert!((lp.re + p.gamma / 2.0).abs() < 1e-15 && (lp.im + lm.im).abs() < 1e-15);
        assert!((spectral_abscissa(&md.z) + p.gamma / 2.0).abs() < 1e-12);
        assert!(OptomechanicalParams { gamma: 2.5, ..p.clone() }.build::<f64>().is_err());
        assert!(OptomechanicalParams { a1: 0.05, ..p }.build::<f64>().is_err());
    }

    #[test]
    fn equilibrium_forgets_initial_state() {
        use crate::propagation::evolve_cf;
        let md: HybridModel<f64> = OptomechanicalParams::default().build().unwrap();
        let xi = DVector::from_column_slice(&[0.7, -0.4]);
        let s1 = GaussianHybridState::new(DVector::from_column_slice(&[3.0, -1.0]), DMatrix::identity(2, 2) * 2.0).unwrap();
        let s2 = GaussianHybridState::vacuum(md.dims, 0.0);
        let t = 150.0;
        let a = evolve_cf(&md, |x| s1.cf(x), t, &xi).unwrap();
        let b = evolve_cf(&md, |x| s2.cf(x), t, &xi).unwrap();
        assert!((a - b).norm() < 1e-8);
        let eq = crate::propagation::equilibrium_cf(&md, &xi).unwrap();
        assert!((a - eq).norm() < 1e-7);
    }

    #[test]
    fn classical_oscillator() {
        let p = ClassicalOscillatorParams::default();
        let md: HybridModel<f64> = p.build().unwrap();
        let big = van_loan_gramian(&md.z, &md.triplet.a, 200.0);
        assert!((big - p.equilibrium_covariance()).amax() < 1e-6);
        assert!((lyapunov(&md.z, &md.triplet.a) - p.equilibrium_covariance()).amax() < 1e-12);
        let bt = md.beta_tilde();
        assert_eq!(bt[0], 0.0);
        assert!((bt[1] - p.mean_force()[1]).abs() < 1e-15);
        for t in [0.1, 1.0, 5.0] {
            assert!((propagator(&md.z, t).transpose() - p.st_transpose_oracle(t)).amax() < 1e-12);
        }
    }

    #[test]
    fn hybrid_flow_and_flags() {
        let p = HybridOptoParams::default();
        let md: HybridModel<f64> = p.build().unwrap();
        let f = classify_interactions(&md);
        assert!(f.k1 && f.k2 && f.k3 && !f.k4);
        let starts = [[0.3, -0.7, 0.4, 1.1], [0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0]];
        for x0 in starts {
            for t in [0.0, 0.4, 3.0, 12.0] {
                let got = propagator(&md.z, t) * DVector::from_column_slice(&x0);
                let want = p.flow_oracle(&x0, t);
                for i in 0..4 {
                    assert!((got[i] - want[i]).abs() <= 1e-10, "x0={x0:?} t={t} i={i}");
                }
            }
        }
        let lim = p.output_direction_limit(1.3);
        let far = p.output_direction(400.0, 1.3);
        for i in 0..4 {
            assert!((lim[i] - far[i]).abs() < 1e-12);
        }
        let xi = DVector::from_column_slice(&lim);
        assert!((md.psi(&xi) - p.output_symbol_limit(1.3)).norm() < 1e-12);
    }

    #[test]
    fn hybrid_reduced_covariance() {
        let p = HybridOptoParams::default();
        let md: HybridModel<f64> = p.build().unwrap();
        let z3 = md.z.view((0, 0), (3, 3)).into_owned();
        let a3 = md.triplet.a.view((0, 0), (3, 3)).into_owned();
        let x = lyapunov(&z3, &a3);
        let aq = p.reduced_quantum_covariance();
        assert!((x.view((0, 0), (2, 2)) - &aq).amax() < 1e-12);
        let gp = md.gaussian_part();
        let hess = quadratic_form_at_zero(
            |z: &DVector<f64>| equilibrium_psi(&gp, &DVector::from_column_slice(&[z[0], z[1], 0.0, 0.0])).unwrap().value,
            2,
            1.0,
        );
        assert!((&hess - &aq).amax() < 1e-6 * aq.amax(), "{hess} {aq}");
        let zeta = [0.4, -0.9];
        let eq = equilibrium_psi(&gp, &DVector::from_column_slice(&[zeta[0], zeta[1], 0.0, 0.0])).unwrap();
        assert!((eq.value.im - p.reduced_quantum_drift(&zeta)).abs() < 1e-9, "{} {}", eq.value.im, p.reduced_quantum_drift(&zeta));
    }

    #[test]
    fn hybrid_constraints() {
        let p = HybridOptoParams::default();
        assert!(HybridOptoParams { a22_1: 0.04, ..p.clone() }.build::<f64>().is_err());
        assert!(HybridOptoParams { a44: 0.3, ..p.clone() }.build::<f64>().is_err());
        assert!(HybridOptoParams { c: 0.0, ..p }.build::<f64>().is_err());
    }

    #[test]
    fn x1_is_autonomous() {
        use crate::instruments::characteristic_operator;
        let md: HybridModel<f64> = HybridOptoParams::default().build().unwrap();
        for t in [0.1, 1.0, 6.0] {
            let w = characteristic_operator(&md, t, &DVector::from_column_slice(&[0.8, 0.0]), &DVector::zeros(2)).unwrap();
            assert!(w.out_zeta.amax() <= 1e-12);
        }
    }
}
