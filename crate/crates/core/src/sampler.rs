//! Monte Carlo paths of the classical component, an Ornstein–Uhlenbeck type
//! process driven by a Lévy process with finitely many jump nodes.

use std::io::{Read, Write};

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::psd_factor;
use crate::model::{reduce_classical, HybridModel};
use crate::propagation::{capital_psi, gaussian_integrals, propagator, CumulantField};
use crate::scalar::{cexp, cis, Real};
use crate::states::{wigner_from_cf, DensityGrid, GridAxis, GridCF};

/// Magic bytes opening a binary path export.
pub const BINARY_MAGIC: &[u8; 8] = b"HQFPATH1";

/// Random words reserved per step of one path.
const WORDS_PER_STEP: u128 = 1 << 16;

/// Random stream for `(seed, path)` positioned at `step`.
pub fn stream(seed: u64, path: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng.set_word_pos(u128::from(step) * WORDS_PER_STEP);
    rng
}

fn classical<T: Real>(model: &HybridModel<T>) -> Result<HybridModel<T>> {
    if model.dims.n == 0 {
        Ok(model.clone())
    } else {
        reduce_classical(model)
    }
}

/// One exact step `X ↦ MX + N(mean, LLᵀ) + Σ η·Poisson(rate)`.
#[derive(Clone, Debug)]
pub struct StepKernel<T: Real> {
    pub transport: DMatrix<T>,
    pub mean: DVector<T>,
    pub factor: DMatrix<T>,
    pub jumps: Vec<(f64, DVector<T>)>,
}

impl<T: Real> StepKernel<T> {
    /// Increment of the driving Lévy process over `dt`.
    pub fn increment(model: &HybridModel<T>, dt: T) -> Result<Self> {
        if model.dims.n != 0 {
            return Err(Error::Input("increment sampling needs a purely classical triplet".into()));
        }
        let s = model.dims.s;
        Ok(StepKernel {
            transport: DMatrix::identity(s, s),
            mean: model.effective_drift() * dt,
            factor: psd_factor(&(&model.triplet.a * dt)),
            jumps: rates(model, dt),
        })
    }

    /// Transition of the process over `dt`; jumps land at the end of the step.
    pub fn transition(model: &HybridModel<T>, dt: T) -> Result<Self> {
        let model = classical(model)?;
        let (a_dt, mean) = gaussian_integrals(&model, dt);
        Ok(StepKernel {
            transport: propagator(&model.z, dt).transpose(),
            mean,
            factor: psd_factor(&a_dt),
            jumps: rates(&model, dt),
        })
    }

    pub fn apply<R: Rng>(&self, x: &DVector<T>, rng: &mut R) -> DVector<T> {
        let s = self.mean.len();
        let g = DVector::from_fn(s, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let mut out = &self.transport * x + &self.mean + &self.factor * g;
        for (rate, eta) in &self.jumps {
            if *rate > 0.0 {
                let count: f64 = Poisson::new(*rate).map(|p| rng.sample(p)).unwrap_or(0.0);
                if count > 0.0 {
                    out += eta * T::lit(count);
                }
            }
        }
        out
    }
}

fn rates<T: Real>(model: &HybridModel<T>, dt: T) -> Vec<(f64, DVector<T>)> {
    model.triplet.nu.jumps().into_iter().map(|j| ((j.weight * dt).as_f64(), j.eta)).collect()
}

/// One increment of the Lévy process over `dt`.
pub fn sample_levy_increment<T: Real, R: Rng>(model: &HybridModel<T>, dt: T, rng: &mut R) -> Result<DVector<T>> {
    let k = StepKernel::increment(model, dt)?;
    Ok(k.apply(&DVector::zeros(model.dims.s), rng))
}

/// Law of `X(0)`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw<T: Real> {
    Point(DVector<T>),
    Gaussian { mean: DVector<T>, cov: DMatrix<T> },
}

impl<T: Real> InitialLaw<T> {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Point(x) => x.len(),
            InitialLaw::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<T> {
        match self {
            InitialLaw::Point(x) => x.clone(),
            InitialLaw::Gaussian { mean, cov } => {
                let g = DVector::from_fn(mean.len(), |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
                mean + psd_factor(cov) * g
            }
        }
    }

    /// Characteristic function `p̂₀(k)`.
    pub fn cf(&self, k: &DVector<T>) -> Complex<T> {
        match self {
            InitialLaw::Point(x) => cis(x.dot(k)),
            InitialLaw::Gaussian { mean, cov } => {
                let q = (k.transpose() * cov * k)[(0, 0)];
                cexp(Complex::new(-q * T::lit(0.5), mean.dot(k)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble<T: Real> {
    pub dt: T,
    pub npaths: usize,
    /// Number of recorded times, `nsteps + 1`.
    pub ntimes: usize,
    pub s: usize,
    pub seed: u64,
    /// Values indexed `[path][time][component]`.
    pub data: Vec<T>,
}

/// Simulate `npaths` paths on `[0, t_final]` with `nsteps` exact steps.
pub fn sample_ou_paths<T: Real>(
    model: &HybridModel<T>,
    initial: &InitialLaw<T>,
    t_final: T,
    nsteps: usize,
    npaths: usize,
    seed: u64,
) -> Result<PathEnsemble<T>> {
    let cl = classical(model)?;
    let s = cl.dims.s;
    if initial.dim() != s {
        return Err(Error::Shape(format!("initial law has dimension {}, expected {s}", initial.dim())));
    }
    if nsteps == 0 || npaths == 0 {
        return Err(Error::Input("need at least one step and one path".into()));
    }
    if !(t_final > T::zero()) {
        return Err(Error::Input("final time must be positive".into()));
    }
    let dt = t_final / T::from_usize_lossy(nsteps);
    let kernel = StepKernel::transition(&cl, dt)?;
    let ntimes = nsteps + 1;
    let paths: Vec<Vec<T>> = (0..npaths)
        .into_par_iter()
        .map(|p| {
            let mut out = Vec::with_capacity(ntimes * s);
            let mut x = initial.sample(&mut stream(seed, p as u64, 0));
            out.extend(x.iter().copied());
            for step in 1..ntimes {
                x = kernel.apply(&x, &mut stream(seed, p as u64, step as u64));
                out.extend(x.iter().copied());
            }
            out
        })
        .collect();
    Ok(PathEnsemble { dt, npaths, ntimes, s, seed, data: paths.concat() })
}

impl<T: Real> PathEnsemble<T> {
    pub fn value(&self, path: usize, time: usize) -> &[T] {
        let o = (path * self.ntimes + time) * self.s;
        &self.data[o..o + self.s]
    }

    pub fn time(&self, index: usize) -> T {
        self.dt * T::from_usize_lossy(index)
    }

    pub fn column(&self, time: usize) -> Vec<DVector<T>> {
        (0..self.npaths).map(|p| DVector::from_column_slice(self.value(p, time))).collect()
    }

    pub fn mean(&self, time: usize) -> DVector<T> {
        let n = T::from_usize_lossy(self.npaths);
        self.column(time).iter().fold(DVector::zeros(self.s), |a, x| a + x) / n
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, time: usize) -> DMatrix<T> {
        let m = self.mean(time);
        let n = T::from_usize_lossy(self.npaths.max(2) - 1);
        self.column(time).iter().fold(DMatrix::zeros(self.s, self.s), |a, x| {
            let d = x - &m;
            a + &d * d.transpose()
        }) / n
    }

    /// `(1/N) Σ_j exp(i kᵀX_j(t))`.
    pub fn empirical_cf(&self, time: usize, k: &DVector<T>) -> Result<Complex<T>> {
        if time >= self.ntimes {
            return Err(Error::Input(format!("time index {time} out of range 0..{}", self.ntimes)));
        }
        if k.len() != self.s {
            return Err(Error::Shape(format!("k has length {}, expected {}", k.len(), self.s)));
        }
        let sum = (0..self.npaths)
            .map(|p| cis(self.value(p, time).iter().zip(k.iter()).fold(T::zero(), |a, (x, y)| a + *x * *y)))
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
        Ok(sum / T::from_usize_lossy(self.npaths))
    }

    /// Rows `time,path,x1..xs`.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            out.push_str(&format!("# {h}\n"));
        }
        out.push_str(&format!(
            "# npaths={} ntimes={} s={} dt={:.16e} seed={}\n",
            self.npaths,
            self.ntimes,
            self.s,
            self.dt.as_f64(),
            self.seed
        ));
        out.push_str("time,path");
        for i in 1..=self.s {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for p in 0..self.npaths {
            for t in 0..self.ntimes {
                out.push_str(&format!("{:.16e},{p}", self.time(t).as_f64()));
                for x in self.value(p, t) {
                    out.push_str(&format!(",{:.16e}", x.as_f64()));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Little-endian block: magic, `u64` npaths, ntimes, s, `f64` dt,
    /// `u64` seed, then the `f64` values in `[path][time][component]` order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for v in [self.npaths as u64, self.ntimes as u64, self.s as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.dt.as_f64().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for x in &self.data {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse("not a path ensemble file".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let npaths = u64::from_le_bytes(next(&mut r)?) as usize;
        let ntimes = u64::from_le_bytes(next(&mut r)?) as usize;
        let s = u64::from_le_bytes(next(&mut r)?) as usize;
        let dt = T::lit(f64::from_le_bytes(next(&mut r)?));
        let seed = u64::from_le_bytes(next(&mut r)?);
        let len = npaths
            .checked_mul(ntimes)
            .and_then(|x| x.checked_mul(s))
            .ok_or_else(|| Error::Parse("ensemble shape overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(Error::Parse(format!("expected {} data bytes, found {}", len * 8, bytes.len())));
        }
        let data = bytes.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap()))).collect();
        Ok(PathEnsemble { dt, npaths, ntimes, s, seed, data })
    }
}

/// `∫ e^{ikᵀy} P_t(dy|x0) = e^{i x0ᵀS_t k} e^{Ψ_t(k)}`.
pub fn transition_cf<T: Real>(model: &HybridModel<T>, t: T, x0: &DVector<T>, k: &DVector<T>) -> Result<Complex<T>> {
    let cl = classical(model)?;
    cl.dims.check_len("x0", x0.len())?;
    let st = propagator(&cl.z, t);
    Ok(cis(x0.dot(&(st * k))) * cexp(capital_psi(&cl, t, k)?))
}

/// Density of `P_t(·|x0)` on the dual of `axes`, centred at `center`.
pub fn transition_density<T: Real + rustfft::FftNum>(
    model: &HybridModel<T>,
    t: T,
    x0: &DVector<T>,
    axes: Vec<GridAxis<T>>,
    center: &[T],
) -> Result<DensityGrid<T>> {
    let cl = classical(model)?;
    cl.dims.check_len("x0", x0.len())?;
    if axes.len() != cl.dims.s {
        return Err(Error::Shape(format!("{} axes for s = {}", axes.len(), cl.dims.s)));
    }
    let radius = axes.iter().fold(T::zero(), |r, a| r.hypot(a.step * T::from_usize_lossy(a.count / 2)));
    let field = CumulantField::new(&cl, t, radius)?;
    let cf = GridCF::sample(axes, |k| cis(x0.dot(&field.transport(k))) * field.f(k))?;
    wigner_from_cf(&cf, center)
}

/// Largest `|φ_t(S_r… )|` mismatch in `∫P_t(·|y)P_r(dy|x) = P_{t+r}(·|x)`
/// at the level of characteristic functions.
pub fn chapman_kolmogorov_residual<T: Real>(
    model: &HybridModel<T>,
    t: T,
    r: T,
    x: &DVector<T>,
    probes: &[DVector<T>],
) -> Result<T> {
    let cl = classical(model)?;
    let st = propagator(&cl.z, t);
    let mut worst = T::zero();
    for k in probes {
        let lhs = cexp(capital_psi(&cl, t, k)?) * transition_cf(&cl, r, x, &(&st * k))?;
        let rhs = transition_cf(&cl, t + r, x, k)?;
        worst = worst.max(crate::scalar::cabs(lhs - rhs));
    }
    Ok(worst)
}
