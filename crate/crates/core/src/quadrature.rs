//! Gauss–Legendre rules and an adaptive complex integrator.

use std::sync::OnceLock;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cabs, c0, Real};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed in `f64` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings<T> {
    pub abs_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadSettings<T> {
    fn default() -> Self {
        QuadSettings { abs_tol: T::quad_tol(), max_subdivisions: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T: Real> {
    pub value: Complex<T>,
    pub error: T,
    pub subdivisions: usize,
}

fn gl15_on<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> Complex<T> {
    let (x, w) = gl15();
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut acc = c0::<T>();
    for (xi, wi) in x.iter().zip(w) {
        acc += f(mid + half * T::lit(*xi)) * T::lit(*wi);
    }
    acc * half
}

/// Adaptive composite 15-point Gauss–Legendre on `[a, b]`.
///
/// An interval is accepted when `|whole − (left + right)|` is below its
/// share of `abs_tol`, proportional to its length, or at rounding level
/// relative to its own value.
pub fn integrate<T, F>(mut f: F, a: T, b: T, settings: QuadSettings<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    if a == b {
        return Ok(QuadResult { value: c0(), error: T::zero(), subdivisions: 0 });
    }
    let total = (b - a).abs();
    let mut stack = vec![(a, b, gl15_on(&mut f, a, b))];
    let mut value = c0::<T>();
    let mut error = T::zero();
    let mut subdivisions = 0usize;
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let left = gl15_on(&mut f, lo, mid);
        let right = gl15_on(&mut f, mid, hi);
        let halves = left + right;
        let est = cabs(whole - halves);
        let share = (settings.abs_tol * (hi - lo).abs() / total).max(cabs(halves) * T::default_epsilon() * T::lit(64.0));
        let tiny = (hi - lo).abs() <= total * T::default_epsilon() * T::lit(64.0);
        if est <= share || tiny {
            value += halves;
            error += est;
            continue;
        }
        subdivisions += 1;
        if subdivisions > settings.max_subdivisions {
            return Err(Error::Quadrature { subdivisions, estimate: (error + est).as_f64() });
        }
        stack.push((mid, hi, right));
        stack.push((lo, mid, left));
    }
    Ok(QuadResult { value, error, subdivisions })
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]` with `panels`
/// equal panels of `order` points each.
pub fn composite_rule<T: Real>(a: T, b: T, panels: usize, order: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / T::from_usize_lossy(panels);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * T::from_usize_lossy(p);
        let mid = lo + h * T::lit(0.5);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + h * T::lit(0.5 * xi));
            weights.push(h * T::lit(0.5 * wi));
        }
    }
    (nodes, weights)
}
