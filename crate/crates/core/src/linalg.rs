//! Dense linear-algebra kernels: matrix exponential, Gramians, Hermitian
//! spectra through real embeddings.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar::Real;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

/// Induced 1-norm (max column sum).
pub fn norm1<T: Real>(a: &DMatrix<T>) -> T {
    let mut best = T::zero();
    for col in a.column_iter() {
        let s = col.iter().fold(T::zero(), |acc, x| acc + x.abs());
        if s > best {
            best = s;
        }
    }
    best
}

pub fn max_abs<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

fn pade_low<T: Real>(a: &DMatrix<T>, b: &[f64]) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = DMatrix::<T>::identity(n, n) * lit::<T>(b[1]);
    let mut v = DMatrix::<T>::identity(n, n) * lit::<T>(b[0]);
    let mut pow = DMatrix::<T>::identity(n, n);
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        pow = &pow * &a2;
        v += &pow * lit::<T>(b[k]);
        u += &pow * lit::<T>(b[k + 1]);
        k += 2;
    }
    (a * u, v)
}

fn pade13<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let b = |k: usize| lit::<T>(B13[k]);
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a * (&a6 * inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    (u, v)
}

/// Matrix exponential by Padé scaling and squaring (degrees 3 to 13).
pub fn expm<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let nrm = norm1(a).as_f64();
    if nrm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let (mut u, mut v, squarings) = if nrm <= THETA[0] {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if nrm <= THETA[1] {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if nrm <= THETA[2] {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if nrm <= THETA[3] {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = ((nrm / THETA[4]).log2().ceil()).max(0.0) as i32;
        let scaled = a * lit::<T>(0.5f64.powi(s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    v -= &u;
    u = v
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for the selected degree");
    for _ in 0..squarings {
        u = &u * &u;
    }
    u
}

/// Number of halvings bringing `‖M‖₁·t` below one.
fn doublings<T: Real>(m: &DMatrix<T>, t: T) -> u32 {
    let r = (norm1(m) * t.abs()).as_f64();
    if r <= 1.0 {
        0
    } else {
        r.log2().ceil().min(60.0) as u32
    }
}

/// `∫₀ᵗ exp(Mτ)ᵀ dτ`, i.e. `∫₀ᵗ S_τᵀ dτ` for `S_τ = exp(Mτ)`.
///
/// Long intervals are built from a short one with `I_{2h} = I_h + S_hᵀI_h`.
pub fn integral_expm_transpose<T: Real>(m: &DMatrix<T>, t: T) -> DMatrix<T> {
    let d = m.nrows();
    let k = doublings(m, t);
    let h = t / T::lit(2f64.powi(k as i32));
    let mut aug = DMatrix::<T>::zeros(2 * d, 2 * d);
    aug.view_mut((0, 0), (d, d)).copy_from(&(m.transpose() * h));
    aug.view_mut((0, d), (d, d)).copy_from(&(DMatrix::<T>::identity(d, d) * h));
    let e = expm(&aug);
    let mut st = e.view((0, 0), (d, d)).into_owned();
    let mut acc = e.view((0, d), (d, d)).into_owned();
    for _ in 0..k {
        acc = &acc + &st * &acc;
        st = &st * &st;
    }
    acc
}

/// Van Loan Gramian `∫₀ᵗ S_τᵀ A S_τ dτ` with `S_τ = exp(Zτ)`.
///
/// The block exponential is taken over a short step only and extended with
/// `G_{2h} = G_h + S_hᵀG_hS_h`, which stays accurate when `Z` is stable and
/// `t` is large.
pub fn van_loan_gramian<T: Real>(z: &DMatrix<T>, a: &DMatrix<T>, t: T) -> DMatrix<T> {
    let d = z.nrows();
    let k = doublings(z, t);
    let step = t / T::lit(2f64.powi(k as i32));
    let f = z.transpose();
    let mut aug = DMatrix::<T>::zeros(2 * d, 2 * d);
    aug.view_mut((0, 0), (d, d)).copy_from(&(-&f * step));
    aug.view_mut((0, d), (d, d)).copy_from(&(a * step));
    aug.view_mut((d, d), (d, d)).copy_from(&(f.transpose() * step));
    let e = expm(&aug);
    let g = e.view((0, d), (d, d)).into_owned();
    let h = e.view((d, d), (d, d)).into_owned();
    let mut acc = symmetrize(&(h.transpose() * g));
    let mut s = h;
    for _ in 0..k {
        acc = &acc + s.transpose() * &acc * &s;
        s = &s * &s;
    }
    symmetrize(&acc)
}

pub fn symmetrize<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Largest `|a_ij − a_ji|` relative to `max(1, max|a_ij|)`.
pub fn asymmetry<T: Real>(a: &DMatrix<T>) -> T {
    let scale = T::one().max(max_abs(a));
    max_abs(&(a - a.transpose())) / scale
}

/// Sorted eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut v: Vec<T> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Minimum eigenvalue of the Hermitian matrix `re + i·im`.
///
/// `im` must be antisymmetric. The real embedding `[[re, −im], [im, re]]`
/// has the same spectrum with every eigenvalue doubled.
pub fn hermitian_min_eigenvalue<T: Real>(re: &DMatrix<T>, im: &DMatrix<T>) -> T {
    let n = re.nrows();
    if n == 0 {
        return T::zero();
    }
    let mut emb = DMatrix::<T>::zeros(2 * n, 2 * n);
    emb.view_mut((0, 0), (n, n)).copy_from(re);
    emb.view_mut((n, n), (n, n)).copy_from(re);
    emb.view_mut((0, n), (n, n)).copy_from(&(-im));
    emb.view_mut((n, 0), (n, n)).copy_from(im);
    symmetric_eigenvalues(&emb)[0]
}

/// `L` with `L Lᵀ = a` for symmetric PSD `a`; negative eigenvalues from
/// rounding are set to zero.
pub fn psd_factor<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = symmetrize(a).symmetric_eigen();
    let mut l = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let r = lam.max(T::zero()).sqrt();
        for i in 0..n {
            l[(i, j)] *= r;
        }
    }
    l
}

/// Largest real part over the spectrum of `z`.
pub fn spectral_abscissa<T: Real>(z: &DMatrix<T>) -> T {
    if z.nrows() == 0 {
        return T::zero();
    }
    let ev = z.complex_eigenvalues();
    ev.iter().skip(1).fold(ev[0].re, |m, c| m.max(c.re))
}

pub fn vnorm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.hypot(*x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rot(w: f64, t: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[(w * t).cos(), (w * t).sin(), -(w * t).sin(), (w * t).cos()])
    }

    #[test]
    fn expm_zero_and_diag() {
        assert_eq!(expm(&DMatrix::<f64>::zeros(3, 3)), DMatrix::identity(3, 3));
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5, 3.0]));
        let e = expm(&d);
        assert_relative_eq!(e[(0, 0)], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(e[(1, 1)], 0.5f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(e[(2, 2)], 3.0f64.exp(), max_relative = 1e-14);
    }

    #[test]
    fn expm_rotation_all_degrees() {
        for &t in &[1e-3, 0.1, 0.5, 1.5, 4.0, 30.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
            let e = expm(&a);
            let want = rot(1.0, t);
            assert!((e - want).abs().max() < 1e-13 * (1.0 + t), "t = {t}");
        }
    }

    #[test]
    fn expm_nilpotent() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 1.0 + 3.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert!((expm(&a) - want).abs().max() < 1e-14);
    }

    #[test]
    fn expm_semigroup() {
        let z = DMatrix::from_row_slice(3, 3, &[-0.3, 1.2, 0.0, -1.1, -0.2, 0.4, 0.5, 0.0, -0.9]);
        let a = expm(&(&z * 2.3));
        let b = expm(&(&z * 1.7));
        let c = expm(&(&z * 4.0));
        assert!((&a * &b - c).abs().max() < 1e-13);
        let inv = expm(&(&z * -2.3));
        assert!((&a * inv - DMatrix::identity(3, 3)).abs().max() < 1e-13);
    }

    #[test]
    fn expm_f32() {
        let a = DMatrix::<f32>::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - 2.0f32.cos()).abs() < 1e-6);
        assert!((e[(0, 1)] - 2.0f32.sin()).abs() < 1e-6);
    }

    fn simpson_gramian(z: &DMatrix<f64>, a: &DMatrix<f64>, t: f64, n: usize) -> DMatrix<f64> {
        let h = t / n as f64;
        let mut acc = DMatrix::zeros(z.nrows(), z.nrows());
        for i in 0..=n {
            let w: f64 = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let s = expm(&(z * (i as f64 * h)));
            acc += (s.transpose() * a * &s) * w;
        }
        acc * (h / 3.0)
    }

    #[test]
    fn van_loan_matches_simpson() {
        let z = DMatrix::from_row_slice(3, 3, &[-0.3, 1.2, 0.0, -1.1, -0.2, 0.4, 0.5, 0.0, -0.9]);
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 0.3]);
        let vl = van_loan_gramian(&z, &a, 2.5);
        let sim = simpson_gramian(&z, &a, 2.5, 2000);
        assert!((vl - sim).abs().max() < 1e-11);
    }

    #[test]
    fn integral_of_transpose_scalar() {
        let z = DMatrix::from_element(1, 1, -0.5);
        let m = integral_expm_transpose(&z, 3.0);
        assert_relative_eq!(m[(0, 0)], (1.0 - (-1.5f64).exp()) / 0.5, max_relative = 1e-14);
        let z0 = DMatrix::<f64>::zeros(2, 2);
        let m0 = integral_expm_transpose(&z0, 3.0);
        assert!((m0 - DMatrix::identity(2, 2) * 3.0).abs().max() < 1e-14);
    }

    #[test]
    fn hermitian_min_eig_examples() {
        let re = DMatrix::<f64>::identity(2, 2) * 0.4;
        let im = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]);
        assert_relative_eq!(hermitian_min_eigenvalue(&re, &im), -0.1, epsilon = 1e-14);
        let re = DMatrix::<f64>::identity(2, 2) * 0.5;
        assert!(hermitian_min_eigenvalue(&re, &im).abs() < 1e-14);
    }

    #[test]
    fn abscissa() {
        let z = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -0.3]);
        assert_relative_eq!(spectral_abscissa(&z), -0.15, epsilon = 1e-12);
        let r = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(spectral_abscissa(&r).abs() < 1e-12);
    }
}
