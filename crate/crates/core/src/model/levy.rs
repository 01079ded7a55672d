//! Finite-node Lévy measures on phase space.

use nalgebra::{Complex, DVector};

use crate::linalg::vnorm;
use crate::scalar::{c0, cis, Real};

#[derive(Clone, Debug, PartialEq)]
pub enum LevyComponent<T: Real> {
    /// Point mass `weight·δ_eta`.
    Atom { weight: T, eta: DVector<T> },
    /// One-dimensional measure `Σ w_j δ_{v_j}` carried along a unit direction.
    Line { direction: DVector<T>, nodes: Vec<(T, T)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevyMeasure<T: Real> {
    pub dim: usize,
    pub components: Vec<LevyComponent<T>>,
}

/// A single jump: rate and displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump<T: Real> {
    pub weight: T,
    pub eta: DVector<T>,
}

impl<T: Real> Jump<T> {
    #[inline]
    pub fn small(&self) -> bool {
        vnorm(&self.eta) < T::one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevyDiagnostics {
    pub ok: bool,
    /// `Σ_{|η|<1} w|η|²`.
    pub small_ball_second_moment: f64,
    /// `Σ_{|η|≥1} w`.
    pub tail_mass: f64,
    pub problems: Vec<String>,
}

impl<T: Real> LevyMeasure<T> {
    pub fn empty(dim: usize) -> Self {
        LevyMeasure { dim, components: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.jumps().is_empty()
    }

    pub fn with_atom(mut self, weight: T, eta: DVector<T>) -> Self {
        self.components.push(LevyComponent::Atom { weight, eta });
        self
    }

    pub fn with_line(mut self, direction: DVector<T>, nodes: Vec<(T, T)>) -> Self {
        self.components.push(LevyComponent::Line { direction, nodes });
        self
    }

    /// Every point mass of the measure, lines expanded.
    pub fn jumps(&self) -> Vec<Jump<T>> {
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                LevyComponent::Atom { weight, eta } => out.push(Jump { weight: *weight, eta: eta.clone() }),
                LevyComponent::Line { direction, nodes } => {
                    for (v, w) in nodes {
                        out.push(Jump { weight: *w, eta: direction * *v });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> LevyDiagnostics {
        let mut problems = Vec::new();
        let mut small = 0.0;
        let mut tail = 0.0;
        for (ci, c) in self.components.iter().enumerate() {
            match c {
                LevyComponent::Atom { weight, eta } => {
                    if eta.len() != self.dim {
                        problems.push(format!("component {ci}: atom has length {}, expected {}", eta.len(), self.dim));
                        continue;
                    }
                    check_mass(ci, None, *weight, eta, &mut problems, &mut small, &mut tail);
                }
                LevyComponent::Line { direction, nodes } => {
                    if direction.len() != self.dim {
                        problems.push(format!(
                            "component {ci}: direction has length {}, expected {}",
                            direction.len(),
                            self.dim
                        ));
                        continue;
                    }
                    let nrm = vnorm(direction).as_f64();
                    if !nrm.is_finite() || (nrm - 1.0).abs() > 1e-12 {
                        problems.push(format!("component {ci}: direction is not a unit vector (norm {nrm:e})"));
                        continue;
                    }
                    for (j, (v, w)) in nodes.iter().enumerate() {
                        check_mass(ci, Some(j), *w, &(direction * *v), &mut problems, &mut small, &mut tail);
                    }
                }
            }
        }
        LevyDiagnostics { ok: problems.is_empty(), small_ball_second_moment: small, tail_mass: tail, problems }
    }

    /// `Σ w (e^{iηᵀξ} − 1 − i·1_{|η|<1} ηᵀξ)`.
    pub fn jump_symbol(&self, xi: &DVector<T>) -> Complex<T> {
        let mut acc = c0::<T>();
        for j in self.jumps() {
            let p = j.eta.dot(xi);
            let mut term = cis(p) - T::one();
            if j.small() {
                term.im -= p;
            }
            acc += term * j.weight;
        }
        acc
    }

    /// `Σ_{|η|<1} w η`.
    pub fn small_jump_compensator(&self) -> DVector<T> {
        let mut acc = DVector::zeros(self.dim);
        for j in self.jumps().iter().filter(|j| j.small()) {
            acc += &j.eta * j.weight;
        }
        acc
    }

    /// `Σ_{|η|≥1} w η`, the first moment carried by the large jumps.
    pub fn tail_first_moment(&self) -> DVector<T> {
        let mut acc = DVector::zeros(self.dim);
        for j in self.jumps().iter().filter(|j| !j.small()) {
            acc += &j.eta * j.weight;
        }
        acc
    }

    /// Image of the measure under `η ↦ P η` restricted to `range` of
    /// coordinates. Masses landing on the origin are dropped.
    pub fn push_forward(&self, range: std::ops::Range<usize>) -> LevyMeasure<T> {
        let m = range.len();
        let mut out = LevyMeasure::empty(m);
        for c in &self.components {
            match c {
                LevyComponent::Atom { weight, eta } => {
                    let img = eta.rows(range.start, m).into_owned();
                    if img.iter().any(|x| *x != T::zero()) {
                        out.components.push(LevyComponent::Atom { weight: *weight, eta: img });
                    }
                }
                LevyComponent::Line { direction, nodes } => {
                    let img = direction.rows(range.start, m).into_owned();
                    let len = vnorm(&img);
                    if len > T::zero() {
                        out.components.push(LevyComponent::Line {
                            direction: img / len,
                            nodes: nodes.iter().map(|(v, w)| (*v * len, *w)).collect(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Largest jump length, zero for the empty measure.
    pub fn max_jump(&self) -> T {
        self.jumps().iter().fold(T::zero(), |m, j| m.max(vnorm(&j.eta)))
    }

    pub fn total_mass(&self) -> T {
        self.jumps().iter().fold(T::zero(), |m, j| m + j.weight)
    }
}

fn check_mass<T: Real>(
    ci: usize,
    node: Option<usize>,
    w: T,
    eta: &DVector<T>,
    problems: &mut Vec<String>,
    small: &mut f64,
    tail: &mut f64,
) {
    let tag = match node {
        Some(j) => format!("component {ci} node {j}"),
        None => format!("component {ci}"),
    };
    let wf = w.as_f64();
    if !(wf > 0.0) || !wf.is_finite() {
        problems.push(format!("{tag}: non-positive weight {wf:e}"));
    }
    let r = vnorm(eta).as_f64();
    if !r.is_finite() {
        problems.push(format!("{tag}: non-finite jump"));
        return;
    }
    if r == 0.0 {
        problems.push(format!("{tag}: support at origin"));
        return;
    }
    if r < 1.0 {
        *small += wf * r * r;
    } else {
        *tail += wf;
    }
}
