//! The orbit-averaged follower dynamics and its linear stability.
//!
//! Averaging the repulsive force over one revolution of the leader on its
//! circle of radius `R` yields an autonomous field whose only equilibrium near
//! the orbit center is the center itself. Its Jacobian there has force
//! gradient `-beta` on both axes with
//!
//! ```text
//! beta = A (alpha - 1) / R^(2 alpha)
//! ```
//!
//! so the center is exponentially stable exactly when `A > 0`, `alpha > 1`
//! and `k > 0`.

use crate::dynamics::{InteractionGraph, SystemParams, TWO_PI};
use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible `|(x, y)| / R` for the averaged field.
pub const RHO_MAX: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AveragingError {
    #[error("averaged state at radius {rho} exceeds the admissible radius {limit}")]
    TooCloseToOrbit { rho: f64, limit: f64 },
    #[error("quadrature needs a power of two >= 16 nodes, got {0}")]
    InvalidNodes(usize),
}

/// State of the averaged system, ordered `(x, vx, y, vy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AveragedState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl AveragedState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self { x, vx, y, vy }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.vx, self.y, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Orbit-averaged vector field, force integrals by the `nodes`-point
/// composite trapezoid rule on `[0, 2 pi)`.
pub fn averaged_field(
    s: &AveragedState,
    params: &SystemParams,
    nodes: usize,
) -> Result<Vector4<f64>, AveragingError> {
    if nodes < 16 || !nodes.is_power_of_two() {
        return Err(AveragingError::InvalidNodes(nodes));
    }
    let r = params.radius;
    let rho = s.x.hypot(s.y);
    if rho > RHO_MAX * r {
        return Err(AveragingError::TooCloseToOrbit { rho, limit: RHO_MAX * r });
    }
    // Nodes s_j and -s_j are summed as pairs so that a state on the x-axis
    // gets an exactly zero y-force.
    let force = |cs: f64, sn: f64| {
        let dx = s.x - r * cs;
        let dy = s.y - r * sn;
        let w = (dx * dx + dy * dy).powf(-params.alpha);
        (dx * w, dy * w)
    };
    let (mut fx, mut fy) = force(1.0, 0.0);
    let (hx, hy) = force(-1.0, 0.0);
    fx += hx;
    fy += hy;
    for j in 1..nodes / 2 {
        let (sn, cs) = (TWO_PI * j as f64 / nodes as f64).sin_cos();
        let (ax, ay) = force(cs, sn);
        let (bx, by) = force(cs, -sn);
        fx += ax + bx;
        fy += ay + by;
    }
    let scale = params.amplitude / nodes as f64;
    Ok(Vector4::new(
        s.vx,
        scale * fx - params.damping * s.vx,
        s.vy,
        scale * fy - params.damping * s.vy,
    ))
}

/// Force gradient `beta = A (alpha - 1) / R^(2 alpha)` of the averaged field at the center.
pub fn restoring_stiffness(params: &SystemParams) -> f64 {
    params.amplitude * (params.alpha - 1.0) / params.radius.powf(2.0 * params.alpha)
}

/// Closed-form Jacobian of [`averaged_field`] at the orbit center.
pub fn jacobian_origin(params: &SystemParams) -> Matrix4<f64> {
    let b = -restoring_stiffness(params);
    let k = -params.damping;
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        b, k, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, b, k,
    )
}

/// Central-difference Jacobian of `f` at `s`, one column per state component.
pub fn numeric_jacobian<F, E>(f: F, s: &AveragedState, h: f64) -> Result<Matrix4<f64>, E>
where
    F: Fn(&AveragedState) -> Result<Vector4<f64>, E>,
{
    let base = s.to_vector();
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let mut plus = base;
        let mut minus = base;
        plus[j] += h;
        minus[j] -= h;
        let fp = f(&AveragedState::from_vector(&plus))?;
        let fm = f(&AveragedState::from_vector(&minus))?;
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Eigenvalues sorted by real then imaginary part, with the Hurwitz flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub hurwitz: bool,
}

impl Spectrum {
    fn from_unsorted(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let hurwitz = !eigenvalues.is_empty() && eigenvalues.iter().all(|l| l.re < 0.0);
        Self { eigenvalues, hurwitz }
    }

    /// Largest real part.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Both roots of `l^2 + b l + c = 0`, avoiding cancellation in the real case.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        return [Complex64::new(re, -im), Complex64::new(re, im)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
}

/// Pair of eigenvalues of one mode of the consensus-coupled Jacobian:
///
/// ```text
/// l = -k/2 + (gain mu +- sqrt((gain mu - k)^2 - 4 (beta - mu))) / 2
/// ```
///
/// i.e. the roots of `l^2 + (k - gain mu) l + (beta - mu)`.
fn mode_pair(beta: f64, k: f64, gain: f64, mu: f64) -> [Complex64; 2] {
    quadratic_roots(k - gain * mu, beta - mu)
}

/// Spectrum of the averaged Jacobian at the center: `-k/2 +- sqrt(k^2 - 4 beta)/2`,
/// each with multiplicity two.
pub fn spectrum_single(params: &SystemParams) -> Spectrum {
    let pair = mode_pair(restoring_stiffness(params), params.damping, 0.0, 0.0);
    Spectrum::from_unsorted(vec![pair[0], pair[1], pair[0], pair[1]])
}

/// Degree matrix minus adjacency matrix.
pub fn laplacian(graph: &InteractionGraph) -> DMatrix<f64> {
    let n = graph.node_count();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}

/// One axis block of the consensus-coupled averaged Jacobian,
/// `[[0, I], [-beta I - L, -k I - gain L]]`.
pub fn consensus_block(beta: f64, k: f64, gain: f64, graph: &InteractionGraph) -> DMatrix<f64> {
    let n = graph.node_count();
    let l = laplacian(graph);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, n), (n, n)).copy_from(&eye);
    b.view_mut((n, 0), (n, n)).copy_from(&(-(&eye * beta) - &l));
    b.view_mut((n, n), (n, n)).copy_from(&(-(&eye * k) - &l * gain));
    b
}

/// Eigenvalues of `-L`, ascending (all `<= 0`).
pub fn neg_laplacian_eigenvalues(graph: &InteractionGraph) -> Vec<f64> {
    if graph.node_count() == 0 {
        return Vec::new();
    }
    let mut mu: Vec<f64> = SymmetricEigen::new(-laplacian(graph)).eigenvalues.iter().copied().collect();
    mu.sort_by(f64::total_cmp);
    mu
}

/// Closed-form spectrum of the consensus-coupled Jacobian for explicit
/// `(beta, k, gain)`: `4n` eigenvalues over the two identical axis blocks.
pub fn consensus_spectrum(beta: f64, k: f64, gain: f64, graph: &InteractionGraph) -> Spectrum {
    let mut eig = Vec::with_capacity(4 * graph.node_count());
    for _block in 0..2 {
        for &mu in &neg_laplacian_eigenvalues(graph) {
            eig.extend(mode_pair(beta, k, gain, mu));
        }
    }
    Spectrum::from_unsorted(eig)
}

pub fn spectrum_consensus(params: &SystemParams, graph: &InteractionGraph, gain: f64) -> Spectrum {
    consensus_spectrum(restoring_stiffness(params), params.damping, gain, graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Negated spectral abscissa of the averaged Jacobian.
    pub margin: f64,
}

pub fn is_confinement_stable(params: &SystemParams) -> StabilityVerdict {
    let stable = params.amplitude > 0.0 && params.alpha > 1.0 && params.damping > 0.0;
    StabilityVerdict { stable, margin: -spectrum_single(params).abscissa() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(a: f64, alpha: f64, k: f64) -> SystemParams {
        SystemParams {
            amplitude: a,
            damping: k,
            alpha,
            omega: 10.0,
            horizon: 40.0 * PI,
            radius: 1.0,
            followers: 1,
            phase: 0.0,
        }
    }

    #[test]
    fn field_vanishes_at_center() {
        let f = averaged_field(&AveragedState::default(), &params(1.0, 10.0, 0.05), 256).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn field_at_center_with_velocity() {
        let p = params(1.0, 10.0, 0.05);
        let f = averaged_field(&AveragedState::new(0.0, 1.0, 0.0, 0.0), &p, 256).unwrap();
        assert_relative_eq!(f[0], 1.0);
        assert_relative_eq!(f[1], -0.05, epsilon = 1e-15);
        assert!(f[2].abs() < 1e-15 && f[3].abs() < 1e-15);
    }

    #[test]
    fn field_off_center_matches_fine_quadrature() {
        let p = params(1.0, 2.0, 1.0);
        let s = AveragedState::new(0.5, 0.0, 0.0, 0.0);
        let coarse = averaged_field(&s, &p, 256).unwrap();
        let fine = averaged_field(&s, &p, 1 << 16).unwrap();
        assert_eq!(coarse[3], 0.0);
        assert!((coarse[1] - fine[1]).abs() < 1e-10);
        // restoring: pushes back toward the center
        assert!(coarse[1] < 0.0);
    }

    #[test]
    fn field_guards() {
        let p = params(1.0, 2.0, 1.0);
        assert!(matches!(
            averaged_field(&AveragedState::new(0.95, 0.0, 0.0, 0.0), &p, 256),
            Err(AveragingError::TooCloseToOrbit { .. })
        ));
        assert_eq!(averaged_field(&AveragedState::default(), &p, 100), Err(AveragingError::InvalidNodes(100)));
        assert_eq!(averaged_field(&AveragedState::default(), &p, 8), Err(AveragingError::InvalidNodes(8)));
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(jacobian_origin(&params(1.0, 10.0, 0.05))[(1, 0)], -9.0);
        let j = jacobian_origin(&params(2.0, 1.0, 0.3));
        assert_eq!(j[(1, 0)], 0.0);
        assert_eq!(j[(3, 2)], 0.0);
    }

    #[test]
    fn numeric_jacobian_of_linear_and_constant_fields() {
        let m = Matrix4::new(1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0, 4.0, -2.0, 1.0, 0.0, 0.0);
        let lin = |s: &AveragedState| Ok::<_, ()>(m * s.to_vector());
        let j = numeric_jacobian(lin, &AveragedState::new(0.1, -0.2, 0.3, 0.4), 1e-3).unwrap();
        assert!((j - m).abs().max() < 1e-12);
        let konst = |_: &AveragedState| Ok::<_, ()>(Vector4::new(1.0, 2.0, 3.0, 4.0));
        let j = numeric_jacobian(konst, &AveragedState::default(), 1e-3).unwrap();
        assert_eq!(j, Matrix4::zeros());
    }

    #[test]
    fn numeric_jacobian_propagates_errors() {
        let p = params(1.0, 2.0, 1.0);
        let r = numeric_jacobian(|s| averaged_field(s, &p, 256), &AveragedState::new(0.9, 0.0, 0.0, 0.0), 1e-3);
        assert!(r.is_err());
    }

    #[test]
    fn single_spectrum_examples() {
        let s = spectrum_single(&params(1.0, 10.0, 0.05));
        assert_eq!(s.eigenvalues.len(), 4);
        for l in &s.eigenvalues {
            assert_relative_eq!(l.re, -0.025, epsilon = 1e-15);
            assert_relative_eq!(l.im.abs(), 2.999_895_831_5, epsilon = 1e-9);
        }
        assert!(s.hurwitz);

        let s = spectrum_single(&params(1.0, 1.25, 2.0));
        let r3 = 3f64.sqrt() / 2.0;
        assert_relative_eq!(s.eigenvalues[0].re, -1.0 - r3, epsilon = 1e-14);
        assert_relative_eq!(s.eigenvalues[3].re, -1.0 + r3, epsilon = 1e-14);
        assert!(s.eigenvalues.iter().all(|l| l.im == 0.0));

        let s = spectrum_single(&params(1.0, 1.0, 0.7));
        assert!(!s.hurwitz);
        assert_eq!(s.abscissa(), 0.0);
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(laplacian(&InteractionGraph::edgeless(3)), DMatrix::zeros(3, 3));
        let l2 = laplacian(&InteractionGraph::new(2, [(0, 1)]).unwrap());
        assert_eq!(l2, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let k3 = InteractionGraph::complete(3);
        let l3 = laplacian(&k3);
        assert!((0..3).all(|i| l3[(i, i)] == 2.0));
        let mu = neg_laplacian_eigenvalues(&k3);
        assert_relative_eq!(mu[0], -3.0, epsilon = 1e-12);
        assert_relative_eq!(mu[1], -3.0, epsilon = 1e-12);
        assert_relative_eq!(mu[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn edgeless_consensus_reduces_to_single() {
        let p = params(1.3, 3.0, 0.4);
        let single = spectrum_single(&p);
        let cons = spectrum_consensus(&p, &InteractionGraph::edgeless(1), 2.0);
        assert_eq!(single, cons);
        let cons3 = spectrum_consensus(&p, &InteractionGraph::edgeless(3), 2.0);
        assert_eq!(cons3.eigenvalues.len(), 12);
        for l in &cons3.eigenvalues {
            assert!(single.eigenvalues.iter().any(|m| (l - m).norm() < 1e-14));
        }
    }

    #[test]
    fn stability_predicate() {
        let v = is_confinement_stable(&params(1.0, 5.0, 0.03));
        assert!(v.stable);
        assert_relative_eq!(v.margin, 0.015, epsilon = 1e-15);
        assert!(!is_confinement_stable(&params(1.0, 0.5, 0.03)).stable);
        assert!(!is_confinement_stable(&params(1.0, 5.0, 0.0)).stable);
    }

    #[test]
    fn stiffness_scales_with_radius() {
        let mut p = params(crate::dynamics::amplitude_for_radius(38.0, 4.0), 4.0, 1.0);
        p.radius = 38.0;
        assert_relative_eq!(restoring_stiffness(&p), 3.0 / 38.0, max_relative = 1e-14);
        let num = numeric_jacobian(|s| averaged_field(s, &p, 1024), &AveragedState::default(), 1e-3).unwrap();
        assert!((num - jacobian_origin(&p)).abs().max() < 1e-8);
    }
}
