//! Hyperbolic geometry of the upper half-plane and the unit disc.
//!
//! The contraction analysis of the disordered recursion is carried out in the
//! semi-metric γ(g,h) = |g−h|²/(Im g · Im h) on ℍ, which equals twice the
//! pseudo-distance δ(u,v) = 2|u−v|²/((1−|u|²)(1−|v|²)) on 𝔻 after a Cayley
//! transform. Both are provided here, together with the two explicit
//! perturbation bounds used by the diagnostics (a multiplier bound on 𝔻 and
//! an additive-shift bound on ℍ).

use num_complex::Complex64;

/// γ(g,h) = |g−h|² / (Im g · Im h) for g, h in the open upper half-plane.
pub fn gamma_metric(g: Complex64, h: Complex64) -> f64 {
    (g - h).norm_sqr() / (g.im * h.im)
}

/// δ(u,v) = 2|u−v|² / ((1−|u|²)(1−|v|²)) for u, v in the open unit disc.
pub fn disc_delta(u: Complex64, v: Complex64) -> f64 {
    2.0 * (u - v).norm_sqr() / ((1.0 - u.norm_sqr()) * (1.0 - v.norm_sqr()))
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cayley transform ℍ → 𝔻, z ↦ (z−i)/(z+i).
pub fn cayley(z: Complex64) -> Complex64 {
    (z - I) / (z + I)
}

/// Inverse Cayley transform 𝔻 → ℍ, u ↦ i(1+u)/(1−u).
pub fn cayley_inv(u: Complex64) -> Complex64 {
    I * (1.0 + u) / (1.0 - u)
}

/// Coefficient C_K(t) = 8t/(1−r_K)² of the disc multiplier bound
///
///   δ(λ₁u, λ₂v) ≤ (|λ₁|² + C_K(|λ₁−λ₂|)) δ(u,v) + C_K(|λ₁−λ₂|)
///
/// valid for u in the closed disc of radius r_K < 1, v ∈ 𝔻 and |λᵢ| ≤ 1.
pub fn multiplier_bound_coeff(r_k: f64, t: f64) -> f64 {
    8.0 * t / ((1.0 - r_k) * (1.0 - r_k))
}

/// Coefficient c_g(w) = 4|w|/Im g + 4|w|²/(Im g)² of the shift bound
///
///   max{γ(g, h+w), γ(g+w, h)} ≤ (1 + c_g(w)) γ(g,h) + c_g(w)
///
/// valid for g, h, w all in ℍ.
pub fn shift_bound_coeff(g: Complex64, w: Complex64) -> f64 {
    let r = w.norm() / g.im;
    4.0 * r + 4.0 * r * r
}

/// Checks the disc multiplier bound on one input tuple; returns the slack
/// (nonnegative when the bound holds).
pub fn multiplier_bound_slack(
    r_k: f64,
    u: Complex64,
    v: Complex64,
    l1: Complex64,
    l2: Complex64,
) -> f64 {
    let c = multiplier_bound_coeff(r_k, (l1 - l2).norm());
    (l1.norm_sqr() + c) * disc_delta(u, v) + c - disc_delta(l1 * u, l2 * v)
}

/// Checks the half-plane shift bound on one input triple; returns the slack.
pub fn shift_bound_slack(g: Complex64, h: Complex64, w: Complex64) -> f64 {
    let c = shift_bound_coeff(g, w);
    let lhs = gamma_metric(g, h + w).max(gamma_metric(g + w, h));
    (1.0 + c) * gamma_metric(g, h) + c - lhs
}

/// Numerically stable pairwise summation; the Monte Carlo accumulators use
/// this so results do not depend on worker chunking.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
