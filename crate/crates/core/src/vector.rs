//! Small helpers for complex vectors stored as slices.

use num_complex::Complex64;

/// `⟨x, y⟩ = Σ x_i conj(y_i)`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    norm_sqr(x).sqrt()
}

pub fn norm_l1(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).sum()
}

pub fn norm_inf(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn dist(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// `‖x − y‖ / ‖y‖`, or the absolute distance when `y = 0`.
pub fn rel_dist(x: &[Complex64], y: &[Complex64]) -> f64 {
    let d = dist(x, y);
    let n = norm(y);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Circular shift: `out[l] = x[(l - shift) mod n]`.
pub fn circshift(x: &[Complex64], shift: usize) -> Vec<Complex64> {
    let n = x.len();
    (0..n).map(|l| x[(l + n - shift % n) % n]).collect()
}

/// Kronecker product `a ⊗ b` (index of `b` runs fastest).
pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ai in a {
        out.extend(b.iter().map(|bj| ai * bj));
    }
    out
}
