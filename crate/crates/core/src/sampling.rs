//! Deterministic low-discrepancy sampling on spheres and balls of C^n.
//!
//! Points come from the additive Kronecker sequence with the generalized
//! golden ratio, pushed through a Box-Muller map and normalized. The seed
//! offsets the sequence start, so a (seed, count) pair fully determines every
//! sample.

use crate::C64;

/// Generalized golden ratio: the positive root of x^{d+1} = x + 1.
fn phi(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// i-th point of the d-dimensional Kronecker sequence in [0,1)^d.
fn kronecker_point(d: usize, i: u64, out: &mut [f64]) {
    let g = phi(d);
    for (j, slot) in out.iter_mut().enumerate().take(d) {
        let alpha = 1.0 / g.powi(j as i32 + 1);
        let v = 0.5 + alpha * (i as f64 + 1.0);
        *slot = v - v.floor();
    }
}

/// 2n standard Gaussians from n pairs of uniforms via Box-Muller.
fn gaussians(uniforms: &[f64], out: &mut [f64]) {
    for p in 0..uniforms.len() / 2 {
        let u1 = uniforms[2 * p].max(1e-12);
        let u2 = uniforms[2 * p + 1];
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out[2 * p] = r * theta.cos();
        out[2 * p + 1] = r * theta.sin();
    }
}

/// `count` quasi-random points on the sphere of the given radius in C^n.
pub fn sphere_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let d = 2 * n;
    let mut uni = vec![0.0; d];
    let mut gau = vec![0.0; d];
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        kronecker_point(d, seed.wrapping_mul(0x9e3779b9).wrapping_add(i), &mut uni);
        i += 1;
        gaussians(&uni, &mut gau);
        let norm: f64 = gau.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let pt: Vec<C64> = (0..n)
            .map(|j| C64::new(gau[2 * j] / norm * radius, gau[2 * j + 1] / norm * radius))
            .collect();
        out.push(pt);
    }
    out
}

/// `count` quasi-random points in the open ball of the given radius.
pub fn ball_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let d = 2 * n + 1;
    let mut uni = vec![0.0; d];
    let mut gau = vec![0.0; d - 1];
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        kronecker_point(d, seed.wrapping_mul(0x2545f491).wrapping_add(i), &mut uni);
        i += 1;
        gaussians(&uni[..d - 1], &mut gau);
        let norm: f64 = gau.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let r = radius * uni[d - 1].powf(1.0 / (d as f64 - 1.0));
        let pt: Vec<C64> = (0..n)
            .map(|j| C64::new(gau[2 * j] / norm * r, gau[2 * j + 1] / norm * r))
            .collect();
        out.push(pt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_have_requested_norm() {
        for n in [2usize, 3] {
            let pts = sphere_points(n, 0.7, 50, 3);
            assert_eq!(pts.len(), 50);
            for p in pts {
                assert!((crate::vec_norm(&p) - 0.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sphere_points(2, 0.5, 20, 11);
        let b = sphere_points(2, 0.5, 20, 11);
        assert_eq!(a, b);
        let c = sphere_points(2, 0.5, 20, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn ball_points_inside() {
        let pts = ball_points(3, 0.9, 100, 5);
        for p in pts {
            assert!(crate::vec_norm(&p) < 0.9 + 1e-12);
        }
    }
}
