//! One-variable normalized starlike maps used by the Roper-Suffridge type
//! extension: f(0) = 0, f'(0) = 1.

use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneVarMap {
    Identity,
    /// Koebe map z / (1 - z)^2.
    Koebe,
}

impl OneVarMap {
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            OneVarMap::Identity => z,
            OneVarMap::Koebe => {
                let d = C64::new(1.0, 0.0) - z;
                z / (d * d)
            }
        }
    }

    pub fn deriv(&self, z: C64) -> C64 {
        match self {
            OneVarMap::Identity => C64::new(1.0, 0.0),
            OneVarMap::Koebe => {
                let d = C64::new(1.0, 0.0) - z;
                (C64::new(1.0, 0.0) + z) / (d * d * d)
            }
        }
    }

    /// p(z) = f(z) / (z f'(z)), extended by continuity to p(0) = 1.
    pub fn p(&self, z: C64) -> C64 {
        match self {
            OneVarMap::Identity => C64::new(1.0, 0.0),
            OneVarMap::Koebe => (C64::new(1.0, 0.0) - z) / (C64::new(1.0, 0.0) + z),
        }
    }

    pub fn p_deriv(&self, z: C64) -> C64 {
        match self {
            OneVarMap::Identity => C64::new(0.0, 0.0),
            OneVarMap::Koebe => {
                let d = C64::new(1.0, 0.0) + z;
                C64::new(-2.0, 0.0) / (d * d)
            }
        }
    }

    /// (f(z)/z)^alpha (f'(z))^beta with principal branches, positive at 0.
    ///
    /// For the built-ins f(z)/z and f'(z) never vanish on the disc and stay
    /// in the cut plane, so the principal logarithm is well defined.
    pub fn rs_weight(&self, z: C64, alpha: f64, beta: f64) -> C64 {
        match self {
            OneVarMap::Identity => C64::new(1.0, 0.0),
            OneVarMap::Koebe => {
                // f/z = (1-z)^{-2}, f' = (1+z)(1-z)^{-3}
                let lm = (C64::new(1.0, 0.0) - z).ln();
                let lp = (C64::new(1.0, 0.0) + z).ln();
                ((-2.0 * alpha - 3.0 * beta) * lm + beta * lp).exp()
            }
        }
    }

    /// Logarithmic derivative of the weight: w'(z)/w(z).
    pub fn rs_weight_log_deriv(&self, z: C64, alpha: f64, beta: f64) -> C64 {
        match self {
            OneVarMap::Identity => C64::new(0.0, 0.0),
            OneVarMap::Koebe => {
                (2.0 * alpha + 3.0 * beta) / (C64::new(1.0, 0.0) - z)
                    + beta / (C64::new(1.0, 0.0) + z)
            }
        }
    }

    /// Taylor coefficients c_1..=c_order of f (c_1 = 1).
    pub fn series(&self, order: usize) -> Vec<f64> {
        match self {
            OneVarMap::Identity => {
                let mut v = vec![0.0; order];
                if order >= 1 {
                    v[0] = 1.0;
                }
                v
            }
            // Koebe: z/(1-z)^2 = sum k z^k
            OneVarMap::Koebe => (1..=order).map(|k| k as f64).collect(),
        }
    }

    /// Taylor coefficients g_0..=g_order of the weight (f/z)^alpha (f')^beta.
    pub fn rs_weight_series(&self, alpha: f64, beta: f64, order: usize) -> Vec<f64> {
        match self {
            OneVarMap::Identity => {
                let mut v = vec![0.0; order + 1];
                v[0] = 1.0;
                v
            }
            OneVarMap::Koebe => {
                // (1-z)^{-p} (1+z)^{q} with p = 2 alpha + 3 beta, q = beta
                let p = 2.0 * alpha + 3.0 * beta;
                let q = beta;
                let mut neg = vec![0.0; order + 1]; // (1-z)^{-p}
                neg[0] = 1.0;
                for j in 1..=order {
                    neg[j] = neg[j - 1] * (p + j as f64 - 1.0) / j as f64;
                }
                let mut pos = vec![0.0; order + 1]; // (1+z)^{q}
                pos[0] = 1.0;
                for j in 1..=order {
                    pos[j] = pos[j - 1] * (q - j as f64 + 1.0) / j as f64;
                }
                (0..=order)
                    .map(|j| (0..=j).map(|i| neg[i] * pos[j - i]).sum())
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn koebe_consistency() {
        let z = c(0.3, 0.2);
        let f = OneVarMap::Koebe;
        // p = f/(z f')
        let p = f.eval(z) / (z * f.deriv(z));
        assert!((p - f.p(z)).norm() < 1e-14);
        // p' by finite differences
        let eps = 1e-6;
        let fd = (f.p(z + c(eps, 0.0)) - f.p(z - c(eps, 0.0))) / c(2.0 * eps, 0.0);
        assert!((fd - f.p_deriv(z)).norm() < 1e-8);
    }

    #[test]
    fn weight_matches_direct_powers() {
        let f = OneVarMap::Koebe;
        let z = c(0.25, -0.3);
        let (alpha, beta) = (1.5, 0.5);
        let direct = (f.eval(z) / z).powf(alpha) * f.deriv(z).powf(beta);
        let w = f.rs_weight(z, alpha, beta);
        assert!((w - direct).norm() < 1e-12);
        // log derivative by finite differences
        let eps = 1e-6;
        let fd = (f.rs_weight(z + c(eps, 0.0), alpha, beta)
            - f.rs_weight(z - c(eps, 0.0), alpha, beta))
            / (c(2.0 * eps, 0.0) * w);
        assert!((fd - f.rs_weight_log_deriv(z, alpha, beta)).norm() < 1e-7);
    }

    #[test]
    fn weight_series_matches_function() {
        let f = OneVarMap::Koebe;
        let (alpha, beta) = (1.5, 0.5);
        let series = f.rs_weight_series(alpha, beta, 24);
        // hand expansion: 1 + (2a + 4b) z + ...
        assert!((series[0] - 1.0).abs() < 1e-14);
        assert!((series[1] - (2.0 * alpha + 4.0 * beta)).abs() < 1e-12);
        let z = c(0.2, 0.1);
        let approx: C64 = series
            .iter()
            .enumerate()
            .map(|(j, &g)| c(g, 0.0) * z.powu(j as u32))
            .sum();
        let exact = f.rs_weight(z, alpha, beta);
        assert!((approx - exact).norm() < 1e-9);
    }
}
