//! Mathematical constants, stored to 30 significant digits.

#![allow(clippy::approx_constant)]

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// π.
pub const PI: f64 = 3.14159265358979323846264338328;

/// Γ(1/4).
pub const GAMMA_QUARTER: f64 = 3.62560990822190831193068515587;

/// ζ(1/2).
pub const ZETA_HALF: f64 = -1.46035450880958681288949915252;

/// ζ(0).
pub const ZETA_ZERO: f64 = -0.5;

/// log(4π).
pub const LOG_4PI: f64 = 2.53102424696929079035052452745;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::zeta_real;

    // Γ(1/4)² = (2π)^{3/2} / AGM(1, √2)
    fn gamma_quarter_agm() -> f64 {
        let (mut a, mut b) = (1.0f64, 2.0f64.sqrt());
        for _ in 0..40 {
            let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
            a = an;
            b = bn;
        }
        ((2.0 * PI).powf(1.5) / a).sqrt()
    }

    #[test]
    fn pi_and_logs_agree_with_std() {
        assert_eq!(PI, std::f64::consts::PI);
        assert!((LOG_4PI - (4.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn gamma_quarter_matches_agm_and_reflection() {
        assert!((GAMMA_QUARTER - gamma_quarter_agm()).abs() < 1e-14);
        // Γ(1/4)Γ(3/4) = π√2
        let g34 = statrs::function::gamma::gamma(0.75);
        assert!((GAMMA_QUARTER * g34 - PI * 2.0f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn zeta_half_matches_accelerated_eta() {
        assert!((ZETA_HALF - zeta_real(0.5).unwrap()).abs() < 1e-14);
        assert!((ZETA_ZERO - zeta_real(0.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn euler_gamma_from_harmonic_numbers() {
        // H_n - log n - 1/(2n) + 1/(12 n^2) - 1/(120 n^4) -> γ
        let n = 1000.0f64;
        let h: f64 = (1..=1000).map(|k| 1.0 / k as f64).sum();
        let g = h - n.ln() - 0.5 / n + 1.0 / (12.0 * n * n) - 1.0 / (120.0 * n.powi(4));
        assert!((g - EULER_GAMMA).abs() < 1e-14);
    }
}
