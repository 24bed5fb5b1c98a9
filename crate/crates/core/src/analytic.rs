//! Closed-form two-level description of noiseless Grover search.
//!
//! The register stays in span{|ω⟩, |r⟩} with |ψ_k⟩ = sin θ_k |ω⟩ + cos θ_k |r⟩,
//! θ_k = (2k+1)·asin(2^(−n/2)). For an equal bipartition the reduced density
//! matrix has rank two and its spectrum is available in closed form.

use crate::error::{GroverError, Result};
use crate::linalg::entropy_bits;

/// (n, k, θ_k) sample of the two-level rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelPoint {
    pub n: usize,
    pub k: usize,
    pub theta_k: f64,
}

impl TwoLevelPoint {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Ok(TwoLevelPoint { n, k, theta_k: grover_angle(n, k)? })
    }
}

/// Matrix elements and rank-two spectrum of the equal-cut reduced state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedSpectrum {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(GroverError::Domain(format!("need at least 2 qubits, got {n}")));
    }
    Ok(())
}

fn check_even(n: usize) -> Result<()> {
    check_n(n)?;
    if !n.is_multiple_of(2) {
        return Err(GroverError::Domain(format!("equal bipartition needs even n, got {n}")));
    }
    Ok(())
}

/// asin(2^(−n/2)), the half-angle of one Grover rotation.
pub fn base_angle(n: usize) -> f64 {
    (-(n as f64) / 2.0).exp2().asin()
}

/// θ_k = (2k+1)·asin(2^(−n/2)).
pub fn grover_angle(n: usize, k: usize) -> Result<f64> {
    check_n(n)?;
    Ok((2 * k + 1) as f64 * base_angle(n))
}

/// sin²θ_k.
pub fn ideal_success_probability(n: usize, k: usize) -> Result<f64> {
    let s = grover_angle(n, k)?.sin();
    Ok(s * s)
}

/// M = ⌊(π/4)·2^(n/2)⌋.
pub fn optimal_iterations(n: usize) -> usize {
    (std::f64::consts::FRAC_PI_4 * (n as f64 / 2.0).exp2()).floor() as usize
}

/// (α, β, γ) of the equal-cut reduced density matrix at angle θ.
pub fn reduced_dm_elements(n: usize, theta: f64) -> Result<(f64, f64, f64)> {
    check_even(n)?;
    let big_n = (n as f64).exp2();
    let root_n = (n as f64 / 2.0).exp2();
    let (s, co) = theta.sin_cos();
    // (√N − 1)/(N − 1) = 1/(√N + 1), evaluated without cancellation.
    let mixed = co * co / (root_n + 1.0);
    let alpha = mixed + s * s;
    let beta = mixed + co * s / (big_n - 1.0).sqrt();
    let gamma = root_n / (big_n - 1.0) * co * co;
    Ok((alpha, beta, gamma))
}

/// λ± = ½ ± ½·√[(α − (√N−1)γ)² + 4(√N−1)β²].
pub fn reduced_eigenvalues(n: usize, theta: f64) -> Result<(f64, f64)> {
    let (alpha, beta, gamma) = reduced_dm_elements(n, theta)?;
    let m = (n as f64 / 2.0).exp2() - 1.0;
    let d = alpha - m * gamma;
    let disc = (d * d + 4.0 * m * beta * beta).sqrt();
    let plus = 0.5 + 0.5 * disc;
    let mut minus = 0.5 - 0.5 * disc;
    if minus < 0.0 && minus >= -1e-12 {
        minus = 0.0;
    }
    Ok((plus, minus))
}

pub fn reduced_spectrum(n: usize, theta: f64) -> Result<ReducedSpectrum> {
    let (alpha, beta, gamma) = reduced_dm_elements(n, theta)?;
    let (lambda_plus, lambda_minus) = reduced_eigenvalues(n, theta)?;
    Ok(ReducedSpectrum { alpha, beta, gamma, lambda_plus, lambda_minus })
}

/// Equal-cut entanglement entropy in bits.
pub fn two_level_entropy(n: usize, theta: f64) -> Result<f64> {
    let (lp, lm) = reduced_eigenvalues(n, theta)?;
    Ok(entropy_bits(&[lp, lm]).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn angles() {
        assert!((grover_angle(2, 0).unwrap() - FRAC_PI_6).abs() < 1e-15);
        assert!((grover_angle(2, 1).unwrap() - FRAC_PI_2).abs() < 1e-15);
        // 51·asin(1/32), 40-digit reference 1.594009513474252888888664964...
        assert!((grover_angle(10, 25).unwrap() - 1.594_009_513_474_252_9).abs() < 1e-13);
        assert!(matches!(grover_angle(1, 0), Err(GroverError::Domain(_))));
        let pt = TwoLevelPoint::new(4, 2).unwrap();
        assert_eq!(pt.theta_k, 5.0 * 0.25f64.asin());
    }

    #[test]
    fn success_probabilities() {
        assert!((ideal_success_probability(2, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((ideal_success_probability(2, 0).unwrap() - 0.25).abs() < 1e-15);
        assert!((ideal_success_probability(10, 25).unwrap() - 0.999_461_244_744_407_9).abs() < 1e-13);
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(optimal_iterations(4), 3);
        assert_eq!(optimal_iterations(10), 25);
        assert_eq!(optimal_iterations(16), 201);
        assert_eq!(optimal_iterations(24), 3216);
    }

    #[test]
    fn reduced_elements() {
        let (a, b, g) = reduced_dm_elements(4, FRAC_PI_2).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && b.abs() < 1e-15 && g.abs() < 1e-15);
        let (a, b, g) = reduced_dm_elements(4, FRAC_PI_4).unwrap();
        assert!((a - 0.6).abs() < 1e-14);
        assert!((b - 0.229_099_444_873_580_56).abs() < 1e-14);
        assert!((g - 2.0 / 15.0).abs() < 1e-15);
        assert!(matches!(reduced_dm_elements(5, 0.3), Err(GroverError::Domain(_))));
    }

    #[test]
    fn reduced_eigs_and_entropy() {
        let (lp, lm) = reduced_eigenvalues(4, FRAC_PI_2).unwrap();
        assert!((lp - 1.0).abs() < 1e-15 && lm == 0.0);
        let (lp, lm) = reduced_eigenvalues(4, FRAC_PI_4).unwrap();
        assert!((lp - 0.909_218_360_932_336_9).abs() < 1e-13);
        assert!((lm - 0.090_781_639_067_663_1).abs() < 1e-13);
        assert!((two_level_entropy(4, FRAC_PI_4).unwrap() - 0.439_073_459_226_713_55).abs() < 1e-12);
        assert_eq!(two_level_entropy(4, FRAC_PI_2).unwrap(), 0.0);
    }

    #[test]
    fn large_register_limit() {
        let (lp, lm) = reduced_eigenvalues(40, FRAC_PI_4).unwrap();
        assert!((lp - 0.5).abs() < 1e-3 && (lm - 0.5).abs() < 1e-3);
        assert!((two_level_entropy(40, FRAC_PI_4).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn trace_identity_and_bounds() {
        for n in (2..=30).step_by(2) {
            for j in 0..50 {
                let theta = j as f64 * 0.07;
                let (a, _, g) = reduced_dm_elements(n, theta).unwrap();
                let m = (n as f64 / 2.0).exp2() - 1.0;
                assert!((a + m * g - 1.0).abs() < 1e-13, "n={n} theta={theta}");
                let (lp, lm) = reduced_eigenvalues(n, theta).unwrap();
                assert!((lp + lm - 1.0).abs() < 1e-13);
                assert!(0.0 <= lm && lm <= lp && lp <= 1.0);
                assert!(two_level_entropy(n, theta).unwrap() <= 1.0);
            }
        }
    }

    #[test]
    fn near_unity_peak() {
        for n in 4..=24 {
            let m = optimal_iterations(n);
            let p = ideal_success_probability(n, m).unwrap();
            assert!(p >= 1.0 - (-(n as f64) / 2.0).exp2(), "n={n} p={p}");
        }
    }
}
