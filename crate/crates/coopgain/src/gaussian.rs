//! Closed forms for the Gaussian MAC with binary fading:
//! `Y = S1 X1 + S2 X2 + Z` with `(S1,S2)` uniform on `{0,1}^2`, noise
//! variance `N`, and power constraints `E[X_i^2] <= P_i`.
//!
//! Everything here is closed-form in bits; there is no sampling and no
//! discretization. The gain lower bounds trade a correlation coefficient
//! `rho` (bought with `h(v1+v2)` bits of shared CF rate) against the
//! sum-rate improvement it yields.

use crate::gain::{classify_ratios, SlopeProfile, SlopeVerdict};
use serde::{Deserialize, Serialize};

/// Parameters of the binary-fading Gaussian MAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    /// Transmit power budgets (variance units); must be > 0.
    pub p1: f64,
    pub p2: f64,
    /// Noise variance; must be > 0.
    pub noise: f64,
    /// Budget direction (v1, v2); must be > 0.
    pub v: (f64, f64),
}

impl GaussianParams {
    pub fn new(p1: f64, p2: f64, noise: f64, v: (f64, f64)) -> Option<Self> {
        if p1 > 0.0 && p2 > 0.0 && noise > 0.0 && v.0 > 0.0 && v.1 > 0.0 {
            Some(Self { p1, p2, noise, v })
        } else {
            None
        }
    }

    fn vsum(&self) -> f64 {
        self.v.0 + self.v.1
    }
}

/// Gaussian-regime causality selector: the closed forms differ only between
/// the no-state and causal cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaussianTau {
    NoState,
    Causal,
}

/// Correlation coefficient bought with `h` bits along direction `v`:
/// solves `(1/2) log2 (1/(1-rho^2)) = h (v1+v2)`.
pub fn rho_from_h(h: f64, v: (f64, f64)) -> f64 {
    let hv = h * (v.0 + v.1);
    // rho = sqrt(1 - 2^(-2 hv)); exp_m1 keeps precision for tiny hv.
    let one_minus = -(-2.0 * hv * std::f64::consts::LN_2).exp_m1();
    one_minus.max(0.0).sqrt()
}

/// Sum-rate gain lower bound (bits per channel use) at budget `h v`.
///
/// NoState: `(1/8) log2(1 + 2 rho sqrt(P1 P2) / (P1+P2+N)) - h(v1+v2)`.
/// Causal:  `(1/8) log2(1 + 4 rho sqrt(P1 P2) / (2P1+2P2+N)) - h(v1+v2)`.
pub fn gaussian_gain_bound(p: &GaussianParams, tau: GaussianTau, h: f64) -> f64 {
    let rho = rho_from_h(h, p.v);
    let cross = (p.p1 * p.p2).sqrt();
    let boost = match tau {
        GaussianTau::NoState => 2.0 * rho * cross / (p.p1 + p.p2 + p.noise),
        GaussianTau::Causal => 4.0 * rho * cross / (2.0 * p.p1 + 2.0 * p.p2 + p.noise),
    };
    (1.0 + boost).log2() / 8.0 - h * p.vsum()
}

/// No-cooperation sum-rate baseline with independent Gaussian inputs:
/// `(1/8) [log2(1+P1/N) + log2(1+P2/N) + log2(1+(P1+P2)/N)]`.
pub fn gaussian_baseline(p: &GaussianParams) -> f64 {
    ((1.0 + p.p1 / p.noise).log2()
        + (1.0 + p.p2 / p.noise).log2()
        + (1.0 + (p.p1 + p.p2) / p.noise).log2())
        / 8.0
}

/// Gain/h ratio ladder on `h = h0 * 2^-k`, `k = 0..=halvings`.
pub fn gaussian_slope_profile(
    p: &GaussianParams,
    tau: GaussianTau,
    h0: f64,
    halvings: usize,
) -> SlopeProfile {
    assert!(halvings >= 4, "need at least 4 halvings");
    let mut grid = Vec::with_capacity(halvings + 1);
    let mut gains = Vec::with_capacity(halvings + 1);
    let mut ratios = Vec::with_capacity(halvings + 1);
    for k in 0..=halvings {
        let h = h0 * (0.5f64).powi(k as i32);
        let g = gaussian_gain_bound(p, tau, h);
        grid.push(h);
        gains.push(g);
        ratios.push(g / h);
    }
    let verdict = classify_ratios(&gains, &ratios, halvings);
    SlopeProfile {
        grid,
        gains,
        ratios,
        verdict,
    }
}

/// Convenience: verdict of the default ladder.
pub fn diverges(p: &GaussianParams, tau: GaussianTau) -> bool {
    gaussian_slope_profile(p, tau, 1e-2, 20).verdict == SlopeVerdict::Diverges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> GaussianParams {
        GaussianParams::new(1.0, 1.0, 1.0, (0.5, 0.5)).unwrap()
    }

    #[test]
    fn rho_examples() {
        let p = unit();
        assert_eq!(rho_from_h(0.0, p.v), 0.0);
        // h(v1+v2) = 0.5 -> rho = sqrt(1 - 2^-1)
        assert!((rho_from_h(0.5, p.v) - 0.5f64.sqrt()).abs() < 1e-12);
        // h(v1+v2) = 1e-6 (frozen from the closed form)
        assert!((rho_from_h(1e-6, p.v) - 1.1774096144563738e-3).abs() < 1e-12);
    }

    #[test]
    fn rho_round_trip() {
        let p = unit();
        for &h in &[1e-12, 1e-9, 1e-6, 1e-3, 0.1, 0.5, 2.0] {
            let rho = rho_from_h(h, p.v);
            let back = 0.5 * (1.0 / (1.0 - rho * rho)).log2() / p.vsum();
            assert!((back - h).abs() < 1e-12 * h.max(1.0), "h={h} back={back}");
        }
    }

    #[test]
    fn gain_examples() {
        let p = unit();
        assert_eq!(gaussian_gain_bound(&p, GaussianTau::NoState, 0.0), 0.0);
        // frozen from an exact evaluation of the displayed bound
        let g6 = gaussian_gain_bound(&p, GaussianTau::NoState, 1e-6);
        assert!((g6 - 1.4049805786027054e-4).abs() < 1e-12, "got {g6:e}");
        let g8 = gaussian_gain_bound(&p, GaussianTau::NoState, 1e-8);
        assert!((g8 - 1.4144807762593336e-5).abs() < 1e-13, "got {g8:e}");
    }

    #[test]
    fn baseline_examples() {
        let p = unit();
        let b = gaussian_baseline(&p);
        assert!((b - (2.0 + 3.0f64.log2()) / 8.0).abs() < 1e-12);
        assert!((b - 0.44812031259014452).abs() < 1e-12);

        // SNR invariance
        let scaled = GaussianParams::new(3.0, 3.0, 3.0, (0.5, 0.5)).unwrap();
        assert!((gaussian_baseline(&scaled) - b).abs() < 1e-12);

        // vanishing power
        let tiny = GaussianParams::new(1e-12, 1e-12, 1.0, (0.5, 0.5)).unwrap();
        assert!(gaussian_baseline(&tiny) < 1e-9);
    }

    #[test]
    fn ratios_increase_and_follow_sqrt_law() {
        let p = unit();
        let prof = gaussian_slope_profile(&p, GaussianTau::NoState, 1e-2, 12);
        for k in 1..prof.ratios.len() {
            assert!(
                prof.ratios[k] > prof.ratios[k - 1],
                "ratio ladder must increase strictly"
            );
        }
        assert_eq!(prof.verdict, SlopeVerdict::Diverges);

        // x10 ratio growth per x100 shrink in h
        let r6 = gaussian_gain_bound(&p, GaussianTau::NoState, 1e-6) / 1e-6;
        let r8 = gaussian_gain_bound(&p, GaussianTau::NoState, 1e-8) / 1e-8;
        assert!((r8 / r6 / 10.0 - 1.0).abs() < 0.05, "r6={r6} r8={r8}");
    }

    #[test]
    fn causal_prefactor_beats_no_state() {
        let p = unit();
        for &h in &[1e-4, 1e-6, 1e-8] {
            let g0 = gaussian_gain_bound(&p, GaussianTau::NoState, h);
            let gt = gaussian_gain_bound(&p, GaussianTau::Causal, h);
            assert!(gt > g0, "h={h}: causal {gt} <= no-state {g0}");
        }
    }

    #[test]
    fn outputs_finite_over_wide_parameter_range() {
        for &scale in &[1e-6, 1e-3, 1.0, 1e3, 1e6] {
            let p = GaussianParams::new(scale, scale * 0.5, scale * 2.0, (0.25, 0.75)).unwrap();
            for &h in &[0.0, 1e-9, 1e-3, 1.0] {
                assert!(gaussian_gain_bound(&p, GaussianTau::NoState, h).is_finite());
                assert!(gaussian_gain_bound(&p, GaussianTau::Causal, h).is_finite());
            }
            assert!(gaussian_baseline(&p).is_finite());
        }
    }
}
