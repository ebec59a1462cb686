//! Single-click backbone link between two SPDC+memory nodes.

use crate::error::{Error, Result};
use crate::model::{BbElements, HardwareParams};

/// Backbone efficiency over distance `l_km` split into `segments` (4 with a central repeater, 2 without).
pub fn eta_bb(l_km: f64, segments: u32, params: &HardwareParams) -> Result<f64> {
    if segments != 2 && segments != 4 {
        return Err(Error::InvalidParam { name: "segments", reason: format!("{segments} not in {{2,4}}") });
    }
    if !(l_km >= 0.0) {
        return Err(Error::InvalidParam { name: "l_km", reason: format!("{l_km} must be >= 0") });
    }
    Ok(params.eta_bb_intrinsic * (-l_km / (segments as f64 * params.l_att_km)).exp())
}

/// Click probability of one detector port up to second order.
pub fn bb_click_probability(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> f64 {
    params.w_bb() * eta_bb * p_bb * (1.0 + (2.0 - 3.0 * eta_bb) * p_bb) + params.p_dark()
}

/// Non-normalized elements P*B_k for one click port.
pub fn bb_state_unnormalized(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> BbElements {
    let x = params.w_bb();
    let em = params.eta_m;
    let single = eta_bb * p_bb * (1.0 - p_bb);
    let double = eta_bb / 2.0 * p_bb * p_bb * (1.0 - eta_bb);
    BbElements {
        b0: x * (single + 6.0 * (1.0 - em) * double) * (1.0 - em) + params.p_dark(),
        b1: x * (single + 10.0 * (1.0 - em) * double) * em,
        b1p: x * double * em * (1.0 - em) * 2.0,
        b2: x * double * em * em,
    }
}

/// Normalized first-order backbone elements.
pub fn bb_state(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> Result<BbElements> {
    let em = params.eta_m;
    let dark = params.p_dark() / (params.w_bb() * eta_bb * p_bb);
    let b1 = em * (1.0 + (2.0 - 5.0 * em) * (1.0 - eta_bb) * p_bb - dark);
    if b1 < 0.0 {
        return Err(Error::PerturbationBreakdown("B1", b1));
    }
    Ok(BbElements {
        b0: (1.0 - em) * (1.0 - 3.0 * em * (1.0 - eta_bb) * p_bb) + em * dark,
        b1,
        b1p: p_bb * (1.0 - eta_bb) * em * (1.0 - em),
        b2: 0.5 * p_bb * (1.0 - eta_bb) * em * em,
    })
}

/// Single-attempt success probability, summed over both ports and the time-bin.
pub fn bb_success_raw(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> f64 {
    2.0 * eta_bb * p_bb * (1.0 + (2.0 - 3.0 * eta_bb) * p_bb)
        + 2.0 * params.t_bb_s * params.dark_rate_hz
}

/// Single-attempt success probability clamped to [0, 1].
pub fn bb_success(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> f64 {
    bb_success_raw(params, eta_bb, p_bb).clamp(0.0, 1.0)
}

/// Success probability of one round with `n_bb` multiplexed attempts.
pub fn bb_success_multiplexed(p_single: f64, n_bb: u32) -> f64 {
    1.0 - (1.0 - p_single.clamp(0.0, 1.0)).powi(n_bb as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HardwareParams {
        HardwareParams::from_intrinsic(0.8, 0.5)
    }

    #[test]
    fn eta_bb_examples() {
        let p = params();
        assert_eq!(eta_bb(0.0, 4, &p).unwrap(), 0.8);
        let l = 4.0 * p.l_att_km;
        assert!((eta_bb(l, 4, &p).unwrap() - 0.8 / std::f64::consts::E).abs() < 1e-15);
        let v = eta_bb(100.0, 4, &p).unwrap();
        assert!((v - 0.2530).abs() < 5e-5);
        let mut q = p.clone();
        q.l_att_km = 21.7;
        let v = eta_bb(100.0, 4, &q).unwrap();
        assert!((v - 0.8 * (-100.0f64 / 86.8).exp()).abs() < 1e-15);
        assert!(eta_bb(10.0, 3, &p).is_err());
    }

    #[test]
    fn ideal_limit_is_bell_pair() {
        let mut p = params();
        p.eta_m = 1.0;
        p.dark_rate_hz = 0.0;
        let b = bb_state(&p, 0.3, 1e-9).unwrap();
        assert!((b.b1 - 1.0).abs() < 1e-8);
        assert!(b.b0.abs() < 1e-12 && b.b1p < 1e-8 && b.b2 < 1e-8);
    }

    #[test]
    fn lossless_backbone_has_no_wrong_parity() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let b = bb_state(&p, 1.0, 1e-2).unwrap();
        assert_eq!(b.b1p, 0.0);
        assert_eq!(b.b2, 0.0);
    }

    #[test]
    fn click_probability_examples() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let g = 0.05;
        let v = bb_click_probability(&p, 2.0 / 3.0, g);
        assert!((v - p.w_bb() * (2.0 / 3.0) * g).abs() < 1e-18);
        let p2 = params();
        assert_eq!(bb_click_probability(&p2, 0.5, 0.0), p2.p_dark());
    }

    #[test]
    fn success_examples() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let lead = bb_success(&p, 0.4, 1e-7);
        assert!((lead / (2.0 * 0.4 * 1e-7) - 1.0).abs() < 1e-6);
        assert!((bb_success_multiplexed(0.01, 1) - 0.01).abs() < 1e-15);
        assert!((bb_success_multiplexed(1e-3, 1000) - 0.632).abs() < 1e-3);
        assert_eq!(bb_success(&p, 0.5, 0.8), 1.0);
    }

    #[test]
    fn negative_b1_is_breakdown() {
        let mut p = params();
        p.dark_rate_hz = 1e9;
        assert!(matches!(bb_state(&p, 0.01, 1e-6), Err(Error::PerturbationBreakdown("B1", _))));
    }

    #[test]
    fn dark_counts_shift_weight_to_vacuum() {
        let mut p = params();
        let b_low = bb_state(&p, 0.3, 1e-3).unwrap();
        p.dark_rate_hz *= 10.0;
        let b_high = bb_state(&p, 0.3, 1e-3).unwrap();
        assert!(b_high.b1 < b_low.b1);
        assert!(b_high.b0 > b_low.b0);
    }

    #[test]
    fn normalized_forms_sum_to_one_at_first_order() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let b = bb_state(&p, 0.3, 1e-4).unwrap();
        assert!((b.trace() - 1.0).abs() < 1e-7);
    }
}
