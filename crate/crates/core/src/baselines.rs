//! Direct ion-ion links without memories and the deterministic ion-ion swap.

use crate::error::{Error, Result};
use crate::model::{BipartiteIonState, HardwareParams};

/// Non-normalized single-click elements P*{alpha, D} and the click probability P for one port.
pub fn direct_single_click_raw(params: &HardwareParams, eta_d: f64, p_ion: f64) -> (f64, BipartiteIonState) {
    let w = params.w_ion();
    let pd = params.p_dark();
    let coh = w * eta_d / 2.0 * p_ion * (1.0 - p_ion);
    let raw = BipartiteIonState::new(coh, pd, coh, coh, w * eta_d * (1.0 - eta_d) * p_ion * p_ion);
    let p = w * eta_d * p_ion * (1.0 - eta_d * p_ion) + pd;
    (p, raw)
}

/// Maps D00 and D11 onto their average; leaves the fidelity unchanged.
pub fn symmetrize(s: &BipartiteIonState) -> BipartiteIonState {
    let m = (s.d00 + s.d11) / 2.0;
    BipartiteIonState { d00: m, d11: m, ..*s }
}

/// Direct single-click link: success probability and the symmetrized normalized state.
pub fn direct_single_click(params: &HardwareParams, eta_d: f64, p_ion: f64) -> Result<(f64, BipartiteIonState)> {
    if !(p_ion > 0.0 && p_ion < 1.0) {
        return Err(Error::InvalidParam { name: "p_ion", reason: format!("{p_ion} not in (0, 1)") });
    }
    let (p, raw) = direct_single_click_raw(params, eta_d, p_ion);
    let (state, _) = raw.normalize()?;
    let success = (2.0 * p * params.t_a_s / params.detector_resolution_s).clamp(0.0, 1.0);
    Ok((success, symmetrize(&state)))
}

/// Non-normalized double-click elements for one click per rail at flat emission.
pub fn direct_double_click_raw(params: &HardwareParams, eta_d: f64) -> BipartiteIonState {
    let w = params.w_ion();
    let pd = params.p_dark();
    let ideal = (eta_d * w / 4.0).powi(2);
    let dark = pd * (1.0 - eta_d) * eta_d * w / 4.0 + pd * pd * (1.0 - eta_d).powi(2) / 4.0;
    BipartiteIonState::new(ideal, dark, ideal + dark, ideal + dark, dark)
}

/// Direct double-click link: success probability and normalized state.
pub fn direct_double_click(params: &HardwareParams, eta_d: f64) -> Result<(f64, BipartiteIonState)> {
    let raw = direct_double_click_raw(params, eta_d);
    let (state, t) = raw.normalize()?;
    let span = params.t_a_s / params.detector_resolution_s;
    Ok(((4.0 * span * span * t).clamp(0.0, 1.0), state))
}

/// Deterministic swap of two symmetric ion-ion links through a shared-trap repeater.
pub fn ion_swap(left: &BipartiteIonState, right: &BipartiteIonState) -> Result<BipartiteIonState> {
    for s in [left, right] {
        let tol = 1e-12 * s.trace().max(1.0);
        if !(s.alpha.re > 0.0) || s.alpha.im.abs() > tol {
            return Err(Error::Precondition(format!("alpha = {} must be real and positive", s.alpha)));
        }
        if (s.d01 - s.d10).abs() > tol || (s.d00 - s.d11).abs() > tol {
            return Err(Error::Precondition("needs D01 = D10 and D00 = D11; symmetrize first".into()));
        }
    }
    let (l, r) = (left, right);
    let raw = BipartiteIonState {
        alpha: l.alpha * r.alpha / 2.0,
        d01: (l.d01 * r.d01 + l.d00 * r.d00) / 2.0,
        d10: (l.d10 * r.d10 + l.d11 * r.d11) / 2.0,
        d00: (l.d01 * r.d00 + l.d00 * r.d01) / 2.0,
        d11: (l.d10 * r.d11 + l.d11 * r.d10) / 2.0,
    };
    Ok(raw.normalize()?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bell_fidelity;

    fn params() -> HardwareParams {
        HardwareParams::from_intrinsic(0.8, 0.5)
    }

    #[test]
    fn lossless_single_click_has_no_double_excitation() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let (_, raw) = direct_single_click_raw(&p, 1.0, 0.05);
        assert_eq!(raw.d11, 0.0);
    }

    #[test]
    fn single_click_fidelity_ignores_mode_amplitude() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        let (_, a) = direct_single_click(&p, 0.3, 0.02).unwrap();
        p.detector_resolution_s *= 7.0;
        let (_, b) = direct_single_click(&p, 0.3, 0.02).unwrap();
        assert!((bell_fidelity(&a).unwrap() - bell_fidelity(&b).unwrap()).abs() < 1e-15);
        // F = (1 - p) / (1 - eta p) for the stated elements.
        let want = 0.98 / (1.0 - 0.3 * 0.02);
        assert!((bell_fidelity(&a).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn double_click_ideal_without_dark_counts() {
        let mut p = params();
        p.dark_rate_hz = 0.0;
        for eta in [0.01, 0.1] {
            let (_, s) = direct_double_click(&p, eta).unwrap();
            assert!((bell_fidelity(&s).unwrap() - 1.0).abs() < 1e-15);
        }
        let (a, _) = direct_double_click(&p, 0.01).unwrap();
        let (b, _) = direct_double_click(&p, 0.1).unwrap();
        assert!((b / a - 100.0).abs() < 1e-9);
        assert!((b - 0.005).abs() < 1e-15);
    }

    #[test]
    fn ion_swap_keeps_ideal() {
        let b = BipartiteIonState::bell();
        assert_eq!(ion_swap(&b, &b).unwrap(), b);
    }

    #[test]
    fn ion_swap_doubles_small_errors() {
        let e = 1e-3 / 2.0;
        let s = BipartiteIonState::new(0.5 - e, e, 0.5 - e, 0.5 - e, e);
        let f_in = 1.0 - bell_fidelity(&s).unwrap();
        let out = ion_swap(&s, &s).unwrap();
        let f_out = 1.0 - bell_fidelity(&out).unwrap();
        assert!((f_out / f_in - 2.0).abs() < 0.05 * 2.0);
    }

    #[test]
    fn ion_swap_arithmetic() {
        let s = BipartiteIonState::new(0.4, 0.05, 0.45, 0.45, 0.05);
        let out = ion_swap(&s, &s).unwrap();
        // Raw: alpha 0.08, D01 0.1025, D00 0.0225, trace 0.25.
        assert!((out.alpha.re - 0.32).abs() < 1e-15);
        assert!((out.d01 - 0.41).abs() < 1e-15 && (out.d00 - 0.09).abs() < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ion_swap_rejects_asymmetric_input() {
        let s = BipartiteIonState::new(0.4, 0.02, 0.45, 0.45, 0.08);
        assert!(ion_swap(&s, &s).is_err());
        let n = BipartiteIonState::new(-0.4, 0.05, 0.45, 0.45, 0.05);
        assert!(ion_swap(&n, &n).is_err());
    }
}
