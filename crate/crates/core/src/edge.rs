//! Edge-node ion/memory states for the single-click and double-click generation steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DualRailState, EnElements, HardwareParams};

/// Mixing angle of the heralded ion-memory state, stored as tan^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingAngle {
    pub tan2: f64,
}

impl MixingAngle {
    /// A vanishing angle means no SPDC contribution to the herald.
    pub fn is_degenerate(&self) -> bool {
        !(self.tan2 > 0.0)
    }

    pub fn sin2(&self) -> f64 {
        self.tan2 / (1.0 + self.tan2)
    }

    pub fn cos2(&self) -> f64 {
        1.0 / (1.0 + self.tan2)
    }
}

/// Second-order mixing angle for ion emission `p_ion` and SPDC emission `p_spdc`.
pub fn mixing_angle(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<MixingAngle> {
    if !(p_ion > 0.0) {
        return Err(Error::InvalidParam { name: "p_ion", reason: "must be positive".into() });
    }
    let tan2 = params.flux_ratio() * params.eta_prime * params.eta_m / params.eta * p_spdc / p_ion
        * (1.0 - p_ion + p_spdc);
    Ok(MixingAngle { tan2 })
}

/// Normalized first-order single-click EN elements.
pub fn en_single_state(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<EnElements> {
    let t = mixing_angle(params, p_ion, p_spdc)?.tan2;
    let em = params.eta_m;
    let eta = params.eta;
    let dark = params.p_dark() / (params.w_ion() * eta * p_ion);
    let r = t / (em + t);
    let a1 = em * (1.0 + t) / (em + t) * (1.0 - r * (1.0 - eta) * p_ion - 2.0 * em / (em + t) * dark);
    if a1 < 0.0 {
        return Err(Error::PerturbationBreakdown("A1", a1));
    }
    let a0 = (1.0 - em) * r * (1.0 - r * (1.0 - eta) * p_ion)
        + (1.0 - (1.0 - em) * r) / (em + t) * 2.0 * em * dark;
    Ok(EnElements {
        a0,
        a1,
        a1p: (1.0 - em) * (1.0 - eta) * p_ion * r,
        a2: em * (1.0 - eta) * p_ion * r,
        tan2: t,
    })
}

/// Non-normalized single-click elements P*A_k for one click port and the click probability P.
pub fn en_single_unnormalized(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<(EnElements, f64)> {
    let t = mixing_angle(params, p_ion, p_spdc)?.tan2;
    let (eta, etap, em) = (params.eta, params.eta_prime, params.eta_m);
    let w_nu = params.w_ion();
    let w_mu = params.w_spdc();
    let (a0sq, b0sq) = (1.0 - p_ion, 1.0 - p_spdc);
    let y = 1.0 + (1.0 - etap) * p_spdc;
    let ion = eta / 2.0 * w_nu * p_ion * b0sq;
    let spdc = etap / 2.0 * w_mu * a0sq * p_spdc;
    let double = etap * (1.0 - eta) / 2.0 * w_mu * p_ion * p_spdc;
    let pd = params.p_dark();
    let a2 = double * em;
    let el = EnElements {
        a0: y * spdc * (1.0 - em) + pd,
        a1: y * (ion + spdc * em),
        a1p: double * (1.0 - em),
        a2,
        tan2: t,
    };
    let p = y * (ion + spdc) + double + pd;
    Ok((el, p))
}

/// Success probability of one ion emission including the N-bin vacuum bookkeeping.
pub fn en_single_success(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<f64> {
    let t = mixing_angle(params, p_ion, p_spdc)?.tan2;
    let (eta, em) = (params.eta, params.eta_m);
    let q = t / em;
    let bins_over_flux = params.n_bins as f64 / params.flux_ratio();
    let p = eta * p_ion * ((1.0 + q) * (1.0 - eta * q * bins_over_flux * p_ion) + q * (1.0 - eta) * p_ion)
        + 2.0 * params.t_a_s * params.dark_rate_hz;
    Ok(p.clamp(0.0, 1.0))
}

/// Normalized double-click EN elements; the ion emits one photon split over two rails.
pub fn en_double_state(params: &HardwareParams, p_spdc: f64) -> Result<DualRailState> {
    if !(p_spdc > 0.0) {
        return Err(Error::InvalidParam { name: "p_spdc_en", reason: "must be positive".into() });
    }
    let (eta, etap, em) = (params.eta, params.eta_prime, params.eta_m);
    let n = params.n_bins as f64;
    let dark = params.p_dark() / (params.w_ion() * etap * p_spdc * n);
    let a_rel = 1.0 - n * p_spdc * etap / eta * (1.0 - eta) + p_spdc * (1.0 - etap) + 2.0 * dark;
    if a_rel < 0.0 {
        return Err(Error::PerturbationBreakdown("a", a_rel));
    }
    let a2_rel = n * p_spdc * (1.0 - eta) / 2.0 * etap / eta;
    let a2 = a2_rel * em * em;
    let a1p = (1.0 - em) * em * a2_rel;
    let a1 = a1p + em * p_spdc / 2.0 * (1.0 - etap);
    let a0 = a_rel * (1.0 - em) / 2.0
        + (1.0 - em) * (1.0 - em) * a2_rel
        + if em > 0.0 { (1.0 - em) / em * (a1 - a1p) } else { 0.0 }
        + dark;
    Ok(DualRailState { a: a_rel * em, a0, a0p: a0, a1, a1p, a2 })
}

/// Success probability of the double-click EN step, both rails integrated over the pulse.
pub fn en_double_success(params: &HardwareParams, p_spdc: f64) -> f64 {
    let (eta, etap) = (params.eta, params.eta_prime);
    let n = params.n_bins as f64;
    let b = p_spdc;
    let p = b * etap * n * (eta + eta * b + etap * n * b - (3.0 * n - 1.0) * eta * etap * b)
        + eta * 2.0 * params.t_a_s * params.dark_rate_hz;
    (params.dc_acceptance * p).clamp(0.0, 1.0)
}
