//! Parameter records and element-form state containers shared by every stage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking normalization of element states.
pub const NORM_TOL: f64 = 1e-12;

fn one() -> f64 {
    1.0
}
fn unit_visibility() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
fn default_fiber_speed() -> f64 {
    2.0e5
}

/// Hardware description. Every efficiency includes all losses up to the click it heralds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareParams {
    /// Ion photon emission-to-detection efficiency.
    pub eta: f64,
    /// EN SPDC heralding-branch efficiency, wavelength conversion included.
    pub eta_prime: f64,
    /// Intrinsic backbone efficiency before fiber loss.
    pub eta_bb_intrinsic: f64,
    /// Memory emission-to-swap-detection efficiency.
    pub eta_m: f64,
    /// Fiber attenuation length in km.
    pub l_att_km: f64,
    /// Dark-count rate p_d/T in 1/s.
    pub dark_rate_hz: f64,
    /// Detector resolution window T in s.
    pub detector_resolution_s: f64,
    /// Ion emission duration T_a in s.
    pub t_a_s: f64,
    /// Number of EN SPDC time-bins N matched to one ion pulse.
    pub n_bins: u32,
    /// EN SPDC time-bin duration T_b in s.
    pub t_b_s: f64,
    /// Backbone time-bin duration T_BB in s.
    pub t_bb_s: f64,
    /// Ratio T|f|^2 / (N T / T_a) for the memory photon in swaps.
    pub swap_window_factor: f64,
    /// Backbone multiplexing capacity N_BB.
    pub n_bb: u32,
    /// Edge node duty cycle.
    pub o_en: f64,
    /// Backbone duty cycle.
    pub o_bb: f64,
    /// Coherence multiplier applied once per interference event.
    #[serde(default = "unit_visibility")]
    pub visibility: Complex64,
    /// Photon-flux matching factor kappa, |mu|^2/|nu|^2 = kappa * N.
    #[serde(default = "one")]
    pub flux_matching: f64,
    /// Acceptance factor on the double-click EN success probability.
    #[serde(default = "one")]
    pub dc_acceptance: f64,
    /// Signal speed in fiber, km/s.
    #[serde(default = "default_fiber_speed")]
    pub fiber_speed_km_s: f64,
}

fn check_prob(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::InvalidParam { name, reason: format!("{v} not in [0,1]") });
    }
    Ok(())
}

fn check_pos(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParam { name, reason: format!("{v} must be positive") });
    }
    Ok(())
}

impl HardwareParams {
    /// The simplified parametrization with a single intrinsic efficiency.
    pub fn from_intrinsic(eta_i: f64, eta_m: f64) -> Self {
        Self {
            eta: eta_i,
            eta_prime: eta_i * eta_i,
            eta_bb_intrinsic: eta_i,
            eta_m,
            l_att_km: 10.0 / (0.2 * std::f64::consts::LN_10),
            dark_rate_hz: 1e-3,
            detector_resolution_s: 1e-9,
            t_a_s: 10e-6,
            n_bins: 10,
            t_b_s: 1e-6,
            t_bb_s: 1e-6,
            swap_window_factor: 10.0,
            n_bb: 1000,
            o_en: 0.1,
            o_bb: 1.0,
            visibility: unit_visibility(),
            flux_matching: 1.0,
            dc_acceptance: 1.0,
            fiber_speed_km_s: default_fiber_speed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("eta", self.eta)?;
        check_prob("eta_prime", self.eta_prime)?;
        check_prob("eta_bb_intrinsic", self.eta_bb_intrinsic)?;
        check_prob("eta_m", self.eta_m)?;
        check_prob("o_en", self.o_en)?;
        check_prob("o_bb", self.o_bb)?;
        check_prob("dc_acceptance", self.dc_acceptance)?;
        check_pos("o_en", self.o_en)?;
        check_pos("o_bb", self.o_bb)?;
        check_pos("l_att_km", self.l_att_km)?;
        check_pos("detector_resolution_s", self.detector_resolution_s)?;
        check_pos("t_a_s", self.t_a_s)?;
        check_pos("t_b_s", self.t_b_s)?;
        check_pos("t_bb_s", self.t_bb_s)?;
        check_pos("swap_window_factor", self.swap_window_factor)?;
        check_pos("flux_matching", self.flux_matching)?;
        check_pos("fiber_speed_km_s", self.fiber_speed_km_s)?;
        if !(self.dark_rate_hz >= 0.0) || !self.dark_rate_hz.is_finite() {
            return Err(Error::InvalidParam {
                name: "dark_rate_hz",
                reason: format!("{} must be non-negative", self.dark_rate_hz),
            });
        }
        if self.n_bins == 0 {
            return Err(Error::InvalidParam { name: "n_bins", reason: "must be >= 1".into() });
        }
        if self.n_bb == 0 {
            return Err(Error::InvalidParam { name: "n_bb", reason: "must be >= 1".into() });
        }
        let rel = (self.n_bins as f64 * self.t_b_s - self.t_a_s).abs() / self.t_a_s;
        if rel > 1e-12 {
            return Err(Error::InvalidParam {
                name: "t_b_s",
                reason: format!("n_bins * t_b_s must equal t_a_s (relative mismatch {rel:e})"),
            });
        }
        if self.visibility.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParam { name: "visibility", reason: "|v| must be <= 1".into() });
        }
        let p_d = self.p_dark();
        if p_d > 1.0 {
            return Err(Error::InvalidParam { name: "dark_rate_hz", reason: "p_d exceeds 1".into() });
        }
        Ok(())
    }

    /// Dark-count probability per detector window.
    pub fn p_dark(&self) -> f64 {
        self.dark_rate_hz * self.detector_resolution_s
    }

    /// T|nu|^2 for the flat ion pulse.
    pub fn w_ion(&self) -> f64 {
        self.detector_resolution_s / self.t_a_s
    }

    /// |mu|^2 / |nu|^2 for the EN SPDC herald photon.
    pub fn flux_ratio(&self) -> f64 {
        self.flux_matching * self.n_bins as f64
    }

    /// T|mu|^2 for the EN SPDC herald photon.
    pub fn w_spdc(&self) -> f64 {
        self.flux_ratio() * self.w_ion()
    }

    /// T|chi|^2 for the backbone herald photon.
    pub fn w_bb(&self) -> f64 {
        self.detector_resolution_s / self.t_bb_s
    }

    /// T|f|^2 for memory photons meeting at a swap.
    pub fn w_swap(&self) -> f64 {
        self.swap_window_factor * self.n_bins as f64 * self.w_ion()
    }
}

/// Emission probabilities |alpha_1|^2, |beta_1|^2, |gamma_1|^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionSettings {
    pub p_ion: f64,
    pub p_spdc_en: f64,
    pub p_spdc_bb: f64,
}

/// Emission probabilities above this value leave the perturbative regime.
pub const PERTURBATIVE_LIMIT: f64 = 0.2;

impl EmissionSettings {
    pub fn new(p_ion: f64, p_spdc_en: f64, p_spdc_bb: f64) -> Self {
        Self { p_ion, p_spdc_en, p_spdc_bb }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_ion", self.p_ion), ("p_spdc_en", self.p_spdc_en), ("p_spdc_bb", self.p_spdc_bb)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParam { name, reason: format!("{v} not in (0,1)") });
            }
        }
        Ok(())
    }

    /// True when any emission probability exceeds the perturbative limit.
    pub fn non_perturbative(&self) -> bool {
        self.p_ion > PERTURBATIVE_LIMIT
            || self.p_spdc_en > PERTURBATIVE_LIMIT
            || self.p_spdc_bb > PERTURBATIVE_LIMIT
    }
}

/// Single-click EN state: (A0|0><0| + A1'|1><1|)|0_m><0_m| + A1|phi><phi| + A2|1><1||1_m><1_m|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnElements {
    pub a0: f64,
    pub a1: f64,
    pub a1p: f64,
    pub a2: f64,
    /// tan^2 of the mixing angle of |phi> = cos|1>|0_m> + sin|0>|1_m>.
    pub tan2: f64,
}

/// Memory-memory backbone state with the two-photon block weighted by 6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbElements {
    pub b0: f64,
    pub b1: f64,
    pub b1p: f64,
    pub b2: f64,
}

/// Ion-memory state after the first swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapElements {
    pub c0: f64,
    pub c1: f64,
    pub c1p: f64,
    pub c1pp: f64,
    pub c2: f64,
    pub c2p: f64,
    pub c3: f64,
    pub tan2: f64,
}

/// Element-form state of one ion/memory rail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SingleRailState {
    En(EnElements),
    Bb(BbElements),
    Swap(SwapElements),
}

/// sin^2 and cos^2 of the mixing angle.
pub fn angle_weights(tan2: f64) -> (f64, f64) {
    (tan2 / (1.0 + tan2), 1.0 / (1.0 + tan2))
}

impl EnElements {
    pub fn trace(&self) -> f64 {
        self.a0 + self.a1 + self.a1p + self.a2
    }

    pub fn labels(&self) -> [(&'static str, f64); 4] {
        [("A0", self.a0), ("A1", self.a1), ("A1'", self.a1p), ("A2", self.a2)]
    }

    fn scaled(&self, s: f64) -> Self {
        Self { a0: self.a0 * s, a1: self.a1 * s, a1p: self.a1p * s, a2: self.a2 * s, tan2: self.tan2 }
    }

    /// Embeds the EN state into the swap family (no C1'', C2', C3 weight).
    pub fn as_swap(&self) -> SwapElements {
        SwapElements {
            c0: self.a0,
            c1: self.a1,
            c1p: self.a1p,
            c1pp: 0.0,
            c2: self.a2,
            c2p: 0.0,
            c3: 0.0,
            tan2: self.tan2,
        }
    }
}

impl BbElements {
    pub fn trace(&self) -> f64 {
        self.b0 + self.b1 + self.b1p + 6.0 * self.b2
    }

    pub fn labels(&self) -> [(&'static str, f64); 4] {
        [("B0", self.b0), ("B1", self.b1), ("B1'", self.b1p), ("B2", self.b2)]
    }

    fn scaled(&self, s: f64) -> Self {
        Self { b0: self.b0 * s, b1: self.b1 * s, b1p: self.b1p * s, b2: self.b2 * s }
    }
}

impl SwapElements {
    pub fn trace(&self) -> f64 {
        let (s2, _) = angle_weights(self.tan2);
        self.c0 + self.c1 + self.c1p + self.c1pp + self.c2 + self.c2p * (1.0 + s2) + self.c3
    }

    pub fn labels(&self) -> [(&'static str, f64); 7] {
        [
            ("C0", self.c0),
            ("C1", self.c1),
            ("C1'", self.c1p),
            ("C1''", self.c1pp),
            ("C2", self.c2),
            ("C2'", self.c2p),
            ("C3", self.c3),
        ]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c0: self.c0 * s,
            c1: self.c1 * s,
            c1p: self.c1p * s,
            c1pp: self.c1pp * s,
            c2: self.c2 * s,
            c2p: self.c2p * s,
            c3: self.c3 * s,
            tan2: self.tan2,
        }
    }
}

impl SingleRailState {
    pub fn trace(&self) -> f64 {
        match self {
            Self::En(e) => e.trace(),
            Self::Bb(b) => b.trace(),
            Self::Swap(c) => c.trace(),
        }
    }

    pub fn weights(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::En(e) => e.labels().to_vec(),
            Self::Bb(b) => b.labels().to_vec(),
            Self::Swap(c) => c.labels().to_vec(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= NORM_TOL
    }

    /// Divides by the multiplicity-weighted trace, returning the trace.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::NullState);
        }
        let s = 1.0 / t;
        let out = match self {
            Self::En(e) => Self::En(e.scaled(s)),
            Self::Bb(b) => Self::Bb(b.scaled(s)),
            Self::Swap(c) => Self::Swap(c.scaled(s)),
        };
        Ok((out, t))
    }
}

/// Double-click EN state with both rails; photon states |1_k> carry one photon in rail k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRailState {
    pub a: f64,
    /// Vacuum weight with the ion in |1>.
    pub a0: f64,
    /// Vacuum weight with the ion in |0>.
    pub a0p: f64,
    /// Weight of |1-k>|1_k>, per rail.
    pub a1: f64,
    /// Weight of |k>|1_k>, per rail.
    pub a1p: f64,
    /// Weight of |k>|1_0 1_1>, per ion state.
    pub a2: f64,
}

impl DualRailState {
    pub fn trace(&self) -> f64 {
        self.a + self.a0 + self.a0p + 2.0 * (self.a1 + self.a1p + self.a2)
    }

    pub fn normalize(&self) -> Result<(Self, f64)> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::NullState);
        }
        let s = 1.0 / t;
        Ok((
            Self {
                a: self.a * s,
                a0: self.a0 * s,
                a0p: self.a0p * s,
                a1: self.a1 * s,
                a1p: self.a1p * s,
                a2: self.a2 * s,
            },
            t,
        ))
    }
}

/// Two-ion state (alpha|0,1><1,0| + h.c.) + sum_kl D_kl |k,l><k,l|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteIonState {
    pub alpha: Complex64,
    pub d00: f64,
    pub d01: f64,
    pub d10: f64,
    pub d11: f64,
}

impl BipartiteIonState {
    pub fn new(alpha: f64, d00: f64, d01: f64, d10: f64, d11: f64) -> Self {
        Self { alpha: Complex64::new(alpha, 0.0), d00, d01, d10, d11 }
    }

    /// The ideal Bell state (|0,1> + |1,0>)/sqrt2.
    pub fn bell() -> Self {
        Self::new(0.5, 0.0, 0.5, 0.5, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.d00 + self.d01 + self.d10 + self.d11
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalize(&self) -> Result<(Self, f64)> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::NullState);
        }
        let s = 1.0 / t;
        Ok((
            Self {
                alpha: self.alpha * s,
                d00: self.d00 * s,
                d01: self.d01 * s,
                d10: self.d10 * s,
                d11: self.d11 * s,
            },
            t,
        ))
    }

    /// Positivity of the 2x2 coherence block, |alpha| <= sqrt(D01 D10).
    pub fn coherence_bounded(&self) -> bool {
        self.alpha.norm() <= (self.d01 * self.d10).sqrt() + 1e-12
    }
}

/// Bell-state fidelity (D01 + D10)/2 + Re(alpha) of a normalized state.
pub fn bell_fidelity(state: &BipartiteIonState) -> Result<f64> {
    if !state.is_normalized() {
        return Err(Error::Unnormalized(state.trace()));
    }
    Ok((state.d01 + state.d10) / 2.0 + state.alpha.re)
}
