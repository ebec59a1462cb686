//! Optical entanglement swaps between memories: closed forms for the single-click chain and
//! an operator-level chain for the double-click protocol.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockOperator, ModeRegister};
use crate::model::{angle_weights, BbElements, BipartiteIonState, DualRailState, EnElements, HardwareParams, SwapElements};
use crate::oracle::{bb_operator, dual_rail_operator, ion_pair_from_operator, join, memory_swap, Port, SWAP_DETECTORS};

/// Whether a central multimode repeater splits the backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Repeater,
    Direct,
}

impl Topology {
    /// Number of fiber segments entering the backbone efficiency.
    pub fn segments(self) -> u32 {
        match self {
            Topology::Repeater => 4,
            Topology::Direct => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Repeater => "repeater",
            Topology::Direct => "direct",
        }
    }
}

/// Non-normalized first-swap elements P_S1 * C_k for an EN state and a backbone link.
pub fn swap1_unnormalized(params: &HardwareParams, a: &EnElements, b: &BbElements) -> SwapElements {
    let s = params.w_swap() / 4.0;
    let pd = params.p_dark();
    let (s2, c2) = angle_weights(a.tan2);
    let bsum = b.b1 + b.b1p;
    SwapElements {
        c0: s * (a.a0 * bsum + 2.0 * a.a1 * s2 * b.b0) + pd * a.a0 * b.b0,
        c1: s * a.a1 * (b.b1 - b.b1p),
        c1p: s * (2.0 * c2 * a.a1 * b.b1p + a.a1p * bsum + 2.0 * a.a2 * b.b0) + pd * c2 * a.a1 * b.b0,
        c1pp: s * (2.0 * s2 * a.a1 * b.b1p + 4.0 * a.a0 * b.b2) + pd * 0.5 * a.a0 * b.b1,
        c2: s * (4.0 * a.a1p * b.b2 + 2.0 * c2 * a.a1 * b.b2 + a.a2 * bsum) + pd * c2 / 2.0 * a.a1 * b.b1,
        c2p: s * 2.0 * a.a1 * b.b2,
        c3: s * 4.0 * a.a2 * b.b2,
        tan2: a.tan2,
    }
}

/// First swap: returns the integrated success probability and the normalized C-elements.
pub fn swap1(params: &HardwareParams, a: &EnElements, b: &BbElements) -> Result<(f64, SwapElements)> {
    let c = swap1_unnormalized(params, a, b);
    if c.c1 < 0.0 {
        return Err(Error::Precondition(format!("C1 = {} < 0: B1' exceeds B1", c.c1)));
    }
    let t = c.trace();
    if !(t > 0.0) {
        return Err(Error::SwapFailed { index: 1 });
    }
    Ok(((2.0 * t / params.w_swap()).min(1.0), c.scaled(1.0 / t)))
}

/// Non-normalized final state P_S2 * {alpha, D_kl} for left state `c` and right state `f`.
///
/// Each side keeps its own mixing angle; the coherence carries the visibility factor.
pub fn swap2_unnormalized(params: &HardwareParams, c: &SwapElements, f: &SwapElements) -> BipartiteIonState {
    let h = params.w_swap() / 2.0;
    let pd = params.p_dark();
    let (sc2, cc2) = angle_weights(c.tan2);
    let (sf2, cf2) = angle_weights(f.tan2);
    let c_vac0 = c.c1pp + c.c1 * sc2;
    let c_vac1 = c.c1p + c.c1 * cc2;
    let c_mem1 = c.c2 + c.c2p * cc2;
    let f_vac0 = f.c1pp + f.c1 * sf2;
    let f_vac1 = f.c1p + f.c1 * cf2;
    let f_mem1 = f.c2 + f.c2p * cf2;
    let alpha = h * f.c1 * c.c1 * (sc2 * cc2 * sf2 * cf2).sqrt();
    let mut out = BipartiteIonState::new(
        alpha,
        h * (c.c0 * f_vac0 + c_vac0 * f.c0) + pd * c.c0 * f.c0,
        h * (c_vac0 * f_vac1 + c.c0 * f_mem1) + pd * c.c0 * f.c1 * cf2,
        h * (c_vac1 * f_vac0 + c_mem1 * f.c0) + pd * c.c1 * f.c0 * cc2,
        h * (c_vac1 * f_mem1 + c_mem1 * f_vac1) + pd * f.c1 * c.c1 * cc2 * cf2,
    );
    out.alpha *= params.visibility;
    out
}

/// Second swap: returns the integrated success probability and the normalized ion-ion state.
pub fn swap2(params: &HardwareParams, c: &SwapElements, f: &SwapElements) -> Result<(f64, BipartiteIonState)> {
    let raw = swap2_unnormalized(params, c, f);
    let (state, t) = raw.normalize().map_err(|_| Error::SwapFailed { index: 2 })?;
    Ok(((2.0 * t / params.w_swap()).min(1.0), state))
}

/// Applies the product of heralding port signs to the coherence.
pub fn with_herald_sign(state: &BipartiteIonState, ports: &[Port]) -> BipartiteIonState {
    let s: f64 = ports.iter().map(|p| p.sign()).product();
    BipartiteIonState { alpha: state.alpha * s, ..*state }
}

/// Outcome of a double-click swap chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DcChainResult {
    /// Integrated swap success probabilities in execution order.
    pub probs: Vec<f64>,
    /// For the direct topology: probabilities with the first backbone link swapped at both ends first.
    pub series_probs: Option<Vec<f64>>,
    /// Normalized final ion-ion state.
    pub state: BipartiteIonState,
    /// Weight of the final operator outside the ion-ion schema, relative to its trace.
    pub residual: f64,
}

struct Chain {
    op: FockOperator,
    probs: Vec<f64>,
    /// Swaps executed before this chain, for error reporting.
    base: usize,
    w: f64,
    pd: f64,
}

impl Chain {
    fn swap(&mut self, a: &str, b: &str) -> Result<()> {
        let idx = self.base + self.probs.len() + 1;
        let (p, op) = memory_swap(&self.op, a, b, Port::Plus, self.w, self.pd)?;
        if !(p > 0.0) || !(op.trace() > 0.0) {
            return Err(Error::SwapFailed { index: idx });
        }
        let t = op.trace();
        self.op = op.scale(1.0 / t);
        self.probs.push((2.0 * p / self.w).min(1.0));
        Ok(())
    }

    fn add(&mut self, other: FockOperator) {
        self.op = join(&self.op, &other);
    }
}

fn chain_register() -> Result<Arc<ModeRegister>> {
    let mut modes: Vec<(&str, u8)> = vec![
        ("qL", 1),
        ("eL0", 2),
        ("eL1", 2),
        ("qR", 1),
        ("eR0", 2),
        ("eR1", 2),
        ("u0", 2),
        ("v0", 2),
        ("u1", 2),
        ("v1", 2),
        ("s0", 2),
        ("t0", 2),
        ("s1", 2),
        ("t1", 2),
    ];
    modes.extend_from_slice(&SWAP_DETECTORS);
    Ok(Arc::new(ModeRegister::new(&modes)?))
}

/// Double-click swap chain through the Fock engine.
///
/// `bb` holds one link per rail for the direct topology and four links for the repeater
/// (left rail 0, left rail 1, right rail 0, right rail 1).
pub fn dc_swap_chain(
    params: &HardwareParams,
    en_left: &DualRailState,
    en_right: &DualRailState,
    bb: &[BbElements],
    topology: Topology,
) -> Result<DcChainResult> {
    let reg = chain_register()?;
    let w = params.w_swap();
    let pd = params.p_dark();
    let vac = FockOperator::from_pure(reg.clone(), &[(reg.vacuum(), 1.0)]);
    let left = dual_rail_operator(reg.clone(), "qL", "eL0", "eL1", en_left)?;
    let right = dual_rail_operator(reg.clone(), "qR", "eR0", "eR1", en_right)?;
    let finish = |chain: Chain| -> Result<(Vec<f64>, BipartiteIonState, f64)> {
        let ex = ion_pair_from_operator(&chain.op, "qL", "qR")?;
        let (mut st, _) = ex.elements.normalize()?;
        st.alpha *= params.visibility;
        Ok((chain.probs, st, ex.relative_residual()))
    };
    match topology {
        Topology::Repeater => {
            if bb.len() != 4 {
                return Err(Error::InvalidParam { name: "bb", reason: format!("repeater needs 4 links, got {}", bb.len()) });
            }
            // Each half: EN rail k meets the EN-side end of its backbone link.
            let mut l = Chain { op: vac.clone(), probs: Vec::new(), base: 0, w, pd };
            l.add(left);
            l.add(bb_operator(reg.clone(), "u0", "v0", &bb[0])?);
            l.swap("eL0", "u0")?;
            l.add(bb_operator(reg.clone(), "u1", "v1", &bb[1])?);
            l.swap("eL1", "u1")?;
            let mut r = Chain { op: vac, probs: Vec::new(), base: 2, w, pd };
            r.add(right);
            r.add(bb_operator(reg.clone(), "t0", "s0", &bb[2])?);
            r.swap("eR0", "t0")?;
            r.add(bb_operator(reg.clone(), "t1", "s1", &bb[3])?);
            r.swap("eR1", "t1")?;
            // Report the left half, then the central swaps.
            let mut c = Chain { op: join(&l.op, &r.op), probs: l.probs, base: 2, w, pd };
            c.swap("v0", "s0")?;
            c.swap("v1", "s1")?;
            let (probs, state, residual) = finish(c)?;
            Ok(DcChainResult { probs, series_probs: None, state, residual })
        }
        Topology::Direct => {
            if bb.len() != 2 {
                return Err(Error::InvalidParam { name: "bb", reason: format!("direct needs 2 links, got {}", bb.len()) });
            }
            let b0 = bb_operator(reg.clone(), "u0", "v0", &bb[0])?;
            let b1 = bb_operator(reg.clone(), "u1", "v1", &bb[1])?;
            let mut par = Chain { op: vac.clone(), probs: Vec::new(), base: 0, w, pd };
            par.add(left.clone());
            par.add(b0.clone());
            par.swap("eL0", "u0")?;
            par.add(b1.clone());
            par.swap("eL1", "u1")?;
            par.add(right.clone());
            par.swap("v0", "eR0")?;
            par.swap("v1", "eR1")?;
            let mut ser = Chain { op: vac, probs: Vec::new(), base: 0, w, pd };
            ser.add(left);
            ser.add(b0);
            ser.swap("eL0", "u0")?;
            ser.add(right);
            ser.swap("v0", "eR0")?;
            ser.add(b1);
            ser.swap("eL1", "u1")?;
            ser.swap("v1", "eR1")?;
            let (probs, state, residual) = finish(par)?;
            let (series, _, _) = finish(ser)?;
            Ok(DcChainResult { probs, series_probs: Some(series), state, residual })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bell_fidelity;

    fn ideal_params() -> HardwareParams {
        let mut p = HardwareParams::from_intrinsic(0.8, 1.0);
        p.dark_rate_hz = 0.0;
        p
    }

    fn ideal_c(tan2: f64) -> SwapElements {
        SwapElements { c0: 0.0, c1: 1.0, c1p: 0.0, c1pp: 0.0, c2: 0.0, c2p: 0.0, c3: 0.0, tan2 }
    }

    #[test]
    fn ideal_first_swap() {
        let p = ideal_params();
        let a = EnElements { a0: 0.0, a1: 1.0, a1p: 0.0, a2: 0.0, tan2: 0.7 };
        let b = BbElements { b0: 0.0, b1: 1.0, b1p: 0.0, b2: 0.0 };
        let (prob, c) = swap1(&p, &a, &b).unwrap();
        // C0 = 0 since sin^2 A1 B0 vanishes; C1 = 1.
        assert!((c.c1 - 1.0).abs() < 1e-15);
        assert!((prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vacuum_en_cannot_swap_coherence() {
        let p = ideal_params();
        let a = EnElements { a0: 1.0, a1: 0.0, a1p: 0.0, a2: 0.0, tan2: 1.0 };
        let b = BbElements { b0: 0.0, b1: 1.0, b1p: 0.0, b2: 0.0 };
        let (_, c) = swap1(&p, &a, &b).unwrap();
        assert_eq!(c.c1, 0.0);
        assert!((c.c0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_parity_dominating_is_rejected() {
        let p = ideal_params();
        let a = EnElements { a0: 0.0, a1: 1.0, a1p: 0.0, a2: 0.0, tan2: 1.0 };
        let b = BbElements { b0: 0.0, b1: 0.2, b1p: 0.8, b2: 0.0 };
        assert!(swap1(&p, &a, &b).is_err());
    }

    #[test]
    fn ideal_second_swap_is_bell() {
        let p = ideal_params();
        let (prob, s) = swap2(&p, &ideal_c(1.0), &ideal_c(1.0)).unwrap();
        assert!((s.alpha.re - 0.5).abs() < 1e-15);
        assert!((s.d01 - 0.5).abs() < 1e-15 && (s.d10 - 0.5).abs() < 1e-15);
        assert!((bell_fidelity(&s).unwrap() - 1.0).abs() < 1e-15);
        assert!((prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equal_asymmetric_angles_keep_unit_fidelity() {
        let p = ideal_params();
        let (_, s) = swap2(&p, &ideal_c(3.0), &ideal_c(3.0)).unwrap();
        assert!((bell_fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_angles_lose_fidelity() {
        // tan^2 products of one give F = 1/2 + c^2 s^2 / (s^4 + c^4).
        let p = ideal_params();
        let (_, s) = swap2(&p, &ideal_c(3.0), &ideal_c(1.0 / 3.0)).unwrap();
        let (s2, c2) = angle_weights(3.0);
        let want = 0.5 + c2 * s2 / (s2 * s2 + c2 * c2);
        assert!((bell_fidelity(&s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn herald_sign_is_product_of_ports() {
        let s = BipartiteIonState::bell();
        assert_eq!(with_herald_sign(&s, &[Port::Plus, Port::Minus]).alpha.re, -0.5);
        assert_eq!(with_herald_sign(&s, &[Port::Minus, Port::Minus]).alpha.re, 0.5);
    }

    #[test]
    fn null_state_is_swap_failure() {
        let p = ideal_params();
        let z = SwapElements { c0: 0.0, c1: 0.0, c1p: 0.0, c1pp: 0.0, c2: 0.0, c2p: 0.0, c3: 0.0, tan2: 1.0 };
        assert!(matches!(swap2(&p, &z, &z), Err(Error::SwapFailed { index: 2 })));
    }

    fn ideal_dc() -> (DualRailState, BbElements) {
        (
            DualRailState { a: 1.0, a0: 0.0, a0p: 0.0, a1: 0.0, a1p: 0.0, a2: 0.0 },
            BbElements { b0: 0.0, b1: 1.0, b1p: 0.0, b2: 0.0 },
        )
    }

    #[test]
    fn ideal_dc_chain_is_bell() {
        let p = ideal_params();
        let (en, b) = ideal_dc();
        let r = dc_swap_chain(&p, &en, &en, &[b; 4], Topology::Repeater).unwrap();
        assert!((bell_fidelity(&r.state).unwrap() - 1.0).abs() < 1e-12);
        assert!(r.residual < 1e-12);
        let d = dc_swap_chain(&p, &en, &en, &[b; 2], Topology::Direct).unwrap();
        assert!((bell_fidelity(&d.state).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_rail_fails_central_swap() {
        let p = ideal_params();
        let (en, b) = ideal_dc();
        let v = BbElements { b0: 1.0, b1: 0.0, b1p: 0.0, b2: 0.0 };
        let r = dc_swap_chain(&p, &en, &en, &[v, b, v, b], Topology::Repeater);
        assert!(matches!(r, Err(Error::SwapFailed { index: 5 })));
    }
}
