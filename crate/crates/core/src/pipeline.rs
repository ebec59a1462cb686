//! End-to-end evaluation of one protocol at one distance: final state, fidelity, duration and storage.

use serde::{Deserialize, Serialize};

use crate::backbone::{bb_state, bb_success, eta_bb};
use crate::baselines::{direct_double_click, direct_single_click, ion_swap};
use crate::edge::{en_double_state, en_double_success, en_single_state, en_single_success};
use crate::error::{Error, Result};
use crate::model::{bell_fidelity, BipartiteIonState, EmissionSettings, HardwareParams};
use crate::purification::purify;
use crate::scheduling::{duration, storage_duration, Protocol, RateSet};
use crate::swaps::{dc_swap_chain, swap1, swap2, Topology};

/// Everything the optimizer and the reports need from one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fidelity: f64,
    pub duration_s: f64,
    /// Worst-case multimode memory storage; absent for protocols without memories.
    pub storage_s: Option<f64>,
    pub state: BipartiteIonState,
    pub rates: Option<RateSet>,
}

/// Backbone round-trip time: twice the propagation to the heralding station, floored by the trial time.
pub fn tau_bb(params: &HardwareParams, l_km: f64, topology: Topology) -> f64 {
    let station = l_km / topology.segments() as f64;
    (2.0 * station / params.fiber_speed_km_s).max(params.t_bb_s)
}

/// Direct-link trial time: ion emission or the herald round trip, whichever is longer.
pub fn tau_direct(params: &HardwareParams, l_km: f64, topology: Topology) -> f64 {
    tau_bb(params, l_km, topology).max(params.t_a_s)
}

fn backbone_rate(params: &HardwareParams, l_km: f64, topology: Topology, p_bb: f64) -> Result<(f64, f64)> {
    let eta = eta_bb(l_km, topology.segments(), params)?;
    let succ = bb_success(params, eta, p_bb);
    Ok((eta, params.o_bb * params.n_bb as f64 * succ / tau_bb(params, l_km, topology)))
}

fn positive_rate(name: &'static str, r: f64) -> Result<f64> {
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::InvalidParam { name, reason: format!("rate {r} is not positive") })
    }
}

fn finish(state: BipartiteIonState, protocol: Protocol, topology: Topology, rates: RateSet) -> Result<Evaluation> {
    let fidelity = bell_fidelity(&state)?;
    Ok(Evaluation {
        fidelity,
        duration_s: duration(protocol, topology, &rates)?,
        storage_s: Some(storage_duration(protocol, topology, &rates)?),
        state,
        rates: Some(rates),
    })
}

fn eval_tsc(params: &HardwareParams, l_km: f64, topology: Topology, s: &EmissionSettings) -> Result<Evaluation> {
    let (eta, r_bb) = backbone_rate(params, l_km, topology, s.p_spdc_bb)?;
    let r_en = params.o_en * en_single_success(params, s.p_ion, s.p_spdc_en)? / params.t_a_s;
    let a = en_single_state(params, s.p_ion, s.p_spdc_en)?;
    let b = bb_state(params, eta, s.p_spdc_bb)?;
    let (p1, c) = swap1(params, &a, &b)?;
    let right = match topology {
        Topology::Repeater => c,
        Topology::Direct => a.as_swap(),
    };
    let (p2, link) = swap2(params, &c, &right)?;
    let (pp, state) = purify(&link, &link)?;
    let mut rates = RateSet::ideal(positive_rate("r_bb", r_bb)?, positive_rate("r_en", r_en)?);
    rates.p_s[0] = p1;
    rates.p_s[1] = p2;
    rates.p_p = pp;
    finish(state, Protocol::Tsc, topology, rates)
}

fn eval_dc(params: &HardwareParams, l_km: f64, topology: Topology, s: &EmissionSettings) -> Result<Evaluation> {
    let (eta, r_bb) = backbone_rate(params, l_km, topology, s.p_spdc_bb)?;
    let r_en = params.o_en * en_double_success(params, s.p_spdc_en) / params.t_a_s;
    let en = en_double_state(params, s.p_spdc_en)?;
    let b = bb_state(params, eta, s.p_spdc_bb)?;
    let links = match topology {
        Topology::Repeater => vec![b; 4],
        Topology::Direct => vec![b; 2],
    };
    let chain = dc_swap_chain(params, &en, &en, &links, topology)?;
    let mut rates = RateSet::ideal(positive_rate("r_bb", r_bb)?, positive_rate("r_en", r_en)?);
    for (slot, p) in rates.p_s.iter_mut().zip(chain.probs.iter()) {
        *slot = *p;
    }
    if let Some(series) = &chain.series_probs {
        for (slot, p) in rates.pt_s.iter_mut().zip(series.iter().skip(1)) {
            *slot = *p;
        }
    }
    finish(chain.state, Protocol::Dc, topology, rates)
}

fn eval_direct(
    params: &HardwareParams,
    l_km: f64,
    topology: Topology,
    protocol: Protocol,
    p_ion: f64,
) -> Result<Evaluation> {
    let eta_d = eta_bb(l_km, topology.segments(), params)?;
    let (succ, link) = match protocol {
        Protocol::DirectSc => direct_single_click(params, eta_d, p_ion)?,
        _ => direct_double_click(params, eta_d)?,
    };
    let rate = positive_rate("r_direct", params.o_en * succ / tau_direct(params, l_km, topology))?;
    let (state, duration_s) = match topology {
        Topology::Direct => (link, 1.0 / rate),
        // Both halves race in parallel, then the ion swap is deterministic.
        Topology::Repeater => (ion_swap(&link, &link)?, 1.5 / rate),
    };
    Ok(Evaluation { fidelity: bell_fidelity(&state)?, duration_s, storage_s: None, state, rates: None })
}

/// Evaluates one protocol cell. Unused emission probabilities are ignored.
pub fn evaluate(
    params: &HardwareParams,
    protocol: Protocol,
    topology: Topology,
    l_km: f64,
    settings: &EmissionSettings,
) -> Result<Evaluation> {
    match protocol {
        Protocol::Tsc => eval_tsc(params, l_km, topology, settings),
        Protocol::Dc => eval_dc(params, l_km, topology, settings),
        Protocol::DirectSc | Protocol::DirectDc => eval_direct(params, l_km, topology, protocol, settings.p_ion),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal() -> HardwareParams {
        let mut p = HardwareParams::from_intrinsic(0.8, 1.0);
        p.dark_rate_hz = 0.0;
        p
    }

    #[test]
    fn ideal_limits_reach_unit_fidelity() {
        let p = ideal();
        let s = EmissionSettings::new(1e-6, 1e-6, 1e-6);
        for proto in Protocol::ALL {
            for topo in [Topology::Repeater, Topology::Direct] {
                let e = evaluate(&p, proto, topo, 0.0, &s).unwrap();
                assert!(e.fidelity >= 0.999, "{proto:?} {topo:?}: {}", e.fidelity);
                assert!(e.duration_s > 0.0 && e.duration_s.is_finite());
            }
        }
    }

    #[test]
    fn round_trip_floor() {
        let p = ideal();
        assert_eq!(tau_bb(&p, 0.0, Topology::Repeater), p.t_bb_s);
        assert!((tau_bb(&p, 200.0, Topology::Repeater) - 2.0 * 50.0 / 2e5).abs() < 1e-18);
        assert!((tau_direct(&p, 200.0, Topology::Direct) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn longer_links_are_slower() {
        let mut p = HardwareParams::from_intrinsic(0.8, 0.5);
        p.dark_rate_hz = 1e-3;
        let s = EmissionSettings::new(1e-3, 1e-3, 1e-3);
        let a = evaluate(&p, Protocol::Tsc, Topology::Repeater, 50.0, &s).unwrap();
        let b = evaluate(&p, Protocol::Tsc, Topology::Repeater, 150.0, &s).unwrap();
        assert!(b.duration_s > a.duration_s);
    }
}
