//! Average generation durations, worst-case memory storage durations and a Monte-Carlo
//! event simulator for the waiting-time algebra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::swaps::Topology;

/// Which entanglement-generation protocol runs end to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Two single-click links purified into one.
    Tsc,
    /// Dual-rail double-click chain.
    Dc,
    /// Direct single-click ion-ion link (no repeater) or one deterministic ion repeater.
    DirectSc,
    /// Direct double-click ion-ion link or one deterministic ion repeater.
    DirectDc,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Tsc, Protocol::Dc, Protocol::DirectSc, Protocol::DirectDc];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tsc => "tsc",
            Protocol::Dc => "dc",
            Protocol::DirectSc => "direct_sc",
            Protocol::DirectDc => "direct_dc",
        }
    }
}

/// Link rates and swap probabilities feeding the duration formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub r_bb: f64,
    pub r_en: f64,
    /// Swap success probabilities in execution order; unused entries are 1.
    pub p_s: [f64; 4],
    /// Series-geometry probabilities for the repeater-less double-click chain, entries 2..4.
    pub pt_s: [f64; 3],
    /// Purification heralding probability.
    pub p_p: f64,
}

impl RateSet {
    /// Rates with every swap and purification succeeding.
    pub fn ideal(r_bb: f64, r_en: f64) -> Self {
        Self { r_bb, r_en, p_s: [1.0; 4], pt_s: [1.0; 3], p_p: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r_bb", self.r_bb), ("r_en", self.r_en)] {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParam { name, reason: format!("{r} must be a positive rate") });
            }
        }
        let probs = self.p_s.iter().chain(self.pt_s.iter()).chain(std::iter::once(&self.p_p));
        for &p in probs {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParam { name: "probability", reason: format!("{p} not in (0, 1]") });
            }
        }
        Ok(())
    }
}

/// Expected completion time of two parallel exponential processes with rates `a` and `b`.
pub fn race_kernel(a: f64, b: f64) -> f64 {
    (1.0 + a / b + b / a) / (a + b)
}

/// Single-link durations with a central repeater. Returns (T_SL, T_TSC).
pub fn duration_tsc_repeater(r: &RateSet) -> (f64, f64) {
    let t_sl = 1.5 / (r.p_s[1] * r.p_s[0]) * race_kernel(r.r_bb, r.r_en);
    (t_sl, 2.0 * t_sl / r.p_p)
}

/// Single-link durations with one backbone link and no repeater. Returns (T_SL, T_TSC).
pub fn duration_tsc_norepeater(r: &RateSet) -> (f64, f64) {
    let (x, y) = (r.r_en, r.r_bb);
    let p1 = r.p_s[0];
    let bracket = 1.0 + y / x * (1.0 + 2.0 * p1) / 2.0 + 2.0 * x / (x + y) * (1.0 + x / y + p1 * y / x);
    let t_sl = bracket / (r.p_s[1] * p1 * (2.0 * x + y));
    (t_sl, 2.0 * t_sl / r.p_p)
}

/// Double-click duration with a central repeater.
pub fn duration_dc_repeater(r: &RateSet) -> f64 {
    let [p1, p2, p3, p4] = r.p_s;
    1.5 * (race_kernel(r.r_bb, r.r_en) / p1 + 1.0 / r.r_bb) / (p2 * p3 * p4)
}

/// Probabilities of the six preparation orderings of the repeater-less double-click chain.
pub fn dc_orderings(r_en: f64, r_bb: f64) -> [f64; 6] {
    let (x, y) = (r_en, r_bb);
    let s = 2.0 * x + y;
    let u = x + y;
    [
        (y / s).powi(2),
        2.0 * x * y / (s * s) * y / u,
        2.0 * x / s * y * y / (u * u),
        2.0 * x / s * x / u,
        2.0 * x / s * y * x / (u * u),
        2.0 * x * y / (s * s) * x / u,
    ]
}

/// Durations of the six orderings, paired with [`dc_orderings`].
pub fn dc_ordering_durations(r: &RateSet) -> [f64; 6] {
    let (x, y) = (r.r_en, r.r_bb);
    let [p1, p2, p3, p4] = r.p_s;
    let [q2, q3, q4] = r.pt_s;
    let s = 1.0 / (y + 2.0 * x);
    let u = 1.0 / (x + y);
    let par = 1.0 / (p3 * p4);
    let ser = 1.0 / (q3 * q4);
    [
        ((2.0 * s + 0.5 / x) / (p1 * p2) + 1.0 / x) * par,
        ((2.0 * s / p1 + u) / p2 + 1.0 / x) * par,
        (((s + u) / p1 + u) / p2 + 1.0 / x) * par,
        ((s + u + 1.0 / y) / (p1 * q2) + 1.0 / y) * ser,
        (((s + u) / p1 + u) / q2 + 1.0 / y) * ser,
        ((2.0 * s / p1 + u) / q2 + 1.0 / y) * ser,
    ]
}

/// Double-click duration without a repeater, averaged over the preparation orderings.
pub fn duration_dc_norepeater(r: &RateSet) -> f64 {
    let p = dc_orderings(r.r_en, r.r_bb);
    let t = dc_ordering_durations(r);
    p.iter().zip(t.iter()).map(|(a, b)| a * b).sum()
}

/// Average duration of one end-to-end link for the multiplexed protocols.
pub fn duration(protocol: Protocol, topology: Topology, r: &RateSet) -> Result<f64> {
    match (protocol, topology) {
        (Protocol::Tsc, Topology::Repeater) => Ok(duration_tsc_repeater(r).1),
        (Protocol::Tsc, Topology::Direct) => Ok(duration_tsc_norepeater(r).1),
        (Protocol::Dc, Topology::Repeater) => Ok(duration_dc_repeater(r)),
        (Protocol::Dc, Topology::Direct) => Ok(duration_dc_norepeater(r)),
        _ => Err(Error::Precondition(format!("{} has no backbone schedule", protocol.as_str()))),
    }
}

/// Expected maximum of independent exponentials with the given rates.
pub fn expected_max_exp(rates: &[f64]) -> f64 {
    let n = rates.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let sum: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| rates[i]).sum();
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign / sum;
    }
    total
}

/// Expected maximum of an exponential with rate `a` and a two-stage Erlang with rate `b`.
pub fn expected_max_exp_erlang2(a: f64, b: f64) -> f64 {
    let min = 1.0 / (a + b) + b / ((a + b) * (a + b));
    1.0 / a + 2.0 / b - min
}

/// Longest average memory waiting time over the preparation configurations.
///
/// The single-click repeater case is the closed expression with the half-preparation time;
/// the other cases follow the same recipe (first link waits for the rest of its unit, then
/// for an independent unit prepared from scratch).
pub fn storage_duration(protocol: Protocol, topology: Topology, r: &RateSet) -> Result<f64> {
    let slow = 1.0 / r.r_bb.min(r.r_en);
    match (protocol, topology) {
        (Protocol::Tsc, Topology::Repeater) => {
            let t_half = 2.0 * r.p_s[1] * duration_tsc_repeater(r).0 / 3.0;
            Ok(slow + t_half)
        }
        (Protocol::Dc, Topology::Repeater) => {
            let t_half = 2.0 * r.p_s[2] * r.p_s[3] * duration_dc_repeater(r) / 3.0;
            Ok(slow + 1.0 / r.r_bb + t_half)
        }
        (Protocol::Tsc, Topology::Direct) => {
            Ok((1.5 / r.r_en).max(expected_max_exp(&[r.r_en, r.r_bb])))
        }
        (Protocol::Dc, Topology::Direct) => {
            let en_first = expected_max_exp_erlang2(r.r_en, r.r_bb);
            let bb_first = expected_max_exp(&[r.r_en, r.r_en, r.r_bb]);
            Ok(en_first.max(bb_first))
        }
        _ => Err(Error::Precondition(format!("{} has no backbone schedule", protocol.as_str()))),
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -u.ln() / rate
}

fn mc_mean<F>(trials: usize, seed: u64, f: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    const CHUNK: usize = 1 << 14;
    let chunks = trials.div_ceil(CHUNK);
    let sum: f64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(trials - c * CHUNK);
            (0..n).map(|_| f(&mut rng)).sum::<f64>()
        })
        .sum();
    sum / trials as f64
}

/// Monte-Carlo estimate of the race kernel.
pub fn mc_race(a: f64, b: f64, trials: usize, seed: u64) -> f64 {
    mc_mean(trials, seed, |rng| exp_sample(rng, a).max(exp_sample(rng, b)))
}

/// Half of the single-click repeater: EN and BB in parallel, then a swap that resets both on failure.
fn sim_tsc_half(rng: &mut ChaCha8Rng, r: &RateSet) -> f64 {
    let mut t = 0.0;
    loop {
        t += exp_sample(rng, r.r_en).max(exp_sample(rng, r.r_bb));
        if rng.gen::<f64>() < r.p_s[0] {
            return t;
        }
    }
}

/// Half of the double-click repeater: EN with the first BB, first swap, a second BB, second swap.
fn sim_dc_half(rng: &mut ChaCha8Rng, r: &RateSet) -> f64 {
    let mut t = 0.0;
    loop {
        loop {
            t += exp_sample(rng, r.r_en).max(exp_sample(rng, r.r_bb));
            if rng.gen::<f64>() < r.p_s[0] {
                break;
            }
        }
        t += exp_sample(rng, r.r_bb);
        if rng.gen::<f64>() < r.p_s[1] {
            return t;
        }
    }
}

/// Event simulation of the repeater protocols: both halves in parallel then the central swaps.
pub fn mc_duration_repeater(protocol: Protocol, r: &RateSet, trials: usize, seed: u64) -> Result<f64> {
    let r = *r;
    match protocol {
        Protocol::Tsc => Ok(mc_mean(trials, seed, move |rng| {
            let mut t = 0.0;
            loop {
                t += sim_tsc_half(rng, &r).max(sim_tsc_half(rng, &r));
                if rng.gen::<f64>() < r.p_s[1] {
                    return t;
                }
            }
        })),
        Protocol::Dc => Ok(mc_mean(trials, seed, move |rng| {
            let mut t = 0.0;
            loop {
                t += sim_dc_half(rng, &r).max(sim_dc_half(rng, &r));
                if rng.gen::<f64>() < r.p_s[2] * r.p_s[3] {
                    return t;
                }
            }
        })),
        _ => Err(Error::Precondition("no repeater schedule".into())),
    }
}

/// Event simulation of the worst storage configuration for the double-click chains.
pub fn mc_storage(protocol: Protocol, topology: Topology, r: &RateSet, trials: usize, seed: u64) -> Result<f64> {
    let r = *r;
    match (protocol, topology) {
        (Protocol::Dc, Topology::Repeater) => Ok(mc_mean(trials, seed, move |rng| {
            exp_sample(rng, r.r_bb.min(r.r_en)) + exp_sample(rng, r.r_bb) + sim_dc_half(rng, &r)
        })),
        (Protocol::Dc, Topology::Direct) => {
            let en_first = mc_mean(trials, seed, move |rng| {
                exp_sample(rng, r.r_en).max(exp_sample(rng, r.r_bb) + exp_sample(rng, r.r_bb))
            });
            let bb_first = mc_mean(trials, seed ^ 1, move |rng| {
                exp_sample(rng, r.r_en).max(exp_sample(rng, r.r_en)).max(exp_sample(rng, r.r_bb))
            });
            Ok(en_first.max(bb_first))
        }
        (Protocol::Tsc, Topology::Repeater) => Ok(mc_mean(trials, seed, move |rng| {
            exp_sample(rng, r.r_bb.min(r.r_en)) + sim_tsc_half(rng, &r)
        })),
        _ => Err(Error::Precondition("no storage simulation for this case".into())),
    }
}
