//! Closed forms against the Fock oracle, and schedules against event simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backbone::{bb_click_probability, bb_state};
use crate::baselines::{direct_double_click_raw, direct_single_click_raw};
use crate::edge::{en_double_state, en_double_success, en_single_state, en_single_success};
use crate::error::Result;
use crate::model::{BipartiteIonState, DualRailState, EnElements, HardwareParams, SwapElements};
use crate::oracle::{
    oracle_bb, oracle_direct_double, oracle_direct_single, oracle_en_double, oracle_en_double_success,
    oracle_en_single, oracle_en_single_success, oracle_swap1, oracle_swap2, with_visibility,
};
use crate::scheduling::{
    dc_orderings, duration_dc_repeater, duration_tsc_repeater, mc_duration_repeater, mc_race, mc_storage,
    race_kernel, storage_duration, Protocol, RateSet,
};
use crate::swaps::{swap1_unnormalized, swap2_unnormalized, Topology};

/// Closed-form element families with an oracle counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Backbone,
    EnSingle,
    EnDualRail,
    Swap1,
    Swap2Repeater,
    Swap2Direct,
    DirectSingle,
    DirectDouble,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Backbone,
        Family::EnSingle,
        Family::EnDualRail,
        Family::Swap1,
        Family::Swap2Repeater,
        Family::Swap2Direct,
        Family::DirectSingle,
        Family::DirectDouble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Backbone => "backbone",
            Family::EnSingle => "en_single",
            Family::EnDualRail => "en_dual_rail",
            Family::Swap1 => "swap1",
            Family::Swap2Repeater => "swap2_repeater",
            Family::Swap2Direct => "swap2_direct",
            Family::DirectSingle => "direct_single",
            Family::DirectDouble => "direct_double",
        }
    }
}

/// Knobs of the validation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    /// Random hardware points per family and emission scale.
    pub points: usize,
    /// Emission scales; every deviation must stay below `rel_factor * eps`.
    pub eps: Vec<f64>,
    pub rel_factor: f64,
    pub mc_trials: usize,
    /// Relative tolerance of the race-kernel simulation.
    pub mc_tol: f64,
    /// Relative tolerance of whole-schedule simulations, where the closed forms approximate the
    /// maximum of two non-exponential halves.
    pub schedule_tol: f64,
    pub seed: u64,
    /// Test fixture: multiplies the leading closed-form element of this family by 1.1.
    pub corrupt: Option<Family>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            points: 100,
            eps: vec![1e-3, 1e-4],
            rel_factor: 5.0,
            mc_trials: 1_000_000,
            mc_tol: 0.02,
            schedule_tol: 0.1,
            seed: 7,
            corrupt: None,
        }
    }
}

/// One line of the validation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
    pub passed: bool,
}

impl CheckRow {
    fn new(name: String, deviation: f64, tolerance: f64, detail: String) -> Self {
        Self { passed: deviation <= tolerance, name, deviation, tolerance, detail }
    }
}

/// Largest relative deviation of one family at one point, with the element that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub value: f64,
    pub label: &'static str,
}

type Pairs = Vec<(&'static str, f64, f64)>;

/// Probabilities (labels starting with `P`) are compared relative to themselves. Normalized elements
/// are compared relative to max(|oracle|, eps), the scale of a first-order element.
fn worst(pairs: &Pairs, eps: f64) -> Deviation {
    let mut out = Deviation { value: 0.0, label: "" };
    for &(label, x, y) in pairs {
        let scale = if label.starts_with('P') { y.abs() } else { y.abs().max(eps) };
        let d = (x - y).abs() / scale;
        if d > out.value || d.is_nan() {
            out = Deviation { value: d, label };
        }
    }
    out
}

/// Oracle-ready hardware: narrow detector window, dark counts of the order of the second-order terms.
pub fn random_point(base: &HardwareParams, eps: f64, rng: &mut ChaCha8Rng) -> (HardwareParams, [f64; 4]) {
    let mut p = base.clone();
    let eta_i = rng.gen_range(0.5..=1.0);
    p.eta = eta_i;
    p.eta_prime = eta_i * eta_i;
    p.eta_bb_intrinsic = eta_i;
    p.eta_m = rng.gen_range(0.3..=1.0);
    p.detector_resolution_s = 1e-12;
    p.dark_rate_hz = rng.gen_range(0.0..=1.0) * eps * eps / p.t_a_s;
    let eta_bb = rng.gen_range(0.05..=1.0);
    let e = [rng.gen_range(0.5..=1.0) * eps, rng.gen_range(0.5..=1.0) * eps, rng.gen_range(0.5..=1.0) * eps];
    (p, [eta_bb, e[0], e[1], e[2]])
}

fn en_pairs(c: &EnElements, o: &EnElements) -> Pairs {
    c.labels().iter().zip(o.labels()).map(|(&(l, x), (_, y))| (l, x, y)).collect()
}

fn swap_pairs(c: &SwapElements, o: &SwapElements) -> Pairs {
    c.labels().iter().zip(o.labels()).map(|(&(l, x), (_, y))| (l, x, y)).collect()
}

fn dual_pairs(c: &DualRailState, o: &DualRailState) -> Pairs {
    vec![("a", c.a, o.a), ("A0", c.a0, o.a0), ("A0'", c.a0p, o.a0p), ("A1", c.a1, o.a1), ("A1'", c.a1p, o.a1p), ("A2", c.a2, o.a2)]
}

fn ion_pairs(c: &BipartiteIonState, o: &BipartiteIonState) -> Pairs {
    vec![
        ("alpha", c.alpha.re, o.alpha.re),
        ("D00", c.d00, o.d00),
        ("D01", c.d01, o.d01),
        ("D10", c.d10, o.d10),
        ("D11", c.d11, o.d11),
    ]
}

fn corrupt(pairs: &mut Pairs, on: bool) {
    if on {
        let lead = pairs.iter().enumerate().max_by(|a, b| a.1 .2.abs().total_cmp(&b.1 .2.abs())).map(|(i, _)| i);
        if let Some(i) = lead {
            pairs[i].1 *= 1.1;
        }
    }
}

/// Closed form and oracle at one point, as (label, closed, oracle) triples.
pub fn family_pairs(family: Family, p: &HardwareParams, x: [f64; 4]) -> Result<Pairs> {
    let [eta_bb, p_ion, p_en, p_bb] = x;
    let norm = |s: &BipartiteIonState| s.normalize().map(|v| v.0);
    Ok(match family {
        Family::Backbone => {
            let (po, ex) = oracle_bb(p, eta_bb, p_bb)?;
            let b = bb_state(p, eta_bb, p_bb)?;
            let o = ex.elements;
            let t = ex.trace;
            vec![
                ("B0", b.b0, o.b0 / t),
                ("B1", b.b1, o.b1 / t),
                ("B1'", b.b1p, o.b1p / t),
                ("B2", b.b2, o.b2 / t),
                ("P", bb_click_probability(p, eta_bb, p_bb), po),
            ]
        }
        Family::EnSingle => {
            let (_, ex) = oracle_en_single(p, p_ion, p_en)?;
            let a = en_single_state(p, p_ion, p_en)?;
            let o = EnElements { a0: ex.elements.a0 / ex.trace, a1: ex.elements.a1 / ex.trace, a1p: ex.elements.a1p / ex.trace, a2: ex.elements.a2 / ex.trace, ..ex.elements };
            let mut v = en_pairs(&a, &o);
            v.push(("tan2", a.tan2, o.tan2));
            v.push(("P_EN", en_single_success(p, p_ion, p_en)?, oracle_en_single_success(p, p_ion, p_en)?));
            v
        }
        Family::EnDualRail => {
            let (_, ex) = oracle_en_double(p, p_en)?;
            let (d, _) = en_double_state(p, p_en)?.normalize()?;
            let (o, _) = ex.elements.normalize()?;
            let mut v = dual_pairs(&d, &o);
            v.push(("P_EN", en_double_success(p, p_en), oracle_en_double_success(p, p_en)?));
            v
        }
        Family::Swap1 => {
            let a = en_single_state(p, p_ion, p_en)?;
            let b = bb_state(p, eta_bb, p_bb)?;
            let c = swap1_unnormalized(p, &a, &b);
            let (po, ex) = oracle_swap1(p, &a, &b)?;
            let mut v = swap_pairs(&c.scaled(1.0 / c.trace()), &ex.elements.scaled(1.0 / ex.trace));
            v.push(("P_S1", 2.0 * c.trace() / p.w_swap(), 2.0 * po / p.w_swap()));
            v
        }
        Family::Swap2Repeater | Family::Swap2Direct => {
            let a = en_single_state(p, p_ion, p_en)?;
            let b = bb_state(p, eta_bb, p_bb)?;
            let c = swap1_unnormalized(p, &a, &b);
            let c = c.scaled(1.0 / c.trace());
            let f = if family == Family::Swap2Repeater { c } else { a.as_swap() };
            let d = swap2_unnormalized(p, &c, &f);
            let (po, ex) = oracle_swap2(p, &c, &f)?;
            let o = with_visibility(&ex.elements, p.visibility);
            let mut v = ion_pairs(&norm(&d)?, &norm(&o)?);
            v.push(("P_S2", 2.0 * d.trace() / p.w_swap(), 2.0 * po / p.w_swap()));
            v
        }
        Family::DirectSingle => {
            let eta_d = eta_bb;
            let (pc, raw) = direct_single_click_raw(p, eta_d, p_ion);
            let (po, ex) = oracle_direct_single(p, eta_d, p_ion)?;
            let mut v = ion_pairs(&norm(&raw)?, &norm(&ex.elements)?);
            v.push(("P", pc, po));
            v
        }
        Family::DirectDouble => {
            let raw = direct_double_click_raw(p, eta_bb);
            let (po, ex) = oracle_direct_double(p, eta_bb)?;
            let mut v = ion_pairs(&norm(&raw)?, &norm(&ex.elements)?);
            v.push(("P", raw.trace(), po));
            v
        }
    })
}

/// Worst deviation of one family over `points` random hardware points at emission scale `eps`.
pub fn family_deviation(
    base: &HardwareParams,
    family: Family,
    eps: f64,
    points: usize,
    seed: u64,
    corrupted: bool,
) -> Result<Deviation> {
    let devs: Vec<Deviation> = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (p, x) = random_point(base, eps, &mut rng);
            let mut pairs = family_pairs(family, &p, x)?;
            corrupt(&mut pairs, corrupted);
            Ok(worst(&pairs, eps))
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(Deviation { value: 0.0, label: "" }, |a, b| if b.value > a.value { b } else { a }))
}

/// One row per family and emission scale.
pub fn oracle_equivalence(base: &HardwareParams, opts: &SuiteOptions) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for family in Family::ALL {
        for &eps in &opts.eps {
            let d = family_deviation(base, family, eps, opts.points, opts.seed, opts.corrupt == Some(family))?;
            rows.push(CheckRow::new(
                format!("oracle {} eps={eps:e}", family.as_str()),
                d.value,
                opts.rel_factor * eps,
                format!("worst element {} over {} points", d.label, opts.points),
            ));
        }
    }
    Ok(rows)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_rates(rng: &mut ChaCha8Rng) -> RateSet {
    let mut r = RateSet::ideal(10f64.powf(rng.gen_range(-1.0..2.0)), 10f64.powf(rng.gen_range(-1.0..2.0)));
    for p in r.p_s.iter_mut() {
        *p = rng.gen_range(0.2..=1.0);
    }
    r.p_p = rng.gen_range(0.2..=0.5);
    r
}

/// Closed-form schedules against event simulation and exact identities.
pub fn scheduling_checks(opts: &SuiteOptions) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::new();

    let mut worst_sum: f64 = 0.0;
    for _ in 0..100 {
        let p = dc_orderings(10f64.powf(rng.gen_range(-3.0..3.0)), 10f64.powf(rng.gen_range(-3.0..3.0)));
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    rows.push(CheckRow::new("ordering probabilities sum".into(), worst_sum, 1e-12, "100 random rate pairs".into()));

    let mut r = RateSet::ideal(3.0, 3.0);
    r.p_s[0] = 0.6;
    r.p_s[1] = 0.7;
    let want = 9.0 / (4.0 * 3.0 * 0.6 * 0.7);
    rows.push(CheckRow::new(
        "symmetric single-click half".into(),
        rel(duration_tsc_repeater(&r).0, want),
        1e-12,
        "R_BB = R_EN".into(),
    ));

    let (a, b) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
    rows.push(CheckRow::new(
        "race kernel vs simulation".into(),
        rel(mc_race(a, b, opts.mc_trials, opts.seed), race_kernel(a, b)),
        opts.mc_tol,
        format!("rates {a:.3}, {b:.3}; {} trials", opts.mc_trials),
    ));

    let r = random_rates(&mut rng);
    let (t_sl, _) = duration_tsc_repeater(&r);
    let tsc_sim = mc_duration_repeater(Protocol::Tsc, &r, opts.mc_trials, opts.seed ^ 2)?;
    rows.push(CheckRow::new("single-click repeater vs simulation".into(), rel(tsc_sim, t_sl), opts.schedule_tol, rate_detail(&r)));
    let dc_sim = mc_duration_repeater(Protocol::Dc, &r, opts.mc_trials, opts.seed ^ 3)?;
    rows.push(CheckRow::new(
        "double-click repeater vs simulation".into(),
        rel(dc_sim, duration_dc_repeater(&r)),
        opts.schedule_tol,
        rate_detail(&r),
    ));

    for (proto, topo) in [(Protocol::Tsc, Topology::Repeater), (Protocol::Dc, Topology::Repeater), (Protocol::Dc, Topology::Direct)] {
        let sim = mc_storage(proto, topo, &r, opts.mc_trials, opts.seed ^ 4)?;
        rows.push(CheckRow::new(
            format!("storage {} {} vs simulation", proto.as_str(), topo.as_str()),
            rel(sim, storage_duration(proto, topo, &r)?),
            opts.schedule_tol,
            rate_detail(&r),
        ));
    }
    Ok(rows)
}

fn rate_detail(r: &RateSet) -> String {
    format!("R_BB {:.3} R_EN {:.3} P_S {:.2?}", r.r_bb, r.r_en, r.p_s)
}

/// The full suite: oracle equivalence followed by the schedule checks.
pub fn run_suite(base: &HardwareParams, opts: &SuiteOptions) -> Result<Vec<CheckRow>> {
    let mut rows = oracle_equivalence(base, opts)?;
    rows.extend(scheduling_checks(opts)?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_picks_largest_relative() {
        let pairs = vec![("a", 1.0, 1.0), ("b", 1.1e-3, 1e-3), ("c", 0.0, 0.0), ("d", 2e-6, 1e-6)];
        let d = worst(&pairs, 1e-4);
        assert_eq!(d.label, "b");
        assert!((d.value - 0.1).abs() < 1e-12);
        let p = worst(&[("P", 2e-9, 1e-9)].to_vec(), 1e-4);
        assert!((p.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corruption_is_detected() {
        let base = HardwareParams::from_intrinsic(0.8, 0.5);
        let clean = family_deviation(&base, Family::Backbone, 1e-3, 4, 1, false).unwrap();
        let bad = family_deviation(&base, Family::Backbone, 1e-3, 4, 1, true).unwrap();
        assert!(clean.value < 5e-3);
        assert!(bad.value > 0.09);
    }
}
