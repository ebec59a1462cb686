//! Element-form states expanded into Fock operators, projected back onto element schemas,
//! and brute-force oracles for every closed-form element family.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    apply_bs_with_loss, build_spdc_state, herald_click, BeamSplitterLoss, BeamSplitterModes,
    FockOperator, Ket, LinearMap, ModeRegister,
};
use crate::model::{angle_weights, BbElements, BipartiteIonState, DualRailState, EnElements, HardwareParams, SwapElements};

/// Relative residual above which an operator is not considered to fit a schema.
pub const SCHEMA_TOL: f64 = 1e-6;

/// Detector port of a heralding click.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Plus,
    Minus,
}

impl Port {
    pub fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }
}

/// Element weights recovered from an operator, with the weight the schema cannot describe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extracted<T> {
    pub elements: T,
    pub trace: f64,
    /// Entry-wise l1 distance between the operator and its schema reconstruction.
    pub residual: f64,
}

impl<T> Extracted<T> {
    pub fn relative_residual(&self) -> f64 {
        if self.trace > 0.0 {
            self.residual / self.trace
        } else {
            f64::INFINITY
        }
    }

    /// Errors when the residual exceeds `tol` relative to the trace.
    pub fn ensure_complete(self, tol: f64) -> Result<Self> {
        if self.relative_residual() > tol {
            return Err(Error::SchemaIncomplete { residual: self.residual, trace: self.trace });
        }
        Ok(self)
    }
}

/// Sum of absolute entry differences.
pub fn l1_distance(a: &FockOperator, b: &FockOperator) -> f64 {
    let mut s = 0.0;
    for ((k, br), v) in a.entries() {
        s += (v - b.get(k, br)).abs();
    }
    for ((k, br), v) in b.entries() {
        if a.get(k, br) == 0.0 {
            s += v.abs();
        }
    }
    s
}

/// Product of two operators with disjoint support on the same register.
pub fn join(a: &FockOperator, b: &FockOperator) -> FockOperator {
    let mut out = FockOperator::zero(a.register().clone());
    for ((k1, b1), v1) in a.entries() {
        for ((k2, b2), v2) in b.entries() {
            let k: Ket = k1.iter().zip(k2.iter()).map(|(x, y)| x + y).collect();
            let br: Ket = b1.iter().zip(b2.iter()).map(|(x, y)| x + y).collect();
            out.add_entry(k, br, v1 * v2);
        }
    }
    out
}

fn ket(reg: &ModeRegister, occ: &[(&str, u8)]) -> Result<Ket> {
    reg.ket(occ)
}

/// Single-rail EN or first-swap state on ion `q` and memory `m`, + herald sign.
pub fn swap_operator(reg: Arc<ModeRegister>, q: &str, m: &str, c: &SwapElements) -> Result<FockOperator> {
    let (s2, c2) = angle_weights(c.tan2);
    let (s, co) = (s2.sqrt(), c2.sqrt());
    let r = &reg;
    let mut op = FockOperator::zero(reg.clone());
    op.add_pure(c.c0, &[(ket(r, &[])?, 1.0)]);
    op.add_pure(c.c1p, &[(ket(r, &[(q, 1)])?, 1.0)]);
    op.add_pure(c.c1, &[(ket(r, &[(q, 1)])?, co), (ket(r, &[(m, 1)])?, s)]);
    op.add_pure(c.c1pp, &[(ket(r, &[(m, 1)])?, 1.0)]);
    op.add_pure(c.c2, &[(ket(r, &[(q, 1), (m, 1)])?, 1.0)]);
    if c.c2p != 0.0 {
        op.add_pure(c.c2p, &[(ket(r, &[(q, 1), (m, 1)])?, co), (ket(r, &[(m, 2)])?, SQRT_2 * s)]);
    }
    if c.c3 != 0.0 {
        op.add_pure(c.c3, &[(ket(r, &[(q, 1), (m, 2)])?, 1.0)]);
    }
    Ok(op)
}

/// Single-click EN state on ion `q` and memory `m`.
pub fn en_operator(reg: Arc<ModeRegister>, q: &str, m: &str, a: &EnElements) -> Result<FockOperator> {
    swap_operator(reg, q, m, &a.as_swap())
}

/// Backbone state on memories `l` and `r`.
pub fn bb_operator(reg: Arc<ModeRegister>, l: &str, r: &str, b: &BbElements) -> Result<FockOperator> {
    let g = &reg;
    let mut op = FockOperator::zero(reg.clone());
    op.add_pure(b.b0, &[(ket(g, &[])?, 1.0)]);
    let k10 = ket(g, &[(l, 1)])?;
    let k01 = ket(g, &[(r, 1)])?;
    op.add_pure(b.b1, &[(k10, FRAC_1_SQRT_2), (k01, FRAC_1_SQRT_2)]);
    op.add_pure(b.b1p, &[(k10, FRAC_1_SQRT_2), (k01, -FRAC_1_SQRT_2)]);
    if b.b2 != 0.0 {
        let k11 = ket(g, &[(l, 1), (r, 1)])?;
        op.add_pure(b.b2, &[(k11, 1.0), (ket(g, &[(l, 2)])?, SQRT_2)]);
        op.add_pure(b.b2, &[(k11, 1.0), (ket(g, &[(r, 2)])?, SQRT_2)]);
    }
    Ok(op)
}

/// Double-click EN state on ion `q` and rail memories `r0`, `r1`.
pub fn dual_rail_operator(reg: Arc<ModeRegister>, q: &str, r0: &str, r1: &str, d: &DualRailState) -> Result<FockOperator> {
    let g = &reg;
    let mut op = FockOperator::zero(reg.clone());
    op.add_pure(d.a0p, &[(ket(g, &[])?, 1.0)]);
    op.add_pure(d.a0, &[(ket(g, &[(q, 1)])?, 1.0)]);
    op.add_pure(d.a, &[(ket(g, &[(r1, 1)])?, FRAC_1_SQRT_2), (ket(g, &[(q, 1), (r0, 1)])?, FRAC_1_SQRT_2)]);
    // |k>|1_k> and |1-k>|1_k>
    op.add_pure(d.a1p, &[(ket(g, &[(r0, 1)])?, 1.0)]);
    op.add_pure(d.a1p, &[(ket(g, &[(q, 1), (r1, 1)])?, 1.0)]);
    op.add_pure(d.a1, &[(ket(g, &[(q, 1), (r0, 1)])?, 1.0)]);
    op.add_pure(d.a1, &[(ket(g, &[(r1, 1)])?, 1.0)]);
    op.add_pure(d.a2, &[(ket(g, &[(r0, 1), (r1, 1)])?, 1.0)]);
    op.add_pure(d.a2, &[(ket(g, &[(q, 1), (r0, 1), (r1, 1)])?, 1.0)]);
    Ok(op)
}

/// Two-ion state on ions `l` and `r`.
pub fn ion_pair_operator(reg: Arc<ModeRegister>, l: &str, r: &str, s: &BipartiteIonState) -> Result<FockOperator> {
    let g = &reg;
    let k01 = ket(g, &[(r, 1)])?;
    let k10 = ket(g, &[(l, 1)])?;
    let mut op = FockOperator::zero(reg.clone());
    op.add_entry(ket(g, &[])?, ket(g, &[])?, s.d00);
    op.add_entry(k01, k01, s.d01);
    op.add_entry(k10, k10, s.d10);
    let k11 = ket(g, &[(l, 1), (r, 1)])?;
    op.add_entry(k11, k11, s.d11);
    op.add_entry(k01, k10, s.alpha.re);
    op.add_entry(k10, k01, s.alpha.re);
    Ok(op)
}

fn extracted<T>(op: &FockOperator, rebuilt: &FockOperator, elements: T) -> Extracted<T> {
    Extracted { elements, trace: op.trace(), residual: l1_distance(op, rebuilt) }
}

/// Projects an ion-memory operator onto the first-swap schema at a known mixing angle.
pub fn swap_elements_from_operator(op: &FockOperator, q: &str, m: &str, tan2: f64) -> Result<Extracted<SwapElements>> {
    let reg = op.register().clone();
    let g = &reg;
    let (s2, c2) = angle_weights(tan2);
    let d = |occ: &[(&str, u8)]| -> Result<f64> {
        let k = ket(g, occ)?;
        Ok(op.get(&k, &k))
    };
    let coh = op.get(&ket(g, &[(q, 1)])?, &ket(g, &[(m, 1)])?);
    let c1 = if s2 > 0.0 && c2 > 0.0 { coh / (s2 * c2).sqrt() } else { 0.0 };
    let c2p = if s2 > 0.0 { d(&[(m, 2)])? / (2.0 * s2) } else { 0.0 };
    let el = SwapElements {
        c0: d(&[])?,
        c1,
        c1p: d(&[(q, 1)])? - c1 * c2,
        c1pp: d(&[(m, 1)])? - c1 * s2,
        c2: d(&[(q, 1), (m, 1)])? - c2p * c2,
        c2p,
        c3: d(&[(q, 1), (m, 2)])?,
        tan2,
    };
    let rebuilt = swap_operator(reg.clone(), q, m, &el)?;
    Ok(extracted(op, &rebuilt, el))
}

/// Projects an ion-memory operator onto the EN schema; the mixing angle is read from the coherence.
pub fn en_elements_from_operator(op: &FockOperator, q: &str, m: &str) -> Result<Extracted<EnElements>> {
    let reg = op.register().clone();
    let g = &reg;
    let k0m = ket(g, &[(m, 1)])?;
    let k1 = ket(g, &[(q, 1)])?;
    let coh = op.get(&k1, &k0m);
    let p0m = op.get(&k0m, &k0m);
    if !(coh.abs() > 0.0) {
        return Err(Error::Precondition("EN operator has no ion-memory coherence".into()));
    }
    let tan2 = (p0m / coh).powi(2);
    let sw = swap_elements_from_operator(op, q, m, tan2)?;
    let c = sw.elements;
    let el = EnElements { a0: c.c0, a1: c.c1, a1p: c.c1p, a2: c.c2, tan2 };
    let rebuilt = en_operator(reg.clone(), q, m, &el)?;
    Ok(extracted(op, &rebuilt, el))
}

/// Projects a memory-memory operator onto the backbone schema.
pub fn bb_elements_from_operator(op: &FockOperator, l: &str, r: &str) -> Result<Extracted<BbElements>> {
    let reg = op.register().clone();
    let g = &reg;
    let k10 = ket(g, &[(l, 1)])?;
    let k01 = ket(g, &[(r, 1)])?;
    let plus = [(k10, FRAC_1_SQRT_2), (k01, FRAC_1_SQRT_2)];
    let minus = [(k10, FRAC_1_SQRT_2), (k01, -FRAC_1_SQRT_2)];
    let k20 = ket(g, &[(l, 2)])?;
    let k02 = ket(g, &[(r, 2)])?;
    let el = BbElements {
        b0: op.get(&reg.vacuum(), &reg.vacuum()),
        b1: op.expectation(&plus),
        b1p: op.expectation(&minus),
        b2: 0.25 * (op.get(&k20, &k20) + op.get(&k02, &k02)),
    };
    let rebuilt = bb_operator(reg.clone(), l, r, &el)?;
    Ok(extracted(op, &rebuilt, el))
}

/// Projects an ion-ion operator onto the final-state schema.
pub fn ion_pair_from_operator(op: &FockOperator, l: &str, r: &str) -> Result<Extracted<BipartiteIonState>> {
    let reg = op.register().clone();
    let g = &reg;
    let d = |occ: &[(&str, u8)]| -> Result<f64> {
        let k = ket(g, occ)?;
        Ok(op.get(&k, &k))
    };
    let alpha = op.get(&ket(g, &[(r, 1)])?, &ket(g, &[(l, 1)])?);
    let el = BipartiteIonState::new(alpha, d(&[])?, d(&[(r, 1)])?, d(&[(l, 1)])?, d(&[(l, 1), (r, 1)])?);
    let rebuilt = ion_pair_operator(reg.clone(), l, r, &el)?;
    Ok(extracted(op, &rebuilt, el))
}

/// Projects an ion/two-rail operator onto the double-click EN schema.
pub fn dual_rail_from_operator(op: &FockOperator, q: &str, r0: &str, r1: &str) -> Result<Extracted<DualRailState>> {
    let reg = op.register().clone();
    let g = &reg;
    let d = |occ: &[(&str, u8)]| -> Result<f64> {
        let k = ket(g, occ)?;
        Ok(op.get(&k, &k))
    };
    let a = 2.0 * op.get(&ket(g, &[(r1, 1)])?, &ket(g, &[(q, 1), (r0, 1)])?);
    let a1 = 0.5 * (d(&[(r1, 1)])? + d(&[(q, 1), (r0, 1)])?) - a / 2.0;
    let a1p = 0.5 * (d(&[(r0, 1)])? + d(&[(q, 1), (r1, 1)])?);
    let a2 = 0.5 * (d(&[(r0, 1), (r1, 1)])? + d(&[(q, 1), (r0, 1), (r1, 1)])?);
    let el = DualRailState { a, a0: d(&[(q, 1)])?, a0p: d(&[])?, a1, a1p, a2 };
    let rebuilt = dual_rail_operator(reg.clone(), q, r0, r1, &el)?;
    Ok(extracted(op, &rebuilt, el))
}

/// Detector modes every oracle register carries for swaps.
pub const SWAP_DETECTORS: [(&str, u8); 2] = [("sw+", 4), ("sw-", 4)];

/// Lossless balanced interference of memories `a` and `b` followed by a single-click herald on `port`.
///
/// Returns the raw click probability and the heralded operator with both memories consumed.
pub fn memory_swap(op: &FockOperator, a: &str, b: &str, port: Port, w_swap: f64, p_dark: f64) -> Result<(f64, FockOperator)> {
    let reg = op.register().clone();
    let h = FRAC_1_SQRT_2;
    let map = LinearMap::new()
        .rule(&reg, a, &[("sw+", h), ("sw-", h)])?
        .rule(&reg, b, &[("sw+", h), ("sw-", -h)])?;
    let out = op.apply_map(&map)?;
    let (click, other) = match port {
        Port::Plus => ("sw+", "sw-"),
        Port::Minus => ("sw-", "sw+"),
    };
    let before = op.trace();
    let (p, st) = herald_click(&out, click, other, w_swap, p_dark)?;
    Ok((p / before, st))
}

fn arc(modes: &[(&str, u8)]) -> Result<Arc<ModeRegister>> {
    Ok(Arc::new(ModeRegister::new(modes)?))
}

/// Oracle backbone link: two correlated SPDC sources interfered over `eta_bb`, one click on `d+`.
pub fn oracle_bb(params: &HardwareParams, eta_bb: f64, p_bb: f64) -> Result<(f64, Extracted<BbElements>)> {
    let reg = arc(&[
        ("bl", 2),
        ("cl", 2),
        ("br", 2),
        ("cr", 2),
        ("d+", 4),
        ("d-", 4),
        ("ll", 2),
        ("lr", 2),
        ("l+", 4),
        ("l-", 4),
        ("ml", 2),
        ("mr", 2),
        ("xl", 2),
        ("xr", 2),
    ])?;
    let left = build_spdc_state(reg.clone(), "bl", "cl", p_bb, true)?;
    let right = build_spdc_state(reg.clone(), "br", "cr", p_bb, true)?;
    let st = join(&left, &right);
    let modes = BeamSplitterModes {
        a: "bl",
        b: "br",
        d_plus: "d+",
        d_minus: "d-",
        loss_a: "ll",
        loss_b: "lr",
        loss_plus: "l+",
        loss_minus: "l-",
    };
    let loss = BeamSplitterLoss { eta_a: eta_bb, eta_b: eta_bb, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
    let st = apply_bs_with_loss(&st, &modes, &loss)?;
    let st = memory_loss(&st, &[("cl", "ml", "xl"), ("cr", "mr", "xr")], params.eta_m)?;
    let (p, st) = herald_click(&st, "d+", "d-", params.w_bb(), params.p_dark())?;
    let ex = bb_elements_from_operator(&st, "ml", "mr")?;
    Ok((p, ex))
}

fn memory_loss(op: &FockOperator, maps: &[(&str, &str, &str)], eta_m: f64) -> Result<FockOperator> {
    let reg = op.register().clone();
    let mut map = LinearMap::new();
    let mut lost = Vec::new();
    for &(src, kept, loss) in maps {
        map = map.rule(&reg, src, &[(kept, eta_m.sqrt()), (loss, (1.0 - eta_m).sqrt())])?;
        lost.push(loss);
    }
    op.apply_map(&map)?.partial_trace(&lost)
}

/// Window-resolved ion emission: the photon lands in the click window with weight `w`.
fn windowed_ion(reg: Arc<ModeRegister>, q: &str, a_in: &str, a_out: &str, p_ion: f64, w: f64) -> Result<FockOperator> {
    let g = &reg;
    let amps = vec![
        (ket(g, &[])?, (1.0 - p_ion).sqrt()),
        (ket(g, &[(q, 1), (a_in, 1)])?, (p_ion * w).sqrt()),
        (ket(g, &[(q, 1), (a_out, 1)])?, (p_ion * (1.0 - w)).sqrt()),
    ];
    Ok(FockOperator::from_pure(reg, &amps))
}

/// Window-resolved uncorrelated SPDC pairs. Only the partner `c` of an in-window herald photon is kept
/// by the memory; partners `x` of photons outside the window are filtered out.
fn windowed_spdc(reg: Arc<ModeRegister>, b_in: &str, b_out: &str, c: &str, x: &str, p: f64, w: f64) -> Result<FockOperator> {
    let g = &reg;
    let p2 = p * p / 2.0;
    let amps = vec![
        (ket(g, &[])?, (1.0 - p - p2).sqrt()),
        (ket(g, &[(b_in, 1), (c, 1)])?, (p * w).sqrt()),
        (ket(g, &[(b_out, 1), (x, 1)])?, (p * (1.0 - w)).sqrt()),
        (ket(g, &[(b_in, 2), (c, 2)])?, (p2 * w * w).sqrt()),
        (ket(g, &[(b_in, 1), (c, 1), (b_out, 1), (x, 1)])?, (p2 * 2.0 * w * (1.0 - w)).sqrt()),
        (ket(g, &[(b_out, 2), (x, 2)])?, (p2 * (1.0 - w) * (1.0 - w)).sqrt()),
    ];
    Ok(FockOperator::from_pure(reg, &amps))
}

/// Probability that one SPDC bin leaves both detectors dark.
pub fn oracle_bin_vacuum(eta_prime: f64, p: f64) -> Result<f64> {
    let reg = arc(&[("b", 2), ("c", 2), ("d", 2), ("l", 2)])?;
    let st = build_spdc_state(reg.clone(), "b", "c", p, false)?;
    let map = LinearMap::new().rule(&reg, "b", &[("d", eta_prime.sqrt()), ("l", (1.0 - eta_prime).sqrt())])?;
    Ok(st.apply_map(&map)?.project(&[("d", 0)])?.trace())
}

fn en_rail_modes(k: usize) -> Vec<(String, u8)> {
    let names: [(&str, u8); 15] = [
        ("ain", 1),
        ("aout", 1),
        ("bin", 2),
        ("bout", 2),
        ("c", 2),
        ("x", 2),
        ("d+", 4),
        ("d-", 4),
        ("la", 2),
        ("lb", 2),
        ("l+", 4),
        ("l-", 4),
        ("lao", 2),
        ("lbo", 2),
        ("lc", 2),
    ];
    names.iter().map(|(n, c)| (format!("{n}{k}"), *c)).collect()
}

/// Interferes the window-resolved ion and SPDC photons of rail `k` and keeps memory `m{k}`.
fn en_rail_optics(op: &FockOperator, params: &HardwareParams, k: usize) -> Result<FockOperator> {
    let n = |s: &str| format!("{s}{k}");
    let (ain, bin, dp, dm, la, lb, lp, lm) = (n("ain"), n("bin"), n("d+"), n("d-"), n("la"), n("lb"), n("l+"), n("l-"));
    let modes = BeamSplitterModes {
        a: &ain,
        b: &bin,
        d_plus: &dp,
        d_minus: &dm,
        loss_a: &la,
        loss_b: &lb,
        loss_plus: &lp,
        loss_minus: &lm,
    };
    let loss = BeamSplitterLoss { eta_a: params.eta, eta_b: params.eta_prime, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
    let st = apply_bs_with_loss(op, &modes, &loss)?;
    let reg = st.register().clone();
    // Photons detected outside the click window reject the event; only their loss branch survives.
    let map = LinearMap::new()
        .rule(&reg, &n("aout"), &[(&n("lao"), (1.0 - params.eta).sqrt())])?
        .rule(&reg, &n("bout"), &[(&n("lbo"), (1.0 - params.eta_prime).sqrt())])?;
    let st = st.apply_map(&map)?;
    let st = memory_loss(&st, &[(&n("c"), &n("m"), &n("lc"))], params.eta_m)?;
    st.partial_trace(&[&n("lao"), &n("lbo"), &n("x")])
}

/// Oracle single-click EN: raw click probability on `d+` at one click time, and the heralded elements.
pub fn oracle_en_single(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<(f64, Extracted<EnElements>)> {
    let mut modes: Vec<(String, u8)> = vec![("q".into(), 1), ("m0".into(), 2)];
    modes.extend(en_rail_modes(0));
    let refs: Vec<(&str, u8)> = modes.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let reg = arc(&refs)?;
    let ion = windowed_ion(reg.clone(), "q", "ain0", "aout0", p_ion, params.w_ion())?;
    let spdc = windowed_spdc(reg.clone(), "bin0", "bout0", "c0", "x0", p_spdc, params.w_spdc())?;
    let st = en_rail_optics(&join(&ion, &spdc), params, 0)?;
    let (p, st) = herald_click(&st, "d+0", "d-0", 1.0, params.p_dark())?;
    let ex = en_elements_from_operator(&st, "q", "m0")?;
    Ok((p, ex))
}

/// Oracle single-click EN success probability: both ports, all click times, N-1 dark bins.
pub fn oracle_en_single_success(params: &HardwareParams, p_ion: f64, p_spdc: f64) -> Result<f64> {
    let (p, _) = oracle_en_single(params, p_ion, p_spdc)?;
    let vac = oracle_bin_vacuum(params.eta_prime, p_spdc)?;
    Ok(vac.powi(params.n_bins as i32 - 1) * 2.0 * p * params.t_a_s / params.detector_resolution_s)
}

/// Oracle double-click EN: raw probability of a `d+` click on both rails, and the heralded elements.
pub fn oracle_en_double(params: &HardwareParams, p_spdc: f64) -> Result<(f64, Extracted<DualRailState>)> {
    let mut modes: Vec<(String, u8)> = vec![("q".into(), 1), ("m0".into(), 2), ("m1".into(), 2)];
    modes.extend(en_rail_modes(0));
    modes.extend(en_rail_modes(1));
    let refs: Vec<(&str, u8)> = modes.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let reg = arc(&refs)?;
    let g = &reg;
    let w = params.w_ion();
    let h = 0.5f64;
    // (|0> a_0 + |1> a_1)/sqrt2 with each rail photon split into window and remainder.
    let ion = FockOperator::from_pure(
        reg.clone(),
        &[
            (ket(g, &[("ain0", 1)])?, (h * w).sqrt()),
            (ket(g, &[("aout0", 1)])?, (h * (1.0 - w)).sqrt()),
            (ket(g, &[("q", 1), ("ain1", 1)])?, (h * w).sqrt()),
            (ket(g, &[("q", 1), ("aout1", 1)])?, (h * (1.0 - w)).sqrt()),
        ],
    );
    let s0 = windowed_spdc(reg.clone(), "bin0", "bout0", "c0", "x0", p_spdc, params.w_spdc())?;
    let s1 = windowed_spdc(reg.clone(), "bin1", "bout1", "c1", "x1", p_spdc, params.w_spdc())?;
    // Rails touch disjoint modes, so rail 0 is heralded before rail 1 is populated.
    let st = en_rail_optics(&join(&ion, &s0), params, 0)?;
    let (_, st) = herald_click(&st, "d+0", "d-0", 1.0, params.p_dark())?;
    let st = en_rail_optics(&join(&st, &s1), params, 1)?;
    let (_, st) = herald_click(&st, "d+1", "d-1", 1.0, params.p_dark())?;
    let p = st.trace();
    let ex = dual_rail_from_operator(&st, "q", "m0", "m1")?;
    Ok((p, ex))
}

/// Oracle double-click EN success: four port pairs, both click times integrated, N-1 dark bins per rail.
pub fn oracle_en_double_success(params: &HardwareParams, p_spdc: f64) -> Result<f64> {
    let (p, _) = oracle_en_double(params, p_spdc)?;
    let vac = oracle_bin_vacuum(params.eta_prime, p_spdc)?;
    let span = params.t_a_s / params.detector_resolution_s;
    Ok(params.dc_acceptance * vac.powi(2 * (params.n_bins as i32 - 1)) * 4.0 * p * span * span)
}

fn swap_register(extra: &[(&str, u8)]) -> Result<Arc<ModeRegister>> {
    let mut modes: Vec<(&str, u8)> = extra.to_vec();
    modes.extend_from_slice(&SWAP_DETECTORS);
    arc(&modes)
}

/// Oracle first swap: EN memory interfered with one backbone memory. Returns P_S1 and non-normalized elements.
pub fn oracle_swap1(params: &HardwareParams, a: &EnElements, b: &BbElements) -> Result<(f64, Extracted<SwapElements>)> {
    let reg = swap_register(&[("q", 1), ("me", 2), ("bl", 2), ("br", 2)])?;
    let st = join(&en_operator(reg.clone(), "q", "me", a)?, &bb_operator(reg.clone(), "bl", "br", b)?);
    let (p, st) = memory_swap(&st, "me", "bl", Port::Plus, params.w_swap(), params.p_dark())?;
    let ex = swap_elements_from_operator(&st, "q", "br", a.tan2)?;
    Ok((p, ex))
}

/// Oracle second swap between two ion-memory states. Returns P_S2 and the non-normalized ion-ion state.
pub fn oracle_swap2(params: &HardwareParams, c: &SwapElements, f: &SwapElements) -> Result<(f64, Extracted<BipartiteIonState>)> {
    let reg = swap_register(&[("ql", 1), ("ml", 2), ("qr", 1), ("mr", 2)])?;
    let st = join(&swap_operator(reg.clone(), "ql", "ml", c)?, &swap_operator(reg.clone(), "qr", "mr", f)?);
    let (p, st) = memory_swap(&st, "ml", "mr", Port::Plus, params.w_swap(), params.p_dark())?;
    let ex = ion_pair_from_operator(&st, "ql", "qr")?;
    Ok((p, ex))
}

/// Oracle direct single-click ion-ion link over efficiency `eta_d`. Returns P and non-normalized elements.
pub fn oracle_direct_single(params: &HardwareParams, eta_d: f64, p_ion: f64) -> Result<(f64, Extracted<BipartiteIonState>)> {
    let reg = arc(&[
        ("ql", 1),
        ("qr", 1),
        ("al", 1),
        ("ar", 1),
        ("alo", 1),
        ("aro", 1),
        ("d+", 2),
        ("d-", 2),
        ("ll", 2),
        ("lr", 2),
        ("l+", 2),
        ("l-", 2),
        ("llo", 1),
        ("lro", 1),
    ])?;
    let w = params.w_ion();
    let st = join(
        &windowed_ion(reg.clone(), "ql", "al", "alo", p_ion, w)?,
        &windowed_ion(reg.clone(), "qr", "ar", "aro", p_ion, w)?,
    );
    let modes = BeamSplitterModes {
        a: "al",
        b: "ar",
        d_plus: "d+",
        d_minus: "d-",
        loss_a: "ll",
        loss_b: "lr",
        loss_plus: "l+",
        loss_minus: "l-",
    };
    let loss = BeamSplitterLoss { eta_a: eta_d, eta_b: eta_d, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
    let st = apply_bs_with_loss(&st, &modes, &loss)?;
    let reg = st.register().clone();
    let map = LinearMap::new()
        .rule(&reg, "alo", &[("llo", (1.0 - eta_d).sqrt())])?
        .rule(&reg, "aro", &[("lro", (1.0 - eta_d).sqrt())])?;
    let st = st.apply_map(&map)?.partial_trace(&["llo", "lro"])?;
    let (p, st) = herald_click(&st, "d+", "d-", 1.0, params.p_dark())?;
    Ok((p, ion_pair_from_operator(&st, "ql", "qr")?))
}

/// Oracle direct double-click link: both ions emit one photon over two rails; one `d+` click per rail.
pub fn oracle_direct_double(params: &HardwareParams, eta_d: f64) -> Result<(f64, Extracted<BipartiteIonState>)> {
    let mut modes: Vec<(String, u8)> = vec![("ql".into(), 1), ("qr".into(), 1)];
    for k in 0..2 {
        for (n, c) in [
            ("al", 1u8),
            ("ar", 1),
            ("alo", 1),
            ("aro", 1),
            ("d+", 2),
            ("d-", 2),
            ("ll", 2),
            ("lr", 2),
            ("l+", 2),
            ("l-", 2),
            ("llo", 1),
            ("lro", 1),
        ] {
            modes.push((format!("{n}{k}"), c));
        }
    }
    let refs: Vec<(&str, u8)> = modes.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let reg = arc(&refs)?;
    let g = &reg;
    let w = params.w_ion();
    let side = |q: &str, pre: &str| -> Result<FockOperator> {
        let (i0, o0, i1, o1) = (format!("{pre}0"), format!("{pre}o0"), format!("{pre}1"), format!("{pre}o1"));
        Ok(FockOperator::from_pure(
            reg.clone(),
            &[
                (ket(g, &[(&i0, 1)])?, (0.5 * w).sqrt()),
                (ket(g, &[(&o0, 1)])?, (0.5 * (1.0 - w)).sqrt()),
                (ket(g, &[(q, 1), (&i1, 1)])?, (0.5 * w).sqrt()),
                (ket(g, &[(q, 1), (&o1, 1)])?, (0.5 * (1.0 - w)).sqrt()),
            ],
        ))
    };
    let mut st = join(&side("ql", "al")?, &side("qr", "ar")?);
    for k in 0..2 {
        let n = |s: &str| format!("{s}{k}");
        let (al, ar, dp, dm, ll, lr, lp, lm) = (n("al"), n("ar"), n("d+"), n("d-"), n("ll"), n("lr"), n("l+"), n("l-"));
        let modes = BeamSplitterModes {
            a: &al,
            b: &ar,
            d_plus: &dp,
            d_minus: &dm,
            loss_a: &ll,
            loss_b: &lr,
            loss_plus: &lp,
            loss_minus: &lm,
        };
        let loss = BeamSplitterLoss { eta_a: eta_d, eta_b: eta_d, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
        st = apply_bs_with_loss(&st, &modes, &loss)?;
        let reg = st.register().clone();
        let map = LinearMap::new()
            .rule(&reg, &n("alo"), &[(&n("llo"), (1.0 - eta_d).sqrt())])?
            .rule(&reg, &n("aro"), &[(&n("lro"), (1.0 - eta_d).sqrt())])?;
        st = st.apply_map(&map)?.partial_trace(&[&n("llo"), &n("lro")])?;
    }
    let (_, st) = herald_click(&st, "d+0", "d-0", 1.0, params.p_dark())?;
    let (_, st) = herald_click(&st, "d+1", "d-1", 1.0, params.p_dark())?;
    Ok((st.trace(), ion_pair_from_operator(&st, "ql", "qr")?))
}

/// Re-weights the coherence of an ion-pair state by a visibility factor.
pub fn with_visibility(s: &BipartiteIonState, v: Complex64) -> BipartiteIonState {
    BipartiteIonState { alpha: s.alpha * v, ..*s }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HardwareParams {
        let mut p = HardwareParams::from_intrinsic(0.8, 0.5);
        p.detector_resolution_s = 1e-12;
        p
    }

    #[test]
    fn expansions_round_trip() {
        let reg = swap_register(&[("q", 1), ("m", 2), ("l", 2), ("r", 2), ("r0", 2), ("r1", 2)]).unwrap();
        let c = SwapElements { c0: 0.1, c1: 0.5, c1p: 0.05, c1pp: 0.07, c2: 0.03, c2p: 0.02, c3: 0.01, tan2: 0.4 };
        let op = swap_operator(reg.clone(), "q", "m", &c).unwrap();
        assert!((op.trace() - c.trace()).abs() < 1e-15);
        let ex = swap_elements_from_operator(&op, "q", "m", 0.4).unwrap();
        assert!(ex.residual < 1e-14);
        assert!((ex.elements.c2p - 0.02).abs() < 1e-15);

        let b = BbElements { b0: 0.4, b1: 0.5, b1p: 0.04, b2: 0.01 };
        let op = bb_operator(reg.clone(), "l", "r", &b).unwrap();
        assert!((op.trace() - b.trace()).abs() < 1e-15);
        let ex = bb_elements_from_operator(&op, "l", "r").unwrap();
        assert!(ex.residual < 1e-14);
        assert!((ex.elements.b1p - 0.04).abs() < 1e-15);

        let d = DualRailState { a: 0.6, a0: 0.05, a0p: 0.06, a1: 0.04, a1p: 0.03, a2: 0.1 };
        let op = dual_rail_operator(reg.clone(), "q", "r0", "r1", &d).unwrap();
        assert!((op.trace() - d.trace()).abs() < 1e-15);
        let ex = dual_rail_from_operator(&op, "q", "r0", "r1").unwrap();
        assert!(ex.residual < 1e-14);
    }

    #[test]
    fn ideal_bb_is_bell_pair() {
        let mut p = params();
        p.eta_m = 1.0;
        p.dark_rate_hz = 0.0;
        let (_, ex) = oracle_bb(&p, 0.5, 1e-7).unwrap();
        let (b, _) = crate::model::SingleRailState::Bb(ex.elements).normalize().unwrap();
        match b {
            crate::model::SingleRailState::Bb(b) => assert!(b.b1 > 1.0 - 1e-6),
            _ => unreachable!(),
        }
    }

    #[test]
    fn vacuum_bb_is_b0() {
        let reg = swap_register(&[("l", 2), ("r", 2)]).unwrap();
        let op = FockOperator::from_pure(reg.clone(), &[(reg.vacuum(), 1.0)]);
        let ex = bb_elements_from_operator(&op, "l", "r").unwrap();
        assert_eq!(ex.elements.b0, 1.0);
        assert_eq!(ex.residual, 0.0);
    }

    #[test]
    fn swap_port_flips_coherence_sign() {
        let p = params();
        let reg = swap_register(&[("ql", 1), ("ml", 2), ("qr", 1), ("mr", 2)]).unwrap();
        let c = SwapElements { c0: 0.0, c1: 1.0, c1p: 0.0, c1pp: 0.0, c2: 0.0, c2p: 0.0, c3: 0.0, tan2: 1.0 };
        let st = join(&swap_operator(reg.clone(), "ql", "ml", &c).unwrap(), &swap_operator(reg.clone(), "qr", "mr", &c).unwrap());
        let (_, plus) = memory_swap(&st, "ml", "mr", Port::Plus, p.w_swap(), 0.0).unwrap();
        let (_, minus) = memory_swap(&st, "ml", "mr", Port::Minus, p.w_swap(), 0.0).unwrap();
        let a = ion_pair_from_operator(&plus, "ql", "qr").unwrap().elements.alpha.re;
        let b = ion_pair_from_operator(&minus, "ql", "qr").unwrap().elements.alpha.re;
        assert!(a > 0.0);
        assert!((a + b).abs() < 1e-15);
    }
}
