//! Truncated Fock-space density operators for linear optics with loss and heralded detection.
//!
//! A register is a list of named bosonic modes, each with a photon cap. Ion qubits are
//! modes with cap 1. Operators are sparse real tables keyed by (ket, bra) occupations.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest number of modes a register may hold.
pub const MAX_MODES: usize = 48;

/// Occupation numbers of every register mode; slots past the register length stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ket([u8; MAX_MODES]);

impl Default for Ket {
    fn default() -> Self {
        Ket([0; MAX_MODES])
    }
}

impl Deref for Ket {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl DerefMut for Ket {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

impl FromIterator<u8> for Ket {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut k = Ket::default();
        for (slot, v) in k.0.iter_mut().zip(iter) {
            *slot = v;
        }
        k
    }
}

/// Ordered set of named modes with per-mode photon caps.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRegister {
    names: Vec<String>,
    caps: Vec<u8>,
}

impl ModeRegister {
    pub fn new(modes: &[(&str, u8)]) -> Result<Self> {
        if modes.len() > MAX_MODES {
            return Err(Error::InvalidParam { name: "modes", reason: format!("{} modes exceed {MAX_MODES}", modes.len()) });
        }
        let mut names = Vec::with_capacity(modes.len());
        let mut caps = Vec::with_capacity(modes.len());
        for &(name, cap) in modes {
            if cap < 1 {
                return Err(Error::InvalidParam { name: "cap", reason: format!("mode `{name}` has cap 0") });
            }
            if names.iter().any(|n| n == name) {
                return Err(Error::InvalidParam { name: "mode", reason: format!("duplicate mode `{name}`") });
            }
            names.push(name.to_string());
            caps.push(cap);
        }
        Ok(Self { names, caps })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownMode(name.to_string()))
    }

    pub fn cap(&self, idx: usize) -> u8 {
        self.caps[idx]
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn vacuum(&self) -> Ket {
        Ket::default()
    }

    /// Ket with the listed occupations and vacuum elsewhere.
    pub fn ket(&self, occ: &[(&str, u8)]) -> Result<Ket> {
        let mut k = self.vacuum();
        for &(name, n) in occ {
            let i = self.index(name)?;
            if n > self.caps[i] {
                return Err(Error::CapOverflow { mode: name.to_string(), count: n as u32, cap: self.caps[i] });
            }
            k[i] = n;
        }
        Ok(k)
    }
}

/// Linear map of creation operators: each source mode is replaced by a combination of target modes.
///
/// Missing norm (sum of |c|^2 below 1) removes amplitude, which models outcomes rejected by a herald.
#[derive(Debug, Clone, Default)]
pub struct LinearMap {
    rules: Vec<(usize, Vec<(usize, f64)>)>,
}

impl LinearMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, reg: &ModeRegister, src: &str, targets: &[(&str, f64)]) -> Result<Self> {
        let s = reg.index(src)?;
        let mut t = Vec::with_capacity(targets.len());
        for &(name, c) in targets {
            let i = reg.index(name)?;
            if i == s {
                return Err(Error::InvalidParam { name: "target", reason: format!("`{name}` maps onto itself") });
            }
            if c != 0.0 {
                t.push((i, c));
            }
        }
        self.rules.push((s, t));
        Ok(self)
    }

    fn apply_ket(&self, reg: &ModeRegister, ket: &Ket) -> Result<Vec<(Ket, f64)>> {
        let mut base = *ket;
        let mut counts = Vec::with_capacity(self.rules.len());
        for (s, _) in &self.rules {
            counts.push(base[*s]);
            base[*s] = 0;
        }
        let mut terms: Vec<(Ket, f64)> = vec![(base, 1.0)];
        for ((_, targets), &n) in self.rules.iter().zip(&counts) {
            if n == 0 {
                continue;
            }
            let mut fact = 1.0;
            for _ in 0..n {
                let mut next: HashMap<Ket, f64> = HashMap::new();
                for (k, amp) in &terms {
                    for &(t, c) in targets {
                        let occ = k[t];
                        if occ + 1 > reg.cap(t) {
                            return Err(Error::CapOverflow {
                                mode: reg.name(t).to_string(),
                                count: occ as u32 + 1,
                                cap: reg.cap(t),
                            });
                        }
                        let mut nk = *k;
                        nk[t] = occ + 1;
                        *next.entry(nk).or_insert(0.0) += amp * c * ((occ + 1) as f64).sqrt();
                    }
                }
                terms = next.into_iter().collect();
            }
            for i in 1..=n {
                fact *= i as f64;
            }
            let norm = 1.0 / fact.sqrt();
            for (_, a) in terms.iter_mut() {
                *a *= norm;
            }
        }
        terms.retain(|(_, a)| *a != 0.0);
        Ok(terms)
    }
}

/// Sparse Hermitian operator on a mode register.
#[derive(Debug, Clone)]
pub struct FockOperator {
    reg: Arc<ModeRegister>,
    entries: BTreeMap<(Ket, Ket), f64>,
}

impl FockOperator {
    pub fn zero(reg: Arc<ModeRegister>) -> Self {
        Self { reg, entries: BTreeMap::new() }
    }

    /// |psi><psi| for a superposition of kets.
    pub fn from_pure(reg: Arc<ModeRegister>, amps: &[(Ket, f64)]) -> Self {
        let mut op = Self::zero(reg);
        op.add_pure(1.0, amps);
        op
    }

    /// Adds weight * |psi><psi|.
    pub fn add_pure(&mut self, weight: f64, amps: &[(Ket, f64)]) {
        for (k, a) in amps {
            for (b, c) in amps {
                let v = weight * a * c;
                if v != 0.0 {
                    *self.entries.entry((*k, *b)).or_insert(0.0) += v;
                }
            }
        }
    }

    /// Adds `v` to the (ket, bra) entry.
    pub fn add_entry(&mut self, ket: Ket, bra: Ket, v: f64) {
        if v != 0.0 {
            *self.entries.entry((ket, bra)).or_insert(0.0) += v;
        }
    }

    pub fn register(&self) -> &Arc<ModeRegister> {
        &self.reg
    }

    pub fn get(&self, ket: &Ket, bra: &Ket) -> f64 {
        self.entries.get(&(*ket, *bra)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(Ket, Ket), &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|((k, b), _)| k == b).map(|(_, v)| v).sum()
    }

    /// <v|rho|v> for a real superposition v.
    pub fn expectation(&self, v: &[(Ket, f64)]) -> f64 {
        let mut s = 0.0;
        for (k, a) in v {
            for (b, c) in v {
                s += a * c * self.get(k, b);
            }
        }
        s
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { reg: self.reg.clone(), entries: self.entries.iter().map(|(k, v)| (*k, v * s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            *out.entries.entry(*k).or_insert(0.0) += v;
        }
        out
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|((k, b), v)| (v - self.get(b, k)).abs())
            .fold(0.0, f64::max)
    }

    /// Tensor product; registers are concatenated and must not share names.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut modes: Vec<(&str, u8)> = Vec::new();
        for i in 0..self.reg.len() {
            modes.push((self.reg.name(i), self.reg.cap(i)));
        }
        for i in 0..other.reg.len() {
            modes.push((other.reg.name(i), other.reg.cap(i)));
        }
        let reg = Arc::new(ModeRegister::new(&modes)?);
        let mut entries = BTreeMap::new();
        for ((k1, b1), v1) in &self.entries {
            for ((k2, b2), v2) in &other.entries {
                let (mut k, mut b) = (*k1, *b1);
                let off = self.reg.len();
                k[off..off + other.reg.len()].copy_from_slice(&k2[..other.reg.len()]);
                b[off..off + other.reg.len()].copy_from_slice(&b2[..other.reg.len()]);
                entries.insert((k, b), v1 * v2);
            }
        }
        Ok(Self { reg, entries })
    }

    /// Re-embeds the operator into a larger register containing all current modes.
    pub fn embed(&self, reg: Arc<ModeRegister>) -> Result<Self> {
        let map: Vec<usize> = (0..self.reg.len()).map(|i| reg.index(self.reg.name(i))).collect::<Result<_>>()?;
        let lift = |k: &Ket| {
            let mut out = reg.vacuum();
            for (i, &j) in map.iter().enumerate() {
                out[j] = k[i];
            }
            out
        };
        let entries = self.entries.iter().map(|((k, b), v)| ((lift(k), lift(b)), *v)).collect();
        Ok(Self { reg, entries })
    }

    /// Applies a linear creation-operator map to ket and bra.
    pub fn apply_map(&self, map: &LinearMap) -> Result<Self> {
        let mut cache: HashMap<Ket, Vec<(Ket, f64)>> = HashMap::new();
        for (k, b) in self.entries.keys() {
            for x in [k, b] {
                if !cache.contains_key(x) {
                    let t = map.apply_ket(&self.reg, x)?;
                    cache.insert(*x, t);
                }
            }
        }
        let mut entries: BTreeMap<(Ket, Ket), f64> = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            for (k2, a) in &cache[k] {
                for (b2, c) in &cache[b] {
                    *entries.entry((*k2, *b2)).or_insert(0.0) += v * a * c;
                }
            }
        }
        entries.retain(|_, v| *v != 0.0);
        Ok(Self { reg: self.reg.clone(), entries })
    }

    /// Keeps the block with the given occupations and resets those modes to vacuum.
    pub fn project(&self, occ: &[(&str, u8)]) -> Result<Self> {
        let idx: Vec<(usize, u8)> = occ.iter().map(|&(m, n)| Ok((self.reg.index(m)?, n))).collect::<Result<_>>()?;
        let mut entries = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            if idx.iter().all(|&(i, n)| k[i] == n && b[i] == n) {
                let mut k2 = *k;
                let mut b2 = *b;
                for &(i, _) in &idx {
                    k2[i] = 0;
                    b2[i] = 0;
                }
                entries.insert((k2, b2), *v);
            }
        }
        Ok(Self { reg: self.reg.clone(), entries })
    }

    /// Traces out the listed modes; they are left in vacuum.
    pub fn partial_trace(&self, modes: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = modes.iter().map(|m| self.reg.index(m)).collect::<Result<_>>()?;
        let mut entries: BTreeMap<(Ket, Ket), f64> = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            if idx.iter().all(|&i| k[i] == b[i]) {
                let mut k2 = *k;
                let mut b2 = *b;
                for &i in &idx {
                    k2[i] = 0;
                    b2[i] = 0;
                }
                *entries.entry((k2, b2)).or_insert(0.0) += v;
            }
        }
        entries.retain(|_, v| *v != 0.0);
        Ok(Self { reg: self.reg.clone(), entries })
    }

    /// Traces every mode whose name starts with `prefix`.
    pub fn trace_prefixed(&self, prefix: &str) -> Result<Self> {
        let names: Vec<String> =
            (0..self.reg.len()).map(|i| self.reg.name(i).to_string()).filter(|n| n.starts_with(prefix)).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        self.partial_trace(&refs)
    }
}

/// Pure SPDC pair state on herald mode `b` and memory mode `c`.
///
/// Correlated pairs occupy a single mode pair with two-pair weight p^2; uncorrelated pairs
/// have two-pair weight p^2/2.
pub fn build_spdc_state(reg: Arc<ModeRegister>, b: &str, c: &str, p_pair: f64, correlated: bool) -> Result<FockOperator> {
    if !(0.0..1.0).contains(&p_pair) {
        return Err(Error::InvalidParam { name: "p_pair", reason: format!("{p_pair} not in [0,1)") });
    }
    let p2 = if correlated { p_pair * p_pair } else { p_pair * p_pair / 2.0 };
    let bi = reg.index(b)?;
    let ci = reg.index(c)?;
    if p_pair > 0.0 && (reg.cap(bi) < 2 || reg.cap(ci) < 2) {
        return Err(Error::InvalidParam { name: "cap", reason: "SPDC modes need cap >= 2".into() });
    }
    let p0 = 1.0 - p_pair - p2;
    let mut amps = vec![(reg.vacuum(), p0.sqrt())];
    if p_pair > 0.0 {
        amps.push((reg.ket(&[(b, 1), (c, 1)])?, p_pair.sqrt()));
        amps.push((reg.ket(&[(b, 2), (c, 2)])?, p2.sqrt()));
    }
    Ok(FockOperator::from_pure(reg, &amps))
}

/// Ion emission geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IonKind {
    /// alpha_0|0> + alpha_1|1> a^dag.
    SingleRail,
    /// (|0> a_0^dag + |1> a_1^dag)/sqrt2.
    DualRail,
}

/// Ion-photon pure state. `photon` names the emission mode(s): one for single rail, two for dual rail.
pub fn build_ion_state(reg: Arc<ModeRegister>, ion: &str, photon: &[&str], kind: IonKind, p_emit: f64) -> Result<FockOperator> {
    let amps = match kind {
        IonKind::SingleRail => {
            if !(0.0..=1.0).contains(&p_emit) {
                return Err(Error::InvalidParam { name: "p_emit", reason: format!("{p_emit} not in [0,1]") });
            }
            let mut v = vec![(reg.ket(&[(ion, 0)])?, (1.0 - p_emit).sqrt())];
            if p_emit > 0.0 {
                v.push((reg.ket(&[(ion, 1), (photon[0], 1)])?, p_emit.sqrt()));
            }
            v
        }
        IonKind::DualRail => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![(reg.ket(&[(ion, 0), (photon[0], 1)])?, s), (reg.ket(&[(ion, 1), (photon[1], 1)])?, s)]
        }
    };
    Ok(FockOperator::from_pure(reg, &amps))
}

/// Mode names for a beamsplitter with explicit loss channels.
#[derive(Debug, Clone, Copy)]
pub struct BeamSplitterModes<'a> {
    pub a: &'a str,
    pub b: &'a str,
    pub d_plus: &'a str,
    pub d_minus: &'a str,
    pub loss_a: &'a str,
    pub loss_b: &'a str,
    pub loss_plus: &'a str,
    pub loss_minus: &'a str,
}

/// Efficiencies and branching angle of a lossy beamsplitter.
#[derive(Debug, Clone, Copy)]
pub struct BeamSplitterLoss {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub angle: f64,
}

/// Creation-operator coefficients of the lossy beamsplitter for input a and b.
fn bs_rules(m: &BeamSplitterModes, l: &BeamSplitterLoss) -> [Vec<(String, f64)>; 2] {
    let (c, s) = (l.angle.cos(), l.angle.sin());
    let (sp, sm) = (l.eta_plus.sqrt(), l.eta_minus.sqrt());
    let (lp, lm) = ((1.0 - l.eta_plus).sqrt(), (1.0 - l.eta_minus).sqrt());
    let ra = vec![
        (m.d_plus.to_string(), l.eta_a.sqrt() * c * sp),
        (m.loss_plus.to_string(), l.eta_a.sqrt() * c * lp),
        (m.d_minus.to_string(), l.eta_a.sqrt() * s * sm),
        (m.loss_minus.to_string(), l.eta_a.sqrt() * s * lm),
        (m.loss_a.to_string(), (1.0 - l.eta_a).sqrt()),
    ];
    let rb = vec![
        (m.d_plus.to_string(), l.eta_b.sqrt() * s * sp),
        (m.loss_plus.to_string(), l.eta_b.sqrt() * s * lp),
        (m.d_minus.to_string(), -l.eta_b.sqrt() * c * sm),
        (m.loss_minus.to_string(), -l.eta_b.sqrt() * c * lm),
        (m.loss_b.to_string(), (1.0 - l.eta_b).sqrt()),
    ];
    [ra, rb]
}

/// Applies the lossy beamsplitter and traces out the four loss channels.
pub fn apply_bs_with_loss(state: &FockOperator, modes: &BeamSplitterModes, loss: &BeamSplitterLoss) -> Result<FockOperator> {
    for v in [loss.eta_a, loss.eta_b, loss.eta_plus, loss.eta_minus] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParam { name: "eta", reason: format!("{v} not in [0,1]") });
        }
    }
    let reg = state.register().clone();
    let [ra, rb] = bs_rules(modes, loss);
    let ra: Vec<(&str, f64)> = ra.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let rb: Vec<(&str, f64)> = rb.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let map = LinearMap::new().rule(&reg, modes.a, &ra)?.rule(&reg, modes.b, &rb)?;
    state
        .apply_map(&map)?
        .partial_trace(&[modes.loss_a, modes.loss_b, modes.loss_plus, modes.loss_minus])
}

/// Commutators [A, A^dag], [B, B^dag], [A, B^dag] of the combined loss operators.
pub fn combined_loss_commutators(loss: &BeamSplitterLoss) -> (f64, f64, f64) {
    let (c, s) = (loss.angle.cos(), loss.angle.sin());
    let aa = 1.0 - loss.eta_a * (c * c * loss.eta_plus + s * s * loss.eta_minus);
    let bb = 1.0 - loss.eta_b * (s * s * loss.eta_plus + c * c * loss.eta_minus);
    let ab = (loss.eta_a * loss.eta_b).sqrt() * s * c * (loss.eta_plus - loss.eta_minus);
    (aa, bb, ab)
}

/// Single-click herald: one photon in `click` (window weight `window_weight`), none in `other`,
/// plus dark counts on the detector vacuum. Returns the click probability and the heralded state.
pub fn herald_click(
    state: &FockOperator,
    click: &str,
    other: &str,
    window_weight: f64,
    p_dark: f64,
) -> Result<(f64, FockOperator)> {
    let hit = state.project(&[(click, 1), (other, 0)])?.scale(window_weight);
    let dark = state.project(&[(click, 0), (other, 0)])?.scale(p_dark);
    let out = hit.add(&dark);
    Ok((out.trace(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(modes: &[(&str, u8)]) -> Arc<ModeRegister> {
        Arc::new(ModeRegister::new(modes).unwrap())
    }

    fn bs_modes() -> BeamSplitterModes<'static> {
        BeamSplitterModes {
            a: "a",
            b: "b",
            d_plus: "dp",
            d_minus: "dm",
            loss_a: "la",
            loss_b: "lb",
            loss_plus: "lp",
            loss_minus: "lm",
        }
    }

    fn bs_reg() -> Arc<ModeRegister> {
        reg(&[("a", 2), ("b", 2), ("dp", 4), ("dm", 4), ("la", 2), ("lb", 2), ("lp", 4), ("lm", 4)])
    }

    #[test]
    fn spdc_examples() {
        let r = reg(&[("b", 2), ("c", 2)]);
        let v = build_spdc_state(r.clone(), "b", "c", 0.0, true).unwrap();
        assert_eq!(v.get(&r.vacuum(), &r.vacuum()), 1.0);
        assert_eq!(v.len(), 1);
        let two = r.ket(&[("b", 2), ("c", 2)]).unwrap();
        let c = build_spdc_state(r.clone(), "b", "c", 0.01, true).unwrap();
        assert!((c.get(&two, &two) - 1e-4).abs() < 1e-18);
        let u = build_spdc_state(r.clone(), "b", "c", 0.01, false).unwrap();
        assert!((u.get(&two, &two) - 0.5e-4).abs() < 1e-18);
        assert!((u.trace() - 1.0).abs() < 1e-15);
        let small = reg(&[("b", 1), ("c", 2)]);
        assert!(build_spdc_state(small, "b", "c", 0.1, true).is_err());
    }

    #[test]
    fn ion_examples() {
        let r = reg(&[("q", 1), ("a", 1), ("a0", 1), ("a1", 1)]);
        let s = build_ion_state(r.clone(), "q", &["a"], IonKind::SingleRail, 0.0).unwrap();
        assert_eq!(s.get(&r.vacuum(), &r.vacuum()), 1.0);
        let s = build_ion_state(r.clone(), "q", &["a"], IonKind::SingleRail, 1.0).unwrap();
        let k = r.ket(&[("q", 1), ("a", 1)]).unwrap();
        assert_eq!(s.get(&k, &k), 1.0);
        let d = build_ion_state(r.clone(), "q", &["a0", "a1"], IonKind::DualRail, 1.0).unwrap();
        let red = d.partial_trace(&["a0", "a1"]).unwrap();
        let k0 = r.vacuum();
        let k1 = r.ket(&[("q", 1)]).unwrap();
        assert!((red.get(&k0, &k0) - 0.5).abs() < 1e-15);
        assert!((red.get(&k1, &k1) - 0.5).abs() < 1e-15);
        assert_eq!(red.get(&k0, &k1), 0.0);
    }

    #[test]
    fn balanced_lossless_splitter() {
        let r = bs_reg();
        let s = FockOperator::from_pure(r.clone(), &[(r.ket(&[("a", 1)]).unwrap(), 1.0)]);
        let loss = BeamSplitterLoss { eta_a: 1.0, eta_b: 1.0, eta_plus: 1.0, eta_minus: 1.0, angle: std::f64::consts::FRAC_PI_4 };
        let out = apply_bs_with_loss(&s, &bs_modes(), &loss).unwrap();
        let kp = r.ket(&[("dp", 1)]).unwrap();
        let km = r.ket(&[("dm", 1)]).unwrap();
        assert!((out.get(&kp, &kp) - 0.5).abs() < 1e-15);
        assert!((out.get(&km, &km) - 0.5).abs() < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fully_lossy_input_leaves_detectors_dark() {
        let r = bs_reg();
        let s = FockOperator::from_pure(r.clone(), &[(r.ket(&[("a", 1)]).unwrap(), 1.0)]);
        let loss = BeamSplitterLoss { eta_a: 0.0, eta_b: 1.0, eta_plus: 1.0, eta_minus: 1.0, angle: 0.7 };
        let out = apply_bs_with_loss(&s, &bs_modes(), &loss).unwrap();
        assert!((out.get(&r.vacuum(), &r.vacuum()) - 1.0).abs() < 1e-15);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn equal_detector_losses_commute() {
        let l = BeamSplitterLoss { eta_a: 0.7, eta_b: 0.4, eta_plus: 0.6, eta_minus: 0.6, angle: 0.3 };
        assert_eq!(combined_loss_commutators(&l).2, 0.0);
        let l = BeamSplitterLoss { eta_minus: 0.5, ..l };
        assert!(combined_loss_commutators(&l).2.abs() > 0.0);
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let r = bs_reg();
        let s = FockOperator::from_pure(r.clone(), &[(r.ket(&[("a", 1), ("b", 1)]).unwrap(), 1.0)]);
        let loss = BeamSplitterLoss { eta_a: 1.0, eta_b: 1.0, eta_plus: 1.0, eta_minus: 1.0, angle: std::f64::consts::FRAC_PI_4 };
        let out = apply_bs_with_loss(&s, &bs_modes(), &loss).unwrap();
        let k11 = r.ket(&[("dp", 1), ("dm", 1)]).unwrap();
        assert!(out.get(&k11, &k11).abs() < 1e-15);
        let k20 = r.ket(&[("dp", 2)]).unwrap();
        assert!((out.get(&k20, &k20) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn herald_examples() {
        let r = reg(&[("q", 1), ("dp", 2), ("dm", 2)]);
        let s = FockOperator::from_pure(r.clone(), &[(r.ket(&[("dp", 1)]).unwrap(), 1.0)]);
        let (p, _) = herald_click(&s, "dp", "dm", 1.0, 0.0).unwrap();
        assert_eq!(p, 1.0);
        let v = FockOperator::from_pure(r.clone(), &[(r.ket(&[("q", 1)]).unwrap(), 1.0)]);
        let (p, st) = herald_click(&v, "dp", "dm", 1.0, 1e-6).unwrap();
        assert_eq!(p, 1e-6);
        let k = r.ket(&[("q", 1)]).unwrap();
        assert_eq!(st.get(&k, &k), 1e-6);
        assert!(herald_click(&v, "dx", "dm", 1.0, 0.0).is_err());
    }

    #[test]
    fn exhaustive_outcomes_sum_to_one() {
        let r = bs_reg();
        let s = build_spdc_state(r.clone(), "a", "la", 0.0, true).unwrap();
        let amps = vec![
            (r.ket(&[("a", 1)]).unwrap(), 0.6f64.sqrt()),
            (r.ket(&[("b", 1)]).unwrap(), 0.3f64.sqrt()),
            (r.vacuum(), 0.1f64.sqrt()),
        ];
        let s = s.scale(0.0).add(&FockOperator::from_pure(r.clone(), &amps));
        let loss = BeamSplitterLoss { eta_a: 0.7, eta_b: 0.9, eta_plus: 0.8, eta_minus: 0.8, angle: std::f64::consts::FRAC_PI_4 };
        let out = apply_bs_with_loss(&s, &bs_modes(), &loss).unwrap();
        let (pp, _) = herald_click(&out, "dp", "dm", 1.0, 0.0).unwrap();
        let (pm, _) = herald_click(&out, "dm", "dp", 1.0, 0.0).unwrap();
        let none = out.project(&[("dp", 0), ("dm", 0)]).unwrap().trace();
        assert!((pp + pm + none - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let r = reg(&[("x", 2), ("y", 2)]);
        let amps = vec![(r.ket(&[("x", 1)]).unwrap(), 0.6), (r.ket(&[("x", 1), ("y", 1)]).unwrap(), 0.8)];
        let s = FockOperator::from_pure(r.clone(), &amps);
        let all = s.partial_trace(&["x", "y"]).unwrap();
        assert!((all.get(&r.vacuum(), &r.vacuum()) - 1.0).abs() < 1e-15);
        let same = s.partial_trace(&[]).unwrap();
        assert_eq!(same.len(), s.len());
        let prod = s.partial_trace(&["y"]).unwrap();
        let k = r.ket(&[("x", 1)]).unwrap();
        assert!((prod.get(&k, &k) - 1.0).abs() < 1e-15);
        assert!(s.partial_trace(&["z"]).is_err());
    }

    #[test]
    fn cap_overflow_is_reported() {
        let r = reg(&[("a", 2), ("b", 2), ("d", 1)]);
        let s = FockOperator::from_pure(r.clone(), &[(r.ket(&[("a", 1), ("b", 1)]).unwrap(), 1.0)]);
        let map = LinearMap::new().rule(&r, "a", &[("d", 1.0)]).unwrap().rule(&r, "b", &[("d", 1.0)]).unwrap();
        assert!(matches!(s.apply_map(&map), Err(Error::CapOverflow { .. })));
    }
}
