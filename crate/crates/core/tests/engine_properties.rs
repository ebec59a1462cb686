use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use hybrid_repeater::fock::{
    apply_bs_with_loss, build_ion_state, build_spdc_state, herald_click, BeamSplitterLoss, BeamSplitterModes,
    FockOperator, IonKind, ModeRegister,
};
use hybrid_repeater::oracle::join;
use proptest::prelude::*;

const MODES: BeamSplitterModes<'static> = BeamSplitterModes {
    a: "a",
    b: "b",
    d_plus: "dp",
    d_minus: "dm",
    loss_a: "la",
    loss_b: "lb",
    loss_plus: "lp",
    loss_minus: "lm",
};

fn register(src: u8, det: u8) -> Arc<ModeRegister> {
    Arc::new(
        ModeRegister::new(&[
            ("q", 1),
            ("a", src),
            ("ca", src),
            ("b", src),
            ("cb", src),
            ("dp", det),
            ("dm", det),
            ("la", src),
            ("lb", src),
            ("lp", det),
            ("lm", det),
        ])
        .unwrap(),
    )
}

/// An ion on input `a` and an SPDC pair on input `b`, through a lossy splitter.
fn ion_and_pair(reg: Arc<ModeRegister>, p_ion: f64, p_pair: f64, loss: &BeamSplitterLoss) -> FockOperator {
    let ion = build_ion_state(reg.clone(), "q", &["a"], IonKind::SingleRail, p_ion).unwrap();
    let pair = build_spdc_state(reg, "b", "cb", p_pair, false).unwrap();
    apply_bs_with_loss(&join(&ion, &pair), &MODES, loss).unwrap()
}

fn loss_strategy() -> impl Strategy<Value = BeamSplitterLoss> {
    (0.0..=1.0, 0.0..=1.0, 0.0..=1.0, 0.0..=1.0, 0.0..std::f64::consts::FRAC_PI_2).prop_map(|(a, b, p, m, angle)| {
        BeamSplitterLoss { eta_a: a, eta_b: b, eta_plus: p, eta_minus: m, angle }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splitter_preserves_trace_and_hermiticity(p_ion in 0.0..0.5f64, p_pair in 0.0..0.3f64, loss in loss_strategy()) {
        let reg = register(2, 4);
        let out = ion_and_pair(reg, p_ion, p_pair, &loss);
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn herald_outcomes_are_exhaustive(p_ion in 0.0..0.5f64, p_pair in 0.0..0.3f64, loss in loss_strategy()) {
        let reg = register(2, 4);
        let out = ion_and_pair(reg, p_ion, p_pair, &loss);
        let (pp, hp) = herald_click(&out, "dp", "dm", 1.0, 0.0).unwrap();
        let (pm, _) = herald_click(&out, "dm", "dp", 1.0, 0.0).unwrap();
        let none = out.project(&[("dp", 0), ("dm", 0)]).unwrap().trace();
        let reg = out.register().clone();
        let (dp, dm) = (reg.index("dp").unwrap(), reg.index("dm").unwrap());
        // Multi-photon detector events complete the outcome set.
        let multi: f64 = out.entries().filter(|((k, b), _)| k == b && k[dp] + k[dm] >= 2).map(|(_, v)| v).sum();
        prop_assert!((pp + pm + none + multi - 1.0).abs() < 1e-12);
        prop_assert!(hp.hermiticity_error() < 1e-12);
        if p_pair == 0.0 || loss.eta_b == 0.0 {
            prop_assert!(multi.abs() < 1e-12);
        }
    }

    #[test]
    fn raising_caps_changes_heralded_weights_below_third_order(p in 1e-4..1e-2f64, eta in 0.1..1.0f64) {
        let loss = BeamSplitterLoss { eta_a: eta, eta_b: eta, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
        let herald = |src: u8, det: u8| {
            let reg = register(src, det);
            let a = build_spdc_state(reg.clone(), "a", "ca", p, true).unwrap();
            let b = build_spdc_state(reg, "b", "cb", p, true).unwrap();
            let out = apply_bs_with_loss(&join(&a, &b), &MODES, &loss).unwrap();
            herald_click(&out, "dp", "dm", 1.0, 0.0).unwrap()
        };
        let (p2, s2) = herald(2, 4);
        let (p3, s3) = herald(3, 6);
        prop_assert!((p2 - p3).abs() <= p.powi(3) * p2);
        for ((k, b), v) in s2.entries() {
            let ka = s3.register().ket(&(0..s2.register().len()).map(|i| (s2.register().name(i), k[i])).collect::<Vec<_>>()).unwrap();
            let ba = s3.register().ket(&(0..s2.register().len()).map(|i| (s2.register().name(i), b[i])).collect::<Vec<_>>()).unwrap();
            prop_assert!((v - s3.get(&ka, &ba)).abs() <= p.powi(3) * p2);
        }
    }
}

#[test]
fn dark_counts_enter_on_detector_vacuum_only() {
    let reg = register(2, 4);
    let loss = BeamSplitterLoss { eta_a: 0.0, eta_b: 0.0, eta_plus: 1.0, eta_minus: 1.0, angle: FRAC_PI_4 };
    let out = ion_and_pair(reg, 0.3, 0.1, &loss);
    let (p, _) = herald_click(&out, "dp", "dm", 1.0, 1e-3).unwrap();
    assert!((p - 1e-3).abs() < 1e-15);
}
