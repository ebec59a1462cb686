//! CNOT-based purification of two ion-ion links with parity post-selection.

use crate::error::{Error, Result};
use crate::model::BipartiteIonState;

/// Purifies `rho` with the sacrificial link `rho_tilde`. Returns the heralding probability and the kept state.
pub fn purify(rho: &BipartiteIonState, rho_tilde: &BipartiteIonState) -> Result<(f64, BipartiteIonState)> {
    for s in [rho, rho_tilde] {
        if !s.is_normalized() {
            return Err(Error::Unnormalized(s.trace()));
        }
    }
    let t = rho_tilde;
    let pp = rho.d01 * t.d10 + rho.d10 * t.d01 + rho.d00 * t.d11 + rho.d11 * t.d00;
    if !(pp > 0.0) {
        return Err(Error::Unheraldable);
    }
    Ok((
        pp,
        BipartiteIonState {
            alpha: rho.alpha * t.alpha.conj() / pp,
            d00: rho.d00 * t.d11 / pp,
            d01: rho.d01 * t.d10 / pp,
            d10: rho.d10 * t.d01 / pp,
            d11: rho.d11 * t.d00 / pp,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bell_fidelity;
    use num_complex::Complex64;

    #[test]
    fn ideal_inputs() {
        let b = BipartiteIonState::bell();
        let (pp, out) = purify(&b, &b).unwrap();
        assert!((pp - 0.5).abs() < 1e-15);
        assert!((bell_fidelity(&out).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incoherent_mixture_stays_incoherent() {
        let m = BipartiteIonState::new(0.0, 0.0, 0.5, 0.5, 0.0);
        let (pp, out) = purify(&m, &m).unwrap();
        assert!((pp - 0.5).abs() < 1e-15);
        assert_eq!(out, m);
    }

    #[test]
    fn correlated_vacuum_survives() {
        let m = BipartiteIonState::new(0.0, 0.5, 0.0, 0.0, 0.5);
        let (pp, out) = purify(&m, &m).unwrap();
        assert!((pp - 0.5).abs() < 1e-15);
        assert_eq!(out, m);
    }

    #[test]
    fn phases_cancel() {
        let v = Complex64::from_polar(1.0, 0.7);
        let mut s = BipartiteIonState::new(0.4, 0.05, 0.45, 0.45, 0.05);
        s.alpha *= v;
        let (_, out) = purify(&s, &s).unwrap();
        assert!(out.alpha.im.abs() < 1e-15 && out.alpha.re > 0.0);
    }

    #[test]
    fn unheraldable_and_unnormalized() {
        let z = BipartiteIonState::new(0.0, 1.0, 0.0, 0.0, 0.0);
        assert!(matches!(purify(&z, &z), Err(Error::Unheraldable)));
        let u = BipartiteIonState::new(0.0, 0.5, 0.0, 0.0, 0.0);
        assert!(purify(&u, &u).is_err());
    }
}
