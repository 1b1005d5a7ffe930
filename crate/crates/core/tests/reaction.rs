use lbm_core::reaction::{from_invariants, species_from_fields, to_invariants, Stoichiometry};
use proptest::prelude::*;

fn stoich() -> impl Strategy<Value = Stoichiometry> {
    (1u32..5, 1u32..5, 1u32..5).prop_map(|(a, b, c)| Stoichiometry::new(a, b, c).unwrap())
}

proptest! {
    // A and B cannot coexist under an instantaneous reaction, so one of them
    // is zero at every node
    #[test]
    fn species_survive_the_invariant_round_trip(
        s in stoich(),
        excess in -5.0f64..5.0,
        c in 0.0f64..5.0,
    ) {
        let (a, b) = if excess >= 0.0 { (excess, 0.0) } else { (0.0, -excess) };
        let (pf, pg) = to_invariants(a, b, c, s);
        let (a2, b2, c2) = from_invariants(pf, pg, s);
        let scale = 1.0 + a.abs() + b.abs() + c.abs();
        prop_assert!((a2 - a).abs() <= 1e-14 * scale);
        prop_assert!((b2 - b).abs() <= 1e-14 * scale);
        prop_assert!((c2 - c).abs() <= 1e-14 * scale);
    }

    #[test]
    fn invariants_survive_the_species_round_trip(s in stoich(), pf in -5.0f64..5.0, extra in 0.0f64..5.0) {
        // admissible invariants have psi_G >= max(psi_F, 0)
        let pg = pf.max(0.0) + extra;
        let (a, b, c) = from_invariants(pf, pg, s);
        prop_assert!(a >= 0.0 && b >= 0.0 && c >= 0.0);
        let (pf2, pg2) = to_invariants(a, b, c, s);
        prop_assert!((pf2 - pf).abs() <= 1e-14 * (1.0 + pf.abs()));
        prop_assert!((pg2 - pg).abs() <= 1e-14 * (1.0 + pg.abs()));
    }

    #[test]
    fn undershoot_of_psi_g_shows_up_only_in_the_product(s in stoich(), pf in -5.0f64..5.0, gap in 1e-6f64..1.0) {
        let (a, b, c) = from_invariants(pf, pf.max(0.0) - gap, s);
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!(c < 0.0);
    }
}

#[test]
fn field_recovery_matches_pointwise_recovery() {
    let s = Stoichiometry::new(1, 2, 1).unwrap();
    let pf = [1.0, -0.5, 0.0, 0.25];
    let pg = [1.0, 0.0, 0.3, 0.1];
    let f = species_from_fields(&pf, &pg, s).unwrap();
    for k in 0..4 {
        let (a, b, c) = from_invariants(pf[k], pg[k], s);
        assert_eq!((f.a[k], f.b[k], f.c[k]), (a, b, c));
    }
    assert_eq!(f.c[3], -0.15);
    assert!(species_from_fields(&pf, &pg[..3], s).is_err());
}
