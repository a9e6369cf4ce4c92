use proptest::prelude::*;
use radgas::physics::{boltzmann_ratio, CollisionTuple, MaxwellianState, PhysConsts};
use radgas::verify::{
    detailed_balance_residual, entropy_identity_check, kernel_of_l_check, kernel_projections, mass_exchange, mc_conservation,
    significance, McPlan, SpeciesPair,
};
use radgas::{Exec, Vec3};

fn consts() -> PhysConsts {
    PhysConsts::default()
}

fn v3() -> impl Strategy<Value = Vec3> {
    (-6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    v3().prop_filter("nonzero", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
}

fn tuple() -> impl Strategy<Value = CollisionTuple> {
    (v3(), v3(), unit()).prop_map(|(a, b, w)| CollisionTuple::nonelastic_from_products(a, b, w, &consts()))
}

#[test]
fn off_ratio_pair_has_unit_residual() {
    let c = consts();
    let g = MaxwellianState::at_rest(1.0, 5.0).unwrap();
    let e = MaxwellianState::at_rest(2.0 * boltzmann_ratio(5.0, &c), 5.0).unwrap();
    let t = CollisionTuple::nonelastic(Vec3::new(2.0, 0.5, 0.0), Vec3::new(-1.5, 0.0, 0.3), Vec3::new(0.0, 0.6, 0.8), &c).unwrap();
    assert!((detailed_balance_residual(&g, &e, &t, &c) + 1.0).abs() < 1e-12);
}

#[test]
fn unequal_temperatures_break_balance() {
    let c = consts();
    let g = MaxwellianState::at_rest(1.0, 5.0).unwrap();
    let e = MaxwellianState::at_rest(boltzmann_ratio(5.0, &c), 7.0).unwrap();
    let t = CollisionTuple::nonelastic(Vec3::new(2.0, 0.5, 0.0), Vec3::new(-1.5, 0.0, 0.3), Vec3::new(0.0, 0.6, 0.8), &c).unwrap();
    assert!(detailed_balance_residual(&g, &e, &t, &c).abs() > 1e-3);
}

#[test]
fn lte_states_are_annihilated() {
    let c = consts();
    let plan = McPlan::new(1_000_000, 21).unwrap();
    for u in [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)] {
        let state = MaxwellianState::new(1.0, u, 5.0).unwrap();
        let rep = kernel_of_l_check(&state, &c, &plan).unwrap();
        assert_eq!(rep.projections.len(), 10);
        assert!(rep.within(3.0), "{rep:?}");
    }
}

#[test]
fn non_boltzmann_pair_exchanges_mass() {
    let c = consts();
    let plan = McPlan::new(1_000_000, 22).unwrap();
    let g = MaxwellianState::at_rest(1.0, 5.0).unwrap();
    let e = MaxwellianState::at_rest(3.0 * boltzmann_ratio(5.0, &c), 5.0).unwrap();
    let rep = kernel_projections(&SpeciesPair { ground: g, excited: e }, &c, &plan).unwrap();
    let (gm, em) = (rep.get("ground:1").unwrap(), rep.get("excited:1").unwrap());
    assert!(significance(&gm, 0.0) > 5.0, "{gm:?}");
    // Excess excited molecules de-excite: ground mass grows, excited mass shrinks.
    assert!(gm.mean > 0.0 && em.mean < 0.0);
    let combined = (gm.std_error.powi(2) + em.std_error.powi(2)).sqrt();
    assert!((gm.mean + em.mean).abs() < 3.0 * combined);
}

#[test]
fn moments_conserved_for_any_pair() {
    let c = consts();
    let plan = McPlan::new(1_000_000, 23).unwrap();
    let pair = SpeciesPair {
        ground: MaxwellianState::new(1.0, Vec3::new(0.2, 0.0, -0.1), 10.0).unwrap(),
        excited: MaxwellianState::new(0.5, Vec3::new(-0.3, 0.1, 0.0), 12.0).unwrap(),
    };
    let rep = mc_conservation(&pair, &plan, &c).unwrap();
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn mass_exchange_is_galilean_invariant() {
    let c = consts();
    let plan = McPlan::new(1_000_000, 24).unwrap();
    let pair = SpeciesPair {
        ground: MaxwellianState::new(1.0, Vec3::new(0.2, 0.0, 0.0), 10.0).unwrap(),
        excited: MaxwellianState::new(0.5, Vec3::new(0.2, 0.0, 0.0), 12.0).unwrap(),
    };
    let a = mass_exchange(&pair, &plan, &c).unwrap();
    let b = mass_exchange(&pair.boosted(Vec3::new(1.5, -0.7, 0.4)), &plan, &c).unwrap();
    let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * combined, "{a:?} vs {b:?}");
}

#[test]
fn plans_are_deterministic_across_schedules() {
    let c = consts();
    let pair = SpeciesPair::lte(MaxwellianState::at_rest(1.0, 5.0).unwrap(), &c);
    let par = McPlan { exec: Exec::Parallel, ..McPlan::new(100_000, 5).unwrap() };
    let seq = McPlan { exec: Exec::Sequential, ..par };
    assert_eq!(mass_exchange(&pair, &par, &c).unwrap(), mass_exchange(&pair, &seq, &c).unwrap());
    assert!(McPlan::new(1000, 0).is_err());
}

#[test]
fn entropy_identity_by_finite_differences() {
    let rep = entropy_identity_check(&[0.5, 2.0, 10.0, 50.0], &consts()).unwrap();
    assert!(rep.max_rel_error < 1e-6, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn boltzmann_pair_balances_pointwise(t in tuple(), temp in 0.5..20.0f64, boost in prop::bool::ANY) {
        let c = consts();
        let u = if boost { Vec3::new(0.3, 0.0, 0.0) } else { Vec3::zeros() };
        let pair = SpeciesPair::lte(MaxwellianState::new(1.3, u, temp).unwrap(), &c);
        prop_assert!(detailed_balance_residual(&pair.ground, &pair.excited, &t, &c).abs() < 1e-12);
    }
}
