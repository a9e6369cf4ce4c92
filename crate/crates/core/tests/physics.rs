use std::f64::consts::PI;

use approx::assert_relative_eq;
use gauss_quad::hermite::GaussHermite;
use proptest::prelude::*;
use radgas::physics::{
    boltzmann_ratio, elastic_post_velocities, energy_density, entropy_density, entropy_lambda, maxwellian, nonelastic_post_velocities,
    pseudo_planck, w_minus, w_plus, CollisionTuple, MaxwellianState, PhysConsts,
};
use radgas::{Error, Vec3};

fn consts() -> PhysConsts {
    PhysConsts::default()
}

fn v3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    v3().prop_filter("nonzero", |v| v.norm() > 1e-3).prop_map(|v| v.normalize())
}

#[test]
fn maxwellian_point_values() {
    let c = consts();
    let s = MaxwellianState::at_rest(1.0, 1.0).unwrap();
    assert_relative_eq!(maxwellian(&s, false, &c, &Vec3::zeros()), PI.powf(-1.5), max_relative = 1e-15);
    assert_relative_eq!(maxwellian(&s, true, &c, &Vec3::zeros()), PI.powf(-1.5) * (-2f64).exp(), max_relative = 1e-15);
}

#[test]
fn maxwellian_mass_by_gauss_hermite() {
    let c = PhysConsts::new(1.0, 1.0).unwrap();
    let gh = GaussHermite::new(30).unwrap();
    for (rho, t, u) in [(1.0, 1.0, Vec3::zeros()), (2.5, 3.0, Vec3::new(0.3, -0.2, 0.1)), (0.4, 10.0, Vec3::new(1.0, 0.0, 0.0))] {
        let s = MaxwellianState::new(rho, u, t).unwrap();
        for excited in [false, true] {
            let scale = t.sqrt();
            let total = gh.integrate(|a| {
                gh.integrate(|b| {
                    gh.integrate(|d| {
                        let z = Vec3::new(a, b, d);
                        maxwellian(&s, excited, &c, &(scale * z)) * z.norm_squared().exp()
                    })
                })
            }) * t.powf(1.5);
            let expected = if excited { rho * boltzmann_ratio(t, &c) } else { rho };
            assert_relative_eq!(total, expected, max_relative = 1e-8);
        }
    }
}

#[test]
fn boltzmann_and_planck_closed_forms() {
    let c = consts();
    let t_half = 2.0 / 2f64.ln();
    assert_relative_eq!(boltzmann_ratio(t_half, &c), 0.5, max_relative = 1e-15);
    assert!((boltzmann_ratio(1e12, &c) - 1.0).abs() < 1e-11);
    assert_relative_eq!(boltzmann_ratio(10.0, &c), 0.818_730_75, max_relative = 1e-8);
    assert_relative_eq!(pseudo_planck(t_half, &c), 1.0, max_relative = 1e-14);
    assert_relative_eq!(pseudo_planck(10.0, &c), 4.516_655_6, max_relative = 1e-7);
}

#[test]
fn energy_density_closed_forms() {
    let c = consts();
    assert!(energy_density(1e-3, &c) - 0.75e-3 < 1e-8);
    let t_half = 2.0 / 2f64.ln();
    assert_relative_eq!(energy_density(t_half, &c), 0.75 * t_half + 1.0 / 3.0, max_relative = 1e-14);
}

#[test]
fn entropy_density_log_structure() {
    let c = consts();
    for t in [1e-3, 0.5, 2.0, 1e6] {
        assert!(entropy_lambda(t, &c).is_finite());
        assert_relative_eq!(entropy_density(2.0, t, &c) - entropy_density(1.0, t, &c), -2f64.ln(), max_relative = 1e-12);
    }
}

#[test]
fn collision_hand_examples() {
    let c = consts();
    let (a, b) = elastic_post_velocities(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(-1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0));
    assert_relative_eq!(a, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    assert_relative_eq!(b, Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);

    let (p, q) = nonelastic_post_velocities(&Vec3::new(2.0, 0.0, 0.0), &Vec3::new(-2.0, 0.0, 0.0), &Vec3::x(), &c).unwrap();
    assert_relative_eq!(p, Vec3::new(3f64.sqrt(), 0.0, 0.0), epsilon = 1e-15);
    assert_relative_eq!(q, Vec3::new(-(3f64.sqrt()), 0.0, 0.0), epsilon = 1e-15);

    let below = nonelastic_post_velocities(&Vec3::x(), &Vec3::zeros(), &Vec3::y(), &c);
    assert!(matches!(below, Err(Error::BelowThreshold { .. })));

    assert_relative_eq!(w_plus(&Vec3::x(), &Vec3::x(), &c), 2.0, max_relative = 1e-15);
    assert_eq!(w_minus(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(-1.0, 0.0, 0.0), &c).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn radiative_balance_identity(t in 0.1..100.0f64) {
        let c = consts();
        let x = boltzmann_ratio(t, &c);
        let g = pseudo_planck(t, &c);
        prop_assert!((x * (1.0 + g) - g).abs() <= 1e-13 * (1.0 + g));
    }

    #[test]
    fn energy_density_is_increasing(t in 0.01..100.0f64, h in 1e-6..10.0f64) {
        let c = consts();
        prop_assert!(energy_density(t + h, &c) > energy_density(t, &c));
    }

    #[test]
    fn elastic_conserves(v1 in v3(), v2 in v3(), omega in unit()) {
        let t = CollisionTuple::elastic(v1, v2, omega);
        prop_assert!(t.momentum_residual() < 1e-12);
        prop_assert!(t.energy_residual(&consts()) < 1e-12);
    }

    #[test]
    fn elastic_identity_direction(v1 in v3(), v2 in v3()) {
        prop_assume!((v1 - v2).norm() > 1e-3);
        let (a, b) = elastic_post_velocities(&v1, &v2, &(v1 - v2).normalize());
        prop_assert!((a - v1).norm() < 1e-12 * (1.0 + v1.norm()));
        prop_assert!((b - v2).norm() < 1e-12 * (1.0 + v2.norm()));
    }

    #[test]
    fn nonelastic_conserves(v1 in v3(), v2 in v3(), omega in unit()) {
        let c = consts();
        prop_assume!((v1 - v2).norm_squared() >= 4.0 * c.epsilon0);
        let t = CollisionTuple::nonelastic(v1, v2, omega, &c).unwrap();
        prop_assert!(t.momentum_residual() < 1e-12);
        prop_assert!(t.energy_residual(&c) < 1e-12);
    }

    #[test]
    fn reverse_channel_conserves(v3_ in v3(), v4 in v3(), omega in unit()) {
        let c = consts();
        let t = CollisionTuple::nonelastic_from_products(v3_, v4, omega, &c);
        prop_assert!(t.momentum_residual() < 1e-12);
        prop_assert!(t.energy_residual(&c) < 1e-12);
    }

    #[test]
    fn w_plus_is_galilean(a in v3(), b in v3(), shift in v3()) {
        let c = consts();
        let w0 = w_plus(&a, &b, &c);
        let w1 = w_plus(&(a + shift), &(b + shift), &c);
        prop_assert!((w0 - w1).abs() <= 1e-12 * w0);
    }
}
