//! Monte Carlo checks of the kinetic identities the hydrodynamic solvers
//! rely on: weak-form conservation, detailed balance, the kernel of the
//! linearized operator, and the entropy identity.
//!
//! A species pair is two Maxwellians whose `rho` fields are the actual
//! number densities of ground and excited molecules. The excited density
//! is evaluated without an extra Boltzmann factor, so the LTE pair has
//! `excited.rho = ground.rho * e^(-2ε₀/T)`.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::collision::{batched_moments, functionals, gaussian_vec, McEstimate, Prefactor, TripleQuadSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::physics::{
    boltzmann_ratio, elastic_post_velocities, entropy_lambda, maxwellian, nonelastic_post_velocities, w_minus_omega, w_plus_omega,
    CollisionTuple, MaxwellianState, PhysConsts,
};
use crate::Vec3;

/// Absolute floor added to every σ-based acceptance threshold.
pub const SIGMA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPlan {
    pub n_samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl McPlan {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        let plan = McPlan { n_samples, seed, exec: Exec::default() };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10_000 {
            return Err(Error::InvalidParameter { name: "n_samples", reason: format!("need >= 1e4, got {}", self.n_samples) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesPair {
    pub ground: MaxwellianState,
    pub excited: MaxwellianState,
}

impl SpeciesPair {
    /// LTE pair at one (ρ, u, T): excited density in the Boltzmann ratio.
    pub fn lte(state: MaxwellianState, consts: &PhysConsts) -> Self {
        let excited = MaxwellianState { rho: state.rho * boltzmann_ratio(state.t, consts), ..state };
        SpeciesPair { ground: state, excited }
    }

    /// Same pair with both bulk velocities shifted by `shift`.
    pub fn boosted(&self, shift: Vec3) -> Self {
        SpeciesPair {
            ground: MaxwellianState { u: self.ground.u + shift, ..self.ground },
            excited: MaxwellianState { u: self.excited.u + shift, ..self.excited },
        }
    }
}

fn ln_density(state: &MaxwellianState, v: &Vec3) -> f64 {
    state.rho.ln() - 1.5 * (PI * state.t).ln() - (v - state.u).norm_squared() / state.t
}

/// (F1(v1)F1(v2) - F2(v3)F1(v4)) / (F1(v1)F1(v2)) for a nonelastic tuple.
pub fn detailed_balance_residual(ground: &MaxwellianState, excited: &MaxwellianState, tuple: &CollisionTuple, consts: &PhysConsts) -> f64 {
    let _ = consts;
    let forward = ln_density(ground, &tuple.v1) + ln_density(ground, &tuple.v2);
    let reverse = ln_density(excited, &tuple.v3) + ln_density(ground, &tuple.v4);
    -(reverse - forward).exp_m1()
}

/// Species density value; `maxwellian` without the excitation shift.
pub fn species_density(state: &MaxwellianState, consts: &PhysConsts, v: &Vec3) -> f64 {
    maxwellian(state, false, consts, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mass_residual: McEstimate,
    pub momentum_residual: [McEstimate; 3],
    pub energy_residual: McEstimate,
}

impl MomentReport {
    pub fn all(&self) -> [(&'static str, McEstimate); 5] {
        [
            ("mass", self.mass_residual),
            ("momentum_x", self.momentum_residual[0]),
            ("momentum_y", self.momentum_residual[1]),
            ("momentum_z", self.momentum_residual[2]),
            ("energy", self.energy_residual),
        ]
    }

    /// Every residual within `n_sigma` standard errors plus the floor.
    pub fn within(&self, n_sigma: f64) -> bool {
        self.all().iter().all(|(_, e)| within_sigma(e, 0.0, n_sigma))
    }
}

/// |mean - target| ≤ n σ + floor.
pub fn within_sigma(e: &McEstimate, target: f64, n_sigma: f64) -> bool {
    (e.mean - target).abs() <= n_sigma * e.std_error + SIGMA_FLOOR
}

/// Number of standard errors between the estimate and `target`.
pub fn significance(e: &McEstimate, target: f64) -> f64 {
    (e.mean - target).abs() / e.std_error.max(SIGMA_FLOOR)
}

/// Pair of test functions (ground, excited) evaluated at one velocity.
type TestFns = fn(&Vec3, f64) -> [[f64; 5]; 2];

fn conserved(v: &Vec3, eps: f64) -> [[f64; 5]; 2] {
    let e = 0.5 * v.norm_squared();
    [[1.0, v.x, v.y, v.z, e], [1.0, v.x, v.y, v.z, e + eps]]
}

/// Weak-form sample for the nonelastic and the cross elastic channel.
///
/// Nonelastic: v1, v2 drawn from the ground Maxwellian, ω uniform; the
/// integrand is 4π ρ1² W₋ (1 - F2(v3)F1(v4)/(F1(v1)F1(v2))) times
/// φ1(v4) + φ2(v3) - φ1(v1) - φ1(v2). Elastic: v1 ground, v2 excited,
/// same structure with B = C₀|v1 - v2|.
fn weak_form_sample(pair: &SpeciesPair, consts: &PhysConsts, phi: TestFns, rng: &mut ChaCha8Rng, out: &mut [f64; 5], center: (Vec3, Vec3)) {
    let (g, x) = (&pair.ground, &pair.excited);
    let s1 = (0.5 * g.t).sqrt();
    let s2 = (0.5 * x.t).sqrt();
    let eps = consts.epsilon0;
    let four_pi = 4.0 * PI;
    let (c1, c2) = center;

    let v1 = g.u + gaussian_vec(rng, s1);
    let v2 = g.u + gaussian_vec(rng, s1);
    let omega = Vec3::from(UnitSphere.sample(rng));
    if let Ok((v3, v4)) = nonelastic_post_velocities(&v1, &v2, &omega, consts) {
        let w = w_minus_omega(&v1, &v2, &omega, consts).unwrap_or(0.0);
        let tuple = CollisionTuple { v1, v2, v3, v4, kind: crate::physics::CollisionKind::Nonelastic };
        let bracket = detailed_balance_residual(g, x, &tuple, consts);
        let weight = four_pi * g.rho * g.rho * w * bracket;
        let [p1_4, _] = phi(&(v4 - c1), eps);
        let [_, p2_3] = phi(&(v3 - c2), eps);
        let [p1_1, _] = phi(&(v1 - c1), eps);
        let [p1_2, _] = phi(&(v2 - c1), eps);
        for k in 0..5 {
            out[k] += weight * (p1_4[k] + p2_3[k] - p1_1[k] - p1_2[k]);
        }
    }

    let v1 = g.u + gaussian_vec(rng, s1);
    let v2 = x.u + gaussian_vec(rng, s2);
    let omega = Vec3::from(UnitSphere.sample(rng));
    let (v3, v4) = elastic_post_velocities(&v1, &v2, &omega);
    let b = consts.c0_kernel * (v1 - v2).norm();
    let ln_ratio = ln_density(g, &v3) + ln_density(x, &v4) - ln_density(g, &v1) - ln_density(x, &v2);
    let weight = four_pi * g.rho * x.rho * b * -ln_ratio.exp_m1();
    let [p1_3, _] = phi(&(v3 - c1), eps);
    let [_, p2_4] = phi(&(v4 - c2), eps);
    let [p1_1, _] = phi(&(v1 - c1), eps);
    let [_, p2_2] = phi(&(v2 - c2), eps);
    for k in 0..5 {
        out[k] += weight * (p1_3[k] + p2_4[k] - p1_1[k] - p2_2[k]);
    }
}

fn validate_pair(pair: &SpeciesPair) -> Result<()> {
    for s in [&pair.ground, &pair.excited] {
        crate::error::positive("rho", s.rho)?;
        crate::error::positive("T", s.t)?;
    }
    Ok(())
}

/// Mass, momentum and energy production summed over both species and
/// both channels. Zero in expectation and, up to rounding, per sample.
pub fn mc_conservation(pair: &SpeciesPair, plan: &McPlan, consts: &PhysConsts) -> Result<MomentReport> {
    plan.validate()?;
    validate_pair(pair)?;
    let origin = (Vec3::zeros(), Vec3::zeros());
    let [m, px, py, pz, e] = batched_moments(plan.n_samples, plan.seed, plan.exec, |rng| {
        let mut out = [0.0; 5];
        weak_form_sample(pair, consts, conserved, rng, &mut out, origin);
        out
    });
    Ok(MomentReport { mass_residual: m, momentum_residual: [px, py, pz], energy_residual: e })
}

/// Monte Carlo estimate of ∫K⁽²⁾dv, the net excitation rate.
///
/// Forward term ρ1²·4π E[W₋ 1{open}] over ground pairs; reverse term
/// ρ1ρ2·4π E[W₊] over (excited, ground) pairs. The forward term equals
/// ρ1² e^(-2ε₀/T1) 𝒫(T1) only through the change of variables
/// (v1, v2) ↔ (v3, v4), which is what this checks.
pub fn mass_exchange(pair: &SpeciesPair, plan: &McPlan, consts: &PhysConsts) -> Result<McEstimate> {
    plan.validate()?;
    validate_pair(pair)?;
    let (g, x) = (pair.ground, pair.excited);
    let s1 = (0.5 * g.t).sqrt();
    let s2 = (0.5 * x.t).sqrt();
    let four_pi = 4.0 * PI;
    let [est] = batched_moments(plan.n_samples, plan.seed, plan.exec, |rng| {
        let v1 = g.u + gaussian_vec(rng, s1);
        let v2 = g.u + gaussian_vec(rng, s1);
        let omega = Vec3::from(UnitSphere.sample(rng));
        let fwd = w_minus_omega(&v1, &v2, &omega, consts).unwrap_or(0.0);
        let v3 = x.u + gaussian_vec(rng, s2);
        let v4 = g.u + gaussian_vec(rng, s1);
        let omega = Vec3::from(UnitSphere.sample(rng));
        let rev = w_plus_omega(&v3, &v4, &omega, consts);
        [four_pi * (g.rho * g.rho * fwd - g.rho * x.rho * rev)]
    });
    Ok(est)
}

/// ρ1² e^(-2ε₀/T1) 𝒫(T1) - ρ1ρ2 𝒫(T2,T1) from the reduced quadrature
/// (consistent normalization), times a calibration constant.
pub fn mass_exchange_reference(pair: &SpeciesPair, consts: &PhysConsts, spec: &TripleQuadSpec, calibration: f64) -> Result<f64> {
    let (t1, t2) = (pair.ground.t, pair.excited.t);
    let f = functionals(t1, t2, consts, spec, Prefactor::Consistent)?;
    let x1 = boltzmann_ratio(t1, consts);
    let (r1, r2) = (pair.ground.rho, pair.excited.rho);
    Ok(calibration * (r1 * r1 * x1 * f.p11 - r1 * r2 * f.p21))
}

/// Projections of the collision operator on the collision invariants,
/// per species, in the frame of the ground-state bulk velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    /// (label, estimate): ground then excited, each against
    /// 1, (v-u)_x, (v-u)_y, (v-u)_z, |v-u|².
    pub projections: Vec<(String, McEstimate)>,
}

impl KernelReport {
    pub fn within(&self, n_sigma: f64) -> bool {
        self.projections.iter().all(|(_, e)| within_sigma(e, 0.0, n_sigma))
    }

    pub fn get(&self, label: &str) -> Option<McEstimate> {
        self.projections.iter().find(|(l, _)| l == label).map(|(_, e)| *e)
    }
}

fn ground_only(v: &Vec3, _eps: f64) -> [[f64; 5]; 2] {
    [[1.0, v.x, v.y, v.z, v.norm_squared()], [0.0; 5]]
}

fn excited_only(v: &Vec3, _eps: f64) -> [[f64; 5]; 2] {
    [[0.0; 5], [1.0, v.x, v.y, v.z, v.norm_squared()]]
}

/// Checks that the LTE pair built from `state` is annihilated.
pub fn kernel_of_l_check(state: &MaxwellianState, consts: &PhysConsts, plan: &McPlan) -> Result<KernelReport> {
    kernel_projections(&SpeciesPair::lte(*state, consts), consts, plan)
}

/// Same projections for an arbitrary pair (nonzero off equilibrium).
pub fn kernel_projections(pair: &SpeciesPair, consts: &PhysConsts, plan: &McPlan) -> Result<KernelReport> {
    plan.validate()?;
    validate_pair(pair)?;
    let center = (pair.ground.u, pair.ground.u);
    let mut projections = Vec::with_capacity(10);
    for (species, phi, offset) in [("ground", ground_only as TestFns, 0u64), ("excited", excited_only as TestFns, 1)] {
        let est = batched_moments(plan.n_samples, plan.seed.wrapping_add(offset), plan.exec, |rng| {
            let mut out = [0.0; 5];
            weak_form_sample(pair, consts, phi, rng, &mut out, center);
            out
        });
        for (name, e) in ["1", "v_x", "v_y", "v_z", "v2"].iter().zip(est) {
            projections.push((format!("{species}:{name}"), e));
        }
    }
    Ok(KernelReport { projections })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    /// (T, T λ'(T) by central differences, 2 e'(T) closed form, relative error)
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub max_rel_error: f64,
}

/// T λ'(T) = 2 e'(T), with λ' from central differences at step 1e-5·T.
pub fn entropy_identity_check(t_list: &[f64], consts: &PhysConsts) -> Result<EntropyReport> {
    let eps = consts.epsilon0;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        crate::error::positive("T", t)?;
        let h = 1e-5 * t;
        let lhs = t * (entropy_lambda(t + h, consts) - entropy_lambda(t - h, consts)) / (2.0 * h);
        let x = boltzmann_ratio(t, consts);
        let de = 0.75 + eps * (2.0 * eps / (t * t)) * x / ((1.0 + x) * (1.0 + x));
        let rhs = 2.0 * de;
        rows.push((t, lhs, rhs, ((lhs - rhs) / rhs).abs()));
    }
    let max_rel_error = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(EntropyReport { rows, max_rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> PhysConsts {
        PhysConsts::default()
    }

    #[test]
    fn lte_pair_balances_pointwise() {
        let c = consts();
        let s = MaxwellianState::new(1.3, Vec3::new(0.3, 0.0, 0.0), 2.5).unwrap();
        let p = SpeciesPair::lte(s, &c);
        let t = CollisionTuple::nonelastic(Vec3::new(2.0, 0.1, 0.0), Vec3::new(-1.5, 0.0, 0.4), Vec3::new(0.0, 0.6, 0.8), &c).unwrap();
        assert!(detailed_balance_residual(&p.ground, &p.excited, &t, &c).abs() < 1e-13);
        let off = MaxwellianState { rho: 2.0 * p.excited.rho, ..p.excited };
        assert!((detailed_balance_residual(&p.ground, &off, &t, &c) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn conservation_is_deterministic() {
        let c = consts();
        let pair = SpeciesPair {
            ground: MaxwellianState::at_rest(1.0, 3.0).unwrap(),
            excited: MaxwellianState::at_rest(0.4, 5.0).unwrap(),
        };
        let plan = McPlan::new(20_000, 9).unwrap();
        let a = mc_conservation(&pair, &plan, &c).unwrap();
        let b = mc_conservation(&pair, &McPlan { exec: Exec::Sequential, ..plan }, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.within(3.0));
    }

    #[test]
    fn entropy_identity_holds() {
        let r = entropy_identity_check(&[0.5, 2.0, 10.0, 50.0], &consts()).unwrap();
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
