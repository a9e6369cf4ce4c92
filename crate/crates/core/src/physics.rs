//! Closed-form equilibria and collision kinematics.
//!
//! Units follow the model's convention k_B = 1/2, so a Maxwellian at
//! temperature T has variance T/2 per velocity axis.

use crate::error::{positive, Error, Result};
use crate::Vec3;

/// Maxwellian normalization π^(-3/2).
pub const C0_NORM: f64 = 0.179_587_122_125_166_56;

/// Which hard-sphere cross section the nonelastic kernel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    /// B = C0 |v - v'|; the angular integral of W± is then 4π W±.
    #[default]
    Simplified,
    /// B = C0 |ω · (v - v')|.
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConsts {
    pub epsilon0: f64,
    pub sigma: f64,
    pub c0_kernel: f64,
    pub kernel: KernelKind,
}

impl Default for PhysConsts {
    fn default() -> Self {
        PhysConsts { epsilon0: 1.0, sigma: 1.0, c0_kernel: 2.0, kernel: KernelKind::Simplified }
    }
}

impl PhysConsts {
    pub fn new(epsilon0: f64, sigma: f64) -> Result<Self> {
        Self::with_kernel(epsilon0, sigma, 2.0, KernelKind::Simplified)
    }

    pub fn with_kernel(epsilon0: f64, sigma: f64, c0_kernel: f64, kernel: KernelKind) -> Result<Self> {
        Ok(PhysConsts {
            epsilon0: positive("epsilon0", epsilon0)?,
            sigma: positive("sigma", sigma)?,
            c0_kernel: positive("c0_kernel", c0_kernel)?,
            kernel,
        })
    }

    /// The Maxwellian normalization; not configurable.
    pub fn c0(&self) -> f64 {
        C0_NORM
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianState {
    pub rho: f64,
    pub u: Vec3,
    pub t: f64,
}

impl MaxwellianState {
    pub fn new(rho: f64, u: Vec3, t: f64) -> Result<Self> {
        Ok(MaxwellianState { rho: positive("rho", rho)?, u, t: positive("T", t)? })
    }

    pub fn at_rest(rho: f64, t: f64) -> Result<Self> {
        Self::new(rho, Vec3::zeros(), t)
    }
}

pub fn maxwellian(state: &MaxwellianState, excited: bool, consts: &PhysConsts, v: &Vec3) -> f64 {
    let shift = if excited { 2.0 * consts.epsilon0 } else { 0.0 };
    C0_NORM * state.rho * state.t.powf(-1.5) * (-((v - state.u).norm_squared() + shift) / state.t).exp()
}

/// e^(-2ε₀/T).
pub fn boltzmann_ratio(t: f64, consts: &PhysConsts) -> f64 {
    (-2.0 * consts.epsilon0 / t).exp()
}

/// Single-frequency equilibrium intensity x/(1-x), x = e^(-2ε₀/T).
pub fn pseudo_planck(t: f64, consts: &PhysConsts) -> f64 {
    let a = 2.0 * consts.epsilon0 / t;
    // x/(1-x) = 1/(e^a - 1)
    1.0 / a.exp_m1()
}

pub fn energy_density(t: f64, consts: &PhysConsts) -> f64 {
    let x = boltzmann_ratio(t, consts);
    0.75 * t + consts.epsilon0 * x / (1.0 + x)
}

/// λ(T) with s = -ln ρ̃ + λ(T), from -Σ∫F ln F over the LTE pair.
///
/// The excitation term is +(2ε₀/T)·x/(1+x) with no extra T^(3/2) factor;
/// this is the form for which T λ'(T) = 2 e'(T).
pub fn entropy_lambda(t: f64, consts: &PhysConsts) -> f64 {
    let x = boltzmann_ratio(t, consts);
    1.5 * t.ln() + x.ln_1p() + 2.0 * consts.epsilon0 / t * x / (1.0 + x) - C0_NORM.ln() + 1.5
}

/// Entropy density per particle for total density ρ̃.
pub fn entropy_density(rho_total: f64, t: f64, consts: &PhysConsts) -> f64 {
    -rho_total.ln() + entropy_lambda(t, consts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    Elastic,
    Nonelastic,
}

/// Pre- and post-collision velocities. For nonelastic tuples v3 is the
/// excited molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionTuple {
    pub v1: Vec3,
    pub v2: Vec3,
    pub v3: Vec3,
    pub v4: Vec3,
    pub kind: CollisionKind,
}

impl CollisionTuple {
    pub fn elastic(v1: Vec3, v2: Vec3, omega: Vec3) -> Self {
        let (v3, v4) = elastic_post_velocities(&v1, &v2, &omega);
        CollisionTuple { v1, v2, v3, v4, kind: CollisionKind::Elastic }
    }

    pub fn nonelastic(v1: Vec3, v2: Vec3, omega: Vec3, consts: &PhysConsts) -> Result<Self> {
        let (v3, v4) = nonelastic_post_velocities(&v1, &v2, &omega, consts)?;
        Ok(CollisionTuple { v1, v2, v3, v4, kind: CollisionKind::Nonelastic })
    }

    /// Reverse channel: given the excited/ground outgoing pair (v3, v4),
    /// reconstruct the ground-state pair (v1, v2). Always open.
    pub fn nonelastic_from_products(v3: Vec3, v4: Vec3, omega: Vec3, consts: &PhysConsts) -> Self {
        let mid = 0.5 * (v3 + v4);
        let k = (0.25 * (v3 - v4).norm_squared() + consts.epsilon0).sqrt();
        CollisionTuple { v1: mid + k * omega, v2: mid - k * omega, v3, v4, kind: CollisionKind::Nonelastic }
    }

    /// Relative momentum residual |Σpre - Σpost| / scale.
    pub fn momentum_residual(&self) -> f64 {
        let scale = self.v1.norm() + self.v2.norm() + self.v3.norm() + self.v4.norm();
        ((self.v1 + self.v2) - (self.v3 + self.v4)).norm() / scale.max(f64::MIN_POSITIVE)
    }

    /// Relative residual of total (kinetic + internal) energy.
    pub fn energy_residual(&self, consts: &PhysConsts) -> f64 {
        let pre = 0.5 * (self.v1.norm_squared() + self.v2.norm_squared());
        let internal = match self.kind {
            CollisionKind::Elastic => 0.0,
            CollisionKind::Nonelastic => consts.epsilon0,
        };
        let post = 0.5 * (self.v3.norm_squared() + self.v4.norm_squared()) + internal;
        (pre - post).abs() / pre.max(post).max(f64::MIN_POSITIVE)
    }
}

pub fn elastic_post_velocities(v1: &Vec3, v2: &Vec3, omega: &Vec3) -> (Vec3, Vec3) {
    let mid = 0.5 * (v1 + v2);
    let half = 0.5 * (v1 - v2).norm();
    (mid + half * omega, mid - half * omega)
}

pub fn nonelastic_post_velocities(v1: &Vec3, v2: &Vec3, omega: &Vec3, consts: &PhysConsts) -> Result<(Vec3, Vec3)> {
    let g2 = (v1 - v2).norm_squared();
    let threshold = 4.0 * consts.epsilon0;
    if g2 < threshold {
        return Err(Error::BelowThreshold { rel_speed_sq: g2, threshold });
    }
    let mid = 0.5 * (v1 + v2);
    let k = (0.25 * g2 - consts.epsilon0).sqrt();
    Ok((mid + k * omega, mid - k * omega))
}

/// W₊ for the simplified kernel: (C₀/2)·sqrt(|v3-v4|² + 4ε₀).
pub fn w_plus(v3: &Vec3, v4: &Vec3, consts: &PhysConsts) -> f64 {
    0.5 * consts.c0_kernel * ((v3 - v4).norm_squared() + 4.0 * consts.epsilon0).sqrt()
}

/// W₋ for the simplified kernel: (C₀/2)·sqrt(|v1-v2|² - 4ε₀).
pub fn w_minus(v1: &Vec3, v2: &Vec3, consts: &PhysConsts) -> Result<f64> {
    let g2 = (v1 - v2).norm_squared();
    let threshold = 4.0 * consts.epsilon0;
    if g2 < threshold {
        return Err(Error::BelowThreshold { rel_speed_sq: g2, threshold });
    }
    Ok(0.5 * consts.c0_kernel * (g2 - threshold).sqrt())
}

/// Angular factor |ω·ĝ| multiplying W± under the angular kernel, 1 otherwise.
fn angular_factor(g: &Vec3, omega: &Vec3, kind: KernelKind) -> f64 {
    match kind {
        KernelKind::Simplified => 1.0,
        KernelKind::Angular => {
            let n = g.norm();
            if n == 0.0 {
                0.0
            } else {
                omega.dot(g).abs() / n
            }
        }
    }
}

/// W₊ for the configured kernel kind, given the scattering direction.
pub fn w_plus_omega(v3: &Vec3, v4: &Vec3, omega: &Vec3, consts: &PhysConsts) -> f64 {
    w_plus(v3, v4, consts) * angular_factor(&(v3 - v4), omega, consts.kernel)
}

pub fn w_minus_omega(v1: &Vec3, v2: &Vec3, omega: &Vec3, consts: &PhysConsts) -> Result<f64> {
    Ok(w_minus(v1, v2, consts)? * angular_factor(&(v1 - v2), omega, consts.kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_is_pi_to_minus_three_halves() {
        let exact = std::f64::consts::PI.powf(-1.5);
        assert!(((C0_NORM - exact) / exact).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(PhysConsts::new(0.0, 1.0).is_err());
        assert!(PhysConsts::new(1.0, -1.0).is_err());
        assert!(MaxwellianState::at_rest(1.0, 0.0).is_err());
    }
}
