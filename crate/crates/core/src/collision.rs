//! Reduced nonelastic collision integrals for the hard-sphere kernel.
//!
//! The six-dimensional functionals 𝒫, 𝒜, ℬ (velocity pairs drawn from
//! Maxwellians at T1, T2) collapse to three-fold integrals over
//! (r, ρ, θ) = (|w3+w4|, |w3-w4|, angle between them) with Gaussian weight
//! e^{-(r²+ρ²)/2}. The kernels are functions of a = ρ², b = ρ r cosθ,
//! c = r², and the divided differences in T2 - T1 are written so that
//! T2 = T1 is a regular point.
//!
//! Two prefactor conventions are provided. [`Prefactor::Printed`] uses the
//! bare π² prefactor in front of every reduced integral. [`Prefactor::Consistent`]
//! restores the factors lost in the change of variables (c₀² = π⁻³ and a
//! √T1 in front of 𝒫 and the first ℬ piece), so the results equal the
//! defining velocity integrals and can be compared with [`mc_oracle`].

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{positive, Error, Result};
use crate::exec::Exec;
use crate::physics::{boltzmann_ratio, PhysConsts};
use crate::quad::Rule;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleQuadSpec {
    pub r_max: f64,
    pub n_r: usize,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for TripleQuadSpec {
    fn default() -> Self {
        TripleQuadSpec { r_max: 12.0, n_r: 96, n_rho: 96, n_theta: 48 }
    }
}

impl TripleQuadSpec {
    pub fn validate(&self) -> Result<()> {
        positive("r_max", self.r_max)?;
        let bad = |name: &'static str, n: usize, min: usize| {
            Err(Error::InvalidParameter { name, reason: format!("need >= {min}, got {n}") })
        };
        if self.n_r < 16 {
            return bad("n_r", self.n_r, 16);
        }
        if self.n_rho < 16 {
            return bad("n_rho", self.n_rho, 16);
        }
        if self.n_theta < 8 {
            return bad("n_theta", self.n_theta, 8);
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        TripleQuadSpec { n_r: 2 * self.n_r, n_rho: 2 * self.n_rho, n_theta: 2 * self.n_theta, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedKernelParams {
    pub t1: f64,
    pub t2: f64,
    pub epsilon0: f64,
}

impl ReducedKernelParams {
    pub fn new(t1: f64, t2: f64, epsilon0: f64) -> Result<Self> {
        Ok(ReducedKernelParams { t1: positive("T1", t1)?, t2: positive("T2", t2)?, epsilon0: positive("epsilon0", epsilon0)? })
    }

    /// δ = sqrt(T2/T1) - 1, always recomputed.
    pub fn delta(&self) -> f64 {
        (self.t2 / self.t1).sqrt() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedKernel {
    FDelta,
    GDelta,
    AKern,
    B1,
    B2Delta,
}

/// Pieces shared by all five kernels at one (a, b, c).
#[derive(Debug, Clone, Copy)]
struct KernelParts {
    r1: f64,
    r2: f64,
    w4sq: f64,
    /// ((a - b) + δ·|w4|²) / (√T1 + √T2)
    x: f64,
}

#[inline]
fn parts(a: f64, b: f64, c: f64, p: &ReducedKernelParams, delta: f64) -> KernelParts {
    let e = 4.0 * p.epsilon0 / p.t1;
    let w4sq = 0.25 * a + 0.25 * c - 0.5 * b;
    let r2 = (a + e).sqrt();
    let r1 = (a + delta * (a - b) + delta * delta * w4sq + e).max(0.0).sqrt();
    let x = ((a - b) + delta * w4sq) / (p.t1.sqrt() + p.t2.sqrt());
    KernelParts { r1, r2, w4sq, x }
}

#[inline]
fn kernel_value(kind: ReducedKernel, a: f64, b: f64, c: f64, p: &ReducedKernelParams, kp: &KernelParts) -> f64 {
    match kind {
        ReducedKernel::FDelta => 4.0 * PI * kp.x / (kp.r1 + kp.r2),
        ReducedKernel::GDelta => 4.0 * PI * kp.r1,
        ReducedKernel::AKern => {
            4.0 * PI * (p.t1 / 8.0 * (a + 2.0 * b + c) + p.epsilon0) * (p.t1 * a + 4.0 * p.epsilon0).sqrt()
        }
        ReducedKernel::B1 => 2.0 * PI * kp.w4sq * kp.r2,
        ReducedKernel::B2Delta => 2.0 * PI * p.t2 * kp.w4sq * kp.x / (kp.r1 + kp.r2),
    }
}

/// Evaluate one reduced kernel at (a, b, c) on the reachable cone.
pub fn eval_reduced_kernel(kind: ReducedKernel, a: f64, b: f64, c: f64, params: &ReducedKernelParams) -> Result<f64> {
    let tol = 1e-12 * (1.0 + a.abs() + c.abs());
    if a < 0.0 || c < 0.0 || b.abs() > (a * c).sqrt() + tol {
        return Err(Error::DomainError { a, b, c });
    }
    let kp = parts(a, b, c, params, params.delta());
    Ok(kernel_value(kind, a, b, c, params, &kp))
}

/// Tensor Gauss-Legendre nodes for the (r, ρ, θ) integral.
#[derive(Debug, Clone)]
pub struct TripleGrid {
    r: Rule,
    rho: Rule,
    cos_t: Vec<f64>,
    w_t: Vec<f64>,
}

impl TripleGrid {
    pub fn new(spec: &TripleQuadSpec) -> Self {
        let th = Rule::gauss_legendre(spec.n_theta, 0.0, PI);
        TripleGrid {
            r: Rule::gauss_legendre(spec.n_r, 0.0, spec.r_max),
            rho: Rule::gauss_legendre(spec.n_rho, 0.0, spec.r_max),
            cos_t: th.nodes.iter().map(|t| t.cos()).collect(),
            w_t: th.nodes.iter().zip(&th.weights).map(|(t, w)| w * t.sin()).collect(),
        }
    }

    /// π² ∫∫∫ r²ρ² sinθ f(a, b, c) e^{-(r²+ρ²)/2} for a vector of kernels
    /// evaluated together. Outer r loop runs through `exec`; the per-r
    /// partial sums are combined in index order.
    pub fn integrate<const K: usize, F>(&self, exec: Exec, f: F) -> [f64; K]
    where
        F: Fn(f64, f64, f64) -> [f64; K] + Sync + Send,
    {
        let partial = exec.map(self.r.len(), |i| {
            let r = self.r.nodes[i];
            let wr = self.r.weights[i] * r * r * (-0.5 * r * r).exp();
            let mut acc = [0.0; K];
            for (&rho, &wrho) in self.rho.nodes.iter().zip(&self.rho.weights) {
                let wrr = wr * wrho * rho * rho * (-0.5 * rho * rho).exp();
                for (&ct, &wt) in self.cos_t.iter().zip(&self.w_t) {
                    let vals = f(rho * rho, rho * r * ct, r * r);
                    for k in 0..K {
                        acc[k] += wrr * wt * vals[k];
                    }
                }
            }
            acc
        });
        let mut total = [0.0; K];
        for acc in partial {
            for k in 0..K {
                total[k] += acc[k];
            }
        }
        total.map(|v| PI * PI * v)
    }
}

/// π²-prefixed triple integral of one reduced kernel (printed convention).
pub fn triple_integral(kind: ReducedKernel, params: &ReducedKernelParams, spec: &TripleQuadSpec) -> f64 {
    let delta = params.delta();
    let grid = TripleGrid::new(spec);
    grid.integrate(Exec::default(), |a, b, c| {
        let kp = parts(a, b, c, params, delta);
        [kernel_value(kind, a, b, c, params, &kp)]
    })[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prefactor {
    #[default]
    Printed,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionFunctionals {
    /// 𝒫(T1)
    pub p11: f64,
    /// 𝒫(T2, T1)
    pub p21: f64,
    /// (𝒫(T2,T1) - 𝒫(T1)) / (T2 - T1)
    pub p_diff: f64,
    /// 𝒜(T1; ε₀)
    pub a: f64,
    /// ℬ(T1,T2) / (T2 - T1) = -(b1 + b2)
    pub b_diff: f64,
    pub b1: f64,
    pub b2: f64,
}

impl CollisionFunctionals {
    /// ℬ(T1, T2) rebuilt from the divided difference.
    pub fn b_reconstructed(&self, t1: f64, t2: f64) -> f64 {
        self.b_diff * (t2 - t1)
    }
}

/// All five functionals in one pass over the triple grid.
pub fn functionals(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor) -> Result<CollisionFunctionals> {
    functionals_on(&TripleGrid::new(spec), t1, t2, consts, prefactor, Exec::default())
}

pub fn functionals_on(grid: &TripleGrid, t1: f64, t2: f64, consts: &PhysConsts, prefactor: Prefactor, exec: Exec) -> Result<CollisionFunctionals> {
    let p = ReducedKernelParams::new(t1, t2, consts.epsilon0)?;
    let p0 = ReducedKernelParams { t2: t1, ..p };
    let delta = p.delta();
    let [g21, g11, f, a, b1, b2] = grid.integrate(exec, |a, b, c| {
        let kp = parts(a, b, c, &p, delta);
        let g11 = 4.0 * PI * kp.r2;
        [
            kernel_value(ReducedKernel::GDelta, a, b, c, &p, &kp),
            g11,
            kernel_value(ReducedKernel::FDelta, a, b, c, &p, &kp),
            kernel_value(ReducedKernel::AKern, a, b, c, &p0, &kp),
            kernel_value(ReducedKernel::B1, a, b, c, &p, &kp),
            kernel_value(ReducedKernel::B2Delta, a, b, c, &p, &kp),
        ]
    });
    let (s_half, s_one) = match prefactor {
        Prefactor::Printed => (1.0, 1.0),
        Prefactor::Consistent => {
            let k = 0.5 * consts.c0_kernel / (PI * PI * PI);
            (k * t1.sqrt(), k)
        }
    };
    let (b1, b2) = (s_half * b1, s_one * b2);
    Ok(CollisionFunctionals {
        p11: s_half * g11,
        p21: s_half * g21,
        p_diff: s_one * f,
        a: s_one * a,
        b_diff: -(b1 + b2),
        b1,
        b2,
    })
}

/// Direct (not singularity-removed) ℬ(T1, T2) in the consistent
/// normalization, for divided-difference checks.
pub fn b_direct(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec) -> Result<f64> {
    let p = ReducedKernelParams::new(t1, t2, consts.epsilon0)?;
    let delta = p.delta();
    let grid = TripleGrid::new(spec);
    let [v] = grid.integrate(Exec::default(), |a, b, c| {
        let kp = parts(a, b, c, &p, delta);
        [2.0 * PI * kp.w4sq * (t1 * kp.r2 - t2 * kp.r1)]
    });
    Ok(0.5 * consts.c0_kernel / (PI * PI * PI) * t1.sqrt() * v)
}

/// H, S and L at one temperature pair, with the functionals used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxValues {
    pub h: f64,
    pub s: f64,
    pub l: f64,
    pub functionals: CollisionFunctionals,
}

pub fn h_from(t1: f64, t2: f64, consts: &PhysConsts, f: &CollisionFunctionals) -> f64 {
    t2 / t1 * boltzmann_ratio(t1, consts) * f.p11 / f.p21
}

/// S and L from precomputed functionals; fails on a vanishing denominator.
pub fn aux_from(t1: f64, t2: f64, consts: &PhysConsts, f: CollisionFunctionals) -> Result<AuxValues> {
    let x1 = boltzmann_ratio(t1, consts);
    let h = h_from(t1, t2, consts, &f);
    let lower = t2 - t1 * h;
    if !(lower.abs() > 1e-12 * t2) {
        return Err(Error::SingularDenominator { which: "T2 - T1*H", t1, t2, value: lower });
    }
    let term_a = f.p_diff * x1 / (t1 * f.p21) * f.a;
    let term_b = h / t2 * f.b_diff;
    let bracket = term_a + term_b;
    if !(bracket.abs() > 1e-12 * (term_a.abs() + term_b.abs())) {
        return Err(Error::SingularDenominator { which: "S denominator bracket", t1, t2, value: bracket });
    }
    let s = (4.0 * PI * h / lower) / (4.0 * consts.sigma / 3.0 / t1 * bracket);
    let l = s * (1.0 / t1 + h / t2);
    Ok(AuxValues { h, s, l, functionals: f })
}

pub fn aux(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor) -> Result<AuxValues> {
    aux_from(t1, t2, consts, functionals(t1, t2, consts, spec, prefactor)?)
}

pub fn h_func(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor) -> Result<f64> {
    let f = functionals(t1, t2, consts, spec, prefactor)?;
    Ok(h_from(t1, t2, consts, &f))
}

pub fn s_func(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor) -> Result<f64> {
    Ok(aux(t1, t2, consts, spec, prefactor)?.s)
}

pub fn l_func(t1: f64, t2: f64, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor) -> Result<f64> {
    Ok(aux(t1, t2, consts, spec, prefactor)?.l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McQuantity {
    /// 𝒫(T1)
    P,
    /// 𝒫(T2, T1)
    P21,
    /// 𝒜(T1; ε₀)
    A,
    /// ℬ(T1, T2)/(T2 - T1); the T-derivative at T2 = T1
    B,
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub(crate) const MC_BATCH: usize = 1 << 14;

/// Sum and sum of squares of `sample` over `n` draws, in fixed-size
/// batches each with its own ChaCha stream, reduced in batch order.
pub(crate) fn batched_moments<const K: usize, F>(n: usize, seed: u64, exec: Exec, sample: F) -> [McEstimate; K]
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync + Send,
{
    let batches = n.div_ceil(MC_BATCH);
    let partial = exec.map(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let m = MC_BATCH.min(n - b * MC_BATCH);
        let mut s = [0.0; K];
        let mut s2 = [0.0; K];
        for _ in 0..m {
            let v = sample(&mut rng);
            for k in 0..K {
                s[k] += v[k];
                s2[k] += v[k] * v[k];
            }
        }
        (s, s2)
    });
    let mut s = [0.0; K];
    let mut s2 = [0.0; K];
    for (ps, ps2) in partial {
        for k in 0..K {
            s[k] += ps[k];
            s2[k] += ps2[k];
        }
    }
    let nf = n as f64;
    std::array::from_fn(|k| {
        let mean = s[k] / nf;
        let var = ((s2[k] / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        McEstimate { mean, std_error: (var / nf).sqrt(), n }
    })
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
    Vec3::new(z[0], z[1], z[2]) * scale
}

/// Importance-sampled estimate of one defining velocity integral with
/// v3 ~ 𝒵(·,0,T1), v4 ~ 𝒵(·,0,T1 or T2) (variance T/2 per axis).
pub fn mc_oracle(quantity: McQuantity, t1: f64, t2: f64, consts: &PhysConsts, n_samples: usize, seed: u64) -> Result<McEstimate> {
    mc_oracle_with(quantity, t1, t2, consts, n_samples, seed, Exec::default())
}

pub fn mc_oracle_with(quantity: McQuantity, t1: f64, t2: f64, consts: &PhysConsts, n_samples: usize, seed: u64, exec: Exec) -> Result<McEstimate> {
    positive("T1", t1)?;
    positive("T2", t2)?;
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter { name: "n_samples", reason: format!("need >= 1e4, got {n_samples}") });
    }
    let eps = consts.epsilon0;
    let half_c = 0.5 * consts.c0_kernel;
    let s1 = (0.5 * t1).sqrt();
    let s2 = (0.5 * t2).sqrt();
    let w = move |v3: &Vec3, v4: &Vec3| half_c * ((v3 - v4).norm_squared() + 4.0 * eps).sqrt();
    let four_pi = 4.0 * PI;
    let equal = (t2 - t1).abs() <= 1e-12 * t1;
    let [est] = batched_moments(n_samples, seed, exec, move |rng| {
        let z3 = gaussian_vec(rng, 1.0);
        let z4 = gaussian_vec(rng, 1.0);
        let v = match quantity {
            McQuantity::P => four_pi * w(&(z3 * s1), &(z4 * s1)),
            McQuantity::P21 => four_pi * w(&(z3 * s1), &(z4 * s2)),
            McQuantity::A => {
                let v3 = z3 * s1;
                four_pi * (0.5 * v3.norm_squared() + eps) * w(&v3, &(z4 * s1))
            }
            McQuantity::B => {
                let v4 = z4 * s1;
                let g = |v3: &Vec3| four_pi * 0.5 * v3.norm_squared() * w(v3, &v4);
                if equal {
                    // -d/dT2 of E[g(v3)] with v3 = sqrt(T2/2) z3, at T2 = T1
                    let v3 = z3 * s1;
                    let d = v3 - v4;
                    let wv = w(&v3, &v4);
                    let grad_dot_v3 = four_pi * (v3.norm_squared() * wv + 0.5 * v3.norm_squared() * half_c * half_c * d.dot(&v3) / wv);
                    -grad_dot_v3 / (2.0 * t1)
                } else {
                    (g(&(z3 * s1)) - g(&(z3 * s2))) / (t2 - t1)
                }
            }
        };
        [v]
    });
    Ok(est)
}

/// Least-squares constant c minimizing Σ (mc - c·quad)² / σ².
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub constant: f64,
    /// Per pair: (quadrature·c, mc mean, mc std error, |rel diff|)
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl Calibration {
    pub fn fit(quad: &[f64], mc: &[McEstimate]) -> Calibration {
        let (mut num, mut den) = (0.0, 0.0);
        for (q, m) in quad.iter().zip(mc) {
            let w = 1.0 / (m.std_error * m.std_error).max(1e-300);
            num += w * q * m.mean;
            den += w * q * q;
        }
        let constant = num / den;
        let rows = quad
            .iter()
            .zip(mc)
            .map(|(q, m)| {
                let fitted = constant * q;
                (fitted, m.mean, m.std_error, ((fitted - m.mean) / m.mean).abs())
            })
            .collect();
        Calibration { constant, rows }
    }

    /// Every pair within max(rel_tol, n_sigma combined standard errors).
    /// The quadrature side is treated as exact.
    pub fn agrees(&self, rel_tol: f64, n_sigma: f64) -> bool {
        self.rows.iter().all(|&(fitted, mean, se, _)| {
            let diff = (fitted - mean).abs();
            diff <= rel_tol * mean.abs() || diff <= n_sigma * se
        })
    }
}
