//! One function per subcommand: solve, then write artifacts.

use radgas::collision::{functionals, mc_oracle_with, Calibration, McQuantity, Prefactor, TripleQuadSpec};
use radgas::domain3d::{nonexistence_check, solve_w, LatticeSpec, SphereGrid, Verdict};
use radgas::levelscan::{extract_contours, scan, smoothness_report, ScanWindow};
use radgas::physics::{CollisionTuple, KernelKind, MaxwellianState, PhysConsts};
use radgas::slab::{solve_exp_limit, solve_lte_fredholm, AngleGrid, FredholmOptions, SlabBoundary, SlabGrid};
use radgas::three_level::{lte_deviation, solve_three_level, ThreeLevelParams};
use radgas::verify::{
    detailed_balance_residual, entropy_identity_check, kernel_of_l_check, mass_exchange, mass_exchange_reference, mc_conservation,
    significance, within_sigma, McPlan, SpeciesPair,
};
use radgas::{Exec, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig, Subcommand};
use crate::output::{Artifacts, Cell};
use crate::values;
use crate::CliError;

/// What a finished run reports back to `main`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False for a negative verdict (failed check, nonexistence, scan
    /// failures); artifacts are still written.
    pub ok: bool,
    pub status: String,
}

fn consts(cfg: &RunConfig) -> Result<PhysConsts, CliError> {
    let kernel = match cfg.get("kernel") {
        "angular" => KernelKind::Angular,
        _ => KernelKind::Simplified,
    };
    Ok(PhysConsts::with_kernel(cfg.f64("epsilon0"), cfg.f64("sigma"), cfg.f64("c0_kernel"), kernel)?)
}

fn exec(cfg: &RunConfig) -> Exec {
    match cfg.get("exec") {
        "sequential" => Exec::Sequential,
        _ => Exec::Parallel,
    }
}

fn slab_grid(cfg: &RunConfig) -> Result<SlabGrid, CliError> {
    let (l, n) = (cfg.f64("l"), cfg.usize("n_y"));
    Ok(match cfg.get("grid") {
        "uniform" => SlabGrid::uniform(l, n)?,
        _ => SlabGrid::graded(l, n)?,
    })
}

fn config_error(key: &str, value: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(ConfigError::BadValue { key: key.into(), value: value.into(), msg: e.to_string() })
}

fn spread(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (mean, v.iter().fold(0.0_f64, |m, x| m.max((x - mean).abs())))
}

pub fn run(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    match cfg.subcommand {
        Subcommand::Levelscan => levelscan(cfg, art),
        Subcommand::SlabLte => slab_lte(cfg, art),
        Subcommand::SlabExp => slab_exp(cfg, art),
        Subcommand::Domain3d => domain3d(cfg, art),
        Subcommand::Nonexist => nonexist(cfg, art),
        Subcommand::ThreeLevel => three_level(cfg, art),
        Subcommand::Verify => verify(cfg, art),
    }
}

fn levelscan(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let consts = consts(cfg)?;
    let window = ScanWindow {
        t1_min: cfg.f64("t1_min"),
        t1_max: cfg.f64("t1_max"),
        t2_min: cfg.f64("t2_min"),
        t2_max: cfg.f64("t2_max"),
        step: cfg.f64("step"),
    };
    let spec = TripleQuadSpec { r_max: cfg.f64("r_max"), n_r: cfg.usize("n_r"), n_rho: cfg.usize("n_rho"), n_theta: cfg.usize("n_theta") };
    spec.validate()?;
    let prefactor = if cfg.get("prefactor") == "consistent" { Prefactor::Consistent } else { Prefactor::Printed };
    let res = scan(&window, &consts, &spec, prefactor, exec(cfg))?;

    let mut rows = Vec::new();
    for (i, row) in res.grid.iter().enumerate() {
        for (j, &l) in row.iter().enumerate() {
            rows.push(vec![Cell::Real(window.t1(i)), Cell::Real(window.t2(j)), Cell::Real(l)]);
        }
    }
    art.csv("grid.csv", &["T1", "T2", "L"], rows)?;

    let levels = res.even_levels(cfg.usize("levels"));
    let contours = extract_contours(&res, &levels)?;
    let mut rows = Vec::new();
    for (k, lines) in contours.polylines.iter().enumerate() {
        for (chain, line) in lines.iter().enumerate() {
            for &(t1, t2) in &line.points {
                rows.push(vec![Cell::Real(contours.levels[k]), Cell::Int(chain), Cell::Real(t1), Cell::Real(t2)]);
            }
        }
    }
    art.csv("contours.csv", &["level", "chain", "T1", "T2"], rows)?;

    let rep = smoothness_report(&res, &contours);
    let ok = res.failures.is_empty() && rep.all_clean();
    let levels_json: Vec<Value> = rep
        .levels
        .iter()
        .map(|l| {
            json!({
                "level": l.level,
                "components": l.components,
                "saddles": l.saddles,
                "max_turning_angle": l.max_turning_angle,
                "flagged": l.flagged,
            })
        })
        .collect();
    let range = res.finite_range();
    art.json(
        "report.json",
        &json!({
            "grid_shape": [res.grid.len(), res.grid.first().map_or(0, |r| r.len())],
            "failures": res.failures.iter().map(|&(i, j)| json!({"T1": window.t1(i), "T2": window.t2(j)})).collect::<Vec<_>>(),
            "finite_range": range.map(|(a, b)| vec![a, b]),
            "levels": levels_json,
            "all_clean": rep.all_clean(),
        }),
    )?;
    Ok(Outcome { ok, status: if ok { "clean".into() } else { "scan failures or irregular contours".into() } })
}

fn slab_lte(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let consts = consts(cfg)?;
    let j0 = values::boundary_profile("j0", cfg.get("j0"), consts.epsilon0)?;
    let opts = FredholmOptions {
        t0: cfg.f64("t0"),
        mass: values::optional_real("mass", cfg.get("mass"))?,
        tol: cfg.f64("tol"),
        max_iter: cfg.usize("max_iter"),
    };
    let grid = slab_grid(cfg)?;
    let sol = solve_lte_fredholm(&j0, &grid, &consts, &opts)?;
    let rows = (0..sol.y.len()).map(|i| vec![sol.y[i].into(), sol.theta[i].into(), sol.zeta[i].into(), sol.flux[i].into()]);
    art.csv("field.csv", &["y", "theta", "zeta", "flux_over_2pi"], rows)?;
    let (_, dev) = spread(&sol.flux);
    art.json(
        "report.json",
        &json!({
            "c0": sol.c0,
            "i0": sol.i0,
            "alpha0": sol.alpha0,
            "flux_max_deviation": dev,
            "sup_kernel_mass": sol.sup_kernel_mass,
            "picard_iterations": sol.picard_iterations,
            "picard_ratio": sol.picard_ratio,
            "method_gap": sol.method_gap,
            "node_residual": sol.node_residual,
            "midpoint_residual": sol.midpoint_residual,
            "neumann_residual": [sol.neumann_residual.0, sol.neumann_residual.1],
            "mass_residual": sol.mass_residual,
        }),
    )?;
    Ok(Outcome { ok: true, status: "converged".into() })
}

fn slab_exp(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let consts = consts(cfg)?;
    let mut a_plus = values::boundary_profile("a_plus", cfg.get("a_plus"), consts.epsilon0)?;
    if cfg.flag("normalize") {
        a_plus = a_plus.normalized().map_err(|e| config_error("a_plus", cfg.get("a_plus"), e))?;
    }
    let grid = slab_grid(cfg)?;
    let angles = AngleGrid::gauss_legendre(cfg.usize("n_mu"))?;
    let opts = FredholmOptions { tol: cfg.f64("tol"), max_iter: cfg.usize("max_iter"), ..FredholmOptions::default() };
    let sol = solve_exp_limit(&a_plus, &grid, &angles, &opts)?;
    let rows = (0..sol.y.len()).map(|i| vec![sol.y[i].into(), sol.w[i].into(), sol.flux[i].into(), sol.energy_residual[i].into()]);
    art.csv("field.csv", &["y", "w", "flux", "energy_residual"], rows)?;
    let mut rows = Vec::new();
    for (i, &y) in sol.h.y.iter().enumerate() {
        for (j, &mu) in sol.h.mu.iter().enumerate() {
            rows.push(vec![Cell::Real(y), Cell::Real(mu), Cell::Real(sol.h.plus[i][j])]);
            rows.push(vec![Cell::Real(y), Cell::Real(-mu), Cell::Real(sol.h.minus[i][j])]);
        }
    }
    art.csv("radiation.csv", &["y", "mu", "H"], rows)?;
    let (_, dev) = spread(&sol.flux);
    art.json(
        "report.json",
        &json!({
            "j0": sol.j0,
            "flux_max_deviation": dev,
            "min_w": sol.w.iter().copied().fold(f64::INFINITY, f64::min),
            "sup_kernel_mass": sol.sup_kernel_mass,
            "picard_iterations": sol.picard_iterations,
            "picard_ratio": sol.picard_ratio,
            "method_gap": sol.method_gap,
        }),
    )?;
    Ok(Outcome { ok: true, status: "converged".into() })
}

fn domain3d(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let domain = values::domain("domain", cfg.get("domain"))?;
    let sphere = SphereGrid::product(cfg.usize("n_polar"), cfg.usize("n_azimuth"))?;
    let f = values::sphere_profile("f", cfg.get("f"), &sphere)?;
    let spec = LatticeSpec {
        tol: cfg.f64("tol"),
        max_iter: cfg.usize("max_iter"),
        mass_correction: cfg.flag("mass_correction"),
        ..LatticeSpec::for_domain(&domain, cfg.usize("lattice"))
    };
    let field = solve_w(&domain, &f, &spec, &sphere, exec(cfg))?;
    let rows = field.points.iter().zip(&field.values).map(|(p, &w)| vec![p.x.into(), p.y.into(), p.z.into(), w.into()]);
    art.csv("field.csv", &["x", "y", "z", "w"], rows)?;
    let (lo, hi) = field.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
    art.json(
        "report.json",
        &json!({
            "points": field.len(),
            "cells": spec.cells,
            "min_w": lo,
            "max_w": hi,
            "max_kernel_mass": field.max_kernel_mass(),
            "picard_iterations": field.picard_iterations,
            "picard_ratio": field.picard_ratio,
        }),
    )?;
    Ok(Outcome { ok: true, status: "converged".into() })
}

fn nonexist(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let domain = values::domain("domain", cfg.get("domain"))?;
    let sphere = SphereGrid::product(cfg.usize("n_polar"), cfg.usize("n_azimuth"))?;
    let f = values::sphere_profile("f", cfg.get("f"), &sphere)?;
    let samples = values::points("samples", cfg.get("samples"))?;
    let rep = nonexistence_check(&domain, &f, cfg.f64("a2"), &samples, cfg.f64("tol"), &sphere, cfg.f64("h"), exec(cfg))?;
    let rows = rep.rows.iter().map(|(p, d)| vec![p.x.into(), p.y.into(), p.z.into(), d.value.into(), d.error_bar.into()]);
    art.csv("samples.csv", &["x", "y", "z", "div_r", "error_bar"], rows)?;
    let (verdict, witness) = match rep.verdict {
        Verdict::ExistsPossible => ("EXISTS_POSSIBLE", Value::Null),
        Verdict::Inconclusive => ("INCONCLUSIVE", Value::Null),
        Verdict::Nonexistent { point, value } => ("NONEXISTENT", json!({"point": [point.x, point.y, point.z], "div_r": value})),
    };
    art.json(
        "report.json",
        &json!({ "verdict": verdict, "witness": witness, "a2": rep.a2, "tol": rep.tol, "mixed": rep.mixed }),
    )?;
    Ok(Outcome { ok: rep.verdict == Verdict::ExistsPossible, status: verdict.into() })
}

fn three_level(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let params = ThreeLevelParams {
        gamma1: cfg.f64("gamma1"),
        gamma2: cfg.f64("gamma2"),
        eps: cfg.f64("eps"),
        t0: cfg.f64("t0"),
        rho0: cfg.f64("rho0"),
        p12: cfg.f64("p12"),
        p23: cfg.f64("p23"),
    };
    params.validate().map_err(|e| config_error("gamma1", cfg.get("gamma1"), e))?;
    let boundary = SlabBoundary {
        plus: values::boundary_profile("h_plus", cfg.get("h_plus"), params.eps)?,
        minus: values::boundary_profile("h_minus", cfg.get("h_minus"), params.eps)?,
    };
    let c0 = values::c0_spec("c0", cfg.get("c0"))?;
    let grid = slab_grid(cfg)?;
    let angles = AngleGrid::gauss_legendre(cfg.usize("n_mu"))?;
    let xi = vec![cfg.f64("xi"); grid.len()];
    let sol = solve_three_level(&xi, &boundary, &params, &grid, &angles, c0, exec(cfg))?;
    let rows = (0..sol.y.len()).map(|i| vec![sol.y[i].into(), sol.sigma1[i].into(), sol.sigma2[i].into(), sol.sigma3[i].into(), sol.xi[i].into()]);
    art.csv("field.csv", &["y", "sigma1", "sigma2", "sigma3", "xi"], rows)?;
    let dev = lte_deviation(&sol);
    art.json(
        "report.json",
        &json!({
            "c0": sol.c0,
            "lte_deviation": { "value": dev.value, "y": dev.y, "node": dev.node, "pair": [dev.pair.0, dev.pair.1] },
            "picard_iterations": sol.picard_iterations,
            "method_gap": sol.method_gap,
            "eq2_residual": sol.eq2_residual,
            "balance_residual": sol.balance_residual,
        }),
    )?;
    Ok(Outcome { ok: true, status: "converged".into() })
}

fn verify(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let consts = consts(cfg)?;
    let seed = cfg.u64("seed");
    let exec = exec(cfg);
    let plan = McPlan { exec, ..McPlan::new(cfg.usize("n_samples"), seed).map_err(|e| config_error("n_samples", cfg.get("n_samples"), e))? };
    let u = values::vec3("u", cfg.get("u"))?;
    let (t1, t2) = (cfg.f64("t1"), cfg.f64("t2"));
    let pair = SpeciesPair {
        ground: MaxwellianState::new(cfg.f64("rho1"), u, t1)?,
        excited: MaxwellianState::new(cfg.f64("rho2"), u, t2)?,
    };
    let mut checks: Vec<(String, f64, f64, f64, bool)> = Vec::new();

    // Detailed balance on random super-threshold tuples for the LTE pair.
    let lte = SpeciesPair::lte(pair.ground, &consts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut count) = (0.0_f64, 0);
    let span = 4.0 * (0.5 * t1).sqrt();
    while count < cfg.usize("tuples") {
        let v1 = u + Vec3::from_fn(|_, _| rng.random_range(-span..span));
        let v2 = u + Vec3::from_fn(|_, _| rng.random_range(-span..span));
        let omega = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if omega.norm() < 1e-3 {
            continue;
        }
        if let Ok(t) = CollisionTuple::nonelastic(v1, v2, omega.normalize(), &consts) {
            worst = worst.max(detailed_balance_residual(&lte.ground, &lte.excited, &t, &consts).abs());
            count += 1;
        }
    }
    checks.push(("detailed_balance_max".into(), worst, 0.0, 0.0, worst < 1e-12));

    let moments = mc_conservation(&pair, &plan, &consts)?;
    for (name, e) in moments.all() {
        checks.push((format!("conservation_{name}"), e.mean, e.std_error, 0.0, within_sigma(&e, 0.0, 3.0)));
    }

    let spec = TripleQuadSpec::default();
    let f = functionals(t1, t2, &consts, &spec, Prefactor::Consistent)?;
    let cal_mc = [
        mc_oracle_with(McQuantity::P, t1, t2, &consts, plan.n_samples, seed.wrapping_add(1), exec)?,
        mc_oracle_with(McQuantity::P21, t1, t2, &consts, plan.n_samples, seed.wrapping_add(2), exec)?,
    ];
    let cal = Calibration::fit(&[f.p11, f.p21], &cal_mc).constant;
    let reference = mass_exchange_reference(&pair, &consts, &spec, cal)?;
    let exch = mass_exchange(&pair, &plan, &consts)?;
    checks.push(("mass_exchange".into(), exch.mean, exch.std_error, reference, within_sigma(&exch, reference, 3.0)));
    let boosted = mass_exchange(&pair.boosted(Vec3::new(1.0, -0.5, 0.25)), &plan, &consts)?;
    let shift_ok = (boosted.mean - exch.mean).abs() <= 3.0 * (boosted.std_error.hypot(exch.std_error)) + 1e-10;
    checks.push(("mass_exchange_boosted".into(), boosted.mean, boosted.std_error, exch.mean, shift_ok));

    let kernel = kernel_of_l_check(&pair.ground, &consts, &plan)?;
    for (name, e) in &kernel.projections {
        checks.push((format!("kernel_{name}"), e.mean, e.std_error, 0.0, within_sigma(e, 0.0, 3.0)));
    }

    let entropy = entropy_identity_check(&[0.5, 2.0, 10.0, 50.0], &consts)?;
    checks.push(("entropy_identity_max_rel".into(), entropy.max_rel_error, 0.0, 0.0, entropy.max_rel_error < 1e-6));

    let ok = checks.iter().all(|c| c.4);
    let rows = checks.iter().map(|c| vec![Cell::Text(c.0.clone()), c.1.into(), c.2.into(), c.3.into(), Cell::Int(c.4 as usize)]);
    art.csv("checks.csv", &["check", "estimate", "std_error", "target", "pass"], rows)?;
    let report: Vec<Value> = checks
        .iter()
        .map(|(name, est, se, target, pass)| {
            let sig = if *se > 0.0 { significance(&radgas::collision::McEstimate { mean: *est, std_error: *se, n: plan.n_samples }, *target) } else { 0.0 };
            json!({ "check": name, "estimate": est, "std_error": se, "target": target, "sigmas": sig, "pass": pass })
        })
        .collect();
    art.json("report.json", &json!({ "checks": report, "calibration": cal, "all_pass": ok }))?;
    Ok(Outcome { ok, status: if ok { "all checks pass".into() } else { "check failed".into() } })
}
