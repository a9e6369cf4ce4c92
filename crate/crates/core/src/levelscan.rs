//! Grid scan of L(T1, T2), marching-squares level curves and a smoothness
//! report for them.

use std::collections::HashMap;

use crate::collision::{aux_from, functionals_on, Prefactor, TripleGrid, TripleQuadSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::physics::PhysConsts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanWindow {
    pub t1_min: f64,
    pub t1_max: f64,
    pub t2_min: f64,
    pub t2_max: f64,
    pub step: f64,
}

impl ScanWindow {
    /// The [10, 12]² window with step 0.1.
    pub fn figure() -> Self {
        ScanWindow { t1_min: 10.0, t1_max: 12.0, t2_min: 10.0, t2_max: 12.0, step: 0.1 }
    }

    fn count(name: &'static str, lo: f64, hi: f64, step: f64) -> Result<usize> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter { name, reason: format!("need min < max, got [{lo}, {hi}]") });
        }
        let n = ((hi - lo) / step).round();
        if (n * step - (hi - lo)).abs() > 1e-9 || n < 1.0 {
            return Err(Error::InvalidParameter { name: "step", reason: format!("{step} does not divide [{lo}, {hi}]") });
        }
        Ok(n as usize)
    }

    /// Number of intervals along (T1, T2).
    pub fn intervals(&self) -> Result<(usize, usize)> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter { name: "step", reason: format!("must be positive, got {}", self.step) });
        }
        Ok((
            Self::count("t1 range", self.t1_min, self.t1_max, self.step)?,
            Self::count("t2 range", self.t2_min, self.t2_max, self.step)?,
        ))
    }

    pub fn t1(&self, i: usize) -> f64 {
        self.t1_min + i as f64 * self.step
    }

    pub fn t2(&self, j: usize) -> f64 {
        self.t2_min + j as f64 * self.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// grid[i][j] = L(t1(i), t2(j)); NaN where the evaluation failed.
    pub grid: Vec<Vec<f64>>,
    pub window: ScanWindow,
    pub failures: Vec<(usize, usize)>,
}

impl ScanResult {
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let vals = self.grid.iter().flatten().filter(|v| v.is_finite());
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        (lo <= hi).then_some((lo, hi))
    }

    /// `k` levels strictly inside the finite range, evenly spaced.
    pub fn even_levels(&self, k: usize) -> Vec<f64> {
        match self.finite_range() {
            Some((lo, hi)) => (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect(),
            None => Vec::new(),
        }
    }
}

/// Evaluate any scalar function over the window. Failed cells become NaN
/// and are listed in `failures`.
pub fn scan_with<F>(window: &ScanWindow, exec: Exec, f: F) -> Result<ScanResult>
where
    F: Fn(f64, f64) -> Result<f64> + Sync + Send,
{
    let (n1, n2) = window.intervals()?;
    let cols = n2 + 1;
    let flat = exec.map((n1 + 1) * cols, |k| f(window.t1(k / cols), window.t2(k % cols)).ok().filter(|v| v.is_finite()));
    let mut failures = Vec::new();
    let grid = (0..=n1)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    flat[i * cols + j].unwrap_or_else(|| {
                        failures.push((i, j));
                        f64::NAN
                    })
                })
                .collect()
        })
        .collect();
    Ok(ScanResult { grid, window: *window, failures })
}

/// L over the window from the reduced collision integrals.
pub fn scan(window: &ScanWindow, consts: &PhysConsts, spec: &TripleQuadSpec, prefactor: Prefactor, exec: Exec) -> Result<ScanResult> {
    spec.validate()?;
    let grid = TripleGrid::new(spec);
    scan_with(window, exec, |t1, t2| {
        let f = functionals_on(&grid, t1, t2, consts, prefactor, Exec::Sequential)?;
        Ok(aux_from(t1, t2, consts, f)?.l)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    /// Per level, the stitched chains.
    pub polylines: Vec<Vec<Polyline>>,
    /// Per level, cells whose four corners alternate about the level.
    pub saddles: Vec<usize>,
}

/// Crossing identifier: (vertical?, i, j) of the lower-left grid vertex.
type EdgeKey = (bool, usize, usize);

pub fn extract_contours(result: &ScanResult, levels: &[f64]) -> Result<ContourSet> {
    let mut out = ContourSet { levels: levels.to_vec(), polylines: Vec::new(), saddles: Vec::new() };
    for &level in levels {
        let (chains, saddles) = contour_level(result, level);
        if chains.is_empty() {
            return Err(Error::EmptyLevel { level });
        }
        out.polylines.push(chains);
        out.saddles.push(saddles);
    }
    Ok(out)
}

fn contour_level(result: &ScanResult, level: f64) -> (Vec<Polyline>, usize) {
    let g = &result.grid;
    let w = &result.window;
    let n1 = g.len();
    let n2 = if n1 == 0 { 0 } else { g[0].len() };
    let above = |i: usize, j: usize| g[i][j] >= level;

    let point = |key: EdgeKey| -> (f64, f64) {
        let (vert, i, j) = key;
        let (i2, j2) = if vert { (i, j + 1) } else { (i + 1, j) };
        let (v0, v1) = (g[i][j], g[i2][j2]);
        let t = (level - v0) / (v1 - v0);
        let (a, b) = ((w.t1(i), w.t2(j)), (w.t1(i2), w.t2(j2)));
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };

    let mut adj: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    let mut order: Vec<EdgeKey> = Vec::new();
    let mut link = |a: EdgeKey, b: EdgeKey, adj: &mut HashMap<EdgeKey, Vec<EdgeKey>>| {
        for (p, q) in [(a, b), (b, a)] {
            let e = adj.entry(p).or_default();
            if e.is_empty() {
                order.push(p);
            }
            e.push(q);
        }
    };

    let mut saddles = 0;
    for i in 0..n1.saturating_sub(1) {
        for j in 0..n2.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| !g[a][b].is_finite()) {
                continue;
            }
            let up: [bool; 4] = corners.map(|(a, b)| above(a, b));
            // edge k joins corner k and corner k+1
            let edges: [EdgeKey; 4] = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let crossed: Vec<usize> = (0..4).filter(|&k| up[k] != up[(k + 1) % 4]).collect();
            match crossed.len() {
                2 => link(edges[crossed[0]], edges[crossed[1]], &mut adj),
                4 => {
                    saddles += 1;
                    let centre = corners.iter().map(|&(a, b)| g[a][b]).sum::<f64>() / 4.0;
                    // corners on the minority side of the centre are cut off
                    let cut = centre < level;
                    for k in 0..4 {
                        if up[k] == cut {
                            link(edges[(k + 3) % 4], edges[k], &mut adj);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    let mut seen: HashMap<EdgeKey, bool> = HashMap::new();
    let mut chains = Vec::new();
    let walk = |start: EdgeKey, seen: &mut HashMap<EdgeKey, bool>| {
        let mut pts = vec![point(start)];
        seen.insert(start, true);
        let mut prev = start;
        let mut cur = start;
        let mut closed = false;
        loop {
            let next = adj[&cur].iter().copied().find(|n| *n != prev && !seen.contains_key(n));
            match next {
                Some(n) => {
                    seen.insert(n, true);
                    pts.push(point(n));
                    prev = cur;
                    cur = n;
                }
                None => {
                    if pts.len() > 2 && adj[&cur].contains(&start) {
                        pts.push(point(start));
                        closed = true;
                    }
                    break;
                }
            }
        }
        Polyline { points: pts, closed }
    };
    for &k in &order {
        if adj[&k].len() == 1 && !seen.contains_key(&k) {
            chains.push(walk(k, &mut seen));
        }
    }
    for &k in &order {
        if !seen.contains_key(&k) {
            chains.push(walk(k, &mut seen));
        }
    }
    (chains, saddles)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: f64,
    pub components: usize,
    pub saddles: usize,
    /// Largest angle between consecutive segments, radians.
    pub max_turning_angle: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmoothnessReport {
    pub levels: Vec<LevelReport>,
    pub failures: usize,
}

impl SmoothnessReport {
    pub fn all_clean(&self) -> bool {
        self.failures == 0 && self.levels.iter().all(|l| !l.flagged)
    }
}

fn max_turning(points: &[(f64, f64)]) -> f64 {
    let segs: Vec<(f64, f64)> = points
        .windows(2)
        .map(|p| (p[1].0 - p[0].0, p[1].1 - p[0].1))
        .filter(|d| d.0.hypot(d.1) > 1e-14)
        .collect();
    segs.windows(2)
        .map(|s| {
            let cross = s[0].0 * s[1].1 - s[0].1 * s[1].0;
            let dot = s[0].0 * s[1].0 + s[0].1 * s[1].1;
            cross.atan2(dot).abs()
        })
        .fold(0.0, f64::max)
}

pub fn smoothness_report(result: &ScanResult, contours: &ContourSet) -> SmoothnessReport {
    let levels = contours
        .levels
        .iter()
        .zip(&contours.polylines)
        .zip(&contours.saddles)
        .map(|((&level, chains), &saddles)| {
            let components = chains.len();
            let max_turning_angle = chains.iter().map(|c| max_turning(&c.points)).fold(0.0, f64::max);
            LevelReport { level, components, saddles, max_turning_angle, flagged: components > 1 || saddles > 0 }
        })
        .collect();
    SmoothnessReport { levels, failures: result.failures.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_must_divide() {
        let w = ScanWindow { step: 0.3, ..ScanWindow::figure() };
        assert!(w.intervals().is_err());
        assert_eq!(ScanWindow::figure().intervals().unwrap(), (20, 20));
    }

    #[test]
    fn closed_loop_is_one_component() {
        let w = ScanWindow { t1_min: -1.0, t1_max: 1.0, t2_min: -1.0, t2_max: 1.0, step: 0.1 };
        let r = scan_with(&w, Exec::Sequential, |a, b| Ok(a * a + b * b)).unwrap();
        let c = extract_contours(&r, &[0.5]).unwrap();
        assert_eq!(c.polylines[0].len(), 1);
        assert!(c.polylines[0][0].closed);
    }
}
