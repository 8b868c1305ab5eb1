//! Periodic points by damped Newton iteration, grid scans, and hyperbolic
//! sets assembled from repelling cycles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EntireMap;
use crate::ser::complex as ser_complex;

/// Multiplier classification shared by landing reports and periodic points.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Classification {
    Repelling,
    ParabolicMultiplier1,
    ParabolicRootOfUnity(u32),
    Attracting,
    Indifferent,
    Unclassified,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::Repelling => write!(f, "Repelling"),
            Classification::ParabolicMultiplier1 => write!(f, "ParabolicMultiplier1"),
            Classification::ParabolicRootOfUnity(q) => write!(f, "ParabolicRootOfUnity({q})"),
            Classification::Attracting => write!(f, "Attracting"),
            Classification::Indifferent => write!(f, "Indifferent"),
            Classification::Unclassified => write!(f, "Unclassified"),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl Classification {
    pub fn is_repelling_or_parabolic(&self) -> bool {
        matches!(
            self,
            Classification::Repelling
                | Classification::ParabolicMultiplier1
                | Classification::ParabolicRootOfUnity(_)
        )
    }
}

/// Classify a multiplier with tolerance `eps` and root-of-unity search bound
/// `q_max`.
pub fn classify(multiplier: Complex64, eps: f64, q_max: u32) -> Classification {
    let r = multiplier.norm();
    if r > 1.0 + eps {
        return Classification::Repelling;
    }
    if (multiplier - Complex64::new(1.0, 0.0)).norm() <= eps {
        return Classification::ParabolicMultiplier1;
    }
    if (1.0 - r).abs() <= eps {
        let mut pow = multiplier;
        for q in 2..=q_max {
            pow *= multiplier;
            if (pow - Complex64::new(1.0, 0.0)).norm() <= eps {
                return Classification::ParabolicRootOfUnity(q);
            }
        }
    }
    if r < 1.0 - eps {
        return Classification::Attracting;
    }
    Classification::Indifferent
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeriodicPoint {
    #[serde(with = "ser_complex")]
    pub point: Complex64,
    /// Primitive period.
    pub period: usize,
    #[serde(with = "ser_complex")]
    pub multiplier: Complex64,
    pub classification: Classification,
    /// `|f^p(point) - point|` at the primitive period.
    pub residual: f64,
}

/// Axis-aligned rectangle in the plane.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::Domain("window must be nondegenerate"));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

pub const DEFAULT_EPS_LAMBDA: f64 = 1e-6;
pub const DEFAULT_Q_MAX: u32 = 12;

/// Damped Newton on `g(z) = f^p(z) - z`.
///
/// Steps are halved up to 8 times when the residual worsens; multiple roots
/// (parabolic points) converge linearly and are accepted on the residual
/// alone, so callers should budget extra steps for them.
pub fn newton_periodic(
    map: &EntireMap,
    p: usize,
    seed: Complex64,
    tol: f64,
    max_steps: usize,
) -> Result<PeriodicPoint> {
    if p == 0 {
        return Err(Error::Domain("period must be at least 1"));
    }
    let residual_of = |z: Complex64| -> Result<Complex64> {
        let fp = map.iterate(z, p).map_err(|_| Error::DerivativeBlowup)?;
        Ok(fp - z)
    };
    let mut z = seed;
    let mut g = residual_of(z)?;
    let mut last_step = f64::INFINITY;
    for _ in 0..max_steps {
        // Polish past the residual threshold: multiple roots need the step
        // size to settle before the multiplier is trustworthy.
        if g.norm() <= tol && last_step <= 1e-13 * (1.0 + z.norm()) {
            break;
        }
        let dg = map.cycle_multiplier(z, p).map_err(|_| Error::DerivativeBlowup)?
            - Complex64::new(1.0, 0.0);
        if dg.norm() < 1e-300 {
            if g.norm() <= tol {
                break;
            }
            return Err(Error::DerivativeBlowup);
        }
        let mut step = g / dg;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = z - step;
            match residual_of(cand) {
                Ok(gc) if gc.norm() <= g.norm() || gc.norm() <= tol => {
                    last_step = (z - cand).norm();
                    z = cand;
                    g = gc;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            // Accept the small step anyway; near multiple roots the residual
            // can stall at rounding level.
            let cand = z - step;
            match residual_of(cand) {
                Ok(gc) => {
                    last_step = (z - cand).norm();
                    z = cand;
                    g = gc;
                }
                Err(_) => return Err(Error::DerivativeBlowup),
            }
        }
    }
    if g.norm() <= tol {
        return finish_periodic(map, p, z, tol);
    }
    Err(Error::NoConvergence {
        steps: max_steps,
        residual: g.norm(),
    })
}

/// Primitivity check, multiplier and classification for a converged root.
fn finish_periodic(map: &EntireMap, p: usize, z: Complex64, tol: f64) -> Result<PeriodicPoint> {
    let demote_tol = f64::max(100.0 * tol, 1e-9) * (1.0 + z.norm());
    let mut period = p;
    for d in 1..p {
        if p.is_multiple_of(d) {
            if let Ok(fd) = map.iterate(z, d) {
                if (fd - z).norm() <= demote_tol {
                    period = d;
                    break;
                }
            }
        }
    }
    let residual = (map.iterate(z, period).map_err(|_| Error::DerivativeBlowup)? - z).norm();
    let multiplier = map
        .cycle_multiplier(z, period)
        .map_err(|_| Error::DerivativeBlowup)?;
    Ok(PeriodicPoint {
        point: z,
        period,
        multiplier,
        classification: classify(multiplier, DEFAULT_EPS_LAMBDA, DEFAULT_Q_MAX),
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanOutcome {
    pub points: Vec<PeriodicPoint>,
    pub seeds: usize,
    pub converged: usize,
    pub dropped_nonprimitive: usize,
    pub dropped_outside: usize,
    pub failed: usize,
}

/// Newton from every grid seed; keeps primitive period-`p` points inside the
/// window, deduplicates by distance `< 100 tol` (smaller residual wins) and
/// sorts by `(Im, Re)`. Seeds run in parallel; the merge is sequential.
pub fn scan_periodic(
    map: &EntireMap,
    p: usize,
    window: Window,
    grid: (usize, usize),
    tol: f64,
) -> ScanOutcome {
    let (nx, ny) = (grid.0.max(1), grid.1.max(1));
    let coord = |min: f64, max: f64, n: usize, i: usize| {
        if n == 1 {
            0.5 * (min + max)
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    };
    let seeds: Vec<Complex64> = (0..nx * ny)
        .map(|idx| {
            let i = idx % nx;
            let j = idx / nx;
            Complex64::new(
                coord(window.re_min, window.re_max, nx, i),
                coord(window.im_min, window.im_max, ny, j),
            )
        })
        .collect();
    let results: Vec<std::result::Result<PeriodicPoint, bool>> = seeds
        .par_iter()
        .map(|&seed| match newton_periodic(map, p, seed, tol, 256) {
            Ok(pt) => Ok(pt),
            Err(_) => Err(false),
        })
        .collect();

    let mut converged = 0usize;
    let mut dropped_nonprimitive = 0usize;
    let mut dropped_outside = 0usize;
    let mut failed = 0usize;
    let mut kept: Vec<PeriodicPoint> = Vec::new();
    for r in results {
        match r {
            Ok(pt) => {
                converged += 1;
                if pt.period != p {
                    dropped_nonprimitive += 1;
                } else if !window.contains(pt.point) {
                    dropped_outside += 1;
                } else {
                    kept.push(pt);
                }
            }
            Err(_) => failed += 1,
        }
    }
    // Dedup radius: a residual below tol pins a simple root to O(tol), but a
    // multiple (parabolic) root only to O(sqrt(tol)), so those merge wider.
    let radius_of = |p: &PeriodicPoint| -> f64 {
        if matches!(
            p.classification,
            Classification::ParabolicMultiplier1 | Classification::ParabolicRootOfUnity(_)
        ) {
            f64::max(100.0 * tol, 10.0 * tol.sqrt())
        } else {
            100.0 * tol
        }
    };
    let mut unique: Vec<PeriodicPoint> = Vec::new();
    for pt in kept {
        match unique
            .iter_mut()
            .find(|u| (u.point - pt.point).norm() < f64::max(radius_of(u), radius_of(&pt)))
        {
            Some(u) => {
                if pt.residual < u.residual {
                    *u = pt;
                }
            }
            None => unique.push(pt),
        }
    }
    unique.sort_by(|a, b| {
        (a.point.im, a.point.re)
            .partial_cmp(&(b.point.im, b.point.re))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    ScanOutcome {
        points: unique,
        seeds: nx * ny,
        converged,
        dropped_nonprimitive,
        dropped_outside,
        failed,
    }
}

/// Union of repelling cycles with a sampled expansion witness.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicSetApprox {
    /// Full orbit of each cycle.
    pub cycles: Vec<Vec<[f64; 2]>>,
    /// Iterate `k` used for the expansion witness.
    pub expansion_iterate: usize,
    /// `min |(f^k)'|` over all stored points; greater than 1.
    pub eta: f64,
}

impl HyperbolicSetApprox {
    pub fn points(&self) -> Vec<Complex64> {
        self.cycles
            .iter()
            .flat_map(|c| c.iter().map(|p| Complex64::new(p[0], p[1])))
            .collect()
    }

    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points()
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Collects the full orbits of repelling points and verifies the sampled
/// expansion `|(f^k)'| >= eta > 1` on all of them.
pub fn build_hyperbolic_set(
    map: &EntireMap,
    points: &[PeriodicPoint],
    k: usize,
) -> Result<HyperbolicSetApprox> {
    if k == 0 {
        return Err(Error::Domain("expansion iterate must be at least 1"));
    }
    for pt in points {
        if pt.classification != Classification::Repelling {
            return Err(Error::Precondition(
                "hyperbolic sets are built from repelling points only",
            ));
        }
    }
    let mut cycles: Vec<Vec<Complex64>> = Vec::new();
    for pt in points {
        let orbit = map
            .orbit(pt.point, pt.period.saturating_sub(1))
            .map_err(|_| Error::DerivativeBlowup)?;
        let dup = cycles.iter().any(|c| {
            c.iter()
                .any(|z| orbit.iter().any(|w| (z - w).norm() < 1e-6))
        });
        if !dup {
            cycles.push(orbit);
        }
    }
    let mut eta = f64::INFINITY;
    for cycle in &cycles {
        for &z in cycle {
            let m = map
                .cycle_multiplier(z, k)
                .map_err(|_| Error::DerivativeBlowup)?;
            eta = eta.min(m.norm());
        }
    }
    if eta.is_nan() || eta <= 1.0 {
        return Err(Error::NotExpanding { k, eta });
    }
    Ok(HyperbolicSetApprox {
        cycles: cycles
            .iter()
            .map(|c| c.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        expansion_iterate: k,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exp2() -> EntireMap {
        EntireMap::exponential(c(-2.0, 0.0)).unwrap()
    }

    #[test]
    fn newton_fixed_points() {
        let m = exp2();
        // oracle: independent plain Newton on e^z - z - 2
        let mut z = 1.0f64;
        for _ in 0..64 {
            z -= (z.exp() - z - 2.0) / (z.exp() - 1.0);
        }
        let repelling = newton_periodic(&m, 1, c(1.0, 0.0), 1e-12, 64).unwrap();
        assert!((repelling.point - c(z, 0.0)).norm() < 1e-10);
        assert!((repelling.point.re - 1.146193).abs() < 1e-6);
        assert_eq!(repelling.classification, Classification::Repelling);
        assert!((repelling.multiplier - (repelling.point + 2.0)).norm() < 1e-10);
        assert!((repelling.multiplier.re - 3.14619).abs() < 1e-5);

        let attracting = newton_periodic(&m, 1, c(-2.0, 0.0), 1e-12, 64).unwrap();
        assert!((attracting.point.re + 1.841406).abs() < 1e-6);
        assert_eq!(attracting.classification, Classification::Attracting);
        assert!((attracting.multiplier - (attracting.point + 2.0)).norm() < 1e-10);
        assert!((attracting.multiplier.re - 0.158594).abs() < 1e-5);
    }

    #[test]
    fn newton_parabolic_double_root() {
        let m = EntireMap::exponential(c(-1.0, 0.0)).unwrap();
        let pt = newton_periodic(&m, 1, c(0.1, 0.0), 1e-10, 400).unwrap();
        assert!(pt.point.norm() < 1e-4);
        assert_eq!(pt.classification, Classification::ParabolicMultiplier1);
    }

    #[test]
    fn scan_p1_examples() {
        let m = exp2();
        let window = Window::new(-5.0, 5.0, -8.0, 8.0).unwrap();
        let out = scan_periodic(&m, 1, window, (40, 40), 1e-11);
        assert!(out
            .points
            .iter()
            .any(|p| (p.point - c(1.1461932206205825, 0.0)).norm() < 1e-6));
        assert!(out
            .points
            .iter()
            .any(|p| (p.point - c(-1.8414056604369606, 0.0)).norm() < 1e-6));
        let upper: Vec<_> = out
            .points
            .iter()
            .filter(|p| {
                p.point.im > std::f64::consts::PI
                    && p.point.im < 3.0 * std::f64::consts::PI
                    && p.classification == Classification::Repelling
            })
            .collect();
        assert_eq!(upper.len(), 1);
    }

    #[test]
    fn scan_p2_primitivity() {
        let m = exp2();
        let window = Window::new(-5.0, 5.0, -8.0, 8.0).unwrap();
        let fixed = scan_periodic(&m, 1, window, (30, 30), 1e-11);
        let two = scan_periodic(&m, 2, window, (30, 30), 1e-11);
        assert!(!two.points.is_empty());
        for p2 in &two.points {
            assert_eq!(p2.period, 2);
            for p1 in &fixed.points {
                assert!((p2.point - p1.point).norm() > 1e-3);
            }
        }
        // orbit closure within 10 tol
        for p2 in &two.points {
            let back = m.iterate(p2.point, 2).unwrap();
            assert!((back - p2.point).norm() <= 1e-10);
        }
    }

    #[test]
    fn empty_window_scan() {
        let m = exp2();
        // window with no periodic points: far out along the imaginary axis
        // between strips yet within the plane; use a thin sliver
        let window = Window::new(100.0, 100.5, 0.1, 0.2).unwrap();
        let out = scan_periodic(&m, 1, window, (3, 3), 1e-11);
        assert!(out.points.is_empty());
    }

    #[test]
    fn hyperbolic_set_examples() {
        let m = exp2();
        let rep = newton_periodic(&m, 1, c(1.0, 0.0), 1e-12, 64).unwrap();
        let h = build_hyperbolic_set(&m, &[rep], 1).unwrap();
        assert!((h.eta - 3.146).abs() < 1e-3);

        let att = newton_periodic(&m, 1, c(-2.0, 0.0), 1e-12, 64).unwrap();
        assert!(build_hyperbolic_set(&m, &[att], 1).is_err());

        let upper = newton_periodic(&m, 1, c(2.0, 6.8), 1e-12, 64).unwrap();
        assert_eq!(upper.classification, Classification::Repelling);
        let h2 = build_hyperbolic_set(&m, &[rep, upper], 1).unwrap();
        let min_mod = rep.multiplier.norm().min(upper.multiplier.norm());
        assert!((h2.eta - min_mod).abs() < 1e-9);
    }

    #[test]
    fn classify_boundaries() {
        let eps = 1e-6;
        assert_eq!(classify(c(2.0, 0.0), eps, 12), Classification::Repelling);
        assert_eq!(
            classify(c(1.0, 0.0), eps, 12),
            Classification::ParabolicMultiplier1
        );
        assert_eq!(classify(c(0.5, 0.0), eps, 12), Classification::Attracting);
        let third = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        assert_eq!(
            classify(third, eps, 12),
            Classification::ParabolicRootOfUnity(3)
        );
        let irrational = Complex64::from_polar(1.0, 1.0);
        assert_eq!(classify(irrational, eps, 12), Classification::Indifferent);
    }
}
