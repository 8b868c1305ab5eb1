//! Iterated inverse branches along an address, landing detection, ray
//! tracing, and forward address observation.
//!
//! The composition convention is fixed once here: the depth-`n` pullback of
//! `zeta` along `s = F0 F1 F2 ...` is
//!
//! ```text
//! zeta_n = inv(F0)(inv(F1)( ... inv(F_{n-1})(zeta) ... ))
//! ```
//!
//! i.e. the label with the highest index is applied first. Incremental
//! deepening therefore keeps one running value per distinct shift of the
//! address: `zeta_{n+1}(sigma^m s) = inv(F_m)(zeta_n(sigma^{m+1} s))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::address::ExternalAddress;
use crate::error::{Error, Result};
use crate::model::{DomainLabel, EntireMap};
use crate::periodic::{classify, Classification, DEFAULT_EPS_LAMBDA, DEFAULT_Q_MAX};
use crate::ser::{complex as ser_complex, complex_opt as ser_complex_opt};

/// Running values for every distinct shift of an eventually periodic address.
struct ShiftTracks<'m> {
    map: &'m EntireMap,
    labels: Vec<DomainLabel>,
    wrap: usize,
    vals: Vec<Complex64>,
    scratch: Vec<Complex64>,
    depth: usize,
}

impl<'m> ShiftTracks<'m> {
    fn new(map: &'m EntireMap, s: &ExternalAddress, base: Complex64) -> Self {
        let len = s.preperiod_len() + s.period_len();
        let labels = (0..len).map(|i| s.entry(i)).collect();
        ShiftTracks {
            map,
            labels,
            wrap: s.preperiod_len(),
            vals: vec![base; len],
            scratch: vec![base; len],
            depth: 0,
        }
    }

    /// Advance every track one pullback step; returns `zeta_{n}(s)`.
    fn step(&mut self) -> Result<Complex64> {
        let len = self.labels.len();
        for m in 0..len {
            let src = if m + 1 < len { m + 1 } else { self.wrap };
            self.scratch[m] = self
                .map
                .inverse_branch(self.labels[m], self.vals[src])
                .map_err(|e| Error::Pullback {
                    depth: self.depth + 1,
                    source: Box::new(e),
                })?;
        }
        std::mem::swap(&mut self.vals, &mut self.scratch);
        self.depth += 1;
        Ok(self.vals[0])
    }

    /// Current value of the purely periodic part `sigma^{preperiod}(s)`.
    fn core(&self) -> Complex64 {
        self.vals[self.wrap]
    }
}

/// `zeta_n`: the depth-`n` pullback of `zeta` along `s`.
pub fn pullback_point(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Complex64,
    n: usize,
) -> Result<Complex64> {
    if n == 0 {
        return Ok(zeta);
    }
    let mut tracks = ShiftTracks::new(map, s, zeta);
    let mut out = zeta;
    for _ in 0..n {
        out = tracks.step()?;
    }
    Ok(out)
}

/// The whole sequence `zeta_1, ..., zeta_n`.
pub fn pullback_sequence(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Complex64,
    n: usize,
) -> Result<Vec<Complex64>> {
    let mut tracks = ShiftTracks::new(map, s, zeta);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(tracks.step()?);
    }
    Ok(out)
}

/// Depth-`n` pullback along an explicit finite label word (the word's last
/// label is applied first, matching [`pullback_point`] on a prefix).
pub fn pullback_finite(map: &EntireMap, word: &[DomainLabel], zeta: Complex64) -> Result<Complex64> {
    let mut cur = zeta;
    for (i, label) in word.iter().enumerate().rev() {
        cur = map.inverse_branch(*label, cur).map_err(|e| Error::Pullback {
            depth: word.len() - i,
            source: Box::new(e),
        })?;
    }
    Ok(cur)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LandStatus {
    Landed,
    /// The sequence stalled on an apparent cycle of the given length.
    Cycling(usize),
    Diverged,
    Undecided,
}

impl std::fmt::Display for LandStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LandStatus::Landed => write!(f, "Landed"),
            LandStatus::Cycling(p) => write!(f, "Cycling({p})"),
            LandStatus::Diverged => write!(f, "Diverged"),
            LandStatus::Undecided => write!(f, "Undecided"),
        }
    }
}

impl Serialize for LandStatus {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LandingReport {
    pub status: LandStatus,
    #[serde(with = "ser_complex_opt")]
    pub landing_point: Option<Complex64>,
    /// Primitive period of the landing cycle (0 when not landed).
    pub period: usize,
    #[serde(with = "ser_complex_opt")]
    pub multiplier: Option<Complex64>,
    pub classification: Classification,
    /// `|f^p(z0) - z0|` on the periodic core of the landing point.
    pub residual: Option<f64>,
    pub gap_final: f64,
    pub steps: usize,
}

/// Pullback sequence with convergence diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct PullbackOrbit {
    pub address: ExternalAddress,
    #[serde(with = "ser_complex")]
    pub base: Complex64,
    pub points: Vec<[f64; 2]>,
    pub gaps: Vec<f64>,
}

impl PullbackOrbit {
    pub fn point(&self, i: usize) -> Complex64 {
        Complex64::new(self.points[i][0], self.points[i][1])
    }

    /// CSV serialization `n,re,im,gap` with one row per pullback step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im,gap\n");
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                i + 1,
                p[0],
                p[1],
                self.gaps[i]
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LandOptions {
    pub tol: f64,
    pub n_max: usize,
    pub eps_lambda: f64,
    pub q_max: u32,
    /// Divergence radius: beyond this the run is declared `Diverged`.
    pub r_div: f64,
}

impl Default for LandOptions {
    fn default() -> Self {
        LandOptions {
            tol: 1e-10,
            n_max: 100_000,
            eps_lambda: DEFAULT_EPS_LAMBDA,
            q_max: DEFAULT_Q_MAX,
            r_div: 1e6,
        }
    }
}

impl LandOptions {
    /// Slow mode for parabolic landings: sub-geometric convergence needs a
    /// much larger horizon.
    pub fn slow() -> Self {
        LandOptions {
            tol: 1e-8,
            n_max: 1_000_000,
            ..Default::default()
        }
    }
}

const GAP_WINDOW: usize = 5;

/// Runs the pullback until the gap window certifies convergence, then refines
/// the limit by a local Newton iteration on `f^p(z) - z` and classifies the
/// multiplier.
pub fn land(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Complex64,
    opts: &LandOptions,
) -> Result<LandingReport> {
    let (report, _) = land_inner(map, s, zeta, opts, false)?;
    Ok(report)
}

/// Same as [`land`] but also returns the recorded orbit.
pub fn land_with_orbit(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Complex64,
    opts: &LandOptions,
) -> Result<(LandingReport, PullbackOrbit)> {
    let (report, orbit) = land_inner(map, s, zeta, opts, true)?;
    Ok((report, orbit.expect("orbit recording requested")))
}

fn land_inner(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Complex64,
    opts: &LandOptions,
    record: bool,
) -> Result<(LandingReport, Option<PullbackOrbit>)> {
    let mut tracks = ShiftTracks::new(map, s, zeta);
    let mut gaps: Vec<f64> = Vec::new();
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut ring: Vec<Complex64> = Vec::new(); // recent heads for cycle probing
    let mut prev = zeta;
    let mut status = LandStatus::Undecided;
    let mut steps = 0usize;

    for n in 1..=opts.n_max {
        let cur = tracks.step()?;
        let gap = (cur - prev).norm();
        gaps.push(gap);
        if record {
            points.push([cur.re, cur.im]);
        }
        if ring.len() == 64 {
            ring.remove(0);
        }
        ring.push(cur);
        prev = cur;
        steps = n;
        if cur.norm() > opts.r_div {
            status = LandStatus::Diverged;
            break;
        }
        if n >= GAP_WINDOW {
            let w = &gaps[n - GAP_WINDOW..];
            let small = w.iter().all(|g| *g < opts.tol);
            let monotone = w.windows(2).all(|p| p[1] <= p[0]);
            let tiny = w.iter().all(|g| *g < opts.tol / 10.0);
            if small && (monotone || tiny) {
                status = LandStatus::Landed;
                break;
            }
        }
    }

    let gap_final = gaps.last().copied().unwrap_or(0.0);
    let orbit = if record {
        Some(PullbackOrbit {
            address: s.clone(),
            base: zeta,
            points,
            gaps: gaps.clone(),
        })
    } else {
        None
    };

    if status == LandStatus::Undecided {
        if let Some(lag) = detect_cycle(&ring, opts.tol) {
            status = LandStatus::Cycling(lag);
        }
    }

    if status != LandStatus::Landed {
        return Ok((
            LandingReport {
                status,
                landing_point: None,
                period: 0,
                multiplier: None,
                classification: Classification::Unclassified,
                residual: None,
                gap_final,
                steps,
            },
            orbit,
        ));
    }

    // Refine the limit of the purely periodic core, then recover the actual
    // landing point by applying the preperiod branches.
    let p = s.period_len();
    let q = s.preperiod_len();
    let core_seed = tracks.core();
    let refined = refine_fixed_point(map, p, core_seed);
    // Parabolic convergence leaves the raw limit O(sqrt(tol)) away from the
    // fixed point, so the refinement is allowed to move that far.
    let accept_radius = f64::max(1e-3, 4.0 * opts.tol.sqrt());
    let (core, mut residual) = match refined {
        Some((z, r)) if (z - core_seed).norm() <= accept_radius => (z, r),
        _ => {
            // Honest fallback: report the raw limit if it already satisfies
            // the residual contract, otherwise leave the run undecided.
            let raw = (map
                .iterate(core_seed, p)
                .map(|fp| (fp - core_seed).norm()))
            .unwrap_or(f64::INFINITY);
            if raw <= opts.tol {
                (core_seed, raw)
            } else {
                return Ok((
                    LandingReport {
                        status: LandStatus::Undecided,
                        landing_point: None,
                        period: 0,
                        multiplier: None,
                        classification: Classification::Unclassified,
                        residual: None,
                        gap_final,
                        steps,
                    },
                    orbit,
                ));
            }
        }
    };

    // primitive period of the landing cycle
    let mut period = p;
    for d in 1..p {
        if p.is_multiple_of(d) {
            if let Ok(fd) = map.iterate(core, d) {
                if (fd - core).norm() <= f64::max(100.0 * opts.tol, 1e-9) * (1.0 + core.norm()) {
                    period = d;
                    break;
                }
            }
        }
    }
    if period != p {
        if let Ok(fp) = map.iterate(core, period) {
            residual = (fp - core).norm();
        }
    }

    let multiplier = map.cycle_multiplier(core, period).ok();
    let classification = multiplier
        .map(|l| classify(l, opts.eps_lambda, opts.q_max))
        .unwrap_or(Classification::Unclassified);

    let mut landing = core;
    for j in (0..q).rev() {
        landing = map
            .inverse_branch(s.entry(j), landing)
            .map_err(|e| Error::Pullback {
                depth: j,
                source: Box::new(e),
            })?;
    }

    Ok((
        LandingReport {
            status: LandStatus::Landed,
            landing_point: Some(landing),
            period,
            multiplier,
            classification,
            residual: Some(residual),
            gap_final,
            steps,
        },
        orbit,
    ))
}

/// Plain (lightly damped) Newton on `f^p(z) - z`. Deliberately independent of
/// the grid-scan Newton in `periodic`, which serves as its cross-check.
fn refine_fixed_point(map: &EntireMap, p: usize, seed: Complex64) -> Option<(Complex64, f64)> {
    let g = |z: Complex64| -> Option<Complex64> { map.iterate(z, p).ok().map(|fp| fp - z) };
    let mut z = seed;
    let mut gz = g(z)?;
    for _ in 0..80 {
        let dg = map.cycle_multiplier(z, p).ok()? - Complex64::new(1.0, 0.0);
        if dg.norm() < 1e-300 {
            break;
        }
        let mut step = gz / dg;
        let mut improved = false;
        for _ in 0..8 {
            let cand = z - step;
            if let Some(gc) = g(cand) {
                if gc.norm() <= gz.norm() || gc.norm() < 1e-14 {
                    z = cand;
                    gz = gc;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            break;
        }
    }
    Some((z, gz.norm()))
}

fn detect_cycle(ring: &[Complex64], tol: f64) -> Option<usize> {
    let n = ring.len();
    for lag in 1..=n.saturating_sub(8).min(32) {
        let checks = 4;
        let ok = (0..checks).all(|i| {
            let a = ring[n - 1 - i];
            let b = ring[n - 1 - i - lag];
            (a - b).norm() < tol * 10.0
        });
        if ok {
            return Some(lag);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapDecayReport {
    pub geometric: bool,
    /// Fitted per-step gap ratio.
    pub rate: f64,
    pub tail_len: usize,
}

/// Least-squares fit of `ln gap` against `n` over the converged tail;
/// geometric decay means the fitted ratio stays at or below `0.5 + slack`.
pub fn gap_decay_check(orbit: &PullbackOrbit) -> GapDecayReport {
    gap_decay_check_with_slack(orbit, 0.1)
}

pub fn gap_decay_check_with_slack(orbit: &PullbackOrbit, slack: f64) -> GapDecayReport {
    let floor = 1e-15 * (1.0 + orbit.base.norm());
    let n = orbit.gaps.len();
    if n < 2 || orbit.gaps.last().copied().unwrap_or(0.0) < floor {
        // already sitting at the limit point
        return GapDecayReport {
            geometric: true,
            rate: 0.0,
            tail_len: 0,
        };
    }
    let tail_len = (n / 2).clamp(2, 25);
    let tail: Vec<(f64, f64)> = orbit.gaps[n - tail_len..]
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > floor)
        .map(|(i, g)| (i as f64, g.ln()))
        .collect();
    if tail.len() < 2 {
        return GapDecayReport {
            geometric: true,
            rate: 0.0,
            tail_len: tail.len(),
        };
    }
    let m = tail.len() as f64;
    let sx: f64 = tail.iter().map(|(x, _)| x).sum();
    let sy: f64 = tail.iter().map(|(_, y)| y).sum();
    let sxx: f64 = tail.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = tail.iter().map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let rate = slope.exp();
    GapDecayReport {
        geometric: rate <= 0.5 + slack,
        rate,
        tail_len: tail.len(),
    }
}

/// Piecewise-linear approximation of a ray, parameterized by potential time:
/// the vertex at `t = -n` is the depth-`n` pullback of the base point.
#[derive(Clone, Debug, Serialize)]
pub struct RayPolyline {
    pub address: ExternalAddress,
    pub vertices: Vec<[f64; 2]>,
    pub t_values: Vec<f64>,
}

impl RayPolyline {
    pub fn vertex(&self, i: usize) -> Complex64 {
        Complex64::new(self.vertices[i][0], self.vertices[i][1])
    }

    /// Vertex closest to parameter `t`.
    pub fn vertex_at(&self, t: f64) -> Option<Complex64> {
        self.t_values
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - t)
                    .abs()
                    .partial_cmp(&(b.1 - t).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| self.vertex(i))
    }

    /// CSV serialization `n,re,im,gap` (`n` is the potential time, `gap` the
    /// segment length from the previous vertex).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im,gap\n");
        let mut prev: Option<Complex64> = None;
        for (i, t) in self.t_values.iter().enumerate() {
            let v = self.vertex(i);
            let gap = prev.map(|p| (v - p).norm()).unwrap_or(0.0);
            out.push_str(&format!("{:.6},{:.16e},{:.16e},{:.16e}\n", t, v.re, v.im, gap));
            prev = Some(v);
        }
        out
    }
}

/// Traces the ray at address `s` down to depth `n_pull`.
///
/// For each shift class `r` the base arc runs from the one-step pullback of
/// `zeta` along `sigma^r(s)` to `zeta`; piece `n` is the depth-`n` pullback
/// of the arc for class `r = class(n)`, so `f` maps each piece onto the
/// corresponding piece of the shifted address (and of the same polyline when
/// `s` is a fixed address). Every base arc must stay inside the slit plane;
/// this is certified by adaptive bisection with clearance bounds.
pub fn trace_ray(
    map: &EntireMap,
    s: &ExternalAddress,
    zeta: Option<Complex64>,
    n_pull: usize,
    samples_per_unit: usize,
) -> Result<RayPolyline> {
    if n_pull == 0 {
        return Err(Error::Domain("n_pull must be at least 1"));
    }
    let spu = samples_per_unit.max(1);
    let zeta = match zeta {
        Some(z) => z,
        None => map.trace_base_point()?,
    };
    if !map.in_w0(zeta) {
        return Err(Error::Precondition("trace base point must lie in the slit plane"));
    }

    let classes = s.preperiod_len() + s.period_len();
    let mut arc_start = Vec::with_capacity(classes);
    for r in 0..classes {
        let z1 = map
            .inverse_branch(s.entry(r), zeta)
            .map_err(|e| Error::Pullback {
                depth: 1,
                source: Box::new(e),
            })?;
        validate_arc(map, z1, zeta)?;
        arc_start.push(z1);
    }
    let class_of = |n: usize| -> usize {
        if n < s.preperiod_len() {
            n
        } else {
            s.preperiod_len() + (n - s.preperiod_len()) % s.period_len()
        }
    };

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut t_values: Vec<f64> = Vec::new();
    for n in (0..n_pull).rev() {
        let start = arc_start[class_of(n)];
        let word: Vec<DomainLabel> = (0..n).map(|j| s.entry(j)).collect();
        let i0 = if n == n_pull - 1 { 0 } else { 1 };
        for i in i0..=spu {
            let u = i as f64 / spu as f64;
            let sample = start + (zeta - start) * u;
            let v = pullback_finite(map, &word, sample)?;
            vertices.push([v.re, v.im]);
            t_values.push(-(n as f64) - 1.0 + u);
        }
    }
    Ok(RayPolyline {
        address: s.clone(),
        vertices,
        t_values,
    })
}

/// Certifies that the straight segment stays in the slit plane by bisecting
/// until each piece is shorter than its endpoint clearances.
fn validate_arc(map: &EntireMap, from: Complex64, to: Complex64) -> Result<()> {
    fn rec(map: &EntireMap, a: Complex64, b: Complex64, t0: f64, t1: f64, depth: u32) -> Result<()> {
        let ca = map.w0_clearance(a);
        let cb = map.w0_clearance(b);
        if ca <= 0.0 {
            return Err(Error::ArcLeavesW0 { t: t0 - 1.0 });
        }
        if cb <= 0.0 {
            return Err(Error::ArcLeavesW0 { t: t1 - 1.0 });
        }
        if (b - a).norm() < 0.999 * f64::max(ca, cb) {
            return Ok(());
        }
        if depth == 0 {
            return Err(Error::ArcLeavesW0 {
                t: 0.5 * (t0 + t1) - 1.0,
            });
        }
        let mid = 0.5 * (a + b);
        let tm = 0.5 * (t0 + t1);
        rec(map, a, mid, t0, tm, depth - 1)?;
        rec(map, mid, b, tm, t1, depth - 1)
    }
    rec(map, from, to, 0.0, 1.0, 20)
}

/// Finite-horizon observation of the forward itinerary: entry `j` is the
/// fundamental domain of `f^j(z)`.
pub fn escape_address(
    map: &EntireMap,
    z: Complex64,
    n_max: usize,
) -> Result<crate::address::FiniteAddress> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1"));
    }
    let mut entries = Vec::with_capacity(n_max);
    let mut x = z;
    let mut j = 0usize;
    while j < n_max {
        let label = map.fundamental_domain_of(x).map_err(|e| match e {
            Error::Precondition(_) => Error::OrbitEntersD { step: j + 1 },
            Error::Escaped => Error::OrbitOverflow { step: j },
            other => other,
        })?;
        entries.push(label);
        j += 1;
        if j == n_max {
            break;
        }
        match map.eval(x) {
            Ok(next) => x = next,
            Err(Error::Escaped) => {
                // Orbit blew past the representable range. Along the positive
                // real direction the itinerary provably stays in the k = 0
                // strip of the exponential family; anything else is reported.
                let wrapped = x.im.rem_euclid(std::f64::consts::TAU);
                let on_axis = wrapped < 1e-9 || (std::f64::consts::TAU - wrapped) < 1e-9;
                if map.family() == crate::model::Family::Exponential && on_axis && x.re > 0.0 {
                    while entries.len() < n_max {
                        entries.push(DomainLabel::exp(0));
                    }
                    break;
                }
                return Err(Error::OrbitOverflow { step: j });
            }
            Err(e) => return Err(e),
        }
    }
    crate::address::FiniteAddress::new(entries)
}
