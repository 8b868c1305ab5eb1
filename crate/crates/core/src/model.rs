//! Concrete entire-map families with closed-form inverse branches.
//!
//! A map carries a reference disc `D` of radius `R` around the origin and a
//! straight cut ray `delta = { t e^{i cut_angle} : t >= R }`. The slit plane
//! `W0 = C \ (closure(D) u delta)` is where symbolic bookkeeping happens:
//! connected components of `f^{-1}(W0)` are the fundamental domains, labelled
//! by `(tract, k)` where `k` indexes the `2 pi i` branch of the logarithm.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real parts beyond this trigger the deterministic "escaped" marker instead
/// of floating-point infinities.
pub const EXP_SAFE_RE: f64 = 700.0;

const TAU: f64 = std::f64::consts::TAU;
const CUT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Family {
    /// `z -> e^z + a`, one tract (a right half-plane for large radii).
    Exponential,
    /// `z -> a e^z + b e^{-z}`, two tracts (right and left half-planes).
    Cosine,
}

/// Identifier of one fundamental domain: tract index plus logarithm branch.
///
/// Tract 0 is the right (`e^z`-dominated) tract, tract 1 the left one; the
/// exponential family only uses tract 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DomainLabel {
    pub tract: u8,
    pub k: i64,
}

impl DomainLabel {
    pub fn exp(k: i64) -> Self {
        DomainLabel { tract: 0, k }
    }

    pub fn right(k: i64) -> Self {
        DomainLabel { tract: 0, k }
    }

    pub fn left(k: i64) -> Self {
        DomainLabel { tract: 1, k }
    }

    /// Linear order induced by the cut: `F < G` iff walking counterclockwise
    /// from the cut ray meets `F` first. With the default cuts this is plain
    /// `k` for the exponential family; for the cosine family the left tract
    /// comes first with `k` descending, then the right tract ascending.
    fn order_key(&self) -> (u8, i64) {
        if self.tract == 1 {
            (0, -self.k)
        } else {
            (1, self.k)
        }
    }
}

impl PartialOrd for DomainLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DomainLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tract == 1 {
            write!(f, "L{}", self.k)
        } else {
            write!(f, "{}", self.k)
        }
    }
}

impl std::str::FromStr for DomainLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tract, rest) = match s.chars().next() {
            Some('L') | Some('l') => (1u8, &s[1..]),
            Some('R') | Some('r') => (0u8, &s[1..]),
            _ => (0u8, s),
        };
        let k: i64 = rest
            .parse()
            .map_err(|_| Error::Parse(format!("bad domain label '{s}'")))?;
        Ok(DomainLabel { tract, k })
    }
}

impl Serialize for DomainLabel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DomainLabel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of `W0` together with a logarithm lift, `exp(log_lift) = z`.
#[derive(Clone, Copy, Debug)]
pub struct CylPoint {
    pub z: Complex64,
    pub log_lift: Complex64,
}

impl CylPoint {
    /// Canonical lift with imaginary part in `(cut_angle, cut_angle + 2 pi)`.
    pub fn canonical(map: &EntireMap, z: Complex64) -> Result<Self> {
        if !map.in_w0(z) {
            return Err(Error::NotComparable(
                "point is not in the slit plane outside the reference disc",
            ));
        }
        let lift = Complex64::new(z.norm().ln(), arg_upper(z, map.cut_angle));
        Ok(CylPoint { z, log_lift: lift })
    }

    /// Same point on another sheet of the lifted slit plane.
    pub fn translated(self, turns: i64) -> Self {
        CylPoint {
            z: self.z,
            log_lift: self.log_lift + Complex64::new(0.0, TAU * turns as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PostsingularReport {
    pub bounded: bool,
    pub max_modulus: f64,
    pub horizon: usize,
}

/// One member of a closed-form entire family, with the reference disc and cut
/// fixed at construction. All operations are pure; the value is immutable
/// after setup (including `choose_radius`) and freely shareable.
#[derive(Clone, Debug)]
pub struct EntireMap {
    family: Family,
    a: Complex64,
    b: Complex64,
    disc_radius: f64,
    cut_angle: f64,
}

impl EntireMap {
    pub fn exponential(a: Complex64) -> Result<Self> {
        Self::with_options(Family::Exponential, a, Complex64::new(0.0, 0.0), None, None)
    }

    pub fn cosine(a: Complex64, b: Complex64) -> Result<Self> {
        Self::with_options(Family::Cosine, a, b, None, None)
    }

    pub fn with_options(
        family: Family,
        a: Complex64,
        b: Complex64,
        disc_radius: Option<f64>,
        cut_angle: Option<f64>,
    ) -> Result<Self> {
        if family == Family::Cosine && (a.norm() == 0.0 || b.norm() == 0.0) {
            return Err(Error::Domain("cosine family requires nonzero coefficients"));
        }
        let cut_angle = cut_angle
            .unwrap_or(match family {
                Family::Exponential => std::f64::consts::PI,
                Family::Cosine => std::f64::consts::FRAC_PI_2,
            })
            .rem_euclid(TAU);
        let mut map = EntireMap {
            family,
            a,
            b,
            disc_radius: 1.0,
            cut_angle,
        };
        let radius = disc_radius.unwrap_or_else(|| map.provisional_radius());
        map.set_radius(radius)?;
        Ok(map)
    }

    fn provisional_radius(&self) -> f64 {
        let s_max = self
            .singular_values()
            .iter()
            .map(|s| s.norm())
            .fold(0.0, f64::max);
        let f0 = self.eval(Complex64::new(0.0, 0.0)).map(|w| w.norm()).unwrap_or(0.0);
        let mut r = f64::max(2.0, f64::max(2.0 * s_max, 1.25 * f0));
        if self.family == Family::Cosine {
            r = r.max(1.2 * (self.a.norm() + self.b.norm()));
        }
        r
    }

    fn set_radius(&mut self, radius: f64) -> Result<()> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Domain("disc radius must be positive"));
        }
        let s_max = self
            .singular_values()
            .iter()
            .map(|s| s.norm())
            .fold(0.0, f64::max);
        if s_max >= radius {
            return Err(Error::Precondition(
                "reference disc must strictly contain the singular values",
            ));
        }
        let f0 = self.eval(Complex64::new(0.0, 0.0))?;
        if f0.norm() >= radius {
            return Err(Error::Precondition("f(0) must lie in the reference disc"));
        }
        // The cut ray must stay clear of the tracts: |f| < R along delta.
        let dir = Complex64::from_polar(1.0, self.cut_angle);
        let mut r = radius;
        for _ in 0..48 {
            match self.eval(dir * r) {
                Ok(w) if w.norm() < radius => {}
                _ => return Err(Error::Precondition("the cut ray must avoid the tracts")),
            }
            r *= 1.35;
            if r > radius * 1.0e6 {
                break;
            }
        }
        self.disc_radius = radius;
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> (Complex64, Complex64) {
        (self.a, self.b)
    }

    pub fn disc_radius(&self) -> f64 {
        self.disc_radius
    }

    pub fn cut_angle(&self) -> f64 {
        self.cut_angle
    }

    /// Shell-friendly identifier, `exp:<re>[,<im>]` or `cos:<are>,<aim>,<bre>,<bim>`.
    pub fn id_string(&self) -> String {
        match self.family {
            Family::Exponential => {
                if self.a.im == 0.0 {
                    format!("exp:{}", self.a.re)
                } else {
                    format!("exp:{},{}", self.a.re, self.a.im)
                }
            }
            Family::Cosine => format!(
                "cos:{},{},{},{}",
                self.a.re, self.a.im, self.b.re, self.b.im
            ),
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self.family {
            Family::Exponential => {
                if z.re > EXP_SAFE_RE {
                    return Err(Error::Escaped);
                }
                Ok(z.exp() + self.a)
            }
            Family::Cosine => {
                if z.re.abs() > EXP_SAFE_RE {
                    return Err(Error::Escaped);
                }
                Ok(self.a * z.exp() + self.b * (-z).exp())
            }
        }
    }

    pub fn deriv(&self, z: Complex64) -> Result<Complex64> {
        match self.family {
            Family::Exponential => {
                if z.re > EXP_SAFE_RE {
                    return Err(Error::Escaped);
                }
                Ok(z.exp())
            }
            Family::Cosine => {
                if z.re.abs() > EXP_SAFE_RE {
                    return Err(Error::Escaped);
                }
                Ok(self.a * z.exp() - self.b * (-z).exp())
            }
        }
    }

    /// `|f'(z) z / f(z)|`, the derivative in the metric `|dz|/|z|`.
    pub fn cyl_derivative_norm(&self, z: Complex64) -> Result<f64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("cylindrical derivative undefined at z = 0"));
        }
        let w = self.eval(z)?;
        if w.norm() == 0.0 {
            return Err(Error::Domain("cylindrical derivative undefined where f(z) = 0"));
        }
        let d = self.deriv(z)?;
        Ok((d * z / w).norm())
    }

    pub fn singular_values(&self) -> Vec<Complex64> {
        match self.family {
            Family::Exponential => vec![self.a],
            Family::Cosine => {
                let v = 2.0 * (self.a * self.b).sqrt();
                vec![v, -v]
            }
        }
    }

    /// Finite-horizon necessary check that all singular orbits stay below `bound`.
    pub fn check_postsingular_bounded(&self, n_iter: usize, bound: f64) -> PostsingularReport {
        let mut max_modulus: f64 = 0.0;
        let mut bounded = true;
        'outer: for s in self.singular_values() {
            let mut z = s;
            for _ in 0..=n_iter {
                let m = z.norm();
                max_modulus = max_modulus.max(m);
                if m >= bound {
                    bounded = false;
                    break 'outer;
                }
                match self.eval(z) {
                    Ok(w) => z = w,
                    Err(_) => {
                        bounded = false;
                        break 'outer;
                    }
                }
            }
        }
        PostsingularReport {
            bounded,
            max_modulus,
            horizon: n_iter,
        }
    }

    /// Grows the disc through the schedule `R0 * 2^j` until the sampled
    /// minimum of the cylindrical derivative over `{ z : f(z) outside D }`
    /// is at least 2. Sampled normalization, not a proof.
    pub fn choose_radius(&mut self, samples: usize) -> Result<f64> {
        let samples = samples.max(16);
        let r0 = self.provisional_radius();
        let mut last = r0;
        for j in 0..24u32 {
            let r = r0 * f64::powi(2.0, j as i32);
            last = r;
            if self.sampled_expansion_ok(r, samples) {
                self.set_radius(r)?;
                return Ok(r);
            }
        }
        Err(Error::NormalizationFailed {
            doublings: 24,
            last_radius: last,
        })
    }

    fn sampled_expansion_ok(&self, radius: f64, samples: usize) -> bool {
        let half = f64::max(8.0, 2.0 * radius.ln() + 2.0);
        let step = 2.0 * half / (samples as f64 - 1.0);
        let mut seen = false;
        for i in 0..samples {
            for j in 0..samples {
                let z = Complex64::new(-half + step * i as f64, -half + step * j as f64);
                if z.norm() == 0.0 {
                    continue;
                }
                let w = match self.eval(z) {
                    Ok(w) => w,
                    Err(_) => continue, // conceptually enormous image; expansion holds there
                };
                if w.norm() <= radius || w.norm() == 0.0 {
                    continue;
                }
                seen = true;
                let d = match self.deriv(z) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                if (d * z / w).norm() < 2.0 {
                    return false;
                }
            }
        }
        seen
    }

    /// Distance from `w` to the cut ray `{ t e^{i cut_angle} : t >= 0 }`.
    fn ray_distance(&self, w: Complex64) -> f64 {
        let v = w * Complex64::from_polar(1.0, -self.cut_angle);
        if v.re >= 0.0 {
            v.im.abs()
        } else {
            v.norm()
        }
    }

    /// Membership in `W0` (outside the closed disc, off the cut).
    pub fn in_w0(&self, w: Complex64) -> bool {
        w.norm() > self.disc_radius && self.ray_distance(w) > CUT_TOL * w.norm().max(1.0)
    }

    /// Clearance from the complement of `W0`; nonpositive means outside.
    pub(crate) fn w0_clearance(&self, w: Complex64) -> f64 {
        f64::min(w.norm() - self.disc_radius, self.ray_distance(w))
    }

    /// Continuous branch argument data for the two cosine roots of
    /// `a t^2 - w t + b = 0` in `t = e^z`. Returns `(zeta_plus, psi_plus)`.
    fn cosine_big_root(&self, w: Complex64) -> Result<(Complex64, f64)> {
        let prod = 4.0 * self.a * self.b;
        if w.norm() == 0.0 || (prod / (w * w)).norm() >= 1.0 {
            return Err(Error::Domain(
                "point lies inside the branch-point radius of the cosine family",
            ));
        }
        let s = (Complex64::new(1.0, 0.0) - prod / (w * w)).sqrt();
        let one_plus = Complex64::new(1.0, 0.0) + s;
        let zeta_plus = w * one_plus / (2.0 * self.a);
        let psi_plus = arg_window(w, self.cut_angle) + one_plus.arg() - (2.0 * self.a).arg();
        Ok((zeta_plus, psi_plus))
    }

    /// The unique `z` in fundamental domain `label` with `f(z) = w`.
    ///
    /// The branch cut runs from the finite singularity in the direction of
    /// the cut ray, so the formula extends continuously inside the disc;
    /// points within tolerance of the cut are rejected as ambiguous.
    pub fn inverse_branch(&self, label: DomainLabel, w: Complex64) -> Result<Complex64> {
        match self.family {
            Family::Exponential => {
                if label.tract != 0 {
                    return Err(Error::Domain("exponential family has a single tract"));
                }
                let u = w - self.a;
                if u.norm() == 0.0 {
                    return Err(Error::BranchPoint);
                }
                if self.ray_distance(u) <= CUT_TOL * u.norm().max(1.0) {
                    return Err(Error::BranchAmbiguity);
                }
                let im = arg_window(u, self.cut_angle) + TAU * label.k as f64;
                Ok(Complex64::new(u.norm().ln(), im))
            }
            Family::Cosine => {
                if self.ray_distance(w) <= CUT_TOL * w.norm().max(1.0) {
                    return Err(Error::BranchAmbiguity);
                }
                let (zeta_plus, psi_plus) = self.cosine_big_root(w)?;
                match label.tract {
                    0 => {
                        let im = psi_plus + TAU * label.k as f64;
                        Ok(Complex64::new(zeta_plus.norm().ln(), im))
                    }
                    1 => {
                        let zeta_minus = self.b / (self.a * zeta_plus);
                        let psi_minus = (self.b / self.a).arg() - psi_plus;
                        let im = psi_minus + TAU * label.k as f64;
                        Ok(Complex64::new(zeta_minus.norm().ln(), im))
                    }
                    _ => Err(Error::Domain("cosine family has two tracts")),
                }
            }
        }
    }

    /// Label of the fundamental domain containing `z`; requires `f(z)` in `W0`.
    pub fn fundamental_domain_of(&self, z: Complex64) -> Result<DomainLabel> {
        if self.family == Family::Exponential && z.re > EXP_SAFE_RE {
            // Image is astronomically large; the label follows from the
            // imaginary part alone.
            let k = ((z.im - self.cut_angle) / TAU).ceil() as i64;
            return Ok(DomainLabel::exp(k));
        }
        let w = self.eval(z)?;
        if !self.in_w0(w) {
            return Err(Error::Precondition(
                "image lies in the closed reference disc or on the cut",
            ));
        }
        match self.family {
            Family::Exponential => {
                let u = w - self.a;
                let psi = arg_window(u, self.cut_angle);
                let kf = (z.im - psi) / TAU;
                let k = kf.round();
                if (kf - k).abs() > 1.0e-8 {
                    return Err(Error::Domain("inconsistent branch data for this point"));
                }
                Ok(DomainLabel::exp(k as i64))
            }
            Family::Cosine => {
                let (zeta_plus, psi_plus) = self.cosine_big_root(w)?;
                let zeta_minus = self.b / (self.a * zeta_plus);
                let ez = z.exp();
                let (tract, psi) = if (ez - zeta_plus).norm() <= (ez - zeta_minus).norm() {
                    (0u8, psi_plus)
                } else {
                    (1u8, (self.b / self.a).arg() - psi_plus)
                };
                let kf = (z.im - psi) / TAU;
                let k = kf.round();
                if (kf - k).abs() > 1.0e-8 {
                    return Err(Error::Domain("inconsistent branch data for this point"));
                }
                Ok(DomainLabel { tract, k: k as i64 })
            }
        }
    }

    /// Relative cylindrical distance inside `W0`: both lifts are taken in the
    /// same sheet of the lifted slit plane and compared euclideanly.
    pub fn cyl_distance_w0(&self, z: Complex64, w: Complex64) -> Result<f64> {
        let lz = CylPoint::canonical(self, z)?;
        let lw = CylPoint::canonical(self, w)?;
        Ok((lz.log_lift - lw.log_lift).norm())
    }

    /// Default base point for pullbacks: opposite the cut at modulus `2R`.
    pub fn base_point(&self) -> Complex64 {
        snap_axes(Complex64::from_polar(
            2.0 * self.disc_radius,
            self.cut_angle + std::f64::consts::PI,
        ))
    }

    /// Base point far enough out that its first pullback still lies in `W0`
    /// (needed when a whole arc must stay in the slit plane).
    pub fn trace_base_point(&self) -> Result<Complex64> {
        let exponent = 1.05 * self.disc_radius + 1.0;
        if exponent > 0.9 * EXP_SAFE_RE {
            return Err(Error::Precondition(
                "disc radius too large for a default trace base; supply one explicitly",
            ));
        }
        Ok(snap_axes(Complex64::from_polar(
            exponent.exp(),
            self.cut_angle + std::f64::consts::PI,
        )))
    }

    /// `f^n(z)` with the orbit returned as `[z, f(z), ..., f^n(z)]`.
    pub fn orbit(&self, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
        let mut pts = Vec::with_capacity(n + 1);
        pts.push(z);
        let mut cur = z;
        for _ in 0..n {
            cur = self.eval(cur)?;
            pts.push(cur);
        }
        Ok(pts)
    }

    pub fn iterate(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let mut cur = z;
        for _ in 0..n {
            cur = self.eval(cur)?;
        }
        Ok(cur)
    }

    /// `(f^p)'(z)` by the chain rule along the orbit of `z`.
    pub fn cycle_multiplier(&self, z: Complex64, p: usize) -> Result<Complex64> {
        let orbit = self.orbit(z, p)?;
        let mut m = Complex64::new(1.0, 0.0);
        for pt in orbit.iter().take(p) {
            m *= self.deriv(*pt)?;
        }
        Ok(m)
    }
}

/// Round components that are pure floating noise onto the axes.
fn snap_axes(z: Complex64) -> Complex64 {
    let m = z.norm();
    Complex64::new(
        if z.re.abs() < 1e-12 * m { 0.0 } else { z.re },
        if z.im.abs() < 1e-12 * m { 0.0 } else { z.im },
    )
}

/// Argument of `u` normalized to `(theta - 2 pi, theta]`.
pub(crate) fn arg_window(u: Complex64, theta: f64) -> f64 {
    theta - (theta - u.arg()).rem_euclid(TAU)
}

/// Argument of `u` normalized to `[theta, theta + 2 pi)`.
pub(crate) fn arg_upper(u: Complex64, theta: f64) -> f64 {
    theta + (u.arg() - theta).rem_euclid(TAU)
}

/// Map description as it appears in config files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapConfig {
    pub family: String,
    pub params: Vec<[f64; 2]>,
    #[serde(default)]
    pub disc_radius: Option<f64>,
    #[serde(default)]
    pub cut_angle: Option<f64>,
    /// Grid resolution per axis for the sampled normalization.
    #[serde(default)]
    pub normalize_samples: Option<usize>,
}

impl MapConfig {
    pub fn build(&self) -> Result<EntireMap> {
        let c = |p: &[f64; 2]| Complex64::new(p[0], p[1]);
        let family = match self.family.as_str() {
            "exp" | "exponential" => Family::Exponential,
            "cos" | "cosine" => Family::Cosine,
            other => return Err(Error::Parse(format!("unknown family '{other}'"))),
        };
        let (a, b) = match family {
            Family::Exponential => {
                if self.params.len() != 1 {
                    return Err(Error::Parse("exponential family takes one parameter".into()));
                }
                (c(&self.params[0]), Complex64::new(0.0, 0.0))
            }
            Family::Cosine => {
                if self.params.len() != 2 {
                    return Err(Error::Parse("cosine family takes two parameters".into()));
                }
                (c(&self.params[0]), c(&self.params[1]))
            }
        };
        let mut map = EntireMap::with_options(family, a, b, self.disc_radius, self.cut_angle)?;
        if self.disc_radius.is_none() {
            map.choose_radius(self.normalize_samples.unwrap_or(161))?;
        }
        Ok(map)
    }
}
