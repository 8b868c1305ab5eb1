//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Criterion 11 (byte-identical CLI reports across runs and thread counts)
//! lives in the CLI crate's own acceptance test, next to the binary it
//! exercises.

use std::collections::BTreeMap;
use std::time::Instant;

use dreadlock::*;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn normalized_exp(a: f64) -> EntireMap {
    let mut m = EntireMap::exponential(c(a, 0.0)).unwrap();
    m.choose_radius(161).unwrap();
    m
}

/// Independent oracle: plain Newton on `e^z - z - 2` (never calls the
/// library's root finders).
fn newton_oracle_exp2(seed: Complex64) -> Complex64 {
    let mut z = seed;
    for _ in 0..128 {
        let g = z.exp() - z - 2.0;
        let dg = z.exp() - 1.0;
        z -= g / dg;
    }
    z
}

#[test]
fn criterion_01_fixed_ray_landing_hyperbolic() {
    let m = normalized_exp(-2.0);
    let opts = LandOptions::default();
    let base = m.base_point();
    let mut points = Vec::new();
    for k in -3..=3i64 {
        let s = ExternalAddress::fixed(DomainLabel::exp(k));
        let t0 = Instant::now();
        let rep = land(&m, &s, base, &opts).unwrap();
        let dt = t0.elapsed();
        assert!(dt.as_secs_f64() < 1.0, "address ({k}) took {dt:?}");
        assert_eq!(rep.status, LandStatus::Landed, "address ({k})");
        assert!(rep.residual.unwrap() <= 1e-8, "address ({k})");
        assert_eq!(rep.classification, Classification::Repelling, "address ({k})");
        points.push(rep.landing_point.unwrap());
    }
    for i in 0..points.len() {
        for j in 0..i {
            assert!((points[i] - points[j]).norm() > 1e-6);
        }
    }
    // oracle cross-check for the k = 0 landing point
    let oracle = newton_oracle_exp2(c(1.0, 0.0));
    assert!((oracle - c(1.1461932206205825, 0.0)).norm() < 1e-12);
    assert!((points[3] - oracle).norm() <= 1e-8);
    println!("ACCEPTANCE 01 PASS: 7 fixed rays land at distinct repelling points, k=0 at {oracle}");
}

#[test]
fn criterion_02_multiplier_identity() {
    let m = normalized_exp(-2.0);
    let window = Window::new(-5.0, 5.0, -8.0, 8.0).unwrap();
    let scan = scan_periodic(&m, 1, window, (40, 40), 1e-11);
    assert!(scan.points.len() >= 4);
    for pt in &scan.points {
        // at a fixed point of e^z - 2 the derivative e^z equals z + 2
        let diff = (pt.multiplier - (pt.point + 2.0)).norm();
        assert!(
            diff <= 1e-8,
            "multiplier identity failed at {}: {diff:.3e}",
            pt.point
        );
    }
    println!(
        "ACCEPTANCE 02 PASS: |multiplier - (z0 + 2)| <= 1e-8 for all {} fixed points",
        scan.points.len()
    );
}

#[test]
fn criterion_03_two_sided_theorem() {
    let m = normalized_exp(-2.0);
    let window = Window::new(-5.0, 5.0, -8.0, 8.0).unwrap();
    for p in [1usize, 2] {
        let params = PortraitParams::new(p, 3, window);
        let report = verify_landing_theorem(&m, &params);
        assert!(
            report.violations.is_empty(),
            "p = {p} violations: {:?}",
            report.violations
        );
        assert!(!report.pairs.is_empty(), "p = {p} produced no matches");
        if p == 1 {
            // the three repelling fixed points inside the window are matched
            let matched: Vec<_> = report.pairs.iter().map(|x| x.point.point).collect();
            for target in [
                c(1.1461932206205825, 0.0),
                c(2.131075457666587, 7.341435092197778),
                c(2.131075457666587, -7.341435092197778),
            ] {
                assert!(
                    matched.iter().any(|z| (z - target).norm() < 1e-6),
                    "fixed point {target} unmatched"
                );
            }
            assert_eq!(report.attracting_points.len(), 1);
        }
    }
    println!("ACCEPTANCE 03 PASS: two-sided check clean for p in {{1,2}}, K = 3");
}

#[test]
fn criterion_04_parabolic_accessibility() {
    let m = normalized_exp(-1.0);
    let opts = LandOptions::slow();
    assert_eq!(opts.n_max, 1_000_000);
    let base = m.base_point();
    let t0 = Instant::now();
    let mut hit = None;
    for k in -2..=2i64 {
        let s = ExternalAddress::fixed(DomainLabel::exp(k));
        let rep = land(&m, &s, base, &opts).unwrap();
        if rep.status == LandStatus::Landed {
            let z = rep.landing_point.unwrap();
            if z.norm() <= 1e-4 {
                assert_eq!(rep.classification, Classification::ParabolicMultiplier1);
                hit = Some((s, z));
                break;
            }
        }
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "parabolic search took {dt:?}");
    let (s, z) = hit.expect("some fixed address lands at the parabolic origin");
    println!(
        "ACCEPTANCE 04 PASS: address {s} lands at {z} (|z| = {:.2e}) in {dt:?}",
        z.norm()
    );
}

#[test]
fn criterion_05_expansion_invariant() {
    let mut m = EntireMap::exponential(c(-2.0, 0.0)).unwrap();
    let radius = m.choose_radius(161).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0usize;
    let mut min_seen = f64::INFINITY;
    let mut draws = 0usize;
    while checked < 10_000 {
        draws += 1;
        assert!(draws < 3_000_000, "sampling window too small");
        let z = c(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let Ok(w) = m.eval(z) else { continue };
        if w.norm() <= radius {
            continue;
        }
        let d = m.cyl_derivative_norm(z).unwrap();
        min_seen = min_seen.min(d);
        assert!(
            d >= 2.0,
            "cylindrical derivative {d} < 2 at {z} (radius {radius})"
        );
        checked += 1;
    }
    println!(
        "ACCEPTANCE 05 PASS: 10^4 sampled points outside D (R = {radius}) all expand; min = {min_seen:.4}"
    );
}

#[test]
fn criterion_06_shift_pullback_commutation() {
    let m = normalized_exp(-2.0);
    let base = m.base_point();
    let mut rng = ChaCha8Rng::seed_from_u64(0xadde);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let pre_len = rng.gen_range(0..=2usize);
        let per_len = rng.gen_range(1..=4usize);
        let pre: Vec<DomainLabel> = (0..pre_len)
            .map(|_| DomainLabel::exp(rng.gen_range(-3..=3)))
            .collect();
        let per: Vec<DomainLabel> = (0..per_len)
            .map(|_| DomainLabel::exp(rng.gen_range(-3..=3)))
            .collect();
        let s = ExternalAddress::new(pre, per).unwrap();
        let shifted = s.shift();
        for n in 1..=25usize {
            let zn = pullback_point(&m, &s, base, n).unwrap();
            let down = pullback_point(&m, &shifted, base, n - 1).unwrap();
            let diff = (m.eval(zn).unwrap() - down).norm();
            worst = worst.max(diff);
            assert!(
                diff <= 1e-9,
                "commutation failed for {s} at depth {n}: {diff:.3e}"
            );
        }
    }
    println!("ACCEPTANCE 06 PASS: shift-pullback commutation over 50 random addresses; worst = {worst:.3e}");
}

#[test]
fn criterion_07_geometric_gap_decay() {
    let m = normalized_exp(-2.0);
    let opts = LandOptions::default();
    let base = m.base_point();
    for k in -3..=3i64 {
        let s = ExternalAddress::fixed(DomainLabel::exp(k));
        let (rep, orbit) = land_with_orbit(&m, &s, base, &opts).unwrap();
        assert_eq!(rep.status, LandStatus::Landed);
        let decay = gap_decay_check(&orbit);
        assert!(
            decay.geometric && decay.rate <= 0.6,
            "address ({k}): rate {}",
            decay.rate
        );
    }
    let parab = normalized_exp(-1.0);
    let (rep, orbit) = land_with_orbit(
        &parab,
        &ExternalAddress::fixed(DomainLabel::exp(0)),
        parab.base_point(),
        &LandOptions::slow(),
    )
    .unwrap();
    assert_eq!(rep.status, LandStatus::Landed);
    let decay = gap_decay_check(&orbit);
    assert!(!decay.geometric, "parabolic decay misread as geometric");
    println!(
        "ACCEPTANCE 07 PASS: hyperbolic fixtures decay geometrically; parabolic rate = {:.4}",
        decay.rate
    );
}

#[test]
fn criterion_08_candidate_tree_vs_brute_force() {
    let m = normalized_exp(-2.0);
    let opts = LandOptions::default();
    let real = newton_periodic(&m, 1, c(1.0, 0.0), 1e-12, 64).unwrap();
    let upper = newton_periodic(&m, 1, c(2.0, 6.8), 1e-12, 64).unwrap();
    for (name, pt) in [("real", real), ("upper", upper)] {
        let tree = candidate_tree(&m, &pt, 2, 2.5, None, 12, None).unwrap();
        assert!(tree.prefix_invariant_holds(), "{name}: prefix invariant");
        assert_eq!(tree.levels.len(), 12);
        let extracted = tree.extract_periodic(1);
        let brute = rays_to_point(&m, &pt, 1, 2, m.base_point(), &opts, 1e-7);
        assert_eq!(
            extracted, brute.addresses,
            "{name}: tree vs brute force mismatch"
        );
        assert_eq!(extracted.len(), 1);
    }
    println!("ACCEPTANCE 08 PASS: candidate trees at depth 12 extract exactly the brute-force addresses");
}

#[test]
fn criterion_09_uniform_landing() {
    let m = normalized_exp(-2.0);
    let real = newton_periodic(&m, 1, c(1.0, 0.0), 1e-12, 64).unwrap();
    let upper = newton_periodic(&m, 1, c(2.0, 6.8), 1e-12, 64).unwrap();
    let set = build_hyperbolic_set(&m, &[real, upper], 1).unwrap();
    let addrs: Vec<ExternalAddress> = vec!["(0)".parse().unwrap(), "(1)".parse().unwrap()];
    let report =
        uniform_landing_check(&m, &set, &addrs, m.base_point(), 1e-3, 60, 10).unwrap();
    let n0 = report.n0.expect("finite n0");
    assert!(n0 <= 60, "n0 = {n0}");
    // distances non-increasing after n0 up to 10 % jitter (with an absolute
    // floor once the sequence reaches rounding level)
    for curve in &report.distances {
        for n in n0..curve.len() {
            assert!(
                curve[n] <= 1.1 * curve[n - 1] + 1e-12,
                "jitter bound violated at depth {}: {} -> {}",
                n,
                curve[n - 1],
                curve[n]
            );
        }
    }
    println!("ACCEPTANCE 09 PASS: uniform landing with eps = 1e-3 at n0 = {n0}");
}

#[test]
fn criterion_10_cyclic_order_preserved() {
    let m = normalized_exp(-2.0);
    let window = Window::new(-5.0, 5.0, -8.0, 8.0).unwrap();
    let params = PortraitParams::new(2, 3, window);
    let report = verify_landing_theorem(&m, &params);
    assert!(report.violations.is_empty());
    let mut by_head: BTreeMap<DomainLabel, Vec<ExternalAddress>> = BTreeMap::new();
    for pair in &report.pairs {
        by_head
            .entry(pair.address.entry(0))
            .or_default()
            .push(pair.address.clone());
    }
    let mut triples = 0usize;
    for group in by_head.values() {
        if group.len() < 3 {
            continue;
        }
        for i in 0..group.len() {
            for j in 0..group.len() {
                for k in 0..group.len() {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let (a, b, cc) = (&group[i], &group[j], &group[k]);
                    assert_eq!(
                        cyclic_between(a, b, cc),
                        cyclic_between(&a.shift(), &b.shift(), &cc.shift()),
                        "cyclic order changed under shift for {a}, {b}, {cc}"
                    );
                    triples += 1;
                }
            }
        }
    }
    assert!(triples > 0, "no same-head triples among matched addresses");
    println!("ACCEPTANCE 10 PASS: cyclic order preserved under the shift on {triples} matched triples");
}
