//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use qsl::apcheck::{almost_periods, density, translation_bound};
use qsl::cfourier::TestFunction;
use qsl::presets;
use qsl::reconstruct::{from_atoms, verify_roundtrip};
use qsl::spectral::{atoms, verify_der, verify_duality, AtomMeasure};
use qsl::strip_zeros::{count_zeros, enumerate, find_zeros, strip_bound, Rect, ZeroSet};
use qsl::wiener::ExpSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect {
    Rect::new(a, b, c, d).expect("valid rectangle")
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: qsl::Error) -> String {
    e.to_string()
}

fn bumps() -> Vec<TestFunction> {
    [0.4, 1.3, 2.7].iter().map(|&h| TestFunction::standard_bump(0.0, h).expect("bump")).collect()
}

/// Largest `|b_k − want(k)|` over integers `|k| ≤ 10`, and whether any
/// non-integer atom sits in `[−10, 10]`.
fn integer_atom_error(a: &AtomMeasure, want: impl Fn(i32) -> f64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for k in -10..=10 {
        let b = a.b_at(k as f64, 1e-9).ok_or(format!("no atom at {k}"))?;
        worst = worst.max((b - want(k)).norm());
    }
    if let Some(e) = a.entries.iter().find(|e| e.gamma.abs() <= 10.0 && (e.gamma - e.gamma.round()).abs() > 1e-9) {
        return Err(format!("stray atom at {} with b = {}", e.gamma, e.b));
    }
    Ok(worst)
}

fn criterion_1() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let z = pool.install(|| find_zeros(&presets::sine(), &rect(-20.5, 20.5, -1.0, 1.0), 1e-12)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    check(z.points.len() == 41, format!("{} zeros", z.points.len()))?;
    let mut worst: f64 = 0.0;
    for (p, k) in z.points.iter().zip(-20..=20) {
        check(p.multiplicity == 1, format!("multiplicity {} at {}", p.multiplicity, p.location))?;
        worst = worst.max((p.location - c(k as f64, 0.0)).norm());
    }
    check(worst < 1e-9, format!("max location error {worst:e}"))?;
    check(secs < 30.0, format!("took {secs:.2} s"))?;
    Ok(format!("41 simple zeros, max error {worst:.2e}, {secs:.3} s on one thread"))
}

fn duality_for(q: &ExpSum, a: &AtomMeasure, window: f64, tol: f64) -> Result<f64, String> {
    let h = strip_bound(q).map_err(err)?.half_width;
    let zeros = find_zeros(q, &rect(-window, window, -h - 0.5, h + 0.5), 1e-12).map_err(err)?;
    let mut worst: f64 = 0.0;
    for phi in bumps() {
        let r = verify_duality(&zeros, a, &phi, tol).map_err(err)?;
        worst = worst.max(r.rel_error);
    }
    Ok(worst)
}

fn criterion_2() -> Outcome {
    let q = presets::sine();
    let a = atoms(&q, 1e-10).map_err(err)?;
    let b_err = integer_atom_error(&a, |_| 1.0)?;
    check(b_err < 1e-8, format!("max |b_k - 1| = {b_err:e}"))?;
    let dual = duality_for(&q, &a, 300.5, 1e-8)?;
    check(dual < 1e-6, format!("duality rel_error {dual:e}"))?;
    Ok(format!("max |b_k - 1| = {b_err:.2e}, duality rel_error {dual:.2e} (zeros |x| < 300.5, tail tol 1e-8)"))
}

fn criterion_3() -> Outcome {
    let q = presets::cosine();
    let a = atoms(&q, 1e-10).map_err(err)?;
    let b_err = integer_atom_error(&a, |k| if k % 2 == 0 { 1.0 } else { -1.0 })?;
    check(b_err < 1e-8, format!("max |b_k - (-1)^k| = {b_err:e}"))?;
    let dual = duality_for(&q, &a, 300.0, 1e-8)?;
    check(dual < 1e-6, format!("duality rel_error {dual:e}"))?;
    let b0 = a.b0();
    check(b0 == 1.0, format!("b_0 = {b0}"))?;
    let z = enumerate(&find_zeros(&q, &rect(-100.0, 100.0, -1.0, 1.0), 1e-12).map_err(err)?).map_err(err)?;
    let d = density(&z, &[20.0, 40.0, 60.0, 80.0, 99.0]).map_err(err)?.density;
    check((d - b0).abs() < 0.01 * b0, format!("density {d} vs b_0 {b0}"))?;
    Ok(format!("max |b_k - (-1)^k| = {b_err:.2e}, duality rel_error {dual:.2e}, density {d:.6} vs b_0 = 1"))
}

fn criterion_4() -> Outcome {
    let q = presets::cos3();
    let y0 = 1.5f64.acosh() / (2.0 * PI);
    let z = find_zeros(&q, &rect(-5.0, 6.0, -1.0, 1.0), 1e-12).map_err(err)?;
    check(z.points.len() == 22, format!("{} zeros in (-5, 6)", z.points.len()))?;
    let mut worst: f64 = 0.0;
    for p in &z.points {
        let x = p.location.re;
        check((x - x.floor() - 0.5).abs() < 1e-9, format!("zero at {}", p.location))?;
        worst = worst.max((p.location.im.abs() - y0).abs());
    }
    check(worst < 1e-9, format!("max |Im a| - y0 error {worst:e}"))?;
    let a = atoms(&q, 1e-10).map_err(err)?;
    check(a.b0() == 2.0, format!("b_0 = {}", a.b0()))?;
    let wide = enumerate(&find_zeros(&q, &rect(-100.0, 101.0, -1.0, 1.0), 1e-12).map_err(err)?).map_err(err)?;
    let d = density(&wide, &[20.0, 40.0, 60.0, 80.0, 99.0]).map_err(err)?.density;
    check((d - 2.0).abs() < 0.02, format!("density {d}"))?;
    Ok(format!("|y0 error| {worst:.2e} (y0 = {y0:.9}), b_0 = 2, density {d:.6}"))
}

fn criterion_5() -> Outcome {
    let q = presets::cosine();
    let z = find_zeros(&q, &rect(-10001.0, 10001.0, -1.0, 1.0), 1e-12).map_err(err)?;
    let z = enumerate(&z).map_err(err)?;
    let a = atoms(&q, 1e-10).map_err(err)?;
    let samples: Vec<Complex64> = (0..20).map(|j| c(-2.0 + 4.0 * j as f64 / 19.0, 1.0)).collect();
    let r = verify_der(&z, &a, &samples, 1e-6).map_err(err)?;
    check(r.extent >= 10_000, format!("window extent {}", r.extent))?;
    check(r.max_rel_error < 1e-5, format!("max rel error {:e}", r.max_rel_error))?;
    Ok(format!(
        "|n| <= {}, 20 points on Im = 1, max rel error {:.2e} (window error estimate {:.1e})",
        r.extent, r.max_rel_error, r.window_error
    ))
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    for (name, q, r) in [
        ("cos", presets::cosine(), rect(-3.0, 3.0, -1.0, 1.0)),
        ("cos3", presets::cos3(), rect(-3.0, 3.0, -1.0, 1.0)),
    ] {
        let a = atoms(&q, 1e-10).map_err(err)?;
        let rec = from_atoms(&a, None, 1e-10).map_err(err)?;
        let report = verify_roundtrip(&q, &rec, &r).map_err(err)?;
        check(report.zero_distance < 1e-6, format!("{name}: zero distance {:e}", report.zero_distance))?;
        check(report.ratio_deviation < 1e-5, format!("{name}: ratio deviation {:e}", report.ratio_deviation))?;
        let big = rec.series.terms().iter().filter(|t| t.coef.norm() > 1e-9).count();
        check(big <= 25, format!("{name}: {big} coefficients above 1e-9"))?;
        lines.push(format!(
            "{name}: {} zeros within {:.1e}, ratio deviation {:.1e}, {big} coefficients",
            report.zero_count, report.zero_distance, report.ratio_deviation
        ));
    }
    Ok(lines.join("; "))
}

fn random_sum(rng: &mut ChaCha8Rng, grid: Option<f64>) -> ExpSum {
    let n = rng.gen_range(1..=8);
    ExpSum::new((0..n).map(|_| {
        let f = match grid {
            Some(step) => (rng.gen_range(-2.0..=2.0f64) / step).round() * step,
            None => rng.gen_range(-2.0..=2.0),
        };
        (f, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tail_tol = 1e-10;
    let mut worst_round_trip: f64 = 0.0;
    for i in 0..1000 {
        let p = random_sum(&mut rng, None);
        let q = random_sum(&mut rng, None);
        let pq = p.mul(&q).map_err(err)?;
        check(pq.norm() <= p.norm() * q.norm() * (1.0 + 1e-12), format!("pair {i}: norm not submultiplicative"))?;
        for t in pq.terms() {
            let hit = p
                .terms()
                .iter()
                .any(|a| q.terms().iter().any(|b| (a.freq + b.freq - t.freq).abs() <= 64.0 * pq.merge_tol()));
            check(hit, format!("pair {i}: frequency {} outside the sumset", t.freq))?;
        }
        // exp(log(1 + P)) = 1 + P, on half-integer frequencies to keep sumsets small
        let g = random_sum(&mut rng, Some(0.5));
        let g = g.scale(c(0.5 / g.norm(), 0.0));
        let back = g.log1p(tail_tol).map_err(err)?.exp(tail_tol).map_err(err)?;
        let diff = back.sub(&g.add(&ExpSum::constant(c(1.0, 0.0)))).norm();
        worst_round_trip = worst_round_trip.max(diff);
        check(diff <= 10.0 * tail_tol, format!("pair {i}: exp(log(1+P)) off by {diff:e}"))?;
    }
    let presets = [presets::sine(), presets::cos3(), presets::threefreq()];
    let mut splits = 0;
    let mut attempts = 0;
    while splits < 50 {
        attempts += 1;
        if attempts > 500 {
            return Err(format!("only {splits} usable random splits"));
        }
        let q = &presets[splits % 3];
        let x0 = rng.gen_range(-10.0..5.0);
        let x1 = x0 + rng.gen_range(1.0..8.0);
        let (y0, y1) = (-rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5));
        let whole = rect(x0, x1, y0, y1);
        let (a, b) = if rng.gen_bool(0.5) {
            whole.split_at_x(rng.gen_range(x0..x1))
        } else {
            whole.split_at_y(rng.gen_range(y0..y1))
        };
        match (count_zeros(q, &whole), count_zeros(q, &a), count_zeros(q, &b)) {
            (Ok(n), Ok(na), Ok(nb)) => {
                check(n == na + nb, format!("split {splits}: {n} != {na} + {nb} on {whole:?}"))?;
                splits += 1;
            }
            // a zero on a random contour: draw again
            _ => continue,
        }
    }
    Ok(format!(
        "1000 pairs: submultiplicative, sumset-contained, exp(log) error <= {worst_round_trip:.1e}; 50 additive splits ({attempts} draws)"
    ))
}

fn criterion_8() -> Outcome {
    let q = presets::threefreq();
    let h = strip_bound(&q).map_err(err)?.half_width;
    let a = atoms(&q, 1e-10).map_err(err)?;
    let near = find_zeros(&q, &rect(-300.0, 300.0, -h - 0.5, h + 0.5), 1e-12).map_err(err)?;
    let mut worst: f64 = 0.0;
    for phi in bumps() {
        worst = worst.max(verify_duality(&near, &a, &phi, 1e-5).map_err(err)?.rel_error);
    }
    check(worst < 1e-4, format!("duality rel_error {worst:e}"))?;
    let wide: ZeroSet = find_zeros(&q, &rect(-0.3, 2600.3, -h - 0.5, h + 0.5), 1e-12).map_err(err)?;
    let eps = 0.05;
    let grid: Vec<f64> = (0..=(500.0 / (eps / 4.0)) as usize).map(|k| k as f64 * eps / 4.0).collect();
    let ap = almost_periods(&wide, eps, &grid).map_err(err)?;
    check(ap.periods.len() > 1, format!("{} accepted shifts", ap.periods.len()))?;
    let gap = ap.max_gap.ok_or("no accepted shift")?;
    check(gap.is_finite(), "infinite gap")?;
    let tb = translation_bound(&wide);
    check(tb > 0 && tb < 10, format!("translation bound {tb}"))?;
    Ok(format!(
        "duality rel_error {worst:.2e} (zeros |x| < 300, tail tol 1e-5); {} eps-periods in [0, 500], max gap {gap:.3}; translation bound {tb}",
        ap.periods.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 sine lattice zeros", criterion_1),
        ("2 sine atoms and Poisson duality", criterion_2),
        ("3 cosine atoms, duality and density", criterion_3),
        ("4 off-axis zeros of 2cos(2pi z)+3", criterion_4),
        ("5 logarithmic derivative identity", criterion_5),
        ("6 reconstruction round trip", criterion_6),
        ("7 Wiener algebra and zero counter properties", criterion_7),
        ("8 incommensurable three-frequency case", criterion_8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail}) [{secs:.2} s]");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
