//! Acceptance suite: one line per criterion and a summary naming any
//! failures. Exits non-zero on failure only with `CALSCAN_ACCEPT_STRICT=1`.
//!
//! Set `CALSCAN_ACCEPT_TRAIN` / `CALSCAN_ACCEPT_TEST` to shrink the
//! end-to-end benchmark for quick local runs; the reported verdicts always
//! refer to the configured sizes.

use std::f64::consts::PI;
use std::time::Instant;

use calscan::angles::{bohler_angle, gissane_angle, signed_angle};
use calscan::descriptor::{extract_descriptor, Descriptor, PatchSpec};
use calscan::evaluate::{evaluate_cases, CaseResult, EvalCase};
use calscan::formats::model::{deserialize_model, serialize_model};
use calscan::imaging::{rotate_image, GrayImage, Point2, Similarity2, Vec2};
use calscan::metrics::{iou, mre_sd, prf1, sdr, ConfusionCounts, Mask};
use calscan::rirv::{
    denormalize_displacement, detect_landmarks, hpdv_filter, kde_vote, normalize_displacement, Candidate, LandmarkSet,
    SampleCollector, TrainConfig, VoteSet,
};
use calscan::svr::{kernel, svr_train, SvrHyper, SvrModel};
use calscan::synth::{generate_indexed, SynthParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(bool, String, String)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, name.to_string(), detail));
    }
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    round_trip(&mut report);
    angle_examples(&mut report);
    angle_invariance(&mut report);
    metrics_oracles(&mut report);
    descriptor_rotation(&mut report);
    svr_sanity(&mut report);
    hpdv_kde_fixtures(&mut report);
    end_to_end(&mut report);

    let failed = report.lines.iter().filter(|l| !l.0).count();
    println!(
        "\n{} of {} acceptance checks passed",
        report.lines.len() - failed,
        report.lines.len()
    );
    for (_, name, _) in report.lines.iter().filter(|l| !l.0) {
        println!("FAILED: {name}");
    }
    if failed > 0 && std::env::var("CALSCAN_ACCEPT_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

fn round_trip(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let d = Vec2::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
        let theta = rng.gen_range(-PI..PI);
        let s = rng.gen_range(1.0..100.0);
        let back = denormalize_displacement(normalize_displacement(d, theta, s).unwrap(), theta, s).unwrap();
        worst = worst.max((back - d).norm());
    }
    let secs = started.elapsed().as_secs_f64();
    report.record(
        "normalize/denormalize round trip",
        worst < 1e-9 && secs < 1.0,
        format!("max error {worst:.2e} px over 1e4 triples in {:.1} ms", secs * 1e3),
    );
}

fn lm(p: [(f64, f64); 4]) -> LandmarkSet {
    LandmarkSet(p.map(|(x, y)| Point2::new(x, y)))
}

fn angle_examples(report: &mut Report) {
    let v = |x, y| Vec2::new(x, y);
    let far = Point2::new(1e3, 1e3);
    let checks: Vec<(&str, f64, f64)> = vec![
        (
            "signed (1,0),(1,0)",
            signed_angle(v(1.0, 0.0), v(1.0, 0.0)).unwrap(),
            0.0,
        ),
        (
            "signed (1,0),(0,1)",
            signed_angle(v(1.0, 0.0), v(0.0, 1.0)).unwrap(),
            90.0,
        ),
        (
            "signed (1,0),(-1,1)",
            signed_angle(v(1.0, 0.0), v(-1.0, 1.0)).unwrap(),
            135.0,
        ),
        (
            "BA collinear",
            bohler_angle(&lm([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (5.0, 5.0)])).unwrap(),
            0.0,
        ),
        (
            "BA right angle",
            bohler_angle(&lm([(20.0, 10.0), (10.0, 0.0), (0.0, 10.0), (5.0, 5.0)])).unwrap(),
            90.0,
        ),
        (
            "BA depressed",
            bohler_angle(&lm([(20.0, 0.0), (10.0, 5.0), (0.0, 0.0), (5.0, 5.0)])).unwrap(),
            -(100.0f64).atan2(75.0).to_degrees(),
        ),
        (
            "CAG orthogonal",
            gissane_angle(&LandmarkSet([
                far,
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 0.0),
            ]))
            .unwrap(),
            90.0,
        ),
        (
            "CAG opposite",
            gissane_angle(&LandmarkSet([
                far,
                Point2::new(1.0, 0.0),
                Point2::new(-1.0, 0.0),
                Point2::new(0.0, 0.0),
            ]))
            .unwrap(),
            180.0,
        ),
        (
            "CAG 45",
            gissane_angle(&LandmarkSet([
                far,
                Point2::new(2.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 0.0),
            ]))
            .unwrap(),
            45.0,
        ),
    ];
    let worst = checks
        .iter()
        .map(|(_, got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    let bad: Vec<&str> = checks
        .iter()
        .filter(|(_, g, w)| (g - w).abs() > 1e-9)
        .map(|c| c.0)
        .collect();
    report.record(
        "angle examples",
        bad.is_empty(),
        format!(
            "{} examples, max deviation {worst:.1e} deg{}",
            checks.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!(", off: {bad:?}")
            }
        ),
    );
}

fn angle_invariance(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 1000 {
        let set = LandmarkSet([0; 4].map(|_| Point2::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0))));
        let (Ok(ba), Ok(cag)) = (bohler_angle(&set), gissane_angle(&set)) else {
            continue;
        };
        let t = Similarity2::new(
            rng.gen_range(-PI..PI),
            rng.gen_range(0.2..5.0),
            Vec2::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3)),
        );
        let moved = set.transformed(&t);
        worst = worst
            .max((bohler_angle(&moved).unwrap() - ba).abs())
            .max((gissane_angle(&moved).unwrap() - cag).abs());
        done += 1;
    }
    report.record(
        "angle similarity invariance",
        worst < 1e-6,
        format!("max change {worst:.2e} deg over 1e3 random similarities"),
    );
}

fn metrics_oracles(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut mismatched_none = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..60);
        let errors: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..12.0)).collect();

        // Two-pass moments from explicit sums.
        let mut total = 0.0;
        for e in &errors {
            total += e;
        }
        let mean = total / n as f64;
        let mut sq = 0.0;
        for e in &errors {
            sq += (e - mean) * (e - mean);
        }
        let (m, s) = mre_sd(&errors).unwrap();
        worst = worst.max((m - mean).abs()).max((s - (sq / n as f64).sqrt()).abs());
        for p in [2.0, 2.5, 4.0, 6.0] {
            let mut hits = 0;
            for e in &errors {
                if *e < p {
                    hits += 1;
                }
            }
            worst = worst.max((sdr(&errors, p).unwrap() - 100.0 * hits as f64 / n as f64).abs());
        }

        let pred: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for (p, t) in pred.iter().zip(&truth) {
            match (p, t) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                _ => {}
            }
        }
        let got = prf1(ConfusionCounts::from_labels(&pred, &truth).unwrap());
        let want_f1 = if tp + fp + fneg == 0.0 || tp + fp == 0.0 || tp + fneg == 0.0 {
            None
        } else {
            Some(2.0 * tp / (2.0 * tp + fp + fneg))
        };
        match (got.f1, want_f1) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            _ => mismatched_none += 1,
        }
        if let (Some(r), true) = (got.recall, tp + fneg > 0.0) {
            worst = worst.max((r - tp / (tp + fneg)).abs());
        }
        if let (Some(p), true) = (got.precision, tp + fp > 0.0) {
            worst = worst.max((p - tp / (tp + fp)).abs());
        }

        let (w, h) = (rng.gen_range(1..24), rng.gen_range(1..24));
        let density = rng.gen_range(0.0..0.6);
        let mut a = Mask::empty(w, h);
        let mut b = Mask::empty(w, h);
        let (mut inter, mut union) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let (pa, pb) = (rng.gen_bool(density), rng.gen_bool(density));
                a.set(x, y, pa);
                b.set(x, y, pb);
                inter += (pa && pb) as u8 as f64;
                union += (pa || pb) as u8 as f64;
            }
        }
        let want = if union == 0.0 { 1.0 } else { inter / union };
        worst = worst.max((iou(&a, &b).unwrap().value - want).abs());
    }
    report.record(
        "metrics oracle equivalence",
        worst <= 1e-12 && mismatched_none == 0,
        format!("MRE/SD/SDR/recall/precision/F1/IoU max deviation {worst:.1e} on 1e3 instances, {mismatched_none} undefined-F1 mismatches"),
    );
}

fn descriptor_rotation(report: &mut Report) {
    let params = SynthParams {
        seed: 91,
        ..SynthParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let images: Vec<GrayImage> = (0..10).map(|i| generate_indexed(&params, i).unwrap().image).collect();
    let mut distances = Vec::with_capacity(100);
    for trial in 0..100 {
        let img = &images[trial / 10];
        let center = Point2::new(img.width() as f64 / 2.0, img.height() as f64 / 2.0);
        let alpha = rng.gen_range(-PI..PI);
        let r = rng.gen_range(0.0..150.0);
        let phi = rng.gen_range(-PI..PI);
        let c = Point2::new(center.x + r * phi.cos(), center.y + r * phi.sin());
        let s = rng.gen_range(16.0..48.0);
        let theta = rng.gen_range(-PI..PI);
        let rotated = rotate_image(img, alpha, center);
        let c_rot = Similarity2::about(center, alpha, 1.0).apply(c);
        let a = extract_descriptor(img, &PatchSpec::new(c, s, theta));
        let b = extract_descriptor(&rotated, &PatchSpec::new(c_rot, s, theta + alpha));
        distances.push(a.distance(&b));
    }
    distances.sort_by(f64::total_cmp);
    let median = 0.5 * (distances[49] + distances[50]);
    let flat = GrayImage::filled(120, 120, 131);
    let zero = extract_descriptor(&flat, &PatchSpec::new(Point2::new(60.0, 60.0), 40.0, 1.1));
    report.record(
        "descriptor rotation covariance",
        median < 0.25 && zero.is_zero(),
        format!(
            "median L2 distance {median:.3} over 100 rotated synthetic patches; constant patch zero: {}",
            zero.is_zero()
        ),
    );
}

/// Reference ε-SVR dual solve: accelerated projected gradient over
/// `0 ≤ α, α* ≤ C`, `Σ(α − α*) = 0`.
fn reference_svr(features: &[Descriptor], targets: &[f64], h: &SvrHyper) -> (Vec<f64>, f64) {
    let n = features.len();
    let k: Vec<Vec<f64>> = features
        .iter()
        .map(|a| features.iter().map(|b| kernel(h.gamma, a, b)).collect())
        .collect();
    let lipschitz = 2.0
        * (0..n)
            .map(|i| k[i].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let project = |u: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let balance = |lam: f64| -> f64 {
            (0..n)
                .map(|i| (u[i] - lam).clamp(0.0, h.c) - (v[i] + lam).clamp(0.0, h.c))
                .sum()
        };
        let (mut lo, mut hi) = (-2.0 * h.c - 1e3, 2.0 * h.c + 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if balance(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lam = 0.5 * (lo + hi);
        (
            (0..n).map(|i| (u[i] - lam).clamp(0.0, h.c)).collect(),
            (0..n).map(|i| (v[i] + lam).clamp(0.0, h.c)).collect(),
        )
    };
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let (mut ya, mut yb) = (a.clone(), b.clone());
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let beta: Vec<f64> = (0..n).map(|i| ya[i] - yb[i]).collect();
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
        let ga: Vec<f64> = (0..n).map(|i| kb[i] + h.epsilon - targets[i]).collect();
        let gb: Vec<f64> = (0..n).map(|i| -kb[i] + h.epsilon + targets[i]).collect();
        let (na, nb) = project(
            &(0..n).map(|i| ya[i] - step * ga[i]).collect::<Vec<_>>(),
            &(0..n).map(|i| yb[i] - step * gb[i]).collect::<Vec<_>>(),
        );
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let m = (t - 1.0) / t_next;
        ya = (0..n).map(|i| na[i] + m * (na[i] - a[i])).collect();
        yb = (0..n).map(|i| nb[i] + m * (nb[i] - b[i])).collect();
        a = na;
        b = nb;
        t = t_next;
    }
    let beta: Vec<f64> = (0..n).map(|i| a[i] - b[i]).collect();
    let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
    let margin = 1e-6 * h.c;
    let mut offsets = Vec::new();
    for i in 0..n {
        if a[i] > margin && a[i] < h.c - margin {
            offsets.push(targets[i] - h.epsilon - kb[i]);
        }
        if b[i] > margin && b[i] < h.c - margin {
            offsets.push(targets[i] + h.epsilon - kb[i]);
        }
    }
    let bias = if offsets.is_empty() {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let r = targets[i] - kb[i];
            lo = lo.max(r - h.epsilon);
            hi = hi.min(r + h.epsilon);
        }
        0.5 * (lo + hi)
    } else {
        offsets.iter().sum::<f64>() / offsets.len() as f64
    };
    (kb.iter().map(|v| v + bias).collect(), bias)
}

fn unit_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    let mut v = [0.0f32; 128];
    for x in v.iter_mut() {
        *x = rng.gen::<f32>().powi(3);
    }
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Descriptor(v)
}

fn svr_sanity(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = SvrHyper::default();
    let mut details = Vec::new();
    let mut pass = true;
    type Target = Box<dyn Fn(&Descriptor) -> f64>;
    let fixtures: Vec<(&str, usize, Target)> = vec![
        ("constant", 30, Box::new(|_| 5.0)),
        ("smooth", 50, Box::new(|f| 3.0 * (25.0 * f.0[0] as f64).sin() + 2.0)),
    ];
    for (name, n, f) in fixtures {
        let features: Vec<Descriptor> = (0..n).map(|_| unit_descriptor(&mut rng)).collect();
        let targets: Vec<f64> = features.iter().map(&f).collect();
        let model: SvrModel = svr_train(&features, &targets, h, 9).unwrap();
        let (reference, _) = reference_svr(&features, &targets, &h);
        let fit_mae = features
            .iter()
            .zip(&targets)
            .map(|(x, t)| (model.predict(x) - t).abs())
            .sum::<f64>()
            / n as f64;
        let ref_mae = reference.iter().zip(&targets).map(|(r, t)| (r - t).abs()).sum::<f64>() / n as f64;
        let agree = features
            .iter()
            .zip(&reference)
            .map(|(x, r)| (model.predict(x) - r).abs())
            .sum::<f64>()
            / n as f64;
        let ok = fit_mae <= h.epsilon + 0.1 && agree <= 0.1;
        pass &= ok;
        details.push(format!(
            "{name}: train MAE {fit_mae:.3} (reference {ref_mae:.3}), SMO vs reference MAE {agree:.4}"
        ));
    }
    report.record("SVR sanity vs reference QP", pass, details.join("; "));
}

fn brute_density_argmax(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (mx, my) = (
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let mut var = 0.0;
    for p in points {
        var += (p.x - mx).powi(2) + (p.y - my).powi(2);
    }
    let h = if points.len() < 2 {
        1.0
    } else {
        ((var / (2.0 * n)).sqrt() * n.powf(-1.0 / 6.0)).max(1.0)
    };
    let mut best = (f64::NEG_INFINITY, points[0]);
    for p in points {
        let mut d = 0.0;
        for q in points {
            d += (-(p.distance(*q).powi(2)) / (2.0 * h * h)).exp();
        }
        let better = d > best.0 || (d == best.0 && (p.x, p.y) < (best.1.x, best.1.y));
        if better {
            best = (d, *p);
        }
    }
    best.1
}

fn hpdv_kde_fixtures(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut filter_ok = true;
    // The documented 10-candidate fixture plus random sets with boundary ties.
    let documented = VoteSet::new(
        (0..10)
            .map(|k| Candidate::with_half(Point2::new(50.0, 50.0), Point2::new(50.0 + 5.0 * k as f64, 50.0)))
            .collect(),
    );
    filter_ok &= hpdv_filter(&documented, 30.0).valid_count() == 6;
    for _ in 0..500 {
        let th = [10.0, 30.0, 60.0, 100.0][rng.gen_range(0..4)];
        let cands: Vec<Candidate> = (0..rng.gen_range(1..80))
            .map(|_| {
                let c = Point2::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0));
                let d = if rng.gen_bool(0.2) {
                    th
                } else {
                    rng.gen_range(0.0..2.0 * th)
                };
                let a = rng.gen_range(-PI..PI);
                // Exact axis-aligned offsets keep boundary distances exact.
                let half = if rng.gen_bool(0.5) {
                    Point2::new(c.x + d, c.y)
                } else {
                    Point2::new(c.x + d * a.cos(), c.y + d * a.sin())
                };
                Candidate::with_half(c, half)
            })
            .collect();
        let want = cands
            .iter()
            .filter(|c| c.half.unwrap().distance(c.position) < th)
            .count();
        let got = hpdv_filter(&VoteSet::new(cands), th);
        filter_ok &= got.valid_count() == want;
    }

    let mut kde_ok = true;
    let single = VoteSet::new(vec![Candidate::single(Point2::new(10.0, 10.0)); 5]);
    kde_ok &= kde_vote(&single) == Some(Point2::new(10.0, 10.0));
    let mut cluster: Vec<Candidate> = (0..9)
        .map(|k| Candidate::single(Point2::new((k % 3) as f64 - 1.0, (k / 3) as f64 - 1.0)))
        .collect();
    cluster.push(Candidate::single(Point2::new(100.0, 100.0)));
    kde_ok &= kde_vote(&VoteSet::new(cluster)).is_some_and(|p| p.distance(Point2::new(0.0, 0.0)) <= 2.0);
    for _ in 0..300 {
        let k = rng.gen_range(1..60);
        let pts: Vec<Point2> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Point2::new(200.0 + rng.gen_range(-15.0..15.0), 120.0 + rng.gen_range(-15.0..15.0))
                } else {
                    Point2::new(rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0))
                }
            })
            .collect();
        let mut shuffled = pts.clone();
        shuffled.reverse();
        let got = kde_vote(&VoteSet::new(shuffled.into_iter().map(Candidate::single).collect()));
        kde_ok &= got == Some(brute_density_argmax(&pts));
    }
    report.record(
        "HPDV filter and KDE vote fixtures",
        filter_ok && kde_ok,
        format!("strict-inequality filter agreement: {filter_ok}; brute-force density argmax agreement: {kde_ok}"),
    );
}

fn env_count(name: &str, default: usize) -> usize {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn mean_error(r: &CaseResult) -> f64 {
    r.errors_px.iter().sum::<f64>() / 4.0
}

fn end_to_end(report: &mut Report) {
    let n_train = env_count("CALSCAN_ACCEPT_TRAIN", 200);
    let n_test = env_count("CALSCAN_ACCEPT_TEST", 50);
    let params = SynthParams {
        seed: 2024,
        ..SynthParams::default()
    };

    let started = Instant::now();
    let mut collector = SampleCollector::new(TrainConfig {
        seed: 17,
        ..TrainConfig::default()
    })
    .unwrap();
    for i in 0..n_train {
        let case = generate_indexed(&params, i).unwrap();
        collector
            .add(&format!("train {i}"), &case.image, &case.landmarks)
            .unwrap();
    }
    let model = collector.finish().unwrap();
    let train_secs = started.elapsed().as_secs_f64();

    let cases: Vec<EvalCase> = (0..n_test)
        .map(|i| {
            let case = generate_indexed(&params, 1_000_000 + i).unwrap();
            EvalCase {
                name: format!("test {i}"),
                image: case.image,
                truth: case.landmarks,
            }
        })
        .collect();
    let plain = evaluate_cases(&model, &cases, false, 5).unwrap();
    let rotated = evaluate_cases(&model, &cases, true, 5).unwrap();
    let mre = |rs: &[CaseResult]| rs.iter().map(mean_error).sum::<f64>() / rs.len() as f64;
    let (mre_plain, mre_rot) = (mre(&plain), mre(&rotated));
    let ratio = mre_rot / mre_plain;
    let detect_secs = plain.iter().chain(&rotated).map(|r| r.seconds).sum::<f64>() / (2 * n_test) as f64;
    let sizes = format!("{n_train} train / {n_test} test images");
    report.record(
        "end-to-end MRE (plain)",
        mre_plain < 4.0,
        format!("{mre_plain:.2} px at working resolution, limit 4 px ({sizes})"),
    );
    report.record(
        "end-to-end rotation parity",
        ratio <= 1.25,
        format!("MRE rotated {mre_rot:.2} px / plain {mre_plain:.2} px = {ratio:.3}, limit 1.25"),
    );
    report.record(
        "training time",
        train_secs < 1800.0,
        format!("{:.1} min for {n_train} images, limit 30 min", train_secs / 60.0),
    );
    report.record(
        "detection time",
        detect_secs < 5.0,
        format!("{detect_secs:.2} s per image, limit 5 s"),
    );

    let both: Vec<&CaseResult> = plain.iter().chain(&rotated).collect();
    let monotone = both
        .iter()
        .filter(|r| r.stage_mre_px.windows(2).all(|w| w[1] <= w[0]))
        .count();
    let frac_mono = monotone as f64 / both.len() as f64;
    report.record(
        "stage error non-increasing",
        frac_mono >= 0.8,
        format!("{monotone}/{} images ({:.0}%), need 80%", both.len(), 100.0 * frac_mono),
    );
    let tighter = both
        .iter()
        .filter(|r| r.spread_valid.iter().sum::<f64>() <= r.spread_all.iter().sum::<f64>())
        .count();
    let frac_spread = tighter as f64 / both.len() as f64;
    report.record(
        "HPDV candidate spread reduction",
        frac_spread >= 0.9,
        format!(
            "{tighter}/{} images ({:.0}%), need 90%",
            both.len(),
            100.0 * frac_spread
        ),
    );

    let restored = deserialize_model(&serialize_model(&model).unwrap()).unwrap();
    let mut identical = 0;
    let persist_cases = n_test.min(10);
    for (k, case) in cases.iter().take(persist_cases).enumerate() {
        let a = detect_landmarks(&model, &case.image, 40 + k as u64).unwrap();
        let b = detect_landmarks(&restored, &case.image, 40 + k as u64).unwrap();
        let same = a
            .landmarks
            .0
            .iter()
            .zip(&b.landmarks.0)
            .all(|(p, q)| p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits());
        identical += (same && a.diagnostics == b.diagnostics) as usize;
    }
    report.record(
        "model persistence",
        identical == persist_cases && persist_cases == 10,
        format!("{identical}/{persist_cases} detections bit-identical after serialize/deserialize"),
    );
}
