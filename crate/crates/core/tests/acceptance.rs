//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any fails. Run alone with
//! `cargo test -p kspectra --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kspectra::experiment::sample_labeled_by;
use kspectra::mnist::{load_idx, preprocess, DEFAULT_THRESHOLD};
use kspectra::theory::{
    class_size_upper_bound, sample_class_size, vc_bound_term, verify_shattering_construction,
    BoundParams,
};
use kspectra::{
    correlate, enumerate_low_degree, fit_and_score, fwht, generate_planted, project_l1, run_final,
    run_sweep, select_features, ClassPool, DenseSpectrum, Error, FinalConfig, ParityMask, Point,
    SampleSet, SparseClassifier, SweepConfig,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn random_sample(rng: &mut ChaCha8Rng, n: usize, len: usize) -> SampleSet {
    let keep = (1u64 << n) - 1;
    let points = (0..len)
        .map(|_| Point::from_negative_bits(rng.random::<u64>() & keep, n).unwrap())
        .collect();
    let labels = (0..len)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    SampleSet::new(points, labels).unwrap()
}

/// `χ_S(x)` as a product of coordinates, independent of the bit tricks in the crate.
fn chi_product(bits: u64, x: &Point) -> i64 {
    (0..x.dim())
        .filter(|j| bits >> j & 1 == 1)
        .map(|j| i64::from(x.coord(j)))
        .product()
}

/// All masks of weight `<= d`, sorted by (weight, value), by filtering the full cube.
fn low_degree_by_filter(n: usize, d: usize) -> Vec<u64> {
    let mut masks: Vec<u64> = (0..1u64 << n)
        .filter(|b| b.count_ones() as usize <= d)
        .collect();
    masks.sort_by_key(|b| (b.count_ones(), *b));
    masks
}

fn transform_roundtrip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..200 {
        let n = rng.random_range(0..=12u32);
        let z: Vec<f64> = (0..1usize << n)
            .map(|_| f64::from(rng.random_range(-1000..=1000i32)))
            .collect();
        let once = fwht(&DenseSpectrum::new(z.clone()).unwrap());
        let twice = fwht(&once);
        let scale = (1u64 << n) as f64;
        if twice.values().iter().zip(&z).any(|(a, b)| *a != scale * b) {
            return Err(format!("trial {trial}: W(Wz) != 2^{n} z"));
        }
        let lhs: f64 = once.values().iter().map(|v| v * v).sum();
        let rhs: f64 = scale * z.iter().map(|v| v * v).sum::<f64>();
        if (lhs - rhs).abs() > 1e-9 * rhs.max(1.0) {
            return Err(format!("trial {trial}: Parseval {lhs} vs {rhs}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        return Err(format!("took {secs:.2}s"));
    }
    Ok(format!("200 vectors, n <= 12, {secs:.2}s"))
}

fn correlation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..50 {
        let n = rng.random_range(1..=10usize);
        let d = rng.random_range(0..=3usize.min(n));
        let len = rng.random_range(1..=100usize);
        let sample = random_sample(&mut rng, n, len);
        let masks = enumerate_low_degree(n, d).unwrap();
        let bits: Vec<u64> = masks.iter().map(ParityMask::bits).collect();
        if bits != low_degree_by_filter(n, d) {
            return Err(format!("trial {trial}: enumeration differs"));
        }
        // Dense W_{x,d}: rows are sample points, columns are masks.
        let dense: Vec<Vec<i64>> = sample
            .points()
            .iter()
            .map(|x| bits.iter().map(|&b| chi_product(b, x)).collect())
            .collect();
        let expected: Vec<i64> = (0..bits.len())
            .map(|t| {
                dense
                    .iter()
                    .zip(sample.labels())
                    .map(|(row, &y)| row[t] * i64::from(y))
                    .sum()
            })
            .collect();
        if correlate(&sample, &masks).unwrap() != expected {
            return Err(format!("trial {trial}: n={n} d={d} len={len} mismatch"));
        }
    }
    Ok("50 instances exact".into())
}

/// Literal brute force: explicit columns, stable sort, pairwise `±` comparison.
fn selection_oracle(sample: &SampleSet, d: usize, k: usize) -> Option<Vec<u64>> {
    let masks = low_degree_by_filter(sample.dim(), d);
    let columns: Vec<Vec<i64>> = masks
        .iter()
        .map(|&b| sample.points().iter().map(|x| chi_product(b, x)).collect())
        .collect();
    let corr: Vec<i64> = columns
        .iter()
        .map(|c| {
            c.iter()
                .zip(sample.labels())
                .map(|(a, &y)| a * i64::from(y))
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..masks.len()).collect();
    order.sort_by(|&a, &b| corr[b].abs().cmp(&corr[a].abs()));
    let mut kept: Vec<usize> = Vec::new();
    for t in order {
        let negated: Vec<i64> = columns[t].iter().map(|v| -v).collect();
        if kept
            .iter()
            .all(|&s| columns[s] != columns[t] && columns[s] != negated)
        {
            kept.push(t);
            if kept.len() == k {
                return Some(kept.iter().map(|&t| masks[t]).collect());
            }
        }
    }
    None
}

fn selection_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut exhausted = 0;
    for trial in 0..50 {
        let k = rng.random_range(1..=6usize);
        let len = rng.random_range(1..=60usize);
        let sample = random_sample(&mut rng, 8, len);
        let expected = selection_oracle(&sample, 2, k);
        match (select_features(&sample, 2, k), expected) {
            (Ok(sel), Some(want)) => {
                let got: Vec<u64> = sel.masks().iter().map(ParityMask::bits).collect();
                if got != want {
                    return Err(format!("trial {trial}: {got:?} vs oracle {want:?}"));
                }
            }
            (Err(Error::SelectionExhausted { .. }), None) => exhausted += 1,
            (got, want) => return Err(format!("trial {trial}: {got:?} vs oracle {want:?}")),
        }
    }
    Ok(format!("50 instances, {exhausted} exhausted on both sides"))
}

fn pure_parity_recovery() -> Outcome {
    let n = 25;
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let support: Vec<usize> = rand::seq::index::sample(&mut rng, n, 3).into_vec();
        let target = ParityMask::from_indices(&support, n).unwrap();
        let truth = SparseClassifier::new(n, vec![(target, 1.0)]).unwrap();
        let sample = sample_labeled_by(&truth, 2000, seed).unwrap();
        let top = select_features(&sample, 3, 1).unwrap();
        if top.masks()[0] == target {
            hits += 1;
        }
    }
    let line = format!("planted parity ranked first in {hits}/100 runs");
    if hits >= 95 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn planted_model_learning() -> Outcome {
    let mut good = 0;
    let mut worst_secs: f64 = 0.0;
    let mut errors = Vec::new();
    for seed in 0..10u64 {
        let start = Instant::now();
        let (train_set, truth) = generate_planted(25, 10, 3, 4000, seed).unwrap();
        let test_set = sample_labeled_by(&truth, 4000, seed).unwrap();
        let eval = fit_and_score(&train_set, &test_set, 3, 150, &Default::default()).unwrap();
        worst_secs = worst_secs.max(start.elapsed().as_secs_f64());
        if eval.test_error <= 0.05 {
            good += 1;
        }
        errors.push(format!("{:.4}", eval.test_error));
    }
    let line = format!(
        "{good}/10 seeds with test error <= 5% [{}], slowest seed {worst_secs:.1}s",
        errors.join(" ")
    );
    if good >= 9 && worst_secs < 120.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn mnist_pool() -> Result<ClassPool, String> {
    let dir = common::mnist_dir().ok_or("MNIST training files not found")?;
    let raw = load_idx(
        &common::idx_file(&dir, "train-images-idx3-ubyte"),
        &common::idx_file(&dir, "train-labels-idx1-ubyte"),
    )
    .map_err(|e| e.to_string())?;
    let items = preprocess(&raw, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    ClassPool::new(&items).map_err(|e| e.to_string())
}

fn mnist_headline(pool: &Result<ClassPool, String>) -> Outcome {
    let pool = pool.as_ref().map_err(Clone::clone)?;
    let cfg = FinalConfig::default();
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let report = threads
        .install(|| run_final(pool, &cfg))
        .map_err(|e| e.to_string())?;
    let line = format!(
        "test error {:.4}% ({} of {} misclassified), {:.1}s single-threaded",
        100.0 * report.test_error,
        report.misclassified.len(),
        report.test_size,
        report.wall_seconds
    );
    if report.test_error <= 0.015 && report.wall_seconds <= 600.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn sweep_shape(pool: &Result<ClassPool, String>) -> Outcome {
    let pool = pool.as_ref().map_err(Clone::clone)?;
    let cfg = SweepConfig {
        k_values: vec![10, 50, 100, 150, 180],
        trials_per_k: 5,
        ..SweepConfig::default()
    };
    let out = run_sweep(pool, &cfg).map_err(|e| e.to_string())?;
    let row = |k: usize| out.summary.iter().find(|r| r.k == k).unwrap();
    let mut problems = Vec::new();
    let (m10, m150, m180) = (row(10).mean_test, row(150).mean_test, row(180).mean_test);
    if m150 >= m10 {
        problems.push(format!("mean(150)={m150:.6} not below mean(10)={m10:.6}"));
    }
    if (m150 - m180).abs() > 0.005 {
        problems.push(format!("|mean(150)-mean(180)|={:.6}", (m150 - m180).abs()));
    }
    for r in out.summary.iter().filter(|r| r.k >= 50) {
        let bound = vc_bound_term(&BoundParams::new((2 * 25 * r.k) as f64, 3000, 0.05).unwrap())
            .map_err(|e| e.to_string())?;
        if r.mean_gap <= 0.0 {
            problems.push(format!("gap at k={} is {:.6}", r.k, r.mean_gap));
        }
        if r.mean_gap > bound / 10.0 {
            problems.push(format!(
                "gap at k={} exceeds bound/10 = {:.6}",
                r.k,
                bound / 10.0
            ));
        }
    }
    let means = out
        .summary
        .iter()
        .map(|r| format!("k={}:{:.4}/{:+.4}", r.k, r.mean_test, r.mean_gap))
        .collect::<Vec<_>>()
        .join(" ");
    if problems.is_empty() {
        Ok(format!("mean test/gap {means}"))
    } else {
        Err(format!("{}; mean test/gap {means}", problems.join("; ")))
    }
}

fn theory_oracles() -> Outcome {
    for n in 2..=4 {
        if !verify_shattering_construction(n).map_err(|e| e.to_string())? {
            return Err(format!("construction fails to shatter at n={n}"));
        }
    }
    // h ranges over (0, ℓ] on each ℓ row; beyond h = 2ℓ the term is not monotone in h.
    let ells: Vec<usize> = (1..=20).map(|i| 50 * i * i).collect();
    let hs: Vec<f64> = (1..=20).map(|i| f64::from(i * i) * 25.0).collect();
    let term =
        |h: f64, ell: usize| vc_bound_term(&BoundParams::new(h, ell, 0.05).unwrap()).unwrap();
    let mut checked = 0;
    for &ell in &ells {
        let row: Vec<f64> = hs
            .iter()
            .filter(|&&h| h <= ell as f64)
            .map(|&h| term(h, ell))
            .collect();
        if row.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("not nondecreasing in h at ell={ell}"));
        }
        checked += row.len();
    }
    for &h in &hs {
        let col: Vec<f64> = ells
            .iter()
            .filter(|&&ell| h <= ell as f64)
            .map(|&ell| term(h, ell))
            .collect();
        if col.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("not nonincreasing in ell at h={h}"));
        }
    }
    let mut sizes = Vec::new();
    for n in [2u32, 3] {
        for k in [1usize, 2] {
            let seen = sample_class_size(n, k, 20_000, 7).map_err(|e| e.to_string())?;
            let bound = class_size_upper_bound(n, k);
            if seen as f64 > bound {
                return Err(format!("n={n} k={k}: sampled {seen} > bound {bound}"));
            }
            sizes.push(format!("({n},{k}):{seen}<={bound}"));
        }
    }
    Ok(format!(
        "shattering n=2..4; {checked} monotone grid cells; class sizes {}",
        sizes.join(" ")
    ))
}

fn l1_projection() -> Outcome {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9);
    if project_l1(&[0.25, -0.5], 1.0) != vec![0.25, -0.5] {
        return Err("feasible vector moved".into());
    }
    if !close(&project_l1(&[3.0, 0.0], 1.0), &[1.0, 0.0]) {
        return Err("(3, 0) with tau 1 is not (1, 0)".into());
    }
    if !close(&project_l1(&[2.0, 1.0], 1.0), &[1.0, 0.0]) {
        return Err("(2, 1) with tau 1 is not (1, 0)".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let l2 = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    for trial in 0..1000 {
        let len = rng.random_range(1..=40usize);
        let tau = rng.random_range(0.1..20.0);
        let u: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (pu, pv) = (project_l1(&u, tau), project_l1(&v, tau));
        if l1(&pu) > tau + 1e-9 {
            return Err(format!("trial {trial}: infeasible, norm {}", l1(&pu)));
        }
        if !close(&project_l1(&pu, tau), &pu) {
            return Err(format!("trial {trial}: not idempotent"));
        }
        if l2(&pu, &pv) > l2(&u, &v) + 1e-9 {
            return Err(format!("trial {trial}: expansive"));
        }
    }
    Ok("3 worked examples, 1000 random vectors".into())
}

fn main() -> ExitCode {
    let pool = mnist_pool();
    let criteria: Vec<Criterion> = vec![
        ("transform correctness", Box::new(transform_roundtrip)),
        (
            "correlation oracle equivalence",
            Box::new(correlation_oracle),
        ),
        (
            "selection oracle equivalence",
            Box::new(selection_oracle_equivalence),
        ),
        ("pure-parity recovery", Box::new(pure_parity_recovery)),
        ("planted-model learning", Box::new(planted_model_learning)),
        ("MNIST headline", Box::new(|| mnist_headline(&pool))),
        ("sweep shape", Box::new(|| sweep_shape(&pool))),
        ("theory oracles", Box::new(theory_oracles)),
        ("l1 projection", Box::new(l1_projection)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
