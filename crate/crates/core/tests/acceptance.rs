//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cardshift::cardinality::{estimate_all, gamma, gamma_profile, BoundaryParams};
use cardshift::cli::run::run;
use cardshift::cli::{Preprocess, RunConfig, TOY_PRESET_MAX_ITER};
use cardshift::dataset::{generate_toy, load_csv, standardize, ToySpec};
use cardshift::disttheory::{
    chi_cdf, expected_range_mc, interpoint_chi_params, ks_statistic, sample_interpoint_distances,
    sample_norms, ChiParams, Component,
};
use cardshift::evalmetrics::rand_index;
use cardshift::geometry::SortedDistanceRow;
use cardshift::{AdaptiveMeanShift, Boundary, Dataset, LabelColumn};
use common::{data_path, median_f64, median_usize, rand_index_pairs, same_partition, two_cluster_spec};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn check(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn labelled(name: &str, preprocess: Preprocess) -> RunConfig {
    RunConfig {
        input: data_path(name).to_string_lossy().into_owned(),
        label_column: Some(LabelColumn::Name("class".into())),
        preprocess,
        ..Default::default()
    }
}

fn reproduction(cfg: RunConfig, min_ri: f64) -> Check {
    let t = Instant::now();
    let out = run(&cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let ri = out.report.rand_index.ok_or("no labels")?;
    check(
        ri >= min_ri && secs < 10.0,
        format!("RI {ri:.4} (need >= {min_ri}), {} modes, {secs:.2}s (need < 10s)", out.report.modes),
    )
}

fn iris() -> Check {
    reproduction(labelled("iris.csv", Preprocess::Standardize), 0.90)
}

fn wine() -> Check {
    reproduction(labelled("wine.csv", Preprocess::Gagolewski), 0.65)
}

/// The small cluster counts as recovered when one predicted label holds at
/// least 80% of its points and at least 80% of that label's points are its.
fn small_cluster_recovered(truth: &[String], pred: &[usize]) -> bool {
    let small: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == "0").collect();
    let mut counts = std::collections::HashMap::new();
    for &i in &small {
        *counts.entry(pred[i]).or_insert(0usize) += 1;
    }
    let (&label, &hits) = counts.iter().max_by_key(|(l, c)| (**c, std::cmp::Reverse(**l))).unwrap();
    let size = pred.iter().filter(|&&p| p == label).count();
    hits * 5 >= small.len() * 4 && hits * 5 >= size * 4
}

fn toy() -> Check {
    let mut ris = Vec::new();
    let mut recovered = 0;
    for seed in 0..20 {
        let ds = generate_toy(&ToySpec::four_cluster(seed)).map_err(|e| e.to_string())?;
        let algo = AdaptiveMeanShift { max_iter: TOY_PRESET_MAX_ITER, ..Default::default() };
        let c = algo.fit(&ds).map_err(|e| e.to_string())?;
        let truth = ds.labels().unwrap();
        ris.push(rand_index(truth, &c.labels).unwrap());
        recovered += usize::from(small_cluster_recovered(truth, &c.labels));
    }
    let med = median_f64(ris);
    check(
        med >= 0.95 && recovered >= 16,
        format!("median RI {med:.4} (need >= 0.95), small cluster recovered in {recovered}/20 (need >= 16)"),
    )
}

fn estimator() -> Check {
    let t = Instant::now();
    let mut per_seed = Vec::new();
    for seed in 0..20 {
        let ds = generate_toy(&two_cluster_spec(seed, 100, 300, 1.0, 20.0)).map_err(|e| e.to_string())?;
        let bp = BoundaryParams::defaults(ds.n()).map_err(|e| e.to_string())?;
        let est = estimate_all(&ds, &bp).map_err(|e| e.to_string())?;
        per_seed.push(median_usize(est.per_point[..100].iter().map(|e| e.n_hat).collect()));
    }
    let secs = t.elapsed().as_secs_f64();
    let med = median_usize(per_seed.clone());
    check(
        (90..=110).contains(&med) && secs < 2.0,
        format!("median n_hat {med} (need 90..=110, per seed {per_seed:?}), {secs:.2}s for 20 seeds (need < 2s)"),
    )
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
    y.sort_by(f64::total_cmp);
    y
}

fn gamma_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_scale: f64 = 0.0;
    for _ in 0..2000 {
        let len = rng.gen_range(3..200);
        let y = random_row(&mut rng, len);
        let c = 10f64.powf(rng.gen_range(-6.0..6.0));
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        if let (Ok(a), Ok(b)) = (gamma(&y), gamma(&scaled)) {
            worst_scale = worst_scale.max((a - b).abs() / a.abs());
        }
    }
    let mut worst_two: f64 = 0.0;
    for _ in 0..2000 {
        let a = rng.gen_range(0.0..1e3);
        let b = a + rng.gen_range(1e-6..1e3);
        worst_two = worst_two.max((gamma(&[a, b]).unwrap() - 1.0).abs());
    }
    let mut worst_naive: f64 = 0.0;
    for len in [50, 500, 5000] {
        let y = random_row(&mut rng, len);
        let n = len + 1;
        let bp = BoundaryParams::new(Boundary::Count(2), Boundary::Count(len * 10 / 11), 1.1, n)
            .map_err(|e| e.to_string())?;
        let row = SortedDistanceRow { source_index: None, distances: y.clone(), order: (0..len).collect() };
        let profile = gamma_profile(&row, &bp).map_err(|e| e.to_string())?;
        for k in profile.k_range() {
            if let (Some(a), Ok(b)) = (profile.get(k), gamma(&y[..k])) {
                worst_naive = worst_naive.max((a - b).abs() / b.abs());
            }
        }
    }
    check(
        worst_scale <= 1e-12 && worst_two <= 1e-12 && worst_naive <= 1e-9,
        format!(
            "scale rel err {worst_scale:.1e} (<= 1e-12), 2-prefix err {worst_two:.1e}, incremental rel err {worst_naive:.1e} (<= 1e-9)"
        ),
    )
}

fn dist_suite() -> Check {
    let mut worst_closed: f64 = 0.0;
    for i in 0..=400 {
        let x = i as f64 * 0.02;
        let rayleigh = 1.0 - (-x * x / 2.0).exp();
        let half_normal = libm::erf(x / 2f64.sqrt());
        worst_closed = worst_closed
            .max((chi_cdf(x, ChiParams::new(2, 1.0).unwrap()) - rayleigh).abs())
            .max((chi_cdf(x, ChiParams::new(1, 1.0).unwrap()) - half_normal).abs());
    }
    let sigma = 1.7;
    let mut ks_center: Vec<(u32, f64)> = Vec::new();
    let mut ks_pairs: Vec<(u32, f64)> = Vec::new();
    for (k, d) in [2u32, 3, 8, 64].into_iter().enumerate() {
        let p = ChiParams::new(d, sigma).unwrap();
        let y = sample_norms(Component::Gaussian, d, sigma, 10_000, 40 + k as u64);
        ks_center.push((d, ks_statistic(&y, |x| chi_cdf(x, p))));
        let q = interpoint_chi_params(d, sigma).unwrap();
        let z = sample_interpoint_distances(d, sigma, -2.0, 10_000, 80 + k as u64);
        ks_pairs.push((d, ks_statistic(&z, |x| chi_cdf(x, q))));
    }
    let ok = worst_closed <= 1e-8
        && ks_center.iter().chain(&ks_pairs).all(|&(_, ks)| ks < 0.02);
    let fmt = |v: &[(u32, f64)]| v.iter().map(|(d, k)| format!("d{d}:{k:.4}")).collect::<Vec<_>>().join(" ");
    check(
        ok,
        format!(
            "closed-form err {worst_closed:.1e} (<= 1e-8), KS center [{}], KS interpoint [{}] (< 0.02)",
            fmt(&ks_center),
            fmt(&ks_pairs)
        ),
    )
}

fn high_dim() -> Check {
    let y = sample_norms(Component::Gaussian, 1024, 1.0, 20_000, 3);
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let r64 = expected_range_mc(Component::Gaussian, 100, 64, 2000, 17).map_err(|e| e.to_string())?;
    let r1024 = expected_range_mc(Component::Gaussian, 100, 1024, 2000, 18).map_err(|e| e.to_string())?;
    let rel = (r64.range - r1024.range).abs() / r1024.range;
    check(
        (mean - 32.0).abs() / 32.0 < 0.01 && (var - 0.5).abs() / 0.5 < 0.15 && rel < 0.05,
        format!(
            "mean {mean:.4} (32 +- 1%), variance {var:.4} (0.5 +- 15%), range d64 {:.4} vs d1024 {:.4} ({:.2}% < 5%)",
            r64.range,
            r1024.range,
            100.0 * rel
        ),
    )
}

fn metric_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    for _ in 0..100 {
        let ka = rng.gen_range(1..12);
        let kb = rng.gen_range(1..12);
        let a: Vec<u32> = (0..200).map(|_| rng.gen_range(0..ka)).collect();
        let b: Vec<u32> = (0..200).map(|_| rng.gen_range(0..kb)).collect();
        if rand_index(&a, &b).unwrap() != rand_index_pairs(&a, &b) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches}/100 pairs differ from pair enumeration"))
}

fn translate(ds: &Dataset, t: &[f64]) -> Dataset {
    let moved = ds.points() + &Array1::from(t.to_vec());
    Dataset::new(ds.name.clone(), moved, ds.labels().map(|l| l.to_vec())).unwrap()
}

fn equivariance() -> Check {
    let mut cases: Vec<Dataset> = (0..5).map(|s| generate_toy(&ToySpec::four_cluster(s)).unwrap()).collect();
    cases.extend((0..5).map(common::blobs));
    let iris = load_csv(data_path("iris.csv"), Some(&LabelColumn::Name("class".into()))).unwrap();
    cases.push(standardize(&iris).unwrap());

    let algo = AdaptiveMeanShift::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut total, mut failed) = (0, Vec::new());
    for ds in &cases {
        let base = algo.fit(ds).map_err(|e| e.to_string())?.labels;
        let t: Vec<f64> = (0..ds.dim()).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let mut variants = vec![("translate".to_string(), translate(ds, &t))];
        for c in [0.25, 3.7, 1e3] {
            variants.push((format!("scale {c}"), ds.map_points(|v| v * c).unwrap()));
        }
        for (what, v) in variants {
            total += 1;
            let labels = algo.fit(&v).map_err(|e| e.to_string())?.labels;
            if !same_partition(&base, &labels) {
                failed.push(format!("{} {what}", ds.name));
            }
        }
    }
    check(
        failed.is_empty(),
        format!("{}/{total} transformed runs kept the partition{}", total - failed.len(),
            if failed.is_empty() { String::new() } else { format!("; changed: {}", failed.join(", ")) }),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 iris reproduction", iris),
        ("2 wine reproduction", wine),
        ("3 toy recovery", toy),
        ("4 cardinality estimator", estimator),
        ("5 gamma properties", gamma_suite),
        ("6 distribution theory", dist_suite),
        ("7 high-dimension limit", high_dim),
        ("8 metric oracle", metric_oracle),
        ("9 equivariance", equivariance),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
