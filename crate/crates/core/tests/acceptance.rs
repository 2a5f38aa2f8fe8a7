//! End-to-end acceptance checks. Run with `cargo test --test acceptance`;
//! each criterion prints one PASS/FAIL/SKIP line and the process fails if any
//! criterion fails.
//!
//! Criterion 9 needs the political blogs network, which is not bundled. Set
//! `DPASE_POLBLOGS_EDGES` and `DPASE_POLBLOGS_LABELS` to an edge list and a
//! label file to enable it.

use std::time::Instant;

use dpase_core::harness::{
    run_alpha_tradeoff, run_dim_sweep, run_n_sweep, run_privacy_grid, write_csv, write_json, DataSource,
    ExperimentConfig, ExperimentKind, RecordStatus, SweepRecord,
};
use dpase_core::{
    ase, calibrate_noise, loocv_error, procrustes_align, sample_symmetric_noise, top_d_eigen, Embedding, EvalDataset,
    NoiseMatrix, NoiseScale, PrivacyBudget, SbmParams,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = fn() -> Outcome;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

fn all_ok(records: &[SweepRecord]) -> Result<(), String> {
    match records.iter().find(|r| r.status != RecordStatus::Ok) {
        Some(r) => Err(format!("record with seed {} has status {}", r.seed, r.status.as_str())),
        None => Ok(()),
    }
}

fn noise_calibration() -> Outcome {
    let budget = PrivacyBudget::new(0.1, 0.001).unwrap();
    let beta_sq = calibrate_noise(1000, 2, &budget).unwrap().beta_sq();
    // 8 d^2 ln^2(d/delta) / (n^2 alpha^2) = 32 ln^2(2000) / 10^4
    verdict(
        (beta_sq - 0.184876).abs() <= 1e-5,
        format!("beta_sq = {beta_sq:.7} (target 0.184876 +/- 1e-5)"),
    )
}

fn mechanism_statistics() -> Outcome {
    let n = 500;
    let scale = NoiseScale::with_variance(0.25, n, 2).unwrap();
    let noise: NoiseMatrix<f64> = sample_symmetric_noise(n, &scale, &mut ChaCha8Rng::seed_from_u64(2024)).unwrap();
    let e = noise.entries();
    let symmetric = (0..n).all(|i| (0..n).all(|j| e[[i, j]] == e[[j, i]]));
    let upper: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| e[[i, j]])
        .collect();
    let m = upper.len();
    // Mean is known to be zero, so sum(x^2) / sigma^2 ~ chi^2(m).
    let stat = upper.iter().map(|x| x * x).sum::<f64>() / 0.25;
    let chi = ChiSquared::new(m as f64).unwrap();
    let (lo, hi) = (chi.inverse_cdf(0.005), chi.inverse_cdf(0.995));
    verdict(
        m == 124_750 && symmetric && stat >= lo && stat <= hi,
        format!(
            "{m} entries, variance {:.5}, chi2 {stat:.1} in [{lo:.1}, {hi:.1}], exactly symmetric: {symmetric}",
            stat * 0.25 / m as f64
        ),
    )
}

/// Characteristic polynomial coefficients, lowest degree first, by
/// Faddeev-LeVerrier.
fn char_poly(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = Array2::<f64>::zeros((n, n));
    for k in 1..=n {
        let mut next = a.dot(&m);
        for i in 0..n {
            next[[i, i]] += c[n - k + 1];
        }
        m = next;
        c[n - k] = -a.dot(&m).diag().sum() / k as f64;
    }
    c
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Roots of a real-rooted polynomial. The roots of `p'` separate those of
/// `p`, so each root is found by bisection between consecutive critical
/// points.
fn real_roots(c: &[f64]) -> Vec<f64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let bound = 1.0 + c[..deg].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
    let derivative: Vec<f64> = (1..=deg).map(|i| i as f64 * c[i]).collect();
    let mut fences = vec![-bound];
    fences.extend(real_roots(&derivative));
    fences.push(bound);
    fences
        .windows(2)
        .map(|w| {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (horner(c, lo), horner(c, hi));
            if flo.signum() == fhi.signum() {
                // Multiple root sitting on a critical point.
                return if flo.abs() < fhi.abs() { lo } else { hi };
            }
            let rising = fhi > flo;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (horner(c, mid) > 0.0) == rising {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}

fn eigensolver_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_root = 0.0f64;
    for trial in 0..200 {
        let n = 1 + trial % 4;
        let a = random_symmetric(n, &mut rng);
        let mut expected = real_roots(&char_poly(&a));
        let mut got = top_d_eigen(&a, n).unwrap().values().to_vec();
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (x, y) in expected.iter().zip(&got) {
            worst_root = worst_root.max((x - y).abs());
        }
    }
    let mut worst_residual = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..20 {
        let a = random_symmetric(100, &mut rng);
        let fro = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pairs = top_d_eigen(&a, 100).unwrap();
        for (j, &lambda) in pairs.values().iter().enumerate() {
            let v = pairs.vectors().column(j);
            let r = &a.dot(&v) - &(&v * lambda);
            worst_residual = worst_residual.max(r.dot(&r).sqrt() / fro);
        }
        worst_trace = worst_trace.max((pairs.values().sum() - a.diag().sum()).abs());
    }
    verdict(
        worst_root <= 1e-10 && worst_residual <= 1e-8 && worst_trace <= 1e-8,
        format!(
            "max root error {worst_root:.2e}, max relative residual {worst_residual:.2e}, max trace gap {worst_trace:.2e}"
        ),
    )
}

/// Rows `V |L|^{1/2}` of the 2x2 decomposition `B = V L V^T`, lifted to labels.
fn two_block_positions(b: &Array2<f64>, labels: &[usize]) -> Array2<f64> {
    let (p, q, r) = (b[[0, 0]], b[[0, 1]], b[[1, 1]]);
    let mid = (p + r) / 2.0;
    let rad = (((p - r) / 2.0).powi(2) + q * q).sqrt();
    let mut rows = Array2::zeros((2, 2));
    for (j, l) in [mid + rad, mid - rad].into_iter().enumerate() {
        let v = [q, l - p];
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        for a in 0..2 {
            rows[[a, j]] = v[a] / norm * l.abs().sqrt();
        }
    }
    Array2::from_shape_fn((labels.len(), 2), |(i, j)| rows[[labels[i] - 1, j]])
}

fn ase_exact_recovery() -> Outcome {
    let params = SbmParams::two_block_reference();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels: Vec<usize> = (0..200)
        .map(|_| if rng.random::<f64>() < 0.4 { 1 } else { 2 })
        .collect();
    let b = params.block_probs();
    let p = Array2::from_shape_fn((200, 200), |(i, j)| b[[labels[i] - 1, labels[j] - 1]]);
    let x = ase(&p, 2).unwrap();
    let truth = two_block_positions(b, &labels);
    let dist = procrustes_align(x.positions(), &truth).unwrap().aligned_distance();
    verdict(dist <= 1e-8, format!("aligned distance {dist:.2e} (limit 1e-8)"))
}

fn simulation_convergence() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::NSweep);
    cfg.ns = vec![100, 500, 1000, 2000];
    cfg.alphas = vec![0.1];
    cfg.deltas = vec![0.001];
    cfg.dims = vec![2];
    cfg.k = 3;
    cfg.replicates = 10;
    let records = run_n_sweep(&cfg).unwrap();
    if let Err(e) = all_ok(&records) {
        return Outcome::Fail(e);
    }
    let per_n = |n: usize, f: fn(&SweepRecord) -> f64| mean(records.iter().filter(|r| r.n == n).map(f));
    let fnorms: Vec<f64> = cfg
        .ns
        .iter()
        .map(|&n| per_n(n, |r| r.fnorm_per_vertex.unwrap()))
        .collect();
    let decreasing = fnorms.windows(2).all(|w| w[1] < w[0]);
    let dp = per_n(2000, |r| r.error_dp.unwrap());
    let base = per_n(2000, |r| r.error_ase.unwrap());
    verdict(
        decreasing && dp <= 0.05 && (dp - base).abs() <= 0.05,
        format!(
            "per-vertex F-norm {:?}; at n = 2000 error_dp {dp:.4}, error_ase {base:.4}",
            fnorms.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn privacy_grid_monotonicity() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::PrivacyGrid);
    cfg.ns = vec![300];
    cfg.alphas = vec![0.001, 0.05];
    cfg.deltas = vec![0.0001, 0.6];
    cfg.replicates = 20;
    let records = run_privacy_grid(&cfg).unwrap();
    if let Err(e) = all_ok(&records) {
        return Outcome::Fail(e);
    }
    let corner = |a: f64, d: f64| {
        mean(
            records
                .iter()
                .filter(|r| r.alpha == a && r.delta == d)
                .map(|r| r.error_dp.unwrap()),
        )
    };
    let loose = corner(0.05, 0.6);
    let tight = corner(0.001, 0.0001);
    let ok = loose <= tight - 0.05 || (loose <= 0.05 && tight <= 0.05);
    verdict(
        ok,
        format!("mean error_dp {loose:.4} at (0.05, 0.6) vs {tight:.4} at (0.001, 0.0001)"),
    )
}

/// Brute-force LOOCV: full sort of every other point, plain counting vote.
fn loocv_oracle(points: &Array2<f64>, labels: &[usize], k: usize) -> usize {
    let n = points.nrows();
    let mut wrong = 0;
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let diff = &points.row(i) - &points.row(j);
                (diff.dot(&diff), j)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbours = &others[..k];
        let classes = labels.iter().copied().max().unwrap();
        let mut best: Option<(usize, f64, usize)> = None; // (votes, nearest distance, class)
        for class in 1..=classes {
            let members: Vec<&(f64, usize)> = neighbours.iter().filter(|(_, j)| labels[*j] == class).collect();
            if members.is_empty() {
                continue;
            }
            let candidate = (members.len(), members[0].0, class);
            best = match best {
                None => Some(candidate),
                Some(b) if candidate.0 > b.0 || (candidate.0 == b.0 && candidate.1 < b.1) => Some(candidate),
                keep => keep,
            };
        }
        if best.unwrap().2 != labels[i] {
            wrong += 1;
        }
    }
    wrong
}

fn knn_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for trial in 0..100 {
        let k = [1, 3, 5][trial % 3];
        let n = rng.random_range(k + 1..=30);
        let d = rng.random_range(1..=3);
        let classes = rng.random_range(1..=3);
        // Small integer grid so distance and vote ties are common.
        let points = Array2::from_shape_fn((n, d), |_| rng.random_range(0..4) as f64);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(1..=classes)).collect();
        let data = EvalDataset::new(Embedding::from_positions(points.clone()).unwrap(), labels.clone()).unwrap();
        let report = loocv_error(&data, k).unwrap();
        if report.misclassified != loocv_oracle(&points, &labels, k) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} of 100 instances disagree"))
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::PrivacyGrid);
    cfg.ns = vec![120];
    cfg.alphas = vec![0.05, 0.5, 5.0];
    cfg.deltas = vec![0.001, 0.1];
    cfg.replicates = 3;
    cfg.base_seed = 987_654_321;
    let render = || {
        let records = run_privacy_grid(&cfg).unwrap();
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        write_csv(&records, &mut csv).unwrap();
        write_json(&records, &mut json).unwrap();
        (csv, json)
    };
    let first = render();
    let second = render();
    verdict(
        first == second,
        format!(
            "{} CSV bytes and {} JSON bytes, identical across runs: {}",
            first.0.len(),
            first.1.len(),
            first == second
        ),
    )
}

fn real_data_reproduction() -> Outcome {
    let (Ok(edges), Ok(labels)) = (
        std::env::var("DPASE_POLBLOGS_EDGES"),
        std::env::var("DPASE_POLBLOGS_LABELS"),
    ) else {
        return Outcome::Skip("set DPASE_POLBLOGS_EDGES and DPASE_POLBLOGS_LABELS to run".into());
    };
    let source = DataSource::Files {
        edge_list: edges.into(),
        labels: labels.into(),
    };
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::DimSweep);
    cfg.source = source.clone();
    cfg.dims = vec![2];
    cfg.alphas = vec![0.1];
    cfg.deltas = vec![0.01];
    let base = match run_dim_sweep(&cfg) {
        Ok(records) => records[0].error_ase,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::AlphaTradeoff);
    cfg.source = source;
    cfg.dims = vec![2];
    cfg.alphas = vec![0.251];
    cfg.deltas = vec![0.01];
    cfg.replicates = 20;
    let records = match run_alpha_tradeoff(&cfg) {
        Ok(records) => records,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let dp = mean(records.iter().filter_map(|r| r.error_dp));
    let Some(base) = base else {
        return Outcome::Fail("ASE evaluation failed".into());
    };
    verdict(
        (base - 0.180).abs() <= 0.03 && (dp - 0.189).abs() <= 0.04,
        format!("error_ase {base:.4} (0.180 +/- 0.03), mean error_dp {dp:.4} at alpha 0.251 (0.189 +/- 0.04)"),
    )
}

fn main() {
    // `cargo test` passes harness flags such as --nocapture; only a name filter matters here.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, Check); 9] = [
        ("noise calibration exactness", noise_calibration),
        ("mechanism statistics", mechanism_statistics),
        ("eigensolver oracle", eigensolver_oracle),
        ("ASE exact recovery", ase_exact_recovery),
        ("simulation convergence", simulation_convergence),
        ("privacy-grid monotonicity", privacy_grid_monotonicity),
        ("kNN oracle equivalence", knn_oracle_equivalence),
        ("determinism", determinism),
        ("real-data reproduction", real_data_reproduction),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} [{tag}] {name}: {detail} ({secs:.1}s)", i + 1);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
