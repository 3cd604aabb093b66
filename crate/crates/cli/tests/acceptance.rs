//! End-to-end acceptance checks. Each test drives the compiled binary or
//! the library exactly the way a batch user would, verifies one headline
//! behavior, and prints a single `[acceptance] criterion N: PASS|FAIL`
//! line (visible under `cargo test -- --nocapture`).

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use avqclab_core::avqc::{
    inner_min, interpolated_family, overlap_example, perturbation_experiment, Avqc, InnerOptions,
};
use avqclab_core::capacities::holevo_chi;
use avqclab_core::channels::{
    channel_diamond_norm, diamond_norm_lower_bound, DiamondOptions, EbVerdict, QuantumChannel,
};
use avqclab_core::finite_resources::{derandomize_simulate, FiniteResourceParams};
use avqclab_core::linalg::{hermitian_eig, trace_norm, ComplexMatrix, DensityMatrix};
use avqclab_core::optim::{derive_seed, SimplexWeights};
use avqclab_core::sampling::{
    random_channel, random_density_matrix, random_hermitian, random_pure_state,
};
use serde_json::Value;
use tempfile::TempDir;

fn criterion<F: FnOnce(&mut Vec<String>)>(n: usize, budget_secs: u64, body: F) {
    let started = Instant::now();
    let mut failures = Vec::new();
    body(&mut failures);
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(budget_secs) {
        failures.push(format!(
            "elapsed {:.1}s exceeds the {budget_secs}s budget",
            elapsed.as_secs_f64()
        ));
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "[acceptance] criterion {n}: {verdict} ({:.1}s)",
        elapsed.as_secs_f64()
    );
    assert!(failures.is_empty(), "criterion {n}: {failures:#?}");
}

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_avqclab"))
        .args(args)
        .output()
        .expect("binary should spawn");
    assert!(
        out.status.success(),
        "avqclab {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout should be UTF-8")
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().expect("UTF-8 path").to_string()
}

/// Split a CSV file into its header line and data cells.
fn csv(text: &str) -> (String, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect();
    (header, rows)
}

fn f(cell: &str) -> f64 {
    cell.parse().expect("numeric cell")
}

#[test]
fn example_family_is_certified_symmetrizable_at_level_one() {
    criterion(1, 30, |fails| {
        let dir = TempDir::new().unwrap();
        let fam = path_str(dir.path(), "example.json");
        let rep = path_str(dir.path(), "sym.json");
        run(&["build", "example", "--out", &fam]);
        run(&[
            "symmetrizability",
            "--avqc",
            &fam,
            "--l",
            "1",
            "--out",
            &rep,
        ]);
        let report: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
        let value = report["value"].as_f64().unwrap();
        if value > 1e-6 {
            fails.push(format!("level-1 value {value} above 1e-6"));
        }
        if report["certificate"]["type"] != "structuredZero" {
            fails.push(format!("certificate {}", report["certificate"]));
        }
        let residual = report["certificate"]["residual"]
            .as_f64()
            .unwrap_or(f64::INFINITY);
        if residual > 1e-8 {
            fails.push(format!("certificate residual {residual} above 1e-8"));
        }
    });
}

#[test]
fn hull_holevo_curve_matches_its_closed_form() {
    criterion(2, 10, |fails| {
        let dir = TempDir::new().unwrap();
        let out1 = path_str(dir.path(), "cap1.csv");
        let out2 = path_str(dir.path(), "cap2.csv");
        run(&["capacity", "--grid", "11", "--out", &out1]);
        run(&["capacity", "--grid", "11", "--out", &out2]);
        let text = fs::read_to_string(&out1).unwrap();
        if text != fs::read_to_string(&out2).unwrap() {
            fails.push("identical configurations produced different bytes".into());
        }
        let (header, rows) = csv(&text);
        if header != "t,chi,closed_form,abs_err" {
            fails.push(format!("unexpected header '{header}'"));
        }
        if rows.len() != 11 {
            fails.push(format!("{} rows, wanted 11", rows.len()));
        }
        let mut min_chi = f64::INFINITY;
        let mut argmin = -1.0;
        for row in &rows {
            let (t, chi, closed) = (f(&row[0]), f(&row[1]), f(&row[2]));
            if (chi - closed).abs() > 1e-9 {
                fails.push(format!("t={t}: chi {chi} vs closed form {closed}"));
            }
            if chi < min_chi {
                min_chi = chi;
                argmin = t;
            }
        }
        if (min_chi - 0.5).abs() > 1e-9 {
            fails.push(format!("curve minimum {min_chi}, wanted 0.5"));
        }
        if argmin != 0.5 {
            fails.push(format!("minimum at t={argmin}, wanted 0.5"));
        }
    });
}

#[test]
fn symmetrizability_vanishes_only_on_the_interpolation_edges() {
    criterion(3, 1200, |fails| {
        let dir = TempDir::new().unwrap();
        let out = path_str(dir.path(), "sweep.csv");
        let stdout = run(&["sweep-discontinuity", "--grid", "5", "--out", &out]);
        let (header, rows) = csv(&fs::read_to_string(&out).unwrap());
        if header != "lambda,eta,F1,D_to_limit_set,eb_hull_verdict,chi_minimax" {
            fails.push(format!("unexpected header '{header}'"));
        }
        if rows.len() != 25 {
            fails.push(format!("{} rows, wanted 25", rows.len()));
        }
        for row in &rows {
            let (lambda, eta, f1) = (f(&row[0]), f(&row[1]), f(&row[2]));
            let on_edge = lambda == 1.0 || eta == 1.0;
            if on_edge && f1 > 1e-6 {
                fails.push(format!("edge point ({lambda}, {eta}) has F1 = {f1}"));
            }
            if !on_edge && f1 <= 0.01 {
                fails.push(format!(
                    "off-edge point ({lambda}, {eta}) has F1 = {f1}, not clearly positive"
                ));
            }
            let mm = f(&row[5]);
            if lambda == 1.0 && mm < 0.5 - 1e-6 {
                fails.push(format!("limit row eta={eta} minimax {mm} below 0.5"));
            }
        }
        let diagnostics: Vec<&str> = stdout.lines().filter(|l| l.starts_with("row:")).collect();
        if diagnostics.len() != 25 {
            fails.push(format!("{} diagnostic rows, wanted 25", diagnostics.len()));
        }
        for line in diagnostics {
            if !line.contains("converged=true") {
                fails.push(format!("unconverged diagnostics: {line}"));
            }
        }
    });
}

#[test]
fn symmetrizability_is_lipschitz_under_random_perturbations() {
    criterion(4, 1800, |fails| {
        let family = interpolated_family(0.5, 0.5).unwrap();
        let table = perturbation_experiment(&family, 0.05, 100, 20260822).unwrap();
        if table.rows.len() != 100 {
            fails.push(format!("{} trials, wanted 100", table.rows.len()));
        }
        for (i, row) in table.rows.iter().enumerate() {
            let gap = (table.f1_base - row.f1_perturbed).abs();
            let cap = 2.0 * row.distance + 2e-3;
            if gap > cap {
                fails.push(format!(
                    "trial {i}: |dF1| = {gap} exceeds 2 * {} + 2e-3",
                    row.distance
                ));
            }
        }
    });
}

#[test]
fn entanglement_breaking_classification_and_threshold() {
    criterion(5, 60, |fails| {
        for (i, ch) in overlap_example().channels().iter().enumerate() {
            if !matches!(ch.is_entanglement_breaking(), EbVerdict::Eb) {
                fails.push(format!("member {i} not classified EB"));
            }
        }
        let id = QuantumChannel::identity(2);
        let eig = id.ppt_min_eigenvalue();
        if (eig + 0.5).abs() > 1e-9 {
            fails.push(format!(
                "identity min PT eigenvalue {eig}, wanted -0.5 within 1e-9"
            ));
        }
        if !matches!(id.is_entanglement_breaking(), EbVerdict::NotEb) {
            fails.push("identity not flagged NotEB".into());
        }
        // Bisect the depolarizing strength at which the embedding family
        // turns entanglement breaking.
        let eb = |eta: f64| {
            matches!(
                QuantumChannel::depolarizing_embed(2, 3, eta)
                    .unwrap()
                    .is_entanglement_breaking(),
                EbVerdict::Eb
            )
        };
        if eb(0.0) {
            fails.push("eta = 0 should not be EB".into());
        }
        if !eb(1.0) {
            fails.push("eta = 1 should be EB".into());
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if eb(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !(lo > 0.74 && hi < 0.76) {
            fails.push(format!("threshold bracket [{lo}, {hi}] outside (0.74, 0.76)"));
        }
    });
}

#[test]
fn diamond_norm_normalization_and_separation() {
    criterion(6, 300, |fails| {
        let opts = DiamondOptions {
            starts: 6,
            ..DiamondOptions::default()
        };
        for i in 0..50u64 {
            let din = 2 + (i % 2) as usize;
            let dout = 2 + ((i / 2) % 2) as usize;
            // Keep dout * rank >= din so the isometry embedding exists.
            let rank = 2 + (i % 2) as usize;
            let ch = random_channel(din, dout, rank, derive_seed(6600, i)).unwrap();
            let est = channel_diamond_norm(&ch, &opts).unwrap();
            if (est.value - 1.0).abs() > 1e-6 {
                fails.push(format!(
                    "instance {i} ({din}->{dout}, rank {rank}): norm {}",
                    est.value
                ));
            }
        }
        let ex = overlap_example();
        let d = diamond_norm_lower_bound(&ex.channels()[0], &ex.channels()[1], &opts)
            .unwrap()
            .value;
        if d < 2.0 - 1e-6 {
            fails.push(format!("member separation {d}, wanted >= 2 - 1e-6"));
        }
    });
}

#[test]
fn counting_formulas_hit_their_reference_values() {
    let dir = TempDir::new().unwrap();
    let out1 = path_str(dir.path(), "trade1.csv");
    let out2 = path_str(dir.path(), "trade2.csv");
    criterion(7, 1, |fails| {
        run(&["tradeoff", "--out", &out1]);
        let (header, rows) = csv(&fs::read_to_string(&out1).unwrap());
        if header != "lambda,E_minus_eps,S_size,K,L,L_rough" {
            fails.push(format!("unexpected header '{header}'"));
        }
        if rows.len() != 10 {
            fails.push(format!("{} rows, wanted 10", rows.len()));
        }
        for (i, row) in rows.iter().enumerate() {
            // The CSV carries 12 significant digits, so reparsing is exact
            // only to ~1e-13 at these magnitudes.
            let want_lambda = 0.05 / (i + 1) as f64;
            if (f(&row[0]) - want_lambda).abs() > 1e-12 {
                fails.push(format!("row {i}: lambda {}", row[0]));
            }
            // K = ceil(8 log2|S| / (lambda * gap)) scales exactly as 1/lambda
            // on this grid because 800 * (i + 1) never needs rounding.
            let want_k = 800 * (i as u64 + 1);
            if row[3] != want_k.to_string() {
                fails.push(format!("row {i}: K = {}, wanted {want_k}", row[3]));
            }
        }
        if !rows.is_empty() && rows[0][4] != "246" {
            fails.push(format!("L = {}, wanted 246", rows[0][4]));
        }
        // Minimality: 246 satisfies the defining inequality and 245 does not.
        let (gap, s, lambda) = (0.2f64, 2.0f64, 0.05f64);
        let rhs = 2.0 / gap * ((1.0 / lambda) * 4.0 / gap).log2();
        let margin = |l: f64| l - (2.0 * s / gap) * l.log2() - rhs;
        if margin(246.0) < 0.0 {
            fails.push("246 fails the defining inequality".into());
        }
        if margin(245.0) >= 0.0 {
            fails.push("245 already satisfies the inequality".into());
        }
    });
    // Identical configuration produces identical bytes.
    run(&["tradeoff", "--out", &out2]);
    assert_eq!(
        fs::read_to_string(&out1).unwrap(),
        fs::read_to_string(&out2).unwrap()
    );
}

#[test]
fn sampled_code_failure_rate_respects_the_tail_bound() {
    criterion(8, 600, |fails| {
        let family = overlap_example();
        let params = FiniteResourceParams::new(0.5, 0.25, 0.1, 0.3, 2).unwrap();
        let l = 4;
        let seed = 88001u64;
        // Double K until the closed-form tail bound clears 5%.
        let mut chosen = None;
        let mut k = 16u64;
        while k <= 4096 {
            let probe = derandomize_simulate(&family, &params, k, l, 1, seed).unwrap();
            if probe.theoretical_bound <= 0.05 {
                chosen = Some(k);
                break;
            }
            k *= 2;
        }
        let Some(k) = chosen else {
            fails.push("no K up to 4096 pushed the tail bound under 0.05".into());
            return;
        };
        let trials = 1000usize;
        let res = derandomize_simulate(&family, &params, k, l, trials, seed).unwrap();
        if res.theoretical_bound > 0.05 {
            fails.push(format!("bound {} at K = {k}", res.theoretical_bound));
        }
        let sigma =
            (res.theoretical_bound * (1.0 - res.theoretical_bound) / trials as f64).sqrt();
        if res.failure_fraction > res.theoretical_bound + 3.0 * sigma {
            fails.push(format!(
                "failure fraction {} above bound {} + 3 * {sigma}",
                res.failure_fraction, res.theoretical_bound
            ));
        }
    });
}

/// Trace norm of a 2x2 Hermitian matrix with diagonal (a, c) and
/// off-diagonal b: 2 max(|m|, r) for m = (a+c)/2, r = sqrt(((a-c)/2)^2 + |b|^2).
fn trace_norm_2x2(a: f64, c: f64, b_re: f64, b_im: f64) -> f64 {
    let m = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b_re * b_re + b_im * b_im).sqrt();
    2.0 * m.abs().max(r)
}

#[test]
fn randomized_invariant_suites_hold() {
    criterion(9, 600, |fails| {
        // Eigensolver invariants on 1000 random Hermitian matrices.
        let mut eig_bad = 0usize;
        for dim in 2..=6usize {
            for i in 0..200u64 {
                let m = random_hermitian(dim, derive_seed(97000, dim as u64 * 1000 + i)).unwrap();
                let (vals, vecs) = hermitian_eig(&m).unwrap();
                let sorted = vals.windows(2).all(|w| w[0] >= w[1] - 1e-12);
                let gram = vecs.adjoint().mul(&vecs);
                let orthonormal =
                    gram.sub(&ComplexMatrix::identity(dim)).max_abs_entry() < 1e-9;
                let recon = vecs
                    .mul(&ComplexMatrix::from_diagonal(&vals))
                    .mul(&vecs.adjoint());
                let reconstructs =
                    recon.sub(&m).max_abs_entry() < 1e-9 * m.max_abs_entry().max(1.0);
                if !(sorted && orthonormal && reconstructs) {
                    eig_bad += 1;
                }
            }
        }
        if eig_bad > 0 {
            fails.push(format!("{eig_bad}/1000 eigensolver instances violated invariants"));
        }

        // Holevo quantity: concave in the distribution (100 instances) and
        // convex in the channel (100 instances).
        let mut chi_bad = 0usize;
        for i in 0..100u64 {
            let outputs: Vec<DensityMatrix> = (0..3)
                .map(|j| random_density_matrix(3, 3, derive_seed(95100 + j, i)).unwrap())
                .collect();
            let p = SimplexWeights::projected(&[0.2 + 0.6 * ((i % 7) as f64 / 6.0), 0.3, 0.5]);
            let q = SimplexWeights::projected(&[0.1, 0.1 + 0.8 * ((i % 5) as f64 / 4.0), 0.4]);
            let alpha = 0.35;
            let mixed = SimplexWeights::projected(
                &p.as_slice()
                    .iter()
                    .zip(q.as_slice())
                    .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                    .collect::<Vec<_>>(),
            );
            let chi_p = holevo_chi(&outputs, &p).unwrap();
            let chi_q = holevo_chi(&outputs, &q).unwrap();
            let chi_m = holevo_chi(&outputs, &mixed).unwrap();
            if chi_m < alpha * chi_p + (1.0 - alpha) * chi_q - 1e-9 {
                chi_bad += 1;
            }
        }
        for i in 0..100u64 {
            let p = SimplexWeights::uniform(2);
            let inputs = [
                DensityMatrix::from_pure(&random_pure_state(2, derive_seed(96100, i)).unwrap()),
                DensityMatrix::from_pure(&random_pure_state(2, derive_seed(96200, i)).unwrap()),
            ];
            let n = random_channel(2, 3, 2, derive_seed(96300, i)).unwrap();
            let m = random_channel(2, 3, 2, derive_seed(96400, i)).unwrap();
            let alpha = 0.25 + 0.5 * ((i % 11) as f64 / 10.0);
            let w = SimplexWeights::projected(&[alpha, 1.0 - alpha]);
            let mixed = QuantumChannel::mix(&[n.clone(), m.clone()], &w).unwrap();
            let out = |ch: &QuantumChannel| -> Vec<DensityMatrix> {
                inputs.iter().map(|r| ch.apply(r).unwrap()).collect()
            };
            let chi_mix = holevo_chi(&out(&mixed), &p).unwrap();
            let chi_n = holevo_chi(&out(&n), &p).unwrap();
            let chi_m = holevo_chi(&out(&m), &p).unwrap();
            if chi_mix > alpha * chi_n + (1.0 - alpha) * chi_m + 1e-9 {
                chi_bad += 1;
            }
        }
        if chi_bad > 0 {
            fails.push(format!("{chi_bad}/200 Holevo curvature instances failed"));
        }

        // Inner minimization against a brute-force grid with the
        // closed-form 2x2 trace norm (50 instances).
        let mut inner_bad = 0usize;
        for i in 0..50u64 {
            let n0 = random_channel(2, 2, 2, derive_seed(93100, i)).unwrap();
            let n1 = random_channel(2, 2, 2, derive_seed(93200, i)).unwrap();
            let family = Avqc::new("pair", vec![n0.clone(), n1.clone()]).unwrap();
            let rho =
                DensityMatrix::from_pure(&random_pure_state(2, derive_seed(93300, i)).unwrap());
            let sigma =
                DensityMatrix::from_pure(&random_pure_state(2, derive_seed(93400, i)).unwrap());
            let sol = inner_min(&family, 1, &rho, &sigma, &InnerOptions::full()).unwrap();

            let mut x = ComplexMatrix::zeros(2, 2);
            for (s, ch) in family.channels().iter().enumerate() {
                x = x
                    .add(&ch.apply_matrix(rho.matrix()).scale(sol.p.get(s)))
                    .sub(&ch.apply_matrix(sigma.matrix()).scale(sol.q.get(s)));
            }
            let consistent = (trace_norm(&x).unwrap() - sol.value).abs() < 1e-8;

            let a0 = n0.apply_matrix(rho.matrix());
            let a1 = n1.apply_matrix(rho.matrix());
            let b0 = n0.apply_matrix(sigma.matrix());
            let b1 = n1.apply_matrix(sigma.matrix());
            let base = a1.sub(&b1);
            let dp = a0.sub(&a1);
            let dq = b0.sub(&b1);
            let mut grid_min = f64::INFINITY;
            let steps = 1000usize;
            for ip in 0..=steps {
                let p0 = ip as f64 / steps as f64;
                let a_p = base.get(0, 0).re + p0 * dp.get(0, 0).re;
                let c_p = base.get(1, 1).re + p0 * dp.get(1, 1).re;
                let b_p_re = base.get(0, 1).re + p0 * dp.get(0, 1).re;
                let b_p_im = base.get(0, 1).im + p0 * dp.get(0, 1).im;
                for iq in 0..=steps {
                    let q0 = iq as f64 / steps as f64;
                    let v = trace_norm_2x2(
                        a_p - q0 * dq.get(0, 0).re,
                        c_p - q0 * dq.get(1, 1).re,
                        b_p_re - q0 * dq.get(0, 1).re,
                        b_p_im - q0 * dq.get(0, 1).im,
                    );
                    if v < grid_min {
                        grid_min = v;
                    }
                }
            }
            if !consistent || (sol.value - grid_min).abs() > 2e-3 {
                inner_bad += 1;
            }
        }
        if inner_bad > 0 {
            fails.push(format!(
                "{inner_bad}/50 inner minimizations disagreed with the grid oracle"
            ));
        }
    });
}
