//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::SymmetricEigen;
use rand::Rng;

use common::{dense, gaussian_local, random_code, rng};
use convsparse::build_global;
use convsparse::conv_dict::{ConvDictionary, SparseCode};
use convsparse::dictgen::low_coherence_local;
use convsparse::harness::*;
use convsparse::measures::*;
use convsparse::pursuit::*;
use convsparse::spark::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn welch_value() -> Outcome {
    let w = welch_lower_bound(64, 2);
    ensure!((w - 0.0629).abs() <= 0.0005, "welch(64, 2) = {w}");
    ensure!((w - 0.063).abs() <= 0.0005, "welch(64, 2) = {w} is not about 0.063");
    Ok(format!("welch(64, 2) = {w:.5}"))
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 64,
        m: 2,
        signal_len: 640,
        card_lo: 1,
        card_hi: 12,
        card_step: 1,
        trials_per_cardinality: 200,
        extra_blocks: vec![
            SweepBlock { card_lo: 20, card_hi: 50, card_step: 5, trials: 40 },
            SweepBlock { card_lo: 100, card_hi: 400, card_step: 50, trials: 15 },
        ],
        seed: 2024,
        solvers: vec![SolverKind::Omp, SolverKind::Bp],
        omp_res_tol: 1e-9,
        bp: BpConfig { max_iters: 4000, ..BpConfig::default() },
        dictionary: DictionarySource::LowCoherence { iters: 2000 },
        timeout_secs: 120.0,
    }
}

struct Sweep {
    dict: ConvDictionary,
    table: PhaseTransitionTable,
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let cfg = sweep_config();
        let dict = cfg.build_dictionary().expect("dictionary");
        let table = run_phase_transition_on(&cfg, &dict, 0).expect("sweep");
        Sweep { dict, table }
    })
}

fn guaranteed_region() -> Outcome {
    let s = sweep();
    let mu = s.table.metadata.mu;
    let oracle_mu = common::mu_oracle(&s.dict.materialize_dense().map_err(|e| e.to_string())?);
    ensure!((mu - oracle_mu).abs() < 1e-12, "reported μ {mu} vs dense Gram {oracle_mu}");
    ensure!(mu <= 0.12, "μ = {mu} exceeds 0.12");
    let bound = 0.5 * (1.0 + 1.0 / mu);
    ensure!((s.table.metadata.bound - bound).abs() < 1e-12, "table bound {}", s.table.metadata.bound);
    let mut trials = 0;
    for row in s.table.rows.iter().filter(|r| (r.l0_inf as f64) < bound) {
        ensure!(row.errors == 0, "bin {}: {} errored trials", row.l0_inf, row.errors);
        ensure!(row.omp_successes == row.count, "bin {}: OMP {}/{}", row.l0_inf, row.omp_successes, row.count);
        ensure!(row.bp_successes == row.count, "bin {}: BP {}/{}", row.l0_inf, row.bp_successes, row.count);
        trials += row.count;
    }
    ensure!(trials >= 2000, "only {trials} trials below the bound");
    Ok(format!("μ = {mu:.4}, bound = {bound:.3}, {trials} trials, 0 failures"))
}

fn phase_transition_shape() -> Outcome {
    let s = sweep();
    let bound = s.table.metadata.bound;
    let target = (2.0 * bound).ceil() as usize;
    let row = s.table.row(target).ok_or_else(|| format!("no trials at ℓ0,∞ = {target}"))?;
    ensure!(row.count >= 20, "only {} trials at ℓ0,∞ = {target}", row.count);
    let (omp_at, bp_at) = (row.omp_success_rate.unwrap(), row.bp_success_rate.unwrap());
    ensure!(omp_at >= 0.95 && bp_at >= 0.95, "at ℓ0,∞ = {target}: OMP {omp_at}, BP {bp_at}");

    let tail: Vec<&PhaseRow> = s.table.rows.iter().filter(|r| r.l0_inf >= 70).collect();
    let count: usize = tail.iter().map(|r| r.count).sum();
    ensure!(count >= 20, "only {count} trials with ℓ0,∞ ≥ 70");
    let omp_tail = tail.iter().map(|r| r.omp_successes).sum::<usize>() as f64 / count as f64;
    let bp_tail = tail.iter().map(|r| r.bp_successes).sum::<usize>() as f64 / count as f64;
    ensure!(omp_tail <= 0.5 && bp_tail <= 0.5, "ℓ0,∞ ≥ 70: OMP {omp_tail}, BP {bp_tail}");
    Ok(format!(
        "ℓ0,∞ = {target} ({} trials): OMP {omp_at:.3}, BP {bp_at:.3}; ℓ0,∞ ≥ 70 ({count} trials): OMP {omp_tail:.3}, BP {bp_tail:.3}",
        row.count
    ))
}

fn stripe_spark_bound() -> Outcome {
    let shapes: [(usize, usize, &[usize]); 5] = [
        (2, 2, &[5, 6, 7, 8]),
        (3, 2, &[5, 6, 7, 8]),
        (2, 3, &[5, 6]),
        (3, 3, &[5, 6]),
        (4, 2, &[7, 8, 9, 10]),
    ];
    let (mut tested, mut cross_checked) = (0, 0);
    for seed in 0..4u64 {
        for &(n, m, lens) in &shapes {
            for &len in lens {
                let local = gaussian_local(n, m, &mut rng(seed * 7919 + (n * 100 + m * 10 + len) as u64));
                let d = build_global(local.clone(), len).map_err(|e| e.to_string())?;
                let mu = common::mu_oracle(&dense(&local, len));
                let cert = stripe_spark_bruteforce(&d, d.num_atoms()).map_err(|e| e.to_string())?;
                let Some(sigma) = cert.value else { continue };
                ensure!(
                    sigma as f64 >= 1.0 + 1.0 / mu - 1e-9,
                    "n={n} m={m} N={len}: σ∞ = {sigma} < 1 + 1/μ = {}",
                    1.0 + 1.0 / mu
                );
                if len * m <= 12 {
                    let oracle = common::stripe_spark_oracle(&local, len);
                    ensure!(oracle == Some(sigma), "n={n} m={m} N={len}: library {sigma} vs oracle {oracle:?}");
                    cross_checked += 1;
                }
                tested += 1;
            }
        }
    }
    ensure!(tested >= 50, "only {tested} dictionaries terminated");
    Ok(format!("{tested} dictionaries, {cross_checked} also matched the independent enumeration"))
}

fn gram_bracket() -> Outcome {
    let mut r = rng(5);
    let draws = 1500;
    for t in 0..draws {
        let (n, m) = (r.random_range(2..7), r.random_range(1..4));
        let len = r.random_range(2 * n - 1..4 * n);
        let local = gaussian_local(n, m, &mut r);
        let dm = dense(&local, len);
        let card = r.random_range(1..=len.min(8));
        let mut support: Vec<usize> = rand::seq::index::sample(&mut r, len * m, card).into_vec();
        support.sort_unstable();

        let mu = common::mu_oracle(&dm);
        let k = common::l0_inf_of_support_oracle(&support, n, m, len);
        let sub = common::columns(&dm, &support);
        let eig = SymmetricEigen::new(sub.transpose() * &sub).eigenvalues;
        let (lo, hi) = (1.0 - (k - 1) as f64 * mu, 1.0 + (k - 1) as f64 * mu);
        if let Some(l) = eig.iter().find(|&&l| l < lo - 1e-9 || l > hi + 1e-9) {
            return Err(format!("draw {t}: eigenvalue {l} outside [{lo}, {hi}]"));
        }
        let d = build_global(local, len).map_err(|e| e.to_string())?;
        let rep = verify_gershgorin(&d, &support).map_err(|e| e.to_string())?;
        ensure!(rep.k == k && rep.within, "draw {t}: library report k={} within={}", rep.k, rep.within);
    }
    Ok(format!("{draws} draws, all eigenvalues within the bracket"))
}

fn l0inf_properties() -> Outcome {
    let mut r = rng(6);
    let pairs = 10_000;
    for t in 0..pairs {
        let (n, m) = (r.random_range(1..6), r.random_range(1..4));
        let len = r.random_range(n..n + 20);
        let a = random_code(len, m, r.random_range(0..=len * m / 2), &mut r);
        let b = random_code(len, m, r.random_range(0..=len * m / 2), &mut r);
        let sum: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
        let lhs = common::l0_inf_oracle(&sum, n, m, len);
        let (la, lb) = (l0_inf(&a, n), l0_inf(&b, n));
        ensure!(la == common::l0_inf_oracle(a.values(), n, m, len), "pair {t}: library ℓ0,∞ disagrees");
        ensure!(lhs <= la + lb, "pair {t}: {lhs} > {la} + {lb}");
    }
    let code = SparseCode::from_entries(10, 2, &[(0, 0, 1.0), (1, 1, -2.0)]).unwrap();
    let doubled = SparseCode::from_values(10, 2, code.values().iter().map(|v| 2.0 * v).collect()).unwrap();
    let (one, two) = (l0_inf(&code, 3), l0_inf(&doubled, 3));
    ensure!(one == 2 && two == 2, "witness ℓ0,∞ values {one}, {two}");
    Ok(format!("{pairs} pairs, 0 violations; ‖2Γ‖0,∞ = ‖Γ‖0,∞ = {one} ≠ 2·{one}"))
}

fn shifted_coherence_properties() -> Outcome {
    let mut r = rng(7);
    let dicts = 150;
    for t in 0..dicts {
        let (n, m) = (r.random_range(1..8), r.random_range(1..4));
        if n * m == 1 {
            continue;
        }
        let local = gaussian_local(n, m, &mut r);
        let p = shifted_coherence_profile(&local).map_err(|e| e.to_string())?;
        let top = p.shifts().map(|(_, v)| v).fold(0.0, f64::max);
        for s in 0..n as isize {
            ensure!(p.mu(s) == p.mu(-s), "dict {t}: μ_{s} ≠ μ_-{s}");
            ensure!((p.mu(s) - common::mu_s_oracle(&local, s)).abs() < 1e-12, "dict {t}: μ_{s} vs Gram");
        }
        for len in [2 * n - 1, 2 * n + 3] {
            let global = common::mu_oracle(&dense(&local, len));
            ensure!((top - global).abs() < 1e-12, "dict {t}, N={len}: max μ_s {top} vs μ(D) {global}");
        }
        ensure!(p.mu0 <= p.mu_global + 1e-15, "dict {t}: μ0 {} > μ {}", p.mu0, p.mu_global);
    }

    let codes = 1500;
    for t in 0..codes {
        let (n, m) = (r.random_range(1..7), r.random_range(1..4));
        let len = r.random_range(n..n + 25);
        let local = gaussian_local(n, m, &mut r);
        let p = profile_or_zero(&local);
        let code = random_code(len, m, r.random_range(0..=len * m), &mut r);
        let conv = stripe_coherence_conv(&code, &p).map_err(|e| e.to_string())?;
        let direct = stripe_coherence_direct(&code, &p).map_err(|e| e.to_string())?;
        let oracle = common::stripe_coherence_oracle(code.values(), n, m, len, |s| p.mu(s));
        for i in 0..len {
            ensure!((conv.zeta[i] - direct.zeta[i]).abs() <= 1e-12, "code {t}, stripe {i}: conv vs direct");
            ensure!((direct.zeta[i] - oracle[i]).abs() <= 1e-12, "code {t}, stripe {i}: direct vs oracle");
        }
    }
    Ok(format!("{dicts} dictionaries, {codes} codes"))
}

fn stripe_coherence_monotone() -> Outcome {
    let mut r = rng(8);
    let pairs = 2000;
    for t in 0..pairs {
        let (n, m) = (r.random_range(1..7), r.random_range(1..4));
        let len = r.random_range(n..n + 25);
        let p = profile_or_zero(&gaussian_local(n, m, &mut r));
        let big = random_code(len, m, r.random_range(0..=len * m), &mut r);
        let small_values: Vec<f64> =
            big.values().iter().map(|&v| if v != 0.0 && r.random_bool(0.5) { v } else { 0.0 }).collect();
        let small = SparseCode::from_values(len, m, small_values).unwrap();
        let zs = common::stripe_coherence_oracle(small.values(), n, m, len, |s| p.mu(s));
        let zb = common::stripe_coherence_oracle(big.values(), n, m, len, |s| p.mu(s));
        let lib_small = stripe_coherence(&small, &p).map_err(|e| e.to_string())?.max();
        let lib_big = stripe_coherence(&big, &p).map_err(|e| e.to_string())?.max();
        ensure!(zs.iter().zip(&zb).all(|(a, b)| a <= b), "pair {t}: some stripe decreased");
        ensure!(lib_small <= lib_big, "pair {t}: max {lib_small} > {lib_big}");
    }
    Ok(format!("{pairs} nested pairs, 0 violations"))
}

fn dominance() -> Outcome {
    let mut r = rng(9);
    let (mut dicts, mut codes, mut draws) = (0, 0, 0);
    while dicts < 120 {
        draws += 1;
        ensure!(draws < 100_000, "rejection sampling found only {dicts} dictionaries");
        let (n, m) = (r.random_range(2..5), r.random_range(2..5));
        let local = gaussian_local(n, m, &mut r);
        let p = shifted_coherence_profile(&local).map_err(|e| e.to_string())?;
        if (p.mu_global - p.mu0).abs() > 1e-12 {
            continue;
        }
        dicts += 1;
        let len = 6 * n;
        let bound = 0.5 * (1.0 + 1.0 / p.mu_global);
        let mut kept = 0;
        for _ in 0..200 {
            if kept == 12 {
                break;
            }
            let code = random_code(len, m, r.random_range(1..5), &mut r);
            if (common::l0_inf_oracle(code.values(), n, m, len) as f64) >= bound {
                continue;
            }
            kept += 1;
            let zeta = common::stripe_coherence_oracle(code.values(), n, m, len, |s| p.mu(s));
            let top = zeta.iter().copied().fold(0.0, f64::max);
            ensure!(top < 0.5 * (1.0 + p.mu0), "stripe condition fails: {top} vs {}", 0.5 * (1.0 + p.mu0));
            let rep = guarantee_dominance_check(&code, &p).map_err(|e| e.to_string())?;
            ensure!(rep.applicable && rep.l0inf_ok && !rep.counterexample, "library report {rep:?}");
        }
        codes += kept;
    }
    ensure!(codes >= 1000, "only {codes} codes met the ℓ0,∞ condition");
    Ok(format!("{dicts} dictionaries ({draws} drawn), {codes} codes, 0 violations"))
}

fn solver_oracles() -> Outcome {
    let mut instances = 0;
    for seed in 0..30u64 {
        let (n, m, len) = [(3, 2, 8), (4, 2, 10), (5, 1, 16)][seed as usize % 3];
        let d = build_global(low_coherence_local(n, m, seed, 300).unwrap().dict, len).unwrap();
        let dm = d.materialize_dense().unwrap();
        let mu = common::mu_oracle(&dm);
        for t in 0..40u64 {
            let code = random_code(len, m, 1 + (t as usize % 3), &mut rng(seed * 1000 + t));
            if (common::l0_inf_oracle(code.values(), n, m, len) as f64) >= 0.5 * (1.0 + 1.0 / mu) {
                continue;
            }
            let x = d.apply(&code).unwrap();
            let p0 = common::p0_oracle(&dm, &x).ok_or("P0 oracle found no exact fit")?;
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let o = omp(&d, &x, OmpParams { max_iters: len, res_tol: 1e-10 * norm }).map_err(|e| e.to_string())?;
            let b = basis_pursuit(&d, &x, &BpParams::default()).map_err(|e| e.to_string())?;
            for (name, got) in [("OMP", &o.code), ("BP", &b.code)] {
                let gap = got.iter().zip(&p0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                ensure!(gap <= 1e-6, "{name} differs from P0 by {gap} (n={n}, m={m}, N={len}, seed {seed}, trial {t})");
            }
            instances += 1;
        }
    }
    ensure!(instances >= 200, "only {instances} guaranteed instances");

    let mut r = rng(10);
    let mut lp = 0;
    while lp < 200 {
        let (n, m) = (r.random_range(1..5), r.random_range(2..5));
        let len = r.random_range(n.max(2)..n + 5);
        if len * m > 16 {
            continue;
        }
        let local = gaussian_local(n, m, &mut r);
        let d = build_global(local.clone(), len).unwrap();
        let code = random_code(len, m, r.random_range(1..=len), &mut r);
        let x = d.apply(&code).unwrap();
        let oracle = common::lp_l1_oracle(&dense(&local, len), &x);
        let proj = Projector::new(&d, ProjectorKind::Dense).unwrap();
        let params = AdmmParams { max_iters: 200_000, eps_abs: 1e-11, eps_rel: 1e-11, ..AdmmParams::default() };
        let out = admm_l1(&d, &x, &proj, &params, None).map_err(|e| e.to_string())?;
        let l1: f64 = out.x.iter().map(|v| v.abs()).sum();
        ensure!(
            (l1 - oracle).abs() <= 1e-6 * oracle.max(1.0),
            "n={n} m={m} N={len}: ADMM ℓ1 {l1} vs LP {oracle} (converged {}, {} iterations, r {:e}, s {:e})", out.converged, out.iterations, out.primal_residual, out.dual_residual
        );
        lp += 1;
    }
    Ok(format!("{instances} P0 instances, {lp} LP instances"))
}

fn thread_reproducibility() -> Outcome {
    let cfg = ExperimentConfig {
        n: 3,
        m: 2,
        signal_len: 12,
        card_lo: 1,
        card_hi: 10,
        card_step: 1,
        trials_per_cardinality: 50,
        extra_blocks: Vec::new(),
        seed: 17,
        solvers: vec![SolverKind::Omp, SolverKind::Bp],
        omp_res_tol: 1e-9,
        bp: BpConfig::default(),
        dictionary: DictionarySource::Random,
        timeout_secs: 60.0,
    };
    let one = run_phase_transition(&cfg, 1).map_err(|e| e.to_string())?;
    let eight = run_phase_transition(&cfg, 8).map_err(|e| e.to_string())?;
    let (c1, c8) = (one.to_csv(), eight.to_csv());
    let (j1, j8) = (one.to_json().unwrap(), eight.to_json().unwrap());
    ensure!(c1.as_bytes() == c8.as_bytes(), "CSV tables differ");
    ensure!(j1.as_bytes() == j8.as_bytes(), "JSON tables differ");
    Ok(format!("{} trials, {} CSV bytes identical", cfg.total_trials(), c1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("welch bound value", welch_value),
        ("exact recovery in the guaranteed region", guaranteed_region),
        ("phase transition shape", phase_transition_shape),
        ("stripe-spark lower bound", stripe_spark_bound),
        ("gram eigenvalue bracket", gram_bracket),
        ("l0,inf triangle inequality and homogeneity", l0inf_properties),
        ("shifted coherence properties", shifted_coherence_properties),
        ("stripe coherence monotonicity", stripe_coherence_monotone),
        ("stripe condition dominance", dominance),
        ("solvers against brute-force oracles", solver_oracles),
        ("thread-count reproducibility", thread_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
