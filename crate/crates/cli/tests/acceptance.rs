#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdiode::model::{spectrum, validate_config, AuxBath, AuxConfig, DiodeConfig, RawConfig};
use qdiode::observables::{
    critical_fraction, baseline_current, effective_left_frequency, heat_current_dynamic, mixed_current,
    rectification_closed_form, rectification_numeric, rectification_weak_aux_bath, zero_rectification_frequency,
};
use qdiode::rates::{full_generator, offdiagonal_blocks};
use qdiode::solver::{
    evolve, steady_numeric, steady_state, steady_subspace_analytic, AuxPreparation, DensityState, SubspaceWeights,
};
use qdiode::sweep::{figure_preset, initial_state, Grid};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_device(rng: &mut ChaCha8Rng, n_aux: usize) -> DiodeConfig {
    let raw = RawConfig {
        n_aux,
        omega_left: rng.random_range(1.5..6.0),
        omega_right: rng.random_range(1.0..6.0),
        omega_aux: (0..n_aux).map(|_| rng.random_range(0.5..5.0)).collect(),
        g_lr: rng.random_range(-0.3..0.3),
        g_la: (0..n_aux).map(|_| rng.random_range(-0.1..0.1)).collect(),
        gamma: rng.random_range(1e-4..1e-2),
        temp_left: rng.random_range(0.2..2.0),
        temp_right: rng.random_range(0.2..2.0),
        aux_bath: None,
    };
    validate_config(raw).expect("sampled device is valid")
}

fn random_weights(rng: &mut ChaCha8Rng, n_aux: usize) -> SubspaceWeights {
    let raw: Vec<f64> = (0..1 << n_aux).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    SubspaceWeights::new(raw.iter().map(|x| x / total).collect()).unwrap()
}

/// The 200 devices shared by the first two checks.
fn sampled_devices() -> Vec<(DiodeConfig, SubspaceWeights)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..=3)
        .flat_map(|n| (0..50).map(move |_| n))
        .map(|n| {
            let c = random_device(&mut rng, n);
            let w = random_weights(&mut rng, n);
            (c, w)
        })
        .collect()
}

fn fig_grid(id: &str) -> Vec<f64> {
    figure_preset(id).unwrap().grid.values()
}

fn closed_form_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (config, weights) in sampled_devices() {
        let layout = config.layout();
        let mut analytic = vec![0.0; layout.dim()];
        for m in 1..=layout.subspace_count() {
            let rho = steady_subspace_analytic(&config, m).map_err(|e| e.to_string())?;
            for (level, p) in layout.subspace_levels(m).iter().zip(rho) {
                analytic[level.zero_based()] = weights.get(m) * p;
            }
        }
        let numeric = steady_numeric(&full_generator(&config), Some(&weights)).map_err(|e| e.to_string())?;
        for (a, b) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(worst < 1e-10, "max deviation {worst:.3e}");
    ensure!(elapsed < 60.0, "took {elapsed:.1} s");
    Ok(format!("200 devices, max deviation {worst:.2e}, {elapsed:.2} s"))
}

fn first_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for (config, weights) in sampled_devices() {
        let r = steady_state(&config, Some(&AuxPreparation::ClassicalWeights(weights))).map_err(|e| e.to_string())?;
        let ratio = (r.heat_left + r.heat_right).abs() / config.gamma().max(r.heat_left.abs());
        worst = worst.max(ratio);
    }
    ensure!(worst < 1e-12, "worst |Q_L + Q_R| / max(gamma, |Q_L|) = {worst:.3e}");
    Ok(format!("worst normalized imbalance {worst:.2e}"))
}

fn equilibrium() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_q, mut worst_ratio): (f64, f64) = (0.0, 0.0);
    for n in 0..=3 {
        for _ in 0..25 {
            let t = rng.random_range(0.2..2.0);
            let config = random_device(&mut rng, n).with_temperatures(t, t).unwrap();
            let weights = random_weights(&mut rng, n);
            let r = steady_state(&config, Some(&AuxPreparation::ClassicalWeights(weights))).map_err(|e| e.to_string())?;
            worst_q = worst_q.max(r.heat_left.abs() / config.gamma());
            let e = spectrum(&config);
            let layout = config.layout();
            for (m, rho) in r.subspace_populations.iter().enumerate() {
                let levels = layout.subspace_levels(m + 1);
                for k in 1..4 {
                    let boltzmann = (-(e.energy(levels[k]) - e.energy(levels[0])) / t).exp();
                    worst_ratio = worst_ratio.max((rho[k] / rho[0] / boltzmann - 1.0).abs());
                }
            }
        }
    }
    ensure!(worst_q < 1e-14, "|Q_L|/gamma = {worst_q:.3e}");
    ensure!(worst_ratio < 1e-10, "Gibbs ratio error {worst_ratio:.3e}");
    Ok(format!("100 devices, |Q_L|/gamma <= {worst_q:.1e}, Gibbs ratio error {worst_ratio:.2e}"))
}

fn closed_form_rectification() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (wl, wr) in [(4.0, 2.0), (2.0, 4.0)] {
        for n in 1..=10 {
            let base = validate_config(RawConfig::pair(wl, wr, 0.1, 0.001, 0.5, 0.5).with_uniform_aux(n, 2.0, 0.05)).unwrap();
            for t in fig_grid("5") {
                let config = base.with_temperatures(t, 0.5).unwrap();
                for aux in [AuxConfig::all_excited(n), AuxConfig::all_ground(n)] {
                    let closed = rectification_closed_form(&config, aux).map_err(|e| e.to_string())?.factor;
                    let numeric = rectification_numeric(&config, Some(&AuxPreparation::definite(aux)))
                        .map_err(|e| e.to_string())?
                        .factor;
                    worst = worst.max((closed - numeric).abs());
                    count += 1;
                }
            }
        }
    }
    ensure!(worst < 1e-8, "max |R_closed - R_numeric| = {worst:.3e}");
    Ok(format!("{count} points, max difference {worst:.2e}"))
}

fn zero_rectification_point() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let config = validate_config(RawConfig::pair(4.0, 4.0, 0.2, 0.001, 0.3, 0.5).with_uniform_aux(n, 2.0, 0.02)).unwrap();
        for aux in [AuxConfig::all_excited(n), AuxConfig::all_ground(n)] {
            let target = effective_left_frequency(&config, aux);
            let root = zero_rectification_frequency(&config, aux, target - 0.5, target + 0.5, 1e-10)
                .map_err(|e| e.to_string())?;
            worst = worst.max((root - target).abs());
        }
    }
    ensure!(worst < 1e-6, "max |root - omega'_L| = {worst:.3e}");
    Ok(format!("6 roots, max offset {worst:.2e}"))
}

fn heat_current_trends() -> Outcome {
    let mut summary = Vec::new();
    for (state, prep, decreasing) in [("excited", AuxPreparation::AllExcited, true), ("ground", AuxPreparation::AllGround, false)] {
        let q: Vec<f64> = (1..=5)
            .map(|n| {
                let c = validate_config(RawConfig::pair(4.0, 2.0, 0.1, 0.001, 1.0, 0.5).with_uniform_aux(n, 2.0, 0.05)).unwrap();
                steady_state(&c, Some(&prep)).map(|r| r.heat_left.abs())
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let monotone = q.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
        ensure!(monotone, "{state}: {q:?}");
        summary.push(format!("{state} {:.4e} -> {:.4e}", q[0], q[4]));
    }
    Ok(summary.join(", "))
}

fn coherence_irrelevance() -> Outcome {
    let config = validate_config(RawConfig::pair(5.0, 3.0, 1.0, 0.001, 2.0, 1.0).with_uniform_aux(1, 2.0, 0.5)).unwrap();
    let a = Complex64::new(0.5f64.sqrt(), 0.0);
    let state = |prep: AuxPreparation| initial_state(&config, &prep).map_err(|e| e.to_string());
    let pure = state(AuxPreparation::ProductPure(vec![(a, a)]))?;
    let mixed = state(AuxPreparation::product_mixed(&[0.5]).map_err(|e| e.to_string())?)?;
    let t_final = 20_000.0;
    let last = |rho: &DensityState| evolve(&config, rho, &[0.0, t_final]).map(|t| t.states[1].clone());
    let (p, m) = (last(&pure).map_err(|e| e.to_string())?, last(&mixed).map_err(|e| e.to_string())?);
    let (qp, qm) = (heat_current_dynamic(&config, &p).left, heat_current_dynamic(&config, &m).left);
    let coherence = p.max_coherence().max(m.max_coherence());
    ensure!((qp - qm).abs() < 1e-8, "Q_L pure {qp:e} vs mixed {qm:e}");
    ensure!(coherence < 1e-10, "max coherence {coherence:.3e} at t = {t_final}");
    Ok(format!("|dQ_L| = {:.2e}, max coherence {coherence:.2e} at t = {t_final}", (qp - qm).abs()))
}

fn type_degeneracy() -> Outcome {
    let base = validate_config(RawConfig::pair(4.0, 2.0, 0.1, 0.001, 0.5, 0.5).with_uniform_aux(3, 2.0, 0.1)).unwrap();
    let mut worst: f64 = 0.0;
    for t in fig_grid("7") {
        let config = base.with_temperatures(t, 0.5).unwrap();
        let r = |label: &str| -> Result<f64, String> {
            let aux = AuxConfig::from_label(label).unwrap();
            rectification_numeric(&config, Some(&AuxPreparation::definite(aux)))
                .map(|r| r.factor)
                .map_err(|e| e.to_string())
        };
        let mut types = Vec::new();
        for group in [&["eee"][..], &["eeg", "ege", "gee"], &["egg", "geg", "gge"], &["ggg"]] {
            let values = group.iter().map(|l| r(l)).collect::<Result<Vec<_>, _>>()?;
            for v in &values {
                worst = worst.max((v - values[0]).abs());
            }
            types.push(values[0]);
        }
        let (hi, lo) = (types[0], types[3]);
        let (min, max) = (lo.min(hi), lo.max(hi));
        ensure!(
            types.iter().all(|&x| x >= min - 1e-12 && x <= max + 1e-12),
            "T_L = {t}: types {types:?} outside [{min}, {max}]"
        );
        ensure!(types.windows(2).all(|w| w[1] <= w[0] + 1e-12), "T_L = {t}: types not ordered {types:?}");
    }
    ensure!(worst < 1e-12, "max |dR| within a type = {worst:.3e}");
    Ok(format!("max |dR| within a type {worst:.2e}, four types ordered between the bounds"))
}

fn null_design() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in fig_grid("5") {
        let config = validate_config(RawConfig::pair(4.0, 2.0, 0.1, 0.001, t, 0.5).with_uniform_aux(2, 2.0, 0.05)).unwrap();
        let with = rectification_numeric(&config, Some(&AuxPreparation::definite(AuxConfig::from_label("eg").unwrap())))
            .map_err(|e| e.to_string())?
            .factor;
        let without = rectification_numeric(&config.without_aux(), None).map_err(|e| e.to_string())?.factor;
        worst = worst.max((with - without).abs());
    }
    ensure!(worst < 1e-10, "max |R - R_no_aux| = {worst:.3e}");
    Ok(format!("max |R - R_no_aux| {worst:.2e}"))
}

fn critical_fraction_check() -> Outcome {
    let config = validate_config(RawConfig::pair(4.0, 2.0, 0.1, 0.001, 0.3, 0.5).with_uniform_aux(1, 2.0, 0.1)).unwrap();
    let p_c = critical_fraction(&config).map_err(|e| e.to_string())?;
    let gap = (mixed_current(&config, p_c.clamp(0.0, 1.0)).map_err(|e| e.to_string())? - baseline_current(&config).map_err(|e| e.to_string())?).abs();
    ensure!((0.0..=1.0).contains(&p_c), "p_c = {p_c} outside [0, 1]");
    ensure!(gap < 1e-10, "|Q(p_c) - Q'_L| = {gap:.3e}");
    Ok(format!("p_c = {p_c:.6}, |Q(p_c) - Q'_L| = {gap:.2e}"))
}

fn aux_bath_convergence() -> Outcome {
    let gamma: f64 = 0.001;
    let device = |gamma_aux: f64, t: f64| {
        validate_config(RawConfig {
            aux_bath: Some(AuxBath { gamma_aux, temp_aux: 0.8 }),
            ..RawConfig::pair(4.0, 1.0, 0.1, gamma, t, 0.5).with_uniform_aux(1, 5.0, 0.1)
        })
        .unwrap()
    };
    let Grid::Range { min, max, count } = figure_preset("8").unwrap().grid else {
        return Err("figure 8 grid is not a range".into());
    };
    let mut ratios = Vec::new();
    for k in 0..count {
        let t = min + (max - min) * k as f64 / (count - 1) as f64;
        let square = device(gamma * gamma, t);
        let kernel = full_generator(&square).kernel_dimension(1e-12);
        ensure!(kernel == 1, "kernel dimension {kernel} at T_L = {t}");
        let reference = rectification_weak_aux_bath(&square).map_err(|e| e.to_string())?.factor;
        let r2 = rectification_numeric(&square, None).map_err(|e| e.to_string())?.factor;
        let r3 = rectification_numeric(&device(gamma.powi(3), t), None).map_err(|e| e.to_string())?.factor;
        let (d2, d3) = ((r2 - reference).abs(), (r3 - reference).abs());
        ensure!(d3 < d2, "T_L = {t}: |R3 - R0| = {d3:e} not below |R2 - R0| = {d2:e}");
        ratios.push(d3 / d2);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{count} temperatures, kernel 1-dimensional, worst |R3-R0|/|R2-R0| = {worst:.2e}"))
}

fn offdiagonal_decay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut blocks, mut slowest, mut smallest_det) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..100 {
        let config = random_device(&mut rng, k % 4);
        for b in offdiagonal_blocks(&config) {
            let det = b.determinant().norm();
            let top = b.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            ensure!(det > 0.0 && det.is_finite(), "singular block {:?}", b.elements);
            ensure!(top < 0.0, "eigenvalue real part {top} in block {:?}", b.elements);
            slowest = slowest.max(top);
            smallest_det = smallest_det.min(det);
            blocks += 1;
        }
    }
    Ok(format!("{blocks} blocks, slowest decay {slowest:.3e}, min |det| {smallest_det:.2e}"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qdiode"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "qdiode {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let first = run_cli(&["figure", "6"])?;
    let second = run_cli(&["figure", "6"])?;
    ensure!(first == second, "two runs of figure 6 differ");
    let parallel = run_cli(&["figure", "6", "--threads", "8"])?;
    let serial = run_cli(&["figure", "6", "--threads", "1"])?;
    ensure!(parallel == serial, "--threads 8 differs from serial");
    ensure!(first == serial, "default run differs from serial");
    Ok(format!("{} identical bytes across 4 runs", first.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("closed-form and nullspace steady states agree", closed_form_equivalence),
        ("first law at stationarity", first_law),
        ("equilibrium: no current, Gibbs subspaces", equilibrium),
        ("closed-form rectification matches numeric", closed_form_rectification),
        ("zero rectification at the effective frequency", zero_rectification_point),
        ("heat current trends with N", heat_current_trends),
        ("coherences do not affect the steady current", coherence_irrelevance),
        ("four degenerate types between the bounds", type_degeneracy),
        ("balanced auxiliary atoms change nothing", null_design),
        ("critical fraction restores the baseline current", critical_fraction_check),
        ("weak auxiliary bath converges to the bath-free device", aux_bath_convergence),
        ("coherence blocks are nonsingular and decaying", offdiagonal_decay),
        ("figure output is deterministic, parallel equals serial", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
