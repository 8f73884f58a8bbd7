//! Release gate: one line per acceptance criterion.
//!
//! Runs without the libtest harness so the lines always reach the terminal.
//! `--include-ignored` (or `SONOFLASH_LONG=1`) adds the long mode-sum check
//! of criterion 9.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use sonoflash_core::analytic::{
    coeff, effective_temperature, energy_sw_quadrature, model_energy, model_spectrum, FourierPath,
};
use sonoflash_core::engine::{spectrum_sweep, total_energy, EngineConfig};
use sonoflash_core::modes::{aux_im, normalization, Polarization, TruncationPolicy};
use sonoflash_core::physpar::{MediumSpec, RunParams, SI};
use sonoflash_core::profile::make_lorentzian;
use sonoflash_core::quad::Rule;
use sonoflash_core::specfun::{wronskian_residual, BesselSeries};

/// Criteria that cannot pass as written; each has a ledger entry. The gate
/// requires these to fail, so a fix shows up as a change here.
const KNOWN_UNATTAINABLE: &[u32] = &[6];

struct Line {
    id: u32,
    pass: bool,
    text: String,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn c1_wronskian() -> (bool, String) {
    let mut worst = (0.0f64, 0, 0.0);
    for x in log_grid(1e-2, 1e3, 60) {
        let j = BesselSeries::regular(200, x).unwrap();
        let y = BesselSeries::irregular(200, x).unwrap();
        for l in 0..=200 {
            let r = wronskian_residual(&j, &y, l).abs();
            if !(r <= worst.0) {
                worst = (r, l, x);
            }
        }
    }
    (
        worst.0 <= 1e-8,
        format!(
            "max |x^2 W - 1| = {:.1e} (l = {}, x = {:.3e}); tol 1e-8",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c2_born() -> (bool, String) {
    let mut worst = 0.0f64;
    for l in 1..=50 {
        for x in log_grid(0.5, 100.0, 25) {
            for pol in Polarization::BOTH {
                let d = (normalization(l, pol, 1.0, x).unwrap().s_inv - 1.0).norm();
                if !(d <= worst) {
                    worst = d;
                }
            }
        }
    }
    let mut ratios = (f64::INFINITY, f64::NEG_INFINITY);
    for l in [1, 10, 50] {
        for x in [0.5, 5.0, 50.0, 100.0] {
            for pol in Polarization::BOTH {
                let d1 = (normalization(l, pol, 1.0 + 2e-4, x).unwrap().s_inv - 1.0).norm();
                let d2 = (normalization(l, pol, 1.0 + 1e-4, x).unwrap().s_inv - 1.0).norm();
                let r = d1 / d2;
                ratios = (ratios.0.min(r), ratios.1.max(r));
            }
        }
    }
    (
        worst <= 1e-10 && ratios.0 >= 1.9 && ratios.1 <= 2.1,
        format!(
            "max |S^-1 - 1| at n = 1: {worst:.1e} (tol 1e-10); halving n - 1 ratio in [{:.4}, {:.4}] (want 2 ± 0.1)",
            ratios.0, ratios.1
        ),
    )
}

fn coefficient_points() -> Vec<f64> {
    let p = TruncationPolicy::default();
    [40.0, 50.0, 60.0, 70.0, 80.0]
        .iter()
        .map(|&kr| aux_im(kr, kr, 1.0, 1.0, 1.0 + 1e-4, &p).unwrap().re / (kr * kr))
        .collect()
}

fn c3_coefficient() -> (bool, String, Vec<f64>) {
    let v = coefficient_points();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let within = |c: f64| (mean / c - 1.0).abs() <= 0.10 && v.iter().all(|x| (x / c - 1.0).abs() <= 0.15);
    let quoted = within(coeff::SW_QUOTED);
    let configured = EngineConfig::default().sw_coefficient;
    // the fallback: the re-derived value is what the engine uses
    let fallback = !quoted && configured != coeff::SW_QUOTED && within(configured);
    let pts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    let how = if quoted {
        "within 1.16 ± 10%".to_string()
    } else {
        format!(
            "outside 1.16 ± 10%; fallback: configured sw_coefficient = {configured} holds mean ± 10% and points ± 15%"
        )
    };
    (
        quoted || fallback,
        format!(
            "mean ℑ/(kk'R^2) = {mean:.5} over kR = 40..80 [{}]; {how}",
            pts.join(", ")
        ),
        v,
    )
}

fn random_params(runner: &mut TestRunner) -> RunParams {
    let s = (1.0f64..2.0, -6.5f64..-4.0, 0.0f64..0.95, -15.5f64..-12.0);
    let (n, lr0, frac, lg) = s.new_tree(runner).unwrap().current();
    let (r0, g) = (10f64.powf(lr0), 10f64.powf(lg));
    RunParams::new(MediumSpec::Constant { n }, r0, frac * r0, g, 1000.0 * g, 500.0 * g).unwrap()
}

fn c4_closed_form_chain() -> (bool, String) {
    let mut runner = TestRunner::deterministic();
    let mut worst = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for _ in 0..20 {
        let p = random_params(&mut runner);
        let n = p.medium.max_index();
        let prof = make_lorentzian(&p).unwrap();
        let q = energy_sw_quadrature(&prof, n, coeff::SW_QUOTED, FourierPath::Analytic).unwrap();
        let w = model_energy(&p, coeff::SW_QUOTED).unwrap();
        // ∫Ω^4 Ω^2 ΔR^4 π^2 γ^2 e^{-2γΩ} dΩ = ΔR^4 π^2 γ^2 720/(2γ)^7
        let d = p.depth();
        let gamma_int = d * d * std::f64::consts::PI.powi(2) * p.gamma.powi(2) * 720.0 / (2.0 * p.gamma).powi(7);
        let oracle = coeff::SW_QUOTED * coeff::FOURIER_FORM * (n * n - 1.0).powi(2) / (n * n) * SI.hbar / SI.c.powi(4)
            * gamma_int;
        if w > 0.0 {
            worst = worst.max((q / w - 1.0).abs());
            oracle_gap = oracle_gap.max((oracle / w - 1.0).abs());
        }
    }
    (
        worst <= 1e-6 && oracle_gap <= 1e-12,
        format!("20 random sets: max rel gap quadrature vs closed form {worst:.1e} (tol 1e-6); Γ-integral oracle {oracle_gap:.1e}"),
    )
}

fn c5_energy_spectrum() -> (bool, String) {
    let mut runner = TestRunner::deterministic();
    let (mut gamma_gap, mut quad_gap) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let p = random_params(&mut runner);
        let s = model_spectrum(&p, coeff::SW_QUOTED).unwrap();
        let w = model_energy(&p, coeff::SW_QUOTED).unwrap();
        if w == 0.0 {
            continue;
        }
        // 1/64 · 6/(2γ)^4 = 3/512 / γ^4
        let gamma_check = s.amplitude * 6.0 / (2.0 * p.gamma).powi(4);
        let num = Rule::composite(0.0, 40.0 / p.gamma, 40, 8).integrate(|om| s.eval(om));
        gamma_gap = gamma_gap.max((gamma_check / w - 1.0).abs());
        quad_gap = quad_gap.max((num / w - 1.0).abs());
    }
    (
        gamma_gap <= 1e-9 && quad_gap <= 1e-9,
        format!("∫P dω vs W: Γ check {gamma_gap:.1e}, quadrature {quad_gap:.1e} (tol 1e-9)"),
    )
}

fn c6_temperature() -> (bool, String) {
    let t = effective_temperature(1e-15).unwrap();
    let exact = (t - 3818.0).abs() <= 1.0;
    let rough = (t / 4000.0 - 1.0).abs() <= 0.10;
    (
        exact && rough,
        format!(
            "T_eff(1 fs) = {t:.2} K; 3818 ± 1 K: {}; within 10% of 4000 K: {}",
            if exact {
                "yes"
            } else {
                "no (ħ/(2 k_B 1 fs) with CODATA constants is 3819.12 K)"
            },
            if rough { "yes" } else { "no" }
        ),
    )
}

const C7_GAMMA: f64 = 50e-15;

fn c7_params() -> RunParams {
    RunParams::new(
        MediumSpec::Constant { n: 1.3 },
        20e-6,
        8e-6,
        C7_GAMMA,
        1000.0 * C7_GAMMA,
        500.0 * C7_GAMMA,
    )
    .unwrap()
}

fn c7_config() -> EngineConfig {
    EngineConfig {
        sw_fast_path: true,
        ..Default::default()
    }
}

/// (pointwise band values, total energy) of the engine in the smooth regime.
fn c7_run() -> (Vec<(f64, f64)>, f64) {
    let p = c7_params();
    let prof = make_lorentzian(&p).unwrap();
    let cfg = c7_config();
    // kR_min >= 5 from ω = 5c/R_min up
    let lo = 5.0 * SI.c / p.rmin;
    let band: Vec<f64> = (0..=20).map(|i| lo + i as f64 * 0.5 / C7_GAMMA).collect();
    let t = spectrum_sweep(&band, &prof, &p.medium, &cfg).unwrap();
    let w = total_energy(&prof, &p.medium, &cfg).unwrap();
    (t.rows.iter().map(|r| (r.omega, r.p)).collect(), w)
}

fn c7_engine_vs_analytic(run: &(Vec<(f64, f64)>, f64)) -> (bool, String) {
    let p = c7_params();
    let c = c7_config().sw_coefficient;
    let s = model_spectrum(&p, c).unwrap();
    let w = model_energy(&p, c).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &(om, pe) in &run.0 {
        let r = pe / s.eval(om);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let gap = run.1 / w - 1.0;
    (
        lo >= 0.5 && hi <= 2.0 && gap.abs() <= 0.05,
        format!(
            "P_engine/P_closed in [{lo:.6}, {hi:.6}] for γω in [{:.1}, {:.1}] (want within ×2); W rel gap {gap:.2e} (tol 5%)",
            run.0[0].0 * C7_GAMMA,
            run.0[run.0.len() - 1].0 * C7_GAMMA
        ),
    )
}

fn c8_values() -> Vec<(f64, f64)> {
    let prep = common::toy::prepared();
    let mut v: Vec<(f64, f64)> = [(1e15, 2e15), (3e15, 0.4e15), (5e15, 5e15)]
        .iter()
        .map(|&(w, wp)| {
            (
                prep.kernel(w, wp, common::toy::N).unwrap(),
                common::toy::double_time_kernel(w, wp),
            )
        })
        .collect();
    v.push((
        prep.density(2e15, common::toy::N).unwrap(),
        common::toy::density_direct(2e15),
    ));
    v
}

fn c8_factorization(v: &[(f64, f64)]) -> (bool, String) {
    let worst = v.iter().map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    (
        worst <= 1e-8,
        format!(
            "l <= 3, 48 τ nodes, 8 ω' nodes: max rel gap factorized vs double time integral {worst:.1e} (tol 1e-8)"
        ),
    )
}

fn c9_report(archive: &mut String) -> (bool, String) {
    let p = RunParams::new(MediumSpec::Constant { n: 1.3 }, 10e-6, 0.5e-6, 1e-15, 1e-12, 0.5e-12).unwrap();
    let quoted = model_energy(&p, coeff::SW_QUOTED).unwrap();
    let rederived = model_energy(&p, coeff::SW_REDERIVED).unwrap();
    let r1 = coeff::QUOTED_MODEL_ENERGY_J / quoted;
    let r2 = coeff::QUOTED_MODEL_ENERGY_J / rederived;
    let _ = writeln!(archive, "closed_form_W_c1.16_J = {quoted:.6e}");
    let _ = writeln!(archive, "closed_form_W_c{}_J = {rederived:.6e}", coeff::SW_REDERIVED);
    let _ = writeln!(archive, "quoted_W_J = {:e}", coeff::QUOTED_MODEL_ENERGY_J);
    let _ = writeln!(
        archive,
        "quoted_over_closed_form = {r1:.2} (c = 1.16), {r2:.2} (c = {})",
        coeff::SW_REDERIVED
    );
    (
        true,
        format!(
            "report only: closed form W = {quoted:.3e} J (c = 1.16) vs quoted 1.8e-13 J, ratio {r1:.1}; with c = {} ratio {r2:.1}",
            coeff::SW_REDERIVED
        ),
    )
}

/// Full mode-sum engine against the closed form in the visible band at
/// R0 = 45 μm, Rmin = 3 μm, γ = 10 fs. Takes hours.
fn c9_enhancement() -> (bool, String) {
    let g = 10e-15;
    let p = RunParams::new(MediumSpec::Constant { n: 1.33 }, 45e-6, 3e-6, g, 1000.0 * g, 500.0 * g).unwrap();
    let prof = make_lorentzian(&p).unwrap();
    let cfg = EngineConfig::default();
    // 400 to 700 nm
    let band: Vec<f64> = [700e-9, 550e-9, 400e-9]
        .iter()
        .map(|l| 2.0 * std::f64::consts::PI * SI.c / l)
        .collect();
    let t = spectrum_sweep(&band, &prof, &p.medium, &cfg).unwrap();
    let s = model_spectrum(&p, coeff::SW_QUOTED).unwrap();
    let ratios: Vec<f64> = t.rows.iter().map(|r| r.p / s.eval(r.omega)).collect();
    let ok = t.flagged().count() == 0 && ratios.iter().all(|&r| (1e2..=1e4).contains(&r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3e}")).collect();
    (
        ok,
        format!(
            "visible-band P_engine/P_closed = [{}] (want 1e2..1e4)",
            shown.join(", ")
        ),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let long = args.iter().any(|a| a == "--include-ignored" || a == "--ignored")
        || std::env::var("SONOFLASH_LONG").is_ok_and(|v| v == "1");
    let mut lines = Vec::new();
    let mut archive = String::new();
    let mut push = |id: u32, (pass, text): (bool, String), start: Instant| {
        let l = Line {
            id,
            pass,
            text: format!("{text} [{:.1}s]", start.elapsed().as_secs_f64()),
        };
        println!(
            "criterion {:>2}: {} {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.text
        );
        lines.push(l);
    };

    let t = Instant::now();
    push(1, c1_wronskian(), t);
    let t = Instant::now();
    push(2, c2_born(), t);
    let t = Instant::now();
    let (p3, s3, v3) = c3_coefficient();
    push(3, (p3, s3), t);
    let t = Instant::now();
    push(4, c4_closed_form_chain(), t);
    let t = Instant::now();
    push(5, c5_energy_spectrum(), t);
    let t = Instant::now();
    push(6, c6_temperature(), t);
    let t = Instant::now();
    let r7 = c7_run();
    push(7, c7_engine_vs_analytic(&r7), t);
    let t = Instant::now();
    let v8 = c8_values();
    push(8, c8_factorization(&v8), t);
    let t = Instant::now();
    push(9, c9_report(&mut archive), t);

    let t = Instant::now();
    let same = |threads: usize| {
        in_pool(threads, || {
            let a = coefficient_points() == v3;
            let b = c7_run() == r7;
            let c = c8_values() == v8;
            (a, b, c)
        })
    };
    let (a1, b1, c1) = same(1);
    let (a4, b4, c4) = same(4);
    let ok = a1 && b1 && c1 && a4 && b4 && c4;
    push(
        10,
        (
            ok,
            format!(
                "criteria 3, 7, 8 rerun with 1 and 4 worker threads: bit-identical: 3 {}, 7 {}, 8 {}",
                a1 && a4,
                b1 && b4,
                c1 && c4
            ),
        ),
        t,
    );

    if long {
        let t = Instant::now();
        push(9, c9_enhancement(), t);
    } else {
        println!("criterion  9: SKIP visible-band enhancement check (hours; run with --include-ignored)");
    }

    let _ = writeln!(archive, "coefficient_points = {v3:?}");
    if let Some(dir) = option_env!("CARGO_TARGET_TMPDIR") {
        let path = std::path::Path::new(dir).join("acceptance_report.txt");
        if std::fs::write(&path, &archive).is_ok() {
            println!("archived {}", path.display());
        }
    }

    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    let unexpected: Vec<u32> = failed
        .iter()
        .copied()
        .filter(|id| !KNOWN_UNATTAINABLE.contains(id))
        .collect();
    let fixed: Vec<u32> = KNOWN_UNATTAINABLE
        .iter()
        .copied()
        .filter(|id| !failed.contains(id))
        .collect();
    println!(
        "acceptance: {} pass, {} fail (known unattainable: {:?})",
        lines.len() - failed.len(),
        failed.len(),
        KNOWN_UNATTAINABLE
    );
    if !unexpected.is_empty() || !fixed.is_empty() {
        println!("acceptance gate: unexpected failures {unexpected:?}; known failures now passing {fixed:?}");
        std::process::exit(1);
    }
}
