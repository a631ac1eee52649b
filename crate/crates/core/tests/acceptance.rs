//! End-to-end acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when nothing fails. Tolerances are fixed here; configs come from the
//! committed `configs/` directory.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skyrmion_core::channels::{apply_channel, verify_cptp, ApplyOptions, ChannelSpec, CptpClass, KrausChannel};
use skyrmion_core::harness::{
    run_compactification_break, run_homotopy_trace, run_p_sweep, run_topology_table, ExperimentConfig,
    ExperimentResult, COMMITTED_WARPS,
};
use skyrmion_core::oracle::{brute_force_apply, random_density_field, residual_table, OracleFamily};
use skyrmion_core::polarimetry::{
    jones_diattenuator, jones_retarder, mueller_diattenuator, mueller_from_jones, pauli_rotation_block,
    retarder_rotation,
};
use skyrmion_core::topology::{
    normalize_stokes, skyrmion_density_raw, skyrmion_number, stokes_from_density, warp_invariance_check,
    NormalizeOptions,
};
use skyrmion_core::{build_state, Grid, Mat2, NoiseProfile, Reduction, StateSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn config(name: &str) -> ExperimentConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Collects sub-checks of one criterion; the criterion passes only if all do.
#[derive(Default)]
struct Report {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, ok: bool, note: String) {
        if ok {
            self.notes.push(note);
        } else {
            self.failures.push(note);
        }
    }

    fn finish(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(self.failures.join("; "))
        }
    }
}

fn max_delta(res: &ExperimentResult) -> f64 {
    res.rows.iter().map(|r| (r.n_final - r.n_initial).abs()).fold(0.0, f64::max)
}

fn table_within(rep: &mut Report, file: &str, tol: f64) {
    let res = run_topology_table(&config(file)).unwrap();
    let d = max_delta(&res);
    rep.check(d <= tol, format!("{file}: max|ΔN| = {d:.4} (≤ {tol})"));
}

/// Sweep of the configured state. Non-singular points must stay within
/// `tol` of the clean value; `collapse` lists points that must give |N| ≤ 0.02.
fn sweep_within(rep: &mut Report, file: &str, tol: f64, skip: &[f64], collapse: &[f64]) {
    let res = run_p_sweep(&config(file)).unwrap();
    let mut worst = (0.0f64, f64::NAN);
    for r in &res.rows {
        let d = (r.n_final - r.n_initial).abs();
        if skip.contains(&r.sweep_value) {
            continue;
        }
        if d > worst.0 {
            worst = (d, r.sweep_value);
        }
    }
    let offenders: Vec<String> = res
        .rows
        .iter()
        .filter(|r| !skip.contains(&r.sweep_value) && (r.n_final - r.n_initial).abs() > tol)
        .map(|r| format!("p={:.2}:{:.3}", r.sweep_value, r.n_final))
        .collect();
    rep.check(
        offenders.is_empty(),
        format!(
            "{file} sweep: max|ΔN| = {:.4} at p={} (≤ {tol}){}",
            worst.0,
            worst.1,
            if offenders.is_empty() {
                String::new()
            } else {
                format!(", out of band {}", offenders.join(" "))
            }
        ),
    );
    for &p in collapse {
        let row = res.rows.iter().find(|r| r.sweep_value == p).expect("collapse point swept");
        rep.check(row.n_final.abs() <= 0.02, format!("|N(p={p})| = {:.2e} (≤ 0.02)", row.n_final.abs()));
    }
}

fn integer_recovery() -> Outcome {
    let cfg = config("retarder.toml");
    let grid = cfg.grid().unwrap();
    let mut rep = Report::default();
    for n in [-3, -2, -1, 1, 2, 3] {
        let (l1, l2) = cfg.charges_for(n);
        let started = Instant::now();
        let rho = build_state(&StateSpec::new(l1, l2, 0.0).unwrap(), &grid);
        let u = normalize_stokes(&stokes_from_density(&rho).unwrap(), &cfg.normalize_options());
        let v = skyrmion_number(&u, Reduction::Deterministic).unwrap().n;
        let secs = started.elapsed().as_secs_f64();
        let ok = (v - n as f64).abs() <= 0.05 && v.abs() <= (n as f64).abs() && secs < 10.0;
        rep.check(ok, format!("N={n}: {v:.4} in {secs:.2}s"));
    }
    rep.finish()
}

fn retarder_invariance() -> Outcome {
    let mut rep = Report::default();
    table_within(&mut rep, "retarder.toml", 0.02);

    let grid = Grid::square(256, 5.0).unwrap();
    let rho = build_state(&StateSpec::new(2, 0, 0.0).unwrap(), &grid);
    let spec = ChannelSpec::Retarder {
        theta: NoiseProfile::constant(0.7),
        varphi: NoiseProfile::constant(0.3),
        psi: NoiseProfile::constant(1.1),
    };
    let out = apply_channel(&rho, &spec.build(&grid).unwrap(), &ApplyOptions::raw()).unwrap();
    let before = skyrmion_density_raw(&stokes_from_density(&rho).unwrap());
    let after = skyrmion_density_raw(&stokes_from_density(&out).unwrap());
    let diff = before
        .data()
        .iter()
        .zip(after.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    rep.check(diff <= 1e-10, format!("constant retarder raw density Δ = {diff:.1e} (≤ 1e-10)"));
    rep.finish()
}

fn diattenuator_invariance() -> Outcome {
    let mut rep = Report::default();
    table_within(&mut rep, "diattenuator.toml", 0.02);
    rep.finish()
}

fn bit_flip() -> Outcome {
    let mut rep = Report::default();
    table_within(&mut rep, "bit_flip.toml", 0.03);
    sweep_within(&mut rep, "bit_flip.toml", 0.03, &[0.5], &[0.5]);
    table_within(&mut rep, "bit_flip_spatial.toml", 0.03);
    rep.finish()
}

fn phase_flip() -> Outcome {
    let mut rep = Report::default();
    table_within(&mut rep, "phase_flip.toml", 0.02);
    let mut cfg = config("phase_flip.toml");
    cfg.run.sweep_values = vec![0.5];
    let n = run_p_sweep(&cfg).unwrap().rows[0].n_final;
    rep.check(n.abs() <= 0.02, format!("|N(p=0.5)| = {:.2e} (≤ 0.02)", n.abs()));
    table_within(&mut rep, "phase_flip_spatial.toml", 0.08);
    rep.finish()
}

fn depolarizing() -> Outcome {
    let mut rep = Report::default();
    sweep_within(&mut rep, "depolarizing.toml", 0.02, &[1.0], &[1.0]);
    table_within(&mut rep, "depolarizing_spatial.toml", 0.02);
    rep.finish()
}

fn amplitude_damping() -> Outcome {
    let mut rep = Report::default();
    sweep_within(&mut rep, "amplitude_damping.toml", 0.02, &[1.0], &[1.0]);
    table_within(&mut rep, "amplitude_damping_spatial.toml", 0.03);
    rep.finish()
}

fn phase_damping() -> Outcome {
    let mut rep = Report::default();
    sweep_within(&mut rep, "phase_damping.toml", 0.02, &[1.0], &[]);
    table_within(&mut rep, "phase_damping_spatial.toml", 0.03);
    rep.finish()
}

fn compactification_break() -> Outcome {
    let mut rep = Report::default();
    let cfg = config("compactify.toml");
    let res = run_compactification_break(&cfg).unwrap();
    let one = res.rows.iter().find(|r| r.sweep_value == 1.0).expect("N = 1 row");
    rep.check(
        (0.78..=0.88).contains(&one.n_final),
        format!("N=1 → {:.4} (in [0.78, 0.88])", one.n_final),
    );
    for r in &res.rows {
        let frac = (r.n_final - r.n_final.round()).abs();
        rep.check(
            frac > 0.05,
            format!("N={} → {:.4}, |N−round| = {frac:.3} (> 0.05)", r.sweep_value, r.n_final),
        );
    }
    let mut wide = cfg.clone();
    wide.channels[0].body.insert(
        "p".into(),
        toml::Value::try_from(NoiseProfile::Cutoff {
            base: 0.1,
            radius: 8.0,
            order: 8,
        })
        .unwrap(),
    );
    wide.run.targets = vec![1];
    let n = run_compactification_break(&wide).unwrap().rows[0].n_final;
    rep.check((n - 1.0).abs() <= 0.02, format!("a=8 ≥ extent: {n:.4} (within 0.02 of 1)"));
    rep.finish()
}

fn oracle_agreement() -> Outcome {
    let mut rep = Report::default();
    let rows = residual_table(200, 2024);
    for family in OracleFamily::ALL {
        let worst = rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.relative_error)
            .fold(0.0, f64::max);
        rep.check(worst <= 1e-7, format!("{}: {worst:.1e} (≤ 1e-7)", family.name()));
    }
    let grid = Grid::square(32, 3.0).unwrap();
    let rho = random_density_field(&grid, 99);
    let gc = |a, b, n| NoiseProfile::GaussCos {
        offset: 0.0,
        amplitude: a,
        modulation: b,
        n,
        decay: 1.0,
    };
    let specs = [
        ChannelSpec::Retarder {
            theta: gc(0.4, 1.0, 2),
            varphi: gc(0.0, 1.2, 3),
            psi: gc(0.3, 0.5, 1),
        },
        ChannelSpec::Diattenuator {
            theta: gc(0.0, 1.0, 2),
            psi: gc(0.2, 0.6, 1),
            q: NoiseProfile::GaussCos {
                offset: 1.0,
                amplitude: -0.5,
                modulation: -0.3,
                n: 1,
                decay: 1.0,
            },
            r: NoiseProfile::constant(0.4),
        },
        ChannelSpec::BitFlip { p: gc(0.3, 0.15, 2) },
        ChannelSpec::PhaseFlip { p: gc(0.3, 0.15, 2) },
        ChannelSpec::Depolarizing { p: gc(0.6, 0.3, 2) },
        ChannelSpec::AmplitudeDamping { p: gc(0.5, 0.2, 1) },
        ChannelSpec::PhaseDamping { p: gc(0.6, 0.3, 2) },
    ];
    for spec in specs {
        let ch = spec.build(&grid).unwrap();
        let fast = apply_channel(&rho, &ch, &ApplyOptions::raw()).unwrap();
        let slow = brute_force_apply(&rho, &ch).unwrap();
        let d = fast
            .data()
            .iter()
            .zip(slow.data())
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        rep.check(d <= 1e-12, format!("{} brute force Δ = {d:.1e}", spec.family()));
    }
    rep.finish()
}

fn random_su2(rng: &mut ChaCha8Rng) -> Mat2 {
    let mut q = [0.0f64; 4];
    loop {
        for v in &mut q {
            *v = rng.random_range(-1.0..1.0);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>();
        if n > 1e-3 && n <= 1.0 {
            let s = n.sqrt();
            q.iter_mut().for_each(|v| *v /= s);
            break;
        }
    }
    let [a, b, c, d] = q;
    Mat2::new(
        Complex64::new(a, b),
        Complex64::new(c, d),
        Complex64::new(-c, d),
        Complex64::new(a, -b),
    )
}

fn mueller_calculus() -> Outcome {
    let mut rep = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = mueller_from_jones(&random_su2(&mut rng)).unwrap();
        let b = pauli_rotation_block(&m);
        let orth = (b.transpose() * b - Matrix3::identity()).amax();
        let det = (b.determinant() - 1.0).abs();
        let rim = (1..4).map(|k| m[(0, k)].abs().max(m[(k, 0)].abs())).fold((m[(0, 0)] - 1.0).abs(), f64::max);
        worst = worst.max(orth).max(det).max(rim);
    }
    rep.check(worst <= 1e-10, format!("1000 SU(2): rotation residual {worst:.1e} (≤ 1e-10)"));

    let mut euler: f64 = 0.0;
    for _ in 0..200 {
        let (t, f, p) = (
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(-3.2..3.2),
            rng.random_range(-3.2..3.2),
        );
        let b = pauli_rotation_block(&mueller_from_jones(&jones_retarder(t, f, p)).unwrap());
        euler = euler.max((b - retarder_rotation(t, f, p)).amax());
    }
    rep.check(euler <= 1e-12, format!("retarder vs Euler form {euler:.1e} (≤ 1e-12)"));

    let mut diat: f64 = 0.0;
    for (q, r) in [(1.0, 0.5), (0.9, 0.1), (0.3, 0.3), (0.05, 1.0)] {
        let m = mueller_from_jones(&jones_diattenuator(0.0, 0.0, q, r).unwrap()).unwrap();
        diat = diat.max((m - mueller_diattenuator(q, r)).amax());
    }
    rep.check(diat <= 1e-12, format!("diattenuator Mueller entries {diat:.1e} (≤ 1e-12)"));
    rep.finish()
}

fn property_suite() -> Outcome {
    let mut rep = Report::default();
    let cfg = config("retarder.toml");
    let grid = cfg.grid().unwrap();
    let opts: NormalizeOptions = cfg.normalize_options();
    let red = Reduction::Deterministic;
    let state = cfg.state().unwrap();
    let u = normalize_stokes(&stokes_from_density(&build_state(&state, &grid)).unwrap(), &opts);
    let n = skyrmion_number(&u, red).unwrap().n;

    let again = normalize_stokes(&u.to_stokes(), &opts);
    rep.check(
        again.vectors() == u.vectors() && again.mask() == u.mask(),
        "normalisation idempotent (bitwise)".into(),
    );

    for warp in COMMITTED_WARPS {
        let (before, after) = warp_invariance_check(&u, &warp, red).unwrap();
        let d = (after - before).abs();
        rep.check(d <= 0.02, format!("{warp:?}: |ΔN| = {d:.4} (≤ 0.02)"));
    }

    let m = skyrmion_number(&u.mirrored_x(), red).unwrap().n;
    rep.check((m + n).abs() <= 1e-10, format!("mirror: N + N' = {:.1e}", m + n));

    let mut alpha: f64 = 0.0;
    for a in [0.7, 2.1, 4.4] {
        let s = StateSpec::new(state.l1(), state.l2(), a).unwrap();
        let ua = normalize_stokes(&stokes_from_density(&build_state(&s, &grid)).unwrap(), &opts);
        alpha = alpha.max((skyrmion_number(&ua, red).unwrap().n - n).abs());
    }
    rep.check(alpha <= 1e-9, format!("α-independence {alpha:.1e} (≤ 1e-9)"));

    for file in ["retarder.toml", "diattenuator.toml"] {
        let c = config(file);
        assert_eq!(c.run.t_samples.len(), 5);
        let res = run_homotopy_trace(&c).unwrap();
        let n0 = res.rows[0].n_final;
        let d = res.rows.iter().map(|r| (r.n_final - n0).abs()).fold(0.0, f64::max);
        rep.check(d <= 0.02, format!("homotopy {file}: {d:.4} (≤ 0.02)"));
    }

    let files = [
        "retarder.toml",
        "diattenuator.toml",
        "bit_flip_spatial.toml",
        "phase_flip_spatial.toml",
        "depolarizing_spatial.toml",
        "amplitude_damping_spatial.toml",
        "phase_damping_spatial.toml",
    ];
    let small = Grid::square(64, 5.0).unwrap();
    for file in files {
        let c = config(file);
        let spec = c.spec(&c.run.channel).unwrap();
        let ch = spec.build(&small).unwrap();
        let expected = if matches!(spec, ChannelSpec::Diattenuator { .. }) {
            CptpClass::TraceDecreasing
        } else {
            CptpClass::TracePreserving
        };
        let got = verify_cptp(&ch, 1e-10).class;
        rep.check(got == expected, format!("{}: {got}", spec.family()));
    }
    let amplifier = KrausChannel::uniform(
        "gain",
        skyrmion_core::ChannelFamily::Identity,
        &small,
        &[Mat2::identity() * Complex64::new(1.3, 0.0)],
        false,
    )
    .unwrap();
    let got = verify_cptp(&amplifier, 1e-10).class;
    rep.check(got == CptpClass::Invalid, format!("1.3·I: {got}"));
    rep.finish()
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("integer_recovery", integer_recovery),
        ("retarder_invariance", retarder_invariance),
        ("diattenuator_invariance", diattenuator_invariance),
        ("bit_flip", bit_flip),
        ("phase_flip", phase_flip),
        ("depolarizing", depolarizing),
        ("amplitude_damping", amplitude_damping),
        ("phase_damping", phase_damping),
        ("compactification_break", compactification_break),
        ("oracle_agreement", oracle_agreement),
        ("mueller_calculus", mueller_calculus),
        ("property_suite", property_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
