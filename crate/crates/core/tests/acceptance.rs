//! End-to-end checks of the published experiments. Prints one PASS/FAIL line
//! per criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use approx::abs_diff_eq;
use energy_capture::detector::{sweep, SweepTable, ENDPOINT_MARGIN, NARROW_WIDTH};
use energy_capture::dynamics::{
    integrate, integrate_linearized, linearize, CouplingPotential, IntegrationSettings,
};
use energy_capture::harness::{self, commands::sweep_spec, diagram_crossings, Experiment};
use energy_capture::mathieu::{
    characteristic_value, classify, classify_by_curves, growth_rate, monodromy, CurveId,
    MathieuPoint, Stability, MONODROMY_TOLERANCE,
};
use energy_capture::resonance::{first_stability_threshold, Capture, Mode, ModeSystem};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `(mode, interval index from 1) -> (x0_lo, x0_hi)` read back from intervals.csv.
type IntervalTable = BTreeMap<(usize, usize), (f64, f64)>;

fn intervals_csv(exp: &Experiment, dir: &Path) -> Result<IntervalTable, String> {
    harness::intervals(exp, dir).map_err(err)?;
    let text = std::fs::read_to_string(dir.join("intervals.csv")).map_err(err)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or(format!("no column {name}"))
    };
    let (cm, clo, chi) = (col("mode")?, col("x0_lo")?, col("x0_hi")?);
    let mut count = [0usize; 2];
    let mut out = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let mode: usize = f[cm].parse().map_err(err)?;
        count[mode - 1] += 1;
        let lo: f64 = f[clo].parse().map_err(err)?;
        let hi: f64 = f[chi].parse().map_err(err)?;
        out.insert((mode, count[mode - 1]), (lo, hi));
    }
    Ok(out)
}

/// `(mode, index, lo, hi, tol)` against the interval table.
fn compare_intervals(
    got: &BTreeMap<(usize, usize), (f64, f64)>,
    expected: &[(usize, usize, f64, f64, f64)],
) -> Check {
    let mut notes = Vec::new();
    for &(m, j, lo, hi, tol) in expected {
        let &(glo, ghi) = got.get(&(m, j)).ok_or(format!("I_{m}^{j} missing"))?;
        ensure(
            abs_diff_eq!(glo, lo, epsilon = tol) && abs_diff_eq!(ghi, hi, epsilon = tol),
            format!("I_{m}^{j} = ({glo:.6}, {ghi:.6}), expected ({lo}, {hi}) +-{tol}"),
        )?;
        notes.push(format!("I_{m}^{j}=({glo:.5},{ghi:.5})"));
    }
    Ok(notes.join(" "))
}

fn ac1(dir: &Path) -> Check {
    let exp = harness::preset("experiment1").map_err(err)?;
    let got = intervals_csv(&exp, dir)?;
    let iv = compare_intervals(
        &got,
        &[
            (2, 1, 0.36, 0.63, 0.02),
            (1, 1, 1.1, 1.8, 0.02),
            (2, 2, 2.42, 2.99, 0.02),
            (1, 2, 2.69, 3.44, 0.02),
        ],
    )?;
    let crossings = diagram_crossings(&exp, 2.25).map_err(err)?;
    let expected = [
        ("A", 0.033),
        ("B", 0.099),
        ("C", 0.3),
        ("D", 0.81),
        ("E", 1.46),
        ("F", 1.81),
    ];
    let mut notes = Vec::new();
    for (label, q) in expected {
        let c = crossings
            .iter()
            .find(|c| c.label == label)
            .ok_or(format!("crossing {label} missing"))?;
        ensure(
            (c.q - q).abs() <= 0.01,
            format!("{label}: q = {:.5}, expected {q} +-0.01", c.q),
        )?;
        notes.push(format!("{label}={:.4}", c.q));
    }
    Ok(format!("{iv}; {}", notes.join(" ")))
}

fn ac2(dir: &Path) -> Check {
    let exp = harness::preset("experiment2").map_err(err)?;
    let got = intervals_csv(&exp, dir)?;
    compare_intervals(
        &got,
        &[
            (1, 1, 3.22, 3.42, 0.02),
            (1, 2, 5.08, 5.42, 0.02),
            (2, 1, 4.349, 4.357, 0.005),
            (2, 2, 6.58, 6.614, 0.01),
        ],
    )
}

fn ac3(dir: &Path) -> Check {
    let exp = harness::preset("experiment3").map_err(err)?;
    let got = intervals_csv(&exp, dir)?;
    let notes = compare_intervals(
        &got,
        &[
            (1, 1, 1.007, 1.009, 0.002),
            (1, 2, 2.915, 2.969, 0.01),
            (2, 1, 2.01467, 2.01468, 1e-4),
            (2, 2, 4.2233, 4.2239, 1e-3),
        ],
    )?;
    let (lo, hi) = got[&(2, 1)];
    ensure(
        hi - lo < 1e-3,
        format!("I_2^1 width {} not below 1e-3", hi - lo),
    )?;
    Ok(format!("{notes} width(I_2^1)={:.2e}", hi - lo))
}

fn ac4() -> Check {
    let exp = harness::preset("experiment1").map_err(err)?;
    let e = first_stability_threshold(&exp.system).map_err(err)?;
    ensure(
        (e - 0.066).abs() <= 0.004,
        format!("E = {e}, expected 0.066 +-0.004"),
    )?;
    Ok(format!("E = {e:.5}"))
}

fn row_at(table: &SweepTable, x0: f64) -> Result<&energy_capture::detector::SweepRow, String> {
    table
        .rows
        .iter()
        .find(|r| (r.x0 - x0).abs() < 1e-9)
        .ok_or(format!("x0 = {x0} not in sweep"))
}

fn ac5(table: &SweepTable) -> Check {
    let mut notes = Vec::new();
    for (x0, target, tol) in [(0.4, 0.16, 0.04), (0.6, 0.43, 0.09)] {
        let v = row_at(table, x0)?
            .verdict
            .ok_or(format!("no verdict at {x0}"))?;
        let m = v.growth(Mode::Z2).max_amplitude;
        ensure(
            (m - target).abs() <= tol,
            format!("max|z2| at x0={x0} is {m:.4}, expected {target} +-{tol}"),
        )?;
        notes.push(format!("max|z2|({x0})={m:.3}"));
    }
    let expected = [
        (0.2, Capture::None),
        (0.8, Capture::None),
        (1.0, Capture::None),
        (2.0, Capture::None),
        (2.2, Capture::None),
        (0.4, Capture::Z2),
        (0.6, Capture::Z2),
        (1.2, Capture::Z1),
        (1.4, Capture::Z1),
        (3.0, Capture::Both),
    ];
    for (x0, want) in expected {
        let v = row_at(table, x0)?
            .verdict
            .ok_or(format!("no verdict at {x0}"))?;
        ensure(
            v.capture == want,
            format!("verdict at x0={x0} is {}, expected {}", v.capture, want),
        )?;
    }
    notes.push("10 verdicts match".into());
    Ok(notes.join(" "))
}

fn ac6(table: &SweepTable) -> Check {
    let mut checked = 0;
    let mut skipped = Vec::new();
    for r in &table.rows {
        let near = table.intervals.iter().any(|iv| {
            iv.x0_range.distance_to_endpoint(r.x0) < ENDPOINT_MARGIN
                || (iv.x0_range.contains(r.x0) && iv.x0_range.width() < NARROW_WIDTH)
        });
        if near {
            skipped.push(format!("{}", r.x0));
            continue;
        }
        let v = r.verdict.ok_or(format!("no verdict at {}", r.x0))?;
        let p = r.predicted.ok_or(format!("no prediction at {}", r.x0))?;
        ensure(
            v.capture == p,
            format!("x0={}: observed {}, predicted {}", r.x0, v.capture, p),
        )?;
        checked += 1;
    }
    Ok(format!(
        "{checked} grid points match, near endpoints: {}",
        skipped.join(",")
    ))
}

fn ac7(tables: &[(&str, &SweepTable)]) -> Check {
    let mut notes = Vec::new();
    for (name, t) in tables {
        let mut worst: f64 = 0.0;
        for r in &t.rows {
            let d = r
                .max_relative_drift
                .ok_or(format!("{name} x0={}: run failed", r.x0))?;
            ensure(d <= 1e-6, format!("{name} x0={}: drift {d:e}", r.x0))?;
            worst = worst.max(d);
        }
        notes.push(format!("{name} {} runs max {worst:.1e}", t.rows.len()));
    }
    Ok(notes.join(", "))
}

fn halton(i: usize, base: usize) -> f64 {
    let (mut f, mut r, mut k) = (1.0, 0.0, i);
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

fn ac8() -> Check {
    let cv = |id, q| characteristic_value(id, q).map_err(err);
    for q in [0.1, 0.5, 1.0, 2.0] {
        let ids = [
            CurveId::a(0),
            CurveId::b(1),
            CurveId::a(1),
            CurveId::b(2),
            CurveId::a(2),
            CurveId::b(3),
        ];
        let v = ids
            .iter()
            .map(|&id| cv(id, q))
            .collect::<Result<Vec<_>, _>>()?;
        ensure(
            v.windows(2).all(|w| w[0] < w[1]),
            format!("ordering fails at q={q}: {v:?}"),
        )?;
    }

    let mut worst_det: f64 = 0.0;
    let mut compared = 0;
    for i in 1..=200 {
        let p = MathieuPoint::new(2.5 * halton(i, 2), -1.0 + 11.0 * halton(i, 3)).map_err(err)?;
        let m = monodromy(p, MONODROMY_TOLERANCE).map_err(err)?;
        worst_det = worst_det.max((m.determinant() - 1.0).abs());
        let v = classify(p).map_err(err)?;
        if let (Some(c), false) = (
            classify_by_curves(p, 1e-6).map_err(err)?,
            v.class == Stability::Boundary,
        ) {
            ensure(
                c == v.class,
                format!("{p:?}: monodromy {:?}, curves {c:?}", v.class),
            )?;
            compared += 1;
        }
    }
    ensure(
        worst_det <= 1e-9,
        format!("|det - 1| reached {worst_det:e}"),
    )?;

    for q in [0.01, 0.05, 0.1] {
        let b1 = cv(CurveId::b(1), q)?;
        let a1 = cv(CurveId::a(1), q)?;
        ensure(
            (b1 - (1.0 - q)).abs() <= 0.2 * q * q && (a1 - (1.0 + q)).abs() <= 0.2 * q * q,
            format!("small-q expansion off at q={q}: b1={b1}, a1={a1}"),
        )?;
    }

    let rate = |a: f64, q: f64| MathieuPoint::new(q, a).and_then(growth_rate).map_err(err);
    let (r1, r4) = (rate(1.0, 0.2)?, rate(4.0, 0.2)?);
    ensure(r1 > r4 && r4 > 1.0, format!("rates {r1} and {r4}"))?;
    Ok(format!(
        "max|det-1|={worst_det:.1e}, {compared}/200 compared, rate(1,0.2)={r1:.4} > rate(4,0.2)={r4:.6}"
    ))
}

fn exp1(x0: f64, eps: f64) -> Result<ModeSystem, String> {
    ModeSystem::new(1.0, 0.1f64.sqrt(), 0.9f64.sqrt(), eps, x0).map_err(err)
}

fn ac9() -> Check {
    let mut worst: f64 = 0.0;
    for x0 in [0.4, 1.0, 2.5] {
        let s = exp1(x0, 0.0)?;
        let t = integrate(
            &s,
            &CouplingPotential::Quadratic,
            100.0,
            &IntegrationSettings::default(),
        )
        .map_err(err)?;
        for st in &t.samples {
            worst = worst.max((st.y - x0 * st.t.cos()).abs());
            ensure(
                st.z1 == 0.0 && st.z2 == 0.0 && st.vz1 == 0.0 && st.vz2 == 0.0,
                format!("z nonzero at t={}", st.t),
            )?;
        }
    }
    ensure(worst <= 1e-6, format!("sup|y - x0 cos t| = {worst:e}"))?;
    Ok(format!("sup|y - x0 cos t| = {worst:.1e}, z identically 0"))
}

fn ac10() -> Check {
    let (x0, eps) = (0.5, 1e-4);
    let s = exp1(x0, eps)?;
    let settings = IntegrationSettings::default();
    let horizon = 2.0 * 2.0 * std::f64::consts::PI / s.mu();
    let full = integrate(&s, &CouplingPotential::Quadratic, horizon, &settings).map_err(err)?;
    let lin = linearize(&s, &CouplingPotential::Quadratic).map_err(err)?;
    let xi = integrate_linearized(&lin, horizon, &settings).map_err(err)?;
    ensure(xi.times.len() == full.samples.len(), "sample grids differ")?;
    let scale = eps * x0;
    let mut worst: f64 = 0.0;
    for mode in Mode::BOTH {
        for (st, x) in full.samples.iter().zip(xi.xi(mode)) {
            worst = worst.max((st.z(mode) - scale * x).abs());
        }
    }
    ensure(
        worst <= 1e-2 * scale,
        format!("max deviation {worst:e} > {:e}", 1e-2 * scale),
    )?;
    Ok(format!(
        "max|z - eps x0 xi| / (eps x0) = {:.2e}",
        worst / scale
    ))
}

fn ac11() -> Check {
    let quartic = CouplingPotential::QuarticDegenerate;
    let s = ModeSystem::new(1.0, 1.0, 2.0, 1e-3, 0.5).map_err(err)?;
    let lin = linearize(&s, &quartic).map_err(err)?;
    for mode in Mode::BOTH {
        let form = lin.mathieu_form(mode).ok_or("no closed form")?;
        ensure(
            form.is_constant(),
            format!("{mode}: amplitude {}", form.amplitude),
        )?;
        ensure(
            form.mean == s.lambda(mode).powi(2),
            format!("{mode}: mean {}", form.mean),
        )?;
        for k in 0..50 {
            let t = 0.37 * k as f64;
            ensure(
                lin.coefficient(mode, t) == s.lambda(mode).powi(2),
                format!("{mode}: coefficient varies at t={t}"),
            )?;
        }
    }
    let t = integrate(&s, &quartic, 400.0, &IntegrationSettings::default()).map_err(err)?;
    ensure(!t.degraded, format!("drift {:e}", t.max_relative_drift))?;
    Ok(format!(
        "constant coefficients; scenario ran to t=400 with drift {:.1e}",
        t.max_relative_drift
    ))
}

fn run_sweep(name: &str) -> Result<SweepTable, String> {
    let exp = harness::preset(name).map_err(err)?;
    sweep(&sweep_spec(&exp).map_err(err)?).map_err(err)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| {
        let p = dir.path().join(name);
        std::fs::create_dir_all(&p).expect("create dir");
        p
    };

    let sweeps: Vec<(&str, Result<SweepTable, String>)> =
        ["experiment1", "experiment2", "experiment3"]
            .into_iter()
            .map(|n| (n, run_sweep(n)))
            .collect();
    let table = |i: usize| sweeps[i].1.as_ref().map_err(|e| e.clone());

    let results: Vec<(&str, Check)> = vec![
        ("AC1 experiment 1 endpoints and crossings", ac1(&sub("e1"))),
        ("AC2 experiment 2 intervals", ac2(&sub("e2"))),
        ("AC3 experiment 3 intervals", ac3(&sub("e3"))),
        ("AC4 critical energy", ac4()),
        (
            "AC5 nonlinear amplitudes and verdicts",
            table(0).and_then(ac5),
        ),
        ("AC6 sweep band pattern", table(0).and_then(ac6)),
        (
            "AC7 energy conservation",
            (|| {
                let t: Vec<(&str, &SweepTable)> = sweeps
                    .iter()
                    .map(|(n, t)| t.as_ref().map(|t| (*n, t)).map_err(|e| e.clone()))
                    .collect::<Result<_, _>>()?;
                ac7(&t)
            })(),
        ),
        ("AC8 linear and Floquet properties", ac8()),
        ("AC9 unperturbed exactness", ac9()),
        ("AC10 linearization fidelity", ac10()),
        ("AC11 degenerate potential", ac11()),
    ];

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
