//! File-producing operations behind the command-line subcommands.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{DiagramSpec, Experiment};
use super::svg::Plot;
use crate::detector::{
    detect, predicted_intervals, sweep as run_sweep, Agreement, RmceVerdict, SweepSpec, SweepTable,
    NARROW_WIDTH,
};
use crate::dynamics::{integrate, Potential, Trajectory};
use crate::error::{Error, Result};
use crate::mathieu::{characteristic_value, classify, CurveId, MathieuPoint, Stability};
use crate::resonance::{
    amplitude_of_energy, capture_bands, first_stability_threshold, line_of, q_of_amplitude,
    ActivatingInterval, Mode, ResonanceOptions,
};

/// Files written by a command and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = create(dir, name, files)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Weight of each mode in the diagram abscissa, `None` without a moving line.
fn axis_weights(exp: &Experiment) -> Option<[f64; 2]> {
    exp.potential
        .quadratic_axis_weights()
        .filter(|w| w.iter().all(|&x| x > 0.0))
}

fn intervals_for(exp: &Experiment) -> Result<Option<Vec<ActivatingInterval>>> {
    predicted_intervals(
        &exp.system,
        &exp.potential,
        exp.x0_max,
        &ResonanceOptions::default(),
    )
}

/// Line/curve crossing inside the diagram window.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub label: String,
    pub mode: Mode,
    pub curve: CurveId,
    pub q: f64,
    pub a: f64,
    pub x0: f64,
}

/// Every crossing of a mode line with a characteristic curve for `q` in
/// `(0, q_max]`, lettered A, B, ... in order of `q`.
pub fn diagram_crossings(exp: &Experiment, q_max: f64) -> Result<Vec<Crossing>> {
    let Some(weights) = axis_weights(exp) else {
        return Ok(Vec::new());
    };
    let mu = exp.system.mu();
    let mut out = Vec::new();
    for mode in Mode::BOTH {
        let w = weights[mode.index()];
        let x0_max = 2.0 * mu * (q_max / w).sqrt();
        let line = line_of(&exp.system, mode);
        let ivs = crate::resonance::activating_intervals_weighted(
            &exp.system,
            mode,
            w,
            x0_max,
            &ResonanceOptions::default(),
        )?;
        for iv in ivs {
            out.push(Crossing {
                label: String::new(),
                mode,
                curve: CurveId::b(iv.region_order),
                q: iv.q_range.lo,
                a: line.at(iv.q_range.lo),
                x0: iv.x0_range.lo,
            });
            if !iv.truncated {
                out.push(Crossing {
                    label: String::new(),
                    mode,
                    curve: CurveId::a(iv.region_order),
                    q: iv.q_range.hi,
                    a: line.at(iv.q_range.hi),
                    x0: iv.x0_range.hi,
                });
            }
        }
    }
    out.sort_by(|a, b| a.q.total_cmp(&b.q));
    for (i, c) in out.iter_mut().enumerate() {
        c.label = letter(i);
    }
    Ok(out)
}

fn letter(i: usize) -> String {
    let mut s = String::new();
    let mut k = i;
    loop {
        s.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            break;
        }
        k = k / 26 - 1;
    }
    s
}

/// Curves that can enter `a <= a_max` for `q <= q_max`.
fn diagram_curves(spec: &DiagramSpec) -> Vec<CurveId> {
    // Each curve stays within 2√2·q of its value at q = 0.
    let reach = spec.a_max + 3.0 * spec.q_max;
    let n_max = reach.max(0.0).sqrt().ceil() as u32 + 1;
    let mut out = vec![CurveId::a(0)];
    for n in 1..=n_max {
        out.push(CurveId::b(n));
        out.push(CurveId::a(n));
    }
    out
}

/// Stability diagram: sampled curves, a classified grid, crossings and an SVG.
pub fn diagram(exp: &Experiment, out: &Path) -> Result<Outcome> {
    let spec = exp.diagram;
    spec.validate()?;
    let mut files = Vec::new();
    let curves = diagram_curves(&spec);

    let samples = 4 * spec.resolution;
    let qs: Vec<f64> = (0..=samples)
        .map(|i| spec.q_max * i as f64 / samples as f64)
        .collect();
    let values: Vec<Vec<f64>> = qs
        .par_iter()
        .map(|&q| curves.iter().map(|&c| characteristic_value(c, q)).collect())
        .collect::<Result<_>>()?;
    let mut w = create(out, "curves.csv", &mut files)?;
    let header: Vec<String> = curves.iter().map(|c| c.to_string()).collect();
    writeln!(w, "q,{}", header.join(","))?;
    for (q, row) in qs.iter().zip(&values) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{q},{}", cells.join(","))?;
    }
    w.flush()?;

    let n = spec.resolution;
    let dq = spec.q_max / n as f64;
    let da = (spec.a_max - spec.a_min) / n as f64;
    let cells: Vec<(f64, f64)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| ((i as f64 + 0.5) * dq, spec.a_min + (j as f64 + 0.5) * da))
        .collect();
    let verdicts: Vec<_> = cells
        .par_iter()
        .map(|&(q, a)| classify(MathieuPoint::new(q, a)?))
        .collect::<Result<_>>()?;
    let mut w = create(out, "stability_grid.csv", &mut files)?;
    writeln!(w, "q,a,class,trace_magnitude")?;
    for (&(q, a), v) in cells.iter().zip(&verdicts) {
        writeln!(w, "{q},{a},{},{}", v.class.as_str(), v.trace_magnitude)?;
    }
    w.flush()?;

    let crossings = diagram_crossings(exp, spec.q_max)?;
    let mut w = create(out, "crossings.csv", &mut files)?;
    writeln!(w, "label,mode,curve,q,a,x0")?;
    for c in &crossings {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.label, c.mode, c.curve, c.q, c.a, c.x0
        )?;
    }
    w.flush()?;

    let mut plot = Plot::new(
        (0.0, spec.q_max),
        (spec.a_min, spec.a_max),
        &format!("{}: stability diagram", exp.name),
        "q",
        "a",
    );
    // One rectangle per horizontal run of non-stable cells.
    for j in 0..n {
        let row = &verdicts[j * n..(j + 1) * n];
        let a = spec.a_min + j as f64 * da;
        let mut i = 0;
        while i < n {
            if row[i].class == Stability::Stable {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && row[i].class != Stability::Stable {
                i += 1;
            }
            plot.rect(start as f64 * dq, a, i as f64 * dq, a + da, "#c8c8c8");
        }
    }
    for k in 0..curves.len() {
        let pts: Vec<(f64, f64)> = qs.iter().zip(&values).map(|(&q, v)| (q, v[k])).collect();
        plot.line(&pts, "#d62728", 1.2, None);
    }
    let mut legend = vec![("#d62728", "characteristic curves")];
    if axis_weights(exp).is_some() {
        for (mode, color, dash) in [
            (Mode::Z1, "#1f3a93", None),
            (Mode::Z2, "#2a9d3f", Some("6 3")),
        ] {
            let line = line_of(&exp.system, mode);
            plot.line(
                &[(0.0, line.at(0.0)), (spec.q_max, line.at(spec.q_max))],
                color,
                1.5,
                dash,
            );
        }
        legend.push(("#1f3a93", "line of z1"));
        legend.push(("#2a9d3f", "line of z2"));
    }
    for c in &crossings {
        plot.marker(c.q, c.a, "black", &c.label);
    }
    plot.legend(&legend);
    write_text(out, "diagram.svg", &plot.render(), &mut files)?;

    let unstable = verdicts
        .iter()
        .filter(|v| v.class == Stability::Unstable)
        .count();
    let mut summary = format!(
        "diagram q in [0, {}], a in [{}, {}], {}x{} cells, {} unstable, {} curves\n",
        spec.q_max,
        spec.a_min,
        spec.a_max,
        n,
        n,
        unstable,
        curves.len()
    );
    for c in &crossings {
        let _ = writeln!(
            summary,
            "{} {} meets {} at q = {:.6} (x0 = {:.6})",
            c.label, c.mode, c.curve, c.q, c.x0
        );
    }
    Ok(Outcome { files, summary })
}

fn band_table(intervals: &[ActivatingInterval], x0_max: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<26}  {:<9}  note", "x0 band", "predicted");
    for b in capture_bands(intervals, x0_max, NARROW_WIDTH) {
        let note = if b.narrow { "narrow" } else { "" };
        let range = format!("({:.6}, {:.6})", b.x0_range.lo, b.x0_range.hi);
        let _ = writeln!(s, "{range:<26}  {:<9}  {note}", b.capture.as_str());
    }
    s
}

fn interval_rows(intervals: &[ActivatingInterval]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<4}  {:>6}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}  flags",
        "mode", "region", "x0_lo", "x0_hi", "q_lo", "q_hi", "E_lo", "E_hi", "width"
    );
    for iv in intervals {
        let mut flags = Vec::new();
        if iv.x0_range.width() < NARROW_WIDTH {
            flags.push("narrow");
        }
        if iv.truncated {
            flags.push("truncated");
        }
        let _ = writeln!(
            s,
            "{:<4}  {:>6}  {:>10.6}  {:>10.6}  {:>10.6}  {:>10.6}  {:>10.6}  {:>10.6}  {:>10.6}  {}",
            iv.mode.to_string(),
            iv.region_order,
            iv.x0_range.lo,
            iv.x0_range.hi,
            iv.q_range.lo,
            iv.q_range.hi,
            iv.energy_range.lo,
            iv.energy_range.hi,
            iv.x0_range.width(),
            flags.join(",")
        );
    }
    s
}

fn sorted(mut intervals: Vec<ActivatingInterval>) -> Vec<ActivatingInterval> {
    intervals.sort_by(|a, b| a.x0_range.lo.total_cmp(&b.x0_range.lo));
    intervals
}

/// Threshold energy and its amplitude, only for the unweighted coupling.
fn threshold_energy(exp: &Experiment) -> Result<Option<(f64, f64)>> {
    if axis_weights(exp) != Some([1.0, 1.0]) {
        return Ok(None);
    }
    let e = first_stability_threshold(&exp.system)?;
    Ok(Some((e, amplitude_of_energy(exp.system.mu(), e)?)))
}

/// Activating intervals as CSV plus a text table of capture bands.
pub fn intervals(exp: &Experiment, out: &Path) -> Result<Outcome> {
    let mut files = Vec::new();
    let Some(ivs) = intervals_for(exp)? else {
        let text = format!(
            "{}: potential {} has no activating intervals (the axis curvature vanishes)\n",
            exp.name, exp.potential
        );
        write_text(out, "intervals.txt", &text, &mut files)?;
        return Ok(Outcome {
            files,
            summary: text,
        });
    };
    let ivs = sorted(ivs);
    let mut w = create(out, "intervals.csv", &mut files)?;
    writeln!(
        w,
        "mode,region,q_lo,q_hi,x0_lo,x0_hi,E_lo,E_hi,width,narrow,truncated"
    )?;
    for iv in &ivs {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            iv.mode.number(),
            iv.region_order,
            iv.q_range.lo,
            iv.q_range.hi,
            iv.x0_range.lo,
            iv.x0_range.hi,
            iv.energy_range.lo,
            iv.energy_range.hi,
            iv.x0_range.width(),
            iv.x0_range.width() < NARROW_WIDTH,
            iv.truncated
        )?;
    }
    w.flush()?;

    let mut text = format!(
        "{}: activating intervals for x0 in (0, {}], potential {}\n\n",
        exp.name, exp.x0_max, exp.potential
    );
    text.push_str(&interval_rows(&ivs));
    if let Some((e, x)) = threshold_energy(exp)? {
        let _ = writeln!(text, "\nfirst stability threshold E = {e:.6} (x0 = {x:.6})");
    }
    text.push('\n');
    text.push_str(&band_table(&ivs, exp.x0_max));
    write_text(out, "intervals.txt", &text, &mut files)?;
    Ok(Outcome {
        files,
        summary: text,
    })
}

/// Keeps the extremes of each bucket so the envelope survives thinning.
fn thin(points: &[(f64, f64)], max_points: usize) -> Vec<(f64, f64)> {
    let bucket = points.len().div_ceil(max_points / 2).max(1);
    if bucket == 1 {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(max_points + 2);
    for chunk in points.chunks(bucket) {
        let lo = chunk.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let hi = chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if lo.0 <= hi.0 {
            out.extend([*lo, *hi]);
        } else {
            out.extend([*hi, *lo]);
        }
    }
    out
}

fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    let t_end = traj.samples.last().map(|s| s.t).unwrap_or(1.0);
    let bound = Mode::BOTH
        .iter()
        .map(|&m| traj.max_abs(m))
        .fold(0.0f64, f64::max)
        .max(1e-300)
        * 1.05;
    let mut plot = Plot::new((0.0, t_end.max(1e-12)), (-bound, bound), title, "t", "z");
    for (mode, color) in [(Mode::Z1, "#d62728"), (Mode::Z2, "black")] {
        let pts: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.z(mode))).collect();
        plot.line(&thin(&pts, 6000), color, 0.8, None);
    }
    plot.legend(&[("#d62728", "z1"), ("black", "z2")]);
    plot.render()
}

/// Number as typed, for file names.
fn tag(x: f64) -> String {
    x.to_string()
}

fn verdict_lines(v: &RmceVerdict) -> String {
    let mut s = String::new();
    for mode in Mode::BOTH {
        let g = v.growth(mode);
        let _ = writeln!(
            s,
            "{mode}: growth {:.3}, max |{mode}| {:.6}, first crossing {}",
            g.growth_factor,
            g.max_amplitude,
            g.first_crossing
                .map(|t| format!("t = {t:.2}"))
                .unwrap_or_else(|| "none".into())
        );
    }
    let _ = writeln!(
        s,
        "capture: {} (any crossing: {})",
        v.capture.as_str(),
        v.raw_capture.as_str()
    );
    s
}

/// Integrates one amplitude and writes the samples as CSV and SVG.
pub fn simulate(exp: &Experiment, out: &Path) -> Result<(Outcome, Trajectory)> {
    let mut files = Vec::new();
    let traj = integrate(&exp.system, &exp.potential, exp.t_end, &exp.settings)?;
    let x0 = exp.system.x0();
    let stem = format!("trajectory_x0_{}", tag(x0));
    let mut w = create(out, &format!("{stem}.csv"), &mut files)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    let title = format!("{}: x0 = {}", exp.name, tag(x0));
    write_text(
        out,
        &format!("{stem}.svg"),
        &trajectory_svg(&traj, &title),
        &mut files,
    )?;

    let mut summary = format!(
        "{}: x0 = {}, q = {:.6}, E = {:.6}, {} samples, max relative drift {:.3e}{}\n",
        exp.name,
        x0,
        q_of_amplitude(exp.system.mu(), x0),
        exp.system.energy(),
        traj.samples.len(),
        traj.max_relative_drift,
        if traj.degraded { " (degraded)" } else { "" }
    );
    if let Some(ivs) = intervals_for(exp)? {
        let p = crate::resonance::predicted_capture(&ivs, x0);
        let _ = writeln!(summary, "predicted: {}", p.as_str());
    }
    match detect(&traj, exp.threshold) {
        Ok(v) => summary.push_str(&verdict_lines(&v)),
        Err(e) => {
            let _ = writeln!(summary, "no verdict: {e}");
        }
    }
    Ok((Outcome { files, summary }, traj))
}

pub fn sweep_spec(exp: &Experiment) -> Result<SweepSpec> {
    if exp.grid.is_empty() {
        return Err(Error::Config(
            "sweep needs an amplitude grid (amplitudes.grid or grid_start/grid_stop/grid_step)"
                .into(),
        ));
    }
    Ok(SweepSpec {
        template: exp.system,
        potential: exp.potential,
        grid: exp.grid.clone(),
        t_end: exp.t_end,
        settings: exp.settings,
        threshold: exp.threshold,
        resonance: ResonanceOptions::default(),
    })
}

fn sweep_text(exp: &Experiment, table: &SweepTable) -> String {
    let mut s = format!(
        "{}: threshold {}, t_end {}, potential {}\n\n",
        exp.name, exp.threshold, exp.t_end, exp.potential
    );
    let _ = writeln!(
        s,
        "{:>8}  {:>9}  {:>9}  {:>9}  {:>10}  {:>10}  {:>9}  {:>9}  {:>9}  agreement",
        "x0", "predicted", "observed", "any", "G1", "G2", "t_cross1", "t_cross2", "drift"
    );
    let cross = |v: &Option<RmceVerdict>, m: Mode| {
        v.and_then(|v| v.growth(m).first_crossing)
            .map(|t| format!("{t:.2}"))
            .unwrap_or_else(|| "-".into())
    };
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{:>8}  {:>9}  {:>9}  {:>9}  {:>10}  {:>10}  {:>9}  {:>9}  {:>9}  {}",
            tag(r.x0),
            r.predicted.map(|p| p.as_str()).unwrap_or("-"),
            r.verdict.map(|v| v.capture.as_str()).unwrap_or("error"),
            r.verdict.map(|v| v.raw_capture.as_str()).unwrap_or("-"),
            r.verdict
                .map(|v| format!("{:.3}", v.growth(Mode::Z1).growth_factor))
                .unwrap_or_else(|| "-".into()),
            r.verdict
                .map(|v| format!("{:.3}", v.growth(Mode::Z2).growth_factor))
                .unwrap_or_else(|| "-".into()),
            cross(&r.verdict, Mode::Z1),
            cross(&r.verdict, Mode::Z2),
            r.max_relative_drift
                .map(|d| format!("{d:.1e}"))
                .unwrap_or_else(|| "-".into()),
            r.agreement.as_str()
        );
        if let Some(e) = &r.error {
            let _ = writeln!(s, "          note: {e}");
        }
    }
    s.push('\n');
    s.push_str(&agreement_counts(table));
    s
}

fn agreement_counts(table: &SweepTable) -> String {
    let count = |a: Agreement| table.rows.iter().filter(|r| r.agreement == a).count();
    format!(
        "agree {}, disagree {}, excused {}, degraded {}, unpredicted {}\n",
        count(Agreement::Agree),
        count(Agreement::Disagree),
        count(Agreement::Excused),
        count(Agreement::Degraded),
        count(Agreement::Unpredicted)
    )
}

/// Runs the amplitude grid and writes the verdict table.
pub fn sweep(exp: &Experiment, out: &Path) -> Result<(Outcome, SweepTable)> {
    let mut files = Vec::new();
    let table = run_sweep(&sweep_spec(exp)?)?;
    let mut w = create(out, "sweep.csv", &mut files)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let text = sweep_text(exp, &table);
    write_text(out, "sweep.txt", &text, &mut files)?;
    Ok((
        Outcome {
            files,
            summary: text,
        },
        table,
    ))
}

/// Intervals, sweep and a markdown summary of both.
pub fn report(exp: &Experiment, out: &Path) -> Result<Outcome> {
    let iv = intervals(exp, out)?;
    let (sw, table) = sweep(exp, out)?;
    let mut files = iv.files;
    files.extend(sw.files);

    let mut md = format!("# {}\n\n", exp.name);
    let s = &exp.system;
    let _ = writeln!(
        md,
        "mu = {}, lambda1 = {}, lambda2 = {}, epsilon = {}, potential {}\n",
        s.mu(),
        s.lambda(Mode::Z1),
        s.lambda(Mode::Z2),
        s.epsilon(),
        exp.potential
    );
    md.push_str("## Activating intervals\n\n");
    match intervals_for(exp)? {
        Some(ivs) => {
            let ivs = sorted(ivs);
            md.push_str("| mode | region | x0 range | q range | E range | note |\n");
            md.push_str("|---|---|---|---|---|---|\n");
            for iv in &ivs {
                let mut note = Vec::new();
                if iv.x0_range.width() < NARROW_WIDTH {
                    note.push("narrow");
                }
                if iv.truncated {
                    note.push("truncated");
                }
                let _ = writeln!(
                    md,
                    "| {} | {} | ({:.6}, {:.6}) | ({:.6}, {:.6}) | ({:.6}, {:.6}) | {} |",
                    iv.mode,
                    iv.region_order,
                    iv.x0_range.lo,
                    iv.x0_range.hi,
                    iv.q_range.lo,
                    iv.q_range.hi,
                    iv.energy_range.lo,
                    iv.energy_range.hi,
                    note.join(", ")
                );
            }
            if let Some((e, x)) = threshold_energy(exp)? {
                let _ = writeln!(
                    md,
                    "\nBelow E = {e:.6} (x0 = {x:.6}) neither residual mode is activating.\n"
                );
            } else {
                md.push('\n');
            }
            md.push_str("```\n");
            md.push_str(&band_table(&ivs, exp.x0_max));
            md.push_str("```\n\n");
        }
        None => md.push_str("None: the axis curvature of this potential vanishes.\n\n"),
    }

    md.push_str("## Sweep\n\n");
    let _ = writeln!(
        md,
        "{} amplitudes, t_end = {}, threshold {}.\n",
        table.rows.len(),
        exp.t_end,
        exp.threshold
    );
    md.push_str("| x0 | predicted | observed | any crossing | G1 | G2 | drift | agreement |\n");
    md.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in &table.rows {
        let g = |m: Mode| {
            r.verdict
                .map(|v| format!("{:.2}", v.growth(m).growth_factor))
                .unwrap_or_else(|| "-".into())
        };
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            tag(r.x0),
            r.predicted.map(|p| p.as_str()).unwrap_or("-"),
            r.verdict.map(|v| v.capture.as_str()).unwrap_or("error"),
            r.verdict.map(|v| v.raw_capture.as_str()).unwrap_or("-"),
            g(Mode::Z1),
            g(Mode::Z2),
            r.max_relative_drift
                .map(|d| format!("{d:.1e}"))
                .unwrap_or_else(|| "-".into()),
            r.agreement.as_str()
        );
    }
    md.push('\n');
    md.push_str(&agreement_counts(&table));
    let worst = table
        .rows
        .iter()
        .filter_map(|r| r.max_relative_drift)
        .fold(0.0f64, f64::max);
    let _ = writeln!(md, "\nLargest relative energy drift: {worst:.2e}.");
    write_text(out, "report.md", &md, &mut files)?;
    Ok(Outcome { files, summary: md })
}
