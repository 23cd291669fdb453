//! Minimal SVG plotting: one axes box, rectangles, polylines, labels.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 48.0;

pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    title: String,
    x_label: String,
    y_label: String,
}

fn px(v: f64) -> String {
    format!("{:.2}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick spacing giving roughly `target` ticks over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let nice = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

impl Plot {
    pub fn new(x: (f64, f64), y: (f64, f64), title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            x,
            y,
            body: String::new(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }

    fn sx(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    /// Axis-aligned cell between two data corners.
    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str) {
        let (a, b) = (self.sx(x0), self.sx(x1));
        let (c, d) = (self.sy(y1), self.sy(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="none" shape-rendering="crispEdges"/>"#,
            px(a),
            px(c),
            px(b - a),
            px(d - c)
        );
    }

    /// Polyline clipped to the y range by splitting at out-of-range points.
    pub fn line(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dash: Option<&str>) {
        let dash = dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, body: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(
                    body,
                    r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}"{dash} points="{}"/>"#,
                    run.join(" ")
                );
            }
            run.clear();
        };
        for &(x, y) in points {
            if y.is_finite() && y >= self.y.0 && y <= self.y.1 {
                run.push(format!("{},{}", px(self.sx(x)), px(self.sy(y))));
            } else {
                flush(&mut run, &mut self.body);
            }
        }
        flush(&mut run, &mut self.body);
    }

    pub fn marker(&mut self, x: f64, y: f64, fill: &str, label: &str) {
        let (cx, cy) = (self.sx(x), self.sy(y));
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="3" fill="{fill}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            px(cx),
            px(cy),
            px(cx + 4.0),
            px(cy - 4.0),
            escape(label)
        );
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (color, text)) in entries.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT - 200.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{}</text>"#,
                px(x),
                px(y),
                px(x + 24.0),
                px(y),
                px(x + 30.0),
                px(y + 4.0),
                escape(text)
            );
        }
    }

    fn axes(&self) -> String {
        let mut s = String::new();
        let (l, r) = (LEFT, WIDTH - RIGHT);
        let (t, b) = (TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            px(l),
            px(t),
            px(r - l),
            px(b - t)
        );
        let dx = tick_step(self.x.1 - self.x.0, 8.0);
        let mut k = (self.x.0 / dx).ceil() as i64;
        while (k as f64) * dx <= self.x.1 + 1e-12 * dx {
            let v = k as f64 * dx;
            let x = self.sx(v);
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-size="11" text-anchor="middle">{4}</text>"#,
                px(x),
                px(b),
                px(b + 5.0),
                px(b + 18.0),
                fmt_tick(v, dx)
            );
            k += 1;
        }
        let dy = tick_step(self.y.1 - self.y.0, 6.0);
        let mut k = (self.y.0 / dy).ceil() as i64;
        while (k as f64) * dy <= self.y.1 + 1e-12 * dy {
            let v = k as f64 * dy;
            let y = self.sy(v);
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" font-size="11" text-anchor="end">{5}</text>"#,
                px(l - 5.0),
                px(y),
                px(l),
                px(l - 8.0),
                px(y + 4.0),
                fmt_tick(v, dy)
            );
            k += 1;
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            px(0.5 * (l + r)),
            px(HEIGHT - 10.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            px(0.5 * (t + b)),
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
            px(0.5 * (l + r)),
            escape(&self.title)
        );
        s
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
             <clipPath id=\"frame\"><rect x=\"{l}\" y=\"{t}\" width=\"{pw}\" height=\"{ph}\"/></clipPath>\n\
             <g clip-path=\"url(#frame)\">\n{body}</g>\n{axes}</svg>\n",
            w = WIDTH,
            h = HEIGHT,
            l = LEFT,
            t = TOP,
            pw = WIDTH - LEFT - RIGHT,
            ph = HEIGHT - TOP - BOTTOM,
            body = self.body,
            axes = self.axes(),
        )
    }
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < 1e-12 * step { 0.0 } else { v };
    format!("{v:.decimals$}")
}
