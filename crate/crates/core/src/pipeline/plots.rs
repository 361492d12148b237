//! Hand-written SVG figures.

use std::fmt::Write;

use super::Composition;
use crate::cluster::{EigengapProfile, SigmaStatus};
use crate::kinematics::{MeanEulerSignal, CHANNEL_NAMES, N_CHANNELS};

pub struct Palette;

impl Palette {
    const COLOURS: [&'static str; 10] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    ];

    pub fn colour(i: usize) -> &'static str {
        Self::COLOURS[i % Self::COLOURS.len()]
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps data ranges onto a pixel rectangle.
#[derive(Debug, Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(left: f64, top: f64, width: f64, height: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame {
            left,
            top,
            width,
            height,
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect class="axes" x="{l:.3}" y="{t:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 28.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.3} {:.3})">{}</text>"#,
            l - 34.0,
            t + h / 2.0,
            l - 34.0,
            t + h / 2.0,
            escape(y_label)
        );
        for (v, anchor_y) in [(self.y.0, t + h), (self.y.1, t)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="9" text-anchor="end">{:.3}</text>"#,
                l - 4.0,
                anchor_y + 3.0,
                v
            );
        }
    }
}

fn open(width: f64, height: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text class="title" x="{:.3}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn legend(out: &mut String, x: f64, y: f64, entries: &[(String, &str)]) {
    for (i, (label, colour)) in entries.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><rect x="{x:.3}" y="{:.3}" width="10" height="10" fill="{colour}"/><text x="{:.3}" y="{:.3}" font-size="10">{}</text></g>"#,
            yy - 9.0,
            x + 14.0,
            yy,
            escape(label)
        );
    }
}

fn polyline(out: &mut String, class: &str, colour: &str, pts: &[(f64, f64)]) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Gaps 1..=k_max against log10 σ, one polyline per gap index.
pub fn eigengap_svg(profile: &EigengapProfile, k_max: usize, title: &str) -> String {
    let (w, h) = (720.0, 420.0);
    let computed: Vec<_> = profile.entries.iter().filter(|e| !e.gaps.is_empty()).collect();
    let y_hi = computed
        .iter()
        .flat_map(|e| e.gaps.iter().take(k_max))
        .fold(0.0f64, |a, &b| a.max(b));
    let x_lo = profile.sigma_grid.first().map_or(0.0, |s| s.log10());
    let x_hi = profile.sigma_grid.last().map_or(1.0, |s| s.log10());
    let frame = Frame::new(60.0, 36.0, w - 190.0, h - 90.0, (x_lo, x_hi), (0.0, y_hi.max(1e-12)));
    let mut s = open(w, h, title);
    frame.axes(&mut s, "log10 sigma", "eigengap");
    for e in profile.entries.iter().filter(|e| e.status != SigmaStatus::Voting) {
        let x = frame.px(e.sigma.log10());
        let _ = writeln!(
            s,
            r##"<line class="skipped" x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#ddd"/>"##,
            frame.top,
            frame.top + frame.height
        );
    }
    let mut entries = Vec::new();
    for k in 1..=k_max {
        let pts: Vec<(f64, f64)> = computed
            .iter()
            .filter_map(|e| e.gaps.get(k - 1).map(|&g| (frame.px(e.sigma.log10()), frame.py(g))))
            .collect();
        polyline(&mut s, &format!("gap-{k}"), Palette::colour(k - 1), &pts);
        entries.push((format!("gap {k}"), Palette::colour(k - 1)));
    }
    legend(&mut s, w - 115.0, 50.0, &entries);
    close(s)
}

/// 2-D scatter coloured by label.
pub fn scatter_svg(coords: &[[f64; 2]], labels: &[usize], n_labels: usize, title: &str) -> String {
    let (w, h) = (560.0, 480.0);
    let range = |i: usize| {
        coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[i]), hi.max(c[i])))
    };
    let (x, y) = if coords.is_empty() { ((0.0, 1.0), (0.0, 1.0)) } else { (range(0), range(1)) };
    let frame = Frame::new(60.0, 36.0, w - 180.0, h - 90.0, x, y);
    let mut s = open(w, h, title);
    frame.axes(&mut s, "t-SNE 1", "t-SNE 2");
    for (c, &l) in coords.iter().zip(labels) {
        let _ = writeln!(
            s,
            r#"<circle class="point cluster-{l}" cx="{:.3}" cy="{:.3}" r="3" fill="{}"/>"#,
            frame.px(c[0]),
            frame.py(c[1]),
            Palette::colour(l)
        );
    }
    let entries: Vec<_> = (0..n_labels).map(|q| (format!("cluster {q}"), Palette::colour(q))).collect();
    legend(&mut s, w - 105.0, 50.0, &entries);
    close(s)
}

/// One stacked bar per person, segments per cluster.
pub fn composition_svg(comp: &Composition) -> String {
    let k = comp.counts.first().map_or(0, Vec::len);
    let n = comp.people.len().max(1);
    let (w, h) = (140.0 + 60.0 * n as f64, 420.0);
    let max_total = comp.counts.iter().map(|r| r.iter().sum::<usize>()).max().unwrap_or(0).max(1);
    let frame = Frame::new(60.0, 36.0, 60.0 * n as f64, h - 100.0, (0.0, n as f64), (0.0, max_total as f64));
    let mut s = open(w, h, "Cluster composition per person");
    frame.axes(&mut s, "person", "strokes");
    for (i, (person, row)) in comp.people.iter().zip(&comp.counts).enumerate() {
        let x = frame.px(i as f64 + 0.15);
        let bw = frame.px(i as f64 + 0.85) - x;
        let mut base = 0usize;
        for (q, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let y0 = frame.py(base as f64);
            let y1 = frame.py((base + c) as f64);
            let _ = writeln!(
                s,
                r#"<rect class="bar cluster-{q}" x="{x:.3}" y="{y1:.3}" width="{bw:.3}" height="{:.3}" fill="{}"><title>{} cluster {q}: {c}</title></rect>"#,
                y0 - y1,
                Palette::colour(q),
                escape(person)
            );
            base += c;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="10" text-anchor="middle">{}</text>"#,
            x + bw / 2.0,
            frame.top + frame.height + 14.0,
            escape(person)
        );
    }
    let entries: Vec<_> = (0..k).map(|q| (format!("cluster {q}"), Palette::colour(q))).collect();
    legend(&mut s, w - 70.0, 50.0, &entries);
    close(s)
}

/// Nine panels, one per joint-angle channel, over the normalized cycle.
pub fn mean_signal_svg(signal: &MeanEulerSignal, title: &str) -> String {
    let (pw, ph) = (220.0, 140.0);
    let (w, h) = (3.0 * (pw + 70.0) + 20.0, 3.0 * (ph + 60.0) + 40.0);
    let mut s = open(w, h, title);
    let k = signal.samples.len();
    for ch in 0..N_CHANNELS {
        let values = signal.channel(ch);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (row, col) = (ch / 3, ch % 3);
        let frame = Frame::new(
            60.0 + col as f64 * (pw + 70.0),
            40.0 + row as f64 * (ph + 60.0),
            pw,
            ph,
            (0.0, (k.max(2) - 1) as f64),
            if values.is_empty() { (0.0, 1.0) } else { (lo, hi) },
        );
        let _ = writeln!(s, r#"<g class="panel channel-{}">"#, CHANNEL_NAMES[ch]);
        frame.axes(&mut s, "cycle sample", &format!("{} (deg)", CHANNEL_NAMES[ch]));
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (frame.px(i as f64), frame.py(v))).collect();
        polyline(&mut s, "signal", Palette::colour(signal.cluster_id), &pts);
        s.push_str("</g>\n");
    }
    close(s)
}
