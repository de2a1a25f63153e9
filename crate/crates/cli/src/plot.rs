//! Static SVG forecast plots: observed counts as dots, the 5-95% band, the
//! interquartile band and the median line.

use std::fmt::Write;

use epiassim_core::assimilation::WindowOutcome;
use epiassim_core::observation::EpidemicSeries;

use crate::artifacts::Observable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 45.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, day: f64) -> f64 {
        LEFT + (day - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - v / self.y1 * (HEIGHT - TOP - BOTTOM)
    }
}

/// Rounds `max` up to 1, 2 or 5 times a power of ten.
fn nice_ceiling(max: f64) -> f64 {
    if !(max > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|c| *c >= max).unwrap_or(10.0 * mag)
}

pub fn forecast_svg(series: &EpidemicSeries, w: &WindowOutcome, obs: Observable, locality: &str) -> String {
    let b = w.bounds;
    let counts = obs.counts(series);
    let observed: Vec<(usize, u64)> = (b.start()..b.forecast.end.min(series.len())).map(|d| (d, counts[d])).collect();
    let quantiles: Vec<(usize, [f64; 5])> = w.forecast.days.iter().map(|d| (d.day, obs.quantiles(d).as_array())).collect();
    let top = observed
        .iter()
        .map(|(_, c)| *c as f64)
        .chain(quantiles.iter().map(|(_, q)| q[4]))
        .fold(0.0, f64::max);
    let fr = Frame {
        x0: b.start() as f64,
        x1: b.forecast.end as f64,
        y1: nice_ceiling(top * 1.05),
    };
    // counts for interval [d, d + 1] are drawn at its midpoint
    let mid = |d: usize| fr.x(d as f64 + 0.5);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(
        s,
        r##"<text x="{}" y="22" text-anchor="middle" font-size="15">{} daily {}, window {}</text>"##,
        WIDTH / 2.0,
        escape(locality),
        obs.as_str(),
        b.window
    );

    let band = |lo: usize, hi: usize, fill: &str, out: &mut String| {
        let mut pts: Vec<String> = quantiles.iter().map(|(d, q)| format!("{:.2},{:.2}", mid(*d), fr.y(q[hi]))).collect();
        pts.extend(quantiles.iter().rev().map(|(d, q)| format!("{:.2},{:.2}", mid(*d), fr.y(q[lo]))));
        let _ = writeln!(out, r##"<polygon points="{}" fill="{fill}" stroke="none"/>"##, pts.join(" "));
    };
    band(0, 4, "#f4b6b6", &mut s);
    band(1, 3, "#e06666", &mut s);
    let median: Vec<String> = quantiles.iter().map(|(d, q)| format!("{:.2},{:.2}", mid(*d), fr.y(q[2]))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c00000" stroke-width="2"/>"##, median.join(" "));

    for (d, c) in &observed {
        let used = *d < b.learning.end;
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"##,
            mid(*d),
            fr.y(*c as f64),
            if used { "black" } else { "#777777" }
        );
    }

    for (day, label) in [(b.learning.end, "learning end"), (b.forecast.start, "forecast")] {
        let x = fr.x(day as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#555555" stroke-dasharray="4 3"/>"##,
            HEIGHT - BOTTOM
        );
        let _ = writeln!(s, r##"<text x="{:.2}" y="{}" fill="#555555">{label}</text>"##, x + 3.0, TOP + 12.0);
    }

    let (xa, xb, yb) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM);
    let _ = writeln!(s, r##"<path d="M{xa},{TOP} L{xa},{yb} L{xb},{yb}" fill="none" stroke="black"/>"##);
    for i in 0..=4 {
        let v = fr.y1 * i as f64 / 4.0;
        let y = fr.y(v);
        let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{xa}" y2="{y:.2}" stroke="black"/>"##, xa - 4.0);
        let _ = writeln!(s, r##"<text x="{}" y="{:.2}" text-anchor="end">{v}</text>"##, xa - 7.0, y + 4.0);
    }
    for day in [b.start(), b.learning.end, b.forecast.start, b.forecast.end] {
        let x = fr.x(day as f64);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{yb}" x2="{x:.2}" y2="{}" stroke="black"/>"##, yb + 4.0);
        let _ = writeln!(s, r##"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##, yb + 18.0, series.date(day));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceilings() {
        assert_eq!(nice_ceiling(0.0), 1.0);
        assert_eq!(nice_ceiling(3.2), 5.0);
        assert_eq!(nice_ceiling(120.0), 200.0);
        assert_eq!(nice_ceiling(1000.0), 1000.0);
    }
}
