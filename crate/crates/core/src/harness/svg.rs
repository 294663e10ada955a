//! Standalone SVG plots for benchmark reports. Numbers are printed with fixed
//! precision so the files are byte-stable.

use std::fmt::Write;

use super::benchmark::BenchmarkReport;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Affine map from a data window onto the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self::in_area(x, y, LEFT, TOP, W - LEFT - RIGHT, H - TOP - BOTTOM)
    }

    fn in_area(x: (f64, f64), y: (f64, f64), left: f64, top: f64, width: f64, height: f64) -> Self {
        let widen = |(a, b): (f64, f64)| {
            if b - a > 1e-12 {
                (a, b)
            } else {
                (a - 0.5, b + 0.5)
            }
        };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self {
            x0,
            x1,
            y0,
            y1,
            left,
            top,
            width,
            height,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (self.y1 - y) / (self.y1 - self.y0) * self.height
    }

    fn axes(
        &self,
        out: &mut String,
        xticks: &[(f64, String)],
        yticks: &[(f64, String)],
        xlabel: &str,
        ylabel: &str,
    ) {
        let (l, t, r, b) = (
            self.left,
            self.top,
            self.left + self.width,
            self.top + self.height,
        );
        let _ = writeln!(
            out,
            r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            self.width, self.height
        );
        for (v, label) in xticks {
            let x = self.px(*v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                b + 5.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                b + 18.0
            );
        }
        for (v, label) in yticks {
            let y = self.py(*v);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#,
                l - 5.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                l - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
            (l + r) / 2.0,
            b + 38.0
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0
        );
    }

    fn polyline(
        &self,
        out: &mut String,
        pts: impl Iterator<Item = (f64, f64)>,
        stroke: &str,
        extra: &str,
    ) {
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" {extra}/>"#,
            d.trim_end()
        );
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{title}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0
    );
}

fn legend(out: &mut String, names: &[String]) {
    let x = W - RIGHT + 12.0;
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            x + 20.0,
            color(i)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{name}</text>"#,
            x + 26.0,
            y + 4.0
        );
    }
}

/// Round numbers spanning `[lo, hi]`, about `n` of them.
fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<(f64, String)> {
    let span = (hi - lo).max(1e-12);
    let raw = span / n.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut ticks = Vec::new();
    let mut k = (lo / step).ceil();
    while k * step <= hi + 1e-9 * span {
        let v = k * step;
        ticks.push((
            v,
            format!("{:.*}", decimals, if v == 0.0 { 0.0 } else { v }),
        ));
        k += 1.0;
    }
    ticks
}

fn label(r: &BenchmarkReport) -> String {
    r.config.agent.to_string()
}

/// Median accumulated cost per episode with the bootstrap band, one series per report.
pub fn learning_curve_svg(reports: &[&BenchmarkReport]) -> String {
    let episodes = reports.iter().map(|r| r.curve.len()).max().unwrap_or(1);
    let ymax = reports
        .iter()
        .flat_map(|r| &r.curve)
        .map(|p| p.ci_high.max(p.median))
        .fold(0.0, f64::max);
    let ymin = reports
        .iter()
        .flat_map(|r| &r.curve)
        .map(|p| p.ci_low.min(p.median))
        .fold(ymax, f64::min)
        .min(0.0);
    let f = Frame::new((1.0, episodes.max(2) as f64), (ymin, ymax * 1.05));
    let mut out = String::new();
    open(&mut out, "Accumulated cost per episode (median, 95% band)");
    let xt: Vec<(f64, String)> = nice_ticks(1.0, episodes as f64, 8)
        .into_iter()
        .filter(|(v, _)| v.fract() == 0.0)
        .map(|(v, _)| (v, format!("{}", v as i64)))
        .collect();
    f.axes(
        &mut out,
        &xt,
        &nice_ticks(ymin, ymax * 1.05, 6),
        "episode",
        "accumulated cost",
    );
    for (i, r) in reports.iter().enumerate() {
        let mut band = String::new();
        for p in &r.curve {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                f.px(p.episode as f64 + 1.0),
                f.py(p.ci_high)
            );
        }
        for p in r.curve.iter().rev() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                f.px(p.episode as f64 + 1.0),
                f.py(p.ci_low)
            );
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end(),
            color(i)
        );
        f.polyline(
            &mut out,
            r.curve.iter().map(|p| (p.episode as f64 + 1.0, p.median)),
            color(i),
            r#"stroke-width="2""#,
        );
    }
    legend(
        &mut out,
        &reports.iter().map(|r| label(r)).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// Cumulative stage cost against time for each seed's best episode, log scale.
pub fn cost_vs_time_svg(reports: &[&BenchmarkReport]) -> String {
    let floor = 1e-3;
    let series = |r: &BenchmarkReport| -> Vec<Vec<(f64, f64)>> {
        let dt = r.config.dynamics.dt;
        r.seeds
            .iter()
            .map(|s| {
                s.best_cost_series
                    .iter()
                    .enumerate()
                    .map(|(k, c)| ((k + 1) as f64 * dt, c.max(floor).log10()))
                    .collect()
            })
            .collect()
    };
    let all: Vec<Vec<Vec<(f64, f64)>>> = reports.iter().map(|r| series(r)).collect();
    let pts = || all.iter().flatten().flatten();
    let tmax = pts().map(|p| p.0).fold(0.1, f64::max);
    let lmin = pts()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        .floor();
    let lmax = pts().map(|p| p.1).fold(lmin + 1.0, f64::max).ceil();
    let f = Frame::new((0.0, tmax), (lmin, lmax));
    let mut out = String::new();
    open(
        &mut out,
        "Accumulated cost over time, best episode per seed",
    );
    let yt: Vec<(f64, String)> = (lmin as i32..=lmax as i32)
        .map(|e| (e as f64, format!("1e{e}")))
        .collect();
    f.axes(
        &mut out,
        &nice_ticks(0.0, tmax, 6),
        &yt,
        "time [s]",
        "accumulated cost",
    );
    for (i, runs) in all.iter().enumerate() {
        for run in runs {
            f.polyline(
                &mut out,
                run.iter().copied(),
                color(i),
                r#"stroke-opacity="0.6""#,
            );
        }
    }
    legend(
        &mut out,
        &reports.iter().map(|r| label(r)).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

/// Best-episode paths on the plane with the goal disc and the high-cost zone.
pub fn trajectories_svg(reports: &[&BenchmarkReport]) -> String {
    let Some(first) = reports.first() else {
        return String::from("<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n");
    };
    let cfg = &first.config;
    let (hs, goal) = (&cfg.hotspot, &cfg.goal);
    let m = cfg.dynamics.zone_sigma_mult;
    let (rx, ry) = (m * hs.sigma_x, m * hs.sigma_y);
    let mut xs = vec![
        hs.mu_x - rx,
        hs.mu_x + rx,
        goal.target.x - goal.radius,
        goal.target.x + goal.radius,
    ];
    let mut ys = vec![
        hs.mu_y - ry,
        hs.mu_y + ry,
        goal.target.y - goal.radius,
        goal.target.y + goal.radius,
    ];
    for p in reports
        .iter()
        .flat_map(|r| &r.seeds)
        .flat_map(|s| &s.best_trajectory)
    {
        xs.push(p[0]);
        ys.push(p[1]);
    }
    let range = |v: &[f64]| {
        (
            v.iter().copied().fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let ((x0, x1), (y0, y1)) = (range(&xs), range(&ys));
    // equal aspect: pad the narrower axis
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let area_w = W - LEFT - RIGHT;
    let area_h = H - TOP - BOTTOM;
    let scale = ((x1 - x0) / area_w).max((y1 - y0) / area_h) * 1.1;
    let (hw, hh) = (scale * area_w / 2.0, scale * area_h / 2.0);
    let f = Frame::new((cx - hw, cx + hw), (cy - hh, cy + hh));

    let mut out = String::new();
    open(&mut out, "Best-episode trajectories");
    f.axes(
        &mut out,
        &nice_ticks(cx - hw, cx + hw, 6),
        &nice_ticks(cy - hh, cy + hh, 5),
        "x [m]",
        "y [m]",
    );
    let _ = writeln!(
        out,
        r##"<ellipse cx="{:.2}" cy="{:.2}" rx="{:.2}" ry="{:.2}" fill="#ff9896" fill-opacity="0.5" stroke="#d62728"/>"##,
        f.px(hs.mu_x),
        f.py(hs.mu_y),
        rx / scale,
        ry / scale
    );
    let _ = writeln!(
        out,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#98df8a" fill-opacity="0.5" stroke="#2ca02c"/>"##,
        f.px(goal.target.x),
        f.py(goal.target.y),
        goal.radius / scale
    );
    for (i, r) in reports.iter().enumerate() {
        for s in &r.seeds {
            f.polyline(
                &mut out,
                s.best_trajectory.iter().map(|p| (p[0], p[1])),
                color(i),
                r#"stroke-opacity="0.7""#,
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
        f.px(cfg.start.x),
        f.py(cfg.start.y)
    );
    legend(
        &mut out,
        &reports.iter().map(|r| label(r)).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::harness::{run_benchmark, ExperimentConfig};

    fn report() -> BenchmarkReport {
        let cfg = ExperimentConfig {
            agent: AgentKind::Nominal,
            seeds: vec![0, 1],
            episodes: 3,
            ..Default::default()
        };
        run_benchmark(&cfg).unwrap().report
    }

    #[test]
    fn ticks_are_round() {
        let t = nice_ticks(0.0, 97.0, 5);
        assert_eq!(
            t.iter().map(|p| p.1.as_str()).collect::<Vec<_>>(),
            ["0", "20", "40", "60", "80"]
        );
        let t = nice_ticks(-0.3, 0.3, 4);
        assert!(t.iter().any(|p| p.1 == "0.0"));
    }

    #[test]
    fn plots_are_well_formed_and_stable() {
        let r = report();
        for svg in [
            learning_curve_svg(&[&r]),
            cost_vs_time_svg(&[&r]),
            trajectories_svg(&[&r]),
        ] {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("NaN") && !svg.contains("inf"));
        }
        assert_eq!(trajectories_svg(&[&r]), trajectories_svg(&[&report()]));
        assert!(trajectories_svg(&[&r]).contains("<ellipse"));
    }
}
