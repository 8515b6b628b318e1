//! Self-contained SVG report: `Phi`/`Psi` on linear axes, `Psi` on log-log axes
//! with the `C_inf u^-(gamma-1)` asymptote, and `Psi / Fbar` in the divergent regime.

use std::fmt::Write as _;

use ruin_core::asymptotics::{AsymptoticsReport, SeriesPoint};
use ruin_core::{Regime, SurvivalCurve};

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const MAX_POINTS: usize = 600;

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(lo: f64, hi: f64, log: bool) -> Self {
        if log {
            Axis {
                lo: lo.log10().floor(),
                hi: hi.log10().ceil().max(lo.log10().floor() + 1.0),
                log,
            }
        } else {
            let hi = if hi > lo { hi } else { lo + 1.0 };
            Axis { lo, hi, log }
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let x = if self.log { v.log10() } else { v };
        (x - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let step = ((b - a) / 8 + 1).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect()
        } else {
            (0..=5)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

struct Panel {
    top: f64,
    x: Axis,
    y: Axis,
}

impl Panel {
    fn px(&self, v: f64) -> f64 {
        MARGIN_L + self.x.frac(v) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, v: f64) -> f64 {
        let inner = PANEL_H - MARGIN_T - MARGIN_B;
        self.top + MARGIN_T + (1.0 - self.y.frac(v)) * inner
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (self.top + MARGIN_T, self.top + PANEL_H - MARGIN_B);
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{title}</text>"#,
            WIDTH / 2.0,
            self.top + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
            (x0 + x1) / 2.0,
            y1 + 38.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );
        for (v, label) in self.x.ticks() {
            let x = self.px(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{label}</text>"#,
                y1 + 5.0,
                y1 + 18.0
            );
        }
        for (v, label) in self.y.ticks() {
            let y = self.py(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{label}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 3.0
            );
        }
    }

    fn polyline(&self, svg: &mut String, id: &str, color: &str, dash: bool, pts: &[(f64, f64)]) {
        let mut coords = String::new();
        for &(u, v) in pts {
            let inside_log = (!self.x.log || u > 0.0) && (!self.y.log || v > 0.0);
            if inside_log && v.is_finite() {
                let _ = write!(coords, "{:.2},{:.2} ", self.px(u), self.py(v));
            }
        }
        let dash = if dash {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.trim_end()
        );
    }

    fn legend(&self, svg: &mut String, row: usize, color: &str, text: &str) {
        let x = WIDTH - MARGIN_R - 260.0;
        let y = self.top + MARGIN_T + 16.0 + 16.0 * row as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{text}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0
        );
    }
}

fn linear_indices(n: usize) -> Vec<usize> {
    if n <= MAX_POINTS {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_POINTS)
        .map(|k| k * (n - 1) / (MAX_POINTS - 1))
        .collect();
    idx.dedup();
    idx
}

fn geometric_indices(first: usize, last: usize) -> Vec<usize> {
    let (a, b) = (first.max(1) as f64, last as f64);
    let mut idx: Vec<usize> = (0..MAX_POINTS)
        .map(|k| (a * (b / a).powf(k as f64 / (MAX_POINTS - 1) as f64)).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn series(points: &[SeriesPoint]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.u, p.value)).collect()
}

pub fn render(curve: &SurvivalCurve, asym: &AsymptoticsReport, gamma: f64) -> String {
    let n = curve.len();
    let divergent = asym.regime == Regime::Divergent;
    let panels = if divergent { 3 } else { 2 };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{:.0}" viewBox="0 0 {WIDTH:.0} {:.0}" font-family="sans-serif">"#,
        PANEL_H * panels as f64,
        PANEL_H * panels as f64
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Linear panel up to where Psi has mostly decayed.
    let cut = curve
        .psi
        .iter()
        .position(|&p| p < 0.01)
        .unwrap_or(n - 1)
        .max(1);
    let lin = Panel {
        top: 0.0,
        x: Axis::new(0.0, curve.nodes[cut], false),
        y: Axis::new(0.0, 1.0, false),
    };
    lin.frame(
        &mut svg,
        "Survival and ruin probability",
        "u",
        "probability",
    );
    let idx = linear_indices(cut + 1);
    let phi: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (curve.nodes[i], curve.phi[i]))
        .collect();
    let psi: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (curve.nodes[i], curve.psi[i]))
        .collect();
    lin.polyline(&mut svg, "phi", "#1f77b4", false, &phi);
    lin.polyline(&mut svg, "psi", "#d62728", false, &psi);
    lin.legend(&mut svg, 0, "#1f77b4", "Phi(u)");
    lin.legend(&mut svg, 1, "#d62728", "Psi(u)");

    let idx = geometric_indices(1, n - 1);
    let psi_log: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| (curve.nodes[i], curve.psi[i]))
        .collect();
    let positive = psi_log.iter().map(|p| p.1).filter(|&v| v > 0.0);
    let y_lo = positive.clone().fold(f64::INFINITY, f64::min);
    let y_hi = positive.fold(0.0, f64::max);
    let log = Panel {
        top: PANEL_H,
        x: Axis::new(curve.nodes[1], curve.u_max(), true),
        y: Axis::new(y_lo.clamp(1e-300, 1.0), y_hi.max(1e-300), true),
    };
    log.frame(&mut svg, "Ruin probability, log-log", "u", "Psi(u)");
    log.polyline(&mut svg, "psi-loglog", "#d62728", false, &psi_log);
    log.legend(&mut svg, 0, "#d62728", "Psi(u)");
    if let (Regime::PowerLaw, Some(c_inf)) = (asym.regime, asym.c_infinity) {
        if c_inf > 0.0 {
            let u_max = curve.u_max();
            let pts: Vec<(f64, f64)> = (0..=50)
                .map(|k| {
                    let u = u_max * 10f64.powf(-2.0 + 2.0 * k as f64 / 50.0);
                    (u, c_inf * u.powf(1.0 - gamma))
                })
                .collect();
            log.polyline(&mut svg, "asymptote", "#2ca02c", true, &pts);
            log.legend(
                &mut svg,
                1,
                "#2ca02c",
                &format!("C_inf u^-(gamma-1), C_inf = {c_inf:.4}"),
            );
        }
    }

    if divergent {
        let pts = series(&asym.subexp_ratio);
        let (lo, hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
        let (xlo, xhi) = (
            pts.first().map_or(1.0, |p| p.0),
            pts.last().map_or(10.0, |p| p.0),
        );
        let panel = Panel {
            top: 2.0 * PANEL_H,
            x: Axis::new(xlo, xhi, true),
            y: Axis::new(0.0, if hi > lo { hi * 1.05 } else { 1.0 }, false),
        };
        panel.frame(
            &mut svg,
            "Subexponential diagnostic Psi(u) / Fbar(u)",
            "u",
            "ratio",
        );
        panel.polyline(&mut svg, "subexp-ratio", "#9467bd", false, &pts);
        panel.legend(&mut svg, 0, "#9467bd", "Psi(u) / Fbar(u)");
    }

    svg.push_str("</svg>\n");
    svg
}
