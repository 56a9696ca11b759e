//! Phase-path plot: three 2D projections of the unit cube.

use std::fmt::Write;

use scfgame_core::dynamics::{Terminal, Trajectory};

const PANEL: f64 = 260.0;
const MARGIN: f64 = 44.0;
const GAP: f64 = 36.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Coordinate pairs shown in each panel.
const PROJECTIONS: [(usize, usize, &str, &str); 3] =
    [(0, 1, "x", "y"), (0, 2, "x", "z"), (1, 2, "y", "z")];

fn panel_origin(panel: usize) -> (f64, f64) {
    (MARGIN + panel as f64 * (PANEL + GAP + MARGIN), MARGIN / 2.0)
}

fn to_screen(panel: usize, u: f64, v: f64) -> (f64, f64) {
    let (ox, oy) = panel_origin(panel);
    (ox + u * PANEL, oy + (1.0 - v) * PANEL)
}

/// Renders every trajectory as a polyline in each projection, with start
/// points hollow and converged end points filled black.
pub fn phase_plot(trajectories: &[Trajectory]) -> String {
    let width = 3.0 * (PANEL + MARGIN) + 2.0 * GAP + MARGIN / 2.0;
    let height = PANEL + 1.5 * MARGIN + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (panel, (iu, iv, lu, lv)) in PROJECTIONS.iter().enumerate() {
        let (ox, oy) = panel_origin(panel);
        let _ = writeln!(
            s,
            r##"<rect x="{ox:.1}" y="{oy:.1}" width="{PANEL:.1}" height="{PANEL:.1}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{lu}</text>"#,
            ox + PANEL / 2.0,
            oy + PANEL + 28.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{lv}</text>"#,
            ox - 24.0,
            oy + PANEL / 2.0
        );
        for (t, anchor, x, y) in [
            ("0", "end", ox - 4.0, oy + PANEL + 12.0),
            ("1", "middle", ox + PANEL, oy + PANEL + 14.0),
            ("1", "end", ox - 4.0, oy + 10.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{t}</text>"#
            );
        }

        for (k, traj) in trajectories.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let mut points = String::new();
            for sample in &traj.samples {
                let c = sample.state.to_array();
                let (px, py) = to_screen(panel, c[*iu], c[*iv]);
                let _ = write!(points, "{px:.2},{py:.2} ");
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
                points.trim_end()
            );
            let start = traj.samples[0].state.to_array();
            let (sx, sy) = to_screen(panel, start[*iu], start[*iv]);
            let _ = writeln!(
                s,
                r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="2.5" fill="white" stroke="{colour}"/>"#
            );
            if let Terminal::ConvergedTo(p) = traj.terminal {
                let c = p.to_array();
                let (ex, ey) = to_screen(panel, c[*iu], c[*iv]);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{ex:.2}" cy="{ey:.2}" r="4" fill="black"/>"#
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
