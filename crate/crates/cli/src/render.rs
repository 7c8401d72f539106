//! Static SVG plots of segmented trajectories.

use std::fmt::Write as _;

use agentseg::Trajectory;

use crate::seg::Segment;

/// Indexed by agent id, wrapping around.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
];

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

/// Agent per point. Windows cover `(i, i+1, i+2)` and label their center;
/// the two terminals take the label of the nearest window.
pub fn point_labels(seg: &Segment, n_points: usize) -> Vec<usize> {
    if seg.labels.is_empty() {
        // no agent labels: colour by span between boundaries
        let mut span = 0;
        return (0..n_points)
            .map(|i| {
                if seg.boundaries.contains(&i) {
                    span += 1;
                }
                span
            })
            .collect();
    }
    let n = seg.labels.len();
    (0..n_points).map(|i| seg.labels[i.saturating_sub(1).min(n - 1)]).collect()
}

/// Contiguous runs of equal label as `(label, first, last)`; each run ends on
/// the first point of the next so the drawn line stays connected.
pub fn spans(labels: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            out.push((labels[start], start, i.min(labels.len() - 1)));
            start = i;
        }
    }
    out
}

pub fn render(traj: &Trajectory, seg: &Segment) -> String {
    let pts = traj.points();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let extent = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / extent;
    let map = |i: usize| (MARGIN + (pts[i].x - x0) * scale, MARGIN + (pts[i].y - y0) * scale);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(traj.id()));
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let labels = point_labels(seg, pts.len());
    let runs = spans(&labels);
    for (label, first, last) in &runs {
        let coords: Vec<String> = (*first..=*last)
            .map(|i| {
                let (x, y) = map(i);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="span" data-agent="{label}" points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"#,
            coords.join(" "),
            PALETTE[label % PALETTE.len()]
        );
    }

    for &b in &seg.boundaries {
        if b < pts.len() {
            let (x, y) = map(b);
            let _ = writeln!(svg, r##"<circle class="boundary" cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="#000000" stroke-width="1.5"/>"##);
        }
    }

    // arrowhead at the final point, pointing along the last step
    let last = pts.len() - 1;
    let (tx, ty) = map(last);
    let (dx, dy) = if last > 0 {
        let (px, py) = map(last - 1);
        (tx - px, ty - py)
    } else {
        (1.0, 0.0)
    };
    let norm = dx.hypot(dy);
    let (ux, uy) = if norm > 0.0 { (dx / norm, dy / norm) } else { (1.0, 0.0) };
    let (len, half) = (12.0, 5.0);
    let (bx, by) = (tx - ux * len, ty - uy * len);
    let color = PALETTE[labels[last] % PALETTE.len()];
    let _ = writeln!(
        svg,
        r#"<polygon class="arrow" points="{tx:.2},{ty:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
        bx - uy * half,
        by + ux * half,
        bx + uy * half,
        by - ux * half
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// File-system safe name for an id.
pub fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
