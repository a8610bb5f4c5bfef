//! Top-down SVG: walls, a step-coloured trajectory, optional loop edges.

use std::fmt::Write as _;

use topowalk::topo::TopoGraph;
use topowalk::world::Cell;
use topowalk::{Pose, World};

/// Pixels per metre.
const SCALE: f64 = 40.0;

const TEXTURE_COLORS: [&str; 8] = [
    "#4d4d4d", "#7a5230", "#2f5d50", "#5b4a7a", "#7a2f3a", "#3a5a7a", "#6b6b2f", "#2f2f2f",
];
const COLD: (f64, f64, f64) = (32.0, 64.0, 255.0);
const WARM: (f64, f64, f64) = (255.0, 208.0, 0.0);
const LOOP_COLOR: &str = "#9b30ff";

/// Colour of step `i` of `n`, blue at the start to yellow at the end.
pub fn step_color(i: usize, n: usize) -> String {
    let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(COLD.0, WARM.0), mix(COLD.1, WARM.1), mix(COLD.2, WARM.2))
}

fn px(v: f64) -> String {
    format!("{:.2}", v * SCALE)
}

/// Draws `poses` in order and one line per entry of `loops`.
pub fn render_svg(world: &World, poses: &[Pose], loops: &[((f64, f64), (f64, f64))], config_hash: &str) -> String {
    let (w, h) = (world.width() as f64 * world.cell_size(), world.height() as f64 * world.cell_size());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" data-config-hash="{config_hash}">"#,
        px(w),
        px(h),
        px(w),
        px(h)
    );
    let _ = writeln!(out, "<!-- config_hash={config_hash} -->");
    let _ = writeln!(out, "<title>{}</title>", world.name.replace(['<', '>', '&'], "_"));
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#f4f1ea"/>"##);
    out.push_str("<g class=\"walls\">\n");
    let cs = world.cell_size();
    for r in 0..world.height() {
        let mut c = 0;
        while c < world.width() {
            let Cell::Wall(t) = world.cells()[world.index(c, r)] else {
                c += 1;
                continue;
            };
            let start = c;
            while c < world.width() && world.cells()[world.index(c, r)] == Cell::Wall(t) {
                c += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                px(start as f64 * cs),
                px(r as f64 * cs),
                px((c - start) as f64 * cs),
                px(cs),
                TEXTURE_COLORS[t as usize % TEXTURE_COLORS.len()]
            );
        }
    }
    out.push_str("</g>\n<g class=\"trajectory\">\n");
    let n = poses.len();
    for (i, pair) in poses.windows(2).enumerate() {
        let _ = writeln!(
            out,
            r#"<line class="segment" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
            px(pair[0].x),
            px(pair[0].y),
            px(pair[1].x),
            px(pair[1].y),
            step_color(i, n)
        );
    }
    for (i, p) in poses.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle class="pose" cx="{}" cy="{}" r="1.5" fill="{}"/>"#,
            px(p.x),
            px(p.y),
            step_color(i, n)
        );
    }
    out.push_str("</g>\n");
    if !loops.is_empty() {
        out.push_str("<g class=\"loops\">\n");
        for ((ax, ay), (bx, by)) in loops {
            let _ = writeln!(
                out,
                r#"<line class="loop" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{LOOP_COLOR}" stroke-width="1.5" stroke-opacity="0.7"/>"#,
                px(*ax),
                px(*ay),
                px(*bx),
                px(*by)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// The map episode's trajectory from the nodes' debug poses, with every
/// loop edge drawn.
pub fn render_graph(world: &World, graph: &TopoGraph, config_hash: &str) -> String {
    let poses: Vec<Pose> = (0..graph.len()).map(|i| graph.debug_pose(i)).collect();
    let loops: Vec<_> = graph
        .loop_edges()
        .map(|e| (graph.debug_position(e.from), graph.debug_position(e.to)))
        .collect();
    render_svg(world, &poses, &loops, config_hash)
}
