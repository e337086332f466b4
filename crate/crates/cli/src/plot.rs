//! SVG rendering of one episode log: obstacles, base and hand paths, start
//! and goal markers. Output depends only on the log.

use std::fmt::Write;

use feasim::env::EpisodeLog;
use feasim::gridmap::{PlacedShape, ShapeKind};

const WIDTH_PX: f64 = 800.0;

struct View {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        (x - self.min_x) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        (self.max_y - y) * self.scale
    }
}

fn shape(out: &mut String, v: &View, s: &PlacedShape, style: &str) {
    let (cx, cy) = (v.x(s.center[0]), v.y(s.center[1]));
    // The y flip turns counterclockwise world rotation into clockwise.
    let deg = -s.rotation.to_degrees();
    let element = match s.kind {
        ShapeKind::Rectangle { width, breadth } => {
            let (w, h) = (width * v.scale, breadth * v.scale);
            format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{h:.2}\"",
                -w / 2.0,
                -h / 2.0
            )
        }
        ShapeKind::Ellipse { semi_x, semi_y } => {
            format!(
                "<ellipse rx=\"{:.2}\" ry=\"{:.2}\"",
                semi_x * v.scale,
                semi_y * v.scale
            )
        }
    };
    let _ = writeln!(
        out,
        "  {element} transform=\"translate({cx:.2} {cy:.2}) rotate({deg:.3})\" {style}/>"
    );
}

fn polyline(out: &mut String, v: &View, points: impl Iterator<Item = (f64, f64)>, style: &str) {
    let pts: Vec<String> = points
        .map(|(x, y)| format!("{:.2},{:.2}", v.x(x), v.y(y)))
        .collect();
    let _ = writeln!(
        out,
        "  <polyline points=\"{}\" fill=\"none\" {style}/>",
        pts.join(" ")
    );
}

fn marker(out: &mut String, v: &View, (x, y): (f64, f64), fill: &str) {
    let _ = writeln!(
        out,
        "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{fill}\"/>",
        v.x(x),
        v.y(y)
    );
}

pub fn render(log: &EpisodeLog) -> String {
    let spec = &log.header.episode;
    let b = spec.world.bounds;
    let scale = WIDTH_PX / b.width();
    let v = View {
        min_x: b.min_x,
        max_y: b.max_y,
        scale,
    };
    let height = b.height() * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH_PX:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH_PX:.2} {height:.2}\">"
    );
    let _ = writeln!(
        out,
        "  <title>{} seed {}: {:?}</title>",
        log.header.robot,
        log.header.seed,
        log.termination()
    );
    let _ = writeln!(
        out,
        "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>"
    );
    for s in &spec.world.shapes {
        shape(&mut out, &v, s, "fill=\"#555\"");
    }
    for d in &spec.world.dynamics {
        shape(
            &mut out,
            &v,
            &d.as_shape(),
            "fill=\"none\" stroke=\"#a33\" stroke-dasharray=\"4 3\"",
        );
    }
    let base = std::iter::once((spec.start.x, spec.start.y))
        .chain(log.steps.iter().map(|s| (s.base_pose.x, s.base_pose.y)));
    polyline(&mut out, &v, base, "stroke=\"#1f77b4\" stroke-width=\"2\"");
    let desired = log
        .steps
        .iter()
        .map(|s| (s.ee_desired.position.x, s.ee_desired.position.y));
    polyline(
        &mut out,
        &v,
        desired,
        "stroke=\"#999\" stroke-width=\"1\" stroke-dasharray=\"3 3\"",
    );
    let hand = log
        .steps
        .iter()
        .map(|s| (s.ee_achieved.position.x, s.ee_achieved.position.y));
    polyline(&mut out, &v, hand, "stroke=\"#ff7f0e\" stroke-width=\"2\"");
    marker(&mut out, &v, (spec.start.x, spec.start.y), "#1f77b4");
    if let Some(first) = log.steps.first() {
        marker(
            &mut out,
            &v,
            (first.ee_desired.position.x, first.ee_desired.position.y),
            "#ff7f0e",
        );
    }
    marker(
        &mut out,
        &v,
        (spec.goal.position.x, spec.goal.position.y),
        "#2ca02c",
    );
    out.push_str("</svg>\n");
    out
}
