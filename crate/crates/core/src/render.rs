//! SVG rendering of a map with planning overlays.
//!
//! Output is a plain SVG 1.1 document with fixed-precision coordinates, so
//! identical inputs give identical bytes.

use std::fmt::Write as _;

use crate::geom::Vec2;
use crate::reward::GridMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const RED: Rgb = Rgb(220, 30, 30);

    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let c = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round().clamp(0.0, 255.0) as u8;
        Rgb(c(self.0, other.0), c(self.1, other.1), c(self.2, other.2))
    }
}

impl std::fmt::Display for Rgb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    Viridis,
    Grayscale,
}

impl Colormap {
    /// Color for `t` in `[0, 1]`; values outside are clamped.
    pub fn color(self, t: f64) -> Rgb {
        let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
        match self {
            Colormap::Grayscale => Rgb(0, 0, 0).lerp(Rgb(255, 255, 255), t),
            Colormap::Viridis => {
                const STOPS: [Rgb; 5] = [
                    Rgb(68, 1, 84),
                    Rgb(59, 82, 139),
                    Rgb(33, 145, 140),
                    Rgb(94, 201, 98),
                    Rgb(253, 231, 37),
                ];
                let x = t * (STOPS.len() - 1) as f64;
                let i = (x.floor() as usize).min(STOPS.len() - 2);
                STOPS[i].lerp(STOPS[i + 1], x - i as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStyle {
    pub visible: bool,
    pub color: Rgb,
    /// Stroke width, or marker radius for point layers, in pixels.
    pub width: f64,
}

impl LayerStyle {
    pub const fn new(color: Rgb, width: f64) -> Self {
        Self {
            visible: true,
            color,
            width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    /// Length of the longer canvas side, in pixels, margins included.
    pub canvas_px: f64,
    pub margin_px: f64,
    pub colormap: Colormap,
    pub heatmap: bool,
    pub keypoints: LayerStyle,
    pub tour: LayerStyle,
    pub guess: LayerStyle,
    pub executed: LayerStyle,
    pub x0_marker: LayerStyle,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            canvas_px: 640.0,
            margin_px: 10.0,
            colormap: Colormap::Viridis,
            heatmap: true,
            keypoints: LayerStyle::new(Rgb(255, 140, 0), 4.0),
            tour: LayerStyle::new(Rgb(255, 255, 255), 1.5),
            guess: LayerStyle::new(Rgb(200, 200, 200), 1.0),
            executed: LayerStyle::new(Rgb(230, 60, 60), 2.0),
            x0_marker: LayerStyle::new(Rgb::RED, 6.0),
        }
    }
}

/// Things drawn over the heatmap.
#[derive(Debug, Clone, Default)]
pub struct Overlays {
    pub keypoints: Vec<Vec2<f64>>,
    /// Tour polyline, starting at the agent position.
    pub tour: Vec<Vec2<f64>>,
    pub guess: Vec<Vec2<f64>>,
    pub executed: Vec<Vec2<f64>>,
    pub x0: Option<Vec2<f64>>,
}

/// World (y up) to canvas (y down): `c = (margin + s·(x − x_min), margin + s·(y_max − y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanvasTransform {
    pub scale: f64,
    pub margin: f64,
    pub x_min: f64,
    pub y_max: f64,
    pub width: f64,
    pub height: f64,
}

impl CanvasTransform {
    /// Fits `map` into the canvas with a uniform scale.
    pub fn fit(map: &GridMap<f64>, spec: &RenderSpec) -> Self {
        let d = map.domain();
        let inner = (spec.canvas_px - 2.0 * spec.margin_px).max(1.0);
        let scale = inner / d.width().max(d.height());
        Self {
            scale,
            margin: spec.margin_px,
            x_min: d.min.x,
            y_max: d.max.y,
            width: d.width() * scale + 2.0 * spec.margin_px,
            height: d.height() * scale + 2.0 * spec.margin_px,
        }
    }

    pub fn to_canvas(&self, p: Vec2<f64>) -> (f64, f64) {
        (self.margin + self.scale * (p.x - self.x_min), self.margin + self.scale * (self.y_max - p.y))
    }

    pub fn to_world(&self, c: (f64, f64)) -> Vec2<f64> {
        Vec2::new(self.x_min + (c.0 - self.margin) / self.scale, self.y_max - (c.1 - self.margin) / self.scale)
    }
}

fn polyline(out: &mut String, t: &CanvasTransform, class: &str, pts: &[Vec2<f64>], style: &LayerStyle, dashed: bool) {
    if !style.visible || pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = t.to_canvas(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
    let _ = writeln!(
        out,
        "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.2}\"{dash}/>",
        coords.join(" "),
        style.color,
        style.width
    );
}

/// Renders the map heatmap (one rectangle per cell) and the overlays.
pub fn render_svg(map: &GridMap<f64>, overlays: &Overlays, spec: &RenderSpec) -> String {
    let t = CanvasTransform::fit(map, spec);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.2}\" height=\"{h:.2}\" viewBox=\"0 0 {w:.2} {h:.2}\">",
        w = t.width,
        h = t.height
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");

    if spec.heatmap {
        let peak = map.max_value();
        let side = map.cell_size_m() * t.scale;
        let _ = writeln!(out, "<g class=\"heatmap\" shape-rendering=\"crispEdges\">");
        for j in 0..map.ny() {
            for i in 0..map.nx() {
                let c = map.cell_center(i, j);
                let (x, y) = t.to_canvas(c);
                let v = if peak > 0.0 { map.value(i, j) / peak } else { 0.0 };
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{side:.2}\" height=\"{side:.2}\" fill=\"{}\"/>",
                    x - side / 2.0,
                    y - side / 2.0,
                    spec.colormap.color(v)
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }

    polyline(&mut out, &t, "tour", &overlays.tour, &spec.tour, false);
    polyline(&mut out, &t, "guess", &overlays.guess, &spec.guess, true);
    polyline(&mut out, &t, "executed", &overlays.executed, &spec.executed, false);

    if spec.keypoints.visible {
        for p in &overlays.keypoints {
            let (x, y) = t.to_canvas(*p);
            let _ = writeln!(
                out,
                "<circle class=\"keypoint\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"{}\" stroke=\"#000000\" stroke-width=\"0.50\"/>",
                spec.keypoints.width, spec.keypoints.color
            );
        }
    }
    if let (Some(p), true) = (overlays.x0, spec.x0_marker.visible) {
        let (x, y) = t.to_canvas(p);
        let _ = writeln!(
            out,
            "<circle class=\"x0\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"{}\" stroke=\"#000000\" stroke-width=\"1.00\"/>",
            spec.x0_marker.width, spec.x0_marker.color
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}
