//! Self-contained SVG figures: grid heatmaps over `(theta_trig, r0)` and
//! speed/mCoT scatter plots.

use std::fmt::Write;

use crate::table::ResultRow;

const W: f64 = 660.0;
const H: f64 = 520.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 44.0;
const PW: f64 = 440.0;
const PH: f64 = 400.0;
const BAR_X: f64 = LEFT + PW + 30.0;

const NO_GAIT: &str = "#f2f2f2";
const UNSTABLE: &str = "#bdbdbd";

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Colour for `t` in `[0, 1]`, clamped.
fn ramp(t: f64) -> String {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (VIRIDIS[i][k] + f * (VIRIDIS[i + 1][k] - VIRIDIS[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// How cells are coloured.
pub enum Scale<'a> {
    Continuous { min: f64, max: f64, label: &'a str },
    /// `(name, colour)` pairs; the value function returns an index.
    Categorical(&'a [(&'a str, &'a str)]),
}

pub struct Heatmap<'a> {
    pub title: String,
    pub scale: Scale<'a>,
    /// `None` for cells drawn as no gait or unstable.
    pub value: &'a dyn Fn(&ResultRow) -> Option<f64>,
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + PW / 2.0, escape(title));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(s: &mut String, lo: f64, hi: f64, horizontal: bool) {
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let v = lo + f * (hi - lo);
        if horizontal {
            let x = LEFT + f * PW;
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + PH, TOP + PH + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{v:.3}</text>"#, TOP + PH + 19.0);
        } else {
            let y = TOP + PH - f * PH;
            let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 8.0, y + 4.0);
        }
    }
}

fn axes(s: &mut String, x: (f64, f64, &str), y: (f64, f64, &str)) {
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{PW}" height="{PH}" fill="none" stroke="black"/>"#);
    ticks(s, x.0, x.1, true);
    ticks(s, y.0, y.1, false);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + PW / 2.0, H - 20.0, escape(x.2));
    let cy = TOP + PH / 2.0;
    let _ = writeln!(s, r#"<text x="22" y="{cy}" text-anchor="middle" transform="rotate(-90 22 {cy})">{}</text>"#, escape(y.2));
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn index_of(axis: &[f64], v: f64) -> usize {
    axis.iter().position(|a| *a == v).unwrap_or(0)
}

/// Heatmap of the rows of one stiffness. Rows must form a full grid.
pub fn heatmap(rows: &[ResultRow], map: &Heatmap) -> String {
    let xs = sorted_unique(rows.iter().map(|r| r.theta_trig).collect());
    let ys = sorted_unique(rows.iter().map(|r| r.r0).collect());
    let mut s = String::new();
    header(&mut s, &map.title);
    let (nx, ny) = (xs.len().max(1) as f64, ys.len().max(1) as f64);
    let (cw, ch) = (PW / nx, PH / ny);
    for r in rows {
        let (ix, iy) = (index_of(&xs, r.theta_trig) as f64, index_of(&ys, r.r0) as f64);
        let fill = match (map.value)(r) {
            Some(v) => match &map.scale {
                Scale::Continuous { min, max, .. } => ramp((v - min) / (max - min)),
                Scale::Categorical(cats) => cats.get(v as usize).map_or(UNSTABLE, |c| c.1).to_string(),
            },
            None if r.status == "unstable" => UNSTABLE.to_string(),
            None => NO_GAIT.to_string(),
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            LEFT + ix * cw,
            TOP + PH - (iy + 1.0) * ch,
            cw + 0.05,
            ch + 0.05
        );
    }
    // Cell centres sit on the axis values.
    let span = |v: &[f64], n: f64| {
        let first = v.first().copied().unwrap_or(0.0);
        let last = v.last().copied().unwrap_or(first);
        let half = if v.len() > 1 { (last - first) / (n - 1.0) / 2.0 } else { 0.5 };
        (first - half, last + half)
    };
    let (x0, x1) = span(&xs, nx);
    let (y0, y1) = span(&ys, ny);
    axes(&mut s, (x0, x1, "trigger angle theta_trig (rad)"), (y0, y1, "precompression r0 (m)"));
    match &map.scale {
        Scale::Continuous { min, max, label } => colorbar(&mut s, *min, *max, label),
        Scale::Categorical(cats) => legend(&mut s, cats),
    }
    s.push_str("</svg>\n");
    s
}

fn colorbar(s: &mut String, min: f64, max: f64, label: &str) {
    let n = 50;
    let h = PH / n as f64;
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let y = TOP + PH - (i + 1) as f64 * h;
        let _ = writeln!(s, r#"<rect x="{BAR_X}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#, h + 0.05, ramp(t));
    }
    let _ = writeln!(s, r#"<rect x="{BAR_X}" y="{TOP}" width="18" height="{PH}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = TOP + PH - f * PH;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{:.3}</text>"#, BAR_X + 22.0, y + 4.0, min + f * (max - min));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, BAR_X + 9.0, TOP - 8.0, escape(label));
    swatch(s, TOP + PH + 30.0, UNSTABLE, "unstable");
    swatch(s, TOP + PH + 48.0, NO_GAIT, "no gait");
}

fn swatch(s: &mut String, y: f64, fill: &str, name: &str) {
    let _ = writeln!(s, r#"<rect x="{BAR_X}" y="{y}" width="12" height="12" fill="{fill}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, BAR_X + 18.0, y + 10.0, escape(name));
}

fn legend(s: &mut String, cats: &[(&str, &str)]) {
    for (i, (name, fill)) in cats.iter().enumerate() {
        swatch(s, TOP + 18.0 * i as f64, fill, name);
    }
    let y = TOP + 18.0 * cats.len() as f64 + 10.0;
    swatch(s, y, UNSTABLE, "unstable");
    swatch(s, y + 18.0, NO_GAIT, "no gait");
}

/// A named point set for [`scatter`].
pub struct Series<'a> {
    pub name: String,
    pub colour: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Join the points in order.
    pub line: bool,
}

/// Speed against mechanical cost of transport on pinned axes.
pub fn scatter(title: &str, speed: (f64, f64), mcot: (f64, f64), series: &[Series]) -> String {
    let mut s = String::new();
    header(&mut s, title);
    let px = |v: f64| LEFT + (v - speed.0) / (speed.1 - speed.0) * PW;
    let py = |v: f64| TOP + PH - (v - mcot.0) / (mcot.1 - mcot.0) * PH;
    let inside = |&(x, y): &(f64, f64)| x >= speed.0 && x <= speed.1 && y >= mcot.0 && y <= mcot.1;
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<_> = ser.points.iter().copied().filter(inside).collect();
        if ser.line && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, path.join(" "), ser.colour);
        }
        for (x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(x), py(y), ser.colour);
        }
        let ly = TOP + 18.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="{}"/>"#, BAR_X + 6.0, ly + 6.0, ser.colour);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, BAR_X + 16.0, ly + 10.0, escape(&ser.name));
    }
    axes(&mut s, (speed.0, speed.1, "speed (m/s)"), (mcot.0, mcot.1, "mechanical cost of transport"));
    s.push_str("</svg>\n");
    s
}
