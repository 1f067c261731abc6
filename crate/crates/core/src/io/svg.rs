//! Static SVG line charts. Plots only draw the numbers they are given.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: String,
}

/// Filled region between two curves over shared x values.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub color: String,
}

/// Shaded vertical span, e.g. a region without training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    pub spans: Vec<Span>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn line(mut self, name: &str, x: &[f64], y: &[f64], color: &str) -> Self {
        self.series.push(Series {
            name: name.into(),
            x: x.to_vec(),
            y: y.to_vec(),
            color: color.into(),
        });
        self
    }

    pub fn band(mut self, name: &str, x: &[f64], lower: &[f64], upper: &[f64], color: &str) -> Self {
        self.bands.push(Band {
            name: name.into(),
            x: x.to_vec(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            color: color.into(),
        });
        self
    }

    pub fn span(mut self, from: f64, to: f64) -> Self {
        self.spans.push(Span { from, to });
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.x.iter())
            .chain(self.bands.iter().flat_map(|b| b.x.iter()));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.y.iter())
            .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper)));
        let fold = |it: &mut dyn Iterator<Item = &f64>| {
            it.filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        };
        let (mut x0, mut x1) = fold(&mut xs.into_iter());
        let (mut y0, mut y1) = fold(&mut ys.into_iter());
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        (x0, x1, y0 - pad, y1 + pad)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for sp in &self.spans {
            let (a, b) = (px(sp.from.max(x0)), px(sp.to.min(x1)));
            let _ = writeln!(
                s,
                r##"<rect x="{a:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="#dddddd"/>"##,
                (b - a).max(0.0),
                HEIGHT - 2.0 * MARGIN
            );
        }
        for b in &self.bands {
            let mut pts: Vec<String> = Vec::new();
            for (x, u) in b.x.iter().zip(&b.upper) {
                pts.push(format!("{:.2},{:.2}", px(*x), py(*u)));
            }
            for (x, l) in b.x.iter().zip(&b.lower).rev() {
                pts.push(format!("{:.2},{:.2}", px(*x), py(*l)));
            }
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.35" stroke="none"><title>{}</title></polygon>"#,
                pts.join(" "),
                b.color,
                escape(&b.name)
            );
        }
        for ser in &self.series {
            let pts: Vec<String> = ser
                .x
                .iter()
                .zip(&ser.y)
                .filter(|(_, y)| y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"><title>{}</title></polyline>"#,
                pts.join(" "),
                ser.color,
                escape(&ser.name)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for (i, (x, y)) in [(x0, y0), (x1, y1)].iter().enumerate() {
            let anchor = if i == 0 { "start" } else { "end" };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="{anchor}">{x:.3}</text>"#,
                px(*x),
                HEIGHT - MARGIN + 14.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{y:.3}</text>"#,
                MARGIN - 4.0,
                py(*y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, ser) in self.series.iter().map(|s| (&s.name, &s.color)).chain(self.bands.iter().map(|b| (&b.name, &b.color))).enumerate() {
            let y = MARGIN + 14.0 + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" font-size="11" fill="{}">{}</text>"#,
                MARGIN + 8.0,
                ser.1,
                escape(ser.0)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
