//! CSV, JSON and SVG rendering.

use std::fmt::Write as _;

use serde_json::Value;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { buf: format!("{}\n", header.join(",")), width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn floats(&mut self, xs: &[f64]) {
        let cells: Vec<String> = xs.iter().map(|&x| num(x)).collect();
        self.row(&cells);
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Flat JSON object preserving insertion order of `pairs`.
pub fn json_object(pairs: Vec<(&str, Value)>) -> String {
    let mut out = String::from("{");
    for (k, (key, val)) in pairs.into_iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}: {}", Value::String(key.to_string()), val);
    }
    out.push_str("}\n");
    out
}

pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn json_pair(p: Option<(f64, f64)>) -> Value {
    match p {
        Some((a, b)) => Value::Array(vec![json_f64(a), json_f64(b)]),
        None => Value::Null,
    }
}

/// Polyline of the arm plus an optional tip circle, auto-fitted with a 5% margin.
pub fn svg(points: &[(f64, f64)], circle: Option<((f64, f64), f64)>) -> String {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| -p.1).collect();
    if let Some(((cx, cy), r)) = circle {
        xs.extend([cx - r, cx + r]);
        ys.extend([-cy - r, -cy + r]);
    }
    let lo_x = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_x = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12);
    let pad = 0.05 * span;
    let (w, h) = (hi_x - lo_x + 2.0 * pad, hi_y - lo_y + 2.0 * pad);
    let stroke = span / 400.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        num(lo_x - pad),
        num(lo_y - pad),
        num(w),
        num(h)
    );
    let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{},{}", num(x), num(-y))).collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="black" stroke-width="{}" points="{}"/>"#,
        num(stroke),
        pts.join(" ")
    );
    if let Some(((cx, cy), r)) = circle {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="red" stroke-width="{}"/>"#,
            num(cx),
            num(-cy),
            num(r),
            num(stroke)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.floats(&[1.0, -0.1]);
        assert_eq!(c.finish(), "a,b\n1.0000000000000000e0,-1.0000000000000001e-1\n");
    }

    #[test]
    fn json_is_flat_and_ordered() {
        let s = json_object(vec![("z", json_f64(1.5)), ("a", json_f64(f64::NAN)), ("w", json_pair(Some((1.0, 2.0))))]);
        assert_eq!(s, "{\"z\": 1.5, \"a\": null, \"w\": [1.0,2.0]}\n");
    }

    #[test]
    fn svg_has_polyline_and_circle() {
        let s = svg(&[(0.0, 0.0), (1.0, 1.0)], Some(((0.0, 0.0), 0.5)));
        assert!(s.contains("<polyline") && s.contains("<circle") && s.ends_with("</svg>\n"));
    }
}
