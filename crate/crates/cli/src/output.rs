//! CSV tables and small hand-written SVG plots.

use std::fmt::Write as _;
use std::path::Path;

use triq::measures::DecayCurve;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "time_s,N1,N2,N3,N3_tri,fidelity,purity";
const RANGE_SLACK: f64 = 1e-9;

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn check_range(curve: &DecayCurve) -> CliResult<()> {
    let cols: [(&str, &[f64]); 6] = [
        ("N1", &curve.n1),
        ("N2", &curve.n2),
        ("N3", &curve.n3),
        ("N3_tri", &curve.n_tri),
        ("fidelity", &curve.fidelity),
        ("purity", &curve.purity),
    ];
    for (name, col) in cols {
        if let Some((i, v)) = col.iter().enumerate().find(|(_, v)| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(*v)) {
            return Err(CliError::Numerical(triq::Error::NumericalDrift {
                time: curve.times[i],
                reason: format!("{name} = {v} outside [0, 1]"),
            }));
        }
    }
    Ok(())
}

/// Rows of `time_s,N1,N2,N3,N3_tri,fidelity,purity`, plus a protection factor
/// column when `extra` is given.
pub fn curve_csv(curve: &DecayCurve, extra: Option<&[f64]>) -> CliResult<String> {
    check_range(curve)?;
    let mut out = String::from(CSV_HEADER);
    if extra.is_some() {
        out.push_str(",protection_factor");
    }
    out.push('\n');
    for i in 0..curve.len() {
        let row = [
            curve.times[i],
            curve.n1[i],
            curve.n2[i],
            curve.n3[i],
            curve.n_tri[i],
            curve.fidelity[i],
            curve.purity[i],
        ];
        let mut cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        if let Some(e) = extra {
            cells.push(num(e[i]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Protected over unprotected tripartite negativity. Both zero counts as no
/// change (1); a zero denominator with a non-zero numerator is infinite.
pub fn protection_factors(protected: &DecayCurve, unprotected: &DecayCurve) -> Vec<f64> {
    protected
        .n_tri
        .iter()
        .zip(&unprotected.n_tri)
        .map(|(&p, &u)| match (p > 0.0, u > 0.0) {
            (_, true) => p / u,
            (true, false) => f64::INFINITY,
            (false, false) => 1.0,
        })
        .collect()
}

pub struct Series<'a> {
    pub label: &'a str,
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub color: &'a str,
    pub dashed: bool,
}

/// Line plot on a [0, t_max] × [0, 1] frame.
pub fn svg_plot(title: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let t_max = series
        .iter()
        .flat_map(|s| s.times.iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let px = |t: f64| left + (w - left - right) * t / t_max;
    let py = |v: f64| top + (h - top - bottom) * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let t = t_max * v;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, left - 6.0, py(v) + 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(t), h - bottom + 18.0, tick(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">time (s)</text>"#, w / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .times
            .iter()
            .zip(ser.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            ser.color,
            pts.join(" ")
        );
        let ly = top + 16.0 + 16.0 * i as f64;
        let lx = w - right - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}"{dash}/>"#, lx + 24.0, ser.color);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(t: f64) -> String {
    if t == 0.0 {
        "0".into()
    } else if t >= 0.1 {
        format!("{t:.2}")
    } else {
        format!("{t:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> DecayCurve {
        DecayCurve {
            times: vec![0.0, 0.5],
            n1: vec![1.0, 0.5],
            n2: vec![1.0, 0.5],
            n3: vec![1.0, 0.5],
            n_tri: vec![1.0, 0.5],
            fidelity: vec![1.0, 0.75],
            purity: vec![1.0, 0.6],
        }
    }

    #[test]
    fn csv_layout() {
        let text = curve_csv(&curve(), Some(&[1.0, 2.0])).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time_s,N1,N2,N3,N3_tri,fidelity,purity,protection_factor");
        assert_eq!(lines[1].split(',').next(), Some("0.00000000000e0"));
        assert_eq!(lines[2].split(',').nth(1), Some("5.00000000000e-1"));
        let empty = DecayCurve { times: vec![], n1: vec![], n2: vec![], n3: vec![], n_tri: vec![], fidelity: vec![], purity: vec![] };
        assert_eq!(curve_csv(&empty, None).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn out_of_range_is_numerical_failure() {
        let mut c = curve();
        c.fidelity[1] = 1.2;
        assert_eq!(curve_csv(&c, None).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn factor_conventions() {
        let mut p = curve();
        let mut u = curve();
        p.n_tri = vec![0.5, 0.0];
        u.n_tri = vec![0.25, 0.0];
        assert_eq!(protection_factors(&p, &u), vec![2.0, 1.0]);
        p.n_tri[1] = 0.1;
        assert!(protection_factors(&p, &u)[1].is_infinite());
    }

    #[test]
    fn svg_is_well_formed() {
        let c = curve();
        let svg = svg_plot("a < b", "N", &[Series { label: "x", times: &c.times, values: &c.n_tri, color: "red", dashed: true }]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b") && svg.contains("stroke-dasharray"));
    }
}
