use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{CurvePoint, SuccessCurve};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "sigma_e,trials,successes,undecided,rate,ci_low,ci_high";

const Z95: f64 = 1.959964;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// `printf("%g")`: 6 significant digits, trailing zeros dropped.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv(curve: &SuccessCurve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_g(p.sigma),
            p.trials,
            p.successes,
            p.undecided,
            format_g(p.rate),
            format_g(p.ci_low),
            format_g(p.ci_high)
        );
    }
    out
}

/// Parse a CSV written by [`write_csv`]. Rates and intervals are recomputed
/// from the counts, so they come back at full precision.
pub fn parse_csv(text: &str, label: &str) -> Result<SuccessCurve> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        other => return Err(Error::Parse(format!("expected header {CSV_HEADER:?}, got {other:?}"))),
    }
    let mut points = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = k + 2;
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!("line {row}: expected 7 fields, got {}", f.len())));
        }
        let num = |i: usize, name: &str| -> Result<usize> {
            f[i].parse().map_err(|_| Error::Parse(format!("line {row}: bad {name} {:?}", f[i])))
        };
        let sigma: f64 = f[0].parse().map_err(|_| Error::Parse(format!("line {row}: bad sigma_e {:?}", f[0])))?;
        points.push(CurvePoint::new(sigma, num(1, "trials")?, num(2, "successes")?, num(3, "undecided")?)?);
    }
    Ok(SuccessCurve { label: label.to_string(), points })
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line plot of rate against noise level with Wilson bars.
pub fn render_svg(curves: &[SuccessCurve], title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.sigma));
    let x_max = xs.fold(0.0f64, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let px = |s: f64| left + pw * s / x_max;
    let py = |r: f64| top + ph * (1.0 - r);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for k in 0..=4 {
        let r = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/><line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"##,
            left - 5.0,
            left + pw,
            left - 8.0,
            py(r) + 4.0,
            format_g(r),
            y = py(r)
        );
        let sx = x_max * r;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            format_g(sx),
            x = px(sx)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">noise level sigma_e</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {y})">success rate</text>"#,
        y = top + ph / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", px(p.sigma), py(p.rate))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
        for p in &c.points {
            let x = px(p.sigma);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{x:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                py(p.ci_low),
                py(p.ci_high),
                py(p.rate)
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            left + pw - 120.0,
            left + pw - 100.0,
            left + pw - 95.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write `<stem>.csv` (or `<stem>_<label>.csv` per series when there are
/// several) and `<stem>.svg` into `dir`. Returns the written paths.
pub fn emit_outputs(curves: &[SuccessCurve], dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    if curves.is_empty() || curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::domain("nothing to write: the noise grid is empty"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for c in curves {
        let path = dir.join(csv_name(curves.len(), stem, &c.label));
        write_file(&path, &write_csv(c))?;
        written.push(path);
    }
    let svg = dir.join(format!("{stem}.svg"));
    write_file(&svg, &render_svg(curves, stem))?;
    written.push(svg);
    Ok(written)
}

/// File name [`emit_outputs`] uses for one series.
pub fn csv_name(series: usize, stem: &str, label: &str) -> String {
    if series == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{label}.csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (0.05, "0.05"),
            (1.0 / 3.0, "0.333333"),
            (0.00012345678, "0.000123457"),
            (0.000012345678, "1.23457e-05"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.999999951, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x), want, "{x}");
        }
    }

    #[test]
    fn wilson_reference_values() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403832).abs() < 1e-6 && (hi - 0.596168).abs() < 1e-6, "{lo} {hi}");
        let (lo, hi) = wilson_interval(200, 200);
        assert!((lo - 0.981155).abs() < 1e-6 && hi == 1.0, "{lo}");
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    fn curve() -> SuccessCurve {
        let pts = [(0.0, 200, 200, 0), (0.01, 200, 187, 2), (0.02, 200, 121, 7)];
        SuccessCurve {
            label: "proposed".into(),
            points: pts.iter().map(|&(s, t, k, u)| CurvePoint::new(s, t, k, u).unwrap()).collect(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let c = curve();
        let text = write_csv(&c);
        assert!(text.starts_with(CSV_HEADER) && !text.contains('\r'));
        assert_eq!(text.lines().nth(2).unwrap(), "0.01,200,187,2,0.935,0.891981,0.961624");
        assert_eq!(parse_csv(&text, "proposed").unwrap(), c);
        assert!(parse_csv("a,b\n", "x").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n0.1,10,11,0,1,1,1\n"), "x").is_err());
    }

    #[test]
    fn emit_single_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let mut one = curve();
        one.points.truncate(1);
        let paths = emit_outputs(&[one], dir.path(), "ring").unwrap();
        assert_eq!(paths.len(), 2);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 2);
        let svg = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
        let empty = SuccessCurve { label: "x".into(), points: vec![] };
        assert!(emit_outputs(&[empty], dir.path(), "e").is_err());
        let blocker = dir.path().join("blocker");
        std::fs::write(&blocker, "").unwrap();
        let e = emit_outputs(&[curve()], &blocker.join("sub"), "x").unwrap_err();
        assert!(e.to_string().contains("blocker"), "{e}");
    }
}
