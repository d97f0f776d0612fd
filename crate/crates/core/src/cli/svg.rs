//! Minimal SVG figures for reports.

use std::fmt::Write as _;

use crate::spectra::{Barcode, SpectralSurfaceGrid};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

fn open(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#, W / 2.0);
}

fn axis_labels(out: &mut String, x: &str, y: &str, xr: (f64, f64), yr: (f64, f64)) {
    let _ = writeln!(out, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * PAD, H - 2.0 * PAD);
    let t = |v: f64| format!("{v:.4}");
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}">{}</text>"#, H - PAD + 14.0, t(xr.0));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 14.0, t(xr.1));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, t(yr.0));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 10.0, t(yr.1));
    let _ = writeln!(out, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{y}</text>"#, H / 2.0, H / 2.0);
    let _ = writeln!(out, "</g>");
}

/// Bars per interval, grouped by dimension; essential classes run to the
/// right edge.
pub fn barcode(b: &Barcode, title: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let finite = b.intervals.iter().flat_map(|iv| [iv.birth, iv.death]).filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    let (lo, hi) = if lo < hi { (lo, hi + 0.05 * (hi - lo)) } else { (lo - 1.0, lo + 1.0) };
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    axis_labels(&mut out, "filtration value", "interval", (lo, hi), (0.0, b.intervals.len() as f64));
    let mut order: Vec<_> = b.intervals.iter().collect();
    order.sort_by(|p, q| p.dim.cmp(&q.dim).then(p.birth.total_cmp(&q.birth)));
    let rows = order.len().max(1) as f64;
    let step = (H - 2.0 * PAD) / rows;
    let x = |v: f64| PAD + (v.min(hi) - lo) / (hi - lo) * (W - 2.0 * PAD);
    let colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, iv) in order.iter().enumerate() {
        let y = PAD + (k as f64 + 0.5) * step;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="{:.2}"/>"#,
            x(iv.birth),
            x(iv.death),
            colours[iv.dim % colours.len()],
            (0.6 * step).clamp(0.5, 6.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vanishing region of a one- or two-energy spectral surface. Dark cells
/// are grid points where the tracked class vanishes.
pub fn surface_heatmap(g: &SpectralSurfaceGrid, title: &str) -> Option<String> {
    let shape = g.shape();
    if shape.len() > 2 {
        return None;
    }
    let (nx, ny) = (shape[0], shape.get(1).copied().unwrap_or(1));
    let mut out = String::new();
    open(&mut out, title);
    let xr = (g.axes[0][0], *g.axes[0].last()?);
    let yr = g.axes.get(1).map_or((0.0, 1.0), |a| (a[0], *a.last().unwrap_or(&1.0)));
    axis_labels(&mut out, "energy 1", if ny > 1 { "energy 2" } else { "" }, xr, yr);
    let (cw, ch) = ((W - 2.0 * PAD) / nx as f64, (H - 2.0 * PAD) / ny as f64);
    for i in 0..nx {
        for j in 0..ny {
            let idx: Vec<usize> = if shape.len() == 2 { vec![i, j] } else { vec![i] };
            let fill = if g.get(&idx) { "#333333" } else { "#f0e68c" };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                PAD + i as f64 * cw,
                H - PAD - (j + 1) as f64 * ch,
                cw + 0.2,
                ch + 0.2
            );
        }
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// Log-log scatter of `points` with the fitted line `y = prefactor x^slope`.
pub fn loglog(points: &[(f64, f64)], slope: f64, prefactor: f64, title: &str, xl: &str, yl: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let range = |v: &[f64]| {
        let (l, h) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        if l < h {
            (l - 0.05 * (h - l), h + 0.05 * (h - l))
        } else if l.is_finite() {
            (l - 1.0, l + 1.0)
        } else {
            (0.0, 1.0)
        }
    };
    let (xr, yr) = (range(&lx), range(&ly));
    axis_labels(&mut out, &format!("ln {xl}"), &format!("ln {yl}"), xr, yr);
    let px = |v: f64| PAD + (v - xr.0) / (xr.1 - xr.0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD);
    if slope.is_finite() && prefactor > 0.0 {
        let f = |x: f64| prefactor.ln() + slope * x;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            px(xr.0),
            py(f(xr.0)),
            px(xr.1),
            py(f(xr.1))
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">slope {slope:.4}</text>"#,
            PAD + 8.0,
            PAD + 16.0
        );
    }
    for (x, y) in lx.iter().zip(&ly) {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##, px(*x), py(*y));
    }
    out.push_str("</svg>\n");
    out
}

/// Plane curves and their grid images in one frame.
pub fn curves(original: &[Vec<[f64; 2]>], image: &[Vec<[f64; 2]>], cell: f64, title: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let all = original.iter().chain(image).flatten();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(cell);
    let s = (H - 2.0 * PAD) / span;
    let px = |p: &[f64; 2]| (PAD + (p[0] - lo[0]) * s, H - PAD - (p[1] - lo[1]) * s);
    let path = |pts: &[[f64; 2]], colour: &str, width: f64| {
        let d: Vec<String> = pts.iter().map(&px).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        format!(r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="{width}"/>"#, d.join(" "))
    };
    for c in original {
        let mut closed = c.clone();
        if let Some(&f) = c.first() {
            closed.push(f);
        }
        let _ = writeln!(out, "{}", path(&closed, "#1f77b4", 1.5));
    }
    for c in image {
        let _ = writeln!(out, "{}", path(c, "#d62728", 2.5));
    }
    out.push_str("</svg>\n");
    out
}
