//! Comparing two complexity-score distributions.
//!
//! The dual transformation sends a benchmark score to the target score at
//! the same quantile, routed through a standard normal:
//! `f(x) = T_T^{-1}(T_B(x))`. Its area over [0, 1] is the Complexity AUC.
//! AUC above 0.5 means the target group's contacts end up more complex than
//! the benchmark's (the group is handled less effectively); below 0.5 means
//! they end up less complex. Effectiveness is `1 - AUC / 0.5`.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::float;
use crate::transforms::{EmpiricalQuantileMap, Target};

/// AUC of the identity curve.
pub const REFERENCE_AUC: f64 = 0.5;
pub const DEFAULT_GRID: usize = 1000;

/// The fitted benchmark-to-target score map.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTransform {
    benchmark: EmpiricalQuantileMap,
    target: EmpiricalQuantileMap,
}

fn fit_sample(name: &str, scores: &[f64]) -> Result<EmpiricalQuantileMap> {
    if scores.len() < 2 {
        return Err(Error::invalid(format!(
            "{name} sample needs at least 2 scores"
        )));
    }
    if let Some(q) = scores.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::invalid(format!(
            "{name} score {q} lies outside [0, 1]"
        )));
    }
    if scores.iter().all(|q| *q == scores[0]) {
        return Err(Error::invalid(format!("{name} sample is constant")));
    }
    EmpiricalQuantileMap::fit(scores, Target::Normal)
}

impl DualTransform {
    pub fn fit(benchmark: &[f64], target: &[f64]) -> Result<Self> {
        Ok(DualTransform {
            benchmark: fit_sample("benchmark", benchmark)?,
            target: fit_sample("target", target)?,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        let z = self.benchmark.transform(x);
        self.target
            .inverse_transform(z)
            .expect("transform output is finite")
    }

    pub fn n_benchmark(&self) -> usize {
        self.benchmark.len()
    }

    pub fn n_target(&self) -> usize {
        self.target.len()
    }
}

/// `f(x)` for one point; see [`DualTransform`] to evaluate many.
pub fn dual_transform(benchmark: &[f64], target: &[f64], x: f64) -> Result<f64> {
    Ok(DualTransform::fit(benchmark, target)?.apply(x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCurve {
    /// `k / K` for `k = 0..=K`.
    pub xs: Vec<f64>,
    pub fs: Vec<f64>,
    pub auc: f64,
    pub effectiveness: f64,
    pub n_benchmark: usize,
    pub n_target: usize,
}

/// Evaluates the dual transformation on an even grid of `grid + 1` points
/// and integrates it with the trapezoidal rule.
pub fn complexity_auc(benchmark: &[f64], target: &[f64], grid: usize) -> Result<DualCurve> {
    if grid < 2 {
        return Err(Error::invalid(format!(
            "grid size must be at least 2, got {grid}"
        )));
    }
    let dual = DualTransform::fit(benchmark, target)?;
    let xs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| dual.apply(x)).collect();
    let h = 1.0 / grid as f64;
    let auc = fs
        .windows(2)
        .map(|w| 0.5 * h * (w[0] + w[1]))
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(DualCurve {
        xs,
        fs,
        auc,
        effectiveness: 1.0 - auc / REFERENCE_AUC,
        n_benchmark: dual.n_benchmark(),
        n_target: dual.n_target(),
    })
}

pub fn effectiveness(auc: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(Error::invalid(format!("AUC {auc} lies outside [0, 1]")));
    }
    Ok(1.0 - auc / REFERENCE_AUC)
}

impl DualCurve {
    /// `x,f_x` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,f_x")?;
        for (x, f) in self.xs.iter().zip(&self.fs) {
            writeln!(w, "{},{}", float(*x), float(*f))?;
        }
        Ok(())
    }

    /// `auc,effectiveness,n_benchmark,n_target` header and one row.
    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "auc,effectiveness,n_benchmark,n_target")?;
        writeln!(
            w,
            "{},{},{},{}",
            float(self.auc),
            float(self.effectiveness),
            self.n_benchmark,
            self.n_target
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub name: String,
    pub auc: f64,
    pub effectiveness: f64,
    pub n: usize,
}

/// One comparison per group against the background, sorted by AUC
/// descending (ties by name).
pub fn group_report(
    background: &[f64],
    groups: &[(String, Vec<f64>)],
    grid: usize,
) -> Result<Vec<GroupRow>> {
    if groups.is_empty() {
        return Err(Error::invalid("group report needs at least one group"));
    }
    let mut rows = groups
        .par_iter()
        .map(|(name, scores)| {
            let curve = complexity_auc(background, scores, grid)
                .map_err(|e| Error::invalid(format!("group `{name}`: {e}")))?;
            Ok(GroupRow {
                name: name.clone(),
                auc: curve.auc,
                effectiveness: curve.effectiveness,
                n: scores.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.name.cmp(&b.name)));
    Ok(rows)
}

/// `name,auc,effectiveness,n,reference_auc` rows.
pub fn write_report_csv<W: Write>(rows: &[GroupRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "name,auc,effectiveness,n,reference_auc")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.name,
            float(r.auc),
            float(r.effectiveness),
            r.n,
            float(REFERENCE_AUC)
        )?;
    }
    Ok(())
}

const SVG_SIZE: f64 = 400.0;
const SVG_MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf",
];

fn to_px(x: f64, y: f64) -> (f64, f64) {
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    (SVG_MARGIN + x * span, SVG_SIZE - SVG_MARGIN - y * span)
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
    let pts: Vec<String> = points
        .map(|(x, y)| {
            let (px, py) = to_px(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    format!(
        "<polyline fill=\"none\" {style} points=\"{}\"/>\n",
        pts.join(" ")
    )
}

fn svg_frame(title: &str, body: &str) -> String {
    let mut s = String::new();
    let (x0, y0) = to_px(0.0, 0.0);
    let (x1, y1) = to_px(1.0, 1.0);
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\">\n\
         <text x=\"{SVG_MARGIN}\" y=\"20\" font-size=\"13\">{}</text>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{x0}\" y=\"{}\" font-size=\"10\">0</text>\n\
         <text x=\"{x1}\" y=\"{}\" font-size=\"10\">1</text>\n\
         <text x=\"{}\" y=\"{y1}\" font-size=\"10\">1</text>\n",
        escape(title),
        y0 + 14.0,
        y0 + 14.0,
        x0 - 12.0,
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Dual-transformation curves over the dashed identity line.
pub fn render_curves_svg(title: &str, curves: &[(&str, &DualCurve)]) -> String {
    let mut body = polyline(
        [(0.0, 0.0), (1.0, 1.0)].into_iter(),
        "stroke=\"gray\" stroke-dasharray=\"4 3\" class=\"identity\"",
    );
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        body.push_str(&polyline(
            c.xs.iter().copied().zip(c.fs.iter().copied()),
            &format!("stroke=\"{color}\" stroke-width=\"2\" class=\"curve\""),
        ));
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{} AUC={:.3}</text>",
            SVG_MARGIN + 10.0,
            SVG_MARGIN + 14.0 * (i as f64 + 1.0),
            escape(name),
            c.auc
        );
    }
    svg_frame(title, &body)
}

/// Horizontal AUC bars per group with a dashed line at 0.5.
pub fn render_report_svg(title: &str, rows: &[GroupRow]) -> String {
    let mut body = String::new();
    let n = rows.len().max(1) as f64;
    for (i, r) in rows.iter().enumerate() {
        let top = 1.0 - (i as f64 + 0.15) / n;
        let bottom = 1.0 - (i as f64 + 0.85) / n;
        let (x0, y0) = to_px(0.0, top);
        let (x1, y1) = to_px(r.auc, bottom);
        let _ = writeln!(
            body,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{} {:.3}</text>",
            x1 - x0,
            y1 - y0,
            PALETTE[0],
            x1 + 4.0,
            (y0 + y1) / 2.0 + 4.0,
            escape(&r.name),
            r.auc
        );
    }
    body.push_str(&polyline(
        [(REFERENCE_AUC, 0.0), (REFERENCE_AUC, 1.0)].into_iter(),
        "stroke=\"red\" stroke-dasharray=\"4 3\" class=\"reference\"",
    ));
    svg_frame(title, &body)
}
