use crate::error::{Error, Result};

/// ROC and precision-recall points from a threshold sweep, plus scalar areas.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    /// (FPR, TPR), starting at (0, 0) and ending at (1, 1).
    pub roc: Vec<(f64, f64)>,
    /// (recall, precision), one point per distinct threshold.
    pub pr: Vec<(f64, f64)>,
    pub auc: f64,
    pub average_precision: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Sweeps every distinct score as a threshold. Equal scores are one group, so
/// ties contribute a diagonal ROC segment (half credit under the trapezoid).
pub fn compute_roc_pr_auc(scores: &[(f64, bool)]) -> Result<CurveReport> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Undefined("NaN score".into()));
    }
    let positives = scores.iter().filter(|(_, y)| *y).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined(format!(
            "ROC needs both classes (positives {positives}, negatives {negatives})"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (p, n) = (positives as f64, negatives as f64);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut roc = vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let mut auc = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (x0, y0) = (fp0 as f64 / n, tp0 as f64 / p);
        let (x1, y1) = (fp as f64 / n, tp as f64 / p);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (y1 - y0) * precision;
        roc.push((x1, y1));
        pr.push((y1, precision));
    }
    Ok(CurveReport { roc, pr, auc, average_precision: ap, positives, negatives })
}

/// TPR of a ROC polyline at `fpr`; on a vertical segment the highest TPR.
pub fn tpr_at(roc: &[(f64, f64)], fpr: f64) -> f64 {
    let mut best: f64 = 0.0;
    for w in roc.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if fpr < x0 || fpr > x1 {
            continue;
        }
        let y = if x1 == x0 { y1.max(y0) } else { y0 + (y1 - y0) * (fpr - x0) / (x1 - x0) };
        best = best.max(y);
    }
    best
}

/// Vertical averaging: mean TPR over curves at `points` evenly spaced FPRs.
pub fn average_roc(curves: &[Vec<(f64, f64)>], points: usize) -> Vec<(f64, f64)> {
    if curves.is_empty() || points < 2 {
        return Vec::new();
    }
    (0..points)
        .map(|i| {
            let x = i as f64 / (points - 1) as f64;
            let y = curves.iter().map(|c| tpr_at(c, x)).sum::<f64>() / curves.len() as f64;
            (x, if i == 0 { 0.0f64.max(y) } else { y })
        })
        .collect()
}

/// Minimal line chart as a standalone SVG document.
pub fn curves_svg(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
    let (w, h, m) = (480.0, 420.0, 50.0);
    let pw = w - 2.0 * m - 110.0;
    let ph = h - 2.0 * m;
    let px = |x: f64| m + x.clamp(0.0, 1.0) * pw;
    let py = |y: f64| m + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n",
        w / 2.0,
        xml_escape(title)
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{t:.1}</text>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{t:.1}</text>\n",
            px(t),
            m + ph + 15.0,
            m - 5.0,
            py(t) + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n<text x=\"15\" y=\"{:.1}\" transform=\"rotate(-90 15 {:.1})\" text-anchor=\"middle\">{}</text>\n",
        m + pw / 2.0,
        h - 10.0,
        xml_escape(x_label),
        m + ph / 2.0,
        m + ph / 2.0,
        xml_escape(y_label)
    ));
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        s.push_str(&format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" ")));
        let ly = m + 14.0 * k as f64 + 10.0;
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            m + pw + 10.0,
            m + pw + 25.0,
            m + pw + 30.0,
            ly + 4.0,
            xml_escape(name)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
