use std::collections::BTreeMap;

use super::CategoryModel;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceScore {
    pub feature: String,
    pub weight: f64,
    pub score: f64,
    pub n: u64,
    pub n_pos: u64,
    pub n_k: u64,
    pub n_k_pos: u64,
}

/// `n_k * ((n_k_pos / n_k) / (n_pos / n) - 1)`: how much more often the
/// feature fires on positives than the base rate, scaled by its support.
pub fn importance_score(n: u64, n_pos: u64, n_k: u64, n_k_pos: u64) -> Result<f64> {
    if n_pos == 0 || n == 0 {
        return Err(Error::Undefined("importance undefined without positive examples".into()));
    }
    if n_k == 0 {
        return Ok(0.0);
    }
    let (n, n_pos, n_k, n_k_pos) = (n as f64, n_pos as f64, n_k as f64, n_k_pos as f64);
    Ok(n_k * ((n_k_pos / n_k) / (n_pos / n) - 1.0))
}

/// Scores every feature with positive learned weight that occurs in
/// `dataset`, highest first; ties by feature id.
pub fn feature_importance(
    model: &CategoryModel,
    dataset: &[(&FeatureVector, bool)],
    top_n: usize,
) -> Result<Vec<ImportanceScore>> {
    let n = dataset.len() as u64;
    let n_pos = dataset.iter().filter(|(_, y)| *y).count() as u64;
    if n_pos == 0 {
        return Err(Error::Undefined(format!("no positive examples for {}", model.category)));
    }
    let mut support: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (v, y) in dataset {
        for (id, x) in v.iter() {
            if x != 0.0 {
                let e = support.entry(id).or_default();
                e.0 += 1;
                e.1 += *y as u64;
            }
        }
    }
    let mut out = Vec::new();
    for (id, (n_k, n_k_pos)) in support {
        let weight = model.feature_weight(id);
        if weight <= 0.0 {
            continue;
        }
        let score = importance_score(n, n_pos, n_k, n_k_pos)?;
        out.push(ImportanceScore { feature: id.to_string(), weight, score, n, n_pos, n_k, n_k_pos });
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
    out.truncate(top_n);
    Ok(out)
}

pub fn importance_to_string(rows: &[ImportanceScore]) -> String {
    let mut s = String::from("# feature\tN\tN_plus\tN_k\tN_k_plus\tscore\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            crate::io::escape(&r.feature),
            r.n,
            r.n_pos,
            r.n_k,
            r.n_k_pos,
            r.score
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_rate_feature_scores_zero() {
        assert_eq!(importance_score(100, 20, 10, 2).unwrap(), 0.0);
        assert_eq!(importance_score(10, 5, 4, 4).unwrap(), 4.0);
        assert!(importance_score(10, 5, 4, 0).unwrap() < 0.0);
        assert!(importance_score(10, 0, 4, 0).is_err());
    }
}
