use crate::{Error, Result};

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("rank input"));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("spearman inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    let rx = average_ranks(x)?;
    let ry = average_ranks(y)?;
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a ranking has zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
