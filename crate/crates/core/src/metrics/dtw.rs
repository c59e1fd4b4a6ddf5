use crate::error::{Error, Result};

/// Dynamic time warping distance with squared local cost `(x_i − y_j)²`,
/// unit steps in both axes plus the diagonal, both endpoints matched and no
/// warping window.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Validation("DTW needs two nonempty sequences".into()));
    }
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &xi in x {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let c = (xi - y[j - 1]).powi(2);
            cur[j] = c + prev[j - 1].min(prev[j]).min(cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}
