//! Small least-squares helpers shared by the decay and growth fits.

/// Ordinary least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn line_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(LineFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Weighted least-squares line through `(x, y, weight)` points; the
/// residual is the weighted root-mean-square deviation.
pub fn weighted_line_fit(points: &[(f64, f64, f64)]) -> Option<LineFit> {
    if points.len() < 2 {
        return None;
    }
    let sw: f64 = points.iter().map(|p| p.2).sum();
    if sw <= 0.0 {
        return None;
    }
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(LineFit { slope, intercept, residual: (ss / sw).sqrt() })
}

/// Slope of the least-squares line, NaN when undetermined.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    line_fit(points).map_or(f64::NAN, |f| f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let f = line_fit(&pts).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn unit_weights_match_plain_fit() {
        let pts: Vec<_> = (0..7).map(|i| (i as f64, (i as f64).sin())).collect();
        let w: Vec<_> = pts.iter().map(|p| (p.0, p.1, 1.0)).collect();
        let a = line_fit(&pts).unwrap();
        let b = weighted_line_fit(&w).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-14 && (a.residual - b.residual).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(line_fit(&[(1.0, 1.0)]).is_none());
        assert!(line_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }
}
