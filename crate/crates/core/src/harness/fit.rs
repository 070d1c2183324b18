use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::ln;

/// Least-squares slope of `ln(error)` against `m`, over the points with
/// positive error. Needs at least three of them.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(m, e)| (m, ln(e)))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData {
            usable: usable.len(),
            required: 3,
        });
    }
    let len = usable.len() as f64;
    let mean_m = usable.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / len;
    let (sxy, sxx) = usable.iter().fold((0.0, 0.0), |(sxy, sxx), &(m, y)| {
        let dm = m - mean_m;
        (sxy + dm * (y - mean_y), sxx + dm * dm)
    });
    if sxx == 0.0 {
        return Err(crate::error::validation(
            "all points share the same m; slope is undefined",
        ));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_line() {
        let points: Vec<(f64, f64)> = (1..6).map(|m| (m as f64, libm::exp(-0.2 * m as f64 + 1.3))).collect();
        assert!((fit_exponent(&points).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn insufficient_points() {
        assert!(matches!(
            fit_exponent(&[(1.0, 0.1)]),
            Err(Error::InsufficientData { usable: 1, .. })
        ));
        assert!(fit_exponent(&[(1.0, 0.1), (2.0, 0.0), (3.0, 0.0), (4.0, 0.01)]).is_err());
        assert!(fit_exponent(&vec![(2.0, 0.1); 3]).is_err());
    }
}
