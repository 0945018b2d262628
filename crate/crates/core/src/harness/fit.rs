use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Least-squares fit of `ln value = intercept - order * ln N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub order: f64,
    pub intercept: f64,
    /// 95% confidence half-width of `order`.
    pub half_width: f64,
    pub n_points: usize,
}

/// Fits a convergence order to `(N, value)` pairs. Non-positive values are
/// dropped; at least three must remain.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, v)| *n > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 positive points, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("rate fit needs distinct N values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = m - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("dof >= 1")
        .inverse_cdf(0.975);
    Ok(RateFit {
        order: -slope,
        intercept,
        half_width: t * se,
        n_points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.order - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.half_width < 1e-10);
    }

    #[test]
    fn constant_values() {
        let f = fit_rate(&[(8.0, 2.0), (16.0, 2.0), (32.0, 2.0)]).unwrap();
        assert!(f.order.abs() < 1e-14);
    }

    #[test]
    fn alternating_perturbation() {
        let pts: Vec<_> = [8.0, 16.0, 32.0, 64.0, 128.0]
            .iter()
            .enumerate()
            .map(|(i, &n): (usize, &f64)| (n, n.powf(-0.5) * (1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 })))
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.order - 0.5).abs() < 0.02);
        assert!(f.half_width > 0.0);
    }

    #[test]
    fn half_width_matches_t_quantile() {
        // Three points, one dof: t_{0.975,1} = 12.7062.
        let f = fit_rate(&[(1.0, 1.0), (std::f64::consts::E, (-1.0f64).exp()), (std::f64::consts::E.powi(2), (-1.5f64).exp())]).unwrap();
        // x = 0,1,2 ; y = 0,-1,-1.5 ; slope -0.75, residuals (0.0833,-0.1667,0.0833)
        assert!((f.order - 0.75).abs() < 1e-12);
        let se = (1.0f64 / 24.0 / 2.0).sqrt();
        assert!((f.half_width - 12.706_204_736 * se).abs() < 1e-6);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_rate(&[(8.0, 1.0), (16.0, 0.0), (32.0, 0.5)]).is_err());
    }
}
