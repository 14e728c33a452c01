//! ε-indexed nets and their asymptotic classification.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{HypnetError, Result};

/// Strictly decreasing ε values in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid {
    epsilons: Vec<f64>,
    pub description: String,
}

impl EpsilonGrid {
    pub fn new(epsilons: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        if epsilons.len() < 4 {
            return Err(HypnetError::arg("epsilons", "need at least 4 values"));
        }
        for (k, &e) in epsilons.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                return Err(HypnetError::arg("epsilons", format!("value {e} outside (0,1]")));
            }
            if k > 0 && e >= epsilons[k - 1] {
                return Err(HypnetError::arg("epsilons", "values must strictly decrease"));
            }
        }
        Ok(EpsilonGrid {
            epsilons,
            description: description.into(),
        })
    }

    /// ε_k = 2^{-k}, k = 2..14.
    pub fn default_grid() -> Self {
        make_geometric_grid(0.25, 0.5, 13).expect("static grid")
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    /// Keep the members with indices in `range`; the result must still hold four values.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        EpsilonGrid::new(self.epsilons[range].to_vec(), self.description.clone())
    }
}

pub fn make_geometric_grid(eps0: f64, ratio: f64, count: usize) -> Result<EpsilonGrid> {
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(HypnetError::arg("eps0", "must lie in (0,1]"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(HypnetError::arg("ratio", "must lie in (0,1)"));
    }
    if count < 1 {
        return Err(HypnetError::arg("count", "must be positive"));
    }
    let epsilons: Vec<f64> = (0..count).map(|k| eps0 * ratio.powi(k as i32)).collect();
    let description = format!("geometric eps0={eps0} ratio={ratio} count={count}");
    if count < 4 {
        // Short grids are allowed for direct use but not as net indices.
        return Ok(EpsilonGrid {
            epsilons,
            description,
        });
    }
    EpsilonGrid::new(epsilons, description)
}

/// One nonnegative number per ε.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSample {
    pub grid: EpsilonGrid,
    values: Vec<f64>,
}

impl NetSample {
    pub fn new(grid: EpsilonGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HypnetError::arg("values", "length differs from grid"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(HypnetError::arg("values", "must be finite and nonnegative"));
        }
        Ok(NetSample { grid, values })
    }

    pub fn from_fn(grid: &EpsilonGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.epsilons().iter().map(|&e| f(e)).collect();
        NetSample::new(grid.clone(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        NetSample::new(self.grid.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Two-column CSV with header `epsilon,value`.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "epsilon,value")?;
        for (e, v) in self.grid.epsilons().iter().zip(&self.values) {
            writeln!(w, "{e:e},{v:e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKind {
    PowerGrowth(u32),
    SlowScale,
    LogSlowScale(f64),
    PowerDecay(u32),
    Indeterminate,
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKind::PowerGrowth(n) => write!(f, "PowerGrowth({n})"),
            ClassKind::SlowScale => write!(f, "SlowScale"),
            ClassKind::LogSlowScale(p) => write!(f, "LogSlowScale({p:.3})"),
            ClassKind::PowerDecay(q) => write!(f, "PowerDecay({q})"),
            ClassKind::Indeterminate => write!(f, "Indeterminate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticClass {
    pub kind: ClassKind,
    /// Slope of log(value) against log(ε).
    pub fitted_exponent: f64,
    /// RMS residual of the fit that decided the class.
    pub fit_residual: f64,
}

/// Thresholds of the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub tau: f64,
    pub residual_tol: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            tau: 0.25,
            residual_tol: 0.05,
        }
    }
}

/// Least-squares line y = slope·x + b; returns (slope, intercept, rms residual).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + b);
            r * r
        })
        .sum();
    (slope, b, (ss / n).sqrt())
}

/// Slope of log(value) against log(ε) with its RMS residual.
pub fn fit_power_law(s: &NetSample) -> Result<(f64, f64)> {
    if s.values.iter().any(|&v| v <= 0.0) {
        return Err(HypnetError::Domain(
            "power-law fit needs strictly positive values".into(),
        ));
    }
    let xs: Vec<f64> = s.grid.epsilons().iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
    let (a, _, r) = least_squares(&xs, &ys);
    Ok((a, r))
}

/// Slope of log(value) against log(1 + log(1/ε)), with its RMS residual.
pub fn fit_log_law(s: &NetSample) -> Result<(f64, f64)> {
    if s.values.iter().any(|&v| v <= 0.0) {
        return Err(HypnetError::Domain(
            "log-law fit needs strictly positive values".into(),
        ));
    }
    let xs: Vec<f64> = s
        .grid
        .epsilons()
        .iter()
        .map(|e| (1.0 - e.ln()).ln())
        .collect();
    let ys: Vec<f64> = s.values.iter().map(|v| v.ln()).collect();
    let (p, _, r) = least_squares(&xs, &ys);
    Ok((p, r))
}

pub fn classify_net(s: &NetSample, decay_orders_tested: u32) -> Result<AsymptoticClass> {
    classify_net_with(s, decay_orders_tested, &ClassifierConfig::default())
}

pub fn classify_net_with(
    s: &NetSample,
    decay_orders_tested: u32,
    cfg: &ClassifierConfig,
) -> Result<AsymptoticClass> {
    if s.values.is_empty() {
        return Err(HypnetError::arg("sample", "empty"));
    }
    if s.values.iter().all(|&v| v == 0.0) {
        return Ok(AsymptoticClass {
            kind: ClassKind::PowerDecay(decay_orders_tested.max(1)),
            fitted_exponent: f64::INFINITY,
            fit_residual: 0.0,
        });
    }
    let (a, r_pow) = fit_power_law(s)?;
    let (p, r_log) = fit_log_law(s)?;
    let tol = cfg.residual_tol;

    // Exponents within this slack of an integer count as reaching it.
    const INT_SLACK: f64 = 1e-6;
    if r_pow <= tol && a >= 1.0 - INT_SLACK && decay_orders_tested >= 1 {
        let q = ((a + INT_SLACK).floor() as u32).min(decay_orders_tested);
        return Ok(AsymptoticClass {
            kind: ClassKind::PowerDecay(q),
            fitted_exponent: a,
            fit_residual: r_pow,
        });
    }
    if r_log <= tol && r_log <= r_pow {
        return Ok(AsymptoticClass {
            kind: ClassKind::LogSlowScale(p),
            fitted_exponent: a,
            fit_residual: r_log,
        });
    }
    if a <= -cfg.tau && r_pow <= tol {
        let n = (-a - INT_SLACK).ceil().max(1.0) as u32;
        return Ok(AsymptoticClass {
            kind: ClassKind::PowerGrowth(n),
            fitted_exponent: a,
            fit_residual: r_pow,
        });
    }
    if a > -cfg.tau && a <= cfg.tau {
        if r_log <= tol {
            return Ok(AsymptoticClass {
                kind: ClassKind::LogSlowScale(p),
                fitted_exponent: a,
                fit_residual: r_log,
            });
        }
        return Ok(AsymptoticClass {
            kind: ClassKind::SlowScale,
            fitted_exponent: a,
            fit_residual: r_pow,
        });
    }
    Ok(AsymptoticClass {
        kind: ClassKind::Indeterminate,
        fitted_exponent: a,
        fit_residual: r_pow.min(r_log),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid12() -> EpsilonGrid {
        make_geometric_grid(0.25, 0.5, 12).unwrap()
    }

    #[test]
    fn geometric_grid_examples() {
        let g = make_geometric_grid(0.25, 0.5, 3).unwrap();
        assert_eq!(g.epsilons(), &[0.25, 0.125, 0.0625]);
        let g = make_geometric_grid(1.0, 0.5, 4).unwrap();
        assert_eq!(g.epsilons()[0], 1.0);
        assert_eq!(g.epsilons()[3], 0.125);
        let g = make_geometric_grid(0.25, 0.5, 11).unwrap();
        assert!((g.epsilons()[10] - 2.44140625e-4).abs() < 1e-18);
        assert!(make_geometric_grid(1.5, 0.5, 4).is_err());
        assert!(make_geometric_grid(0.5, 1.0, 4).is_err());
        assert!(make_geometric_grid(0.5, 0.5, 0).is_err());
    }

    #[test]
    fn default_grid_spans_two_to_fourteen() {
        let g = EpsilonGrid::default_grid();
        assert_eq!(g.len(), 13);
        assert_eq!(g.epsilons()[0], 0.25);
        assert_eq!(*g.epsilons().last().unwrap(), 2f64.powi(-14));
    }

    #[test]
    fn power_fit_exact_cases() {
        let g = grid12();
        let s = NetSample::from_fn(&g, |e| e.powi(-2)).unwrap();
        let (a, r) = fit_power_law(&s).unwrap();
        assert!((a + 2.0).abs() < 1e-10 && r < 1e-10);
        let s = NetSample::from_fn(&g, |e| e.powi(4)).unwrap();
        assert!((fit_power_law(&s).unwrap().0 - 4.0).abs() < 1e-10);
        let s = NetSample::from_fn(&g, |_| 0.0).unwrap();
        assert!(fit_power_law(&s).is_err());
    }

    #[test]
    fn log_cube_has_small_negative_exponent_and_curvature() {
        // Closed form evaluated on two grids; exponent shrinks as the grid extends.
        let short = make_geometric_grid(0.25, 0.5, 6).unwrap();
        let long = make_geometric_grid(0.25, 0.5, 40).unwrap();
        let f = |e: f64| (1.0 - e.ln()).powi(3);
        let (a_s, r_s) = fit_power_law(&NetSample::from_fn(&short, f).unwrap()).unwrap();
        let (a_l, _) = fit_power_law(&NetSample::from_fn(&long, f).unwrap()).unwrap();
        assert!(a_s < 0.0 && a_l < 0.0);
        assert!(a_l > a_s);
        assert!(r_s > 1e-4);
    }

    #[test]
    fn classify_examples() {
        let g = grid12();
        let c = classify_net(&NetSample::from_fn(&g, |e| e.powi(-3)).unwrap(), 6).unwrap();
        assert_eq!(c.kind, ClassKind::PowerGrowth(3));
        let c = classify_net(
            &NetSample::from_fn(&g, |e| (1.0 - e.ln()).powi(2)).unwrap(),
            6,
        )
        .unwrap();
        match c.kind {
            ClassKind::LogSlowScale(p) => assert!((p - 2.0).abs() < 0.2),
            other => panic!("got {other}"),
        }
        let c = classify_net(&NetSample::from_fn(&g, |_| 1.0).unwrap(), 6).unwrap();
        match c.kind {
            ClassKind::LogSlowScale(p) => assert!(p.abs() < 1e-9),
            ClassKind::SlowScale => {}
            other => panic!("got {other}"),
        }
        assert!(c.fitted_exponent.abs() < 1e-9);
        let c = classify_net(&NetSample::from_fn(&g, |e| e.powi(5)).unwrap(), 4).unwrap();
        assert_eq!(c.kind, ClassKind::PowerDecay(4));
        assert!(c.fitted_exponent >= 4.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = make_geometric_grid(0.5, 0.5, 4).unwrap();
        let s = NetSample::from_fn(&g, |e| 2.0 * e).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "epsilon,value");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "5e-1,1e0");
    }
}
