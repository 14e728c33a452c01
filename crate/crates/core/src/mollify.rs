//! Mollifier families and regularization of piecewise coefficients.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::epsnets::{EpsilonGrid, NetSample};
use crate::error::{HypnetError, Result};
use crate::symbolgrid::{GridFunction, SpectralField, TorusGrid, C64, TWO_PI};

/// Map ε ↦ ω_ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rate {
    /// ω_ε = 1 + log(1/ε)
    Log,
    /// ω_ε = ε^{-θ}
    Power { theta: f64 },
}

impl Rate {
    pub fn omega(&self, eps: f64) -> f64 {
        match self {
            Rate::Log => 1.0 - eps.ln(),
            Rate::Power { theta } => eps.powf(-theta),
        }
    }
}

impl Default for Rate {
    fn default() -> Self {
        Rate::Log
    }
}

/// Unnormalized bump exp(-1/(1-s²)) and its first two derivatives.
pub(crate) fn bump_raw(s: f64, order: usize) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - s * s;
    let e = (-1.0 / q).exp();
    match order {
        0 => e,
        1 => e * (-2.0 * s / (q * q)),
        2 => {
            let g1 = -2.0 * s / (q * q);
            let g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
            e * (g1 * g1 + g2)
        }
        _ => panic!("bump derivatives implemented up to order 2"),
    }
}

/// ∫_{-1}^{1} exp(-1/(1-s²)) ds by composite Simpson on a fine grid.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 200_000usize;
        let h = 2.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let x = -1.0 + h * i as f64;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * bump_raw(x, 0);
        }
        s * h / 3.0
    })
}

/// Unit-mass bump profile on (-1,1) and its derivatives.
pub fn profile(s: f64, order: usize) -> f64 {
    bump_raw(s, order) / bump_mass()
}

/// max of the unit-mass profile, attained at 0.
pub fn profile_max() -> f64 {
    profile(0.0, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierFamily {
    pub rate: Rate,
    pub dim: usize,
}

impl MollifierFamily {
    pub fn new(rate: Rate, dim: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(HypnetError::arg("dimension", "must be 1 or 2"));
        }
        if let Rate::Power { theta } = rate {
            if !(theta > 0.0) {
                return Err(HypnetError::arg("theta", "must be positive"));
            }
        }
        Ok(MollifierFamily { rate, dim })
    }

    pub fn log(dim: usize) -> Self {
        MollifierFamily { rate: Rate::Log, dim }
    }

    pub fn omega(&self, eps: f64) -> f64 {
        self.rate.omega(eps)
    }
}

/// Sampled 1D kernel on offsets -r..=r times the spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub spacing: f64,
    pub omega: f64,
    pub radius: usize,
    pub weights: Vec<f64>,
    /// Factor applied to the raw samples to reach unit discrete mass.
    pub normalization: f64,
}

impl DiscreteKernel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - self.radius as f64) * self.spacing
    }
}

pub fn required_points(omega: f64) -> usize {
    let need = (TWO_PI * 4.0 * omega).floor() as usize + 1;
    need.next_power_of_two()
}

pub fn sample_mollifier(f: &MollifierFamily, eps: f64, grid_spacing: f64) -> Result<DiscreteKernel> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HypnetError::arg("eps", "must lie in (0,1]"));
    }
    if !(grid_spacing > 0.0) {
        return Err(HypnetError::arg("grid_spacing", "must be positive"));
    }
    let omega = f.omega(eps);
    let max_spacing = 1.0 / (4.0 * omega);
    if grid_spacing >= max_spacing {
        return Err(HypnetError::Resolution {
            spacing: grid_spacing,
            max_spacing,
            required_points: required_points(omega),
        });
    }
    let radius = (1.0 / (omega * grid_spacing) + 1e-12).floor() as usize;
    let raw: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = (i as f64 - radius as f64) * grid_spacing;
            omega * profile(omega * x, 0) * grid_spacing
        })
        .collect();
    // Symmetrize exactly before normalizing.
    let mut weights = raw.clone();
    for i in 0..radius {
        let avg = 0.5 * (raw[i] + raw[2 * radius - i]);
        weights[i] = avg;
        weights[2 * radius - i] = avg;
    }
    let mass: f64 = weights.iter().sum();
    let normalization = 1.0 / mass;
    for w in weights.iter_mut() {
        *w *= normalization;
    }
    // Nudge the center weight until the left-to-right sum is exactly one.
    for _ in 0..8 {
        let s: f64 = weights.iter().sum();
        if s == 1.0 {
            break;
        }
        weights[radius] += 1.0 - s;
    }
    Ok(DiscreteKernel {
        spacing: grid_spacing,
        omega,
        radius,
        weights,
        normalization,
    })
}

pub type PieceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Piece {
    Constant(f64),
    Smooth(PieceFn),
}

impl std::fmt::Debug for Piece {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Piece::Constant(v) => write!(f, "Constant({v})"),
            Piece::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

impl Piece {
    fn value(&self, p: &[f64]) -> f64 {
        match self {
            Piece::Constant(v) => *v,
            Piece::Smooth(g) => g(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpVariable {
    Space { axis: usize },
    Time,
}

/// Coefficient made of smooth pieces separated by jumps in one variable.
///
/// Space: `breakpoints` are sorted in [-π, π); piece k lives between breakpoint k
/// and k+1, the last one wrapping across the seam. Time: piece k lives on
/// (bp[k-1], bp[k]) with open ends.
#[derive(Debug, Clone)]
pub struct PiecewiseCoefficient {
    pub dim: usize,
    pub jump: JumpVariable,
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Piece>,
    pub lower: f64,
    pub upper: f64,
}

impl PiecewiseCoefficient {
    pub fn new(
        dim: usize,
        jump: JumpVariable,
        breakpoints: Vec<f64>,
        pieces: Vec<Piece>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(HypnetError::arg("dimension", "must be 1 or 2"));
        }
        if !(lower > 0.0 && upper >= lower) {
            return Err(HypnetError::arg("bounds", "need 0 < lower <= upper"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HypnetError::arg("breakpoints", "must strictly increase"));
        }
        match jump {
            JumpVariable::Space { axis } => {
                if axis >= dim {
                    return Err(HypnetError::arg("axis", "outside the dimension"));
                }
                if breakpoints.iter().any(|b| *b < -std::f64::consts::PI || *b >= std::f64::consts::PI) {
                    return Err(HypnetError::arg("breakpoints", "must lie in [-pi, pi)"));
                }
                let expected = breakpoints.len().max(1);
                if pieces.len() != expected {
                    return Err(HypnetError::arg("pieces", format!("expected {expected} pieces")));
                }
            }
            JumpVariable::Time => {
                if pieces.len() != breakpoints.len() + 1 {
                    return Err(HypnetError::arg("pieces", "need one more piece than breakpoints"));
                }
            }
        }
        let c = PiecewiseCoefficient {
            dim,
            jump,
            breakpoints,
            pieces,
            lower,
            upper,
        };
        c.check_bounds()?;
        Ok(c)
    }

    /// a_- on (-π,0), a_+ on (0,π); jumps at 0 and at the seam.
    pub fn step_x(left: f64, right: f64) -> Result<Self> {
        PiecewiseCoefficient::new(
            1,
            JumpVariable::Space { axis: 0 },
            vec![-std::f64::consts::PI, 0.0],
            vec![Piece::Constant(left), Piece::Constant(right)],
            left.min(right),
            left.max(right),
        )
    }

    /// Step along axis 0 of a 2D torus.
    pub fn step_x_2d(left: f64, right: f64) -> Result<Self> {
        PiecewiseCoefficient::new(
            2,
            JumpVariable::Space { axis: 0 },
            vec![-std::f64::consts::PI, 0.0],
            vec![Piece::Constant(left), Piece::Constant(right)],
            left.min(right),
            left.max(right),
        )
    }

    pub fn step_t(jump_time: f64, before: f64, after: f64) -> Result<Self> {
        PiecewiseCoefficient::new(
            1,
            JumpVariable::Time,
            vec![jump_time],
            vec![Piece::Constant(before), Piece::Constant(after)],
            before.min(after),
            before.max(after),
        )
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        PiecewiseCoefficient::new(
            dim,
            JumpVariable::Space { axis: 0 },
            vec![],
            vec![Piece::Constant(value)],
            value,
            value,
        )
    }

    pub fn smooth(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        PiecewiseCoefficient::new(
            dim,
            JumpVariable::Space { axis: 0 },
            vec![],
            vec![Piece::Smooth(Arc::new(f))],
            lower,
            upper,
        )
    }

    /// Number of jump locations within one period (or on the time line).
    pub fn jump_count(&self) -> usize {
        self.breakpoints.len()
    }

    fn jump_coordinate(&self, p: &[f64]) -> f64 {
        match self.jump {
            JumpVariable::Space { axis } => wrap(p[axis]),
            JumpVariable::Time => p[0],
        }
    }

    /// Index of the piece containing s, or the two pieces meeting at a breakpoint.
    fn locate(&self, s: f64) -> (usize, Option<usize>) {
        let bp = &self.breakpoints;
        if bp.is_empty() {
            return (0, None);
        }
        const TOL: f64 = 1e-12;
        match self.jump {
            JumpVariable::Space { .. } => {
                let n = bp.len();
                for (k, b) in bp.iter().enumerate() {
                    let d = wrap(s - b);
                    if d.abs() < TOL {
                        return ((k + n - 1) % n, Some(k));
                    }
                }
                // piece k covers (bp[k], bp[k+1]); the last wraps.
                let mut idx = n - 1;
                for k in 0..n {
                    if s > bp[k] {
                        idx = k;
                    }
                }
                (idx, None)
            }
            JumpVariable::Time => {
                for (k, b) in bp.iter().enumerate() {
                    if (s - b).abs() < TOL {
                        return (k, Some(k + 1));
                    }
                }
                let idx = bp.iter().filter(|b| s > **b).count();
                (idx, None)
            }
        }
    }

    /// Exact value; the average of the one-sided limits on a breakpoint.
    pub fn eval(&self, p: &[f64]) -> f64 {
        let s = self.jump_coordinate(p);
        match self.locate(s) {
            (a, None) => self.pieces[a].value(p),
            (a, Some(b)) => 0.5 * (self.pieces[a].value(p) + self.pieces[b].value(p)),
        }
    }

    /// Distance from the jump coordinate of p to the nearest breakpoint.
    pub fn distance_to_jump(&self, p: &[f64]) -> f64 {
        let s = self.jump_coordinate(p);
        self.breakpoints
            .iter()
            .map(|b| match self.jump {
                JumpVariable::Space { .. } => wrap(s - b).abs(),
                JumpVariable::Time => (s - b).abs(),
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn check_bounds(&self) -> Result<()> {
        let samples = 257;
        for i in 0..samples {
            let s = -std::f64::consts::PI + TWO_PI * (i as f64 + 0.5) / samples as f64;
            let p = match (self.jump, self.dim) {
                (JumpVariable::Time, _) => vec![s * 2.0],
                (_, 1) => vec![s],
                (_, _) => vec![s, -0.37 * s + 0.1],
            };
            let v = self.eval(&p);
            if !v.is_finite() || v < self.lower - 1e-12 || v > self.upper + 1e-12 {
                return Err(HypnetError::Coefficient(format!(
                    "value {v} at {p:?} outside [{}, {}]",
                    self.lower, self.upper
                )));
            }
        }
        Ok(())
    }
}

/// Wrap into [-π, π).
pub fn wrap(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (x + pi).rem_euclid(TWO_PI) - pi
}

/// Uniform time grid t_j = start + j·spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub spacing: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn covering(start: f64, end: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(end > start) {
            return Err(HypnetError::arg("time grid", "need end > start and positive spacing"));
        }
        let count = ((end - start) / spacing).ceil() as usize + 1;
        Ok(TimeGrid { start, spacing, count })
    }

    pub fn time(&self, j: usize) -> f64 {
        self.start + self.spacing * j as f64
    }
}

/// Values on a uniform time grid, evaluable at any t.
#[derive(Debug, Clone)]
pub struct TimeFunction {
    pub grid: TimeGrid,
    pub values: Arc<Vec<f64>>,
}

impl TimeFunction {
    /// Node value on a node, linear interpolation between nodes, clamped outside.
    pub fn eval(&self, t: f64) -> f64 {
        let s = (t - self.grid.start) / self.grid.spacing;
        let last = self.grid.count - 1;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= last as f64 {
            return self.values[last];
        }
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            return self.values[r as usize];
        }
        let i = s.floor() as usize;
        let f = s - i as f64;
        (1.0 - f) * self.values[i] + f * self.values[i + 1]
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.time(j), v)?;
        }
        Ok(())
    }
}

/// Where a coefficient is regularized.
#[derive(Debug, Clone)]
pub enum SampleGrid {
    Torus(TorusGrid),
    Interval(TimeGrid),
}

#[derive(Debug, Clone)]
pub enum Regularized {
    Space(GridFunction),
    Time(TimeFunction),
}

impl Regularized {
    pub fn values(&self) -> &[f64] {
        match self {
            Regularized::Space(g) => g.values(),
            Regularized::Time(t) => &t.values,
        }
    }

    pub fn into_space(self) -> Result<GridFunction> {
        match self {
            Regularized::Space(g) => Ok(g),
            Regularized::Time(_) => Err(HypnetError::arg("grid", "expected a spatial grid")),
        }
    }

    pub fn into_time(self) -> Result<TimeFunction> {
        match self {
            Regularized::Time(t) => Ok(t),
            Regularized::Space(_) => Err(HypnetError::arg("grid", "expected a time grid")),
        }
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        match self {
            Regularized::Space(g) => g.write_csv(&mut f),
            Regularized::Time(t) => t.write_csv(&mut f),
        }
        .map_err(|e| HypnetError::io(path, e))
    }
}

fn spacing_of(grid: &SampleGrid) -> f64 {
    match grid {
        SampleGrid::Torus(g) => g.spacing(),
        SampleGrid::Interval(t) => t.spacing,
    }
}

/// Discrete convolution of the exact coefficient with the sampled kernel.
fn convolve(
    c: &PiecewiseCoefficient,
    f: &MollifierFamily,
    grid: &SampleGrid,
    eps: f64,
) -> Result<Regularized> {
    let h = spacing_of(grid);
    let k = sample_mollifier(f, eps, h)?;
    let kw = k.weights.clone();
    let r = k.radius as i64;
    match grid {
        SampleGrid::Torus(g) => {
            if g.dim() != c.dim {
                return Err(HypnetError::arg("grid", "dimension differs from coefficient"));
            }
            let jump_axis = match c.jump {
                JumpVariable::Space { axis } => axis,
                JumpVariable::Time => {
                    return Err(HypnetError::arg("grid", "time-jump coefficient needs a time grid"))
                }
            };
            let n = g.points() as i64;
            let exact: Vec<f64> = (0..g.len()).map(|j| c.eval(&g.point(j))).collect();
            let vals: Vec<f64> = if g.dim() == 1 {
                (0..n)
                    .map(|j| {
                        let mut s = 0.0;
                        for i in -r..=r {
                            s += exact[(j - i).rem_euclid(n) as usize] * kw[(i + r) as usize];
                        }
                        s
                    })
                    .collect()
            } else {
                let (w0, w1) = if jump_axis == 0 {
                    (kw.clone(), k.weights.clone())
                } else {
                    (k.weights.clone(), kw.clone())
                };
                let mut out = vec![0.0; g.len()];
                for a in 0..n {
                    for b in 0..n {
                        let mut s = 0.0;
                        for i in -r..=r {
                            let ra = (a - i).rem_euclid(n) as usize;
                            let wa = w0[(i + r) as usize];
                            if wa == 0.0 {
                                continue;
                            }
                            for l in -r..=r {
                                let rb = (b - l).rem_euclid(n) as usize;
                                s += exact[ra * n as usize + rb] * wa * w1[(l + r) as usize];
                            }
                        }
                        out[(a * n + b) as usize] = s;
                    }
                }
                out
            };
            Ok(Regularized::Space(GridFunction::new(g, vals)?))
        }
        SampleGrid::Interval(tg) => {
            if c.jump != JumpVariable::Time {
                return Err(HypnetError::arg("grid", "space-jump coefficient needs a torus grid"));
            }
            let vals = (0..tg.count)
                .map(|j| {
                    let t = tg.time(j);
                    let mut s = 0.0;
                    for i in -r..=r {
                        s += c.eval(&[t - i as f64 * h]) * kw[(i + r) as usize];
                    }
                    s
                })
                .collect();
            Ok(Regularized::Time(TimeFunction {
                grid: tg.clone(),
                values: Arc::new(vals),
            }))
        }
    }
}

pub fn regularize_coefficient(
    c: &PiecewiseCoefficient,
    f: &MollifierFamily,
    grid: &SampleGrid,
    eps: f64,
) -> Result<Regularized> {
    convolve(c, f, grid, eps)
}

/// ∂^order c_ε along the jump variable: spectral on the torus, differences in time.
pub fn regularize_derivative(
    c: &PiecewiseCoefficient,
    f: &MollifierFamily,
    grid: &SampleGrid,
    eps: f64,
    order: usize,
) -> Result<Regularized> {
    let base = convolve(c, f, grid, eps)?;
    if order == 0 {
        return Ok(base);
    }
    match base {
        Regularized::Space(g) => {
            let axis = match c.jump {
                JumpVariable::Space { axis } => axis,
                JumpVariable::Time => 0,
            };
            let mut u = g.to_field();
            for _ in 0..order {
                u = u.derivative(axis);
            }
            let vals = u.component(0).iter().map(|z| z.re).collect();
            Ok(Regularized::Space(GridFunction::new(g.grid(), vals)?))
        }
        Regularized::Time(tf) => {
            let mut vals = tf.values.as_ref().clone();
            for _ in 0..order {
                vals = central_difference(&vals, tf.grid.spacing);
            }
            Ok(Regularized::Time(TimeFunction {
                grid: tf.grid.clone(),
                values: Arc::new(vals),
            }))
        }
    }
}

/// Second-order differences, one-sided at the ends.
fn central_difference(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// For each order α ≤ max_order, the net ε ↦ sup |∂^α c_ε|.
pub fn derivative_growth_report(
    c: &PiecewiseCoefficient,
    f: &MollifierFamily,
    grid: &SampleGrid,
    eps_grid: &EpsilonGrid,
    max_order: usize,
) -> Result<Vec<NetSample>> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut vals = Vec::with_capacity(eps_grid.len());
        for &e in eps_grid.epsilons() {
            let r = regularize_derivative(c, f, grid, e, order)?;
            vals.push(r.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        out.push(NetSample::new(eps_grid.clone(), vals)?);
    }
    Ok(out)
}

/// Periodic convolution of a field's node values with φ_ε (data mollification).
pub fn mollify_field(u: &SpectralField, f: &MollifierFamily, eps: f64) -> Result<SpectralField> {
    let g = u.grid();
    if g.dim() != 1 {
        return Err(HypnetError::arg("field", "data mollification implemented in 1D"));
    }
    let k = sample_mollifier(f, eps, g.spacing())?;
    let r = k.radius as i64;
    let n = g.points() as i64;
    let values = u
        .values()
        .iter()
        .map(|comp| {
            (0..n)
                .map(|j| {
                    let mut s = C64::new(0.0, 0.0);
                    for i in -r..=r {
                        s += comp[(j - i).rem_euclid(n) as usize] * k.weights[(i + r) as usize];
                    }
                    s
                })
                .collect()
        })
        .collect();
    SpectralField::from_values(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epsnets::{classify_net, make_geometric_grid, ClassKind};

    #[test]
    fn profile_has_unit_mass() {
        let n = 4000;
        let h = 2.0 / n as f64;
        let s: f64 = (0..=n).map(|i| profile(-1.0 + h * i as f64, 0)).sum::<f64>() * h;
        assert!((s - 1.0).abs() < 1e-9);
        // Independent value of the raw mass.
        assert!((bump_mass() - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let f = MollifierFamily {
            rate: Rate::Power { theta: 1.0 },
            dim: 1,
        };
        let k = sample_mollifier(&f, 0.25, 1.0 / 64.0).unwrap();
        assert_eq!(k.omega, 4.0);
        assert_eq!(k.len(), 33);
        assert_eq!(k.weights.iter().sum::<f64>(), 1.0);
        let max = k.weights.iter().cloned().fold(0.0, f64::max);
        assert_eq!(k.weights[k.radius], max);
        let first: f64 = (0..k.len()).map(|i| k.offset(i) * k.weights[i]).sum();
        assert!(first.abs() < 1e-17);
        assert!(k.weights.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn under_resolved_kernel_reports_required_points() {
        let f = MollifierFamily::log(1);
        let err = sample_mollifier(&f, 1e-6, 0.1).unwrap_err();
        match err {
            HypnetError::Resolution { required_points, .. } => {
                let omega = f.omega(1e-6);
                assert!(TWO_PI / required_points as f64 <= 1.0 / (4.0 * omega));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_regularization_examples() {
        let g = TorusGrid::new(1, 256).unwrap();
        let f = MollifierFamily::log(1);
        let c = PiecewiseCoefficient::step_x(1.0, 3.0).unwrap();
        let eps = 0.05;
        let omega = f.omega(eps);
        let r = regularize_coefficient(&c, &f, &SampleGrid::Torus(g.clone()), eps)
            .unwrap()
            .into_space()
            .unwrap();
        for j in 0..g.len() {
            let p = g.point(j);
            if c.distance_to_jump(&p) > 1.0 / omega {
                assert!((r.values()[j] - c.eval(&p)).abs() < 1e-14);
            }
        }
        assert!((r.eval(&[0.0]) - 2.0).abs() < 1e-14);
        assert!(r.min() >= 1.0 - 1e-12 && r.max() <= 3.0 + 1e-12);
    }

    #[test]
    fn derivative_identity_matches_profile_max() {
        let g = TorusGrid::new(1, 1024).unwrap();
        let f = MollifierFamily::log(1);
        let c = PiecewiseCoefficient::step_x(1.0, 3.0).unwrap();
        for &eps in &[0.25, 0.01, 1e-4] {
            let d = regularize_derivative(&c, &f, &SampleGrid::Torus(g.clone()), eps, 1).unwrap();
            // sup over the interface at 0 (the seam jump has the opposite sign).
            let sup = d.values().iter().cloned().fold(0.0, f64::max);
            let expect = 2.0 * f.omega(eps) * profile_max();
            // Node sampling of the maximum and the discrete kernel cost O((ωh)²).
            assert!((sup - expect).abs() < 5e-3 * expect, "{sup} vs {expect}");
        }
    }

    #[test]
    fn growth_report_classes() {
        let g = TorusGrid::new(1, 512).unwrap();
        let f = MollifierFamily::log(1);
        let c = PiecewiseCoefficient::step_x(1.0, 2.0).unwrap();
        let grid = make_geometric_grid(0.25, 0.5, 12).unwrap();
        let nets = derivative_growth_report(&c, &f, &SampleGrid::Torus(g), &grid, 2).unwrap();
        let expect = [0.0, 1.0, 2.0];
        for (net, p0) in nets.iter().zip(expect) {
            match classify_net(net, 4).unwrap().kind {
                ClassKind::LogSlowScale(p) => assert!((p - p0).abs() < 0.1, "{p} vs {p0}"),
                other => panic!("{other}"),
            }
        }
    }

    #[test]
    fn time_regularization_midpoint() {
        let c = PiecewiseCoefficient::step_t(1.0, 1.0, 4.0).unwrap();
        let f = MollifierFamily::log(1);
        let tg = TimeGrid::covering(0.0, 2.0, 1e-3).unwrap();
        let r = regularize_coefficient(&c, &f, &SampleGrid::Interval(tg), 0.1)
            .unwrap()
            .into_time()
            .unwrap();
        assert!((r.eval(1.0) - 2.5).abs() < 1e-12);
        assert!((r.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((r.eval(2.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bounds_are_checked() {
        let bad = PiecewiseCoefficient::new(
            1,
            JumpVariable::Space { axis: 0 },
            vec![],
            vec![Piece::Constant(5.0)],
            1.0,
            2.0,
        );
        assert!(matches!(bad, Err(HypnetError::Coefficient(_))));
    }
}
