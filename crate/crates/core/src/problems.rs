//! Acoustics and 1D wave problems with exact transmission oracles.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::epsnets::{make_geometric_grid, EpsilonGrid};
use crate::error::{HypnetError, Result};
use crate::evolve::CauchyProblem;
use crate::mollify::{
    bump_raw, mollify_field, regularize_coefficient, MollifierFamily, PiecewiseCoefficient, Rate,
    SampleGrid, TimeFunction, TimeGrid,
};
use crate::reduction::{reduce, CompanionSystem, DiffTerm, HigherOrderOperator};
use crate::symbolgrid::{
    japanese, multiplier_apply, CMat, GridFunction, SeparableTerm, SpectralField, SymbolMatrix, TorusGrid,
    C64,
};

// ---------------------------------------------------------------- profiles

/// Scalar initial profile on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// amplitude·e·exp(−1/(1−s²)), s = (x−center)/radius.
    Bump { center: f64, radius: f64, amplitude: f64 },
    /// C¹ quadratic B-spline on [left, right], peak `amplitude`.
    QuadSpline { left: f64, right: f64, amplitude: f64 },
    /// scale·d/dx of another profile.
    Derivative { of: Box<Profile>, scale: f64 },
    Cosine { k: f64, amplitude: f64 },
    Sine { k: f64, amplitude: f64 },
}

fn bspline2(u: f64, order: usize) -> f64 {
    if !(0.0..=3.0).contains(&u) {
        return 0.0;
    }
    let seg = if u < 1.0 {
        0
    } else if u < 2.0 {
        1
    } else {
        2
    };
    match (seg, order) {
        (0, 0) => 0.5 * u * u,
        (1, 0) => 0.5 * (-2.0 * u * u + 6.0 * u - 3.0),
        (2, 0) => 0.5 * (3.0 - u) * (3.0 - u),
        (0, 1) => u,
        (1, 1) => -2.0 * u + 3.0,
        (2, 1) => -(3.0 - u),
        (0, 2) | (2, 2) => 1.0,
        (1, 2) => -2.0,
        _ => 0.0,
    }
}

fn bspline2_integral(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u < 1.0 {
        u * u * u / 6.0
    } else if u < 2.0 {
        1.0 / 6.0 + 0.5 * (-2.0 * u * u * u / 3.0 + 3.0 * u * u - 3.0 * u + 2.0 / 3.0)
    } else if u < 3.0 {
        1.0 - (3.0 - u).powi(3) / 6.0
    } else {
        1.0
    }
}

impl Profile {
    /// d^order/dx^order (order ≤ 3 for splines, ≤ 2 for bumps).
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump {
                center,
                radius,
                amplitude,
            } => {
                if order > 2 {
                    return f64::NAN;
                }
                let s = (x - center) / radius;
                amplitude * std::f64::consts::E * bump_raw(s, order) / radius.powi(order as i32)
            }
            Profile::QuadSpline {
                left,
                right,
                amplitude,
            } => {
                let w = (right - left) / 3.0;
                let u = (x - left) / w;
                amplitude / 0.75 * bspline2(u, order) / w.powi(order as i32)
            }
            Profile::Derivative { of, scale } => scale * of.eval(x, order + 1),
            Profile::Cosine { k, amplitude } => {
                let ph = k * x + order as f64 * PI / 2.0;
                amplitude * k.powi(order as i32) * ph.cos()
            }
            Profile::Sine { k, amplitude } => {
                let ph = k * x + order as f64 * PI / 2.0;
                amplitude * k.powi(order as i32) * ph.sin()
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x, 0)
    }

    /// ∫ from the left end of the support (or 0 for periodic profiles) to x.
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump { center, radius, .. } => {
                let lo = center - radius;
                let hi = x.min(center + radius);
                if hi <= lo {
                    return 0.0;
                }
                let n = 2000;
                let h = (hi - lo) / n as f64;
                let mut s = self.value(lo) + self.value(hi);
                for i in 1..n {
                    s += self.value(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                s * h / 3.0
            }
            Profile::QuadSpline {
                left,
                right,
                amplitude,
            } => {
                let w = (right - left) / 3.0;
                amplitude / 0.75 * w * bspline2_integral((x - left) / w)
            }
            Profile::Derivative { of, scale } => scale * of.value(x),
            Profile::Cosine { k, amplitude } => amplitude * (k * x).sin() / k,
            Profile::Sine { k, amplitude } => amplitude * (1.0 - (k * x).cos()) / k,
        }
    }

    /// Closed support, None for periodic profiles, Some(empty) signalled by Zero.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Zero => Some((0.0, 0.0)),
            Profile::Bump { center, radius, .. } => Some((center - radius, center + radius)),
            Profile::QuadSpline { left, right, .. } => Some((*left, *right)),
            Profile::Derivative { of, .. } => of.support(),
            Profile::Cosine { .. } | Profile::Sine { .. } => None,
        }
    }

    pub fn total_integral(&self) -> Option<f64> {
        match self.support() {
            Some((_, hi)) if !matches!(self, Profile::Zero) => Some(self.integral(hi + 1.0)),
            Some(_) => Some(0.0),
            None => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }

    pub fn sample(&self, grid: &TorusGrid) -> SpectralField {
        let p = self.clone();
        SpectralField::from_real_fn(grid, move |x| p.value(x[0]))
    }
}

// ---------------------------------------------------------------- acoustics

/// Constant medium a w_tt = b w_xx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub a: f64,
    pub b: f64,
}

impl Medium {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(HypnetError::Coefficient("a and b must be positive".into()));
        }
        Ok(Medium { a, b })
    }

    pub fn speed(&self) -> f64 {
        (self.b / self.a).sqrt()
    }

    pub fn impedance(&self) -> f64 {
        (self.a * self.b).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct AcousticsProblem {
    pub n: usize,
    pub rho0: PiecewiseCoefficient,
    pub c0: PiecewiseCoefficient,
    pub horizon: f64,
}

/// ρ₀ and c₀ sampled on a torus grid, with the admissible bounds.
#[derive(Debug, Clone)]
pub struct AcousticsCoefficients {
    pub rho: GridFunction,
    pub c: GridFunction,
    pub rho_bounds: (f64, f64),
    pub c_bounds: (f64, f64),
}

impl AcousticsProblem {
    pub fn new(n: usize, rho0: PiecewiseCoefficient, c0: PiecewiseCoefficient, horizon: f64) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(HypnetError::arg("n", "acoustics implemented for n = 1, 2"));
        }
        if rho0.dim != n || c0.dim != n {
            return Err(HypnetError::arg("coefficients", "dimension differs from n"));
        }
        Ok(AcousticsProblem { n, rho0, c0, horizon })
    }

    /// 1D wave a w_tt = (b w_x)_x as acoustics: ρ₀ = 1/b, c₀ = √(b/a).
    pub fn from_wave_media(left: Medium, right: Medium, horizon: f64) -> Result<Self> {
        let rho = PiecewiseCoefficient::step_x(1.0 / left.b, 1.0 / right.b)?;
        let c = PiecewiseCoefficient::step_x(left.speed(), right.speed())?;
        AcousticsProblem::new(1, rho, c, horizon)
    }

    pub fn regularized(&self, grid: &TorusGrid, family: &MollifierFamily, eps: f64) -> Result<AcousticsCoefficients> {
        let sg = SampleGrid::Torus(grid.clone());
        let rho = regularize_coefficient(&self.rho0, family, &sg, eps)?.into_space()?;
        let c = regularize_coefficient(&self.c0, family, &sg, eps)?.into_space()?;
        self.checked(rho, c)
    }

    /// Pointwise samples of the exact coefficients.
    pub fn sampled(&self, grid: &TorusGrid) -> Result<AcousticsCoefficients> {
        let rho = GridFunction::from_fn(grid, |x| self.rho0.eval(x));
        let c = GridFunction::from_fn(grid, |x| self.c0.eval(x));
        self.checked(rho, c)
    }

    fn checked(&self, rho: GridFunction, c: GridFunction) -> Result<AcousticsCoefficients> {
        let rb = (self.rho0.lower, self.rho0.upper);
        let cb = (self.c0.lower, self.c0.upper);
        let tol = 1e-12;
        if rho.min() < rb.0 - tol || rho.max() > rb.1 + tol || c.min() < cb.0 - tol || c.max() > cb.1 + tol {
            return Err(HypnetError::Coefficient(format!(
                "rho in [{:.4}, {:.4}], c in [{:.4}, {:.4}] violate bounds",
                rho.min(),
                rho.max(),
                c.min(),
                c.max()
            )));
        }
        Ok(AcousticsCoefficients {
            rho,
            c,
            rho_bounds: rb,
            c_bounds: cb,
        })
    }
}

/// Symbol of u = (p, v₁..v_n): row 0 = −iρ₀c₀²ξ_k, column 0 = −iξ_k/ρ₀.
pub fn acoustics_symbol(co: &AcousticsCoefficients) -> Result<SymbolMatrix> {
    let n = co.rho.grid().dim();
    if co.rho.min() <= 0.0 || co.c.min() <= 0.0 {
        return Err(HypnetError::Coefficient("rho and c must stay positive".into()));
    }
    let mut terms = Vec::with_capacity(2 * n);
    for k in 0..n {
        let (rho, c) = (co.rho.clone(), co.c.clone());
        terms.push(SeparableTerm::static_coef(
            0,
            k + 1,
            move |x| C64::new(rho.eval(x) * c.eval(x).powi(2), 0.0),
            move |xi| C64::new(0.0, -xi[k]),
        ));
        let rho = co.rho.clone();
        terms.push(SeparableTerm::static_coef(
            k + 1,
            0,
            move |x| C64::new(1.0 / rho.eval(x), 0.0),
            move |xi| C64::new(0.0, -xi[k]),
        ));
    }
    Ok(SymbolMatrix::separable(n + 1, 1.0, terms).with_label(format!("acoustics{n}d")))
}

/// Closed-form principal symmetriser for n = 1: ψ²·½diag(1+Z⁻², 1+Z²), Z = ρ₀c₀.
pub fn acoustics_r0_1d(co: &AcousticsCoefficients) -> SymbolMatrix {
    let (rho, c) = (co.rho.clone(), co.c.clone());
    SymbolMatrix::new(2, 0.0, true, move |_, x, xi| {
        let z = rho.eval(x) * c.eval(x);
        let psi = crate::symmetriser::cutoff(xi[0].abs());
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5 * (1.0 + 1.0 / (z * z)) * psi * psi, 0.0);
        m[(1, 1)] = C64::new(0.5 * (1.0 + z * z) * psi * psi, 0.0);
        m
    })
    .with_label("R0_acoustics1d")
}

/// ‖(p,v)‖_{c₀ρ₀} = (∫|p|²/(c₀²ρ₀) + ∫|v|²ρ₀)^{1/2}.
pub fn weighted_norm(u: &SpectralField, co: &AcousticsCoefficients) -> Result<f64> {
    let n = u.grid().dim();
    if u.components() != n + 1 || u.grid() != co.rho.grid() {
        return Err(HypnetError::arg("u", "expected (p, v) on the coefficient grid"));
    }
    let rho = co.rho.values();
    let c = co.c.values();
    let mut s = 0.0;
    for j in 0..u.grid().len() {
        s += u.values()[0][j].norm_sqr() / (c[j] * c[j] * rho[j]);
        for k in 1..=n {
            s += u.values()[k][j].norm_sqr() * rho[j];
        }
    }
    Ok((s * u.grid().cell_volume()).sqrt())
}

/// ∂_t²p = c₀²Δp + c₀²ρ₀∇(ρ₀⁻¹)·∇p with data (p₀, −ρ₀c₀² div v₀).
pub fn wave_form(
    co: &AcousticsCoefficients,
    p0: &SpectralField,
    v0: &SpectralField,
) -> Result<(HigherOrderOperator, [SpectralField; 2])> {
    let grid = co.rho.grid().clone();
    let n = grid.dim();
    let c2 = co.c.map(|v| v * v);
    let inv_rho = co.rho.map(|v| 1.0 / v).to_field();
    let mut terms = Vec::new();
    for a in 0..n {
        let mut alpha = vec![0; n];
        alpha[a] = 2;
        let c2a = c2.clone();
        terms.push(DiffTerm::static_coef(alpha, "c0^2", move |x| c2a.eval(x)));
        let grad: Vec<f64> = inv_rho.derivative(a).component(0).iter().map(|z| z.re).collect();
        let g = GridFunction::new(&grid, grad)?;
        let first = c2.zip(&co.rho, |c2v, r| c2v * r)?.zip(&g, |u, w| u * w)?;
        let mut alpha = vec![0; n];
        alpha[a] = 1;
        terms.push(DiffTerm::static_coef(alpha, "c0^2 rho0 d(1/rho0)", move |x| first.eval(x)));
    }
    let op = HigherOrderOperator::new(n, 2, vec![terms, Vec::new()])?;
    let mut div = SpectralField::zeros(&grid, 1);
    for a in 0..n {
        div = div.add(&v0.select(&[a]).derivative(a))?;
    }
    let rc2 = co.rho.zip(&c2, |r, c| r * c)?;
    let p1 = div.map_values(|_, j, z| -z * rc2.values()[j]);
    Ok((op, [p0.clone(), p1]))
}

// ---------------------------------------------------------------- 1D wave

/// Wave system for (w, v): w_t = −∂_x v / a, v_t = −b ∂_x w.
pub fn wave_system(a: &GridFunction, b: &GridFunction) -> Result<SymbolMatrix> {
    if a.min() <= 0.0 || b.min() <= 0.0 {
        return Err(HypnetError::Coefficient("a and b must stay positive".into()));
    }
    let (a, b) = (a.clone(), b.clone());
    Ok(SymbolMatrix::separable(
        2,
        1.0,
        vec![
            SeparableTerm::static_coef(0, 1, move |x| C64::new(1.0 / a.eval(x), 0.0), |xi| C64::new(0.0, -xi[0])),
            SeparableTerm::static_coef(1, 0, move |x| C64::new(b.eval(x), 0.0), |xi| C64::new(0.0, -xi[0])),
        ],
    )
    .with_label("wave1d"))
}

/// Spectral antiderivative of a mean-free field.
fn antiderivative(f: &SpectralField) -> Result<SpectralField> {
    let g = f.grid().clone();
    let mean = f.coeffs()[0][0];
    let scale = f.norm0().max(f64::MIN_POSITIVE);
    if mean.norm() * g.measure().sqrt() > 1e-10 * scale {
        return Err(HypnetError::Domain(format!(
            "antiderivative needs a mean-free field (mean {:.3e})",
            mean.norm()
        )));
    }
    Ok(f.map_coeffs(|_, k, z| {
        let xi = g.frequency(k)[0];
        if xi == 0.0 || g.has_nyquist(k) {
            C64::new(0.0, 0.0)
        } else {
            z / C64::new(0.0, xi)
        }
    }))
}

/// (w₀, w₁) ↦ ((w, v), m) with v = −∫ a (w₁ − m).
///
/// The momentum ∫ a w₁ is conserved and a periodic v cannot carry it, so the
/// constant m = ⟨a w₁⟩/⟨a⟩ is split off; w = m·t solves the equation exactly
/// and the full solution is the state's w plus m·t.
pub fn wave_initial_state(w0: &SpectralField, w1: &SpectralField, a: &GridFunction) -> Result<(SpectralField, f64)> {
    let av = a.values();
    let n = av.len() as f64;
    let aw1 = w1.map_values(|_, j, z| z * av[j]);
    let mean_aw1: f64 = aw1.component(0).iter().map(|z| z.re).sum::<f64>() / n;
    let mean_a: f64 = av.iter().sum::<f64>() / n;
    let drift = mean_aw1 / mean_a;
    let v = antiderivative(&aw1.map_values(|_, j, z| z - drift * av[j]))?.scale(C64::new(-1.0, 0.0));
    Ok((SpectralField::stack(&[w0, &v])?, drift))
}

/// (w, w_t, w_x) from a wave-system state.
pub fn wave_fields(state: &SpectralField, a: &GridFunction) -> (SpectralField, SpectralField, SpectralField) {
    let w = state.select(&[0]);
    let wx = w.derivative(0);
    let wt = state
        .select(&[1])
        .derivative(0)
        .map_values(|_, j, z| -z / a.values()[j]);
    (w, wt, wx)
}

/// ∫ (a|w_t|² + b|w_x|²).
pub fn wave_energy(state: &SpectralField, a: &GridFunction, b: &GridFunction) -> f64 {
    wave_energy_on(state, a, b, |_| true)
}

/// Energy restricted to nodes where `keep(x)` holds.
pub fn wave_energy_on(state: &SpectralField, a: &GridFunction, b: &GridFunction, keep: impl Fn(f64) -> bool) -> f64 {
    let (_, wt, wx) = wave_fields(state, a);
    let g = state.grid();
    let mut s = 0.0;
    for j in 0..g.len() {
        if keep(g.point(j)[0]) {
            s += a.values()[j] * wt.values()[0][j].norm_sqr() + b.values()[j] * wx.values()[0][j].norm_sqr();
        }
    }
    s * g.cell_volume()
}

/// Weighted norm of the wave system: ∫ a|w|² + |v|²/b.
pub fn wave_weighted_norm(state: &SpectralField, a: &GridFunction, b: &GridFunction) -> f64 {
    let g = state.grid();
    let mut s = 0.0;
    for j in 0..g.len() {
        s += a.values()[j] * state.values()[0][j].norm_sqr() + state.values()[1][j].norm_sqr() / b.values()[j];
    }
    (s * g.cell_volume()).sqrt()
}

/// 1D wave with a space jump at x = 0 (and at the seam).
#[derive(Debug, Clone)]
pub struct SpaceJumpProblem {
    pub left: Medium,
    pub right: Medium,
    pub w0: Profile,
    pub w1: Profile,
    pub horizon: f64,
    pub rate: Rate,
    pub mollify_data: bool,
}

/// Mollified coefficients and the matching Cauchy problem.
#[derive(Clone)]
pub struct WaveInstance {
    pub eps: f64,
    pub a: GridFunction,
    pub b: GridFunction,
    /// Spatially constant velocity carried outside the system state.
    pub drift: f64,
    pub problem: CauchyProblem,
}

impl WaveInstance {
    /// (w, w_t, w_x) of the full solution at time t, drift included.
    pub fn fields(&self, state: &SpectralField, t: f64) -> (SpectralField, SpectralField, SpectralField) {
        let (w, wt, wx) = wave_fields(state, &self.a);
        let m = self.drift;
        (w.map_values(|_, _, z| z + m * t), wt.map_values(|_, _, z| z + m), wx)
    }
}

impl SpaceJumpProblem {
    pub fn coefficients(&self, grid: &TorusGrid, eps: f64) -> Result<(GridFunction, GridFunction)> {
        let fam = MollifierFamily::new(self.rate, 1)?;
        let sg = SampleGrid::Torus(grid.clone());
        let a = PiecewiseCoefficient::step_x(self.left.a, self.right.a)?;
        let b = PiecewiseCoefficient::step_x(self.left.b, self.right.b)?;
        Ok((
            regularize_coefficient(&a, &fam, &sg, eps)?.into_space()?,
            regularize_coefficient(&b, &fam, &sg, eps)?.into_space()?,
        ))
    }

    pub fn instance(&self, grid: &TorusGrid, eps: f64) -> Result<WaveInstance> {
        let (a, b) = self.coefficients(grid, eps)?;
        let mut w0 = self.w0.sample(grid);
        let mut w1 = self.w1.sample(grid);
        if self.mollify_data {
            let fam = MollifierFamily::new(self.rate, 1)?;
            w0 = mollify_field(&w0, &fam, eps)?;
            w1 = mollify_field(&w1, &fam, eps)?;
        }
        let (g, drift) = wave_initial_state(&w0, &w1, &a)?;
        let problem = CauchyProblem::new(wave_system(&a, &b)?, g, self.horizon)?.with_eps(eps);
        Ok(WaveInstance {
            eps,
            a,
            b,
            drift,
            problem,
        })
    }

    pub fn oracle(&self) -> Result<SpaceJumpOracle> {
        SpaceJumpOracle::new(self.left, self.right, self.w0.clone(), self.w1.clone())
    }

    pub fn b_exact(&self) -> Result<PiecewiseCoefficient> {
        PiecewiseCoefficient::step_x(self.left.b, self.right.b)
    }
}

// ---------------------------------------------------------------- space oracle

/// Travelling components of one side's data: R(x − ct) + L(x + ct).
#[derive(Debug, Clone)]
struct SideData {
    w0: Profile,
    w1: Profile,
    speed: f64,
    active: bool,
    support: (f64, f64),
}

impl SideData {
    fn new(w0: &Profile, w1: &Profile, speed: f64, side: f64) -> Self {
        let on_side = |p: &Profile| match p.support() {
            Some((lo, hi)) if !p.is_zero() => (lo * side > 0.0 || hi * side > 0.0).then_some((lo, hi)),
            _ => None,
        };
        let s0 = on_side(w0);
        let s1 = on_side(w1);
        let support = match (s0, s1) {
            (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => (0.0, 0.0),
        };
        SideData {
            w0: if s0.is_some() { w0.clone() } else { Profile::Zero },
            w1: if s1.is_some() { w1.clone() } else { Profile::Zero },
            speed,
            active: s0.is_some() || s1.is_some(),
            support,
        }
    }

    /// R, R' (right-moving) at argument s.
    fn right(&self, s: f64) -> (f64, f64) {
        let c = self.speed;
        (
            0.5 * (self.w0.value(s) - self.w1.integral(s) / c),
            0.5 * (self.w0.eval(s, 1) - self.w1.value(s) / c),
        )
    }

    fn left(&self, s: f64) -> (f64, f64) {
        let c = self.speed;
        (
            0.5 * (self.w0.value(s) + self.w1.integral(s) / c),
            0.5 * (self.w0.eval(s, 1) + self.w1.value(s) / c),
        )
    }
}

/// Incident/outgoing structure of a connected solution.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveComponent {
    pub amplitude: f64,
    pub speed: f64,
    /// +1 right-moving, −1 left-moving.
    pub direction: i8,
    pub region: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSolution {
    pub kind: &'static str,
    pub components: Vec<WaveComponent>,
    pub reflection: f64,
    pub transmission: f64,
}

/// Connected solution of a w_tt = (b w_x)_x with a single jump at x = 0.
#[derive(Debug, Clone)]
pub struct SpaceJumpOracle {
    pub left: Medium,
    pub right: Medium,
    lside: SideData,
    rside: SideData,
    /// (O₋, O₊) = M (I₋, I₊).
    pub coupling: Matrix2<f64>,
    /// Residual of the continuity system at the solution.
    pub system_residual: f64,
}

impl SpaceJumpOracle {
    pub fn new(left: Medium, right: Medium, w0: Profile, w1: Profile) -> Result<Self> {
        for p in [&w0, &w1] {
            match p.support() {
                None => return Err(HypnetError::Domain("oracle data must be compactly supported".into())),
                Some((lo, hi)) if !p.is_zero() && lo < 0.0 && hi > 0.0 => {
                    return Err(HypnetError::Domain("data support must not straddle x = 0".into()))
                }
                _ => {}
            }
        }
        if let Some(m) = w1.total_integral() {
            if m.abs() > 1e-12 {
                return Err(HypnetError::Domain(format!("oracle needs a mean-free w1 (integral {m:.3e})")));
            }
        }
        let (zm, zp) = (left.impedance(), right.impedance());
        // [1 −1; Z₋ Z₊] O = [I₊ − I₋; Z₋I₋ + Z₊I₊].
        let a = Matrix2::new(1.0, -1.0, zm, zp);
        let rhs = Matrix2::new(-1.0, 1.0, zm, zp);
        let lu = a.lu();
        let coupling = lu
            .solve(&rhs)
            .ok_or_else(|| HypnetError::Degenerate("singular continuity system".into()))?;
        let system_residual = (a * coupling - rhs).abs().max();
        Ok(SpaceJumpOracle {
            left,
            right,
            lside: SideData::new(&w0, &w1, left.speed(), -1.0),
            rside: SideData::new(&w0, &w1, right.speed(), 1.0),
            coupling,
            system_residual,
        })
    }

    /// Reflection coefficient for a wave incident from the left.
    pub fn reflection(&self) -> f64 {
        self.coupling[(0, 0)]
    }

    pub fn transmission(&self) -> f64 {
        self.coupling[(1, 0)]
    }

    /// Closed-form (Z₋−Z₊)/(Z₋+Z₊) for cross-checking.
    pub fn reflection_formula(&self) -> f64 {
        let (zm, zp) = (self.left.impedance(), self.right.impedance());
        (zm - zp) / (zm + zp)
    }

    pub fn summary(&self) -> TransmissionSolution {
        let (cm, cp) = (self.left.speed(), self.right.speed());
        TransmissionSolution {
            kind: "space-jump",
            components: vec![
                WaveComponent { amplitude: 1.0, speed: cm, direction: 1, region: "x<0 incident" },
                WaveComponent { amplitude: self.reflection(), speed: cm, direction: -1, region: "x<0 reflected" },
                WaveComponent { amplitude: self.transmission(), speed: cp, direction: 1, region: "x>0 transmitted" },
            ],
            reflection: self.reflection(),
            transmission: self.transmission(),
        }
    }

    /// Fails when a characteristic would reach the seam x = ±π by time t.
    pub fn check_horizon(&self, t: f64) -> Result<()> {
        let (cm, cp) = (self.left.speed(), self.right.speed());
        let mut reach_left = -cm * t;
        let mut reach_right = cp * t;
        if self.lside.active {
            reach_left = reach_left.min(self.lside.support.0 - cm * t);
        }
        if self.rside.active {
            reach_right = reach_right.max(self.rside.support.1 + cp * t);
        }
        if reach_left <= -PI || reach_right >= PI {
            return Err(HypnetError::Horizon(format!(
                "waves reach [{reach_left:.3}, {reach_right:.3}] by t = {t}, beyond the period"
            )));
        }
        Ok(())
    }

    fn incoming(&self, s: f64) -> (f64, f64, f64, f64) {
        // I₋(s) = R₋(−c₋s), I₊(s) = L₊(c₊s) and their s-derivatives.
        let (cm, cp) = (self.left.speed(), self.right.speed());
        let (im, dim) = if self.lside.active { self.lside.right(-cm * s) } else { (0.0, 0.0) };
        let (ip, dip) = if self.rside.active { self.rside.left(cp * s) } else { (0.0, 0.0) };
        (im, -cm * dim, ip, cp * dip)
    }

    fn outgoing(&self, s: f64) -> (f64, f64, f64, f64) {
        let (im, dim, ip, dip) = self.incoming(s);
        let m = &self.coupling;
        (
            m[(0, 0)] * im + m[(0, 1)] * ip,
            m[(0, 0)] * dim + m[(0, 1)] * dip,
            m[(1, 0)] * im + m[(1, 1)] * ip,
            m[(1, 0)] * dim + m[(1, 1)] * dip,
        )
    }

    /// (w, w_x, w_t) at (x, t); x = 0 uses the left limit.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            let c = self.left.speed();
            let (mut w, mut wx, mut wt) = (0.0, 0.0, 0.0);
            if self.lside.active {
                let (r, dr) = self.lside.right(x - c * t);
                let (l, dl) = self.lside.left(x + c * t);
                w += r + l;
                wx += dr + dl;
                wt += -c * dr + c * dl;
            }
            let (o, d_o, _, _) = self.outgoing(t + x / c);
            (w + o, wx + d_o / c, wt + d_o)
        } else {
            let c = self.right.speed();
            let (mut w, mut wx, mut wt) = (0.0, 0.0, 0.0);
            if self.rside.active {
                let (r, dr) = self.rside.right(x - c * t);
                let (l, dl) = self.rside.left(x + c * t);
                w += r + l;
                wx += dr + dl;
                wt += -c * dr + c * dl;
            }
            let (_, _, o, d_o) = self.outgoing(t - x / c);
            (w + o, wx - d_o / c, wt + d_o)
        }
    }

    /// Right-limit evaluation at the interface.
    pub fn eval_right_limit(&self, t: f64) -> (f64, f64, f64) {
        self.eval(f64::MIN_POSITIVE, t)
    }

    /// Grid samples of (w, w_x, w_t).
    pub fn sample(&self, grid: &TorusGrid, t: f64) -> Result<[SpectralField; 3]> {
        self.check_horizon(t)?;
        let mut out = [vec![], vec![], vec![]];
        for j in 0..grid.len() {
            let (w, wx, wt) = self.eval(grid.point(j)[0], t);
            out[0].push(C64::new(w, 0.0));
            out[1].push(C64::new(wx, 0.0));
            out[2].push(C64::new(wt, 0.0));
        }
        let [a, b, c] = out;
        Ok([
            SpectralField::from_values(grid, vec![a])?,
            SpectralField::from_values(grid, vec![b])?,
            SpectralField::from_values(grid, vec![c])?,
        ])
    }
}

/// Oracle field at time t on the grid.
pub fn connected_solution_space(
    left: Medium,
    right: Medium,
    w0: &Profile,
    w1: &Profile,
    grid: &TorusGrid,
    t: f64,
) -> Result<(TransmissionSolution, SpectralField)> {
    let o = SpaceJumpOracle::new(left, right, w0.clone(), w1.clone())?;
    let [w, _, _] = o.sample(grid, t)?;
    Ok((o.summary(), w))
}

// ---------------------------------------------------------------- time oracle

/// Per-mode exact evolution of w_tt = c(t)² w_xx with c jumping at `jump_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeJumpOracle {
    pub before: Medium,
    pub after: Medium,
    pub jump_time: f64,
}

/// Exact constant-speed evolution of one mode: (ŵ, ŵ_t) after time s.
fn mode_step(w: C64, wt: C64, omega: f64, s: f64) -> (C64, C64) {
    if omega == 0.0 {
        return (w + wt * s, wt);
    }
    let (sn, cs) = (omega * s).sin_cos();
    (w * cs + wt * (sn / omega), -w * (omega * sn) + wt * cs)
}

impl TimeJumpOracle {
    /// (A₊, A₋) on e^{+iω₂s}, e^{−iω₂s} from the 2×2 matching solve.
    pub fn mode_amplitudes(w: C64, wt: C64, omega2: f64) -> Result<(C64, C64)> {
        let i = C64::new(0.0, 1.0);
        let m = nalgebra::Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            i * omega2,
            -i * omega2,
        );
        let sol = m
            .lu()
            .solve(&Vector2::new(w, wt))
            .ok_or_else(|| HypnetError::Degenerate("zero frequency has no branch split".into()))?;
        Ok((sol[0], sol[1]))
    }

    /// (ŵ, ŵ_t) of mode k at time t from data (ŵ₀, ŵ₁).
    pub fn mode(&self, k: f64, w0: C64, w1: C64, t: f64) -> (C64, C64) {
        let o1 = self.before.speed() * k.abs();
        let o2 = self.after.speed() * k.abs();
        if t <= self.jump_time {
            return mode_step(w0, w1, o1, t);
        }
        let (w, wt) = mode_step(w0, w1, o1, self.jump_time);
        mode_step(w, wt, o2, t - self.jump_time)
    }

    /// (w, w_t) at time t.
    pub fn evolve(&self, w0: &SpectralField, w1: &SpectralField, t: f64) -> Result<(SpectralField, SpectralField)> {
        let g = w0.grid().clone();
        let mut a = Vec::with_capacity(g.len());
        let mut b = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let (w, wt) = self.mode(g.frequency(k)[0], w0.coeffs()[0][k], w1.coeffs()[0][k], t);
            a.push(w);
            b.push(wt);
        }
        Ok((
            SpectralField::from_coeffs(&g, vec![a])?,
            SpectralField::from_coeffs(&g, vec![b])?,
        ))
    }
}

pub fn connected_solution_time(
    before: Medium,
    after: Medium,
    jump_time: f64,
    w0: &SpectralField,
    w1: &SpectralField,
    t: f64,
) -> Result<SpectralField> {
    Ok(TimeJumpOracle {
        before,
        after,
        jump_time,
    }
    .evolve(w0, w1, t)?
    .0)
}

/// 1D wave with a time jump, run through the companion system of w_tt = c_ε(t)² w_xx.
#[derive(Debug, Clone)]
pub struct TimeJumpProblem {
    pub before: Medium,
    pub after: Medium,
    pub jump_time: f64,
    pub horizon: f64,
    pub rate: Rate,
}

pub struct TimeJumpInstance {
    pub eps: f64,
    pub c2: TimeFunction,
    pub companion: CompanionSystem,
    pub problem: CauchyProblem,
}

impl TimeJumpProblem {
    pub fn oracle(&self) -> TimeJumpOracle {
        TimeJumpOracle {
            before: self.before,
            after: self.after,
            jump_time: self.jump_time,
        }
    }

    /// Mollified a, b on a time grid of spacing `dt_coef`, combined into c² = b/a.
    pub fn speed_squared(&self, eps: f64, dt_coef: f64) -> Result<TimeFunction> {
        let fam = MollifierFamily::new(self.rate, 1)?;
        let tg = TimeGrid::covering(0.0, self.horizon, dt_coef)?;
        let sg = SampleGrid::Interval(tg.clone());
        let a = PiecewiseCoefficient::step_t(self.jump_time, self.before.a, self.after.a)?;
        let b = PiecewiseCoefficient::step_t(self.jump_time, self.before.b, self.after.b)?;
        let a = regularize_coefficient(&a, &fam, &sg, eps)?.into_time()?;
        let b = regularize_coefficient(&b, &fam, &sg, eps)?.into_time()?;
        let vals: Vec<f64> = a.values.iter().zip(b.values.iter()).map(|(x, y)| y / x).collect();
        Ok(TimeFunction {
            grid: tg,
            values: std::sync::Arc::new(vals),
        })
    }

    pub fn instance(&self, w0: &SpectralField, w1: &SpectralField, eps: f64, dt: f64) -> Result<TimeJumpInstance> {
        let c2 = self.speed_squared(eps, dt / 2.0)?;
        let cc = c2.clone();
        let op = HigherOrderOperator::new(
            1,
            2,
            vec![vec![DiffTerm::new(vec![2], "c_eps(t)^2", move |t, _| cc.eval(t))], Vec::new()],
        )?;
        let companion = reduce(&op)?;
        let g = companion.data_transform(&[w0.clone(), w1.clone()])?;
        let problem = CauchyProblem::new(companion.b.clone(), g, self.horizon)?
            .with_eps(eps)
            .with_x_free_time();
        Ok(TimeJumpInstance {
            eps,
            c2,
            companion,
            problem,
        })
    }
}

/// (w, w_t) from a companion state (⟨D⟩w, w_t).
pub fn companion_fields(u: &SpectralField) -> (SpectralField, SpectralField) {
    (multiplier_apply(-1.0, &u.select(&[0])), u.select(&[1]))
}

// ---------------------------------------------------------------- diagnostics

/// Where interface values come from.
pub enum FieldSamples<'a> {
    /// Node values of w and w_x.
    Grid {
        grid: &'a TorusGrid,
        w: &'a [f64],
        wx: &'a [f64],
    },
    /// Point evaluation x ↦ (w, w_x).
    Function(&'a dyn Fn(f64) -> (f64, f64)),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionJumps {
    pub jump_w: f64,
    pub jump_flux: f64,
    /// Unscaled |w_x(0+) − w_x(0−)|.
    pub jump_derivative: f64,
    pub w_left: f64,
    pub w_right: f64,
    pub flux_left: f64,
    pub flux_right: f64,
}

fn extrapolate_to_zero(xs: [f64; 3], ys: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if j != i {
                l *= (0.0 - xs[j]) / (xs[i] - xs[j]);
            }
        }
        s += ys[i] * l;
    }
    s
}

/// One-sided 3-point extrapolations of w and b w_x to x = 0 from outside |x| ≤ exclusion.
/// Grid stencils sit near ±d, ±2d, ±3d with d = max(exclusion, h).
pub fn transmission_diagnostics(
    src: &FieldSamples<'_>,
    b: &PiecewiseCoefficient,
    exclusion: f64,
) -> Result<TransmissionJumps> {
    if !(exclusion >= 0.0) || exclusion >= PI / 2.0 {
        return Err(HypnetError::Resolution {
            spacing: exclusion,
            max_spacing: PI / 2.0,
            required_points: 0,
        });
    }
    let (xl, wl, dl, xr, wr, dr) = match src {
        FieldSamples::Grid { grid, w, wx } => {
            if grid.dim() != 1 {
                return Err(HypnetError::arg("grid", "diagnostics are 1D"));
            }
            let h = grid.spacing();
            let n = grid.points() as i64;
            // Stencil nodes nearest to ∓d, ∓2d, ∓3d, pushed outward past the zone.
            let d = exclusion.max(h);
            let outward_left = |x: f64| ((x + PI) / h).floor() as i64;
            let outward_right = |x: f64| ((x + PI) / h).ceil() as i64;
            let jl: Vec<i64> = (1..=3).map(|k| outward_left(-(k as f64) * d)).collect();
            let jr: Vec<i64> = (1..=3).map(|k| outward_right(k as f64 * d)).collect();
            if jl[2] < 0 || jr[2] >= n || jl[0] == jl[1] || jr[0] == jr[1] {
                return Err(HypnetError::Resolution {
                    spacing: h,
                    max_spacing: exclusion,
                    required_points: 3,
                });
            }
            let pick = |j: i64| (grid.axis_coord(j as usize), w[j as usize], wx[j as usize]);
            let l: Vec<_> = jl.iter().map(|&j| pick(j)).collect();
            let r: Vec<_> = jr.iter().map(|&j| pick(j)).collect();
            (
                [l[0].0, l[1].0, l[2].0],
                [l[0].1, l[1].1, l[2].1],
                [l[0].2, l[1].2, l[2].2],
                [r[0].0, r[1].0, r[2].0],
                [r[0].1, r[1].1, r[2].1],
                [r[0].2, r[1].2, r[2].2],
            )
        }
        FieldSamples::Function(f) => {
            let d = 1e-3;
            let xs_l = [-exclusion - d, -exclusion - 2.0 * d, -exclusion - 3.0 * d];
            let xs_r = [exclusion + d, exclusion + 2.0 * d, exclusion + 3.0 * d];
            let l: Vec<(f64, f64)> = xs_l.iter().map(|x| f(*x)).collect();
            let r: Vec<(f64, f64)> = xs_r.iter().map(|x| f(*x)).collect();
            (
                xs_l,
                [l[0].0, l[1].0, l[2].0],
                [l[0].1, l[1].1, l[2].1],
                xs_r,
                [r[0].0, r[1].0, r[2].0],
                [r[0].1, r[1].1, r[2].1],
            )
        }
    };
    let b_left = b.eval(&[-1e-9]);
    let b_right = b.eval(&[1e-9]);
    let w_left = extrapolate_to_zero(xl, wl);
    let w_right = extrapolate_to_zero(xr, wr);
    let d_left = extrapolate_to_zero(xl, dl);
    let d_right = extrapolate_to_zero(xr, dr);
    Ok(TransmissionJumps {
        jump_w: (w_right - w_left).abs(),
        jump_flux: (b_right * d_right - b_left * d_left).abs(),
        jump_derivative: (d_right - d_left).abs(),
        w_left,
        w_right,
        flux_left: b_left * d_left,
        flux_right: b_right * d_right,
    })
}

// ---------------------------------------------------------------- configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    SpaceJump,
    TimeJump,
}

/// Geometric ε-grid ε_k = eps0·ratio^k, k = 0..count−1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGridSpec {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl EpsGridSpec {
    /// Checks each field, naming it as `prefix.field` on failure.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(HypnetError::arg(&format!("{prefix}.eps0"), format!("{} outside (0, 1]", self.eps0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(HypnetError::arg(&format!("{prefix}.ratio"), format!("{} outside (0, 1)", self.ratio)));
        }
        if self.count < 4 {
            return Err(HypnetError::arg(&format!("{prefix}.count"), "need at least 4 values"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<EpsilonGrid> {
        make_geometric_grid(self.eps0, self.ratio, self.count)
    }
}

impl Default for EpsGridSpec {
    /// 2^-2 .. 2^-12.
    fn default() -> Self {
        EpsGridSpec {
            eps0: 0.25,
            ratio: 0.5,
            count: 11,
        }
    }
}

/// Structured problem definition loaded from configuration text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "one")]
    pub dimension: usize,
    pub kind: ProblemKind,
    /// Medium for x < 0 (space jump) or t < jump_time (time jump).
    pub minus: Medium,
    pub plus: Medium,
    #[serde(default)]
    pub rate: Rate,
    pub w0: Profile,
    #[serde(default = "zero_profile")]
    pub w1: Profile,
    pub horizon: f64,
    pub grid: usize,
    #[serde(default = "default_jump_time")]
    pub jump_time: f64,
    #[serde(default)]
    pub epsilons: EpsGridSpec,
    #[serde(default = "yes")]
    pub mollify_data: bool,
}

fn one() -> usize {
    1
}
fn zero_profile() -> Profile {
    Profile::Zero
}
fn default_jump_time() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 {
            return Err(HypnetError::arg("dimension", "configured wave problems are 1D"));
        }
        for (name, m) in [("minus", self.minus), ("plus", self.plus)] {
            if !(m.a > 0.0 && m.a.is_finite()) {
                return Err(HypnetError::arg(&format!("{name}.a"), "must be positive"));
            }
            if !(m.b > 0.0 && m.b.is_finite()) {
                return Err(HypnetError::arg(&format!("{name}.b"), "must be positive"));
            }
        }
        if let Rate::Power { theta } = self.rate {
            if !(theta > 0.0) {
                return Err(HypnetError::arg("rate.theta", "must be positive"));
            }
        }
        if self.kind == ProblemKind::TimeJump && !(self.jump_time > 0.0 && self.jump_time < self.horizon) {
            return Err(HypnetError::arg("jump_time", "must lie inside (0, horizon)"));
        }
        if !(self.horizon > 0.0) {
            return Err(HypnetError::arg("horizon", "must be positive"));
        }
        if !self.grid.is_power_of_two() || self.grid < 8 {
            return Err(HypnetError::arg("grid", "must be a power of two >= 8"));
        }
        self.epsilons.validate("epsilons")?;
        Ok(())
    }

    pub fn epsilon_values(&self) -> Vec<f64> {
        (0..self.epsilons.count)
            .map(|k| self.epsilons.eps0 * self.epsilons.ratio.powi(k as i32))
            .collect()
    }

    pub fn space_jump(&self) -> SpaceJumpProblem {
        SpaceJumpProblem {
            left: self.minus,
            right: self.plus,
            w0: self.w0.clone(),
            w1: self.w1.clone(),
            horizon: self.horizon,
            rate: self.rate,
            mollify_data: self.mollify_data,
        }
    }

    pub fn time_jump(&self) -> TimeJumpProblem {
        TimeJumpProblem {
            before: self.minus,
            after: self.plus,
            jump_time: self.jump_time,
            horizon: self.horizon,
            rate: self.rate,
        }
    }
}

/// Plane-wave-free helper: e^{ikx} sampled on the grid.
pub fn mode_field(grid: &TorusGrid, k: f64) -> SpectralField {
    SpectralField::from_fn(grid, 1, move |x| vec![C64::new(0.0, k * x[0]).exp()])
}

/// ⟨ξ⟩ at the largest frequency of a grid.
pub fn max_japanese(grid: &TorusGrid) -> f64 {
    japanese(&vec![(grid.points() / 2) as f64; grid.dim()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> Profile {
        Profile::QuadSpline {
            left: -PI / 2.0,
            right: -PI / 4.0,
            amplitude: 1.0,
        }
    }

    #[test]
    fn momentum_is_split_off_as_drift() {
        let g = TorusGrid::new(1, 64).unwrap();
        let a = GridFunction::from_fn(&g, |x| 2.0 + x[0].sin());
        let w0 = SpectralField::from_real_fn(&g, |x| x[0].cos());
        // a·w1 = 3 + 1.5 cos x: mean 3, ⟨a⟩ = 2, so the drift is 1.5.
        let w1 = SpectralField::from_real_fn(&g, |x| (3.0 + 1.5 * x[0].cos()) / (2.0 + x[0].sin()));
        let (state, drift) = wave_initial_state(&w0, &w1, &a).unwrap();
        assert!((drift - 1.5).abs() < 1e-12, "{drift}");
        let (_, wt, _) = wave_fields(&state, &a);
        for j in 0..g.len() {
            let full = wt.values()[0][j].re + drift;
            assert!((full - w1.values()[0][j].re).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_is_c1_with_unit_mass_shape() {
        let p = pulse();
        let w = PI / 12.0;
        for knot in [-PI / 2.0 + w, -PI / 2.0 + 2.0 * w] {
            let a = p.eval(knot - 1e-9, 1);
            let b = p.eval(knot + 1e-9, 1);
            assert!((a - b).abs() < 1e-6);
        }
        assert!((p.value(-PI / 2.0 + 1.5 * w) - 1.0).abs() < 1e-14);
        // Integral matches Simpson on the values.
        let n = 3000;
        let h = (PI / 4.0) / n as f64;
        let mut s = p.value(-PI / 2.0) + p.value(-PI / 4.0);
        for i in 1..n {
            s += p.value(-PI / 2.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((s * h / 3.0 - p.integral(0.0)).abs() < 1e-9);
    }

    #[test]
    fn acoustics_eigenvalues_unit_medium() {
        let g = TorusGrid::new(1, 16).unwrap();
        let pr = AcousticsProblem::new(
            1,
            PiecewiseCoefficient::constant(1, 1.0).unwrap(),
            PiecewiseCoefficient::constant(1, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        let k = acoustics_symbol(&pr.sampled(&g).unwrap()).unwrap();
        let m = k.evaluate(0.0, &[0.0], &[3.0]);
        assert_eq!(m[(0, 1)], C64::new(0.0, -3.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, -3.0));
        let ev = crate::symmetriser::eigenvalues(&m).unwrap();
        let mut im: Vec<f64> = ev.iter().map(|z| z.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((im[0] + 3.0).abs() < 1e-14 && (im[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn unit_weighted_norm_is_l2() {
        let g = TorusGrid::new(1, 16).unwrap();
        let pr = AcousticsProblem::new(
            1,
            PiecewiseCoefficient::constant(1, 1.0).unwrap(),
            PiecewiseCoefficient::constant(1, 1.0).unwrap(),
            1.0,
        )
        .unwrap();
        let u = SpectralField::from_fn(&g, 2, |x| vec![C64::new(x[0].sin(), 0.0), C64::new(1.0, x[0])]);
        let wn = weighted_norm(&u, &pr.sampled(&g).unwrap()).unwrap();
        assert!((wn - u.norm0()).abs() < 1e-13);
    }

    #[test]
    fn oracle_free_line_is_dalembert() {
        let m = Medium::new(1.0, 1.0).unwrap();
        let w0 = pulse();
        let o = SpaceJumpOracle::new(m, m, w0.clone(), Profile::Zero).unwrap();
        assert!(o.reflection().abs() < 1e-15);
        for &x in &[-2.0, -1.0, -0.3, 0.2] {
            let t = 0.7;
            let (w, _, _) = o.eval(x, t);
            let exact = 0.5 * (w0.value(x - t) + w0.value(x + t));
            assert!((w - exact).abs() < 1e-14, "{x}: {w} vs {exact}");
        }
    }

    #[test]
    fn oracle_continuity_and_energy_partition() {
        let l = Medium::new(1.0, 1.0).unwrap();
        let r = Medium::new(1.0, 4.0).unwrap();
        let w0 = pulse();
        let w1 = Profile::Derivative {
            of: Box::new(w0.clone()),
            scale: -1.0,
        };
        let o = SpaceJumpOracle::new(l, r, w0, w1).unwrap();
        assert!(o.system_residual < 1e-12);
        assert!((o.reflection() - o.reflection_formula()).abs() < 1e-14);
        let (zm, zp) = (l.impedance(), r.impedance());
        let flux = zm * o.reflection().powi(2) + zp * o.transmission().powi(2);
        assert!((flux - zm).abs() < 1e-10);
        for &t in &[0.9, 1.0] {
            let (wl, dl, _) = o.eval(-1e-13, t);
            let (wr, dr, _) = o.eval_right_limit(t);
            assert!((wl - wr).abs() < 1e-12);
            assert!((l.b * dl - r.b * dr).abs() < 1e-10);
        }
    }

    #[test]
    fn matched_impedance_reflects_nothing() {
        let l = Medium::new(2.0, 0.5).unwrap();
        let r = Medium::new(0.5, 2.0).unwrap();
        let o = SpaceJumpOracle::new(l, r, pulse(), Profile::Zero).unwrap();
        assert!(o.reflection().abs() < 1e-12);
    }

    #[test]
    fn time_jump_forward_amplitudes() {
        let (a1, a2) = TimeJumpOracle::mode_amplitudes(C64::new(1.0, 0.0), C64::new(0.0, -2.0), 4.0).unwrap();
        assert!((a1 - C64::new(0.25, 0.0)).norm() < 1e-12);
        assert!((a2 - C64::new(0.75, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_toml_shape() {
        let spec = ProblemSpec {
            dimension: 1,
            kind: ProblemKind::SpaceJump,
            minus: Medium { a: 1.0, b: 1.0 },
            plus: Medium { a: 1.0, b: 4.0 },
            rate: Rate::Log,
            w0: pulse(),
            w1: Profile::Zero,
            horizon: 1.0,
            grid: 256,
            jump_time: 1.0,
            epsilons: EpsGridSpec {
                eps0: 0.25,
                ratio: 0.5,
                count: 5,
            },
            mollify_data: true,
        };
        spec.validate().unwrap();
        assert_eq!(spec.epsilon_values().len(), 5);
    }
}
