//! Method-of-lines RK4 solver, energy ledgers and Gronwall checks.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::epsnets::{classify_net, AsymptoticClass, EpsilonGrid, NetSample};
use crate::error::{HypnetError, Result};
use crate::symbolgrid::{
    japanese, multiplier_apply, sobolev_norm, spectral_norm, DenseOperator, FastOperator, SpectralField,
    SymbolMatrix, TorusGrid, C64,
};

pub type SourceFn = Arc<dyn Fn(f64) -> SpectralField + Send + Sync>;

/// ∂_t u = K u + f, u(0) = g on [0, horizon].
#[derive(Clone)]
pub struct CauchyProblem {
    pub k: SymbolMatrix,
    pub f: Option<SourceFn>,
    pub g: SpectralField,
    pub horizon: f64,
    pub eps: Option<f64>,
    /// Time-dependent separable coefficients depend on t only.
    pub x_free_time: bool,
}

impl CauchyProblem {
    pub fn new(k: SymbolMatrix, g: SpectralField, horizon: f64) -> Result<Self> {
        if k.size() != g.components() {
            return Err(HypnetError::arg("g", "component count differs from symbol size"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(HypnetError::arg("horizon", "must be positive and finite"));
        }
        Ok(CauchyProblem {
            k,
            f: None,
            g,
            horizon,
            eps: None,
            x_free_time: false,
        })
    }

    pub fn with_source(mut self, f: impl Fn(f64) -> SpectralField + Send + Sync + 'static) -> Self {
        self.f = Some(Arc::new(f));
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_x_free_time(mut self) -> Self {
        self.x_free_time = true;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        self.g.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub step: StepSize,
    /// Store every k-th step (the final state is always stored).
    pub store_every: usize,
    /// Safety factor κ of the auto step.
    pub safety: f64,
    pub blowup_factor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            step: StepSize::Auto,
            store_every: 1,
            safety: 0.5,
            blowup_factor: 1e12,
        }
    }
}

impl SolveOptions {
    pub fn fixed(dt: f64) -> Self {
        SolveOptions {
            step: StepSize::Fixed(dt),
            ..Self::default()
        }
    }

    pub fn decimated(mut self, every: usize) -> Self {
        self.store_every = every.max(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub step_size: f64,
    pub steps: usize,
    pub order: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    /// Snapshot index nearest to t.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn write_snapshot_csv(&self, idx: usize, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# t={:e}", self.times[idx])?;
        self.states[idx].write_csv(w)
    }

    pub fn save_snapshot_csv(&self, idx: usize, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_snapshot_csv(idx, &mut f).map_err(|e| HypnetError::io(path, e))
    }
}

/// Application of K(t) picked once per problem.
pub enum Rhs {
    Fast(FastOperator),
    Static(DenseOperator),
    Dynamic(SymbolMatrix, TorusGrid),
}

impl Rhs {
    pub fn new(k: &SymbolMatrix, grid: &TorusGrid, x_free_time: bool) -> Result<Self> {
        if k.terms().is_some() {
            let op = FastOperator::new(k, grid)?;
            Ok(Rhs::Fast(if x_free_time { op.with_x_free_time_coefficients() } else { op }))
        } else if k.time_independent {
            Ok(Rhs::Static(DenseOperator::new(k, 0.0, grid)))
        } else {
            Ok(Rhs::Dynamic(k.clone(), grid.clone()))
        }
    }

    pub fn apply(&self, t: f64, u: &SpectralField) -> Result<SpectralField> {
        match self {
            Rhs::Fast(op) => op.apply(t, u),
            Rhs::Static(op) => op.apply(u),
            Rhs::Dynamic(k, g) => DenseOperator::new(k, t, g).apply(u),
        }
    }
}

/// dt = κ / (sup ‖K‖/⟨ξ⟩ · ⟨ξ_max⟩), then shrunk so T/dt is an integer.
pub fn auto_step(k: &SymbolMatrix, grid: &TorusGrid, horizon: f64, safety: f64) -> Result<(f64, usize)> {
    let xs = grid.points_list();
    let xstep = (xs.len() / 1024).max(1);
    let half = (grid.points() / 2) as f64;
    let mut radii = Vec::new();
    let mut r = 1.0;
    while r <= half {
        radii.push(r);
        r *= 2.0;
    }
    let dirs: Vec<Vec<f64>> = if grid.dim() == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]]
    };
    let times: Vec<f64> = if k.time_independent {
        vec![0.0]
    } else {
        (0..33).map(|i| horizon * i as f64 / 32.0).collect()
    };
    let sup = (0..xs.len())
        .into_par_iter()
        .step_by(xstep)
        .map(|j| {
            let mut s: f64 = 0.0;
            for &t in &times {
                for d in &dirs {
                    for &r in &radii {
                        let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
                        s = s.max(spectral_norm(&k.evaluate(t, &xs[j], &xi)) / japanese(&xi));
                    }
                }
            }
            s
        })
        .reduce(|| 0.0, f64::max);
    if !sup.is_finite() {
        return Err(HypnetError::NumericalFault("symbol norm is not finite".into()));
    }
    let xi_max: Vec<f64> = vec![half; grid.dim()];
    let dt0 = if sup > 0.0 { safety / (sup * japanese(&xi_max)) } else { horizon };
    let steps = (horizon / dt0).ceil().max(1.0) as usize;
    Ok((horizon / steps as f64, steps))
}

/// Classical RK4 for u' = rhs(t, u) on [0, t_end].
pub fn rk4(
    g: &SpectralField,
    rhs: impl Fn(f64, &SpectralField) -> Result<SpectralField>,
    t_end: f64,
    steps: usize,
    store_every: usize,
    blowup_factor: f64,
) -> Result<Trajectory> {
    let dt = t_end / steps as f64;
    let n0 = g.norm0();
    let limit = if n0 > 0.0 { blowup_factor * n0 } else { f64::INFINITY };
    let mut u = g.clone();
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    for s in 0..steps {
        let t = s as f64 * dt;
        let k1 = rhs(t, &u)?;
        let k2 = rhs(t + 0.5 * dt, &u.axpy(half, &k1)?)?;
        let k3 = rhs(t + 0.5 * dt, &u.axpy(half, &k2)?)?;
        let k4 = rhs(t + dt, &u.axpy(full, &k3)?)?;
        let sum = k1.add(&k2.add(&k3)?.scale(C64::new(2.0, 0.0)))?.add(&k4)?;
        u = u.axpy(C64::new(dt / 6.0, 0.0), &sum)?;
        let tn = (s + 1) as f64 * dt;
        if !u.is_finite() {
            return Err(HypnetError::NumericalFault(format!("non-finite state at t = {tn:e}")));
        }
        if u.norm0() > limit {
            return Err(HypnetError::BlowUp { time: tn });
        }
        if (s + 1) % store_every.max(1) == 0 || s + 1 == steps {
            times.push(tn);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        step_size: dt,
        steps,
        order: 4,
    })
}

pub fn solve(p: &CauchyProblem, opts: &SolveOptions) -> Result<Trajectory> {
    let grid = p.grid().clone();
    let steps = match opts.step {
        StepSize::Auto => auto_step(&p.k, &grid, p.horizon, opts.safety)?.1,
        StepSize::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(HypnetError::arg("dt", "must be positive"));
            }
            (p.horizon / dt).round().max(1.0) as usize
        }
    };
    let op = Rhs::new(&p.k, &grid, p.x_free_time)?;
    let f = p.f.clone();
    rk4(
        &p.g,
        |t, u| {
            let ku = op.apply(t, u)?;
            match &f {
                Some(src) => ku.add(&src(t)),
                None => Ok(ku),
            }
        },
        p.horizon,
        steps,
        opts.store_every,
        opts.blowup_factor,
    )
}

/// E_l(t) with the constants entering the Gronwall bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub l: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// ‖u(t)‖²_l.
    pub norms: Vec<f64>,
    /// Largest discrete log-derivative of E_l.
    pub c_hat: f64,
    /// Positivity constant of S.
    pub c: f64,
    /// Forced case: C_l and d_l; homogeneous case: C_l = c·max(Ĉ,0), d_l = E_l(0).
    pub big_c: f64,
    pub d: f64,
}

impl EnergyLedger {
    /// Bound on ‖u(t)‖²_l.
    pub fn bound(&self, t: f64) -> f64 {
        self.d / self.c * (self.big_c / self.c * t).exp()
    }

    /// Largest relative drift |E(t)−E(0)|/(E(0)·t) over stored times.
    pub fn relative_drift_rate(&self) -> f64 {
        let e0 = self.energy[0];
        self.times
            .iter()
            .zip(&self.energy)
            .skip(1)
            .map(|(t, e)| (e - e0).abs() / (e0.abs().max(f64::MIN_POSITIVE) * t))
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,E_l,bound")?;
        for (t, e) in self.times.iter().zip(&self.energy) {
            writeln!(w, "{t:e},{e:e},{:e}", self.c * self.bound(*t))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

fn energies(tr: &Trajectory, s: &SymbolMatrix, l: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = tr.states[0].grid().clone();
    let fixed = if s.time_independent {
        Some(DenseOperator::new(s, 0.0, &grid))
    } else {
        None
    };
    let out: Vec<Result<(f64, f64)>> = tr
        .times
        .par_iter()
        .zip(&tr.states)
        .map(|(t, u)| {
            let v = multiplier_apply(l, u);
            let sv = match &fixed {
                Some(op) => op.apply(&v)?,
                None => DenseOperator::new(s, *t, &grid).apply(&v)?,
            };
            Ok((sv.inner(&v)?.re, sobolev_norm(l, u).powi(2)))
        })
        .collect();
    let mut e = Vec::with_capacity(out.len());
    let mut n = Vec::with_capacity(out.len());
    for r in out {
        let (a, b) = r?;
        e.push(a);
        n.push(b);
    }
    Ok((e, n))
}

/// Homogeneous ledger: Ĉ = max_k log(E_{k+1}/E_k)/Δt.
pub fn energy_track(tr: &Trajectory, s: &SymbolMatrix, l: f64, c: f64) -> Result<EnergyLedger> {
    let (energy, norms) = energies(tr, s, l)?;
    let mut c_hat = f64::NEG_INFINITY;
    for k in 0..energy.len().saturating_sub(1) {
        let dt = tr.times[k + 1] - tr.times[k];
        if energy[k] > 0.0 && energy[k + 1] > 0.0 {
            c_hat = c_hat.max((energy[k + 1] / energy[k]).ln() / dt);
        }
    }
    if !c_hat.is_finite() {
        c_hat = 0.0;
    }
    Ok(EnergyLedger {
        l,
        times: tr.times.clone(),
        d: energy[0],
        big_c: c * c_hat.max(0.0),
        energy,
        norms,
        c_hat,
        c,
    })
}

/// Forced ledger: C = max_k (ΔE/Δt)/(E_k/c + ‖f(t_k)‖²_l), d = E(0) + C sup‖f‖²_l T.
pub fn energy_track_forced(
    tr: &Trajectory,
    s: &SymbolMatrix,
    l: f64,
    c: f64,
    f: &SourceFn,
) -> Result<EnergyLedger> {
    let mut led = energy_track(tr, s, l, c)?;
    let fnorm: Vec<f64> = tr.times.iter().map(|t| sobolev_norm(l, &f(*t)).powi(2)).collect();
    let mut big_c: f64 = 0.0;
    for k in 0..led.energy.len().saturating_sub(1) {
        let dt = tr.times[k + 1] - tr.times[k];
        let rate = (led.energy[k + 1] - led.energy[k]) / dt;
        let den = led.energy[k] / c + fnorm[k];
        if den > 0.0 {
            big_c = big_c.max(rate / den);
        }
    }
    let sup_f = fnorm.iter().cloned().fold(0.0, f64::max);
    let horizon = tr.final_time();
    led.big_c = big_c;
    led.d = led.energy[0] + big_c * sup_f * horizon;
    Ok(led)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallCheck {
    pub holds: bool,
    /// min over t of (bound − value)/bound.
    pub slack: f64,
    pub witness_time: f64,
}

pub fn gronwall_check(el: &EnergyLedger, tr: &Trajectory) -> GronwallCheck {
    let mut slack = f64::INFINITY;
    let mut witness = 0.0;
    for (t, v) in tr.times.iter().zip(&el.norms) {
        let b = el.bound(*t);
        let s = if b > 0.0 { (b - v) / b } else if *v == 0.0 { 0.0 } else { f64::NEG_INFINITY };
        if s < slack {
            slack = s;
            witness = *t;
        }
    }
    GronwallCheck {
        holds: slack >= -1e-12,
        slack,
        witness_time: witness,
    }
}

#[derive(Debug, Clone)]
pub struct NegligibilityReport {
    pub net: NetSample,
    pub class: AsymptoticClass,
}

/// Solve with g and g + ε^q·direction and classify ‖Δu_ε(T)‖₀.
pub fn negligible_difference_probe(
    family: &(dyn Fn(f64) -> Result<CauchyProblem> + Sync),
    grid: &EpsilonGrid,
    q: f64,
    direction: &SpectralField,
    opts: &SolveOptions,
) -> Result<NegligibilityReport> {
    let n = direction.norm0();
    if !(n > 0.0) {
        return Err(HypnetError::arg("direction", "must be a nonzero field"));
    }
    let unit = direction.scale(C64::new(1.0 / n, 0.0));
    let diffs: Vec<Result<f64>> = grid
        .epsilons()
        .par_iter()
        .map(|&eps| {
            let p = family(eps)?;
            let base = solve(&p, opts)?;
            let mut pert = p.clone();
            pert.g = p.g.axpy(C64::new(eps.powf(q), 0.0), &unit)?;
            let moved = solve(&pert, opts)?;
            Ok(moved.final_state().sub(base.final_state())?.norm0())
        })
        .collect();
    let values = diffs.into_iter().collect::<Result<Vec<f64>>>()?;
    let net = NetSample::new(grid.clone(), values)?;
    let class = classify_net(&net, 8)?;
    Ok(NegligibilityReport { net, class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolgrid::{CMat, SeparableTerm};

    fn transport() -> SymbolMatrix {
        SymbolMatrix::separable(
            1,
            1.0,
            vec![SeparableTerm::static_coef(0, 0, |_| C64::new(1.0, 0.0), |xi| C64::new(0.0, xi[0]))],
        )
    }

    #[test]
    fn transport_translates() {
        let g = TorusGrid::new(1, 64).unwrap();
        let u0 = SpectralField::from_fn(&g, 1, |x| vec![C64::new(0.0, 3.0 * x[0]).exp()]);
        let p = CauchyProblem::new(transport(), u0, 1.0).unwrap();
        let tr = solve(&p, &SolveOptions::fixed(1e-3).decimated(100)).unwrap();
        let exact = SpectralField::from_fn(&g, 1, |x| vec![C64::new(0.0, 3.0 * (x[0] + 1.0)).exp()]);
        let err = tr.final_state().sub(&exact).unwrap().sup_norm();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = TorusGrid::new(1, 32).unwrap();
        let p = CauchyProblem::new(transport(), SpectralField::zeros(&g, 1), 1.0).unwrap();
        let tr = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(tr.final_state().sup_norm(), 0.0);
    }

    #[test]
    fn skew_system_conserves_energy() {
        let g = TorusGrid::new(1, 32).unwrap();
        let k = SymbolMatrix::separable(
            2,
            1.0,
            vec![
                SeparableTerm::static_coef(0, 1, |_| C64::new(1.0, 0.0), |xi| C64::new(0.0, -xi[0])),
                SeparableTerm::static_coef(1, 0, |_| C64::new(1.0, 0.0), |xi| C64::new(0.0, -xi[0])),
            ],
        );
        let u0 = SpectralField::from_fn(&g, 2, |x| {
            vec![C64::new((x[0]).sin().exp(), 0.0), C64::new(0.3 * (2.0 * x[0]).cos(), 0.0)]
        });
        let p = CauchyProblem::new(k, u0, 1.0).unwrap();
        let tr = solve(&p, &SolveOptions::fixed(2e-3).decimated(50)).unwrap();
        let led = energy_track(&tr, &SymbolMatrix::identity(2), 0.0, 1.0).unwrap();
        assert!(led.relative_drift_rate() < 1e-9, "{}", led.relative_drift_rate());
        assert!(gronwall_check(&led, &tr).holds);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = TorusGrid::new(1, 16).unwrap();
        let k = SymbolMatrix::constant(CMat::from_element(1, 1, C64::new(40.0, 0.0)));
        let u0 = SpectralField::from_fn(&g, 1, |_| vec![C64::new(1.0, 0.0)]);
        let p = CauchyProblem::new(k, u0, 1.0).unwrap();
        let r = solve(&p, &SolveOptions::fixed(1e-2));
        assert!(matches!(r, Err(HypnetError::BlowUp { .. })));
    }
}
