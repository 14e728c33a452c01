//! Association studies: ε-solutions against exact limits, rate fits, moderateness sweeps.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::epsnets::{classify_net, least_squares, AsymptoticClass, EpsilonGrid, NetSample};
use crate::error::{HypnetError, Result};
use crate::evolve::{auto_step, negligible_difference_probe, solve, CauchyProblem, NegligibilityReport, SolveOptions};
use crate::mollify::{PiecewiseCoefficient, Rate};
use crate::problems::{
    companion_fields, transmission_diagnostics, FieldSamples, SpaceJumpOracle, SpaceJumpProblem,
    TimeJumpOracle, TimeJumpProblem,
};
use crate::symbolgrid::{sobolev_norm, SpectralField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    Sup,
    /// Case-specific weighted norm (energy norm for the wave cases).
    Weighted,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L2, NormKind::Sup, NormKind::Weighted];

    pub fn name(&self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::Sup => "sup",
            NormKind::Weighted => "weighted",
        }
    }
}

/// Real node values at one time, plus the components whose L² norm is the weighted norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
    pub weighted: Option<Vec<Vec<f64>>>,
    /// Interface flux jump of this state, if the case defines one.
    pub interface_jump: Option<f64>,
}

/// A problem with a regularized solver and an exact reference.
pub trait AssociationCase: Sync {
    fn id(&self) -> String;
    fn grid(&self) -> &TorusGrid;
    fn rate(&self) -> Rate;
    fn times(&self) -> Vec<f64>;
    fn approximate(&self, eps: f64, times: &[f64]) -> Result<Vec<Snapshot>>;
    fn reference(&self, t: f64) -> Result<Snapshot>;
}

/// Substitutes the reference for the solver; every error should vanish.
pub struct OracleAsSolver<'a>(pub &'a dyn AssociationCase);

impl AssociationCase for OracleAsSolver<'_> {
    fn id(&self) -> String {
        format!("{}-oracle", self.0.id())
    }
    fn grid(&self) -> &TorusGrid {
        self.0.grid()
    }
    fn rate(&self) -> Rate {
        self.0.rate()
    }
    fn times(&self) -> Vec<f64> {
        self.0.times()
    }
    fn approximate(&self, _eps: f64, times: &[f64]) -> Result<Vec<Snapshot>> {
        times.iter().map(|&t| self.0.reference(t)).collect()
    }
    fn reference(&self, t: f64) -> Result<Snapshot> {
        self.0.reference(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub omega: f64,
    pub t: f64,
    pub l2: Option<f64>,
    pub sup: Option<f64>,
    pub weighted: Option<f64>,
    pub interface_jump: Option<f64>,
}

impl ConvergenceRow {
    pub fn error(&self, n: NormKind) -> Option<f64> {
        match n {
            NormKind::L2 => self.l2,
            NormKind::Sup => self.sup,
            NormKind::Weighted => self.weighted,
        }
    }
}

/// Empirical slope of log error; no theorem backs these numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRate {
    pub norm: NormKind,
    /// d log err / d log ε
    pub against_eps: f64,
    pub residual_eps: f64,
    /// d log err / d log(1/ω_ε)
    pub against_inv_omega: f64,
    pub residual_inv_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub id: String,
    pub grid_points: usize,
    pub epsilons: Vec<f64>,
    pub norms: Vec<NormKind>,
    pub times: Vec<f64>,
    /// Ordered by ε (grid order), then by time.
    pub rows: Vec<ConvergenceRow>,
    /// ε values whose solve failed, with the message.
    pub failures: Vec<(f64, String)>,
    pub rates: Vec<EmpiricalRate>,
    pub monotone_tail: bool,
}

impl ConvergenceReport {
    pub fn empty(id: impl Into<String>, grid_points: usize) -> Self {
        ConvergenceReport {
            id: id.into(),
            grid_points,
            epsilons: Vec::new(),
            norms: NormKind::ALL.to_vec(),
            times: Vec::new(),
            rows: Vec::new(),
            failures: Vec::new(),
            rates: Vec::new(),
            monotone_tail: false,
        }
    }

    /// Rows at the last comparison time, in ε order.
    pub fn final_rows(&self) -> Vec<&ConvergenceRow> {
        match self.times.last() {
            Some(&t) => self.rows.iter().filter(|r| r.t == t).collect(),
            None => Vec::new(),
        }
    }

    /// Errors in norm `n` at the final time.
    pub fn final_errors(&self, n: NormKind) -> Vec<f64> {
        self.final_rows().iter().filter_map(|r| r.error(n)).collect()
    }

    pub fn final_interface_jumps(&self) -> Vec<f64> {
        self.final_rows().iter().filter_map(|r| r.interface_jump).collect()
    }

    pub fn rate(&self, n: NormKind) -> Option<&EmpiricalRate> {
        self.rates.iter().find(|r| r.norm == n)
    }

    pub fn file_stem(&self) -> String {
        let (a, b) = match (self.epsilons.first(), self.epsilons.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => (0.0, 0.0),
        };
        format!("{}_N{}_eps{:.3e}-{:.3e}", self.id, self.grid_points, a, b)
    }
}

/// Strictly decreasing over the last `k` entries (false when shorter).
pub fn strictly_decreasing_tail(v: &[f64], k: usize) -> bool {
    v.len() >= k && k >= 2 && v[v.len() - k..].windows(2).all(|w| w[1] < w[0])
}

fn discrete_errors(a: &Snapshot, r: &Snapshot, grid: &TorusGrid) -> Result<(f64, f64, Option<f64>)> {
    if a.values.len() != r.values.len() || a.values.len() != grid.len() {
        return Err(HypnetError::arg("snapshot", "length differs from the grid"));
    }
    let dv = grid.cell_volume();
    let mut l2 = 0.0;
    let mut sup = 0.0f64;
    for (x, y) in a.values.iter().zip(&r.values) {
        let d = (x - y).abs();
        l2 += d * d;
        sup = sup.max(d);
    }
    let weighted = match (&a.weighted, &r.weighted) {
        (Some(wa), Some(wr)) if wa.len() == wr.len() => {
            let mut s = 0.0;
            for (ca, cr) in wa.iter().zip(wr) {
                for (x, y) in ca.iter().zip(cr) {
                    s += (x - y) * (x - y);
                }
            }
            Some((s * dv).sqrt())
        }
        _ => None,
    };
    Ok(((l2 * dv).sqrt(), sup, weighted))
}

fn fit_rates(rows: &[&ConvergenceRow], norms: &[NormKind], rate: Rate) -> Vec<EmpiricalRate> {
    let mut out = Vec::new();
    for &n in norms {
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter_map(|r| r.error(n).filter(|e| *e > 0.0).map(|e| (r.eps, rate.omega(r.eps), e)))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let ys: Vec<f64> = pts.iter().map(|p| p.2.ln()).collect();
        let xe: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let xo: Vec<f64> = pts.iter().map(|p| -p.1.ln()).collect();
        let (se, _, re) = least_squares(&xe, &ys);
        let (so, _, ro) = least_squares(&xo, &ys);
        out.push(EmpiricalRate {
            norm: n,
            against_eps: se,
            residual_eps: re,
            against_inv_omega: so,
            residual_inv_omega: ro,
        });
    }
    out
}

/// Solve at each ε (in parallel), compare with the reference at the case's times.
pub fn association_study(case: &dyn AssociationCase, eps_grid: &[f64], norms: &[NormKind]) -> Result<ConvergenceReport> {
    if eps_grid.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(HypnetError::arg("eps_grid", "values must lie in (0, 1]"));
    }
    let times = case.times();
    let grid = case.grid();
    let refs: Vec<Snapshot> = times.iter().map(|&t| case.reference(t)).collect::<Result<_>>()?;
    let per_eps: Vec<std::result::Result<Vec<ConvergenceRow>, String>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let snaps = case.approximate(eps, &times).map_err(|e| e.to_string())?;
            let omega = case.rate().omega(eps);
            let mut rows = Vec::with_capacity(times.len());
            for (s, r) in snaps.iter().zip(&refs) {
                let (l2, sup, w) = discrete_errors(s, r, grid).map_err(|e| e.to_string())?;
                rows.push(ConvergenceRow {
                    eps,
                    omega,
                    t: r.t,
                    l2: norms.contains(&NormKind::L2).then_some(l2),
                    sup: norms.contains(&NormKind::Sup).then_some(sup),
                    weighted: if norms.contains(&NormKind::Weighted) { w } else { None },
                    interface_jump: s.interface_jump,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (eps, r) in eps_grid.iter().zip(per_eps) {
        match r {
            Ok(mut v) => rows.append(&mut v),
            Err(msg) => failures.push((*eps, msg)),
        }
    }
    let mut report = ConvergenceReport {
        id: case.id(),
        grid_points: grid.points(),
        epsilons: eps_grid.to_vec(),
        norms: norms.to_vec(),
        times,
        rows,
        failures,
        rates: Vec::new(),
        monotone_tail: false,
    };
    report.rates = fit_rates(&report.final_rows(), norms, case.rate());
    let primary = norms.first().copied().unwrap_or(NormKind::L2);
    report.monotone_tail = report.failures.is_empty() && strictly_decreasing_tail(&report.final_errors(primary), 5);
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn write_report_csv(cr: &ConvergenceReport, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "eps,omega,t,l2,sup,weighted,interface_jump")?;
    for r in &cr.rows {
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{},{},{},{}",
            r.eps,
            r.omega,
            r.t,
            fmt_opt(r.l2),
            fmt_opt(r.sup),
            fmt_opt(r.weighted),
            fmt_opt(r.interface_jump)
        )?;
    }
    Ok(())
}

/// Long format: one (eps, t, norm, error) per line.
pub fn write_long_csv(cr: &ConvergenceReport, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "eps,t,norm,error")?;
    for r in &cr.rows {
        for n in NormKind::ALL {
            if let Some(e) = r.error(n) {
                writeln!(w, "{:.12e},{:.12e},{},{:.12e}", r.eps, r.t, n.name(), e)?;
            }
        }
    }
    Ok(())
}

pub fn summary_text(cr: &ConvergenceReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "study: {}", cr.id);
    let _ = writeln!(s, "grid points: {}", cr.grid_points);
    let _ = writeln!(s, "epsilons: {}", cr.epsilons.len());
    let _ = writeln!(s, "rows: {}", cr.rows.len());
    let _ = writeln!(s, "monotone tail: {}", cr.monotone_tail);
    for r in &cr.rates {
        let _ = writeln!(
            s,
            "empirical rate [{}]: {:.6} vs eps (rms {:.3e}), {:.6} vs 1/omega (rms {:.3e})",
            r.norm.name(),
            r.against_eps,
            r.residual_eps,
            r.against_inv_omega,
            r.residual_inv_omega
        );
    }
    for (e, m) in &cr.failures {
        let _ = writeln!(s, "failed eps {e:.6e}: {m}");
    }
    s
}

/// Writes `<stem>.csv`, `<stem>_long.csv`, `<stem>_summary.txt` under `dir`.
pub fn emit_report(cr: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HypnetError::io(dir, e))?;
    let stem = cr.file_stem();
    let mut out = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| HypnetError::io(&p, e))?;
        out.push(p);
        Ok(())
    };
    let mut a = Vec::new();
    write_report_csv(cr, &mut a).expect("in-memory write");
    put(format!("{stem}.csv"), a)?;
    let mut b = Vec::new();
    write_long_csv(cr, &mut b).expect("in-memory write");
    put(format!("{stem}_long.csv"), b)?;
    put(format!("{stem}_summary.txt"), summary_text(cr).into_bytes())?;
    Ok(out)
}

// ---------------------------------------------------------------- moderateness

#[derive(Debug, Clone)]
pub struct ModeratenessProfile {
    pub orders: Vec<f64>,
    pub nets: Vec<NetSample>,
    pub classes: Vec<AsymptoticClass>,
    /// Fitted exponents agree across orders within `tolerance`.
    pub regular: bool,
    pub tolerance: f64,
}

/// Classify ε ↦ ‖u_ε(T)‖_l for each l.
pub fn moderateness_profile(
    family: &(dyn Fn(f64) -> Result<CauchyProblem> + Sync),
    grid: &EpsilonGrid,
    orders: &[f64],
    opts: &SolveOptions,
) -> Result<ModeratenessProfile> {
    if orders.is_empty() {
        return Err(HypnetError::arg("orders", "need at least one Sobolev order"));
    }
    let finals: Vec<SpectralField> = grid
        .epsilons()
        .par_iter()
        .map(|&eps| Ok(solve(&family(eps)?, opts)?.final_state().clone()))
        .collect::<Result<_>>()?;
    let mut nets = Vec::new();
    let mut classes = Vec::new();
    for &l in orders {
        let net = NetSample::new(grid.clone(), finals.iter().map(|u| sobolev_norm(l, u)).collect())?;
        classes.push(classify_net(&net, 8)?);
        nets.push(net);
    }
    let tolerance = 0.25;
    let exps: Vec<f64> = classes.iter().map(|c| c.fitted_exponent).collect();
    let lo = exps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ModeratenessProfile {
        orders: orders.to_vec(),
        nets,
        classes,
        regular: hi - lo <= tolerance,
        tolerance,
    })
}

/// Negligible-perturbation control routed through the study interface.
pub fn negligibility_control(
    family: &(dyn Fn(f64) -> Result<CauchyProblem> + Sync),
    grid: &EpsilonGrid,
    q: f64,
    direction: &SpectralField,
    opts: &SolveOptions,
) -> Result<NegligibilityReport> {
    negligible_difference_probe(family, grid, q, direction, opts)
}

// ---------------------------------------------------------------- cases

/// Smallest step count ≥ `min_steps` putting every time on a step boundary.
pub fn aligned_steps(min_steps: usize, horizon: f64, times: &[f64]) -> Result<usize> {
    for steps in min_steps.max(1)..=min_steps.max(1) * 16 {
        let ok = times.iter().all(|&t| {
            let k = t / horizon * steps as f64;
            (k - k.round()).abs() < 1e-9
        });
        if ok {
            return Ok(steps);
        }
    }
    Err(HypnetError::arg("times", "comparison times do not align with any nearby step count"))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Solve p with RK4 at the auto step, refined so the trajectory lands on `times`.
pub fn solve_at(p: &CauchyProblem, times: &[f64], safety: f64) -> Result<Vec<SpectralField>> {
    let (_, auto) = auto_step(&p.k, p.grid(), p.horizon, safety)?;
    let steps = aligned_steps(auto, p.horizon, times)?;
    let idx: Vec<usize> = times.iter().map(|t| (t / p.horizon * steps as f64).round() as usize).collect();
    let every = idx.iter().fold(steps, |g, &k| gcd(g, k)).max(1);
    let opts = SolveOptions {
        store_every: every,
        safety,
        ..SolveOptions::fixed(p.horizon / steps as f64)
    };
    let tr = solve(p, &opts)?;
    Ok(idx.iter().map(|&k| tr.states[k / every].clone()).collect())
}

/// 1D space-jump wave: ε-solution w against the connected solution.
pub struct SpaceJumpCase {
    pub problem: SpaceJumpProblem,
    pub grid: TorusGrid,
    pub times: Vec<f64>,
    pub safety: f64,
    oracle: SpaceJumpOracle,
    b_exact: PiecewiseCoefficient,
}

impl SpaceJumpCase {
    /// Comparison times default to {T/2, T}.
    pub fn new(problem: SpaceJumpProblem, grid: TorusGrid) -> Result<Self> {
        let oracle = problem.oracle()?;
        oracle.check_horizon(problem.horizon)?;
        let b_exact = problem.b_exact()?;
        let t = problem.horizon;
        Ok(SpaceJumpCase {
            problem,
            grid,
            times: vec![0.5 * t, t],
            safety: 0.5,
            oracle,
            b_exact,
        })
    }

    pub fn oracle(&self) -> &SpaceJumpOracle {
        &self.oracle
    }

    fn energy_components(&self, wt: &[f64], wx: &[f64]) -> Vec<Vec<f64>> {
        let (l, r) = (self.problem.left, self.problem.right);
        let mut a = Vec::with_capacity(wt.len());
        let mut b = Vec::with_capacity(wt.len());
        for j in 0..self.grid.len() {
            let x = self.grid.point(j)[0];
            let m = if x < 0.0 { l } else { r };
            a.push(m.a.sqrt() * wt[j]);
            b.push(m.b.sqrt() * wx[j]);
        }
        vec![a, b]
    }

    /// Exclusion radius 2/ω_ε around the interface.
    pub fn exclusion(&self, eps: f64) -> f64 {
        2.0 / self.problem.rate.omega(eps)
    }
}

fn re(f: &SpectralField) -> Vec<f64> {
    f.component(0).iter().map(|z| z.re).collect()
}

impl AssociationCase for SpaceJumpCase {
    fn id(&self) -> String {
        "space_jump".into()
    }
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }
    fn rate(&self) -> Rate {
        self.problem.rate
    }
    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn approximate(&self, eps: f64, times: &[f64]) -> Result<Vec<Snapshot>> {
        let inst = self.problem.instance(&self.grid, eps)?;
        let states = solve_at(&inst.problem, times, self.safety)?;
        let excl = self.exclusion(eps);
        states
            .iter()
            .zip(times)
            .map(|(u, &t)| {
                let (w, wt, wx) = inst.fields(u, t);
                let (w, wt, wx) = (re(&w), re(&wt), re(&wx));
                let jumps = transmission_diagnostics(
                    &FieldSamples::Grid {
                        grid: &self.grid,
                        w: &w,
                        wx: &wx,
                    },
                    &self.b_exact,
                    excl,
                )?;
                Ok(Snapshot {
                    t,
                    weighted: Some(self.energy_components(&wt, &wx)),
                    values: w,
                    interface_jump: Some(jumps.jump_flux),
                })
            })
            .collect()
    }

    fn reference(&self, t: f64) -> Result<Snapshot> {
        let [w, wx, wt] = self.oracle.sample(&self.grid, t)?;
        let (w, wx, wt) = (re(&w), re(&wx), re(&wt));
        Ok(Snapshot {
            t,
            weighted: Some(self.energy_components(&wt, &wx)),
            values: w,
            interface_jump: None,
        })
    }
}

/// 1D time-jump wave through the companion system against the per-mode oracle.
pub struct TimeJumpCase {
    pub problem: TimeJumpProblem,
    pub w0: SpectralField,
    pub w1: SpectralField,
    pub times: Vec<f64>,
    pub safety: f64,
    oracle: TimeJumpOracle,
}

impl TimeJumpCase {
    pub fn new(problem: TimeJumpProblem, w0: SpectralField, w1: SpectralField) -> Result<Self> {
        if w0.grid() != w1.grid() || w0.grid().dim() != 1 {
            return Err(HypnetError::arg("data", "w0 and w1 must share a 1D grid"));
        }
        let t = problem.horizon;
        let oracle = problem.oracle();
        Ok(TimeJumpCase {
            problem,
            w0,
            w1,
            times: vec![0.5 * t, t],
            safety: 0.5,
            oracle,
        })
    }
}

impl AssociationCase for TimeJumpCase {
    fn id(&self) -> String {
        "time_jump".into()
    }
    fn grid(&self) -> &TorusGrid {
        self.w0.grid()
    }
    fn rate(&self) -> Rate {
        self.problem.rate
    }
    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn approximate(&self, eps: f64, times: &[f64]) -> Result<Vec<Snapshot>> {
        let h = self.problem.horizon;
        // The coefficient time grid depends on dt, so size the step on a provisional build.
        let probe = self.problem.instance(&self.w0, &self.w1, eps, h / 64.0)?;
        let (_, auto) = auto_step(&probe.problem.k, self.grid(), h, self.safety)?;
        let steps = aligned_steps(auto, h, times)?;
        let inst = self.problem.instance(&self.w0, &self.w1, eps, h / steps as f64)?;
        let states = solve_at(&inst.problem, times, self.safety)?;
        Ok(states
            .iter()
            .zip(times)
            .map(|(u, &t)| {
                let (w, wt) = companion_fields(u);
                Snapshot {
                    t,
                    values: re(&w),
                    weighted: Some(vec![re(&wt)]),
                    interface_jump: None,
                }
            })
            .collect())
    }

    fn reference(&self, t: f64) -> Result<Snapshot> {
        let (w, wt) = self.oracle.evolve(&self.w0, &self.w1, t)?;
        Ok(Snapshot {
            t,
            values: re(&w),
            weighted: Some(vec![re(&wt)]),
            interface_jump: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Medium, Profile};
    use std::f64::consts::PI;

    fn space_case(right: Medium) -> SpaceJumpCase {
        let w0 = Profile::QuadSpline {
            left: -PI / 2.0,
            right: -PI / 4.0,
            amplitude: 1.0,
        };
        let w1 = Profile::Derivative {
            of: Box::new(w0.clone()),
            scale: -1.0,
        };
        let p = SpaceJumpProblem {
            left: Medium::new(1.0, 1.0).unwrap(),
            right,
            w0,
            w1,
            horizon: 1.0,
            rate: Rate::Log,
            mollify_data: false,
        };
        SpaceJumpCase::new(p, TorusGrid::new(1, 128).unwrap()).unwrap()
    }

    #[test]
    fn oracle_self_study_is_exact() {
        let c = space_case(Medium::new(1.0, 4.0).unwrap());
        let r = association_study(&OracleAsSolver(&c), &[0.25, 0.125, 0.0625], &NormKind::ALL).unwrap();
        assert_eq!(r.rows.len(), 6);
        for row in &r.rows {
            assert!(row.l2.unwrap() <= 1e-10 && row.sup.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn constant_medium_sits_at_solver_floor() {
        let c = space_case(Medium::new(1.0, 1.0).unwrap());
        let r = association_study(&c, &[0.25, 0.0625], &[NormKind::L2]).unwrap();
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        // Nothing depends on ε; the floor is the aliasing error of C¹ data at N = 128.
        let (a, b) = (&r.rows[1], &r.rows[3]);
        assert!((a.l2.unwrap() - b.l2.unwrap()).abs() < 1e-12);
        for row in &r.rows {
            assert!(row.l2.unwrap() < 5e-3, "{row:?}");
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_report_csv(&ConvergenceReport::empty("x", 8), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eps,omega,t,l2,sup,weighted,interface_jump\n");
    }

    #[test]
    fn tail_helper() {
        assert!(strictly_decreasing_tail(&[9.0, 5.0, 4.0, 3.0, 2.0, 1.0], 5));
        assert!(!strictly_decreasing_tail(&[5.0, 4.0, 4.0, 2.0, 1.0], 5));
        assert!(!strictly_decreasing_tail(&[2.0, 1.0], 5));
    }

    #[test]
    fn aligned_steps_hits_halves() {
        assert_eq!(aligned_steps(7, 1.0, &[0.5, 1.0]).unwrap(), 8);
        assert_eq!(aligned_steps(3, 1.0, &[1.0]).unwrap(), 3);
    }
}
