//! Reduction of m-th order scalar equations to first-order companion systems.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::linalg::Schur;

use crate::error::{HypnetError, Result};
use crate::evolve::{rk4, solve, CauchyProblem, SolveOptions, StepSize, Trajectory};
use crate::symbolgrid::{
    japanese, multiplier_apply, CMat, CoefFn, SeparableTerm, SpectralField, SymbolMatrix, TorusGrid, C64,
};
use crate::symmetriser::{eigen_decompose, CertConfig, EigenSystem, SamplePoint};

/// coef(t,x)·∂^α.
#[derive(Clone)]
pub struct DiffTerm {
    pub alpha: Vec<usize>,
    pub coef: CoefFn,
    pub time_independent: bool,
    pub label: String,
}

impl std::fmt::Debug for DiffTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}*d^{:?}", self.label, self.alpha)
    }
}

impl DiffTerm {
    pub fn new(alpha: Vec<usize>, label: &str, coef: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DiffTerm {
            alpha,
            coef: Arc::new(move |t, x| C64::new(coef(t, x), 0.0)),
            time_independent: false,
            label: label.into(),
        }
    }

    pub fn static_coef(alpha: Vec<usize>, label: &str, coef: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DiffTerm {
            alpha,
            coef: Arc::new(move |_, x| C64::new(coef(x), 0.0)),
            time_independent: true,
            label: label.into(),
        }
    }

    pub fn order(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// (iξ)^α.
    pub fn monomial(alpha: &[usize], xi: &[f64]) -> C64 {
        alpha
            .iter()
            .zip(xi)
            .fold(C64::new(1.0, 0.0), |acc, (a, v)| acc * C64::new(0.0, *v).powu(*a as u32))
    }
}

/// L = ∂_t^m − Σ_{j<m} A_{m−j}(t,x,D) ∂_t^j; `coeffs[j]` holds A_{m−j}.
#[derive(Clone, Debug)]
pub struct HigherOrderOperator {
    pub dim: usize,
    pub order: usize,
    pub coeffs: Vec<Vec<DiffTerm>>,
}

impl HigherOrderOperator {
    pub fn new(dim: usize, order: usize, coeffs: Vec<Vec<DiffTerm>>) -> Result<Self> {
        if order < 2 {
            return Err(HypnetError::arg("order", "need m >= 2"));
        }
        if coeffs.len() != order {
            return Err(HypnetError::arg("coeffs", "one operator per j = 0..m-1 required"));
        }
        for (j, terms) in coeffs.iter().enumerate() {
            for t in terms {
                if t.alpha.len() != dim {
                    return Err(HypnetError::arg("alpha", "multi-index length differs from dimension"));
                }
                if t.order() > order - j {
                    return Err(HypnetError::arg(
                        "coeffs",
                        format!("A_{} has a term of order {}", order - j, t.order()),
                    ));
                }
            }
        }
        Ok(HigherOrderOperator { dim, order, coeffs })
    }

    /// w_tt = c(x)² Δw.
    pub fn wave(dim: usize, c: impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static) -> Result<Self> {
        let terms = (0..dim)
            .map(|a| {
                let mut alpha = vec![0; dim];
                alpha[a] = 2;
                let c = c.clone();
                DiffTerm::static_coef(alpha, "c^2", move |x| c(x).powi(2))
            })
            .collect();
        HigherOrderOperator::new(dim, 2, vec![terms, Vec::new()])
    }

    /// Ã_{m−j}(t,x,ξ), all terms or principal (|α| = m−j) only.
    pub fn symbol_a(&self, j: usize, t: f64, x: &[f64], xi: &[f64], principal: bool) -> C64 {
        self.coeffs[j]
            .iter()
            .filter(|d| !principal || d.order() == self.order - j)
            .map(|d| (d.coef)(t, x) * DiffTerm::monomial(&d.alpha, xi))
            .sum()
    }

    /// A_{m−j}(t,x,D)u by spectral differentiation.
    pub fn apply_a(&self, j: usize, t: f64, u: &SpectralField) -> Result<SpectralField> {
        let grid = u.grid();
        let mut out = SpectralField::zeros(grid, 1);
        let xs = grid.points_list();
        for d in &self.coeffs[j] {
            let mut v = u.clone();
            for (a, &k) in d.alpha.iter().enumerate() {
                for _ in 0..k {
                    v = v.derivative(a);
                }
            }
            let w = v.map_values(|_, i, z| (d.coef)(t, &xs[i]) * z);
            out = out.add(&w)?;
        }
        Ok(out)
    }

    pub fn time_independent(&self) -> bool {
        self.coeffs.iter().flatten().all(|d| d.time_independent)
    }
}

/// First-order system ∂_t U = B U with U_k = ∂_t^{k−1}⟨D⟩^{m−k}u.
#[derive(Clone, Debug)]
pub struct CompanionSystem {
    pub op: HigherOrderOperator,
    /// Full symbol (all terms of each A_{m−j}).
    pub b: SymbolMatrix,
    /// Principal part only; its eigenvalues are iτ_j.
    pub principal: SymbolMatrix,
}

fn companion_symbol(op: &HigherOrderOperator, principal: bool) -> SymbolMatrix {
    let m = op.order;
    let mut terms = Vec::new();
    for k in 0..m - 1 {
        terms.push(SeparableTerm::static_coef(k, k + 1, |_| C64::new(1.0, 0.0), |xi| {
            C64::new(japanese(xi), 0.0)
        }));
    }
    // Last row: b̃_k = Ã_{m−k+1}⟨ξ⟩^{k−m}, column k−1 (0-based), j = k−1.
    for (j, ds) in op.coeffs.iter().enumerate() {
        let shift = j as i32 + 1 - m as i32;
        for d in ds {
            if principal && d.order() != m - j {
                continue;
            }
            let alpha = d.alpha.clone();
            let coef = d.coef.clone();
            let mult = move |xi: &[f64]| DiffTerm::monomial(&alpha, xi) * japanese(xi).powi(shift);
            let mut term = SeparableTerm::new(m - 1, j, move |t, x| coef(t, x), mult);
            term.coef_time_independent = d.time_independent;
            terms.push(term);
        }
    }
    SymbolMatrix::separable(m, 1.0, terms).with_label(if principal { "B_principal" } else { "B" })
}

pub fn reduce(op: &HigherOrderOperator) -> Result<CompanionSystem> {
    Ok(CompanionSystem {
        op: op.clone(),
        b: companion_symbol(op, false),
        principal: companion_symbol(op, true),
    })
}

impl CompanionSystem {
    pub fn order(&self) -> usize {
        self.op.order
    }

    /// (g₁..g_m) ↦ (⟨D⟩^{m−1}g₁, …, g_m).
    pub fn data_transform(&self, g: &[SpectralField]) -> Result<SpectralField> {
        let m = self.order();
        if g.len() != m || g.iter().any(|f| f.components() != 1) {
            return Err(HypnetError::arg("data", "need m scalar fields"));
        }
        let parts: Vec<SpectralField> = g
            .iter()
            .enumerate()
            .map(|(k, f)| multiplier_apply((m - 1 - k) as f64, f))
            .collect();
        SpectralField::stack(&parts.iter().collect::<Vec<_>>())
    }

    /// f ↦ (0, …, 0, f).
    pub fn source_embed(&self, f: &SpectralField) -> Result<SpectralField> {
        let z = SpectralField::zeros(f.grid(), 1);
        let mut parts: Vec<&SpectralField> = vec![&z; self.order() - 1];
        parts.push(f);
        SpectralField::stack(&parts)
    }

    /// u = ⟨D⟩^{1−m}U₁.
    pub fn recover(&self, u: &SpectralField) -> SpectralField {
        multiplier_apply(1.0 - self.order() as f64, &u.select(&[0]))
    }

    pub fn describe(&self) -> String {
        let m = self.order();
        let mut s = String::new();
        let _ = writeln!(s, "companion system, m = {m}, dim = {}", self.op.dim);
        for r in 0..m - 1 {
            let row: Vec<String> = (0..m).map(|c| if c == r + 1 { "<xi>".into() } else { "0".into() }).collect();
            let _ = writeln!(s, "row {}: [{}]", r + 1, row.join(", "));
        }
        let last: Vec<String> = (0..m)
            .map(|j| {
                let ds = &self.op.coeffs[j];
                if ds.is_empty() {
                    "0".into()
                } else {
                    let terms: Vec<String> = ds
                        .iter()
                        .map(|d| format!("{}*(i xi)^{:?}", d.label, d.alpha))
                        .collect();
                    format!("({})*<xi>^{}", terms.join(" + "), j as i32 + 1 - m as i32)
                }
            })
            .collect();
        let _ = writeln!(s, "row {m}: [{}]", last.join(", "));
        s
    }
}

/// τ_j from the principal companion symbol, certified as in the symmetriser.
pub fn characteristic_roots(cs: &CompanionSystem, samples: &[SamplePoint], cfg: &CertConfig) -> Result<EigenSystem> {
    eigen_decompose(&cs.principal, samples, cfg)
}

/// Roots μ = iτ of (μ)^m − Σ Ã_{m−j} μ^j via the monic companion matrix.
pub fn polynomial_roots(op: &HigherOrderOperator, t: f64, x: &[f64], xi: &[f64]) -> Result<Vec<C64>> {
    let m = op.order;
    let mut c = CMat::zeros(m, m);
    for r in 0..m - 1 {
        c[(r + 1, r)] = C64::new(1.0, 0.0);
    }
    for j in 0..m {
        c[(j, m - 1)] = op.symbol_a(j, t, x, xi, true);
    }
    let s = Schur::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| HypnetError::NumericalFault("companion root iteration did not converge".into()))?;
    let ev = s
        .eigenvalues()
        .ok_or_else(|| HypnetError::NumericalFault("no roots".into()))?;
    Ok(ev.iter().cloned().collect())
}

/// Max over samples of the relative mismatch between the two root paths.
pub fn root_agreement(cs: &CompanionSystem, samples: &[SamplePoint]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in samples {
        let mut a = crate::symmetriser::eigenvalues(&cs.principal.evaluate(p.t, &p.x, &p.xi))?;
        let mut b = polynomial_roots(&cs.op, p.t, &p.x, &p.xi)?;
        let key = |z: &C64| (z.im, z.re);
        a.sort_by(|u, v| key(u).partial_cmp(&key(v)).expect("finite"));
        b.sort_by(|u, v| key(u).partial_cmp(&key(v)).expect("finite"));
        let scale = japanese(&p.xi);
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).norm() / scale);
        }
    }
    Ok(worst)
}

/// Second-order (or m-th order) solve on (u, ∂_t u, …) without the ⟨D⟩ scaling.
pub fn direct_solve(op: &HigherOrderOperator, data: &[SpectralField], t_end: f64, steps: usize, store_every: usize) -> Result<Trajectory> {
    let m = op.order;
    if data.len() != m {
        return Err(HypnetError::arg("data", "need m scalar fields"));
    }
    let state = SpectralField::stack(&data.iter().collect::<Vec<_>>())?;
    rk4(
        &state,
        |t, u| {
            let mut parts: Vec<SpectralField> = (1..m).map(|k| u.select(&[k])).collect();
            let mut top = SpectralField::zeros(u.grid(), 1);
            for j in 0..m {
                top = top.add(&op.apply_a(j, t, &u.select(&[j]))?)?;
            }
            parts.push(top);
            SpectralField::stack(&parts.iter().collect::<Vec<_>>())
        },
        t_end,
        steps,
        store_every,
        1e12,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub discrepancy: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub step_size: f64,
}

/// Solve via the companion system and directly; max L² gap of u over stored times.
pub fn roundtrip_solve_check(
    op: &HigherOrderOperator,
    data: &[SpectralField],
    t_end: f64,
    dt: Option<f64>,
    store_every: usize,
) -> Result<RoundtripReport> {
    let cs = reduce(op)?;
    let u0 = cs.data_transform(data)?;
    let mut p = CauchyProblem::new(cs.b.clone(), u0, t_end)?;
    p.x_free_time = false;
    let opts = SolveOptions {
        step: dt.map(StepSize::Fixed).unwrap_or(StepSize::Auto),
        store_every,
        ..SolveOptions::default()
    };
    let tr = solve(&p, &opts)?;
    let direct = direct_solve(op, data, t_end, tr.steps, store_every)?;
    let mut errors = Vec::with_capacity(tr.times.len());
    for (a, b) in tr.states.iter().zip(&direct.states) {
        let ua = cs.recover(a);
        let ub = b.select(&[0]);
        errors.push(ua.sub(&ub)?.norm0());
    }
    Ok(RoundtripReport {
        discrepancy: errors.iter().cloned().fold(0.0, f64::max),
        times: tr.times,
        errors,
        step_size: tr.step_size,
    })
}

/// Grid helper for tests and examples.
pub fn smooth_data(grid: &TorusGrid, shift: f64) -> SpectralField {
    SpectralField::from_real_fn(grid, move |x| {
        x.iter().map(|v| (v + shift).sin()).sum::<f64>().exp() - 1.0
    })
}
