//! Eigenprojectors, symmetrisers and their certification.

use std::fmt;
use std::io::Write;
use std::path::Path;

use nalgebra::linalg::{Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{HypnetError, Result};
use crate::garding::{find_c1_on, ProbeConfig};
use crate::symbolgrid::{japanese, norm_xi, spectral_norm, CMat, DenseOperator, SymbolMatrix, TorusGrid, C64};

/// One evaluation point (t, x, ξ).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, x={:?}, xi={:?})", self.t, self.x, self.xi)
    }
}

/// `nx` nodes of the grid crossed with `nxi` frequencies of modulus ≥ 1.
///
/// In 1D the frequencies are ±1, ±2, …; in 2D they are taken along a fixed set of
/// directions with integer radii.
pub fn grid_samples(grid: &TorusGrid, t: f64, nx: usize, nxi: usize) -> Vec<SamplePoint> {
    let step = (grid.len() / nx.max(1)).max(1);
    let xs: Vec<Vec<f64>> = (0..grid.len()).step_by(step).take(nx).map(|j| grid.point(j)).collect();
    let xis: Vec<Vec<f64>> = if grid.dim() == 1 {
        (0..nxi)
            .map(|i| {
                let k = (i / 2 + 1) as f64;
                vec![if i % 2 == 0 { k } else { -k }]
            })
            .collect()
    } else {
        (0..nxi)
            .map(|i| {
                let ang = 2.399_963_229_728_653 * i as f64;
                let r = 1.0 + (i / 4) as f64;
                vec![r * ang.cos(), r * ang.sin()]
            })
            .collect()
    };
    let mut out = Vec::with_capacity(xs.len() * xis.len());
    for x in &xs {
        for xi in &xis {
            out.push(SamplePoint {
                t,
                x: x.clone(),
                xi: xi.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertConfig {
    /// Allowed |Re μ| of an eigenvalue μ, relative to ⟨ξ⟩.
    pub real_tol: f64,
    /// Smallest admissible (λ_{j+1}-λ_j)/⟨ξ⟩.
    pub gap_floor: f64,
}

impl Default for CertConfig {
    fn default() -> Self {
        CertConfig {
            real_tol: 1e-8,
            gap_floor: 1e-8,
        }
    }
}

/// Sorted real λ with eigenvalues iλ of k, certified purely imaginary.
pub fn imaginary_spectrum(k: &CMat, point: &SamplePoint, cfg: &CertConfig) -> Result<Vec<f64>> {
    let mu = eigenvalues(k)?;
    let scale = japanese(&point.xi);
    let mut lambdas = Vec::with_capacity(mu.len());
    let mut worst: f64 = 0.0;
    for z in mu {
        worst = worst.max(z.re.abs());
        lambdas.push(z.im);
    }
    if worst > cfg.real_tol * scale {
        return Err(HypnetError::NotHyperbolic {
            witness: point.to_string(),
            real_part: worst,
        });
    }
    lambdas.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(lambdas)
}

/// Eigenvalues of a complex matrix (closed form for 1×1 and 2×2).
pub fn eigenvalues(k: &CMat) -> Result<Vec<C64>> {
    let m = k.nrows();
    if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(HypnetError::NumericalFault("non-finite symbol entry".into()));
    }
    match m {
        1 => Ok(vec![k[(0, 0)]]),
        2 => {
            let tr = k[(0, 0)] + k[(1, 1)];
            let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
            let disc = (tr * tr * 0.25 - det).sqrt();
            Ok(vec![tr * 0.5 + disc, tr * 0.5 - disc])
        }
        _ => {
            let s = Schur::try_new(k.clone(), 1e-15, 10_000)
                .ok_or_else(|| HypnetError::NumericalFault("Schur iteration did not converge".into()))?;
            let ev = s
                .eigenvalues()
                .ok_or_else(|| HypnetError::NumericalFault("no eigenvalues".into()))?;
            Ok(ev.iter().cloned().collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleEigen {
    pub point: SamplePoint,
    pub lambdas: Vec<f64>,
    /// min_j (λ_{j+1} - λ_j)/⟨ξ⟩ at this sample.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub samples: Vec<SampleEigen>,
    pub gap: f64,
    pub gap_witness: Option<SamplePoint>,
    /// Cutoff ψ(|ξ|) at each sample.
    pub radius_mask: Vec<f64>,
}

fn local_gap(lambdas: &[f64], xi: &[f64]) -> f64 {
    lambdas
        .windows(2)
        .map(|w| (w[1] - w[0]) / japanese(xi))
        .fold(f64::INFINITY, f64::min)
}

pub fn eigen_decompose(
    k1: &SymbolMatrix,
    samples: &[SamplePoint],
    cfg: &CertConfig,
) -> Result<EigenSystem> {
    if k1.declared_order != 1.0 {
        return Err(HypnetError::arg("K1", "principal symbol must have declared order 1"));
    }
    if samples.is_empty() {
        return Err(HypnetError::arg("samples", "empty sample set"));
    }
    if samples.iter().any(|p| norm_xi(&p.xi) < 1.0) {
        return Err(HypnetError::arg("samples", "all samples need |xi| >= 1"));
    }
    let rows: Vec<Result<SampleEigen>> = samples
        .par_iter()
        .map(|p| {
            let k = k1.evaluate(p.t, &p.x, &p.xi);
            let lambdas = imaginary_spectrum(&k, p, cfg)?;
            let gap = local_gap(&lambdas, &p.xi);
            Ok(SampleEigen {
                point: p.clone(),
                lambdas,
                gap,
            })
        })
        .collect();
    let rows: Vec<SampleEigen> = rows.into_iter().collect::<Result<_>>()?;
    let mut gap = f64::INFINITY;
    let mut witness = None;
    for r in &rows {
        if r.gap < gap {
            gap = r.gap;
            witness = Some(r.point.clone());
        }
    }
    if gap <= cfg.gap_floor {
        return Err(HypnetError::StrictHyperbolicity {
            witness: witness.map(|w| w.to_string()).unwrap_or_default(),
            gap,
            threshold: cfg.gap_floor,
        });
    }
    let radius_mask = rows.iter().map(|r| cutoff(norm_xi(&r.point.xi))).collect();
    Ok(EigenSystem {
        samples: rows,
        gap,
        gap_witness: witness,
        radius_mask,
    })
}

/// Smooth ψ(r): 0 for r ≤ 1/2, 1 for r ≥ 1.
pub fn cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let s = 2.0 * r - 1.0;
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// P_j = Π_{h≠j} (-iK₁ - λ_h I)/(λ_j - λ_h) at one point.
pub fn projectors_at(k1: &CMat, lambdas: &[f64], scale: f64, cfg: &CertConfig) -> Result<Vec<CMat>> {
    let m = k1.nrows();
    let mik = k1 * C64::new(0.0, -1.0);
    let id = CMat::identity(m, m);
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut p = id.clone();
        for h in 0..m {
            if h == j {
                continue;
            }
            let d = lambdas[j] - lambdas[h];
            if d.abs() <= cfg.gap_floor * scale {
                return Err(HypnetError::DegenerateEigenvalue(format!(
                    "lambda_{j} - lambda_{h} = {d:.3e}"
                )));
            }
            let factor = (&mik - &id * C64::new(lambdas[h], 0.0)) / C64::new(d, 0.0);
            p = p * factor;
        }
        out.push(p);
    }
    Ok(out)
}

/// Residuals of the projector identities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectorResiduals {
    pub partition: f64,
    pub orthogonality: f64,
    /// ‖Σ iλ_j P_j - K₁‖ / ⟨ξ⟩
    pub reconstruction: f64,
}

impl ProjectorResiduals {
    pub fn max(&self) -> f64 {
        self.partition.max(self.orthogonality).max(self.reconstruction)
    }

    fn merge(self, o: ProjectorResiduals) -> ProjectorResiduals {
        ProjectorResiduals {
            partition: self.partition.max(o.partition),
            orthogonality: self.orthogonality.max(o.orthogonality),
            reconstruction: self.reconstruction.max(o.reconstruction),
        }
    }
}

pub fn projector_residuals(k1: &CMat, lambdas: &[f64], ps: &[CMat], xi: &[f64]) -> ProjectorResiduals {
    let m = k1.nrows();
    let id = CMat::identity(m, m);
    let mut sum = CMat::zeros(m, m);
    let mut recon = CMat::zeros(m, m);
    for (j, p) in ps.iter().enumerate() {
        sum += p;
        recon += p * C64::new(0.0, lambdas[j]);
    }
    let mut orth: f64 = 0.0;
    for j in 0..m {
        for h in 0..m {
            let prod = &ps[j] * &ps[h];
            let target = if j == h { ps[j].clone() } else { CMat::zeros(m, m) };
            orth = orth.max(spectral_norm(&(prod - target)));
        }
    }
    ProjectorResiduals {
        partition: spectral_norm(&(sum - id)),
        orthogonality: orth,
        reconstruction: spectral_norm(&(recon - k1)) / japanese(xi),
    }
}

/// Eigenprojector evaluators of a certified principal symbol.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    k1: SymbolMatrix,
    cfg: CertConfig,
    /// Worst algebra residuals over the certified samples.
    pub residuals: ProjectorResiduals,
}

impl ProjectorSet {
    pub fn size(&self) -> usize {
        self.k1.size()
    }

    pub fn principal(&self) -> &SymbolMatrix {
        &self.k1
    }

    /// (λ, P_j) at (t,x,ξ), with the cutoff ψ applied below |ξ| = 1.
    pub fn evaluate(&self, t: f64, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<CMat>)> {
        let r = norm_xi(xi);
        let m = self.size();
        let psi = cutoff(r);
        if psi == 0.0 {
            return Ok((vec![0.0; m], vec![CMat::zeros(m, m); m]));
        }
        let xi_eval: Vec<f64> = if r < 1.0 { xi.iter().map(|v| v / r).collect() } else { xi.to_vec() };
        let point = SamplePoint {
            t,
            x: x.to_vec(),
            xi: xi_eval.clone(),
        };
        let k = self.k1.evaluate(t, x, &xi_eval);
        let lambdas = imaginary_spectrum(&k, &point, &self.cfg)?;
        let mut ps = projectors_at(&k, &lambdas, japanese(&xi_eval), &self.cfg)?;
        if psi != 1.0 {
            for p in ps.iter_mut() {
                *p *= C64::new(psi, 0.0);
            }
        }
        Ok((lambdas, ps))
    }
}

pub fn projectors_product_formula(k1: &SymbolMatrix, es: &EigenSystem) -> Result<ProjectorSet> {
    projectors_with_config(k1, es, &CertConfig::default())
}

pub fn projectors_with_config(k1: &SymbolMatrix, es: &EigenSystem, cfg: &CertConfig) -> Result<ProjectorSet> {
    if !(es.gap > 0.0) {
        return Err(HypnetError::arg("eigen system", "not certified"));
    }
    let res: Vec<Result<ProjectorResiduals>> = es
        .samples
        .par_iter()
        .map(|s| {
            let p = &s.point;
            let k = k1.evaluate(p.t, &p.x, &p.xi);
            let ps = projectors_at(&k, &s.lambdas, japanese(&p.xi), cfg)?;
            Ok(projector_residuals(&k, &s.lambdas, &ps, &p.xi))
        })
        .collect();
    let mut worst = ProjectorResiduals::default();
    for r in res {
        worst = worst.merge(r?);
    }
    Ok(ProjectorSet {
        k1: k1.clone(),
        cfg: *cfg,
        residuals: worst,
    })
}

/// R₀ = ψ² Σ P_j* P_j as an order-0 symbol. Evaluation failures yield NaN entries.
pub fn build_r(ps: &ProjectorSet) -> SymbolMatrix {
    let ps = ps.clone();
    let m = ps.size();
    SymbolMatrix::new(m, 0.0, ps.k1.time_independent, move |t, x, xi| {
        match ps.evaluate(t, x, xi) {
            Ok((_, projs)) => {
                let mut r = CMat::zeros(m, m);
                for p in &projs {
                    r += p.adjoint() * p;
                }
                r
            }
            Err(_) => CMat::from_element(m, m, C64::new(f64::NAN, f64::NAN)),
        }
    })
    .with_label("R0")
}

/// Smallest eigenvalue of the Hermitian part of a matrix.
pub fn min_hermitian_eigenvalue(a: &CMat) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    if h.nrows() == 2 {
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b = h[(0, 1)].norm();
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return mean - rad;
    }
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of the smallest eigenvalue of R₀ over the samples, with its argmin.
pub fn r0_min_eigenvalue(r0: &SymbolMatrix, samples: &[SamplePoint]) -> Result<(f64, SamplePoint)> {
    let vals: Vec<f64> = samples
        .par_iter()
        .map(|p| min_hermitian_eigenvalue(&r0.evaluate(p.t, &p.x, &p.xi)))
        .collect();
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, v) in vals.iter().enumerate() {
        if v.is_nan() {
            return Err(HypnetError::NumericalFault(format!("R0 undefined at {}", samples[i])));
        }
        if *v < best {
            best = *v;
            arg = i;
        }
    }
    Ok((best, samples[arg].clone()))
}

/// max over samples of ‖R₀K₁ + (R₀K₁)*‖.
pub fn cancellation_check(r0: &SymbolMatrix, k1: &SymbolMatrix, samples: &[SamplePoint]) -> f64 {
    samples
        .par_iter()
        .map(|p| {
            let rk = r0.evaluate(p.t, &p.x, &p.xi) * k1.evaluate(p.t, &p.x, &p.xi);
            let s = &rk + rk.adjoint();
            if s.iter().any(|z| z.re.is_nan()) {
                f64::INFINITY
            } else {
                spectral_norm(&s)
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// R₀, S = R₀ + c₁⟨D⟩^{-1} and the constants c, c₁.
#[derive(Debug, Clone)]
pub struct SymmetriserPair {
    pub r0: SymbolMatrix,
    pub s: SymbolMatrix,
    pub c: f64,
    pub c1: f64,
    pub eps: Option<f64>,
}

/// S = R₀ + c₁⟨ξ⟩^{-1}I.
pub fn corrected_symmetriser(r0: &SymbolMatrix, c1: f64) -> SymbolMatrix {
    let m = r0.size();
    let corr = SymbolMatrix::multiplier(m, -1.0, move |xi| C64::new(c1 / japanese(xi), 0.0));
    let a = r0.clone();
    SymbolMatrix::new(m, 0.0, r0.time_independent, move |t, x, xi| {
        a.evaluate(t, x, xi) + corr.evaluate(t, x, xi)
    })
    .with_label("S")
}

pub fn build_s(
    r0: &SymbolMatrix,
    grid: &TorusGrid,
    eps: Option<f64>,
    probes: &ProbeConfig,
) -> Result<SymmetriserPair> {
    build_s_on(&DenseOperator::new(r0, 0.0, grid), r0, grid, eps, probes)
}

/// As [`build_s`], reusing a quantization of `r0` (share it with a later probe check).
pub fn build_s_on(
    op: &DenseOperator,
    r0: &SymbolMatrix,
    grid: &TorusGrid,
    eps: Option<f64>,
    probes: &ProbeConfig,
) -> Result<SymmetriserPair> {
    let m = r0.size();
    let c = 1.0 / (2.0 * (m * m) as f64);
    let search = find_c1_on(op, r0, grid, c, probes)?;
    Ok(SymmetriserPair {
        r0: r0.clone(),
        s: corrected_symmetriser(r0, search.c1),
        c,
        c1: search.c1,
        eps,
    })
}

/// One row of a certification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationRow {
    pub point: SamplePoint,
    pub lambdas: Vec<f64>,
    pub gap: f64,
    pub r0_min_eig: f64,
    pub cancellation: f64,
    pub residuals: ProjectorResiduals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub m: usize,
    pub rows: Vec<CertificationRow>,
    pub min_gap: f64,
    pub min_r0_eig: f64,
    pub max_cancellation: f64,
    pub max_projector_residual: ProjectorResiduals,
}

/// Full per-sample certification: spectrum, gap, projectors, R₀ and cancellation.
pub fn certify(k1: &SymbolMatrix, samples: &[SamplePoint], cfg: &CertConfig) -> Result<CertificationReport> {
    let es = eigen_decompose(k1, samples, cfg)?;
    let m = k1.size();
    let rows: Vec<Result<CertificationRow>> = es
        .samples
        .par_iter()
        .map(|s| {
            let p = &s.point;
            let k = k1.evaluate(p.t, &p.x, &p.xi);
            let ps = projectors_at(&k, &s.lambdas, japanese(&p.xi), cfg)?;
            let residuals = projector_residuals(&k, &s.lambdas, &ps, &p.xi);
            let psi = cutoff(norm_xi(&p.xi));
            let mut r = CMat::zeros(m, m);
            for pj in &ps {
                r += pj.adjoint() * pj;
            }
            r *= C64::new(psi * psi, 0.0);
            let rk = &r * &k;
            let cancellation = spectral_norm(&(&rk + rk.adjoint()));
            Ok(CertificationRow {
                point: p.clone(),
                lambdas: s.lambdas.clone(),
                gap: s.gap,
                r0_min_eig: min_hermitian_eigenvalue(&r),
                cancellation,
                residuals,
            })
        })
        .collect();
    let rows: Vec<CertificationRow> = rows.into_iter().collect::<Result<_>>()?;
    let min_r0_eig = rows.iter().map(|r| r.r0_min_eig).fold(f64::INFINITY, f64::min);
    let max_cancellation = rows.iter().map(|r| r.cancellation).fold(0.0, f64::max);
    let max_projector_residual = rows
        .iter()
        .fold(ProjectorResiduals::default(), |a, r| a.merge(r.residuals));
    Ok(CertificationReport {
        m,
        rows,
        min_gap: es.gap,
        min_r0_eig,
        max_cancellation,
        max_projector_residual,
    })
}

impl CertificationReport {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let dim = self.rows.first().map(|r| r.point.x.len()).unwrap_or(1);
        let mut header = vec!["t".to_string()];
        for a in 0..dim {
            header.push(format!("x{}", a + 1));
        }
        for a in 0..dim {
            header.push(format!("xi{}", a + 1));
        }
        for j in 0..self.m {
            header.push(format!("lambda{}", j + 1));
        }
        header.extend(["gap", "min_eig_r0", "cancellation_residual"].iter().map(|s| s.to_string()));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut row = vec![format!("{:e}", r.point.t)];
            row.extend(r.point.x.iter().map(|v| format!("{v:e}")));
            row.extend(r.point.xi.iter().map(|v| format!("{v:e}")));
            row.extend(r.lambdas.iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", r.gap));
            row.push(format!("{:e}", r.r0_min_eig));
            row.push(format!("{:e}", r.cancellation));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

/// Seeded smooth family K₁(x,ξ) = V(x) diag(i d_j(x) |ξ|) V(x)^{-1} in 1D, with
/// distinct speeds d_1 < … < d_m.
pub fn random_hyperbolic_family(m: usize, seed: u64) -> SymbolMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0 = CMat::identity(m, m);
    let mut v1 = CMat::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            v0[(r, c)] += C64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            v1[(r, c)] = C64::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        }
    }
    let base: Vec<f64> = (0..m).map(|j| j as f64 - (m as f64 - 1.0) / 2.0).collect();
    let wobble: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..0.3)).collect();
    SymbolMatrix::new(m, 1.0, true, move |_, x, xi| {
        let v = &v0 + &v1 * C64::new(x[0].sin(), 0.0);
        let vinv = v.clone().try_inverse().expect("well-conditioned by construction");
        let r = norm_xi(xi);
        let mut d = CMat::zeros(m, m);
        for j in 0..m {
            let speed = base[j] * (1.0 + wobble[j] * (x[0] + j as f64).cos());
            d[(j, j)] = C64::new(0.0, speed * r);
        }
        v * d * vinv
    })
    .with_label(format!("random{m}x{m}[seed={seed}]"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_symbol() -> SymbolMatrix {
        SymbolMatrix::new(2, 1.0, true, |_, _, xi| {
            let mut k = CMat::zeros(2, 2);
            k[(0, 0)] = C64::new(0.0, xi[0]);
            k[(1, 1)] = C64::new(0.0, 2.0 * xi[0]);
            k
        })
    }

    fn pt(xi: f64) -> SamplePoint {
        SamplePoint {
            t: 0.0,
            x: vec![0.3],
            xi: vec![xi],
        }
    }

    #[test]
    fn diagonal_spectrum_and_gap() {
        let es = eigen_decompose(&diag_symbol(), &[pt(4.0)], &CertConfig::default()).unwrap();
        let s = &es.samples[0];
        assert!((s.lambdas[0] - 4.0).abs() < 1e-14 && (s.lambdas[1] - 8.0).abs() < 1e-14);
        assert!((es.gap - 4.0 / 17f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_projectors_and_r0() {
        let k = diag_symbol();
        let es = eigen_decompose(&k, &[pt(3.0), pt(-5.0)], &CertConfig::default()).unwrap();
        let ps = projectors_product_formula(&k, &es).unwrap();
        let (_, p) = ps.evaluate(0.0, &[0.1], &[3.0]).unwrap();
        assert!((p[0][(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(p[0][(1, 1)].norm() < 1e-14);
        let r0 = build_r(&ps);
        let r = r0.evaluate(0.0, &[0.1], &[3.0]);
        assert!((r - CMat::identity(2, 2)).norm() < 1e-14);
        assert!(cancellation_check(&r0, &k, &[pt(3.0), pt(7.0)]) < 1e-12);
    }

    #[test]
    fn non_hyperbolic_and_degenerate_are_rejected() {
        let bad = SymbolMatrix::new(1, 1.0, true, |_, _, xi| CMat::from_element(1, 1, C64::new(xi[0], 0.0)));
        assert!(matches!(
            eigen_decompose(&bad, &[pt(2.0)], &CertConfig::default()),
            Err(HypnetError::NotHyperbolic { .. })
        ));
        let double = SymbolMatrix::new(2, 1.0, true, |_, _, xi| CMat::identity(2, 2) * C64::new(0.0, xi[0]));
        assert!(matches!(
            eigen_decompose(&double, &[pt(2.0)], &CertConfig::default()),
            Err(HypnetError::StrictHyperbolicity { .. })
        ));
        assert!(eigen_decompose(&diag_symbol(), &[pt(0.5)], &CertConfig::default()).is_err());
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 0.0);
        assert_eq!(cutoff(0.5), 0.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert!((cutoff(0.75) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn random_family_round_trip() {
        let k = random_hyperbolic_family(3, 11);
        let p = pt(5.0);
        let km = k.evaluate(0.0, &p.x, &p.xi);
        let lam = imaginary_spectrum(&km, &p, &CertConfig::default()).unwrap();
        assert_eq!(lam.len(), 3);
        // Power sums recover the constructed spectrum.
        let s1: f64 = lam.iter().sum();
        let s2: f64 = lam.iter().map(|v| v * v).sum();
        assert!((s1 - km.trace().im).abs() < 1e-9);
        assert!((s2 + (&km * &km).trace().re).abs() < 1e-9);
        assert!(lam[0] < 0.0 && lam[2] > 0.0);
    }
}
