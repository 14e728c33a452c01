//! Probed Gårding inequalities and the 1D Friedrichs part.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::linalg::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::epsnets::{classify_net, AsymptoticClass, EpsilonGrid, NetSample};
use crate::error::{HypnetError, Result};
use crate::mollify::{profile, wrap};
use crate::symbolgrid::{
    japanese, random_band_limited, sobolev_norm, CMat, DenseOperator, SpectralField, SymbolMatrix,
    TorusGrid, C64,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Random band-limited probes.
    pub trials: usize,
    pub seed: u64,
    /// Frequency band of the random probes.
    pub band: f64,
    /// Widths of the localized probes at the worst point of Re A.
    pub widths: Vec<f64>,
    /// Largest Rayleigh–Ritz problem (rows) over the low band.
    pub ritz_max_rows: usize,
    /// Number of Ritz vectors kept as adversarial probes.
    pub ritz_vectors: usize,
    /// Ceiling of the c₁ doubling search.
    pub cap: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            trials: 64,
            seed: 7,
            band: 16.0,
            widths: vec![0.15, 0.4, 1.0],
            ritz_max_rows: 1100,
            ritz_vectors: 4,
            cap: 1e6,
        }
    }
}

/// Which family a probe field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Random,
    Constant,
    Localized,
    Ritz,
}

/// Probe fields normalised to unit L², with the quantities entering the margin.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub fields: Vec<SpectralField>,
    pub kinds: Vec<ProbeKind>,
    /// Re(Au,u).
    pub form: Vec<f64>,
    /// ‖u‖²_{-1/2}.
    pub neg_half: Vec<f64>,
    /// Smallest c₁ closing the margin on the Ritz subspace.
    pub ritz_c1: f64,
}

impl ProbeSet {
    /// Margins Re(Au,u) − c‖u‖² + c₁‖u‖²_{-1/2}.
    pub fn margins(&self, c: f64, c1: f64) -> Vec<f64> {
        self.form
            .iter()
            .zip(&self.neg_half)
            .map(|(q, s)| q - c + c1 * s)
            .collect()
    }

    pub fn min_margin(&self, c: f64, c1: f64) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (i, v) in self.margins(c, c1).into_iter().enumerate() {
            if v < best {
                best = v;
                arg = i;
            }
        }
        (best, arg)
    }

    /// max_i (c − q_i)/s_i, floored at 0.
    pub fn closed_form_c1(&self, c: f64) -> f64 {
        self.form
            .iter()
            .zip(&self.neg_half)
            .map(|(q, s)| (c - q) / s)
            .fold(0.0, f64::max)
    }
}

fn normalise(u: SpectralField) -> Option<SpectralField> {
    let n = u.norm0();
    if n > 0.0 && n.is_finite() {
        Some(u.scale(C64::new(1.0 / n, 0.0)))
    } else {
        None
    }
}

/// Worst point of the Hermitian part of A over a subsample: (x, ξ, eigenvector).
fn worst_point(a: &SymbolMatrix, grid: &TorusGrid) -> (Vec<f64>, Vec<f64>, Vec<C64>) {
    let xs = grid.points_list();
    let xis = grid.frequencies_list();
    let xstep = (xs.len() / 64).max(1);
    let kstep = (xis.len() / 64).max(1);
    let pairs: Vec<(usize, usize)> = (0..xs.len())
        .step_by(xstep)
        .flat_map(|j| (0..xis.len()).step_by(kstep).map(move |k| (j, k)))
        .filter(|&(_, k)| !grid.has_nyquist(k))
        .collect();
    let best = pairs
        .par_iter()
        .map(|&(j, k)| {
            let m = a.evaluate(0.0, &xs[j], &xis[k]);
            let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            let e = SymmetricEigen::new(h);
            let (i, v) = e
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
            let z: Vec<C64> = e.eigenvectors.column(i).iter().cloned().collect();
            (v, j, k, z)
        })
        .reduce(
            || (f64::INFINITY, 0, 0, Vec::new()),
            |p, q| if q.0 < p.0 || (q.0 == p.0 && (q.1, q.2) < (p.1, p.2)) { q } else { p },
        );
    (xs[best.1].clone(), xis[best.2].clone(), best.3)
}

fn localized_probe(grid: &TorusGrid, x0: &[f64], xi0: &[f64], z: &[C64], width: f64) -> Option<SpectralField> {
    let m = z.len();
    let u = SpectralField::from_fn(grid, m, |x| {
        let mut r2 = 0.0;
        let mut ph = 0.0;
        for a in 0..x.len() {
            let d = wrap(x[a] - x0[a]);
            r2 += d * d;
            ph += x[a] * xi0[a];
        }
        let amp = profile(r2.sqrt() / width, 0);
        let e = C64::new(0.0, ph).exp() * amp;
        z.iter().map(|zc| zc * e).collect()
    });
    normalise(u.without_nyquist())
}

/// Signed frequency to flat index (aliased mod N).
fn freq_index(grid: &TorusGrid, f: &[i64]) -> usize {
    let n = grid.points() as i64;
    f.iter().fold(0usize, |acc, v| acc * grid.points() + v.rem_euclid(n) as usize)
}

/// Low-band modes |ξ|_∞ ≤ K sized so that (#modes)·m ≤ max_rows.
fn ritz_band(grid: &TorusGrid, m: usize, max_rows: usize) -> Vec<usize> {
    let n = grid.points();
    let dim = grid.dim();
    let mut k = (n / 2).saturating_sub(1);
    while k > 0 && (2 * k + 1).pow(dim as u32) * m > max_rows {
        k -= 1;
    }
    (0..grid.len())
        .filter(|&i| !grid.has_nyquist(i) && grid.frequency(i).iter().all(|v| v.abs() <= k as f64))
        .collect()
}

/// Rayleigh–Ritz for the smallest c₁ on the low band, plus the top adversarial fields.
fn ritz_probes(
    op: &DenseOperator,
    grid: &TorusGrid,
    c: f64,
    cfg: &ProbeConfig,
) -> Result<(f64, Vec<SpectralField>)> {
    let m = op.size();
    let band = ritz_band(grid, m, cfg.ritz_max_rows);
    let nb = band.len();
    if nb == 0 {
        return Ok((0.0, Vec::new()));
    }
    let rows = nb * m;
    let npts = grid.len();
    let measure = grid.measure();
    // Column blocks: for each band mode k, transform x ↦ A(x,k)[r][c].
    let cols: Vec<Vec<Vec<C64>>> = band
        .par_iter()
        .map(|&k| {
            let mut out = Vec::with_capacity(m * m);
            for r in 0..m {
                for cc in 0..m {
                    let vals: Vec<C64> = (0..npts).map(|j| op.entry(j, k, r, cc)).collect();
                    out.push(grid.forward(&vals));
                }
            }
            out
        })
        .collect();
    let freqs: Vec<Vec<i64>> = band
        .iter()
        .map(|&k| grid.frequency(k).iter().map(|v| *v as i64).collect())
        .collect();
    let mut mat = CMat::zeros(rows, rows);
    for (bi, fk) in freqs.iter().enumerate() {
        for (bo, fko) in freqs.iter().enumerate() {
            let diff: Vec<i64> = fko.iter().zip(fk).map(|(a, b)| a - b).collect();
            let idx = freq_index(grid, &diff);
            for r in 0..m {
                for cc in 0..m {
                    mat[(bo * m + r, bi * m + cc)] = cols[bi][r * m + cc][idx] * measure;
                }
            }
        }
    }
    // B = D^{-1/2}(cG − Re M)D^{-1/2}, G = (2π)^n I, D = (2π)^n diag⟨k⟩^{-1}.
    let dinv_sqrt: Vec<f64> = band
        .iter()
        .flat_map(|&k| {
            let w = (japanese(&grid.frequency(k)) / measure).sqrt();
            std::iter::repeat(w).take(m)
        })
        .collect();
    let herm = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let mut b = CMat::zeros(rows, rows);
    for i in 0..rows {
        for j in 0..rows {
            let g = if i == j { c * measure } else { 0.0 };
            b[(i, j)] = (C64::new(g, 0.0) - herm[(i, j)]) * (dinv_sqrt[i] * dinv_sqrt[j]);
        }
    }
    // faer's Hermitian solver is several times faster than nalgebra's at these sizes.
    let fb = faer::Mat::<C64>::from_fn(rows, rows, |i, j| b[(i, j)]);
    let eig = fb
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| HypnetError::NumericalFault(format!("Ritz eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    // Ascending order: the largest eigenvalues sit at the end.
    let c1 = vals[rows - 1].re.max(0.0);
    let mut fields = Vec::new();
    for i in (0..rows).rev().take(cfg.ritz_vectors) {
        let v = vecs.col(i);
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); npts]; m];
        for (bi, &k) in band.iter().enumerate() {
            for r in 0..m {
                coeffs[r][k] = v[bi * m + r] * dinv_sqrt[bi * m + r];
            }
        }
        if let Some(u) = normalise(SpectralField::from_coeffs(grid, coeffs)?) {
            fields.push(u);
        }
    }
    Ok((c1, fields))
}

/// Build every probe family for A, normalised, with Re(Au,u) and ‖u‖²_{-1/2}.
pub fn probe_set(a: &SymbolMatrix, grid: &TorusGrid, c: f64, cfg: &ProbeConfig) -> Result<ProbeSet> {
    probe_set_on(&DenseOperator::new(a, 0.0, grid), a, grid, c, cfg)
}

/// As [`probe_set`], reusing a quantization of `a` built on `grid`.
pub fn probe_set_on(
    op: &DenseOperator,
    a: &SymbolMatrix,
    grid: &TorusGrid,
    c: f64,
    cfg: &ProbeConfig,
) -> Result<ProbeSet> {
    if a.declared_order != 0.0 {
        return Err(HypnetError::arg("A", "Gårding probes need an order-0 symbol"));
    }
    if cfg.trials < 16 {
        return Err(HypnetError::arg("trials", "at least 16 probes required"));
    }
    let m = a.size();
    if op.size() != m || op.grid().dim() != grid.dim() || op.grid().points() != grid.points() {
        return Err(HypnetError::arg("op", "quantization does not match the symbol and grid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fields = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..cfg.trials {
        if let Some(u) = normalise(random_band_limited(grid, m, cfg.band, &mut rng)) {
            fields.push(u);
            kinds.push(ProbeKind::Random);
        }
    }
    for comp in 0..m {
        let u = SpectralField::from_fn(grid, m, |_| {
            (0..m).map(|r| C64::new(if r == comp { 1.0 } else { 0.0 }, 0.0)).collect()
        });
        fields.push(normalise(u).expect("nonzero"));
        kinds.push(ProbeKind::Constant);
    }
    let (x0, xi0, z) = worst_point(a, grid);
    for &w in &cfg.widths {
        if let Some(u) = localized_probe(grid, &x0, &xi0, &z, w) {
            fields.push(u);
            kinds.push(ProbeKind::Localized);
        }
    }
    let (ritz_c1, ritz) = ritz_probes(op, grid, c, cfg)?;
    for u in ritz {
        fields.push(u);
        kinds.push(ProbeKind::Ritz);
    }
    let stats: Vec<Result<(f64, f64)>> = fields
        .par_iter()
        .map(|u| {
            let au = op.apply(u)?;
            let q = au.inner(u)?.re;
            let s = sobolev_norm(-0.5, u).powi(2);
            if !q.is_finite() {
                return Err(HypnetError::NumericalFault("non-finite Gårding form".into()));
            }
            Ok((q, s))
        })
        .collect();
    let mut form = Vec::with_capacity(fields.len());
    let mut neg_half = Vec::with_capacity(fields.len());
    for st in stats {
        let (q, s) = st?;
        form.push(q);
        neg_half.push(s);
    }
    Ok(ProbeSet {
        fields,
        kinds,
        form,
        neg_half,
        ritz_c1,
    })
}

#[derive(Debug, Clone)]
pub struct GardingReport {
    pub c: f64,
    pub c1: f64,
    pub min_margin: f64,
    pub trials: usize,
    pub witness: SpectralField,
    pub witness_kind: ProbeKind,
    pub margins: Vec<f64>,
}

impl GardingReport {
    /// Valid iff min_margin ≥ −1e−9 (probes carry unit energy).
    pub fn is_valid(&self) -> bool {
        self.min_margin >= -1e-9
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "trial,margin")?;
        for (i, v) in self.margins.iter().enumerate() {
            writeln!(w, "{i},{v:e}")?;
        }
        writeln!(w, "# c={:e} c1={:e} min_margin={:e}", self.c, self.c1, self.min_margin)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

fn report_from(ps: &ProbeSet, c: f64, c1: f64) -> GardingReport {
    let margins = ps.margins(c, c1);
    let (min_margin, arg) = ps.min_margin(c, c1);
    GardingReport {
        c,
        c1,
        min_margin,
        trials: margins.len(),
        witness: ps.fields[arg].clone(),
        witness_kind: ps.kinds[arg],
        margins,
    }
}

pub fn garding_probe(a: &SymbolMatrix, grid: &TorusGrid, c: f64, c1: f64, cfg: &ProbeConfig) -> Result<GardingReport> {
    garding_probe_on(&DenseOperator::new(a, 0.0, grid), a, grid, c, c1, cfg)
}

pub fn garding_probe_on(
    op: &DenseOperator,
    a: &SymbolMatrix,
    grid: &TorusGrid,
    c: f64,
    c1: f64,
    cfg: &ProbeConfig,
) -> Result<GardingReport> {
    let ps = probe_set_on(op, a, grid, c, cfg)?;
    Ok(report_from(&ps, c, c1))
}

/// Outcome of the c₁ search.
#[derive(Debug, Clone)]
pub struct C1Search {
    pub c1: f64,
    /// max_i (c − q_i)/s_i over the same probes.
    pub closed_form: f64,
    pub report: GardingReport,
}

/// Doubling from 0 then bisection; the returned c₁ is the upper bracket.
pub fn find_c1(a: &SymbolMatrix, grid: &TorusGrid, c: f64, cfg: &ProbeConfig) -> Result<C1Search> {
    find_c1_on(&DenseOperator::new(a, 0.0, grid), a, grid, c, cfg)
}

pub fn find_c1_on(op: &DenseOperator, a: &SymbolMatrix, grid: &TorusGrid, c: f64, cfg: &ProbeConfig) -> Result<C1Search> {
    let ps = probe_set_on(op, a, grid, c, cfg)?;
    let ok = |c1: f64| ps.min_margin(c, c1).0 >= 0.0;
    let closed_form = ps.closed_form_c1(c);
    if ok(0.0) {
        return Ok(C1Search {
            c1: 0.0,
            closed_form,
            report: report_from(&ps, c, 0.0),
        });
    }
    let mut lo = 0.0;
    let mut hi = 2f64.powi(-20);
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > cfg.cap {
            let (mm, arg) = ps.min_margin(c, cfg.cap);
            return Err(HypnetError::Positivity {
                witness: format!("probe #{arg} ({:?})", ps.kinds[arg]),
                min_eig: mm,
                bound: 0.0,
            });
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(C1Search {
        c1: hi,
        closed_form,
        report: report_from(&ps, c, hi),
    })
}

/// Classify the c₁ net of one report per ε.
pub fn scale_classify_constants(reports: &[GardingReport], grid: &EpsilonGrid) -> Result<AsymptoticClass> {
    if reports.len() != grid.len() {
        return Err(HypnetError::arg("reports", "need one report per epsilon"));
    }
    let s = NetSample::new(grid.clone(), reports.iter().map(|r| r.c1).collect())?;
    classify_net(&s, 4)
}

/// Window samples and amplitude p_F(ξ, x', ξ') on a 1D grid.
#[derive(Debug, Clone)]
pub struct FriedrichsAmplitude {
    grid: TorusGrid,
    /// q normalisation: q(s) = kappa · bump(s).
    pub kappa: f64,
    /// Window sample spacing for the discrete ∫q² = 1.
    pub dsigma: f64,
    pub q_samples: Vec<f64>,
    /// ζ quadrature spacing.
    pub dzeta: f64,
    zetas: Vec<f64>,
    /// Re-sampled p(x', ζ) for all nodes and quadrature points.
    p_table: Vec<f64>,
    /// F(ξ_k, ζ_l), row k.
    f_table: Vec<f64>,
    matrix: OnceLock<CMat>,
}

const Q_SAMPLES: usize = 129;

impl FriedrichsAmplitude {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn q(&self, s: f64) -> f64 {
        self.kappa * profile(s.abs(), 0)
    }

    /// F(ξ,ζ) = q((ζ−ξ)⟨ξ⟩^{-1/2})⟨ξ⟩^{-1/4}.
    pub fn window(&self, xi: f64, zeta: f64) -> f64 {
        let jx = japanese(&[xi]);
        self.q((zeta - xi) / jx.sqrt()) * jx.powf(-0.25)
    }

    /// p_F(ξ_k, x_j, ξ_{k'}).
    pub fn amplitude(&self, k: usize, j: usize, kp: usize) -> f64 {
        let nz = self.zetas.len();
        let fk = &self.f_table[k * nz..(k + 1) * nz];
        let fkp = &self.f_table[kp * nz..(kp + 1) * nz];
        let pj = &self.p_table[j * nz..(j + 1) * nz];
        let mut s = 0.0;
        for l in 0..nz {
            if fk[l] != 0.0 && fkp[l] != 0.0 {
                s += fk[l] * pj[l] * fkp[l];
            }
        }
        s * self.dzeta
    }

    /// M(ξ,ξ') = (Δx/2π) Σ_{x'} e^{−ix'(ξ−ξ')} p_F(ξ,x',ξ').
    pub fn matrix(&self) -> CMat {
        self.matrix_ref().clone()
    }

    /// Built once, on first use.
    pub fn matrix_ref(&self) -> &CMat {
        self.matrix.get_or_init(|| self.build_matrix())
    }

    fn build_matrix(&self) -> CMat {
        let g = &self.grid;
        let n = g.len();
        let h = g.spacing();
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|kp| {
                (0..n)
                    .map(|k| {
                        if g.has_nyquist(k) || g.has_nyquist(kp) {
                            return C64::new(0.0, 0.0);
                        }
                        let d = g.frequency(k)[0] - g.frequency(kp)[0];
                        let mut s = C64::new(0.0, 0.0);
                        for j in 0..n {
                            let x = g.point(j)[0];
                            s += C64::new(0.0, -x * d).exp() * self.amplitude(k, j, kp);
                        }
                        s * (h / std::f64::consts::TAU)
                    })
                    .collect()
            })
            .collect();
        CMat::from_fn(n, n, |r, c| cols[c][r])
    }

    /// Diagonal-extracted symbol σ_F(x, ξ) = Σ_ζ F(ξ,ζ)² p(x,ζ) Δζ.
    pub fn effective_symbol(&self, p: &SymbolMatrix) -> SymbolMatrix {
        let fa = self.clone();
        let p = p.clone();
        SymbolMatrix::new(1, p.declared_order, p.time_independent, move |t, x, xi| {
            let jx = japanese(xi);
            let half = jx.sqrt();
            let lo = ((xi[0] - half) / fa.dzeta).floor() as i64;
            let hi = ((xi[0] + half) / fa.dzeta).ceil() as i64;
            let mut s = 0.0;
            for l in lo..=hi {
                let z = l as f64 * fa.dzeta;
                let f = fa.window(xi[0], z);
                if f != 0.0 {
                    s += f * f * p.evaluate(t, x, &[z])[(0, 0)].re;
                }
            }
            CMat::from_element(1, 1, C64::new(s * fa.dzeta, 0.0))
        })
        .with_label("sigma_F")
    }
}

pub fn friedrichs_part_1d(p: &SymbolMatrix, grid: &TorusGrid) -> Result<FriedrichsAmplitude> {
    friedrichs_part_with(p, grid, 1.0 / 16.0)
}

pub fn friedrichs_part_with(p: &SymbolMatrix, grid: &TorusGrid, dzeta: f64) -> Result<FriedrichsAmplitude> {
    if grid.dim() != 1 {
        return Err(HypnetError::arg("grid", "Friedrichs part is 1D only"));
    }
    if p.size() != 1 {
        return Err(HypnetError::arg("p", "scalar symbol required"));
    }
    // Narrowest window is 2⟨ξ⟩^{1/2} ≥ 2.
    if 2.0 / dzeta < 4.0 {
        return Err(HypnetError::Resolution {
            spacing: dzeta,
            max_spacing: 0.5,
            required_points: 4,
        });
    }
    let dsigma = 2.0 / (Q_SAMPLES - 1) as f64;
    let q_raw: Vec<f64> = (0..Q_SAMPLES)
        .map(|i| profile((-1.0 + dsigma * i as f64).abs(), 0))
        .collect();
    let mass: f64 = q_raw.iter().map(|v| v * v).sum::<f64>() * dsigma;
    let kappa = 1.0 / mass.sqrt();
    let q_samples: Vec<f64> = q_raw.iter().map(|v| v * kappa).collect();

    let n = grid.len();
    let freqs: Vec<f64> = (0..n).map(|k| grid.frequency(k)[0]).collect();
    let fmax = freqs.iter().cloned().fold(0.0, f64::max) + japanese(&[grid.points() as f64]).sqrt() + 1.0;
    let lmax = (fmax / dzeta).ceil() as i64;
    let zetas: Vec<f64> = (-lmax..=lmax).map(|l| l as f64 * dzeta).collect();
    let nz = zetas.len();
    let mut fa = FriedrichsAmplitude {
        grid: grid.clone(),
        kappa,
        dsigma,
        q_samples,
        dzeta,
        zetas: zetas.clone(),
        p_table: Vec::new(),
        f_table: Vec::new(),
        matrix: OnceLock::new(),
    };
    let f_table: Vec<f64> = (0..n)
        .flat_map(|k| {
            let xi = freqs[k];
            let fa = &fa;
            zetas.iter().map(move |&z| fa.window(xi, z)).collect::<Vec<_>>()
        })
        .collect();
    let p_table: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let x = grid.point(j);
            let p = p.clone();
            let zetas = zetas.clone();
            zetas.into_iter().map(move |z| p.evaluate(0.0, &x, &[z])[(0, 0)].re)
        })
        .collect();
    debug_assert_eq!(p_table.len(), n * nz);
    fa.f_table = f_table;
    fa.p_table = p_table;
    Ok(fa)
}

/// v̂ = M û.
pub fn friedrichs_apply(fa: &FriedrichsAmplitude, u: &SpectralField) -> Result<SpectralField> {
    friedrichs_apply_with(fa.matrix_ref(), fa.grid(), u)
}

/// Apply a precomputed amplitude matrix (see [`FriedrichsAmplitude::matrix`]).
pub fn friedrichs_apply_with(mat: &CMat, grid: &TorusGrid, u: &SpectralField) -> Result<SpectralField> {
    if u.components() != 1 || u.grid() != grid {
        return Err(HypnetError::arg("u", "1D scalar field on the amplitude grid required"));
    }
    let uh = nalgebra::DVector::from_column_slice(&u.coeffs()[0]);
    let vh = mat * uh;
    SpectralField::from_coeffs(grid, vec![vh.iter().cloned().collect()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ProbeConfig {
        ProbeConfig {
            trials: 16,
            ..ProbeConfig::default()
        }
    }

    #[test]
    fn identity_margin_is_zero() {
        let g = TorusGrid::new(1, 32).unwrap();
        let r = garding_probe(&SymbolMatrix::identity(2), &g, 1.0, 0.0, &small_cfg()).unwrap();
        assert!(r.min_margin.abs() < 1e-12, "{}", r.min_margin);
    }

    #[test]
    fn multiplication_symbol_bound() {
        let g = TorusGrid::new(1, 32).unwrap();
        let a = SymbolMatrix::new(2, 0.0, true, |_, x, _| CMat::identity(2, 2) * C64::new(2.0 + x[0].sin(), 0.0));
        let r = garding_probe(&a, &g, 1.0, 0.0, &small_cfg()).unwrap();
        assert!(r.min_margin >= -1e-10, "{}", r.min_margin);
    }

    #[test]
    fn identity_needs_no_correction() {
        let g = TorusGrid::new(1, 32).unwrap();
        let s = find_c1(&SymbolMatrix::identity(2), &g, 0.125, &small_cfg()).unwrap();
        assert_eq!(s.c1, 0.0);
    }

    #[test]
    fn zero_mode_deficiency_forces_c1() {
        // Symbol vanishing at ξ = 0: constant probes need c₁ ≥ c.
        let g = TorusGrid::new(1, 32).unwrap();
        let a = SymbolMatrix::new(1, 0.0, true, |_, _, xi| {
            CMat::from_element(1, 1, C64::new(if xi[0] == 0.0 { 0.0 } else { 1.0 }, 0.0))
        });
        let s = find_c1(&a, &g, 0.125, &small_cfg()).unwrap();
        assert!((s.c1 - 0.125).abs() < 1e-9, "{}", s.c1);
        assert!((s.closed_form - 0.125).abs() < 1e-12);
    }

    #[test]
    fn friedrichs_constant_symbol_single_mode() {
        let g = TorusGrid::new(1, 32).unwrap();
        let p = SymbolMatrix::identity(1);
        let fa = friedrichs_part_1d(&p, &g).unwrap();
        let u = SpectralField::from_fn(&g, 1, |x| vec![C64::new(0.0, 3.0 * x[0]).exp()]);
        let v = friedrichs_apply(&fa, &u).unwrap();
        let k = (0..g.len()).find(|&k| g.frequency(k)[0] == 3.0).unwrap();
        let direct: f64 = (-2000..=2000)
            .map(|l| {
                let z = l as f64 / 16.0;
                fa.window(3.0, z).powi(2)
            })
            .sum::<f64>()
            / 16.0;
        assert!((v.coeffs()[0][k] - C64::new(direct, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn q_is_even_and_normalised() {
        let g = TorusGrid::new(1, 16).unwrap();
        let fa = friedrichs_part_1d(&SymbolMatrix::identity(1), &g).unwrap();
        let n = fa.q_samples.len();
        for i in 0..n {
            assert_eq!(fa.q_samples[i], fa.q_samples[n - 1 - i]);
        }
        let s: f64 = fa.q_samples.iter().map(|v| v * v).sum::<f64>() * fa.dsigma;
        assert!((s - 1.0).abs() < 1e-14);
    }
}
