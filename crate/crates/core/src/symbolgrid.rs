//! Discrete symbol calculus on the periodic torus.
//!
//! Grid nodes sit at x_j = -π + 2πj/N on every axis, so interfaces at x = 0
//! stay away from the period seam. Coefficients are normalized so that
//! u(x) = Σ_ξ û(ξ) e^{ix·ξ} and ‖u‖₀² = (2π)^n Σ |û(ξ)|².

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::epsnets::least_squares;
use crate::error::{HypnetError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const ORIGIN: f64 = -std::f64::consts::PI;

#[inline]
pub fn japanese(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[inline]
pub fn norm_xi(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Periodic grid with N points per axis in dimension 1 or 2.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    roots: Arc<Vec<C64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusGrid(dim={}, N={})", self.dim, self.n)
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(HypnetError::arg("dimension", "must be 1 or 2"));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(HypnetError::arg("points", "must be a power of two >= 4"));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let roots = (0..n)
            .map(|k| C64::from_polar(1.0, TWO_PI * k as f64 / n as f64))
            .collect();
        Ok(TorusGrid {
            dim,
            n,
            fft,
            ifft,
            roots: Arc::new(roots),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.n
    }

    /// Total number of nodes, N^n.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Quadrature weight of a node, h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn measure(&self) -> f64 {
        TWO_PI.powi(self.dim as i32)
    }

    pub fn axis_coord(&self, i: usize) -> f64 {
        ORIGIN + self.spacing() * i as f64
    }

    /// Signed frequency of FFT index k on one axis.
    pub fn axis_freq(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    pub fn is_nyquist_index(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// Split a flat index into per-axis indices (axis 0 slowest).
    pub fn split(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let s = self.split(idx);
        (0..self.dim).map(|a| self.axis_coord(s[a])).collect()
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let s = self.split(idx);
        (0..self.dim).map(|a| self.axis_freq(s[a])).collect()
    }

    pub fn points_list(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn frequencies_list(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    pub fn has_nyquist(&self, idx: usize) -> bool {
        let s = self.split(idx);
        (0..self.dim).any(|a| self.is_nyquist_index(s[a]))
    }

    /// Flat index of the node nearest to x, and whether x sits on it.
    pub fn locate(&self, x: &[f64]) -> (usize, bool) {
        let h = self.spacing();
        let mut idx = 0usize;
        let mut exact = true;
        for a in 0..self.dim {
            let s = (x[a] - ORIGIN) / h;
            let r = s.round();
            if (s - r).abs() > 1e-9 {
                exact = false;
            }
            let i = (r as i64).rem_euclid(self.n as i64) as usize;
            idx = idx * self.n + i;
        }
        (idx, exact)
    }

    /// e^{i x_j ξ_k} for flat node j and flat frequency k.
    #[inline]
    pub fn phase(&self, j: usize, k: usize) -> C64 {
        let sj = self.split(j);
        let sk = self.split(k);
        let mut z = C64::new(1.0, 0.0);
        for a in 0..self.dim {
            // x_j ξ_k = -π ξ_k + 2π j k / N; e^{-iπξ} = (-1)^k.
            let r = self.roots[(sj[a] * sk[a]) % self.n];
            z *= if sk[a] % 2 == 1 { -r } else { r };
        }
        z
    }

    fn fft_axes(&self, data: &mut [C64], inverse: bool) {
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.n;
        if self.dim == 1 {
            plan.process(data);
            return;
        }
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            plan.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }

    #[inline]
    fn origin_sign(&self, idx: usize) -> f64 {
        let s = self.split(idx);
        let odd = (0..self.dim).filter(|&a| s[a] % 2 == 1).count();
        if odd % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Physical values to normalized coefficients.
    pub fn forward(&self, values: &[C64]) -> Vec<C64> {
        let mut d = values.to_vec();
        self.fft_axes(&mut d, false);
        let scale = 1.0 / self.len() as f64;
        for (k, z) in d.iter_mut().enumerate() {
            *z *= scale * self.origin_sign(k);
        }
        d
    }

    /// Normalized coefficients to physical values.
    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut d: Vec<C64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, z)| z * self.origin_sign(k))
            .collect();
        self.fft_axes(&mut d, true);
        d
    }
}

/// Vector-valued function on the torus grid.
#[derive(Clone)]
pub struct SpectralField {
    grid: TorusGrid,
    values: Vec<Vec<C64>>,
    coeffs: OnceLock<Vec<Vec<C64>>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpectralField({:?}, m={})", self.grid, self.values.len())
    }
}

impl SpectralField {
    pub fn from_values(grid: &TorusGrid, values: Vec<Vec<C64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(HypnetError::arg("components", "need at least one"));
        }
        if values.iter().any(|v| v.len() != grid.len()) {
            return Err(HypnetError::arg("values", "length differs from grid size"));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            values,
            coeffs: OnceLock::new(),
        })
    }

    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|v| v.len() != grid.len()) {
            return Err(HypnetError::arg("coefficients", "shape differs from grid"));
        }
        let values = coeffs.iter().map(|c| grid.inverse(c)).collect();
        let cell = OnceLock::new();
        let _ = cell.set(coeffs);
        Ok(SpectralField {
            grid: grid.clone(),
            values,
            coeffs: cell,
        })
    }

    pub fn zeros(grid: &TorusGrid, m: usize) -> Self {
        SpectralField::from_values(grid, vec![vec![C64::new(0.0, 0.0); grid.len()]; m.max(1)])
            .expect("shape")
    }

    /// Sample a vector-valued function at the nodes.
    pub fn from_fn(grid: &TorusGrid, m: usize, f: impl Fn(&[f64]) -> Vec<C64>) -> Self {
        let mut values = vec![vec![C64::new(0.0, 0.0); grid.len()]; m];
        for j in 0..grid.len() {
            let v = f(&grid.point(j));
            for (c, comp) in values.iter_mut().enumerate() {
                comp[j] = v[c];
            }
        }
        SpectralField::from_values(grid, values).expect("shape")
    }

    /// Single real component.
    pub fn from_real_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        SpectralField::from_fn(grid, 1, |x| vec![C64::new(f(x), 0.0)])
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.values[c]
    }

    pub fn coeffs(&self) -> &[Vec<C64>] {
        self.coeffs
            .get_or_init(|| self.values.iter().map(|v| self.grid.forward(v)).collect())
    }

    pub fn into_values(self) -> Vec<Vec<C64>> {
        self.values
    }

    /// Keep only the listed components.
    pub fn select(&self, comps: &[usize]) -> Self {
        SpectralField::from_values(
            &self.grid,
            comps.iter().map(|&c| self.values[c].clone()).collect(),
        )
        .expect("shape")
    }

    pub fn stack(parts: &[&SpectralField]) -> Result<Self> {
        let grid = parts
            .first()
            .ok_or_else(|| HypnetError::arg("parts", "empty"))?
            .grid
            .clone();
        let mut values = Vec::new();
        for p in parts {
            if p.grid != grid {
                return Err(HypnetError::arg("parts", "grids differ"));
            }
            values.extend(p.values.iter().cloned());
        }
        SpectralField::from_values(&grid, values)
    }

    pub fn map_values(&self, f: impl Fn(usize, usize, C64) -> C64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(c, v)| v.iter().enumerate().map(|(j, z)| f(c, j, *z)).collect())
            .collect();
        SpectralField::from_values(&self.grid, values).expect("shape")
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, usize, C64) -> C64) -> Self {
        let coeffs = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(c, v)| v.iter().enumerate().map(|(k, z)| f(c, k, *z)).collect())
            .collect();
        SpectralField::from_coeffs(&self.grid, coeffs).expect("shape")
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_values(|_, _, z| z * s)
    }

    /// self + s·other
    pub fn axpy(&self, s: C64, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map_values(|c, j, z| z + s * other.values[c][j]))
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid || self.components() != other.components() {
            return Err(HypnetError::arg("field", "grid or component count differs"));
        }
        Ok(())
    }

    /// Discrete L² inner product (u, v) = ∫ u·v̄.
    pub fn inner(&self, other: &SpectralField) -> Result<C64> {
        self.check_compatible(other)?;
        let mut s = C64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            for (x, y) in a.iter().zip(b) {
                s += x * y.conj();
            }
        }
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm0(&self) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .flat_map(|v| v.iter())
            .map(|z| z.norm_sqr())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Spectral derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let g = self.grid.clone();
        self.map_coeffs(|_, k, z| {
            if g.has_nyquist(k) {
                C64::new(0.0, 0.0)
            } else {
                z * C64::new(0.0, g.frequency(k)[axis])
            }
        })
    }

    /// Zero every coefficient on a Nyquist index.
    pub fn without_nyquist(&self) -> Self {
        let g = self.grid.clone();
        self.map_coeffs(|_, k, z| if g.has_nyquist(k) { C64::new(0.0, 0.0) } else { z })
    }

    /// CSV with columns x.., Re_i, Im_i.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let axes = ["x1", "x2"];
        let mut header: Vec<String> = axes[..self.grid.dim].iter().map(|s| s.to_string()).collect();
        for c in 0..self.components() {
            header.push(format!("re_{c}"));
            header.push(format!("im_{c}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for j in 0..self.grid.len() {
            let mut row: Vec<String> = self.grid.point(j).iter().map(|v| format!("{v:e}")).collect();
            for c in 0..self.components() {
                let z = self.values[c][j];
                row.push(format!("{:e}", z.re));
                row.push(format!("{:e}", z.im));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

/// Real values on the nodes of a torus grid, evaluable at arbitrary points.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Arc<Vec<f64>>,
}

impl GridFunction {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HypnetError::arg("values", "length differs from grid size"));
        }
        Ok(GridFunction {
            grid: grid.clone(),
            values: Arc::new(values),
        })
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let v = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        GridFunction::new(grid, v).expect("shape")
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node value when x is a node, periodic (bi)linear interpolation otherwise.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let (idx, exact) = self.grid.locate(x);
        if exact {
            return self.values[idx];
        }
        let g = &self.grid;
        let n = g.points() as i64;
        let h = g.spacing();
        let mut base = [0i64; 2];
        let mut frac = [0.0; 2];
        for a in 0..g.dim() {
            let s = (x[a] - ORIGIN) / h;
            let f = s.floor();
            base[a] = f as i64;
            frac[a] = s - f;
        }
        let at = |i0: i64, i1: i64| -> f64 {
            let a = i0.rem_euclid(n) as usize;
            if g.dim() == 1 {
                self.values[a]
            } else {
                self.values[a * g.points() + i1.rem_euclid(n) as usize]
            }
        };
        if g.dim() == 1 {
            (1.0 - frac[0]) * at(base[0], 0) + frac[0] * at(base[0] + 1, 0)
        } else {
            let (f0, f1) = (frac[0], frac[1]);
            (1.0 - f0) * (1.0 - f1) * at(base[0], base[1])
                + f0 * (1.0 - f1) * at(base[0] + 1, base[1])
                + (1.0 - f0) * f1 * at(base[0], base[1] + 1)
                + f0 * f1 * at(base[0] + 1, base[1] + 1)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction::new(&self.grid, self.values.iter().map(|v| f(*v)).collect()).expect("shape")
    }

    pub fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(HypnetError::arg("grid", "grid functions live on different grids"));
        }
        GridFunction::new(
            &self.grid,
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    pub fn to_field(&self) -> SpectralField {
        SpectralField::from_values(
            &self.grid,
            vec![self.values.iter().map(|v| C64::new(*v, 0.0)).collect()],
        )
        .expect("shape")
    }

    /// CSV with columns x.., value.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let header = if self.grid.dim() == 1 { "x1,value" } else { "x1,x2,value" };
        writeln!(w, "{header}")?;
        for j in 0..self.grid.len() {
            let p = self.grid.point(j);
            let coords: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{:e}", coords.join(","), self.values[j])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| HypnetError::io(path, e))?;
        self.write_csv(&mut f).map_err(|e| HypnetError::io(path, e))
    }
}

pub type MatrixFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> CMat + Send + Sync>;
pub type CoefFn = Arc<dyn Fn(f64, &[f64]) -> C64 + Send + Sync>;
pub type MultFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// One product term coef(t,x)·mult(ξ) placed at entry (row, col).
#[derive(Clone)]
pub struct SeparableTerm {
    pub row: usize,
    pub col: usize,
    pub coef: CoefFn,
    pub mult: MultFn,
    pub coef_time_independent: bool,
}

impl SeparableTerm {
    pub fn new(
        row: usize,
        col: usize,
        coef: impl Fn(f64, &[f64]) -> C64 + Send + Sync + 'static,
        mult: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SeparableTerm {
            row,
            col,
            coef: Arc::new(coef),
            mult: Arc::new(mult),
            coef_time_independent: false,
        }
    }

    /// Coefficient depends on x only.
    pub fn static_coef(
        row: usize,
        col: usize,
        coef: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
        mult: impl Fn(&[f64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        SeparableTerm {
            row,
            col,
            coef: Arc::new(move |_, x| coef(x)),
            mult: Arc::new(mult),
            coef_time_independent: true,
        }
    }
}

/// m×m matrix symbol p(t,x,ξ).
#[derive(Clone)]
pub struct SymbolMatrix {
    size: usize,
    pub declared_order: f64,
    eval: MatrixFn,
    pub time_independent: bool,
    terms: Option<Arc<Vec<SeparableTerm>>>,
    pub label: String,
}

impl fmt::Debug for SymbolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SymbolMatrix({}, m={}, order={}, separable={})",
            self.label,
            self.size,
            self.declared_order,
            self.terms.is_some()
        )
    }
}

impl SymbolMatrix {
    pub fn new(
        size: usize,
        declared_order: f64,
        time_independent: bool,
        f: impl Fn(f64, &[f64], &[f64]) -> CMat + Send + Sync + 'static,
    ) -> Self {
        SymbolMatrix {
            size,
            declared_order,
            eval: Arc::new(f),
            time_independent,
            terms: None,
            label: "symbol".into(),
        }
    }

    /// Sum of product terms; keeps the term list for fast application.
    pub fn separable(size: usize, declared_order: f64, terms: Vec<SeparableTerm>) -> Self {
        let time_independent = terms.iter().all(|t| t.coef_time_independent);
        let terms = Arc::new(terms);
        let tt = terms.clone();
        let eval = move |t: f64, x: &[f64], xi: &[f64]| {
            let mut m = CMat::zeros(size, size);
            for term in tt.iter() {
                m[(term.row, term.col)] += (term.coef)(t, x) * (term.mult)(xi);
            }
            m
        };
        SymbolMatrix {
            size,
            declared_order,
            eval: Arc::new(eval),
            time_independent,
            terms: Some(terms),
            label: "separable".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn identity(m: usize) -> Self {
        let terms = (0..m)
            .map(|i| SeparableTerm::static_coef(i, i, |_| C64::new(1.0, 0.0), |_| C64::new(1.0, 0.0)))
            .collect();
        SymbolMatrix::separable(m, 0.0, terms).with_label("identity")
    }

    /// Scalar multiplier s(ξ) on every diagonal entry.
    pub fn multiplier(
        m: usize,
        order: f64,
        f: impl Fn(&[f64]) -> C64 + Send + Sync + Clone + 'static,
    ) -> Self {
        let terms = (0..m)
            .map(|i| SeparableTerm::static_coef(i, i, |_| C64::new(1.0, 0.0), f.clone()))
            .collect();
        SymbolMatrix::separable(m, order, terms).with_label("multiplier")
    }

    /// Constant matrix symbol.
    pub fn constant(a: CMat) -> Self {
        let m = a.nrows();
        SymbolMatrix::new(m, 0.0, true, move |_, _, _| a.clone()).with_label("constant")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn terms(&self) -> Option<&[SeparableTerm]> {
        self.terms.as_deref().map(|v| v.as_slice())
    }

    #[inline]
    pub fn evaluate(&self, t: f64, x: &[f64], xi: &[f64]) -> CMat {
        (self.eval)(t, x, xi)
    }

    /// Pointwise matrix product p·q; order adds.
    pub fn compose_pointwise(&self, other: &SymbolMatrix) -> Result<SymbolMatrix> {
        if self.size != other.size {
            return Err(HypnetError::arg("symbol", "sizes differ"));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(SymbolMatrix::new(
            self.size,
            self.declared_order + other.declared_order,
            self.time_independent && other.time_independent,
            move |t, x, xi| a.evaluate(t, x, xi) * b.evaluate(t, x, xi),
        )
        .with_label(format!("({})*({})", self.label, other.label)))
    }

    pub fn add(&self, other: &SymbolMatrix) -> Result<SymbolMatrix> {
        if self.size != other.size {
            return Err(HypnetError::arg("symbol", "sizes differ"));
        }
        let (a, b) = (self.clone(), other.clone());
        let mut out = SymbolMatrix::new(
            self.size,
            self.declared_order.max(other.declared_order),
            self.time_independent && other.time_independent,
            move |t, x, xi| a.evaluate(t, x, xi) + b.evaluate(t, x, xi),
        )
        .with_label(format!("({})+({})", self.label, other.label));
        if let (Some(ta), Some(tb)) = (self.terms(), other.terms()) {
            let mut all = ta.to_vec();
            all.extend_from_slice(tb);
            out = SymbolMatrix::separable(self.size, out.declared_order, all).with_label(out.label);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: C64) -> SymbolMatrix {
        let a = self.clone();
        let mut out = SymbolMatrix::new(self.size, self.declared_order, self.time_independent, move |t, x, xi| {
            a.evaluate(t, x, xi) * s
        })
        .with_label(format!("{s}*({})", self.label));
        if let Some(ts) = self.terms() {
            let terms = ts
                .iter()
                .map(|term| {
                    let c = term.coef.clone();
                    SeparableTerm {
                        row: term.row,
                        col: term.col,
                        coef: Arc::new(move |t, x| c(t, x) * s),
                        mult: term.mult.clone(),
                        coef_time_independent: term.coef_time_independent,
                    }
                })
                .collect();
            out = SymbolMatrix::separable(self.size, self.declared_order, terms).with_label(out.label);
        }
        out
    }
}

/// Pointwise conjugate transpose.
pub fn adjoint_symbol(p: &SymbolMatrix) -> SymbolMatrix {
    if let Some(ts) = p.terms() {
        let terms = ts
            .iter()
            .map(|term| {
                let c = term.coef.clone();
                let m = term.mult.clone();
                SeparableTerm {
                    row: term.col,
                    col: term.row,
                    coef: Arc::new(move |t, x| c(t, x).conj()),
                    mult: Arc::new(move |xi| m(xi).conj()),
                    coef_time_independent: term.coef_time_independent,
                }
            })
            .collect();
        return SymbolMatrix::separable(p.size, p.declared_order, terms)
            .with_label(format!("adj({})", p.label));
    }
    let a = p.clone();
    SymbolMatrix::new(p.size, p.declared_order, p.time_independent, move |t, x, xi| {
        a.evaluate(t, x, xi).adjoint()
    })
    .with_label(format!("adj({})", p.label))
}

pub fn multiplier_apply(s: f64, u: &SpectralField) -> SpectralField {
    if s == 0.0 {
        return u.clone();
    }
    let g = u.grid().clone();
    u.map_coeffs(|_, k, z| z * japanese(&g.frequency(k)).powf(s))
}

pub fn sobolev_norm(l: f64, u: &SpectralField) -> f64 {
    let g = u.grid();
    let mut s = 0.0;
    for comp in u.coeffs() {
        for (k, z) in comp.iter().enumerate() {
            let w = if l == 0.0 { 1.0 } else { japanese(&g.frequency(k)).powf(2.0 * l) };
            s += z.norm_sqr() * w;
        }
    }
    (s * g.measure()).sqrt()
}

/// Dense Kohn–Nirenberg operator with its symbol tabulated at one time.
pub struct DenseOperator {
    grid: TorusGrid,
    m: usize,
    table: Vec<C64>,
    zero_nyquist: bool,
}

impl DenseOperator {
    pub fn new(p: &SymbolMatrix, t: f64, grid: &TorusGrid) -> Self {
        let m = p.size();
        let npts = grid.len();
        let xs = grid.points_list();
        let xis = grid.frequencies_list();
        let mut table = vec![C64::new(0.0, 0.0); npts * npts * m * m];
        let block = npts * m * m;
        use rayon::prelude::*;
        table.par_chunks_mut(block).enumerate().for_each(|(j, chunk)| {
            for (k, xi) in xis.iter().enumerate() {
                let mat = p.evaluate(t, &xs[j], xi);
                let off = k * m * m;
                for r in 0..m {
                    for c in 0..m {
                        chunk[off + r * m + c] = mat[(r, c)];
                    }
                }
            }
        });
        DenseOperator {
            grid: grid.clone(),
            m,
            table,
            zero_nyquist: p.declared_order > 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize, r: usize, c: usize) -> C64 {
        let npts = self.grid.len();
        self.table[(j * npts + k) * self.m * self.m + r * self.m + c]
    }

    fn prepared_coeffs(&self, u: &SpectralField) -> Vec<Vec<C64>> {
        let mut co = u.coeffs().to_vec();
        if self.zero_nyquist {
            for comp in co.iter_mut() {
                for (k, z) in comp.iter_mut().enumerate() {
                    if self.grid.has_nyquist(k) {
                        *z = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        co
    }

    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.components() != self.m || *u.grid() != self.grid {
            return Err(HypnetError::arg("field", "size mismatch with symbol"));
        }
        let co = self.prepared_coeffs(u);
        let npts = self.grid.len();
        let m = self.m;
        let mm = m * m;
        use rayon::prelude::*;
        let rows: Vec<Vec<C64>> = (0..npts)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![C64::new(0.0, 0.0); m];
                let base = j * npts * mm;
                for k in 0..npts {
                    let e = self.grid.phase(j, k);
                    let blk = &self.table[base + k * mm..base + (k + 1) * mm];
                    for r in 0..m {
                        let mut s = C64::new(0.0, 0.0);
                        for c in 0..m {
                            s += blk[r * m + c] * co[c][k];
                        }
                        acc[r] += s * e;
                    }
                }
                acc
            })
            .collect();
        let mut values = vec![vec![C64::new(0.0, 0.0); npts]; m];
        for (j, acc) in rows.into_iter().enumerate() {
            for r in 0..m {
                values[r][j] = acc[r];
            }
        }
        SpectralField::from_values(&self.grid, values)
    }

    /// Exact adjoint of the discrete operator in the grid inner product.
    pub fn apply_adjoint(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.components() != self.m || *v.grid() != self.grid {
            return Err(HypnetError::arg("field", "size mismatch with symbol"));
        }
        let npts = self.grid.len();
        let m = self.m;
        let mm = m * m;
        let scale = 1.0 / npts as f64;
        use rayon::prelude::*;
        let w: Vec<Vec<C64>> = (0..npts)
            .into_par_iter()
            .map(|k| {
                let mut acc = vec![C64::new(0.0, 0.0); m];
                for j in 0..npts {
                    let e = self.grid.phase(j, k).conj();
                    let blk = &self.table[(j * npts + k) * mm..(j * npts + k + 1) * mm];
                    for c in 0..m {
                        let mut s = C64::new(0.0, 0.0);
                        for r in 0..m {
                            s += blk[r * m + c].conj() * v.values()[r][j];
                        }
                        acc[c] += s * e;
                    }
                }
                acc.iter_mut().for_each(|z| *z *= scale);
                acc
            })
            .collect();
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); npts]; m];
        for (k, acc) in w.into_iter().enumerate() {
            for c in 0..m {
                coeffs[c][k] = if self.zero_nyquist && self.grid.has_nyquist(k) {
                    C64::new(0.0, 0.0)
                } else {
                    acc[c]
                };
            }
        }
        SpectralField::from_coeffs(&self.grid, coeffs)
    }
}

/// FFT-based application of a separable symbol.
pub struct FastOperator {
    grid: TorusGrid,
    m: usize,
    terms: Vec<PreparedTerm>,
    zero_nyquist: bool,
}

struct PreparedTerm {
    row: usize,
    col: usize,
    mult: Vec<C64>,
    coef_fn: CoefFn,
    coef: Option<Vec<C64>>,
    x_free: bool,
}

impl FastOperator {
    pub fn new(p: &SymbolMatrix, grid: &TorusGrid) -> Result<Self> {
        let terms = p
            .terms()
            .ok_or_else(|| HypnetError::arg("symbol", "fast path needs a separable symbol"))?;
        let xis = grid.frequencies_list();
        let xs = grid.points_list();
        let prepared = terms
            .iter()
            .map(|term| {
                let mult = xis.iter().map(|xi| (term.mult)(xi)).collect();
                let coef = if term.coef_time_independent {
                    Some(xs.iter().map(|x| (term.coef)(0.0, x)).collect())
                } else {
                    None
                };
                PreparedTerm {
                    row: term.row,
                    col: term.col,
                    mult,
                    coef_fn: term.coef.clone(),
                    coef,
                    x_free: false,
                }
            })
            .collect();
        Ok(FastOperator {
            grid: grid.clone(),
            m: p.size(),
            terms: prepared,
            zero_nyquist: p.declared_order > 0.0,
        })
    }

    /// Declare that the time-dependent coefficients do not depend on x.
    pub fn with_x_free_time_coefficients(mut self) -> Self {
        for t in self.terms.iter_mut() {
            if t.coef.is_none() {
                t.x_free = true;
            }
        }
        self
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn apply(&self, t: f64, u: &SpectralField) -> Result<SpectralField> {
        if u.components() != self.m || *u.grid() != self.grid {
            return Err(HypnetError::arg("field", "size mismatch with symbol"));
        }
        let npts = self.grid.len();
        let co = u.coeffs();
        let mut out = vec![vec![C64::new(0.0, 0.0); npts]; self.m];
        let mut buf = vec![C64::new(0.0, 0.0); npts];
        let xs = if self.terms.iter().any(|t| t.coef.is_none() && !t.x_free) {
            Some(self.grid.points_list())
        } else {
            None
        };
        for term in &self.terms {
            for k in 0..npts {
                buf[k] = if self.zero_nyquist && self.grid.has_nyquist(k) {
                    C64::new(0.0, 0.0)
                } else {
                    co[term.col][k] * term.mult[k]
                };
            }
            let g = self.grid.inverse(&buf);
            let dst = &mut out[term.row];
            match &term.coef {
                Some(c) => {
                    for j in 0..npts {
                        dst[j] += c[j] * g[j];
                    }
                }
                None if term.x_free => {
                    let c = (term.coef_fn)(t, &[0.0, 0.0][..self.grid.dim()]);
                    for j in 0..npts {
                        dst[j] += c * g[j];
                    }
                }
                None => {
                    let xs = xs.as_ref().expect("points");
                    for j in 0..npts {
                        dst[j] += (term.coef_fn)(t, &xs[j]) * g[j];
                    }
                }
            }
        }
        SpectralField::from_values(&self.grid, out)
    }
}

/// One-shot dense Kohn–Nirenberg application.
pub fn psido_apply(p: &SymbolMatrix, t: f64, u: &SpectralField) -> Result<SpectralField> {
    if p.size() != u.components() {
        return Err(HypnetError::arg("symbol", "size differs from field components"));
    }
    DenseOperator::new(p, t, u.grid()).apply(u)
}

/// FFT application when the symbol is separable, dense otherwise.
pub fn psido_apply_auto(p: &SymbolMatrix, t: f64, u: &SpectralField) -> Result<SpectralField> {
    if p.size() != u.components() {
        return Err(HypnetError::arg("symbol", "size differs from field components"));
    }
    if p.terms().is_some() {
        FastOperator::new(p, u.grid())?.apply(t, u)
    } else {
        psido_apply(p, t, u)
    }
}

/// Random field with Gaussian coefficients damped by ⟨ξ⟩^{-decay}; Nyquist modes left empty.
pub fn random_field(grid: &TorusGrid, m: usize, decay: f64, rng: &mut impl Rng) -> SpectralField {
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); grid.len()]; m];
    for comp in coeffs.iter_mut() {
        for (k, z) in comp.iter_mut().enumerate() {
            if grid.has_nyquist(k) {
                continue;
            }
            let w = japanese(&grid.frequency(k)).powf(-decay);
            *z = C64::new(gauss(rng), gauss(rng)) * w;
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("shape")
}

/// Random field restricted to |ξ|_∞ ≤ band.
pub fn random_band_limited(grid: &TorusGrid, m: usize, band: f64, rng: &mut impl Rng) -> SpectralField {
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); grid.len()]; m];
    for comp in coeffs.iter_mut() {
        for (k, z) in comp.iter_mut().enumerate() {
            let xi = grid.frequency(k);
            if xi.iter().all(|v| v.abs() <= band) && !grid.has_nyquist(k) {
                *z = C64::new(gauss(rng), gauss(rng));
            }
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("shape")
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    // Box–Muller; keeps the dependency list to rand itself.
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TWO_PI * u2).cos()
}

pub fn operator_bound_probe(
    p: &SymbolMatrix,
    grid: &TorusGrid,
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 1 {
        return Err(HypnetError::arg("trials", "must be >= 1"));
    }
    let m_ord = p.declared_order;
    let op = DenseOperator::new(p, 0.0, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let u = random_field(grid, p.size(), s + m_ord + grid.dim() as f64, &mut rng);
        let pu = op.apply(&u)?;
        let den = sobolev_norm(s + m_ord, &u);
        if den > 0.0 {
            best = best.max(sobolev_norm(s, &pu) / den);
        }
    }
    Ok(best)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 1 && a.ncols() == 1 {
        return a[(0, 0)].norm();
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// One row of an order probe: shell index, ⟨ξ⟩ at the maximizer, sup norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSup {
    pub shell: usize,
    pub center: f64,
    pub at: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub order: f64,
    pub residual: f64,
    pub shells: Vec<ShellSup>,
}

impl OrderEstimate {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "shell_center,sup")?;
        for s in &self.shells {
            writeln!(w, "{:e},{:e}", s.center, s.sup)?;
        }
        Ok(())
    }
}

/// Dyadic-shell estimate of the growth order of |p(t,x,ξ)| in ξ.
pub fn estimate_order(p: &SymbolMatrix, grid: &TorusGrid, t: f64, shells: usize) -> Result<OrderEstimate> {
    let max_shells = (grid.points() / 2).trailing_zeros() as usize;
    if shells < 3 || shells > max_shells {
        return Err(HypnetError::arg(
            "shells",
            format!("need 3..={max_shells} dyadic shells on this grid"),
        ));
    }
    let step = (grid.len() / 64).max(1);
    let xs: Vec<Vec<f64>> = (0..grid.len()).step_by(step).map(|j| grid.point(j)).collect();
    let mut rows = Vec::with_capacity(shells);
    for j in 0..shells {
        let lo = (1usize << j) as f64;
        let hi = (1usize << (j + 1)) as f64;
        let mut xis: Vec<Vec<f64>> = Vec::new();
        if grid.dim() == 1 {
            let mut k = lo;
            while k < hi {
                xis.push(vec![k]);
                xis.push(vec![-k]);
                k += 1.0;
            }
        } else {
            let kmax = hi as i64;
            for a in -kmax..=kmax {
                for b in -kmax..=kmax {
                    let r = ((a * a + b * b) as f64).sqrt();
                    if r >= lo && r < hi {
                        xis.push(vec![a as f64, b as f64]);
                    }
                }
            }
        }
        let mut sup = 0.0;
        let mut at = japanese(&xis[0]);
        for x in &xs {
            for xi in &xis {
                let v = spectral_norm(&p.evaluate(t, x, xi));
                if v > sup {
                    sup = v;
                    at = japanese(xi);
                }
            }
        }
        rows.push(ShellSup {
            shell: j,
            center: (1.0 + (1.5 * lo) * (1.5 * lo)).sqrt(),
            at,
            sup,
        });
    }
    let top = rows.iter().map(|r| r.sup).fold(0.0, f64::max);
    if top < 1e-10 || rows.iter().any(|r| r.sup <= 0.0) {
        return Err(HypnetError::Degenerate(format!(
            "symbol sup per shell below threshold (max {top:.3e})"
        )));
    }
    let xs_fit: Vec<f64> = rows.iter().map(|r| r.at.ln()).collect();
    let ys_fit: Vec<f64> = rows.iter().map(|r| r.sup.ln()).collect();
    let (order, _, residual) = least_squares(&xs_fit, &ys_fit);
    Ok(OrderEstimate {
        order,
        residual,
        shells: rows,
    })
}
