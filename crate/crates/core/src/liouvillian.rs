//! Master-equation generators split into diagonal-offset sectors.
//!
//! Every jump term shifts both density-matrix indices by the same amount, so
//! the diagonal ρ_{n+s,n} evolves on its own under a banded operator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::banded::{BandedMatrix, Scalar};
use crate::error::{domain, Result};
use crate::model::{CoefficientTable, LaserModel, Variant};
use crate::steady::{self, NumberDistribution};

/// Banded generator for the vector (ρ_{j+max(s,0), j+max(−s,0)})_j.
///
/// `bands[b][j]` couples row j to column j + b − 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    pub(crate) s: isize,
    pub(crate) bands: [Vec<f64>; 5],
}

impl SectorOperator {
    pub fn offset(&self) -> isize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.bands[2].len()
    }

    /// Coefficients of band `offset` ∈ −2..=2, indexed by row.
    pub fn band(&self, offset: isize) -> &[f64] {
        assert!((-2..=2).contains(&offset), "band offset {offset} out of range");
        &self.bands[(offset + 2) as usize]
    }

    /// Matrix element (i, j); zero off the band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let off = j as isize - i as isize;
        if !(-2..=2).contains(&off) || i >= self.dim() || j >= self.dim() {
            return 0.0;
        }
        self.bands[(off + 2) as usize][i]
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(domain(format!(
                "vector length {} does not match sector dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// out = op·v. Lengths are the caller's responsibility.
    pub fn apply_into<T: Scalar>(&self, v: &[T], out: &mut [T]) {
        let n = self.dim();
        debug_assert!(v.len() == n && out.len() == n);
        for j in 0..n {
            let mut acc = T::from_real(self.bands[2][j]) * v[j];
            if j >= 1 {
                acc += T::from_real(self.bands[1][j]) * v[j - 1];
            }
            if j >= 2 {
                acc += T::from_real(self.bands[0][j]) * v[j - 2];
            }
            if j + 1 < n {
                acc += T::from_real(self.bands[3][j]) * v[j + 1];
            }
            if j + 2 < n {
                acc += T::from_real(self.bands[4][j]) * v[j + 2];
            }
            out[j] = acc;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for b in self.bands.iter_mut() {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
        self
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|j| self.bands.iter().map(|b| b[j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn lower_width(&self) -> usize {
        if self.bands[0].iter().any(|&x| x != 0.0) {
            2
        } else {
            1
        }
    }

    fn upper_width(&self) -> usize {
        if self.bands[4].iter().any(|&x| x != 0.0) {
            2
        } else {
            1
        }
    }

    /// op + shift·I in banded LU storage.
    pub fn to_banded<T: Scalar>(&self, shift: T) -> BandedMatrix<T> {
        let n = self.dim();
        let (kl, ku) = (self.lower_width().min(n - 1), self.upper_width().min(n - 1));
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let mut v = T::from_real(self.entry(i, j));
                if i == j {
                    v += shift;
                }
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// Row/column of sector entry j in the full density matrix.
pub fn sector_position(s: isize, j: usize) -> (usize, usize) {
    let m = j as isize + s.max(0);
    let n = j as isize + (-s).max(0);
    (m as usize, n as usize)
}

/// Unscaled sector generator assembled from a coefficient table and the pump parameter q.
pub fn raw_sector(table: &CoefficientTable, q: f64, s: isize) -> Result<SectorOperator> {
    let d = table.dim();
    if s.unsigned_abs() >= d {
        return Err(domain(format!("sector offset {s} requires |s| < {d}")));
    }
    let len = d - s.unsigned_abs();
    let g = &table.gain;
    let l = &table.loss;
    let mut gsub = vec![0.0; len];
    let mut gdiag = vec![0.0; len];
    let mut ldiag = vec![0.0; len];
    let mut lsup = vec![0.0; len];
    for j in 0..len {
        let (m, n) = sector_position(s, j);
        if j >= 1 {
            gsub[j] = g[m] * g[n];
        }
        gdiag[j] = -0.5 * (g[m + 1] * g[m + 1] + g[n + 1] * g[n + 1]);
        ldiag[j] = -0.5 * (l[m] * l[m] + l[n] * l[n]);
        if j + 1 < len {
            lsup[j] = l[m + 1] * l[n + 1];
        }
    }
    let mut bands = [vec![0.0; len], gsub.clone(), vec![0.0; len], lsup, vec![0.0; len]];
    for j in 0..len {
        bands[2][j] = gdiag[j] + ldiag[j];
    }
    if q != 0.0 {
        let h = q / 2.0;
        for j in 0..len {
            if j >= 2 {
                bands[0][j] = h * gsub[j] * gsub[j - 1];
            }
            if j >= 1 {
                bands[1][j] += h * (gsub[j] * gdiag[j - 1] + gdiag[j] * gsub[j]);
            }
            bands[2][j] += h * gdiag[j] * gdiag[j];
        }
    }
    Ok(SectorOperator { s, bands })
}

/// Generator of one laser model: coefficient table, realized steady state and
/// the flux normalization r that scales every sector by r·𝒩.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    model: LaserModel,
    variant: Variant,
    table: CoefficientTable,
    r: f64,
    steady: NumberDistribution,
}

impl Liouvillian {
    pub fn new(model: LaserModel, variant: Variant) -> Result<Self> {
        let table = model.coefficients(variant)?;
        let op = raw_sector(&table, model.family.pump_q(), 0)?;
        let weights = steady::null_vector(&op)?;
        let steady = NumberDistribution::new(weights, model.mu())?;
        let r = table.normalization_r(&steady)?;
        Ok(Liouvillian {
            model,
            variant,
            table,
            r,
            steady,
        })
    }

    pub fn model(&self) -> &LaserModel {
        &self.model
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    pub fn normalization_r(&self) -> f64 {
        self.r
    }

    /// Overall rate r·𝒩 multiplying the dimensionless generator.
    pub fn rate(&self) -> f64 {
        self.r * self.model.flux
    }

    pub fn steady_state(&self) -> &NumberDistribution {
        &self.steady
    }

    pub fn sector(&self, s: isize) -> Result<SectorOperator> {
        Ok(raw_sector(&self.table, self.model.family.pump_q(), s)?.scaled(self.rate()))
    }

    /// ℒρ evaluated diagonal by diagonal.
    pub fn apply_to_state(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let d = self.dim();
        if rho.nrows() != rho.ncols() {
            return Err(domain(format!(
                "density matrix must be square, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        if rho.nrows() != d {
            return Err(domain(format!(
                "density matrix dimension {} does not match model dimension {d}",
                rho.nrows()
            )));
        }
        let mut out = DMatrix::zeros(d, d);
        let mut v = Vec::with_capacity(d);
        let mut w = Vec::with_capacity(d);
        for s in -(d as isize - 1)..=(d as isize - 1) {
            let op = self.sector(s)?;
            let len = op.dim();
            v.clear();
            v.extend((0..len).map(|j| rho[sector_position(s, j)]));
            w.clear();
            w.resize(len, Complex64::new(0.0, 0.0));
            op.apply_into(&v, &mut w);
            for (j, &x) in w.iter().enumerate() {
                out[sector_position(s, j)] = x;
            }
        }
        Ok(out)
    }
}

/// Sector operator of the exact or linearized generator, scaled by r·𝒩.
pub fn build_sector(model: &LaserModel, s: isize, variant: Variant) -> Result<SectorOperator> {
    let d = model.dim;
    if s.unsigned_abs() >= d {
        return Err(domain(format!("sector offset {s} requires |s| < {d}")));
    }
    Liouvillian::new(*model, variant)?.sector(s)
}

/// Dense column-stacked superoperators for small-dimension cross-checks.
pub mod dense {
    use super::*;

    pub const MAX_DIM: usize = 8;

    fn dissipator(a: &DMatrix<f64>) -> DMatrix<f64> {
        let d = a.nrows();
        let id = DMatrix::<f64>::identity(d, d);
        let ata = a.transpose() * a;
        a.kronecker(a) - (id.kronecker(&ata) + ata.transpose().kronecker(&id)) * 0.5
    }

    /// Full D²×D² generator built from Kronecker products of the gain and loss matrices.
    pub fn superoperator(table: &CoefficientTable, q: f64, rate: f64) -> Result<DMatrix<f64>> {
        let d = table.dim();
        if d > MAX_DIM {
            return Err(domain(format!("dense superoperator limited to D <= {MAX_DIM}")));
        }
        let mut g = DMatrix::zeros(d, d);
        let mut l = DMatrix::zeros(d, d);
        for n in 1..d {
            g[(n, n - 1)] = table.gain[n];
            l[(n - 1, n)] = table.loss[n];
        }
        let dg = dissipator(&g);
        let mut sup = &dg + dissipator(&l);
        if q != 0.0 {
            sup += (&dg * &dg) * (q / 2.0);
        }
        Ok(sup * rate)
    }

    pub fn for_liouvillian(liou: &Liouvillian) -> Result<DMatrix<f64>> {
        superoperator(liou.table(), liou.model().family.pump_q(), liou.rate())
    }

    /// Column-stacking vec(ρ).
    pub fn vectorize(rho: &DMatrix<Complex64>) -> Vec<Complex64> {
        rho.iter().copied().collect()
    }

    pub fn unvectorize(v: &[Complex64], d: usize) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(d, d, v)
    }

    /// The superoperator assembled from sector blocks, for comparison with `superoperator`.
    pub fn from_sectors(liou: &Liouvillian) -> Result<DMatrix<f64>> {
        let d = liou.dim();
        if d > MAX_DIM {
            return Err(domain(format!("dense superoperator limited to D <= {MAX_DIM}")));
        }
        let mut out = DMatrix::zeros(d * d, d * d);
        for s in -(d as isize - 1)..=(d as isize - 1) {
            let op = liou.sector(s)?;
            for i in 0..op.dim() {
                for j in 0..op.dim() {
                    let a = op.entry(i, j);
                    if a == 0.0 {
                        continue;
                    }
                    let (mi, ni) = sector_position(s, i);
                    let (mj, nj) = sector_position(s, j);
                    out[(mi + d * ni, mj + d * nj)] = a;
                }
            }
        }
        Ok(out)
    }
}
