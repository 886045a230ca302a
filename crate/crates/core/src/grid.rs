//! Computational domain: a uniform node-centered grid with per-cell
//! classification into exterior, Dirichlet boundary, and interior cells.
//!
//! Cells are squares (segments in 1d) of measure `h^d` centered on lattice
//! points `origin + (i, j) * h`. The fixed boundary is a one-cell-thick
//! Dirichlet layer; obstacle interiors are exterior cells. Where the grid is
//! truncated by the computational box (not a real boundary), a guard band of
//! interior cells is kept permanently dry, and any run whose wetted set
//! presses against it aborts.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Exterior,
    Dirichlet,
    Interior,
}

/// Integer lattice coordinates of a cell. `j` is always 0 in 1d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone)]
pub struct GridDomain<T> {
    dim: u8,
    nx: usize,
    ny: usize,
    origin: (T, T),
    h: T,
    class: Vec<CellClass>,
    /// Spatial forcing shape on Dirichlet cells (>= 1), zero elsewhere.
    phi: Vec<T>,
    guard: Vec<bool>,
    guard_band: usize,
    dirichlet_cells: Vec<usize>,
}

pub const DEFAULT_GUARD_BAND: usize = 2;

impl<T: Scalar> GridDomain<T> {
    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    /// Measure of one cell, `h^d`.
    pub fn cell_measure(&self) -> T {
        if self.dim == 1 {
            self.h
        } else {
            self.h * self.h
        }
    }

    pub fn guard_band(&self) -> usize {
        self.guard_band
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn cell(&self, c: usize) -> CellIndex {
        CellIndex {
            i: c % self.nx,
            j: c / self.nx,
        }
    }

    pub fn position(&self, c: usize) -> (T, T) {
        let CellIndex { i, j } = self.cell(c);
        (
            self.origin.0 + T::from_usize_c(i) * self.h,
            self.origin.1 + T::from_usize_c(j) * self.h,
        )
    }

    #[inline]
    pub fn class(&self, c: usize) -> CellClass {
        self.class[c]
    }

    #[inline]
    pub fn is_interior(&self, c: usize) -> bool {
        self.class[c] == CellClass::Interior
    }

    #[inline]
    pub fn is_dirichlet(&self, c: usize) -> bool {
        self.class[c] == CellClass::Dirichlet
    }

    #[inline]
    pub fn is_guard(&self, c: usize) -> bool {
        self.guard[c]
    }

    /// Interior cell that may carry positivity: interior and not guard.
    #[inline]
    pub fn is_free(&self, c: usize) -> bool {
        self.is_interior(c) && !self.guard[c]
    }

    pub fn dirichlet_cells(&self) -> &[usize] {
        &self.dirichlet_cells
    }

    pub fn phi(&self, c: usize) -> T {
        self.phi[c]
    }

    /// 4-neighborhood (2 in 1d), staying inside the bounding box.
    pub fn neighbors(&self, c: usize, out: &mut [usize; 4]) -> usize {
        let CellIndex { i, j } = self.cell(c);
        let mut n = 0;
        if i > 0 {
            out[n] = c - 1;
            n += 1;
        }
        if i + 1 < self.nx {
            out[n] = c + 1;
            n += 1;
        }
        if self.dim == 2 {
            if j > 0 {
                out[n] = c - self.nx;
                n += 1;
            }
            if j + 1 < self.ny {
                out[n] = c + self.nx;
                n += 1;
            }
        }
        n
    }

    /// Replaces the Dirichlet shape with `f(x, y)`; every value must be >= 1.
    pub fn with_dirichlet_shape(mut self, f: impl Fn(T, T) -> T) -> Result<Self> {
        for &c in &self.dirichlet_cells {
            let (x, y) = self.position(c);
            let v = f(x, y);
            if v < T::one() {
                return Err(Error::Invalid(format!(
                    "dirichlet shape must be >= 1, got {v} at cell {c}"
                )));
            }
            self.phi[c] = v;
        }
        Ok(self)
    }

    pub fn min_phi(&self) -> T {
        self.dirichlet_cells
            .iter()
            .map(|&c| self.phi[c])
            .fold(T::infinity(), T::min)
    }

    /// Boundary values `amplitude * phi(x)` on Dirichlet cells (zero
    /// elsewhere). Fails if the floor `epsilon0` would be violated.
    pub fn dirichlet_values(&self, amplitude: T, eps0: T) -> Result<Vec<T>> {
        let min_v = amplitude * self.min_phi();
        if !(min_v >= eps0) || eps0 <= T::zero() {
            return Err(Error::ForcingFloor {
                amplitude: amplitude.to_f64().unwrap_or(f64::NAN),
                min_value: min_v.to_f64().unwrap_or(f64::NAN),
                floor: eps0.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut vals = vec![T::zero(); self.cell_count()];
        for &c in &self.dirichlet_cells {
            vals[c] = amplitude * self.phi[c];
        }
        Ok(vals)
    }

    /// Class raster for PGM snapshots: 0 exterior, 128 Dirichlet, 255 interior.
    pub fn class_raster(&self) -> Vec<u8> {
        self.class
            .iter()
            .map(|c| match c {
                CellClass::Exterior => 0u8,
                CellClass::Dirichlet => 128,
                CellClass::Interior => 255,
            })
            .collect()
    }

    /// Count of interior non-guard cells (the flippable set for brute force).
    pub fn free_cell_count(&self) -> usize {
        (0..self.cell_count()).filter(|&c| self.is_free(c)).count()
    }

    /// Checks that every interior cell reaches a Dirichlet cell through
    /// interior cells. Builders call this; exposed for tests.
    pub fn check_connectivity(&self) -> Result<()> {
        let n = self.cell_count();
        let mut seen = vec![false; n];
        let mut queue: Vec<usize> = Vec::new();
        for &d in &self.dirichlet_cells {
            seen[d] = true;
            queue.push(d);
        }
        let mut nb = [0usize; 4];
        while let Some(c) = queue.pop() {
            let k = self.neighbors(c, &mut nb);
            for &m in &nb[..k] {
                if !seen[m] && self.is_interior(m) {
                    seen[m] = true;
                    queue.push(m);
                }
            }
        }
        for c in 0..n {
            if self.is_interior(c) && !seen[c] {
                return Err(Error::Config(format!(
                    "domain: interior cell {c} is not connected to the Dirichlet boundary"
                )));
            }
        }
        Ok(())
    }

    fn validate(self) -> Result<Arc<Self>> {
        if self.dirichlet_cells.is_empty() {
            return Err(Error::Config("domain: no Dirichlet cells".into()));
        }
        self.check_connectivity()?;
        Ok(Arc::new(self))
    }
}

/// Two domains carry compatible cell layouts (same grid and classification).
pub fn same_domain<T: Scalar>(a: &Arc<GridDomain<T>>, b: &Arc<GridDomain<T>>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.dim == b.dim
            && a.nx == b.nx
            && a.ny == b.ny
            && a.h == b.h
            && a.origin == b.origin
            && a.class == b.class
            && a.phi == b.phi
            && a.guard == b.guard)
}

/// 1d interval `[0, length]` with a Dirichlet cell at x = 0 and, if
/// `two_sided`, at x = length. One-sided intervals end in a guard band at
/// the truncated far end.
pub fn build_interval_domain<T: Scalar>(
    length: T,
    h: T,
    two_sided: bool,
) -> Result<Arc<GridDomain<T>>> {
    build_interval_domain_with(length, h, two_sided, DEFAULT_GUARD_BAND)
}

pub fn build_interval_domain_with<T: Scalar>(
    length: T,
    h: T,
    two_sided: bool,
    guard_band: usize,
) -> Result<Arc<GridDomain<T>>> {
    if !(length > T::zero()) || !(h > T::zero()) {
        return Err(Error::Config("interval: length and h must be positive".into()));
    }
    let steps_f = (length / h).to_f64().unwrap_or(0.0);
    let n = steps_f.round() as usize;
    if n < 4 {
        return Err(Error::Config(format!(
            "interval: need at least 4 cells across the interval, got length/h = {steps_f:.3}"
        )));
    }
    if !two_sided && guard_band < 2 {
        return Err(Error::Config("interval: guard band must be >= 2".into()));
    }
    let nx = n + 1;
    let mut class = vec![CellClass::Interior; nx];
    class[0] = CellClass::Dirichlet;
    let mut guard = vec![false; nx];
    if two_sided {
        class[nx - 1] = CellClass::Dirichlet;
    } else {
        for g in 0..guard_band.min(n) {
            guard[nx - 1 - g] = true;
        }
    }
    let dirichlet_cells: Vec<usize> = (0..nx)
        .filter(|&c| class[c] == CellClass::Dirichlet)
        .collect();
    let mut phi = vec![T::zero(); nx];
    for &c in &dirichlet_cells {
        phi[c] = T::one();
    }
    GridDomain {
        dim: 1,
        nx,
        ny: 1,
        origin: (T::zero(), T::zero()),
        h,
        class,
        phi,
        guard,
        guard_band: if two_sided { 0 } else { guard_band },
        dirichlet_cells,
    }
    .validate()
}

/// 2d box minus a union of disjoint disks. Cells inside a disk are exterior,
/// the one-cell ring around each disk is the Dirichlet boundary, and the box
/// edge carries the guard band.
pub fn build_disk_complement_domain<T: Scalar>(
    centers: &[(T, T)],
    r0: T,
    bbox: ((T, T), (T, T)),
    h: T,
) -> Result<Arc<GridDomain<T>>> {
    build_disk_complement_domain_with(centers, r0, bbox, h, DEFAULT_GUARD_BAND)
}

pub fn build_disk_complement_domain_with<T: Scalar>(
    centers: &[(T, T)],
    r0: T,
    bbox: ((T, T), (T, T)),
    h: T,
    guard_band: usize,
) -> Result<Arc<GridDomain<T>>> {
    let ((x0, y0), (x1, y1)) = bbox;
    if centers.is_empty() {
        return Err(Error::Config("disks: at least one disk required".into()));
    }
    if !(r0 > T::zero()) || !(h > T::zero()) || !(x1 > x0) || !(y1 > y0) {
        return Err(Error::Config("disks: bad geometry parameters".into()));
    }
    if guard_band < 2 {
        return Err(Error::Config("disks: guard band must be >= 2".into()));
    }
    let four_h = T::from_f64_c(4.0) * h;
    for (k, &(cx, cy)) in centers.iter().enumerate() {
        let margin_ok = cx - r0 >= x0 + four_h
            && cx + r0 <= x1 - four_h
            && cy - r0 >= y0 + four_h
            && cy + r0 <= y1 - four_h;
        if !margin_ok {
            return Err(Error::Config(format!(
                "disks: disk {k} must lie inside the box with margin >= 4h"
            )));
        }
        for (m, &(ox, oy)) in centers.iter().enumerate().skip(k + 1) {
            let d2 = (cx - ox) * (cx - ox) + (cy - oy) * (cy - oy);
            let min_d = r0 + r0;
            if d2 <= min_d * min_d {
                return Err(Error::Config(format!(
                    "disks: disks {k} and {m} overlap (centers closer than 2*r0)"
                )));
            }
        }
    }

    let nx = ((x1 - x0) / h).to_f64().unwrap_or(0.0).round() as usize + 1;
    let ny = ((y1 - y0) / h).to_f64().unwrap_or(0.0).round() as usize + 1;
    if nx < 2 * guard_band + 4 || ny < 2 * guard_band + 4 {
        return Err(Error::Config("disks: box too small for the grid spacing".into()));
    }
    let n = nx * ny;
    let mut inside = vec![false; n];
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + T::from_usize_c(i) * h;
            let y = y0 + T::from_usize_c(j) * h;
            let c = j * nx + i;
            for &(cx, cy) in centers {
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if d2 < r0 * r0 {
                    inside[c] = true;
                    break;
                }
            }
        }
    }
    let mut class = vec![CellClass::Interior; n];
    // Dirichlet ring: cells not inside any disk but 8-adjacent to one. This
    // keeps interior cells from ever 4-touching an exterior cell.
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if inside[c] {
                class[c] = CellClass::Exterior;
                continue;
            }
            let mut ring = false;
            'scan: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    let jj = j as i64 + dj;
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    if inside[jj as usize * nx + ii as usize] {
                        ring = true;
                        break 'scan;
                    }
                }
            }
            if ring {
                class[c] = CellClass::Dirichlet;
            }
        }
    }
    let mut guard = vec![false; n];
    for j in 0..ny {
        for i in 0..nx {
            if i < guard_band || j < guard_band || i >= nx - guard_band || j >= ny - guard_band {
                let c = j * nx + i;
                if class[c] == CellClass::Interior {
                    guard[c] = true;
                }
            }
        }
    }
    let dirichlet_cells: Vec<usize> = (0..n)
        .filter(|&c| class[c] == CellClass::Dirichlet)
        .collect();
    let mut phi = vec![T::zero(); n];
    for &c in &dirichlet_cells {
        phi[c] = T::one();
    }
    GridDomain {
        dim: 2,
        nx,
        ny,
        origin: (x0, y0),
        h,
        class,
        phi,
        guard,
        guard_band,
        dirichlet_cells,
    }
    .validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_one_sided_counts() {
        let d = build_interval_domain(1.0f64, 0.25, false).unwrap();
        assert_eq!(d.cell_count(), 5);
        assert!(d.is_dirichlet(0));
        // far end is guard band
        assert!(d.is_guard(4) && d.is_guard(3));
        assert!(d.is_free(1) && d.is_free(2));
        assert_eq!(d.dirichlet_cells(), &[0]);
    }

    #[test]
    fn interval_two_sided_counts() {
        let d = build_interval_domain(1.0f64, 0.25, true).unwrap();
        assert_eq!(d.cell_count(), 5);
        assert!(d.is_dirichlet(0) && d.is_dirichlet(4));
        assert_eq!((1..4).filter(|&c| d.is_free(c)).count(), 3);
        assert_eq!(d.guard_band(), 0);
    }

    #[test]
    fn interval_too_coarse_is_error() {
        assert!(build_interval_domain(1.0f64, 0.5, false).is_err());
    }

    #[test]
    fn disk_ring_is_one_cell_wide() {
        let d = build_disk_complement_domain(
            &[(0.0f64, 0.0)],
            1.0,
            ((-4.0, -4.0), (4.0, 4.0)),
            0.0625,
        )
        .unwrap();
        // every Dirichlet cell is 8-adjacent to an exterior cell and outside the disk
        for &c in d.dirichlet_cells() {
            let (x, y) = d.position(c);
            let r = (x * x + y * y).sqrt();
            assert!(r >= 1.0, "ring cell inside disk at r = {r}");
            assert!(r <= 1.0 + 2.0 * 0.0625 * std::f64::consts::SQRT_2);
        }
        // no interior cell 4-touches an exterior cell
        let mut nb = [0usize; 4];
        for c in 0..d.cell_count() {
            if d.is_interior(c) {
                let k = d.neighbors(c, &mut nb);
                for &m in &nb[..k] {
                    assert_ne!(d.class(m), CellClass::Exterior);
                }
            }
        }
    }

    #[test]
    fn two_disks_make_two_rings() {
        let d = build_disk_complement_domain(
            &[(-1.5f64, 0.0), (1.5, 0.0)],
            0.5,
            ((-4.0, -4.0), (4.0, 4.0)),
            0.0625,
        )
        .unwrap();
        // ring cells split into two connected components (left/right of x = 0)
        let left = d
            .dirichlet_cells()
            .iter()
            .filter(|&&c| d.position(c).0 < 0.0)
            .count();
        let right = d.dirichlet_cells().len() - left;
        assert!(left > 0 && right > 0);
        assert_eq!(left, right); // symmetric configuration
    }

    #[test]
    fn overlapping_disks_rejected() {
        let r = build_disk_complement_domain(
            &[(-0.4f64, 0.0), (0.4, 0.0)],
            0.5,
            ((-4.0, -4.0), (4.0, 4.0)),
            0.0625,
        );
        assert!(r.is_err());
    }

    #[test]
    fn classification_is_a_partition_and_connected() {
        let d = build_disk_complement_domain(
            &[(0.0f64, 0.0)],
            1.0,
            ((-3.0, -3.0), (3.0, 3.0)),
            0.125,
        )
        .unwrap();
        d.check_connectivity().unwrap();
        let raster = d.class_raster();
        assert_eq!(raster.len(), d.cell_count());
    }

    #[test]
    fn dirichlet_values_scale_linearly_and_enforce_floor() {
        let d = build_interval_domain(2.0f64, 0.125, false).unwrap();
        let v1 = d.dirichlet_values(1.0, 0.01).unwrap();
        assert_eq!(v1[0], 1.0);
        assert!(d.dirichlet_values(0.0, 0.01).is_err());

        let a = d.clone();
        let v2 = a.dirichlet_values(0.25, 0.01).unwrap();
        let v3 = a.dirichlet_values(0.75, 0.01).unwrap();
        for c in 0..d.cell_count() {
            assert!((v2[c] + v3[c] - v1[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn shaped_dirichlet_values_span_expected_range() {
        let d = build_interval_domain(2.0f64, 0.25, true)
            .unwrap()
            .as_ref()
            .clone()
            .with_dirichlet_shape(|x, _| if x > 1.0 { 2.0 } else { 1.0 })
            .unwrap();
        let vals = d.dirichlet_values(0.5, 0.4).unwrap();
        let nonzero: Vec<f64> = vals.iter().copied().filter(|v| *v > 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.iter().all(|v| (0.5..=1.0).contains(v)));
        // amplitude too small for the floor
        assert!(d.dirichlet_values(0.5, 0.6).is_err());
    }
}
