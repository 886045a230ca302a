//! Independent ground truth: closed-form one-dimensional and radial
//! free-boundary positions, the two-sided merge energy comparison, and
//! exhaustive brute-force minimization on tiny grids.
//!
//! The brute-force path deliberately avoids the production linear solver:
//! each candidate mask is solved with a small dense Gaussian elimination, so
//! solver and oracle only share the energy definitions they are checked
//! against each other on.

use std::sync::Arc;

use crate::energy::{augmented_energy, HysteresisParams, Profile};
use crate::error::{Error, Result};
use crate::grid::{CellClass, GridDomain};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Pinned,
    Advancing,
    Receding,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Pinned => write!(f, "pinned"),
            Regime::Advancing => write!(f, "advancing"),
            Regime::Receding => write!(f, "receding"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle1dResult<T> {
    pub s_star: T,
    pub energy: T,
    pub regime: Regime,
}

/// Closed-form single-sided 1d step: minimize `F^2/s + weighted volume`
/// from a previously wetted length `s0`. The front advances once
/// `F > s0 sqrt(1 + mu_plus)`, recedes once `F < s0 sqrt(1 - mu_minus)`,
/// and stays pinned in between.
pub fn oracle_1d<T: Scalar>(f: T, s0: T, params: &HysteresisParams<T>) -> Oracle1dResult<T> {
    assert!(f > T::zero() && s0 >= T::zero());
    let up = (T::one() + params.mu_plus()).sqrt();
    let dn = (T::one() - params.mu_minus()).sqrt();
    let (s_star, regime) = if f > s0 * up {
        (f / up, Regime::Advancing)
    } else if f < s0 * dn {
        (f / dn, Regime::Receding)
    } else {
        (s0, Regime::Pinned)
    };
    let old = s_star.min(s0);
    let new = (s_star - s0).max(T::zero());
    let energy = f * f / s_star + params.weight(true) * old + params.weight(false) * new;
    Oracle1dResult {
        s_star,
        energy,
        regime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeVerdict {
    NoJump,
    Jump,
    AlreadyMerged,
}

#[derive(Debug, Clone, Copy)]
pub struct TwoSidedResult<T> {
    pub s_left: T,
    pub s_right: T,
    pub separate_energy: T,
    pub merged_energy: T,
    /// Forcing level where the merged and separate energies cross.
    pub f_jump: Option<T>,
    pub verdict: MergeVerdict,
}

/// Energy comparison for a two-sided interval of the given length: two
/// boundary-attached wetted intervals (each at its own closed-form optimum)
/// against the fully wetted state, whose field is constant `F` (zero
/// Dirichlet energy). Volumes integrate over the full wetted region here,
/// matching the continuum accounting.
pub fn oracle_1d_two_sided<T: Scalar>(
    f: T,
    s_left0: T,
    s_right0: T,
    length: T,
    params: &HysteresisParams<T>,
) -> Result<TwoSidedResult<T>> {
    if s_left0 + s_right0 > length {
        return Err(Error::Invalid(
            "two-sided oracle: initial wetted lengths exceed the interval".into(),
        ));
    }
    let already = s_left0 + s_right0 == length;
    let eval = |ff: T| -> (T, T, T, T) {
        let l = oracle_1d(ff, s_left0, params);
        let r = oracle_1d(ff, s_right0, params);
        let sep = l.energy + r.energy;
        let wetted0 = s_left0 + s_right0;
        let merged =
            params.weight(true) * wetted0 + params.weight(false) * (length - wetted0);
        (l.s_star, r.s_star, sep, merged)
    };
    let (s_left, s_right, separate_energy, merged_energy) = eval(f);
    if already {
        return Ok(TwoSidedResult {
            s_left: s_left0,
            s_right: s_right0,
            separate_energy,
            merged_energy,
            f_jump: Some(f),
            verdict: MergeVerdict::AlreadyMerged,
        });
    }
    // The separate branch grows with F while the merged energy is constant,
    // so the crossing (if any) is unique; bracket then bisect.
    let mut lo = f.min(T::from_f64_c(1e-6));
    let mut hi = f;
    let gap = |ff: T| {
        let (_, _, sep, merged) = eval(ff);
        sep - merged
    };
    let mut tries = 0;
    while gap(hi) < T::zero() && tries < 200 {
        hi = hi * T::from_f64_c(2.0);
        tries += 1;
    }
    let f_jump = if gap(hi) < T::zero() || gap(lo) > T::zero() {
        None
    } else {
        for _ in 0..200 {
            let mid = (lo + hi) * T::from_f64_c(0.5);
            if gap(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo + hi) * T::from_f64_c(0.5))
    };
    let verdict = if merged_energy <= separate_energy {
        MergeVerdict::Jump
    } else {
        MergeVerdict::NoJump
    };
    Ok(TwoSidedResult {
        s_left,
        s_right,
        separate_energy,
        merged_energy,
        f_jump,
        verdict,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RadialResult<T> {
    pub rho_star: T,
    pub energy: T,
    pub regime: Regime,
}

/// Radial free boundary outside a disk of radius `r0`: the front radius
/// solves `F = sqrt(q) rho ln(rho / r0)` with `q = 1 + mu_plus` when
/// advancing and `q = 1 - mu_minus` when receding, else the profile is
/// pinned at `rho0`. Root found by bisection to 1e-12.
pub fn oracle_radial<T: Scalar>(
    f: T,
    r0: T,
    rho0: T,
    params: &HysteresisParams<T>,
) -> Result<RadialResult<T>> {
    if !(f > T::zero()) || !(r0 > T::zero()) || rho0 < r0 {
        return Err(Error::Invalid("radial oracle: need F > 0, rho0 >= r0 > 0".into()));
    }
    let two_pi = T::from_f64_c(std::f64::consts::TAU);
    let pi = T::from_f64_c(std::f64::consts::PI);
    let slope_group = |rho: T| rho * (rho / r0).ln();
    let root = |q_sqrt: T| -> Option<T> {
        // solve q_sqrt * rho ln(rho/r0) = f for rho > r0
        let target = f / q_sqrt;
        let mut lo = r0;
        let mut hi = r0 * T::from_f64_c(2.0);
        let mut tries = 0;
        while slope_group(hi) < target {
            hi = hi * T::from_f64_c(2.0);
            tries += 1;
            if tries > 300 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = (lo + hi) * T::from_f64_c(0.5);
            if slope_group(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo + hi) * T::from_f64_c(0.5))
    };
    let up = (T::one() + params.mu_plus()).sqrt();
    let dn = (T::one() - params.mu_minus()).sqrt();
    let (rho_star, regime) = if rho0 == r0 {
        match root(up) {
            Some(r) => (r, Regime::Advancing),
            None => (rho0, Regime::Pinned),
        }
    } else {
        // current slope magnitude at the pinned radius
        let pinned_slope = f / (rho0 * (rho0 / r0).ln());
        if pinned_slope > up {
            (root(up).unwrap_or(rho0), Regime::Advancing)
        } else if pinned_slope < dn {
            match root(dn) {
                Some(r) if r < rho0 => (r, Regime::Receding),
                _ => (rho0, Regime::Pinned),
            }
        } else {
            (rho0, Regime::Pinned)
        }
    };
    let d_energy = if rho_star > r0 {
        two_pi * f * f / (rho_star / r0).ln()
    } else {
        T::zero()
    };
    let old = pi * (rho_star.min(rho0) * rho_star.min(rho0) - r0 * r0);
    let new = (pi * (rho_star * rho_star - rho0 * rho0)).max(T::zero());
    let energy = d_energy + params.weight(true) * old + params.weight(false) * new;
    Ok(RadialResult {
        rho_star,
        energy,
        regime,
    })
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BruteForceResult<T> {
    /// All distinct effective masks within `tol_e` of the minimum, in
    /// lexicographic order of their cell sets.
    pub argmin_masks: Vec<Vec<bool>>,
    pub min_energy: T,
    pub enumerated: usize,
    /// Closed under union and intersection of masks.
    pub lattice_closed: bool,
}

impl<T: Scalar> BruteForceResult<T> {
    /// Pointwise union of all argmin masks (the maximal element when the
    /// set is lattice-closed).
    pub fn maximal_mask(&self) -> Vec<bool> {
        let mut out = self.argmin_masks[0].clone();
        for m in &self.argmin_masks[1..] {
            for (o, &v) in out.iter_mut().zip(m) {
                *o = *o || v;
            }
        }
        out
    }

    pub fn minimal_mask(&self) -> Vec<bool> {
        let mut out = self.argmin_masks[0].clone();
        for m in &self.argmin_masks[1..] {
            for (o, &v) in out.iter_mut().zip(m) {
                *o = *o && v;
            }
        }
        out
    }
}

/// Dense Gaussian elimination for the masked Laplace system; independent of
/// the production iterative solver.
fn dense_harmonic<T: Scalar>(
    domain: &GridDomain<T>,
    mask: &[bool],
    bvals: &[T],
) -> Option<Vec<T>> {
    let n = domain.cell_count();
    // reachability prune (pockets get zero)
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = domain.dirichlet_cells().to_vec();
    for &d in domain.dirichlet_cells() {
        seen[d] = true;
    }
    let mut nb = [0usize; 4];
    while let Some(c) = queue.pop() {
        let k = domain.neighbors(c, &mut nb);
        for &m in &nb[..k] {
            if !seen[m] && mask[m] && domain.is_interior(m) {
                seen[m] = true;
                queue.push(m);
            }
        }
    }
    let unknowns: Vec<usize> = (0..n)
        .filter(|&c| domain.is_interior(c) && mask[c] && seen[c])
        .collect();
    let m = unknowns.len();
    let mut slot = vec![usize::MAX; n];
    for (k, &c) in unknowns.iter().enumerate() {
        slot[c] = k;
    }
    let mut a = vec![T::zero(); m * m];
    let mut b = vec![T::zero(); m];
    for (k, &c) in unknowns.iter().enumerate() {
        let kn = domain.neighbors(c, &mut nb);
        let mut deg = 0usize;
        for &mc in &nb[..kn] {
            match domain.class(mc) {
                CellClass::Exterior => {}
                CellClass::Dirichlet => {
                    deg += 1;
                    b[k] = b[k] + bvals[mc];
                }
                CellClass::Interior => {
                    deg += 1;
                    if slot[mc] != usize::MAX {
                        a[k * m + slot[mc]] = -T::one();
                    }
                }
            }
        }
        a[k * m + k] = T::from_usize_c(deg);
    }
    // partial-pivot elimination
    for col in 0..m {
        let mut piv = col;
        for row in col + 1..m {
            if a[row * m + col].abs() > a[piv * m + col].abs() {
                piv = row;
            }
        }
        if a[piv * m + col].abs() < T::from_f64_c(1e-14) {
            return None;
        }
        if piv != col {
            for j in 0..m {
                a.swap(col * m + j, piv * m + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / d;
            if factor != T::zero() {
                for j in col..m {
                    a[row * m + j] = a[row * m + j] - factor * a[col * m + j];
                }
                b[row] = b[row] - factor * b[col];
            }
        }
    }
    let mut x = vec![T::zero(); m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for j in row + 1..m {
            acc = acc - a[row * m + j] * x[j];
        }
        x[row] = acc / a[row * m + row];
    }
    let mut u = vec![T::zero(); n];
    for &d in domain.dirichlet_cells() {
        u[d] = bvals[d];
    }
    for (k, &c) in unknowns.iter().enumerate() {
        u[c] = x[k].max(T::zero());
    }
    Some(u)
}

/// Exhaustive minimization over all subsets of the free cells. Caps at 16
/// flippable cells (65536 dense solves).
pub fn brute_force<T: Scalar>(
    domain: &Arc<GridDomain<T>>,
    mask0: &[bool],
    amplitude: T,
    eps0: T,
    params: &HysteresisParams<T>,
    tol_e: T,
) -> Result<BruteForceResult<T>> {
    let free: Vec<usize> = (0..domain.cell_count())
        .filter(|&c| domain.is_free(c))
        .collect();
    if free.len() > 16 {
        return Err(Error::Invalid(format!(
            "brute force capped at 16 flippable cells, domain has {}",
            free.len()
        )));
    }
    let bvals = domain.dirichlet_values(amplitude, eps0)?;
    let n = domain.cell_count();
    let total = 1usize << free.len();
    let mut best = T::infinity();
    let mut argmin: Vec<(Vec<bool>, T)> = Vec::new();
    let mut mask = vec![false; n];
    for bits in 0..total {
        for c in mask.iter_mut() {
            *c = false;
        }
        for &d in domain.dirichlet_cells() {
            mask[d] = true;
        }
        for (k, &c) in free.iter().enumerate() {
            if bits & (1usize << k) != 0 {
                mask[c] = true;
            }
        }
        let Some(u) = dense_harmonic(domain, &mask, &bvals) else {
            continue;
        };
        let profile = Profile::from_field(domain.clone(), u)?;
        let e = augmented_energy(domain, mask0, &profile, params)?.total_e;
        let best_part = if best.is_finite() { best.abs() } else { T::zero() };
        let scale = T::one().max(best_part).max(e.abs());
        if e < best - tol_e * scale {
            best = e;
            argmin.retain(|(_, pe)| (*pe - best).abs() <= tol_e * scale);
        }
        if (e - best).abs() <= tol_e * scale {
            // dedupe effective masks (pruned pockets collapse many subsets)
            if !argmin.iter().any(|(m, _)| *m == profile.mask) {
                argmin.push((profile.mask, e));
            }
        }
    }
    // drop entries dragged above the final threshold
    let scale = T::one().max(best.abs());
    argmin.retain(|(_, e)| (*e - best).abs() <= tol_e * scale);
    let mut argmin_masks: Vec<Vec<bool>> = argmin.into_iter().map(|(m, _)| m).collect();
    argmin_masks.sort();
    argmin_masks.dedup();

    let mut lattice_closed = true;
    'outer: for a in &argmin_masks {
        for b in &argmin_masks {
            let union: Vec<bool> = a.iter().zip(b).map(|(&x, &y)| x || y).collect();
            let inter: Vec<bool> = a.iter().zip(b).map(|(&x, &y)| x && y).collect();
            if !argmin_masks.contains(&union) || !argmin_masks.contains(&inter) {
                lattice_closed = false;
                break 'outer;
            }
        }
    }
    Ok(BruteForceResult {
        argmin_masks,
        min_energy: best,
        enumerated: total,
        lattice_closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_interval_domain;

    fn params() -> HysteresisParams<f64> {
        HysteresisParams::new(0.36, 0.21).unwrap()
    }

    #[test]
    fn oracle_1d_examples() {
        let p = params();
        let fresh = oracle_1d(1.0, 0.0, &p);
        assert_eq!(fresh.regime, Regime::Advancing);
        assert!((fresh.s_star - 0.909090909090909).abs() < 1e-12);
        assert!((fresh.energy - 2.2).abs() < 1e-12);

        let pinned = oracle_1d(1.0, 1.0, &p);
        assert_eq!(pinned.regime, Regime::Pinned);
        assert_eq!(pinned.s_star, 1.0);

        let receding = oracle_1d(0.4, 1.0, &p);
        assert_eq!(receding.regime, Regime::Receding);
        assert!((receding.s_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_1d_regime_boundaries_are_continuous() {
        let p = params();
        let s0 = 1.0;
        let up = 1.21f64.sqrt();
        let dn = 0.64f64.sqrt();
        for f in [s0 * up * (1.0 + 1e-12), s0 * up, s0 * dn, s0 * dn * (1.0 - 1e-12)] {
            let r = oracle_1d(f, s0, &p);
            assert!((r.s_star - s0).abs() < 1e-9, "F = {f} gives s = {}", r.s_star);
        }
    }

    #[test]
    fn two_sided_fresh_symmetric_crossing() {
        // separate energy 4.4 F, merged (1 + mu_plus) * 2 = 2.42:
        // crossing at F = 0.55
        let p = params();
        let r = oracle_1d_two_sided(0.4, 0.0, 0.0, 2.0, &p).unwrap();
        assert_eq!(r.verdict, MergeVerdict::NoJump);
        let fj = r.f_jump.unwrap();
        assert!((fj - 0.55).abs() < 1e-9, "f_jump = {fj}");

        let r2 = oracle_1d_two_sided(0.6, 0.0, 0.0, 2.0, &p).unwrap();
        assert_eq!(r2.verdict, MergeVerdict::Jump);

        let r3 = oracle_1d_two_sided(0.6, 1.0, 1.0, 2.0, &p).unwrap();
        assert_eq!(r3.verdict, MergeVerdict::AlreadyMerged);
    }

    #[test]
    fn radial_examples() {
        let p = params();
        let adv = oracle_radial(2.0, 1.0, 1.0, &p).unwrap();
        assert_eq!(adv.regime, Regime::Advancing);
        assert!((adv.rho_star - 2.2458).abs() < 1e-3, "rho = {}", adv.rho_star);
        // residual of the slope equation at the root
        let res = 1.1 * adv.rho_star * adv.rho_star.ln() - 2.0;
        assert!(res.abs() < 1e-9);

        // pinned: slope at rho0 = 2 is 2 / (2 ln 2) = 1.4427 -> outside band?
        // choose F to land inside [0.8, 1.1]: F = 1.0 * 2 ln 2 = 1.386 gives slope 1.0
        let f = 2.0 * 2.0f64.ln();
        let pin = oracle_radial(f, 1.0, 2.0, &p).unwrap();
        assert_eq!(pin.regime, Regime::Pinned);
        assert_eq!(pin.rho_star, 2.0);

        // degenerate limit: F -> 0 from rho0 = r0 keeps rho* near r0
        let tiny = oracle_radial(1e-6, 1.0, 1.0, &p).unwrap();
        assert!(tiny.rho_star - 1.0 < 1e-3);
    }

    #[test]
    fn brute_force_1d_matches_closed_form() {
        let h = 0.125;
        let d = build_interval_domain(2.0, h, false).unwrap();
        assert!(d.free_cell_count() <= 16, "{}", d.free_cell_count());
        let p = params();
        let mask0 = vec![false; d.cell_count()];
        let r = brute_force(&d, &mask0, 1.0, 0.01, &p, 1e-10).unwrap();
        assert!(r.lattice_closed);
        // closed-form optimum s* = 0.909..., nearest grid front 0.875 or 1.0
        let maximal = r.maximal_mask();
        let wet = (0..d.cell_count())
            .filter(|&c| maximal[c] && d.is_interior(c))
            .count();
        let s = (wet as f64 + 1.0) * h;
        assert!((s - 0.9090909).abs() <= h, "brute-force front at {s}");
        // stability fixed point: re-minimizing from the argmin mask keeps it
        let r2 = brute_force(&d, &maximal, 1.0, 0.01, &p, 1e-10).unwrap();
        assert!(r2.argmin_masks.contains(&maximal));
    }

    #[test]
    fn brute_force_rejects_large_domains() {
        let d = build_interval_domain(2.0, 1.0 / 32.0, false).unwrap();
        let p = params();
        let mask0 = vec![false; d.cell_count()];
        assert!(brute_force(&d, &mask0, 1.0, 0.01, &p, 1e-10).is_err());
    }
}
