//! Energies and dissipations on grid profiles: the one-phase functional
//! `J[u] = D[u] + |O(u)|`, the asymmetric dissipation distance between
//! wetted sets, the augmented step energy `E[O0, u]`, and the lattice
//! (pointwise min/max) structure those energies respect.
//!
//! Volumes count interior cells only; the Dirichlet layer contributes the
//! same constant to every competitor and cancels from all comparisons.
//! `boundary_layer_volume` adds it back when comparing against continuum
//! closed forms. All sums run in lexicographic cell order so results are
//! bit-reproducible.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{same_domain, CellClass, GridDomain};
use crate::scalar::Scalar;

/// Contact-line friction coefficients. Receding weight `mu_minus` must stay
/// below 1 so the receding energy weight `1 - mu_minus` remains positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisParams<T> {
    mu_minus: T,
    mu_plus: T,
}

impl<T: Scalar> HysteresisParams<T> {
    pub fn new(mu_minus: T, mu_plus: T) -> Result<Self> {
        if !(mu_minus > T::zero() && mu_minus < T::one()) {
            return Err(Error::Config(format!(
                "params.mu_minus: assumption violated: 0 < mu_minus < 1 (got {mu_minus})"
            )));
        }
        if !(mu_plus > T::zero()) {
            return Err(Error::Config(format!(
                "params.mu_plus: assumption violated: 0 < mu_plus (got {mu_plus})"
            )));
        }
        Ok(Self { mu_minus, mu_plus })
    }

    pub fn mu_minus(&self) -> T {
        self.mu_minus
    }

    pub fn mu_plus(&self) -> T {
        self.mu_plus
    }

    /// Volume weight of a wetted cell: `1 - mu_minus` on the reference set,
    /// `1 + mu_plus` off it.
    pub fn weight(&self, in_reference: bool) -> T {
        if in_reference {
            T::one() - self.mu_minus
        } else {
            T::one() + self.mu_plus
        }
    }

    /// Squared-slope pinning band `[1 - mu_minus, 1 + mu_plus]`.
    pub fn pinning_band(&self) -> (T, T) {
        (T::one() - self.mu_minus, T::one() + self.mu_plus)
    }
}

/// Height field plus its positivity mask on a fixed domain.
///
/// Invariants: `u = 0` off the mask and on exterior cells; on interior cells
/// `u > 0` exactly where the mask is set; Dirichlet cells are always masked
/// (the forcing is positive there); the mask never meets the guard band.
#[derive(Debug, Clone)]
pub struct Profile<T> {
    pub domain: Arc<GridDomain<T>>,
    pub u: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Scalar> Profile<T> {
    /// Builds a profile from a height field, deriving the mask from
    /// positivity and validating the invariants.
    pub fn from_field(domain: Arc<GridDomain<T>>, u: Vec<T>) -> Result<Self> {
        if u.len() != domain.cell_count() {
            return Err(Error::Invalid("field length does not match domain".into()));
        }
        let mask: Vec<bool> = (0..u.len())
            .map(|c| match domain.class(c) {
                CellClass::Dirichlet => true,
                CellClass::Interior => u[c] > T::zero(),
                CellClass::Exterior => false,
            })
            .collect();
        let p = Profile { domain, u, mask };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for c in 0..self.domain.cell_count() {
            match self.domain.class(c) {
                CellClass::Exterior => {
                    if self.mask[c] || self.u[c] != T::zero() {
                        return Err(Error::Inconsistency(format!(
                            "profile: exterior cell {c} carries mass"
                        )));
                    }
                }
                CellClass::Dirichlet => {
                    if !self.mask[c] || !(self.u[c] > T::zero()) {
                        return Err(Error::Inconsistency(format!(
                            "profile: Dirichlet cell {c} must be wetted with positive value"
                        )));
                    }
                }
                CellClass::Interior => {
                    if self.mask[c] != (self.u[c] > T::zero()) {
                        return Err(Error::Inconsistency(format!(
                            "profile: mask/positivity mismatch at cell {c}"
                        )));
                    }
                    if self.mask[c] && self.domain.is_guard(c) {
                        return Err(Error::Truncation);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn interior_mask_count(&self) -> usize {
        interior_count(&self.domain, &self.mask)
    }
}

/// Number of wetted interior cells in a mask.
pub fn interior_count<T: Scalar>(domain: &GridDomain<T>, mask: &[bool]) -> usize {
    (0..domain.cell_count())
        .filter(|&c| mask[c] && domain.is_interior(c))
        .count()
}

/// Wetted volume `h^d * #(mask /\ interior)`.
pub fn volume<T: Scalar>(domain: &GridDomain<T>, mask: &[bool]) -> T {
    T::from_usize_c(interior_count(domain, mask)) * domain.cell_measure()
}

/// Discrete Dirichlet energy: sum over grid edges between non-exterior cells
/// of `((u_b - u_a)/h)^2 * h^d`, in lexicographic edge order.
pub fn dirichlet_energy<T: Scalar>(domain: &GridDomain<T>, u: &[T]) -> T {
    let nx = domain.nx();
    let ny = domain.ny();
    let mut acc = T::zero();
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if domain.class(c) == CellClass::Exterior {
                continue;
            }
            if i + 1 < nx {
                let r = c + 1;
                if domain.class(r) != CellClass::Exterior {
                    let d = u[r] - u[c];
                    acc = acc + d * d;
                }
            }
            if j + 1 < ny {
                let dn = c + nx;
                if domain.class(dn) != CellClass::Exterior {
                    let d = u[dn] - u[c];
                    acc = acc + d * d;
                }
            }
        }
    }
    // ((du)/h)^2 * h^d = du^2 * h^(d-2)
    let scale = if domain.dim() == 1 {
        T::one() / domain.spacing()
    } else {
        T::one()
    };
    acc * scale
}

/// One-phase energy `J[u] = D[u] + |O(u)|`.
pub fn one_phase_energy<T: Scalar>(domain: &GridDomain<T>, u: &[T], mask: &[bool]) -> T {
    dirichlet_energy(domain, u) + volume(domain, mask)
}

fn advance_recede_counts<T: Scalar>(
    domain: &GridDomain<T>,
    mask0: &[bool],
    mask1: &[bool],
) -> (usize, usize) {
    let mut advanced = 0usize;
    let mut receded = 0usize;
    for c in 0..domain.cell_count() {
        if !domain.is_interior(c) {
            continue;
        }
        match (mask0[c], mask1[c]) {
            (false, true) => advanced += 1,
            (true, false) => receded += 1,
            _ => {}
        }
    }
    (advanced, receded)
}

/// Dissipation distance `mu_plus * |m1 \ m0| + mu_minus * |m0 \ m1|`,
/// exact in cell counts.
pub fn dissipation<T: Scalar>(
    domain: &GridDomain<T>,
    mask0: &[bool],
    mask1: &[bool],
    params: &HysteresisParams<T>,
) -> T {
    debug_assert_eq!(mask0.len(), domain.cell_count());
    debug_assert_eq!(mask1.len(), domain.cell_count());
    let (advanced, receded) = advance_recede_counts(domain, mask0, mask1);
    (params.mu_plus() * T::from_usize_c(advanced)
        + params.mu_minus() * T::from_usize_c(receded))
        * domain.cell_measure()
}

/// Profile-level dissipation with a domain-compatibility check.
pub fn dissipation_profiles<T: Scalar>(
    p0: &Profile<T>,
    p1: &Profile<T>,
    params: &HysteresisParams<T>,
) -> Result<T> {
    if !same_domain(&p0.domain, &p1.domain) {
        return Err(Error::MismatchedDomains);
    }
    Ok(dissipation(&p0.domain, &p0.mask, &p1.mask, params))
}

/// All pieces of the step energy of a profile relative to a reference
/// wetted set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<T> {
    pub dirichlet: T,
    pub volume: T,
    pub total_j: T,
    pub dissipation: T,
    pub total_e: T,
}

/// Computes `E[mask0, p] = J[p] + Diss[mask0, O(p)] - mu_minus |mask0|`
/// along two algebraically equal routes (the J + Diss form above and the
/// weighted-volume form) and insists they agree to 1e-12 relative.
pub fn augmented_energy<T: Scalar>(
    domain: &GridDomain<T>,
    mask0: &[bool],
    p: &Profile<T>,
    params: &HysteresisParams<T>,
) -> Result<EnergyBreakdown<T>> {
    let d = dirichlet_energy(domain, &p.u);
    let vol = volume(domain, &p.mask);
    let total_j = d + vol;
    let diss = dissipation(domain, mask0, &p.mask, params);
    let route_a = total_j + diss - params.mu_minus() * volume(domain, mask0);

    let mut wet_old = 0usize;
    let mut wet_new = 0usize;
    for c in 0..domain.cell_count() {
        if domain.is_interior(c) && p.mask[c] {
            if mask0[c] {
                wet_old += 1;
            } else {
                wet_new += 1;
            }
        }
    }
    let route_b = d
        + (params.weight(true) * T::from_usize_c(wet_old)
            + params.weight(false) * T::from_usize_c(wet_new))
            * domain.cell_measure();

    let scale = T::one().max(route_a.abs()).max(route_b.abs());
    if (route_a - route_b).abs() > T::from_f64_c(1e-12) * scale {
        return Err(Error::Inconsistency(format!(
            "augmented energy routes disagree: {route_a} vs {route_b}"
        )));
    }
    Ok(EnergyBreakdown {
        dirichlet: d,
        volume: vol,
        total_j,
        dissipation: diss,
        total_e: route_a,
    })
}

/// Constant volume carried by the Dirichlet layer, weighted by membership of
/// the layer in `mask0`. Add to `total_e` (or `total_j` with weight 1) when
/// comparing against continuum closed forms that integrate over the full
/// wetted region.
pub fn boundary_layer_volume<T: Scalar>(
    domain: &GridDomain<T>,
    mask0: &[bool],
    params: &HysteresisParams<T>,
) -> T {
    let mut acc = T::zero();
    for &c in domain.dirichlet_cells() {
        acc = acc + params.weight(mask0[c]);
    }
    acc * domain.cell_measure()
}

/// Pointwise minimum of two profiles; mask is the intersection.
pub fn lattice_min<T: Scalar>(p: &Profile<T>, q: &Profile<T>) -> Result<Profile<T>> {
    lattice_combine(p, q, true)
}

/// Pointwise maximum of two profiles; mask is the union.
pub fn lattice_max<T: Scalar>(p: &Profile<T>, q: &Profile<T>) -> Result<Profile<T>> {
    lattice_combine(p, q, false)
}

fn lattice_combine<T: Scalar>(p: &Profile<T>, q: &Profile<T>, take_min: bool) -> Result<Profile<T>> {
    if !same_domain(&p.domain, &q.domain) {
        return Err(Error::MismatchedDomains);
    }
    let n = p.domain.cell_count();
    let mut u = vec![T::zero(); n];
    let mut mask = vec![false; n];
    for c in 0..n {
        u[c] = if take_min {
            p.u[c].min(q.u[c])
        } else {
            p.u[c].max(q.u[c])
        };
        mask[c] = if take_min {
            p.mask[c] && q.mask[c]
        } else {
            p.mask[c] || q.mask[c]
        };
    }
    Ok(Profile {
        domain: p.domain.clone(),
        u,
        mask,
    })
}

/// Both sides of the min/max identities for a common reference set:
/// the dissipation identity is exact on the grid (integer cell counts);
/// the energy identity holds with defect `e_lhs - e_rhs >= 0` coming from
/// edges where the two fields cross.
#[derive(Debug, Clone, Copy)]
pub struct MinMaxReport<T> {
    pub diss_lhs: T,
    pub diss_rhs: T,
    pub diss_defect: T,
    pub e_lhs: T,
    pub e_rhs: T,
    pub e_defect: T,
}

pub fn minmax_identity_report<T: Scalar>(
    mask0: &[bool],
    p: &Profile<T>,
    q: &Profile<T>,
    params: &HysteresisParams<T>,
) -> Result<MinMaxReport<T>> {
    if !same_domain(&p.domain, &q.domain) {
        return Err(Error::MismatchedDomains);
    }
    let domain = &p.domain;
    let lo = lattice_min(p, q)?;
    let hi = lattice_max(p, q)?;

    let (a1, r1) = advance_recede_counts(domain, mask0, &p.mask);
    let (a2, r2) = advance_recede_counts(domain, mask0, &q.mask);
    let (a3, r3) = advance_recede_counts(domain, mask0, &lo.mask);
    let (a4, r4) = advance_recede_counts(domain, mask0, &hi.mask);
    let measure = domain.cell_measure();
    let diss_of = |a: usize, r: usize| {
        (params.mu_plus() * T::from_usize_c(a) + params.mu_minus() * T::from_usize_c(r)) * measure
    };
    let diss_lhs = diss_of(a1 + a2, r1 + r2);
    let diss_rhs = diss_of(a3 + a4, r3 + r4);

    let e_lhs = augmented_energy(domain, mask0, p, params)?.total_e
        + augmented_energy(domain, mask0, q, params)?.total_e;
    let e_rhs = augmented_energy(domain, mask0, &lo, params)?.total_e
        + augmented_energy(domain, mask0, &hi, params)?.total_e;

    Ok(MinMaxReport {
        diss_lhs,
        diss_rhs,
        diss_defect: diss_lhs - diss_rhs,
        e_lhs,
        e_rhs,
        e_defect: e_lhs - e_rhs,
    })
}

/// The ordered-reference variant: `E[m_u0, p] + E[m_v0, q]` against
/// `E[m_u0, p ^ q] + E[m_v0, p v q]`, requiring
/// `m_u0 <= m_v0 /\ O(p)` and `m_v0 <= O(q)`. The dissipation identity is
/// again exact; the energy defect is the grid crossing-edge excess.
pub fn ordered_minmax_identity_report<T: Scalar>(
    mask_u0: &[bool],
    mask_v0: &[bool],
    p: &Profile<T>,
    q: &Profile<T>,
    params: &HysteresisParams<T>,
) -> Result<MinMaxReport<T>> {
    if !same_domain(&p.domain, &q.domain) {
        return Err(Error::MismatchedDomains);
    }
    let domain = &p.domain;
    for c in 0..domain.cell_count() {
        if !domain.is_interior(c) {
            continue;
        }
        if mask_u0[c] && !(mask_v0[c] && p.mask[c]) {
            return Err(Error::Invalid(
                "ordered min/max identity needs mask_u0 inside mask_v0 and O(p)".into(),
            ));
        }
        if mask_v0[c] && !q.mask[c] {
            return Err(Error::Invalid(
                "ordered min/max identity needs mask_v0 inside O(q)".into(),
            ));
        }
    }
    let lo = lattice_min(p, q)?;
    let hi = lattice_max(p, q)?;
    let (a1, r1) = advance_recede_counts(domain, mask_u0, &p.mask);
    let (a2, r2) = advance_recede_counts(domain, mask_v0, &q.mask);
    let (a3, r3) = advance_recede_counts(domain, mask_u0, &lo.mask);
    let (a4, r4) = advance_recede_counts(domain, mask_v0, &hi.mask);
    let measure = domain.cell_measure();
    let diss_of = |a: usize, r: usize| {
        (params.mu_plus() * T::from_usize_c(a) + params.mu_minus() * T::from_usize_c(r)) * measure
    };
    let diss_lhs = diss_of(a1 + a2, r1 + r2);
    let diss_rhs = diss_of(a3 + a4, r3 + r4);

    let e_lhs = augmented_energy(domain, mask_u0, p, params)?.total_e
        + augmented_energy(domain, mask_v0, q, params)?.total_e;
    let e_rhs = augmented_energy(domain, mask_u0, &lo, params)?.total_e
        + augmented_energy(domain, mask_v0, &hi, params)?.total_e;

    Ok(MinMaxReport {
        diss_lhs,
        diss_rhs,
        diss_defect: diss_lhs - diss_rhs,
        e_lhs,
        e_rhs,
        e_defect: e_lhs - e_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_interval_domain;

    fn params() -> HysteresisParams<f64> {
        HysteresisParams::new(0.36, 0.21).unwrap()
    }

    /// Discrete linear wedge on [0, s]: u(x) = f * (1 - x/s), wet on [0, s).
    fn wedge(domain: &Arc<GridDomain<f64>>, f: f64, s: f64) -> Profile<f64> {
        let h = domain.spacing();
        let u: Vec<f64> = (0..domain.cell_count())
            .map(|c| {
                let x = domain.position(c).0;
                if x < s {
                    f * (1.0 - x / s)
                } else {
                    0.0
                }
            })
            .collect();
        assert!((s / h).fract().abs() < 1e-12, "s must sit on the grid");
        Profile::from_field(domain.clone(), u).unwrap()
    }

    #[test]
    fn params_validate_ranges() {
        assert!(HysteresisParams::new(1.2f64, 0.2).is_err());
        assert!(HysteresisParams::new(0.0f64, 0.2).is_err());
        assert!(HysteresisParams::new(0.3f64, 0.0).is_err());
        assert!(HysteresisParams::new(0.3f64, 5.0).is_ok());
    }

    #[test]
    fn dirichlet_energy_of_linear_wedge_is_exact() {
        // u linear from 1 to 0 over s = 0.5: D = F^2 / s = 2, exactly on the
        // grid because the discrete gradient is constant.
        let d = build_interval_domain(1.0f64, 1.0 / 512.0, false).unwrap();
        let p = wedge(&d, 1.0, 0.5);
        assert!((dirichlet_energy(&d, &p.u) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_energy_zero_cases() {
        let d = build_interval_domain(1.0f64, 0.125, false).unwrap();
        let zeros = vec![0.0; d.cell_count()];
        assert_eq!(dirichlet_energy(&d, &zeros), 0.0);
        let ones = vec![1.0; d.cell_count()];
        assert_eq!(dirichlet_energy(&d, &ones), 0.0);
    }

    #[test]
    fn dissipation_matches_cell_counts() {
        let d = build_interval_domain(16.0f64, 1.0, false).unwrap();
        let p = HysteresisParams::new(0.36, 0.21).unwrap();
        let empty = vec![false; d.cell_count()];
        let mut ten = vec![false; d.cell_count()];
        for c in 1..=10 {
            ten[c] = true;
        }
        assert_eq!(dissipation(&d, &empty, &empty, &p), 0.0);
        assert!((dissipation(&d, &empty, &ten, &p) - 2.1).abs() < 1e-15);
    }

    #[test]
    fn dissipation_nested_additivity_is_exact() {
        let d = build_interval_domain(2.0f64, 0.125, false).unwrap();
        let p = params();
        let n = d.cell_count();
        let set = |upto: usize| -> Vec<bool> {
            (0..n).map(|c| c >= 1 && c <= upto).collect()
        };
        let m0 = set(3);
        let m1 = set(7);
        let m2 = set(11);
        let lhs = dissipation(&d, &m0, &m1, &p) + dissipation(&d, &m1, &m2, &p);
        let rhs = dissipation(&d, &m0, &m2, &p);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn augmented_energy_fresh_wedge_closed_form() {
        // From an empty reference set, E = F^2/s + (1 + mu_plus) * (s - h):
        // the wetted interior cells are s/h - 1 of them.
        let h = 1.0 / 512.0;
        let d = build_interval_domain(1.0f64, h, false).unwrap();
        let p = params();
        let prof = wedge(&d, 1.0, 0.5);
        let empty = vec![false; d.cell_count()];
        let b = augmented_energy(&d, &empty, &prof, &p).unwrap();
        let expect = 2.0 + 1.21 * (0.5 - h);
        assert!((b.total_e - expect).abs() < 1e-10, "{} vs {expect}", b.total_e);
        assert!((b.total_j - (b.dirichlet + b.volume)).abs() < 1e-15);
    }

    #[test]
    fn augmented_energy_identity_with_j_and_diss() {
        // E[m0, u] - (J[u] + Diss[m0, O(u)]) = -mu_minus * |m0| for any u.
        let h = 1.0 / 64.0;
        let d = build_interval_domain(1.0f64, h, false).unwrap();
        let p = params();
        let prof = wedge(&d, 0.8, 0.25);
        let n = d.cell_count();
        let m0: Vec<bool> = (0..n).map(|c| c >= 1 && c < 30).collect();
        let b = augmented_energy(&d, &m0, &prof, &p).unwrap();
        let j = one_phase_energy(&d, &prof.u, &prof.mask);
        let diss = dissipation(&d, &m0, &prof.mask, &p);
        let lhs = b.total_e - (j + diss);
        let rhs = -p.mu_minus() * volume(&d, &m0);
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn lattice_ops_idempotent_and_volume_identity() {
        let h = 1.0 / 64.0;
        let d = build_interval_domain(1.0f64, h, false).unwrap();
        let a = wedge(&d, 1.0, 0.5);
        let b = wedge(&d, 0.7, 0.75);
        let lo = lattice_min(&a, &a).unwrap();
        assert_eq!(lo.u, a.u);
        assert_eq!(lo.mask, a.mask);

        let lo = lattice_min(&a, &b).unwrap();
        let hi = lattice_max(&a, &b).unwrap();
        let v = |m: &Profile<f64>| volume(&d, &m.mask);
        assert_eq!(v(&lo) + v(&hi), v(&a) + v(&b));
    }

    #[test]
    fn lattice_ops_reject_mismatched_domains() {
        let d1 = build_interval_domain(1.0f64, 0.125, false).unwrap();
        let d2 = build_interval_domain(2.0f64, 0.125, false).unwrap();
        let a = wedge(&d1, 1.0, 0.5);
        let b = wedge(&d2, 1.0, 0.5);
        assert!(matches!(
            lattice_min(&a, &b),
            Err(Error::MismatchedDomains)
        ));
    }

    #[test]
    fn minmax_report_same_profile_has_zero_defects() {
        let d = build_interval_domain(1.0f64, 0.0625, false).unwrap();
        let p = wedge(&d, 1.0, 0.5);
        let m0 = vec![false; d.cell_count()];
        let r = minmax_identity_report(&m0, &p, &p, &params()).unwrap();
        assert_eq!(r.diss_defect, 0.0);
        assert!(r.e_defect.abs() < 1e-14);
    }

    #[test]
    fn minmax_report_diss_identity_exact_for_crossing_profiles() {
        let d = build_interval_domain(1.0f64, 0.0625, false).unwrap();
        // two wedges with different support lengths (one contains the other)
        let p = wedge(&d, 1.0, 0.25);
        let q = wedge(&d, 0.5, 0.5);
        let n = d.cell_count();
        let m0: Vec<bool> = (0..n).map(|c| c >= 1 && c <= 2).collect();
        let r = minmax_identity_report(&m0, &p, &q, &params()).unwrap();
        assert_eq!(r.diss_defect, 0.0);
        // grid submodularity: defect >= 0
        assert!(r.e_defect >= -1e-14);
    }

    #[test]
    fn ordered_minmax_identity_holds_under_preconditions() {
        let d = build_interval_domain(1.0f64, 0.0625, false).unwrap();
        let n = d.cell_count();
        let p = wedge(&d, 0.9, 0.375); // O(p) = cells 1..=5
        let q = wedge(&d, 1.2, 0.625); // O(q) = cells 1..=9
        let set = |upto: usize| -> Vec<bool> { (0..n).map(|c| c >= 1 && c <= upto).collect() };
        let m_u0 = set(2);
        let m_v0 = set(4);
        let r = ordered_minmax_identity_report(&m_u0, &m_v0, &p, &q, &params()).unwrap();
        assert_eq!(r.diss_defect, 0.0);
        assert!(r.e_defect >= -1e-14);
        // violated precondition reported
        let m_big = set(8);
        assert!(ordered_minmax_identity_report(&m_big, &m_v0, &p, &q, &params()).is_err());
    }

    #[test]
    fn works_at_f32() {
        let d = build_interval_domain(1.0f32, 0.0625, false).unwrap();
        let u: Vec<f32> = (0..d.cell_count())
            .map(|c| {
                let x = d.position(c).0;
                if x < 0.5 {
                    1.0 - 2.0 * x
                } else {
                    0.0
                }
            })
            .collect();
        let p = Profile::from_field(d.clone(), u).unwrap();
        let hp = HysteresisParams::new(0.36f32, 0.21).unwrap();
        let empty = vec![false; d.cell_count()];
        let b = augmented_energy(&d, &empty, &p, &hp).unwrap();
        assert!((b.dirichlet - 2.0).abs() < 1e-3);
    }
}
