//! Quasi-static time stepping under piecewise strictly monotone forcing.
//!
//! Each segment of the schedule evolves by incremental minimization with the
//! canonical selection (maximal minimizer while the forcing increases,
//! minimal while it decreases). Every step appends a ledger entry carrying
//! the energy balance: the step dissipation must stay below the energy drop
//! plus the boundary flux work, up to an O(da^2) term whose constant comes
//! from the scaling competitor `u * a_next / a_prev`.
//!
//! At a breakpoint where the forcing reverses, the step into the breakpoint
//! may jump (e.g. two wetted components merge). The no-jump candidate is the
//! state just before the breakpoint, the jump candidate is the minimizer at
//! the breakpoint; when they differ the branch policy decides which
//! continuations are spawned.

use std::sync::Arc;

use crate::energy::{
    augmented_energy, EnergyBreakdown, HysteresisParams, Profile,
};
use crate::error::{Error, Result};
use crate::grid::{CellClass, GridDomain};
use crate::scalar::Scalar;
use crate::solver::{
    check_domain_safety, minimize_with, MinimizeResult, MinimizeSpec, SafetyReport, Selection,
    SolveTolerances, SolveWorkspace,
};

/// Piecewise-linear amplitude over breakpoints; strictly monotone on each
/// segment and continuous across them. Boundary data is `a(t) * phi(x)`.
#[derive(Debug, Clone)]
pub struct ForcingSchedule<T> {
    pub breakpoints: Vec<T>,
    pub amplitudes: Vec<T>,
    pub eps0: T,
}

#[derive(Debug, Clone, Copy)]
pub struct Segment<T> {
    pub t0: T,
    pub t1: T,
    pub a0: T,
    pub a1: T,
}

impl<T: Scalar> Segment<T> {
    pub fn increasing(&self) -> bool {
        self.a1 > self.a0
    }

    pub fn amplitude_at(&self, t: T) -> T {
        let w = (t - self.t0) / (self.t1 - self.t0);
        self.a0 + (self.a1 - self.a0) * w
    }

    pub fn selection(&self) -> Selection {
        if self.increasing() {
            Selection::Max
        } else {
            Selection::Min
        }
    }
}

impl<T: Scalar> ForcingSchedule<T> {
    pub fn new(breakpoints: Vec<T>, amplitudes: Vec<T>, eps0: T) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != amplitudes.len() {
            return Err(Error::Config(
                "schedule: need matching breakpoints and amplitudes, at least two".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config("schedule: breakpoints must increase".into()));
            }
        }
        for (k, w) in amplitudes.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::Config(format!(
                    "schedule: strict monotonicity violated on segment {k} (constant amplitude)"
                )));
            }
        }
        if !(eps0 > T::zero()) {
            return Err(Error::Config("schedule: epsilon0 must be positive".into()));
        }
        Ok(ForcingSchedule {
            breakpoints,
            amplitudes,
            eps0,
        })
    }

    pub fn segments(&self) -> Vec<Segment<T>> {
        (0..self.breakpoints.len() - 1)
            .map(|k| Segment {
                t0: self.breakpoints[k],
                t1: self.breakpoints[k + 1],
                a0: self.amplitudes[k],
                a1: self.amplitudes[k + 1],
            })
            .collect()
    }

    /// Checks the forcing floor against a domain's shape minimum.
    pub fn check_floor(&self, min_phi: T) -> Result<()> {
        for (t, a) in self.breakpoints.iter().zip(&self.amplitudes) {
            if *a * min_phi < self.eps0 {
                return Err(Error::Config(format!(
                    "schedule: assumption(iii) forcing floor violated at t = {t}: a * min(phi) = {} < {}",
                    *a * min_phi,
                    self.eps0
                )));
            }
        }
        Ok(())
    }
}

/// Time partition: a target fineness plus a refinement factor; breakpoints
/// are always included.
#[derive(Debug, Clone, Copy)]
pub struct PartitionSpec<T> {
    pub delta: T,
    pub refine: u32,
}

impl<T: Scalar> PartitionSpec<T> {
    pub fn new(delta: T, refine: u32) -> Result<Self> {
        if !(delta > T::zero()) || refine == 0 {
            return Err(Error::Config("partition: delta and refine must be positive".into()));
        }
        Ok(PartitionSpec { delta, refine })
    }

    /// Times inside one segment, endpoints included.
    pub fn segment_times(&self, seg: &Segment<T>) -> Vec<T> {
        let span = seg.t1 - seg.t0;
        let steps_f = (span / self.delta).to_f64().unwrap_or(1.0).ceil() as usize;
        let steps = steps_f.max(1) * self.refine as usize;
        let mut times = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let w = T::from_usize_c(k) / T::from_usize_c(steps);
            times.push(seg.t0 + span * w);
        }
        times
    }

    pub fn halved(&self) -> PartitionSpec<T> {
        PartitionSpec {
            delta: self.delta,
            refine: self.refine * 2,
        }
    }
}

/// Per-step energy balance entry.
#[derive(Debug, Clone, Copy)]
pub struct LedgerEntry<T> {
    pub j_before: T,
    pub j_after: T,
    /// Boundary flux work `2 (a_k - a_{k-1}) sum phi dnu u_{k-1} h^(d-1)`.
    pub flux: T,
    pub step_diss: T,
    /// Coefficient of the (da)^2 error term from the scaling competitor.
    pub quad_coeff: T,
    pub delta_a: T,
    /// `j_before - j_after + flux + quad_coeff da^2 - step_diss`; must stay
    /// above `-tol`.
    pub slack: T,
    /// Cells in the symmetric difference of the masks (interior only).
    pub symdiff_cells: usize,
}

#[derive(Debug, Clone)]
pub struct TraceEntry<T> {
    pub t: T,
    pub amplitude: T,
    pub mask: Vec<bool>,
    pub breakdown: EnergyBreakdown<T>,
    pub ledger: LedgerEntry<T>,
    pub jump: bool,
}

/// Trace of one strictly monotone segment, with enough context to re-run at
/// a finer partition.
#[derive(Debug, Clone)]
pub struct MonotoneTrace<T> {
    pub segment: Segment<T>,
    pub partition: PartitionSpec<T>,
    pub selection: Selection,
    pub initial_mask: Vec<bool>,
    pub entries: Vec<TraceEntry<T>>,
}

/// Discrete outward normal derivative summed over the Dirichlet layer,
/// weighted by the forcing shape: `sum_b phi_b sum_n (u_b - u_n)/h h^(d-1)`.
/// For an exactly harmonic field, `amplitude * this = D[u]`.
pub fn boundary_flux_sum<T: Scalar>(domain: &GridDomain<T>, u: &[T]) -> T {
    let h = domain.spacing();
    let area = if domain.dim() == 1 { T::one() } else { h };
    let mut nb = [0usize; 4];
    let mut acc = T::zero();
    for &b in domain.dirichlet_cells() {
        let k = domain.neighbors(b, &mut nb);
        let mut dnu = T::zero();
        for &m in &nb[..k] {
            if domain.class(m) != CellClass::Exterior {
                dnu = dnu + (u[b] - u[m]) / h;
            }
        }
        acc = acc + domain.phi(b) * dnu;
    }
    acc * area
}

fn symdiff_cells<T: Scalar>(domain: &GridDomain<T>, a: &[bool], b: &[bool]) -> usize {
    (0..domain.cell_count())
        .filter(|&c| domain.is_interior(c) && a[c] != b[c])
        .count()
}

/// One incremental step from a state at `amplitude_prev` to
/// `amplitude_next`, appending the ledger entry.
#[allow(clippy::too_many_arguments)]
pub fn step<T: Scalar>(
    state: &Profile<T>,
    amplitude_prev: T,
    amplitude_next: T,
    selection: Selection,
    params: &HysteresisParams<T>,
    eps0: T,
    tols: SolveTolerances<T>,
    ws: &mut SolveWorkspace<T>,
) -> Result<(MinimizeResult<T>, LedgerEntry<T>)> {
    let domain = &state.domain;
    let spec = MinimizeSpec {
        mask0: state.mask.clone(),
        amplitude: amplitude_next,
        selection,
        eps0,
        tols,
    };
    let res = minimize_with(domain, params, &spec, ws)?;
    let j_before = crate::energy::one_phase_energy(domain, &state.u, &state.mask);
    let j_after = res.breakdown.total_j;
    let delta_a = amplitude_next - amplitude_prev;
    let flux_sum = boundary_flux_sum(domain, &state.u);
    let flux = T::from_f64_c(2.0) * delta_a * flux_sum;
    let d_before = crate::energy::dirichlet_energy(domain, &state.u);
    let quad_coeff = d_before / (amplitude_prev * amplitude_prev);
    let step_diss = res.breakdown.dissipation;
    let slack = j_before - j_after + flux + quad_coeff * delta_a * delta_a - step_diss;
    let ledger = LedgerEntry {
        j_before,
        j_after,
        flux,
        step_diss,
        quad_coeff,
        delta_a,
        slack,
        symdiff_cells: symdiff_cells(domain, &state.mask, &res.profile.mask),
    };
    Ok((res, ledger))
}

fn zero_ledger<T: Scalar>(breakdown: &EnergyBreakdown<T>) -> LedgerEntry<T> {
    LedgerEntry {
        j_before: breakdown.total_j,
        j_after: breakdown.total_j,
        flux: T::zero(),
        step_diss: T::zero(),
        quad_coeff: T::zero(),
        delta_a: T::zero(),
        slack: T::zero(),
        symdiff_cells: 0,
    }
}

/// Cell-count threshold for flagging a step as a jump.
pub fn jump_threshold(mask_cells: usize) -> usize {
    4.max(mask_cells / 100)
}

/// Evolves one strictly monotone segment. The initial profile must be
/// stable at the segment start. Masks must move monotonically with the
/// forcing; a violation is an invariant fault.
pub fn run_monotone<T: Scalar>(
    initial: &Profile<T>,
    segment: Segment<T>,
    partition: PartitionSpec<T>,
    selection: Selection,
    params: &HysteresisParams<T>,
    eps0: T,
    tols: SolveTolerances<T>,
    ws: &mut SolveWorkspace<T>,
) -> Result<MonotoneTrace<T>> {
    let domain = &initial.domain;
    let times = partition.segment_times(&segment);
    let mut entries: Vec<TraceEntry<T>> = Vec::with_capacity(times.len());
    let b0 = augmented_energy(domain, &initial.mask, initial, params)?;
    entries.push(TraceEntry {
        t: segment.t0,
        amplitude: segment.a0,
        mask: initial.mask.clone(),
        breakdown: b0,
        ledger: zero_ledger(&b0),
        jump: false,
    });
    let mut state = initial.clone();
    let mut a_prev = segment.a0;
    for &t in &times[1..] {
        let a_next = segment.amplitude_at(t);
        let (res, ledger) = step(&state, a_prev, a_next, selection, params, eps0, tols, ws)?;
        let threshold = jump_threshold(state.interior_mask_count());
        let jump = ledger.symdiff_cells > threshold;
        for c in 0..domain.cell_count() {
            if !domain.is_interior(c) {
                continue;
            }
            let grew = !state.mask[c] && res.profile.mask[c];
            let shrank = state.mask[c] && !res.profile.mask[c];
            if (segment.increasing() && shrank) || (!segment.increasing() && grew) {
                return Err(Error::Inconsistency(format!(
                    "segment monotonicity violated at t = {t}, cell {c}"
                )));
            }
        }
        entries.push(TraceEntry {
            t,
            amplitude: a_next,
            mask: res.profile.mask.clone(),
            breakdown: res.breakdown,
            ledger,
            jump,
        });
        state = res.profile;
        a_prev = a_next;
    }
    Ok(MonotoneTrace {
        segment,
        partition,
        selection,
        initial_mask: initial.mask.clone(),
        entries,
    })
}

/// A localized jump: the step interval it was found in and the masks on
/// each side, confirmed at one level of partition refinement.
#[derive(Debug, Clone)]
pub struct JumpEvent<T> {
    pub t_lo: T,
    pub t_hi: T,
    pub amplitude: T,
    pub mask_before: Vec<bool>,
    pub mask_after: Vec<bool>,
}

/// Flags steps whose mask change exceeds the jump threshold and confirms
/// them by re-running the segment at a doubled refinement; each extra level
/// halves the jump-time uncertainty.
pub fn detect_jumps<T: Scalar>(
    trace: &MonotoneTrace<T>,
    domain: &Arc<GridDomain<T>>,
    params: &HysteresisParams<T>,
    eps0: T,
    tols: SolveTolerances<T>,
    refinement_levels: u32,
) -> Result<Vec<JumpEvent<T>>> {
    let mut current = trace.clone();
    for _ in 0..refinement_levels {
        let flagged: Vec<usize> = (1..current.entries.len())
            .filter(|&k| current.entries[k].jump)
            .collect();
        if flagged.is_empty() {
            break;
        }
        let initial_u = reconstruct_profile(domain, &current.initial_mask, trace.segment.a0, eps0, tols)?;
        let refined = run_monotone(
            &initial_u,
            current.segment,
            current.partition.halved(),
            current.selection,
            params,
            eps0,
            tols,
            &mut SolveWorkspace::new(),
        )?;
        current = refined;
    }
    let mut events = Vec::new();
    for k in 1..current.entries.len() {
        if current.entries[k].jump {
            events.push(JumpEvent {
                t_lo: current.entries[k - 1].t,
                t_hi: current.entries[k].t,
                amplitude: current.entries[k].amplitude,
                mask_before: current.entries[k - 1].mask.clone(),
                mask_after: current.entries[k].mask.clone(),
            });
        }
    }
    Ok(events)
}

/// Harmonic profile on a given mask at a given amplitude (no minimization).
pub fn reconstruct_profile<T: Scalar>(
    domain: &Arc<GridDomain<T>>,
    mask: &[bool],
    amplitude: T,
    eps0: T,
    tols: SolveTolerances<T>,
) -> Result<Profile<T>> {
    let bvals = domain.dirichlet_values(amplitude, eps0)?;
    let sol = crate::solver::harmonic_solve(domain, mask, &bvals, tols.tol_lin, None)?;
    Profile::from_field(domain.clone(), sol.u)
}

// ---------------------------------------------------------------------------
// Dissipation ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DissipationCheck<T> {
    pub steps: usize,
    pub min_slack: T,
    /// Empirical quadratic-term constant `max (Diss - dJ - flux)_+ / da^2`.
    pub empirical_quad: T,
    /// Total variation of the wetted-set indicator, `sum |symdiff| h^d`.
    pub total_variation: T,
    /// Whole-trace balance: total dissipation minus (J drop + total flux).
    pub summed_slack: T,
    pub pass: bool,
}

/// Verifies the per-step and summed energy balance over a trace.
pub fn check_dissipation<T: Scalar>(
    domain: &GridDomain<T>,
    entries: &[TraceEntry<T>],
    tol_edi: T,
) -> DissipationCheck<T> {
    let mut min_slack = T::infinity();
    let mut emp = T::zero();
    let mut tv = T::zero();
    let mut total_diss = T::zero();
    let mut total_flux = T::zero();
    let mut steps = 0usize;
    for e in entries.iter().skip(1) {
        steps += 1;
        min_slack = min_slack.min(e.ledger.slack);
        let uncovered = e.ledger.step_diss - (e.ledger.j_before - e.ledger.j_after) - e.ledger.flux;
        if uncovered > T::zero() && e.ledger.delta_a != T::zero() {
            emp = emp.max(uncovered / (e.ledger.delta_a * e.ledger.delta_a));
        }
        tv = tv + T::from_usize_c(e.ledger.symdiff_cells) * domain.cell_measure();
        total_diss = total_diss + e.ledger.step_diss;
        total_flux = total_flux + e.ledger.flux;
    }
    if steps == 0 {
        min_slack = T::zero();
    }
    let j_first = entries.first().map(|e| e.ledger.j_before).unwrap_or_else(T::zero);
    let j_last = entries.last().map(|e| e.ledger.j_after).unwrap_or_else(T::zero);
    let quad_total: T = entries
        .iter()
        .skip(1)
        .map(|e| e.ledger.quad_coeff * e.ledger.delta_a * e.ledger.delta_a)
        .sum();
    let summed_slack = j_first - j_last + total_flux + quad_total - total_diss;
    let scale = T::one().max(j_first.abs()).max(j_last.abs());
    let pass = min_slack >= -tol_edi * scale && summed_slack >= -tol_edi * scale;
    DissipationCheck {
        steps,
        min_slack,
        empirical_quad: emp,
        total_variation: tv,
        summed_slack,
        pass,
    }
}

// ---------------------------------------------------------------------------
// Piecewise monotone evolution with branching
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    NoJump,
    Jump,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchDecision {
    Root,
    Jump,
    NoJump,
}

impl std::fmt::Display for BranchDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BranchDecision::Root => write!(f, "root"),
            BranchDecision::Jump => write!(f, "jump"),
            BranchDecision::NoJump => write!(f, "no-jump"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchNode<T> {
    pub id: String,
    pub parent: Option<String>,
    pub spawn_time: T,
    pub decision: BranchDecision,
    pub entries: Vec<TraceEntry<T>>,
    pub children: Vec<String>,
    pub safety: SafetyReport,
}

#[derive(Debug, Clone)]
pub struct BranchTree<T> {
    pub nodes: Vec<BranchNode<T>>,
}

impl<T> BranchTree<T> {
    pub fn node(&self, id: &str) -> Option<&BranchNode<T>> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn leaves(&self) -> Vec<&BranchNode<T>> {
        self.nodes.iter().filter(|n| n.children.is_empty()).collect()
    }
}

struct ActiveBranch<T> {
    node_index: usize,
    state: Profile<T>,
    amplitude: T,
    ws: SolveWorkspace<T>,
}

/// Builds the initial stable state at the schedule start: the minimizer from
/// `mask0` with the first segment's selection. If `require_given_mask` is
/// set, the minimizer must reproduce `mask0` (the configured initial data
/// must already be stable).
pub fn initial_state<T: Scalar>(
    domain: &Arc<GridDomain<T>>,
    params: &HysteresisParams<T>,
    schedule: &ForcingSchedule<T>,
    mask0: &[bool],
    require_given_mask: bool,
    tols: SolveTolerances<T>,
) -> Result<Profile<T>> {
    let selection = schedule.segments()[0].selection();
    let spec = MinimizeSpec {
        mask0: mask0.to_vec(),
        amplitude: schedule.amplitudes[0],
        selection,
        eps0: schedule.eps0,
        tols,
    };
    let res = crate::solver::minimize(domain, params, &spec)?;
    if require_given_mask {
        let same = (0..domain.cell_count())
            .filter(|&c| domain.is_interior(c))
            .all(|c| res.profile.mask[c] == mask0[c]);
        if !same {
            return Err(Error::Config(
                "initial state is not stable at the schedule start (it would jump at time zero)"
                    .into(),
            ));
        }
    }
    Ok(res.profile)
}

/// Runs the full piecewise-monotone evolution, spawning branches where a
/// jump lands exactly on a breakpoint.
pub fn run_piecewise<T: Scalar>(
    initial: &Profile<T>,
    schedule: &ForcingSchedule<T>,
    partition: PartitionSpec<T>,
    policy: BranchPolicy,
    params: &HysteresisParams<T>,
    tols: SolveTolerances<T>,
    max_branches: usize,
) -> Result<BranchTree<T>> {
    let domain = initial.domain.clone();
    let segments = schedule.segments();
    let eps0 = schedule.eps0;

    let b0 = augmented_energy(&domain, &initial.mask, initial, params)?;
    let root = BranchNode {
        id: "root".to_string(),
        parent: None,
        spawn_time: schedule.breakpoints[0],
        decision: BranchDecision::Root,
        entries: vec![TraceEntry {
            t: schedule.breakpoints[0],
            amplitude: schedule.amplitudes[0],
            mask: initial.mask.clone(),
            breakdown: b0,
            ledger: zero_ledger(&b0),
            jump: false,
        }],
        children: Vec::new(),
        safety: check_domain_safety(initial),
    };
    let mut tree = BranchTree { nodes: vec![root] };
    let mut active: Vec<ActiveBranch<T>> = vec![ActiveBranch {
        node_index: 0,
        state: initial.clone(),
        amplitude: schedule.amplitudes[0],
        ws: SolveWorkspace::new(),
    }];

    for (seg_idx, seg) in segments.iter().enumerate() {
        let selection = seg.selection();
        let times = partition.segment_times(seg);
        let last_segment = seg_idx + 1 == segments.len();
        let mut next_active: Vec<ActiveBranch<T>> = Vec::new();

        for mut branch in active {
            let mut state = branch.state.clone();
            let mut a_prev = branch.amplitude;
            let mut pre_break: Option<(Profile<T>, T)> = None; // state(t1-)
            for (k, &t) in times.iter().enumerate().skip(1) {
                let a_next = seg.amplitude_at(t);
                if k == times.len() - 1 {
                    pre_break = Some((state.clone(), a_prev));
                }
                let (res, ledger) =
                    step(&state, a_prev, a_next, selection, params, eps0, tols, &mut branch.ws)?;
                let threshold = jump_threshold(state.interior_mask_count());
                let jump = ledger.symdiff_cells > threshold;
                let safety = check_domain_safety(&res.profile);
                {
                    let node = &mut tree.nodes[branch.node_index];
                    node.entries.push(TraceEntry {
                        t,
                        amplitude: a_next,
                        mask: res.profile.mask.clone(),
                        breakdown: res.breakdown,
                        ledger,
                        jump,
                    });
                    node.safety.dry_dirichlet_ring += safety.dry_dirichlet_ring;
                    node.safety.guard_contacts += safety.guard_contacts;
                }
                state = res.profile;
                a_prev = a_next;
            }

            if last_segment {
                branch.state = state;
                branch.amplitude = a_prev;
                next_active.push(branch);
                continue;
            }

            // Breakpoint handling: the final step above produced the jump
            // candidate; the pre-breakpoint state is the no-jump candidate.
            let (state_before, _) = pre_break.expect("segment has at least one step");
            let c_jump = state;
            let threshold = jump_threshold(state_before.interior_mask_count());
            let differ = symdiff_cells(&domain, &state_before.mask, &c_jump.mask) > threshold;

            if !differ {
                branch.state = c_jump;
                branch.amplitude = a_prev;
                next_active.push(branch);
                continue;
            }

            let no_jump_state = || -> Result<Profile<T>> {
                // left-continuous continuation: same mask, refreshed values
                // at the breakpoint amplitude
                reconstruct_profile(&domain, &state_before.mask, a_prev, eps0, tols)
            };

            match policy {
                BranchPolicy::Jump => {
                    branch.state = c_jump;
                    branch.amplitude = a_prev;
                    // drop stale warm starts across the reversal
                    branch.ws = SolveWorkspace::new();
                    next_active.push(branch);
                }
                BranchPolicy::NoJump => {
                    let refreshed = no_jump_state()?;
                    // rewrite the breakpoint entry to the kept state
                    let node = &mut tree.nodes[branch.node_index];
                    let bd = augmented_energy(&domain, &state_before.mask, &refreshed, params)?;
                    let last = node.entries.last_mut().expect("entries nonempty");
                    last.mask = refreshed.mask.clone();
                    last.breakdown = bd;
                    last.jump = false;
                    last.ledger = zero_ledger(&bd);
                    branch.state = refreshed;
                    branch.amplitude = a_prev;
                    branch.ws = SolveWorkspace::new();
                    next_active.push(branch);
                }
                BranchPolicy::Both => {
                    if next_active.len() + 2 > max_branches {
                        return Err(Error::Solver(format!(
                            "branching exceeded the configured maximum of {max_branches} branches"
                        )));
                    }
                    let parent_id = tree.nodes[branch.node_index].id.clone();
                    let spawn = *times.last().expect("nonempty");
                    let jump_id = format!("{parent_id}-J");
                    let nojump_id = format!("{parent_id}-N");
                    tree.nodes[branch.node_index].children =
                        vec![jump_id.clone(), nojump_id.clone()];

                    let bd_jump = augmented_energy(&domain, &c_jump.mask, &c_jump, params)?;
                    let jump_index = tree.nodes.len();
                    tree.nodes.push(BranchNode {
                        id: jump_id,
                        parent: Some(parent_id.clone()),
                        spawn_time: spawn,
                        decision: BranchDecision::Jump,
                        entries: vec![TraceEntry {
                            t: spawn,
                            amplitude: a_prev,
                            mask: c_jump.mask.clone(),
                            breakdown: bd_jump,
                            ledger: zero_ledger(&bd_jump),
                            jump: false,
                        }],
                        children: Vec::new(),
                        safety: SafetyReport::default(),
                    });
                    next_active.push(ActiveBranch {
                        node_index: jump_index,
                        state: c_jump,
                        amplitude: a_prev,
                        ws: SolveWorkspace::new(),
                    });

                    let refreshed = no_jump_state()?;
                    let bd_no = augmented_energy(&domain, &refreshed.mask, &refreshed, params)?;
                    let nojump_index = tree.nodes.len();
                    tree.nodes.push(BranchNode {
                        id: nojump_id,
                        parent: Some(parent_id),
                        spawn_time: spawn,
                        decision: BranchDecision::NoJump,
                        entries: vec![TraceEntry {
                            t: spawn,
                            amplitude: a_prev,
                            mask: refreshed.mask.clone(),
                            breakdown: bd_no,
                            ledger: zero_ledger(&bd_no),
                            jump: false,
                        }],
                        children: Vec::new(),
                        safety: SafetyReport::default(),
                    });
                    next_active.push(ActiveBranch {
                        node_index: nojump_index,
                        state: refreshed,
                        amplitude: a_prev,
                        ws: SolveWorkspace::new(),
                    });
                }
            }
        }
        active = next_active;
        if active.len() > max_branches {
            return Err(Error::Solver(format!(
                "branching exceeded the configured maximum of {max_branches} branches"
            )));
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_interval_domain;
    use crate::oracle::{oracle_1d, Regime};

    fn params() -> HysteresisParams<f64> {
        HysteresisParams::new(0.36, 0.21).unwrap()
    }

    fn tols() -> SolveTolerances<f64> {
        SolveTolerances {
            certify: false,
            ..Default::default()
        }
    }

    fn interval_mask(d: &GridDomain<f64>, s: f64) -> Vec<bool> {
        (0..d.cell_count())
            .map(|c| {
                let x = d.position(c).0;
                d.is_interior(c) && x > 0.0 && x < s
            })
            .collect()
    }

    fn wetted(p: &Profile<f64>) -> f64 {
        (p.interior_mask_count() as f64 + 1.0) * p.domain.spacing()
    }

    #[test]
    fn schedule_validation() {
        assert!(ForcingSchedule::new(vec![0.0, 1.0], vec![1.0, 1.0], 0.01).is_err());
        assert!(ForcingSchedule::new(vec![0.0, 0.0], vec![1.0, 2.0], 0.01).is_err());
        let s = ForcingSchedule::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.3, 0.6], 0.01).unwrap();
        assert_eq!(s.segments().len(), 2);
        assert!(s.segments()[0].increasing());
        assert!(!s.segments()[1].increasing());
    }

    #[test]
    fn partition_includes_breakpoints() {
        let spec = PartitionSpec::new(0.3f64, 1).unwrap();
        let seg = Segment {
            t0: 0.0,
            t1: 1.0,
            a0: 1.0,
            a1: 2.0,
        };
        let times = spec.segment_times(&seg);
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1.0);
        assert!(times.len() >= 4);
    }

    #[test]
    fn step_examples_pinned_depinned_stationary() {
        let h = 1.0 / 128.0;
        let d = build_interval_domain(2.0, h, false).unwrap();
        let p = params();
        let mask0 = interval_mask(&d, 1.0);
        let state =
            reconstruct_profile(&d, &mask0, 1.0, 0.01, tols()).unwrap();

        // pinned: amplitude within [0.8, 1.1] keeps the mask, zero dissipation
        let (res, ledger) =
            step(&state, 1.0, 1.05, Selection::Max, &p, 0.01, tols(), &mut SolveWorkspace::new())
                .unwrap();
        assert_eq!(res.profile.mask, state.mask);
        assert_eq!(ledger.step_diss, 0.0);
        assert_eq!(ledger.symdiff_cells, 0);

        // depinned advancing: amplitude 1.21 moves the front to 1.1
        let (res2, ledger2) =
            step(&state, 1.0, 1.21, Selection::Max, &p, 0.01, tols(), &mut SolveWorkspace::new())
                .unwrap();
        let s2 = wetted(&res2.profile);
        assert!((s2 - 1.1).abs() <= 2.0 * h, "s = {s2}");
        // Diss = mu_plus * (s - s0) with the step quantized to cells
        let expect = 0.21 * (s2 - 1.0);
        assert!((ledger2.step_diss - expect).abs() < 1e-9);

        // unchanged amplitude returns the same state
        let (res3, _) =
            step(&state, 1.0, 1.0, Selection::Max, &p, 0.01, tols(), &mut SolveWorkspace::new())
                .unwrap();
        assert_eq!(res3.profile.mask, state.mask);
    }

    #[test]
    fn monotone_run_tracks_oracle_and_balances_energy() {
        let h = 1.0 / 128.0;
        let d = build_interval_domain(2.0, h, false).unwrap();
        let p = params();
        let mask0 = interval_mask(&d, 1.0);
        let state = reconstruct_profile(&d, &mask0, 1.0, 0.01, tols()).unwrap();
        let seg = Segment {
            t0: 0.0,
            t1: 1.0,
            a0: 1.0,
            a1: 1.3,
        };
        let part = PartitionSpec::new(0.05, 1).unwrap();
        let trace = run_monotone(
            &state,
            seg,
            part,
            Selection::Max,
            &p,
            0.01,
            tols(),
            &mut SolveWorkspace::new(),
        )
        .unwrap();
        // masks nested increasing
        for w in trace.entries.windows(2) {
            for c in 0..d.cell_count() {
                assert!(!w[0].mask[c] || w[1].mask[c]);
            }
        }
        // front follows the closed form
        let mut s_oracle = 1.0;
        for e in &trace.entries {
            let o = oracle_1d(e.amplitude, s_oracle, &p);
            s_oracle = o.s_star;
            let wet = (0..d.cell_count())
                .filter(|&c| e.mask[c] && d.is_interior(c))
                .count();
            let s = (wet as f64 + 1.0) * h;
            assert!((s - s_oracle).abs() <= 2.0 * h, "t = {}: {s} vs {s_oracle}", e.t);
        }
        let check = check_dissipation(&d, &trace.entries, 1e-8);
        assert!(check.pass, "min slack {}", check.min_slack);
        assert!(check.total_variation > 0.0);
    }

    #[test]
    fn refinement_keeps_final_mask() {
        let h = 1.0 / 128.0;
        let d = build_interval_domain(2.0, h, false).unwrap();
        let p = params();
        let state = reconstruct_profile(&d, &interval_mask(&d, 1.0), 1.0, 0.01, tols()).unwrap();
        let seg = Segment {
            t0: 0.0,
            t1: 1.0,
            a0: 1.0,
            a1: 1.3,
        };
        let coarse = run_monotone(
            &state,
            seg,
            PartitionSpec::new(0.25, 1).unwrap(),
            Selection::Max,
            &p,
            0.01,
            tols(),
            &mut SolveWorkspace::new(),
        )
        .unwrap();
        let fine = run_monotone(
            &state,
            seg,
            PartitionSpec::new(0.25, 4).unwrap(),
            Selection::Max,
            &p,
            0.01,
            tols(),
            &mut SolveWorkspace::new(),
        )
        .unwrap();
        assert_eq!(
            coarse.entries.last().unwrap().mask,
            fine.entries.last().unwrap().mask
        );
    }

    #[test]
    fn two_sided_merge_branches_both_ways() {
        let h = 1.0 / 64.0;
        let d = build_interval_domain(2.0, h, true).unwrap();
        let p = params();
        // probe: find the discrete merge amplitude on an increasing ramp
        let fresh = vec![false; d.cell_count()];
        let schedule = ForcingSchedule::new(vec![0.0, 1.0], vec![0.2, 0.8], 0.01).unwrap();
        let init = initial_state(&d, &p, &schedule, &fresh, false, tols()).unwrap();
        let seg = schedule.segments()[0];
        let part = PartitionSpec::new(1.0 / 30.0, 1).unwrap();
        let trace = run_monotone(
            &init,
            seg,
            part,
            Selection::Max,
            &p,
            0.01,
            tols(),
            &mut SolveWorkspace::new(),
        )
        .unwrap();
        let jump_at = trace
            .entries
            .iter()
            .position(|e| e.jump)
            .expect("merge jump on the ramp");
        let a_merge = trace.entries[jump_at].amplitude;
        // continuum crossing is at 0.55; the discrete merge must sit within
        // one forcing step of it
        let da = 0.6 / 30.0;
        assert!((a_merge - 0.55).abs() <= da + 1e-9, "merge at {a_merge}");

        // branch run: increase exactly to the merge amplitude, then decrease
        // far enough for the merged film to take its downward jump
        let schedule2 =
            ForcingSchedule::new(vec![0.0, 1.0, 2.0], vec![0.2, a_merge, 0.15], 0.01).unwrap();
        let init2 = initial_state(&d, &p, &schedule2, &fresh, false, tols()).unwrap();
        let steps = ((a_merge - 0.2) / da).round().max(1.0);
        let part2 = PartitionSpec::new(1.0 / steps, 1).unwrap();
        let tree = run_piecewise(
            &init2,
            &schedule2,
            part2,
            BranchPolicy::Both,
            &p,
            tols(),
            8,
        )
        .unwrap();
        assert_eq!(tree.nodes.len(), 3, "root plus two children");
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        let jump_leaf = leaves
            .iter()
            .find(|n| n.decision == BranchDecision::Jump)
            .unwrap();
        let nojump_leaf = leaves
            .iter()
            .find(|n| n.decision == BranchDecision::NoJump)
            .unwrap();
        // right continuity: the jump branch keeps its mask on the first
        // decreasing step (friction pins it)
        assert_eq!(jump_leaf.entries[0].mask, jump_leaf.entries[1].mask);
        // the two branches differ right after the breakpoint
        assert_ne!(jump_leaf.entries[1].mask, nojump_leaf.entries[1].mask);
        // and the no-jump branch starts from the left limit
        let root = tree.node("root").unwrap();
        let pre_break = &root.entries[root.entries.len() - 2];
        assert_eq!(nojump_leaf.entries[0].mask, pre_break.mask);
        // the merged film eventually nucleates dry ground and jumps down
        assert!(jump_leaf.entries.iter().any(|e| e.jump));
        // after that both branches recede inside the same old wetted set and
        // their minimal continuations coincide
        assert_eq!(
            jump_leaf.entries.last().unwrap().mask,
            nojump_leaf.entries.last().unwrap().mask
        );
    }

    #[test]
    fn monotone_schedule_single_branch() {
        let h = 1.0 / 128.0;
        let d = build_interval_domain(2.0, h, false).unwrap();
        let p = params();
        let fresh = vec![false; d.cell_count()];
        let schedule = ForcingSchedule::new(vec![0.0, 1.0], vec![0.8, 1.2], 0.01).unwrap();
        let init = initial_state(&d, &p, &schedule, &fresh, false, tols()).unwrap();
        let tree = run_piecewise(
            &init,
            &schedule,
            PartitionSpec::new(0.25, 1).unwrap(),
            BranchPolicy::Both,
            &p,
            tols(),
            8,
        )
        .unwrap();
        assert_eq!(tree.nodes.len(), 1);
    }
}
