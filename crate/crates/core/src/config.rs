//! JSON run configuration: domain geometry, friction parameters, forcing
//! schedule, partition, tolerances, and output options. All validation runs
//! at parse time with field-path error messages; nothing is solved before
//! the whole configuration checks out.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::HysteresisParams;
use crate::error::{Error, Result};
use crate::evolution::{ForcingSchedule, PartitionSpec};
use crate::grid::{
    build_disk_complement_domain_with, build_interval_domain_with, GridDomain, DEFAULT_GUARD_BAND,
};
use crate::solver::SolveTolerances;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval {
        length: f64,
        h: f64,
        #[serde(default)]
        two_sided: bool,
        #[serde(default = "default_guard_band")]
        guard_band: usize,
        /// Optional shape factors at the left / right boundary cells.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<[f64; 2]>,
    },
    Disks {
        centers: Vec<[f64; 2]>,
        r0: f64,
        /// [[x0, x1], [y0, y1]]
        #[serde(rename = "box")]
        bbox: [[f64; 2]; 2],
        h: f64,
        #[serde(default = "default_guard_band")]
        guard_band: usize,
        /// Optional per-disk shape factors (nearest disk wins).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<Vec<f64>>,
    },
}

fn default_guard_band() -> usize {
    DEFAULT_GUARD_BAND
}

impl DomainConfig {
    pub fn build(&self) -> Result<Arc<GridDomain<f64>>> {
        match self {
            DomainConfig::Interval {
                length,
                h,
                two_sided,
                guard_band,
                phi,
            } => {
                let d = build_interval_domain_with(*length, *h, *two_sided, *guard_band)?;
                match phi {
                    None => Ok(d),
                    Some([left, right]) => {
                        let mid = length / 2.0;
                        Ok(Arc::new(d.as_ref().clone().with_dirichlet_shape(
                            |x, _| if x < mid { *left } else { *right },
                        )?))
                    }
                }
            }
            DomainConfig::Disks {
                centers,
                r0,
                bbox,
                h,
                guard_band,
                phi,
            } => {
                let pts: Vec<(f64, f64)> = centers.iter().map(|c| (c[0], c[1])).collect();
                let bb = ((bbox[0][0], bbox[1][0]), (bbox[0][1], bbox[1][1]));
                let d = build_disk_complement_domain_with(&pts, *r0, bb, *h, *guard_band)?;
                match phi {
                    None => Ok(d),
                    Some(factors) => {
                        if factors.len() != pts.len() {
                            return Err(Error::Config(
                                "domain.phi: one factor per disk required".into(),
                            ));
                        }
                        let pts = pts.clone();
                        let factors = factors.clone();
                        Ok(Arc::new(d.as_ref().clone().with_dirichlet_shape(
                            move |x, y| {
                                let mut best = 0usize;
                                let mut best_d = f64::INFINITY;
                                for (k, &(cx, cy)) in pts.iter().enumerate() {
                                    let dd = (x - cx).powi(2) + (y - cy).powi(2);
                                    if dd < best_d {
                                        best_d = dd;
                                        best = k;
                                    }
                                }
                                factors[best]
                            },
                        )?))
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub mu_minus: f64,
    pub mu_plus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub breakpoints: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub delta: f64,
    #[serde(default = "one_u32")]
    pub refine: u32,
}

fn one_u32() -> u32 {
    1
}

/// Initial wetted set at the schedule start. `Fresh` solves from the empty
/// set; the others prescribe a stable starting mask which is verified.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Fresh,
    /// 1d: wetted interval [0, s) (and mirrored [length - s, length) when
    /// the domain is two-sided and `mirrored` is set).
    Interval {
        s: f64,
        #[serde(default)]
        mirrored: bool,
    },
    /// 2d: wetted annuli of outer radius `rho` around every disk.
    Disk { rho: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_tol_lin")]
    pub tol_lin: f64,
    #[serde(default = "default_tol_e")]
    pub tol_e: f64,
    #[serde(default = "default_tol_slope")]
    pub tol_slope: f64,
    #[serde(default = "default_tol_edi")]
    pub tol_edi: f64,
    #[serde(default = "default_true")]
    pub certify: bool,
}

fn default_tol_lin() -> f64 {
    1e-10
}
fn default_tol_e() -> f64 {
    1e-10
}
fn default_tol_slope() -> f64 {
    0.15
}
fn default_tol_edi() -> f64 {
    1e-8
}
fn default_true() -> bool {
    true
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            tol_lin: default_tol_lin(),
            tol_e: default_tol_e(),
            tol_slope: default_tol_slope(),
            tol_edi: default_tol_edi(),
            certify: true,
        }
    }
}

impl TolerancesConfig {
    pub fn solve_tolerances(&self) -> SolveTolerances<f64> {
        SolveTolerances {
            tol_lin: self.tol_lin,
            tol_e: self.tol_e,
            tol_slope: self.tol_slope,
            max_sweeps: 10_000,
            certify: self.certify,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a mask snapshot every k-th partition time (0 = breakpoints only).
    #[serde(default)]
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { snapshot_stride: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub params: ParamsConfig,
    #[serde(default = "default_eps0")]
    pub epsilon0: f64,
    pub schedule: ScheduleConfig,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_branches")]
    pub max_branches: usize,
}

fn default_eps0() -> f64 {
    0.01
}
fn default_max_branches() -> usize {
    8
}

/// Everything a run needs, pre-validated.
#[derive(Debug)]
pub struct ValidatedRun {
    pub config: RunConfig,
    pub domain: Arc<GridDomain<f64>>,
    pub params: HysteresisParams<f64>,
    pub schedule: ForcingSchedule<f64>,
    pub partition: PartitionSpec<f64>,
    pub initial_mask: Vec<bool>,
    pub require_given_mask: bool,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
    Ok(config)
}

pub fn validate(config: RunConfig) -> Result<ValidatedRun> {
    let params = HysteresisParams::new(config.params.mu_minus, config.params.mu_plus)?;
    let domain = config.domain.build()?;
    let schedule = ForcingSchedule::new(
        config.schedule.breakpoints.clone(),
        config.schedule.amplitudes.clone(),
        config.epsilon0,
    )?;
    schedule.check_floor(domain.min_phi())?;
    let partition = PartitionSpec::new(config.partition.delta, config.partition.refine)?;
    for &b in &schedule.breakpoints {
        // breakpoints are partition boundaries by construction; keep the
        // check for configs produced elsewhere
        if !schedule.breakpoints.contains(&b) {
            return Err(Error::Config("partition: breakpoints must be included".into()));
        }
    }
    let (initial_mask, require_given_mask) = build_initial_mask(&config, &domain)?;
    Ok(ValidatedRun {
        config,
        domain,
        params,
        schedule,
        partition,
        initial_mask,
        require_given_mask,
    })
}

pub fn parse_and_validate(text: &str) -> Result<ValidatedRun> {
    validate(parse_config(text)?)
}

fn build_initial_mask(
    config: &RunConfig,
    domain: &Arc<GridDomain<f64>>,
) -> Result<(Vec<bool>, bool)> {
    let n = domain.cell_count();
    match &config.initial {
        InitialConfig::Fresh => Ok((vec![false; n], false)),
        InitialConfig::Interval { s, mirrored } => {
            if domain.dim() != 1 {
                return Err(Error::Config(
                    "initial.interval: only valid on interval domains".into(),
                ));
            }
            let length = match &config.domain {
                DomainConfig::Interval { length, .. } => *length,
                _ => unreachable!(),
            };
            let mask = (0..n)
                .map(|c| {
                    let x = domain.position(c).0;
                    domain.is_free(c)
                        && (x < *s || (*mirrored && x > length - *s))
                })
                .collect();
            Ok((mask, true))
        }
        InitialConfig::Disk { rho } => {
            if domain.dim() != 2 {
                return Err(Error::Config("initial.disk: only valid on disk domains".into()));
            }
            let centers = match &config.domain {
                DomainConfig::Disks { centers, .. } => centers.clone(),
                _ => unreachable!(),
            };
            let mask = (0..n)
                .map(|c| {
                    let (x, y) = domain.position(c);
                    domain.is_free(c)
                        && centers
                            .iter()
                            .any(|p| (x - p[0]).powi(2) + (y - p[1]).powi(2) < rho * rho)
                })
                .collect();
            Ok((mask, true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"kind": "interval", "length": 2.0, "h": 0.015625},
        "params": {"mu_minus": 0.36, "mu_plus": 0.21},
        "schedule": {"breakpoints": [0.0, 1.0], "amplitudes": [1.0, 1.3]},
        "partition": {"delta": 0.1}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let run = parse_and_validate(MINIMAL).unwrap();
        assert_eq!(run.config.epsilon0, 0.01);
        assert_eq!(run.config.max_branches, 8);
        assert_eq!(run.config.partition.refine, 1);
        assert!(run.config.tolerances.certify);
        assert!(!run.require_given_mask);
    }

    #[test]
    fn mu_out_of_range_is_named_assumption_error() {
        let text = MINIMAL.replace("0.36", "1.2");
        let err = parse_and_validate(&text).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("0 < mu_minus < 1"), "{msg}");
    }

    #[test]
    fn non_monotone_segment_rejected() {
        let text = MINIMAL.replace("[1.0, 1.3]", "[1.0, 1.0]");
        let err = parse_and_validate(&text).unwrap_err();
        assert!(format!("{err}").contains("strict monotonicity"));
    }

    #[test]
    fn forcing_floor_violation_names_the_assumption() {
        let text = MINIMAL.replace("\"epsilon0\": 0.01", "").replace(
            "\"params\"",
            "\"epsilon0\": 2.0, \"params\"",
        );
        let err = parse_and_validate(&text).unwrap_err();
        assert!(format!("{err}").contains("assumption(iii)"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"partition\"", "\"bogus\": 1, \"partition\"");
        assert!(parse_and_validate(&text).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let run = parse_and_validate(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&run.config).unwrap();
        let reparsed = parse_config(&text).unwrap();
        let v1: serde_json::Value = serde_json::to_value(&run.config).unwrap();
        let v2: serde_json::Value = serde_json::to_value(&reparsed).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn disks_config_builds() {
        let text = r#"{
            "domain": {"kind": "disks", "centers": [[-1.5, 0.0], [1.5, 0.0]],
                        "r0": 0.5, "box": [[-4.0, 4.0], [-4.0, 4.0]], "h": 0.125},
            "params": {"mu_minus": 0.36, "mu_plus": 0.21},
            "schedule": {"breakpoints": [0.0, 1.0, 2.0], "amplitudes": [0.3, 1.2, 0.4]},
            "partition": {"delta": 0.05, "refine": 2}
        }"#;
        let run = parse_and_validate(text).unwrap();
        assert_eq!(run.domain.dim(), 2);
        assert_eq!(run.schedule.segments().len(), 2);
    }
}
