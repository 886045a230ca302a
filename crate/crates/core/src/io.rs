//! Result serialization: PGM (P5) mask rasters, CSV traces and breakdowns,
//! the branch-tree JSON, and a checksummed output manifest.
//!
//! Numeric CSV fields print as `{:.16e}` so identical runs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::energy::{EnergyBreakdown, Profile};
use crate::error::Result;
use crate::evolution::{BranchNode, BranchTree, TraceEntry};
use crate::grid::{CellClass, GridDomain};
use crate::scalar::Scalar;

/// Mask snapshot: 0 = exterior (and dry interior), 128 = Dirichlet layer,
/// 255 = wetted interior cell. 1d grids write a single-row image.
pub fn write_mask_pgm<T: Scalar>(
    path: &Path,
    domain: &GridDomain<T>,
    mask: &[bool],
) -> Result<()> {
    let mut bytes = Vec::with_capacity(domain.cell_count() + 32);
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", domain.nx(), domain.ny()).as_bytes());
    for c in 0..domain.cell_count() {
        let v = match domain.class(c) {
            CellClass::Dirichlet => 128u8,
            CellClass::Interior if mask[c] => 255,
            _ => 0,
        };
        bytes.push(v);
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Domain classification raster (same palette, ignoring any mask).
pub fn write_class_pgm<T: Scalar>(path: &Path, domain: &GridDomain<T>) -> Result<()> {
    let mut bytes = Vec::with_capacity(domain.cell_count() + 32);
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", domain.nx(), domain.ny()).as_bytes());
    bytes.extend_from_slice(&domain.class_raster());
    fs::write(path, bytes)?;
    Ok(())
}

pub fn breakdown_csv_header() -> &'static str {
    "t,dirichlet,volume,total_J,dissipation_step,total_E"
}

pub fn breakdown_csv_row<T: Scalar>(t: T, b: &EnergyBreakdown<T>) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        t, b.dirichlet, b.volume, b.total_j, b.dissipation, b.total_e
    )
}

pub fn write_breakdown_csv<T: Scalar>(path: &Path, rows: &[(T, EnergyBreakdown<T>)]) -> Result<()> {
    let mut out = String::new();
    out.push_str(breakdown_csv_header());
    out.push('\n');
    for (t, b) in rows {
        out.push_str(&breakdown_csv_row(*t, b));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Field dump: cell index, physical coordinates, height.
pub fn write_field_csv<T: Scalar>(path: &Path, profile: &Profile<T>) -> Result<()> {
    let domain = &profile.domain;
    let mut out = String::from(if domain.dim() == 1 {
        "cell,x,u\n"
    } else {
        "cell,x,y,u\n"
    });
    for c in 0..domain.cell_count() {
        let (x, y) = domain.position(c);
        if domain.dim() == 1 {
            out.push_str(&format!("{c},{:.16e},{:.16e}\n", x, profile.u[c]));
        } else {
            out.push_str(&format!("{c},{:.16e},{:.16e},{:.16e}\n", x, y, profile.u[c]));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn trace_csv_header() -> &'static str {
    "t,amplitude,volume,J,D,step_diss,flux,jump_flag"
}

pub fn trace_csv_row<T: Scalar>(e: &TraceEntry<T>) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
        e.t,
        e.amplitude,
        e.breakdown.volume,
        e.breakdown.total_j,
        e.breakdown.dirichlet,
        e.ledger.step_diss,
        e.ledger.flux,
        if e.jump { 1 } else { 0 }
    )
}

pub fn write_trace_csv<T: Scalar>(path: &Path, entries: &[TraceEntry<T>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(trace_csv_header());
    out.push('\n');
    for e in entries {
        out.push_str(&trace_csv_row(e));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Serialize)]
struct BranchNodeJson<'a> {
    id: &'a str,
    parent: Option<&'a str>,
    spawn_time: f64,
    decision: String,
    children: &'a [String],
}

pub fn write_branch_tree_json<T: Scalar>(path: &Path, tree: &BranchTree<T>) -> Result<()> {
    let nodes: Vec<BranchNodeJson> = tree
        .nodes
        .iter()
        .map(|n| BranchNodeJson {
            id: &n.id,
            parent: n.parent.as_deref(),
            spawn_time: n.spawn_time.to_f64().unwrap_or(f64::NAN),
            decision: n.decision.to_string(),
            children: &n.children,
        })
        .collect();
    let text = serde_json::to_string_pretty(&nodes)?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    created_unix: u64,
    files: Vec<ManifestEntry>,
}

/// Writes `manifest.json` listing every given file with its SHA-256.
pub fn write_manifest(dir: &Path, files: &[PathBuf]) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(files.len());
    let mut sorted: Vec<&PathBuf> = files.iter().collect();
    sorted.sort();
    for f in sorted {
        let data = fs::read(f)?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        let digest = hasher.finalize();
        let rel = f.strip_prefix(dir).unwrap_or(f);
        entries.push(ManifestEntry {
            path: rel.to_string_lossy().into_owned(),
            bytes: data.len() as u64,
            sha256: hex::encode(digest),
        });
    }
    let manifest = Manifest {
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files: entries,
    };
    let path = dir.join("manifest.json");
    let mut f = fs::File::create(&path)?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(path)
}

/// Full output bundle for an evolution run: per-branch trace CSVs, mask
/// snapshots at breakpoints (plus an optional stride), the branch tree, and
/// the manifest.
pub fn write_evolution_outputs<T: Scalar>(
    dir: &Path,
    domain: &GridDomain<T>,
    tree: &BranchTree<T>,
    snapshot_stride: usize,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for node in &tree.nodes {
        let trace_path = dir.join(format!("branch-{}-trace.csv", node.id));
        write_trace_csv(&trace_path, &node.entries)?;
        files.push(trace_path);
        for (k, entry) in node.entries.iter().enumerate() {
            let is_edge = k == 0 || k == node.entries.len() - 1;
            let on_stride = snapshot_stride > 0 && k % snapshot_stride == 0;
            if is_edge || on_stride || entry.jump {
                let p = dir.join(format!("mask-{}-{:05}.pgm", node.id, k));
                write_mask_pgm(&p, domain, &entry.mask)?;
                files.push(p);
            }
        }
    }
    let tree_path = dir.join("tree.json");
    write_branch_tree_json(&tree_path, tree)?;
    files.push(tree_path);
    let manifest = write_manifest(dir, &files)?;
    files.push(manifest);
    Ok(files)
}

/// Output bundle for a single solve.
pub fn write_solve_outputs<T: Scalar>(
    prefix: &Path,
    profile: &Profile<T>,
    breakdown: &EnergyBreakdown<T>,
    certificate_text: &str,
) -> Result<Vec<PathBuf>> {
    let dir = prefix.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let stem = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solve".into());
    let mut files = Vec::new();

    let mask_path = dir.join(format!("{stem}_mask.pgm"));
    write_mask_pgm(&mask_path, &profile.domain, &profile.mask)?;
    files.push(mask_path);

    let field_path = dir.join(format!("{stem}_u.csv"));
    write_field_csv(&field_path, profile)?;
    files.push(field_path);

    let breakdown_path = dir.join(format!("{stem}_breakdown.csv"));
    write_breakdown_csv(&breakdown_path, &[(T::zero(), *breakdown)])?;
    files.push(breakdown_path);

    let cert_path = dir.join(format!("{stem}_certificate.txt"));
    fs::write(&cert_path, certificate_text)?;
    files.push(cert_path);

    let manifest = write_manifest(dir, &files)?;
    files.push(manifest);
    Ok(files)
}

pub fn branch_node_summary<T: Scalar>(node: &BranchNode<T>) -> String {
    format!(
        "branch {} ({}): {} entries, spawn t = {:.6}",
        node.id,
        node.decision,
        node.entries.len(),
        node.spawn_time.to_f64().unwrap_or(f64::NAN)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_interval_domain;

    #[test]
    fn pgm_has_correct_header_and_size() {
        let d = build_interval_domain(1.0f64, 0.25, false).unwrap();
        let dir = std::env::temp_dir().join("droplet-io-test");
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("mask.pgm");
        let mask = vec![false, true, true, false, false];
        write_mask_pgm(&p, &d, &mask).unwrap();
        let data = fs::read(&p).unwrap();
        let header = b"P5\n5 1\n255\n";
        assert_eq!(&data[..header.len()], header);
        assert_eq!(data.len(), header.len() + 5);
        assert_eq!(data[header.len()], 128); // Dirichlet
        assert_eq!(data[header.len() + 1], 255); // wet
        assert_eq!(data[header.len() + 3], 0); // dry
    }

    #[test]
    fn manifest_lists_files_with_checksums() {
        let dir = std::env::temp_dir().join("droplet-manifest-test");
        fs::create_dir_all(&dir).unwrap();
        let f1 = dir.join("a.csv");
        fs::write(&f1, "x\n1\n").unwrap();
        let manifest = write_manifest(&dir, &[f1]).unwrap();
        let text = fs::read_to_string(manifest).unwrap();
        assert!(text.contains("a.csv"));
        assert!(text.contains("sha256"));
    }
}
