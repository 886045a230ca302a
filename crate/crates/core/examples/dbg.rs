use droplet_core::energy::*;
use droplet_core::grid::*;
use droplet_core::oracle::*;

fn main() {
    let h = 0.125;
    let d = build_interval_domain(2.0f64, h, false).unwrap();
    println!("free cells: {}", d.free_cell_count());
    let p = HysteresisParams::new(0.36, 0.21).unwrap();
    let mask0 = vec![false; d.cell_count()];
    let r = brute_force(&d, &mask0, 1.0, 0.01, &p, 1e-10).unwrap();
    println!("min E = {}, masks = {}", r.min_energy, r.argmin_masks.len());
    for m in &r.argmin_masks {
        let wet: Vec<usize> = (0..d.cell_count()).filter(|&c| m[c] && d.is_interior(c)).collect();
        println!("  mask interior cells: {:?}", wet);
    }
    let maximal = r.maximal_mask();
    let wet = (0..d.cell_count()).filter(|&c| maximal[c] && d.is_interior(c)).count();
    println!("maximal front: {}", (wet as f64 + 1.0) * h);
}
