//! Values along mollified drivers of a generic problem approach the rough-driver value.
//! Consecutive value gaps need not shrink here, so the verdict may be negative.
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::example::mollify;
use roughctl::fixtures::{random_history, random_problem, random_walk};
use roughctl::gridpath::TimeGrid;
use roughctl::hjb::{rough_viscosity_convergence, Probe};
use roughctl::roughlift::{signature_lift, RoughPath};

fn main() -> roughctl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = TimeGrid::uniform(1.0, 48)?;
    let problem = random_problem(1, 1, grid, 3, &mut rng)?;
    let gamma = random_history(grid, problem.alpha, 0.0, &mut rng)?;
    let walk = random_walk(grid, 1, 0.5, &mut rng)?;
    let zeta = Arc::new(signature_lift(&walk, 2.5)?);
    let ladder: Vec<Arc<RoughPath>> = [16, 8, 4, 2]
        .iter()
        .map(|&w| Ok(Arc::new(signature_lift(&mollify(&walk, w)?, 2.5)?)))
        .collect::<roughctl::Result<_>>()?;
    let probes = vec![Probe { r: 0, x: vec![0.2], gamma }];
    let rep = rough_viscosity_convergence(&problem, &zeta, &ladder, &probes, 1e-8)?;
    println!("{:>4} {:>12} {:>12} {:>12}", "rung", "lift gap", "value gap", "to limit");
    for r in &rep.rows {
        println!("{:>4} {:>12.4e} {:>12.4e} {:>12.4e}", r.rung, r.lift_gap, r.value_gap, r.max_residual);
    }
    println!("limit value {:.8}, verdict {:?}", rep.limit_values[0], rep.passed);
    Ok(())
}
