//! Enumerated value of the benchmark problem against its closed form.
use std::time::Instant;

use roughctl::control::value_function;
use roughctl::example::ExampleConfig;

fn main() -> roughctl::Result<()> {
    let cfg = ExampleConfig::default();
    let driver = cfg.driver()?;
    let gamma = cfg.default_history()?;
    let coarse = cfg.problem(driver.clone(), cfg.lattice_points, cfg.steps)?;
    let fine = cfg.problem(driver, cfg.refined_points, cfg.refined_steps)?;
    println!("{:>5} {:>6} {:>14} {:>14} {:>10} {:>10}", "r", "x", "closed", "value", "err m6", "err m8");
    for &(r, x) in &cfg.probes {
        let t0 = Instant::now();
        let closed = cfg.closed_form(r, x, &gamma)?;
        let a = value_function(&coarse, r, &[x], &gamma)?;
        let b = value_function(&fine, r, &[x], &gamma)?;
        let ea = ((a.value - closed) / closed).abs();
        let eb = ((b.value - closed) / closed).abs();
        println!(
            "{r:>5} {x:>6.2} {closed:>14.8} {:>14.8} {ea:>10.4} {eb:>10.4}  ({:?}, {} + {} leaves)",
            a.value,
            t0.elapsed(),
            a.leaves_evaluated,
            b.leaves_evaluated
        );
    }
    Ok(())
}
