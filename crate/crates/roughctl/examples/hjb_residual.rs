//! HJB residual of the explicit value of the benchmark problem along a smooth driver.
use roughctl::example::ExampleConfig;
use roughctl::hjb::{ci_taylor_check, hjb_residual, ControlHistory};

fn main() -> roughctl::Result<()> {
    let cfg = ExampleConfig::default();
    let (driver, eta_dot) = cfg.smooth_driver()?;
    let problem = cfg.hjb_problem(driver)?;
    let cand = cfg.candidate();
    let mut hist = ControlHistory::new(cfg.alpha, vec![cfg.base], 0.0)?;
    hist.push(0.1, vec![0.5])?;
    for (t, x) in [(0.2, -1.0), (0.4, 0.3), (0.6, 1.2), (0.8, 0.0)] {
        hist.push(t, vec![-0.2])?;
        let r = hjb_residual(&cand, &problem, t, &[x], &hist, &[eta_dot(t)])?;
        println!("t = {t:.1}, x = {x:+.1}: residual {r:+.3e}");
    }
    let mut short = ControlHistory::new(cfg.alpha, vec![cfg.base], 0.0)?;
    short.push(0.5, vec![0.3])?;
    let rep = ci_taylor_check(&cand, 0.5, &[0.2], &short, &[0.6], &[1.0], &[1e-2, 1e-3, 1e-4, 1e-5])?;
    println!("Taylor ratios {:?} passed {}", rep.ratios, rep.passed);
    Ok(())
}
