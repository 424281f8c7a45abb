//! Fractional integral of a pseudo-control and the Caputo derivative that recovers it.
use roughctl::fraccalc::{caputo_numeric, rl_integral};
use roughctl::gridpath::{SampledPath, TimeGrid};

fn main() -> roughctl::Result<()> {
    let alpha = 0.7;
    for n in [64, 128, 256, 512] {
        let grid = TimeGrid::uniform(1.0, n)?;
        let u = SampledPath::from_fn(grid, 1, |t| vec![(4.0 * t).sin() + 0.5])?;
        let vals: Vec<f64> = (0..=n).map(|t| rl_integral(&u, alpha, 0, t).map(|v| v[0])).collect::<Result<_, _>>()?;
        let gamma = SampledPath::scalar(grid, vals)?;
        let back = caputo_numeric(&gamma, alpha)?;
        let err = (n / 4..n)
            .map(|i| (back.at(i)[0] - u.at(i)[0]).abs())
            .fold(0.0, f64::max);
        println!("n = {n:>4}: max |D^α I^α u − u| on [T/4, T) = {err:.3e}");
    }
    Ok(())
}
