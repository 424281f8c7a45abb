//! Signature lift of a planar curve, a few levels and the algebraic checks.
use roughctl::gridpath::{SampledPath, TimeGrid};
use roughctl::roughlift::{signature_lift, Word};

fn main() -> roughctl::Result<()> {
    let grid = TimeGrid::uniform(1.0, 64)?;
    let path = SampledPath::from_fn(grid, 2, |t| {
        let a = std::f64::consts::TAU * t;
        vec![a.cos() - 1.0, a.sin()]
    })?;
    let rp = signature_lift(&path, 2.5)?;
    let sig = rp.increment(0, 64);
    for w in ["1", "2", "1.1", "1.2", "2.1"] {
        println!("S^{w:<6} = {:+.6}", sig.get(&Word::parse(w)?));
    }
    // the sampled curve is the inscribed 64-gon
    let area = 0.5 * (sig.get(&Word::parse("1.2")?) - sig.get(&Word::parse("2.1")?));
    let polygon = 32.0 * (std::f64::consts::TAU / 64.0).sin();
    println!("signed area {area:.6}  (polygon {polygon:.6})");
    let chen = rp.chen_check();
    let shuffle = rp.shuffle_check();
    println!("chen    max violation {:.3e} over {} checks", chen.max_violation, chen.checked);
    println!("shuffle max violation {:.3e} over {} checks", shuffle.max_violation, shuffle.checked);
    println!("2.5-variation norm {:.6}", rp.pvar_norm((0, 64))?);
    Ok(())
}
