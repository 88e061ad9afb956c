//! Hilbert-Schmidt lower bound for PCA on a spiked spectrum, across sample
//! sizes, with the closed form for d = 1 alongside.
use subspace_bounds::bounds::{best_delta, hs_bound_d1, hs_lower_bound};
use subspace_bounds::models::{CovModel, Spectrum};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spectrum = Spectrum::spiked(4.0, 1.0, 1, 6)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "n", "delta=1", "closed form", "best delta");
    for n in [10, 100, 1_000, 10_000] {
        let model = CovModel::new(spectrum.clone(), n)?;
        let r = hs_lower_bound(&model, 1.0)?;
        let best = best_delta(|delta| hs_lower_bound(&model, delta))?;
        println!(
            "{n:>6} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.value,
            hs_bound_d1(&model, 1.0)?,
            best.value
        );
    }
    Ok(())
}
