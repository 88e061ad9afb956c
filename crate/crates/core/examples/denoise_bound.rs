//! Lower bound for low-rank matrix denoising as the noise level grows.
use subspace_bounds::bounds::{best_delta, denoise_lower_bound};
use subspace_bounds::models::{DenoiseModel, Spectrum};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spectrum = Spectrum::new(vec![3.0, 2.0, 0.5, 0.0, 0.0], 2)?;
    for sigma in [0.01, 0.1, 0.5, 2.0] {
        let model = DenoiseModel::new(spectrum.clone(), sigma)?;
        let r = best_delta(|delta| denoise_lower_bound(&model, delta))?;
        println!(
            "sigma = {sigma:<5} bound = {:.6e} (delta = {:.2e})",
            r.value,
            r.params.delta.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
