//! chi^2(P_U, P_I)/t^2 along exp(t xi) approaches the Fisher information
//! for both Gaussian models.
use subspace_bounds::equivariance::Generator;
use subspace_bounds::fisher::{verify_fisher_limit, FisherForm, DEFAULT_LIMIT_RTOL, DEFAULT_T_GRID};
use subspace_bounds::models::{CovModel, DenoiseModel, Spectrum};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spectrum = Spectrum::new(vec![3.0, 1.5, 1.0, 0.4], 2)?;
    let forms = [
        FisherForm::Covariance(CovModel::new(spectrum.clone(), 20)?),
        FisherForm::Denoising(DenoiseModel::new(spectrum, 0.7)?),
    ];
    for form in &forms {
        for (i, j) in [(0, 1), (1, 2), (0, 3)] {
            let xi = Generator::new(i, j, 4)?.skew();
            let r = verify_fisher_limit(form, &xi, &DEFAULT_T_GRID, DEFAULT_LIMIT_RTOL)?;
            println!(
                "{:<10} ({i},{j}) limit {:.8} closed form {:.8} {}",
                form.name(),
                r.extrapolated,
                r.closed_form,
                if r.pass { "ok" } else { "MISMATCH" }
            );
        }
    }
    Ok(())
}
