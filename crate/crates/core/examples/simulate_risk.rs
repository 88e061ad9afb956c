//! Monte Carlo Bayes risk of the plug-in estimators against their bounds.
use subspace_bounds::models::{CovModel, DenoiseModel, Spectrum};
use subspace_bounds::risksim::{bayes_risk, matching_bound, CsvRow, Loss, SimConfig, SimModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spectrum = Spectrum::new(vec![2.0, 1.5, 0.5, 0.3, 0.2, 0.1], 2)?;
    let cases = [
        (SimModel::Cov(CovModel::new(spectrum.clone(), 200)?), Loss::Hs),
        (SimModel::Cov(CovModel::new(spectrum.clone(), 200)?), Loss::Excess),
        (SimModel::Denoise(DenoiseModel::new(spectrum, 0.1)?), Loss::Hs),
    ];
    for (model, loss) in cases {
        let config = SimConfig::new(model.clone(), loss, 2_000, 11);
        let est = bayes_risk(&config)?;
        let row = CsvRow::new(&model, &est, matching_bound(&model, loss)?);
        println!(
            "{:<8} {:<7} risk {:.4e} +- {:.1e}  bound {:.4e}  margin {:.1} SE",
            row.model, row.loss, row.mean, row.se, row.bound, row.margin_sigmas
        );
    }
    Ok(())
}
