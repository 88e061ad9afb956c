//! Excess reconstruction risk: program bound with automatic split point,
//! and the closed-form relative-rank bound when its condition holds.
use subspace_bounds::bounds::{excess_lower_bound, relrank_bound, relrank_condition, Mu};
use subspace_bounds::models::{CovModel, Spectrum};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 100_000;
    for d in [2, 4, 8] {
        let model = CovModel::new(Spectrum::exponential(0.5, 30, d)?, n)?;
        let auto = excess_lower_bound(&model, Mu::Auto)?;
        let (holds, lhs) = relrank_condition(&model)?;
        print!("d = {d}: program {:.4e} at mu = {:.4e}", auto.value, auto.params.mu.unwrap_or(f64::NAN));
        if holds {
            println!(", relative rank {:.4e} (condition {lhs:.1} <= {})", relrank_bound(&model)?, n / 2);
        } else {
            println!(", condition fails ({lhs:.1} > {})", n / 2);
        }
    }
    Ok(())
}
