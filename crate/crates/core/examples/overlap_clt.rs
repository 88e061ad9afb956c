//! n<u_i, hat u_j>^2 has mean close to l_i l_j / (l_i - l_j)^2 for large n.
use subspace_bounds::models::{CovModel, RngStream, Spectrum};
use subspace_bounds::risksim::overlap_clt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CovModel::new(Spectrum::new(vec![4.0, 2.0, 1.0, 0.5], 2)?, 1_000)?;
    let mut rng = RngStream::new(3, 0).rng();
    for (i, j) in [(0, 2), (1, 2), (1, 3)] {
        let r = overlap_clt(&model, i, j, 2_000, &mut rng)?;
        println!(
            "({i},{j}) mean {:.4} +- {:.4}  expected {:.4}  z {:+.2}",
            r.mean, r.std_error, r.expected, r.z_score
        );
    }
    Ok(())
}
