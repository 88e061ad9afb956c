//! Directional derivatives of the rank-d projector and of the basis field
//! v_ij(U) = u_i u_j^T at the identity, against finite differences.
use rand::Rng;
use subspace_bounds::equivariance::{basis_field, dp_dir, dv_dir, projector_leq_d};
use subspace_bounds::linalg::{skew_exp, Matrix, OrthMatrix, SkewMatrix};
use subspace_bounds::models::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, d, i, j) = (5, 2, 1, 3);
    let mut rng = RngStream::new(7, 0).rng();
    let xi = SkewMatrix::new(Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0)))?;
    let id = OrthMatrix::identity(p);
    let dp = dp_dir(d, &xi)?;
    let dv = dv_dir(i, j, &xi)?;
    for t in [1e-2, 1e-3, 1e-4, 1e-5] {
        let u = skew_exp(&xi, t);
        let fd_p = (projector_leq_d(&u, d)?.as_matrix() - projector_leq_d(&id, d)?.as_matrix()).scale(1.0 / t);
        let fd_v = (&basis_field(&u, i, j) - &basis_field(&id, i, j)).scale(1.0 / t);
        println!(
            "t = {t:.0e}: projector error {:.3e}, basis error {:.3e}",
            (&fd_p - dp.as_matrix()).max_abs(),
            (&fd_v - &dv).max_abs()
        );
    }
    Ok(())
}
