//! The capacitated substochastic program solved as a max flow, with its
//! min-cut certificate and a simplex cross-check.
use subspace_bounds::bounds::{lp_oracle, substochastic_max, SubstochasticProgram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inf = f64::INFINITY;
    let prog = SubstochasticProgram::from_caps(
        vec![vec![0.5, 0.25, inf], vec![1.0, 0.1, 0.2]],
        vec![1.0, 0.6],
        vec![0.7, 1.0, 0.3],
    )?;
    let sol = substochastic_max(&prog)?;
    println!("flow value {:.6}  cut {:.6}  simplex {:.6}", sol.value, sol.cut_value, lp_oracle(&prog)?);
    for (k, row) in sol.x.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        println!("x[{k}] = [{}]  row tight: {}", cells.join(", "), sol.tight.rows[k]);
    }
    println!("column tight: {:?}", sol.tight.cols);
    Ok(())
}
