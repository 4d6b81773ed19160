//! Finite-partition Sanov rates and the sandwich certificate between likelihood and LDP maximizers.

use divlab::models::ParametricModel;
use divlab::sanov::{sandwich_check, sandwich_optimum, sanov_rate_convergence, simplex_grid, Partition};

fn main() -> anyhow::Result<()> {
    let model = ParametricModel::simplex(2)?;
    let table = sanov_rate_convergence(&model, &[0.3], &[0.5], &[50, 200, 800, 2000])?;
    println!("{:>6} {:>12} {:>12} {:>10}", "n", "rate", "target", "gap");
    for r in &table.rows {
        println!("{:>6} {:>12.6} {:>12.6} {:>10.6}", r.n, r.rate, r.target, r.gap);
    }

    let part = Partition::identity(3)?;
    let model = ParametricModel::simplex(3)?;
    let check = sandwich_check(&model, &[0.3, 0.3], &[0.2, 0.3], &part, 0.1, 100)?;
    println!(
        "\nsandwich at θ: L = {:.6}, K = {:.6}, bound {:.6}, holds {}",
        check.l_value, check.k_value, check.lower_bound, check.holds
    );
    let grid: Vec<Vec<f64>> = simplex_grid(3, 0.02)?
        .iter()
        .map(|p| model.theta_from_probs(p))
        .collect::<Result<_, _>>()?;
    let opt = sandwich_optimum(&model, &[0.2, 0.3], &part, 0.1, 100, &grid)?;
    println!(
        "θ_ML {:?}, θ_LDP {:?}: L gap {:.6} ≤ {:.6}: {}",
        opt.theta_ml,
        opt.theta_ldp,
        opt.l_ml - opt.l_ldp,
        opt.bound,
        opt.holds
    );
    Ok(())
}
