//! Parametric models: densities, Fisher information and adaptive quadrature against them.

use divlab::models::ParametricModel;
use divlab::quadrature::integrate_real_line;

fn main() -> anyhow::Result<()> {
    for model in [
        ParametricModel::gauss_location(),
        ParametricModel::poisson(),
        ParametricModel::exponential_scale(),
        ParametricModel::simplex(3)?,
    ] {
        let theta = vec![if model.token() == "exp_scale" { -1.5 } else { 0.2 }; model.dim()];
        let info = model.fisher_information(&theta)?;
        let total = model.integrate_under(&theta, |_| 1.0, 1e-10)?;
        println!(
            "{:<10} θ = {theta:?}  total mass {total:.12}  Fisher information {:.6}",
            model.token(),
            info[(0, 0)]
        );
    }

    // The standard normal density integrates to one.
    let mass = integrate_real_line(|x| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt(), 0.0, 1.0, 1e-12)?;
    println!("∫ N(0,1) = {mass:.15}");
    Ok(())
}
