//! Bahadur slopes of the minimum-divergence test against generic functionals.

use divlab::bahadur::{efficiency_compare, empirical_slope_trend, slope_min_divergence, Functional};
use divlab::models::ParametricModel;
use divlab::weights::WeightLaw;

fn main() -> anyhow::Result<()> {
    let gauss = ParametricModel::gauss_location();
    for law in [WeightLaw::poisson_one(), WeightLaw::normal_one_one()] {
        let s = slope_min_divergence(&gauss, &law, &[0.0], &[1.0], 1e-10)?;
        println!("gauss_loc 0 vs 1, {law}: slope {:.8}", s.slope);
    }

    let model = ParametricModel::simplex(2)?;
    let law = WeightLaw::poisson_one();
    for psi in ["cell_mass:0", "divergence", "zero"] {
        let c = efficiency_compare(&model, &law, &psi.parse::<Functional>()?, &[0.5], &[0.7])?;
        println!(
            "{:<12} generic {:.6} vs min-divergence {:.6}, min-divergence efficient: {}",
            c.functional, c.slope_generic, c.slope_min_divergence, c.min_divergence_efficient
        );
    }

    let trend = empirical_slope_trend(&model, &law, &[0.5], &[0.7], &[50, 100, 200], 5000, 3)?;
    for r in &trend.rows {
        println!("n = {:>3}: tail rate {:.5} (target {:.5}), hits {}", r.n, r.rate_estimate, r.rate_target, r.hits);
    }
    Ok(())
}
