//! Conditional large deviations of the weighted empirical measure, by Monte Carlo.

use divlab::models::ParametricModel;
use divlab::sanov::{conditional_ldp_mc, shrink_epsilon_limit, LdpEstimator, LdpOptions, Partition};
use divlab::weights::{induced_divergence, WeightLaw};

fn main() -> anyhow::Result<()> {
    let model = ParametricModel::simplex(2)?;
    let part = Partition::identity(2)?;
    let law = WeightLaw::poisson_one();
    for estimator in [LdpEstimator::Naive, LdpEstimator::Tilted] {
        let opts = LdpOptions { estimator, ..LdpOptions::default() };
        for n in [50, 200] {
            let r = conditional_ldp_mc(&model, &[0.3], &[0.5], &law, &part, 0.05, n, 20_000, 2024, &opts)?;
            println!(
                "{estimator:?} n = {n:>3}: rate {:.5} [{:.5}, {:.5}], target {:.5}, hits {}",
                r.rate_estimate, r.ci_lo, r.ci_hi, r.rate_target, r.hits
            );
        }
    }

    // Sensitivity to the neighbourhood radius.
    for eps in [0.02, 0.05, 0.1] {
        let r = conditional_ldp_mc(&model, &[0.3], &[0.5], &law, &part, eps, 200, 20_000, 2024, &LdpOptions::default())?;
        println!("ε = {eps:<4}: rate {:.5}, target {:.5}", r.rate_estimate, r.rate_target);
    }

    // As the neighbourhood shrinks the infimum tends to the divergence itself.
    let spec = induced_divergence(&law);
    let t = shrink_epsilon_limit(&spec, &model, &[0.5], &[0.3], &part, &[0.1, 0.01, 0.001, 1e-6])?;
    for r in &t.rows {
        println!("ε = {:>6}: {:.8}", r.epsilon, r.value);
    }
    println!("limit {:.8}, converged {}", t.limit, t.converged);
    Ok(())
}
