//! Weight laws: cumulant generating functions, Chernoff transforms and the divergences they induce.

use divlab::weights::{induced_divergence, sample_weights, WeightLaw};

fn main() -> anyhow::Result<()> {
    let laws = [
        WeightLaw::poisson_one(),
        WeightLaw::exponential_one(),
        WeightLaw::normal_one_one(),
        WeightLaw::two_point(0.5)?,
    ];
    for law in &laws {
        let (lo, hi) = law.mean_range();
        print!("{:<9} mean range [{lo}, {hi}]  chernoff:", law.token());
        for x in [0.5, 1.0, 2.0] {
            print!(" {:.6}", law.chernoff(x));
        }
        let w = sample_weights(law, 10_000, 7)?;
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        println!("  sample mean {mean:.4}");
    }

    // Poisson(1) weights induce Kullback–Leibler: x log x − x + 1.
    let spec = induced_divergence(&WeightLaw::poisson_one());
    for x in [0.5, 2.0] {
        println!("induced φ({x}) = {:.10}, closed form {:.10}", spec.phi(x), x * f64::ln(x) - x + 1.0);
    }
    Ok(())
}
