//! Weighted LLN and CLT checks, and the variance of the weighted MLE against the plain MLE.

use divlab::clt::{self, run_over_data, Check, Gates, MCConfig};

fn main() -> anyhow::Result<()> {
    for (check, reps) in [(Check::Lln, 2000), (Check::Clt, 2000), (Check::EstimatorCompare, 200)] {
        let cfg = MCConfig {
            model: "gauss_loc".into(),
            law: "exp1".into(),
            theta_t: vec![0.0],
            n: 200,
            reps,
            seed: 5,
            check,
            statistic: "identity".into(),
            gamma: None,
            gates: Gates::default(),
        };
        let r = clt::run(&cfg)?;
        if check == Check::Clt {
            // The same check on fresh data draws.
            let passed = run_over_data(&cfg, 5)?.iter().filter(|r| r.pass).count();
            println!("Clt over 5 data draws: {passed} passed");
        }
        println!("{check:?}: pass {}", r.pass);
        for g in &r.gates {
            println!("  {:<40} {:>9.5} in [{:.5}, {:.5}]", g.name, g.value, g.lo, g.hi);
        }
    }
    Ok(())
}
