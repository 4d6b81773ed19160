//! Cressie–Read divergences, their conjugates, and divergences between finite measures.

use divlab::divergence::{divergence_finite, DivergenceSpec, FiniteMeasure};

fn main() -> anyhow::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12}", "gamma", "phi(0.5)", "phi(2)", "phi~(2)");
    for gamma in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let spec = DivergenceSpec::cressie_read(gamma);
        let conj = spec.conjugate();
        println!("{gamma:>6} {:>12.6} {:>12.6} {:>12.6}", spec.phi(0.5), spec.phi(2.0), conj.phi(2.0));
    }

    // φ(Q, P) = φ̃(P, Q) for any pair of finite measures.
    let p = FiniteMeasure::from_masses(&[0.2, 0.5, 0.3])?;
    let q = FiniteMeasure::from_masses(&[0.4, 0.4, 0.2])?;
    let kl = DivergenceSpec::kullback_leibler();
    println!("KL(Q, P)        = {:.10}", divergence_finite(&kl, &q, &p)?);
    println!("conj KL(P, Q)   = {:.10}", divergence_finite(&kl.conjugate(), &p, &q)?);
    Ok(())
}
