//! Moments of a confluent model, clean and with bounded noise.

use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::ConfluentModel;

fn main() -> confluent_prony::Result<()> {
    // one double node at 0.5, one simple node at -0.3
    let model = ConfluentModel::from_real(&[0.5, -0.3], &[&[1.0, 0.5], &[0.8]])?;
    let clean = prony_map(&model, 8);
    let noisy = perturb(&clean, &NoiseSpec::new(1e-6, 42))?;

    println!("{:>2} {:>24} {:>24}", "k", "m_k", "m_k + noise");
    for (k, (m, n)) in clean.values().iter().zip(noisy.values()).enumerate() {
        println!("{k:>2} {:>24.16} {:>24.16}", m.re, n.re);
    }
    Ok(())
}
