//! Local accuracy bounds, the worst-case perturbation that attains them, and
//! how they scale with the highest coefficient.

use confluent_prony::stability::{accuracy_tightness_probe, local_accuracy};
use confluent_prony::ConfluentModel;
use num_complex::Complex64;

fn main() -> confluent_prony::Result<()> {
    let epsilon = 1e-10;
    let mut model = ConfluentModel::from_real(&[0.2, 0.7], &[&[0.5, 1.0], &[0.9, 0.4]])?;

    let bounds = local_accuracy(&model, epsilon)?;
    let probe = accuracy_tightness_probe(&model, epsilon)?;
    println!("{:<8} {:>10} {:>14}", "param", "ACC_LOC", "achieved/ACC");
    for ((id, acc), (_, ratio)) in bounds.per_parameter.iter().zip(probe.iter()) {
        println!("{id:<8} {acc:>10.3e} {ratio:>14.4}");
    }

    // node accuracy improves like 1/|a_{1,l-1}|
    println!("\n|a[1][1]|  ACC(xi[1])");
    for lead in [0.1, 1.0, 10.0, 100.0] {
        model.set_magnitude(0, 1, Complex64::new(lead, 0.0));
        let acc = local_accuracy(&model, epsilon)?;
        println!("{lead:>9}  {:.3e}", acc.per_parameter.values[2]);
    }
    Ok(())
}
