//! Least-squares refinement from a rough Prony estimate, with the residual trace.

use confluent_prony::experiment::match_parameters;
use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::solvers::{lsq_refine, prony_solve, SolverOptions};
use confluent_prony::ConfluentModel;

fn main() -> confluent_prony::Result<()> {
    let truth = ConfluentModel::from_real(&[0.2, 0.7], &[&[0.5, -0.8], &[0.9, 0.4]])?;
    let c = truth.num_magnitudes();
    let opts = SolverOptions::default();
    let m = perturb(&prony_map(&truth, 2 * c), &NoiseSpec::new(1e-10, 9))?;

    let start = prony_solve(&m, truth.multiplicities(), &opts)?;
    let refined = lsq_refine(&m, &start.recovered, &opts)?;

    let before = match_parameters(&truth, &start.recovered)?;
    let after = match_parameters(&truth, &refined.recovered)?;
    println!("{:<8} {:>10} {:>10}", "param", "prony", "lsq");
    for ((id, b), (_, a)) in before.iter().zip(after.iter()) {
        println!("{id:<8} {b:>10.2e} {a:>10.2e}");
    }
    println!("residual trace:");
    for (it, r) in refined.residual_trace.iter().enumerate() {
        println!("  {it:>3} {r:.3e}");
    }
    Ok(())
}
