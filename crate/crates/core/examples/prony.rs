//! Classical Prony recovery of a confluent model from 2C moments.

use confluent_prony::experiment::match_parameters;
use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::solvers::{prony_solve, SolverOptions};
use confluent_prony::ConfluentModel;

fn main() -> confluent_prony::Result<()> {
    let truth = ConfluentModel::from_real(&[0.2, 0.7], &[&[0.5, -0.8], &[0.9, 0.4]])?;
    let c = truth.num_magnitudes();

    for epsilon in [0.0, 1e-12, 1e-9] {
        let m = perturb(&prony_map(&truth, 2 * c), &NoiseSpec::new(epsilon, 1))?;
        let report = prony_solve(&m, truth.multiplicities(), &SolverOptions::default())?;
        let errors = match_parameters(&truth, &report.recovered)?;
        println!("epsilon = {epsilon:e}");
        for (id, e) in errors.iter() {
            println!("  {id:<8} {e:.2e}");
        }
    }
    Ok(())
}
