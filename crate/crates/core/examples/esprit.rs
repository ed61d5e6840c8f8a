//! ESPRIT node recovery, comparing Hankel shapes as the number of moments grows.

use confluent_prony::experiment::match_parameters;
use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::solvers::{esprit_solve, EspritShape, SolverOptions};
use confluent_prony::ConfluentModel;

fn main() -> confluent_prony::Result<()> {
    let truth = ConfluentModel::from_real(&[0.3, 0.8], &[&[0.6, 1.0], &[-0.7, 0.5]])?;
    let shapes = [
        ("auto", EspritShape::Auto),
        ("rows=2cols", EspritShape::RowsTwiceCols),
        ("cols=2rows", EspritShape::ColsTwiceRows),
    ];
    for s in [8, 16, 32] {
        let m = perturb(&prony_map(&truth, s), &NoiseSpec::new(1e-9, 5))?;
        for (name, shape) in shapes {
            let opts = SolverOptions { esprit_shape: shape, ..SolverOptions::default() };
            let report = esprit_solve(&m, truth.multiplicities(), &opts)?;
            let err = match_parameters(&truth, &report.recovered)?;
            let worst_node = err.iter().filter(|(id, _)| id.is_node()).map(|(_, e)| e).fold(0.0, f64::max);
            println!(
                "S={s:>2} {name:<11} {}x{} Hankel, worst node error {worst_node:.2e}",
                report.diagnostics["hankel_rows"], report.diagnostics["hankel_cols"]
            );
        }
    }
    Ok(())
}
