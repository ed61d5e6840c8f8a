//! Approximate Prony method on simple nodes with an over-estimated node count.

use confluent_prony::forward::{perturb, prony_map, NoiseSpec};
use confluent_prony::solvers::{apm_nodes, apm_solve, SolverOptions};
use confluent_prony::ConfluentModel;
use num_complex::Complex64;

fn main() -> confluent_prony::Result<()> {
    let nodes = [0.9, 0.3, -0.5];
    let truth = ConfluentModel::new(
        nodes.iter().map(|&x| Complex64::from_polar(1.0, x)).collect(),
        vec![1; 3],
        vec![vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(0.6, 0.2)], vec![Complex64::new(-0.8, 0.0)]],
    )?;
    let m = perturb(&prony_map(&truth, 21), &NoiseSpec::new(1e-8, 3))?;

    // five candidate roots for three true nodes
    let mut roots = apm_nodes(&m, 5)?;
    roots.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    for r in &roots {
        println!("root |z| = {:.6}  arg = {:+.6}", r.norm(), r.arg());
    }

    let report = apm_solve(&m, &[1, 1, 1], &SolverOptions::default())?;
    for (node, a) in report.recovered.nodes().iter().zip(report.recovered.magnitudes()) {
        println!("node arg {:+.9}  magnitude {:.6}", node.arg(), a[0]);
    }
    Ok(())
}
