//! A reproducible noise-level sweep over all three methods, printed as the
//! CSV table followed by its slope summary.

use confluent_prony::experiment::{log_grid, run_sweep, SweepKind, SweepSpec};

fn main() -> confluent_prony::Result<()> {
    let mut spec = SweepSpec::new(SweepKind::Epsilon, log_grid(1e-12, 1e-6, 4)?, 11);
    spec.trials = 5;
    let table = run_sweep(&spec)?;

    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    for line in String::from_utf8_lossy(&csv).lines().take(8) {
        println!("{line}");
    }
    println!("... {} rows", table.rows.len());

    let summary = table.summary();
    for (method, slopes) in &summary.slopes {
        let line: Vec<String> = slopes.iter().map(|(p, s)| format!("{p}={s:.2}")).collect();
        println!("{method:<7} {}", line.join(" "));
    }
    Ok(())
}
