//! Deterministic JSON and CSV reports, written atomically.

use divlab::models::ParametricModel;
use divlab::report::{reals_to_csv, to_json, write_atomic};
use divlab::sanov::sanov_rate_convergence;

fn main() -> anyhow::Result<()> {
    let model = ParametricModel::simplex(2)?;
    let table = sanov_rate_convergence(&model, &[0.3], &[0.5], &[50, 200])?;
    let json = to_json(&table)?;
    print!("{json}");

    let rows: Vec<Vec<f64>> = table.rows.iter().map(|r| vec![r.n as f64, r.rate, r.gap]).collect();
    let csv = reals_to_csv(&["n", "rate", "gap"], &rows)?;
    print!("{csv}");

    let dir = std::env::temp_dir().join("divlab-report-example");
    std::fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("sanov.json"), &json)?;
    println!("wrote {}", dir.join("sanov.json").display());
    Ok(())
}
