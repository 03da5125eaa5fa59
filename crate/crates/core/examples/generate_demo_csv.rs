//! Writes a synthetic confounded panel to CSV so the CLI can be tried
//! without real data.
//!
//! ```text
//! cargo run -p arcadia-core --example generate_demo_csv -- demo.csv [rows] [seed]
//! ```

use arcadia_core::synth;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "demo.csv".to_string());
    let rows: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(7);

    let ds = synth::confounder_panel(rows, seed, 1.0);
    std::fs::write(&path, synth::to_csv(&ds)).expect("write csv");

    println!("wrote {path} ({rows} rows, {} columns)", ds.n_cols());
    println!("treatment: {}", ds.treatment);
    println!("outcome:   {}", ds.outcome);
    println!();
    println!("try:");
    println!(
        "  arcadia --data {path} --treatment {} --outcome {} --proposer heuristic --out-dir run_out",
        ds.treatment, ds.outcome
    );
}
