//! Parses a scenario document in memory and runs it through the same pipeline as the CLI.

use backscatter_lab::lab::{parse_scenario, run_scenario};

fn main() -> backscatter_lab::Result<()> {
    let doc = r#"{
        "kind": "energy",
        "potential": { "variant": "exponential-bump", "amplitude": 0.7 }
    }"#;
    let s = parse_scenario(doc)?;
    let out = std::env::temp_dir().join("backscatter-lab-example");
    let summary = run_scenario(&s, &out, 7)?;
    for c in &summary.checks {
        println!("{:<16} {:.3e} pass = {}", c.name, c.value, c.pass);
    }
    println!("wrote {:?} to {}", summary.artifacts, out.display());
    Ok(())
}
