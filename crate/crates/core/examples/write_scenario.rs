//! Writes a synthetic scenario (`scenario.toml` plus data files) into a
//! directory.
//!
//! ```text
//! cargo run -p tvws-core --example write_scenario -- DIR [standard|single|ring|empty] [SEED]
//! ```

use std::process::ExitCode;

use tvws_core::scenario::{generate_synthetic, standard_scenario, SyntheticKind, SyntheticParams};
use tvws_core::Scenario;

fn build(kind: &str, seed: u64) -> tvws_core::Result<Scenario> {
    let defaults = SyntheticParams::default();
    match kind {
        "standard" => standard_scenario(seed),
        "single" => generate_synthetic(SyntheticKind::SingleTower, &defaults, seed),
        "ring" => generate_synthetic(SyntheticKind::Ring, &defaults, seed),
        "empty" => {
            let mut parts = generate_synthetic(SyntheticKind::SingleTower, &defaults, seed)?.into_parts();
            parts.registry.clear();
            Scenario::new(parts)
        }
        other => Err(tvws_core::Error::Format(format!("unknown scenario kind `{other}`"))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: write_scenario DIR [standard|single|ring|empty] [SEED]");
        return ExitCode::from(2);
    };
    let kind = args.get(1).map_or("standard", String::as_str);
    let seed = match args.get(2).map(|s| s.parse::<u64>()).transpose() {
        Ok(s) => s.unwrap_or(1),
        Err(e) => {
            eprintln!("bad seed: {e}");
            return ExitCode::from(2);
        }
    };
    let result = std::fs::create_dir_all(dir)
        .map_err(tvws_core::Error::from)
        .and_then(|()| build(kind, seed))
        .and_then(|s| s.save(std::path::Path::new(dir).join("scenario.toml")));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
