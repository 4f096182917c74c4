//! Drives a scenario through the same entry point as the binary, from a config string.

use mixtype::cli::{self, RunConfig};

const CONFIG: &str = "
[run]
scenario = hyperbolic-only

[grid]
h = 0.015625

[data]
kind = manufactured
manufactured = cubic
";

fn main() -> mixtype::Result<()> {
    let mut cfg = RunConfig::parse(CONFIG)?;
    cfg.out = std::env::temp_dir().join("mixtype-cli-config");
    let (report, err) = cli::run(&cfg)?;
    if let Some(e) = err {
        println!("scenario failed: {e}");
    }
    for a in &report.assertions {
        println!("{:<22} {:<4} {:.3e} (bound {:.1e})", a.name, if a.pass { "pass" } else { "FAIL" }, a.value, a.bound);
    }
    println!("artifacts in {}: {}", cfg.out.display(), report.artifacts.join(", "));
    Ok(())
}
