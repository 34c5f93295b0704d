// Full pipeline from a TOML configuration into a temporary directory.

use entire_fronts::config::parse_config;
use entire_fronts::pipeline::{run_pipeline, RunManifest};
use entire_fronts::Result;

const CONFIG: &str = r#"
seed = 11
[model]
kind = "buffered"
d1 = 1.0
d2 = 1.0
k1 = 1.0
k2 = 0.5
b = 1.0
[checker]
samples = 2000
[entire]
waves = [{ c = 2.0 }, { c = 2.0, nu = -1 }]
chi = [1, 1, 0]
n_schedule = [2.0, 4.0]
t_end = 3.0
"#;

pub fn run_example() -> Result<RunManifest> {
    let mut cfg = parse_config(CONFIG)?;
    let dir = std::env::temp_dir().join(format!("entire-fronts-example-{}", std::process::id()));
    cfg.out = Some(dir.display().to_string());
    let manifest = run_pipeline(cfg)?;
    for s in &manifest.stages {
        println!("{:<20} {:?} {:.2}s {}", s.name, s.verdict, s.seconds, s.detail);
    }
    for f in &manifest.files {
        println!("{}  {}", &f.sha256[..16], f.path);
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(manifest)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
