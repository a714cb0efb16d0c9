// Drive the command layer from a TOML config, as the binary does.

use bo_control::cli::{cmd_saturate, cmd_verify_limit, LimitArgs, RunConfig, SaturateArgs};

const CONFIG: &str = r#"
cutoff = 6
seed = 11

[integrator]
dt_max = 0.005
"#;

pub fn run_example() -> bo_control::Result<()> {
    let dir = std::env::temp_dir().join(format!("bo-control-example-{}", std::process::id()));
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.output_dir = dir.clone();
    println!("config hash {}", cfg.hash());

    let report = cmd_saturate(
        &cfg,
        &SaturateArgs {
            cutoff: None,
            j_max: 4,
        },
    )?;
    println!("saturate: {report}");
    let limit = LimitArgs {
        u0: "0".into(),
        eta: "sin x".into(),
        zeta: "cos x".into(),
        deltas: vec![0.2, 0.1, 0.05, 0.025],
    };
    let report = cmd_verify_limit(&cfg, &limit)?;
    println!("verify-limit: {report}");

    let mut files: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name())
        .collect();
    files.sort();
    println!("wrote {files:?} to {}", dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> bo_control::Result<()> {
    run_example()
}
