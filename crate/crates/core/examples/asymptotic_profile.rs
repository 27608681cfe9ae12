//! Run, then compute the asymptotic density profile and its W1 error bound.

use vnslab::cli_io::{parse_config, profile_command, run_command};

fn main() -> vnslab::Result<()> {
    let dir = std::env::temp_dir().join(format!("vnslab-profile-{}", std::process::id()));
    let cfg = parse_config(
        "grid.n = 16\nparticles.nv = 6\ninit.velocity.mean = 0.2,0.1\ninit.spatial = cosine\ninit.spatial.amplitude = 0.5\ntime.t_final = 4\nio.snapshot_stride = 10\n",
    )?;
    run_command(&cfg, &dir.join("run"))?;
    let summary = profile_command(&dir.join("run"), &dir.join("profile"))?;
    print!("{}", summary.to_text());
    println!("files written to {}", dir.display());
    Ok(())
}
