//! Configuration parsing with aggregated errors and a bit-exact checkpoint round trip.

use vnslab::cli_io::{parse_config, read_checkpoint, write_checkpoint, Checkpoint};
use vnslab::coupling::run;

fn main() -> vnslab::Result<()> {
    match parse_config("grid.d = 5\nparticles.q = 3\ntime.dt = 0\ngrid.n = 8\ngrid.n = 16\n") {
        Err(err) => println!("rejected as expected (exit code {}):\n{err}\n", err.exit_code()),
        Ok(_) => unreachable!("the configuration above is invalid"),
    }

    let cfg = parse_config("grid.n = 8\nparticles.nv = 4\ntime.t_final = 0.5\n")?;
    let mut state = cfg.initial_state()?;
    let records = run(&mut state, &cfg.run_plan(), |_, _| Ok(()))?;
    let ckpt = Checkpoint { config_text: cfg.to_text(), state, records };
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &ckpt)?;
    let back = read_checkpoint(&mut bytes.as_slice())?;
    println!("checkpoint of {} bytes restores identically: {}", bytes.len(), back == ckpt);
    println!("effective configuration:\n{}", cfg.to_text());
    Ok(())
}
