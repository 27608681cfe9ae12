use vnslab::cli_io::*;
use vnslab::coupling::{run, step};
use vnslab::Error;

const SMALL: &str = "
grid.n = 8
particles.nv = 4
init.fluid = random
init.fluid.kmax = 2
init.fluid.h_half = 0.05
time.dt = 0.01
time.t_final = 0.2
io.stride = 5
io.snapshot_stride = 5
io.svg = true
";

fn config_errors(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(Error::Config(list)) => list,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn empty_config_materializes_every_default() {
    let cfg = parse_config("# nothing set\n").unwrap();
    assert_eq!(cfg.grid.d, 2);
    assert_eq!(cfg.grid.n, 16);
    let text = cfg.to_text();
    for key in ["grid.d", "particles.q", "init.seed", "time.scheme", "monitor.delta", "io.stride", "profile.h"] {
        assert!(text.contains(&format!("{key} = ")), "missing {key}");
    }
}

#[test]
fn effective_config_round_trips() {
    let cfg =
        parse_config("grid.d = 3\ntime.scheme = strang\nparticles.v_max = 2.5\ninit.velocity.mean = 0.1,0,-0.2\n")
            .unwrap();
    let again = parse_config(&cfg.to_text()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.to_text(), cfg.to_text());
}

#[test]
fn weak_decay_exponent_is_rejected_citing_the_hypothesis() {
    let errors = config_errors("particles.q = 3\n");
    assert!(errors.iter().any(|e| e.contains("particles.q = 3") && e.contains("q > 4")), "{errors:?}");
}

#[test]
fn duplicate_key_names_both_lines() {
    let errors = config_errors("grid.n = 16\n# comment\ngrid.n = 32\n");
    assert_eq!(errors.len(), 1);
    assert!(errors[0].contains("line 3") && errors[0].contains("line 1") && errors[0].contains("grid.n"), "{errors:?}");
}

#[test]
fn all_violations_are_reported_together() {
    let errors =
        config_errors("grid.d = 4\nmonitor.delta = 0.5\ntime.dt = -1\nbogus.key = 1\ngrid.n = many\nno equals sign\n");
    assert!(errors.iter().any(|e| e.contains("grid.d = 4")));
    assert!(errors.iter().any(|e| e.contains("monitor.delta")));
    assert!(errors.iter().any(|e| e.contains("time.dt")));
    assert!(errors.iter().any(|e| e.contains("unknown key bogus.key")));
    assert!(errors.iter().any(|e| e.contains("grid.n = 'many'")));
    assert!(errors.iter().any(|e| e.contains("line 6")));
    assert_eq!(Error::Config(errors).exit_code(), 2);
}

#[test]
fn polytail_slower_than_q_has_infinite_nq() {
    let errors = config_errors("init.velocity = polytail\ninit.velocity.q = 5\nparticles.q = 6\n");
    assert!(errors.iter().any(|e| e.contains("N_q(f0) is infinite")), "{errors:?}");
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let cfg = parse_config(SMALL).unwrap();
    let mut state = cfg.initial_state().unwrap();
    let plan = cfg.run_plan();
    let records = run(&mut state, &plan, |_, _| Ok(())).unwrap();
    let ckpt = Checkpoint { config_text: cfg.to_text(), state, records };
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &ckpt).unwrap();
    let back = read_checkpoint(&mut buf.as_slice()).unwrap();
    assert_eq!(back, ckpt);
    let mut again = Vec::new();
    write_checkpoint(&mut again, &back).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn checkpoint_version_bump_is_refused() {
    let cfg = parse_config(SMALL).unwrap();
    let ckpt = Checkpoint { config_text: cfg.to_text(), state: cfg.initial_state().unwrap(), records: vec![] };
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &ckpt).unwrap();
    buf[4..8].copy_from_slice(&(CHECKPOINT_FORMAT_VERSION + 1).to_le_bytes());
    let err = read_checkpoint(&mut buf.as_slice()).unwrap_err();
    assert!(matches!(err, Error::VersionMismatch { .. }));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn empty_series_is_header_only() {
    let text = series_csv(&[], 2);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("t,energy,"));
    let (d, records) = read_series(&text).unwrap();
    assert_eq!((d, records.len()), (2, 0));
}

#[test]
fn series_round_trips_exactly() {
    let cfg = parse_config(SMALL).unwrap();
    let mut state = cfg.initial_state().unwrap();
    let records = run(&mut state, &cfg.run_plan(), |_, _| Ok(())).unwrap();
    let back = parse_series(&series_csv(&records, 2), 2).unwrap();
    assert_eq!(back, records);
}

#[test]
fn resumed_run_matches_continuous_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL).unwrap();
    let first = run_command(&cfg, &dir.path().join("first")).unwrap();
    assert!((first.state.t - 0.2).abs() < 1e-12);
    let resumed = resume_command(&dir.path().join("first"), &dir.path().join("resumed"), Some(0.4)).unwrap();

    let mut long = cfg.clone();
    long.time.t_final = 0.4;
    let continuous = run_command(&long, &dir.path().join("continuous")).unwrap();
    assert_eq!(resumed.records.len(), continuous.records.len());
    for (a, b) in resumed.records.iter().zip(&continuous.records) {
        let (ra, rb) = (a.csv_row(), b.csv_row());
        for (x, y) in ra.split(',').zip(rb.split(',')) {
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }
    let series_a = std::fs::read_to_string(dir.path().join("resumed").join(SERIES_FILE)).unwrap();
    let series_b = std::fs::read_to_string(dir.path().join("continuous").join(SERIES_FILE)).unwrap();
    assert_eq!(series_a, series_b);
}

#[test]
fn run_directory_has_the_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_command(&parse_config(SMALL).unwrap(), &out).unwrap();
    for name in
        [CONFIG_FILE, SERIES_FILE, METADATA_FILE, CHECKPOINT_FILE, "energy.svg", "modulated_energy.svg", "drifts.svg"]
    {
        assert!(out.join(name).exists(), "missing {name}");
    }
    assert!(out.join(SNAPSHOT_DIR).join("u_00000000.bin").exists());
    assert!(out.join(SNAPSHOT_DIR).join("u_00000020.bin").exists());
    let reparsed = parse_config(&std::fs::read_to_string(out.join(CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(reparsed.io.out, out);
    let meta = std::fs::read_to_string(out.join(METADATA_FILE)).unwrap();
    assert!(meta.contains("threads = ") && meta.contains("n_q = "));
}

#[test]
fn diag_summarizes_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let outcome = run_command(&parse_config(SMALL).unwrap(), &out).unwrap();
    let summary = diag_command(&out, &dir.path().join("diag")).unwrap();
    assert_eq!(summary.samples, outcome.records.len());
    assert!(summary.max_mass_drift < 1e-12);
    assert!(dir.path().join("diag").join(DIAG_FILE).exists());
}

#[test]
fn profile_of_a_short_run_preserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = format!("{SMALL}time.t_final = 1\nprofile.velocity_nodes = 4\n").replace("time.t_final = 0.2\n", "");
    run_command(&parse_config(&text).unwrap(), &out).unwrap();
    let summary = profile_command(&out, &dir.path().join("profile")).unwrap();
    assert!((summary.mass_pushforward - 1.0).abs() < 1e-12);
    assert!(summary.contraction < 1.0);
    assert!(summary.picard_residual <= 1e-10);
    assert!(summary.max_d_x <= 2.0 && summary.max_scaled_d_v <= 4.0);
    assert!(summary.w1_final.is_finite() && summary.w1_bound > 0.0);
    assert!(dir.path().join("profile").join("rho_inf_pushforward.csv").exists());
}

#[test]
fn oversized_step_is_a_numerical_error() {
    let cfg = parse_config(SMALL).unwrap();
    let mut state = cfg.initial_state().unwrap();
    let err = step(&mut state, 10.0, cfg.time.scheme, &cfg.monitor).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn charts_are_well_formed_svg() {
    let svg = line_chart("demo <chart>", &[0.0, 1.0, 2.0], &[Curve::new("a", vec![1.0, 0.1, 0.01])], true);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("demo &lt;chart&gt;"));
    assert!(svg.contains("<polyline"));
}
