use noisesync::config::{preset, ExperimentConfig, NoiseMethod, WindowKind, PRESET_NAMES};
use noisesync::error::Error;

#[test]
fn presets_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, cfg.to_toml_string()).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap(), cfg, "{name}");
    }
}

#[test]
fn presets_encode_the_reference_runs() {
    let p = preset("paper-5q").unwrap();
    assert_eq!((p.chain.n_sites, p.chain.noise_sites.clone(), p.chain.gamma), (5, vec![3], 1.3));
    assert_eq!(p.noise.method, NoiseMethod::ExactLindblad);
    assert_eq!(p.analysis.pearson_window, WindowKind::Cumulative);
    assert_eq!(preset("paper-5q-trajectories").unwrap().noise.method, NoiseMethod::Trajectories);
    assert_eq!(preset("paper-11q-3ex").unwrap().initial.excitations, vec![1, 5, 7]);
    assert_eq!(preset("paper-8q").unwrap().analysis.pearson_pairs, vec![[1, 8], [2, 7]]);
}

#[test]
fn every_field_can_be_set() {
    let text = r#"
name = "full"
seed = 17
chain.n_sites = 8
chain.coupling = 2.0
chain.base_frequency = 0.5
chain.detuning = 0.25
chain.noise_sites = [3, 6]
chain.gamma = 0.7
initial.excitations = [1]
noise.method = "trajectories"
noise.trajectories = 64
noise.pulse_width = 0.1
noise.spectrum = "zero"
time.t_final = 12.0
time.dt_sample = 0.05
time.probe_time = 6.0
time.steady_probe_time = 4.0
time.integrator_step = 0.001
analysis.pearson_pairs = [[1, 8], [2, 7]]
analysis.pearson_window = "trailing"
analysis.window_start = 0.0
analysis.window_width = 3.0
analysis.fit_site = 2
analysis.fit_start = 6.0
analysis.fit_end = 12.0
sweep.gamma_min = 0.5
sweep.gamma_max = 1.5
sweep.gamma_points = 3
sweep.delta_min = -1.0
sweep.delta_max = 1.0
sweep.delta_points = 5
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.seed, 17);
    assert_eq!(cfg.time.integrator_step, Some(0.001));
    assert_eq!(cfg.gamma_axis(), vec![0.5, 1.0, 1.5]);
    assert_eq!(cfg.delta_axis(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    let spec = cfg.chain_spec().unwrap();
    assert_eq!(spec.noise_strength(), 1.4);
    assert_eq!(cfg.noise_specs(12.0).len(), 2);
}

#[test]
fn bad_values_name_their_key() {
    for (text, key) in [
        ("chain.gamma = -1.0", "chain.gamma"),
        ("chain.noise_sites = [9]", "chain.noise_sites"),
        ("noise.trajectories = 0", "noise.trajectories"),
        ("noise.pulse_width = 0.0", "noise.pulse_width"),
        ("time.dt_sample = -0.1", "time.dt_sample"),
        ("time.integrator_step = 0.0", "time.integrator_step"),
        ("analysis.fit_site = 6", "analysis.fit_site"),
        ("sweep.gamma_points = 0", "sweep.gamma_points"),
    ] {
        let err = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains(key), "{text}: {err}");
    }
    let err = ExperimentConfig::from_toml_str("noise.method = \"magic\"").unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");
    let err = ExperimentConfig::from_toml_str("chain.gamma = 1.0\nchain.gamma = 2.0").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}
