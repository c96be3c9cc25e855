use std::path::PathBuf;

use coaxial_core::control::ControlMode;
use coaxial_core::scenarios::{load_config, parse_config, ConfigError, TrajectorySpec};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn every_bundled_config_loads() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn figure8_segments_use_mode_specific_limits() {
    let text = std::fs::read_to_string(configs_dir().join("figure8_bimodal.toml")).unwrap();
    let raw: toml::Table = toml::from_str(&text).unwrap();
    let segments = raw["scenario"]["figure8"]["segments"].as_array().unwrap();
    let limits: Vec<_> = segments
        .iter()
        .map(|s| (s["mode"].as_str().unwrap(), s["v_max"].as_float().unwrap(), s["a_max"].as_float().unwrap()))
        .collect();
    assert_eq!(limits, [("fully_actuated", 1.5, 0.7), ("underactuated", 3.0, 3.0)]);

    let cfg = load_config(&configs_dir().join("figure8_bimodal.toml")).unwrap();
    assert!(matches!(cfg.trajectory, TrajectorySpec::Figure8(_)));
    let entries = cfg.schedule.entries();
    assert_eq!(entries[0], (0.0, ControlMode::FullyActuated));
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[1].1, ControlMode::Underactuated);
}

#[test]
fn invalid_files_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(load_config(&empty).unwrap_err(), ConfigError::Missing("scenario.kind".into()));

    let err = parse_config("[vehicle]\nmass = -0.5\n[scenario]\nkind = \"hover\"").unwrap_err();
    assert!(err.to_string().contains("vehicle.mass"), "{err}");
}
