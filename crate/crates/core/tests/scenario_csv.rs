//! Scenario runs written to disk and read back.

use std::collections::HashMap;

use qrcost::channel::ChannelModel;
use qrcost::cost::cost_coefficient;
use qrcost::scenario::{run_scenario, RunConfig, CSV_HEADER};
use qrcost::{Generation, PurificationSchedule, RepeaterConfig};

const SMALL: &str = r#"
name = "small"
seed = 11

[fixed]
total_distance_km = 2000.0
gate_error = 1e-3

[sweep]
axis = "coupling_efficiency"
values = [0.3, 0.6, 0.9]

[[series]]
generations = ["g1", "g2", "g3"]
channels = ["fiber", "vbg"]

[search.g1]
max_nesting = 4
max_purification_rounds = 1

[monte_carlo]
trials = 1000
max_nesting = 4
"#;

fn rebuild(rec: &HashMap<&str, &str>) -> RepeaterConfig {
    let num = |k: &str| rec[k].parse::<f64>().unwrap();
    let generation: Generation = rec["generation"].parse().unwrap();
    let channel = ChannelModel::preset(rec["medium"], num("coupling_efficiency")).unwrap();
    let mut c = RepeaterConfig::new(generation, num("total_distance_km"), channel)
        .with_nesting(rec["nesting_level"].parse().unwrap())
        .with_gate_error(num("gate_error"))
        .with_multiplexing(rec["memory_qubits_per_half_node"].parse().unwrap(), rec["attempts_per_round"].parse().unwrap());
    let schedule: PurificationSchedule = rec["purification_schedule"].parse().unwrap();
    c = c.with_schedule(schedule);
    if !rec["spacing_km"].is_empty() {
        c = c.with_spacing(num("spacing_km"));
    }
    c
}

#[test]
fn csv_rows_reproduce_their_cost() {
    let config = RunConfig::from_toml_str(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&config, dir.path()).unwrap();
    assert_eq!(out.rows.len(), 18);

    let mut reader = csv::Reader::from_path(&out.csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);

    let mut checked = 0;
    let mut mc_rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let rec: HashMap<&str, &str> = CSV_HEADER.iter().copied().zip(record.iter()).collect();
        assert_eq!(rec["scenario"], "small");
        mc_rows += usize::from(!rec["mc_trials"].is_empty());
        if rec["status"] != "ok" {
            assert_eq!(rec["cost_coefficient"], "inf");
            continue;
        }
        let want: f64 = rec["cost_coefficient"].parse().unwrap();
        let got = cost_coefficient(&rebuild(&rec)).unwrap().cost_coefficient;
        if want.is_infinite() {
            assert!(got.is_infinite());
        } else {
            assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        }
        checked += 1;
    }
    assert!(checked >= 12, "only {checked} viable rows");
    assert!(mc_rows > 0);
}

#[test]
fn output_directory_is_created() {
    let config = RunConfig::from_toml_str(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a").join("b");
    let out = run_scenario(&config, &nested).unwrap();
    assert!(out.csv_path.starts_with(&nested));
    assert!(out.summary.contains("g2"));
    let leftovers: Vec<_> = std::fs::read_dir(&nested)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".partial"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn builtin_scenarios_parse() {
    for (name, text) in qrcost::scenario::BUILTIN_SCENARIOS {
        let config = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(config.name, name);
        assert!(!config.tracks.is_empty());
        assert!(config.describe().contains(name));
    }
}
