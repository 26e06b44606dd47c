//! Declarative run configurations, builtin scenarios and CSV reporting.
//!
//! A scenario is a TOML file describing one sweep axis, a list of series
//! (generations × channels × gate errors, optionally at their own
//! distance) and the search bounds handed to the optimizer. Every physical
//! quantity carries its unit in the key name (`_km`, `_s`). Unknown keys are
//! rejected.
//!
//! ```toml
//! name = "example"
//! seed = 7
//!
//! [fixed]
//! total_distance_km = 1000.0
//!
//! [sweep]
//! axis = "coupling_efficiency"
//! values = [0.5, 0.9]
//!
//! [[series]]
//! generations = ["g1"]
//! channels = ["fiber", "vbg"]
//! gate_errors = [1e-3]
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{ChannelModel, Medium};
use crate::cost::{optimize, CostReport, Optimum, SearchSpace, SpacingGrid, SweepAxis};
use crate::error::{ModelError, Result};
use crate::generations::{
    simulate_chain_monte_carlo, CodeParams, Generation, MonteCarloReport, RepeaterConfig,
    DEFAULT_LOCAL_GATE_TIME_S,
};
use crate::protocols::PurificationProtocol;

/// Scenarios shipped with the crate, by name.
pub const BUILTIN_SCENARIOS: [(&str, &str); 3] = [
    ("fig3", include_str!("../scenarios/fig3.toml")),
    ("fig4", include_str!("../scenarios/fig4.toml")),
    ("fig5", include_str!("../scenarios/fig5.toml")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

fn builtin_names() -> String {
    BUILTIN_SCENARIOS
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(", ")
}

fn invalid(field: impl fmt::Display, message: impl fmt::Display) -> ModelError {
    ModelError::InvalidConfig(format!("{field}: {message}"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    description: Option<String>,
    seed: Option<u64>,
    top_k: Option<usize>,
    output: Option<RawOutput>,
    fixed: Option<RawFixed>,
    code: Option<RawCode>,
    channels: Option<BTreeMap<String, RawChannel>>,
    sweep: Option<RawSweep>,
    series: Option<Vec<RawSeries>>,
    search: Option<RawSearch>,
    monte_carlo: Option<RawMonteCarlo>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    file: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    total_distance_km: Option<f64>,
    gate_error: Option<f64>,
    coupling_efficiency: Option<f64>,
    local_gate_time_s: Option<f64>,
    link_fidelity: Option<f64>,
    measurement_efficiency: Option<f64>,
    protocol: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCode {
    block_size: Option<u32>,
    loss_threshold: Option<f64>,
    fault_threshold: Option<f64>,
    suppression_exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    preset: Option<String>,
    attenuation_length_km: Option<f64>,
    signal_speed_km_per_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<String>,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    generations: Option<Vec<String>>,
    channels: Option<Vec<String>>,
    gate_errors: Option<Vec<f64>>,
    total_distance_km: Option<f64>,
    coupling_efficiency: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    min_nesting: Option<u32>,
    max_nesting: Option<u32>,
    max_purification_rounds: Option<u32>,
    memory_qubits: Option<Vec<u32>>,
    attempts: Option<Vec<u32>>,
    spacing_km: Option<Vec<f64>>,
    spacing_points: Option<usize>,
    spacing_min_km: Option<f64>,
    spacing_max_attenuation_lengths: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    default: Option<RawBounds>,
    g1: Option<RawBounds>,
    g2: Option<RawBounds>,
    g3: Option<RawBounds>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    trials: Option<u64>,
    max_nesting: Option<u32>,
}

/// Optional Monte Carlo cross-check of first-generation minimisers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    /// Trials per row; 0 disables sampling.
    pub trials: u64,
    /// Rows whose minimiser nests deeper than this are not sampled.
    pub max_nesting: u32,
}

/// One curve of the sweep: a fixed generation, channel and gate error.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub channel_name: String,
    /// Everything except the axis variable and the searched parameters.
    pub template: RepeaterConfig,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub description: String,
    pub seed: u64,
    pub top_k: usize,
    pub output_file: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub channels: BTreeMap<String, ChannelModel>,
    pub tracks: Vec<Track>,
    /// Search bounds for G1, G2 and G3, in that order.
    pub search: [SearchSpace; 3],
    pub monte_carlo: MonteCarloSettings,
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(field, format!("must be finite and > 0 (got {value})")))
    }
}

fn in_unit(field: &str, value: f64, lo_open: bool, hi_open: bool) -> Result<f64> {
    let lo_ok = if lo_open { value > 0.0 } else { value >= 0.0 };
    let hi_ok = if hi_open { value < 1.0 } else { value <= 1.0 };
    if lo_ok && hi_ok {
        Ok(value)
    } else {
        let l = if lo_open { '(' } else { '[' };
        let h = if hi_open { ')' } else { ']' };
        Err(invalid(field, format!("must lie in {l}0, 1{h} (got {value})")))
    }
}

fn parse_generation(field: &str, s: &str) -> Result<Generation> {
    s.parse().map_err(|_| {
        invalid(field, format!("unknown generation `{s}`; accepted values: g1, g2, g3"))
    })
}

fn resolve_channels(
    raw: Option<BTreeMap<String, RawChannel>>,
    coupling: f64,
) -> Result<BTreeMap<String, ChannelModel>> {
    let mut channels = BTreeMap::new();
    channels.insert("fiber".to_string(), ChannelModel::fiber(coupling));
    channels.insert("vbg".to_string(), ChannelModel::vacuum_beam_guide(coupling));
    for (name, ch) in raw.unwrap_or_default() {
        let field = format!("channels.{name}");
        let base_name = ch.preset.clone().or_else(|| {
            ["fiber", "vbg"].contains(&name.as_str()).then(|| name.clone())
        });
        let mut model = match base_name.as_deref() {
            Some(preset) => ChannelModel::preset(preset, coupling).ok_or_else(|| {
                invalid(
                    format!("{field}.preset"),
                    format!("unknown preset `{preset}`; accepted values: fiber, vbg"),
                )
            })?,
            None => {
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| {
                        invalid(
                            format!("{field}.{key}"),
                            "required for a channel without preset (presets: fiber, vbg)",
                        )
                    })
                };
                ChannelModel {
                    medium: Medium::Custom,
                    attenuation_length_km: need(ch.attenuation_length_km, "attenuation_length_km")?,
                    coupling_efficiency: coupling,
                    signal_speed_km_per_s: need(ch.signal_speed_km_per_s, "signal_speed_km_per_s")?,
                }
            }
        };
        if let Some(v) = ch.attenuation_length_km {
            model.attenuation_length_km = positive(&format!("{field}.attenuation_length_km"), v)?;
        }
        if let Some(v) = ch.signal_speed_km_per_s {
            model.signal_speed_km_per_s = positive(&format!("{field}.signal_speed_km_per_s"), v)?;
        }
        positive(&format!("{field}.attenuation_length_km"), model.attenuation_length_km)?;
        positive(&format!("{field}.signal_speed_km_per_s"), model.signal_speed_km_per_s)?;
        channels.insert(name, model);
    }
    Ok(channels)
}

fn resolve_sweep(raw: Option<RawSweep>) -> Result<(SweepAxis, Vec<f64>)> {
    let raw = raw.ok_or_else(|| invalid("sweep", "missing section"))?;
    let axis_name = raw.axis.ok_or_else(|| {
        invalid(
            "sweep.axis",
            "missing; accepted values: coupling_efficiency, total_distance_km, gate_error",
        )
    })?;
    let axis: SweepAxis = axis_name.parse().map_err(|_| {
        invalid(
            "sweep.axis",
            format!(
                "unknown axis `{axis_name}`; accepted values: coupling_efficiency, \
                 total_distance_km, gate_error"
            ),
        )
    })?;
    let values = match (raw.values, raw.start, raw.stop, raw.step) {
        (Some(v), None, None, None) => v,
        (None, Some(start), Some(stop), Some(step)) => {
            if !(step > 0.0) || !(stop >= start) {
                return Err(invalid("sweep.step", "needs step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n)
                .map(|i| {
                    // twelve significant digits strip the accumulated round-off
                    let x = start + step * i as f64;
                    format!("{x:.11e}").parse::<f64>().expect("formatted float parses")
                })
                .collect()
        }
        _ => {
            return Err(invalid(
                "sweep.values",
                "give either `values` or all of `start`, `stop`, `step`",
            ))
        }
    };
    if values.is_empty() {
        return Err(invalid("sweep.values", "must not be empty"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("sweep.values", "must be sorted strictly ascending"));
    }
    for v in &values {
        match axis {
            SweepAxis::CouplingEfficiency => in_unit("sweep.values", *v, true, false)?,
            SweepAxis::TotalDistance => positive("sweep.values", *v)?,
            SweepAxis::GateError => in_unit("sweep.values", *v, false, true)?,
        };
    }
    Ok((axis, values))
}

fn resolve_bounds(field: &str, base: &SearchSpace, raw: Option<&RawBounds>) -> Result<SearchSpace> {
    let mut space = base.clone();
    let Some(raw) = raw else { return Ok(space) };
    if let Some(v) = raw.min_nesting {
        space.min_nesting = v;
    }
    if let Some(v) = raw.max_nesting {
        space.max_nesting = v;
    }
    if space.min_nesting > space.max_nesting {
        return Err(invalid(format!("{field}.min_nesting"), "must not exceed max_nesting"));
    }
    if space.max_nesting > 20 {
        return Err(invalid(format!("{field}.max_nesting"), "must be <= 20"));
    }
    if let Some(v) = raw.max_purification_rounds {
        space.max_purification_rounds = v;
    }
    for (key, list, target) in [
        ("memory_qubits", &raw.memory_qubits, &mut space.memory_qubits),
        ("attempts", &raw.attempts, &mut space.attempts),
    ] {
        if let Some(v) = list {
            if v.is_empty() || v.contains(&0) {
                return Err(invalid(format!("{field}.{key}"), "must be a nonempty list of integers >= 1"));
            }
            *target = v.clone();
        }
    }
    let log_keys = raw.spacing_points.is_some()
        || raw.spacing_min_km.is_some()
        || raw.spacing_max_attenuation_lengths.is_some();
    match (&raw.spacing_km, log_keys) {
        (Some(_), true) => {
            return Err(invalid(
                format!("{field}.spacing_km"),
                "conflicts with spacing_points/spacing_min_km/spacing_max_attenuation_lengths",
            ))
        }
        (Some(v), false) => {
            if v.is_empty() {
                return Err(invalid(format!("{field}.spacing_km"), "must not be empty"));
            }
            for x in v {
                positive(&format!("{field}.spacing_km"), *x)?;
            }
            space.spacing = SpacingGrid::Explicit(v.clone());
        }
        (None, true) => {
            let (mut points, mut min_km, mut max_att) = match &space.spacing {
                SpacingGrid::LogSpaced {
                    points,
                    min_km,
                    max_attenuation_lengths,
                } => (*points, *min_km, *max_attenuation_lengths),
                SpacingGrid::Explicit(_) => (24, 1.0, 1.0),
            };
            if let Some(v) = raw.spacing_points {
                if v == 0 {
                    return Err(invalid(format!("{field}.spacing_points"), "must be >= 1"));
                }
                points = v;
            }
            if let Some(v) = raw.spacing_min_km {
                min_km = positive(&format!("{field}.spacing_min_km"), v)?;
            }
            if let Some(v) = raw.spacing_max_attenuation_lengths {
                max_att = positive(&format!("{field}.spacing_max_attenuation_lengths"), v)?;
            }
            space.spacing = SpacingGrid::LogSpaced {
                points,
                min_km,
                max_attenuation_lengths: max_att,
            };
        }
        (None, false) => {}
    }
    Ok(space)
}

impl RunConfig {
    /// Parses and validates a scenario. Errors name the first offending
    /// field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| ModelError::InvalidConfig(format!("parse error: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads `source` as a file path, or as a builtin scenario name when no
    /// such file exists.
    pub fn load_file_or_builtin(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if path.exists() {
            return Self::load(path);
        }
        match builtin(source) {
            Some(text) => Self::from_toml_str(text),
            None => Err(ModelError::Io(format!(
                "`{source}` is neither a readable file nor a builtin scenario ({})",
                builtin_names()
            ))),
        }
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let name = raw.name.unwrap_or_else(|| "scenario".to_string());
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("name", "must be nonempty and use only [A-Za-z0-9_-]"));
        }
        let fixed = raw.fixed.unwrap_or_default();
        let coupling = in_unit(
            "fixed.coupling_efficiency",
            fixed.coupling_efficiency.unwrap_or(1.0),
            true,
            false,
        )?;
        let distance = fixed
            .total_distance_km
            .map(|v| positive("fixed.total_distance_km", v))
            .transpose()?;
        let gate_error = fixed
            .gate_error
            .map(|v| in_unit("fixed.gate_error", v, false, true))
            .transpose()?;
        let local_gate_time_s = positive(
            "fixed.local_gate_time_s",
            fixed.local_gate_time_s.unwrap_or(DEFAULT_LOCAL_GATE_TIME_S),
        )?;
        let link_fidelity = fixed.link_fidelity.unwrap_or(1.0);
        if !(0.25..=1.0).contains(&link_fidelity) {
            return Err(invalid(
                "fixed.link_fidelity",
                format!("must lie in [0.25, 1] (got {link_fidelity})"),
            ));
        }
        let measurement_efficiency = in_unit(
            "fixed.measurement_efficiency",
            fixed.measurement_efficiency.unwrap_or(1.0),
            true,
            false,
        )?;
        let protocol = match fixed.protocol.as_deref() {
            None => PurificationProtocol::Dejmps,
            Some(p) => p.parse().map_err(|_| {
                invalid(
                    "fixed.protocol",
                    format!("unknown protocol `{p}`; accepted values: bbpssw, dejmps"),
                )
            })?,
        };

        let raw_code = raw.code.unwrap_or_default();
        let defaults = CodeParams::default();
        let code = CodeParams {
            block_size: raw_code.block_size.unwrap_or(defaults.block_size),
            loss_threshold: raw_code.loss_threshold.unwrap_or(defaults.loss_threshold),
            fault_threshold: raw_code.fault_threshold.unwrap_or(defaults.fault_threshold),
            suppression_exponent: raw_code
                .suppression_exponent
                .unwrap_or(defaults.suppression_exponent),
        };
        if code.block_size == 0 {
            return Err(invalid("code.block_size", "must be >= 1"));
        }
        in_unit("code.loss_threshold", code.loss_threshold, true, true)?;
        in_unit("code.fault_threshold", code.fault_threshold, true, true)?;
        positive("code.suppression_exponent", code.suppression_exponent)?;

        let channels = resolve_channels(raw.channels, coupling)?;
        let (axis, values) = resolve_sweep(raw.sweep)?;

        let series = raw
            .series
            .filter(|s| !s.is_empty())
            .ok_or_else(|| invalid("series", "at least one [[series]] table is required"))?;
        let mut tracks = Vec::new();
        for (i, s) in series.into_iter().enumerate() {
            let field = format!("series[{i}]");
            let generations = s.generations.filter(|g| !g.is_empty()).ok_or_else(|| {
                invalid(
                    format!("{field}.generations"),
                    "missing; accepted values: g1, g2, g3",
                )
            })?;
            let generations = generations
                .iter()
                .map(|g| parse_generation(&format!("{field}.generations"), g))
                .collect::<Result<Vec<_>>>()?;
            let channel_names = s.channels.filter(|c| !c.is_empty()).ok_or_else(|| {
                invalid(
                    format!("{field}.channels"),
                    format!(
                        "missing; accepted values: {}",
                        channels.keys().cloned().collect::<Vec<_>>().join(", ")
                    ),
                )
            })?;
            for c in &channel_names {
                if !channels.contains_key(c) {
                    return Err(invalid(
                        format!("{field}.channels"),
                        format!(
                            "unknown channel `{c}`; accepted values: {}",
                            channels.keys().cloned().collect::<Vec<_>>().join(", ")
                        ),
                    ));
                }
            }
            let gate_errors = match (s.gate_errors, gate_error) {
                (Some(v), _) if !v.is_empty() => v,
                (None, Some(e)) => vec![e],
                _ if axis == SweepAxis::GateError => vec![0.0],
                _ => {
                    return Err(invalid(
                        format!("{field}.gate_errors"),
                        "missing; set it here or as fixed.gate_error",
                    ))
                }
            };
            for e in &gate_errors {
                in_unit(&format!("{field}.gate_errors"), *e, false, true)?;
            }
            let series_distance = match (s.total_distance_km, distance) {
                (Some(d), _) => positive(&format!("{field}.total_distance_km"), d)?,
                (None, Some(d)) => d,
                (None, None) if axis == SweepAxis::TotalDistance => values[0],
                (None, None) => {
                    return Err(invalid(
                        format!("{field}.total_distance_km"),
                        "missing; set it here or as fixed.total_distance_km",
                    ))
                }
            };
            let series_coupling = s
                .coupling_efficiency
                .map(|v| in_unit(&format!("{field}.coupling_efficiency"), v, true, false))
                .transpose()?
                .unwrap_or(coupling);
            for generation in &generations {
                for channel_name in &channel_names {
                    for eps in &gate_errors {
                        let channel = channels[channel_name].with_coupling(series_coupling);
                        let mut template =
                            RepeaterConfig::new(*generation, series_distance, channel)
                                .with_gate_error(*eps);
                        template.local_gate_time_s = local_gate_time_s;
                        template.link_fidelity = link_fidelity;
                        template.measurement_efficiency = measurement_efficiency;
                        template.protocol = protocol;
                        template.code = code;
                        template
                            .validate()
                            .map_err(|e| invalid(&field, e))?;
                        tracks.push(Track {
                            channel_name: channel_name.clone(),
                            template,
                        });
                    }
                }
            }
        }

        let raw_search = raw.search.unwrap_or_default();
        let base = resolve_bounds("search.default", &SearchSpace::default(), raw_search.default.as_ref())?;
        let search = [
            resolve_bounds("search.g1", &base, raw_search.g1.as_ref())?,
            resolve_bounds("search.g2", &base, raw_search.g2.as_ref())?,
            resolve_bounds("search.g3", &base, raw_search.g3.as_ref())?,
        ];

        let mc = raw.monte_carlo.unwrap_or_default();
        let monte_carlo = MonteCarloSettings {
            trials: mc.trials.unwrap_or(0),
            max_nesting: mc.max_nesting.unwrap_or(1),
        };
        if monte_carlo.trials != 0 && monte_carlo.trials < crate::generations::montecarlo::MIN_TRIALS {
            return Err(invalid("monte_carlo.trials", "must be 0 (off) or >= 1000"));
        }
        let top_k = raw.top_k.unwrap_or(1);
        if top_k == 0 {
            return Err(invalid("top_k", "must be >= 1"));
        }
        let output_file = raw
            .output
            .and_then(|o| o.file)
            .unwrap_or_else(|| format!("{name}.csv"));
        if output_file.is_empty() || Path::new(&output_file).components().count() != 1 {
            return Err(invalid("output.file", "must be a plain file name"));
        }

        Ok(Self {
            description: raw.description.unwrap_or_default(),
            seed: raw.seed.unwrap_or(0),
            top_k,
            output_file,
            axis,
            values,
            channels,
            tracks,
            search,
            monte_carlo,
            name,
        })
    }

    pub fn search_for(&self, generation: Generation) -> &SearchSpace {
        &self.search[generation as usize]
    }

    /// Human-readable listing of every resolved parameter.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario      {}", self.name);
        if !self.description.is_empty() {
            let _ = writeln!(out, "description   {}", self.description);
        }
        let _ = writeln!(out, "seed          {}", self.seed);
        let _ = writeln!(out, "top_k         {}", self.top_k);
        let _ = writeln!(out, "output.file   {}", self.output_file);
        let _ = writeln!(out, "sweep.axis    {}", self.axis);
        let _ = writeln!(
            out,
            "sweep.values  {} values: {}",
            self.values.len(),
            self.values.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(
            out,
            "monte_carlo   trials {} max_nesting {}",
            self.monte_carlo.trials, self.monte_carlo.max_nesting
        );
        for (name, ch) in &self.channels {
            let _ = writeln!(
                out,
                "channel {name:<8} medium {} attenuation_length_km {} signal_speed_km_per_s {}",
                ch.medium,
                format_number(ch.attenuation_length_km),
                format_number(ch.signal_speed_km_per_s)
            );
        }
        for (i, g) in Generation::ALL.iter().enumerate() {
            let s = &self.search[i];
            let spacing = match &s.spacing {
                SpacingGrid::Explicit(v) => format!(
                    "spacing_km [{}]",
                    v.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(", ")
                ),
                SpacingGrid::LogSpaced {
                    points,
                    min_km,
                    max_attenuation_lengths,
                } => format!(
                    "spacing log {points} points from {} km to {} attenuation length(s)",
                    format_number(*min_km),
                    format_number(*max_attenuation_lengths)
                ),
            };
            let _ = writeln!(
                out,
                "search.{g:<3}   nesting {}..={} rounds 0..={} memory_qubits {:?} attempts {:?} {spacing}",
                s.min_nesting, s.max_nesting, s.max_purification_rounds, s.memory_qubits, s.attempts
            );
        }
        let _ = writeln!(out, "tracks        {}", self.tracks.len());
        for t in &self.tracks {
            let c = &t.template;
            let _ = writeln!(
                out,
                "  {} {:<8} total_distance_km {} gate_error {} coupling_efficiency {} \
                 local_gate_time_s {} link_fidelity {} measurement_efficiency {} protocol {} \
                 code(block_size {}, loss_threshold {}, fault_threshold {}, suppression_exponent {})",
                c.generation,
                t.channel_name,
                format_number(c.total_distance_km),
                format_number(c.gate_error),
                format_number(c.channel.coupling_efficiency),
                format_number(c.local_gate_time_s),
                format_number(c.link_fidelity),
                format_number(c.measurement_efficiency),
                c.protocol,
                c.code.block_size,
                format_number(c.code.loss_threshold),
                format_number(c.code.fault_threshold),
                format_number(c.code.suppression_exponent),
            );
        }
        out
    }
}

/// Shortest round-trip decimal; scientific below 1e-3 in magnitude.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Optimizer outcome at one sweep point of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub track: usize,
    pub axis_value: f64,
    pub grid_points: u64,
    pub best: Option<CostReport>,
    pub monte_carlo: Option<MonteCarloReport>,
}

/// Runs every track over every sweep value.
pub fn run(config: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::with_capacity(config.tracks.len() * config.values.len());
    for (t, track) in config.tracks.iter().enumerate() {
        for &value in &config.values {
            let point = config.axis.apply(&track.template, value);
            point
                .validate()
                .map_err(|e| invalid(format!("sweep.values ({} = {value})", config.axis), e))?;
            let optimum = optimize(config.search_for(point.generation), &point, config.top_k)?;
            let grid_points = optimum.evaluated();
            let best = match optimum {
                Optimum::Found { mut ranked, .. } => Some(ranked.swap_remove(0)),
                Optimum::NoViable { .. } => None,
            };
            let monte_carlo = match &best {
                Some(b)
                    if config.monte_carlo.trials > 0
                        && b.config.generation == Generation::G1
                        && b.config.nesting_level <= config.monte_carlo.max_nesting =>
                {
                    let seed = config.seed.wrapping_add(rows.len() as u64);
                    Some(simulate_chain_monte_carlo(&b.config, config.monte_carlo.trials, seed)?)
                }
                _ => None,
            };
            rows.push(Row {
                track: t,
                axis_value: value,
                grid_points,
                best,
                monte_carlo,
            });
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 30] = [
    "scenario",
    "axis",
    "axis_value",
    "generation",
    "medium",
    "total_distance_km",
    "gate_error",
    "coupling_efficiency",
    "status",
    "grid_points",
    "cost_coefficient",
    "eq1_form",
    "rate_secret_bits_per_s",
    "fidelity",
    "secret_fraction",
    "nesting_level",
    "purification_schedule",
    "spacing_km",
    "link_length_km",
    "memory_qubits_per_half_node",
    "attempts_per_round",
    "repeater_count",
    "qubits_per_repeater",
    "total_time_per_pair_s",
    "flag",
    "mc_trials",
    "mc_mean_time_s",
    "mc_time_half_width_s",
    "mc_fidelity",
    "mc_fidelity_half_width",
];

fn csv_record(config: &RunConfig, row: &Row) -> Vec<String> {
    let track = &config.tracks[row.track];
    let point = config.axis.apply(&track.template, row.axis_value);
    let mut rec = vec![
        config.name.clone(),
        config.axis.to_string(),
        format_number(row.axis_value),
        point.generation.to_string(),
        track.channel_name.clone(),
        format_number(point.total_distance_km),
        format_number(point.gate_error),
        format_number(point.channel.coupling_efficiency),
    ];
    match &row.best {
        Some(b) => {
            let p = &b.performance;
            let c = &b.config;
            rec.extend([
                "ok".to_string(),
                row.grid_points.to_string(),
                format_number(b.cost_coefficient),
                format_number(b.eq1_form),
                format_number(p.rate_secret_bits_per_s),
                format_number(p.end_state.fidelity()),
                format_number(p.secret_fraction),
                c.nesting_level.to_string(),
                c.purification.to_string(),
                c.spacing_km.map(format_number).unwrap_or_default(),
                format_number(c.link_length_km()),
                c.memory_qubits_per_half_node.to_string(),
                c.attempts_per_round.to_string(),
                p.repeater_count.to_string(),
                p.qubits_per_repeater.to_string(),
                format_number(p.total_time_per_pair_s),
                p.flag.map(|f| f.to_string()).unwrap_or_default(),
            ]);
        }
        None => {
            rec.extend(["no_viable".to_string(), row.grid_points.to_string(), "inf".to_string()]);
            rec.extend(std::iter::repeat_n(String::new(), 14));
        }
    }
    match &row.monte_carlo {
        Some(mc) => rec.extend([
            mc.trials.to_string(),
            format_number(mc.mean_time_s),
            format_number(mc.time_half_width_s),
            format_number(mc.fidelity),
            format_number(mc.fidelity_half_width),
        ]),
        None => rec.extend(std::iter::repeat_n(String::new(), 5)),
    }
    rec
}

/// Writes the rows as CSV with a header line.
pub fn write_csv<W: std::io::Write>(config: &RunConfig, rows: &[Row], out: W) -> Result<()> {
    let io = |e: csv::Error| ModelError::Io(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.write_record(csv_record(config, row)).map_err(io)?;
    }
    w.flush().map_err(|e| ModelError::Io(format!("csv: {e}")))
}

/// Fixed-width table with the best point of every track.
pub fn summary_table(config: &RunConfig, rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {}: {} track(s) x {} value(s) of {}",
        config.name,
        config.tracks.len(),
        config.values.len(),
        config.axis
    );
    let _ = writeln!(
        out,
        "{:<4} {:<8} {:>12} {:>10} {:>7} {:>12} {:>12} {:>12} {:>7}  {}",
        "gen", "medium", "L_tot_km", "eps_G", "viable", "min_cost", "max_cost", "at_value", "nesting", "schedule"
    );
    for (t, track) in config.tracks.iter().enumerate() {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.track == t).collect();
        let viable: Vec<&Row> = mine.iter().copied().filter(|r| r.best.is_some()).collect();
        let c = &track.template;
        let head = format!(
            "{:<4} {:<8} {:>12} {:>10} {:>3}/{:<3}",
            c.generation.to_string(),
            track.channel_name,
            format_number(c.total_distance_km),
            format_number(c.gate_error),
            viable.len(),
            mine.len()
        );
        let best = viable.iter().min_by(|a, b| {
            let (x, y) = (a.best.as_ref().unwrap(), b.best.as_ref().unwrap());
            x.cost_coefficient.total_cmp(&y.cost_coefficient)
        });
        let worst = viable
            .iter()
            .map(|r| r.best.as_ref().unwrap().cost_coefficient)
            .max_by(f64::total_cmp);
        match (best, worst) {
            (Some(b), Some(w)) => {
                let br = b.best.as_ref().unwrap();
                let _ = writeln!(
                    out,
                    "{head} {:>12.4e} {:>12.4e} {:>12} {:>7}  {}",
                    br.cost_coefficient,
                    w,
                    format_number(b.axis_value),
                    br.config.nesting_level,
                    br.config.purification
                );
            }
            _ => {
                let _ = writeln!(out, "{head} {:>12} {:>12} {:>12} {:>7}  -", "inf", "inf", "-", "-");
            }
        }
    }
    out
}

/// Paths and contents produced by [`run_scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub csv_path: PathBuf,
    pub rows: Vec<Row>,
    pub summary: String,
}

/// Runs `config` and writes its CSV into `out_dir`, replacing any previous
/// file only once the new one is complete.
pub fn run_scenario(config: &RunConfig, out_dir: &Path) -> Result<ScenarioOutput> {
    fs::create_dir_all(out_dir)
        .map_err(|e| ModelError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let rows = run(config)?;
    let csv_path = out_dir.join(&config.output_file);
    let tmp_path = out_dir.join(format!(".{}.partial", config.output_file));
    let written = (|| -> Result<()> {
        let mut file = fs::File::create(&tmp_path)
            .map_err(|e| ModelError::Io(format!("cannot create {}: {e}", tmp_path.display())))?;
        let mut buf = Vec::new();
        write_csv(config, &rows, &mut buf)?;
        file.write_all(&buf)
            .and_then(|_| file.sync_all())
            .map_err(|e| ModelError::Io(format!("cannot write {}: {e}", tmp_path.display())))?;
        fs::rename(&tmp_path, &csv_path)
            .map_err(|e| ModelError::Io(format!("cannot write {}: {e}", csv_path.display())))
    })();
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp_path);
        return Err(e);
    }
    let summary = summary_table(config, &rows);
    Ok(ScenarioOutput {
        csv_path,
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "mini"
        seed = 3
        [fixed]
        total_distance_km = 500.0
        [sweep]
        axis = "coupling_efficiency"
        values = [0.5, 0.9]
        [[series]]
        generations = ["g1", "g2"]
        channels = ["fiber", "vbg"]
        gate_errors = [1e-3]
        [search.default]
        max_nesting = 2
        max_purification_rounds = 1
        memory_qubits = [1]
    "#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.tracks.len(), 4);
        assert_eq!(c.output_file, "mini.csv");
        assert_eq!(c.values, vec![0.5, 0.9]);
        assert_eq!(c.search_for(Generation::G3).max_nesting, 2);
        assert_eq!(c.tracks[0].template.local_gate_time_s, DEFAULT_LOCAL_GATE_TIME_S);
        assert_eq!(c.tracks[0].template.code, CodeParams::default());
        assert!(c.describe().contains("total_distance_km 500"));
    }

    #[test]
    fn range_sweeps_are_clean() {
        let text = MINIMAL.replace("values = [0.5, 0.9]", "start = 0.1\nstop = 0.95\nstep = 0.05");
        let c = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.values.len(), 18);
        assert_eq!(c.values[2], 0.2);
        assert_eq!(c.values[17], 0.95);
        assert_eq!(c.values[5], 0.35);
    }

    fn error_of(text: &str) -> String {
        RunConfig::from_toml_str(text).unwrap_err().to_string()
    }

    #[test]
    fn errors_name_the_field() {
        let e = error_of(&format!("{MINIMAL}\n[channels.fiber]\nattenuation_length_km = -20.0\n"));
        assert!(e.contains("channels.fiber.attenuation_length_km"), "{e}");
        assert!(e.contains("> 0"), "{e}");

        let e = error_of(&MINIMAL.replace("generations = [\"g1\", \"g2\"]\n", ""));
        assert!(e.contains("series[0].generations"), "{e}");
        assert!(e.contains("g1, g2, g3"), "{e}");

        let e = error_of(&MINIMAL.replace("\"g2\"", "\"g7\""));
        assert!(e.contains("g1, g2, g3"), "{e}");

        let e = error_of(&MINIMAL.replace("seed = 3", "seed = 3\ncolour = \"red\""));
        assert!(e.contains("colour"), "{e}");

        let e = error_of(&MINIMAL.replace("values = [0.5, 0.9]", "values = [0.9, 0.5]"));
        assert!(e.contains("sweep.values"), "{e}");

        let e = error_of(&MINIMAL.replace("axis = \"coupling_efficiency\"", "axis = \"wavelength\""));
        assert!(e.contains("sweep.axis") && e.contains("gate_error"), "{e}");

        let e = error_of(&MINIMAL.replace("channels = [\"fiber\", \"vbg\"]", "channels = [\"copper\"]"));
        assert!(e.contains("series[0].channels") && e.contains("fiber, vbg"), "{e}");
    }

    #[test]
    fn custom_channels() {
        let text = format!(
            "{MINIMAL}\n[channels.space]\nattenuation_length_km = 1e6\nsignal_speed_km_per_s = 3e5\n"
        )
        .replace("channels = [\"fiber\", \"vbg\"]", "channels = [\"space\"]");
        let c = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.tracks[0].template.channel.medium, Medium::Custom);
        assert_eq!(c.tracks[0].template.channel.attenuation_length_km, 1e6);

        let e = error_of(&format!("{MINIMAL}\n[channels.space]\nattenuation_length_km = 1e6\n"));
        assert!(e.contains("channels.space.signal_speed_km_per_s"), "{e}");
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(0.25), "0.25");
        assert_eq!(format_number(1e-3), "0.001");
        assert_eq!(format_number(2.5e-4), "2.5e-4");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(10000.0), "10000");
        for v in [1.234_567_890_123e-7, 0.1 + 0.2, 6.02e23] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn builtins_parse() {
        for (name, text) in BUILTIN_SCENARIOS {
            let c = RunConfig::from_toml_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.name, name);
        }
    }

    #[test]
    fn csv_has_one_row_per_track_and_value() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let rows = run(&c).unwrap();
        assert_eq!(rows.len(), 8);
        let mut buf = Vec::new();
        write_csv(&c, &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("scenario,axis,axis_value,generation"));
        let summary = summary_table(&c, &rows);
        assert_eq!(summary.lines().count(), 2 + 4);
    }
}
