//! Flat `key = value` run configuration.
//!
//! ```text
//! # 60 Hz desktop panel
//! screen.refresh_rate_hz = 60
//! screen.default_timing = true
//! screen.width_px = 1920
//! screen.height_px = 1080
//! matrix.rows = 6
//! ...
//! ```
//!
//! Keys are grouped by the `screen.`, `matrix.`, `pipeline.`, `mc.` and
//! `report.` prefixes. Units are encoded in the key suffix.

use std::collections::BTreeMap;
use std::str::FromStr;

use taglat_core::{
    GridPoint, Orientation, PipelineConfig, PipelineVariant, RenderConfig, Sampler, ScreenModel,
    StimulusMatrix, TagDispatch,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Missing(String),
}

const KEYS: &[&str] = &[
    "screen.refresh_rate_hz",
    "screen.scan_time_a_ms",
    "screen.pixel_response_b_ms",
    "screen.width_px",
    "screen.height_px",
    "screen.orientation",
    "screen.default_timing",
    "matrix.rows",
    "matrix.cols",
    "matrix.pitch_ui_px",
    "matrix.pitch_uj_px",
    "matrix.margin_mi_px",
    "matrix.margin_mj_px",
    "pipeline.variant",
    "pipeline.tag_dispatch",
    "pipeline.e_mean_ms",
    "pipeline.e_jitter_sd_ms",
    "pipeline.fps",
    "pipeline.vsync",
    "pipeline.n_cameras",
    "pipeline.single_pass",
    "pipeline.sor_ms",
    "pipeline.phase_locked",
    "pipeline.multipass_threshold_ms",
    "mc.n_stimuli",
    "mc.n_trials",
    "mc.photodiode_i",
    "mc.photodiode_j",
    "mc.sampler",
    "mc.seed",
    "mc.signed",
    "report.full_refresh_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub n_stimuli: Vec<usize>,
    pub n_trials: usize,
    /// Defaults to the grid centre when unset.
    pub photodiode: Option<GridPoint>,
    pub sampler: Sampler,
    pub seed: u64,
    pub signed: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_stimuli: vec![12],
            n_trials: 10_000,
            photodiode: None,
            sampler: Sampler::WithReplacement,
            seed: 0,
            signed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub screen: Option<ScreenModel>,
    pub matrix: Option<StimulusMatrix>,
    pub pipeline: PipelineConfig,
    pub multipass_threshold_ms: Option<f64>,
    pub mc: McSettings,
    pub full_refresh_ms: Option<f64>,
}

struct Entries {
    values: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((raw, line)) = self.values.get(key) else {
            return Ok(None);
        };
        raw.parse::<T>().map(Some).map_err(|_| ConfigError::Line {
            line: *line,
            message: format!("cannot parse value '{raw}' for {key}"),
        })
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some((raw, line)) = self.values.get(key) else {
            return Ok(None);
        };
        match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(Some(true)),
            "false" | "no" | "0" | "off" => Ok(Some(false)),
            _ => Err(ConfigError::Line {
                line: *line,
                message: format!("expected a boolean for {key}, got '{raw}'"),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?
            .ok_or_else(|| ConfigError::Missing(format!("missing required key {key}")))
    }

    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(_, l)| *l)
    }

    fn first_line(&self, prefix: &str) -> usize {
        self.values
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, (_, l))| *l)
            .min()
            .unwrap_or(0)
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.values.keys().any(|k| k.starts_with(prefix))
    }

    /// Attributes a model validation error to the line of the offending key.
    fn model_error(&self, section: &str, err: taglat_core::Error) -> ConfigError {
        let line = match &err {
            taglat_core::Error::Range { name, .. } => {
                let key = format!("{section}{name}");
                if self.values.contains_key(&key) {
                    self.line(&key)
                } else {
                    self.first_line(section)
                }
            }
            _ => self.first_line(section),
        };
        ConfigError::Line {
            line,
            message: err.to_string(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, raw_line) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Line {
                    line,
                    message: format!("expected 'key = value', got '{content}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::Line {
                    line,
                    message: format!("unknown key '{key}'"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Line {
                    line,
                    message: format!("empty value for {key}"),
                });
            }
            if let Some((_, first)) = values.insert(key.to_string(), (value.to_string(), line)) {
                return Err(ConfigError::Line {
                    line,
                    message: format!("duplicate key '{key}' (first set on line {first})"),
                });
            }
        }
        let entries = Entries { values };

        let screen = if entries.has_section("screen.") {
            Some(parse_screen(&entries)?)
        } else {
            None
        };
        let matrix = if entries.has_section("matrix.") {
            Some(parse_matrix(&entries)?)
        } else {
            None
        };
        if let (Some(s), Some(m)) = (&screen, &matrix) {
            m.check_fits(s)
                .map_err(|e| entries.model_error("matrix.", e))?;
        }
        let pipeline = parse_pipeline(&entries)?;
        let multipass_threshold_ms = entries.get::<f64>("pipeline.multipass_threshold_ms")?;
        if let Some(t) = multipass_threshold_ms {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError::Line {
                    line: entries.line("pipeline.multipass_threshold_ms"),
                    message: "multipass threshold must be a non-negative number".into(),
                });
            }
        }
        let mc = parse_mc(&entries)?;
        let full_refresh_ms = entries.get::<f64>("report.full_refresh_ms")?;
        if let Some(v) = full_refresh_ms {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Line {
                    line: entries.line("report.full_refresh_ms"),
                    message: "report.full_refresh_ms must be positive".into(),
                });
            }
        }
        Ok(Self {
            screen,
            matrix,
            pipeline,
            multipass_threshold_ms,
            mc,
            full_refresh_ms,
        })
    }

    pub fn screen(&self) -> Result<&ScreenModel, ConfigError> {
        self.screen
            .as_ref()
            .ok_or_else(|| ConfigError::Missing("configuration has no screen.* section".into()))
    }

    pub fn matrix(&self) -> Result<&StimulusMatrix, ConfigError> {
        self.matrix
            .as_ref()
            .ok_or_else(|| ConfigError::Missing("configuration has no matrix.* section".into()))
    }

    /// Configured multipass threshold, else the full-screen scan time.
    pub fn multipass_threshold_ms(&self) -> Option<f64> {
        self.multipass_threshold_ms.or_else(|| {
            self.screen
                .as_ref()
                .map(taglat_core::pipeline::default_multipass_threshold)
        })
    }
}

fn parse_screen(e: &Entries) -> Result<ScreenModel, ConfigError> {
    let rr: f64 = e.require("screen.refresh_rate_hz")?;
    let width: f64 = e.require("screen.width_px")?;
    let height: f64 = e.require("screen.height_px")?;
    let orientation = match e.values.get("screen.orientation") {
        Some((raw, line)) => Orientation::from_str(raw).map_err(|err| ConfigError::Line {
            line: *line,
            message: err.to_string(),
        })?,
        None => Orientation::Normal,
    };
    let default_timing = e.get_bool("screen.default_timing")?.unwrap_or(false);
    let (a, b) = if default_timing {
        let d = ScreenModel::with_default_timing(rr, width, height, orientation)
            .map_err(|err| e.model_error("screen.", err))?;
        (
            e.get("screen.scan_time_a_ms")?
                .unwrap_or(d.scan_time_a_ms()),
            e.get("screen.pixel_response_b_ms")?
                .unwrap_or(d.pixel_response_b_ms()),
        )
    } else {
        (
            e.require("screen.scan_time_a_ms")?,
            e.require("screen.pixel_response_b_ms")?,
        )
    };
    ScreenModel::new(rr, a, b, width, height, orientation)
        .map_err(|err| e.model_error("screen.", err))
}

fn parse_matrix(e: &Entries) -> Result<StimulusMatrix, ConfigError> {
    StimulusMatrix::new(
        e.require("matrix.rows")?,
        e.require("matrix.cols")?,
        e.require("matrix.pitch_ui_px")?,
        e.require("matrix.pitch_uj_px")?,
        e.get("matrix.margin_mi_px")?.unwrap_or(0.0),
        e.get("matrix.margin_mj_px")?.unwrap_or(0.0),
    )
    .map_err(|err| e.model_error("matrix.", err))
}

fn parse_enum<T>(e: &Entries, key: &str) -> Result<Option<T>, ConfigError>
where
    T: FromStr<Err = taglat_core::Error>,
{
    match e.values.get(key) {
        Some((raw, line)) => T::from_str(raw).map(Some).map_err(|err| ConfigError::Line {
            line: *line,
            message: err.to_string(),
        }),
        None => Ok(None),
    }
}

fn parse_pipeline(e: &Entries) -> Result<PipelineConfig, ConfigError> {
    let d = RenderConfig::default();
    let render = RenderConfig {
        fps: e.get("pipeline.fps")?.unwrap_or(d.fps),
        vsync: e.get_bool("pipeline.vsync")?.unwrap_or(d.vsync),
        n_cameras: e.get("pipeline.n_cameras")?.unwrap_or(d.n_cameras),
        single_pass: e.get_bool("pipeline.single_pass")?.unwrap_or(d.single_pass),
        sor_ms: e.get("pipeline.sor_ms")?.unwrap_or(d.sor_ms),
        phase_locked: e
            .get_bool("pipeline.phase_locked")?
            .unwrap_or(d.phase_locked),
    };
    let pipeline = PipelineConfig {
        variant: parse_enum::<PipelineVariant>(e, "pipeline.variant")?.unwrap_or_default(),
        tag_dispatch: parse_enum::<TagDispatch>(e, "pipeline.tag_dispatch")?.unwrap_or_default(),
        e_mean_ms: e.get("pipeline.e_mean_ms")?.unwrap_or(0.0),
        e_jitter_sd_ms: e.get("pipeline.e_jitter_sd_ms")?.unwrap_or(0.0),
        render,
    };
    pipeline
        .validate()
        .map_err(|err| e.model_error("pipeline.", err))?;
    Ok(pipeline)
}

fn parse_mc(e: &Entries) -> Result<McSettings, ConfigError> {
    let d = McSettings::default();
    let n_stimuli = match e.values.get("mc.n_stimuli") {
        Some((raw, line)) => parse_count_list(raw).map_err(|message| ConfigError::Line {
            line: *line,
            message,
        })?,
        None => d.n_stimuli,
    };
    let photodiode = match (
        e.get::<f64>("mc.photodiode_i")?,
        e.get::<f64>("mc.photodiode_j")?,
    ) {
        (Some(i), Some(j)) => Some(GridPoint { i, j }),
        (None, None) => None,
        _ => {
            return Err(ConfigError::Line {
                line: e.first_line("mc.photodiode"),
                message: "mc.photodiode_i and mc.photodiode_j must be set together".into(),
            })
        }
    };
    Ok(McSettings {
        n_stimuli,
        n_trials: e.get("mc.n_trials")?.unwrap_or(d.n_trials),
        photodiode,
        sampler: parse_enum::<Sampler>(e, "mc.sampler")?.unwrap_or_default(),
        seed: e.get("mc.seed")?.unwrap_or(d.seed),
        signed: e.get_bool("mc.signed")?.unwrap_or(d.signed),
    })
}

/// Comma-separated list of positive counts.
pub fn parse_count_list(raw: &str) -> Result<Vec<usize>, String> {
    let values = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("'{}' is not a positive count", s.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty count list".into());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# desktop panel
screen.refresh_rate_hz = 60
screen.default_timing = true
screen.width_px = 1000
screen.height_px = 1000
matrix.rows = 6
matrix.cols = 6
matrix.pitch_ui_px = 160
matrix.pitch_uj_px = 160
matrix.margin_mi_px = 100
matrix.margin_mj_px = 100
";

    #[test]
    fn parses_default_timing() {
        let c = RunConfig::parse(BASE).unwrap();
        let s = c.screen().unwrap();
        assert_eq!(s.scan_time_a_ms(), 16.0);
        assert_eq!(s.pixel_response_b_ms(), 6.0);
        assert_eq!(c.matrix().unwrap().rows(), 6);
        assert_eq!(c.multipass_threshold_ms(), Some(16.0));
        assert_eq!(c.mc, McSettings::default());
    }

    #[test]
    fn explicit_timing_overrides_defaults() {
        let text = format!("{BASE}screen.pixel_response_b_ms = 2.5 # fast panel\n");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.screen().unwrap().pixel_response_b_ms(), 2.5);
    }

    #[test]
    fn scan_time_required_without_defaults() {
        let text = BASE.replace("screen.default_timing = true\n", "");
        assert!(matches!(
            RunConfig::parse(&text),
            Err(ConfigError::Missing(_))
        ));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format!("{BASE}pipeline.fps = fast\n");
        assert_eq!(
            RunConfig::parse(&text).unwrap_err(),
            ConfigError::Line {
                line: 12,
                message: "cannot parse value 'fast' for pipeline.fps".into()
            }
        );
        let err = RunConfig::parse("screen.colour = red\n").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 1, .. }));
        let err = RunConfig::parse("\n\nnot a pair\n").unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 3, .. }));
        let err = RunConfig::parse(&format!("{BASE}matrix.rows = 5\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Line { line: 12, .. }));
    }

    #[test]
    fn validation_errors_point_at_key() {
        let text = BASE.replace(
            "screen.default_timing = true",
            "screen.scan_time_a_ms = 30\nscreen.pixel_response_b_ms = 6",
        );
        match RunConfig::parse(&text).unwrap_err() {
            ConfigError::Line { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("scan_time_a_ms"));
            }
            other => panic!("{other:?}"),
        }
        let text = BASE.replace("matrix.pitch_ui_px = 160", "matrix.pitch_ui_px = 300");
        assert!(matches!(
            RunConfig::parse(&text),
            Err(ConfigError::Line { .. })
        ));
    }

    #[test]
    fn parses_pipeline_and_mc() {
        let text = format!(
            "{BASE}pipeline.variant = B\npipeline.tag_dispatch = asynchronous\npipeline.sor_ms = 12\n\
             pipeline.n_cameras = 2\npipeline.vsync = off\nmc.n_stimuli = 1, 12,36\nmc.sampler = without_replacement\n\
             mc.photodiode_i = 2.5\nmc.photodiode_j = 2\nmc.seed = 7\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.pipeline.variant, PipelineVariant::B);
        assert_eq!(c.pipeline.tag_dispatch, TagDispatch::Asynchronous);
        assert_eq!(c.pipeline.render.sor_ms, 12.0);
        assert!(!c.pipeline.render.vsync);
        assert_eq!(c.mc.n_stimuli, vec![1, 12, 36]);
        assert_eq!(c.mc.sampler, Sampler::WithoutReplacement);
        assert_eq!(c.mc.photodiode, Some(GridPoint { i: 2.5, j: 2.0 }));
        assert_eq!(c.mc.seed, 7);

        let bad = format!("{BASE}mc.photodiode_i = 2\n");
        assert!(RunConfig::parse(&bad).is_err());
        let bad = format!("{BASE}mc.n_stimuli = 0\n");
        assert!(RunConfig::parse(&bad).is_err());
        let bad = format!("{BASE}pipeline.e_mean_ms = -1\n");
        assert!(matches!(
            RunConfig::parse(&bad),
            Err(ConfigError::Line { line: 12, .. })
        ));
    }
}
