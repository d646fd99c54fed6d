//! File formats: versioned JSON readers that warn on unknown fields and
//! reject unit-suffixed ones, scenario resolution, and result documents.
//!
//! All quantities in files are meters, radians and seconds. Field names
//! never carry units; a field such as `standoff_mm` is refused outright.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptiveConfig;
use crate::calibration::{
    CalibrationResult, CalibrationSession, CalibrationShot, ConditionFlag, ModelError,
};
use crate::coverage::{read_pgm, Mask, MaskJson};
use crate::projector::{PosePlanner, ProjectorModel};
use crate::simulator::{NoiseModel, TimingModel, WallDesign};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const SESSION_SCHEMA_VERSION: u32 = 1;
pub const CALIBRATION_OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BRICKWORK_OUT_DIR";

const UNIT_SUFFIXES: &[&str] = &[
    "_m", "_mm", "_cm", "_um", "_km", "_in", "_ft", "_rad", "_deg", "_degrees", "_s", "_ms",
    "_sec", "_min", "_px", "_pct", "_percent",
];

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field `{field}` carries a unit suffix; files use meters, radians and seconds with plain field names")]
    UnitField { path: PathBuf, field: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    pub fn invalid(path: &Path, message: impl Into<String>) -> Self {
        IoError::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_bytes(path: &Path, data: &[u8]) -> Result<(), IoError> {
    let wrap = |source| IoError::Read {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, data).map_err(wrap)
}

fn has_unit_suffix(key: &str) -> bool {
    let key = key.to_ascii_lowercase();
    UNIT_SUFFIXES
        .iter()
        .any(|s| key.len() > s.len() && key.ends_with(s))
}

/// Parses JSON text into `T`. Unknown fields are returned as warnings
/// (dotted paths); unknown fields with a unit suffix are an error.
pub fn parse_json<T: DeserializeOwned>(
    text: &str,
    path: &Path,
) -> Result<(T, Vec<String>), IoError> {
    let mut ignored = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value: Result<T, _> = serde_ignored::deserialize(&mut de, |p| ignored.push(p.to_string()));
    let value = value
        .and_then(|v| de.end().map(|_| v))
        .map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    if let Some(field) = ignored
        .iter()
        .find(|p| has_unit_suffix(p.rsplit('.').next().unwrap_or(p)))
    {
        return Err(IoError::UnitField {
            path: path.to_path_buf(),
            field: field.clone(),
        });
    }
    let warnings = ignored
        .into_iter()
        .map(|p| format!("{}: ignoring unknown field `{p}`", path.display()))
        .collect();
    Ok((value, warnings))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, Vec<String>), IoError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| IoError::invalid(path, e.to_string()))?;
    parse_json(&text, path)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn check_version(path: &Path, what: &str, found: u32, expected: u32) -> Result<(), IoError> {
    if found == expected {
        Ok(())
    } else {
        Err(IoError::invalid(
            path,
            format!("unsupported {what} schema_version {found} (expected {expected})"),
        ))
    }
}

/// Scenario file as written on disk. Paths are relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub design: PathBuf,
    pub noise: PathBuf,
    pub timing: PathBuf,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    #[serde(default = "ProjectorModel::reference")]
    pub projector: ProjectorModel,
    #[serde(default)]
    pub planner: PosePlanner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_session: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A scenario with every referenced file loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub path: PathBuf,
    pub design: WallDesign,
    pub noise: NoiseModel,
    pub timing: TimingModel,
    pub adaptive: AdaptiveConfig,
    pub projector: ProjectorModel,
    pub planner: PosePlanner,
    pub calibration_session: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Self, Vec<String>), IoError> {
        let (file, mut warnings): (ScenarioFile, _) = read_json(path)?;
        check_version(
            path,
            "scenario",
            file.schema_version,
            SCENARIO_SCHEMA_VERSION,
        )?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &Path| base.join(p);

        let design_path = resolve(&file.design);
        let (design, w): (WallDesign, _) = read_json(&design_path)?;
        warnings.extend(w);
        design
            .validate()
            .map_err(|e| IoError::invalid(&design_path, e.to_string()))?;

        let noise_path = resolve(&file.noise);
        let (noise, w): (NoiseModel, _) = read_json(&noise_path)?;
        warnings.extend(w);
        noise
            .validate()
            .map_err(|e| IoError::invalid(&noise_path, e.to_string()))?;

        let timing_path = resolve(&file.timing);
        let (timing, w): (TimingModel, _) = read_json(&timing_path)?;
        warnings.extend(w);
        timing
            .validate()
            .map_err(|e| IoError::invalid(&timing_path, e))?;

        file.adaptive
            .validate()
            .map_err(|e| IoError::invalid(path, e.to_string()))?;
        let calibration_session = file.calibration_session.as_deref().map(resolve);
        if let Some(p) = &calibration_session {
            if !p.is_file() {
                return Err(IoError::invalid(
                    path,
                    format!("calibration session {} not found", p.display()),
                ));
            }
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                design,
                noise,
                timing,
                adaptive: file.adaptive,
                projector: file.projector,
                planner: file.planner,
                calibration_session,
                output_dir: file.output_dir.as_deref().map(resolve),
            },
            warnings,
        ))
    }
}

/// Calibration session on disk, optionally with the model that generated
/// it (synthetic fixtures).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub schema_version: u32,
    pub shots: Vec<CalibrationShot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<ProjectorModel>,
}

impl SessionFile {
    pub fn load(path: &Path) -> Result<(Self, Vec<String>), IoError> {
        let (file, warnings): (SessionFile, _) = read_json(path)?;
        check_version(path, "session", file.schema_version, SESSION_SCHEMA_VERSION)?;
        Ok((file, warnings))
    }

    pub fn session(&self) -> CalibrationSession {
        CalibrationSession {
            shots: self.shots.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthError {
    pub translation: f64,
    pub rotation: f64,
    pub fov_x: f64,
    pub fov_y: f64,
}

impl From<ModelError> for GroundTruthError {
    fn from(e: ModelError) -> Self {
        Self {
            translation: e.translation,
            rotation: e.rotation,
            fov_x: e.fov_x,
            fov_y: e.fov_y,
        }
    }
}

/// Calibration result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutput {
    pub schema_version: u32,
    pub model: ProjectorModel,
    /// TL, TR, BR, BL.
    pub per_line_rms_residual: [f64; 4],
    pub apex_objective: f64,
    pub condition_flag: ConditionFlag,
    pub conditioning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_error: Option<GroundTruthError>,
}

impl CalibrationOutput {
    pub fn new(result: &CalibrationResult, truth: Option<&ProjectorModel>) -> Self {
        Self {
            schema_version: CALIBRATION_OUTPUT_SCHEMA_VERSION,
            model: result.model,
            per_line_rms_residual: result.per_line_rms_residual,
            apex_objective: result.apex_objective,
            condition_flag: result.condition_flag,
            conditioning: result.conditioning,
            ground_truth_error: truth.map(|t| ModelError::between(&result.model, t).into()),
        }
    }
}

/// Reads an adhesive mask from `.pgm` or `.json`.
pub fn read_mask(path: &Path) -> Result<(Mask, Vec<String>), IoError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let (j, warnings): (MaskJson, _) = read_json(path)?;
        let mask = Mask::try_from(&j).map_err(|e| IoError::invalid(path, e.to_string()))?;
        Ok((mask, warnings))
    } else {
        let data = read_bytes(path)?;
        let mask = read_pgm(&data, 1.0).map_err(|e| IoError::invalid(path, e.to_string()))?;
        Ok((mask, Vec::new()))
    }
}

/// Output directory: explicit flag, then the scenario's, then the
/// environment variable, then `./out`.
pub fn output_dir(flag: Option<&Path>, scenario: Option<&Path>) -> PathBuf {
    flag.or(scenario)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::TIMING_SCHEMA_VERSION;

    #[test]
    fn unknown_fields_warn() {
        let text = format!(
            r#"{{"schema_version":{TIMING_SCHEMA_VERSION},"traversal":1,"user_wait":1,"adhesive":1,"data_collection":1,"scanning":1,"jitter":0,"colour":"red"}}"#
        );
        let (t, w): (TimingModel, _) = parse_json(&text, Path::new("t.json")).unwrap();
        assert_eq!(t.traversal, 1.0);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("colour"));
    }

    #[test]
    fn unit_suffixed_fields_are_errors() {
        let text = r#"{"schema_version":1,"traversal":1,"user_wait":1,"adhesive":1,"data_collection":1,"scanning":1,"jitter":0,"traversal_ms":5}"#;
        let r: Result<(TimingModel, _), _> = parse_json(text, Path::new("t.json"));
        assert!(matches!(r, Err(IoError::UnitField { ref field, .. }) if field == "traversal_ms"));
    }

    #[test]
    fn nested_unknown_fields_are_reported_with_path() {
        let text = r#"{"rotation":[1,0,0,0],"translation":[0,0,0],"offset_deg":3}"#;
        let r: Result<(crate::geometry::Pose, _), _> = parse_json(text, Path::new("p.json"));
        assert!(matches!(r, Err(IoError::UnitField { .. })));
    }

    #[test]
    fn parse_errors_carry_position() {
        let r: Result<(TimingModel, _), _> =
            parse_json("{\n  \"traversal\": ,\n}", Path::new("bad.json"));
        match r {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn suffix_detection() {
        assert!(has_unit_suffix("standoff_mm"));
        assert!(has_unit_suffix("fov_x_deg"));
        assert!(!has_unit_suffix("fov_x"));
        assert!(!has_unit_suffix("_m"));
        assert!(!has_unit_suffix("platform_top_z"));
    }
}
