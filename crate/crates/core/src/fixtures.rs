//! Generator for the scenario files shipped under `scenarios/`. The shipped
//! files are exactly this output; regenerate with `brickwork fixtures`.

use std::path::PathBuf;

use crate::adaptive::AdaptiveConfig;
use crate::calibration::{default_survey, synthesize_session};
use crate::coverage::{
    rasterize_polygon, synth_application, write_pgm, ApplicationStyle, Mask, Region,
};
use crate::geometry::Plane;
use crate::io::{
    to_json, ScenarioFile, SessionFile, SCENARIO_SCHEMA_VERSION, SESSION_SCHEMA_VERSION,
};
use crate::projector::{PosePlanner, ProjectorModel};
use crate::simulator::{NoiseModel, TimingModel, WallDesign};

/// Seed of the synthetic calibration session.
pub const SESSION_SEED: u64 = 2026;
/// Number of masks in each synthetic adhesive set.
pub const COVERAGE_SET_SIZE: u64 = 21;
/// Coverage fixtures: a 200 x 100 mm footprint at 2 mm per pixel with a
/// 15 px margin.
pub const COVERAGE_SCALE: f64 = 0.002;
pub const COVERAGE_WIDTH: usize = 130;
pub const COVERAGE_HEIGHT: usize = 80;

pub fn coverage_region() -> Region {
    Region::new(vec![
        [15.0, 15.0],
        [115.0, 15.0],
        [115.0, 65.0],
        [15.0, 65.0],
    ])
}

fn scenario(design: &str) -> ScenarioFile {
    ScenarioFile {
        schema_version: SCENARIO_SCHEMA_VERSION,
        design: PathBuf::from(format!("designs/{design}.json")),
        noise: PathBuf::from("noise/typical.json"),
        timing: PathBuf::from("timing/default.json"),
        adaptive: AdaptiveConfig::default(),
        projector: ProjectorModel::reference(),
        planner: PosePlanner::default(),
        calibration_session: Some(PathBuf::from("calibration/synthetic_session.json")),
        output_dir: None,
    }
}

fn coverage_set(name: &str, style: fn(u64) -> ApplicationStyle) -> Vec<(PathBuf, Vec<u8>)> {
    let region = coverage_region().points();
    (0..COVERAGE_SET_SIZE)
        .map(|seed| {
            let mask = synth_application(
                &region,
                &style(seed),
                COVERAGE_WIDTH,
                COVERAGE_HEIGHT,
                COVERAGE_SCALE,
            )
            .expect("valid fixture style");
            (
                PathBuf::from(format!("coverage/{name}/{name}_{seed:02}.pgm")),
                write_pgm(&mask),
            )
        })
        .collect()
}

/// Every shipped file as (path relative to `scenarios/`, contents).
pub fn generate() -> Vec<(PathBuf, Vec<u8>)> {
    let json = |p: &str, s: String| (PathBuf::from(p), s.into_bytes());
    let truth = ProjectorModel::reference();
    let session = synthesize_session(
        &truth,
        &default_survey(&truth),
        &Plane::horizontal(0.0),
        0.0,
        SESSION_SEED,
    )
    .expect("reference survey hits the plane");
    let region = coverage_region();
    let full = Mask::from_bits(
        COVERAGE_WIDTH,
        COVERAGE_HEIGHT,
        rasterize_polygon(&region.points(), COVERAGE_WIDTH, COVERAGE_HEIGHT),
        COVERAGE_SCALE,
    )
    .expect("fixture mask size");

    let mut files = vec![
        json(
            "conventional_21.json",
            to_json(&scenario("conventional_21")),
        ),
        json("nonstandard_28.json", to_json(&scenario("nonstandard_28"))),
        json(
            "designs/conventional_21.json",
            to_json(&WallDesign::conventional_21()),
        ),
        json(
            "designs/nonstandard_28.json",
            to_json(&WallDesign::nonstandard_28()),
        ),
        json("noise/typical.json", to_json(&NoiseModel::typical())),
        json("noise/zero.json", to_json(&NoiseModel::zero())),
        json("timing/default.json", to_json(&TimingModel::default())),
        json(
            "calibration/synthetic_session.json",
            to_json(&SessionFile {
                schema_version: SESSION_SCHEMA_VERSION,
                shots: session.shots,
                ground_truth: Some(truth),
            }),
        ),
        json("coverage/region.json", to_json(&region)),
        (PathBuf::from("coverage/full_cover.pgm"), write_pgm(&full)),
    ];
    files.extend(coverage_set("guided", ApplicationStyle::guided));
    files.extend(coverage_set("unguided", ApplicationStyle::unguided));
    files
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(), generate());
    }

    #[test]
    fn region_fits_the_fixture_mask() {
        let r = coverage_region().points();
        assert!(r
            .iter()
            .all(|p| p.x < COVERAGE_WIDTH as f64 && p.y < COVERAGE_HEIGHT as f64));
        let side = Vector2::new(100.0, 50.0) * COVERAGE_SCALE;
        assert!((side.x - 0.2).abs() < 1e-12 && (side.y - 0.1).abs() < 1e-12);
    }
}
