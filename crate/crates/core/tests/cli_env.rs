//! Kept in its own test binary: it changes the process environment.

use std::path::Path;

use brickwork::cli::{run, EXIT_OK};
use brickwork::io::OUT_DIR_ENV;

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::TempDir::new().unwrap();
    std::env::set_var(OUT_DIR_ENV, dir.path());
    let session =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/calibration/synthetic_session.json");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        ["brickwork", "calibrate", session.to_str().unwrap()],
        &mut out,
        &mut err,
    );
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("calibration_result.json").exists());
}
