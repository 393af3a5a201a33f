//! Benchmarks live in benches/.

use std::path::{Path, PathBuf};

use propsim_cli::commands::{load_ground_truth, supervision};
use propsim_cli::formats::{RunConfig, ScenarioFile, Strictness};
use propsim_core::sysid::SupervisionChannel;

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

/// A shipped demo scenario cut to `duration` seconds, with its supervision.
pub fn demo_problem(name: &str, duration: f64) -> (RunConfig, SupervisionChannel) {
    let mut run = ScenarioFile::load(&demo_dir().join(format!("{name}.json")), Strictness::Strict).expect("demo scenario");
    run.scenario.config.duration = duration;
    let gt_path = demo_dir().join(format!("{name}_gt.csv"));
    let gt = load_ground_truth(&gt_path, &run.scenario).expect("demo ground truth");
    let sup = supervision(&run, &gt, &gt_path).expect("supervision");
    (run, sup)
}
