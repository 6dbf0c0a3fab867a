#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use semnav_core::memory::load_digest;
use semnav_core::resolver::PreferenceIndex;
use semnav_core::sim::{backend_for_script, run_session, ScenarioScript, SessionArtifacts, SessionOptions};
use semnav_core::world::{load_world, Policy, World};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    repo_root().join("fixtures").join(rel)
}

pub fn world() -> Arc<World> {
    Arc::new(
        load_world(
            &fixture("fiir/nav_graph.geojson"),
            &fixture("fiir/semantic_objects_static.geojson"),
        )
        .expect("fixture world loads"),
    )
}

pub fn policy() -> Arc<Policy> {
    Arc::new(Policy::load(&fixture("fiir/policy.yaml")).expect("fixture policy loads"))
}

pub fn script(name: &str) -> ScenarioScript {
    ScenarioScript::load(&fixture(&format!("scenarios/{name}.json"))).expect("scenario loads")
}

pub fn replay(script: &ScenarioScript, out: &Path) -> SessionArtifacts {
    let mut options = SessionOptions::new(out);
    options.frozen_clock = true;
    let backend = backend_for_script(script).expect("oracle loads");
    run_session(script, world(), policy(), backend, &options).expect("session replays")
}

pub fn preferences(rel: &str) -> PreferenceIndex {
    let loaded = load_digest(Some(&fixture(rel)));
    PreferenceIndex::from_digest(loaded.digest.as_ref().expect("digest fixture parses"))
}
