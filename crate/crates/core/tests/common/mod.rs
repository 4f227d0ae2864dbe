#![allow(dead_code)]

use std::path::PathBuf;

use certplc_core::semantics::{Exploration, ExploreError, Machine};
use certplc_core::{parse_model, parse_properties, ExploreOptions, InitActions, Property, SfcModel};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub struct Fixture {
    pub name: String,
    pub model: SfcModel,
    pub props: Vec<Property>,
}

pub fn fixture(name: &str) -> Fixture {
    let dir = fixtures_dir();
    let src = std::fs::read_to_string(dir.join(format!("{name}.sfc"))).unwrap();
    let model = parse_model(&src).unwrap_or_else(|e| panic!("{name}.sfc: {e}"));
    let inv = std::fs::read_to_string(dir.join(format!("{name}.inv"))).unwrap_or_default();
    let props = parse_properties(&inv, &model).unwrap_or_else(|e| panic!("{name}.inv: {e}"));
    Fixture { name: name.to_string(), model, props }
}

pub fn all_fixtures() -> Vec<Fixture> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "sfc").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names.iter().map(|n| fixture(n)).collect()
}

pub fn prop<'a>(f: &'a Fixture, name: &str) -> &'a Property {
    f.props.iter().find(|p| p.name == name).unwrap_or_else(|| panic!("no property {name} in {}", f.name))
}

/// Bounded reachable set; on budget exhaustion the partial set is used.
pub fn explore(model: &SfcModel, mode: InitActions, depth: usize) -> Exploration {
    let m = Machine::new(model).unwrap().with_init_actions(mode);
    match m.reachable_bounded(ExploreOptions { depth, state_budget: 100_000 }) {
        Ok(ex) => ex,
        Err(ExploreError::BudgetExceeded { partial, .. }) => *partial,
        Err(e) => panic!("{e}"),
    }
}

pub fn report(n: u32, title: &str, ok: bool, detail: &str) {
    println!("criterion {n} [{title}]: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}
