use std::path::PathBuf;

use certplc_core::expr::LinearConstraint;
use certplc_core::semantics::Machine;
use certplc_core::{
    check, decide_sat, emit, parse_model, parse_properties, verify_invariant, ExploreOptions, InitActions,
    VerifyOptions,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn load(name: &str) -> (String, String) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    (
        std::fs::read_to_string(dir.join(format!("{name}.sfc"))).unwrap(),
        std::fs::read_to_string(dir.join(format!("{name}.inv"))).unwrap(),
    )
}

fn pipeline(c: &mut Criterion) {
    for (name, prop) in [("loop", "bounded"), ("parallel", "tokens"), ("tank", "bounds")] {
        let (src, inv) = load(name);
        let model = parse_model(&src).unwrap();
        let p = parse_properties(&inv, &model).unwrap().into_iter().find(|p| p.name == prop).unwrap();
        let seq = VerifyOptions { parallel: false, ..VerifyOptions::default() };

        c.bench_function(&format!("parse/{name}"), |b| b.iter(|| parse_model(&src).unwrap()));
        c.bench_function(&format!("explore/{name}"), |b| {
            let m = Machine::new(&model).unwrap();
            b.iter(|| m.reachable_bounded(ExploreOptions { depth: 30, state_budget: 200_000 }).unwrap())
        });
        c.bench_function(&format!("verify/{name}/{prop}"), |b| b.iter(|| verify_invariant(&model, &p.formula, seq)));
        let r = verify_invariant(&model, &p.formula, seq);
        let text = emit(&model, &p, &r, InitActions::FromSteps).unwrap().to_text();
        c.bench_function(&format!("check/{name}/{prop}"), |b| b.iter(|| assert!(check(text.as_bytes()).is_accepted())));
    }

    let cube = vec![
        LinearConstraint::le(&[("x", 2), ("y", 4)], -7),
        LinearConstraint::le(&[("x", -2), ("y", -4)], 7),
        LinearConstraint::le(&[("x", -1)], 0),
        LinearConstraint::le(&[("y", -1)], 0),
        LinearConstraint::le(&[("x", 1)], -255),
        LinearConstraint::le(&[("y", 1)], -255),
    ];
    c.bench_function("lia/unsat_parity", |b| b.iter(|| decide_sat(&cube).unwrap()));
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
