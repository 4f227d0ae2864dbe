mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use certplc_core::certificate::sexp::{self, Sexp};
use certplc_core::expr::{Dnf, LinearConstraint, Rel, Ty, VarEnv};
use certplc_core::fbd::fbd_to_action;
use certplc_core::lia::{decide_valid_implication, implication_cubes, Implication};
use certplc_core::model::text_digest;
use certplc_core::semantics::Machine;
use certplc_core::verifier::{
    check_determined_successor, check_guard_unreachable, enabled, gen_basic_lemmas, Determined,
};
use certplc_core::{
    check, decide_sat, emit, parse_formula, parse_model, parse_properties, replay_witness, verify_invariant,
    Certificate, InitActions, SatResult, VerifyOptions,
};
use common::{all_fixtures, explore, fixture, prop, report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn payload(state: &certplc_core::SfcState, v: &str) -> u64 {
    state.mem[v].payload()
}

#[test]
fn criterion_1_loop_fidelity() {
    let start = Instant::now();
    let f = fixture("loop");
    let guards: Vec<String> = f.model.transitions.iter().map(|t| t.guard.to_string()).collect();
    let ex = explore(&f.model, InitActions::FromSteps, 40);
    let max_x = ex.states.iter().map(|s| payload(s, "x")).max().unwrap();
    let return_states: Vec<_> = ex.states.iter().filter(|s| s.step_active("Return")).collect();
    let return_iff_ten = !return_states.is_empty() && return_states.iter().all(|s| payload(s, "x") == 10);
    let ok = guards == ["x < 10", "true", "x >= 10"] && max_x == 10 && return_iff_ten && ex.saturated;
    report(
        1,
        "loop fidelity",
        ok && start.elapsed() < Duration::from_secs(5),
        &format!(
            "guards {guards:?}, {} states, max x = {max_x}, {} Return states",
            ex.states.len(),
            return_states.len()
        ),
    );
}

#[test]
fn criterion_2_basic_lemmas_certified() {
    let mut accepted = 0;
    let mut slowest = Duration::ZERO;
    let fixtures = all_fixtures();
    for f in &fixtures {
        let start = Instant::now();
        for (p, r) in gen_basic_lemmas(&f.model, VerifyOptions::default()) {
            assert!(r.is_proved(), "{}: {} is {}", f.name, p.name, r.verdict());
            let cert = emit(&f.model, &p, &r, InitActions::FromSteps).unwrap();
            let v = check(cert.to_text().as_bytes());
            assert!(v.is_accepted(), "{}: {} certificate {v}", f.name, p.name);
            accepted += 1;
        }
        slowest = slowest.max(start.elapsed());
    }
    report(
        2,
        "basic lemmas",
        accepted == 2 * fixtures.len() && slowest < Duration::from_secs(5),
        &format!("{accepted} certificates accepted over {} fixtures, slowest {slowest:?}", fixtures.len()),
    );
}

#[test]
fn criterion_3_positive_invariant() {
    let f = fixture("positive_y");
    let p = prop(&f, "positive");
    assert_eq!(p.formula.to_string(), "0 < Y");
    let r = verify_invariant(&f.model, &p.formula, VerifyOptions::default());
    let ex = explore(&f.model, InitActions::FromSteps, 30);
    let violations = ex.states.iter().filter(|s| !p.formula.holds(s).unwrap()).count();
    let cert = emit(&f.model, p, &r, InitActions::FromSteps).unwrap();
    let text = cert.to_text();
    let round_trip = Certificate::parse(&text).unwrap() == cert;
    let verdict = check(text.as_bytes());
    report(
        3,
        "positive Y",
        r.is_proved() && violations == 0 && round_trip && verdict.is_accepted(),
        &format!("{}, {} states explored, {violations} violations, {verdict}", r.verdict(), ex.states.len()),
    );
}

#[test]
fn criterion_4_soundness_suite() {
    let fixtures = all_fixtures();
    let mut models = 0;
    let mut proved_total = 0;
    let mut violations = Vec::new();
    for f in &fixtures {
        let ex = explore(&f.model, InitActions::FromSteps, 40);
        let mut proved = 0;
        for p in &f.props {
            let r = verify_invariant(&f.model, &p.formula, VerifyOptions::default());
            if !r.is_proved() {
                continue;
            }
            proved += 1;
            if let Some(s) = ex.states.iter().find(|s| !p.formula.holds(s).unwrap()) {
                violations.push(format!("{}/{}: {s}", f.name, p.name));
            }
        }
        if proved >= 3 {
            models += 1;
        }
        proved_total += proved;
    }
    report(
        4,
        "soundness",
        models >= 10 && violations.is_empty(),
        &format!("{models} models with >= 3 proved properties, {proved_total} proved, violations {violations:?}"),
    );
}

const VARS: [&str; 3] = ["a", "b", "c"];
const WIDTH4_MAX: i128 = 15;

fn box_bounds(vars: &[&str]) -> Vec<LinearConstraint> {
    vars.iter()
        .flat_map(|v| [LinearConstraint::le(&[(v, -1)], 0), LinearConstraint::le(&[(v, 1)], -WIDTH4_MAX)])
        .collect()
}

fn random_constraint(rng: &mut ChaCha8Rng, vars: &[&str]) -> LinearConstraint {
    let mut coeffs = BTreeMap::new();
    for v in vars {
        if rng.gen_bool(0.7) {
            let k = rng.gen_range(-6i128..=6);
            if k != 0 {
                coeffs.insert(v.to_string(), k);
            }
        }
    }
    if coeffs.is_empty() {
        coeffs.insert(vars[rng.gen_range(0..vars.len())].to_string(), rng.gen_range(1i128..=4));
    }
    let rel = if rng.gen_bool(0.2) { Rel::Eq } else { Rel::Le };
    LinearConstraint::new(coeffs, rng.gen_range(-40i128..=40), rel)
}

/// Every point of the width-4 box over `vars`.
fn box_points(vars: &[&str]) -> Vec<BTreeMap<String, i128>> {
    let mut points = vec![BTreeMap::new()];
    for v in vars {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..=WIDTH4_MAX).map(move |x| {
                    let mut q = p.clone();
                    q.insert(v.to_string(), x);
                    q
                })
            })
            .collect();
    }
    points
}

fn cube_holds(cube: &[LinearConstraint], point: &BTreeMap<String, i128>) -> bool {
    cube.iter().all(|c| c.holds(point) == Some(true))
}

fn dnf_holds(d: &Dnf, point: &BTreeMap<String, i128>) -> bool {
    d.iter().any(|c| cube_holds(c, point))
}

#[test]
fn criterion_5_decider_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut disagreements = Vec::new();
    let (mut sat, mut unsat, mut valid, mut invalid) = (0, 0, 0, 0);

    for i in 0..500 {
        let n = rng.gen_range(1..=3);
        let vars = &VARS[..n];
        let mut cube = box_bounds(vars);
        for _ in 0..rng.gen_range(1..=4) {
            cube.push(random_constraint(&mut rng, vars));
        }
        let expected = box_points(vars).into_iter().any(|p| cube_holds(&cube, &p));
        match decide_sat(&cube) {
            Ok(SatResult::Sat(sigma)) if expected && cube_holds(&cube, &sigma) => sat += 1,
            Ok(SatResult::Unsat(w)) if !expected && replay_witness(&cube, &w) => unsat += 1,
            other => disagreements.push(format!("cube {i}: expected sat={expected}, got {other:?}")),
        }
    }

    let env: VarEnv = VARS.iter().map(|v| (v.to_string(), Ty::parse("int8").unwrap())).collect();
    for i in 0..500 {
        let n = rng.gen_range(1..=3);
        let vars = &VARS[..n];
        let hyp: Dnf = (0..rng.gen_range(1..=2))
            .map(|_| {
                let mut c = box_bounds(vars);
                for _ in 0..rng.gen_range(0..=2) {
                    c.push(random_constraint(&mut rng, vars));
                }
                c
            })
            .collect();
        let concl: Dnf = (0..rng.gen_range(1..=2))
            .map(|_| (0..rng.gen_range(1..=2)).map(|_| random_constraint(&mut rng, vars)).collect())
            .collect();
        let expected = box_points(vars).into_iter().all(|p| !dnf_holds(&hyp, &p) || dnf_holds(&concl, &p));
        match decide_valid_implication(&hyp, &concl, &env) {
            Ok(Implication::Valid(proofs)) if expected => {
                let cubes = implication_cubes(&hyp, &concl, &env).unwrap();
                if cubes.len() == proofs.len() && cubes.iter().zip(&proofs).all(|(c, p)| replay_witness(c, p)) {
                    valid += 1;
                } else {
                    disagreements.push(format!("implication {i}: witnesses do not replay"));
                }
            }
            Ok(Implication::Invalid(sigma)) if !expected => {
                let full = vars.iter().all(|v| sigma.contains_key(*v));
                if full && dnf_holds(&hyp, &sigma) && !dnf_holds(&concl, &sigma) {
                    invalid += 1;
                } else {
                    disagreements.push(format!("implication {i}: bad counterexample {sigma:?}"));
                }
            }
            other => disagreements.push(format!("implication {i}: expected valid={expected}, got {other:?}")),
        }
    }
    let elapsed = start.elapsed();
    report(
        5,
        "decider oracle",
        disagreements.is_empty()
            && sat > 0
            && unsat > 0
            && valid > 0
            && invalid > 0
            && elapsed < Duration::from_secs(30),
        &format!(
            "cubes {sat} sat / {unsat} unsat, implications {valid} valid / {invalid} invalid, {elapsed:?}, \
             disagreements {disagreements:?}"
        ),
    );
}

/// Byte ranges of decimal literals not glued to an identifier.
fn number_spans(text: &str) -> Vec<(usize, usize)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() && (i == 0 || !(b[i - 1].is_ascii_alphanumeric() || b[i - 1] == b'_')) {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i == b.len() || !(b[i].is_ascii_alphabetic() || b[i] == b'_') {
                out.push((s, i));
            }
        } else {
            i += 1;
        }
    }
    out
}

fn bump_number(rng: &mut ChaCha8Rng, text: &str) -> Option<String> {
    let spans = number_spans(text);
    if spans.is_empty() {
        return None;
    }
    let (s, e) = spans[rng.gen_range(0..spans.len())];
    let old: i128 = text[s..e].parse().ok()?;
    let new = match rng.gen_range(0..3) {
        0 => old + 1,
        1 => (old - 1).max(0),
        _ => rng.gen_range(0..=20),
    };
    (new != old).then(|| format!("{}{new}{}", &text[..s], &text[e..]))
}

fn flip_operator(rng: &mut ChaCha8Rng, text: &str) -> Option<String> {
    const SWAPS: [(&str, &str); 6] = [("<=", "<"), (">=", ">"), ("==", "!="), ("&&", "||"), ("||", "&&"), ("!=", "==")];
    let hits: Vec<(usize, &str, &str)> =
        SWAPS.iter().flat_map(|(a, b)| text.match_indices(a).map(move |(i, _)| (i, *a, *b))).collect();
    if hits.is_empty() {
        return None;
    }
    let (i, a, b) = hits[rng.gen_range(0..hits.len())];
    Some(format!("{}{b}{}", &text[..i], &text[i + a.len()..]))
}

fn count_lists(s: &Sexp) -> usize {
    match s {
        Sexp::Atom(_) => 0,
        Sexp::List(items) => 1 + items.iter().map(count_lists).sum::<usize>(),
    }
}

/// Removes the `target`-th list (pre-order, root excluded) from the tree.
fn prune(s: &mut Sexp, target: &mut usize) -> bool {
    let Sexp::List(items) = s else { return false };
    let mut i = 0;
    while i < items.len() {
        if matches!(items[i], Sexp::List(_)) {
            if *target == 0 {
                items.remove(i);
                return true;
            }
            *target -= 1;
            if prune(&mut items[i], target) {
                return true;
            }
        }
        i += 1;
    }
    false
}

fn prune_proof(rng: &mut ChaCha8Rng, proof: &str) -> Option<String> {
    let mut tree = sexp::parse(proof).ok()?;
    let n = count_lists(&tree).saturating_sub(1);
    if n == 0 {
        return None;
    }
    let mut target = rng.gen_range(0..n);
    prune(&mut tree, &mut target).then(|| {
        let mut out = String::new();
        tree.pretty(0, &mut out);
        out.push('\n');
        out
    })
}

struct Sections {
    header: String,
    model: String,
    property: String,
    proof: String,
}

fn sections(text: &str) -> Sections {
    let (header, rest) = text.split_once("--- model\n").unwrap();
    let (model, rest) = rest.split_once("--- property\n").unwrap();
    let (property, proof) = rest.split_once("--- proof\n").unwrap();
    Sections { header: header.into(), model: model.into(), property: property.into(), proof: proof.into() }
}

fn assemble(s: &Sections) -> String {
    let digest = text_digest(&s.model);
    let header: String = s
        .header
        .lines()
        .map(|l| if l.starts_with("digest: ") { format!("digest: {digest}\n") } else { format!("{l}\n") })
        .collect();
    format!("{header}--- model\n{}--- property\n{}--- proof\n{}", s.model, s.property, s.proof)
}

/// True when the explorer finds no violation of the embedded property.
fn oracle_agrees(text: &str) -> Result<bool, String> {
    let cert = Certificate::parse(text)?;
    let model = parse_model(&cert.model_text).map_err(|e| e.to_string())?;
    let props = parse_properties(&cert.property_text, &model).map_err(|e| e.to_string())?;
    let ex = explore(&model, cert.init_actions, 40);
    Ok(props.iter().all(|p| ex.states.iter().all(|s| p.formula.holds(s).unwrap_or(false))))
}

#[test]
fn criterion_6_tamper_resistance() {
    let start = Instant::now();
    let mut originals = Vec::new();
    for f in all_fixtures() {
        for p in &f.props {
            let r = verify_invariant(&f.model, &p.formula, VerifyOptions::default());
            if r.is_proved() {
                originals.push(emit(&f.model, p, &r, InitActions::FromSteps).unwrap().to_text());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut tried, mut rejected, mut accepted_confirmed) = (0, 0, 0);
    let mut unsound = Vec::new();
    while tried < 240 {
        let text = &originals[rng.gen_range(0..originals.len())];
        let mut s = sections(text);
        let kind = rng.gen_range(0..5);
        let changed = match kind {
            0 => bump_number(&mut rng, &s.model).map(|m| s.model = m),
            1 => bump_number(&mut rng, &s.proof).map(|p| s.proof = p),
            2 => prune_proof(&mut rng, &s.proof).map(|p| s.proof = p),
            3 => bump_number(&mut rng, &s.property).map(|p| s.property = p),
            _ => flip_operator(&mut rng, &s.property).map(|p| s.property = p),
        };
        if changed.is_none() {
            continue;
        }
        tried += 1;
        let mutated = assemble(&s);
        if !check(mutated.as_bytes()).is_accepted() {
            rejected += 1;
            continue;
        }
        match oracle_agrees(&mutated) {
            Ok(true) => accepted_confirmed += 1,
            Ok(false) => unsound.push(format!("kind {kind}: accepted but falsified\n{mutated}")),
            Err(e) => unsound.push(format!("kind {kind}: accepted but unreadable: {e}")),
        }
    }
    let elapsed = start.elapsed();
    report(
        6,
        "tamper resistance",
        unsound.is_empty() && tried >= 100 && elapsed < Duration::from_secs(60),
        &format!(
            "{tried} mutations of {} certificates: {rejected} rejected, {accepted_confirmed} accepted and \
             confirmed by the explorer, {} unsound, {elapsed:?}",
            originals.len(),
            unsound.len()
        ),
    );
    assert!(unsound.is_empty(), "{}", unsound.join("\n"));
}

#[test]
fn criterion_7_structural_lemmas() {
    let opts = VerifyOptions::default();

    let u = fixture("unreachable");
    let context = [prop(&u, "range").formula.clone()];
    let derived = check_guard_unreachable(&u.model, "Alarm", &context, opts).unwrap();
    let ex = explore(&u.model, InitActions::FromSteps, 40);
    let alarm_seen = ex.states.iter().any(|s| s.step_active("Alarm"));
    let unreachable_ok = derived.result.is_proved() && !alarm_seen;

    let l = fixture("loop");
    let trigger = parse_formula("x >= 10 && step(Init)", &l.model).unwrap();
    let context = [prop(&l, "exclusive").formula.clone()];
    let verdict = check_determined_successor(&l.model, &trigger, "Return", &context, opts).unwrap();
    let ex = explore(&l.model, InitActions::FromSteps, 40);
    let leads_to_return = |t: usize| l.model.transitions[t].targets == ["Return"];
    let mut trigger_states = 0;
    let oracle_ok = ex.states.iter().filter(|s| trigger.holds(s).unwrap()).all(|s| {
        trigger_states += 1;
        let on: Vec<usize> =
            (0..l.model.transitions.len()).filter(|t| enabled(&l.model, *t).eval(&l.model, s).unwrap()).collect();
        !on.is_empty() && on.iter().all(|t| leads_to_return(*t))
    });
    let successor_ok = matches!(verdict, Determined::Proved { .. }) && oracle_ok && trigger_states > 0;

    let a = fixture("ambiguous");
    let trigger = parse_formula("t >= 5 && step(Wait)", &a.model).unwrap();
    let context = [prop(&a, "one_active").formula.clone()];
    let ambiguous = check_determined_successor(&a.model, &trigger, "Left", &context, opts).unwrap();
    let ex = explore(&a.model, InitActions::FromSteps, 40);
    let both_reachable = ex
        .states
        .iter()
        .any(|s| trigger.holds(s).unwrap() && (0..2).all(|t| enabled(&a.model, t).eval(&a.model, s).unwrap()));
    let ambiguous_ok =
        matches!(&ambiguous, Determined::Refuted { transitions, .. } if transitions == &[0, 1]) && both_reachable;

    report(
        7,
        "unreachable step and determined successor",
        unreachable_ok && successor_ok && ambiguous_ok,
        &format!(
            "unreachable {} (Alarm seen: {alarm_seen}), successor {verdict:?} over {trigger_states} trigger states, \
             ambiguous refuted: {ambiguous_ok}",
            derived.result.verdict()
        ),
    );
}

#[test]
fn criterion_8_fbd_equivalence() {
    let f = fixture("fbd_counter");
    let env = f.model.var_env();
    let inc = f.model.fbds.iter().find(|d| d.name == "inc").unwrap();
    let counter = f.model.fbds.iter().find(|d| d.name == "counter3").unwrap();
    let inc = fbd_to_action(inc, &env).unwrap();
    let counter = fbd_to_action(counter, &env).unwrap();
    assert!(inc.is_acyclic() && !counter.is_acyclic());

    // Oracles as assignment lists on the same variables, plus an int8 copy
    // of both diagrams checked over the whole domain.
    let oracle_src = format!(
        "{}\n{}",
        std::fs::read_to_string(common::fixtures_dir().join("fbd_counter.sfc")).unwrap(),
        "step Oracle\naction OracleInc on Oracle { x := x + 1; }\naction OracleCounter on Oracle { y := y + 3; }\n"
    );
    let oracle_model = parse_model(&oracle_src).unwrap();
    let oracle = Machine::new(&oracle_model).unwrap();
    let narrow_src = "var x : int8\nvar y : int8\n\
        fbd inc {\n block r = read x\n block s = add(r.out, const 1)\n block w = write x (s.out)\n timeslice 1\n}\n\
        fbd counter3 {\n block r = read y\n block s = add(d.out, const 1)\n block d = delay(s.out)\n\
         block o = add(r.out, s.out)\n block w = write y (o.out)\n timeslice 3\n}\n\
        step S initial\n\
        action I on S fbd inc\naction C on S fbd counter3\n\
        action OI on S { x := x + 1; }\naction OC on S { y := y + 3; }\n";
    let narrow = parse_model(narrow_src).unwrap();
    let narrow_m = Machine::new(&narrow).unwrap();

    let mut checked = 0;
    let mut mismatches = Vec::new();
    let wide_values: Vec<u64> = (0..16).chain(65_530..65_536).collect();
    for &x in &wide_values {
        for &y in &wide_values {
            let mut mem = oracle.init_state().mem;
            mem.insert("x".into(), certplc_core::expr::Value::int(certplc_core::expr::IntTy::U16, x));
            mem.insert("y".into(), certplc_core::expr::Value::int(certplc_core::expr::IntTy::U16, y));
            if inc.apply(&mem).unwrap() != oracle.apply_effect("OracleInc", &mem).unwrap() {
                mismatches.push(format!("inc at x={x}"));
            }
            if counter.apply(&mem).unwrap() != oracle.apply_effect("OracleCounter", &mem).unwrap() {
                mismatches.push(format!("counter3 at y={y}"));
            }
            checked += 2;
        }
    }
    for x in 0..256u64 {
        let mut mem = narrow_m.init_state().mem;
        mem.insert("x".into(), certplc_core::expr::Value::int(certplc_core::expr::IntTy::U8, x));
        mem.insert("y".into(), certplc_core::expr::Value::int(certplc_core::expr::IntTy::U8, x));
        for (fbd, assign) in [("I", "OI"), ("C", "OC")] {
            if narrow_m.apply_effect(fbd, &mem).unwrap() != narrow_m.apply_effect(assign, &mem).unwrap() {
                mismatches.push(format!("int8 {fbd} at {x}"));
            }
            checked += 1;
        }
    }
    report(
        8,
        "FBD equivalence",
        mismatches.is_empty(),
        &format!("{checked} memories compared, mismatches {mismatches:?}"),
    );
}
