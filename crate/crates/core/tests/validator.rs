mod common;

use compacts::ledger::{sign_submissions, Event, Value};
use compacts::validator::{check_integrity, validate_event_schema, IntegrityError, IntegrityIndex, IntegrityRuleSet, SchemaError};

fn rules() -> IntegrityRuleSet {
    IntegrityRuleSet::from_spec(&common::spec("hospital")).unwrap()
}

fn fixture_events(name: &str) -> Vec<Event> {
    let subs = compacts::ledger::parse_scenario(&common::read(&format!("validator/{name}.jsonl"))).unwrap();
    sign_submissions(&subs, &common::net("hospital").principals).unwrap()
}

#[test]
fn key_conflict_fixture() {
    let rules = rules();
    let evs = fixture_events("key_conflict");
    assert_eq!(check_integrity(&evs[0], &[], &rules), Ok(()));
    let errs = check_integrity(&evs[1], &evs[..1], &rules).unwrap_err();
    assert_eq!(
        errs,
        vec![IntegrityError::KeyConflict {
            event_type: "InvestigationReport".into(),
            keys: [("case".to_string(), Value::text("charlie"))].into(),
        }]
    );
    // Same keys, same outs: a restatement, not a conflict.
    assert_eq!(check_integrity(&evs[0], &evs[..1], &rules), Ok(()));
}

#[test]
fn unbound_in_fixture() {
    let rules = rules();
    let evs = fixture_events("unbound_in");
    let errs = check_integrity(&evs[1], &evs[..1], &rules).unwrap_err();
    assert_eq!(errs, vec![IntegrityError::UnboundInParameter { name: "patient".into(), value: Value::text("zed") }]);
}

#[test]
fn schema_checks() {
    let rules = rules();
    let share = &fixture_events("unbound_in")[1];
    let mut ok = share.clone();
    ok.attributes.insert("patient".into(), "charlie".into());
    assert_eq!(validate_event_schema(&ok, &rules), Ok(()));
    let mut wrong_kind = ok.clone();
    wrong_kind.attributes.insert("patient".into(), Value::Int(3));
    assert_eq!(validate_event_schema(&wrong_kind, &rules), Err(vec![SchemaError::KindMismatch("patient".into())]));
    let mut unknown = ok.clone();
    unknown.event_type = "Gossip".into();
    assert_eq!(validate_event_schema(&unknown, &rules), Err(vec![SchemaError::UnknownEventType("Gossip".into())]));
    let mut outsider = ok;
    outsider.emitter = "insurer".into();
    assert!(matches!(
        validate_event_schema(&outsider, &rules).unwrap_err()[..],
        [SchemaError::EmitterNotOnChannel { .. }]
    ));
}

#[test]
fn rejections_survive_extensions() {
    common::props::rejections_persist(&rules(), 1000, 17).unwrap();
}

#[test]
fn index_agrees_with_scan() {
    let rules = rules();
    let mut r = common::random::rng(23);
    for run in 0..20 {
        let mut admitted: Vec<Event> = Vec::new();
        let mut index = IntegrityIndex::new();
        for i in 0..100 {
            let e = common::random::hospital_event(&mut r, run * 1000 + i);
            let scan = check_integrity(&e, &admitted, &rules);
            assert_eq!(index.check(&e, &rules), scan, "run {run} step {i}");
            if scan.is_ok() {
                index.record(&e, &rules);
                admitted.push(e);
            }
        }
    }
}
