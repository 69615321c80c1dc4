//! Seeded random compacts and chains for the evaluator properties.

use compacts::ledger::{Attributes, Chain, Event, Target, Value};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

const HEADER: &str = r#"compact Gen context "org" {
  roles R, S;
  member "m": R;
  member "n": S;
  member "org": S;
  schema A(key k: text, out v: text);
  schema B(key k: text);
  schema C(key k: text);
  schema D(key k: text);
  channel all members R, S carries A, B, C, D;
  counts-as A(k = k, v = "yes") by R as F(k = k);
"#;

const ATOMS: &[&str] =
    &["A(k = k)", "B(k = k)", "C(k = k)", "D(k = k)", "F(k = k)", "A(k = k, v = \"no\")", "B(k = \"x\", k = k)"];

pub struct Scenario {
    pub spec_src: String,
    pub chain: Chain,
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn atom(r: &mut StdRng) -> String {
    // The last atom repeats an attribute, which the checker rejects.
    ATOMS[..ATOMS.len() - 1].choose(r).unwrap().to_string()
}

fn condition(r: &mut StdRng) -> String {
    match r.random_range(0..5) {
        0 | 1 => atom(r),
        2 => format!("{} and {}", atom(r), atom(r)),
        3 => format!("{} or {}", atom(r), atom(r)),
        _ => format!("{} before {}", atom(r), atom(r)),
    }
}

/// A compact with one to three norms over the fixed schema universe.
pub fn random_spec(r: &mut StdRng) -> String {
    let n = r.random_range(1..=3);
    let mut src = HEADER.to_string();
    for i in 0..n {
        let create = if i > 0 && r.random_bool(0.4) {
            let state = ["Violated", "Satisfied", "Expired", "Detached"].choose(r).unwrap();
            let target = r.random_range(0..n);
            format!("{state}(N{target}, k = k)")
        } else {
            condition(r)
        };
        if r.random_bool(0.5) {
            src.push_str(&format!(
                "  commitment N{i} {{ subject R(\"m\"); object S(k); create on {create};"
            ));
            if r.random_bool(0.7) {
                src.push_str(&format!(" antecedent {};", condition(r)));
            }
            src.push_str(&format!(" consequent {};", condition(r)));
            if r.random_bool(0.7) {
                src.push_str(&format!(" within {} blocks;", r.random_range(1..=3)));
            }
            if r.random_bool(0.5) {
                src.push_str(&format!(" expires after {} blocks;", r.random_range(1..=3)));
            }
        } else {
            src.push_str(&format!(
                "  prohibition N{i} {{ subject R(\"m\"); object S(k); create on {create}; forbids {};",
                condition(r)
            ));
            if r.random_bool(0.6) {
                src.push_str(&format!(" unless {};", condition(r)));
            }
            if r.random_bool(0.6) {
                src.push_str(&format!(" until {};", condition(r)));
            }
        }
        src.push_str(" }\n");
    }
    src.push_str("}\n");
    src
}

pub fn random_event(r: &mut StdRng, id: usize) -> Event {
    let ty = *["A", "B", "C", "D"].choose(r).unwrap();
    let mut attrs = Attributes::new();
    attrs.insert("k".into(), Value::text(*["x", "y"].choose(r).unwrap()));
    if ty == "A" {
        attrs.insert("v".into(), Value::text(*["yes", "no"].choose(r).unwrap()));
    }
    let emitter = *["m", "n"].choose(r).unwrap();
    Event::signed(format!("e{id}"), ty, attrs, emitter, id as u64, "secret")
}

/// Appends `events` new events spread over blocks of up to three, with
/// empty blocks mixed in.
pub fn extend_chain(r: &mut StdRng, chain: &mut Chain, events: usize, first_id: usize) {
    let mut next = first_id;
    let end = first_id + events;
    while next < end {
        let size = r.random_range(0..=3).min(end - next);
        let block: Vec<Event> = (next..next + size).map(|i| random_event(r, i)).collect();
        next += size;
        chain.mine_and_push(block, Target::MAX, "miner").unwrap();
    }
}

pub fn random_scenario(seed: u64) -> Scenario {
    let mut r = rng(seed);
    let spec_src = random_spec(&mut r);
    let mut chain = Chain::genesis();
    let events = r.random_range(0..=50);
    extend_chain(&mut r, &mut chain, events, 0);
    Scenario { spec_src, chain }
}

/// An event over the hospital schemas with values from small pools, so key
/// conflicts and in-bindings both happen often. Attributes always fit the
/// schema; only integrity can reject it.
pub fn hospital_event(r: &mut StdRng, id: usize) -> Event {
    let pick = |r: &mut StdRng, pool: &[&str]| Value::text(*pool.choose(r).unwrap());
    let mut a = Attributes::new();
    let (ty, emitter) = match r.random_range(0..6) {
        0 => {
            a.insert("patient".into(), pick(r, &["charlie", "dana", "zed"]));
            a.insert("nurse".into(), pick(r, &["bob", "alice"]));
            ("Admit", "hospital")
        }
        1 => {
            a.insert("patient".into(), pick(r, &["charlie", "dana", "zed"]));
            a.insert("sharer".into(), pick(r, &["bob", "alice"]));
            a.insert("recipient".into(), pick(r, &["insurer", "lab"]));
            ("Share", "bob")
        }
        2 => {
            a.insert("patient".into(), pick(r, &["charlie", "dana"]));
            ("Consent", "charlie")
        }
        3 => {
            a.insert("patient".into(), pick(r, &["charlie", "dana", "zed"]));
            ("Discharge", "hospital")
        }
        4 => {
            a.insert("case".into(), pick(r, &["charlie", "dana"]));
            a.insert("verdict".into(), pick(r, &["breach", "no breach"]));
            ("InvestigationReport", "hospital")
        }
        _ => {
            a.insert("case".into(), pick(r, &["charlie", "dana"]));
            ("Complaint", "charlie")
        }
    };
    Event::signed(format!("h{id}"), ty, a, emitter, id as u64, "secret")
}
