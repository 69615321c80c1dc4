//! Single-byte mutations of events inside a chain.

use compacts::ledger::{Chain, Digest, Value};
use rand::rngs::StdRng;
use rand::Rng;

fn flip_str(s: &str, at: usize, mask: u8) -> Option<String> {
    let mut b = s.as_bytes().to_vec();
    b[at] ^= mask;
    String::from_utf8(b).ok()
}

/// Mutates one byte of one event's fields, chosen uniformly over the bytes
/// of the event's encoded fields. Returns the block index touched.
pub fn mutate_event_byte(chain: &mut Chain, r: &mut StdRng) -> usize {
    let with_events: Vec<usize> = (0..chain.len()).filter(|&i| !chain.blocks[i].events.is_empty()).collect();
    assert!(!with_events.is_empty(), "no events to tamper with");
    let bi = with_events[r.random_range(0..with_events.len())];
    let ei = r.random_range(0..chain.blocks[bi].events.len());
    loop {
        let mask: u8 = r.random_range(1..=255);
        let e = &mut chain.blocks[bi].events[ei];
        let mut slots: Vec<(usize, usize)> = vec![
            (0, e.event_id.len()),
            (1, e.event_type.len()),
            (2, e.emitter.len()),
            (3, 8),
            (4, 32),
        ];
        for (i, (k, v)) in e.attributes.iter().enumerate() {
            slots.push((10 + 2 * i, k.len()));
            let vlen = match v {
                Value::Text(s) => s.len(),
                Value::Int(_) => 8,
                Value::Bool(_) => 1,
            };
            slots.push((11 + 2 * i, vlen));
        }
        let total: usize = slots.iter().map(|s| s.1).sum();
        let mut pick = r.random_range(0..total);
        let (field, at) = slots
            .iter()
            .find_map(|&(f, n)| if pick < n { Some((f, pick)) } else { pick -= n; None })
            .unwrap();
        let ok = match field {
            0 => flip_str(&e.event_id, at, mask).map(|s| e.event_id = s).is_some(),
            1 => flip_str(&e.event_type, at, mask).map(|s| e.event_type = s).is_some(),
            2 => flip_str(&e.emitter, at, mask).map(|s| e.emitter = s).is_some(),
            3 => {
                let mut b = e.logical_ts.to_be_bytes();
                b[at] ^= mask;
                e.logical_ts = u64::from_be_bytes(b);
                true
            }
            4 => {
                let mut d = e.signature.0;
                d[at] ^= mask;
                e.signature = Digest(d);
                true
            }
            n => {
                let idx = (n - 10) / 2;
                let key = e.attributes.keys().nth(idx).unwrap().clone();
                if n % 2 == 0 {
                    match flip_str(&key, at, mask) {
                        Some(k) if !e.attributes.contains_key(&k) => {
                            let v = e.attributes.remove(&key).unwrap();
                            e.attributes.insert(k, v);
                            true
                        }
                        _ => false,
                    }
                } else {
                    let v = e.attributes.get_mut(&key).unwrap();
                    match v {
                        Value::Text(s) => flip_str(s, at, mask).map(|n| *s = n).is_some(),
                        Value::Int(i) => {
                            let mut b = i.to_be_bytes();
                            b[at] ^= mask;
                            *i = i64::from_be_bytes(b);
                            true
                        }
                        Value::Bool(b) => {
                            *b = !*b;
                            true
                        }
                    }
                }
            }
        };
        if ok {
            return bi;
        }
    }
}
