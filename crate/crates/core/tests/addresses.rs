use std::cmp::Ordering;

use param_atlas::address::{bounded_between, cyclic_between, lex_compare, Address, IntermediateAddress};
use param_atlas::ExternalAddress;
use proptest::prelude::*;

/// Slot values from the text form: doubled entries, `None` for `inf`.
fn expand(text: &str, len: usize) -> Vec<Option<i64>> {
    let (pre, per) = match text.split_once('|') {
        Some((a, b)) => (a, Some(b)),
        None => (text, None),
    };
    let tok = |t: &str| -> Option<i64> {
        if t == "inf" {
            None
        } else if let Some(n) = t.strip_suffix("/2") {
            Some(n.parse().unwrap())
        } else {
            Some(2 * t.parse::<i64>().unwrap())
        }
    };
    let mut out: Vec<Option<i64>> = pre.split_whitespace().map(tok).collect();
    if let Some(per) = per {
        let cyc: Vec<Option<i64>> = per.split_whitespace().map(tok).collect();
        while out.len() < len {
            out.extend(cyc.iter().copied());
        }
    }
    out.truncate(len);
    out
}

fn oracle_cmp(a: &Address, b: &Address) -> Ordering {
    let (x, y) = (expand(&a.to_string(), 200), expand(&b.to_string(), 200));
    for k in 0..200 {
        let (p, q) = (x.get(k).copied(), y.get(k).copied());
        match (p, q) {
            (Some(Some(u)), Some(Some(v))) if u == v => continue,
            (Some(Some(u)), Some(Some(v))) => return u.cmp(&v),
            (Some(None), Some(None)) => return Ordering::Equal,
            (Some(None), _) => return Ordering::Greater,
            (_, Some(None)) => return Ordering::Less,
            _ => return Ordering::Equal,
        }
    }
    Ordering::Equal
}

fn external() -> impl Strategy<Value = ExternalAddress> {
    (prop::collection::vec(-3i64..=3, 0..3), prop::collection::vec(-3i64..=3, 1..4))
        .prop_map(|(pre, per)| ExternalAddress::new(pre, per).unwrap())
}

fn intermediate() -> impl Strategy<Value = IntermediateAddress> {
    (prop::collection::vec(-3i64..=3, 0..3), -3i64..=2)
        .prop_map(|(ints, half)| IntermediateAddress::new(ints, 2 * half + 1).unwrap())
}

fn address() -> impl Strategy<Value = Address> {
    prop_oneof![
        3 => external().prop_map(Address::from),
        1 => intermediate().prop_map(Address::from),
    ]
}

fn cyclic_address() -> impl Strategy<Value = Address> {
    prop_oneof![6 => address(), 1 => Just(Address::infinity())]
}

proptest! {
    #[test]
    fn lex_matches_expansion(a in address(), b in address()) {
        prop_assert_eq!(lex_compare(&a, &b).unwrap(), oracle_cmp(&a, &b));
        prop_assert_eq!(lex_compare(&b, &a).unwrap(), lex_compare(&a, &b).unwrap().reverse());
    }

    #[test]
    fn lex_is_transitive(a in address(), b in address(), c in address()) {
        let ab = lex_compare(&a, &b).unwrap();
        let bc = lex_compare(&b, &c).unwrap();
        if ab != Ordering::Greater && bc != Ordering::Greater {
            prop_assert_ne!(lex_compare(&a, &c).unwrap(), Ordering::Greater);
        }
    }

    #[test]
    fn text_round_trip(a in address()) {
        let back: Address = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn cyclic_rotation_and_swap(a in cyclic_address(), b in cyclic_address(), x in cyclic_address()) {
        match cyclic_between(&a, &b, &x) {
            Ok(v) => {
                prop_assert_eq!(cyclic_between(&x, &a, &b).unwrap(), v);
                prop_assert_eq!(cyclic_between(&b, &x, &a).unwrap(), v);
                prop_assert_eq!(cyclic_between(&b, &a, &x).unwrap(), !v);
            }
            Err(_) => {
                let distinct = |p: &Address, q: &Address| p.to_string() != q.to_string();
                prop_assert!(!(distinct(&a, &b) && distinct(&a, &x) && distinct(&b, &x)));
            }
        }
    }

    #[test]
    fn bounded_addresses_are_dense(a in address(), b in address()) {
        match lex_compare(&a, &b).unwrap() {
            Ordering::Equal => prop_assert!(bounded_between(&a, &b).is_err()),
            order => {
                let w = bounded_between(&a, &b).unwrap();
                prop_assert!(w.max_abs_entry() <= 5);
                let w = Address::from(w);
                prop_assert_eq!(oracle_cmp(&a, &w), order);
                prop_assert_eq!(oracle_cmp(&w, &b), order);
            }
        }
    }

    #[test]
    fn conjugation_reverses_order(a in external(), b in external()) {
        let (ca, cb) = (Address::from(a.conjugate()), Address::from(b.conjugate()));
        prop_assert_eq!(lex_compare(&ca, &cb).unwrap(), lex_compare(&Address::from(b), &Address::from(a)).unwrap());
    }

    #[test]
    fn shift_drops_first_entry(a in external()) {
        let s = a.shift();
        for k in 1..20 {
            prop_assert_eq!(s.entry(k), a.entry(k + 1));
        }
        prop_assert_eq!(a.conjugate().shift(), s.conjugate());
    }
}
