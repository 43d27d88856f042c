mod support;

use std::collections::HashMap;

use certchain_core::canonical::{canonicalize, cert_hash, decode_canonical};
use certchain_core::CertificateData;
use proptest::prelude::*;
use support::fixtures;

fn field() -> impl Strategy<Value = String> {
    // includes non-ASCII and characters that look like separators
    "[a-zA-Z0-9 çãéÁ:,|\\-]{0,12}[a-zA-Z0-9çé]"
}

fn date() -> impl Strategy<Value = (i32, u32, u32)> {
    (1990i32..2040, 1u32..=12, 1u32..=28)
}

prop_compose! {
    fn well_formed()(id in field(), holder in field(), course in field(), inst in field(),
                     a in date(), b in date()) -> CertificateData {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let fmt = |(y, m, d): (i32, u32, u32)| format!("{y:04}-{m:02}-{d:02}");
        CertificateData::new(id.trim(), holder.trim(), course.trim(), inst.trim(), fmt(lo), fmt(hi))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn distinct_tuples_have_distinct_encodings(a in well_formed(), b in well_formed()) {
        let (ea, eb) = (canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
        let same_tuple = a.normalized().unwrap() == b.normalized().unwrap();
        prop_assert_eq!(same_tuple, ea == eb);
        prop_assert_eq!(same_tuple, cert_hash(&a).unwrap() == cert_hash(&b).unwrap());
    }
}

proptest! {
    #[test]
    fn canonical_decoding_recovers_tuple(c in well_formed()) {
        let bytes = canonicalize(&c).unwrap();
        prop_assert_eq!(decode_canonical(&bytes).unwrap(), c.normalized().unwrap());
    }

    #[test]
    fn hash_is_pure(c in well_formed()) {
        prop_assert_eq!(cert_hash(&c).unwrap(), cert_hash(&c.clone()).unwrap());
    }
}

/// Field boundaries move but the concatenation stays the same; the length
/// prefixes must keep these apart.
#[test]
fn shifted_boundaries_do_not_collide() {
    let mut seen = HashMap::new();
    for split in 1..6 {
        let joined = "abcdef";
        let c = CertificateData::new(&joined[..split], &joined[split..], "c", "i", "2025-01-01", "2025-01-01");
        let prev = seen.insert(canonicalize(&c).unwrap(), split);
        assert!(prev.is_none());
    }
}

#[test]
fn alice_fixture_digest() {
    assert_eq!(cert_hash(&fixtures::alice()).unwrap().to_hex(), fixtures::ALICE_DIGEST);
}
