#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Decoding untrusted bytes must never panic, and a successful decode
    // must survive a re-encode round trip bit for bit.
    if let Ok(rec) = obcs::record::decode(data) {
        let bytes = obcs::record::encode(&rec);
        let again = obcs::record::decode(&bytes).expect("re-encoded record must decode");
        assert_eq!(again.y, rec.y);
        assert_eq!(again.c, rec.c);
        assert_eq!(again.m, rec.m);
        assert_eq!(again.rng, rec.rng);
        assert_eq!(again.model, rec.model);
    }
});
