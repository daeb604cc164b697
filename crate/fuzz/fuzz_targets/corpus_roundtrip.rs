#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(corpus) = refprop::parse_corpus(text) else {
        return;
    };
    let written = refprop::write_corpus(&corpus);
    let back = refprop::parse_corpus(&written).expect("written corpus parses");
    assert_eq!(back, corpus);
    assert_eq!(refprop::write_corpus(&back), written);
});
