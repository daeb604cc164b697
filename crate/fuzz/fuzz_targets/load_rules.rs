#![no_main]

use libfuzzer_sys::fuzz_target;
use refprop::rules::{load_rules, write_rules};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rules) = load_rules(text) {
            let back = load_rules(&write_rules(&rules)).expect("written rules load");
            assert_eq!(back, rules);
        }
    }
});
