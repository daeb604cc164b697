#![no_main]

use libfuzzer_sys::fuzz_target;
use refprop::maxent::{load_model, per_feature_conditional, save_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = load_model(text) else {
        return;
    };
    let back = load_model(&save_model(&model)).expect("saved model loads");
    assert_eq!(back.feature_index(), model.feature_index());
    for f in model.feature_index() {
        let p = per_feature_conditional(&model, f).expect("known feature");
        assert!(p.0.iter().all(|x| !x.is_nan()));
    }
});
