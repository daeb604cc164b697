#![no_main]

use libfuzzer_sys::fuzz_target;
use refprop::pipeline::parse_annotated;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = parse_annotated(text) {
            assert_eq!(file.predictions.len(), file.corpus.documents.len());
            for (doc, preds) in file.corpus.documents.iter().zip(&file.predictions) {
                assert_eq!(doc.nps.len(), preds.len());
            }
        }
    }
});
