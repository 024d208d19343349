#![no_main]

use libfuzzer_sys::fuzz_target;

use memcluster::gateway::{oracle_complete, parse_response, OracleScript};

fuzz_target!(|data: &[u8]| {
    let Ok(script) = serde_json::from_slice::<OracleScript>(data) else { return };
    if script.validate().is_err() {
        return;
    }
    // Any valid script must only ever emit grammar-conformant replies.
    let doc_ids: Vec<String> = script.labeler.keys().take(8).cloned().collect();
    for (step, doc_id) in doc_ids.iter().enumerate() {
        if let Ok(reply) = oracle_complete(doc_id, step + 1, &script, &[], true) {
            parse_response(&reply).expect("oracle reply must parse");
        }
    }
});
