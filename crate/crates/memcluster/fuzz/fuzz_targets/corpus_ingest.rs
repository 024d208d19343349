#![no_main]

use libfuzzer_sys::fuzz_target;

use memcluster::pipeline::corpus::ingest_reader;

fuzz_target!(|data: &[u8]| {
    if let Ok(docs) = ingest_reader(data) {
        let mut ids = std::collections::HashSet::new();
        for doc in &docs {
            assert!(!doc.text.trim().is_empty());
            assert!(ids.insert(doc.id.clone()), "duplicate id {}", doc.id);
        }
    }
});
