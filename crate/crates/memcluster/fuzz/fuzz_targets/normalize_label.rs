#![no_main]

use libfuzzer_sys::fuzz_target;

use memcluster::model::normalize_label;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(label) = normalize_label(text) {
        let s = label.as_str();
        assert!(!s.is_empty());
        assert_eq!(s, s.trim());
        assert!(!s.contains("  "), "whitespace runs must be collapsed: {s:?}");
    }
});
