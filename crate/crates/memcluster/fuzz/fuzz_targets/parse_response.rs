#![no_main]

use libfuzzer_sys::fuzz_target;

use memcluster::gateway::{parse_response, render_canonical};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(parsed) = parse_response(text) {
        // Whatever parses must survive a canonical round trip.
        let rendered = render_canonical(&parsed);
        let reparsed = parse_response(&rendered).expect("canonical rendering must parse");
        assert_eq!(reparsed.kind, parsed.kind);
        assert_eq!(reparsed.label, parsed.label);
        assert_eq!(reparsed.merge, parsed.merge);
    }
});
