#![no_main]

use libfuzzer_sys::fuzz_target;

use memcluster::pipeline::{replay_events, Record, RunEvent};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let events: Vec<RunEvent> = text
        .lines()
        .filter_map(|line| serde_json::from_str::<Record>(line).ok())
        .filter_map(|record| match record {
            Record::Step { event } => Some(event),
            Record::Config { .. } => None,
        })
        .collect();
    // Replay must reject inconsistent logs, never panic on them.
    if let Ok((memory, log)) = replay_events(&events) {
        assert_eq!(log.len(), events.len());
        if let Some(last) = events.last() {
            assert_eq!(memory.len(), last.memory_size_after);
        }
    }
});
