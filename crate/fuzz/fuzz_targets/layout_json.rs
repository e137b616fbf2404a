#![no_main]

use libfuzzer_sys::fuzz_target;
use plateau_core::ansatz::AnsatzLayout;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(layout) = AnsatzLayout::from_json(text) {
        let back = AnsatzLayout::from_json(&layout.to_json()).unwrap();
        assert_eq!(back, layout);
    }
});
