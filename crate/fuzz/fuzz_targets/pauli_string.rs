#![no_main]

use libfuzzer_sys::fuzz_target;
use plateau_core::pauli::PauliString;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = text.parse::<PauliString>() {
        // accepted strings print back to themselves
        assert_eq!(p.to_string(), text);
        assert!(p.weight() <= p.n_qubits());
    }
});
