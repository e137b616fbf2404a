#![no_main]

use libfuzzer_sys::fuzz_target;
use plateau_core::pauli::Hamiltonian;

fuzz_target!(|data: &[u8]| {
    // first byte picks the register size, the rest is the text
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(h) = Hamiltonian::parse(text, n as usize % 17) {
        let again = Hamiltonian::parse(&h.to_string(), h.n_qubits()).unwrap();
        assert_eq!(again.terms().len(), h.terms().len());
    }
});
