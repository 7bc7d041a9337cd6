#![no_main]
use libfuzzer_sys::fuzz_target;
use ngdim::io::{matrix_to_csv, parse_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(parsed) = parse_csv(data) {
        let text = matrix_to_csv(parsed.data.as_matrix(), None);
        let again = parse_csv(text.as_bytes()).expect("serialized data parses");
        assert_eq!(again.data.as_matrix(), parsed.data.as_matrix());
    }
});
