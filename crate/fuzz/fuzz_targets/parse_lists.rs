#![no_main]
use libfuzzer_sys::fuzz_target;
use ngdim::io::{parse_index_list, parse_method_list};

fuzz_target!(|data: &str| {
    let _ = parse_index_list(data);
    let _ = parse_method_list(data);
});
