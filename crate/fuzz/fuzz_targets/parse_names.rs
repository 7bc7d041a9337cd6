#![no_main]
use libfuzzer_sys::fuzz_target;
use ngdim::{Method, ModelSpec, Sigma1Mode, ThresholdRule};

fuzz_target!(|data: &str| {
    if let Ok(m) = data.parse::<Method>() {
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        assert_eq!(m.short_name().parse::<Method>().unwrap(), m);
    }
    let _ = data.parse::<ModelSpec>();
    let _ = data.parse::<Sigma1Mode>();
    if let Ok(ThresholdRule::Power(e)) = data.parse::<ThresholdRule>() {
        assert!(e > 0.0 && e < 1.0);
    }
});
