#![no_main]
use libfuzzer_sys::fuzz_target;
use ngdim::dimtest::{asymptotic_test_fit, statistics};
use ngdim::io::parse_csv;
use ngdim::{fobi_fit, Method, Sigma1Mode};

// End-to-end on user data: every error must surface as an Err, never a panic or a
// p-value outside [0, 1].
fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_csv(data) else { return };
    let x = parsed.data;
    if x.p() > 8 || x.n() > 2000 {
        return;
    }
    let Ok(fit) = fobi_fit(&x) else { return };
    for k in 0..x.p() {
        let Ok(s) = statistics(&fit, k) else { continue };
        assert!(s.t_k >= 0.0);
        for method in Method::ALL.into_iter().filter(|m| m.is_asymptotic()) {
            for mode in [Sigma1Mode::Ngca, Sigma1Mode::Ica] {
                if let Ok(r) = asymptotic_test_fit(&fit, &x, k, method, mode) {
                    assert!((0.0..=1.0).contains(&r.p_value), "{r:?}");
                }
            }
        }
    }
});
