#![no_main]

use iterforms::expr::SamplingDomain;
use iterforms::supergeometry::SuperChart;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let names = ["x", "th1", "th2"].map(String::from).to_vec();
        let domain = SamplingDomain::new(vec![(0.5, 2.0)]).unwrap();
        let chart = SuperChart::new(names, vec![false, true, true], domain).unwrap();
        let _ = chart.parse(s);
    }
});
