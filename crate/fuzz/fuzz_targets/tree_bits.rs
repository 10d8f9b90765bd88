#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    // first byte selects p, the rest are node bits
    let p = 1 + (data[0] as usize % 512);
    let bits: Vec<bool> = data[1..]
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1 == 1))
        .collect();
    let _ = sdct::bt::deserialize_tree(&bits, p);
});
