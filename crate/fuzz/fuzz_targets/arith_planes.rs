#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    let count = 1 + (data[0] as usize % 64) * 16;
    let _ = sdct::codec::arith::arith_decode_planes(&data[1..], count);
});
