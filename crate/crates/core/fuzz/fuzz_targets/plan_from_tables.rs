#![no_main]

use std::sync::Arc;

use hcsketch::{CsPlan, ModeHash};
use libfuzzer_sys::fuzz_target;

// Layout: range byte, then (bucket, sign) byte pairs; odd sign bytes mean -1.
fuzz_target!(|data: &[u8]| {
    let Some((&range, rest)) = data.split_first() else {
        return;
    };
    let (buckets, signs): (Vec<usize>, Vec<f64>) = rest
        .chunks_exact(2)
        .map(|p| (p[0] as usize, if p[1] % 3 == 0 { 1.0 } else if p[1] % 3 == 1 { -1.0 } else { 0.5 }))
        .unzip();
    let n = buckets.len();
    let Ok(hash) = ModeHash::from_tables(buckets, signs, range as usize) else {
        return;
    };
    assert_eq!(hash.domain(), n);
    assert_eq!(hash.range(), range as usize);
    let plan = CsPlan::from_hashes(vec![Arc::new(hash)]).unwrap();
    let u: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let sketch = plan.sketch(&u).unwrap();
    assert_eq!(sketch.table().len(), range as usize);
});
