#![no_main]

use hcsketch::tensor::contract;
use hcsketch::{ContractionSpec, DenseTensor};
use libfuzzer_sys::fuzz_target;

// Layout: order of A, order of B, their dimensions, then (mode_a, mode_b) pairs.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let (oa, ob) = ((data[0] % 4) as usize, (data[1] % 4) as usize);
    let rest = &data[2..];
    if rest.len() < oa + ob {
        return;
    }
    let shape_a: Vec<usize> = rest[..oa].iter().map(|&d| (d % 4) as usize + 1).collect();
    let shape_b: Vec<usize> = rest[oa..oa + ob].iter().map(|&d| (d % 4) as usize + 1).collect();
    let pairs: Vec<(usize, usize)> = rest[oa + ob..]
        .chunks_exact(2)
        .map(|p| ((p[0] % 5) as usize, (p[1] % 5) as usize))
        .collect();
    let Ok(spec) = ContractionSpec::new(pairs) else {
        return;
    };
    if spec.validate(&shape_a, &shape_b).is_err() {
        return;
    }
    let a = DenseTensor::from_fn(&shape_a, |i| i.iter().sum::<usize>() as f64).unwrap();
    let b = DenseTensor::from_fn(&shape_b, |i| i.len() as f64 + 1.0).unwrap();
    let c = contract(&a, &b, &spec).unwrap();
    assert_eq!(c.shape(), spec.output_shape(&shape_a, &shape_b).as_slice());
});
