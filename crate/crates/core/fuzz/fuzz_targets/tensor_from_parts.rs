#![no_main]

use hcsketch::DenseTensor;
use libfuzzer_sys::fuzz_target;

// Layout: order byte, one byte per dimension, then little-endian f64 data.
fuzz_target!(|data: &[u8]| {
    let Some((&order, rest)) = data.split_first() else {
        return;
    };
    let order = (order % 5) as usize;
    if rest.len() < order {
        return;
    }
    let (dims, payload) = rest.split_at(order);
    let shape: Vec<usize> = dims.iter().map(|&d| (d % 9) as usize).collect();
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let Ok(t) = DenseTensor::from_vec(shape.clone(), values.clone()) else {
        return;
    };
    assert_eq!(t.len(), shape.iter().product::<usize>());
    for flat in 0..t.len() {
        let idx = t.multi_index(flat).unwrap();
        assert_eq!(t.flat_index(&idx).unwrap(), flat);
    }
    if t.order() == 2 {
        let rows: Vec<Vec<f64>> = (0..shape[0])
            .map(|i| (0..shape[1]).map(|j| t.get(&[i, j]).unwrap()).collect())
            .collect();
        if let Ok(back) = DenseTensor::from_rows(&rows) {
            assert_eq!(back.data().len(), values.len());
        }
    }
});
