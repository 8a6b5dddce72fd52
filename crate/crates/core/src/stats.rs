use alloc::vec::Vec;

/// Median of a slice of floats; even lengths average the two middle values.
pub(crate) fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lower median of a byte histogram holding `count` samples.
pub(crate) fn histogram_lower_median(hist: &[u32; 256], count: u32) -> u8 {
    let target = count.div_ceil(2);
    let mut acc = 0u32;
    for (value, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= target {
            return value as u8;
        }
    }
    255
}
