//! Deterministic seed derivation. Derived seeds are pure functions of their
//! inputs and stable across platforms and toolchain versions.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Mixes a master seed with an ordered list of integer components.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Mixes a master seed with labelled components (method id, subset id, ...).
pub fn derive_labeled(master: u64, labels: &[&str], index: u64) -> u64 {
    let mut parts: Vec<u64> = labels.iter().map(|l| fnv1a(l)).collect();
    parts.push(index);
    derive(master, &parts)
}
