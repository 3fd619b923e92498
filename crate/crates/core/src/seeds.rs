//! Seed derivation for independent random substreams.
//!
//! Each stochastic stage derives its own stream from the scenario seed plus
//! a few context tags (stage id, element index, fold index, ...). Streams
//! stay decoupled: adding noise to element 5 never perturbs the draws for
//! element 4, which is what makes nested-array datasets exactly reproducible
//! column by column.

/// Mixes a base seed with context tags into a new 64-bit seed.
///
/// Uses the splitmix64 finalizer, which diffuses single-bit differences in
/// any tag across the whole output word.
pub fn substream(base: u64, tags: &[u64]) -> u64 {
    let mut x = base;
    for &t in tags {
        x = mix(x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(t));
    }
    mix(x)
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
