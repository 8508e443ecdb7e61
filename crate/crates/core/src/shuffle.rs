//! The single seeded shuffle used everywhere order must be reproducible.
//!
//! Algorithm, pinned so any implementation in any language can replay it:
//! the generator is ChaCha8 seeded via `seed_from_u64`; then, for `i` from
//! `n - 1` down to `1`, draw one 64-bit word and swap `a[i]` with
//! `a[next_u64() % (i + 1)]`. The modulo introduces a selection bias of
//! order n / 2^64, irrelevant at any realistic n but stated for honesty.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

pub(crate) fn fisher_yates<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
