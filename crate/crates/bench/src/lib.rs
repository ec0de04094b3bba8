//! Benchmark fixtures shared by the criterion targets.

use mixadc::channel::{draw_rayleigh, switch_strongest};
use mixadc::{AdcSwitch, SimRng, SimoChannel};

/// A Rayleigh channel with `n` antennas and a strongest-`k` switch.
pub fn fixture(n: usize, k: usize, seed: u64) -> (SimoChannel, AdcSwitch) {
    let h = draw_rayleigh(n, &mut SimRng::new(seed).generator());
    let delta = switch_strongest(&h, k);
    (h, delta)
}
