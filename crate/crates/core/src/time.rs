//! Integer picosecond timebase shared by the engine and the transmitter.

/// Simulation time in picoseconds.
pub type Picos = u64;

pub const PS_PER_SECOND: f64 = 1e12;

/// Rounds a duration in seconds to the nearest picosecond. Negative and
/// non-finite inputs saturate to 0 / `u64::MAX`.
pub fn secs_to_ps(seconds: f64) -> Picos {
    if seconds.is_nan() || seconds <= 0.0 {
        return 0;
    }
    let ps = (seconds * PS_PER_SECOND).round();
    if ps >= u64::MAX as f64 {
        u64::MAX
    } else {
        ps as u64
    }
}

pub fn ps_to_secs(ps: Picos) -> f64 {
    ps as f64 / PS_PER_SECOND
}
