//! Monotonic clock abstraction so the engine can report stage timings
//! without depending on std. The companion crate installs a real clock.

/// Source of monotonic microsecond readings for stage timings.
pub trait Clock: Send + Sync {
    /// Microseconds since an arbitrary fixed origin.
    fn now_micros(&self) -> u64;
}

/// Clock that always reads zero; all reported timings become zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoopClock;

impl Clock for NoopClock {
    fn now_micros(&self) -> u64 {
        0
    }
}
