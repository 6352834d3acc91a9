//! Monotonic wall-clock helpers that degrade to zero on targets without a
//! usable clock (browser wasm).

#[cfg(not(target_arch = "wasm32"))]
pub fn start() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(target_arch = "wasm32")]
pub fn start() -> Option<std::time::Instant> {
    None
}

pub fn seconds_since(start: &Option<std::time::Instant>) -> f64 {
    match start {
        Some(t) => t.elapsed().as_secs_f64(),
        None => 0.0,
    }
}
