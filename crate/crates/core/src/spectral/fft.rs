//! FFT plumbing with a process-wide plan cache.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlanPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans() -> &'static Mutex<HashMap<usize, Arc<PlanPair>>> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<PlanPair>>>> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan_for(n: usize) -> Arc<PlanPair> {
    let mut guard = plans().lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(PlanPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place forward DFT (unnormalized, rustfft convention).
pub fn forward(buf: &mut [Complex64]) {
    plan_for(buf.len()).forward.process(buf);
}

/// In-place inverse DFT; divides by n so that inverse(forward(x)) == x.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan_for(n).inverse.process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}
