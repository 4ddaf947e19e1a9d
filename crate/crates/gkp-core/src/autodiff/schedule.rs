//! Cosine-annealing learning-rate schedule with warm restarts.

/// Learning rate at `step`: cycles start at length `t0` and grow by `t_mult`;
/// within a cycle of length `t_i`,
/// `lr = eta_min + (lr_max - eta_min)(1 + cos(pi t_cur / t_i)) / 2`.
pub fn cosine_warm_restarts(step: u64, t0: u64, t_mult: u64, lr_max: f64, eta_min: f64) -> f64 {
    assert!(t0 >= 1 && t_mult >= 1, "cycle parameters must be positive");
    let (t_cur, t_i) = if t_mult == 1 {
        (step % t0, t0)
    } else {
        let mut start = 0u64;
        let mut len = t0;
        while step >= start + len {
            start += len;
            len *= t_mult;
        }
        (step - start, len)
    };
    let phase = std::f64::consts::PI * t_cur as f64 / t_i as f64;
    eta_min + (lr_max - eta_min) * (1.0 + phase.cos()) / 2.0
}
