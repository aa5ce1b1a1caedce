//! Adaptive Dormand–Prince 5(4) integrator.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; these are the embedded fourth-order ones
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-14,
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn dopri5<F>(f: F, t0: f64, y0: &[f64], t1: f64, tol: Tolerance) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t0 == t1 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut h = (span * 1e-3).max(16.0 * f64::EPSILON * t0.abs()).min(span);
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::Integration(format!("too many steps before t = {t1}")));
        }
        let h_eff = h.min((t1 - t).abs());
        let hs = h_eff * dir;
        if t + hs == t {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
        for s in 1..7 {
            for i in 0..dim {
                tmp[i] = y[i] + hs * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            let (_, rest) = k.split_at_mut(s);
            f(t + C[s] * hs, &tmp, &mut rest[0]);
        }
        // tmp now holds the fifth-order solution (FSAL row)
        let mut err = 0.0f64;
        for i in 0..dim {
            let y4 = y[i] + hs * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
            let sc = tol.atol + tol.rtol * y[i].abs().max(tmp[i].abs());
            err = err.max(((tmp[i] - y4) / sc).abs());
        }
        if err <= 1.0 {
            t += hs;
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = h_eff * factor;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration(format!("solution left the finite range at t = {t}")));
        }
    }
    Ok(y)
}
