//! Explicit Runge-Kutta steppers over complex state vectors.

use crate::C64;

/// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { atol: 1e-12, rtol: 1e-10 }
    }
}

/// Reusable Dormand-Prince work space for vectors of a fixed length.
pub struct DormandPrince {
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
}

impl DormandPrince {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k: std::array::from_fn(|_| z.clone()), stage: z }
    }

    /// Take one step of size `h` from `(t, y)`, writing the fifth-order
    /// solution into `out`. Returns the scaled RMS error estimate (≤ 1 means
    /// the step meets `tol`).
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64, out: &mut [C64], tol: Tolerance) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        for s in 0..7 {
            self.stage.copy_from_slice(y);
            for (j, &a) in A[s].iter().enumerate().take(s) {
                if a != 0.0 {
                    let ha = h * a;
                    for i in 0..n {
                        self.stage[i] += self.k[j][i] * ha;
                    }
                }
            }
            let (stage, k) = (&self.stage, &mut self.k[s]);
            f(t + C[s] * h, stage, k);
        }
        let mut err_acc = 0.0;
        for i in 0..n {
            let mut y5 = y[i];
            let mut e = C64::new(0.0, 0.0);
            for s in 0..7 {
                y5 += self.k[s][i] * (h * B5[s]);
                e += self.k[s][i] * (h * (B5[s] - B4[s]));
            }
            out[i] = y5;
            let scale = tol.atol + tol.rtol * y[i].norm_sqr().max(y5.norm_sqr()).sqrt();
            err_acc += e.norm_sqr() / (scale * scale);
        }
        (err_acc / n as f64).sqrt()
    }
}

/// Step-size update after an error estimate `err` (Hairer's controller).
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    h * factor
}

/// Classical fourth-order Runge-Kutta step on a complex vector.
pub struct Rk4 {
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k: std::array::from_fn(|_| z.clone()), stage: z }
    }

    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [C64], h: f64)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        f(t, y, &mut self.k[0]);
        for (s, frac) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                self.stage[i] = y[i] + self.k[s - 1][i] * (h * frac);
            }
            let (stage, k) = (&self.stage, &mut self.k[s]);
            f(t + frac * h, stage, k);
        }
        for i in 0..n {
            y[i] += (self.k[0][i] + self.k[1][i] * 2.0 + self.k[2][i] * 2.0 + self.k[3][i]) * (h / 6.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // y' = -i ω y  →  y(t) = e^{-iωt}
    fn rotate(omega: f64) -> impl FnMut(f64, &[C64], &mut [C64]) {
        move |_t, y, dy| dy[0] = C64::new(0.0, -omega) * y[0]
    }

    #[test]
    fn dopri_is_accurate_on_rotation() {
        let mut dp = DormandPrince::new(1);
        let mut f = rotate(2.0);
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut out = vec![C64::new(0.0, 0.0)];
        let h = 0.01;
        for k in 0..100 {
            let err = dp.step(&mut f, k as f64 * h, &y, h, &mut out, Tolerance::default());
            assert!(err < 1.0);
            y.copy_from_slice(&out);
        }
        let exact = C64::new(0.0, -2.0).exp();
        assert!((y[0] - exact).norm() < 1e-10);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let run = |h: f64| {
            let mut rk = Rk4::new(1);
            let mut f = rotate(3.0);
            let mut y = vec![C64::new(1.0, 0.0)];
            let steps = (1.0 / h).round() as usize;
            for k in 0..steps {
                rk.step(&mut f, k as f64 * h, &mut y, h);
            }
            (y[0] - C64::new(0.0, -3.0).exp()).norm()
        };
        let ratio = run(0.02) / run(0.01);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }
}
