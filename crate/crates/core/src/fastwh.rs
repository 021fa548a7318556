//! Double-precision Weyl–Heisenberg kernels used for screening and for the
//! descent phase of the searches. Same conventions as [`crate::heisenberg`].

use num_complex::Complex64;

pub(crate) type C64 = Complex64;

#[derive(Clone, Debug)]
pub(crate) struct FastWh {
    d: usize,
    omega: Vec<C64>,
    zeta: Vec<C64>,
}

impl FastWh {
    pub fn new(d: usize) -> Self {
        let tau = std::f64::consts::TAU;
        let omega = (0..d)
            .map(|m| C64::from_polar(1.0, tau * m as f64 / d as f64))
            .collect();
        let zeta = (0..2 * d)
            .map(|m| C64::from_polar(1.0, tau * m as f64 / (2 * d) as f64))
            .collect();
        FastWh { d, omega, zeta }
    }

    #[inline]
    pub fn omega(&self, m: i64) -> C64 {
        self.omega[m.rem_euclid(self.d as i64) as usize]
    }

    #[inline]
    pub fn tau(&self, m: i64) -> C64 {
        let two_d = 2 * self.d as i64;
        self.zeta[((self.d as i64 + 1) * m.rem_euclid(two_d)).rem_euclid(two_d) as usize]
    }

    /// `D_{i,j} psi` written into `out`.
    pub fn apply_into(&self, i: i64, j: i64, psi: &[C64], out: &mut [C64]) {
        let d = self.d as i64;
        let phase = self.tau(i * j);
        for k in 0..d {
            let src = (k - i).rem_euclid(d);
            out[k as usize] = phase * self.omega(j * src) * psi[src as usize];
        }
    }
}
