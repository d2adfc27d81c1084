use num_complex::Complex64;

/// Classical fourth-order Runge–Kutta with preallocated stage buffers.
pub(crate) struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + dt`. `rhs(t, y, dy)` writes `dy/dt`.
    pub(crate) fn step<F>(&mut self, y: &mut [Complex64], t: f64, dt: f64, rhs: &mut F)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let h = 0.5 * dt;
        rhs(t, y, &mut self.k1);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = y + k * h;
        }
        rhs(t + h, &self.tmp, &mut self.k2);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = y + k * h;
        }
        rhs(t + h, &self.tmp, &mut self.k3);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = y + k * dt;
        }
        rhs(t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * w;
        }
    }
}
