//! Adam with bias correction over the model's canonical parameter slices.

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, slice_lens: &[usize]) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: slice_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: slice_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update; `params` and `grads` must be in the same canonical order
    /// used at construction.
    pub fn step(&mut self, mut params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (si, p) in params.iter_mut().enumerate() {
            let g = grads[si];
            let m = &mut self.m[si];
            let v = &mut self.v[si];
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut adam = Adam::new(0.1, &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        for _ in 0..5 {
            adam.step(vec![&mut p], &[&g]);
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_matches_hand_formula() {
        // After one step: m = (1-b1) g, v = (1-b2) g^2; with bias correction
        // m_hat = g, v_hat = g^2, so the update is -lr * g/(|g| + eps).
        let lr = 0.01;
        let mut adam = Adam::new(lr, &[4]);
        let mut p = vec![0.0, 1.0, -1.0, 2.0];
        let g = vec![0.5, -3.0, 0.0, 1e-3];
        let before = p.clone();
        adam.step(vec![&mut p], &[&g]);
        for j in 0..4 {
            let want = if g[j] == 0.0 {
                before[j]
            } else {
                before[j] - lr * g[j] / (g[j].abs() + 1e-8)
            };
            assert!((p[j] - want).abs() < 1e-12, "elem {j}: {} vs {want}", p[j]);
        }
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut adam = Adam::new(0.01, &[2]);
            let mut p = vec![1.0, 2.0];
            for i in 0..50 {
                let g = vec![(i as f64 * 0.1).sin(), (i as f64 * 0.2).cos()];
                adam.step(vec![&mut p], &[&g]);
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }
}
