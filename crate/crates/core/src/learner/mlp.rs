use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INPUT_DIM: usize = 5;
pub const HIDDEN_DIM: usize = 20;
/// `20*5 + 20 + 20 + 1`.
pub const PARAM_COUNT: usize = HIDDEN_DIM * INPUT_DIM + HIDDEN_DIM + HIDDEN_DIM + 1;

const B1_OFFSET: usize = HIDDEN_DIM * INPUT_DIM;
const W2_OFFSET: usize = B1_OFFSET + HIDDEN_DIM;
const B2_OFFSET: usize = W2_OFFSET + HIDDEN_DIM;

/// Input layout `[u_unified, steer, speed, yaw_rate, accel]`.
pub type MlpInput = [f64; INPUT_DIM];

/// 5→20→1 network with a ReLU hidden layer, predicting the acceleration one
/// horizon ahead. The architecture is fixed by the type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: [[f64; INPUT_DIM]; HIDDEN_DIM],
    pub b1: [f64; HIDDEN_DIM],
    pub w2: [f64; HIDDEN_DIM],
    pub b2: f64,
    /// Seed the weights were initialized (and trained) with.
    pub seed: u64,
}

impl MlpModel {
    pub fn zeros() -> Self {
        Self { w1: [[0.0; INPUT_DIM]; HIDDEN_DIM], b1: [0.0; HIDDEN_DIM], w2: [0.0; HIDDEN_DIM], b2: 0.0, seed: 0 }
    }

    /// He-uniform weights, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros();
        m.seed = seed;
        let bound1 = (6.0 / INPUT_DIM as f64).sqrt();
        for row in m.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.random_range(-bound1..bound1);
            }
        }
        let bound2 = (6.0 / HIDDEN_DIM as f64).sqrt();
        for w in m.w2.iter_mut() {
            *w = rng.random_range(-bound2..bound2);
        }
        m
    }

    fn hidden(&self, x: &MlpInput) -> [f64; HIDDEN_DIM] {
        let mut h = [0.0; HIDDEN_DIM];
        for (j, hj) in h.iter_mut().enumerate() {
            let z = self.b1[j] + self.w1[j].iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            *hj = z.max(0.0);
        }
        h
    }

    pub fn forward(&self, x: &MlpInput) -> f64 {
        let h = self.hidden(x);
        self.b2 + self.w2.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>()
    }

    /// Output and its gradient with respect to every parameter, in the
    /// [`MlpModel::to_flat`] layout.
    pub fn output_gradient(&self, x: &MlpInput) -> (f64, [f64; PARAM_COUNT]) {
        let h = self.hidden(x);
        let out = self.b2 + self.w2.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>();
        let mut g = [0.0; PARAM_COUNT];
        for j in 0..HIDDEN_DIM {
            g[W2_OFFSET + j] = h[j];
            // ReLU derivative taken as 0 at the kink.
            if h[j] > 0.0 {
                g[B1_OFFSET + j] = self.w2[j];
                for i in 0..INPUT_DIM {
                    g[j * INPUT_DIM + i] = self.w2[j] * x[i];
                }
            }
        }
        g[B2_OFFSET] = 1.0;
        (out, g)
    }

    pub fn to_flat(&self) -> [f64; PARAM_COUNT] {
        let mut p = [0.0; PARAM_COUNT];
        for j in 0..HIDDEN_DIM {
            p[j * INPUT_DIM..(j + 1) * INPUT_DIM].copy_from_slice(&self.w1[j]);
        }
        p[B1_OFFSET..W2_OFFSET].copy_from_slice(&self.b1);
        p[W2_OFFSET..B2_OFFSET].copy_from_slice(&self.w2);
        p[B2_OFFSET] = self.b2;
        p
    }

    pub fn set_flat(&mut self, p: &[f64; PARAM_COUNT]) {
        for j in 0..HIDDEN_DIM {
            self.w1[j].copy_from_slice(&p[j * INPUT_DIM..(j + 1) * INPUT_DIM]);
        }
        self.b1.copy_from_slice(&p[B1_OFFSET..W2_OFFSET]);
        self.w2.copy_from_slice(&p[W2_OFFSET..B2_OFFSET]);
        self.b2 = p[B2_OFFSET];
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }

    /// Frobenius norm of the parameter difference.
    pub fn distance(&self, other: &Self) -> f64 {
        self.to_flat().iter().zip(other.to_flat().iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
