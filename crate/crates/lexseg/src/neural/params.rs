use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| dist.sample(rng)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out += x · self` for a row vector `x`.
    #[inline]
    pub fn accumulate_vec_mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            if *xi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    /// `out += self · d` for a column vector `d`.
    #[inline]
    pub fn accumulate_mul_vec(&self, d: &[f64], out: &mut [f64]) {
        debug_assert_eq!(d.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += row.iter().zip(d).map(|(w, g)| w * g).sum::<f64>();
        }
    }

    /// `self += x ⊗ d`.
    #[inline]
    pub fn accumulate_outer(&mut self, x: &[f64], d: &[f64]) {
        for (xi, row) in x.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            if *xi == 0.0 {
                continue;
            }
            for (w, g) in row.iter_mut().zip(d) {
                *w += xi * g;
            }
        }
    }
}

/// Weights of one recurrent direction. Input kernels are `input × hidden`,
/// recurrent kernels `hidden × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruDirection {
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_h: Matrix,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_h: Vec<f64>,
}

impl GruDirection {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruDirection {
            w_z: Matrix::zeros(input, hidden),
            w_r: Matrix::zeros(input, hidden),
            w_h: Matrix::zeros(input, hidden),
            u_z: Matrix::zeros(hidden, hidden),
            u_r: Matrix::zeros(hidden, hidden),
            u_h: Matrix::zeros(hidden, hidden),
            b_z: vec![0.0; hidden],
            b_r: vec![0.0; hidden],
            b_h: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_z.len()
    }

    fn tensors(&self) -> [&[f64]; 9] {
        [
            &self.w_z.data,
            &self.w_r.data,
            &self.w_h.data,
            &self.u_z.data,
            &self.u_r.data,
            &self.u_h.data,
            &self.b_z,
            &self.b_r,
            &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 9] {
        [
            &mut self.w_z.data,
            &mut self.w_r.data,
            &mut self.w_h.data,
            &mut self.u_z.data,
            &mut self.u_r.data,
            &mut self.u_h.data,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}

/// All trainable weights. Gradients and Adam moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub forward: GruDirection,
    pub backward: GruDirection,
    /// `2·hidden × classes`; rows `0..hidden` read the forward state.
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

const DIRECTION_TENSORS: [&str; 9] = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (i, h, c) = (config.input_dim, config.hidden_units, config.num_classes);
        ModelParams {
            forward: GruDirection::zeros(i, h),
            backward: GruDirection::zeros(i, h),
            w_out: Matrix::zeros(2 * h, c),
            b_out: vec![0.0; c],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    pub fn input_dim(&self) -> usize {
        self.forward.w_z.rows
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn num_classes(&self) -> usize {
        self.b_out.len()
    }

    /// Tensors in checkpoint order: forward direction, backward direction,
    /// dense kernel, dense bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(20);
        out.extend(self.forward.tensors());
        out.extend(self.backward.tensors());
        out.push(&self.w_out.data);
        out.push(&self.b_out);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(20);
        out.extend(self.forward.tensors_mut());
        out.extend(self.backward.tensors_mut());
        out.push(&mut self.w_out.data);
        out.push(&mut self.b_out);
        out
    }

    pub fn tensor_names() -> Vec<String> {
        let mut names: Vec<String> = Vec::with_capacity(20);
        for dir in ["fwd", "bwd"] {
            names.extend(DIRECTION_TENSORS.iter().map(|t| format!("{dir}.{t}")));
        }
        names.push("out.w".into());
        names.push("out.b".into());
        names
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat copy in checkpoint order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .all(|(a, b)| a.len() == b.len())
            && self.input_dim() == other.input_dim()
            && self.hidden() == other.hidden()
    }
}

/// Glorot-uniform kernels, zero biases.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (i, h, c) = (config.input_dim, config.hidden_units, config.num_classes);
    let direction = |rng: &mut ChaCha8Rng| GruDirection {
        w_z: Matrix::glorot(i, h, rng),
        w_r: Matrix::glorot(i, h, rng),
        w_h: Matrix::glorot(i, h, rng),
        u_z: Matrix::glorot(h, h, rng),
        u_r: Matrix::glorot(h, h, rng),
        u_h: Matrix::glorot(h, h, rng),
        b_z: vec![0.0; h],
        b_r: vec![0.0; h],
        b_h: vec![0.0; h],
    };
    let forward = direction(&mut rng);
    let backward = direction(&mut rng);
    ModelParams {
        forward,
        backward,
        w_out: Matrix::glorot(2 * h, c, &mut rng),
        b_out: vec![0.0; c],
    }
}
