//! Spin states, operators and the exact Hopfield distribution.
//!
//! Spins take values in `{−1, +1}`. State index `k` encodes spin `i` in bit
//! `i`, with a set bit meaning `+1`. The operator vector holds the `n` single
//! spins followed by one product `x_j x_k` per unordered pair `j < k`, in
//! lexicographic pair order.
//!
//! Every operator is a parity function `χ_S(x) = Π_{i∈S} x_i` over a subset
//! `S` of at most two spins. Energies, moments and the covariance are all
//! obtained through a single fast Walsh–Hadamard transform of length `2^n`:
//! products of two operators are again parity functions (`x_i² = 1`), so
//! `E[O_i O_j] = E[χ_{S_i ⊕ S_j}]` is read off the same table.

use std::ops::Deref;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Largest supported number of spins.
pub const MAX_SPINS: usize = 20;

/// Number of spins and the matching parameter dimension `d = n + n(n−1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelShape {
    n: usize,
    d: usize,
}

impl ModelShape {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SPINS {
            return Err(Error::InvalidSpinCount { n, max: MAX_SPINS });
        }
        Ok(Self {
            n,
            d: Self::dimension_for(n),
        })
    }

    pub const fn dimension_for(n: usize) -> usize {
        n + n * n.saturating_sub(1) / 2
    }

    /// Recovers the shape from a parameter dimension, if `d` is valid.
    pub fn from_dimension(d: usize) -> Result<Self> {
        (1..=MAX_SPINS)
            .find(|&n| Self::dimension_for(n) == d)
            .map(|n| Self {
                n,
                d,
            })
            .ok_or_else(|| Error::Config(format!("{d} is not a valid Hopfield parameter dimension")))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_states(&self) -> usize {
        1 << self.n
    }

    /// Slot of the coupling between spins `j < k`.
    pub fn pair_index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k && k < self.n);
        // Pairs (0, ·) come first, then (1, ·), ...
        self.n + j * (2 * self.n - j - 1) / 2 + (k - j - 1)
    }

    /// Unordered spin pairs in slot order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |j| (j + 1..n).map(move |k| (j, k)))
    }

    /// Bit mask of the spins each operator multiplies, in slot order.
    pub fn operator_masks(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| 1 << i)
            .chain(self.pairs().map(|(j, k)| (1 << j) | (1 << k)))
            .collect()
    }

    pub fn states(&self) -> impl Iterator<Item = SpinState> {
        (0..self.num_states()).map(SpinState)
    }
}

/// One configuration of the `n` spins, stored as its enumeration index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinState(pub usize);

impl SpinState {
    pub fn from_spins(spins: &[i8]) -> Self {
        Self(
            spins
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > 0)
                .fold(0, |acc, (i, _)| acc | (1 << i)),
        )
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn spin(self, i: usize) -> i8 {
        if (self.0 >> i) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn spins(self, shape: ModelShape) -> Vec<i8> {
        (0..shape.n()).map(|i| self.spin(i)).collect()
    }
}

/// Operator vector `O(x)`: spins, then pairwise products.
pub fn operator_vector(x: SpinState, shape: ModelShape) -> Vec<f64> {
    let spins = x.spins(shape);
    spins
        .iter()
        .map(|&s| f64::from(s))
        .chain(shape.pairs().map(|(j, k)| f64::from(spins[j] * spins[k])))
        .collect()
}

macro_rules! shaped_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            shape: ModelShape,
            values: Vec<f64>,
        }

        impl $name {
            pub fn zeros(shape: ModelShape) -> Self {
                Self { shape, values: vec![0.0; shape.d()] }
            }

            pub fn shape(&self) -> ModelShape {
                self.shape
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.values
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.values
            }

            pub fn biases(&self) -> &[f64] {
                &self.values[..self.shape.n()]
            }

            pub fn couplings(&self) -> &[f64] {
                &self.values[self.shape.n()..]
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            pub(crate) fn from_raw(shape: ModelShape, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), shape.d());
                Self { shape, values }
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.values
            }
        }
    };
}

shaped_vector!(
    /// Natural parameters `θ`: `n` biases followed by the pair couplings.
    ParamVector
);

shaped_vector!(
    /// Dual parameters `μ = E[O]`, laid out like [`ParamVector`].
    MomentVector
);

impl ParamVector {
    pub fn new(shape: ModelShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.d() {
            return Err(Error::DimensionMismatch {
                expected: shape.d(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteParameter { index });
        }
        Ok(Self { shape, values })
    }

    /// Builds `θ` from a full coupling matrix `W` and biases `b` such that
    /// `b·x + x W xᵀ` equals `θ·O(x)` up to the constant diagonal term:
    /// `θ_{jk} = W_{jk} + W_{kj}`.
    pub fn from_bias_and_matrix(b: &[f64], w: &DMatrix<f64>) -> Result<Self> {
        let shape = ModelShape::new(b.len())?;
        if w.nrows() != shape.n() || w.ncols() != shape.n() {
            return Err(Error::DimensionMismatch {
                expected: shape.n(),
                actual: w.nrows(),
            });
        }
        let values = b
            .iter()
            .copied()
            .chain(shape.pairs().map(|(j, k)| w[(j, k)] + w[(k, j)]))
            .collect();
        Self::new(shape, values)
    }
}

impl MomentVector {
    /// Reinterprets the moments as natural parameters (the Hopfield solution).
    pub fn to_params(&self) -> ParamVector {
        ParamVector::from_raw(self.shape, self.values.clone())
    }
}

/// Probability table over all `2^n` states.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    shape: ModelShape,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    log_z: f64,
}

impl ExactDistribution {
    /// Wraps an explicit probability table. Its log-partition is reported as
    /// zero, i.e. the table is treated as `exp(ln p)` with `Z = 1`.
    pub fn from_probs(shape: ModelShape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.num_states() {
            return Err(Error::DimensionMismatch {
                expected: shape.num_states(),
                actual: probs.len(),
            });
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Config(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(Self {
            shape,
            probs,
            log_probs,
            log_z: 0.0,
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `ln P(x)` for every state, computed without going through `probs`.
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn prob(&self, x: SpinState) -> f64 {
        self.probs[x.index()]
    }
}

/// Symmetric `d × d` operator covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// In-place unnormalized Walsh–Hadamard transform:
/// `out[s] = Σ_x in[x] · (−1)^{popcount(s & x)}`.
fn walsh_hadamard(buf: &mut [f64]) {
    let len = buf.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in buf.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
}

/// `(−1)^{|S|}`: converts the transform's `(−1)^{bit}` sign convention to
/// spins that are `+1` on a set bit.
fn parity_sign(mask: usize) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `θ·O(x)` for every state.
fn energies(theta: &ParamVector) -> Vec<f64> {
    let shape = theta.shape();
    let mut table = vec![0.0; shape.num_states()];
    for (mask, &t) in shape.operator_masks().into_iter().zip(theta.iter()) {
        table[mask] = parity_sign(mask) * t;
    }
    walsh_hadamard(&mut table);
    table
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `F(θ) = ln Σ_x exp(θ·O(x))`, evaluated with a max shift.
pub fn log_partition(theta: &ParamVector) -> f64 {
    log_sum_exp(&energies(theta))
}

/// The model distribution `P(x; θ) = exp(θ·O(x) − F(θ))`.
pub fn distribution(theta: &ParamVector) -> ExactDistribution {
    let energies = energies(theta);
    let log_z = log_sum_exp(&energies);
    let log_probs: Vec<f64> = energies.into_iter().map(|e| e - log_z).collect();
    let probs = log_probs.iter().map(|lp| lp.exp()).collect();
    ExactDistribution {
        shape: theta.shape(),
        probs,
        log_probs,
        log_z,
    }
}

/// `E_P[χ_S]` for every subset `S` of spins, indexed by mask.
fn parity_expectations(p: &ExactDistribution) -> Vec<f64> {
    let mut table = p.probs.clone();
    walsh_hadamard(&mut table);
    for (mask, v) in table.iter_mut().enumerate() {
        *v *= parity_sign(mask);
    }
    table
}

/// `μ = E_P[O]`.
pub fn moments(p: &ExactDistribution) -> MomentVector {
    let shape = p.shape();
    let parity = parity_expectations(p);
    let values = shape
        .operator_masks()
        .into_iter()
        .map(|m| parity[m])
        .collect();
    MomentVector::from_raw(shape, values)
}

/// `C_ij = E_P[O_i O_j] − E_P[O_i] E_P[O_j]`, which is also the Hessian of `F`.
pub fn covariance(p: &ExactDistribution) -> CovarianceMatrix {
    let shape = p.shape();
    let parity = parity_expectations(p);
    let masks = shape.operator_masks();
    let mu: Vec<f64> = masks.iter().map(|&m| parity[m]).collect();
    let d = shape.d();
    let mut c = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = parity[masks[i] ^ masks[j]] - mu[i] * mu[j];
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    CovarianceMatrix(c)
}
