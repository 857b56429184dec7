//! Random numerical realizations of structures and observability-matrix rank
//! over an exact prime field or floating point.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::StructuredMatrix;
use crate::netdesign::{w_structure, AgentNetwork};

/// The Mersenne prime `2^31 - 1`.
pub const GF_MODULUS: u64 = 2_147_483_647;

/// Element of the prime field `GF(2^31 - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Gf(u64);

impl Gf {
    pub fn new(v: u64) -> Self {
        Gf(v % GF_MODULUS)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Gf(1);
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat; `None` for zero.
    pub fn inv(self) -> Option<Self> {
        (self.0 != 0).then(|| self.pow(GF_MODULUS - 2))
    }
}

impl fmt::Display for Gf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Gf {
    type Output = Gf;
    fn add(self, rhs: Gf) -> Gf {
        Gf((self.0 + rhs.0) % GF_MODULUS)
    }
}

impl Sub for Gf {
    type Output = Gf;
    fn sub(self, rhs: Gf) -> Gf {
        Gf((self.0 + GF_MODULUS - rhs.0) % GF_MODULUS)
    }
}

impl Mul for Gf {
    type Output = Gf;
    fn mul(self, rhs: Gf) -> Gf {
        Gf(self.0 * rhs.0 % GF_MODULUS)
    }
}

impl Div for Gf {
    type Output = Gf;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf) -> Gf {
        self * rhs.inv().expect("division by zero in GF(p)")
    }
}

impl Neg for Gf {
    type Output = Gf;
    fn neg(self) -> Gf {
        Gf((GF_MODULUS - self.0) % GF_MODULUS)
    }
}

macro_rules! assign_op {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Gf {
            fn $f(&mut self, rhs: Gf) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Zero for Gf {
    fn zero() -> Self {
        Gf(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Gf {
    fn one() -> Self {
        Gf(1)
    }
}

/// Scalars the numerical checks run over.
pub trait Field:
    nalgebra::Scalar
    + Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Neg<Output = Self>
    + Send
    + Sync
{
    const NAME: &'static str;

    /// A random nonzero value; positive for ordered fields.
    fn sample_weight<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// A random nonzero value of either sign where that makes sense.
    fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn inverse(self) -> Option<Self>;

    fn rank(m: &DMatrix<Self>) -> usize;

    /// Rescale one block of the observability matrix. Exact fields leave it
    /// alone; floating point normalizes to unit max-abs so late powers of an
    /// expanding matrix do not swamp early ones.
    fn normalize_block(_block: &mut DMatrix<Self>) {}
}

impl Field for Gf {
    const NAME: &'static str = "gf";

    fn sample_weight<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Gf(rng.random_range(1..GF_MODULUS))
    }

    fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::sample_weight(rng)
    }

    fn inverse(self) -> Option<Self> {
        self.inv()
    }

    fn rank(m: &DMatrix<Self>) -> usize {
        gf_rank(m.clone())
    }
}

/// Row reduction mod p.
fn gf_rank(mut m: DMatrix<Gf>) -> usize {
    let (rows, cols) = m.shape();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !m[(r, col)].is_zero()) else {
            continue;
        };
        m.swap_rows(rank, pivot);
        let inv = m[(rank, col)].inv().expect("pivot is nonzero");
        for c in col..cols {
            m[(rank, c)] *= inv;
        }
        for r in 0..rows {
            if r != rank {
                let factor = m[(r, col)];
                if !factor.is_zero() {
                    for c in col..cols {
                        let v = m[(rank, c)];
                        m[(r, c)] -= factor * v;
                    }
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Relative singular-value threshold for floating-point rank.
pub const REAL_RANK_TOLERANCE: f64 = 1e-9;

macro_rules! real_field {
    ($t:ty, $name:literal) => {
        impl Field for $t {
            const NAME: &'static str = $name;

            fn sample_weight<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random_range(0.1..1.0)
            }

            fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
                let mag: $t = rng.random_range(0.2..1.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }

            fn inverse(self) -> Option<Self> {
                (self != 0.0).then(|| 1.0 / self)
            }

            fn rank(m: &DMatrix<Self>) -> usize {
                if m.is_empty() {
                    return 0;
                }
                let sv = m.clone().svd(false, false).singular_values;
                let max = sv.iter().cloned().fold(0.0, <$t>::max);
                if max == 0.0 {
                    return 0;
                }
                let tol = max * REAL_RANK_TOLERANCE as $t;
                sv.iter().filter(|&&s| s > tol).count()
            }

            fn normalize_block(block: &mut DMatrix<Self>) {
                let max = block.amax();
                if max > 0.0 {
                    *block /= max;
                }
            }
        }
    };
}
real_field!(f64, "f64");
real_field!(f32, "f32");

/// Which field a numerical check runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Gf,
    Real,
}

impl std::str::FromStr for FieldKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gf" => Ok(FieldKind::Gf),
            "real" => Ok(FieldKind::Real),
            other => Err(format!("unknown field '{other}' (expected gf or real)")),
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent random nonzero values on the support, zero elsewhere.
pub fn random_realization<T: Field, R: Rng + ?Sized>(s: &StructuredMatrix, rng: &mut R) -> DMatrix<T> {
    let mut m = DMatrix::from_element(s.rows(), s.cols(), T::zero());
    for (r, c) in s.support() {
        m[(r, c)] = T::sample_nonzero(rng);
    }
    m
}

/// Random row-stochastic realization: nonzero weights on the support, each
/// row scaled to sum to one. Over the reals the weights are positive.
pub fn stochastic_realization<T: Field, R: Rng + ?Sized>(
    s: &StructuredMatrix,
    rng: &mut R,
) -> DMatrix<T> {
    let mut m = DMatrix::from_element(s.rows(), s.cols(), T::zero());
    for r in 0..s.rows() {
        let cols: Vec<usize> = s.row_support(r).collect();
        if cols.is_empty() {
            continue;
        }
        loop {
            let weights: Vec<T> = cols.iter().map(|_| T::sample_weight(rng)).collect();
            let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
            // over GF(p) the sum can vanish; redraw
            if let Some(scale) = total.inverse() {
                for (&c, &w) in cols.iter().zip(&weights) {
                    m[(r, c)] = w * scale;
                }
                break;
            }
        }
    }
    m
}

/// Observability matrix `[H; HA; ...; HA^(n-1)]`.
pub fn observability_matrix<T: Field>(a: &DMatrix<T>, h: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let p = h.nrows();
    let mut out = DMatrix::from_element(p * n, n, T::zero());
    let mut block = h.clone();
    for k in 0..n {
        let mut scaled = block.clone();
        T::normalize_block(&mut scaled);
        out.rows_mut(k * p, p).copy_from(&scaled);
        block = &block * a;
        T::normalize_block(&mut block);
    }
    out
}

/// Rank of the observability matrix of `(A, H)`.
pub fn observability_rank<T: Field>(a: &DMatrix<T>, h: &DMatrix<T>) -> usize {
    if h.nrows() == 0 {
        return 0;
    }
    T::rank(&observability_matrix(a, h))
}

pub fn kron_numeric<T: Field>(w: &DMatrix<T>, a: &DMatrix<T>) -> DMatrix<T> {
    w.kronecker(a)
}

/// Drop all-zero rows.
pub fn compact_rows<T: Field>(m: &DMatrix<T>) -> DMatrix<T> {
    let keep: Vec<usize> = (0..m.nrows())
        .filter(|&r| m.row(r).iter().any(|v| !v.is_zero()))
        .collect();
    DMatrix::from_fn(keep.len(), m.ncols(), |r, c| m[(keep[r], c)])
}

/// Observability rank of one random realization of `(A, H)`.
pub fn centralized_rank<T: Field, R: Rng + ?Sized>(
    a: &StructuredMatrix,
    h: &StructuredMatrix,
    rng: &mut R,
) -> usize {
    let an: DMatrix<T> = random_realization(a, rng);
    let hn: DMatrix<T> = random_realization(h, rng);
    observability_rank(&an, &hn)
}

/// Observability rank of one random realization of `(W (x) A, D_H)`: random
/// `A`, row-stochastic `W` on the beta pattern, and a random single-state row
/// per measured state, fused per agent as `sum_j H_j^T H_j`.
pub fn distributed_rank<T: Field, R: Rng + ?Sized>(
    net: &AgentNetwork,
    a: &StructuredMatrix,
    rng: &mut R,
) -> usize {
    let n = a.rows();
    let agents = net.agent_count();
    let an: DMatrix<T> = random_realization(a, rng);
    let wn: DMatrix<T> = stochastic_realization(&w_structure(net), rng);
    let h: Vec<DMatrix<T>> = (0..agents)
        .map(|i| {
            let states: Vec<usize> = net.observations(i).iter().copied().collect();
            let s = StructuredMatrix::selection(n, &states).expect("observed states are in range");
            random_realization(&s, rng)
        })
        .collect();
    let mut dh = DMatrix::from_element(n * agents, n * agents, T::zero());
    for i in 0..agents {
        let mut sources = vec![i];
        sources.extend(net.alpha_in(i));
        for j in sources {
            let gram = h[j].transpose() * &h[j];
            for r in 0..n {
                for c in 0..n {
                    dh[(i * n + r, i * n + c)] += gram[(r, c)];
                }
            }
        }
    }
    observability_rank(&kron_numeric(&wn, &an), &compact_rows(&dh))
}
