//! Truncated Hilbert space of one transmon qutrit and two resonator modes,
//! with dense complex operators and states on it.
//!
//! Basis ordering is fixed: slot order (qutrit, resonator a, resonator b) and
//! row-major flat index `q * dim_a * dim_b + n_a * dim_b + n_b`, so operator
//! and state dumps are comparable across tools.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const QUTRIT_DIM: usize = 3;

/// Single-mode (or single-qutrit) matrix before it is embedded in the full
/// tensor space.
pub type Factor = DMatrix<C64>;

/// Qutrit ladder levels, ordered by energy.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::E, Level::F];

    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::F => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
        }
    }
}

/// Tensor factor an operator acts on.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Qutrit,
    ResA,
    ResB,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dim_a: usize,
    dim_b: usize,
}

impl HilbertSpace {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a < 2 || dim_b < 2 {
            return Err(Error::InvalidDimension(format!(
                "resonator dimensions must be >= 2, got dim_a = {dim_a}, dim_b = {dim_b}"
            )));
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn qutrit_dim(&self) -> usize {
        QUTRIT_DIM
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn total_dim(&self) -> usize {
        QUTRIT_DIM * self.dim_a * self.dim_b
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::Qutrit => QUTRIT_DIM,
            Slot::ResA => self.dim_a,
            Slot::ResB => self.dim_b,
        }
    }

    /// Flat basis index of `|q, n_a, n_b⟩`. Panics if a photon number is out
    /// of range.
    pub fn index(&self, q: Level, n_a: usize, n_b: usize) -> usize {
        assert!(n_a < self.dim_a && n_b < self.dim_b, "Fock index out of range");
        q.index() * self.dim_a * self.dim_b + n_a * self.dim_b + n_b
    }

    pub fn try_index(&self, q: Level, n_a: usize, n_b: usize) -> Result<usize> {
        if n_a >= self.dim_a || n_b >= self.dim_b {
            return Err(Error::Truncation(format!(
                "|{},{},{}⟩ does not fit in dims ({}, {})",
                q.symbol(),
                n_a,
                n_b,
                self.dim_a,
                self.dim_b
            )));
        }
        Ok(self.index(q, n_a, n_b))
    }

    pub fn unflatten(&self, idx: usize) -> (Level, usize, usize) {
        let ab = self.dim_a * self.dim_b;
        let q = Level::from_index(idx / ab).expect("index out of range");
        let rem = idx % ab;
        (q, rem / self.dim_b, rem % self.dim_b)
    }

    pub fn label(&self, idx: usize) -> String {
        let (q, na, nb) = self.unflatten(idx);
        format!("|{},{},{}>", q.symbol(), na, nb)
    }

    pub fn identity(&self) -> Operator {
        Operator {
            space: *self,
            mat: DMatrix::identity(self.total_dim(), self.total_dim()),
        }
    }

    pub fn zero_operator(&self) -> Operator {
        Operator {
            space: *self,
            mat: DMatrix::zeros(self.total_dim(), self.total_dim()),
        }
    }

    pub fn basis_ket(&self, q: Level, n_a: usize, n_b: usize) -> Result<Ket> {
        let idx = self.try_index(q, n_a, n_b)?;
        let mut amps = DVector::zeros(self.total_dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Ket { space: *self, amps })
    }
}

/// Square complex matrix acting on a [`HilbertSpace`]. When it plays the role
/// of a Hamiltonian term its entries are angular frequencies (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub space: HilbertSpace,
    pub mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, mat: DMatrix<C64>) -> Result<Self> {
        let n = space.total_dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "operator is {}x{}, space needs {n}x{n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { space, mat })
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space,
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            space: self.space,
            mat: &self.mat * c,
        }
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        Ok(Operator {
            space: self.space,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        Ok(Operator {
            space: self.space,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        Ok(Operator {
            space: self.space,
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        })
    }

    /// Largest entry of `|A - A†|`, relative to the largest entry of `|A|`
    /// (absolute when `A` vanishes).
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if self.space != ket.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Ket {
            space: self.space,
            amps: &self.mat * &ket.amps,
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    fn check(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    pub space: HilbertSpace,
    pub amps: DVector<C64>,
}

impl Ket {
    pub fn from_amplitudes(space: HilbertSpace, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != space.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "ket has {} amplitudes, space needs {}",
                amps.len(),
                space.total_dim()
            )));
        }
        Ok(Self { space, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn amplitude(&self, q: Level, n_a: usize, n_b: usize) -> C64 {
        self.amps[self.space.index(q, n_a, n_b)]
    }

    pub fn scaled(&self, c: C64) -> Ket {
        Ket {
            space: self.space,
            amps: &self.amps * c,
        }
    }
}

/// Density operator. Kept Hermitian and unit-trace by the integrator; the
/// constructors do not enforce this so that drifting states can be inspected.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(space: HilbertSpace, mat: DMatrix<C64>) -> Result<Self> {
        Operator::from_matrix(space, mat).map(|op| Self {
            space: op.space,
            mat: op.mat,
        })
    }

    pub fn pure(ket: &Ket) -> Self {
        Self {
            space: ket.space,
            mat: &ket.amps * ket.amps.adjoint(),
        }
    }

    /// Convex combination `Σ w_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(components: &[(f64, &Ket)]) -> Result<Self> {
        let space = components
            .first()
            .map(|(_, k)| k.space)
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let n = space.total_dim();
        let mut mat = DMatrix::zeros(n, n);
        for (w, ket) in components {
            if ket.space != space {
                return Err(Error::SpaceMismatch);
            }
            mat += (&ket.amps * ket.amps.adjoint()) * C64::new(*w, 0.0);
        }
        Ok(Self { space, mat })
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Total population of Fock level `n` in the given resonator slot.
    pub fn fock_population(&self, slot: Slot, n: usize) -> f64 {
        let space = self.space;
        (0..space.total_dim())
            .filter(|&i| {
                let (_, na, nb) = space.unflatten(i);
                match slot {
                    Slot::ResA => na == n,
                    Slot::ResB => nb == n,
                    Slot::Qutrit => false,
                }
            })
            .map(|i| self.mat[(i, i)].re)
            .sum()
    }

    pub fn level_population(&self, level: Level) -> f64 {
        let ab = self.space.dim_a() * self.space.dim_b();
        let start = level.index() * ab;
        (start..start + ab).map(|i| self.mat[(i, i)].re).sum()
    }
}

/// Lowering operator on a truncated bosonic mode: entry `(n-1, n) = √n`.
pub fn annihilation(dim: usize) -> Result<Factor> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "mode dimension must be >= 2, got {dim}"
        )));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(m)
}

/// Raising operator built directly: entry `(n, n-1) = √n`.
pub fn creation(dim: usize) -> Result<Factor> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "mode dimension must be >= 2, got {dim}"
        )));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n, n - 1)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(m)
}

/// `|lower⟩⟨upper|` on the qutrit; its adjoint is the raising operator.
pub fn qutrit_transition(lower: Level, upper: Level) -> Result<Factor> {
    if lower >= upper {
        return Err(Error::InvalidTransition { lower, upper });
    }
    Ok(qutrit_outer(lower, upper))
}

/// `|level⟩⟨level|` on the qutrit.
pub fn qutrit_projector(level: Level) -> Factor {
    qutrit_outer(level, level)
}

/// Arbitrary `|row⟩⟨col|` on the qutrit.
pub fn qutrit_outer(row: Level, col: Level) -> Factor {
    let mut m = DMatrix::zeros(QUTRIT_DIM, QUTRIT_DIM);
    m[(row.index(), col.index())] = C64::new(1.0, 0.0);
    m
}

/// Place `factor` in `slot`, identity elsewhere.
pub fn embed(factor: &Factor, slot: Slot, space: HilbertSpace) -> Result<Operator> {
    let want = space.slot_dim(slot);
    if factor.nrows() != want || factor.ncols() != want {
        return Err(Error::InvalidDimension(format!(
            "{slot:?} factor must be {want}x{want}, got {}x{}",
            factor.nrows(),
            factor.ncols()
        )));
    }
    let id = |d: usize| DMatrix::<C64>::identity(d, d);
    let (q, a, b) = match slot {
        Slot::Qutrit => (factor.clone(), id(space.dim_a), id(space.dim_b)),
        Slot::ResA => (id(QUTRIT_DIM), factor.clone(), id(space.dim_b)),
        Slot::ResB => (id(QUTRIT_DIM), id(space.dim_a), factor.clone()),
    };
    Ok(Operator {
        space,
        mat: q.kronecker(&a).kronecker(&b),
    })
}

/// `tr(op · ρ)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    if op.space != rho.space {
        return Err(Error::SpaceMismatch);
    }
    let n = op.space.total_dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += op.mat[(i, k)] * rho.mat[(k, i)];
        }
    }
    Ok(acc)
}

/// Frequently used embedded operators of one space.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: Operator,
    pub b: Operator,
    pub space: HilbertSpace,
}

impl Ladder {
    pub fn new(space: HilbertSpace) -> Self {
        let a = embed(&annihilation(space.dim_a()).unwrap(), Slot::ResA, space).unwrap();
        let b = embed(&annihilation(space.dim_b()).unwrap(), Slot::ResB, space).unwrap();
        Self { a, b, space }
    }

    /// `|row⟩⟨col|` on the qutrit, embedded.
    pub fn sigma(&self, row: Level, col: Level) -> Operator {
        embed(&qutrit_outer(row, col), Slot::Qutrit, self.space).unwrap()
    }

    pub fn num_a(&self) -> Operator {
        self.a.dagger().mul(&self.a).unwrap()
    }

    pub fn num_b(&self) -> Operator {
        self.b.dagger().mul(&self.b).unwrap()
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qutrit(3) x a({}) x b({})", self.dim_a, self.dim_b)
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let scale = max_abs(m);
    let diff = max_abs(&(m - m.adjoint()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
