//! Orthonormal Fourier basis on `[origin, origin + span]`.
//!
//! Functions are addressed by *index* in the conventional Fourier ordering:
//! index 0 is the constant `1/sqrt(T)`, `sin(k w t)` has index `2k - 1` and
//! `cos(k w t)` has index `2k`. All non-constant functions carry the factor
//! `sqrt(2/T)` so the system is orthonormal in L2. Coefficient vectors are
//! laid out by *slot*; when the constant is included slot and index coincide,
//! otherwise slot = index - 1.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    span: f64,
    origin: f64,
    num_functions: usize,
    include_constant: bool,
}

impl FourierBasis {
    /// `num_functions` counts the sine/cosine functions; the constant, when
    /// included, comes on top of it.
    pub fn new(span: f64, num_functions: usize, include_constant: bool) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid(format!("time span must be positive, got {span}")));
        }
        if num_functions == 0 {
            return Err(Error::invalid("number of basis functions must be at least 1"));
        }
        Ok(Self {
            span,
            origin: 0.0,
            num_functions,
            include_constant,
        })
    }

    /// Saturated basis for `n_points` equispaced samples on `[0, span)`:
    /// the constant plus every frequency the grid can resolve. For odd `n`
    /// this is `n - 1` sine/cosine functions and the design is square. For
    /// even `n` the Nyquist pair is kept whole (`n` functions); its sine
    /// vanishes on the grid, so such a fit needs a positive penalty.
    pub fn saturated(span: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid("a saturated basis needs at least two grid points"));
        }
        let k = if n_points % 2 == 1 { n_points - 1 } else { n_points };
        Self::new(span, k, true)
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Fundamental angular frequency `2 pi / T`.
    pub fn omega(&self) -> f64 {
        2.0 * PI / self.span
    }

    pub fn num_functions(&self) -> usize {
        self.num_functions
    }

    pub fn includes_constant(&self) -> bool {
        self.include_constant
    }

    /// Length of a coefficient vector.
    pub fn dim(&self) -> usize {
        self.num_functions + usize::from(self.include_constant)
    }

    /// Highest frequency for which both the sine and cosine are present.
    pub fn max_full_frequency(&self) -> usize {
        self.num_functions / 2
    }

    pub fn slot_of(&self, index: usize) -> Option<usize> {
        if index == 0 {
            return self.include_constant.then_some(0);
        }
        if index > self.num_functions {
            return None;
        }
        Some(if self.include_constant { index } else { index - 1 })
    }

    pub fn index_of(&self, slot: usize) -> usize {
        if self.include_constant {
            slot
        } else {
            slot + 1
        }
    }

    /// Slot of the constant function, if present.
    pub fn constant_slot(&self) -> Option<usize> {
        self.slot_of(0)
    }

    /// Frequency `k` of the function with the given index (0 for the constant).
    pub fn frequency_of_index(index: usize) -> usize {
        index.div_ceil(2)
    }

    /// Value of basis function `index` at time `t`.
    pub fn eval_index(&self, index: usize, t: f64) -> f64 {
        if index == 0 {
            return 1.0 / self.span.sqrt();
        }
        let k = Self::frequency_of_index(index) as f64;
        let arg = k * self.omega() * (t - self.origin);
        let scale = (2.0 / self.span).sqrt();
        if index % 2 == 1 {
            scale * arg.sin()
        } else {
            scale * arg.cos()
        }
    }

    pub fn eval_slot(&self, slot: usize, t: f64) -> f64 {
        self.eval_index(self.index_of(slot), t)
    }

    /// Evaluate the function with coefficient vector `coefs` at `t`.
    pub fn evaluate(&self, coefs: &[f64], t: f64) -> f64 {
        debug_assert_eq!(coefs.len(), self.dim());
        coefs
            .iter()
            .enumerate()
            .map(|(slot, c)| c * self.eval_slot(slot, t))
            .sum()
    }

    /// `n x dim` evaluation matrix with entry `(j, s) = phi_s(t_j)`.
    pub fn design_matrix(&self, times: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(times.len(), self.dim(), |j, s| self.eval_slot(s, times[j]))
    }

    /// Second-derivative value of basis function `index` at `t`.
    pub fn eval_index_second_derivative(&self, index: usize, t: f64) -> f64 {
        if index == 0 {
            return 0.0;
        }
        let kw = Self::frequency_of_index(index) as f64 * self.omega();
        -kw * kw * self.eval_index(index, t)
    }

    /// Diagonal of the curvature penalty `R_ij = int phi_i'' phi_j''`.
    pub fn curvature_penalty_diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |slot, _| {
            let index = self.index_of(slot);
            if index == 0 {
                0.0
            } else {
                let kw = Self::frequency_of_index(index) as f64 * self.omega();
                kw.powi(4)
            }
        })
    }

    pub fn curvature_penalty_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.curvature_penalty_diagonal())
    }

    pub(crate) fn ensure_same(&self, other: &FourierBasis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::IncompatibleBasis)
        }
    }
}

/// The functions of a parent basis whose frequency is a multiple of `years`,
/// i.e. the functions that repeat every `T / years`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSubBasis {
    parent: FourierBasis,
    years: usize,
    indices: Vec<usize>,
}

impl PeriodicSubBasis {
    /// Select `p` periodic functions: frequencies `years * m` for
    /// `m = 1..=p/2`, sine before cosine.
    pub fn new(parent: &FourierBasis, years: usize, p: usize) -> Result<Self> {
        if years == 0 {
            return Err(Error::invalid("number of cycles must be positive"));
        }
        if p == 0 || p % 2 != 0 {
            return Err(Error::invalid(format!(
                "number of periodic functions must be positive and even, got {p}"
            )));
        }
        let top = years * (p / 2);
        if 2 * top > parent.num_functions() {
            return Err(Error::OutOfRange(format!(
                "periodic frequency {top} exceeds the basis (highest full frequency {})",
                parent.max_full_frequency()
            )));
        }
        let indices = (1..=p / 2)
            .flat_map(|m| {
                let k = years * m;
                [2 * k - 1, 2 * k]
            })
            .collect();
        Ok(Self {
            parent: parent.clone(),
            years,
            indices,
        })
    }

    /// Every periodic function the parent basis can represent.
    pub fn all(parent: &FourierBasis, years: usize) -> Result<Self> {
        if years == 0 {
            return Err(Error::invalid("number of cycles must be positive"));
        }
        let pairs = parent.max_full_frequency() / years;
        if pairs == 0 {
            return Err(Error::OutOfRange(format!(
                "basis with highest frequency {} has no function of period T/{years}",
                parent.max_full_frequency()
            )));
        }
        Self::new(parent, years, 2 * pairs)
    }

    pub fn parent(&self) -> &FourierBasis {
        &self.parent
    }

    pub fn years(&self) -> usize {
        self.years
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Parent indices in parent-index order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn slots(&self) -> Vec<usize> {
        self.indices
            .iter()
            .map(|&i| self.parent.slot_of(i).expect("index checked at construction"))
            .collect()
    }

    /// The periodic functions as a coefficient frame (`P x dim`, one unit
    /// row per function).
    pub fn frame(&self) -> FunctionSet {
        let mut coefs = DMatrix::zeros(self.len(), self.parent.dim());
        for (row, slot) in self.slots().into_iter().enumerate() {
            coefs[(row, slot)] = 1.0;
        }
        FunctionSet {
            basis: self.parent.clone(),
            coefs,
        }
    }
}

/// A finite set of functions in a shared basis, one coefficient row each.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSet {
    basis: FourierBasis,
    coefs: DMatrix<f64>,
}

impl FunctionSet {
    pub fn new(basis: FourierBasis, coefs: DMatrix<f64>) -> Result<Self> {
        if coefs.ncols() != basis.dim() {
            return Err(Error::invalid(format!(
                "coefficient matrix has {} columns, basis has {} functions",
                coefs.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, coefs })
    }

    /// The basis functions themselves.
    pub fn identity(basis: &FourierBasis) -> Self {
        Self {
            basis: basis.clone(),
            coefs: DMatrix::identity(basis.dim(), basis.dim()),
        }
    }

    pub fn basis(&self) -> &FourierBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefs
    }

    pub fn into_coefficients(self) -> DMatrix<f64> {
        self.coefs
    }

    pub fn len(&self) -> usize {
        self.coefs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.nrows() == 0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.coefs.row(i).iter().copied().collect()
    }

    /// The first `m` functions.
    pub fn head(&self, m: usize) -> FunctionSet {
        FunctionSet {
            basis: self.basis.clone(),
            coefs: self.coefs.rows(0, m.min(self.len())).into_owned(),
        }
    }

    /// `m x n` matrix of function values on `times`.
    pub fn evaluate(&self, times: &[f64]) -> DMatrix<f64> {
        &self.coefs * self.basis.design_matrix(times).transpose()
    }

    pub fn gram(&self, other: &FunctionSet) -> Result<DMatrix<f64>> {
        gram_matrix(self, other)
    }
}

/// Matrix of L2 inner products `<a_i, b_k>`, exact in coefficient space.
pub fn gram_matrix(a: &FunctionSet, b: &FunctionSet) -> Result<DMatrix<f64>> {
    a.basis.ensure_same(&b.basis)?;
    Ok(&a.coefs * b.coefs.transpose())
}
