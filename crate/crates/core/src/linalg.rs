//! Dense complex linear algebra over mixed-radix register spaces.
//!
//! Basis states are indexed most-significant-register first: for a layout
//! with dims `(d0, d1, ..., dk)` the basis index of digits `(x0, ..., xk)` is
//! `((x0 * d1 + x1) * d2 + x2) ...`. Registers need not be qubits.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracles::{OracleLabel, QueryLedger};

pub type C64 = Complex64;

/// Largest state vector the simulator will allocate (2^22 amplitudes, 64 MiB).
pub const MAX_STATE_DIM: usize = 1 << 22;

/// Largest space for which an operator may be materialized densely.
pub const MAX_DENSE_DIM: usize = 4096;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec {
    amps: Vec<C64>,
}

impl ComplexVec {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        ComplexVec {
            amps: vec![ZERO; dim],
        }
    }

    /// The computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = ONE;
        v
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::structural("state vector must have positive dimension"));
        }
        Ok(ComplexVec { amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ComplexVec) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, factor: C64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexVec) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Ordered register dimensions of a composite system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl RegisterLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::structural("layout needs at least one register"));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::structural(format!("register {pos} has dimension 0")));
        }
        let mut strides = vec![1usize; dims.len()];
        let mut total = 1usize;
        for r in (0..dims.len()).rev() {
            strides[r] = total;
            total = total
                .checked_mul(dims[r])
                .ok_or_else(|| Error::capacity("register layout dimension overflows usize"))?;
        }
        Ok(RegisterLayout {
            dims,
            strides,
            total,
        })
    }

    /// The four-register `(A, B, C, D)` layout of the closeness tester:
    /// `C` mirrors `B` and `D` is a qubit.
    pub fn abcd(dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::new(vec![dim_a, dim_b, dim_b, 2])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, reg: usize) -> usize {
        self.dims[reg]
    }

    pub fn stride(&self, reg: usize) -> usize {
        self.strides[reg]
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(Error::structural(format!(
                "expected {} register digits, got {}",
                self.dims.len(),
                digits.len()
            )));
        }
        let mut index = 0;
        for (r, (&x, &d)) in digits.iter().zip(&self.dims).enumerate() {
            if x >= d {
                return Err(Error::structural(format!(
                    "digit {x} out of range for register {r} of dimension {d}"
                )));
            }
            index += x * self.strides[r];
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (index / s) % d)
            .collect()
    }

    /// Appends registers after the existing ones; existing register ids are kept.
    pub fn extended(&self, extra: &[usize]) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(extra);
        Self::new(dims)
    }

    pub fn sub_dim(&self, regs: &[usize]) -> usize {
        regs.iter().map(|&r| self.dims[r]).product()
    }

    /// Offsets of every joint configuration of `regs`, the first register
    /// varying slowest.
    pub(crate) fn offsets(&self, regs: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for &r in regs {
            let (d, s) = (self.dims[r], self.strides[r]);
            out = out
                .iter()
                .flat_map(|&o| (0..d).map(move |x| o + x * s))
                .collect();
        }
        out
    }

    /// Base offsets of all configurations of the registers outside `targets`,
    /// restricted to those satisfying every `(register, value)` constraint.
    pub(crate) fn complement_offsets(
        &self,
        targets: &[usize],
        fixed: &[(usize, usize)],
    ) -> Vec<usize> {
        let mut out = vec![0usize];
        for r in 0..self.dims.len() {
            if targets.contains(&r) {
                continue;
            }
            let s = self.strides[r];
            let mut pinned: Option<usize> = None;
            for &(_, v) in fixed.iter().filter(|(reg, _)| *reg == r) {
                match pinned {
                    Some(p) if p != v => return Vec::new(),
                    _ => pinned = Some(v),
                }
            }
            out = match pinned {
                Some(v) => out.into_iter().map(|o| o + v * s).collect(),
                None => out
                    .iter()
                    .flat_map(|&o| (0..self.dims[r]).map(move |x| o + x * s))
                    .collect(),
            };
        }
        out
    }
}

/// Per-register projector description: `Some(v)` pins the register to `|v⟩`,
/// `None` leaves it free. The projector is the tensor product of the pins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterPattern(Vec<Option<usize>>);

impl RegisterPattern {
    pub fn new(slots: Vec<Option<usize>>) -> Self {
        RegisterPattern(slots)
    }

    pub fn any(len: usize) -> Self {
        RegisterPattern(vec![None; len])
    }

    pub fn zeros(len: usize) -> Self {
        RegisterPattern(vec![Some(0); len])
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn pins(&self) -> Vec<(usize, usize)> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(r, v)| v.map(|v| (r, v)))
            .collect()
    }

    pub fn validate(&self, layout: &RegisterLayout) -> Result<()> {
        if self.0.len() != layout.len() {
            return Err(Error::structural(format!(
                "pattern names {} registers but layout has {}",
                self.0.len(),
                layout.len()
            )));
        }
        self.validate_prefix(layout)
    }

    /// Like `validate`, but registers past the end of the pattern are free.
    pub fn validate_prefix(&self, layout: &RegisterLayout) -> Result<()> {
        if self.0.len() > layout.len() {
            return Err(Error::structural(format!(
                "pattern names {} registers but layout has {}",
                self.0.len(),
                layout.len()
            )));
        }
        for (r, v) in self.pins() {
            if v >= layout.dim(r) {
                return Err(Error::structural(format!(
                    "pattern pins register {r} to {v}, beyond its dimension {}",
                    layout.dim(r)
                )));
            }
        }
        Ok(())
    }

    /// Basis indices inside the projector's range.
    pub fn indices(&self, layout: &RegisterLayout) -> Vec<usize> {
        layout.complement_offsets(&[], &self.pins())
    }
}

/// `‖Π state‖²` for the projector described by `pattern`.
pub fn projector_norm_sq(
    state: &ComplexVec,
    pattern: &RegisterPattern,
    layout: &RegisterLayout,
) -> Result<f64> {
    pattern.validate(layout)?;
    check_state(state, layout)?;
    let amps = state.amplitudes();
    Ok(pattern
        .indices(layout)
        .into_iter()
        .map(|i| amps[i].norm_sqr())
        .sum())
}

fn check_state(state: &ComplexVec, layout: &RegisterLayout) -> Result<()> {
    if state.dim() != layout.total_dim() {
        return Err(Error::structural(format!(
            "state has dimension {} but layout has {}",
            state.dim(),
            layout.total_dim()
        )));
    }
    Ok(())
}

/// Square complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        DenseMatrix { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::structural("matrix rows must form a square"));
        }
        Ok(DenseMatrix {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(2, |i, j| C64::new(if i == 1 && j == 1 { -h } else { h }, 0.0))
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
    }

    /// Real rotation `[[cos, -sin], [sin, cos]]`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows(vec![
            vec![C64::new(c, 0.0), C64::new(-s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
        .expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let m = other.dim;
        Self::from_fn(self.dim * m, |i, j| {
            self.get(i / m, j / m) * other.get(i % m, j % m)
        })
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .max_abs_diff(&DenseMatrix::identity(self.dim))
    }

    pub fn is_permutation(&self) -> bool {
        let n = self.dim;
        let is_one = |z: C64| z == ONE;
        let is_zero = |z: C64| z == ZERO;
        (0..n).all(|i| {
            let row = self.row(i);
            row.iter().filter(|&&z| is_one(z)).count() == 1
                && row.iter().all(|&z| is_one(z) || is_zero(z))
        }) && (0..n).all(|j| (0..n).filter(|&i| is_one(self.get(i, j))).count() == 1)
    }
}

/// Column-stored sparse square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseMatrix {
    pub fn from_columns(dim: usize, cols: Vec<Vec<(usize, C64)>>) -> Result<Self> {
        if cols.len() != dim {
            return Err(Error::structural(format!(
                "sparse matrix of dimension {dim} given {} columns",
                cols.len()
            )));
        }
        if cols.iter().flatten().any(|&(r, _)| r >= dim) {
            return Err(Error::structural("sparse entry row out of range"));
        }
        Ok(SparseMatrix { dim, cols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[(usize, C64)] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    fn apply_into(&self, v: &[C64], out: &mut [C64], adjoint: bool) {
        out.iter_mut().for_each(|o| *o = ZERO);
        if adjoint {
            for (j, col) in self.cols.iter().enumerate() {
                out[j] = col.iter().map(|&(r, a)| a.conj() * v[r]).sum();
            }
        } else {
            for (j, col) in self.cols.iter().enumerate() {
                let x = v[j];
                if x == ZERO {
                    continue;
                }
                for &(r, a) in col {
                    out[r] += a * x;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, a) in col {
                m.set(r, j, a);
            }
        }
        m
    }
}

/// An operator on a register layout, kept in factored form and applied
/// lazily. Register ids refer to positions in the layout it is applied to.
#[derive(Clone, Debug)]
pub enum Operator {
    Identity,
    /// Global scalar; becomes a relative phase under a control.
    Scalar(C64),
    /// Dense matrix on the joint space of `targets` (first target most significant).
    Local {
        targets: Vec<usize>,
        matrix: DenseMatrix,
    },
    /// Basis permutation on `targets`: `|j⟩ ↦ |image[j]⟩`.
    Permutation {
        targets: Vec<usize>,
        image: Vec<usize>,
    },
    /// Sparse matrix on `targets`; a labelled one is an oracle call and is
    /// charged to the query ledger on every application.
    Sparse {
        targets: Vec<usize>,
        matrix: Arc<SparseMatrix>,
        adjoint: bool,
        label: Option<OracleLabel>,
    },
    /// `I − 2Π` for the pattern projector `Π`.
    Reflection(RegisterPattern),
    /// Acts as `inner` where register `control` holds `value`, identity elsewhere.
    Controlled {
        control: usize,
        value: usize,
        inner: Box<Operator>,
    },
    /// Factors applied in order, first element first.
    Sequence(Vec<Operator>),
}

impl Operator {
    pub fn local(targets: Vec<usize>, matrix: DenseMatrix) -> Self {
        Operator::Local { targets, matrix }
    }

    pub fn sequence(factors: impl IntoIterator<Item = Operator>) -> Self {
        Operator::Sequence(factors.into_iter().collect())
    }

    /// Registers the operator acts on non-trivially (including control and
    /// reflection pins).
    pub fn registers(&self) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        self.collect_registers(&mut set);
        set
    }

    fn collect_registers(&self, set: &mut BTreeSet<usize>) {
        match self {
            Operator::Identity | Operator::Scalar(_) => {}
            Operator::Local { targets, .. }
            | Operator::Permutation { targets, .. }
            | Operator::Sparse { targets, .. } => set.extend(targets.iter().copied()),
            Operator::Reflection(p) => set.extend(p.pins().into_iter().map(|(r, _)| r)),
            Operator::Controlled { control, inner, .. } => {
                set.insert(*control);
                inner.collect_registers(set);
            }
            Operator::Sequence(fs) => fs.iter().for_each(|f| f.collect_registers(set)),
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Identity => Operator::Identity,
            Operator::Scalar(z) => Operator::Scalar(z.conj()),
            Operator::Local { targets, matrix } => Operator::Local {
                targets: targets.clone(),
                matrix: matrix.adjoint(),
            },
            Operator::Permutation { targets, image } => {
                let mut inv = vec![0; image.len()];
                for (j, &i) in image.iter().enumerate() {
                    inv[i] = j;
                }
                Operator::Permutation {
                    targets: targets.clone(),
                    image: inv,
                }
            }
            Operator::Sparse {
                targets,
                matrix,
                adjoint,
                label,
            } => Operator::Sparse {
                targets: targets.clone(),
                matrix: Arc::clone(matrix),
                adjoint: !adjoint,
                label: *label,
            },
            Operator::Reflection(p) => Operator::Reflection(p.clone()),
            Operator::Controlled {
                control,
                value,
                inner,
            } => Operator::Controlled {
                control: *control,
                value: *value,
                inner: Box::new(inner.adjoint()),
            },
            Operator::Sequence(fs) => Operator::Sequence(fs.iter().rev().map(Operator::adjoint).collect()),
        }
    }

    /// Checks register ids and factor dimensions against `layout`.
    pub fn validate(&self, layout: &RegisterLayout) -> Result<()> {
        let check_targets = |targets: &[usize], dim: usize| -> Result<()> {
            if let Some(&r) = targets.iter().find(|&&r| r >= layout.len()) {
                return Err(Error::structural(format!(
                    "operator targets register {r} but layout has {}",
                    layout.len()
                )));
            }
            let distinct: BTreeSet<_> = targets.iter().collect();
            if distinct.len() != targets.len() {
                return Err(Error::structural("operator targets a register twice"));
            }
            let expected = layout.sub_dim(targets);
            if expected != dim {
                return Err(Error::structural(format!(
                    "operator of dimension {dim} placed on registers {targets:?} of joint dimension {expected}"
                )));
            }
            Ok(())
        };
        match self {
            Operator::Identity | Operator::Scalar(_) => Ok(()),
            Operator::Local { targets, matrix } => check_targets(targets, matrix.dim()),
            Operator::Permutation { targets, image } => {
                check_targets(targets, image.len())?;
                let mut seen = vec![false; image.len()];
                for &i in image {
                    if i >= image.len() || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::structural("permutation image is not a bijection"));
                    }
                }
                Ok(())
            }
            Operator::Sparse { targets, matrix, .. } => check_targets(targets, matrix.dim()),
            Operator::Reflection(p) => p.validate_prefix(layout),
            Operator::Controlled {
                control,
                value,
                inner,
            } => {
                if *control >= layout.len() {
                    return Err(Error::structural(format!(
                        "control register {control} does not exist"
                    )));
                }
                if *value >= layout.dim(*control) {
                    return Err(Error::structural(format!(
                        "control value {value} exceeds register dimension {}",
                        layout.dim(*control)
                    )));
                }
                if inner.registers().contains(control) {
                    return Err(Error::structural(format!(
                        "control register {control} overlaps the controlled operator"
                    )));
                }
                inner.validate(layout)
            }
            Operator::Sequence(fs) => fs.iter().try_for_each(|f| f.validate(layout)),
        }
    }

    /// Applies the operator in place, charging labelled oracle calls to `ledger`.
    pub fn apply(
        &self,
        state: &mut ComplexVec,
        layout: &RegisterLayout,
        ledger: &mut QueryLedger,
    ) -> Result<()> {
        check_state(state, layout)?;
        self.validate(layout)?;
        self.apply_in(state.amplitudes_mut(), layout, &mut Vec::new(), ledger);
        Ok(())
    }

    /// Applies the operator without recording oracle calls (analysis only).
    pub fn apply_uncounted(&self, state: &mut ComplexVec, layout: &RegisterLayout) -> Result<()> {
        self.apply(state, layout, &mut QueryLedger::default())
    }

    fn apply_in(
        &self,
        amps: &mut [C64],
        layout: &RegisterLayout,
        fixed: &mut Vec<(usize, usize)>,
        ledger: &mut QueryLedger,
    ) {
        match self {
            Operator::Identity => {}
            Operator::Scalar(z) => {
                for i in layout.complement_offsets(&[], fixed) {
                    amps[i] *= z;
                }
            }
            Operator::Local { targets, matrix } => {
                apply_blockwise(amps, layout, targets, fixed, |buf, out| {
                    matrix.matvec_into(buf, out)
                });
            }
            Operator::Permutation { targets, image } => {
                apply_blockwise(amps, layout, targets, fixed, |buf, out| {
                    for (j, &i) in image.iter().enumerate() {
                        out[i] = buf[j];
                    }
                });
            }
            Operator::Sparse {
                targets,
                matrix,
                adjoint,
                label,
            } => {
                if let Some(label) = label {
                    ledger.record(*label, *adjoint, !fixed.is_empty());
                }
                apply_blockwise(amps, layout, targets, fixed, |buf, out| {
                    matrix.apply_into(buf, out, *adjoint)
                });
            }
            Operator::Reflection(pattern) => {
                let mut pins = pattern.pins();
                pins.extend_from_slice(fixed);
                for i in layout.complement_offsets(&[], &pins) {
                    amps[i] = -amps[i];
                }
            }
            Operator::Controlled {
                control,
                value,
                inner,
            } => {
                fixed.push((*control, *value));
                inner.apply_in(amps, layout, fixed, ledger);
                fixed.pop();
            }
            Operator::Sequence(fs) => {
                for f in fs {
                    f.apply_in(amps, layout, fixed, ledger);
                }
            }
        }
    }

    /// Oracle calls one application would charge; `controlled` marks an
    /// application inside an enclosing control.
    pub fn query_cost(&self, controlled: bool) -> QueryLedger {
        let mut ledger = QueryLedger::default();
        self.accumulate_cost(controlled, &mut ledger);
        ledger
    }

    fn accumulate_cost(&self, controlled: bool, ledger: &mut QueryLedger) {
        match self {
            Operator::Sparse {
                adjoint,
                label: Some(label),
                ..
            } => ledger.record(*label, *adjoint, controlled),
            Operator::Controlled { inner, .. } => inner.accumulate_cost(true, ledger),
            Operator::Sequence(fs) => fs.iter().for_each(|f| f.accumulate_cost(controlled, ledger)),
            _ => {}
        }
    }

    /// Dense matrix of the operator on the full layout space.
    pub fn to_dense(&self, layout: &RegisterLayout) -> Result<DenseMatrix> {
        let n = layout.total_dim();
        if n > MAX_DENSE_DIM {
            return Err(Error::capacity(format!(
                "dense form requested for dimension {n} (limit {MAX_DENSE_DIM})"
            )));
        }
        self.validate(layout)?;
        let mut m = DenseMatrix::zeros(n);
        let mut scratch = QueryLedger::default();
        for j in 0..n {
            let mut col = ComplexVec::basis(n, j);
            self.apply_in(col.amplitudes_mut(), layout, &mut Vec::new(), &mut scratch);
            for (i, &a) in col.amplitudes().iter().enumerate() {
                m.set(i, j, a);
            }
        }
        Ok(m)
    }
}

/// Gathers each target block, transforms it with `f`, and scatters it back.
fn apply_blockwise(
    amps: &mut [C64],
    layout: &RegisterLayout,
    targets: &[usize],
    fixed: &[(usize, usize)],
    f: impl Fn(&[C64], &mut [C64]),
) {
    let block = layout.offsets(targets);
    let mut buf = vec![ZERO; block.len()];
    let mut out = vec![ZERO; block.len()];
    for base in layout.complement_offsets(targets, fixed) {
        for (b, &o) in buf.iter_mut().zip(&block) {
            *b = amps[base + o];
        }
        f(&buf, &mut out);
        for (&v, &o) in out.iter().zip(&block) {
            amps[base + o] = v;
        }
    }
}

/// `(I ⊗ op ⊗ I)·state` with `op` placed on `targets`.
pub fn tensor_apply(
    op: &DenseMatrix,
    targets: &[usize],
    state: &ComplexVec,
    layout: &RegisterLayout,
) -> Result<ComplexVec> {
    let mut out = state.clone();
    Operator::local(targets.to_vec(), op.clone()).apply_uncounted(&mut out, layout)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout4() -> RegisterLayout {
        RegisterLayout::abcd(3, 3).unwrap()
    }

    #[test]
    fn mixed_radix_roundtrip() {
        let l = RegisterLayout::new(vec![3, 5, 2]).unwrap();
        assert_eq!(l.total_dim(), 30);
        for i in 0..30 {
            assert_eq!(l.encode(&l.decode(i)).unwrap(), i);
        }
        assert_eq!(l.encode(&[1, 0, 1]).unwrap(), 11);
        assert!(l.encode(&[3, 0, 0]).is_err());
        assert!(RegisterLayout::new(vec![2, 0]).is_err());
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let l = layout4();
        let mut s = ComplexVec::zeros(l.total_dim());
        for (i, a) in s.amplitudes_mut().iter_mut().enumerate() {
            *a = C64::new(i as f64, -(i as f64) / 3.0);
        }
        for reg in 0..4 {
            let out = tensor_apply(&DenseMatrix::identity(l.dim(reg)), &[reg], &s, &l).unwrap();
            assert_eq!(out, s);
        }
    }

    #[test]
    fn x_on_d_flips_last_register() {
        let l = layout4();
        let s = ComplexVec::basis(l.total_dim(), 0);
        let out = tensor_apply(&DenseMatrix::pauli_x(), &[3], &s, &l).unwrap();
        assert_eq!(out, ComplexVec::basis(l.total_dim(), l.encode(&[0, 0, 0, 1]).unwrap()));
    }

    #[test]
    fn hadamard_on_d_matches_kron_oracle() {
        let l = layout4();
        let idx = l.encode(&[2, 1, 0, 0]).unwrap();
        let s = ComplexVec::basis(l.total_dim(), idx);
        let out = tensor_apply(&DenseMatrix::hadamard(), &[3], &s, &l).unwrap();
        // I_27 ⊗ H as an explicit dense matrix
        let full = DenseMatrix::identity(27).kron(&DenseMatrix::hadamard());
        let expected = ComplexVec::from_amplitudes(full.matvec(s.amplitudes())).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitudes()[idx].re - h).abs() < 1e-15);
        assert!((out.amplitudes()[idx + 1].re - h).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let l = layout4();
        let s = ComplexVec::basis(l.total_dim(), 0);
        assert!(matches!(
            tensor_apply(&DenseMatrix::hadamard(), &[0], &s, &l),
            Err(Error::Structural(_))
        ));
        let short = ComplexVec::basis(10, 0);
        assert!(tensor_apply(&DenseMatrix::hadamard(), &[3], &short, &l).is_err());
        assert!(tensor_apply(&DenseMatrix::hadamard(), &[4], &s, &l).is_err());
    }

    #[test]
    fn projector_examples() {
        let l = RegisterLayout::abcd(6, 6).unwrap();
        let mut s = ComplexVec::zeros(l.total_dim());
        s.amplitudes_mut()[l.encode(&[0, 0, 5, 1]).unwrap()] = ONE;
        assert_eq!(projector_norm_sq(&s, &RegisterPattern::any(4), &l).unwrap(), 1.0);
        let pat = RegisterPattern::new(vec![Some(0), Some(0), None, Some(0)]);
        assert_eq!(projector_norm_sq(&s, &pat, &l).unwrap(), 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = ComplexVec::zeros(l.total_dim());
        s.amplitudes_mut()[0] = C64::new(h, 0.0);
        s.amplitudes_mut()[1] = C64::new(h, 0.0);
        assert!((projector_norm_sq(&s, &pat, &l).unwrap() - 0.5).abs() < 1e-15);

        let bad = RegisterPattern::new(vec![Some(0), None, None, None, None]);
        assert!(projector_norm_sq(&s, &bad, &l).is_err());
        let out_of_range = RegisterPattern::new(vec![Some(6), None, None, None]);
        assert!(projector_norm_sq(&s, &out_of_range, &l).is_err());
    }

    #[test]
    fn controlled_overlap_rejected() {
        let l = layout4();
        let op = Operator::Controlled {
            control: 3,
            value: 1,
            inner: Box::new(Operator::local(vec![3], DenseMatrix::pauli_x())),
        };
        assert!(op.validate(&l).is_err());
    }

    #[test]
    fn permutation_adjoint_inverts() {
        let l = RegisterLayout::new(vec![3, 3]).unwrap();
        let image: Vec<usize> = (0..9).map(|j| (j * 4 + 1) % 9).collect();
        let op = Operator::Permutation {
            targets: vec![0, 1],
            image,
        };
        let prod = Operator::sequence([op.clone(), op.adjoint()]).to_dense(&l).unwrap();
        assert!(prod.max_abs_diff(&DenseMatrix::identity(9)) == 0.0);
        assert!(op.to_dense(&l).unwrap().is_permutation());
    }
}
