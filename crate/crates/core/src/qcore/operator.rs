use std::ops::Deref;

use nalgebra::DMatrix;

use super::layout::Layout;
use super::{C64, EPS};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Square complex matrix acting on a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: Layout,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(layout: Layout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { layout, matrix })
    }

    /// Like [`Operator::new`] but additionally requires U†U = I.
    pub fn unitary(layout: Layout, matrix: CMatrix) -> Result<Self> {
        let op = Self::new(layout, matrix)?;
        let dev = op.unitarity_deviation();
        if dev > EPS {
            return Err(Error::NotUnitary(dev));
        }
        Ok(op)
    }

    pub fn identity(layout: Layout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: CMatrix::identity(d, d),
        }
    }

    /// Row-major real entries.
    pub fn from_real_rows(layout: Layout, rows: &[Vec<f64>]) -> Result<Self> {
        let d = layout.dim();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows.len(),
            });
        }
        let matrix = CMatrix::from_fn(d, d, |r, c| C64::new(rows[r][c], 0.0));
        Self::new(layout, matrix)
    }

    /// Permutation matrix sending basis index `i` to `image(i)`.
    pub fn permutation(layout: Layout, image: impl Fn(usize) -> usize) -> Result<Self> {
        let d = layout.dim();
        let mut hit = vec![false; d];
        let mut matrix = CMatrix::zeros(d, d);
        for col in 0..d {
            let row = image(col);
            if row >= d || hit[row] {
                return Err(Error::NotPermutation);
            }
            hit[row] = true;
            matrix[(row, col)] = C64::new(1.0, 0.0);
        }
        Ok(Self { layout, matrix })
    }

    /// Permutation given as a map on digit tuples.
    pub fn basis_map(layout: Layout, image: impl Fn(&[usize]) -> Vec<usize>) -> Result<Self> {
        let d = layout.dim();
        let mut targets = Vec::with_capacity(d);
        for i in 0..d {
            let digits = layout.digits(i);
            targets.push(layout.index(&image(&digits))?);
        }
        Self::permutation(layout, |i| targets[i])
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Same matrix over a different but compatible layout.
    pub fn relabel(&self, layout: Layout) -> Result<Self> {
        self.layout.check_compatible(&layout)?;
        Ok(Self {
            layout,
            matrix: self.matrix.clone(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.map(|z| z.conj()),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.layout.check_compatible(&other.layout)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Operator product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        self.layout.check_compatible(&other.layout)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Kronecker product; `self`'s registers are the more significant ones.
    pub fn tensor(&self, other: &Operator) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self {
            layout,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Lift a local operator to `full`, acting on the named registers (in the
    /// order of `self`'s layout) and as the identity elsewhere.
    pub fn embed(&self, full: &Layout, targets: &[&str]) -> Result<Self> {
        if targets.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                found: targets.len(),
            });
        }
        let positions = targets
            .iter()
            .map(|t| full.position(t))
            .collect::<Result<Vec<_>>>()?;
        for (i, &p) in positions.iter().enumerate() {
            if positions[..i].contains(&p) {
                return Err(Error::DuplicateRegister(targets[i].to_string()));
            }
            if full.register_dim(p) != self.layout.register_dim(i) {
                return Err(Error::DimensionMismatch {
                    expected: self.layout.register_dim(i),
                    found: full.register_dim(p),
                });
            }
        }
        let d = full.dim();
        let local_d = self.layout.dim();
        let local_index = |full_idx: usize| -> usize {
            positions
                .iter()
                .enumerate()
                .map(|(i, &p)| full.digit(full_idx, p) * self.layout.stride(i))
                .sum()
        };
        let mut matrix = CMatrix::zeros(d, d);
        for col in 0..d {
            let lc = local_index(col);
            // full index with all target digits cleared
            let base = col
                - positions
                    .iter()
                    .map(|&p| full.digit(col, p) * full.stride(p))
                    .sum::<usize>();
            for lr in 0..local_d {
                let z = self.matrix[(lr, lc)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = base
                    + positions
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| self.layout.digit(lr, i) * full.stride(p))
                        .sum::<usize>();
                matrix[(row, col)] = z;
            }
        }
        Ok(Self {
            layout: full.clone(),
            matrix,
        })
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        max_abs(&(prod - CMatrix::identity(d, d)))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() < EPS
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() < EPS
    }

    /// Exactly one entry equal to 1 in every row and column, zeros elsewhere.
    pub fn is_permutation(&self) -> bool {
        let d = self.dim();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        if self.matrix.iter().any(|&z| z != one && z != zero) {
            return false;
        }
        (0..d).all(|i| {
            self.matrix.row(i).iter().filter(|&&z| z == one).count() == 1
                && self.matrix.column(i).iter().filter(|&&z| z == one).count() == 1
        })
    }

    /// Image of basis index `col` if this is a permutation matrix.
    pub fn permuted_index(&self, col: usize) -> Option<usize> {
        let one = C64::new(1.0, 0.0);
        (0..self.dim()).find(|&r| self.matrix[(r, col)] == one)
    }

    /// `table[col]` is the image of basis index `col`, for permutation matrices.
    pub fn permutation_table(&self) -> Option<Vec<usize>> {
        if !self.is_permutation() {
            return None;
        }
        (0..self.dim()).map(|c| self.permuted_index(c)).collect()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.max_abs_diff(other) < tol
    }

    /// Number of entries with magnitude above `EPS`.
    pub fn nonzero_count(&self) -> usize {
        self.matrix.iter().filter(|z| z.norm() > EPS).count()
    }
}

/// An operator verified to satisfy H† = H.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(Operator);

impl Hermitian {
    pub fn new(op: Operator) -> Result<Self> {
        let dev = op.hermiticity_deviation();
        if dev > EPS {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(op))
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    /// Real eigenvalues (ascending) and the matching orthonormal eigenvectors
    /// as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let eig = nalgebra::SymmetricEigen::new(self.0.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(self.0.dim(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }
}

impl Deref for Hermitian {
    type Target = Operator;

    fn deref(&self) -> &Operator {
        &self.0
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qutrit(name: &str) -> Layout {
        Layout::single(name, 3).unwrap()
    }

    fn shift() -> Operator {
        Operator::permutation(qutrit("q"), |i| (i + 1) % 3).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let i3a = Operator::identity(qutrit("a"));
        let i3b = Operator::identity(qutrit("b"));
        let i9 = i3a.tensor(&i3b).unwrap();
        assert_eq!(i9.dim(), 9);
        assert!(i9.approx_eq(&Operator::identity(i9.layout().clone()), 1e-15));
    }

    #[test]
    fn tensor_rejects_name_collision() {
        let a = Operator::identity(qutrit("a"));
        assert!(matches!(a.tensor(&a), Err(Error::RegisterCollision(_))));
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(matches!(
            Operator::permutation(qutrit("q"), |_| 0),
            Err(Error::NotPermutation)
        ));
    }

    #[test]
    fn embed_matches_kronecker() {
        let full = Layout::new(&[("x", 3), ("y", 3), ("z", 3)]).unwrap();
        let s = shift();
        let embedded = s.embed(&full, &["y"]).unwrap();
        let kron = Operator::identity(qutrit("x"))
            .tensor(&s.relabel(qutrit("y")).unwrap())
            .unwrap()
            .tensor(&Operator::identity(qutrit("z")))
            .unwrap();
        assert!(embedded.approx_eq(&kron, 1e-15));

        // reversed target order on a two-register operator
        let pair = Layout::new(&[("p", 3), ("q", 3)]).unwrap();
        let op = Operator::basis_map(pair, |d| vec![(d[0] + d[1]) % 3, d[1]]).unwrap();
        let e = op.embed(&full, &["z", "x"]).unwrap();
        let src = full.index(&[1, 0, 2]).unwrap();
        let dst = full.index(&[1, 0, 0]).unwrap();
        assert_eq!(e.permuted_index(src), Some(dst));
    }

    #[test]
    fn unitary_and_hermitian_checks() {
        assert!(shift().is_unitary());
        assert!(!shift().is_hermitian());
        assert!(Hermitian::new(shift()).is_err());
        let bad = Operator::from_real_rows(
            Layout::single("q", 2).unwrap(),
            &[vec![1.0, 1.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            Operator::unitary(bad.layout().clone(), bad.matrix().clone()),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn eigen_of_pauli_x() {
        let x = Operator::from_real_rows(
            Layout::single("q", 2).unwrap(),
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let (vals, vecs) = Hermitian::new(x).unwrap().eigen();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        assert!((vecs[(0, 1)].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
