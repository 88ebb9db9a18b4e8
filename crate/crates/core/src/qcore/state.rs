use std::fmt;

use nalgebra::DVector;
use rand::Rng;

use super::layout::Layout;
use super::operator::{max_abs, CMatrix, Hermitian, Operator};
use super::{C64, EPS};
use crate::error::{Error, Result};

/// Branches with probability at or below this are treated as impossible.
const BRANCH_CUTOFF: f64 = 1e-15;

/// Normalized amplitude vector over a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: Layout,
    amps: DVector<C64>,
}

/// One possible result of measuring a register.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    /// Renormalized post-measurement state, register removed.
    pub residual: PureState,
}

impl PureState {
    pub fn new(layout: Layout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amps.len(),
            });
        }
        let state = Self {
            layout,
            amps: DVector::from_vec(amps),
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > EPS {
            return Err(Error::NotNormalized(n));
        }
        Ok(state)
    }

    pub fn basis(layout: Layout, digits: &[usize]) -> Result<Self> {
        let idx = layout.index(digits)?;
        let mut amps: DVector<C64> = DVector::zeros(layout.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Equal-weight superposition of the given basis states.
    pub fn uniform(layout: Layout, terms: &[&[usize]]) -> Result<Self> {
        let weighted: Vec<(C64, &[usize])> =
            terms.iter().map(|t| (C64::new(1.0, 0.0), *t)).collect();
        Self::from_terms(layout, &weighted)
    }

    /// Superposition Σ c_k |digits_k⟩, normalized afterwards.
    pub fn from_terms(layout: Layout, terms: &[(C64, &[usize])]) -> Result<Self> {
        let mut amps: DVector<C64> = DVector::zeros(layout.dim());
        for (c, digits) in terms {
            amps[layout.index(digits)?] += *c;
        }
        let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if n <= BRANCH_CUTOFF {
            return Err(Error::ZeroProbability);
        }
        amps /= C64::new(n.sqrt(), 0.0);
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<C64> {
        Ok(self.amps[self.layout.index(digits)?])
    }

    pub fn amplitude_at(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Same amplitudes over a different but compatible layout.
    pub fn relabel(&self, layout: Layout) -> Result<Self> {
        self.layout.check_compatible(&layout)?;
        Ok(Self {
            layout,
            amps: self.amps.clone(),
        })
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(Self { layout, amps })
    }

    pub fn apply(&self, op: &Operator) -> Result<Self> {
        op.layout().check_compatible(&self.layout)?;
        Ok(Self {
            layout: self.layout.clone(),
            amps: op.matrix() * &self.amps,
        })
    }

    /// Apply a basis permutation given as `table[old] = new`.
    pub fn permute(&self, table: &[usize]) -> Result<Self> {
        if table.len() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                found: table.len(),
            });
        }
        let mut amps = DVector::zeros(self.amps.len());
        for (i, &j) in table.iter().enumerate() {
            amps[j] = self.amps[i];
        }
        Ok(Self {
            layout: self.layout.clone(),
            amps,
        })
    }

    /// Outcome distribution of a computational-basis measurement of `register`.
    pub fn probabilities(&self, register: &str) -> Result<Vec<f64>> {
        let pos = self.layout.position(register)?;
        let mut probs = vec![0.0; self.layout.register_dim(pos)];
        for (i, z) in self.amps.iter().enumerate() {
            probs[self.layout.digit(i, pos)] += z.norm_sqr();
        }
        Ok(probs)
    }

    /// Projection onto `register = outcome`, renormalized, register kept.
    pub fn collapse(&self, register: &str, outcome: usize) -> Result<Self> {
        let pos = self.layout.position(register)?;
        let dim = self.layout.register_dim(pos);
        if outcome >= dim {
            return Err(Error::DigitOutOfRange {
                digit: outcome,
                dim,
            });
        }
        let mut amps = self.amps.clone();
        for (i, z) in amps.iter_mut().enumerate() {
            if self.layout.digit(i, pos) != outcome {
                *z = C64::new(0.0, 0.0);
            }
        }
        let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if n <= BRANCH_CUTOFF {
            return Err(Error::ZeroProbability);
        }
        amps /= C64::new(n.sqrt(), 0.0);
        Ok(Self {
            layout: self.layout.clone(),
            amps,
        })
    }

    /// Drop a register known to hold a definite value.
    fn remove_register(&self, register: &str, outcome: usize) -> Result<Self> {
        let pos = self.layout.position(register)?;
        let layout = self.layout.without(register)?;
        let stride = self.layout.stride(pos);
        let amps = DVector::from_fn(layout.dim(), |j, _| {
            // re-insert the removed digit at `pos`
            let high = j / stride;
            let low = j % stride;
            self.amps[(high * self.layout.register_dim(pos) + outcome) * stride + low]
        });
        Ok(Self { layout, amps })
    }

    /// Every outcome with nonzero probability and its residual.
    pub fn branches(&self, register: &str) -> Result<Vec<Branch>> {
        let probs = self.probabilities(register)?;
        let mut out = Vec::new();
        for (outcome, &p) in probs.iter().enumerate() {
            if p > BRANCH_CUTOFF {
                let collapsed = self.collapse(register, outcome)?;
                out.push(Branch {
                    outcome,
                    probability: p,
                    residual: collapsed.remove_register(register, outcome)?,
                });
            }
        }
        Ok(out)
    }

    /// Sample an outcome; the residual has the measured register removed.
    pub fn measure<R: Rng + ?Sized>(&self, register: &str, rng: &mut R) -> Result<(usize, Self)> {
        let (outcome, collapsed) = self.measure_keep(register, rng)?;
        Ok((outcome, collapsed.remove_register(register, outcome)?))
    }

    /// Sample an outcome; the collapsed register stays in the layout.
    pub fn measure_keep<R: Rng + ?Sized>(
        &self,
        register: &str,
        rng: &mut R,
    ) -> Result<(usize, Self)> {
        let probs = self.probabilities(register)?;
        let outcome = sample_index(&probs, rng)?;
        Ok((outcome, self.collapse(register, outcome)?))
    }

    pub fn density(&self) -> MixedState {
        let m = &self.amps * self.amps.adjoint();
        MixedState {
            layout: self.layout.clone(),
            matrix: m,
        }
    }

    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        if self.amps.len() != other.amps.len() {
            return f64::INFINITY;
        }
        (&self.amps - &other.amps)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Amplitude-exact comparison within `tol` (no global phase freedom).
    pub fn approx_eq(&self, other: &PureState, tol: f64) -> bool {
        self.layout.compatible(&other.layout) && self.max_abs_diff(other) < tol
    }

    /// Indices of basis states with nonzero amplitude.
    pub fn support(&self) -> Vec<usize> {
        (0..self.amps.len())
            .filter(|&i| self.amps[i].norm_sqr() > BRANCH_CUTOFF)
            .collect()
    }

    pub fn is_basis_state(&self) -> bool {
        self.support().len() == 1
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in self.support() {
            let z = self.amps[i];
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if z.im.abs() < EPS {
                write!(f, "{:.6}|{}⟩", z.re, self.layout.label(i))?;
            } else {
                write!(f, "({:.6}{:+.6}i)|{}⟩", z.re, z.im, self.layout.label(i))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Density operator over a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedState {
    layout: Layout,
    matrix: CMatrix,
}

impl MixedState {
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(layout: Layout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > EPS {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > EPS || tr.im.abs() > EPS {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let eig = nalgebra::SymmetricEigen::new(matrix.clone());
        let min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -EPS {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        Ok(Self { layout, matrix })
    }

    /// Classical mixture of basis states, `(weight, digits)`.
    pub fn diagonal(layout: Layout, terms: &[(f64, &[usize])]) -> Result<Self> {
        let d = layout.dim();
        let mut matrix = CMatrix::zeros(d, d);
        for (w, digits) in terms {
            let i = layout.index(digits)?;
            matrix[(i, i)] += C64::new(*w, 0.0);
        }
        Self::new(layout, matrix)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn relabel(&self, layout: Layout) -> Result<Self> {
        self.layout.check_compatible(&layout)?;
        Ok(Self {
            layout,
            matrix: self.matrix.clone(),
        })
    }

    /// U ρ U†.
    pub fn apply(&self, op: &Operator) -> Result<Self> {
        op.layout().check_compatible(&self.layout)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: op.matrix() * &self.matrix * op.matrix().adjoint(),
        })
    }

    /// Computational-basis dephasing: off-diagonal entries removed.
    pub fn dephased(&self) -> Self {
        let d = self.layout.dim();
        let matrix = CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                self.matrix[(r, c)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self {
            layout: self.layout.clone(),
            matrix,
        }
    }

    pub fn max_abs_diff(&self, other: &MixedState) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn approx_eq(&self, other: &MixedState, tol: f64) -> bool {
        self.layout.compatible(&other.layout) && self.max_abs_diff(other) < tol
    }
}

/// Anything with a density-operator view.
pub trait QuantumState {
    fn layout(&self) -> &Layout;
    fn to_density(&self) -> MixedState;
    /// Complex ⟨H⟩ before the imaginary part is checked.
    fn raw_expectation(&self, op: &Operator) -> Result<C64>;
}

impl QuantumState for PureState {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn to_density(&self) -> MixedState {
        self.density()
    }

    fn raw_expectation(&self, op: &Operator) -> Result<C64> {
        op.layout().check_compatible(&self.layout)?;
        Ok(self.amps.dotc(&(op.matrix() * &self.amps)))
    }
}

impl QuantumState for MixedState {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn to_density(&self) -> MixedState {
        self.clone()
    }

    fn raw_expectation(&self, op: &Operator) -> Result<C64> {
        op.layout().check_compatible(&self.layout)?;
        Ok((&self.matrix * op.matrix()).trace())
    }
}

/// ⟨ψ|H|ψ⟩ or Tr{ρH}.
pub fn expectation(h: &Hermitian, state: &dyn QuantumState) -> Result<f64> {
    let z = state.raw_expectation(h)?;
    debug_assert!(z.im.abs() < EPS, "imaginary expectation {z}");
    Ok(z.re)
}

/// Convex combination of density operators.
pub fn mix(ensemble: &[(f64, &dyn QuantumState)]) -> Result<MixedState> {
    let (_, first) = ensemble
        .first()
        .ok_or_else(|| Error::InvalidWeights("empty ensemble".into()))?;
    let layout = first.layout().clone();
    if let Some((w, _)) = ensemble.iter().find(|(w, _)| w.is_nan() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!("negative weight {w}")));
    }
    let total: f64 = ensemble.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > EPS {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    let d = layout.dim();
    let mut matrix = CMatrix::zeros(d, d);
    for (w, s) in ensemble {
        layout.check_compatible(s.layout())?;
        matrix += s.to_density().matrix * C64::new(*w, 0.0);
    }
    Ok(MixedState { layout, matrix })
}

/// Index drawn from an (unnormalized) probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = probs.iter().sum();
    if total.is_nan() || total <= BRANCH_CUTOFF {
        return Err(Error::ZeroProbability);
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::seeded_rng;

    fn qutrits(names: &[&str]) -> Layout {
        let regs: Vec<(&str, usize)> = names.iter().map(|n| (*n, 3)).collect();
        Layout::new(&regs).unwrap()
    }

    fn ghz() -> PureState {
        PureState::uniform(qutrits(&["b", "a"]), &[&[0, 0], &[1, 1], &[2, 2]]).unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let z0 = PureState::basis(qutrits(&["x"]), &[0]).unwrap();
        let z1 = PureState::basis(qutrits(&["y"]), &[0]).unwrap();
        let s = z0.tensor(&z1).unwrap();
        assert_eq!(s.layout().dim(), 9);
        assert_eq!(s.amplitude_at(0), C64::new(1.0, 0.0));
        assert_eq!(s.support(), vec![0]);
    }

    #[test]
    fn new_rejects_unnormalized() {
        let l = qutrits(&["x"]);
        let r = PureState::new(l, vec![C64::new(1.0, 0.0); 3]);
        assert!(matches!(r, Err(Error::NotNormalized(_))));
    }

    #[test]
    fn measure_basis_state_is_deterministic() {
        let l = Layout::new(&[("x", 2), ("y", 3)]).unwrap();
        let s = PureState::basis(l, &[1, 2]).unwrap(); // |5⟩
        let mut rng = seeded_rng(3);
        let (k, rest) = s.measure("y", &mut rng).unwrap();
        assert_eq!(k, 2);
        assert_eq!(rest.layout().names().collect::<Vec<_>>(), ["x"]);
        assert_eq!(rest.amplitude(&[1]).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn measure_middle_register_of_product() {
        let s = PureState::basis(qutrits(&["o"]), &[0])
            .unwrap()
            .tensor(&ghz())
            .unwrap();
        let branches = s.branches("b").unwrap();
        assert_eq!(branches.len(), 3);
        for b in &branches {
            assert!((b.probability - 1.0 / 3.0).abs() < 1e-12);
            assert_eq!(b.residual.layout().names().collect::<Vec<_>>(), ["o", "a"]);
            assert!((b.residual.amplitude(&[0, b.outcome]).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_then_remeasure_is_deterministic() {
        let mut rng = seeded_rng(11);
        let (k, collapsed) = ghz().measure_keep("a", &mut rng).unwrap();
        for _ in 0..5 {
            let (k2, _) = collapsed.measure_keep("a", &mut rng).unwrap();
            assert_eq!(k, k2);
        }
    }

    #[test]
    fn mix_rejects_bad_weights() {
        let g = ghz();
        assert!(mix(&[(0.7, &g as &dyn QuantumState), (0.7, &g)]).is_err());
        assert!(mix(&[(-0.5, &g as &dyn QuantumState), (1.5, &g)]).is_err());
        assert!(mix(&[]).is_err());
    }

    #[test]
    fn mix_singleton_is_projector() {
        let g = ghz();
        let m = mix(&[(1.0, &g as &dyn QuantumState)]).unwrap();
        assert!(m.approx_eq(&g.density(), 1e-15));
        assert!((m.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_state_validation() {
        let l = qutrits(&["x"]);
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(MixedState::new(l.clone(), m).is_err());
        let ok = MixedState::diagonal(l, &[(0.5, &[0]), (0.5, &[2])]).unwrap();
        assert!((ok.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sample_index_skips_zero_entries() {
        let mut rng = seeded_rng(0);
        for _ in 0..100 {
            assert_eq!(sample_index(&[0.0, 1.0, 0.0], &mut rng).unwrap(), 1);
        }
        assert!(sample_index(&[0.0, 0.0], &mut rng).is_err());
    }
}
