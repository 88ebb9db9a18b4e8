use crate::error::{Error, Result};

/// A named tensor factor of the Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of registers. Basis indices are mixed-radix numbers with the
/// first-listed register most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    registers: Vec<Register>,
    strides: Vec<usize>,
    dim: usize,
}

impl Layout {
    pub fn new<S: AsRef<str>>(registers: &[(S, usize)]) -> Result<Self> {
        let registers = registers
            .iter()
            .map(|(name, dim)| Register {
                name: name.as_ref().to_string(),
                dim: *dim,
            })
            .collect();
        Self::from_registers(registers)
    }

    pub fn single(name: &str, dim: usize) -> Result<Self> {
        Self::new(&[(name, dim)])
    }

    /// `n` registers of the same dimension, named `prefix0 .. prefix{n-1}`.
    pub fn uniform(prefix: &str, n: usize, dim: usize) -> Result<Self> {
        let regs: Vec<(String, usize)> = (0..n).map(|i| (format!("{prefix}{i}"), dim)).collect();
        Self::new(&regs)
    }

    pub fn from_registers(registers: Vec<Register>) -> Result<Self> {
        for (i, r) in registers.iter().enumerate() {
            if r.dim < 2 {
                return Err(Error::BadRegisterDimension {
                    name: r.name.clone(),
                    dim: r.dim,
                });
            }
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::DuplicateRegister(r.name.clone()));
            }
        }
        let mut strides = vec![1; registers.len()];
        for i in (0..registers.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * registers[i + 1].dim;
        }
        let dim = registers.iter().map(|r| r.dim).product();
        Ok(Self {
            registers,
            strides,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|r| r.name.as_str())
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn register_dim(&self, pos: usize) -> usize {
        self.registers[pos].dim
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    /// Digit of register `pos` in basis index `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.registers[pos].dim
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.registers.len())
            .map(|p| self.digit(index, p))
            .collect()
    }

    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.registers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.registers.len(),
                found: digits.len(),
            });
        }
        let mut idx = 0;
        for (p, &d) in digits.iter().enumerate() {
            let dim = self.registers[p].dim;
            if d >= dim {
                return Err(Error::DigitOutOfRange { digit: d, dim });
            }
            idx += d * self.strides[p];
        }
        Ok(idx)
    }

    /// Registers of `self` followed by those of `other`.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        if let Some(r) = other
            .registers
            .iter()
            .find(|r| self.registers.iter().any(|s| s.name == r.name))
        {
            return Err(Error::RegisterCollision(r.name.clone()));
        }
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Layout::from_registers(regs)
    }

    pub fn without(&self, name: &str) -> Result<Layout> {
        let pos = self.position(name)?;
        let mut regs = self.registers.clone();
        regs.remove(pos);
        Layout::from_registers(regs)
    }

    /// Same dimensions in the same order; names are not compared.
    pub fn compatible(&self, other: &Layout) -> bool {
        self.registers.len() == other.registers.len()
            && self
                .registers
                .iter()
                .zip(&other.registers)
                .all(|(a, b)| a.dim == b.dim)
    }

    pub(crate) fn check_compatible(&self, other: &Layout) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    /// Ket label for a basis index, e.g. `012`; digits are comma separated when
    /// any register has dimension above 10.
    pub fn label(&self, index: usize) -> String {
        let digits = self.digits(index);
        if self.registers.iter().all(|r| r.dim <= 10) {
            digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
        } else {
            digits
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}
