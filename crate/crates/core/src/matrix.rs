use crate::scalar::Real;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Elementwise mean of equally sized matrices.
    pub fn mean_of(mats: &[SquareMatrix<T>]) -> Option<Self> {
        let first = mats.first()?;
        let mut out = Self::zeros(first.n);
        for m in mats {
            assert_eq!(m.n, first.n, "dimension mismatch");
            for (o, v) in out.data.iter_mut().zip(&m.data) {
                *o = *o + *v;
            }
        }
        let k = T::from_usize_lossy(mats.len());
        out.data.iter_mut().for_each(|v| *v = *v / k);
        Some(out)
    }
}
