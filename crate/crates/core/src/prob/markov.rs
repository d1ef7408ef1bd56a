use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-stochastic matrix: `rows[i][j]` is the probability of moving from
/// state `i` to state `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct TransitionMatrix<F> {
    pub rows: Vec<Vec<F>>,
}

impl<F: Real> TransitionMatrix<F> {
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self> {
        let tm = Self { rows };
        tm.validate()?;
        Ok(tm)
    }

    /// Normalizes each row of nonnegative counts. Rows summing to zero are
    /// rejected.
    pub fn from_counts(counts: &[Vec<F>]) -> Result<Self> {
        let rows = counts
            .iter()
            .map(|row| {
                let total = row.iter().copied().sum::<F>();
                if !(total > F::zero()) {
                    return Err(Error::Validation("transition count row sums to zero".into()));
                }
                Ok(row.iter().map(|&c| c / total).collect())
            })
            .collect::<Result<Vec<Vec<F>>>>()?;
        Self::new(rows)
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, from: usize, to: usize) -> F {
        self.rows[from][to]
    }

    pub fn row(&self, from: usize) -> &[F] {
        &self.rows[from]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows.len();
        if n == 0 {
            return Err(Error::Validation("empty transition matrix".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "transition row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(p >= F::zero()) || !p.is_finite()) {
                return Err(Error::Validation(format!("transition row {i} has a negative entry")));
            }
            let total = row.iter().copied().sum::<F>();
            if (total - F::one()).abs().as_f64() > F::ROW_TOL {
                return Err(Error::Validation(format!("transition row {i} sums to {total}, not 1")));
            }
        }
        Ok(())
    }

    fn apply_left(&self, pi: &[F]) -> Vec<F> {
        let n = self.rows.len();
        let mut out = vec![F::zero(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for j in 0..n {
                out[j] += pi[i] * row[j];
            }
        }
        out
    }

    /// True when some power of the matrix is strictly positive, i.e. the chain
    /// is irreducible and aperiodic.
    pub fn is_primitive(&self) -> bool {
        let n = self.rows.len();
        let base: Vec<Vec<bool>> = self.rows.iter().map(|r| r.iter().map(|&p| p > F::zero()).collect()).collect();
        let mut reach = base.clone();
        // Wielandt bound on the exponent of a primitive matrix
        let bound = (n - 1) * (n - 1) + 1;
        for _ in 1..bound {
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if reach[i][k] {
                        for j in 0..n {
                            next[i][j] |= base[k][j];
                        }
                    }
                }
            }
            reach = next;
        }
        reach.iter().all(|r| r.iter().all(|&b| b))
    }
}

const MAX_SQUARINGS: usize = 64;

/// Stationary distribution of a primitive chain by power iteration. The
/// iteration runs on repeated squares of the matrix so slowly mixing chains
/// (near-identity rows) converge in a few dozen steps.
pub fn stationary_distribution<F: Real>(tm: &TransitionMatrix<F>) -> Result<Vec<F>> {
    tm.validate()?;
    if !tm.is_primitive() {
        return Err(Error::Convergence {
            iterations: 0,
            message: "chain is reducible or periodic".into(),
        });
    }
    let n = tm.n_states();
    let tol = F::cst(F::ROW_TOL);
    let uniform = vec![F::one() / F::from_usize(n).unwrap(); n];
    let mut power = tm.rows.clone();
    for _ in 0..MAX_SQUARINGS {
        let mut pi = vec![F::zero(); n];
        for (i, row) in power.iter().enumerate() {
            for j in 0..n {
                pi[j] += uniform[i] * row[j];
            }
        }
        let total = pi.iter().copied().sum::<F>();
        pi.iter_mut().for_each(|p| *p /= total);
        let next = tm.apply_left(&pi);
        let resid = pi.iter().zip(&next).map(|(&a, &b)| (a - b).abs()).fold(F::zero(), F::max);
        if resid < tol {
            return Ok(pi);
        }
        power = square(&power);
    }
    Err(Error::Convergence {
        iterations: MAX_SQUARINGS,
        message: "stationary distribution did not settle".into(),
    })
}

fn square<F: Real>(m: &[Vec<F>]) -> Vec<Vec<F>> {
    let n = m.len();
    let mut out = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let a = m[i][k];
            for j in 0..n {
                out[i][j] += a * m[k][j];
            }
        }
        let total = out[i].iter().copied().sum::<F>();
        out[i].iter_mut().for_each(|p| *p /= total);
    }
    out
}
