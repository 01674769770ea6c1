//! Disjoint equality constraints on the entries of one factor matrix.

use std::collections::HashMap;
use std::fmt;

/// Entries `(row, col)` of a factor matrix that share one constraint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    pub pairs: Vec<(usize, usize)>,
}

impl IndexSet {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `weightsᵀ · x(set) = rhs` with strictly positive weights and right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub set: IndexSet,
    pub weights: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(pairs: Vec<(usize, usize)>, weights: Vec<f64>, rhs: f64) -> Self {
        Self {
            set: IndexSet::new(pairs),
            weights,
            rhs,
        }
    }

    /// Unit weights over `pairs`.
    pub fn sum_to(pairs: Vec<(usize, usize)>, rhs: f64) -> Self {
        let weights = vec![1.0; pairs.len()];
        Self::new(pairs, weights, rhs)
    }

    /// `|weightsᵀ x(set) − rhs|`.
    pub fn residual(&self, m: &ndarray::Array2<f64>) -> f64 {
        let lhs: f64 = self
            .set
            .pairs
            .iter()
            .zip(&self.weights)
            .map(|(&(r, c), &w)| w * m[[r, c]])
            .sum();
        (lhs - self.rhs).abs()
    }
}

/// `Σ_f W(f, column)² = radius_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereConstraint {
    pub column: usize,
    pub radius_sq: f64,
}

impl SphereConstraint {
    pub fn residual(&self, w: &ndarray::Array2<f64>) -> f64 {
        let sq: f64 = w.column(self.column).iter().map(|x| x * x).sum();
        (sq - self.radius_sq).abs()
    }
}

/// All constraints placed on one factor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub linear: Vec<LinearConstraint>,
    pub spheres: Vec<SphereConstraint>,
}

/// First violated invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptySet { constraint: usize },
    WeightCountMismatch { constraint: usize, pairs: usize, weights: usize },
    NonpositiveWeight { constraint: usize, position: usize, value: f64 },
    NonpositiveRhs { constraint: usize, value: f64 },
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    Duplicate { row: usize, col: usize },
    Overlap { row: usize, col: usize },
    SphereColumnOutOfBounds { column: usize, cols: usize },
    NonpositiveRadius { column: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySet { constraint } => write!(f, "empty index set in constraint {constraint}"),
            Violation::WeightCountMismatch { constraint, pairs, weights } => write!(
                f,
                "constraint {constraint} has {pairs} entries but {weights} weights"
            ),
            Violation::NonpositiveWeight { constraint, position, value } => write!(
                f,
                "nonpositive weight {value} at position {position} of constraint {constraint}"
            ),
            Violation::NonpositiveRhs { constraint, value } => {
                write!(f, "nonpositive rhs {value} in constraint {constraint}")
            }
            Violation::OutOfBounds { row, col, rows, cols } => {
                write!(f, "entry ({row},{col}) outside a {rows}x{cols} matrix")
            }
            Violation::Duplicate { row, col } => write!(f, "duplicate entry ({row},{col}) within a constraint"),
            Violation::Overlap { row, col } => write!(f, "overlap at ({row},{col})"),
            Violation::SphereColumnOutOfBounds { column, cols } => {
                write!(f, "sphere column {column} outside a matrix with {cols} columns")
            }
            Violation::NonpositiveRadius { column, value } => {
                write!(f, "nonpositive radius {value} for sphere column {column}")
            }
        }
    }
}

impl std::error::Error for Violation {}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.linear.is_empty() && self.spheres.is_empty()
    }

    /// Row-major mask of constrained entries. Assumes a validated set.
    pub(crate) fn owner_mask(&self, rows: usize, cols: usize) -> Vec<bool> {
        let mut mask = vec![false; rows * cols];
        for lc in &self.linear {
            for &(r, c) in &lc.set.pairs {
                mask[r * cols + c] = true;
            }
        }
        for sc in &self.spheres {
            for r in 0..rows {
                mask[r * cols + sc.column] = true;
            }
        }
        mask
    }

    /// Largest residual over every constraint in the set.
    pub fn max_residual(&self, m: &ndarray::Array2<f64>) -> f64 {
        let lin = self.linear.iter().map(|lc| lc.residual(m));
        let sph = self.spheres.iter().map(|sc| sc.residual(m));
        lin.chain(sph).fold(0.0, f64::max)
    }
}

/// Checks every invariant of `cs` against a `rows × cols` factor.
pub fn validate(cs: &ConstraintSet, rows: usize, cols: usize) -> Result<(), Violation> {
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, lc) in cs.linear.iter().enumerate() {
        if lc.set.is_empty() {
            return Err(Violation::EmptySet { constraint: i });
        }
        if lc.weights.len() != lc.set.len() {
            return Err(Violation::WeightCountMismatch {
                constraint: i,
                pairs: lc.set.len(),
                weights: lc.weights.len(),
            });
        }
        if let Some((position, &value)) = lc
            .weights
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > 0.0) || !w.is_finite())
        {
            return Err(Violation::NonpositiveWeight {
                constraint: i,
                position,
                value,
            });
        }
        if !(lc.rhs > 0.0) || !lc.rhs.is_finite() {
            return Err(Violation::NonpositiveRhs {
                constraint: i,
                value: lc.rhs,
            });
        }
        for &(row, col) in &lc.set.pairs {
            if row >= rows || col >= cols {
                return Err(Violation::OutOfBounds { row, col, rows, cols });
            }
            match owner.insert((row, col), i) {
                None => {}
                Some(prev) if prev == i => return Err(Violation::Duplicate { row, col }),
                Some(_) => return Err(Violation::Overlap { row, col }),
            }
        }
    }
    let sphere_tag = usize::MAX;
    for sc in &cs.spheres {
        if sc.column >= cols {
            return Err(Violation::SphereColumnOutOfBounds {
                column: sc.column,
                cols,
            });
        }
        if !(sc.radius_sq > 0.0) || !sc.radius_sq.is_finite() {
            return Err(Violation::NonpositiveRadius {
                column: sc.column,
                value: sc.radius_sq,
            });
        }
        for row in 0..rows {
            if owner.insert((row, sc.column), sphere_tag).is_some() {
                return Err(Violation::Overlap { row, col: sc.column });
            }
        }
    }
    Ok(())
}

/// Entries covered by no constraint, in row-major order.
pub fn complement(cs: &ConstraintSet, rows: usize, cols: usize) -> IndexSet {
    let mask = cs.owner_mask(rows, cols);
    let pairs = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|&(r, c)| !mask[r * cols + c])
        .collect();
    IndexSet::new(pairs)
}

/// One unit-weight, rhs-1 constraint per column of a `k × n` matrix.
pub fn simplex_columns(k: usize, n: usize) -> ConstraintSet {
    ConstraintSet {
        linear: (0..n)
            .map(|col| LinearConstraint::sum_to((0..k).map(|row| (row, col)).collect(), 1.0))
            .collect(),
        spheres: Vec::new(),
    }
}

/// Column-stochastic constraints on an `f × k` matrix `W`.
pub fn simplex_columns_of_w(f: usize, k: usize) -> ConstraintSet {
    simplex_columns(f, k)
}

/// Every column of an `f × k` matrix on the sphere of squared radius `rho`.
pub fn sphere_columns(k: usize, rho: f64) -> ConstraintSet {
    ConstraintSet {
        linear: Vec::new(),
        spheres: (0..k)
            .map(|column| SphereConstraint {
                column,
                radius_sq: rho,
            })
            .collect(),
    }
}
