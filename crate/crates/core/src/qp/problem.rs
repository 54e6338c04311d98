use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense convex QP:
///
/// ```text
/// minimize    ½ xᵀ P x + qᵀ x
/// subject to  A_eq x = b_eq,   lower ≤ x ≤ upper
/// ```
///
/// Unbounded sides are `f64::NEG_INFINITY` / `f64::INFINITY`; finite
/// stand-ins for infinity are never used.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem with `n` free variables.
    pub fn unconstrained(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            p,
            q,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_eq(&self) -> usize {
        self.a_eq.nrows()
    }

    /// Checks shapes and symmetry. Crossed bounds are not a shape error; the
    /// solver reports them as infeasible.
    pub fn validate(&self) -> Result<()> {
        let n = self.q.len();
        if self.p.nrows() != n || self.p.ncols() != n {
            return Err(Error::Dimension(format!(
                "P is {}x{}, expected {n}x{n}",
                self.p.nrows(),
                self.p.ncols()
            )));
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::Dimension(format!(
                "A_eq is {}x{}, b_eq has {} entries, {n} variables",
                self.a_eq.nrows(),
                self.a_eq.ncols(),
                self.b_eq.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!(
                "bounds have lengths ({}, {}), expected {n}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        let scale = self.p.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.p[(i, j)] - self.p[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::Dimension(format!("P is not symmetric at ({i}, {j})")));
                }
            }
        }
        let finite = self.p.iter().chain(self.q.iter()).chain(self.a_eq.iter()).chain(self.b_eq.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("problem data contains non-finite entries".into()));
        }
        if self.lower.iter().any(|v| v.is_nan() || *v == f64::INFINITY)
            || self.upper.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            return Err(Error::Dimension("bounds contain NaN or point the wrong way to infinity".into()));
        }
        Ok(())
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lower.iter().chain(self.upper.iter()).any(|v| v.is_finite())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    /// Smallest eigenvalue of `P` restricted to the nullspace of `A_eq`
    /// (positive for strictly convex problems). Returns `+inf` when the
    /// nullspace is trivial.
    pub fn reduced_hessian_min_eig(&self) -> f64 {
        let n = self.num_vars();
        let basis = if self.num_eq() == 0 {
            DMatrix::identity(n, n)
        } else {
            nullspace(&self.a_eq)
        };
        if basis.ncols() == 0 {
            return f64::INFINITY;
        }
        let reduced = basis.transpose() * &self.p * &basis;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        reduced.symmetric_eigenvalues().min()
    }

    /// Plain-text dump: dimensions, then row-major matrices with
    /// round-trip-exact numbers.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::from("qp-problem v1\n");
        let _ = writeln!(out, "n {}", self.num_vars());
        let _ = writeln!(out, "m {}", self.num_eq());
        write_matrix(&mut out, "P", &self.p);
        write_vector(&mut out, "q", &self.q);
        write_matrix(&mut out, "A_eq", &self.a_eq);
        write_vector(&mut out, "b_eq", &self.b_eq);
        write_vector(&mut out, "lower", &self.lower);
        write_vector(&mut out, "upper", &self.upper);
        out
    }

    pub fn from_debug_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim);
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("unexpected end of QP dump, expected {what}")))
        };
        if next("header")? != "qp-problem v1" {
            return Err(Error::Parse("missing `qp-problem v1` header".into()));
        }
        let n = parse_dim(next("n")?, "n")?;
        let m = parse_dim(next("m")?, "m")?;
        let mut read_block = |tag: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
            let got = next(tag)?;
            if got != tag {
                return Err(Error::Parse(format!("expected section `{tag}`, found `{got}`")));
            }
            let mut vals = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let row = parse_row(next(tag)?)?;
                if row.len() != cols {
                    return Err(Error::Parse(format!("section `{tag}` row has {} values, expected {cols}", row.len())));
                }
                vals.extend(row);
            }
            Ok(vals)
        };
        let p = DMatrix::from_row_slice(n, n, &read_block("P", n, n)?);
        let q = DVector::from_vec(read_block("q", 1, n)?);
        let a_eq = DMatrix::from_row_slice(m, n, &read_block("A_eq", m, n)?);
        let b_eq = DVector::from_vec(read_block("b_eq", 1, m)?);
        let lower = DVector::from_vec(read_block("lower", 1, n)?);
        let upper = DVector::from_vec(read_block("upper", 1, n)?);
        Ok(Self {
            p,
            q,
            a_eq,
            b_eq,
            lower,
            upper,
        })
    }
}

fn write_matrix(out: &mut String, tag: &str, m: &DMatrix<f64>) {
    out.push_str(tag);
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_vector(out: &mut String, tag: &str, v: &DVector<f64>) {
    out.push_str(tag);
    out.push('\n');
    let row: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn parse_dim(line: &str, tag: &str) -> Result<usize> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some(t), Some(v)) if t == tag => v.parse().map_err(|e| Error::Parse(format!("{tag}: {e}"))),
        _ => Err(Error::Parse(format!("expected `{tag} <count>`, found `{line}`"))),
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
        .collect()
}

/// Orthonormal basis of the nullspace of `a`.
pub(crate) fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    // Pad to a square matrix so the SVD returns a full set of right vectors.
    let mut padded = DMatrix::zeros(n.max(a.nrows()), n);
    padded.rows_mut(0, a.nrows()).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1e-300);
    let null_idx: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(n, null_idx.len());
    for (c, &i) in null_idx.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    basis
}
