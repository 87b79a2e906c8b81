//! A small conic-program representation and its interior-point solver.
//!
//! Programs are stated in maximization form over real variables. Every
//! constraint is a [`ConeBlock`]: an ordered list of affine rows that must lie
//! in one cone. Complex quantities are split into `(re, im)` pairs that occupy
//! consecutive variable slots, real part first.
//!
//! Rotated cones are converted to standard second-order cones when the program
//! is handed to the solver, so the solver core only knows the nonnegative
//! orthant and the Lorentz cone.

mod expr;
pub mod lower;
mod solver;

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use expr::{cdot, CExpr, ConvexQuadratic, LinExpr};
pub use solver::SolverSettings;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// Every row equals zero.
    Zero,
    /// Every row is nonnegative.
    NonNeg,
    /// `rows[0] ≥ ‖rows[1..]‖`.
    SecondOrder,
    /// `2·rows[0]·rows[1] ≥ ‖rows[2..]‖²`, `rows[0], rows[1] ≥ 0`.
    RotatedSecondOrder,
}

impl ConeKind {
    fn keyword(self) -> &'static str {
        match self {
            ConeKind::Zero => "zero",
            ConeKind::NonNeg => "nonneg",
            ConeKind::SecondOrder => "soc",
            ConeKind::RotatedSecondOrder => "rsoc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<LinExpr>,
    /// Which modeling constraint produced this block.
    pub label: String,
}

impl ConeBlock {
    /// Signed distance-like slack of the block at `x`: `≥ 0` iff the rows lie in the cone
    /// (for `Zero`, the negated largest absolute deviation).
    pub fn slack(&self, x: &[f64]) -> f64 {
        let vals: Vec<f64> = self.rows.iter().map(|r| r.eval(x)).collect();
        match self.kind {
            ConeKind::Zero => -vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            ConeKind::NonNeg => vals.iter().copied().fold(f64::INFINITY, f64::min),
            ConeKind::SecondOrder => vals[0] - norm(&vals[1..]),
            ConeKind::RotatedSecondOrder => {
                let (u, v) = (vals[0], vals[1]);
                let (t, r) = rotated_to_soc(u, v);
                let mut w = vec![r];
                w.extend_from_slice(&vals[2..]);
                (t - norm(&w)).min(u).min(v)
            }
        }
    }
}

/// `2uv ≥ ‖w‖²` ⇔ `(u+v)/√2 ≥ ‖((u−v)/√2, w)‖`.
fn rotated_to_soc(u: f64, v: f64) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((u + v) * s, (u - v) * s)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// A conic program: maximize `objective(x)` subject to every block lying in its cone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub var_names: Vec<String>,
    pub objective: LinExpr,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.var_names.len() - 1
    }

    /// Allocates a complex variable as two consecutive real slots and returns `(re, im)`.
    pub fn add_complex_var(&mut self, name: &str) -> (usize, usize) {
        let re = self.add_var(format!("{name}.re"));
        let im = self.add_var(format!("{name}.im"));
        (re, im)
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    fn push(&mut self, kind: ConeKind, rows: Vec<LinExpr>, label: impl Into<String>) {
        self.blocks.push(ConeBlock { kind, rows, label: label.into() });
    }

    pub fn add_eq(&mut self, label: impl Into<String>, expr: LinExpr) {
        self.push(ConeKind::Zero, vec![expr], label);
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, label: impl Into<String>, expr: LinExpr) {
        self.push(ConeKind::NonNeg, vec![expr], label);
    }

    /// `lhs ≥ rhs`.
    pub fn add_ge(&mut self, label: impl Into<String>, lhs: &LinExpr, rhs: &LinExpr) {
        self.add_nonneg(label, lhs - rhs);
    }

    /// `t ≥ ‖u‖`.
    pub fn add_soc(&mut self, label: impl Into<String>, t: LinExpr, u: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(u.len() + 1);
        rows.push(t);
        rows.extend(u);
        self.push(ConeKind::SecondOrder, rows, label);
    }

    /// `2·u·v ≥ ‖w‖²` with `u, v ≥ 0`.
    pub fn add_rotated(&mut self, label: impl Into<String>, u: LinExpr, v: LinExpr, w: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(w.len() + 2);
        rows.push(u);
        rows.push(v);
        rows.extend(w);
        self.push(ConeKind::RotatedSecondOrder, rows, label);
    }

    /// `u·v ≥ 1`, `u, v ≥ 0` (hyperbolic constraint used for reciprocals).
    pub fn add_hyperbolic(&mut self, label: impl Into<String>, u: LinExpr, v: LinExpr) {
        self.add_rotated(label, u, v, vec![LinExpr::constant(std::f64::consts::SQRT_2)]);
    }

    pub fn add_bounds(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) {
        let name = self.var_names[var].clone();
        if let Some(lo) = lower {
            self.add_nonneg(format!("bound {name} >= {lo}"), &LinExpr::var(var) + (-lo));
        }
        if let Some(hi) = upper {
            self.add_nonneg(format!("bound {name} <= {hi}"), LinExpr::constant(hi).add_scaled(&LinExpr::var(var), -1.0));
        }
    }

    /// Epigraph variable `q ≥ quad(x)`; returns `q` as an expression. When the
    /// quadratic has no square terms the linear part is returned directly.
    pub fn add_epigraph(&mut self, label: &str, quad: &ConvexQuadratic) -> LinExpr {
        if quad.squares.is_empty() {
            return quad.lin.clone();
        }
        let q = self.add_var(format!("epi[{label}]"));
        // (q − lin)·1 ≥ Σ sq²  ⇔  2·(q − lin)·(1/2) ≥ ‖sq‖²
        let u = &LinExpr::var(q) - &quad.lin;
        self.add_rotated(format!("{label} epigraph"), u, LinExpr::constant(0.5), quad.squares.clone());
        LinExpr::var(q)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            if e.terms.iter().any(|&(i, c)| i >= n || !c.is_finite()) || !e.constant.is_finite() {
                return Err(Error::InvalidProgram(format!("{what}: bad index or non-finite coefficient")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for b in &self.blocks {
            let min_rows = match b.kind {
                ConeKind::Zero | ConeKind::NonNeg | ConeKind::SecondOrder => 1,
                ConeKind::RotatedSecondOrder => 2,
            };
            if b.rows.len() < min_rows {
                return Err(Error::InvalidProgram(format!("block '{}' has too few rows", b.label)));
            }
            for r in &b.rows {
                check(r, &b.label)?;
            }
        }
        Ok(())
    }

    /// Smallest block slack at `x` together with the offending label.
    pub fn worst_slack(&self, x: &[f64]) -> (f64, Option<&str>) {
        self.blocks.iter().fold((f64::INFINITY, None), |(m, l), b| {
            let s = b.slack(x);
            if s < m {
                (s, Some(b.label.as_str()))
            } else {
                (m, l)
            }
        })
    }

    /// Plain-text dump:
    ///
    /// ```text
    /// ded2d-conic v1
    /// vars <n>
    /// var <idx> <name>
    /// maximize <expr>
    /// block <zero|nonneg|soc|rsoc> <rows> <label>
    ///   <expr>
    /// ```
    ///
    /// where `<expr>` is `<const> [<coef>*x<idx>]...` with coefficients in `{:e}` notation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt_expr = |e: &LinExpr| {
            let mut s = format!("{:e}", e.constant);
            for &(i, c) in &e.terms {
                let _ = write!(s, " {c:e}*x{i}");
            }
            s
        };
        let _ = writeln!(out, "ded2d-conic v1");
        let _ = writeln!(out, "vars {}", self.num_vars());
        for (i, name) in self.var_names.iter().enumerate() {
            let _ = writeln!(out, "var {i} {name}");
        }
        let _ = writeln!(out, "maximize {}", fmt_expr(&self.objective));
        for b in &self.blocks {
            let _ = writeln!(out, "block {} {} {}", b.kind.keyword(), b.rows.len(), b.label);
            for r in &b.rows {
                let _ = writeln!(out, "  {}", fmt_expr(r));
            }
        }
        out
    }

    pub fn num_cone_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    /// Objective in the maximization sense, including the constant term.
    pub objective: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub solve_time: Duration,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves `prog` to relative tolerance `tol` with default settings otherwise.
pub fn solve(prog: &ConicProgram, tol: f64) -> Result<ConicSolution> {
    solve_with(prog, &SolverSettings { tol, ..SolverSettings::default() })
}

pub fn solve_with(prog: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    prog.validate()?;
    let start = std::time::Instant::now();
    let form = solver::StandardForm::from_program(prog);
    let raw = solver::solve(&form, settings);
    let objective = prog.objective.eval(&raw.x);
    Ok(ConicSolution {
        objective,
        x: raw.x,
        status: raw.status,
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        gap: raw.gap,
        iterations: raw.iterations,
        solve_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotated_slack_sign() {
        let mut p = ConicProgram::new();
        let u = p.add_var("u");
        let v = p.add_var("v");
        p.add_rotated("r", LinExpr::var(u), LinExpr::var(v), vec![LinExpr::constant(2.0)]);
        // 2·u·v ≥ 4
        assert!(p.blocks[0].slack(&[1.0, 2.0]) >= -1e-12);
        assert!(p.blocks[0].slack(&[1.0, 1.9]) < 0.0);
        assert!(p.blocks[0].slack(&[-1.0, -3.0]) < 0.0);
    }

    #[test]
    fn text_dump_lists_every_block() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        p.set_objective(LinExpr::term(x, -1.0));
        p.add_soc("(t) norm", LinExpr::var(x), vec![LinExpr::constant(1.0), LinExpr::constant(1.0)]);
        let txt = p.to_text();
        assert!(txt.starts_with("ded2d-conic v1\nvars 1\nvar 0 x\n"));
        assert!(txt.contains("block soc 3 (t) norm"));
    }

    #[test]
    fn validate_rejects_out_of_range_index() {
        let mut p = ConicProgram::new();
        p.add_var("x");
        p.add_nonneg("bad", LinExpr::var(3));
        assert!(p.validate().is_err());
    }
}
