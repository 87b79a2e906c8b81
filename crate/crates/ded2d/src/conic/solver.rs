//! Primal-dual interior-point method for linear/second-order cone programs.
//!
//! Solves the homogeneous self-dual embedding of
//!
//! ```text
//! minimize  cᵀx   s.t.  A x = b,  G x + s = h,  s ∈ K
//! ```
//!
//! with Nesterov–Todd scaling and a Mehrotra predictor–corrector step. The
//! Newton system is reduced to the `(x, y)` block, `(GᵀW⁻²G) dx + Aᵀdy = …`,
//! which is assembled cone by cone from the sparse rows of `G`.

use nalgebra::{DMatrix, DVector};

use super::{ConeKind, ConicProgram, SolveStatus};

type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub tol: f64,
    pub infeasibility_tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    pub regularization: f64,
    pub refine_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            infeasibility_tol: 1e-8,
            max_iter: 120,
            step_fraction: 0.99,
            regularization: 1e-10,
            refine_steps: 6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Cone {
    NonNeg { start: usize, dim: usize },
    Soc { start: usize, dim: usize },
}

impl Cone {
    fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Cone::NonNeg { start, dim } | Cone::Soc { start, dim } => start..start + dim,
        }
    }

    fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg { dim, .. } => dim,
            Cone::Soc { .. } => 1,
        }
    }
}

/// `minimize cᵀx s.t. Ax = b, Gx + s = h, s ∈ K`.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    n: usize,
    c: Vec<f64>,
    a: Vec<SparseRow>,
    b: Vec<f64>,
    g: Vec<SparseRow>,
    h: Vec<f64>,
    cones: Vec<Cone>,
}

impl StandardForm {
    pub(crate) fn from_program(prog: &ConicProgram) -> Self {
        let n = prog.num_vars();
        let mut c = vec![0.0; n];
        for &(i, v) in &prog.objective.terms {
            c[i] -= v;
        }
        let (mut a, mut b, mut g, mut h, mut cones) = (vec![], vec![], vec![], vec![], vec![]);
        // s = e(x) = aᵀx + c0  ⇒  G row = −a, h = c0
        let push_row = |g: &mut Vec<SparseRow>, h: &mut Vec<f64>, terms: &[(usize, f64)], c0: f64| {
            g.push(terms.iter().map(|&(i, v)| (i, -v)).collect());
            h.push(c0);
        };
        for block in &prog.blocks {
            match block.kind {
                ConeKind::Zero => {
                    for r in &block.rows {
                        a.push(r.terms.clone());
                        b.push(-r.constant);
                    }
                }
                ConeKind::NonNeg => {
                    let start = g.len();
                    for r in &block.rows {
                        push_row(&mut g, &mut h, &r.terms, r.constant);
                    }
                    cones.push(Cone::NonNeg { start, dim: block.rows.len() });
                }
                ConeKind::SecondOrder => {
                    let start = g.len();
                    for r in &block.rows {
                        push_row(&mut g, &mut h, &r.terms, r.constant);
                    }
                    cones.push(Cone::Soc { start, dim: block.rows.len() });
                }
                ConeKind::RotatedSecondOrder => {
                    let start = g.len();
                    let (u, v) = (&block.rows[0], &block.rows[1]);
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    let t = u.add_scaled(v, 1.0).scale(s);
                    let r = u.add_scaled(v, -1.0).scale(s);
                    push_row(&mut g, &mut h, &t.terms, t.constant);
                    push_row(&mut g, &mut h, &r.terms, r.constant);
                    for w in &block.rows[2..] {
                        push_row(&mut g, &mut h, &w.terms, w.constant);
                    }
                    cones.push(Cone::Soc { start, dim: block.rows.len() });
                }
            }
        }
        Self { n, c, a, b, g, h, cones }
    }

    fn m(&self) -> usize {
        self.h.len()
    }

    fn p(&self) -> usize {
        self.b.len()
    }

    fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }
}

pub(crate) struct RawSolution {
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(rows: &[SparseRow], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
}

fn mat_t_vec(rows: &[SparseRow], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (r, &yi) in rows.iter().zip(y) {
        if yi != 0.0 {
            for &(j, v) in r {
                out[j] += v * yi;
            }
        }
    }
    out
}

/// Nesterov–Todd scaling of one cone.
#[derive(Debug, Clone)]
enum Scaling {
    NonNeg(Vec<f64>),
    Soc { beta: f64, w: Vec<f64> },
}

impl Scaling {
    fn identity(cone: &Cone) -> Self {
        match *cone {
            Cone::NonNeg { dim, .. } => Scaling::NonNeg(vec![1.0; dim]),
            Cone::Soc { dim, .. } => {
                let mut w = vec![0.0; dim];
                w[0] = 1.0;
                Scaling::Soc { beta: 1.0, w }
            }
        }
    }

    fn compute(cone: &Cone, s: &[f64], z: &[f64]) -> Option<Self> {
        match cone {
            Cone::NonNeg { .. } => {
                let d: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                d.iter().all(|v| v.is_finite() && *v > 0.0).then_some(Scaling::NonNeg(d))
            }
            Cone::Soc { .. } => {
                let sres = soc_residual(s);
                let zres = soc_residual(z);
                if !(sres > 0.0 && zres > 0.0) {
                    return None;
                }
                let (sn, zn) = (sres.sqrt(), zres.sqrt());
                let sbar: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zbar: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                let mut w: Vec<f64> = sbar.iter().zip(&zbar).map(|(a, b)| -b + a).collect();
                w[0] = sbar[0] + zbar[0];
                for v in &mut w {
                    *v /= 2.0 * gamma;
                }
                // renormalize so that wᵀJw = 1 exactly
                let tail = norm(&w[1..]);
                w[0] = (1.0 + tail * tail).sqrt();
                let beta = (sres / zres).powf(0.25);
                (beta.is_finite() && beta > 0.0).then_some(Scaling::Soc { beta, w })
            }
        }
    }

    /// `W x` (`inverse = false`) or `W⁻¹ x` (`inverse = true`), in place into `out`.
    fn apply(&self, x: &[f64], out: &mut [f64], inverse: bool) {
        match self {
            Scaling::NonNeg(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o = if inverse { xi / di } else { xi * di };
                }
            }
            Scaling::Soc { beta, w } => {
                let sign = if inverse { -1.0 } else { 1.0 };
                let k = if inverse { 1.0 / beta } else { *beta };
                let w0 = w[0];
                let tail = &w[1..];
                let wx = dot(tail, &x[1..]);
                out[0] = k * (w0 * x[0] + sign * wx);
                let coef = sign * x[0] + wx / (1.0 + w0);
                for i in 1..x.len() {
                    out[i] = k * (x[i] + coef * tail[i - 1]);
                }
            }
        }
    }
}

fn soc_residual(x: &[f64]) -> f64 {
    let t = norm(&x[1..]);
    (x[0] - t) * (x[0] + t)
}

/// Jordan product `u ∘ v` on one cone.
fn jordan(cone: &Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg { .. } => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Cone::Soc { .. } => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solves `λ ∘ x = d` for `x` on one cone.
fn jordan_div(cone: &Cone, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg { .. } => {
            for i in 0..d.len() {
                out[i] = d[i] / lambda[i];
            }
        }
        Cone::Soc { .. } => {
            let l0 = lambda[0];
            let det = soc_residual(lambda);
            let x0 = (l0 * d[0] - dot(&lambda[1..], &d[1..])) / det;
            out[0] = x0;
            for i in 1..d.len() {
                out[i] = (d[i] - x0 * lambda[i]) / l0;
            }
        }
    }
}

/// Largest `α ≥ 0` with `x + α·d` in the cone (may be `+∞`).
fn max_step(cone: &Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::NonNeg { .. } => x
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&xi, &di)| -xi / di)
            .fold(f64::INFINITY, f64::min),
        Cone::Soc { .. } => {
            let c = soc_residual(x).max(0.0);
            let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
            let b = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
            let mut alpha = f64::INFINITY;
            if d[0] < 0.0 {
                alpha = -x[0] / d[0];
            }
            let scale = a.abs().max(b.abs()).max(c);
            if scale == 0.0 {
                return alpha;
            }
            if a.abs() <= 1e-14 * scale {
                if b < 0.0 {
                    alpha = alpha.min(-c / b);
                }
                return alpha.max(0.0);
            }
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return alpha;
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
            roots.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
            if let Some(r) = roots.iter().find(|&&r| r > 0.0) {
                alpha = alpha.min(*r);
            } else if roots.iter().all(|&r| r <= 0.0) && c <= 0.0 {
                alpha = 0.0;
            }
            alpha.max(0.0)
        }
    }
}

/// Factored reduced KKT system for the current scaling.
struct Kkt<'a> {
    form: &'a StandardForm,
    scalings: &'a [Scaling],
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    refine: usize,
}

impl<'a> Kkt<'a> {
    fn new(form: &'a StandardForm, scalings: &'a [Scaling], reg: f64, refine: usize) -> Option<Self> {
        let (n, p) = (form.n, form.p());
        let mut k = DMatrix::<f64>::zeros(n + p, n + p);
        let mut cols: Vec<usize> = Vec::new();
        let mut col_pos = vec![usize::MAX; n];
        for (cone, sc) in form.cones.iter().zip(scalings) {
            let range = cone.range();
            let dim = range.len();
            cols.clear();
            for r in range.clone() {
                for &(j, _) in &form.g[r] {
                    if col_pos[j] == usize::MAX {
                        col_pos[j] = cols.len();
                        cols.push(j);
                    }
                }
            }
            if cols.is_empty() {
                continue;
            }
            // dense block of G restricted to this cone, column-major: cols.len() × dim
            let mut blk = vec![0.0; cols.len() * dim];
            for (ri, r) in range.clone().enumerate() {
                for &(j, v) in &form.g[r] {
                    blk[col_pos[j] * dim + ri] += v;
                }
            }
            let mut u = vec![0.0; cols.len() * dim];
            for ci in 0..cols.len() {
                sc.apply(&blk[ci * dim..(ci + 1) * dim], &mut u[ci * dim..(ci + 1) * dim], true);
            }
            for a in 0..cols.len() {
                let ua = &u[a * dim..(a + 1) * dim];
                for b in a..cols.len() {
                    let v = dot(ua, &u[b * dim..(b + 1) * dim]);
                    k[(cols[a], cols[b])] += v;
                    if a != b {
                        k[(cols[b], cols[a])] += v;
                    }
                }
            }
            for &j in &cols {
                col_pos[j] = usize::MAX;
            }
        }
        let delta = reg;
        for i in 0..n {
            k[(i, i)] += delta;
        }
        for (r, row) in form.a.iter().enumerate() {
            for &(j, v) in row {
                k[(n + r, j)] += v;
                k[(j, n + r)] += v;
            }
            k[(n + r, n + r)] -= delta;
        }
        let lu = k.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self { form, scalings, lu, refine })
    }

    fn apply_scaling(&self, x: &[f64], inverse: bool, squared: bool) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let mut tmp = vec![0.0; x.len()];
        for (cone, sc) in self.form.cones.iter().zip(self.scalings) {
            let r = cone.range();
            sc.apply(&x[r.clone()], &mut tmp[r.clone()], inverse);
            if squared {
                sc.apply(&tmp[r.clone()], &mut out[r.clone()], inverse);
            } else {
                out[r.clone()].copy_from_slice(&tmp[r]);
            }
        }
        out
    }

    fn solve_once(&self, rx: &[f64], ry: &[f64], rz: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (n, p) = (self.form.n, self.form.p());
        let w2rz = self.apply_scaling(rz, true, true);
        let gt = mat_t_vec(&self.form.g, &w2rz, n);
        let mut rhs = DVector::<f64>::zeros(n + p);
        for i in 0..n {
            rhs[i] = rx[i] + gt[i];
        }
        for i in 0..p {
            rhs[n + i] = ry[i];
        }
        let sol = self.lu.solve(&rhs)?;
        let dx: Vec<f64> = sol.iter().take(n).copied().collect();
        let dy: Vec<f64> = sol.iter().skip(n).copied().collect();
        let gdx = mat_vec(&self.form.g, &dx);
        let diff: Vec<f64> = gdx.iter().zip(rz).map(|(a, b)| a - b).collect();
        let dz = self.apply_scaling(&diff, true, true);
        Some((dx, dy, dz))
    }

    /// Solves `Aᵀdy + Gᵀdz = rx`, `A dx = ry`, `G dx − W² dz = rz` with iterative refinement.
    fn solve(&self, rx: &[f64], ry: &[f64], rz: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (mut dx, mut dy, mut dz) = self.solve_once(rx, ry, rz)?;
        let n = self.form.n;
        for _ in 0..self.refine {
            let aty = mat_t_vec(&self.form.a, &dy, n);
            let gtz = mat_t_vec(&self.form.g, &dz, n);
            let ex: Vec<f64> = (0..n).map(|i| rx[i] - aty[i] - gtz[i]).collect();
            let adx = mat_vec(&self.form.a, &dx);
            let ey: Vec<f64> = ry.iter().zip(&adx).map(|(a, b)| a - b).collect();
            let gdx = mat_vec(&self.form.g, &dx);
            let w2dz = self.apply_scaling(&dz, false, true);
            let ez: Vec<f64> = (0..rz.len()).map(|i| rz[i] - gdx[i] + w2dz[i]).collect();
            let err = norm(&ex).max(norm(&ey)).max(norm(&ez));
            let scale = 1.0 + norm(rx).max(norm(ry)).max(norm(rz));
            if err <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.solve_once(&ex, &ey, &ez)?;
            dx.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
            dz.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        }
        Some((dx, dy, dz))
    }
}

fn strictly_interior(cones: &[Cone], x: &[f64], d: &[f64], alpha: f64) -> bool {
    let mut buf = Vec::new();
    cones.iter().all(|cone| {
        let r = cone.range();
        buf.clear();
        buf.extend(x[r.clone()].iter().zip(&d[r]).map(|(a, b)| a + alpha * b));
        match cone {
            Cone::NonNeg { .. } => buf.iter().all(|&v| v > 0.0),
            Cone::Soc { .. } => buf[0] > 0.0 && soc_residual(&buf) > 1e-13 * buf[0] * buf[0],
        }
    })
}

/// Moves `v` strictly inside the cone product if it is not already.
fn shift_into_cones(cones: &[Cone], v: &mut [f64]) {
    let mut alpha = f64::NEG_INFINITY;
    for cone in cones {
        let r = cone.range();
        let a = match cone {
            Cone::NonNeg { .. } => v[r].iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max),
            Cone::Soc { .. } => norm(&v[r.start + 1..r.end]) - v[r.start],
        };
        alpha = alpha.max(a);
    }
    if alpha >= -1e-8 {
        let shift = 1.0 + alpha.max(0.0);
        for cone in cones {
            match *cone {
                Cone::NonNeg { start, dim } => v[start..start + dim].iter_mut().for_each(|x| *x += shift),
                Cone::Soc { start, .. } => v[start] += shift,
            }
        }
    }
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    relgap: f64,
}

pub(crate) fn solve(form: &StandardForm, settings: &SolverSettings) -> RawSolution {
    let (n, m, p) = (form.n, form.m(), form.p());
    let fail = |status| RawSolution {
        x: vec![0.0; n],
        status,
        pres: f64::INFINITY,
        dres: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
    };

    let ident: Vec<Scaling> = form.cones.iter().map(Scaling::identity).collect();
    let Some(kkt) = Kkt::new(form, &ident, settings.regularization.max(1e-9), settings.refine_steps) else {
        return fail(SolveStatus::MaxIter);
    };
    let neg_c: Vec<f64> = form.c.iter().map(|v| -v).collect();
    let Some((x, _, zp)) = kkt.solve(&vec![0.0; n], &form.b, &form.h) else {
        return fail(SolveStatus::MaxIter);
    };
    let Some((_, y, z)) = kkt.solve(&neg_c, &vec![0.0; p], &vec![0.0; m]) else {
        return fail(SolveStatus::MaxIter);
    };
    let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
    let mut z = z;
    shift_into_cones(&form.cones, &mut s);
    shift_into_cones(&form.cones, &mut z);
    let mut it = Iterate { x, y, z, s, tau: 1.0, kappa: 1.0 };

    let nu = form.degree() as f64;
    let bh_norm = norm(&form.b).max(norm(&form.h)).max(1.0);
    let c_norm = norm(&form.c).max(1.0);

    let metrics = |it: &Iterate, rx: &[f64], ry: &[f64], rz: &[f64]| -> Metrics {
        let pres = norm(ry).max(norm(rz)) / it.tau / bh_norm;
        let dres = norm(rx) / it.tau / c_norm;
        let gap = dot(&it.s, &it.z) / (it.tau * it.tau);
        let pcost = dot(&form.c, &it.x) / it.tau;
        let dcost = -(dot(&form.b, &it.y) + dot(&form.h, &it.z)) / it.tau;
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };
        Metrics { pres, dres, gap, relgap }
    };

    let mut best: Option<(f64, Vec<f64>, f64, f64, f64)> = None;
    let mut iterations = 0;

    for iter in 0..=settings.max_iter {
        iterations = iter;
        // residuals of the embedding
        let aty = mat_t_vec(&form.a, &it.y, n);
        let gtz = mat_t_vec(&form.g, &it.z, n);
        let rx: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i] + form.c[i] * it.tau).collect();
        let ax = mat_vec(&form.a, &it.x);
        let ry: Vec<f64> = (0..p).map(|i| ax[i] - form.b[i] * it.tau).collect();
        let gx = mat_vec(&form.g, &it.x);
        let rz: Vec<f64> = (0..m).map(|i| gx[i] + it.s[i] - form.h[i] * it.tau).collect();
        let rt = it.kappa + dot(&form.c, &it.x) + dot(&form.b, &it.y) + dot(&form.h, &it.z);

        let met = metrics(&it, &rx, &ry, &rz);
        let merit = met.pres.max(met.dres).max(met.gap.min(met.relgap));
        if merit.is_finite() && best.as_ref().map_or(true, |b| merit < b.0) {
            let xs: Vec<f64> = it.x.iter().map(|v| v / it.tau).collect();
            best = Some((merit, xs, met.pres, met.dres, met.gap));
        }
        if met.pres <= settings.tol && met.dres <= settings.tol && (met.gap <= settings.tol || met.relgap <= settings.tol) {
            return RawSolution {
                x: it.x.iter().map(|v| v / it.tau).collect(),
                status: SolveStatus::Optimal,
                pres: met.pres,
                dres: met.dres,
                gap: met.gap,
                iterations: iter,
            };
        }
        // infeasibility certificates
        let by_hz = dot(&form.b, &it.y) + dot(&form.h, &it.z);
        if by_hz < 0.0 {
            let aty_gtz: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i]).collect();
            if norm(&aty_gtz) / -by_hz <= settings.infeasibility_tol && it.tau < it.kappa {
                return RawSolution { x: vec![f64::NAN; n], status: SolveStatus::Infeasible, pres: met.pres, dres: met.dres, gap: met.gap, iterations: iter };
            }
        }
        let cx = dot(&form.c, &it.x);
        if cx < 0.0 {
            let gxs: Vec<f64> = (0..m).map(|i| gx[i] + it.s[i]).collect();
            if norm(&ax).max(norm(&gxs)) / -cx <= settings.infeasibility_tol && it.tau < it.kappa {
                return RawSolution { x: vec![f64::NAN; n], status: SolveStatus::Unbounded, pres: met.pres, dres: met.dres, gap: met.gap, iterations: iter };
            }
        }
        if iter == settings.max_iter {
            break;
        }

        // scaling
        let mut scalings = Vec::with_capacity(form.cones.len());
        let mut lambda = vec![0.0; m];
        let mut ok = true;
        for cone in &form.cones {
            let r = cone.range();
            match Scaling::compute(cone, &it.s[r.clone()], &it.z[r.clone()]) {
                Some(sc) => {
                    sc.apply(&it.z[r.clone()], &mut lambda[r], false);
                    scalings.push(sc);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let Some(kkt) = Kkt::new(form, &scalings, settings.regularization, settings.refine_steps) else {
            break;
        };
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (nu + 1.0);

        let Some((x1, y1, z1)) = kkt.solve(&neg_c, &form.b, &form.h) else { break };
        let wz1 = kkt.apply_scaling(&z1, false, false);
        let denom = -(dot(&wz1, &wz1) + it.kappa / it.tau);

        // Computes the full direction for a given complementarity target.
        let direction = |eta: f64, ds_target: &[f64], dk_target: f64| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
            let mut xi = vec![0.0; m];
            for cone in &form.cones {
                let r = cone.range();
                jordan_div(cone, &lambda[r.clone()], &ds_target[r.clone()], &mut xi[r]);
            }
            let wxi = kkt.apply_scaling(&xi, false, false);
            let rhs_x: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let rhs_y: Vec<f64> = ry.iter().map(|v| -eta * v).collect();
            let rhs_z: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wxi[i]).collect();
            let (x2, y2, z2) = kkt.solve(&rhs_x, &rhs_y, &rhs_z)?;
            let num = -eta * rt - dk_target / it.tau - dot(&form.c, &x2) - dot(&form.b, &y2) - dot(&form.h, &z2);
            let dtau = num / denom;
            let dx: Vec<f64> = (0..n).map(|i| x2[i] + dtau * x1[i]).collect();
            let dy: Vec<f64> = (0..p).map(|i| y2[i] + dtau * y1[i]).collect();
            let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
            // ds = W(ξ − W dz)
            let wdz = kkt.apply_scaling(&dz, false, false);
            let inner: Vec<f64> = (0..m).map(|i| xi[i] - wdz[i]).collect();
            let ds = kkt.apply_scaling(&inner, false, false);
            let dkappa = (dk_target - it.kappa * dtau) / it.tau;
            let ok = dtau.is_finite() && dx.iter().chain(&dz).chain(&ds).all(|v| v.is_finite());
            ok.then_some((dx, dy, dz, ds, dtau, dkappa))
        };

        let step_len = |ds: &[f64], dz: &[f64], dtau: f64, dkappa: f64| -> f64 {
            let mut a = f64::INFINITY;
            for cone in &form.cones {
                let r = cone.range();
                a = a.min(max_step(cone, &it.s[r.clone()], &ds[r.clone()]));
                a = a.min(max_step(cone, &it.z[r.clone()], &dz[r]));
            }
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        // predictor
        let mut target = vec![0.0; m];
        for cone in &form.cones {
            let r = cone.range();
            jordan(cone, &lambda[r.clone()], &lambda[r.clone()], &mut target[r]);
        }
        target.iter_mut().for_each(|v| *v = -*v);
        let Some((_, _, dz_a, ds_a, dtau_a, dkappa_a)) = direction(1.0, &target, -it.tau * it.kappa) else { break };
        let alpha_aff = step_len(&ds_a, &dz_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let winv_ds = kkt.apply_scaling(&ds_a, true, false);
        let w_dz = kkt.apply_scaling(&dz_a, false, false);
        let mut corr = vec![0.0; m];
        let mut target = vec![0.0; m];
        for cone in &form.cones {
            let r = cone.range();
            jordan(cone, &winv_ds[r.clone()], &w_dz[r.clone()], &mut corr[r.clone()]);
            jordan(cone, &lambda[r.clone()], &lambda[r.clone()], &mut target[r.clone()]);
            let e0 = r.start;
            match cone {
                Cone::NonNeg { .. } => {
                    for i in r {
                        target[i] = -target[i] + sigma * mu - corr[i];
                    }
                }
                Cone::Soc { .. } => {
                    for i in r {
                        target[i] = -target[i] - corr[i] + if i == e0 { sigma * mu } else { 0.0 };
                    }
                }
            }
        }
        let dk_target = -it.tau * it.kappa + sigma * mu - dtau_a * dkappa_a;
        let Some((dx, dy, dz, ds, dtau, dkappa)) = direction(1.0 - sigma, &target, dk_target) else { break };
        let mut alpha = (settings.step_fraction * step_len(&ds, &dz, dtau, dkappa)).min(1.0);
        // guard against rounding in the boundary step: back off until strictly interior
        let mut tries = 0;
        while alpha > 1e-12 && !(strictly_interior(&form.cones, &it.s, &ds, alpha) && strictly_interior(&form.cones, &it.z, &dz, alpha)) {
            alpha *= 0.7;
            tries += 1;
            if tries > 60 {
                alpha = 0.0;
            }
        }
        if !(alpha > 1e-12) {
            break;
        }
        it.x.iter_mut().zip(&dx).for_each(|(a, b)| *a += alpha * b);
        it.y.iter_mut().zip(&dy).for_each(|(a, b)| *a += alpha * b);
        it.z.iter_mut().zip(&dz).for_each(|(a, b)| *a += alpha * b);
        it.s.iter_mut().zip(&ds).for_each(|(a, b)| *a += alpha * b);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkappa;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            break;
        }
    }

    match best {
        Some((_, x, pres, dres, gap)) => RawSolution { x, status: SolveStatus::MaxIter, pres, dres, gap, iterations },
        None => fail(SolveStatus::MaxIter),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_z_and_s_to_the_same_point() {
        let cone = Cone::Soc { start: 0, dim: 3 };
        let s = [2.0, 0.5, -0.3];
        let z = [1.5, -0.2, 0.9];
        let sc = Scaling::compute(&cone, &s, &z).unwrap();
        let mut wz = [0.0; 3];
        let mut winv_s = [0.0; 3];
        sc.apply(&z, &mut wz, false);
        sc.apply(&s, &mut winv_s, true);
        for i in 0..3 {
            assert!((wz[i] - winv_s[i]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
        }
        // W⁻¹ W = I
        let mut back = [0.0; 3];
        sc.apply(&wz, &mut back, true);
        for i in 0..3 {
            assert!((back[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let cone = Cone::Soc { start: 0, dim: 3 };
        let l = [2.0, 0.3, -0.4];
        let x = [0.7, -1.1, 0.25];
        let mut d = [0.0; 3];
        jordan(&cone, &l, &x, &mut d);
        let mut back = [0.0; 3];
        jordan_div(&cone, &l, &d, &mut back);
        for i in 0..3 {
            assert!((back[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let cone = Cone::Soc { start: 0, dim: 2 };
        // (1, 0) + α(−1, 1) leaves the cone at α = 1/2
        let a = max_step(&cone, &[1.0, 0.0], &[-1.0, 1.0]);
        assert!((a - 0.5).abs() < 1e-12);
        assert!(max_step(&cone, &[1.0, 0.0], &[1.0, 0.5]).is_infinite());
    }
}
