//! Homogeneous self-dual primal-dual interior-point method for
//!
//! ```text
//! min c.x  s.t.  A x = b,  x in K        max b.y  s.t.  A^T y + z = c,  z in K
//! ```
//!
//! where `K` is a product of real symmetric PSD cones and a nonnegative
//! orthant. Search directions use Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector; the normal equations are formed as a dense Schur
//! complement of size `m x m`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

/// Sparse-over-blocks element of the variable space (data rows, cost).
#[derive(Debug, Clone)]
pub(crate) struct Elem {
    pub mats: Vec<Option<DMatrix<f64>>>,
    pub lin: DVector<f64>,
}

/// Dense element of the variable space (iterates, directions).
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub mats: Vec<DMatrix<f64>>,
    pub lin: DVector<f64>,
}

impl Point {
    fn zeros(dims: &[usize], n_lin: usize) -> Self {
        Self {
            mats: dims.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
            lin: DVector::zeros(n_lin),
        }
    }

    fn identity(dims: &[usize], n_lin: usize) -> Self {
        Self {
            mats: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
            lin: DVector::from_element(n_lin, 1.0),
        }
    }

    fn dot(&self, other: &Point) -> f64 {
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
            + self.lin.dot(&other.lin)
    }

    fn axpy(&mut self, alpha: f64, other: &Point) {
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            *a += b * alpha;
        }
        self.lin.axpy(alpha, &other.lin, 1.0);
    }

    fn scaled(&self, alpha: f64) -> Point {
        Point {
            mats: self.mats.iter().map(|m| m * alpha).collect(),
            lin: &self.lin * alpha,
        }
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn add_elem(&mut self, alpha: f64, e: &Elem) {
        for (a, b) in self.mats.iter_mut().zip(&e.mats) {
            if let Some(b) = b {
                *a += b * alpha;
            }
        }
        self.lin.axpy(alpha, &e.lin, 1.0);
    }
}

impl Elem {
    fn dot(&self, p: &Point) -> f64 {
        self.mats
            .iter()
            .zip(&p.mats)
            .filter_map(|(a, b)| a.as_ref().map(|a| a.dot(b)))
            .sum::<f64>()
            + self.lin.dot(&p.lin)
    }

    fn to_point(&self, dims: &[usize]) -> Point {
        Point {
            mats: self
                .mats
                .iter()
                .zip(dims)
                .map(|(m, &d)| m.clone().unwrap_or_else(|| DMatrix::zeros(d, d)))
                .collect(),
            lin: self.lin.clone(),
        }
    }
}

/// Real standard-form problem.
#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub dims: Vec<usize>,
    pub n_lin: usize,
    /// Linear columns from here on are slacks, one per row that has one.
    pub slack_start: usize,
    pub rows: Vec<Elem>,
    pub b: DVector<f64>,
    pub c: Elem,
}

impl StdForm {
    pub fn scale_cost(&mut self, factor: f64) {
        for mm in self.c.mats.iter_mut().flatten() {
            *mm *= factor;
        }
        self.c.lin *= factor;
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.dot(x)))
    }

    fn apply_t(&self, y: &DVector<f64>) -> Point {
        let mut out = Point::zeros(&self.dims, self.n_lin);
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            out.add_elem(yi, r);
        }
        out
    }

    fn degree(&self) -> f64 {
        (self.dims.iter().sum::<usize>() + self.n_lin) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub tol: f64,
    pub infeas_tol: f64,
    pub max_iter: usize,
    pub step_factor: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Point,
    pub y: DVector<f64>,
    pub tau: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub relgap: f64,
    pub pres: f64,
    pub dres: f64,
    pub iterations: usize,
}

/// Nesterov-Todd scaling of one PSD block: `W = G G^T`, `G^T Z G = G^-1 X G^-T = diag(lambda)`.
struct BlockScaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

struct Scaling {
    blocks: Vec<BlockScaling>,
    lin_w: DVector<f64>,
    lin_lambda: DVector<f64>,
}

/// Some `L` with `L L^T = X`; falls back to the symmetric square root.
fn psd_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (x + x.transpose()) * 0.5;
    if let Some(ch) = Cholesky::new(sym.clone()) {
        return ch.l();
    }
    let eig = SymmetricEigen::new(sym);
    let floor = (eig.eigenvalues.amax() * 1e-24).max(f64::MIN_POSITIVE);
    let sq = eig.eigenvalues.map(|v| v.max(floor).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sq)
}

fn block_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> BlockScaling {
    let lx = psd_factor(x);
    let lz = psd_factor(z);
    let svd = SVD::new(lz.transpose() * &lx, true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let s = svd.singular_values;
    let s_isqrt = s.map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    let g = &lx * v_t.transpose() * DMatrix::from_diagonal(&s_isqrt);
    let g_inv = DMatrix::from_diagonal(&s_isqrt) * u.transpose() * lz.transpose();
    let w = &g * g.transpose();
    BlockScaling {
        g,
        g_inv,
        w,
        lambda: s,
    }
}

impl Scaling {
    fn new(x: &Point, z: &Point) -> Self {
        let blocks = x
            .mats
            .iter()
            .zip(&z.mats)
            .map(|(xm, zm)| block_scaling(xm, zm))
            .collect();
        let lin_w = x.lin.zip_map(&z.lin, |a, b| (a / b).sqrt());
        let lin_lambda = x.lin.zip_map(&z.lin, |a, b| (a * b).sqrt());
        Self {
            blocks,
            lin_w,
            lin_lambda,
        }
    }

    /// `W P W` per block, `w^2 p` on the orthant.
    fn apply_w_elem(&self, e: &Elem) -> Elem {
        Elem {
            mats: e
                .mats
                .iter()
                .zip(&self.blocks)
                .map(|(m, s)| m.as_ref().map(|m| &s.w * m * &s.w))
                .collect(),
            lin: e.lin.zip_map(&self.lin_w, |v, w| v * w * w),
        }
    }

    fn apply_w(&self, p: &Point) -> Point {
        Point {
            mats: p
                .mats
                .iter()
                .zip(&self.blocks)
                .map(|(m, s)| &s.w * m * &s.w)
                .collect(),
            lin: p.lin.zip_map(&self.lin_w, |v, w| v * w * w),
        }
    }

    /// Primal direction in scaled coordinates: `G^-1 dX G^-T`.
    fn scale_primal(&self, dx: &Point) -> Point {
        Point {
            mats: dx
                .mats
                .iter()
                .zip(&self.blocks)
                .map(|(m, s)| &s.g_inv * m * s.g_inv.transpose())
                .collect(),
            lin: dx.lin.zip_map(&self.lin_w, |v, w| v / w),
        }
    }

    /// Dual direction in scaled coordinates: `G^T dZ G`.
    fn scale_dual(&self, dz: &Point) -> Point {
        Point {
            mats: dz
                .mats
                .iter()
                .zip(&self.blocks)
                .map(|(m, s)| s.g.transpose() * m * &s.g)
                .collect(),
            lin: dz.lin.zip_map(&self.lin_w, |v, w| v * w),
        }
    }

    /// Solves `lambda o U = r` (Jordan product) and maps back: `G U G^T`.
    fn cone_rhs(&self, r: &Point) -> Point {
        Point {
            mats: r
                .mats
                .iter()
                .zip(&self.blocks)
                .map(|(rm, s)| {
                    let n = rm.nrows();
                    let u = DMatrix::from_fn(n, n, |i, j| {
                        2.0 * rm[(i, j)] / (s.lambda[i] + s.lambda[j])
                    });
                    &s.g * u * s.g.transpose()
                })
                .collect(),
            lin: DVector::from_fn(r.lin.len(), |j, _| {
                self.lin_w[j] * r.lin[j] / self.lin_lambda[j]
            }),
        }
    }

    /// `-lambda^2` (the affine-scaling complementarity target).
    fn neg_lambda_sq(&self) -> Point {
        Point {
            mats: self
                .blocks
                .iter()
                .map(|s| DMatrix::from_diagonal(&s.lambda.map(|v| -v * v)))
                .collect(),
            lin: self.lin_lambda.map(|v| -v * v),
        }
    }

    /// Largest step keeping `lambda + alpha * d` in the cone, for scaled `d`.
    fn max_step(&self, d: &Point) -> f64 {
        let mut alpha = f64::INFINITY;
        for (m, s) in d.mats.iter().zip(&self.blocks) {
            let isq = s.lambda.map(|v| 1.0 / v.sqrt());
            let n = m.nrows();
            let mut t = DMatrix::from_fn(n, n, |i, j| isq[i] * m[(i, j)] * isq[j]);
            t = (&t + t.transpose()) * 0.5;
            let min_eig = SymmetricEigen::new(t).eigenvalues.min();
            if min_eig < 0.0 {
                alpha = alpha.min(-1.0 / min_eig);
            }
        }
        for j in 0..d.lin.len() {
            if d.lin[j] < 0.0 {
                alpha = alpha.min(-self.lin_lambda[j] / d.lin[j]);
            }
        }
        alpha
    }
}

/// Symmetric Jordan product `(a b + b a) / 2` per block, elementwise on the orthant.
fn jordan(a: &Point, b: &Point) -> Point {
    Point {
        mats: a
            .mats
            .iter()
            .zip(&b.mats)
            .map(|(x, y)| {
                let p = x * y;
                (&p + p.transpose()) * 0.5
            })
            .collect(),
        lin: a.lin.component_mul(&b.lin),
    }
}

struct Schur {
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Schur {
    fn factor(m: DMatrix<f64>) -> Self {
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Self {
                chol: Some(ch),
                lu: None,
            };
        }
        let reg = m.diagonal().amax().max(1.0) * 1e-13;
        let mut mr = m.clone();
        for i in 0..mr.nrows() {
            mr[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::new(mr) {
            return Self {
                chol: Some(ch),
                lu: None,
            };
        }
        Self {
            chol: None,
            lu: Some(m.lu()),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        if let Some(ch) = &self.chol {
            return Some(ch.solve(rhs));
        }
        self.lu.as_ref().and_then(|lu| lu.solve(rhs))
    }
}

struct Direction {
    dx: Point,
    dy: DVector<f64>,
    dz: Point,
    dtau: f64,
    dkappa: f64,
}

/// Per-iteration quantities shared by the predictor and corrector solves.
struct Newton<'a> {
    form: &'a StdForm,
    scaling: Scaling,
    schur: Schur,
    r_p: DVector<f64>,
    r_d: Point,
    r_g: f64,
    w_rd: Point,
    g: DVector<f64>,
    c_w_c: f64,
    y2: DVector<f64>,
    tau: f64,
    kappa: f64,
}

impl Newton<'_> {
    fn solve(&self, eta: f64, rx: &Point, s_tk: f64) -> Option<Direction> {
        let form = self.form;
        let c = &form.c;
        // M dy - (g + b) dtau = eta r_p - A R_X + eta A W r_d
        let mut w_rd_eta = self.w_rd.scaled(eta);
        w_rd_eta.axpy(-1.0, rx);
        let rhs1 = &self.r_p * eta + form.apply(&w_rd_eta);
        let y1 = self.schur.solve(&rhs1)?;
        let gmb = &self.g - &form.b;
        let rhs2 = eta * self.r_g - c.dot(rx) + eta * c.dot(&self.w_rd) - s_tk / self.tau;
        let denom = gmb.dot(&self.y2) - self.c_w_c - self.kappa / self.tau;
        if !denom.is_finite() || denom == 0.0 {
            return None;
        }
        let dtau = (rhs2 - gmb.dot(&y1)) / denom;
        let dy = y1 + &self.y2 * dtau;
        // dz = eta r_d - A^T dy + c dtau
        let mut dz = self.r_d.scaled(eta);
        dz.axpy(-1.0, &form.apply_t(&dy));
        dz.add_elem(dtau, c);
        // dx = R_X - W dz W
        let mut dx = rx.clone();
        dx.axpy(-1.0, &self.scaling.apply_w(&dz));
        let dkappa = (s_tk - self.kappa * dtau) / self.tau;
        Some(Direction {
            dx,
            dy,
            dz,
            dtau,
            dkappa,
        })
    }
}

fn step_to_boundary(sc: &Scaling, dir: &Direction, tau: f64, kappa: f64) -> (f64, Point, Point) {
    let dxs = sc.scale_primal(&dir.dx);
    let dzs = sc.scale_dual(&dir.dz);
    let mut alpha = sc.max_step(&dxs).min(sc.max_step(&dzs));
    if dir.dtau < 0.0 {
        alpha = alpha.min(-tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(-kappa / dir.dkappa);
    }
    (alpha, dxs, dzs)
}

/// Iterations without a new best score before giving up.
const NO_PROGRESS_ITERS: usize = 25;

pub(crate) fn solve(form: &StdForm, settings: &IpmSettings) -> IpmResult {
    let dims = &form.dims;
    let m = form.m();
    let nu = form.degree();
    let mut x = Point::identity(dims, form.n_lin);
    let mut z = Point::identity(dims, form.n_lin);
    let mut y = DVector::zeros(m);
    let mut tau = 1.0;
    let mut kappa = 1.0;
    let b_norm = form.b.norm();
    let c_point = form.c.to_point(dims);
    let c_norm = c_point.norm();
    let mut stalls = 0;
    // Lowest max(pres, dres, relgap) seen; returned if the run ends early.
    let mut best: Option<(f64, IpmResult)> = None;
    let mut best_iter = 0;

    let mut iter = 0;
    loop {
        // Residuals of the homogeneous embedding.
        let ax = form.apply(&x);
        let aty = form.apply_t(&y);
        let r_p = &form.b * tau - &ax;
        let mut r_d = c_point.scaled(tau);
        r_d.axpy(-1.0, &aty);
        r_d.axpy(-1.0, &z);
        let cx = form.c.dot(&x);
        let by = form.b.dot(&y);
        let r_g = by - cx - kappa;

        let pobj = cx / tau;
        let dobj = by / tau;
        let pres = r_p.norm() / tau / (1.0 + b_norm);
        let dres = r_d.norm() / tau / (1.0 + c_norm);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        let finish = |status: IpmStatus, x: Point, y: DVector<f64>, tau: f64| IpmResult {
            status,
            x,
            y,
            tau,
            pobj,
            dobj,
            relgap,
            pres,
            dres,
            iterations: iter,
        };

        if pres <= settings.tol && dres <= settings.tol && relgap <= settings.tol {
            return finish(IpmStatus::Optimal, x, y, tau);
        }
        let score = pres.max(dres).max(relgap);
        if tau > 0.0 && score.is_finite() && best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, finish(IpmStatus::Stalled, x.clone(), y.clone(), tau)));
            best_iter = iter;
        }
        let give_up = |status: IpmStatus, x: Point, y: DVector<f64>, tau: f64, best: Option<(f64, IpmResult)>| match best {
            Some((_, mut r)) => {
                r.status = status;
                r.iterations = iter;
                r
            }
            None => finish(status, x, y, tau),
        };
        // Certificates, normalized to be invariant to the scale of b and c:
        // A^T y + z ~ 0 with b.y > 0 (primal infeasible),
        // A x ~ 0 with c.x < 0 (dual infeasible).
        if by > 0.0 {
            let mut ray = aty.clone();
            ray.axpy(1.0, &z);
            if ray.norm() * b_norm.max(f64::MIN_POSITIVE) <= settings.infeas_tol * by {
                return finish(IpmStatus::PrimalInfeasible, x, y, tau);
            }
        }
        if cx < 0.0 && ax.norm() * c_norm.max(f64::MIN_POSITIVE) <= settings.infeas_tol * (-cx) {
            return finish(IpmStatus::DualInfeasible, x, y, tau);
        }
        if iter >= settings.max_iter {
            return give_up(IpmStatus::IterationLimit, x, y, tau, best);
        }
        if stalls >= 5 || iter - best_iter >= NO_PROGRESS_ITERS {
            return give_up(IpmStatus::Stalled, x, y, tau, best);
        }

        let mu = (x.dot(&z) + tau * kappa) / (nu + 1.0);
        let scaling = Scaling::new(&x, &z);

        // Schur complement M = A W A^T.
        let w_rows: Vec<Elem> = form.rows.iter().map(|r| scaling.apply_w_elem(r)).collect();
        let mut schur_m = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = elem_dot(&form.rows[i], &w_rows[j]);
                schur_m[(i, j)] = v;
                schur_m[(j, i)] = v;
            }
        }
        let schur = Schur::factor(schur_m);
        let w_c = scaling.apply_w(&c_point);
        let g = form.apply(&w_c);
        let c_w_c = c_point.dot(&w_c);
        let gpb = &g + &form.b;
        let Some(y2) = schur.solve(&gpb) else {
            return give_up(IpmStatus::Stalled, x, y, tau, best);
        };
        let w_rd = scaling.apply_w(&r_d);
        let newton = Newton {
            form,
            scaling,
            schur,
            r_p,
            r_d,
            r_g,
            w_rd,
            g,
            c_w_c,
            y2,
            tau,
            kappa,
        };

        // Predictor.
        let rx_aff = newton.scaling.cone_rhs(&newton.scaling.neg_lambda_sq());
        let Some(aff) = newton.solve(1.0, &rx_aff, -tau * kappa) else {
            return give_up(IpmStatus::Stalled, x, y, tau, best);
        };
        let (alpha_aff, dxs_aff, dzs_aff) = step_to_boundary(&newton.scaling, &aff, tau, kappa);
        let alpha_aff = alpha_aff.min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let mut r = newton.scaling.neg_lambda_sq();
        let corr = jordan(&dxs_aff, &dzs_aff);
        r.axpy(-1.0, &corr);
        for mat in r.mats.iter_mut() {
            for i in 0..mat.nrows() {
                mat[(i, i)] += sigma * mu;
            }
        }
        r.lin.add_scalar_mut(sigma * mu);
        let rx = newton.scaling.cone_rhs(&r);
        let s_tk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let Some(dir) = newton.solve(1.0 - sigma, &rx, s_tk) else {
            return give_up(IpmStatus::Stalled, x, y, tau, best);
        };
        let (alpha_max, _, _) = step_to_boundary(&newton.scaling, &dir, tau, kappa);
        let alpha = (settings.step_factor * alpha_max).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            stalls += 1;
        } else {
            stalls = 0;
        }
        let alpha = if alpha.is_finite() { alpha } else { 0.0 };

        x.axpy(alpha, &dir.dx);
        y.axpy(alpha, &dir.dy, 1.0);
        z.axpy(alpha, &dir.dz);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        for mat in x.mats.iter_mut().chain(z.mats.iter_mut()) {
            let t = mat.transpose();
            *mat += t;
            *mat *= 0.5;
        }
        iter += 1;
    }
}

fn elem_dot(a: &Elem, b: &Elem) -> f64 {
    a.mats
        .iter()
        .zip(&b.mats)
        .filter_map(|(p, q)| match (p, q) {
            (Some(p), Some(q)) => Some(p.dot(q)),
            _ => None,
        })
        .sum::<f64>()
        + a.lin.dot(&b.lin)
}

/// Diagonal equilibration: rows and per-block / per-variable columns.
pub(crate) struct Equilibration {
    pub row: DVector<f64>,
    pub block: Vec<f64>,
    pub lin: DVector<f64>,
    pub b_scale: f64,
    pub c_scale: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Ruiz-style scaling of `form` in place; returns the factors needed to unscale.
pub(crate) fn equilibrate(form: &mut StdForm, passes: usize) -> Equilibration {
    let m = form.m();
    let nb = form.dims.len();
    let nl = form.n_lin;
    let block_mag: Vec<Vec<f64>> = form
        .rows
        .iter()
        .map(|r| r.mats.iter().map(|mm| mm.as_ref().map_or(0.0, max_abs)).collect())
        .collect();
    let mut row = DVector::from_element(m, 1.0);
    let mut block = vec![1.0; nb];
    let mut lin = DVector::from_element(nl, 1.0);
    // Slack columns are left out of the row norms; otherwise a +-1 slack
    // entry caps a row whose other coefficients are tiny and the row is never
    // scaled up. Each slack is rescaled to a unit entry at the end.
    let ns = form.slack_start.min(nl);
    for _ in 0..passes {
        for i in 0..m {
            let mut mx = 0.0_f64;
            for bi in 0..nb {
                mx = mx.max(row[i] * block[bi] * block_mag[i][bi]);
            }
            for j in 0..ns {
                mx = mx.max(row[i] * lin[j] * form.rows[i].lin[j].abs());
            }
            if mx > 0.0 {
                row[i] /= mx.sqrt();
            }
        }
        for bi in 0..nb {
            let mx = (0..m).fold(0.0_f64, |a, i| a.max(row[i] * block[bi] * block_mag[i][bi]));
            if mx > 0.0 {
                block[bi] /= mx.sqrt();
            }
        }
        for j in 0..ns {
            let mx = (0..m).fold(0.0_f64, |a, i| a.max(row[i] * lin[j] * form.rows[i].lin[j].abs()));
            if mx > 0.0 {
                lin[j] /= mx.sqrt();
            }
        }
    }
    for j in ns..nl {
        let mx = (0..m).fold(0.0_f64, |a, i| a.max(row[i] * form.rows[i].lin[j].abs()));
        if mx > 0.0 {
            lin[j] = 1.0 / mx;
        }
    }
    for (i, r) in form.rows.iter_mut().enumerate() {
        for (bi, mm) in r.mats.iter_mut().enumerate() {
            if let Some(mm) = mm {
                *mm *= row[i] * block[bi];
            }
        }
        for j in 0..nl {
            r.lin[j] *= row[i] * lin[j];
        }
        form.b[i] *= row[i];
    }
    for (bi, mm) in form.c.mats.iter_mut().enumerate() {
        if let Some(mm) = mm {
            *mm *= block[bi];
        }
    }
    form.c.lin.component_mul_assign(&lin);

    let b_inf = form.b.amax();
    let b_scale = if b_inf > 0.0 { b_inf } else { 1.0 };
    form.b /= b_scale;
    let c_inf = form
        .c
        .mats
        .iter()
        .flatten()
        .map(max_abs)
        .fold(form.c.lin.amax(), f64::max);
    let c_scale = if c_inf > 0.0 { c_inf } else { 1.0 };
    for mm in form.c.mats.iter_mut().flatten() {
        *mm /= c_scale;
    }
    form.c.lin /= c_scale;
    Equilibration {
        row,
        block,
        lin,
        b_scale,
        c_scale,
    }
}

impl Equilibration {
    /// Maps a scaled primal iterate back: `x = D x_hat * b_scale`.
    pub fn unscale_primal(&self, x: &Point) -> Point {
        Point {
            mats: x
                .mats
                .iter()
                .zip(&self.block)
                .map(|(m, d)| m * (d * self.b_scale))
                .collect(),
            lin: x.lin.component_mul(&self.lin) * self.b_scale,
        }
    }

    /// `y = R y_hat * c_scale`.
    pub fn unscale_dual(&self, y: &DVector<f64>) -> DVector<f64> {
        y.component_mul(&self.row) * self.c_scale
    }
}
