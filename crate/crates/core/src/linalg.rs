//! Symplectic linear algebra on ℝ²ᵈ in (q, p) block coordinates.
//!
//! The symplectic form is ω = Σ dqᵢ ∧ dpᵢ, i.e. ω(u, v) = u_q·v_p − u_p·v_q,
//! and the compatible complex structure is J = [[0, −I], [I, 0]] (J e_q = e_p),
//! so that ω(u, v) = (J u)·v and g(u, v) = ω(u, J v) is the Euclidean product.
//! Frames are stored orthonormalised; the subspace is the datum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MaslovError, Result};
use crate::tolerances::Tolerances;

pub type Mat = DMatrix<f64>;

/// The complex structure J = [[0, −I], [I, 0]] on ℝ²ᵈ.
pub fn complex_structure(d: usize) -> Mat {
    let mut j = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = -1.0;
        j[(d + i, i)] = 1.0;
    }
    j
}

/// Gram matrix Ω of ω, i.e. ω(u, v) = uᵀ Ω v. Equals Jᵀ.
pub fn omega_matrix(d: usize) -> Mat {
    complex_structure(d).transpose()
}

/// ω(u, v) = u_q·v_p − u_p·v_q.
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let d = u.len() / 2;
    let mut s = 0.0;
    for i in 0..d {
        s += u[i] * v[d + i] - u[d + i] * v[i];
    }
    s
}

/// Matrix of ω restricted to the column spans: (Aᵀ Ω B)ᵢⱼ = ω(aᵢ, bⱼ).
pub fn omega_pairing(a: &Mat, b: &Mat) -> Mat {
    let d = a.nrows() / 2;
    let aq = a.rows(0, d);
    let ap = a.rows(d, d);
    let bq = b.rows(0, d);
    let bp = b.rows(d, d);
    aq.transpose() * bp - ap.transpose() * bq
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn singular_values(m: &Mat) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Orthonormal basis of the column span, dropping directions whose singular
/// value falls below `rel_tol` times the largest one.
pub fn orth_basis(m: &Mat, rel_tol: f64) -> Mat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return Mat::zeros(n, 0);
    }
    // rank from the singular values, span from pivoted QR: nalgebra's
    // singular vectors are unreliable on rank-deficient input
    let sv = singular_values(m);
    let smax = sv.max();
    if smax == 0.0 {
        return Mat::zeros(n, 0);
    }
    let rank = sv.iter().filter(|&&s| s > rel_tol * smax).count();
    let qr = m.clone().col_piv_qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q.columns(0, rank).into_owned();
    for j in 0..rank {
        if r[(j, j)] < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of span `basis` (which must
/// already be orthonormal) in ℝⁿ.
pub fn orth_complement(basis: &Mat) -> Mat {
    let n = basis.nrows();
    let proj = Mat::identity(n, n) - basis * basis.transpose();
    // projector eigenvalues are 0 or 1, so the trace is the rank
    let rank = proj.trace().round().max(0.0) as usize;
    if rank == 0 {
        return Mat::zeros(n, 0);
    }
    let eig = (&proj + proj.transpose()).scale(0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap().then(a.cmp(&b)));
    let mut out = Mat::zeros(n, rank.min(n));
    for (k, &i) in order.iter().take(out.ncols()).enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        // sign: largest-magnitude entry positive
        if col[col.iamax()] < 0.0 {
            col.neg_mut();
        }
        out.set_column(k, &col);
    }
    out
}

/// Null space of `a` (columns span {x : a x = 0}).
pub fn null_space(a: &Mat, rel_tol: f64) -> Mat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let row_space = orth_basis(&a.transpose(), rel_tol);
    orth_complement(&row_space)
}

/// Thin QR with positive diagonal in R. Deterministic representative of the span.
fn canonical_q(m: &Mat) -> Mat {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Frame of a Lagrangian subspace of (ℝ²ᵈ, ω): 2d × d, orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    columns: Mat,
}

impl LagrangianFrame {
    /// Validates and canonicalises a 2d × d frame with default tolerances.
    pub fn new(columns: Mat) -> Result<Self> {
        Self::with_tolerances(columns, &Tolerances::default())
    }

    pub fn with_tolerances(columns: Mat, tol: &Tolerances) -> Result<Self> {
        check_shape(&columns)?;
        if columns.iter().any(|x| !x.is_finite()) {
            return Err(MaslovError::InvalidArgument("frame has non-finite entries".into()));
        }
        let sv = singular_values(&columns);
        let smax = sv.max();
        let smin = sv.min();
        if smax == 0.0 || smin <= tol.rank_tol * smax {
            return Err(MaslovError::RankDeficient {
                sigma_min: if smax == 0.0 { 0.0 } else { smin / smax },
            });
        }
        let q = canonical_q(&columns);
        let defect = max_abs(&omega_pairing(&q, &q));
        if defect > tol.iso_tol {
            return Err(MaslovError::NotIsotropic { defect });
        }
        Ok(LagrangianFrame { columns: q })
    }

    /// Trusted constructor: columns already orthonormal and isotropic.
    pub(crate) fn from_orthonormal(columns: Mat) -> Self {
        LagrangianFrame { columns }
    }

    pub fn horizontal(d: usize) -> Self {
        let mut m = Mat::zeros(2 * d, d);
        m.view_mut((0, 0), (d, d)).fill_with_identity();
        LagrangianFrame { columns: m }
    }

    pub fn vertical(d: usize) -> Self {
        let mut m = Mat::zeros(2 * d, d);
        m.view_mut((d, 0), (d, d)).fill_with_identity();
        LagrangianFrame { columns: m }
    }

    /// Graph {p = S q} of a symmetric d × d matrix.
    pub fn graph(s: &Mat) -> Result<Self> {
        let d = s.nrows();
        if s.ncols() != d {
            return Err(MaslovError::DimensionMismatch("graph matrix must be square".into()));
        }
        let mut m = Mat::zeros(2 * d, d);
        m.view_mut((0, 0), (d, d)).fill_with_identity();
        m.view_mut((d, 0), (d, d)).copy_from(s);
        Self::new(m)
    }

    /// Line of slope angle θ in ℝ² (d = 1): span (cos θ, sin θ).
    pub fn line(theta: f64) -> Self {
        LagrangianFrame {
            columns: canonical_q(&Mat::from_column_slice(2, 1, &[theta.cos(), theta.sin()])),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &Mat {
        &self.columns
    }

    pub fn q_block(&self) -> Mat {
        self.columns.rows(0, self.dim()).into_owned()
    }

    pub fn p_block(&self) -> Mat {
        let d = self.dim();
        self.columns.rows(d, d).into_owned()
    }

    /// max |Fᵀ Ω F| of the stored orthonormal frame.
    pub fn isotropy_defect(&self) -> f64 {
        max_abs(&omega_pairing(&self.columns, &self.columns))
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Mat {
        &self.columns * self.columns.transpose()
    }

    /// Spectral distance between the two subspaces.
    pub fn distance(&self, other: &LagrangianFrame) -> f64 {
        (self.projector() - other.projector()).norm()
    }

    /// Image under a linear map, re-orthonormalised. Fails if the image is not
    /// Lagrangian within `tol.iso_tol`.
    pub fn transformed(&self, m: &Mat, tol: &Tolerances) -> Result<Self> {
        let n = 2 * self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(MaslovError::DimensionMismatch(format!(
                "map is {}x{}, frame lives in dimension {n}",
                m.nrows(),
                m.ncols()
            )));
        }
        let img = m * &self.columns;
        let sv = singular_values(&img);
        if sv.min() <= tol.rank_tol * sv.max() {
            return Err(MaslovError::RankDeficient { sigma_min: sv.min() / sv.max() });
        }
        let q = canonical_q(&img);
        let defect = max_abs(&omega_pairing(&q, &q));
        if defect > tol.iso_tol {
            return Err(MaslovError::IsotropyDrift { defect });
        }
        Ok(LagrangianFrame { columns: q })
    }

    /// Same subspace, different orthonormal representative: F · R for orthogonal R.
    pub fn reframed(&self, r: &Mat) -> Self {
        LagrangianFrame { columns: &self.columns * r }
    }
}

fn check_shape(f: &Mat) -> Result<()> {
    if f.ncols() == 0 || f.nrows() != 2 * f.ncols() {
        return Err(MaslovError::DimensionMismatch(format!(
            "Lagrangian frame must be 2d x d, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(())
}

/// True iff `f` has rank d and max |Fᵀ Ω F| ≤ `tol`.
pub fn is_lagrangian(f: &Mat, tol: f64) -> Result<bool> {
    check_shape(f)?;
    let sv = singular_values(f);
    let smax = sv.max();
    if smax == 0.0 || sv.min() <= Tolerances::default().rank_tol * smax {
        return Ok(false);
    }
    Ok(max_abs(&omega_pairing(f, f)) <= tol)
}

/// Orthonormal basis of the Euclidean complement of a Lagrangian `vref`:
/// Jᵀ·vref. For the vertical this is the horizontal with its standard basis.
fn complement_basis(vref: &LagrangianFrame) -> Mat {
    complex_structure(vref.dim()).transpose() * vref.columns()
}

/// dim(L ∩ Vref): number of singular values of the projection of L onto
/// Vref⊥ that fall below `tol`.
pub fn intersection_dim(vref: &LagrangianFrame, l: &LagrangianFrame, tol: f64) -> usize {
    let c = complement_basis(vref);
    let sv = singular_values(&(c.transpose() * l.columns()));
    sv.iter().filter(|&&s| s < tol).count()
}

/// dim(L ∩ V) for the vertical V = span(e_p).
pub fn vertical_intersection_dim(l: &LagrangianFrame, tol: f64) -> usize {
    let sv = singular_values(&l.q_block());
    sv.iter().filter(|&&s| s < tol).count()
}

/// A real symmetric form with its inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    pub matrix: Mat,
    /// Number of eigenvalues below −sig_tol.
    pub index: usize,
    /// Number of eigenvalues in [−sig_tol, sig_tol].
    pub nullity: usize,
    pub positive: usize,
}

impl SymmetricForm {
    pub fn from_matrix(matrix: Mat, sig_tol: f64) -> Result<Self> {
        let (index, nullity) = signature(&matrix, sig_tol)?;
        let positive = matrix.nrows() - index - nullity;
        Ok(SymmetricForm { matrix, index, nullity, positive })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive == self.dim()
    }

    pub fn is_negative_definite(&self) -> bool {
        self.index == self.dim()
    }
}

/// (index, nullity) of a symmetric matrix: counts of eigenvalues below
/// −sig_tol and inside [−sig_tol, sig_tol].
pub fn signature(s: &Mat, sig_tol: f64) -> Result<(usize, usize)> {
    if s.nrows() != s.ncols() {
        return Err(MaslovError::DimensionMismatch("signature needs a square matrix".into()));
    }
    let scale = 1.0 + max_abs(s);
    let defect = max_abs(&(s - s.transpose()));
    if defect > 1e-10 * scale {
        return Err(MaslovError::Asymmetric { defect });
    }
    if s.nrows() == 0 {
        return Ok((0, 0));
    }
    let sym = (s + s.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let index = ev.iter().filter(|&&x| x < -sig_tol).count();
    let nullity = ev.iter().filter(|&&x| x.abs() <= sig_tol).count();
    Ok((index, nullity))
}

/// Height Q_Vref(L1, L2): the quadratic form on E/Vref given by
/// v ↦ ω((P|L1)⁻¹ v, (P|L2)⁻¹ v), in the basis Jᵀ·Vref of the complement.
pub fn height(
    vref: &LagrangianFrame,
    l1: &LagrangianFrame,
    l2: &LagrangianFrame,
    tol: &Tolerances,
) -> Result<SymmetricForm> {
    let d = vref.dim();
    if l1.dim() != d || l2.dim() != d {
        return Err(MaslovError::DimensionMismatch("height frames differ in dimension".into()));
    }
    let c = complement_basis(vref);
    let lift = |l: &LagrangianFrame, which: &str| -> Result<Mat> {
        let a = c.transpose() * l.columns();
        let sv = singular_values(&a);
        if sv.min() <= tol.rank_tol {
            return Err(MaslovError::NotTransverse {
                which: which.to_string(),
                dim: sv.iter().filter(|&&s| s <= tol.rank_tol).count(),
            });
        }
        let inv = a.try_inverse().ok_or(MaslovError::NotTransverse {
            which: which.to_string(),
            dim: 1,
        })?;
        Ok(l.columns() * inv)
    };
    let s1 = lift(l1, "L1")?;
    let s2 = lift(l2, "L2")?;
    let raw = omega_pairing(&s1, &s2);
    let sym = (&raw + raw.transpose()) * 0.5;
    let scale = s1.norm() * s2.norm();
    SymmetricForm::from_matrix(sym, tol.sig_tol * scale.max(1.0))
}

/// A coisotropic subspace W ⊂ ℝ²ᵈ with its ω-orthogonal W⊥ ⊂ W.
#[derive(Debug, Clone)]
pub struct CoisotropicData {
    dim: usize,
    w: Mat,
    wperp: Mat,
}

impl CoisotropicData {
    /// From any spanning set of W (2d × k, d ≤ k ≤ 2d).
    pub fn new(w: Mat, tol: &Tolerances) -> Result<Self> {
        let n = w.nrows();
        if n % 2 != 0 || n == 0 {
            return Err(MaslovError::DimensionMismatch("ambient dimension must be even".into()));
        }
        let d = n / 2;
        let w = orth_basis(&w, tol.rank_tol);
        let k = w.ncols();
        if k < d {
            return Err(MaslovError::InvalidArgument(format!(
                "coisotropic subspace needs dimension ≥ {d}, got {k}"
            )));
        }
        // W⊥ = {v : ω(v, w) = 0 ∀ w ∈ W} = ker(Wᵀ J)
        let constraint = w.transpose() * complex_structure(d);
        let wperp = null_space(&constraint, tol.rank_tol);
        let inside = &wperp - &w * (w.transpose() * &wperp);
        let defect = if wperp.ncols() == 0 { 0.0 } else { max_abs(&inside) };
        if defect > 1e-8 {
            return Err(MaslovError::NotCoisotropic { defect });
        }
        Ok(CoisotropicData { dim: d, w, wperp })
    }

    /// W = U^ω for an isotropic U (so W⊥ = U).
    pub fn from_isotropic(u: &Mat, tol: &Tolerances) -> Result<Self> {
        let d = u.nrows() / 2;
        let u = orth_basis(u, tol.rank_tol);
        if max_abs(&omega_pairing(&u, &u)) > tol.iso_tol {
            return Err(MaslovError::NotIsotropic { defect: max_abs(&omega_pairing(&u, &u)) });
        }
        let constraint = u.transpose() * complex_structure(d);
        let w = null_space(&constraint, tol.rank_tol);
        Self::new(w, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Orthonormal frame of W.
    pub fn w(&self) -> &Mat {
        &self.w
    }

    /// Orthonormal frame of W⊥.
    pub fn wperp(&self) -> &Mat {
        &self.wperp
    }

    /// Dimension of the reduced space W/W⊥.
    pub fn reduced_dim(&self) -> usize {
        2 * (self.w.ncols() - self.dim)
    }
}

/// Fixed symplectic basis of W/W⊥ together with the coordinate map
/// u ↦ (ω(u, fᵢ), ω(eᵢ, u)) for u ∈ W.
#[derive(Debug, Clone)]
pub struct LinearReduction {
    data: CoisotropicData,
    e: Mat,
    f: Mat,
}

impl LinearReduction {
    /// Builds the basis by symplectic Gram–Schmidt. The fᵢ are taken first
    /// from the image of V ∩ W, so that the reduced vertical is the
    /// coordinate vertical whenever W⊥ ⊂ V ⊂ W.
    pub fn new(data: &CoisotropicData, tol: &Tolerances) -> Result<Self> {
        let d = data.dim;
        let w = &data.w;
        let wperp = &data.wperp;
        // Euclidean complement G of W⊥ inside W
        let g = if wperp.ncols() == 0 {
            w.clone()
        } else {
            let in_w = w - wperp * (wperp.transpose() * w);
            orth_basis(&in_w, 1e-6)
        };
        let m = g.ncols() / 2;
        if g.ncols() != 2 * m || g.ncols() != data.reduced_dim() {
            return Err(MaslovError::NotCoisotropic { defect: g.ncols() as f64 });
        }
        let project_g = |x: &Mat| -> Mat { &g * (g.transpose() * x) };

        // image of V ∩ W in G, seeded from e_p1..e_pd in order
        let v = LagrangianFrame::vertical(d);
        let v_in_w = intersect(v.columns(), w, tol.rank_tol);
        let mut seeds = if v_in_w.ncols() > 0 {
            let ordered = &v_in_w * (v_in_w.transpose() * v.columns());
            let ordered = gram_schmidt(&ordered, 1e-8);
            gram_schmidt(&project_g(&ordered), 1e-8)
        } else {
            Mat::zeros(2 * d, 0)
        };

        let mut space = g.clone();
        let mut es: Vec<DVector<f64>> = Vec::with_capacity(m);
        let mut fs: Vec<DVector<f64>> = Vec::with_capacity(m);
        for _ in 0..m {
            let f = if seeds.ncols() > 0 {
                let f = seeds.column(0).into_owned();
                seeds = seeds.columns(1, seeds.ncols() - 1).into_owned();
                f
            } else {
                space.column(space.ncols() - 1).into_owned()
            };
            // e ∈ space maximising ω(e, f)
            let coeffs = DVector::from_iterator(
                space.ncols(),
                (0..space.ncols()).map(|j| omega(&space.column(j).into_owned(), &f)),
            );
            let mut e = &space * coeffs;
            let wf = omega(&e, &f);
            if wf.abs() < 1e-12 {
                return Err(MaslovError::NotCoisotropic { defect: wf.abs() });
            }
            e /= wf;
            let split = |x: &DVector<f64>| -> DVector<f64> {
                x - &e * omega(x, &f) + &f * omega(x, &e)
            };
            let cols: Vec<DVector<f64>> = (0..space.ncols()).map(|j| split(&space.column(j).into_owned())).collect();
            space = if cols.is_empty() {
                Mat::zeros(2 * d, 0)
            } else {
                orth_basis(&Mat::from_columns(&cols), 1e-8)
            };
            if seeds.ncols() > 0 {
                let cols: Vec<DVector<f64>> = (0..seeds.ncols()).map(|j| split(&seeds.column(j).into_owned())).collect();
                seeds = gram_schmidt(&Mat::from_columns(&cols), 1e-8);
            }
            es.push(e);
            fs.push(f);
        }
        let e = if m == 0 { Mat::zeros(2 * d, 0) } else { Mat::from_columns(&es) };
        let f = if m == 0 { Mat::zeros(2 * d, 0) } else { Mat::from_columns(&fs) };
        Ok(LinearReduction { data: data.clone(), e, f })
    }

    pub fn data(&self) -> &CoisotropicData {
        &self.data
    }

    /// Reduced coordinates of vectors of W (columns), as a 2m × n matrix.
    pub fn coordinates(&self, u: &Mat) -> Mat {
        let m = self.e.ncols();
        let x = omega_pairing(u, &self.f).transpose();
        let y = omega_pairing(&self.e, u);
        let mut out = Mat::zeros(2 * m, u.ncols());
        out.view_mut((0, 0), (m, u.ncols())).copy_from(&x);
        out.view_mut((m, 0), (m, u.ncols())).copy_from(&y);
        out
    }

    /// Smallest singular value of ω(W⊥, L): zero exactly when L meets W⊥.
    pub fn kernel_margin(&self, l: &LagrangianFrame) -> f64 {
        let wperp = &self.data.wperp;
        if wperp.ncols() == 0 {
            return f64::INFINITY;
        }
        singular_values(&omega_pairing(wperp, l.columns())).min()
    }

    /// Π_{W⊥}(L ∩ W) in the reduced symplectic basis.
    pub fn reduce(&self, l: &LagrangianFrame, tol: &Tolerances) -> Result<LagrangianFrame> {
        let d = self.data.dim;
        if l.dim() != d {
            return Err(MaslovError::DimensionMismatch("frame and W live in different spaces".into()));
        }
        let wperp = &self.data.wperp;
        if wperp.ncols() > 0 {
            let meet = intersect(l.columns(), wperp, tol.rank_tol);
            if meet.ncols() > 0 {
                return Err(MaslovError::MeetsKernel { dim: meet.ncols() });
            }
        }
        let m = self.e.ncols();
        if m == 0 {
            return Err(MaslovError::InvalidArgument("reduced space is zero-dimensional".into()));
        }
        // L ∩ W = {A x : ω(A x, W⊥) = 0}
        let lw = if wperp.ncols() == 0 {
            l.columns().clone()
        } else {
            let cons = omega_pairing(wperp, l.columns());
            let ker = null_space(&cons, tol.rank_tol);
            l.columns() * ker
        };
        if lw.ncols() != m {
            return Err(MaslovError::DimensionMismatch(format!(
                "dim(L ∩ W) = {}, expected {m}",
                lw.ncols()
            )));
        }
        let coords = self.coordinates(&lw);
        LagrangianFrame::with_tolerances(coords, tol)
    }
}

/// Classical Gram–Schmidt in column order, dropping dependent columns.
fn gram_schmidt(m: &Mat, tol: f64) -> Mat {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&v);
                v -= u * c;
            }
        }
        let n = v.norm();
        if n > tol {
            out.push(v / n);
        }
    }
    if out.is_empty() {
        Mat::zeros(m.nrows(), 0)
    } else {
        Mat::from_columns(&out)
    }
}

/// Orthonormal basis of span A ∩ span B.
pub fn intersect(a: &Mat, b: &Mat, rel_tol: f64) -> Mat {
    let n = a.nrows();
    let qa = orth_basis(a, rel_tol);
    let qb = orth_basis(b, rel_tol);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Mat::zeros(n, 0);
    }
    // x = qa s = qb t  ⇔  [qa, −qb] (s, t) = 0
    let mut stacked = Mat::zeros(n, qa.ncols() + qb.ncols());
    stacked.view_mut((0, 0), (n, qa.ncols())).copy_from(&qa);
    stacked.view_mut((0, qa.ncols()), (n, qb.ncols())).copy_from(&(-&qb));
    let ker = null_space(&stacked, rel_tol);
    if ker.ncols() == 0 {
        return Mat::zeros(n, 0);
    }
    let s_part = ker.rows(0, qa.ncols()).into_owned();
    orth_basis(&(qa * s_part), 1e-8)
}

/// Π_{W⊥}(L ∩ W) expressed in a fixed symplectic basis of W/W⊥.
pub fn linear_reduce(w: &CoisotropicData, l: &LagrangianFrame, tol: &Tolerances) -> Result<LagrangianFrame> {
    LinearReduction::new(w, tol)?.reduce(l, tol)
}

/// exp(A) by scaling and squaring with a fixed-order Taylor polynomial.
pub fn expm(a: &Mat) -> Mat {
    const ORDER: usize = 18;
    let n = a.nrows();
    let norm1 = (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(squarings);
    let mut sum = Mat::identity(n, n);
    let mut term = Mat::identity(n, n);
    for k in 1..=ORDER {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Random symmetric d × d matrix with standard normal entries (scaled).
pub fn random_symmetric(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Mat {
    let mut s = Mat::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x: f64 = StandardNormal.sample(rng);
            s[(i, j)] = x * scale;
            s[(j, i)] = x * scale;
        }
    }
    s
}

/// Random Hamiltonian matrix J·S (S symmetric 2d × 2d); exp of it is symplectic.
pub fn random_hamiltonian_matrix(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Mat {
    complex_structure(d) * random_symmetric(2 * d, scale, rng)
}

pub fn random_symplectic(d: usize, rng: &mut ChaCha8Rng) -> Mat {
    expm(&random_hamiltonian_matrix(d, 1.0, rng))
}

/// Generator scale for `random_lagrangian`: seeds 0..100 at d = 3 then reach
/// both min σ(q-block) ≈ 0.005 and max ≈ 0.9.
const RANDOM_FRAME_SCALE: f64 = 0.7;

/// Image of the horizontal under a random symplectic matrix; deterministic in `seed`.
pub fn random_lagrangian(d: usize, seed: u64) -> LagrangianFrame {
    assert!(d >= 1, "random_lagrangian needs d ≥ 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = expm(&random_hamiltonian_matrix(d, RANDOM_FRAME_SCALE, &mut rng));
    LagrangianFrame::from_orthonormal(canonical_q(&(m * LagrangianFrame::horizontal(d).columns())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(2 * d);
        v[i] = 1.0;
        v
    }

    fn cols(vs: &[DVector<f64>]) -> Mat {
        Mat::from_columns(vs)
    }

    #[test]
    fn lagrangian_examples() {
        assert!(is_lagrangian(&Mat::from_column_slice(2, 1, &[1.0, 0.0]), 1e-12).unwrap());
        // (e_q1, e_p2)
        assert!(is_lagrangian(&cols(&[e(2, 0), e(2, 3)]), 1e-12).unwrap());
        // (e_q1, e_p1): ω = 1
        assert!(!is_lagrangian(&cols(&[e(2, 0), e(2, 2)]), 1e-12).unwrap());
        assert!(matches!(
            is_lagrangian(&Mat::zeros(3, 2), 1e-12),
            Err(MaslovError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn omega_sign() {
        // ω(e_q, e_p) = +1
        assert_eq!(omega(&e(1, 0), &e(1, 1)), 1.0);
        let u = DVector::from_vec(vec![0.3, -1.2, 0.7, 2.0]);
        let v = DVector::from_vec(vec![1.1, 0.4, -0.5, 0.9]);
        let j = complex_structure(2);
        assert!((omega(&u, &v) - (&j * &u).dot(&v)).abs() < 1e-15);
        assert!((omega(&u, &(&j * &v)) - u.dot(&v)).abs() < 1e-15);
    }

    #[test]
    fn vertical_intersection_examples() {
        assert_eq!(vertical_intersection_dim(&LagrangianFrame::vertical(3), 1e-8), 3);
        assert_eq!(vertical_intersection_dim(&LagrangianFrame::horizontal(3), 1e-8), 0);
        let l = LagrangianFrame::new(cols(&[e(2, 2), e(2, 1)])).unwrap();
        assert_eq!(vertical_intersection_dim(&l, 1e-8), 1);
    }

    #[test]
    fn height_of_graph_over_horizontal() {
        let tol = Tolerances::default();
        let s = 0.7;
        let l2 = LagrangianFrame::graph(&Mat::from_element(1, 1, s)).unwrap();
        let q = height(&LagrangianFrame::vertical(1), &LagrangianFrame::horizontal(1), &l2, &tol).unwrap();
        assert!((q.matrix[(0, 0)] - s).abs() < 1e-14);
        assert_eq!((q.index, q.nullity, q.positive), (0, 0, 1));
    }

    #[test]
    fn height_of_equal_frames_vanishes() {
        let tol = Tolerances::default();
        let l = random_lagrangian(3, 5);
        let q = height(&LagrangianFrame::vertical(3), &l, &l, &tol).unwrap();
        assert!(q.matrix.amax() < 1e-12);
        assert_eq!(q.nullity, 3);
    }

    #[test]
    fn height_requires_transversality() {
        let tol = Tolerances::default();
        let err = height(
            &LagrangianFrame::vertical(1),
            &LagrangianFrame::horizontal(1),
            &LagrangianFrame::vertical(1),
            &tol,
        )
        .unwrap_err();
        assert!(matches!(err, MaslovError::NotTransverse { ref which, .. } if which == "L2"));
    }

    #[test]
    fn height_kernel_is_intersection() {
        let tol = Tolerances::default();
        // L1 = graph diag(1, 2), L2 = graph diag(1, -3): meet in the e_q1 direction
        let l1 = LagrangianFrame::graph(&Mat::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap();
        let l2 = LagrangianFrame::graph(&Mat::from_diagonal(&DVector::from_vec(vec![1.0, -3.0]))).unwrap();
        let q = height(&LagrangianFrame::vertical(2), &l1, &l2, &tol).unwrap();
        assert_eq!(q.nullity, 1);
        assert_eq!(q.index, 1);
    }

    #[test]
    fn signature_examples() {
        assert_eq!(signature(&Mat::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])), 1e-8).unwrap(), (1, 0));
        assert_eq!(signature(&Mat::zeros(3, 3), 1e-8).unwrap(), (0, 3));
        assert_eq!(signature(&Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1e-8).unwrap(), (1, 0));
        assert!(matches!(
            signature(&Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), 1e-8),
            Err(MaslovError::Asymmetric { .. })
        ));
    }

    #[test]
    fn reduce_whole_space_is_identity() {
        let tol = Tolerances::default();
        let w = CoisotropicData::new(Mat::identity(4, 4), &tol).unwrap();
        assert_eq!(w.wperp().ncols(), 0);
        let l = random_lagrangian(2, 11);
        let r = linear_reduce(&w, &l, &tol).unwrap();
        assert!(r.distance(&l) < 1e-10);
    }

    #[test]
    fn reduce_to_horizontal_line() {
        let tol = Tolerances::default();
        // W = {q2 = 0}, W⊥ = span e_p2
        let w = CoisotropicData::new(cols(&[e(2, 0), e(2, 2), e(2, 3)]), &tol).unwrap();
        assert_eq!(w.wperp().ncols(), 1);
        assert!((w.wperp()[(3, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(w.reduced_dim(), 2);
        let r = linear_reduce(&w, &LagrangianFrame::horizontal(2), &tol).unwrap();
        assert!(r.distance(&LagrangianFrame::horizontal(1)) < 1e-12);
    }

    #[test]
    fn reduce_rejects_kernel_meeting() {
        let tol = Tolerances::default();
        // W = {p2 = 0}, W⊥ = span e_q2 ⊂ horizontal
        let w = CoisotropicData::new(cols(&[e(2, 0), e(2, 1), e(2, 2)]), &tol).unwrap();
        let err = linear_reduce(&w, &LagrangianFrame::horizontal(2), &tol).unwrap_err();
        assert_eq!(err, MaslovError::MeetsKernel { dim: 1 });
    }

    #[test]
    fn random_lagrangian_is_deterministic_and_isotropic() {
        let a = random_lagrangian(3, 42);
        let b = random_lagrangian(3, 42);
        assert_eq!(a, b);
        assert!(is_lagrangian(a.columns(), 1e-9).unwrap());
        assert_ne!(a, random_lagrangian(3, 43));
    }

    #[test]
    fn random_lagrangian_covers_near_and_far_from_sigma() {
        let smins: Vec<f64> = (0..100)
            .map(|s| singular_values(&random_lagrangian(3, s).q_block()).min())
            .collect();
        let lo = smins.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = smins.iter().cloned().fold(0.0, f64::max);
        assert!(lo < 0.2, "min {lo}");
        assert!(hi > 0.8, "max {hi}");
    }

    #[test]
    fn expm_of_rotation_generator() {
        let j = complex_structure(1);
        let r = expm(&(&j * 0.3));
        assert!((r[(0, 0)] - 0.3f64.cos()).abs() < 1e-14);
        assert!((r[(1, 0)] - 0.3f64.sin()).abs() < 1e-14);
    }
}
