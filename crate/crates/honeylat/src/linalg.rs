//! Thin dense and banded linear algebra over LAPACK, plus a shift-invert Lanczos driver.

use crate::error::{Error, Result};
use lapack_sys as lp;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::os::raw::{c_char, c_int};

pub type C64 = Complex64;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

pub type CMat = Mat<C64>;
pub type RMat = Mat<f64>;

impl<T: Copy + Default> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i + j * self.rows]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i + j * self.rows]
    }
}

impl CMat {
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// max |A_ij − conj(A_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.cols {
            for i in 0..=j.min(self.rows - 1) {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl RMat {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }
}

pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigRange {
    All,
    /// zero-based inclusive index range in ascending order
    Index(usize, usize),
    /// half-open value interval (lo, hi]
    Value(f64, f64),
}

#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<f64>,
    pub vectors: Mat<T>,
}

fn range_args(range: EigRange, n: usize) -> Result<(c_char, f64, f64, c_int, c_int)> {
    Ok(match range {
        EigRange::All => (b'A' as c_char, 0.0, 0.0, 1, n as c_int),
        EigRange::Index(lo, hi) => {
            if lo > hi || hi >= n {
                return Err(Error::InvalidArgument(format!(
                    "eigen index range {lo}..={hi} outside dimension {n}"
                )));
            }
            (b'I' as c_char, 0.0, 0.0, lo as c_int + 1, hi as c_int + 1)
        }
        EigRange::Value(lo, hi) => (b'V' as c_char, lo, hi, 1, n as c_int),
    })
}

/// Eigenpairs of a Hermitian matrix (lower triangle referenced).
pub fn eigh_complex(a: &CMat, range: EigRange) -> Result<Eigen<C64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    if a.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let (rng, vl, vu, il, iu) = range_args(range, n)?;
    let mut work_a = a.data.clone();
    let nn = n as c_int;
    let mut m: c_int = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![C64::new(0.0, 0.0); n * n];
    let mut isuppz = vec![0 as c_int; 2 * n];
    let abstol = 0.0;
    let mut info: c_int = 0;
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let mut lwork: c_int = -1;
    let mut lrwork: c_int = -1;
    let mut liwork: c_int = -1;
    let mut wq = [C64::new(0.0, 0.0)];
    let mut rq = [0.0];
    let mut iq = [0 as c_int];
    unsafe {
        lp::zheevr_(
            &jobz, &rng, &uplo, &nn,
            work_a.as_mut_ptr() as *mut _, &nn, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr() as *mut _, &nn, isuppz.as_mut_ptr(),
            wq.as_mut_ptr() as *mut _, &lwork, rq.as_mut_ptr(), &lrwork,
            iq.as_mut_ptr(), &liwork, &mut info,
        );
    }
    lwork = wq[0].re as c_int;
    lrwork = rq[0] as c_int;
    liwork = iq[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lp::zheevr_(
            &jobz, &rng, &uplo, &nn,
            work_a.as_mut_ptr() as *mut _, &nn, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr() as *mut _, &nn, isuppz.as_mut_ptr(),
            work.as_mut_ptr() as *mut _, &lwork, rwork.as_mut_ptr(), &lrwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numeric(format!("zheevr failed with info = {info} (n = {n})")));
    }
    let m = m as usize;
    w.truncate(m);
    z.truncate(m * n);
    Ok(Eigen {
        values: w,
        vectors: Mat {
            rows: n,
            cols: m,
            data: z,
        },
    })
}

/// Eigenpairs of a real symmetric matrix with a simple spectrum, through the complex solver.
/// The real drivers (dsyevr, dsyevd, dsyevx) of the system OpenBLAS return wrong eigenvectors
/// above n ≈ 200, so they are not used. Each vector is rotated to its real form.
pub fn eigh_real(a: &RMat, range: EigRange) -> Result<Eigen<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let c = CMat {
        rows: n,
        cols: n,
        data: a.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
    };
    let e = eigh_complex(&c, range)?;
    let m = e.values.len();
    let mut data = Vec::with_capacity(m * n);
    for k in 0..m {
        let col = e.vectors.col(k);
        let big = col.iter().fold(C64::new(0.0, 0.0), |acc, z| if z.norm() > acc.norm() { *z } else { acc });
        let ph = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
        let re: Vec<f64> = col.iter().map(|z| (z * ph).re).collect();
        let nr = re.iter().map(|x| x * x).sum::<f64>().sqrt();
        data.extend(re.iter().map(|x| x / nr));
    }
    Ok(Eigen {
        values: e.values,
        vectors: Mat { rows: n, cols: m, data },
    })
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (bisection, so only the requested part of the spectrum is computed).
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64], range: EigRange) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(vec![]);
    }
    if e.len() + 1 != n {
        return Err(Error::InvalidArgument("off-diagonal length must be n - 1".into()));
    }
    let (rng, vl, vu, il, iu) = range_args(range, n)?;
    let order = b'E' as c_char;
    let nn = n as c_int;
    let abstol = 0.0;
    let mut m: c_int = 0;
    let mut nsplit: c_int = 0;
    let mut w = vec![0.0; n];
    let mut iblock = vec![0 as c_int; n];
    let mut isplit = vec![0 as c_int; n];
    let mut work = vec![0.0; 4 * n];
    let mut iwork = vec![0 as c_int; 3 * n];
    let mut info: c_int = 0;
    let mut e_pad = e.to_vec();
    e_pad.push(0.0);
    unsafe {
        lp::dstebz_(
            &rng, &order, &nn, &vl, &vu, &il, &iu, &abstol, d.as_ptr(), e_pad.as_ptr(), &mut m,
            &mut nsplit, w.as_mut_ptr(), iblock.as_mut_ptr(), isplit.as_mut_ptr(),
            work.as_mut_ptr(), iwork.as_mut_ptr(), &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numeric(format!("dstebz failed with info = {info} (n = {n})")));
    }
    w.truncate(m as usize);
    w.sort_by(|a, b| a.total_cmp(b));
    Ok(w)
}

/// Dense complex LU factorization.
pub struct Lu {
    n: usize,
    factors: Vec<C64>,
    ipiv: Vec<c_int>,
}

impl Lu {
    pub fn new(a: CMat) -> Result<Self> {
        let n = a.rows;
        let nn = n as c_int;
        let mut factors = a.data;
        let mut ipiv = vec![0 as c_int; n];
        let mut info: c_int = 0;
        unsafe {
            lp::zgetrf_(&nn, &nn, factors.as_mut_ptr() as *mut _, &nn, ipiv.as_mut_ptr(), &mut info);
        }
        if info != 0 {
            return Err(Error::Numeric(format!("zgetrf failed with info = {info}")));
        }
        Ok(Self { n, factors, ipiv })
    }

    pub fn solve(&self, b: &mut [C64]) -> Result<()> {
        solve_many(self, b, 1)
    }
}

fn solve_many(lu: &Lu, b: &mut [C64], nrhs: usize) -> Result<()> {
    let nn = lu.n as c_int;
    let nr = nrhs as c_int;
    let trans = b'N' as c_char;
    let mut info: c_int = 0;
    unsafe {
        lp::zgetrs_(
            &trans, &nn, &nr, lu.factors.as_ptr() as *const _, &nn, lu.ipiv.as_ptr(),
            b.as_mut_ptr() as *mut _, &nn, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numeric(format!("zgetrs failed with info = {info}")));
    }
    Ok(())
}

/// Complex banded matrix in LAPACK band storage, factorized in place.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<C64>,
    ipiv: Vec<c_int>,
}

/// Band storage builder: entries (i, j) with −kl ≤ i − j ≤ ku... stored as AB(kl + ku + i − j, j).
pub struct BandedMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ab: Vec<C64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            ab: vec![C64::new(0.0, 0.0); (2 * kl + ku + 1) * n],
        }
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    /// Adds v at (i, j); panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let off = self.kl + self.ku + i - j;
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "entry ({i},{j}) outside band");
        let ld = self.ldab();
        self.ab[off + j * ld] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i + self.ku < j || j + self.kl < i {
            return C64::new(0.0, 0.0);
        }
        self.ab[self.kl + self.ku + i - j + j * self.ldab()]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        let ld = self.ldab();
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let xj = x[j];
            for i in lo..=hi {
                y[i] += self.ab[self.kl + self.ku + i - j + j * ld] * xj;
            }
        }
        y
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = Self {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            ab: self.ab.clone(),
        };
        for j in 0..self.n {
            out.add(j, j, C64::new(-shift, 0.0));
        }
        out
    }

    pub fn factorize(self) -> Result<BandedLu> {
        let n = self.n as c_int;
        let kl = self.kl as c_int;
        let ku = self.ku as c_int;
        let ld = self.ldab() as c_int;
        let mut ab = self.ab;
        let mut ipiv = vec![0 as c_int; self.n];
        let mut info: c_int = 0;
        unsafe {
            lp::zgbtrf_(&n, &n, &kl, &ku, ab.as_mut_ptr() as *mut _, &ld, ipiv.as_mut_ptr(), &mut info);
        }
        if info != 0 {
            return Err(Error::Numeric(format!("zgbtrf failed with info = {info}")));
        }
        Ok(BandedLu {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            ab,
            ipiv,
        })
    }
}

impl BandedLu {
    pub fn solve(&self, b: &mut [C64]) -> Result<()> {
        let n = self.n as c_int;
        let kl = self.kl as c_int;
        let ku = self.ku as c_int;
        let ld = (2 * self.kl + self.ku + 1) as c_int;
        let one: c_int = 1;
        let trans = b'N' as c_char;
        let mut info: c_int = 0;
        unsafe {
            lp::zgbtrs_(
                &trans, &n, &kl, &ku, &one, self.ab.as_ptr() as *const _, &ld,
                self.ipiv.as_ptr(), b.as_mut_ptr() as *mut _, &n, &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Numeric(format!("zgbtrs failed with info = {info}")));
        }
        Ok(())
    }
}

/// Something that applies (A − σ)⁻¹.
pub trait ShiftedSolver {
    fn solve_in_place(&self, b: &mut [C64]) -> Result<()>;
}

impl ShiftedSolver for Lu {
    fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        self.solve(b)
    }
}

impl ShiftedSolver for BandedLu {
    fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        self.solve(b)
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub nev: usize,
    pub max_dim: usize,
    /// residual tolerance relative to 1 + |E|
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            nev: 8,
            max_dim: 240,
            tol: 1e-9,
            seed: 7,
        }
    }
}

/// The `nev` eigenpairs of a Hermitian operator nearest `shift`, by Lanczos on (A − σ)⁻¹ with full
/// reorthogonalization. `apply` computes A x for residual checks.
pub fn shift_invert_lanczos(
    n: usize,
    shift: f64,
    solver: &dyn ShiftedSolver,
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    opts: LanczosOptions,
) -> Result<Vec<Eigenpair>> {
    let nev = opts.nev.min(n);
    let max_dim = opts.max_dim.min(n).max(nev);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = cnorm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alpha: Vec<f64> = vec![];
    let mut beta: Vec<f64> = vec![];
    let mut next_check = (2 * nev + 10).min(max_dim);
    loop {
        let j = basis.len() - 1;
        let mut w = basis[j].clone();
        solver.solve_in_place(&mut w)?;
        // two passes of classical Gram–Schmidt against the whole basis
        let mut a_j = 0.0;
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = cdot(b, &w);
                if i == j {
                    a_j += c.re;
                }
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        alpha.push(a_j);
        let b_j = cnorm(&w);
        let dim = basis.len();
        if dim >= next_check || dim == max_dim || b_j < 1e-14 {
            let pairs = ritz(&alpha, &beta, &basis, nev)?;
            let mut out = Vec::with_capacity(pairs.len());
            let mut worst: f64 = 0.0;
            for (theta, x) in pairs {
                if theta.abs() < 1e-300 {
                    continue;
                }
                let e = shift + 1.0 / theta;
                let ax = apply(&x);
                let r = cnorm(
                    &ax.iter().zip(&x).map(|(a, b)| a - e * b).collect::<Vec<_>>(),
                );
                worst = worst.max(r / (1.0 + e.abs()));
                out.push(Eigenpair {
                    value: e,
                    vector: x,
                    residual: r,
                });
            }
            if worst <= opts.tol || dim == max_dim || b_j < 1e-14 {
                if worst > opts.tol && b_j >= 1e-14 {
                    return Err(Error::Numeric(format!(
                        "shift-invert Lanczos stalled at dimension {dim} with residual {worst:e}"
                    )));
                }
                out.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
                return Ok(out);
            }
            next_check = (next_check + nev.max(10)).min(max_dim);
        }
        beta.push(b_j);
        w.iter_mut().for_each(|x| *x /= b_j);
        basis.push(w);
    }
}

fn ritz(
    alpha: &[f64],
    beta: &[f64],
    basis: &[Vec<C64>],
    nev: usize,
) -> Result<Vec<(f64, Vec<C64>)>> {
    let m = alpha.len();
    let mut t = RMat::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i + 1, i)] = beta[i];
            t[(i, i + 1)] = beta[i];
        }
    }
    let eig = eigh_real(&t, EigRange::All)?;
    // largest |θ| ↔ nearest to the shift
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.values[b].abs().partial_cmp(&eig.values[a].abs()).unwrap());
    let n = basis[0].len();
    Ok(order
        .into_iter()
        .take(nev.min(m))
        .map(|k| {
            let y = eig.vectors.col(k);
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (c, b) in y.iter().zip(basis) {
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += *c * bi);
            }
            let nx = cnorm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            (eig.values[k], x)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = CMat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = if i == j {
                    C64::new(rng.gen::<f64>(), 0.0)
                } else {
                    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                };
                a[(i, j)] = v;
                a[(j, i)] = v.conj();
            }
        }
        a
    }

    #[test]
    fn hermitian_eigenpairs_have_small_residuals() {
        let a = random_hermitian(40, 1);
        let e = eigh_complex(&a, EigRange::All).unwrap();
        assert_eq!(e.values.len(), 40);
        for k in 0..40 {
            let x = e.vectors.col(k);
            let ax = a.matvec(x);
            let r: f64 = ax
                .iter()
                .zip(x)
                .map(|(u, v)| (u - e.values[k] * v).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-12);
        }
        let sub = eigh_complex(&a, EigRange::Index(2, 4)).unwrap();
        assert_eq!(sub.values.len(), 3);
        assert!((sub.values[0] - e.values[2]).abs() < 1e-12);
    }

    #[test]
    fn real_symmetric_eigenvectors_above_blocking_size() {
        let n = 300;
        let h = random_hermitian(n, 5);
        let mut a = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = h[(i, j)].re + h[(j, i)].re;
            }
            a[(i, i)] += 1000.0 * i as f64;
        }
        let e = eigh_real(&a, EigRange::All).unwrap();
        for k in 0..n {
            let x = e.vectors.col(k);
            let r: f64 = (0..n)
                .map(|i| ((0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() - e.values[k] * x[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-13 * 1000.0 * n as f64, "{k}: {r:e}");
        }
    }

    #[test]
    fn lu_solves() {
        let a = random_hermitian(30, 2);
        let x: Vec<C64> = (0..30).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut b = a.matvec(&x);
        Lu::new(a).unwrap().solve(&mut b).unwrap();
        let err: f64 = b.iter().zip(&x).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn banded_matches_dense_and_lanczos_finds_interior_values() {
        let n = 200;
        let mut band = BandedMatrix::zeros(n, 2, 2);
        let mut dense = CMat::zeros(n, n);
        for i in 0..n {
            let d = C64::new((i as f64 * 0.37).sin() * 3.0, 0.0);
            band.add(i, i, d);
            dense[(i, i)] = d;
            for off in 1..=2 {
                if i + off < n {
                    let v = C64::new(0.5 / off as f64, 0.2 * off as f64);
                    band.add(i, i + off, v);
                    band.add(i + off, i, v.conj());
                    dense[(i, i + off)] = v;
                    dense[(i + off, i)] = v.conj();
                }
            }
        }
        let exact = eigh_complex(&dense, EigRange::All).unwrap().values;
        let shift = 0.3;
        let lu = band.shifted(shift).factorize().unwrap();
        let pairs = shift_invert_lanczos(
            n,
            shift,
            &lu,
            &|x| band.matvec(x),
            LanczosOptions {
                nev: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let mut nearest = exact.clone();
        nearest.sort_by(|a, b| (a - shift).abs().partial_cmp(&(b - shift).abs()).unwrap());
        let mut want: Vec<f64> = nearest[..4].to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, w) in pairs.iter().zip(&want) {
            assert!((p.value - w).abs() < 1e-9, "{} vs {}", p.value, w);
        }
    }

    #[test]
    fn tridiagonal_laplacian() {
        let n = 50;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let w = tridiagonal_eigenvalues(&d, &e, EigRange::Index(0, 2)).unwrap();
        for (j, x) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((x - exact).abs() < 1e-12);
        }
        assert!(tridiagonal_eigenvalues(&d, &e, EigRange::Value(-1.0, 0.0)).unwrap().is_empty());
    }
}
