//! Dense complex eigensolvers for the small matrices that arise from
//! finite groups: a cyclic Jacobi method for Hermitian matrices and a
//! shifted-QR iteration (Hessenberg form, complex Givens) for general
//! complex matrices. Group orders stay below ~100, so clarity wins over
//! blocked algorithms.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Column-major-free simple dense matrix: row-major `n x n`.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi sweeps.
/// Input is assumed Hermitian; only the given entries are trusted up to
/// rounding. Returns eigenvalues sorted ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    let mut m = a.clone();
    if n == 0 {
        return Ok(vec![]);
    }
    let scale = m.frobenius().max(1e-300);
    let tol = 1e-15 * scale;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.at(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            let mut eigs: Vec<f64> = (0..n).map(|i| m.at(i, i).re).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                if apq.norm() <= tol * 1e-2 {
                    continue;
                }
                let app = m.at(p, p).re;
                let aqq = m.at(q, q).re;
                // Unitary 2x2 that zeroes the (p,q) entry.
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let c = theta.cos();
                let s = phase * theta.sin();
                // Columns: M <- M * J with J[[c, -s],[conj(s), c]] on (p,q).
                for i in 0..n {
                    let mip = m.at(i, p);
                    let miq = m.at(i, q);
                    m.set(i, p, mip * c + miq * s.conj());
                    m.set(i, q, -mip * s + miq * c);
                }
                // Rows: M <- J^H * M.
                for j in 0..n {
                    let mpj = m.at(p, j);
                    let mqj = m.at(q, j);
                    m.set(p, j, mpj * c + mqj * s);
                    m.set(q, j, -mpj * s.conj() + mqj * c);
                }
            }
        }
    }
    Err(CoreError::Structural(
        "Jacobi eigensolver did not converge".into(),
    ))
}

/// Largest singular value of a general complex matrix: sqrt of the top
/// eigenvalue of `A^H A` (Hermitian by construction).
pub fn max_singular_value(a: &CMatrix) -> Result<f64> {
    let ata = a.adjoint().matmul(a);
    let eigs = hermitian_eigenvalues(&ata)?;
    Ok(eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Eigenvalues of a general complex matrix via Hessenberg reduction and
/// explicit-shift QR with Wilkinson shifts. Returns eigenvalues in
/// deterministic (re, im) order.
pub fn complex_eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    let scale = h.frobenius().max(1e-300);
    let eps = f64::EPSILON * 4.0;

    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols [0, hi)
    let mut iters_since_deflation = 0usize;
    let mut total_iters = 0usize;
    let max_total = 300 * n + 1000;

    while hi > 0 {
        // Deflate all converged trailing 1x1 blocks.
        let mut deflated = true;
        while deflated && hi > 0 {
            deflated = false;
            if hi == 1 {
                eigs.push(h.at(0, 0));
                hi = 0;
                deflated = true;
                iters_since_deflation = 0;
            } else {
                let sub = h.at(hi - 1, hi - 2).norm();
                let diag = h.at(hi - 1, hi - 1).norm() + h.at(hi - 2, hi - 2).norm();
                if sub <= eps * diag.max(scale * 1e-3) {
                    eigs.push(h.at(hi - 1, hi - 1));
                    hi -= 1;
                    deflated = true;
                    iters_since_deflation = 0;
                }
            }
        }
        if hi == 0 {
            break;
        }
        // Find the start of the active unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = h.at(lo, lo - 1).norm();
            let diag = h.at(lo, lo).norm() + h.at(lo - 1, lo - 1).norm();
            if sub <= eps * diag.max(scale * 1e-3) {
                h.set(lo, lo - 1, Complex64::new(0.0, 0.0));
                break;
            }
            lo -= 1;
        }

        total_iters += 1;
        iters_since_deflation += 1;
        if total_iters > max_total {
            return Err(CoreError::Structural(
                "QR eigensolver did not converge".into(),
            ));
        }

        let shift = if iters_since_deflation % 24 == 0 {
            // Exceptional shift to break rare cycles.
            let m = h.at(hi - 1, hi - 2).norm() + if hi >= 3 { h.at(hi - 2, hi - 3).norm() } else { 0.0 };
            h.at(hi - 1, hi - 1) + Complex64::new(1.25 * m, 0.5 * m)
        } else {
            wilkinson_shift(&h, hi)
        };

        qr_step(&mut h, lo, hi, shift);
    }

    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(eigs)
}

fn hessenberg_in_place(h: &mut CMatrix) {
    let n = h.n;
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal.
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += h.at(i, k).norm_sqr();
        }
        let norm = norm2.sqrt();
        if norm <= 1e-300 {
            continue;
        }
        let x0 = h.at(k + 1, k);
        let alpha = if x0.norm() > 0.0 {
            -(x0 / x0.norm()) * norm
        } else {
            Complex64::new(-norm, 0.0)
        };
        let mut v: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
        v[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            v[i] = h.at(i, k);
        }
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 <= 1e-300 {
            continue;
        }
        // H = I - 2 v v^H / ||v||^2; apply from both sides.
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in (k + 1)..n {
                dot += v[i].conj() * h.at(i, j);
            }
            let f = 2.0 * dot / vnorm2;
            for i in (k + 1)..n {
                let val = h.at(i, j) - f * v[i];
                h.set(i, j, val);
            }
        }
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                dot += h.at(i, j) * v[j];
            }
            let f = 2.0 * dot / vnorm2;
            for j in (k + 1)..n {
                let val = h.at(i, j) - f * v[j].conj();
                h.set(i, j, val);
            }
        }
        for i in (k + 2)..n {
            h.set(i, k, Complex64::new(0.0, 0.0));
        }
    }
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h.at(hi - 2, hi - 2);
    let b = h.at(hi - 2, hi - 1);
    let c = h.at(hi - 1, hi - 2);
    let d = h.at(hi - 1, hi - 1);
    let tr2 = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr2 * tr2 - det).sqrt();
    let l1 = tr2 + disc;
    let l2 = tr2 - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit-shift QR step on the active Hessenberg block [lo, hi).
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: Complex64) {
    let n = h.n;
    for i in lo..hi {
        let v = h.at(i, i) - shift;
        h.set(i, i, v);
    }
    // QR by Givens rotations on the subdiagonal.
    let mut rotations: Vec<(usize, Complex64, Complex64)> = Vec::with_capacity(hi - lo);
    for k in lo..(hi - 1) {
        let a = h.at(k, k);
        let b = h.at(k + 1, k);
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if r <= 1e-300 {
            rotations.push((k, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
            continue;
        }
        let c = a.conj() / r;
        let s = b.conj() / r;
        // Rows k, k+1: [c s; -conj(s) conj(c)] has G [a; b] = [r; 0].
        for j in k..n {
            let hk = h.at(k, j);
            let hk1 = h.at(k + 1, j);
            h.set(k, j, c * hk + s * hk1);
            h.set(k + 1, j, -s.conj() * hk + c.conj() * hk1);
        }
        rotations.push((k, c, s));
    }
    // RQ: apply adjoint rotations on columns.
    for &(k, c, s) in &rotations {
        let upper = (k + 2).min(hi);
        for i in lo..upper.min(n) {
            let hik = h.at(i, k);
            let hik1 = h.at(i, k + 1);
            h.set(i, k, hik * c.conj() + hik1 * s.conj());
            h.set(i, k + 1, -hik * s + hik1 * c);
        }
    }
    for i in lo..hi {
        let v = h.at(i, i) + shift;
        h.set(i, i, v);
    }
}

/// Nontrivial kernel vector of a matrix (if any) by Gaussian elimination
/// with partial pivoting; `tol` is the pivot threshold relative to the
/// largest entry.
pub fn kernel_vector(a: &CMatrix, tol: f64) -> Option<Vec<Complex64>> {
    let n = a.n;
    let mut m = a.clone();
    let scale = m
        .data
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let thresh = tol * scale;
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..n {
        // Find pivot.
        let mut best = row;
        for i in row..n {
            if m.at(i, col).norm() > m.at(best, col).norm() {
                best = i;
            }
        }
        if m.at(best, col).norm() <= thresh {
            continue; // free column
        }
        if best != row {
            for j in 0..n {
                let t = m.at(row, j);
                m.set(row, j, m.at(best, j));
                m.set(best, j, t);
            }
        }
        let piv = m.at(row, col);
        for i in (row + 1)..n {
            let f = m.at(i, col) / piv;
            if f.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.at(i, j) - f * m.at(row, j);
                m.set(i, j, v);
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    if pivot_cols.len() == n {
        return None;
    }
    // Choose the first free column, back-substitute.
    let free = (0..n).find(|c| !pivot_cols.contains(c))?;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[free] = Complex64::new(1.0, 0.0);
    for (r, &pc) in pivot_cols.iter().enumerate().rev() {
        let mut s = Complex64::new(0.0, 0.0);
        for j in (pc + 1)..n {
            s += m.at(r, j) * x[j];
        }
        x[pc] = -s / m.at(r, pc);
    }
    Some(x)
}
