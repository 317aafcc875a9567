//! Convolution operators `lambda_p(mu)` and `rho_p(mu)` as exactly
//! windowed linear maps on `l^p(G)`: application, operator-norm
//! estimation (exact matrices on finite groups, certified lower/upper
//! sandwiches elsewhere) and the Cesàro-mean iteration engine.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eig::{hermitian_eigenvalues, CMatrix};
use crate::error::{CoreError, Result};
use crate::group::{Element, GroupHandle};
use crate::measure::{Measure, MemoryGuard, DEDUP_EPSILON};
use crate::util::{KahanSum, TriState};

/// The exponent of an `l^p` space, `1 <= p <= infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(LpExponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(LpExponent::Finite(p))
        } else {
            Err(CoreError::InvalidInput(format!(
                "p must lie in [1, infinity], got {p}"
            )))
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            LpExponent::Finite(p) => *p,
            LpExponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_two(&self) -> bool {
        matches!(self, LpExponent::Finite(p) if (*p - 2.0).abs() < 1e-12)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, LpExponent::Finite(p) if (*p - 1.0).abs() < 1e-12)
    }
}

impl std::fmt::Display for LpExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpExponent::Finite(p) => write!(f, "{p}"),
            LpExponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Which side the convolution acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorSide {
    /// `lambda_p(mu) f = mu * f`.
    Left,
    /// `rho_p(mu) f (s) = sum_u f(su) mu(u)` (discrete: modular function 1).
    Right,
}

/// A finitely supported vector in `l^p(G)`.
#[derive(Debug, Clone)]
pub struct SupportedVector {
    group: Arc<GroupHandle>,
    atoms: BTreeMap<Element, Complex64>,
}

impl SupportedVector {
    pub fn new(
        group: Arc<GroupHandle>,
        atoms: impl IntoIterator<Item = (Element, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Element, Complex64> = BTreeMap::new();
        for (e, c) in atoms {
            group.check_element(&e)?;
            *map.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| c.norm() > DEDUP_EPSILON);
        Ok(SupportedVector { group, atoms: map })
    }

    pub fn dirac(group: Arc<GroupHandle>, at: Element) -> Result<Self> {
        Self::new(group, [(at, Complex64::new(1.0, 0.0))])
    }

    pub fn zero(group: Arc<GroupHandle>) -> Self {
        SupportedVector {
            group,
            atoms: BTreeMap::new(),
        }
    }

    pub fn from_measure(mu: &Measure) -> Self {
        SupportedVector {
            group: mu.group().clone(),
            atoms: mu.atoms().map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn group(&self) -> &Arc<GroupHandle> {
        &self.group
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Element, &Complex64)> {
        self.atoms.iter()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn coeff(&self, e: &Element) -> Complex64 {
        self.atoms.get(e).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn norm(&self, p: LpExponent) -> f64 {
        match p {
            LpExponent::Infinity => self.atoms.values().map(|c| c.norm()).fold(0.0, f64::max),
            LpExponent::Finite(p) if (p - 2.0).abs() < 1e-12 => {
                let mut acc = KahanSum::new();
                for c in self.atoms.values() {
                    acc.add(c.norm_sqr());
                }
                acc.value().sqrt()
            }
            LpExponent::Finite(p) => {
                let mut acc = KahanSum::new();
                for c in self.atoms.values() {
                    acc.add(c.norm().powf(p));
                }
                acc.value().powf(1.0 / p)
            }
        }
    }

    /// Sum of all coefficients (the Haar integral against counting measure).
    pub fn mass(&self) -> Complex64 {
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for c in self.atoms.values() {
            re.add(c.re);
            im.add(c.im);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn scale(&self, c: Complex64) -> SupportedVector {
        let mut atoms: BTreeMap<Element, Complex64> = self
            .atoms
            .iter()
            .map(|(e, v)| (e.clone(), v * c))
            .collect();
        atoms.retain(|_, v| v.norm() > DEDUP_EPSILON);
        SupportedVector {
            group: self.group.clone(),
            atoms,
        }
    }

    pub fn add_scaled(&self, other: &SupportedVector, c: Complex64) -> Result<SupportedVector> {
        self.compatible(other)?;
        let mut atoms = self.atoms.clone();
        for (e, v) in &other.atoms {
            *atoms.entry(e.clone()).or_insert(Complex64::new(0.0, 0.0)) += v * c;
        }
        atoms.retain(|_, v| v.norm() > DEDUP_EPSILON);
        Ok(SupportedVector {
            group: self.group.clone(),
            atoms,
        })
    }

    pub fn sub(&self, other: &SupportedVector) -> Result<SupportedVector> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// The isometry `U f (s) = f(s^{-1})` that intertwines the left and
    /// right convolution operators on discrete groups.
    pub fn flip(&self) -> SupportedVector {
        let atoms = self
            .atoms
            .iter()
            .map(|(e, v)| (self.group.inverse_unchecked(e), *v))
            .collect();
        SupportedVector {
            group: self.group.clone(),
            atoms,
        }
    }

    fn compatible(&self, other: &SupportedVector) -> Result<()> {
        if Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group {
            Ok(())
        } else {
            Err(CoreError::GroupMismatch {
                left: self.group.label.clone(),
                right: other.group.label.clone(),
            })
        }
    }
}

/// Certified interval `[lo, hi]` for a norm or spectral radius.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo: lo.min(hi), hi }
    }
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Norm-estimation method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// Build the full |G| x |G| matrix; exact for p in {1, 2, inf}.
    ExactMatrix,
    /// Singular-value power iteration on a windowed domain (p = 2).
    Power2,
    /// Dual-ascent power method for general 1 < p < infinity (lower bound).
    BoydP,
    /// Monotone-in-radius windowed lower bound, dispatching on p.
    WindowLower,
}

/// Options shared by the iterative norm estimators.
#[derive(Debug, Clone)]
pub struct NormOptions {
    /// Window radius (in support generators) for infinite groups.
    pub radius: usize,
    /// Iteration budget per start vector.
    pub iters: usize,
    /// Number of random restarts for the dual-ascent method.
    pub restarts: usize,
    pub seed: u64,
    pub guard: MemoryGuard,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            radius: 6,
            iters: 300,
            restarts: 8,
            seed: 0xC35A_0001,
            guard: MemoryGuard::default(),
        }
    }
}

/// A convolution operator with its acting exponent and side.
#[derive(Debug, Clone)]
pub struct ConvOperator {
    measure: Measure,
    p: LpExponent,
    side: OperatorSide,
    max_step_growth: usize,
}

impl ConvOperator {
    pub fn new(measure: Measure, p: LpExponent, side: OperatorSide) -> Self {
        let max_step_growth = measure.max_step_growth();
        ConvOperator {
            measure,
            p,
            side,
            max_step_growth,
        }
    }

    pub fn left(measure: Measure, p: LpExponent) -> Self {
        Self::new(measure, p, OperatorSide::Left)
    }

    pub fn right(measure: Measure, p: LpExponent) -> Self {
        Self::new(measure, p, OperatorSide::Right)
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn p(&self) -> LpExponent {
        self.p
    }

    pub fn side(&self) -> OperatorSide {
        self.side
    }

    pub fn max_step_growth(&self) -> usize {
        self.max_step_growth
    }

    /// Applies the operator exactly; the result's support is tracked
    /// without truncation (supports grow by at most `max_step_growth`).
    pub fn apply_guarded(&self, f: &SupportedVector, guard: MemoryGuard) -> Result<SupportedVector> {
        if !(Arc::ptr_eq(self.measure.group(), &f.group) || **self.measure.group() == *f.group) {
            return Err(CoreError::GroupMismatch {
                left: self.measure.group().label.clone(),
                right: f.group.label.clone(),
            });
        }
        let group = self.measure.group();
        let mut atoms: BTreeMap<Element, Complex64> = BTreeMap::new();
        for (x, c) in self.measure.atoms() {
            let shift = match self.side {
                OperatorSide::Left => x.clone(),
                OperatorSide::Right => group.inverse_unchecked(x),
            };
            for (t, v) in &f.atoms {
                let s = match self.side {
                    OperatorSide::Left => group.mul_unchecked(&shift, t),
                    OperatorSide::Right => group.mul_unchecked(t, &shift),
                };
                *atoms.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c * v;
                if atoms.len() > guard.max_atoms {
                    return Err(CoreError::Resource {
                        what: "operator application support".into(),
                        needed: atoms.len(),
                        budget: guard.max_atoms,
                    });
                }
            }
        }
        atoms.retain(|_, v| v.norm() > DEDUP_EPSILON);
        Ok(SupportedVector {
            group: f.group.clone(),
            atoms,
        })
    }

    pub fn apply(&self, f: &SupportedVector) -> Result<SupportedVector> {
        self.apply_guarded(f, MemoryGuard::default())
    }

    /// The |G| x |G| matrix of the operator on a finite group.
    pub fn matrix(&self) -> Result<CMatrix> {
        conv_matrix(&self.measure, self.side)
    }

    /// Certified `[lo, hi]` interval for the operator norm.
    ///
    /// `lo` is always a realized quotient `||T f||_p / ||f||_p` (or an exact
    /// matrix norm); `hi` comes from `||mu||`, exact matrix norms, or the
    /// strong Haagerup bound on free groups. For p = 1 and p = infinity the
    /// norm equals `||mu||` exactly.
    pub fn operator_norm(&self, method: NormMethod, opts: &NormOptions) -> Result<Interval> {
        let tv = self.measure.total_variation();
        if self.measure.is_zero() {
            return Ok(Interval::point(0.0));
        }
        // p = 1 and p = inf: the operator norm is the total variation.
        if self.p.is_one() || self.p == LpExponent::Infinity {
            return Ok(Interval::point(tv));
        }
        let mut hi = tv;
        let mut exact2: Option<f64> = None;
        if self.p.is_two() {
            if let Some(b) = strong_haagerup_norm_bound(&self.measure) {
                hi = hi.min(b);
            }
            if let Some(v) = free_generator_norm(&self.measure) {
                hi = hi.min(v);
                exact2 = Some(v);
            }
        }
        let finite = self.measure.group().order().is_some();
        match method {
            NormMethod::ExactMatrix => {
                if !finite {
                    return Err(CoreError::Unsupported(
                        "exact_matrix needs a finite group".into(),
                    ));
                }
                let m = self.matrix()?;
                if self.p.is_two() {
                    let ata = m.adjoint().matmul(&m);
                    let eigs = hermitian_eigenvalues(&ata)?;
                    let sigma = eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt();
                    Ok(Interval::point(sigma.min(hi)))
                } else {
                    // General finite p: certified lower bound from dual
                    // ascent over the whole group, upper bound from ||mu||.
                    let lo = self.window_lower_bound(opts)?;
                    Ok(Interval::new(lo, hi))
                }
            }
            NormMethod::Power2 => {
                if !self.p.is_two() {
                    return Err(CoreError::Unsupported(
                        "power2 is only valid for p = 2".into(),
                    ));
                }
                let lo = self.window_lower_bound(opts)?.max(exact2.unwrap_or(0.0));
                Ok(Interval::new(lo.min(hi), hi))
            }
            NormMethod::BoydP => {
                match self.p {
                    LpExponent::Finite(p) if p > 1.0 => {}
                    _ => {
                        return Err(CoreError::Unsupported(
                            "boyd_p needs 1 < p < infinity".into(),
                        ))
                    }
                }
                let lo = self.window_lower_bound(opts)?;
                Ok(Interval::new(lo.min(hi), hi))
            }
            NormMethod::WindowLower => {
                let lo = self.window_lower_bound(opts)?.max(exact2.unwrap_or(0.0));
                Ok(Interval::new(lo.min(hi), hi))
            }
        }
    }

    /// Largest realized quotient over vectors supported in the window
    /// `ball(radius)`; monotone nondecreasing in the radius.
    pub fn window_lower_bound(&self, opts: &NormOptions) -> Result<f64> {
        let window = Window::build(&self.measure, self.side, opts.radius, opts.guard)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let best = match self.p {
            LpExponent::Finite(p) if (p - 2.0).abs() < 1e-12 => {
                window.singular_power_iteration(opts.iters, &mut rng)
            }
            LpExponent::Finite(p) => window.dual_ascent(p, opts.iters, opts.restarts, &mut rng),
            LpExponent::Infinity => self.measure.total_variation(),
        };
        Ok(best)
    }

    /// Evaluates the quotient `||T f||_p / ||f||_p` for one vector: a
    /// certified lower bound for the operator norm.
    pub fn rayleigh_quotient(&self, f: &SupportedVector) -> Result<f64> {
        let nf = f.norm(self.p);
        if nf <= DEDUP_EPSILON {
            return Err(CoreError::InvalidInput("zero test vector".into()));
        }
        Ok(self.apply(f)?.norm(self.p) / nf)
    }
}

/// `M[s, t] = mu(s t^{-1})` for the left operator on a finite group
/// (`M[s, t] = mu(t^{-1} s)` for the right one).
pub fn conv_matrix(mu: &Measure, side: OperatorSide) -> Result<CMatrix> {
    let group = mu.group();
    let n = group.order().ok_or_else(|| {
        CoreError::Unsupported("convolution matrix needs a finite group".into())
    })?;
    let elems = group.elements().expect("finite");
    let mut m = CMatrix::zeros(n);
    for (s_idx, s) in elems.iter().enumerate() {
        for (t_idx, t) in elems.iter().enumerate() {
            let arg = match side {
                OperatorSide::Left => group.mul_unchecked(s, &group.inverse_unchecked(t)),
                OperatorSide::Right => group.mul_unchecked(&group.inverse_unchecked(t), s),
            };
            let c = mu.coeff(&arg);
            if c.norm() > 0.0 {
                m.set(s_idx, t_idx, c);
            }
        }
    }
    Ok(m)
}

/// Exact value `c * 2 sqrt(n-1)` of `||lambda_2||` for a measure putting
/// the same positive weight `c` on `n >= 2` distinct free generators
/// (which freely generate a rank-n subgroup).
pub fn free_generator_norm(mu: &Measure) -> Option<f64> {
    mu.group().free_rank()?;
    let mut weight: Option<f64> = None;
    let mut gens: BTreeSet<u16> = BTreeSet::new();
    for (e, c) in mu.atoms() {
        let w = match e {
            Element::Free(w) => w,
            _ => return None,
        };
        if w.len() != 1 || w.letters()[0].inv {
            return None;
        }
        if !gens.insert(w.letters()[0].gen) {
            return None;
        }
        if c.im.abs() > DEDUP_EPSILON || c.re <= 0.0 {
            return None;
        }
        match weight {
            None => weight = Some(c.re),
            Some(v) if (v - c.re).abs() <= 1e-15 => {}
            _ => return None,
        }
    }
    let c = weight?;
    let n = gens.len();
    if n < 2 {
        return None;
    }
    Some(c * 2.0 * ((n - 1) as f64).sqrt())
}

/// Strong Haagerup bound `e sqrt(L+1) ||mu||_{l2}` for measures on a free
/// group supported on same-length words with all-positive letters.
pub fn strong_haagerup_norm_bound(mu: &Measure) -> Option<f64> {
    mu.group().free_rank()?;
    if mu.is_zero() {
        return None;
    }
    let mut len: Option<usize> = None;
    for (e, _) in mu.atoms() {
        let w = match e {
            Element::Free(w) => w,
            _ => return None,
        };
        if w.is_empty() || w.letters().iter().any(|l| l.inv) {
            return None;
        }
        match len {
            None => len = Some(w.len()),
            Some(l) if l == w.len() => {}
            _ => return None,
        }
    }
    let l = len?;
    Some(std::f64::consts::E * ((l + 1) as f64).sqrt() * mu.l2_norm())
}

// ---------------------------------------------------------------------------
// Windowed application: indexed ball, used by the norm estimators.
// ---------------------------------------------------------------------------

struct Window {
    /// Number of elements of `ball(radius + 1)` over the support generators.
    range_len: usize,
    domain_len: usize,
    atom_coeffs: Vec<Complex64>,
    /// `targets[a * domain_len + i]` = range index of atom `a` acting on
    /// domain element `i`.
    targets: Vec<u32>,
}

impl Window {
    fn build(mu: &Measure, side: OperatorSide, radius: usize, guard: MemoryGuard) -> Result<Window> {
        let group = mu.group();
        let gens: Vec<Element> = mu
            .atoms()
            .map(|(e, _)| e.clone())
            .filter(|e| *e != group.identity())
            .collect();
        let (elements, offsets) = if gens.is_empty() {
            (vec![group.identity()], vec![1usize, 1])
        } else {
            group.ball_with_offsets(radius + 1, &gens, guard.max_atoms)?
        };
        let domain_len = offsets[radius.min(offsets.len() - 1)].min(elements.len());
        let range_len = elements.len();

        // Sorted index for binary-search lookups.
        let mut sorted: Vec<u32> = (0..range_len as u32).collect();
        sorted.sort_by(|&a, &b| elements[a as usize].cmp(&elements[b as usize]));
        let lookup = |e: &Element| -> u32 {
            let pos = sorted
                .binary_search_by(|&i| elements[i as usize].cmp(e))
                .expect("window product must stay inside ball(radius + 1)");
            sorted[pos]
        };

        let atom_count = mu.atom_count();
        let mut atom_coeffs = Vec::with_capacity(atom_count);
        let mut targets = vec![0u32; atom_count * domain_len];
        for (a, (x, c)) in mu.atoms().enumerate() {
            atom_coeffs.push(*c);
            let shift = match side {
                OperatorSide::Left => x.clone(),
                OperatorSide::Right => group.inverse_unchecked(x),
            };
            for (i, elem) in elements.iter().take(domain_len).enumerate() {
                let prod = match side {
                    OperatorSide::Left => group.mul_unchecked(&shift, elem),
                    OperatorSide::Right => group.mul_unchecked(elem, &shift),
                };
                targets[a * domain_len + i] = lookup(&prod);
            }
        }
        Ok(Window {
            range_len,
            domain_len,
            atom_coeffs,
            targets,
        })
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.fill(Complex64::new(0.0, 0.0));
        for (a, &c) in self.atom_coeffs.iter().enumerate() {
            let row = &self.targets[a * self.domain_len..(a + 1) * self.domain_len];
            for (i, &t) in row.iter().enumerate() {
                y[t as usize] += c * x[i];
            }
        }
    }

    fn apply_adjoint(&self, y: &[Complex64], x: &mut [Complex64]) {
        x.fill(Complex64::new(0.0, 0.0));
        for (a, &c) in self.atom_coeffs.iter().enumerate() {
            let cc = c.conj();
            let row = &self.targets[a * self.domain_len..(a + 1) * self.domain_len];
            for (i, &t) in row.iter().enumerate() {
                x[i] += cc * y[t as usize];
            }
        }
    }

    /// Top singular value of the operator restricted to the window domain,
    /// by power iteration on `A^H A`. Every reported value is a realized
    /// l2 quotient, hence a valid lower bound for the full operator norm.
    fn singular_power_iteration(&self, iters: usize, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.domain_len;
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        normalize_l2(&mut v);
        let mut y = vec![Complex64::new(0.0, 0.0); self.range_len];
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut best = 0.0f64;
        let mut prev = 0.0f64;
        for it in 0..iters {
            self.apply(&v, &mut y);
            let sigma = l2_norm(&y);
            best = best.max(sigma);
            self.apply_adjoint(&y, &mut w);
            let wn = l2_norm(&w);
            if wn <= 1e-300 {
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / wn;
            }
            if it > 4 && (sigma - prev).abs() <= 1e-13 * sigma.max(1.0) {
                break;
            }
            prev = sigma;
        }
        best
    }

    /// Higham/Boyd dual-ascent power method for the windowed p-norm,
    /// restarted from random vectors and structured seeds. Reports the
    /// best realized quotient (always a valid lower bound).
    fn dual_ascent(&self, p: f64, iters: usize, restarts: usize, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.domain_len;
        let q = p / (p - 1.0);
        let mut best = 0.0f64;
        let mut starts: Vec<Vec<Complex64>> = Vec::new();
        // Unit coordinate vector (the identity sits at ball index 0).
        let mut e0 = vec![Complex64::new(0.0, 0.0); n];
        e0[0] = Complex64::new(1.0, 0.0);
        starts.push(e0);
        // Sign-pattern witness family on three-element windows.
        if n == 3 {
            for (i, j, k) in [(0usize, 1usize, 2usize), (0, 2, 1)] {
                let mut f = vec![Complex64::new(0.0, 0.0); 3];
                f[i] = Complex64::new((1.0f64 / 6.0).powf(1.0 / p), 0.0);
                f[j] = Complex64::new((1.0f64 / 6.0).powf(1.0 / p), 0.0);
                f[k] = Complex64::new(-(2.0f64 / 3.0).powf(1.0 / p), 0.0);
                starts.push(f);
            }
        }
        for _ in 0..restarts {
            starts.push(
                (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            );
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.range_len];
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for mut x in starts {
            normalize_lp(&mut x, p);
            let mut prev = 0.0f64;
            for _ in 0..iters {
                self.apply(&x, &mut y);
                let gamma = lp_norm(&y, p);
                best = best.max(gamma);
                if gamma <= 1e-300 {
                    break;
                }
                // Dual vector of y in l^{p'}.
                let psi: Vec<Complex64> = y.iter().map(|&v| dual_coord(v, p)).collect();
                self.apply_adjoint(&psi, &mut z);
                // Stationarity: ||z||_q <= Re<z, x> at a local maximum.
                let zq = lp_norm(&z, q);
                let inner: f64 = z.iter().zip(&x).map(|(a, b)| (a * b.conj()).re).sum();
                if zq <= inner * (1.0 + 1e-12) || (gamma - prev).abs() <= 1e-13 * gamma {
                    break;
                }
                prev = gamma;
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi = dual_coord(*zi, q);
                }
                normalize_lp(&mut x, p);
            }
        }
        best
    }
}

fn dual_coord(v: Complex64, p: f64) -> Complex64 {
    let m = v.norm();
    if m <= 1e-300 {
        Complex64::new(0.0, 0.0)
    } else {
        v / m * m.powf(p - 1.0)
    }
}

fn l2_norm(v: &[Complex64]) -> f64 {
    let mut acc = KahanSum::new();
    for c in v {
        acc.add(c.norm_sqr());
    }
    acc.value().sqrt()
}

fn lp_norm(v: &[Complex64], p: f64) -> f64 {
    if (p - 2.0).abs() < 1e-12 {
        return l2_norm(v);
    }
    let mut acc = KahanSum::new();
    for c in v {
        let m = c.norm();
        if m > 0.0 {
            acc.add(m.powf(p));
        }
    }
    acc.value().powf(1.0 / p)
}

fn normalize_l2(v: &mut [Complex64]) {
    let n = l2_norm(v);
    if n > 1e-300 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

fn normalize_lp(v: &mut [Complex64], p: f64) {
    let n = lp_norm(v, p);
    if n > 1e-300 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

// ---------------------------------------------------------------------------
// Cesàro iteration engine.
// ---------------------------------------------------------------------------

/// Options for [`ConvOperator::iterate_cesaro`].
#[derive(Debug, Clone)]
pub struct IterateOptions {
    pub horizon: usize,
    /// Relative tolerance for the dyadic Cauchy test.
    pub tol: f64,
    /// `||T_[n] f||` above `blowup_factor * max(1, ||mu||) * max(1, ||f||)`
    /// certifies divergence.
    pub blowup_factor: f64,
    pub guard: MemoryGuard,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            horizon: 4096,
            tol: 1e-8,
            blowup_factor: 10.0,
            guard: MemoryGuard::default(),
        }
    }
}

/// Per-test-vector trace of the Cesàro iteration.
#[derive(Debug, Clone)]
pub struct IterationTestTrace {
    pub initial_norm: f64,
    /// `||T^n f||_p / n` for every computed n (index n-1).
    pub power_norm_over_n: Vec<f64>,
    /// Raw dyadic Cauchy gaps `(n, ||T_[n]f - T_[2n]f||_p)`.
    pub dyadic_gaps: Vec<(usize, f64)>,
    /// Gaps of the Richardson-extrapolated sequence `2 T_[2n]f - T_[n]f`,
    /// which removes the O(1/n) Cesàro tail and converges geometrically
    /// whenever `T^n f` does.
    pub extrapolated_gaps: Vec<(usize, f64)>,
    pub final_cesaro_norm: f64,
    pub blowup_witness: Option<usize>,
    pub converged: bool,
    /// Extrapolated limit `2 T_[N]f - T_[N/2]f`.
    pub limit_vector: SupportedVector,
}

/// Outcome of the empirical strong-operator-topology probe.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub requested_horizon: usize,
    /// Effective horizon (rounded down to a power of two, >= 4).
    pub horizon: usize,
    pub tol: f64,
    pub p: LpExponent,
    pub tests: Vec<IterationTestTrace>,
    pub sot_converges: TriState,
    pub fixed_point_is_zero: TriState,
    pub limit_vectors: Option<Vec<SupportedVector>>,
}

impl ConvOperator {
    /// Iterates the Cesàro means `T_[n] f = (1/n) sum_{k<=n} T^k f` with
    /// exact supports, testing convergence at dyadic pairs `(n, 2n)`.
    ///
    /// A test converges when the raw dyadic gap falls below
    /// `tol * max(1, ||f||_p)`, or when the extrapolated sequence
    /// `2 T_[2n]f - T_[n]f` does while the raw gaps keep decreasing (the
    /// raw gap of a convergent Cesàro mean decays only like 1/n, which no
    /// practical horizon pushes below tight tolerances).
    pub fn iterate_cesaro(
        &self,
        tests: &[SupportedVector],
        opts: &IterateOptions,
    ) -> Result<IterationReport> {
        if opts.horizon < 4 {
            return Err(CoreError::InvalidInput("horizon must be >= 4".into()));
        }
        if tests.is_empty() {
            return Err(CoreError::InvalidInput(
                "need at least one test vector".into(),
            ));
        }
        let horizon = 1usize << (usize::BITS - 1 - opts.horizon.leading_zeros());
        let mut traces = Vec::with_capacity(tests.len());
        for f in tests {
            traces.push(self.iterate_single(f, horizon, opts)?);
        }
        let any_blowup = traces.iter().any(|t| t.blowup_witness.is_some());
        let all_converged = traces.iter().all(|t| t.converged);
        let sot = if any_blowup {
            TriState::No
        } else if all_converged {
            TriState::Yes
        } else {
            TriState::Unknown
        };
        let fixed_zero = if sot == TriState::Yes {
            let all_zero = traces
                .iter()
                .all(|t| t.limit_vector.norm(self.p) <= opts.tol * t.initial_norm.max(1.0));
            if all_zero {
                TriState::Yes
            } else {
                TriState::No
            }
        } else {
            TriState::Unknown
        };
        let limits = (sot == TriState::Yes)
            .then(|| traces.iter().map(|t| t.limit_vector.clone()).collect());
        Ok(IterationReport {
            requested_horizon: opts.horizon,
            horizon,
            tol: opts.tol,
            p: self.p,
            tests: traces,
            sot_converges: sot,
            fixed_point_is_zero: fixed_zero,
            limit_vectors: limits,
        })
    }

    fn iterate_single(
        &self,
        f: &SupportedVector,
        horizon: usize,
        opts: &IterateOptions,
    ) -> Result<IterationTestTrace> {
        let fnorm = f.norm(self.p);
        let tol_f = opts.tol * fnorm.max(1.0);
        let blowup =
            opts.blowup_factor * self.measure.total_variation().max(1.0) * fnorm.max(1.0);

        let mut power = f.clone();
        let mut sum = SupportedVector::zero(f.group.clone());
        let mut power_norm_over_n = Vec::with_capacity(horizon);
        let mut checkpoints: BTreeMap<usize, SupportedVector> = BTreeMap::new();
        let mut blowup_witness = None;

        for n in 1..=horizon {
            power = self.apply_guarded(&power, opts.guard)?;
            sum = sum.add_scaled(&power, Complex64::new(1.0, 0.0))?;
            if sum.atom_count() > opts.guard.max_atoms {
                return Err(CoreError::Resource {
                    what: "cesaro iteration support".into(),
                    needed: sum.atom_count(),
                    budget: opts.guard.max_atoms,
                });
            }
            power_norm_over_n.push(power.norm(self.p) / n as f64);
            let cesaro_norm_n = sum.norm(self.p) / n as f64;
            if cesaro_norm_n > blowup && blowup_witness.is_none() {
                blowup_witness = Some(n);
                break;
            }
            if n.is_power_of_two() && n >= 2 {
                checkpoints.insert(n, sum.scale(Complex64::new(1.0 / n as f64, 0.0)));
            }
        }

        let ns: Vec<usize> = checkpoints.keys().copied().collect();
        let mut dyadic_gaps = Vec::new();
        let mut extrapolated: Vec<(usize, SupportedVector)> = Vec::new();
        let mut extrapolated_gaps = Vec::new();
        for w in ns.windows(2) {
            let (a, b) = (w[0], w[1]);
            let ca = &checkpoints[&a];
            let cb = &checkpoints[&b];
            dyadic_gaps.push((a, cb.sub(ca)?.norm(self.p)));
            let e = cb.scale(Complex64::new(2.0, 0.0)).sub(ca)?;
            extrapolated.push((a, e));
        }
        for w in extrapolated.windows(2) {
            let gap = w[1].1.sub(&w[0].1)?.norm(self.p);
            extrapolated_gaps.push((w[1].0, gap));
        }

        let raw_ok = dyadic_gaps.last().map_or(false, |&(_, g)| g <= tol_f);
        let raw_decreasing = dyadic_gaps.len() >= 2
            && dyadic_gaps
                .windows(2)
                .rev()
                .take(2)
                .all(|w| w[1].1 <= w[0].1 + tol_f);
        let ext_ok = extrapolated_gaps.last().map_or(false, |&(_, g)| g <= tol_f);
        let converged = blowup_witness.is_none() && (raw_ok || (ext_ok && raw_decreasing));

        let limit_vector = match extrapolated.last() {
            Some((_, e)) => e.clone(),
            None => sum.scale(Complex64::new(1.0 / horizon as f64, 0.0)),
        };
        let final_cesaro_norm = checkpoints
            .values()
            .last()
            .map(|v| v.norm(self.p))
            .unwrap_or(0.0);

        Ok(IterationTestTrace {
            initial_norm: fnorm,
            power_norm_over_n,
            dyadic_gaps,
            extrapolated_gaps,
            final_cesaro_norm,
            blowup_witness,
            converged,
            limit_vector,
        })
    }
}

/// Verifies `lambda_p(mu) U = U rho_p(mu)` on the given test vectors,
/// where `U f(s) = f(s^{-1})`.
pub fn unitary_intertwine_check(
    mu: &Measure,
    p: LpExponent,
    tests: &[SupportedVector],
    tol: f64,
) -> Result<bool> {
    match p {
        LpExponent::Finite(v) if v > 1.0 => {}
        _ => {
            return Err(CoreError::InvalidInput(
                "intertwine check needs 1 < p < infinity".into(),
            ))
        }
    }
    let left = ConvOperator::left(mu.clone(), p);
    let right = ConvOperator::right(mu.clone(), p);
    for f in tests {
        let lhs = left.apply(&f.flip())?;
        let rhs = right.apply(f)?.flip();
        let dist = lhs.sub(&rhs)?.norm(p);
        if dist > tol * (1.0 + f.norm(p)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::standard_generators;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn z() -> Arc<GroupHandle> {
        Arc::new(GroupHandle::lattice(1).unwrap())
    }
    fn z3() -> Arc<GroupHandle> {
        Arc::new(GroupHandle::cyclic(3).unwrap())
    }
    fn lat(k: i64) -> Element {
        Element::Lattice(vec![k])
    }
    fn p2() -> LpExponent {
        LpExponent::Finite(2.0)
    }

    fn random_measure(g: &Arc<GroupHandle>, rng: &mut StdRng, atoms: usize) -> Measure {
        let elems: Vec<(Element, Complex64)> = (0..atoms)
            .map(|_| {
                let e = match g.order() {
                    Some(n) => Element::Finite(rng.gen_range(0..n) as u32),
                    None => lat(rng.gen_range(-3..4)),
                };
                (
                    e,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        Measure::new(g.clone(), elems).unwrap()
    }

    #[test]
    fn translation_is_isometric() {
        let g = z();
        let dx = Measure::dirac(g.clone(), lat(4)).unwrap();
        let t = ConvOperator::left(dx, p2());
        let f = SupportedVector::new(
            g,
            [
                (lat(0), Complex64::new(1.0, 0.5)),
                (lat(2), Complex64::new(-0.3, 0.0)),
            ],
        )
        .unwrap();
        let tf = t.apply(&f).unwrap();
        assert!((tf.norm(p2()) - f.norm(p2())).abs() < 1e-14);
        assert!((tf.coeff(&lat(4)) - f.coeff(&lat(0))).norm() < 1e-15);
    }

    #[test]
    fn one_step_on_z3() {
        let g = z3();
        let mu = Measure::from_real_atoms(
            g.clone(),
            [(Element::Finite(1), 1.0), (Element::Finite(2), -1.0)],
        )
        .unwrap();
        let t = ConvOperator::left(mu, p2());
        let f = SupportedVector::dirac(g, Element::Finite(0)).unwrap();
        let tf = t.apply(&f).unwrap();
        assert!((tf.coeff(&Element::Finite(1)) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((tf.coeff(&Element::Finite(2)) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((tf.norm(p2()) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn applying_to_identity_dirac_recovers_measure() {
        let mut rng = StdRng::seed_from_u64(5);
        let g = z();
        let mu = random_measure(&g, &mut rng, 5);
        let t = ConvOperator::left(mu.clone(), p2());
        let f = SupportedVector::dirac(g, lat(0)).unwrap();
        let tf = t.apply(&f).unwrap();
        let expect = SupportedVector::from_measure(&mu);
        assert!(tf.sub(&expect).unwrap().norm(p2()) < 1e-14);
    }

    #[test]
    fn convolution_homomorphism_on_operators() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..10 {
            let g = z();
            let mu = random_measure(&g, &mut rng, 4);
            let nu = random_measure(&g, &mut rng, 3);
            let f = SupportedVector::new(
                g.clone(),
                (0..4).map(|_| {
                    (
                        lat(rng.gen_range(-5..6)),
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                }),
            )
            .unwrap();
            let t_prod = ConvOperator::left(mu.convolve(&nu).unwrap(), p2());
            let t_mu = ConvOperator::left(mu, p2());
            let t_nu = ConvOperator::left(nu, p2());
            let lhs = t_prod.apply(&f).unwrap();
            let rhs = t_mu.apply(&t_nu.apply(&f).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm(p2()) < 1e-12);
        }
    }

    #[test]
    fn young_bound_holds() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..20 {
            let g = z3();
            let mu = random_measure(&g, &mut rng, 3);
            for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
                let pe = LpExponent::Finite(p);
                let t = ConvOperator::left(mu.clone(), pe);
                let f = SupportedVector::new(
                    g.clone(),
                    (0..3).map(|i| {
                        (
                            Element::Finite(i),
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        )
                    }),
                )
                .unwrap();
                if f.is_zero() {
                    continue;
                }
                let q = t.apply(&f).unwrap().norm(pe) / f.norm(pe);
                assert!(
                    q <= mu.total_variation() + 1e-12,
                    "quotient {q} > tv {}",
                    mu.total_variation()
                );
            }
        }
    }

    #[test]
    fn mass_conservation_for_positive_measures() {
        let g = z();
        let mu = Measure::from_real_atoms(g.clone(), [(lat(0), 0.5), (lat(1), 0.5)]).unwrap();
        let t = ConvOperator::left(mu, LpExponent::Finite(1.0));
        let f = SupportedVector::new(
            g,
            [
                (lat(0), Complex64::new(0.25, 0.0)),
                (lat(3), Complex64::new(0.75, 0.0)),
            ],
        )
        .unwrap();
        let tf = t.apply(&f).unwrap();
        assert!((tf.mass() - f.mass()).norm() < 1e-12);
    }

    #[test]
    fn intertwine_examples() {
        let g = z();
        let tests = vec![
            SupportedVector::dirac(g.clone(), lat(0)).unwrap(),
            SupportedVector::dirac(g.clone(), lat(2)).unwrap(),
        ];
        let dx = Measure::dirac(g.clone(), lat(1)).unwrap();
        assert!(unitary_intertwine_check(&dx, p2(), &tests, 1e-12).unwrap());

        let mu = Measure::from_real_atoms(
            g,
            [
                (lat(1), 1.0 / 3.0),
                (lat(0), 1.0 / 3.0),
                (lat(-1), -1.0 / 3.0),
            ],
        )
        .unwrap();
        assert!(unitary_intertwine_check(&mu, p2(), &tests, 1e-12).unwrap());

        let g3 = z3();
        let mut rng = StdRng::seed_from_u64(31);
        let mu3 = random_measure(&g3, &mut rng, 3);
        let tests3 = vec![SupportedVector::new(
            g3,
            (0..3).map(|i| {
                (
                    Element::Finite(i),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            }),
        )
        .unwrap()];
        assert!(
            unitary_intertwine_check(&mu3, LpExponent::Finite(3.0), &tests3, 1e-10).unwrap()
        );
    }

    #[test]
    fn intertwine_rejects_bad_p() {
        let g = z();
        let dx = Measure::dirac(g.clone(), lat(1)).unwrap();
        let tests = vec![SupportedVector::dirac(g, lat(0)).unwrap()];
        assert!(unitary_intertwine_check(&dx, LpExponent::Finite(1.0), &tests, 1e-12).is_err());
        assert!(unitary_intertwine_check(&dx, LpExponent::Infinity, &tests, 1e-12).is_err());
    }

    #[test]
    fn norm_p1_is_total_variation() {
        let mut rng = StdRng::seed_from_u64(9);
        let g = z();
        let mu = random_measure(&g, &mut rng, 5);
        let t = ConvOperator::left(mu.clone(), LpExponent::Finite(1.0));
        let iv = t
            .operator_norm(NormMethod::WindowLower, &NormOptions::default())
            .unwrap();
        assert!((iv.lo - mu.total_variation()).abs() < 1e-14);
        assert!((iv.hi - mu.total_variation()).abs() < 1e-14);
    }

    #[test]
    fn z3_example_norms() {
        // mu = d_x - d_{x^2} on Z3: ||lambda_2|| = sqrt(3); the p = 4 lower
        // bound from the sign-pattern witness is (1/3)^{1/4} (1 + 4^{1/4}).
        let g = z3();
        let mu = Measure::from_real_atoms(
            g.clone(),
            [(Element::Finite(1), 1.0), (Element::Finite(2), -1.0)],
        )
        .unwrap();
        let t2 = ConvOperator::left(mu.clone(), p2());
        let iv2 = t2
            .operator_norm(NormMethod::ExactMatrix, &NormOptions::default())
            .unwrap();
        assert!((iv2.lo - 3f64.sqrt()).abs() < 1e-9, "lo = {}", iv2.lo);
        assert!((iv2.hi - 3f64.sqrt()).abs() < 1e-9);

        let t4 = ConvOperator::left(mu.clone(), LpExponent::Finite(4.0));
        let witness = SupportedVector::new(
            g,
            [
                (
                    Element::Finite(0),
                    Complex64::new((1.0f64 / 6.0).powf(0.25), 0.0),
                ),
                (
                    Element::Finite(1),
                    Complex64::new((1.0f64 / 6.0).powf(0.25), 0.0),
                ),
                (
                    Element::Finite(2),
                    Complex64::new(-(2.0f64 / 3.0).powf(0.25), 0.0),
                ),
            ],
        )
        .unwrap();
        let direct = t4.rayleigh_quotient(&witness).unwrap();
        let formula = (1.0f64 / 3.0).powf(0.25) * (1.0 + 4.0f64.powf(0.25));
        assert!(
            (direct - formula).abs() < 1e-12,
            "direct {direct} vs {formula}"
        );
        assert!(formula > 3f64.sqrt());

        let iv4 = t4
            .operator_norm(NormMethod::BoydP, &NormOptions::default())
            .unwrap();
        assert!(iv4.lo >= formula - 1e-9, "boyd lo {} below witness", iv4.lo);
        assert!(iv4.hi <= mu.total_variation() + 1e-12);
    }

    #[test]
    fn window_lower_bound_monotone_in_radius() {
        let f2 = Arc::new(GroupHandle::free(2).unwrap());
        let gens = standard_generators(&f2);
        let mu = Measure::from_real_atoms(f2, gens.iter().map(|e| (e.clone(), 1.0))).unwrap();
        let t = ConvOperator::left(mu, p2());
        let mut prev = 0.0;
        for radius in 1..=4 {
            let iv = t
                .operator_norm(
                    NormMethod::WindowLower,
                    &NormOptions {
                        radius,
                        ..NormOptions::default()
                    },
                )
                .unwrap();
            assert!(iv.lo >= prev - 1e-12, "radius {radius}: {} < {prev}", iv.lo);
            // Akemann-Ostrand value 2 sqrt(n-1) = 2 for F2.
            assert!(iv.lo <= 2.0 + 1e-9);
            prev = iv.lo;
        }
        assert!(prev > 1.5);
    }

    #[test]
    fn iterate_identity_operator_is_stationary() {
        let g = z3();
        let de = Measure::dirac(g.clone(), g.identity()).unwrap();
        let t = ConvOperator::left(de, p2());
        let f = SupportedVector::dirac(g, Element::Finite(1)).unwrap();
        let report = t
            .iterate_cesaro(
                &[f.clone()],
                &IterateOptions {
                    horizon: 64,
                    tol: 1e-10,
                    ..IterateOptions::default()
                },
            )
            .unwrap();
        assert_eq!(report.sot_converges, TriState::Yes);
        assert_eq!(report.fixed_point_is_zero, TriState::No);
        let limit = &report.limit_vectors.unwrap()[0];
        assert!(limit.sub(&f).unwrap().norm(p2()) < 1e-10);
    }

    #[test]
    fn iterate_z_random_walk_converges_to_zero() {
        let g = z();
        let mu = Measure::from_real_atoms(g.clone(), [(lat(0), 0.5), (lat(1), 0.5)]).unwrap();
        let t = ConvOperator::left(mu, p2());
        let f = SupportedVector::dirac(g, lat(0)).unwrap();
        let report = t
            .iterate_cesaro(
                &[f],
                &IterateOptions {
                    horizon: 2048,
                    tol: 0.2,
                    ..IterateOptions::default()
                },
            )
            .unwrap();
        assert_eq!(report.sot_converges, TriState::Yes);
        assert_eq!(report.fixed_point_is_zero, TriState::Yes);
    }

    #[test]
    fn iterate_uniform_probability_on_z3_projects_onto_constants() {
        let g = z3();
        let third = 1.0 / 3.0;
        let mu =
            Measure::from_real_atoms(g.clone(), (0..3).map(|i| (Element::Finite(i), third)))
                .unwrap();
        let t = ConvOperator::left(mu, p2());
        let f = SupportedVector::dirac(g.clone(), Element::Finite(0)).unwrap();
        let report = t
            .iterate_cesaro(
                &[f],
                &IterateOptions {
                    horizon: 256,
                    tol: 1e-8,
                    ..IterateOptions::default()
                },
            )
            .unwrap();
        assert_eq!(report.sot_converges, TriState::Yes);
        assert_eq!(report.fixed_point_is_zero, TriState::No);
        let limit = &report.limit_vectors.unwrap()[0];
        for i in 0..3 {
            assert!(
                (limit.coeff(&Element::Finite(i)) - Complex64::new(third, 0.0)).norm() < 1e-8,
                "coeff {i}"
            );
        }
    }

    #[test]
    fn iterate_never_reports_no_for_contractions() {
        // ||mu|| <= 1 keeps Cesàro means bounded by 1; the engine may be
        // undetermined but must not claim divergence.
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..10 {
            let g = z();
            let mut mu = random_measure(&g, &mut rng, 3);
            let tv = mu.total_variation();
            if tv > 1e-9 {
                mu = mu.scale_real(1.0 / tv);
            }
            let t = ConvOperator::left(mu, p2());
            let f = SupportedVector::dirac(g.clone(), lat(0)).unwrap();
            let report = t
                .iterate_cesaro(
                    &[f],
                    &IterateOptions {
                        horizon: 128,
                        tol: 1e-6,
                        ..IterateOptions::default()
                    },
                )
                .unwrap();
            assert_ne!(report.sot_converges, TriState::No);
        }
    }

    #[test]
    fn iterate_blowup_detected() {
        let g = z();
        let mu = Measure::from_real_atoms(g.clone(), [(lat(1), 2.0)]).unwrap();
        let t = ConvOperator::left(mu, p2());
        let f = SupportedVector::dirac(g, lat(0)).unwrap();
        let report = t
            .iterate_cesaro(
                &[f],
                &IterateOptions {
                    horizon: 64,
                    tol: 1e-8,
                    ..IterateOptions::default()
                },
            )
            .unwrap();
        assert_eq!(report.sot_converges, TriState::No);
        assert!(report.tests[0].blowup_witness.is_some());
    }

    #[test]
    fn strong_haagerup_applies_only_to_semigroup_words() {
        let f3 = Arc::new(GroupHandle::free(3).unwrap());
        let gens = standard_generators(&f3);
        let mu =
            Measure::from_real_atoms(f3.clone(), gens.iter().map(|e| (e.clone(), 1.0))).unwrap();
        let bound = strong_haagerup_norm_bound(&mu).unwrap();
        assert!((bound - std::f64::consts::E * 2f64.sqrt() * 3f64.sqrt()).abs() < 1e-12);

        let inv_gen = Arc::clone(&f3).inverse(&gens[1]).unwrap();
        let with_inverse =
            Measure::from_real_atoms(f3, [(gens[0].clone(), 1.0), (inv_gen, 1.0)]).unwrap();
        assert!(strong_haagerup_norm_bound(&with_inverse).is_none());
    }
}
