//! Fourier–Stieltjes transforms on abelian duals, exact finite spectra,
//! certified gap-at-1 tests and spectral-radius sandwiches.
//!
//! Finite abelian groups get their full character table with exact
//! root-of-unity arithmetic (integer exponent indices, evaluated in double
//! precision only at the last step). Lattices `Z^d` are sampled on a
//! uniform torus grid whose verdicts carry a Lipschitz certificate
//! `|mu^(t) - mu^(s)| <= L ||t - s||_inf` with `L = sum |mu(n)| ||n||_1`.
//! Free groups never get spectrum claims, only radius intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{complex_eigenvalues, hermitian_eigenvalues};
use crate::error::{CoreError, Result};
use crate::group::{Element, GroupHandle};
use crate::measure::{Measure, MemoryGuard};
use crate::operator::{conv_matrix, strong_haagerup_norm_bound, Interval, LpExponent, OperatorSide};
use crate::util::KahanSum;

/// Options for spectral computations.
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Grid budget: points per axis for rank 1, total-ish budget otherwise.
    pub grid: usize,
    /// Local refinement rounds around candidate minima of `|mu^ - 1|`.
    pub refine: usize,
    /// Distance at or below which a sampled value counts as hitting 1.
    pub gap_tol: f64,
    pub record_samples: bool,
    pub guard: MemoryGuard,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            grid: 1 << 14,
            refine: 3,
            gap_tol: 1e-9,
            record_samples: false,
            guard: MemoryGuard::default(),
        }
    }
}

/// Identifies a character (or eigenvalue slot) in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CharacterParam {
    /// Index into a finite dual.
    FiniteIndex(usize),
    /// Point of the torus dual of `Z^d`, coordinates in `[0, 2*pi)`.
    Torus(Vec<f64>),
    /// Character `s -> s^k` of the circle group, indexed by `k`.
    DualInteger(i64),
    /// Eigenvalue index for finite non-abelian groups (no characters).
    EigenIndex(usize),
}

/// Gap-at-1 verdict for the spectrum of `lambda_2(mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GapVerdict {
    /// Every spectrum point other than exact 1-values is at distance
    /// >= delta from 1. `delta` is infinite when no non-1 values exist.
    GapCertified { delta: f64 },
    /// Five distinct sampled values within `tol` of 1 and different
    /// from 1, at pairwise-distinct characters.
    AccumulationCertified { witnesses: Vec<SampleRecord> },
    Undetermined { measured_min: f64 },
}

impl GapVerdict {
    pub fn is_gap(&self) -> bool {
        matches!(self, GapVerdict::GapCertified { .. })
    }
    pub fn is_accumulation(&self) -> bool {
        matches!(self, GapVerdict::AccumulationCertified { .. })
    }
}

/// Description of `A_mu = {chi : mu^(chi) = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AMuDescription {
    Empty,
    Characters(Vec<CharacterParam>),
    WholeDual,
    NonemptySeeWitnesses,
}

/// One sampled transform value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub param: CharacterParam,
    pub re: f64,
    pub im: f64,
}

impl SampleRecord {
    fn new(param: CharacterParam, v: Complex64) -> Self {
        SampleRecord {
            param,
            re: v.re,
            im: v.im,
        }
    }
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Spectral summary of `lambda_2(mu)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub norm2: Interval,
    pub radius: Interval,
    pub gap_at_one: GapVerdict,
    pub a_mu: AMuDescription,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<SampleRecord>>,
}

// ---------------------------------------------------------------------------
// Finite duals: exact character tables of finite abelian groups.
// ---------------------------------------------------------------------------

/// The full dual of a finite abelian group. Characters are stored as
/// integer exponents `k` with `chi(g) = omega_N^{k(g)}`, `N` the group
/// exponent; complex values appear only at evaluation time.
#[derive(Debug, Clone)]
pub struct FiniteDual {
    group: Arc<GroupHandle>,
    n: usize,
    exponent: u64,
    /// `chars[j][g]` = exponent of character j at element g.
    chars: Vec<Vec<u64>>,
    /// Root-of-unity table `omega_N^k`, k < N.
    roots: Vec<Complex64>,
}

impl FiniteDual {
    pub fn build(group: Arc<GroupHandle>) -> Result<Self> {
        let n = group
            .order()
            .ok_or_else(|| CoreError::Unsupported("finite dual needs a finite group".into()))?;
        if !group.is_abelian() {
            return Err(CoreError::Unsupported(
                "finite dual needs an abelian group".into(),
            ));
        }
        let idx_of = |e: &Element| -> usize {
            match e {
                Element::Finite(i) => *i as usize,
                _ => unreachable!(),
            }
        };
        let identity = idx_of(&group.identity());

        // Element orders and the group exponent N.
        let mut order = vec![0usize; n];
        for i in 0..n {
            let e = Element::Finite(i as u32);
            let mut cur = e.clone();
            let mut k = 1;
            while idx_of(&cur) != identity {
                cur = group.mul_unchecked(&cur, &e);
                k += 1;
            }
            order[i] = k;
        }
        let exponent = order.iter().fold(1u64, |acc, &k| lcm(acc, k as u64));

        // Greedy generating sequence with expression vectors.
        let mut gens: Vec<usize> = Vec::new();
        let mut expr: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        expr.insert(identity, Vec::new());
        for i in 0..n {
            if expr.contains_key(&i) {
                continue;
            }
            gens.push(i);
            for v in expr.values_mut() {
                v.push(0);
            }
            let snapshot: Vec<(usize, Vec<u64>)> =
                expr.iter().map(|(k, v)| (*k, v.clone())).collect();
            let gi = gens.len() - 1;
            let g = Element::Finite(i as u32);
            let mut power = g.clone();
            for j in 1..order[i] {
                for (c, e_expr) in &snapshot {
                    let prod = group.mul_unchecked(&Element::Finite(*c as u32), &power);
                    let pidx = idx_of(&prod);
                    expr.entry(pidx).or_insert_with(|| {
                        let mut v = e_expr.clone();
                        v[gi] = j as u64;
                        v
                    });
                }
                power = group.mul_unchecked(&power, &g);
            }
        }
        debug_assert_eq!(expr.len(), n);

        // Enumerate candidate characters over generator exponent choices.
        let mut combos: u64 = 1;
        for &g in &gens {
            combos = combos.saturating_mul(order[g] as u64);
            if combos > 1_000_000 {
                return Err(CoreError::Structural(
                    "dual enumeration too large for this group".into(),
                ));
            }
        }
        let mul_table: Vec<Vec<usize>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        idx_of(&group.mul_unchecked(
                            &Element::Finite(a as u32),
                            &Element::Finite(b as u32),
                        ))
                    })
                    .collect()
            })
            .collect();

        let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
        let mut chars: Vec<Vec<u64>> = Vec::new();
        let mut choice = vec![0u64; gens.len()];
        loop {
            // chi(g_i) = omega_N^{choice_i * N / order(g_i)}.
            let mut k = vec![0u64; n];
            for (e, v) in &expr {
                let mut acc: u64 = 0;
                for (gi, &a) in v.iter().enumerate() {
                    let step = exponent / order[gens[gi]] as u64;
                    acc = (acc + a % exponent * (choice[gi] * step % exponent)) % exponent;
                }
                k[*e] = acc;
            }
            // Verify multiplicativity on all pairs.
            let mut ok = true;
            'verify: for a in 0..n {
                for b in 0..n {
                    if (k[a] + k[b]) % exponent != k[mul_table[a][b]] {
                        ok = false;
                        break 'verify;
                    }
                }
            }
            if ok && seen.insert(k.clone()) {
                chars.push(k);
            }
            // Advance the mixed-radix choice vector.
            let mut pos = 0;
            loop {
                if pos == gens.len() {
                    break;
                }
                choice[pos] += 1;
                if choice[pos] < order[gens[pos]] as u64 {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == gens.len() {
                break;
            }
        }
        if chars.len() != n {
            return Err(CoreError::Structural(format!(
                "expected {n} characters, found {}",
                chars.len()
            )));
        }
        chars.sort();
        let roots = (0..exponent)
            .map(|k| {
                let ang = 2.0 * PI * k as f64 / exponent as f64;
                Complex64::new(ang.cos(), ang.sin())
            })
            .collect();
        Ok(FiniteDual {
            group,
            n,
            exponent,
            chars,
            roots,
        })
    }

    pub fn group(&self) -> &Arc<GroupHandle> {
        &self.group
    }

    pub fn char_count(&self) -> usize {
        self.n
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Value of character `j` at a group element.
    pub fn value(&self, j: usize, e: &Element) -> Result<Complex64> {
        self.group.check_element(e)?;
        let idx = match e {
            Element::Finite(i) => *i as usize,
            _ => unreachable!(),
        };
        Ok(self.roots[self.chars[j][idx] as usize])
    }

    /// `mu^(chi_j) = sum_t mu(t) chi_j(t)`.
    pub fn transform(&self, mu: &Measure, j: usize) -> Result<Complex64> {
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for (e, c) in mu.atoms() {
            let chi = self.value(j, e)?;
            let v = c * chi;
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    pub fn transform_all(&self, mu: &Measure) -> Result<Vec<Complex64>> {
        (0..self.n).map(|j| self.transform(mu, j)).collect()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// Torus grids: the dual of Z^d sampled uniformly with Lipschitz control.
// ---------------------------------------------------------------------------

/// Uniform grid on the torus dual of `Z^d`.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    rank: usize,
    per_axis: usize,
    refine_rounds: usize,
}

impl TorusGrid {
    pub fn new(rank: usize, opts: &SpectralOptions) -> Self {
        let mut per_axis = if rank == 1 {
            opts.grid.max(16)
        } else {
            // Keep the total point count near the grid budget.
            let per = (opts.grid.max(256) as f64)
                .powf(1.0 / rank as f64)
                .floor() as usize;
            per.clamp(16, 4096)
        };
        if per_axis % 2 == 1 {
            per_axis += 1;
        }
        TorusGrid {
            rank,
            per_axis,
            refine_rounds: opts.refine,
        }
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.per_axis as f64
    }

    fn total_points(&self) -> usize {
        self.per_axis.pow(self.rank as u32)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.rank);
        let mut rest = flat;
        for _ in 0..self.rank {
            let j = rest % self.per_axis;
            rest /= self.per_axis;
            t.push(2.0 * PI * j as f64 / self.per_axis as f64);
        }
        t
    }

    /// Evaluates `mu^` at every grid point through an exact root-of-unity
    /// index table (`t_j . n` is a multiple of `2*pi / per_axis`).
    pub fn evaluate(&self, mu: &Measure) -> Result<Vec<Complex64>> {
        let m = self.per_axis as i64;
        let table: Vec<Complex64> = (0..self.per_axis)
            .map(|k| {
                let ang = 2.0 * PI * k as f64 / self.per_axis as f64;
                Complex64::new(ang.cos(), ang.sin())
            })
            .collect();
        let atoms: Vec<(Vec<i64>, Complex64)> = mu
            .atoms()
            .map(|(e, c)| match e {
                Element::Lattice(v) => Ok((v.clone(), *c)),
                _ => Err(CoreError::Unsupported(
                    "torus sampling needs a lattice measure".into(),
                )),
            })
            .collect::<Result<_>>()?;
        let total = self.total_points();
        let mut values = vec![Complex64::new(0.0, 0.0); total];
        let mut indices = vec![0usize; self.rank];
        for value in values.iter_mut() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (coords, c) in &atoms {
                let mut idx: i64 = 0;
                for (d, &ncoord) in coords.iter().enumerate() {
                    idx = (idx + (indices[d] as i64) * (ncoord % m)) % m;
                }
                acc += c * table[idx.rem_euclid(m) as usize];
            }
            *value = acc;
            // Advance the multi-index.
            for d in 0..self.rank {
                indices[d] += 1;
                if indices[d] < self.per_axis {
                    break;
                }
                indices[d] = 0;
            }
        }
        Ok(values)
    }
}

/// Lipschitz constant of `t -> mu^(e^{it})` on the torus in the sup metric:
/// `L = sum |mu(n)| ||n||_1`.
pub fn torus_lipschitz_bound(mu: &Measure) -> f64 {
    let mut acc = KahanSum::new();
    for (e, c) in mu.atoms() {
        if let Element::Lattice(v) = e {
            let l1: u64 = v.iter().map(|x| x.unsigned_abs()).sum();
            acc.add(c.norm() * l1 as f64);
        }
    }
    acc.value()
}

/// Direct evaluation of `mu^` at a torus point.
pub fn torus_transform(mu: &Measure, t: &[f64]) -> Result<Complex64> {
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (e, c) in mu.atoms() {
        let coords = match e {
            Element::Lattice(v) => v,
            _ => {
                return Err(CoreError::Unsupported(
                    "torus transform needs a lattice measure".into(),
                ))
            }
        };
        if coords.len() != t.len() {
            return Err(CoreError::InvalidInput("torus point has wrong rank".into()));
        }
        let ang: f64 = coords.iter().zip(t).map(|(&n, &tj)| n as f64 * tj).sum();
        let v = c * Complex64::new(ang.cos(), ang.sin());
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// `mu^(chi) = sum_t mu(t) chi(t)` for any supported character encoding.
pub fn fourier_stieltjes(mu: &Measure, chi: &CharacterParam) -> Result<Complex64> {
    match chi {
        CharacterParam::Torus(t) => torus_transform(mu, t),
        CharacterParam::FiniteIndex(j) => {
            let dual = FiniteDual::build(mu.group().clone())?;
            dual.transform(mu, *j)
        }
        _ => Err(CoreError::Unsupported(
            "character encoding not evaluable for this measure".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// spectrum2 / gap_at_one.
// ---------------------------------------------------------------------------

/// Full p = 2 spectral summary: certified norm/radius intervals, gap-at-1
/// verdict and the level set `A_mu`.
///
/// Finite abelian groups enumerate the dual exactly; finite non-abelian
/// groups fall back to eigenvalues of the exact operator matrix; lattices
/// use the certified torus grid. Free groups are rejected (only radius
/// intervals are available there).
pub fn spectrum2(mu: &Measure, opts: &SpectralOptions) -> Result<SpectralReport> {
    let group = mu.group().clone();
    if group.order().is_some() {
        if group.is_abelian() {
            spectrum2_finite_abelian(mu, opts)
        } else {
            spectrum2_finite_eigen(mu, opts)
        }
    } else if group.lattice_rank().is_some() {
        spectrum2_torus(mu, opts)
    } else {
        Err(CoreError::Unsupported(
            "spectrum2 supports abelian models and finite groups; use radius_estimate on free groups"
                .into(),
        ))
    }
}

fn spectrum2_finite_abelian(mu: &Measure, opts: &SpectralOptions) -> Result<SpectralReport> {
    let dual = FiniteDual::build(mu.group().clone())?;
    let values = dual.transform_all(mu)?;
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let ones: Vec<usize> = (0..values.len())
        .filter(|&j| (values[j] - 1.0).norm() <= opts.gap_tol)
        .collect();
    let min_other = values
        .iter()
        .enumerate()
        .filter(|(j, _)| !ones.contains(j))
        .map(|(_, v)| (v - 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    let a_mu = if ones.len() == values.len() {
        AMuDescription::WholeDual
    } else if ones.is_empty() {
        AMuDescription::Empty
    } else {
        AMuDescription::Characters(
            ones.iter()
                .map(|&j| CharacterParam::FiniteIndex(j))
                .collect(),
        )
    };
    let samples = opts.record_samples.then(|| {
        values
            .iter()
            .enumerate()
            .map(|(j, v)| SampleRecord::new(CharacterParam::FiniteIndex(j), *v))
            .collect()
    });
    Ok(SpectralReport {
        norm2: Interval::point(max_abs),
        radius: Interval::point(max_abs),
        gap_at_one: GapVerdict::GapCertified { delta: min_other },
        a_mu,
        samples,
    })
}

fn spectrum2_finite_eigen(mu: &Measure, opts: &SpectralOptions) -> Result<SpectralReport> {
    let m = conv_matrix(mu, OperatorSide::Left)?;
    let eigs = complex_eigenvalues(&m)?;
    let ata = m.adjoint().matmul(&m);
    let sigma = hermitian_eigenvalues(&ata)?
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt();
    let radius = eigs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let ones: Vec<usize> = (0..eigs.len())
        .filter(|&j| (eigs[j] - 1.0).norm() <= opts.gap_tol)
        .collect();
    let min_other = eigs
        .iter()
        .enumerate()
        .filter(|(j, _)| !ones.contains(j))
        .map(|(_, v)| (v - 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    let a_mu = if ones.is_empty() {
        AMuDescription::Empty
    } else if ones.len() == eigs.len() {
        AMuDescription::WholeDual
    } else {
        AMuDescription::NonemptySeeWitnesses
    };
    let samples = opts.record_samples.then(|| {
        eigs.iter()
            .enumerate()
            .map(|(j, v)| SampleRecord::new(CharacterParam::EigenIndex(j), *v))
            .collect()
    });
    Ok(SpectralReport {
        norm2: Interval::point(sigma),
        radius: Interval::point(radius),
        gap_at_one: GapVerdict::GapCertified { delta: min_other },
        a_mu,
        samples,
    })
}

fn spectrum2_torus(mu: &Measure, opts: &SpectralOptions) -> Result<SpectralReport> {
    let rank = mu.group().lattice_rank().expect("lattice");
    let grid = TorusGrid::new(rank, opts);
    let values = grid.evaluate(mu)?;
    let lip = torus_lipschitz_bound(mu);
    let h = grid.spacing();
    let slack = lip * h / 2.0;

    // Lipschitz self-check along the first axis.
    validate_lipschitz(&values, grid.per_axis, lip, h)?;

    let tv = mu.total_variation();
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let norm2 = Interval::new(max_abs, (max_abs + slack).min(tv));

    // All values equal to 1: the transform is constantly 1 (mu = d_0).
    if values.iter().all(|v| (v - 1.0).norm() <= 1e-13) {
        return Ok(SpectralReport {
            norm2,
            radius: norm2,
            gap_at_one: GapVerdict::GapCertified {
                delta: f64::INFINITY,
            },
            a_mu: AMuDescription::WholeDual,
            samples: record_torus_samples(&grid, &values, opts),
        });
    }

    let min_grid = values
        .iter()
        .map(|v| (v - 1.0).norm())
        .fold(f64::INFINITY, f64::min);
    let certified_floor = min_grid - slack;

    let gap_at_one = if certified_floor > opts.gap_tol {
        GapVerdict::GapCertified {
            delta: certified_floor,
        }
    } else {
        // Candidate root: refine around the best grid point, then try to
        // collect accumulation witnesses.
        let argmin = values
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 1.0)
                    .norm()
                    .partial_cmp(&(b.1 - 1.0).norm())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let t0 = grid.point(argmin);
        let (t_star, m_star) = refine_minimum(mu, &t0, h, grid.refine_rounds)?;
        match collect_accumulation_witnesses(mu, &t_star, h, opts.gap_tol) {
            Some(witnesses) => GapVerdict::AccumulationCertified { witnesses },
            None => GapVerdict::Undetermined {
                measured_min: m_star.min(min_grid),
            },
        }
    };

    let a_mu = match &gap_at_one {
        // The refined location is (numerically) a root of mu^ - 1.
        GapVerdict::AccumulationCertified { .. } => AMuDescription::NonemptySeeWitnesses,
        _ => AMuDescription::Empty,
    };

    Ok(SpectralReport {
        norm2,
        radius: norm2,
        gap_at_one,
        a_mu,
        samples: record_torus_samples(&grid, &values, opts),
    })
}

fn record_torus_samples(
    grid: &TorusGrid,
    values: &[Complex64],
    opts: &SpectralOptions,
) -> Option<Vec<SampleRecord>> {
    if !opts.record_samples {
        return None;
    }
    let stride = (values.len() / 4096).max(1);
    Some(
        values
            .iter()
            .enumerate()
            .step_by(stride)
            .map(|(i, v)| SampleRecord::new(CharacterParam::Torus(grid.point(i)), *v))
            .collect(),
    )
}

fn validate_lipschitz(values: &[Complex64], per_axis: usize, lip: f64, h: f64) -> Result<()> {
    let rows = values.len() / per_axis;
    for r in 0..rows.min(64) {
        let base = r * per_axis;
        for j in 0..per_axis {
            let a = values[base + j];
            let b = values[base + (j + 1) % per_axis];
            if (a - b).norm() > lip * h + 1e-9 {
                return Err(CoreError::Structural(format!(
                    "Lipschitz certificate violated: |delta| = {} > L*h = {}",
                    (a - b).norm(),
                    lip * h
                )));
            }
        }
    }
    Ok(())
}

/// Local grid refinement of `|mu^ - 1|` around `t0`, shrinking the window
/// by 16 per round. Returns the best point and value.
fn refine_minimum(mu: &Measure, t0: &[f64], h: f64, rounds: usize) -> Result<(Vec<f64>, f64)> {
    let rank = t0.len();
    let mut center = t0.to_vec();
    let mut best_val = (torus_transform(mu, &center)? - 1.0).norm();
    let mut width = h;
    let per_round: usize = if rank == 1 { 33 } else { 9 };
    for _ in 0..rounds.max(1) {
        let mut best_local = center.clone();
        let mut best_local_val = best_val;
        let mut indices = vec![0usize; rank];
        let total = per_round.pow(rank as u32);
        for _ in 0..total {
            let t: Vec<f64> = (0..rank)
                .map(|d| center[d] + width * ((indices[d] as f64) / (per_round as f64 - 1.0) - 0.5))
                .collect();
            let v = (torus_transform(mu, &t)? - 1.0).norm();
            if v < best_local_val {
                best_local_val = v;
                best_local = t;
            }
            for d in 0..rank {
                indices[d] += 1;
                if indices[d] < per_round {
                    break;
                }
                indices[d] = 0;
            }
        }
        center = best_local;
        best_val = best_local_val;
        width /= 16.0;
    }
    Ok((center, best_val))
}

/// Tries to produce five sampled values within `tol` of 1 and distinct
/// from 1 near a located root. Fails (None) when the measured minimum
/// cannot be pushed below `tol`, i.e. when no true root is nearby.
fn collect_accumulation_witnesses(
    mu: &Measure,
    t_star: &[f64],
    h: f64,
    tol: f64,
) -> Option<Vec<SampleRecord>> {
    let mut eps = h / 16.0;
    for _ in 0..40 {
        let mut witnesses = Vec::new();
        for k in 1..=5 {
            let mut t = t_star.to_vec();
            t[0] += eps * k as f64;
            let v = torus_transform(mu, &t).ok()?;
            let d = (v - 1.0).norm();
            if d > 1e-14 && d <= tol {
                witnesses.push(SampleRecord::new(CharacterParam::Torus(t), v));
            }
        }
        if witnesses.len() == 5 {
            return Some(witnesses);
        }
        eps *= 0.1;
        if eps < 1e-13 {
            break;
        }
    }
    None
}

/// Gap-at-1 verdict plus `A_mu` description (the spectrum2 subset that the
/// classifier consumes).
pub fn gap_at_one(mu: &Measure, opts: &SpectralOptions) -> Result<(GapVerdict, AMuDescription)> {
    let report = spectrum2(mu, opts)?;
    Ok((report.gap_at_one, report.a_mu))
}

// ---------------------------------------------------------------------------
// Spectral radius estimation.
// ---------------------------------------------------------------------------

/// Certified interval for `r(lambda_p(mu))`.
///
/// Finite groups, where eigenvalues are exact and p-independent, return a
/// point. Lattices use the certified p = 2 spectrum (a lower bound for
/// every p). Elsewhere the interval is the Gelfand sandwich:
/// `max_m ||mu^m||_{l^p}^{1/m}` from below, `min_m` of available norm
/// bounds `^{1/m}` from above (total variation; strong Haagerup on free
/// semigroup supports, where `||mu^m||_{l2} = ||mu||_{l2}^m` holds in
/// closed form to any depth).
pub fn radius_estimate(
    mu: &Measure,
    p: LpExponent,
    depth: usize,
    opts: &SpectralOptions,
) -> Result<Interval> {
    if depth == 0 {
        return Err(CoreError::InvalidInput("radius depth must be >= 1".into()));
    }
    if mu.is_zero() {
        return Ok(Interval::point(0.0));
    }
    let group = mu.group().clone();

    // Finite groups: eigenvalues are p-independent and exact.
    if group.order().is_some() {
        if group.is_abelian() {
            let dual = FiniteDual::build(group)?;
            let values = dual.transform_all(mu)?;
            let r = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            return Ok(Interval::point(r));
        }
        let eigs = complex_eigenvalues(&conv_matrix(mu, OperatorSide::Left)?)?;
        let r = eigs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        return Ok(Interval::point(r));
    }

    let mut lo = 0.0f64;
    let mut hi = mu.total_variation();
    if group.lattice_rank().is_some() {
        let report = spectrum2(mu, opts)?;
        // The p = 2 spectrum bounds every p from below (lattices are
        // amenable, where sigma(lambda_2) sits inside sigma(lambda_p));
        // its upper end applies to p = 2 only.
        lo = lo.max(report.radius.lo);
        if p.is_two() {
            hi = hi.min(report.radius.hi);
        }
    }

    // Gelfand sandwich from materialized powers. Deep powers on free
    // groups grow exponentially while adding little beyond the closed-form
    // bounds below, so the estimator materializes under a tighter budget.
    let pf = p.as_f64();
    let semigroup_l2 = free_semigroup_shape(mu);
    let mat_guard = MemoryGuard {
        max_atoms: opts.guard.max_atoms.min(120_000),
    };
    let mut power = mu.clone();
    for m in 1..=depth {
        if m > 1 {
            match power.convolve_guarded(mu, mat_guard) {
                Ok(pw) => power = pw,
                Err(CoreError::Resource { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        let tvm = power.total_variation();
        hi = hi.min(tvm.powf(1.0 / m as f64));
        let lpm = if pf.is_finite() {
            power.lp_norm(pf)
        } else {
            power.sup_norm()
        };
        lo = lo.max(lpm.powf(1.0 / m as f64));
    }
    // Closed forms on free semigroup supports, valid to any depth. The
    // Haagerup side bounds ||lambda_2(mu^m)|| and so applies to p = 2 only.
    if let Some((word_len, l2)) = semigroup_l2 {
        if p.is_two() {
            lo = lo.max(l2);
            for m in (1..=depth).rev().take(4) {
                let haag = (std::f64::consts::E * ((m * word_len + 1) as f64).sqrt())
                    .powf(1.0 / m as f64)
                    * l2;
                hi = hi.min(haag);
            }
        }
    }
    Ok(Interval::new(lo, hi))
}

/// For measures on free groups supported on same-length all-positive
/// words: `(word length, ||mu||_{l2})`. Concatenation of fixed-length
/// semigroup words is injective, so `||mu^m||_{l2} = ||mu||_{l2}^m`.
fn free_semigroup_shape(mu: &Measure) -> Option<(usize, f64)> {
    strong_haagerup_norm_bound(mu)?;
    let len = mu.atoms().next().map(|(e, _)| match e {
        Element::Free(w) => w.len(),
        _ => 0,
    })?;
    Some((len, mu.l2_norm()))
}

// ---------------------------------------------------------------------------
// Square-spectrum relation and dense-orbit probe.
// ---------------------------------------------------------------------------

/// Evidence for the square-spectrum relation and the +/-1 accumulation
/// symmetry of positive measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquareRelation {
    /// Sup over samples of `|(mu*mu)^(chi) - (mu^(chi))^2|`.
    pub max_multiplicativity_error: f64,
    pub multiplicative: bool,
    /// For positive measures: sampled evidence that values approach 1 / -1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_symmetry: Option<PlusMinusEvidence>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlusMinusEvidence {
    pub near_one: bool,
    pub near_minus_one: bool,
    pub consistent: bool,
    pub tol: f64,
}

/// Samples `(mu*mu)^ = (mu^)^2` pointwise and, for positive mu, whether -1
/// is approached by the range iff 1 is (sampled evidence, not proof).
pub fn square_spectrum_relation(mu: &Measure, opts: &SpectralOptions) -> Result<SquareRelation> {
    let group = mu.group().clone();
    let mu2 = mu.convolve_guarded(mu, opts.guard)?;
    let (values, values2): (Vec<Complex64>, Vec<Complex64>) = if group.order().is_some() {
        if !group.is_abelian() {
            return Err(CoreError::Unsupported(
                "square-spectrum sampling needs an abelian model".into(),
            ));
        }
        let dual = FiniteDual::build(group)?;
        (dual.transform_all(mu)?, dual.transform_all(&mu2)?)
    } else if let Some(rank) = group.lattice_rank() {
        let grid = TorusGrid::new(
            rank,
            &SpectralOptions {
                grid: opts.grid.min(1024),
                ..opts.clone()
            },
        );
        (grid.evaluate(mu)?, grid.evaluate(&mu2)?)
    } else {
        return Err(CoreError::Unsupported(
            "square-spectrum sampling needs an abelian model".into(),
        ));
    };
    let max_err = values
        .iter()
        .zip(&values2)
        .map(|(v, w)| (v * v - w).norm())
        .fold(0.0, f64::max);
    let scale = mu.total_variation().powi(2).max(1.0);
    let positive_symmetry = if mu.is_positive() {
        let tol = 1e-6;
        let near_one = values.iter().any(|v| (v - 1.0).norm() <= tol);
        let near_minus_one = values.iter().any(|v| (v + 1.0).norm() <= tol);
        Some(PlusMinusEvidence {
            near_one,
            near_minus_one,
            consistent: near_one == near_minus_one || near_one,
            tol,
        })
    } else {
        None
    };
    Ok(SquareRelation {
        max_multiplicativity_error: max_err,
        multiplicative: max_err <= 1e-12 * scale,
        positive_symmetry,
    })
}

/// Dense-orbit probe for the circle group: for the point mass at
/// `s = e^{2 pi i x}` the dual is `Z` and the transform at `k` is `s^k`.
/// Finds `k <= max_k` with `|s^k - 1| < tol`, `s^k != 1`; five hits
/// certify accumulation at 1.
pub fn circle_point_mass_gap(x: f64, max_k: u64, tol: f64) -> GapVerdict {
    let mut witnesses = Vec::new();
    let mut measured_min = f64::INFINITY;
    for k in 1..=max_k {
        let frac = (k as f64 * x) - (k as f64 * x).round();
        let ang = 2.0 * PI * frac;
        let v = Complex64::new(ang.cos(), ang.sin());
        let d = (v - 1.0).norm();
        if d > 1e-14 {
            measured_min = measured_min.min(d);
            if d < tol {
                witnesses.push(SampleRecord::new(CharacterParam::DualInteger(k as i64), v));
                if witnesses.len() == 5 {
                    return GapVerdict::AccumulationCertified { witnesses };
                }
            }
        }
    }
    GapVerdict::Undetermined {
        measured_min: if measured_min.is_finite() {
            measured_min
        } else {
            0.0
        },
    }
}
