//! The finitely supported measure algebra on a discrete group:
//! convolution, involution, total-variation norms, powers, Cesàro
//! averages, structural predicates and the vague-convergence probe.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::group::{Element, GroupHandle};
use crate::util::{KahanSum, TriState};

/// Atoms with modulus at or below this are dropped from storage.
pub const DEDUP_EPSILON: f64 = 1e-15;

/// Atom-count budget for operations whose support can grow.
#[derive(Debug, Clone, Copy)]
pub struct MemoryGuard {
    pub max_atoms: usize,
}

impl MemoryGuard {
    pub fn from_mb(mb: usize) -> Self {
        // ~96 bytes per stored atom across map node, element and coefficient.
        MemoryGuard {
            max_atoms: (mb.max(1)) * 1_048_576 / 96,
        }
    }
}

impl Default for MemoryGuard {
    fn default() -> Self {
        MemoryGuard { max_atoms: 4_000_000 }
    }
}

/// A finitely supported complex measure. Immutable after construction;
/// all operations return new measures.
#[derive(Debug, Clone)]
pub struct Measure {
    group: Arc<GroupHandle>,
    atoms: BTreeMap<Element, Complex64>,
    tv: f64,
}

impl Measure {
    pub fn new(
        group: Arc<GroupHandle>,
        atoms: impl IntoIterator<Item = (Element, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Element, Complex64> = BTreeMap::new();
        for (e, c) in atoms {
            group.check_element(&e)?;
            *map.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_map(group, map))
    }

    pub fn from_real_atoms(
        group: Arc<GroupHandle>,
        atoms: impl IntoIterator<Item = (Element, f64)>,
    ) -> Result<Self> {
        Self::new(
            group,
            atoms
                .into_iter()
                .map(|(e, x)| (e, Complex64::new(x, 0.0))),
        )
    }

    pub fn zero(group: Arc<GroupHandle>) -> Self {
        Self::from_map(group, BTreeMap::new())
    }

    pub fn dirac(group: Arc<GroupHandle>, at: Element) -> Result<Self> {
        Self::new(group, [(at, Complex64::new(1.0, 0.0))])
    }

    fn from_map(group: Arc<GroupHandle>, mut map: BTreeMap<Element, Complex64>) -> Self {
        map.retain(|_, c| c.norm() > DEDUP_EPSILON);
        let mut acc = KahanSum::new();
        for c in map.values() {
            acc.add(c.norm());
        }
        let tv = acc.value();
        Measure {
            group,
            atoms: map,
            tv,
        }
    }

    pub fn group(&self) -> &Arc<GroupHandle> {
        &self.group
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Element, &Complex64)> {
        self.atoms.iter()
    }

    pub fn support(&self) -> Vec<Element> {
        self.atoms.keys().cloned().collect()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coeff(&self, e: &Element) -> Complex64 {
        self.atoms.get(e).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Total variation norm (sum of atom moduli).
    pub fn total_variation(&self) -> f64 {
        self.tv
    }

    /// Total mass: the sum of all coefficients.
    pub fn mass(&self) -> Complex64 {
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for c in self.atoms.values() {
            re.add(c.re);
            im.add(c.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// l^p norm of the coefficient vector, `p >= 1` finite.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mut acc = KahanSum::new();
        for c in self.atoms.values() {
            acc.add(c.norm().powf(p));
        }
        acc.value().powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = KahanSum::new();
        for c in self.atoms.values() {
            let m = c.norm();
            acc.add(m * m);
        }
        acc.value().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.atoms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max word length over the support; the exact support growth per
    /// convolution step.
    pub fn max_step_growth(&self) -> usize {
        self.atoms
            .keys()
            .map(|e| self.group.canonical_length(e))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> Measure {
        let map = self
            .atoms
            .iter()
            .map(|(e, v)| (e.clone(), v * c))
            .collect();
        Self::from_map(self.group.clone(), map)
    }

    pub fn scale_real(&self, t: f64) -> Measure {
        self.scale(Complex64::new(t, 0.0))
    }

    pub fn add(&self, other: &Measure) -> Result<Measure> {
        self.same_group(other)?;
        let mut map = self.atoms.clone();
        for (e, c) in &other.atoms {
            *map.entry(e.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_map(self.group.clone(), map))
    }

    pub fn sub(&self, other: &Measure) -> Result<Measure> {
        self.add(&other.scale_real(-1.0))
    }

    fn same_group(&self, other: &Measure) -> Result<()> {
        if Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group {
            Ok(())
        } else {
            Err(CoreError::GroupMismatch {
                left: self.group.label.clone(),
                right: other.group.label.clone(),
            })
        }
    }

    /// Convolution `(mu * nu)(s) = sum_{xy = s} mu(x) nu(y)`.
    pub fn convolve_guarded(&self, other: &Measure, guard: MemoryGuard) -> Result<Measure> {
        self.same_group(other)?;
        let mut map: BTreeMap<Element, Complex64> = BTreeMap::new();
        for (x, a) in &self.atoms {
            for (y, b) in &other.atoms {
                let s = self.group.mul_unchecked(x, y);
                *map.entry(s).or_insert(Complex64::new(0.0, 0.0)) += a * b;
                if map.len() > guard.max_atoms {
                    return Err(CoreError::Resource {
                        what: "convolution support".into(),
                        needed: map.len(),
                        budget: guard.max_atoms,
                    });
                }
            }
        }
        Ok(Self::from_map(self.group.clone(), map))
    }

    pub fn convolve(&self, other: &Measure) -> Result<Measure> {
        self.convolve_guarded(other, MemoryGuard::default())
    }

    /// The involution `mu*(s) = conj(mu(s^{-1}))`.
    pub fn involution(&self) -> Measure {
        let map = self
            .atoms
            .iter()
            .map(|(e, c)| (self.group.inverse_unchecked(e), c.conj()))
            .collect();
        Self::from_map(self.group.clone(), map)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.involution())
            .map(|d| d.total_variation() <= tol)
            .unwrap_or(false)
    }

    /// `mu * mu^* = mu^* * mu` up to `tol` in total variation. Abelian
    /// groups short-circuit to true.
    pub fn is_operator_normal(&self, tol: f64) -> Result<bool> {
        if self.group.is_abelian() {
            return Ok(true);
        }
        let star = self.involution();
        let left = self.convolve(&star)?;
        let right = star.convolve(self)?;
        Ok(left.sub(&right)?.total_variation() <= tol)
    }

    /// All coefficients real and nonnegative (within the dedup epsilon).
    pub fn is_positive(&self) -> bool {
        self.atoms
            .values()
            .all(|c| c.im.abs() <= DEDUP_EPSILON && c.re >= -DEDUP_EPSILON)
    }

    /// Positive with total variation 1 within 1e-12.
    pub fn is_probability(&self) -> bool {
        self.is_positive() && (self.tv - 1.0).abs() <= 1e-12
    }

    /// `mu^n`. Finite groups use binary powering (supports saturate at
    /// |G|); infinite models multiply sequentially to keep intermediate
    /// supports minimal.
    pub fn power_guarded(&self, n: usize, guard: MemoryGuard) -> Result<Measure> {
        if n == 0 {
            return Measure::dirac(self.group.clone(), self.group.identity());
        }
        if self.group.order().is_some() {
            let mut base = self.clone();
            let mut acc: Option<Measure> = None;
            let mut k = n;
            while k > 0 {
                if k & 1 == 1 {
                    acc = Some(match acc {
                        None => base.clone(),
                        Some(a) => a.convolve_guarded(&base, guard)?,
                    });
                }
                k >>= 1;
                if k > 0 {
                    base = base.convolve_guarded(&base, guard)?;
                }
            }
            Ok(acc.expect("n >= 1"))
        } else {
            let mut acc = self.clone();
            for _ in 1..n {
                acc = acc.convolve_guarded(self, guard)?;
            }
            Ok(acc)
        }
    }

    pub fn power(&self, n: usize) -> Result<Measure> {
        self.power_guarded(n, MemoryGuard::default())
    }

    /// The Cesàro average `(mu + mu^2 + ... + mu^n) / n`.
    pub fn cesaro_guarded(&self, n: usize, guard: MemoryGuard) -> Result<Measure> {
        if n == 0 {
            return Err(CoreError::InvalidInput("cesaro needs n >= 1".into()));
        }
        let mut power = self.clone();
        let mut sum = self.clone();
        for _ in 1..n {
            power = power.convolve_guarded(self, guard)?;
            sum = sum.add(&power)?;
            if sum.atom_count() > guard.max_atoms {
                return Err(CoreError::Resource {
                    what: "cesaro accumulation support".into(),
                    needed: sum.atom_count(),
                    budget: guard.max_atoms,
                });
            }
        }
        Ok(sum.scale_real(1.0 / n as f64))
    }

    pub fn cesaro(&self, n: usize) -> Result<Measure> {
        self.cesaro_guarded(n, MemoryGuard::default())
    }

    /// Total-variation distance to another measure.
    pub fn tv_distance(&self, other: &Measure) -> Result<f64> {
        Ok(self.sub(other)?.total_variation())
    }
}

/// Options for [`Measure::vague_probe`].
#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub horizon: usize,
    /// Coefficient tolerance for declaring a vague limit.
    pub tol: f64,
    /// Radius of the ball (in support generators) whose elements are
    /// monitored in addition to user-supplied ones.
    pub monitor_radius: usize,
    pub monitor_cap: usize,
    /// Cesàro norms above `blowup_factor * max(1, ||mu||)` certify
    /// unboundedness.
    pub blowup_factor: f64,
    pub guard: MemoryGuard,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            horizon: 4096,
            tol: 1e-3,
            monitor_radius: 4,
            monitor_cap: 128,
            blowup_factor: 10.0,
            guard: MemoryGuard::default(),
        }
    }
}

/// One row of a Cesàro trace.
#[derive(Debug, Clone)]
pub struct CesaroRecord {
    pub n: usize,
    /// `||mu_[n]||` in total variation.
    pub cesaro_norm: f64,
    /// `||mu^n|| / n`.
    pub power_norm_over_n: f64,
    /// Coefficients of `mu_[n]` at the monitored elements; `None` once
    /// materialization stopped.
    pub monitored: Option<Vec<Complex64>>,
}

/// Outcome of the empirical vague-ergodicity probe.
#[derive(Debug, Clone)]
pub struct CesaroTrace {
    pub horizon: usize,
    pub monitor: Vec<Element>,
    pub records: Vec<CesaroRecord>,
    pub cesaro_bounded: TriState,
    /// First `n` at which the blow-up threshold was crossed.
    pub cesaro_unbounded_witness: Option<usize>,
    /// Largest observed (or exactly computed) `||mu_[n]||`.
    pub cesaro_sup: f64,
    pub power_bounded: TriState,
    pub vague_limit: Option<Measure>,
    /// Powers were materialized exactly for `n` up to this bound.
    pub materialized_up_to: usize,
    pub blowup_threshold: f64,
    pub tol: f64,
}

impl Measure {
    /// Runs the Cesàro iteration `mu_[n] = (mu + ... + mu^n)/n`, recording
    /// norms and monitored coefficients, and derives boundedness and
    /// vague-limit verdicts.
    ///
    /// Powers are materialized exactly while the atom guard allows. For a
    /// positive measure the norm bookkeeping is exact mass arithmetic
    /// (`||mu^n|| = ||mu||^n`, and Cesàro norms are mass averages), so norm
    /// verdicts extend to the full horizon even after coefficient
    /// materialization stops. For signed measures exceeding the guard the
    /// probe reports a resource error.
    pub fn vague_probe(&self, user_monitor: &[Element], opts: &ProbeOptions) -> Result<CesaroTrace> {
        if opts.horizon < 2 {
            return Err(CoreError::InvalidInput("probe horizon must be >= 2".into()));
        }
        let blowup_threshold = opts.blowup_factor * self.tv.max(1.0);
        let monitor = self.monitor_set(user_monitor, opts)?;

        if self.is_zero() {
            let records = vec![CesaroRecord {
                n: 1,
                cesaro_norm: 0.0,
                power_norm_over_n: 0.0,
                monitored: Some(vec![Complex64::new(0.0, 0.0); monitor.len()]),
            }];
            return Ok(CesaroTrace {
                horizon: opts.horizon,
                monitor,
                records,
                cesaro_bounded: TriState::Yes,
                cesaro_unbounded_witness: None,
                cesaro_sup: 0.0,
                power_bounded: TriState::Yes,
                vague_limit: Some(Measure::zero(self.group.clone())),
                materialized_up_to: opts.horizon,
                blowup_threshold,
                tol: opts.tol,
            });
        }

        let positive = self.is_positive();
        let mass = self.tv; // equals total mass for positive measures

        let mut records: Vec<CesaroRecord> = Vec::with_capacity(opts.horizon);
        let mut power = self.clone();
        let mut sum = self.clone();
        let mut materialized_up_to = 1usize;
        let mut materializing = true;

        // Exact norm bookkeeping for the positive fast path.
        let mut mass_pow = mass;
        let mut mass_sum = mass;

        let mut cesaro_sup = 0.0f64;
        let mut unbounded_witness: Option<usize> = None;
        let mut power_sup = 0.0f64;
        let mut min_power_norm = f64::INFINITY;

        for n in 1..=opts.horizon {
            if n > 1 {
                if materializing {
                    match power.convolve_guarded(self, opts.guard) {
                        Ok(p) => {
                            power = p;
                            match sum.add(&power) {
                                Ok(s) if s.atom_count() <= opts.guard.max_atoms => sum = s,
                                _ => materializing = false,
                            }
                        }
                        Err(CoreError::Resource { .. }) => materializing = false,
                        Err(e) => return Err(e),
                    }
                    if materializing {
                        materialized_up_to = n;
                    } else if !positive {
                        return Err(CoreError::Resource {
                            what: format!("vague probe materialization at n = {n}"),
                            needed: opts.guard.max_atoms + 1,
                            budget: opts.guard.max_atoms,
                        });
                    }
                }
                mass_pow *= mass;
                mass_sum += mass_pow;
            }

            let (cesaro_norm, power_norm) = if materializing {
                (sum.total_variation() / n as f64, power.total_variation())
            } else {
                // positive: exact mass arithmetic
                (mass_sum / n as f64, mass_pow)
            };
            cesaro_sup = cesaro_sup.max(cesaro_norm);
            power_sup = power_sup.max(power_norm);
            min_power_norm = min_power_norm.min(power_norm);

            let monitored = if materializing {
                let inv_n = 1.0 / n as f64;
                Some(monitor.iter().map(|e| sum.coeff(e) * inv_n).collect())
            } else {
                None
            };
            records.push(CesaroRecord {
                n,
                cesaro_norm,
                power_norm_over_n: power_norm / n as f64,
                monitored,
            });

            if cesaro_norm > blowup_threshold && unbounded_witness.is_none() {
                unbounded_witness = Some(n);
                break;
            }
        }

        let cesaro_bounded = if unbounded_witness.is_some() {
            TriState::No
        } else {
            TriState::Yes
        };

        // Power boundedness: certified yes when ||mu|| <= 1 (submultiplicative)
        // or some power norm dipped strictly below 1; certified no on blow-up.
        let power_bounded = if power_sup > blowup_threshold {
            TriState::No
        } else if self.tv <= 1.0 + DEDUP_EPSILON || min_power_norm < 1.0 - 1e-12 {
            TriState::Yes
        } else {
            TriState::Unknown
        };

        // Vague limit: monitored coefficients Cauchy over the last quarter
        // of the materialized horizon, with bounded Cesàro norms.
        let mut vague_limit = None;
        if unbounded_witness.is_none() && materialized_up_to == opts.horizon {
            let last = records
                .last()
                .and_then(|r| r.monitored.as_ref())
                .cloned()
                .unwrap_or_default();
            let from = (3 * opts.horizon) / 4;
            let cauchy = records
                .iter()
                .filter(|r| r.n >= from)
                .all(|r| match &r.monitored {
                    Some(vals) => vals
                        .iter()
                        .zip(&last)
                        .all(|(a, b)| (a - b).norm() <= opts.tol),
                    None => false,
                });
            if cauchy {
                let atoms: Vec<(Element, Complex64)> = monitor
                    .iter()
                    .cloned()
                    .zip(last.iter().copied())
                    .filter(|(_, c)| c.norm() > opts.tol)
                    .collect();
                vague_limit = Some(Measure::new(self.group.clone(), atoms)?);
            }
        }

        Ok(CesaroTrace {
            horizon: opts.horizon,
            monitor,
            records,
            cesaro_bounded,
            cesaro_unbounded_witness: unbounded_witness,
            cesaro_sup,
            power_bounded,
            vague_limit,
            materialized_up_to,
            blowup_threshold,
            tol: opts.tol,
        })
    }

    fn monitor_set(&self, user: &[Element], opts: &ProbeOptions) -> Result<Vec<Element>> {
        let mut set: BTreeMap<Element, ()> = BTreeMap::new();
        for e in user {
            self.group.check_element(e)?;
            set.insert(e.clone(), ());
        }
        set.insert(self.group.identity(), ());
        let gens: Vec<Element> = self
            .atoms
            .keys()
            .filter(|e| **e != self.group.identity())
            .cloned()
            .collect();
        if !gens.is_empty() {
            let ball = self
                .group
                .ball(opts.monitor_radius, &gens, 200_000)
                .unwrap_or_else(|_| vec![self.group.identity()]);
            for e in ball {
                if set.len() >= opts.monitor_cap {
                    break;
                }
                set.insert(e, ());
            }
        }
        Ok(set.into_keys().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::standard_generators;

    fn z() -> Arc<GroupHandle> {
        Arc::new(GroupHandle::lattice(1).unwrap())
    }
    fn z3() -> Arc<GroupHandle> {
        Arc::new(GroupHandle::cyclic(3).unwrap())
    }
    fn lat(k: i64) -> Element {
        Element::Lattice(vec![k])
    }
    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// mu = (1/3)(d_1 + d_0 - d_{-1}) on Z.
    fn third_measure() -> Measure {
        Measure::from_real_atoms(
            z(),
            [(lat(1), 1.0 / 3.0), (lat(0), 1.0 / 3.0), (lat(-1), -1.0 / 3.0)],
        )
        .unwrap()
    }

    /// mu = (1/2)(d_1 - d_2) on Z.
    fn half_measure() -> Measure {
        Measure::from_real_atoms(z(), [(lat(1), 0.5), (lat(2), -0.5)]).unwrap()
    }

    #[test]
    fn dirac_convolution() {
        let g = z();
        let dx = Measure::dirac(g.clone(), lat(3)).unwrap();
        let dy = Measure::dirac(g.clone(), lat(-5)).unwrap();
        let d = dx.convolve(&dy).unwrap();
        assert_eq!(d.support(), vec![lat(-2)]);
        assert!((d.coeff(&lat(-2)) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn square_of_third_measure_is_example_value() {
        let mu = third_measure();
        let mu2 = mu.convolve(&mu).unwrap();
        let expect = [
            (lat(2), 1.0 / 9.0),
            (lat(1), 2.0 / 9.0),
            (lat(0), -1.0 / 9.0),
            (lat(-1), -2.0 / 9.0),
            (lat(-2), 1.0 / 9.0),
        ];
        for (e, v) in expect {
            assert!((mu2.coeff(&e) - c(v)).norm() < 1e-15, "coeff at {e}");
        }
        assert!((mu2.total_variation() - 7.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn square_of_half_measure() {
        // Brute-force expansion of the 4-term product.
        let mu = half_measure();
        let mu2 = mu.convolve(&mu).unwrap();
        assert!((mu2.coeff(&lat(2)) - c(0.25)).norm() < 1e-15);
        assert!((mu2.coeff(&lat(3)) - c(-0.5)).norm() < 1e-15);
        assert!((mu2.coeff(&lat(4)) - c(0.25)).norm() < 1e-15);
        assert_eq!(mu2.atom_count(), 3);
    }

    #[test]
    fn involution_examples() {
        let g = z();
        let mu = half_measure();
        let star = mu.involution();
        assert!((star.coeff(&lat(-1)) - c(0.5)).norm() < 1e-15);
        assert!((star.coeff(&lat(-2)) - c(-0.5)).norm() < 1e-15);
        assert!((star.involution().tv_distance(&mu).unwrap()) < 1e-15);
        assert!((star.total_variation() - mu.total_variation()).abs() < 1e-15);

        let nu = Measure::new(g, [(lat(4), Complex64::new(1.0, 1.0))]).unwrap();
        let nustar = nu.involution();
        assert!((nustar.coeff(&lat(-4)) - Complex64::new(1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn operator_normality() {
        // Abelian: always true.
        assert!(half_measure().is_operator_normal(1e-12).unwrap());

        let f2 = Arc::new(GroupHandle::free(2).unwrap());
        let gens = standard_generators(&f2);
        // Hermitian measure on F2: d_{x1} + d_{x1^-1}.
        let herm = Measure::from_real_atoms(
            f2.clone(),
            [
                (gens[0].clone(), 1.0),
                (f2.inverse(&gens[0]).unwrap(), 1.0),
            ],
        )
        .unwrap();
        assert!(herm.is_hermitian(1e-15));
        assert!(herm.is_operator_normal(1e-12).unwrap());

        // d_{x1} + d_{x2} is not operator-normal: the two products have
        // different supports.
        let mu = Measure::from_real_atoms(
            f2.clone(),
            [(gens[0].clone(), 1.0), (gens[1].clone(), 1.0)],
        )
        .unwrap();
        assert!(!mu.is_operator_normal(1e-9).unwrap());
    }

    #[test]
    fn cesaro_of_identity_dirac() {
        let g = z3();
        let de = Measure::dirac(g.clone(), g.identity()).unwrap();
        for n in [1usize, 2, 5, 17] {
            let cz = de.cesaro(n).unwrap();
            assert!(cz.tv_distance(&de).unwrap() < 1e-12);
        }
    }

    #[test]
    fn power_norms_of_half_measure_nonincreasing() {
        let mu = half_measure();
        let mut prev = f64::INFINITY;
        let mut p = mu.clone();
        for _ in 1..=30 {
            let tv = p.total_variation();
            assert!(tv <= prev + 1e-12);
            assert!(tv <= 1.0 + 1e-12);
            prev = tv;
            p = p.convolve(&mu).unwrap();
        }
    }

    #[test]
    fn scaled_third_measure_power_decay() {
        let mu = third_measure().scale_real(1.1);
        let p20 = mu.power(20).unwrap();
        assert!(p20.total_variation() < 0.2, "got {}", p20.total_variation());
    }

    #[test]
    fn cesaro_recursion_identity() {
        let mu = third_measure();
        for n in [1usize, 3, 7] {
            let a = mu.cesaro(n + 1).unwrap().scale_real((n + 1) as f64);
            let b = mu
                .cesaro(n)
                .unwrap()
                .scale_real(n as f64)
                .add(&mu.power(n + 1).unwrap())
                .unwrap();
            assert!(a.tv_distance(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn power_binary_matches_sequential() {
        let g = z3();
        let mu = Measure::from_real_atoms(
            g.clone(),
            [(Element::Finite(1), 0.7), (Element::Finite(2), -0.4)],
        )
        .unwrap();
        let mut seq = mu.clone();
        for _ in 1..9 {
            seq = seq.convolve(&mu).unwrap();
        }
        assert!(mu.power(9).unwrap().tv_distance(&seq).unwrap() < 1e-12);
    }

    #[test]
    fn mass_is_multiplicative() {
        let mu = third_measure();
        let nu = half_measure();
        let prod = mu.convolve(&nu).unwrap();
        let expected = mu.mass() * nu.mass();
        assert!((prod.mass() - expected).norm() < 1e-14);
    }

    #[test]
    fn probe_random_walk_on_z_converges_vaguely_to_zero() {
        let g = z();
        let mu =
            Measure::from_real_atoms(g, [(lat(0), 0.5), (lat(1), 0.5)]).unwrap();
        let opts = ProbeOptions {
            horizon: 2048,
            tol: 0.05,
            ..ProbeOptions::default()
        };
        let trace = mu.vague_probe(&[], &opts).unwrap();
        assert_eq!(trace.cesaro_bounded, TriState::Yes);
        assert_eq!(trace.power_bounded, TriState::Yes);
        let limit = trace.vague_limit.expect("limit should be declared");
        assert!(limit.is_zero(), "limit {:?}", limit.support());
    }

    #[test]
    fn probe_cycle_averages_to_uniform() {
        let g = z3();
        let mu = Measure::dirac(g.clone(), Element::Finite(1)).unwrap();
        let opts = ProbeOptions {
            horizon: 2046,
            tol: 1e-3,
            ..ProbeOptions::default()
        };
        let trace = mu.vague_probe(&[], &opts).unwrap();
        assert_eq!(trace.cesaro_bounded, TriState::Yes);
        let limit = trace.vague_limit.expect("limit should be declared");
        for e in g.elements().unwrap() {
            assert!(
                (limit.coeff(&e) - c(1.0 / 3.0)).norm() <= 1e-3,
                "coeff at {e}: {}",
                limit.coeff(&e)
            );
        }
    }

    #[test]
    fn probe_free_group_supercritical_blows_up() {
        let f3 = Arc::new(GroupHandle::free(3).unwrap());
        let gens = standard_generators(&f3);
        let nu = Measure::from_real_atoms(
            f3,
            gens.iter().map(|e| (e.clone(), 0.4)),
        )
        .unwrap();
        let opts = ProbeOptions {
            horizon: 256,
            guard: MemoryGuard { max_atoms: 60_000 },
            ..ProbeOptions::default()
        };
        let trace = nu.vague_probe(&[], &opts).unwrap();
        assert_eq!(trace.cesaro_bounded, TriState::No);
        let witness = trace.cesaro_unbounded_witness.unwrap();
        // ||nu_[n]|| = (1/n) sum_k 1.2^k exceeds 12 around n = 22.
        assert!(witness > 10 && witness < 40, "witness {witness}");
        assert!(trace.vague_limit.is_none());
        assert_eq!(trace.power_bounded, TriState::No);
    }

    #[test]
    fn probe_signed_guard_error() {
        let f2 = Arc::new(GroupHandle::free(2).unwrap());
        let gens = standard_generators(&f2);
        let mu = Measure::from_real_atoms(
            f2,
            [(gens[0].clone(), 0.9), (gens[1].clone(), -0.6)],
        )
        .unwrap();
        let opts = ProbeOptions {
            horizon: 64,
            guard: MemoryGuard { max_atoms: 500 },
            ..ProbeOptions::default()
        };
        assert!(matches!(
            mu.vague_probe(&[], &opts),
            Err(CoreError::Resource { .. })
        ));
    }

    #[test]
    fn group_mismatch_rejected() {
        let mu = third_measure();
        let g3 = z3();
        let nu = Measure::dirac(g3, Element::Finite(1)).unwrap();
        assert!(mu.convolve(&nu).is_err());
    }
}
