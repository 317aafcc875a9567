//! Discrete group models and element arithmetic.
//!
//! Three models are supported: finite groups given by a Cayley table,
//! integer lattices `Z^d`, and free groups `F_k` on reduced words. The
//! module also answers the structural questions the rest of the crate
//! needs: the subgroup generated by a support, finiteness (the discrete
//! stand-in for compactness), amenability, and ball enumeration for
//! windowed operators.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::util::TriState;

/// One letter of a reduced free-group word: generator index and whether it
/// is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u16,
    pub inv: bool,
}

impl Letter {
    fn flipped(self) -> Self {
        Letter {
            gen: self.gen,
            inv: !self.inv,
        }
    }
    fn cancels(self, other: Letter) -> bool {
        self.gen == other.gen && self.inv != other.inv
    }
    fn key(self) -> (u16, bool) {
        (self.gen, self.inv)
    }
}

/// A reduced word in a free group. The letter sequence never contains an
/// adjacent `x x^{-1}` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeWord(Vec<Letter>);

impl FreeWord {
    pub fn empty() -> Self {
        FreeWord(Vec::new())
    }

    /// Builds a word from arbitrary letters, cancelling as it goes.
    /// Reducing an already reduced word is the identity map.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut stack: Vec<Letter> = Vec::new();
        for l in letters {
            match stack.last() {
                Some(&top) if top.cancels(l) => {
                    stack.pop();
                }
                _ => stack.push(l),
            }
        }
        FreeWord(stack)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &FreeWord) -> FreeWord {
        FreeWord::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|l| l.flipped()).collect())
    }

    fn max_gen(&self) -> Option<u16> {
        self.0.iter().map(|l| l.gen).max()
    }

    /// Parses words like `"x1 x2^-1 x3^2"`. Input need not be reduced;
    /// the result always is. `"e"` denotes the empty word.
    pub fn parse(text: &str, rank: usize) -> Result<FreeWord> {
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            if token == "e" || token == "1" {
                continue;
            }
            let body = token
                .strip_prefix('x')
                .ok_or_else(|| bad_word(text, token))?;
            let (gen_part, exp) = match body.split_once('^') {
                Some((g, e)) => {
                    let exp: i64 = e.parse().map_err(|_| bad_word(text, token))?;
                    (g, exp)
                }
                None => (body, 1),
            };
            let gen: usize = gen_part.parse().map_err(|_| bad_word(text, token))?;
            if gen == 0 || gen > rank {
                return Err(CoreError::InvalidInput(format!(
                    "generator x{gen} out of range 1..={rank} in `{text}`"
                )));
            }
            let letter = Letter {
                gen: (gen - 1) as u16,
                inv: exp < 0,
            };
            for _ in 0..exp.unsigned_abs() {
                letters.push(letter);
            }
        }
        Ok(FreeWord::from_letters(letters))
    }
}

fn bad_word(text: &str, token: &str) -> CoreError {
    CoreError::InvalidInput(format!("cannot parse word token `{token}` in `{text}`"))
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let e: i64 = if l.inv { -(run as i64) } else { run as i64 };
            if e == 1 {
                write!(f, "x{}", l.gen + 1)?;
            } else {
                write!(f, "x{}^{}", l.gen + 1, e)?;
            }
            i += run;
        }
        Ok(())
    }
}

/// A group element in one of the three models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Element {
    /// Index into a finite Cayley table.
    Finite(u32),
    /// Integer vector of length `rank`.
    Lattice(Vec<i64>),
    /// Reduced word.
    Free(FreeWord),
}

impl Element {
    pub fn kind(&self) -> &'static str {
        match self {
            Element::Finite(_) => "finite",
            Element::Lattice(_) => "lattice",
            Element::Free(_) => "free",
        }
    }

    fn order_class(&self) -> u8 {
        match self {
            Element::Finite(_) => 0,
            Element::Lattice(_) => 1,
            Element::Free(_) => 2,
        }
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Deterministic total order: finite elements by index, lattice vectors by
/// (l1-length, coordinates), words length-lexicographically.
impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Element::Finite(a), Element::Finite(b)) => a.cmp(b),
            (Element::Lattice(a), Element::Lattice(b)) => {
                let la: u64 = a.iter().map(|x| x.unsigned_abs()).sum();
                let lb: u64 = b.iter().map(|x| x.unsigned_abs()).sum();
                la.cmp(&lb).then_with(|| a.cmp(b))
            }
            (Element::Free(a), Element::Free(b)) => a.len().cmp(&b.len()).then_with(|| {
                a.letters()
                    .iter()
                    .map(|l| l.key())
                    .cmp(b.letters().iter().map(|l| l.key()))
            }),
            _ => self.order_class().cmp(&other.order_class()),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Finite(i) => write!(f, "g{i}"),
            Element::Lattice(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Element::Free(w) => write!(f, "{w}"),
        }
    }
}

/// The underlying model of a group handle.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupModel {
    FiniteCayley {
        n: usize,
        /// Row-major n*n product table.
        table: Vec<u32>,
        inv: Vec<u32>,
        identity: u32,
    },
    Lattice {
        rank: usize,
    },
    Free {
        rank: usize,
    },
}

/// A discrete group: model plus a display label. Immutable after
/// construction; all arithmetic goes through this handle.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupHandle {
    pub(crate) model: GroupModel,
    pub label: String,
}

impl GroupHandle {
    /// Builds a finite group from a multiplication table, validating the
    /// group laws: rows/columns are permutations, a two-sided identity and
    /// inverses exist, and associativity holds (exhaustively for n <= 64,
    /// on 200k pseudo-random triples beyond that).
    pub fn finite_cayley(table_rows: &[Vec<usize>], label: impl Into<String>) -> Result<Self> {
        let n = table_rows.len();
        if n == 0 {
            return Err(CoreError::Structural("empty Cayley table".into()));
        }
        let mut table = vec![0u32; n * n];
        for (i, row) in table_rows.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::Structural(format!(
                    "Cayley row {i} has length {} (expected {n})",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(CoreError::Structural(format!(
                        "Cayley entry ({i},{j}) = {v} out of range"
                    )));
                }
                table[i * n + j] = v as u32;
            }
        }
        // Latin square check.
        for i in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for j in 0..n {
                let r = table[i * n + j] as usize;
                let c = table[j * n + i] as usize;
                if row_seen[r] || col_seen[c] {
                    return Err(CoreError::Structural(format!(
                        "Cayley row/column {i} is not a permutation"
                    )));
                }
                row_seen[r] = true;
                col_seen[c] = true;
            }
        }
        // Two-sided identity.
        let mut identity = None;
        'outer: for e in 0..n {
            for j in 0..n {
                if table[e * n + j] != j as u32 || table[j * n + e] != j as u32 {
                    continue 'outer;
                }
            }
            identity = Some(e as u32);
            break;
        }
        let identity =
            identity.ok_or_else(|| CoreError::Structural("Cayley table has no identity".into()))?;
        // Inverses.
        let mut inv = vec![u32::MAX; n];
        for a in 0..n {
            for b in 0..n {
                if table[a * n + b] == identity && table[b * n + a] == identity {
                    inv[a] = b as u32;
                    break;
                }
            }
            if inv[a] == u32::MAX {
                return Err(CoreError::Structural(format!("element {a} has no inverse")));
            }
        }
        // Associativity.
        let assoc = |a: usize, b: usize, c: usize| {
            let ab = table[a * n + b] as usize;
            let bc = table[b * n + c] as usize;
            table[ab * n + c] == table[a * n + bc]
        };
        if n <= 64 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !assoc(a, b, c) {
                            return Err(CoreError::Structural(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut state = 0x9e3779b97f4a7c15u64;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as usize
            };
            for _ in 0..200_000 {
                let (a, b, c) = (next() % n, next() % n, next() % n);
                if !assoc(a, b, c) {
                    return Err(CoreError::Structural(format!(
                        "associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
        Ok(GroupHandle {
            model: GroupModel::FiniteCayley {
                n,
                table,
                inv,
                identity,
            },
            label: label.into(),
        })
    }

    /// Cyclic group of order n, elements 0..n with addition mod n.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidInput("cyclic order must be >= 1".into()));
        }
        let rows: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::finite_cayley(&rows, format!("Z{n}"))
    }

    /// Direct product of cyclic groups, mixed-radix element indexing.
    pub fn product_of_cyclics(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&m| m == 0) {
            return Err(CoreError::InvalidInput(
                "product of cyclics needs positive orders".into(),
            ));
        }
        let n: usize = orders.iter().product();
        let decode = |mut i: usize| -> Vec<usize> {
            orders
                .iter()
                .map(|&m| {
                    let d = i % m;
                    i /= m;
                    d
                })
                .collect()
        };
        let encode = |digits: &[usize]| -> usize {
            let mut idx = 0;
            for (d, m) in digits.iter().zip(orders).rev() {
                idx = idx * m + d;
            }
            idx
        };
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let di = decode(i);
                (0..n)
                    .map(|j| {
                        let dj = decode(j);
                        let s: Vec<usize> = di
                            .iter()
                            .zip(&dj)
                            .zip(orders)
                            .map(|((a, b), m)| (a + b) % m)
                            .collect();
                        encode(&s)
                    })
                    .collect()
            })
            .collect();
        let label = orders
            .iter()
            .map(|m| format!("Z{m}"))
            .collect::<Vec<_>>()
            .join("x");
        Self::finite_cayley(&rows, label)
    }

    /// Integer lattice Z^rank.
    pub fn lattice(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(CoreError::InvalidInput("lattice rank must be >= 1".into()));
        }
        Ok(GroupHandle {
            model: GroupModel::Lattice { rank },
            label: format!("Z^{rank}"),
        })
    }

    /// Free group on `rank` generators.
    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(CoreError::InvalidInput("free rank must be >= 1".into()));
        }
        Ok(GroupHandle {
            model: GroupModel::Free { rank },
            label: format!("F{rank}"),
        })
    }

    pub fn identity(&self) -> Element {
        match &self.model {
            GroupModel::FiniteCayley { identity, .. } => Element::Finite(*identity),
            GroupModel::Lattice { rank } => Element::Lattice(vec![0; *rank]),
            GroupModel::Free { .. } => Element::Free(FreeWord::empty()),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match &self.model {
            GroupModel::FiniteCayley { n, .. } => Some(*n),
            _ => None,
        }
    }

    pub fn lattice_rank(&self) -> Option<usize> {
        match &self.model {
            GroupModel::Lattice { rank } => Some(*rank),
            _ => None,
        }
    }

    pub fn free_rank(&self) -> Option<usize> {
        match &self.model {
            GroupModel::Free { rank } => Some(*rank),
            _ => None,
        }
    }

    /// All elements of a finite group in index order; `None` for infinite
    /// models.
    pub fn elements(&self) -> Option<Vec<Element>> {
        match &self.model {
            GroupModel::FiniteCayley { n, .. } => {
                Some((0..*n as u32).map(Element::Finite).collect())
            }
            _ => None,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match &self.model {
            GroupModel::FiniteCayley { n, table, .. } => {
                (0..*n).all(|i| (0..*n).all(|j| table[i * n + j] == table[j * n + i]))
            }
            GroupModel::Lattice { .. } => true,
            GroupModel::Free { rank } => *rank == 1,
        }
    }

    /// Validates that an element belongs to this group's model.
    pub fn check_element(&self, e: &Element) -> Result<()> {
        let ok = match (&self.model, e) {
            (GroupModel::FiniteCayley { n, .. }, Element::Finite(i)) => (*i as usize) < *n,
            (GroupModel::Lattice { rank }, Element::Lattice(v)) => v.len() == *rank,
            (GroupModel::Free { rank }, Element::Free(w)) => {
                w.max_gen().map_or(true, |g| (g as usize) < *rank)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::ModelMismatch {
                element: format!("{e}"),
                group: self.label.clone(),
            })
        }
    }

    /// Group product. For free groups the result is reduced.
    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check_element(a)?;
        self.check_element(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    pub(crate) fn mul_unchecked(&self, a: &Element, b: &Element) -> Element {
        match (&self.model, a, b) {
            (GroupModel::FiniteCayley { n, table, .. }, Element::Finite(i), Element::Finite(j)) => {
                Element::Finite(table[*i as usize * n + *j as usize])
            }
            (GroupModel::Lattice { .. }, Element::Lattice(u), Element::Lattice(v)) => {
                Element::Lattice(u.iter().zip(v).map(|(x, y)| x + y).collect())
            }
            (GroupModel::Free { .. }, Element::Free(u), Element::Free(v)) => {
                Element::Free(u.concat(v))
            }
            _ => unreachable!("checked above"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Result<Element> {
        self.check_element(a)?;
        Ok(self.inverse_unchecked(a))
    }

    pub(crate) fn inverse_unchecked(&self, a: &Element) -> Element {
        match (&self.model, a) {
            (GroupModel::FiniteCayley { inv, .. }, Element::Finite(i)) => {
                Element::Finite(inv[*i as usize])
            }
            (GroupModel::Lattice { .. }, Element::Lattice(v)) => {
                Element::Lattice(v.iter().map(|x| -x).collect())
            }
            (GroupModel::Free { .. }, Element::Free(w)) => Element::Free(w.inverse()),
            _ => unreachable!("checked above"),
        }
    }

    /// Word length of an element: 0 for a finite-group element equal to the
    /// identity and 1 otherwise, l1-norm on lattices, letter count on free
    /// groups. Used for exact support tracking of convolutions.
    pub fn canonical_length(&self, e: &Element) -> usize {
        match (&self.model, e) {
            (GroupModel::FiniteCayley { identity, .. }, Element::Finite(i)) => {
                usize::from(i != identity)
            }
            (_, Element::Lattice(v)) => v.iter().map(|x| x.unsigned_abs() as usize).sum(),
            (_, Element::Free(w)) => w.len(),
            _ => 0,
        }
    }

    /// Closure of `gens` under product and inverse.
    ///
    /// Finite Cayley groups enumerate the closure by BFS (bounded by `cap`);
    /// lattices and free groups answer structurally: a lattice subgroup is
    /// finite only when every generator is zero, a free-group subgroup only
    /// when every generator is the empty word (free groups are torsion-free).
    /// Amenability: finite and abelian subgroups are amenable; a pair of
    /// non-commuting elements of a free group generates a free subgroup of
    /// rank 2 (subgroups of free groups are free), which is not amenable.
    pub fn generated_subgroup(&self, gens: &[Element], cap: usize) -> Result<SubgroupInfo> {
        if gens.is_empty() {
            return Err(CoreError::InvalidInput(
                "generated_subgroup needs at least one generator".into(),
            ));
        }
        for g in gens {
            self.check_element(g)?;
        }
        match &self.model {
            GroupModel::FiniteCayley { .. } => {
                let mut seen: BTreeSet<Element> = BTreeSet::new();
                let mut frontier: Vec<Element> = vec![self.identity()];
                seen.insert(self.identity());
                let mut step_gens: Vec<Element> = Vec::new();
                for g in gens {
                    step_gens.push(g.clone());
                    step_gens.push(self.inverse_unchecked(g));
                }
                while let Some(cur) = frontier.pop() {
                    for g in &step_gens {
                        let next = self.mul_unchecked(&cur, g);
                        if seen.insert(next.clone()) {
                            if seen.len() > cap {
                                return Err(CoreError::Structural(format!(
                                    "subgroup closure exceeded cap {cap}"
                                )));
                            }
                            frontier.push(next);
                        }
                    }
                }
                let elems: Vec<Element> = seen.into_iter().collect();
                let trivial = elems.len() == 1;
                Ok(SubgroupInfo {
                    generators: gens.to_vec(),
                    is_finite: true,
                    is_trivial: trivial,
                    amenable: TriState::Yes,
                    finite_elements: Some(elems),
                })
            }
            GroupModel::Lattice { .. } => {
                let trivial = gens.iter().all(|g| *g == self.identity());
                Ok(SubgroupInfo {
                    generators: gens.to_vec(),
                    is_finite: trivial,
                    is_trivial: trivial,
                    amenable: TriState::Yes,
                    finite_elements: trivial.then(|| vec![self.identity()]),
                })
            }
            GroupModel::Free { .. } => {
                let trivial = gens.iter().all(|g| *g == self.identity());
                if trivial {
                    return Ok(SubgroupInfo {
                        generators: gens.to_vec(),
                        is_finite: true,
                        is_trivial: true,
                        amenable: TriState::Yes,
                        finite_elements: Some(vec![self.identity()]),
                    });
                }
                let mut amenable = TriState::Yes;
                'pairs: for (i, a) in gens.iter().enumerate() {
                    for b in gens.iter().skip(i + 1) {
                        let ab = self.mul_unchecked(a, b);
                        let ba = self.mul_unchecked(b, a);
                        if ab != ba {
                            amenable = TriState::No;
                            break 'pairs;
                        }
                    }
                }
                // Pairwise commuting elements of a free group are powers of
                // a common word, so the subgroup is cyclic.
                Ok(SubgroupInfo {
                    generators: gens.to_vec(),
                    is_finite: false,
                    is_trivial: false,
                    amenable,
                    finite_elements: None,
                })
            }
        }
    }

    /// All products of at most `radius` factors from `gens` and their
    /// inverses, deduplicated, identity first and then level by level in
    /// canonical order. `guard` caps the number of enumerated elements.
    pub fn ball(&self, radius: usize, gens: &[Element], guard: usize) -> Result<Vec<Element>> {
        Ok(self.ball_with_offsets(radius, gens, guard)?.0)
    }

    /// Like [`GroupHandle::ball`], additionally returning the prefix sizes
    /// per level: `offsets[r]` is the number of elements within radius `r`
    /// (so `offsets[0] = 1` and `offsets[radius]` is the total length).
    pub fn ball_with_offsets(
        &self,
        radius: usize,
        gens: &[Element],
        guard: usize,
    ) -> Result<(Vec<Element>, Vec<usize>)> {
        for g in gens {
            self.check_element(g)?;
        }
        let mut step_gens: BTreeSet<Element> = BTreeSet::new();
        for g in gens {
            step_gens.insert(g.clone());
            step_gens.insert(self.inverse_unchecked(g));
        }
        let mut seen: BTreeSet<Element> = BTreeSet::new();
        let mut out: Vec<Element> = Vec::new();
        let mut offsets: Vec<usize> = Vec::with_capacity(radius + 1);
        let mut level: Vec<Element> = vec![self.identity()];
        seen.insert(self.identity());
        out.push(self.identity());
        offsets.push(1);
        for _ in 0..radius {
            let mut next_level: BTreeSet<Element> = BTreeSet::new();
            for cur in &level {
                for g in &step_gens {
                    let nxt = self.mul_unchecked(cur, g);
                    if !seen.contains(&nxt) {
                        next_level.insert(nxt);
                    }
                }
            }
            if seen.len() + next_level.len() > guard {
                return Err(CoreError::Resource {
                    what: format!("enumerating ball of radius {radius} on {}", self.label),
                    needed: seen.len() + next_level.len(),
                    budget: guard,
                });
            }
            level = next_level.into_iter().collect();
            for e in &level {
                seen.insert(e.clone());
                out.push(e.clone());
            }
            offsets.push(out.len());
        }
        Ok((out, offsets))
    }

    /// Parses a model-appropriate element encoding: an index for finite
    /// groups, an integer vector for lattices, a word like `"x1 x2^-1"`
    /// for free groups.
    pub fn parse_element_index(&self, idx: usize) -> Result<Element> {
        let e = Element::Finite(idx as u32);
        self.check_element(&e)?;
        Ok(e)
    }

    pub fn parse_element_vector(&self, coords: &[i64]) -> Result<Element> {
        let e = Element::Lattice(coords.to_vec());
        self.check_element(&e)?;
        Ok(e)
    }

    pub fn parse_element_word(&self, word: &str) -> Result<Element> {
        match &self.model {
            GroupModel::Free { rank } => Ok(Element::Free(FreeWord::parse(word, *rank)?)),
            _ => Err(CoreError::ModelMismatch {
                element: word.to_string(),
                group: self.label.clone(),
            }),
        }
    }
}

/// Result of a generated-subgroup query: the discrete analogue of `H_mu`.
#[derive(Debug, Clone)]
pub struct SubgroupInfo {
    pub generators: Vec<Element>,
    pub is_finite: bool,
    pub is_trivial: bool,
    pub amenable: TriState,
    /// Present iff `is_finite`: the full closure, sorted canonically.
    pub finite_elements: Option<Vec<Element>>,
}

impl SubgroupInfo {
    /// The closure size when finite.
    pub fn order(&self) -> Option<usize> {
        self.finite_elements.as_ref().map(|v| v.len())
    }
}

/// Standard generators of a model: unit vectors for lattices, the k free
/// generators for free groups, all non-identity elements for finite groups.
pub fn standard_generators(group: &GroupHandle) -> Vec<Element> {
    match &group.model {
        GroupModel::FiniteCayley { n, identity, .. } => (0..*n as u32)
            .filter(|i| i != identity)
            .map(Element::Finite)
            .collect(),
        GroupModel::Lattice { rank } => (0..*rank)
            .map(|i| {
                let mut v = vec![0i64; *rank];
                v[i] = 1;
                Element::Lattice(v)
            })
            .collect(),
        GroupModel::Free { rank } => (0..*rank as u16)
            .map(|g| Element::Free(FreeWord::from_letters([Letter { gen: g, inv: false }])))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn z() -> GroupHandle {
        GroupHandle::lattice(1).unwrap()
    }
    fn z3() -> GroupHandle {
        GroupHandle::cyclic(3).unwrap()
    }
    fn f3() -> GroupHandle {
        GroupHandle::free(3).unwrap()
    }
    fn lat(k: i64) -> Element {
        Element::Lattice(vec![k])
    }
    fn w(g: &GroupHandle, s: &str) -> Element {
        g.parse_element_word(s).unwrap()
    }

    #[test]
    fn lattice_mul_and_inverse() {
        let g = z();
        assert_eq!(g.mul(&lat(1), &lat(2)).unwrap(), lat(3));
        assert_eq!(g.inverse(&lat(5)).unwrap(), lat(-5));
    }

    #[test]
    fn cyclic_mul_and_inverse() {
        let g = z3();
        // x = 1, x^2 = 2; x * x^2 = e.
        let e = g.identity();
        assert_eq!(g.mul(&Element::Finite(1), &Element::Finite(2)).unwrap(), e);
        assert_eq!(g.inverse(&Element::Finite(1)).unwrap(), Element::Finite(2));
    }

    #[test]
    fn free_mul_reduces() {
        let g = f3();
        let a = w(&g, "x1 x2");
        let b = w(&g, "x2^-1 x3");
        assert_eq!(g.mul(&a, &b).unwrap(), w(&g, "x1 x3"));
        let c = w(&g, "x1 x2^-1");
        assert_eq!(g.inverse(&c).unwrap(), w(&g, "x2 x1^-1"));
    }

    #[test]
    fn non_reduced_input_is_reduced() {
        let g = GroupHandle::free(2).unwrap();
        assert_eq!(w(&g, "x1 x1^-1"), g.identity());
        assert_eq!(w(&g, "x1 x2 x2^-1 x1"), w(&g, "x1^2"));
    }

    #[test]
    fn reduction_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let letters: Vec<Letter> = (0..rng.gen_range(0..20))
                .map(|_| Letter {
                    gen: rng.gen_range(0..3),
                    inv: rng.gen_bool(0.5),
                })
                .collect();
            let once = FreeWord::from_letters(letters);
            let twice = FreeWord::from_letters(once.letters().iter().copied());
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn double_inverse_and_identity_randomized() {
        let mut rng = StdRng::seed_from_u64(11);
        let groups = vec![z(), z3(), f3(), GroupHandle::lattice(2).unwrap()];
        for g in &groups {
            let e = g.identity();
            for _ in 0..100 {
                let a = random_element(g, &mut rng);
                let inv2 = g.inverse(&g.inverse(&a).unwrap()).unwrap();
                assert_eq!(inv2, a);
                assert_eq!(g.mul(&a, &e).unwrap(), a);
                assert_eq!(g.mul(&a, &g.inverse(&a).unwrap()).unwrap(), e);
            }
        }
    }

    fn random_element(g: &GroupHandle, rng: &mut StdRng) -> Element {
        match &g.model {
            GroupModel::FiniteCayley { n, .. } => Element::Finite(rng.gen_range(0..*n) as u32),
            GroupModel::Lattice { rank } => {
                Element::Lattice((0..*rank).map(|_| rng.gen_range(-9..10)).collect())
            }
            GroupModel::Free { rank } => {
                let letters: Vec<Letter> = (0..rng.gen_range(0..12))
                    .map(|_| Letter {
                        gen: rng.gen_range(0..*rank) as u16,
                        inv: rng.gen_bool(0.5),
                    })
                    .collect();
                Element::Free(FreeWord::from_letters(letters))
            }
        }
    }

    #[test]
    fn cayley_associativity_exhaustive_small() {
        // Build S3 as permutation composition and check the constructor
        // accepts it; spot-break a cell and check rejection.
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [1, 0, 2],
            [0, 2, 1],
            [2, 1, 0],
            [1, 2, 0],
            [2, 0, 1],
        ];
        let compose = |p: &[usize; 3], q: &[usize; 3]| -> [usize; 3] {
            [p[q[0]], p[q[1]], p[q[2]]]
        };
        let index = |p: &[usize; 3]| perms.iter().position(|q| q == p).unwrap();
        let rows: Vec<Vec<usize>> = perms
            .iter()
            .map(|p| perms.iter().map(|q| index(&compose(p, q))).collect())
            .collect();
        let g = GroupHandle::finite_cayley(&rows, "S3").unwrap();
        assert!(!g.is_abelian());
        assert_eq!(g.order(), Some(6));

        let mut broken = rows.clone();
        broken[1][2] = rows[1][1];
        assert!(GroupHandle::finite_cayley(&broken, "bad").is_err());
    }

    #[test]
    fn generated_subgroups() {
        let g = z();
        let info = g.generated_subgroup(&[lat(1), lat(-2)], 1000).unwrap();
        assert!(!info.is_finite);
        assert_eq!(info.amenable, TriState::Yes);

        let g3 = z3();
        let info = g3.generated_subgroup(&[Element::Finite(1)], 10).unwrap();
        assert_eq!(info.order(), Some(3));
        assert_eq!(info.amenable, TriState::Yes);
        let elems = info.finite_elements.unwrap();
        assert_eq!(elems.len(), 3);

        let gf = f3();
        let gens = standard_generators(&gf);
        let info = gf.generated_subgroup(&gens, 10).unwrap();
        assert!(!info.is_finite);
        assert_eq!(info.amenable, TriState::No);

        // Powers of one word commute: cyclic, amenable.
        let a = w(&gf, "x1 x2");
        let a2 = gf.mul(&a, &a).unwrap();
        let info = gf.generated_subgroup(&[a.clone(), a2], 10).unwrap();
        assert!(!info.is_finite);
        assert_eq!(info.amenable, TriState::Yes);

        let info = gf.generated_subgroup(&[gf.identity()], 10).unwrap();
        assert!(info.is_finite && info.is_trivial);
    }

    #[test]
    fn ball_counts() {
        let g = z();
        let b = g.ball(3, &[lat(1)], 1 << 20).unwrap();
        assert_eq!(b.len(), 7);
        assert_eq!(b[0], g.identity());

        let gf = f3();
        let gens = standard_generators(&gf);
        assert_eq!(gf.ball(1, &gens, 1 << 20).unwrap().len(), 7);
        assert_eq!(gf.ball(2, &gens, 1 << 20).unwrap().len(), 37);

        // Sphere sizes 2k(2k-1)^{r-1} in F_k.
        let g2 = GroupHandle::free(2).unwrap();
        let gens2 = standard_generators(&g2);
        let mut prev = 1usize;
        for r in 1..=4 {
            let b = g2.ball(r, &gens2, 1 << 22).unwrap();
            let sphere = b.len() - prev;
            assert_eq!(sphere, 4 * 3usize.pow(r as u32 - 1));
            prev = b.len();
        }
    }

    #[test]
    fn ball_guard_trips() {
        let gf = f3();
        let gens = standard_generators(&gf);
        let res = gf.ball(5, &gens, 100);
        assert!(matches!(res, Err(CoreError::Resource { .. })));
    }

    #[test]
    fn ball_is_deterministic_and_length_ordered() {
        let gf = GroupHandle::free(2).unwrap();
        let gens = standard_generators(&gf);
        let b1 = gf.ball(3, &gens, 1 << 20).unwrap();
        let b2 = gf.ball(3, &gens, 1 << 20).unwrap();
        assert_eq!(b1, b2);
        for pair in b1.windows(2) {
            let l0 = gf.canonical_length(&pair[0]);
            let l1 = gf.canonical_length(&pair[1]);
            assert!(l0 < l1 || (l0 == l1 && pair[0] < pair[1]));
        }
    }

    #[test]
    fn word_parse_errors() {
        assert!(FreeWord::parse("y1", 3).is_err());
        assert!(FreeWord::parse("x0", 3).is_err());
        assert!(FreeWord::parse("x4", 3).is_err());
        assert!(FreeWord::parse("x1^", 3).is_err());
        let ok = FreeWord::parse("x1^3 x2^-2", 3).unwrap();
        assert_eq!(ok.len(), 5);
        assert_eq!(format!("{ok}"), "x1^3 x2^-2");
    }

    #[test]
    fn model_mismatch_errors() {
        let g = z3();
        assert!(g.mul(&Element::Finite(0), &lat(1)).is_err());
        assert!(g.check_element(&Element::Finite(3)).is_err());
    }

    #[test]
    fn product_of_cyclics_structure() {
        let g = GroupHandle::product_of_cyclics(&[2, 4]).unwrap();
        assert_eq!(g.order(), Some(8));
        assert!(g.is_abelian());
    }
}
