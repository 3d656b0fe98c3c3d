//! ψ/κ intersection numbers on M̄_{g,n}.
//!
//! Pure ψ integrals come from the DVV form of the KdV recursion, memoized
//! behind a read-write lock. κ classes are rewritten as push-forwards of ψ
//! classes from spaces with extra markings.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{OnceLock, RwLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{fmt_rational, int, parse_rational, rat, Rational};

pub const CACHE_SCHEMA: &str = "wk-cache-v1";

#[derive(Debug, Error)]
pub enum IntersectionError {
    #[error("unstable moduli space: g={g}, n={n}")]
    Unstable { g: u32, n: usize },
    #[error("cache I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache is not valid JSON: {0}")]
    Parse(String),
    #[error("cache schema {found:?} is not {CACHE_SCHEMA:?}")]
    Version { found: String },
}

/// `⟨τ_{a_1} … τ_{a_n}⟩_g` with the exponents kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TauKey {
    pub g: u32,
    pub a: Vec<u32>,
}

impl TauKey {
    pub fn new(g: u32, mut a: Vec<u32>) -> Self {
        a.sort_unstable();
        Self { g, a }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn is_stable(&self) -> bool {
        2 * self.g as i64 - 2 + self.n() as i64 > 0
    }

    pub fn dimension(&self) -> i64 {
        3 * self.g as i64 - 3 + self.n() as i64
    }

    pub fn degree(&self) -> i64 {
        self.a.iter().map(|&x| x as i64).sum()
    }
}

fn double_factorial(n: i64) -> Rational {
    // (−1)!! = 1
    let mut out = Rational::one();
    let mut k = n;
    while k > 1 {
        out *= int(k);
        k -= 2;
    }
    out
}

/// Memoized DVV evaluator. Reads share the lock; each new value takes a
/// short write lock, so concurrent callers only ever duplicate work.
#[derive(Default)]
pub struct IntersectionEngine {
    memo: RwLock<HashMap<TauKey, Rational>>,
}

impl IntersectionEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static IntersectionEngine {
        static ENGINE: OnceLock<IntersectionEngine> = OnceLock::new();
        ENGINE.get_or_init(IntersectionEngine::new)
    }

    pub fn len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn preload(&self, entries: &BTreeMap<TauKey, Rational>) {
        let mut m = self.memo.write().expect("memo lock");
        for (k, v) in entries {
            m.insert(k.clone(), v.clone());
        }
    }

    pub fn snapshot(&self) -> BTreeMap<TauKey, Rational> {
        let m = self.memo.read().expect("memo lock");
        m.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn psi_integral(&self, key: &TauKey) -> Result<Rational, IntersectionError> {
        if !key.is_stable() {
            return Err(IntersectionError::Unstable { g: key.g, n: key.n() });
        }
        Ok(self.eval(key))
    }

    /// Value of a (possibly unstable) key, unstable ones being zero.
    fn eval(&self, key: &TauKey) -> Rational {
        if !key.is_stable() || key.degree() != key.dimension() {
            return Rational::zero();
        }
        if let Some(v) = self.memo.read().expect("memo lock").get(key) {
            return v.clone();
        }
        let v = dvv(key, &|k| self.eval(k));
        self.memo.write().expect("memo lock").insert(key.clone(), v.clone());
        v
    }
}

/// One DVV step on the largest exponent; `sub` evaluates smaller keys.
fn dvv(key: &TauKey, sub: &dyn Fn(&TauKey) -> Rational) -> Rational {
    if key.g == 0 && key.a == [0, 0, 0] {
        return Rational::one();
    }
    if key.g == 1 && key.a == [1] {
        return rat(1, 24);
    }
    let mut rest = key.a.clone();
    let top = rest.pop().expect("stable keys are nonempty");
    if top == 0 {
        return Rational::zero();
    }
    let k = top as i64 - 1;
    let g = key.g;
    let mut acc = Rational::zero();
    for j in 0..rest.len() {
        let dj = rest[j] as i64;
        let mut b = rest.clone();
        b[j] = (dj + k) as u32;
        let coeff = double_factorial(2 * k + 2 * dj + 1) / double_factorial(2 * dj - 1);
        acc += coeff * sub(&TauKey::new(g, b));
    }
    let half = rat(1, 2);
    for r in 0..k {
        let s = k - 1 - r;
        let coeff = &half * double_factorial(2 * r + 1) * double_factorial(2 * s + 1);
        let mut inner = Rational::zero();
        if g >= 1 {
            let mut b = rest.clone();
            b.push(r as u32);
            b.push(s as u32);
            inner += sub(&TauKey::new(g - 1, b));
        }
        let n = rest.len();
        for mask in 0u64..(1u64 << n) {
            let (mut left, mut right) = (vec![r as u32], vec![s as u32]);
            for (i, &x) in rest.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    left.push(x);
                } else {
                    right.push(x);
                }
            }
            for g1 in 0..=g {
                let l = sub(&TauKey::new(g1, left.clone()));
                if l.is_zero() {
                    continue;
                }
                inner += l * sub(&TauKey::new(g - g1, right.clone()));
            }
        }
        acc += coeff * inner;
    }
    acc / double_factorial(2 * k + 3)
}

/// `⟨τ_{a}⟩_g` through the global memo.
pub fn psi_integral(key: &TauKey) -> Result<Rational, IntersectionError> {
    IntersectionEngine::global().psi_integral(key)
}

/// Direct recursion without any memo.
pub fn psi_integral_uncached(key: &TauKey) -> Rational {
    fn go(k: &TauKey) -> Rational {
        if !k.is_stable() || k.degree() != k.dimension() {
            return Rational::zero();
        }
        dvv(k, &go)
    }
    go(key)
}

/// One string or dilaton step as a linear combination of smaller keys, or
/// `None` if neither applies.
pub fn string_dilaton_step(key: &TauKey) -> Option<Vec<(Rational, TauKey)>> {
    let n = key.n();
    let smaller_stable = 2 * key.g as i64 - 2 + n as i64 - 1 > 0;
    if !smaller_stable {
        return None;
    }
    if let Some(pos) = key.a.iter().position(|&x| x == 0) {
        let mut rest = key.a.clone();
        rest.remove(pos);
        let terms = (0..rest.len())
            .filter(|&j| rest[j] > 0)
            .map(|j| {
                let mut b = rest.clone();
                b[j] -= 1;
                (Rational::one(), TauKey::new(key.g, b))
            })
            .collect();
        return Some(terms);
    }
    if let Some(pos) = key.a.iter().position(|&x| x == 1) {
        let mut rest = key.a.clone();
        rest.remove(pos);
        let factor = int(2 * key.g as i64 - 2 + rest.len() as i64);
        return Some(vec![(factor, TauKey::new(key.g, rest))]);
    }
    None
}

/// Fully reduces a key by string and dilaton steps into keys with all
/// exponents ≥ 2 (or base cases).
pub fn reduce_string_dilaton(key: &TauKey) -> Vec<(Rational, TauKey)> {
    let mut out: BTreeMap<TauKey, Rational> = BTreeMap::new();
    let mut stack = vec![(Rational::one(), key.clone())];
    while let Some((c, k)) = stack.pop() {
        match string_dilaton_step(&k) {
            Some(terms) => {
                for (c2, k2) in terms {
                    stack.push((&c * c2, k2));
                }
            }
            None => {
                *out.entry(k).or_insert_with(Rational::zero) += c;
            }
        }
    }
    out.into_iter().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (c, k)).collect()
}

/// ψ integral evaluated through string/dilaton reduction first.
pub fn psi_integral_reduced(key: &TauKey) -> Rational {
    reduce_string_dilaton(key)
        .into_iter()
        .map(|(c, k)| c * IntersectionEngine::global().eval(&k))
        .sum()
}

/// `∫_{M̄_{g,n}} Π ψ_i^{psi[i]} Π_j κ_{kappa[j]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KappaPsiMonomial {
    pub psi: Vec<u32>,
    pub kappa: Vec<u32>,
}

impl KappaPsiMonomial {
    pub fn new(psi: Vec<u32>, mut kappa: Vec<u32>) -> Self {
        kappa.sort_unstable();
        Self { psi, kappa }
    }

    pub fn degree(&self) -> u32 {
        self.psi.iter().sum::<u32>() + self.kappa.iter().sum::<u32>()
    }
}

/// All set partitions of `0..m`, each block a list of indices.
pub fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for i in 0..m {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(i);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// `κ_{b_1}…κ_{b_m} = Σ_P (−1)^{m−|P|} π_*(Π_{B∈P} ψ^{1+Σ_{i∈B} b_i})`, so the
/// integral becomes a signed sum of ψ integrals on `M̄_{g,n+|P|}`.
pub fn kappa_to_psi(m: &KappaPsiMonomial, g: u32) -> Result<Rational, IntersectionError> {
    let n = m.psi.len();
    let key = TauKey::new(g, m.psi.clone());
    if !key.is_stable() {
        return Err(IntersectionError::Unstable { g, n });
    }
    if m.degree() as i64 != key.dimension() {
        return Ok(Rational::zero());
    }
    let engine = IntersectionEngine::global();
    if m.kappa.is_empty() {
        return Ok(engine.eval(&key));
    }
    let k = m.kappa.len();
    let mut acc = Rational::zero();
    for p in set_partitions(k) {
        let mut a = m.psi.clone();
        for block in &p {
            a.push(1 + block.iter().map(|&i| m.kappa[i]).sum::<u32>());
        }
        let sign = if (k - p.len()).is_multiple_of(2) { int(1) } else { int(-1) };
        acc += sign * engine.eval(&TauKey::new(g, a));
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadStatus {
    Loaded(usize),
    /// No file yet; the cache starts empty.
    Missing,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema: String,
    entries: Vec<CacheEntry>,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    g: u32,
    a: Vec<u32>,
    value: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheStore {
    pub path: PathBuf,
    pub entries: BTreeMap<TauKey, Rational>,
    pub dirty: bool,
}

impl CacheStore {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Self { path: path.as_ref().to_path_buf(), entries: BTreeMap::new(), dirty: false }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, LoadStatus), IntersectionError> {
        let mut store = Self::new(path);
        let text = match std::fs::read_to_string(&store.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((store, LoadStatus::Missing)),
            Err(e) => return Err(e.into()),
        };
        let file: CacheFile = serde_json::from_str(&text).map_err(|e| IntersectionError::Parse(e.to_string()))?;
        if file.schema != CACHE_SCHEMA {
            return Err(IntersectionError::Version { found: file.schema });
        }
        for e in file.entries {
            let v = parse_rational(&e.value).map_err(|err| IntersectionError::Parse(err.to_string()))?;
            store.entries.insert(TauKey::new(e.g, e.a), v);
        }
        let n = store.entries.len();
        Ok((store, LoadStatus::Loaded(n)))
    }

    pub fn save(&mut self) -> Result<(), IntersectionError> {
        let file = CacheFile {
            schema: CACHE_SCHEMA.to_string(),
            entries: self
                .entries
                .iter()
                .map(|(k, v)| CacheEntry { g: k.g, a: k.a.clone(), value: fmt_rational(v) })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&file).map_err(|e| IntersectionError::Parse(e.to_string()))?;
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(&self.path, text)?;
        self.dirty = false;
        Ok(())
    }

    pub fn absorb(&mut self, engine: &IntersectionEngine) {
        for (k, v) in engine.snapshot() {
            if self.entries.insert(k, v.clone()).as_ref() != Some(&v) {
                self.dirty = true;
            }
        }
    }
}
