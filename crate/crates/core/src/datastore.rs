//! Vocabulary construction and stratified dataset splitting.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::langgen::{Instance, TaskCategory};
use crate::rng::{derive_seed, seeded};

/// Token reserved for index 0.
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("cannot split an empty dataset")]
    Empty,
    #[error("invalid split fractions: {0}")]
    Fractions(String),
    #[error("duplicate token {0:?} in vocabulary")]
    DuplicateToken(String),
}

/// Token/index bijection with `UNK` at index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut index = BTreeMap::new();
        index.insert(UNK.to_string(), 0);
        Vocabulary { tokens: alloc::vec![UNK.to_string()], index }
    }

    /// Rebuild from a token list whose first entry is `UNK`, as saved by
    /// [`Vocabulary::tokens`].
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary::new();
        for (i, t) in tokens.into_iter().enumerate() {
            let t = t.as_ref();
            if i == 0 && t == UNK {
                continue;
            }
            if v.index.contains_key(t) {
                return Err(DataError::DuplicateToken(t.to_string()));
            }
            v.add(t);
        }
        Ok(v)
    }

    /// Index of `token`, adding it if new.
    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    /// Index of `token`, or 0 when unknown.
    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        token != UNK && self.index.contains_key(token)
    }

    pub fn token(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(|s| s.as_str())
    }

    /// All tokens in index order, `UNK` first.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Size including `UNK`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == 1
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.get(w.as_ref())).collect()
    }
}

/// Vocabulary over instruction tokens in first-occurrence order.
pub fn build_vocab<'a, I: IntoIterator<Item = &'a Instance>>(instances: I) -> Vocabulary {
    let mut v = Vocabulary::new();
    for inst in instances {
        for w in &inst.instruction {
            v.add(w);
        }
    }
    v
}

/// Train/dev/test id lists, each sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<u64>,
    pub dev: Vec<u64>,
    pub test: Vec<u64>,
    /// `[train, dev, test]` counts per category.
    pub per_category: BTreeMap<TaskCategory, [usize; 3]>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Largest-remainder apportionment of `total` over `ideal` shares, never
/// exceeding `cap[i]`.
fn apportion(ideal: &[f64], total: usize, cap: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = ideal.iter().zip(cap).map(|(&x, &c)| ((x + 1e-9) as usize).min(c)).collect();
    let mut order: Vec<usize> = (0..ideal.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - out[a] as f64;
        let rb = ideal[b] - out[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(out.iter().sum());
    for &i in order.iter().cycle().take(order.len() * 2) {
        if left == 0 {
            break;
        }
        if out[i] < cap[i] && (out[i] as f64) < ideal[i] + 1.0 - 1e-9 {
            out[i] += 1;
            left -= 1;
        }
    }
    out
}

/// Stratified split by category. Dev and test sizes are the floor of their
/// global targets, spread over categories by largest remainder so every
/// category stays within one instance of its own target; the rest goes to
/// train. Ids are shuffled within each category using `seed`.
pub fn split_dataset<I>(items: I, fractions: (f64, f64, f64), seed: u64) -> Result<DatasetSplit, DataError>
where
    I: IntoIterator<Item = (u64, TaskCategory)>,
{
    let (ft, fd, fe) = fractions;
    if [ft, fd, fe].iter().any(|f| !f.is_finite() || *f < 0.0) || ((ft + fd + fe) - 1.0).abs() > 1e-9 {
        return Err(DataError::Fractions(alloc::format!("{ft} + {fd} + {fe} must be nonnegative and sum to 1")));
    }
    let mut groups: BTreeMap<TaskCategory, Vec<u64>> = BTreeMap::new();
    for (id, c) in items {
        groups.entry(c).or_default().push(id);
    }
    let n: usize = groups.values().map(|g| g.len()).sum();
    if n == 0 {
        return Err(DataError::Empty);
    }
    let sizes: Vec<usize> = groups.values().map(|g| g.len()).collect();
    let dev_total = (n as f64 * fd + 1e-9) as usize;
    let test_total = (n as f64 * fe + 1e-9) as usize;
    let dev = apportion(&sizes.iter().map(|&s| s as f64 * fd).collect::<Vec<_>>(), dev_total, &sizes);
    let room: Vec<usize> = sizes.iter().zip(&dev).map(|(s, d)| s - d).collect();
    let test = apportion(&sizes.iter().map(|&s| s as f64 * fe).collect::<Vec<_>>(), test_total, &room);

    let mut split = DatasetSplit::default();
    for (k, (cat, mut ids)) in groups.into_iter().enumerate() {
        ids.sort_unstable();
        ids.shuffle(&mut seeded(derive_seed(seed, cat.index() as u64)));
        let (d, t) = (dev[k], test[k]);
        split.dev.extend_from_slice(&ids[..d]);
        split.test.extend_from_slice(&ids[d..d + t]);
        split.train.extend_from_slice(&ids[d + t..]);
        split.per_category.insert(cat, [ids.len() - d - t, d, t]);
    }
    split.train.sort_unstable();
    split.dev.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
