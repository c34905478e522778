//! String calculus for pair-flip chains.
//!
//! A length-`L` word over the alphabet `1..=N` is read as a walk on the
//! `N`-regular tree: each symbol is a step along the edge of that colour, and
//! two equal consecutive symbols cancel. The endpoint of the walk is the
//! irreducible string obtained by deleting adjacent equal pairs until none
//! remain; it labels the Krylov sector of the word.
//!
//! Symbols are 1-based in every public constructor and accessor. Internally
//! they are stored as 0-based digits.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest alphabet the byte-per-site storage supports.
pub const MAX_ALPHABET: u32 = 255;

/// Default cap on the number of sectors [`enumerate_sectors`] will list.
pub const DEFAULT_SECTOR_CAP: u64 = 1 << 24;

fn check_alphabet(alphabet: u32) -> Result<()> {
    if !(2..=MAX_ALPHABET).contains(&alphabet) {
        return Err(invalid(format!(
            "alphabet size must lie in 2..={MAX_ALPHABET}, got {alphabet}"
        )));
    }
    Ok(())
}

fn digits_from_symbols(alphabet: u32, symbols: &[u32]) -> Result<Vec<u8>> {
    symbols
        .iter()
        .map(|&s| {
            if s == 0 || s > alphabet {
                Err(Error::SymbolOutOfRange {
                    symbol: s,
                    alphabet,
                })
            } else {
                Ok((s - 1) as u8)
            }
        })
        .collect()
}

fn format_digits(f: &mut fmt::Formatter<'_>, alphabet: u32, digits: &[u8]) -> fmt::Result {
    if alphabet <= 9 {
        for d in digits {
            write!(f, "{}", d + 1)?;
        }
    } else {
        for (i, d) in digits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", u32::from(*d) + 1)?;
        }
    }
    Ok(())
}

fn parse_symbols(alphabet: u32, text: &str) -> Result<Vec<u32>> {
    let text = text.trim();
    if text.is_empty() || text == "∅" {
        return Ok(Vec::new());
    }
    if text.contains(',') || alphabet > 9 {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("bad symbol {t:?}: {e}")))
            })
            .collect()
    } else {
        text.chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::Parse(format!("bad symbol {c:?} in {text:?}")))
            })
            .collect()
    }
}

/// A classical microstate: a word of length `L ≥ 1` over `1..=N`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinString {
    alphabet: u32,
    digits: Vec<u8>,
}

impl SpinString {
    pub fn new(alphabet: u32, symbols: &[u32]) -> Result<Self> {
        check_alphabet(alphabet)?;
        if symbols.is_empty() {
            return Err(invalid("a spin string needs at least one site"));
        }
        Ok(Self {
            alphabet,
            digits: digits_from_symbols(alphabet, symbols)?,
        })
    }

    /// Builds a string from 0-based digits.
    pub fn from_digits(alphabet: u32, digits: Vec<u8>) -> Result<Self> {
        check_alphabet(alphabet)?;
        if digits.is_empty() {
            return Err(invalid("a spin string needs at least one site"));
        }
        if let Some(&d) = digits.iter().find(|&&d| u32::from(d) >= alphabet) {
            return Err(Error::SymbolOutOfRange {
                symbol: u32::from(d) + 1,
                alphabet,
            });
        }
        Ok(Self { alphabet, digits })
    }

    /// Parses the compact form (`"1213"`) or, for any alphabet, the
    /// comma-separated form (`"1,2,13"`).
    pub fn parse(alphabet: u32, text: &str) -> Result<Self> {
        Self::new(alphabet, &parse_symbols(alphabet, text)?)
    }

    /// The string whose base-`N` digits (site 1 most significant) spell
    /// `index`. This is the ordering used by full-space chains.
    pub fn from_index(alphabet: u32, len: usize, mut index: u64) -> Result<Self> {
        check_alphabet(alphabet)?;
        let mut digits = vec![0u8; len];
        for slot in digits.iter_mut().rev() {
            *slot = (index % u64::from(alphabet)) as u8;
            index /= u64::from(alphabet);
        }
        if index != 0 {
            return Err(invalid("index exceeds N^L"));
        }
        Self::from_digits(alphabet, digits)
    }

    /// The maximal-`Q_a` pattern `(b a)(b a)…` with `b = a mod N + 1`; odd
    /// lengths end on `b`.
    pub fn max_charge_state(alphabet: u32, len: usize, a: u32) -> Result<Self> {
        check_alphabet(alphabet)?;
        if a == 0 || a > alphabet {
            return Err(Error::SymbolOutOfRange {
                symbol: a,
                alphabet,
            });
        }
        let ad = (a - 1) as u8;
        let bd = (a % alphabet) as u8;
        let digits = (0..len).map(|i| if i % 2 == 0 { bd } else { ad }).collect();
        Self::from_digits(alphabet, digits)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// 0-based digits, site 1 first.
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// 1-based symbols, site 1 first.
    pub fn symbols(&self) -> impl Iterator<Item = u32> + '_ {
        self.digits.iter().map(|&d| u32::from(d) + 1)
    }

    /// Position in the full basis (base-`N`, site 1 most significant).
    pub fn index(&self) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, &d| acc * u64::from(self.alphabet) + u64::from(d))
    }

    pub fn into_digits(self) -> Vec<u8> {
        self.digits
    }
}

impl fmt::Display for SpinString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_digits(f, self.alphabet, &self.digits)
    }
}

impl fmt::Debug for SpinString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinString(N={}, \"{}\")", self.alphabet, self)
    }
}

/// An irreducible string: the label of a Krylov sector and a vertex of the
/// `N`-regular tree. Adjacent symbols always differ; the empty string is the
/// root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorId {
    alphabet: u32,
    irr: Vec<u8>,
}

impl SectorId {
    pub fn root(alphabet: u32) -> Result<Self> {
        check_alphabet(alphabet)?;
        Ok(Self {
            alphabet,
            irr: Vec::new(),
        })
    }

    pub fn new(alphabet: u32, symbols: &[u32]) -> Result<Self> {
        check_alphabet(alphabet)?;
        Self::from_digits(alphabet, digits_from_symbols(alphabet, symbols)?)
    }

    /// Like [`SectorId::new`], additionally requiring that the sector exists
    /// in a length-`len` system (`d ≤ L`, `d ≡ L mod 2`).
    pub fn in_system(alphabet: u32, symbols: &[u32], len: usize) -> Result<Self> {
        let id = Self::new(alphabet, symbols)?;
        if !id.exists_in(len) {
            return Err(invalid(format!(
                "sector of depth {} does not occur for L = {len}",
                id.depth()
            )));
        }
        Ok(id)
    }

    pub fn from_digits(alphabet: u32, irr: Vec<u8>) -> Result<Self> {
        check_alphabet(alphabet)?;
        if let Some(&d) = irr.iter().find(|&&d| u32::from(d) >= alphabet) {
            return Err(Error::SymbolOutOfRange {
                symbol: u32::from(d) + 1,
                alphabet,
            });
        }
        if irr.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("irreducible strings cannot contain equal neighbours"));
        }
        Ok(Self { alphabet, irr })
    }

    pub fn parse(alphabet: u32, text: &str) -> Result<Self> {
        Self::new(alphabet, &parse_symbols(alphabet, text)?)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.irr.len()
    }

    pub fn is_root(&self) -> bool {
        self.irr.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.irr
    }

    pub fn symbols(&self) -> impl Iterator<Item = u32> + '_ {
        self.irr.iter().map(|&d| u32::from(d) + 1)
    }

    pub fn exists_in(&self, len: usize) -> bool {
        self.depth() <= len && self.depth() % 2 == len % 2
    }

    /// The tree vertex one step closer to the root.
    pub fn parent(&self) -> Option<Self> {
        (!self.irr.is_empty()).then(|| Self {
            alphabet: self.alphabet,
            irr: self.irr[..self.irr.len() - 1].to_vec(),
        })
    }

    /// Tree vertex reached by appending digit `d` (0-based) and cancelling.
    pub fn step(&self, d: u8) -> Self {
        let mut irr = self.irr.clone();
        if irr.last() == Some(&d) {
            irr.pop();
        } else {
            irr.push(d);
        }
        Self {
            alphabet: self.alphabet,
            irr,
        }
    }

    /// All `N` tree neighbours (parent first when it exists).
    pub fn neighbours(&self) -> Vec<Self> {
        let last = self.irr.last().copied();
        let mut out = Vec::with_capacity(self.alphabet as usize);
        if let Some(p) = self.parent() {
            out.push(p);
        }
        for d in 0..self.alphabet as u8 {
            if Some(d) != last {
                out.push(self.step(d));
            }
        }
        out
    }

    /// Children: neighbours one step further from the root.
    pub fn children(&self) -> impl Iterator<Item = Self> + '_ {
        let last = self.irr.last().copied();
        (0..self.alphabet as u8)
            .filter(move |&d| Some(d) != last)
            .map(move |d| self.step(d))
    }

    pub fn has_prefix(&self, prefix: &SectorId) -> bool {
        self.irr.starts_with(&prefix.irr)
    }

    /// Tree distance between two vertices.
    pub fn distance(&self, other: &SectorId) -> usize {
        let common = self
            .irr
            .iter()
            .zip(&other.irr)
            .take_while(|(a, b)| a == b)
            .count();
        self.depth() + other.depth() - 2 * common
    }

    /// Empty CSV field for the root, the compact string otherwise.
    pub fn csv_field(&self) -> String {
        if self.is_root() {
            String::new()
        } else {
            let mut s = String::new();
            for (i, d) in self.irr.iter().enumerate() {
                if self.alphabet > 9 && i > 0 {
                    s.push(',');
                }
                s.push_str(&(u32::from(*d) + 1).to_string());
            }
            s
        }
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irr.is_empty() {
            f.write_str("∅")
        } else {
            format_digits(f, self.alphabet, &self.irr)
        }
    }
}

impl fmt::Debug for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SectorId(N={}, \"{}\")", self.alphabet, self)
    }
}

/// Staggered charge `Q_a = Σ_i (-1)^i [s_i = a]`, site 1 carrying `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Charge {
    pub symbol: u32,
    pub value: i64,
    /// System length used for normalization.
    pub len: usize,
}

impl Charge {
    /// `2 Q_a / L`, exactly.
    pub fn normalized_exact(&self) -> Ratio<i64> {
        Ratio::new(2 * self.value, self.len.max(1) as i64)
    }

    pub fn normalized(&self) -> f64 {
        2.0 * self.value as f64 / self.len.max(1) as f64
    }
}

impl FromStr for Charge {
    type Err = Error;

    /// Parses `a:value:len`, the form used in sidecar metadata.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected a:value:len, got {s:?}")));
        }
        let p = |t: &str| Error::Parse(format!("bad charge field {t:?}"));
        Ok(Self {
            symbol: parts[0].parse().map_err(|_| p(parts[0]))?,
            value: parts[1].parse().map_err(|_| p(parts[1]))?,
            len: parts[2].parse().map_err(|_| p(parts[2]))?,
        })
    }
}

fn staggered_sum(digits: &[u8], d: u8) -> i64 {
    digits
        .iter()
        .enumerate()
        .filter(|(_, &x)| x == d)
        // position i (0-based) is site i+1, sign (-1)^(i+1)
        .map(|(i, _)| if i % 2 == 0 { -1 } else { 1 })
        .sum()
}

/// Irreducible string of `s`: one left-to-right stack pass.
pub fn reduce(s: &SpinString) -> SectorId {
    SectorId {
        alphabet: s.alphabet,
        irr: reduce_digits(&s.digits),
    }
}

/// Stack reduction on raw 0-based digits.
pub fn reduce_digits(digits: &[u8]) -> Vec<u8> {
    let mut stack = Vec::with_capacity(digits.len());
    for &d in digits {
        if stack.last() == Some(&d) {
            stack.pop();
        } else {
            stack.push(d);
        }
    }
    stack
}

/// Depth of the irreducible string without allocating it.
pub fn reduced_depth(digits: &[u8], scratch: &mut Vec<u8>) -> usize {
    scratch.clear();
    for &d in digits {
        if scratch.last() == Some(&d) {
            scratch.pop();
        } else {
            scratch.push(d);
        }
    }
    scratch.len()
}

pub fn charge(s: &SpinString, a: u32) -> Result<Charge> {
    if a == 0 || a > s.alphabet {
        return Err(Error::SymbolOutOfRange {
            symbol: a,
            alphabet: s.alphabet,
        });
    }
    Ok(Charge {
        symbol: a,
        value: staggered_sum(&s.digits, (a - 1) as u8),
        len: s.len(),
    })
}

/// Charge of a sector: the staggered sum over the irreducible string with
/// positions renumbered `1..=d`. Pair deletion preserves position parity, so
/// this equals [`charge`] of every member; `len` is only used to normalize.
pub fn sector_charge(k: &SectorId, a: u32, len: usize) -> Result<Charge> {
    if a == 0 || a > k.alphabet {
        return Err(Error::SymbolOutOfRange {
            symbol: a,
            alphabet: k.alphabet,
        });
    }
    Ok(Charge {
        symbol: a,
        value: staggered_sum(&k.irr, (a - 1) as u8),
        len,
    })
}

/// True when no two adjacent symbols are equal.
pub fn is_frozen(s: &SpinString) -> bool {
    s.digits.windows(2).all(|w| w[0] != w[1])
}

/// Number of sectors of a length-`len` system, exactly, as `u128` when it
/// fits.
pub fn sector_count_u128(alphabet: u32, len: usize) -> Option<u128> {
    if alphabet == 2 {
        return Some(len as u128 + 1);
    }
    let base = u128::from(alphabet - 1);
    let mut pow = 1u128;
    for _ in 0..=len {
        pow = pow.checked_mul(base)?;
    }
    Some((pow - 1) / (base - 1))
}

/// All sectors of a length-`len` system, ordered by depth and then
/// lexicographically.
pub fn enumerate_sectors(alphabet: u32, len: usize) -> Result<Vec<SectorId>> {
    enumerate_sectors_capped(alphabet, len, DEFAULT_SECTOR_CAP)
}

pub fn enumerate_sectors_capped(alphabet: u32, len: usize, cap: u64) -> Result<Vec<SectorId>> {
    check_alphabet(alphabet)?;
    if len == 0 {
        return Err(invalid("system length must be at least 1"));
    }
    let count = sector_count_u128(alphabet, len);
    match count {
        Some(c) if c <= u128::from(cap) => {}
        _ => {
            return Err(Error::CapExceeded {
                what: "sector enumeration",
                needed: count.map_or_else(|| "> 2^128".to_string(), |c| c.to_string()),
                cap,
            })
        }
    }
    let mut out = Vec::with_capacity(count.unwrap_or(0) as usize);
    let mut layer = vec![SectorId::root(alphabet)?];
    for depth in 0..=len {
        if depth % 2 == len % 2 {
            out.extend(layer.iter().cloned());
        }
        if depth == len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|s| s.children().collect::<Vec<_>>())
            .collect();
    }
    Ok(out)
}

/// Iterator over every string of the full basis in index order.
pub fn all_strings(alphabet: u32, len: usize) -> impl Iterator<Item = SpinString> {
    let total = u64::from(alphabet).pow(len as u32);
    (0..total).map(move |i| SpinString::from_index(alphabet, len, i).expect("index in range"))
}
