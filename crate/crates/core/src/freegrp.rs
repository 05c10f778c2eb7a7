//! Exact arithmetic in the group algebra of a free group whose generators are
//! a finite permuted set (`a`, `b`, ...) and a two-sided shifted family
//! `s_k`, `k ∈ ℤ`, under the automorphism `T` acting by the permutation on
//! the first and by `s_k ↦ s_{k+1}` on the second.
//!
//! `K`, the words with finite `T`-orbit, are the words in the permuted
//! letters only; `D` restricts the support to `K`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Exact complex rational.
pub type Coeff = Complex<BigRational>;

pub fn coeff(re: i64, im: i64) -> Coeff {
    Complex::new(
        BigRational::from_integer(re.into()),
        BigRational::from_integer(im.into()),
    )
}

pub fn coeff_ratio(num: i64, den: i64) -> Coeff {
    Complex::new(BigRational::new(num.into(), den.into()), BigRational::zero())
}

fn abs_squared(c: &Coeff) -> BigRational {
    &c.re * &c.re + &c.im * &c.im
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Perm(usize),
    Shift(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub symbol: Symbol,
    pub inverse: bool,
}

impl Letter {
    pub fn new(symbol: Symbol) -> Self {
        Letter { symbol, inverse: false }
    }

    pub fn inv(self) -> Self {
        Letter {
            symbol: self.symbol,
            inverse: !self.inverse,
        }
    }
}

/// Reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Reduces the given letters.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut w = Word::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn perm(i: usize) -> Self {
        Word(vec![Letter::new(Symbol::Perm(i))])
    }

    pub fn shift(k: i64) -> Self {
        Word(vec![Letter::new(Symbol::Shift(k))])
    }

    fn push(&mut self, l: Letter) {
        if self.0.last() == Some(&l.inv()) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &l in &other.0 {
            w.push(l);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    /// Whether every letter is a permuted one.
    pub fn in_k(&self) -> bool {
        self.0.iter().all(|l| matches!(l.symbol, Symbol::Perm(_)))
    }

    fn shifts(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().filter_map(|l| match l.symbol {
            Symbol::Shift(k) => Some(k),
            Symbol::Perm(_) => None,
        })
    }
}

const LETTER_NAMES: &[u8] = b"abcdefghijklmnopqrtuvwxyz";

fn fmt_symbol(s: Symbol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match s {
        Symbol::Perm(i) if i < LETTER_NAMES.len() => write!(f, "{}", LETTER_NAMES[i] as char),
        Symbol::Perm(i) => write!(f, "p{i}"),
        Symbol::Shift(k) => write!(f, "s{k}"),
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_symbol(self.symbol, f)?;
        if self.inverse {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

fn parse_letter(token: &str) -> Result<Letter> {
    let bad = || Error::InvalidInput(format!("cannot parse letter {token:?}"));
    let (name, inverse) = match token.strip_suffix("^-1") {
        Some(rest) => (rest, true),
        None => (token, false),
    };
    let symbol = if let Some(k) = name.strip_prefix('s').filter(|r| !r.is_empty()) {
        Symbol::Shift(k.parse().map_err(|_| bad())?)
    } else if let Some(i) = name.strip_prefix('p').filter(|r| !r.is_empty()) {
        Symbol::Perm(i.parse().map_err(|_| bad())?)
    } else if name.len() == 1 {
        let pos = LETTER_NAMES
            .iter()
            .position(|&c| c == name.as_bytes()[0])
            .ok_or_else(bad)?;
        Symbol::Perm(pos)
    } else {
        return Err(bad());
    };
    Ok(Letter { symbol, inverse })
}

impl FromStr for Word {
    type Err = Error;

    /// Space-separated letters, e.g. `a s0 b^-1`; `1` is the identity.
    fn from_str(s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for token in s.split_whitespace() {
            if token != "1" {
                letters.push(parse_letter(token)?);
            }
        }
        Ok(Word::from_letters(letters))
    }
}

/// Finitely supported element `Σ c_g l(g)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupAlgElement {
    terms: BTreeMap<Word, Coeff>,
}

impl GroupAlgElement {
    pub fn zero() -> Self {
        GroupAlgElement::default()
    }

    pub fn one() -> Self {
        GroupAlgElement::word(Word::identity())
    }

    /// `l(g)`.
    pub fn word(g: Word) -> Self {
        GroupAlgElement::term(g, Coeff::one())
    }

    pub fn term(g: Word, c: Coeff) -> Self {
        let mut x = GroupAlgElement::zero();
        x.add_term(g, c);
        x
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, Coeff)>) -> Self {
        let mut x = GroupAlgElement::zero();
        for (g, c) in terms {
            x.add_term(g, c);
        }
        x
    }

    fn add_term(&mut self, g: Word, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(g).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Coeff)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, g: &Word) -> Coeff {
        self.terms.get(g).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn add(&self, other: &GroupAlgElement) -> GroupAlgElement {
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &GroupAlgElement) -> GroupAlgElement {
        self.add(&other.scale(&coeff(-1, 0)))
    }

    pub fn scale(&self, c: &Coeff) -> GroupAlgElement {
        GroupAlgElement::from_terms(self.terms.iter().map(|(g, v)| (g.clone(), v * c)))
    }

    pub fn multiply(&self, other: &GroupAlgElement) -> GroupAlgElement {
        let mut out = GroupAlgElement::zero();
        for (g, x) in &self.terms {
            for (h, y) in &other.terms {
                out.add_term(g.mul(h), x * y);
            }
        }
        out
    }

    pub fn star(&self) -> GroupAlgElement {
        GroupAlgElement::from_terms(self.terms.iter().map(|(g, c)| (g.inverse(), c.conj())))
    }

    /// `⟨δ_1, x δ_1⟩`.
    pub fn mu(&self) -> Coeff {
        self.coefficient(&Word::identity())
    }

    /// `Σ_g |x(g)|²`.
    pub fn l2_norm_squared(&self) -> BigRational {
        self.terms
            .values()
            .map(abs_squared)
            .fold(BigRational::zero(), |a, b| a + b)
    }

    fn shifts(&self) -> impl Iterator<Item = i64> + '_ {
        self.terms.keys().flat_map(|g| g.shifts())
    }

    fn perm_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().flat_map(|g| {
            g.0.iter().filter_map(|l| match l.symbol {
                Symbol::Perm(i) => Some(i),
                Symbol::Shift(_) => None,
            })
        })
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => fmt_rational(&c.re),
        (true, false) => format!("{}i", fmt_rational(&c.im)),
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            format!("({}{sign}{}i)", fmt_rational(&c.re), fmt_rational(&c.im.abs()))
        }
    }
}

impl fmt::Display for GroupAlgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (g, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "[{g}]")?;
            } else {
                write!(f, "{}*[{g}]", fmt_coeff(c))?;
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.trim().parse().ok()?)),
    }
}

impl FromStr for GroupAlgElement {
    type Err = Error;

    /// Sums of `coef*[word]` or `[word]`, e.g. `2*[a s0] + -1/2*[s5^-1]`.
    /// Coefficients are rationals or rational multiples of `i`.
    fn from_str(s: &str) -> Result<GroupAlgElement> {
        let bad = |t: &str| Error::InvalidInput(format!("cannot parse term {t:?}"));
        let mut out = GroupAlgElement::zero();
        let s = s.trim();
        if s == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let term = term.trim();
            let (c, w) = match term.split_once('*') {
                Some((c, w)) => {
                    let c = c.trim();
                    let coef = match c.strip_suffix('i') {
                        Some(im) => Complex::new(BigRational::zero(), parse_rational(im).ok_or_else(|| bad(term))?),
                        None => Complex::new(parse_rational(c).ok_or_else(|| bad(term))?, BigRational::zero()),
                    };
                    (coef, w.trim())
                }
                None => (Coeff::one(), term),
            };
            let w = w
                .strip_prefix('[')
                .and_then(|w| w.strip_suffix(']'))
                .ok_or_else(|| bad(term))?;
            out.add_term(w.parse()?, c);
        }
        Ok(out)
    }
}

/// `T`: a permutation of the finite set of permuted letters, and
/// `s_k ↦ s_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftPermAut {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl ShiftPermAut {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &j) in perm.iter().enumerate() {
            if j >= n || inverse[j] != usize::MAX {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
            inverse[j] = i;
        }
        Ok(ShiftPermAut { perm, inverse })
    }

    /// Number of permuted letters.
    pub fn size(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply_symbol(&self, s: Symbol, n: i64) -> Symbol {
        match s {
            Symbol::Shift(k) => Symbol::Shift(k + n),
            Symbol::Perm(mut i) => {
                let table = if n >= 0 { &self.perm } else { &self.inverse };
                let steps = n.unsigned_abs() % self.orbit_period(i) as u64;
                for _ in 0..steps {
                    i = table[i];
                }
                Symbol::Perm(i)
            }
        }
    }

    fn orbit_period(&self, i: usize) -> usize {
        let mut j = self.perm[i];
        let mut k = 1;
        while j != i {
            j = self.perm[j];
            k += 1;
        }
        k
    }

    /// `Tⁿ(g)`.
    pub fn apply_word(&self, g: &Word, n: i64) -> Word {
        // letterwise image of a reduced word is reduced
        Word(
            g.0.iter()
                .map(|l| Letter {
                    symbol: self.apply_symbol(l.symbol, n),
                    inverse: l.inverse,
                })
                .collect(),
        )
    }

    pub fn check(&self, x: &GroupAlgElement) -> Result<()> {
        match x.perm_indices().find(|&i| i >= self.size()) {
            Some(i) => Err(Error::InvalidInput(format!(
                "permuted letter index {i} outside a set of size {}",
                self.size()
            ))),
            None => Ok(()),
        }
    }

    /// `αⁿ(x)`, `α(l(g)) = l(T(g))`.
    pub fn apply_alpha(&self, x: &GroupAlgElement, n: i64) -> Result<GroupAlgElement> {
        self.check(x)?;
        Ok(GroupAlgElement::from_terms(
            x.terms.iter().map(|(g, c)| (self.apply_word(g, n), c.clone())),
        ))
    }

    /// Whether the `T`-orbit of `g` is finite.
    pub fn orbit_finite(&self, g: &Word) -> bool {
        g.in_k()
    }
}

/// `D(x)`: the part of `x` supported in `K`.
pub fn cond_d(x: &GroupAlgElement) -> GroupAlgElement {
    GroupAlgElement::from_terms(
        x.terms
            .iter()
            .filter(|(g, _)| g.in_k())
            .map(|(g, c)| (g.clone(), c.clone())),
    )
}

/// `λ(|D(bαⁿ(a))|²) = Σ_{g ∈ K} |(bαⁿ(a))(g)|²`.
pub fn rwm_term_free(aut: &ShiftPermAut, a: &GroupAlgElement, b: &GroupAlgElement, n: i64) -> Result<BigRational> {
    aut.check(b)?;
    let c = b.multiply(&aut.apply_alpha(a, n)?);
    Ok(cond_d(&c).l2_norm_squared())
}

/// Horizon `N₀` with `D(bαⁿ(a)) = 0` for every `n > N₀`, checked at
/// `N₀+1 ..= N₀+5`.
///
/// A shift letter `s_{k+n}` of `Tⁿ(g)` can only cancel against an equal
/// letter of `h`, so no `n` beyond `max shift(b) − min shift(a)` can land in
/// `K`; the horizon is the last nonzero `n` below that.
pub fn vanishing_horizon(aut: &ShiftPermAut, a: &GroupAlgElement, b: &GroupAlgElement) -> Result<u64> {
    if !cond_d(a).is_zero() {
        return Err(Error::InvalidInput(format!("D(a) = {} is not zero", cond_d(a))));
    }
    aut.check(a)?;
    aut.check(b)?;
    let bound = match (b.shifts().max(), a.shifts().min()) {
        (Some(hi), Some(lo)) => (hi - lo).max(0),
        _ => 0,
    };
    let mut horizon = 0;
    for n in (1..=bound).rev() {
        if !rwm_term_free(aut, a, b, n)?.is_zero() {
            horizon = n;
            break;
        }
    }
    for n in horizon + 1..=horizon + 5 {
        let t = rwm_term_free(aut, a, b, n)?;
        if !t.is_zero() {
            return Err(Error::Internal(format!(
                "term at n={n} is {} beyond horizon {horizon}",
                fmt_rational(&t)
            )));
        }
    }
    Ok(horizon as u64)
}

/// `‖[αⁿ(l(g)), l(h)] δ_1‖`: `0` when `Tⁿ(g)` and `h` commute, else `√2`.
pub fn commutator_norm(aut: &ShiftPermAut, g: &Word, h: &Word, n: i64) -> f64 {
    let t = aut.apply_word(g, n);
    if t.mul(h) == h.mul(&t) {
        0.0
    } else {
        std::f64::consts::SQRT_2
    }
}

/// The same norm computed from the elements: `‖(xy − yx)δ_1‖₂`.
pub fn commutator_norm_from_elements(x: &GroupAlgElement, y: &GroupAlgElement) -> f64 {
    x.multiply(y)
        .sub(&y.multiply(x))
        .l2_norm_squared()
        .to_f64()
        .unwrap_or(f64::NAN)
        .sqrt()
}

/// Random element with small integer coefficients.
pub fn random_element<R: Rng>(
    rng: &mut R,
    perm_size: usize,
    max_shift: i64,
    max_len: usize,
    terms: usize,
) -> GroupAlgElement {
    let mut x = GroupAlgElement::zero();
    for _ in 0..terms {
        let len = rng.random_range(0..=max_len);
        let letters = (0..len).map(|_| {
            let symbol = if perm_size > 0 && rng.random_bool(0.5) {
                Symbol::Perm(rng.random_range(0..perm_size))
            } else {
                Symbol::Shift(rng.random_range(-max_shift..=max_shift))
            };
            Letter {
                symbol,
                inverse: rng.random_bool(0.5),
            }
        });
        let w = Word::from_letters(letters.collect::<Vec<_>>());
        x.add_term(w, coeff(rng.random_range(-3..=3), rng.random_range(-3..=3)));
    }
    x
}
