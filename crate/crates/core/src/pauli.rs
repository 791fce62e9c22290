//! Pauli strings in symplectic (x, z) form.
//!
//! Qubit 0 is the leftmost letter of the text form and the most significant
//! tensor factor of the dense matrices. `Y` is stored as `x = z = 1` and the
//! operator represented is always the Hermitian one, `Y = iXZ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register supported by the bitmask representation.
pub const MAX_QUBITS: usize = 16;

/// A measurement outcome or an operator sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bool_minus(minus: bool) -> Sign {
        if minus {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn from_i32(v: i32) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::Invalid(format!("sign must be +1 or -1, got {v}"))),
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn to_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bool_minus(self.is_minus() != rhs.is_minus())
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        self.flip()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Powers of `i`, the possible phases of a product of Pauli strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    /// Exponent `k` in `i^k`, in `0..4`.
    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_complex(self) -> num_complex::Complex64 {
        use num_complex::Complex64 as C;
        match self.0 {
            0 => C::new(1.0, 0.0),
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];
    pub const NONTRIVIAL: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Unsigned Pauli operator on up to [`MAX_QUBITS`] qubits, bit `q` of each
/// mask belonging to qubit `q`.
///
/// The ordering is arbitrary but total, which is what the sparse state maps
/// need.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliKey {
    pub x: u32,
    pub z: u32,
}

impl PauliKey {
    pub const IDENTITY: PauliKey = PauliKey { x: 0, z: 0 };

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the two operators anticommute.
    #[inline]
    pub fn anticommutes(self, other: PauliKey) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) & 1 == 1
    }

    /// Number of `Y` letters.
    #[inline]
    fn y_count(self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `self * other = i^k * result`, returning `(result, k)`.
    #[inline]
    pub fn mul(self, other: PauliKey) -> (PauliKey, Phase) {
        let out = PauliKey {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // Write each Hermitian string as i^{y} X^x Z^z and move Z^z1 past X^x2.
        let k = self.y_count() as i64 + other.y_count() as i64 + 2 * (self.z & other.x).count_ones() as i64
            - out.y_count() as i64;
        (out, Phase::from_exponent(k))
    }

    pub fn letter(self, q: usize) -> Letter {
        Letter::from_bits((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    pub fn weight(self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Qubits with a non-identity letter.
    pub fn support(self) -> u32 {
        self.x | self.z
    }
}

/// Signed Pauli string on a fixed number of qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    num_qubits: u8,
    key: PauliKey,
    sign: Sign,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> PauliString {
        assert!(num_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString {
            num_qubits: num_qubits as u8,
            key: PauliKey::IDENTITY,
            sign: Sign::Plus,
        }
    }

    pub fn from_letters(letters: &[Letter], sign: Sign) -> Result<PauliString> {
        if letters.len() > MAX_QUBITS {
            return Err(Error::Invalid(format!(
                "{} qubits exceeds the maximum of {MAX_QUBITS}",
                letters.len()
            )));
        }
        let mut key = PauliKey::IDENTITY;
        for (q, l) in letters.iter().enumerate() {
            let (x, z) = l.bits();
            key.x |= (x as u32) << q;
            key.z |= (z as u32) << q;
        }
        Ok(PauliString {
            num_qubits: letters.len() as u8,
            key,
            sign,
        })
    }

    pub fn from_key(num_qubits: usize, key: PauliKey, sign: Sign) -> PauliString {
        assert!(num_qubits <= MAX_QUBITS);
        debug_assert!(key.support() >> num_qubits == 0);
        PauliString {
            num_qubits: num_qubits as u8,
            key,
            sign,
        }
    }

    /// A single letter on qubit `q` of an `n`-qubit register.
    pub fn single(num_qubits: usize, q: usize, letter: Letter) -> PauliString {
        assert!(q < num_qubits);
        let mut p = PauliString::identity(num_qubits);
        let (x, z) = letter.bits();
        p.key.x |= (x as u32) << q;
        p.key.z |= (z as u32) << q;
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits as usize
    }

    pub fn key(&self) -> PauliKey {
        self.key
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn with_sign(mut self, sign: Sign) -> PauliString {
        self.sign = sign;
        self
    }

    pub fn unsigned(self) -> PauliString {
        self.with_sign(Sign::Plus)
    }

    pub fn letter(&self, q: usize) -> Letter {
        self.key.letter(q)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.num_qubits()).map(|q| self.letter(q)).collect()
    }

    pub fn weight(&self) -> u32 {
        self.key.weight()
    }

    /// True for `+I` and `-I` alike.
    pub fn is_identity(&self) -> bool {
        self.key.is_identity()
    }

    fn check_width(&self, other: &PauliString) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits(),
                right: other.num_qubits(),
            });
        }
        Ok(())
    }

    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        self.check_width(other)?;
        Ok(!self.key.anticommutes(other.key))
    }

    /// `self * other = phase * result` with `result` carrying a real sign.
    ///
    /// The returned phase is `+1` or `+i`: the string's sign absorbs any
    /// factor of `-1`, so the product is exactly `phase * result`.
    pub fn mul(&self, other: &PauliString) -> Result<(PauliString, Phase)> {
        self.check_width(other)?;
        let (key, mut phase) = self.key.mul(other.key);
        if self.sign.is_minus() {
            phase = phase * Phase::MINUS_ONE;
        }
        if other.sign.is_minus() {
            phase = phase * Phase::MINUS_ONE;
        }
        let (sign, rest) = if phase.exponent() >= 2 {
            (Sign::Minus, Phase::from_exponent(phase.exponent() as i64 - 2))
        } else {
            (Sign::Plus, phase)
        };
        Ok((
            PauliString {
                num_qubits: self.num_qubits,
                key,
                sign,
            },
            rest,
        ))
    }

    /// Product of two commuting strings, which is again a signed Hermitian
    /// string.
    pub fn mul_commuting(&self, other: &PauliString) -> Result<PauliString> {
        let (p, phase) = self.mul(other)?;
        if phase != Phase::ONE {
            return Err(Error::Invalid(format!(
                "{self} and {other} anticommute; their product is not Hermitian"
            )));
        }
        Ok(p)
    }

    /// Places this string on `qubits` of a wider register, letter `i` going
    /// to qubit `qubits[i]`.
    pub fn embed(&self, width: usize, qubits: &[usize]) -> Result<PauliString> {
        if qubits.len() != self.num_qubits() {
            return Err(Error::QubitMismatch {
                left: self.num_qubits(),
                right: qubits.len(),
            });
        }
        let mut out = PauliString::identity(width);
        out.sign = self.sign;
        for (i, &q) in qubits.iter().enumerate() {
            if q >= width {
                return Err(Error::QubitOutOfRange { qubit: q, width });
            }
            if out.key.support() >> q & 1 == 1 {
                return Err(Error::Invalid(format!("qubit {q} listed twice")));
            }
            let (x, z) = self.letter(i).bits();
            out.key.x |= (x as u32) << q;
            out.key.z |= (z as u32) << q;
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign.is_minus() {
            f.write_str("-")?;
        }
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (Sign::Minus, rest),
            None => (Sign::Plus, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {s:?}")));
        }
        let letters = body
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        PauliString::from_letters(&letters, sign)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixed tables: panics on malformed input.
pub fn pauli(s: &str) -> PauliString {
    s.parse().unwrap_or_else(|e| panic!("{e}"))
}

/// All `4^n` unsigned strings in the superoperator basis order: base-4
/// digits with qubit 0 most significant, digit order `I, X, Y, Z`.
pub fn pauli_basis(num_qubits: usize) -> Vec<PauliString> {
    (0..4usize.pow(num_qubits as u32))
        .map(|mut idx| {
            let mut letters = vec![Letter::I; num_qubits];
            for q in (0..num_qubits).rev() {
                letters[q] = Letter::ALL[idx % 4];
                idx /= 4;
            }
            PauliString::from_letters(&letters, Sign::Plus).expect("width checked")
        })
        .collect()
}

/// Index of an unsigned string in [`pauli_basis`].
pub fn basis_index(p: &PauliString) -> usize {
    let mut idx = 0;
    for q in 0..p.num_qubits() {
        let d = match p.letter(q) {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        };
        idx = idx * 4 + d;
    }
    idx
}
