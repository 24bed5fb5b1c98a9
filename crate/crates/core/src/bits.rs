use std::fmt;
use std::str::FromStr;

use crate::error::{GroverError, Result};

/// Target bitstring. Character `j` is the state of qubit `j`; qubit 0 is the
/// most significant bit of the computational-basis index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Bitstring(Vec<u8>);

impl From<Bitstring> for String {
    fn from(b: Bitstring) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Bitstring {
    type Error = GroverError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Bitstring {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(GroverError::Domain("empty bitstring".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(GroverError::Domain("bitstring entries must be 0 or 1".into()));
        }
        Ok(Bitstring(bits))
    }

    pub fn all_ones(n: usize) -> Self {
        Bitstring(vec![1; n])
    }

    pub fn zeros(n: usize) -> Self {
        Bitstring(vec![0; n])
    }

    /// `ones` leading ones followed by zeros.
    pub fn leading_ones(n: usize, ones: usize) -> Self {
        Bitstring((0..n).map(|j| u8::from(j < ones)).collect())
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        Bitstring((0..n).map(|j| ((index >> (n - 1 - j)) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn expect_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(GroverError::Domain(format!(
                "target has {} bits but the register has {n} qubits",
                self.len()
            )));
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = GroverError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(GroverError::Domain(format!("invalid bit '{other}' in target"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Bitstring::new(bits)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_index() {
        let b: Bitstring = "0101".parse().unwrap();
        assert_eq!(b.index(), 5);
        assert_eq!(b.count_ones(), 2);
        assert_eq!(Bitstring::from_index(4, 5), b);
        assert_eq!(b.to_string(), "0101");
        assert_eq!(Bitstring::leading_ones(5, 2).to_string(), "11000");
        assert!("01a".parse::<Bitstring>().is_err());
        assert!("".parse::<Bitstring>().is_err());
    }
}
