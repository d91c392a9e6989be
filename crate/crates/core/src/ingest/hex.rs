// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HexError {
    #[error("odd number of hex digits")]
    OddLength,
    #[error("non-hex character {c:?} at offset {index}")]
    NonHexCharacter { c: char, index: usize },
}

/// Decodes hex text with an optional `0x`/`0X` prefix. Surrounding
/// whitespace (a trailing newline in files) is ignored.
pub fn hex_decode(text: &str) -> Result<Vec<u8>, HexError> {
    let t = text.trim();
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    hex::decode(t).map_err(|e| match e {
        hex::FromHexError::InvalidHexCharacter { c, index } => HexError::NonHexCharacter { c, index },
        _ => HexError::OddLength,
    })
}

pub fn hex_encode(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(hex_decode("0x6080"), Ok(vec![0x60, 0x80]));
        assert_eq!(hex_decode(""), Ok(vec![]));
        assert_eq!(hex_decode("0x"), Ok(vec![]));
        assert!(matches!(hex_decode("0x6g"), Err(HexError::NonHexCharacter { c: 'g', .. })));
        assert_eq!(hex_decode("0x608"), Err(HexError::OddLength));
        assert_eq!(hex_decode("6080\n"), Ok(vec![0x60, 0x80]));
        assert_eq!(hex_decode("0XFF"), Ok(vec![0xff]));
    }

    #[test]
    fn round_trip() {
        let b: Vec<u8> = (0..=255).collect();
        assert_eq!(hex_decode(&hex_encode(&b)).unwrap(), b);
    }
}
