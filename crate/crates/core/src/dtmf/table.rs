use std::collections::HashMap;

use super::DtmfError;

/// Low-group tone frequencies in Hz, in column order.
pub const LOW_TONES: [u32; 10] = [699, 772, 842, 854, 869, 880, 918, 930, 943, 990];

/// High-group tone frequencies in Hz, ascending.
pub const HIGH_TONES: [u32; 10] = [1151, 1168, 1179, 1211, 1236, 1280, 1369, 1384, 1451, 1497];

const STANDARD_TABLE: &str = include_str!("../../assets/dtmf_table.txt");

/// One character and its (low, high) tone pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToneSymbol {
    pub character: char,
    pub low_freq: u32,
    pub high_freq: u32,
}

impl ToneSymbol {
    /// Packs the symbol into a byte: low-tone index in the high nibble,
    /// high-tone index in the low nibble.
    pub fn code(&self) -> u8 {
        let lo = LOW_TONES.iter().position(|&f| f == self.low_freq).unwrap();
        let hi = HIGH_TONES.iter().position(|&f| f == self.high_freq).unwrap();
        ((lo as u8) << 4) | hi as u8
    }
}

/// Bijective mapping between characters and tone pairs.
#[derive(Debug, Clone)]
pub struct DtmfTable {
    entries: Vec<ToneSymbol>,
    by_char: HashMap<char, usize>,
    by_pair: HashMap<(u32, u32), usize>,
}

impl DtmfTable {
    /// The bundled table: 91 printable characters plus space.
    pub fn standard() -> &'static DtmfTable {
        static TABLE: std::sync::OnceLock<DtmfTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(|| {
            DtmfTable::from_text(STANDARD_TABLE).expect("bundled DTMF table is well-formed")
        })
    }

    /// Parses the `<codepoint> <low_hz> <high_hz>` text format. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<DtmfTable, DtmfError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| DtmfError::TableFormat {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            let cp: u32 = fields[0].parse().map_err(|_| bad("bad codepoint"))?;
            let character = char::from_u32(cp).ok_or_else(|| bad("invalid codepoint"))?;
            let low_freq: u32 = fields[1].parse().map_err(|_| bad("bad low frequency"))?;
            let high_freq: u32 = fields[2].parse().map_err(|_| bad("bad high frequency"))?;
            if !LOW_TONES.contains(&low_freq) {
                return Err(bad("low frequency not in the low tone group"));
            }
            if !HIGH_TONES.contains(&high_freq) {
                return Err(bad("high frequency not in the high tone group"));
            }
            entries.push(ToneSymbol {
                character,
                low_freq,
                high_freq,
            });
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<ToneSymbol>) -> Result<DtmfTable, DtmfError> {
        let mut by_char = HashMap::new();
        let mut by_pair = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_char.insert(e.character, i).is_some() {
                return Err(DtmfError::DuplicateCharacter(e.character));
            }
            if by_pair.insert((e.low_freq, e.high_freq), i).is_some() {
                return Err(DtmfError::DuplicatePair(e.low_freq, e.high_freq));
            }
        }
        Ok(DtmfTable {
            entries,
            by_char,
            by_pair,
        })
    }

    pub fn entries(&self) -> &[ToneSymbol] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup_char(&self, c: char) -> Option<&ToneSymbol> {
        self.by_char.get(&c).map(|&i| &self.entries[i])
    }

    pub fn lookup_pair(&self, low: u32, high: u32) -> Option<&ToneSymbol> {
        self.by_pair.get(&(low, high)).map(|&i| &self.entries[i])
    }

    /// Inverse of [`ToneSymbol::code`].
    pub fn lookup_code(&self, code: u8) -> Option<&ToneSymbol> {
        let lo = *LOW_TONES.get((code >> 4) as usize)?;
        let hi = *HIGH_TONES.get((code & 0x0f) as usize)?;
        self.lookup_pair(lo, hi)
    }

    /// Serializes back to the text format.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{} {} {}\n", e.character as u32, e.low_freq, e.high_freq))
            .collect()
    }
}
