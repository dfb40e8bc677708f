//! The deterministic half-duplex line network.
//!
//! Node 0 is the source, nodes `1..=m` are relays and node `m + 1` is the
//! sink. A relay that transmits a binary symbol only hears itself; a silent
//! relay (`N`) hears its upstream neighbour.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel letter. `N` marks a slot in which the node does not transmit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TernarySymbol {
    Zero,
    One,
    N,
}

impl TernarySymbol {
    pub const ALL: [TernarySymbol; 3] = [TernarySymbol::Zero, TernarySymbol::One, TernarySymbol::N];

    /// Position in the fixed ordering `0, 1, N` used by every pmf table.
    pub const fn index(self) -> usize {
        match self {
            TernarySymbol::Zero => 0,
            TernarySymbol::One => 1,
            TernarySymbol::N => 2,
        }
    }

    pub const fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(TernarySymbol::Zero),
            1 => Some(TernarySymbol::One),
            2 => Some(TernarySymbol::N),
            _ => None,
        }
    }

    pub const fn from_bit(bit: bool) -> Self {
        if bit {
            TernarySymbol::One
        } else {
            TernarySymbol::Zero
        }
    }

    pub const fn is_silent(self) -> bool {
        matches!(self, TernarySymbol::N)
    }

    pub const fn as_char(self) -> char {
        match self {
            TernarySymbol::Zero => '0',
            TernarySymbol::One => '1',
            TernarySymbol::N => 'N',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(TernarySymbol::Zero),
            '1' => Some(TernarySymbol::One),
            'N' => Some(TernarySymbol::N),
            _ => None,
        }
    }
}

impl fmt::Display for TernarySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for TernarySymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next().and_then(Self::from_char), chars.next()) {
            (Some(sym), None) => Ok(sym),
            _ => Err(Error::Domain(format!("not a channel symbol: {s:?}"))),
        }
    }
}

/// Render a block of symbols as a string over `{0, 1, N}`.
pub fn render_block(block: &[TernarySymbol]) -> String {
    block.iter().map(|s| s.as_char()).collect()
}

/// Parse a block rendered by [`render_block`].
pub fn parse_block(s: &str) -> Result<Vec<TernarySymbol>> {
    s.chars()
        .map(|c| {
            TernarySymbol::from_char(c)
                .ok_or_else(|| Error::Domain(format!("not a channel symbol: {c:?}")))
        })
        .collect()
}

/// Relay reception model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelayModelVariant {
    /// Relays can tell silence apart from binary symbols.
    Ternary,
    /// The simultaneously silent pair `(N, N)` is excluded on every hop.
    Binary,
}

impl fmt::Display for RelayModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayModelVariant::Ternary => f.write_str("ternary"),
            RelayModelVariant::Binary => f.write_str("binary"),
        }
    }
}

impl FromStr for RelayModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ternary" => Ok(RelayModelVariant::Ternary),
            "binary" => Ok(RelayModelVariant::Binary),
            other => Err(Error::Domain(format!("unknown relay model {other:?}"))),
        }
    }
}

/// Shape of the cascade: number of relays, optional relay source, model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeTopology {
    m: usize,
    relay_source: Option<usize>,
    model: RelayModelVariant,
}

impl CascadeTopology {
    pub fn new(m: usize, relay_source: Option<usize>, model: RelayModelVariant) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("a cascade needs at least one relay".into()));
        }
        if let Some(r) = relay_source {
            if r == 0 || r > m {
                return Err(Error::Domain(format!("relay source {r} not in 1..={m}")));
            }
        }
        Ok(Self {
            m,
            relay_source,
            model,
        })
    }

    pub fn relays(&self) -> usize {
        self.m
    }

    pub fn relay_source(&self) -> Option<usize> {
        self.relay_source
    }

    pub fn model(&self) -> RelayModelVariant {
        self.model
    }
}

/// What relay `i` receives given its upstream neighbour's input and its own.
pub fn relay_output(
    x_prev: TernarySymbol,
    x_self: TernarySymbol,
    model: RelayModelVariant,
) -> Result<TernarySymbol> {
    if model == RelayModelVariant::Binary && x_prev.is_silent() && x_self.is_silent() {
        return Err(Error::ConstraintViolation { hop: 0 });
    }
    Ok(if x_self.is_silent() { x_prev } else { x_self })
}

/// One channel use of the whole cascade: inputs `X_0..X_m` to receptions
/// `Y_1..Y_{m+1}`, with `Y_{m+1} = X_m`.
pub fn network_use(x: &[TernarySymbol], topo: &CascadeTopology) -> Result<Vec<TernarySymbol>> {
    let mut y = Vec::with_capacity(x.len());
    network_use_into(x, topo.relays(), topo.model(), &mut y)?;
    Ok(y)
}

/// Allocation-free variant of [`network_use`] used by the simulator.
pub(crate) fn network_use_into(
    x: &[TernarySymbol],
    m: usize,
    model: RelayModelVariant,
    y: &mut Vec<TernarySymbol>,
) -> Result<()> {
    if x.len() != m + 1 {
        return Err(Error::Domain(format!(
            "expected {} inputs, got {}",
            m + 1,
            x.len()
        )));
    }
    y.clear();
    for i in 1..=m {
        let out = relay_output(x[i - 1], x[i], model)
            .map_err(|_| Error::ConstraintViolation { hop: i })?;
        y.push(out);
    }
    y.push(x[m]);
    Ok(())
}
