use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block and network sizes shared by every stage of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Subcarriers per block.
    pub n: usize,
    /// Channel memory (taps minus one), also the cyclic prefix length.
    pub l: usize,
    /// Macro users sharing the band.
    pub m: usize,
    /// Small cells, one user each.
    pub k: usize,
    /// Transmit chains per small cell.
    pub gamma_tx: usize,
    /// Receive chains per small-cell user.
    pub gamma_rx: usize,
}

impl Dimensions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.l == 0 {
            return bad(format!("need N > 0 and L > 0, got N={} L={}", self.n, self.l));
        }
        if self.l > self.n {
            return bad(format!("prefix L={} longer than block N={}", self.l, self.n));
        }
        if self.m == 0 || self.n % self.m != 0 {
            return bad(format!("M={} must divide N={}", self.m, self.n));
        }
        if self.k == 0 || self.gamma_tx == 0 {
            return bad("need at least one small cell and one transmit chain".into());
        }
        if self.gamma_rx != 1 {
            return bad(format!("only single-antenna small-cell users are modeled, got gamma_rx={}", self.gamma_rx));
        }
        Ok(())
    }

    /// Total small-cell transmit chains.
    pub fn chains(&self) -> usize {
        self.k * self.gamma_tx
    }

    /// Streams served by the small-cell tier, one per user per subcarrier.
    pub fn streams(&self) -> usize {
        self.k * self.gamma_rx * self.n
    }

    /// Free dimensions left after the null-space step.
    pub fn inner_dims(&self) -> usize {
        self.chains() * self.l
    }

    pub fn block_len(&self) -> usize {
        self.n + self.l
    }
}
