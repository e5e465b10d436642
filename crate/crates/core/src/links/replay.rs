/// 64-entry anti-replay window. `check` before authenticating, `update`
/// only after the packet authenticated, so forged packets never move it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayWindow {
    /// Highest sequence seen plus one; 0 while nothing has been accepted.
    top: u64,
    /// Bit i set means sequence `top - 1 - i` was accepted.
    bitmap: u64,
}

pub const REPLAY_WINDOW: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayVerdict {
    Fresh,
    Duplicate,
    TooOld,
}

impl ReplayWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn highest(&self) -> Option<u64> {
        self.top.checked_sub(1)
    }

    pub fn check(&self, seq: u64) -> ReplayVerdict {
        if seq >= self.top {
            return ReplayVerdict::Fresh;
        }
        let diff = self.top - 1 - seq;
        if diff >= REPLAY_WINDOW {
            ReplayVerdict::TooOld
        } else if self.bitmap & (1 << diff) != 0 {
            ReplayVerdict::Duplicate
        } else {
            ReplayVerdict::Fresh
        }
    }

    pub fn update(&mut self, seq: u64) {
        if seq >= self.top {
            let shift = seq + 1 - self.top;
            self.bitmap = if shift >= REPLAY_WINDOW { 0 } else { self.bitmap << shift };
            self.bitmap |= 1;
            self.top = seq + 1;
        } else {
            let diff = self.top - 1 - seq;
            if diff < REPLAY_WINDOW {
                self.bitmap |= 1 << diff;
            }
        }
    }
}
