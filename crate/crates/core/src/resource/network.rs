use serde::{Deserialize, Serialize};

use super::ResourceError;
use crate::kernel::SimTime;

/// Seconds to move `bytes` over a link of `baud` bits per second.
pub fn transfer_delay(bytes: u64, baud: f64) -> Result<f64, ResourceError> {
    if !(baud > 0.0) {
        return Err(ResourceError::ZeroBaud);
    }
    Ok(bytes as f64 * 8.0 / baud)
}

/// How messages carrying gridlets are delayed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkMode {
    /// Zero delay.
    #[default]
    None,
    /// Every entity's output link runs at this many bits per second.
    Baud(f64),
}

impl NetworkMode {
    pub fn validate(&self) -> Result<(), ResourceError> {
        match *self {
            NetworkMode::None => Ok(()),
            NetworkMode::Baud(b) => transfer_delay(0, b).map(|_| ()),
        }
    }
}

/// Serialised output port: a message starts transmission when the previous
/// one has left, and arrives after its transfer delay.
#[derive(Debug, Clone, Default)]
pub struct OutputLink {
    mode: NetworkMode,
    busy_until: SimTime,
}

impl OutputLink {
    pub fn new(mode: NetworkMode) -> Self {
        OutputLink {
            mode,
            busy_until: 0.0,
        }
    }

    /// Delay from `now` until a `bytes`-sized message sent now is delivered.
    pub fn send(&mut self, now: SimTime, bytes: u64) -> f64 {
        match self.mode {
            NetworkMode::None => 0.0,
            NetworkMode::Baud(baud) => {
                let start = self.busy_until.max(now);
                let done = start + bytes as f64 * 8.0 / baud;
                self.busy_until = done;
                done - now
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_formula() {
        assert_eq!(transfer_delay(1200, 9600.0).unwrap(), 1.0);
        assert_eq!(transfer_delay(0, 9600.0).unwrap(), 0.0);
        assert_eq!(transfer_delay(10, 0.0), Err(ResourceError::ZeroBaud));
    }

    #[test]
    fn link_serialises_messages() {
        let mut link = OutputLink::new(NetworkMode::Baud(8.0));
        assert_eq!(link.send(0.0, 2), 2.0);
        // second message waits for the first
        assert_eq!(link.send(1.0, 1), 2.0);
        // idle link
        assert_eq!(link.send(10.0, 1), 1.0);
        let mut none = OutputLink::new(NetworkMode::None);
        assert_eq!(none.send(5.0, 1_000_000), 0.0);
    }
}
