//! Secret key agreement over noisy channels with a pre-shared common key.
//!
//! A random bit stream is split into two groups by a common key, each group
//! is Reed-Solomon encoded, and only the parity travels in the clear. The
//! receiver regroups the noisy stream with the same key, decodes, and both
//! sides compress the information bits into a secret key by universal
//! hashing.

pub mod amplify;
pub mod analysis;
pub mod bits;
pub mod channel;
pub mod code;
pub mod error;
pub mod gf;
pub mod grouping;
pub mod oracle;
pub mod params;
pub mod session;

pub use amplify::{capacity_lower_bound, Capacity, CapacityParams, HashSeed, ToeplitzHash};
pub use analysis::{SecurityReport, TailDirection, TailMode, TailQuery};
pub use channel::{ChannelConfig, Frame, Method};
pub use code::{Block, CodeSpec, Decoded};
pub use error::{Error, Result};
pub use gf::{Elem, Field};
pub use grouping::{CommonKey, DeltaMode, Group};
pub use params::Params;
pub use session::{run_session, SessionConfig, SessionReport};
