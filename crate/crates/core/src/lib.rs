//! Analysis and simulation of the keyed M-ary coherent-state cipher.
//!
//! * [`states`]: two-mode coherent states under phase and polarization encoding.
//! * [`keystream`]: LFSR key expansion and the key-index to angle map.
//! * [`helstrom`]: the eavesdropper's minimum error via a Gram-subspace reduction,
//!   and the keyed receiver's closed-form error.
//! * [`fock_oracle`]: brute-force recomputation in a truncated photon-number basis.
//! * [`protocol_sim`]: Monte Carlo sessions with heterodyne receivers.
//! * [`cli`]: the `ccipher` command-line front end.

pub mod cli;
pub mod error;
pub mod fock_oracle;
pub mod helstrom;
pub mod keystream;
pub mod linalg;
pub mod protocol_sim;
pub mod states;

pub use error::{Error, Result};
pub use helstrom::{
    bob_error, constellation, eve_error, pe_curve, Constellation, CurveRow, DiscriminationResult,
    Priors,
};
pub use keystream::{KeyStream, LfsrState};
pub use states::{ComplexAmplitude, EncodingKind, TwoModeState};
