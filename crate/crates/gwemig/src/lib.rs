//! Supercritical branching processes with i.i.d. emigration.
//!
//! Each generation of a population reproduces independently and then a random
//! number of individuals emigrates, clamped at zero:
//!
//! ```text
//! Z_{n+1} = ( sum_{j=1..Z_n} xi_{n+1,j}  -  Y_{n+1} )_+
//! ```
//!
//! With mean offspring `lambda > 1` the population wants to explode while the
//! emigration stream keeps chipping away at it, and everything interesting —
//! whether the chain dies almost surely, whether its lifetime has finite
//! expectation, how extinction probabilities scale with the initial
//! population, what the martingale `Z_n / lambda^n` converges to — is decided
//! by the interplay of `lambda` with the tail of `Y`.
//!
//! The crate provides, module by module:
//!
//! * [`laws`] — integer laws with optional analytic heavy tails and the
//!   moments the classification criteria consume.
//! * [`model`] — the joint law of one generation's input, with or without
//!   independence between offspring and emigration.
//! * [`process`] — reproducible engines for the emigration chain, its renewal
//!   and pure-branching companions, the coupled decomposition pair, and the
//!   constant-offspring reduction to an autoregressive recursion.
//! * [`criteria`] — analytic classification: recurrence, expected-lifetime
//!   series tests (Raabe/Gauss), closed-form limit constants, concentration
//!   bounds, and self-verifying recursion certificates.
//! * [`exact`] — exact finite-horizon computation: the distribution of the
//!   extinction time by forward dynamic programming, expected-lifetime
//!   bounds, and certified perpetuity brackets.
//! * [`mc`] — parallel, bit-reproducible Monte Carlo estimators and the
//!   limit-theorem experiments built on them.
//!
//! The guide in `book/` walks through the same material chapter by chapter;
//! its code snippets compile and run as part of `cargo test`.

pub mod criteria;
pub mod error;
pub mod exact;
pub mod laws;
pub mod mc;
pub mod model;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use laws::{DiscreteLaw, LawSpec, Tail};
pub use model::{Coupling, GenerationModel, ModelSpec};
pub use process::{ProcessConfig, TrialSeed, Trajectory, Variant};
pub use rng::{SeedSpec, Stream};

// The book's code blocks double as doc-tests so the guide cannot drift from
// the API. One module per chapter keeps failures attributable.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(laws, "../../../book/src/laws.md");
    chapter!(processes, "../../../book/src/processes.md");
    chapter!(classification, "../../../book/src/classification.md");
    chapter!(exact_computation, "../../../book/src/exact.md");
    chapter!(monte_carlo, "../../../book/src/monte-carlo.md");
    chapter!(cli, "../../../book/src/cli.md");
}
