//! Chart generation from flat semantics, with an off-line compiler that
//! determines which semantic indices of a constituent remain bindable from
//! outside it. The compiled binding domains drive two pruning tests that
//! discard chart edges that cannot occur in any complete output sentence.

pub mod avm;
pub mod cli;
pub mod domains;
pub mod fs;
pub mod generate;
pub mod grammar;
pub mod oracle;
pub mod scan;

pub use cli::cli_main;
