//! Spectral and combinatorial machinery for odd-query locally decodable code
//! lower bounds, sized for exhaustive checking at desk scale.
//!
//! The pipeline: a colored q-uniform [`hypergraph::Hypergraph`] (the union of
//! decoding matchings) is split by [`decompose`] into approximately strongly
//! regular pieces, each keyed by a good index from [`goodindex`]. Pieces feed
//! the level-ℓ Kikuchi matrices of [`kikuchi`], which drive the XOR value
//! bounds in [`refute`] and the even-cover searches in [`evencover`].
//! [`codes`] generates test corpora; [`certificate`] re-audits stored JSON.

pub mod certificate;
pub mod codes;
pub mod decompose;
pub mod evencover;
pub mod goodindex;
pub mod hypergraph;
pub mod kikuchi;
pub mod refute;
pub mod sparse;

pub use decompose::{certify_piece, decompose, extract_regular, filter_pieces, Decomposition, Piece};
pub use goodindex::{all_good_indices, find_good_index, is_good_index, GammaSequence};
pub use hypergraph::{CoDegreeProfile, Hyperedge, Hypergraph};
