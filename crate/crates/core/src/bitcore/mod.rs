//! Bit strings, exact dyadic rationals, clopen sets, integer codes and seeded oracle streams.

mod bitstring;
mod clopen;
mod codes;
mod dyadic;
mod oracle;

pub use bitstring::{bits, BitString};
pub use clopen::ClopenSet;
pub use codes::{
    cantor_pair, cantor_unpair, elias_gamma, elias_gamma_decode, elias_gamma_len, encode_natural,
    rank_pair, unpair,
};
pub use dyadic::Dyadic;
pub use oracle::OracleStream;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BitcoreError {
    #[error("invalid bit {found:?} at position {position}")]
    BadBit { position: usize, found: char },
    #[error("incomplete gamma codeword")]
    IncompleteCode,
    #[error("elias gamma is undefined for 0")]
    GammaZero,
    #[error("gamma codeword exceeds 64 bits")]
    GammaOverflow,
    #[error("malformed dyadic rational {0:?}")]
    BadDyadic(String),
    #[error("oracle tape exhausted after {0} bits")]
    OracleExhausted(u64),
    #[error("clopen parse error at line {line}: {source}")]
    ClopenLine {
        line: usize,
        #[source]
        source: Box<BitcoreError>,
    },
}
