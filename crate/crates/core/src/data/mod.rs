//! Corpus handling: WAV files, SNR-controlled mixing, the synthetic toy
//! corpus, and the on-disk index that training and evaluation consume.

mod corpus;
mod mix;
mod toy;
mod wav;

pub use corpus::{epoch_permutation, CorpusEntry, CorpusIndex, Split};
pub use mix::{mix_at_snr, MixtureSample};
pub use toy::{generate_toy_corpus, TEST_SNRS_DB, TRAIN_SNRS_DB};
pub use wav::{read_wav, write_wav};
