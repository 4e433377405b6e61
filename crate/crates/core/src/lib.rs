pub mod cli;
pub mod codec;
pub mod elgamal;
pub mod encoding;
pub mod group;
pub mod mixnet;
pub mod pedersen;
pub mod protocol;
pub mod threshold;
pub mod wbb;
pub mod zkp;
