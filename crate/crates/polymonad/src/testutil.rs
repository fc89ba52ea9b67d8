//! Shared fixtures for unit tests.

use crate::signature::{load_signature, Signature};
use crate::syntax::{MonadType, ValueType};

pub fn corpus_sig(name: &str) -> Signature {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    load_signature(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn ist_sig() -> Signature {
    corpus_sig("ist.sig")
}

pub fn ist(p: &str, l: &str) -> MonadType {
    MonadType::ground("IST", vec![ValueType::con(p), ValueType::con(l)])
}
