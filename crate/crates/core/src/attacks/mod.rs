//! Evasion and poisoning attacks, and security-evaluation curves.

mod evasion;
mod poisoning;
mod seceval;

pub use evasion::{run_evasion, run_evasion_from, AttackResult, EvasionSpec};
pub use poisoning::{
    poison_gradient, poisoned_validation_loss, random_flip_baseline, run_poisoning,
    PoisoningResult, PoisoningSpec,
};
pub use seceval::{derive_seed, security_evaluation, SecurityEvalCurve};
