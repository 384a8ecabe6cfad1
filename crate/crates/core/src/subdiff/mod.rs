//! Subdifferentials of Schatten-(p,q) tensor norms.
//!
//! The norm is `N(X) = f(σ(X))` with the tuple function
//! `f(s) = λ·(Σ_d ‖s_d‖_p^q)^{1/q}`. [`tuple`] handles `f` itself (dual
//! maximizers, subgradients, membership, conjugate), [`membership`]
//! builds and certifies tensor subgradients at odeco points, and
//! [`conjugate`] probes `sup_Y ⟨X,Y⟩ − N(Y)` numerically.

pub mod conjugate;
pub mod membership;
pub mod tuple;

pub use conjugate::{
    estimate_tensor_conjugate, estimate_tensor_conjugate_until, matched_tuple_params,
    tensor_conjugate_value, ConjugateEstimate,
};
pub use membership::{
    check_membership, dual_norm_value, subgrad_schatten, subgrad_weights,
    subgradient_inequality_test, subgradient_inequality_test_multi, MembershipCertificate, Verdict,
};
pub use tuple::{
    conjugate_value_tuple, dual_vector_maximizer, schatten_value_tuple, tuple_membership,
    tuple_subgradient, Admissible, ConjugateValue, DualExponents, DualMaximizer, SpectralTuple,
    TupleSubgradient,
};
