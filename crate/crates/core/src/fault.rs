//! Seeded faults for mutation testing of the checking pipeline.
//!
//! Each [`Fault`] corrupts one transfer function, contraction bound or
//! rewrite when it is active on the current thread. Production code never
//! activates any of them; the acceptance suite uses them to show that the
//! soundness, equivalence and contractor checks actually catch bugs.

use std::cell::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    // interval arithmetic and lattice
    AddHiOffByOne,
    SubSwapsBounds,
    MulIgnoresMixedCorners,
    DivFloors,
    JoinDropsRight,
    WidenKeepsOld,
    EvalCmpLtInclusive,
    KleeneNotMaybe,
    // abstract transfer
    AssignKeepsTarget,
    AssumeIgnoresPolarity,
    NondetDropsUpper,
    CallResultZero,
    WorklistDropsBackEdge,
    // contractor
    StrictLessOffByOne,
    GreaterEqOffByOne,
    AddBackwardIgnoresSibling,
    NegBackwardNoFlip,
    MulInverseUsesLowDivisor,
    ClassifyIgnoresOutBox,
    // rewriting
    SingletonOffByOne,
    GuardKeepsWrongBranch,
    ConstFoldSubSwapped,
    // instrumentation
    InstrumentLowerOffByOne,
    InstrumentBodyUsesExitEdge,
    InstrumentAllVariables,
}

impl Fault {
    pub const ALL: [Fault; 25] = [
        Fault::AddHiOffByOne,
        Fault::SubSwapsBounds,
        Fault::MulIgnoresMixedCorners,
        Fault::DivFloors,
        Fault::JoinDropsRight,
        Fault::WidenKeepsOld,
        Fault::EvalCmpLtInclusive,
        Fault::KleeneNotMaybe,
        Fault::AssignKeepsTarget,
        Fault::AssumeIgnoresPolarity,
        Fault::NondetDropsUpper,
        Fault::CallResultZero,
        Fault::WorklistDropsBackEdge,
        Fault::StrictLessOffByOne,
        Fault::GreaterEqOffByOne,
        Fault::AddBackwardIgnoresSibling,
        Fault::NegBackwardNoFlip,
        Fault::MulInverseUsesLowDivisor,
        Fault::ClassifyIgnoresOutBox,
        Fault::SingletonOffByOne,
        Fault::GuardKeepsWrongBranch,
        Fault::ConstFoldSubSwapped,
        Fault::InstrumentLowerOffByOne,
        Fault::InstrumentBodyUsesExitEdge,
        Fault::InstrumentAllVariables,
    ];
}

thread_local! {
    static ACTIVE: Cell<Option<Fault>> = const { Cell::new(None) };
}

#[inline]
pub fn active(f: Fault) -> bool {
    ACTIVE.with(|a| a.get() == Some(f))
}

/// Runs `body` with `f` active on this thread.
pub fn with_fault<R>(f: Fault, body: impl FnOnce() -> R) -> R {
    struct Reset(Option<Fault>);
    impl Drop for Reset {
        fn drop(&mut self) {
            ACTIVE.with(|a| a.set(self.0));
        }
    }
    let _reset = Reset(ACTIVE.with(|a| a.replace(Some(f))));
    body()
}
