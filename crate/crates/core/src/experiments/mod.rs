//! Seeded verification sweeps over random channels, persisted as JSON lines.
//!
//! Every run is a pure function of its parameters and seeds. A cell with
//! master seed `s` draws its unitaries, coefficient matrices and optimiser
//! starts from disjoint streams of `s` (see [`streams`]), so cells can run in
//! any order or in parallel and still reproduce.

mod certificate;
mod record;
mod runs;

pub use certificate::CertificateVerdict;
pub use record::{
    load, persist, write_csv, ExperimentRecord, Loaded, OnCorrupt, RecordMeta, SkippedLine,
    CODE_VERSION, SCHEMA_VERSION,
};
pub use runs::{
    bell_overlap, cell_tuple, evaluate_word, median, run_certificate, run_distribution_check,
    run_haagerup_gap, run_kesten_sweep, run_main_estimate, run_moe, run_product_bound, streams,
    CertificateRun, Check, CoeffKind, DistributionCheck, GapCell, HaagerupGap, KestenCell,
    KestenSweep, MainEstimate, MoeCell, MoeSweep, OptCell, Outcome, ProductBound, ProductCell,
    SlackPolicy, WordMean, GAP_LOWER_TOLERANCE, KESTEN_MOMENT_ORDER, MAX_CHECKED_WORD_LEN,
    OVERLAP_TOLERANCE,
};
