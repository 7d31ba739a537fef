pub mod channels;
pub mod error;
pub mod experiments;
pub mod free_words;
pub mod haar;
pub mod linalg;
pub mod scalar;
pub mod spectral_opt;

pub use channels::{
    maximally_mixed, CoeffMatrix, ComplementKind, DensityMatrix, PureState, RandomChannel,
};
pub use error::{Error, Result};
pub use free_words::{GroupAlgebraElement, Word};
pub use haar::{sample_ginibre, sample_haar_unitary, sample_tuple, Seed, UnitaryTuple};
pub use scalar::Scalar;

pub type UnitaryTuple64 = UnitaryTuple<f64>;
pub type UnitaryTuple32 = UnitaryTuple<f32>;
pub type RandomChannel64 = RandomChannel<f64>;
pub type RandomChannel32 = RandomChannel<f32>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type PureState64 = PureState<f64>;
pub type PureState32 = PureState<f32>;
pub type CoeffMatrix64 = CoeffMatrix<f64>;
pub type CoeffMatrix32 = CoeffMatrix<f32>;
pub type GroupAlgebraElement64 = GroupAlgebraElement<f64>;
pub type GroupAlgebraElement32 = GroupAlgebraElement<f32>;
