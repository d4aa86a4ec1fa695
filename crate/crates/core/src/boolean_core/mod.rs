//! Bit-exact boolean functions, distributions, permutations and Fourier
//! analysis over `{0,1}^n`, `1 ≤ n ≤ 24`.

mod bitvec;
mod distribution;
mod fourier;
mod function;
mod permutation;
mod restriction;

pub use bitvec::{coords_of, full_mask, mask_of, BitVector, MAX_DIM};
pub use distribution::{Distribution, DistributionSpec, Form};
pub use fourier::{
    fwht_in_place, influence_exact, influence_from_spectrum, inverse_walsh_hadamard, prefix_randomized_eval,
    spectrum, walsh_hadamard, FourierSpectrum,
};
pub use function::{Body, BooleanFunction, DenseTable, LazyBiased, TruthTable};
pub use permutation::{Permutation, PermutationForm};
pub use restriction::{Restriction, SubcubeIter};
