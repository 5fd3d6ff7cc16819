//! Fixtures shared by the criterion benches.

use graphtune::data::BlobSpec;
use graphtune::ProblemInstance;

/// A 2-d two-blob instance with `n/10` labels, separated enough that the
/// loss has only a handful of pieces on `[1, 7]`.
pub fn blobs(n: usize, seed: u64) -> ProblemInstance {
    BlobSpec::new(n, 3.0, 1.0)
        .generate(seed)
        .expect("valid blob spec")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_sizes() {
        let inst = super::blobs(100, 0);
        assert_eq!((inst.n(), inst.labeled.len()), (100, 10));
    }
}
