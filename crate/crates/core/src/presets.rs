//! Reference models used by the CLI verification suite and the tests.

use crate::measures::{CharQuadruple, DislocationMeasure, LevyMeasure};

/// Binary halving at rate 1 with growth rate `c = -0.4`:
/// `κ(q) = 2^{1-q} - 1 + 0.1 q`.
pub fn bin04() -> CharQuadruple {
    let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).expect("valid preset");
    CharQuadruple::homogeneous(0.0, -0.4, nu).expect("valid preset")
}

/// Self-similar quadruple with the same cumulant as [`bin04`].
pub fn bin04_self_similar() -> CharQuadruple {
    let levy = LevyMeasure::from_pairs(&[(1.0, -std::f64::consts::LN_2)]).expect("valid preset");
    CharQuadruple::self_similar(0.0, -0.4, levy, 0.0).expect("valid preset")
}

/// Halving mixed with an incommensurable split `(1 - e^{-1}, e^{-1})`, so
/// the log-size point process is non-lattice.
pub fn two_atom() -> CharQuadruple {
    let e = (-1f64).exp();
    let nu = DislocationMeasure::from_pairs(&[(0.5, &[0.5, 0.5]), (0.5, &[1.0 - e, e])])
        .expect("valid preset");
    CharQuadruple::homogeneous(0.0, -0.4, nu).expect("valid preset")
}
