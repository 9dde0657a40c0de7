use num_complex::Complex64;

/// Square root with non-negative imaginary part.
///
/// Takes the principal root and negates it when its imaginary part is
/// negative. An exactly real root keeps `Re >= 0`.
pub(crate) fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}
