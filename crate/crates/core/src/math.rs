//! Scalar math shim: `std` float intrinsics or `libm` under `no_std`.

macro_rules! shim {
    ($($name:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub(crate) fn $name(x: f64) -> f64 {
                f64::$name(x)
            }

            #[cfg(all(not(feature = "std"), feature = "libm"))]
            #[inline]
            pub(crate) fn $name(x: f64) -> f64 {
                libm::$name(x)
            }
        )*
    };
}

shim!(sqrt, log10, sin, cos, tanh);
