use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::real::Real;

use super::bloch::BlochBands;

/// The spectral gap `(-α₋, α₊)` of `L` around 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap<T> {
    /// `None` when there is no spectrum below 0 (`α₋ = ∞`).
    pub alpha_minus: Option<T>,
    pub alpha_plus: T,
    /// Bottom of the sampled spectrum.
    pub inf_spectrum: T,
}

impl<T: Real> SpectralGap<T> {
    /// `α = min(α₋, α₊)`.
    pub fn alpha(&self) -> T {
        match self.alpha_minus {
            Some(m) => m.min(self.alpha_plus),
            None => self.alpha_plus,
        }
    }

    /// The defocusing equation needs spectrum below 0; otherwise it has
    /// only the trivial solution.
    pub fn require_spectrum_below(&self) -> Result<()> {
        match self.alpha_minus {
            Some(_) => Ok(()),
            None => Err(Error::NoSpectrumBelow {
                inf_spectrum: self.inf_spectrum.as_f64(),
            }),
        }
    }

    /// `{alpha_minus, alpha_plus, alpha}` with `α₋ = ∞` written as `"inf"`.
    pub fn to_json(&self) -> Value {
        let minus = match self.alpha_minus {
            Some(m) => json!(m.as_f64()),
            None => json!("inf"),
        };
        json!({
            "alpha_minus": minus,
            "alpha_plus": self.alpha_plus.as_f64(),
            "alpha": self.alpha().as_f64(),
        })
    }
}

/// Locates the gap around 0 from band intervals.
///
/// A band whose interval reaches within `tau` of 0 counts as containing 0.
pub fn find_gap_at_zero<T: Real>(bands: &BlochBands<T>, tau: T) -> Result<SpectralGap<T>> {
    let mut alpha_plus: Option<T> = None;
    let mut below: Option<T> = None;
    let mut inf_spectrum = T::infinity();
    for (j, &(lo, hi)) in bands.intervals.iter().enumerate() {
        inf_spectrum = inf_spectrum.min(lo);
        if lo <= tau && hi >= -tau {
            return Err(Error::GapContainsZero {
                band: j,
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        if lo > T::zero() {
            alpha_plus = Some(alpha_plus.map_or(lo, |a| a.min(lo)));
        } else {
            below = Some(below.map_or(hi, |b| b.max(hi)));
        }
    }
    let alpha_plus = alpha_plus.ok_or(Error::NoSpectrumAbove)?;
    Ok(SpectralGap {
        alpha_minus: below.map(|b| b.abs()),
        alpha_plus,
        inf_spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::bloch::{bloch_bands, BlochOptions};
    use crate::spectral::potential::PotentialSpec;

    fn gap(v: PotentialSpec<f64>) -> Result<SpectralGap<f64>> {
        let b = bloch_bands(&v, 1, &BlochOptions::new(1, 16, 6)).unwrap();
        find_gap_at_zero(&b, 1e-8)
    }

    #[test]
    fn positive_constant_has_infinite_lower_gap() {
        let g = gap(PotentialSpec::constant(1.0)).unwrap();
        assert!((g.alpha_plus - 1.0).abs() < 1e-12);
        assert!(g.alpha_minus.is_none());
        assert!((g.alpha() - 1.0).abs() < 1e-12);
        assert_eq!(g.to_json()["alpha_minus"], "inf");
        assert!(g.require_spectrum_below().is_err());
    }

    #[test]
    fn negative_constant_straddles_zero() {
        let err = gap(PotentialSpec::constant(-1.0)).unwrap_err();
        assert!(matches!(err, Error::GapContainsZero { band: 0, .. }));
    }

    #[test]
    fn shifted_mathieu_gap_is_centred() {
        let s = 0.5 * (8.857099 + 10.856778);
        let g = gap(PotentialSpec::mathieu(2.0, -s)).unwrap();
        let am = g.alpha_minus.unwrap();
        assert!((am - 0.99984).abs() < 1e-4, "{am}");
        assert!((g.alpha_plus - 0.99984).abs() < 1e-4);
        g.require_spectrum_below().unwrap();
    }

    #[test]
    fn too_few_bands_above() {
        let b = bloch_bands(
            &PotentialSpec::constant(-1000.0),
            1,
            &BlochOptions::new(1, 16, 4),
        )
        .unwrap();
        assert!(matches!(find_gap_at_zero(&b, 1e-8), Err(Error::NoSpectrumAbove)));
    }
}
