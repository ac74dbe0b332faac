//! Standard normal quantile (Wichura's AS 241, PPND16).

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn poly<T: Scalar>(coeffs: &[f64], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + lit(c))
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.043_131_763_811_074_5e-15,
];

/// Quantile of the standard normal distribution, `0 < p < 1`.
pub fn normal_quantile<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::InvalidProbability(crate::scalar::to_f64(p)));
    }
    let half: T = lit(0.5);
    let q = p - half;
    if q.abs() <= lit(0.425) {
        let r = lit::<T>(0.180_625) - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let tail = if q < T::zero() { p } else { T::one() - p };
    let mut r = (-tail.ln()).sqrt();
    let z = if r <= lit(5.0) {
        r -= lit(1.6);
        poly(&C, r) / poly(&D, r)
    } else {
        r -= lit(5.0);
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < T::zero() { -z } else { z })
}

/// `z_{1 - alpha/2}`.
pub fn two_sided_critical<T: Scalar>(alpha: T) -> Result<T> {
    normal_quantile(T::one() - alpha / lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(normal_quantile(0.5f64).unwrap(), 0.0);
        // reference values to 15 digits
        let cases: [(f64, f64); 5] = [
            (0.975, 1.959_963_984_540_054),
            (0.995, 2.575_829_303_548_901),
            (0.8413447460685429, 1.0),
            (1e-10, -6.361_340_902_404_056),
            (0.02275013194817921, -2.0),
        ];
        for (p, z) in cases {
            let got = normal_quantile(p).unwrap();
            assert!((got - z).abs() < 1e-9, "p={p}: {got} vs {z}");
        }
    }

    #[test]
    fn symmetry() {
        for &p in &[1e-8f64, 0.001, 0.03, 0.2, 0.44, 0.49] {
            let a = normal_quantile(p).unwrap();
            let b = normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(normal_quantile(0.0f64).is_err());
        assert!(normal_quantile(1.0f64).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn single_precision() {
        let z = normal_quantile(0.975f32).unwrap();
        assert!((z - 1.959_964).abs() < 1e-5);
    }
}
