//! Inverse standard-normal CDF: Acklam's rational approximation refined by
//! one Halley step against `erfc`.

use libm::erfc;
use std::f64::consts::{PI, SQRT_2};

const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

const P_LOW: f64 = 0.024_25;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Standard-normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Inverse standard-normal CDF for `p` strictly inside (0, 1); `None` otherwise.
pub fn inverse_normal_cdf(p: f64) -> Option<f64> {
    if !(p > 0.0 && p < 1.0) {
        return None;
    }
    let x = acklam(p);
    // Halley refinement; the upper tail is refined through its mirror for precision
    let refine = |x: f64, p: f64| {
        let e = normal_cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
        x - u / (1.0 + x * u / 2.0)
    };
    Some(if p > 0.5 {
        -refine(-x, 1.0 - p)
    } else {
        refine(x, p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_unit_quantile() {
        assert_eq!(inverse_normal_cdf(0.5), Some(0.0));
        let x = inverse_normal_cdf(0.841_344_746).unwrap();
        assert!((x - 1.0).abs() < 1e-6, "{x}");
        // Phi(1) from a 30-digit evaluation, then back
        let phi1 = 0.841_344_746_068_542_9;
        assert!((normal_cdf(1.0) - phi1).abs() < 1e-15);
        assert!((inverse_normal_cdf(phi1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_accuracy() {
        // lower tail and centre, where p carries full precision
        for i in 0..=2000 {
            let x = -8.0 + 9.0 * i as f64 / 2000.0;
            let back = inverse_normal_cdf(normal_cdf(x)).unwrap();
            assert!((back - x).abs() < 1e-9, "x={x} back={back}");
        }
        for p in [1e-300, 1e-100, 1e-20, 0.02, 0.3, 0.7, 0.98] {
            let x = inverse_normal_cdf(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn symmetric() {
        for p in [1e-12, 1e-5, 0.01, 0.2, 0.45] {
            let lo = inverse_normal_cdf(p).unwrap();
            let hi = inverse_normal_cdf(1.0 - p).unwrap();
            assert!(
                (lo + hi).abs() < 1e-9 * lo.abs().max(1.0) + 1e-15 / p,
                "{p}"
            );
        }
    }

    #[test]
    fn rejects_boundaries() {
        assert_eq!(inverse_normal_cdf(0.0), None);
        assert_eq!(inverse_normal_cdf(1.0), None);
        assert_eq!(inverse_normal_cdf(f64::NAN), None);
    }

    #[test]
    fn strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let x = inverse_normal_cdf(i as f64 / 10_000.0).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }
}
