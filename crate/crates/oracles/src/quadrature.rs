//! Adaptive Gauss–Kronrod (7, 15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` by recursive
/// bisection. Returns the estimate and the accumulated error bound.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> (f64, f64) {
        let (val, err) = whole;
        if err <= tol || depth >= 60 || (b - a).abs() < 1e-15 * a.abs().max(1e-300) {
            return (val, err);
        }
        let m = 0.5 * (a + b);
        let left = kronrod(f, a, m);
        let right = kronrod(f, m, b);
        let (lv, le) = rec(f, a, m, 0.5 * tol, left, depth + 1);
        let (rv, re) = rec(f, m, b, 0.5 * tol, right, depth + 1);
        (lv + rv, le + re)
    }
    if a == b {
        return (0.0, 0.0);
    }
    let first = kronrod(&f, a, b);
    rec(&f, a, b, tol, first, 0)
}
