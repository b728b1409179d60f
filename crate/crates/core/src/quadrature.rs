//! Adaptive Gauss–Kronrod integration used by the exact coverage oracle.

/// 15-point Kronrod nodes on [0, 1] by symmetry (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Embedded 7-point Gauss weights, matching the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss–Kronrod panel: returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

/// Integrate f over [a, b] to absolute tolerance `tol` by adaptive
/// bisection of Gauss–Kronrod panels. Returns (integral, error bound);
/// the bound honestly exceeds `tol` when the panel budget runs out.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const MAX_PANELS: usize = 4096;
    if !(b > a) {
        return (0.0, 0.0);
    }
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut bound = 0.0;
    let mut panels = 0;
    while let Some((a, b, tol)) = stack.pop() {
        panels += 1;
        let (value, err) = gk15(f, a, b);
        let width = b - a;
        if err <= tol || width <= 1e-14 * (a.abs() + b.abs() + 1.0) || panels >= MAX_PANELS {
            total += value;
            bound += err;
        } else {
            let mid = a + 0.5 * width;
            stack.push((a, mid, 0.5 * tol));
            stack.push((mid, b, 0.5 * tol));
        }
    }
    (total, bound)
}
