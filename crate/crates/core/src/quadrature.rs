//! Adaptive Gauss–Kronrod (G10/K21) quadrature on finite intervals.
//!
//! The engine integrates vector-valued integrands written into a caller
//! buffer, so a single adaptive pass can produce many related integrals
//! (real and imaginary parts, or one value per Bohr frequency) that share
//! the expensive parts of the integrand. Panels are refined globally by
//! largest error; the final sum runs over panels in left-to-right order so
//! results are reproducible bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae on [-1, 1] (positive half, descending, last is 0).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_808_271_890_190,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the 10-point rule (nodes XGK[1], XGK[3], ..., XGK[9]).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and limits for every frequency integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Semi-infinite Ohmic integrals are truncated at this multiple of the
    /// cutoff frequency; the neglected tail is bounded analytically.
    pub tail_cutoff_multiplier: f64,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
            tail_cutoff_multiplier: 40.0,
        }
    }
}

impl QuadraturePolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_subdivisions > 0
            && self.tail_cutoff_multiplier > 0.0
            && self.rel_tol.is_finite()
            && self.abs_tol.is_finite()
            && self.tail_cutoff_multiplier.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid quadrature policy {self:?}")))
        }
    }
}

/// Result of an integration: value plus the achieved error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

struct Workspace {
    fc: Vec<f64>,
    f1: Vec<Vec<f64>>,
    f2: Vec<Vec<f64>>,
    kron: Vec<f64>,
    gauss: Vec<f64>,
    absk: Vec<f64>,
    asc: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            fc: vec![0.0; dim],
            f1: vec![vec![0.0; dim]; 10],
            f2: vec![vec![0.0; dim]; 10],
            kron: vec![0.0; dim],
            gauss: vec![0.0; dim],
            absk: vec![0.0; dim],
            asc: vec![0.0; dim],
        }
    }
}

/// Single 21-point Kronrod panel with the QUADPACK error heuristic, taking
/// the worst component as the panel error.
fn gk21<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, ws: &mut Workspace) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let dim = ws.fc.len();

    f(center, &mut ws.fc);
    for k in 0..10 {
        let dx = half * XGK[k];
        f(center - dx, &mut ws.f1[k]);
        f(center + dx, &mut ws.f2[k]);
    }

    let mut error: f64 = 0.0;
    let mut value = vec![0.0; dim];
    for c in 0..dim {
        let fc = ws.fc[c];
        let mut kron = WGK[10] * fc;
        let mut absk = WGK[10] * fc.abs();
        let mut gauss = 0.0;
        for k in 0..10 {
            let (l, r) = (ws.f1[k][c], ws.f2[k][c]);
            kron += WGK[k] * (l + r);
            absk += WGK[k] * (l.abs() + r.abs());
            if k % 2 == 1 {
                gauss += WG[k / 2] * (l + r);
            }
        }
        let mean = 0.5 * kron;
        let mut asc = WGK[10] * (fc - mean).abs();
        for k in 0..10 {
            asc += WGK[k] * ((ws.f1[k][c] - mean).abs() + (ws.f2[k][c] - mean).abs());
        }
        ws.kron[c] = kron * half;
        ws.gauss[c] = gauss * half;
        ws.absk[c] = absk * half.abs();
        ws.asc[c] = asc * half.abs();

        let mut err = (ws.kron[c] - ws.gauss[c]).abs();
        if ws.asc[c] != 0.0 && err != 0.0 {
            err = ws.asc[c] * (200.0 * err / ws.asc[c]).powf(1.5).min(1.0);
        }
        let round = 50.0 * f64::EPSILON * ws.absk[c];
        if ws.absk[c] > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(round);
        }
        value[c] = ws.kron[c];
        error = error.max(err);
    }
    Panel { a, b, value, error }
}

/// Integrate a `dim`-component integrand over `[a, b]`, splitting the
/// initial interval at every breakpoint strictly inside it.
pub fn integrate_vec<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    policy: &QuadraturePolicy,
) -> Result<Integral<Vec<f64>>>
where
    F: FnMut(f64, &mut [f64]),
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Domain(format!("invalid integration interval [{a}, {b}]")));
    }
    if dim == 0 || a == b {
        return Ok(Integral {
            value: vec![0.0; dim],
            error: 0.0,
            evaluations: 0,
        });
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p.is_finite() && p > a && p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut ws = Workspace::new(dim);
    let mut heap = BinaryHeap::new();
    let mut total = vec![0.0; dim];
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let p = gk21(&mut f, w[0], w[1], &mut ws);
        evaluations += 21;
        for (t, v) in total.iter_mut().zip(&p.value) {
            *t += v;
        }
        total_err += p.error;
        heap.push(p);
    }

    let tolerance = |total: &[f64]| {
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        policy.abs_tol.max(policy.rel_tol * scale)
    };

    let mut subdivisions = heap.len();
    while total_err > tolerance(&total) {
        if subdivisions >= policy.max_subdivisions {
            return Err(Error::Integration {
                estimate: total_err,
                tolerance: tolerance(&total),
                subdivisions,
            });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval can no longer be split in floating point.
            return Err(Error::Integration {
                estimate: total_err,
                tolerance: tolerance(&total),
                subdivisions,
            });
        }
        let left = gk21(&mut f, worst.a, mid, &mut ws);
        let right = gk21(&mut f, mid, worst.b, &mut ws);
        evaluations += 42;
        for c in 0..dim {
            total[c] += left.value[c] + right.value[c] - worst.value[c];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    // Deterministic re-summation in panel order.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for p in &panels {
        for (v, pv) in value.iter_mut().zip(&p.value) {
            *v += pv;
        }
        error += p.error;
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// Scalar real integrand.
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    policy: &QuadraturePolicy,
) -> Result<Integral<f64>>
where
    F: FnMut(f64) -> f64,
{
    let r = integrate_vec(|x, out| out[0] = f(x), 1, a, b, breakpoints, policy)?;
    Ok(Integral {
        value: r.value[0],
        error: r.error,
        evaluations: r.evaluations,
    })
}

/// Scalar complex integrand.
pub fn integrate_complex<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    policy: &QuadraturePolicy,
) -> Result<Integral<Complex64>>
where
    F: FnMut(f64) -> Complex64,
{
    let r = integrate_vec(
        |x, out| {
            let z = f(x);
            out[0] = z.re;
            out[1] = z.im;
        },
        2,
        a,
        b,
        breakpoints,
        policy,
    )?;
    Ok(Integral {
        value: Complex64::new(r.value[0], r.value[1]),
        error: r.error,
        evaluations: r.evaluations,
    })
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_804_939_476_142_360_184,
    0.525_532_409_916_328_985_817_739_049_189_246,
    0.796_666_477_413_626_739_591_553_936_475_831,
    0.960_289_856_497_536_231_683_560_868_569_473,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_982_965_150_449_277_196,
    0.313_706_645_877_887_287_337_962_201_986_601,
    0.222_381_034_453_374_470_544_355_994_426_241,
    0.101_228_536_290_376_259_152_531_354_309_962,
];

/// Nodes and weights of a composite 8-point Gauss–Legendre rule with
/// `panels` equal panels on `[a, b]`. Used for fixed, non-adaptive
/// discretizations (mode sums, imaginary-time integrals).
pub fn gauss_legendre_panels(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(8 * panels);
    let mut weights = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in (0..4).rev() {
            nodes.push(c - 0.5 * h * GL8_X[k]);
            weights.push(0.5 * h * GL8_W[k]);
        }
        for k in 0..4 {
            nodes.push(c + 0.5 * h * GL8_X[k]);
            weights.push(0.5 * h * GL8_W[k]);
        }
    }
    (nodes, weights)
}
