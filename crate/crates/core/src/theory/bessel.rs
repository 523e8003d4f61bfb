//! Modified Bessel functions of the second kind, K0 and K1.
//!
//! Rational minimax approximations (relative error below 1e-14 over the
//! positive axis): for `x <= 1` a pair of rational polynomials in `x^2`
//! combined with a logarithmic term, for `x > 1` a rational polynomial in
//! `1/x` against the factored-out `exp(-x)/sqrt(x)` decay.

/// Horner evaluation with ascending coefficients (`cof[0]` is constant term).
fn poly(cof: &[f64], x: f64) -> f64 {
    let mut ans = cof[cof.len() - 1];
    for &c in cof.iter().rev().skip(1) {
        ans = ans * x + c;
    }
    ans
}

const K0PI: [f64; 5] = [
    1.0,
    2.346487949187396e-1,
    1.187082088663404e-2,
    2.150707366040937e-4,
    1.425433617130587e-6,
];

const K0QI: [f64; 3] = [9.847324170755358e-1, 1.518396076767770e-2, 8.362215678646257e-5];

const K0P: [f64; 5] = [
    1.159315156584126e-1,
    2.770731240515333e-1,
    2.066458134619875e-2,
    4.574734709978264e-4,
    3.454715527986737e-6,
];

const K0Q: [f64; 3] = [9.836249671709183e-1, 1.627693622304549e-2, 9.809660603621949e-5];

const K0PP: [f64; 8] = [
    1.253314137315499,
    1.475731032429900e1,
    6.123767403223466e1,
    1.121012633939949e2,
    9.285288485892228e1,
    3.198289277679660e1,
    3.595376024148513,
    6.160228690102976e-2,
];

const K0QQ: [f64; 8] = [
    1.0,
    1.189963006673403e1,
    5.027773590829784e1,
    9.496513373427093e1,
    8.318077493230258e1,
    3.181399777449301e1,
    4.443672926432041,
    1.408295601966600e-1,
];

const K1PI: [f64; 5] = [
    0.5,
    5.598072040178741e-2,
    1.818666382168295e-3,
    2.397509908859959e-5,
    1.239567816344855e-7,
];

const K1QI: [f64; 3] = [9.870202601341150e-1, 1.292092053534579e-2, 5.881933053917096e-5];

const K1P: [f64; 5] = [
    -3.079657578292062e-1,
    -8.109417631822442e-2,
    -3.477550948593604e-3,
    -5.385594871975406e-5,
    -3.110372465429008e-7,
];

const K1Q: [f64; 3] = [9.861813171751389e-1, 1.375094061153160e-2, 6.774221332947002e-5];

const K1PP: [f64; 8] = [
    1.253314137315502,
    1.457171340220454e1,
    6.063161173098803e1,
    1.147386690867892e2,
    1.040442011439181e2,
    4.356596656837691e1,
    7.265230396353690,
    3.144418558991021e-1,
];

const K1QQ: [f64; 8] = [
    1.0,
    1.125154514806458e1,
    4.427488496597630e1,
    7.616113213117645e1,
    5.863377227890893e1,
    1.850303673841586e1,
    1.857244676566022,
    2.538540887654872e-2,
];

/// K0(x) for `x >= 0`; `K0(0) = +inf`, negative arguments give NaN.
pub fn bessel_k0(x: f64) -> f64 {
    if x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let z = x * x;
        let term = poly(&K0PI, z) * x.ln() / poly(&K0QI, 1.0 - z);
        return poly(&K0P, z) / poly(&K0Q, 1.0 - z) - term;
    }
    let z = 1.0 / x;
    (-x).exp() * poly(&K0PP, z) / (poly(&K0QQ, z) * x.sqrt())
}

/// K1(x) for `x >= 0`; `K1(0) = +inf`, negative arguments give NaN.
pub fn bessel_k1(x: f64) -> f64 {
    if x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let z = x * x;
        let term = poly(&K1PI, z) * x.ln() / poly(&K1QI, 1.0 - z);
        return x * (poly(&K1P, z) / poly(&K1Q, 1.0 - z) + term) + 1.0 / x;
    }
    let z = 1.0 / x;
    (-x).exp() * poly(&K1PP, z) / (poly(&K1QQ, z) * x.sqrt())
}
