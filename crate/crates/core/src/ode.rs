//! Adaptive Dormand–Prince 8(5,3) integrator for complex linear systems.
//!
//! Only the stepping core lives here. Rescaling of solution groups and the
//! accumulation of quadrature riders are handled by the caller through the
//! per-step hook of [`integrate`].

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Integrator tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 }
    }
}

impl Settings {
    pub fn tight() -> Self {
        Settings { rtol: 1e-13, atol: 1e-15, ..Self::default() }
    }
}

pub(crate) trait System {
    fn dim(&self) -> usize;
    /// Components `0..controlled()` take part in the error norm; the rest are
    /// quadrature riders.
    fn controlled(&self) -> usize;
    fn rhs(&self, x: f64, y: &[Complex64], dy: &mut [Complex64]);
}

const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

const A: [&[f64]; 12] = [
    &[],
    &[5.26001519587677318785587544488E-2],
    &[1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2],
    &[2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2],
    &[
        2.41365134159266685502369798665E-1,
        0.0,
        -8.84549479328286085344864962717E-1,
        9.24834003261792003115737966543E-1,
    ],
    &[
        3.7037037037037037037037037037E-2,
        0.0,
        0.0,
        1.70828608729473871279604482173E-1,
        1.25467687566822425016691814123E-1,
    ],
    &[
        3.7109375E-2,
        0.0,
        0.0,
        1.70252211019544039314978060272E-1,
        6.02165389804559606850219397283E-2,
        -1.7578125E-2,
    ],
    &[
        3.70920001185047927108779319836E-2,
        0.0,
        0.0,
        1.70383925712239993810214054705E-1,
        1.07262030446373284651809199168E-1,
        -1.53194377486244017527936158236E-2,
        8.27378916381402288758473766002E-3,
    ],
    &[
        6.24110958716075717114429577812E-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825E0,
        -8.68219346841726006818189891453E-1,
        2.75920996994467083049415600797E1,
        2.01540675504778934086186788979E1,
        -4.34898841810699588477366255144E1,
    ],
    &[
        4.77662536438264365890433908527E-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468E0,
        -5.90290826836842996371446475743E-1,
        2.12300514481811942347288949897E1,
        1.52792336328824235832596922938E1,
        -3.32882109689848629194453265587E1,
        -2.03312017085086261358222928593E-2,
    ],
    &[
        -9.3714243008598732571704021658E-1,
        0.0,
        0.0,
        5.18637242884406370830023853209E0,
        1.09143734899672957818500254654E0,
        -8.14978701074692612513997267357E0,
        -1.85200656599969598641566180701E1,
        2.27394870993505042818970056734E1,
        2.49360555267965238987089396762E0,
        -3.0467644718982195003823669022E0,
    ],
    &[
        2.27331014751653820792359768449E0,
        0.0,
        0.0,
        -1.05344954667372501984066689879E1,
        -2.00087205822486249909675718444E0,
        -1.79589318631187989172765950534E1,
        2.79488845294199600508499808837E1,
        -2.85899827713502369474065508674E0,
        -8.87285693353062954433549289258E0,
        1.23605671757943030647266201528E1,
        6.43392746015763530355970484046E-1,
    ],
];

const B: [f64; 12] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

const E: [f64; 12] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

pub(crate) struct Workspace {
    k: Vec<Vec<Complex64>>,
    ytmp: Vec<Complex64>,
    ynew: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Workspace {
            k: vec![vec![Complex64::new(0.0, 0.0); n]; 12],
            ytmp: vec![Complex64::new(0.0, 0.0); n],
            ynew: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

fn initial_step<S: System>(
    s: &Settings,
    sys: &S,
    x: f64,
    y: &[Complex64],
    f0: &[Complex64],
    span: f64,
    ws: &mut Workspace,
) -> f64 {
    let nc = sys.controlled().max(1);
    let (mut dnf, mut dny) = (0.0, 0.0);
    for i in 0..sys.controlled() {
        let sk = s.atol + s.rtol * y[i].norm();
        dnf += (f0[i].norm() / sk).powi(2);
        dny += (y[i].norm() / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(span.abs());
    let dir = span.signum();
    for i in 0..y.len() {
        ws.ytmp[i] = y[i] + f0[i] * (dir * h);
    }
    let f1 = &mut ws.ynew;
    sys.rhs(x + dir * h, &ws.ytmp, f1);
    let mut der2: f64 = 0.0;
    for i in 0..sys.controlled() {
        let sk = s.atol + s.rtol * y[i].norm();
        der2 += ((f1[i] - f0[i]).norm() / sk).powi(2);
    }
    let der2 = (der2 / nc as f64).sqrt() / h;
    let der12 = der2.abs().max((dnf / nc as f64).sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(span.abs())
}

/// Integrates `sys` from `x0` to `x1` in place. `h` carries the step size
/// between calls (`0` selects one automatically). After every accepted step
/// `hook(y, f)` receives the state and its derivative and may rescale both.
pub(crate) fn integrate<S: System, F: FnMut(&mut [Complex64], &mut [Complex64])>(
    s: &Settings,
    sys: &S,
    x0: f64,
    x1: f64,
    y: &mut [Complex64],
    h: &mut f64,
    ws: &mut Workspace,
    mut hook: F,
) -> Result<usize> {
    let n = sys.dim();
    let nc = sys.controlled();
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(0);
    }
    let dir = span.signum();
    let mut x = x0;
    {
        let (k0, _) = ws.k.split_at_mut(1);
        sys.rhs(x, y, &mut k0[0]);
    }
    let mut hh = if *h > 0.0 {
        h.min(span.abs())
    } else {
        let f0 = ws.k[0].clone();
        initial_step(s, sys, x, y, &f0, span, ws)
    };
    let mut steps = 0usize;
    let mut rejected_last = false;
    let mut worst = 0.0f64;
    loop {
        let remaining = (x1 - x) * dir;
        let last = hh >= remaining * (1.0 - 1e-12);
        if last {
            hh = remaining;
        }
        if hh <= 1e-14 * (1.0 + x.abs()) && !last {
            return Err(Error::Integrator { x, worst_error: worst });
        }
        let hs = dir * hh;
        for st in 1..12 {
            let row = A[st];
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, a) in row.iter().enumerate() {
                    if *a != 0.0 {
                        acc += ws.k[j][i] * *a;
                    }
                }
                ws.ytmp[i] = y[i] + acc * hs;
            }
            let (_, rest) = ws.k.split_at_mut(st);
            sys.rhs(x + C[st] * hs, &ws.ytmp, &mut rest[0]);
        }
        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..n {
            let mut bsum = Complex64::new(0.0, 0.0);
            let mut esum = Complex64::new(0.0, 0.0);
            for j in [0usize, 5, 6, 7, 8, 9, 10, 11] {
                bsum += ws.k[j][i] * B[j];
                esum += ws.k[j][i] * E[j];
            }
            ws.ynew[i] = y[i] + bsum * hs;
            if i < nc {
                let sk = s.atol + s.rtol * y[i].norm().max(ws.ynew[i].norm());
                let e2 = bsum - ws.k[0][i] * BHH[0] - ws.k[8][i] * BHH[1] - ws.k[11][i] * BHH[2];
                err += (esum.norm() / sk).powi(2);
                err2 += (e2.norm() / sk).powi(2);
            }
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = hh * err * (1.0 / (nc.max(1) as f64 * deno)).sqrt();
        if !err.is_finite() {
            hh *= 0.1;
            rejected_last = true;
            continue;
        }
        let fac11 = err.powf(0.125);
        if err <= 1.0 {
            steps += 1;
            if steps > s.max_steps {
                return Err(Error::Integrator { x, worst_error: worst.max(err) });
            }
            worst = worst.max(err);
            x = if last { x1 } else { x + hs };
            y.copy_from_slice(&ws.ynew);
            {
                let (k0, _) = ws.k.split_at_mut(1);
                sys.rhs(x, y, &mut k0[0]);
                hook(y, &mut k0[0]);
            }
            let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = hh / fac;
            if rejected_last {
                hnew = hnew.min(hh);
            }
            rejected_last = false;
            if last {
                *h = hnew;
                return Ok(steps);
            }
            hh = hnew;
        } else {
            hh /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Osc {
        omega: Complex64,
    }

    impl System for Osc {
        fn dim(&self) -> usize {
            2
        }
        fn controlled(&self) -> usize {
            2
        }
        fn rhs(&self, _x: f64, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = y[1];
            dy[1] = -self.omega * self.omega * y[0];
        }
    }

    struct Explicit;

    impl System for Explicit {
        fn dim(&self) -> usize {
            1
        }
        fn controlled(&self) -> usize {
            1
        }
        fn rhs(&self, x: f64, _y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = Complex64::new(x.cos(), 0.0);
        }
    }

    #[test]
    fn tableau_is_consistent() {
        for (st, row) in A.iter().enumerate() {
            let s: f64 = row.iter().sum();
            assert!((s - C[st]).abs() < 1e-13, "row {st}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(E.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn oscillator_matches_closed_form() {
        let omega = Complex64::new(3.0, 0.5);
        let sys = Osc { omega };
        let mut y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut h = 0.0;
        let mut ws = Workspace::new(2);
        integrate(&Settings::default(), &sys, 0.0, 2.0, &mut y, &mut h, &mut ws, |_, _| {}).unwrap();
        let exact = (omega * 2.0).cos();
        assert!((y[0] - exact).norm() < 1e-9 * exact.norm().max(1.0));
    }

    #[test]
    fn stage_times_reach_the_step_end() {
        let mut y = vec![Complex64::new(0.0, 0.0)];
        let mut h = 0.0;
        let mut ws = Workspace::new(1);
        integrate(&Settings::default(), &Explicit, 0.0, 3.0, &mut y, &mut h, &mut ws, |_, _| {}).unwrap();
        assert!((y[0].re - 3.0f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn backward_integration() {
        let sys = Osc { omega: Complex64::new(2.0, 0.0) };
        let mut y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut h = 0.0;
        let mut ws = Workspace::new(2);
        integrate(&Settings::default(), &sys, 1.0, -0.5, &mut y, &mut h, &mut ws, |_, _| {}).unwrap();
        assert!((y[0].re - 3.0f64.cos()).abs() < 1e-9);
    }
}
