//! Dormand-Prince 5(4) step with its fourth-order continuous extension.

use crate::problem::ProblemSpec;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub(crate) type State = [f64; 2];

/// Interpolant over one accepted step `[r0, r0 + h]`, valid up to `r_end`
/// (which is below `r0 + h` only for a step truncated at a terminal event).
///
/// Stored in Hairer's nested form
/// `y(r0 + θh) = c0 + θ(c1 + (1-θ)(c2 + θ(c3 + (1-θ)c4)))`;
/// a cubic Hermite segment is the special case `c4 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub r0: f64,
    pub h: f64,
    pub r_end: f64,
    cont: [State; 5],
}

impl DenseSegment {
    /// Cubic Hermite segment from end states and end derivatives.
    pub fn hermite(r0: f64, y0: State, f0: State, r1: f64, y1: State, f1: State) -> Self {
        let h = r1 - r0;
        let mut cont = [[0.0; 2]; 5];
        for i in 0..2 {
            cont[0][i] = y0[i];
            cont[1][i] = y1[i] - y0[i];
            cont[2][i] = h * f0[i] - cont[1][i];
            cont[3][i] = cont[1][i] - h * f1[i] - cont[2][i];
        }
        DenseSegment {
            r0,
            h,
            r_end: r1,
            cont,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> State {
        let t = (r - self.r0) / self.h;
        let t1 = 1.0 - t;
        let c = &self.cont;
        let mut y = [0.0; 2];
        for i in 0..2 {
            y[i] = c[0][i] + t * (c[1][i] + t1 * (c[2][i] + t * (c[3][i] + t1 * c[4][i])));
        }
        y
    }

    /// Derivative of the interpolant with respect to `r`.
    pub fn eval_derivative(&self, r: f64) -> State {
        let t = (r - self.r0) / self.h;
        let t1 = 1.0 - t;
        let c = &self.cont;
        let mut d = [0.0; 2];
        for i in 0..2 {
            let tt = c[3][i] + t1 * c[4][i];
            let dtt = -c[4][i];
            let s = c[2][i] + t * tt;
            let ds = tt + t * dtt;
            let q = c[1][i] + t1 * s;
            let dq = -s + t1 * ds;
            d[i] = (q + t * dq) / self.h;
        }
        d
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r0 && r <= self.r_end
    }
}

/// Result of one trial step.
pub(crate) struct Trial {
    pub y_new: State,
    pub k7: State,
    pub err: f64,
    pub segment: DenseSegment,
}

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (a, k) in terms {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

/// One Dormand-Prince trial step from `(r, y)` with `k1 = f(r, y)`.
/// Returns `None` when any stage is non-finite.
pub(crate) fn try_step(
    spec: &ProblemSpec,
    r: f64,
    y: &State,
    k1: &State,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Option<Trial> {
    let f = |x: f64, s: &State| spec.rhs(x, s[0], s[1]);
    let k2 = f(r + C2 * h, &axpy(y, &[(A21, k1)], h));
    let k3 = f(r + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(r + C4 * h, &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(
        r + C5 * h,
        &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let r_new = r + h;
    let k6 = f(
        r_new,
        &axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
    );
    let y_new = axpy(y, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
    let k7 = f(r_new, &y_new);

    let mut sum = 0.0;
    let mut cont = [[0.0; 2]; 5];
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (e / sc) * (e / sc);

        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        cont[0][i] = y[i];
        cont[1][i] = dy;
        cont[2][i] = bspl;
        cont[3][i] = dy - h * k7[i] - bspl;
        cont[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    let err = (sum / 2.0).sqrt();
    let finite = err.is_finite()
        && y_new.iter().all(|x| x.is_finite())
        && k7.iter().all(|x| x.is_finite());
    if !finite {
        return None;
    }
    Some(Trial {
        y_new,
        k7,
        err,
        segment: DenseSegment {
            r0: r,
            h,
            r_end: r_new,
            cont,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_segment_interpolates_cubic_exactly() {
        // y = x^3 - 2x, y' = 3x^2 - 2
        let y = |x: f64| x * x * x - 2.0 * x;
        let dy = |x: f64| 3.0 * x * x - 2.0;
        let seg = DenseSegment::hermite(0.5, [y(0.5), 0.0], [dy(0.5), 0.0], 1.5, [y(1.5), 0.0], [dy(1.5), 0.0]);
        for x in [0.5, 0.7, 1.0, 1.3, 1.5] {
            assert!((seg.eval(x)[0] - y(x)).abs() < 1e-14);
            assert!((seg.eval_derivative(x)[0] - dy(x)).abs() < 1e-13);
        }
    }
}
