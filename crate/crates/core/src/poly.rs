//! Real polynomials of low degree: evaluation, real-root isolation on an
//! interval, and extrema over an open interval.

/// Coefficients in increasing powers: `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// Extremum of a polynomial over an open interval. `at_endpoint` is set when
/// the value is only approached as a limit at an interval end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub arg: f64,
    pub at_endpoint: bool,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Real roots in `[lo, hi]`, ascending.
    ///
    /// Roots of the derivative split the interval into monotone pieces; each
    /// piece holds at most one root, which is found by bisection.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo > hi {
            return Vec::new();
        }
        if self.degree() == 0 {
            return Vec::new();
        }
        if self.degree() == 1 {
            let r = -self.coeffs[0] / self.coeffs[1];
            return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
        }
        let mut knots = vec![lo];
        knots.extend(self.derivative().roots_in(lo, hi));
        knots.push(hi);

        let mut roots: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            let r = if fa == 0.0 {
                Some(a)
            } else if fb == 0.0 {
                Some(b)
            } else if fa.signum() != fb.signum() {
                Some(self.bisect(a, b, fa))
            } else {
                None
            };
            if let Some(r) = r {
                if roots.last().map_or(true, |&last| r > last) {
                    roots.push(r);
                }
            }
        }
        roots
    }

    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Candidates for extrema on `(lo, hi)`: interior critical points plus the
    /// two endpoint limits.
    fn candidates(&self, lo: f64, hi: f64) -> Vec<(f64, bool)> {
        let mut xs = vec![(lo, true), (hi, true)];
        xs.extend(
            self.derivative()
                .roots_in(lo, hi)
                .into_iter()
                .filter(|&x| x > lo && x < hi)
                .map(|x| (x, false)),
        );
        xs
    }

    /// Infimum over the open interval `(lo, hi)`; `None` if the interval is empty.
    pub fn infimum_on(&self, lo: f64, hi: f64) -> Option<Extremum> {
        self.extremum_on(lo, hi, |a, b| a < b)
    }

    /// Supremum over the open interval `(lo, hi)`; `None` if the interval is empty.
    pub fn supremum_on(&self, lo: f64, hi: f64) -> Option<Extremum> {
        self.extremum_on(lo, hi, |a, b| a > b)
    }

    fn extremum_on(&self, lo: f64, hi: f64, better: impl Fn(f64, f64) -> bool) -> Option<Extremum> {
        if !(lo < hi) {
            return None;
        }
        let mut best: Option<Extremum> = None;
        for (x, at_endpoint) in self.candidates(lo, hi) {
            let value = self.eval(x);
            // Interior attainment wins ties with an endpoint limit.
            let replace = match best {
                None => true,
                Some(b) => better(value, b.value) || (value == b.value && b.at_endpoint && !at_endpoint),
            };
            if replace {
                best = Some(Extremum {
                    value,
                    arg: x,
                    at_endpoint,
                });
            }
        }
        best
    }
}
