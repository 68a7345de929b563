//! Lower convex envelope of ordered one-dimensional samples.
//!
//! A single left-to-right sweep keeps a stack of support points whose slopes
//! are nondecreasing; every new sample pops the points it makes nonconvex.
//! Each sample is pushed and popped at most once, so the sweep is `O(N)`.

use alloc::vec::Vec;

use crate::error::Error;

/// Substitute for non-finite samples so they can never become supports.
pub const PENALTY: f64 = 1e20;

/// Samples `w[i]` of a function at strictly increasing abscissae `x[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledLine {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl SampledLine {
    pub fn new(x: Vec<f64>, w: Vec<f64>) -> Result<Self, Error> {
        if x.len() != w.len() {
            return Err(Error::InvalidInput("x and w must have equal length"));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("at least two samples are required"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("abscissae must be finite"));
        }
        if x.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("abscissae must be strictly increasing"));
        }
        Ok(Self { x, w })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Support points `(y[i], c[i])` of a lower convex envelope.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexHull1D {
    pub y: Vec<f64>,
    pub c: Vec<f64>,
    /// Index of each support in the input samples.
    pub index: Vec<usize>,
}

/// Result of locating a point between two adjacent supports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub value: f64,
    pub left: usize,
    pub right: usize,
    /// Weight of the left support: `x0 = λ·y[left] + (1−λ)·y[right]`.
    pub lambda: f64,
}

impl ConvexHull1D {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Evaluates the piecewise-linear envelope at `x0` and reports the
    /// bracketing supports.
    pub fn envelope_at(&self, x0: f64) -> Result<Bracket, Error> {
        let n = self.len();
        if n == 0 || !(x0 >= self.y[0] && x0 <= self.y[n - 1]) {
            return Err(Error::OutOfRange);
        }
        // first support with y >= x0
        let right = self.y.partition_point(|&y| y < x0);
        if self.y[right] == x0 {
            return Ok(Bracket {
                value: self.c[right],
                left: right,
                right,
                lambda: 1.0,
            });
        }
        let left = right - 1;
        let lambda = (self.y[right] - x0) / (self.y[right] - self.y[left]);
        Ok(Bracket {
            value: lambda * self.c[left] + (1.0 - lambda) * self.c[right],
            left,
            right,
            lambda,
        })
    }
}

/// Reusable sweep state. One instance per worker; buffers grow to the
/// largest line seen and are then reused without reallocation.
#[derive(Clone, Debug, Default)]
pub struct Convexifier {
    hull: ConvexHull1D,
}

impl Convexifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            hull: ConvexHull1D {
                y: Vec::with_capacity(n),
                c: Vec::with_capacity(n),
                index: Vec::with_capacity(n),
            },
        }
    }

    /// Runs the sweep over `(x[i], w[i])`. Inputs must be ordered with
    /// `x` strictly increasing and at least two entries long; non-finite `w`
    /// values are replaced by [`PENALTY`].
    pub fn run<X, W>(&mut self, len: usize, x: X, w: W) -> &ConvexHull1D
    where
        X: Fn(usize) -> f64,
        W: Fn(usize) -> f64,
    {
        let hull = &mut self.hull;
        hull.y.resize(len, 0.0);
        hull.c.resize(len, 0.0);
        hull.index.resize(len, 0);
        let (ys, cs, idx) = (&mut hull.y[..], &mut hull.c[..], &mut hull.index[..]);
        // stack occupies [0, top)
        let mut top = 0usize;
        for i in 0..len {
            let xi = x(i);
            let mut wi = w(i);
            if !wi.is_finite() {
                wi = PENALTY;
            }
            // Pop the top while the slope into it is not smaller than the
            // slope out of it; collinear points are removed as well.
            while top >= 2 {
                let (yn, yp) = (ys[top - 1], ys[top - 2]);
                let (cn, cp) = (cs[top - 1], cs[top - 2]);
                if (cn - cp) * (xi - yn) >= (wi - cn) * (yn - yp) {
                    top -= 1;
                } else {
                    break;
                }
            }
            ys[top] = xi;
            cs[top] = wi;
            idx[top] = i;
            top += 1;
        }
        hull.y.truncate(top);
        hull.c.truncate(top);
        hull.index.truncate(top);
        &self.hull
    }

    pub fn hull(&self) -> &ConvexHull1D {
        &self.hull
    }
}

/// Lower convex envelope of a sampled line.
pub fn convexify(line: &SampledLine) -> ConvexHull1D {
    let mut cx = Convexifier::with_capacity(line.len());
    cx.run(line.len(), |i| line.x[i], |i| line.w[i]);
    cx.hull
}
