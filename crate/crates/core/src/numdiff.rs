//! Central differences refined by Richardson extrapolation (Ridders' tableau).

const SHRINK: f64 = 1.4;
const TABLE: usize = 10;
const SAFE: f64 = 2.0;

/// Derivative estimate and its extrapolation error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// First derivative of `f` at `x`, starting from step `h`.
pub fn first<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> Estimate {
    ridders(|h| (f(x + h) - f(x - h)) / (2.0 * h), h)
}

/// Second derivative of `f` at `x`, starting from step `h`.
pub fn second<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> Estimate {
    let fx = f(x);
    ridders(|h| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h), h)
}

/// Both central stencils have an error expansion in even powers of `h`, so
/// each tableau column removes the next power.
fn ridders<D: Fn(f64) -> f64>(stencil: D, h0: f64) -> Estimate {
    let mut table = [[0.0f64; TABLE]; TABLE];
    let mut h = h0;
    table[0][0] = stencil(h);
    let mut best = Estimate {
        value: table[0][0],
        error: f64::INFINITY,
    };
    for i in 1..TABLE {
        h /= SHRINK;
        table[0][i] = stencil(h);
        let mut factor = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * factor - table[j - 1][i - 1]) / (factor - 1.0);
            factor *= SHRINK * SHRINK;
            let err = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if err <= best.error {
                best = Estimate {
                    value: table[j][i],
                    error: err,
                };
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= SAFE * best.error {
            break;
        }
    }
    best
}

/// Gradient of `f` by per-coordinate Ridders differences with step `h`.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            first(
                |t| {
                    let mut p = x.to_vec();
                    p[k] = t;
                    f(&p)
                },
                x[k],
                h,
            )
            .value
        })
        .collect()
}
