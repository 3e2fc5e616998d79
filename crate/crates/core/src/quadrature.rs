//! Gauss-Legendre rules on graded panels.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Orders available to the doubling loop: 16, 32, ..., 1024.
const MIN_LOG2_ORDER: usize = 4;
const MAX_LOG2_ORDER: usize = 10;

pub(crate) struct GaussLegendre {
    /// Nodes on (-1, 1), ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(order: usize) -> Self {
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..(order + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: &impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        half * sum
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Cached rule of order `2^log2_order`.
pub(crate) fn rule(log2_order: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (MIN_LOG2_ORDER..=MAX_LOG2_ORDER)
            .map(|l| GaussLegendre::compute(1 << l))
            .collect()
    });
    &rules[log2_order - MIN_LOG2_ORDER]
}

/// Panel edges on `[0, span]` that double in width away from a near-singular
/// point at the origin whose distance from the real axis is `width`.
pub(crate) fn graded_panels(width: f64, span: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    if !(width < 0.25 * span) {
        edges.push(span);
        return edges;
    }
    let mut edge = width.max(1e-15 * span);
    while edge < 0.5 * span {
        edges.push(edge);
        edge *= 2.0;
    }
    edges.push(span);
    edges
}

/// Composite Gauss-Legendre over `edges`, doubling the per-panel order until
/// two successive estimates agree to `tol`. Returns the last two estimates on
/// failure.
pub(crate) fn integrate_doubling(
    edges: &[f64],
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64, (f64, f64)> {
    let composite = |log2: usize| -> f64 {
        let gl = rule(log2);
        edges
            .windows(2)
            .map(|w| gl.integrate(w[0], w[1], &f))
            .sum()
    };
    let mut previous = composite(MIN_LOG2_ORDER);
    for log2 in MIN_LOG2_ORDER + 1..=MAX_LOG2_ORDER {
        let current = composite(log2);
        if (current - previous).abs() <= tol {
            return Ok(current);
        }
        previous = current;
    }
    Err((previous, composite(MAX_LOG2_ORDER - 1)))
}
