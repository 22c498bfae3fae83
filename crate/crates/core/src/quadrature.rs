//! Gauss–Legendre rules.

/// Gauss–Legendre rule of a fixed order on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule on `[lo, hi]` split into `panels` equal panels.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (hi - lo) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.order());
        let mut ws = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let a = lo + width * p as f64;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(a + 0.5 * width * (x + 1.0));
                ws.push(0.5 * width * w);
            }
        }
        (xs, ws)
    }

    /// Like [`composite`](Self::composite), but the first and/or last panel is
    /// split geometrically (halving `levels` times) towards the interval end,
    /// which resolves features much narrower than a panel at that end.
    pub fn graded(&self, lo: f64, hi: f64, panels: usize, ends: (bool, bool), levels: usize) -> (Vec<f64>, Vec<f64>) {
        let width = (hi - lo) / panels as f64;
        let mut cuts = vec![lo];
        if ends.0 {
            cuts.extend((0..levels).rev().map(|k| lo + width * 0.5f64.powi(k as i32 + 1)));
        }
        cuts.extend((1..panels).map(|p| lo + width * p as f64));
        if ends.1 {
            cuts.extend((0..levels).map(|k| hi - width * 0.5f64.powi(k as i32 + 1)));
        }
        cuts.push(hi);
        let mut xs = Vec::with_capacity(cuts.len() * self.order());
        let mut ws = Vec::with_capacity(cuts.len() * self.order());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                xs.push(a + 0.5 * (b - a) * (x + 1.0));
                ws.push(0.5 * (b - a) * wt);
            }
        }
        (xs, ws)
    }
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
