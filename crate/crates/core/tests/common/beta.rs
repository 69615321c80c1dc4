//! Exact Beta posterior means by rational integration.

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Frac(i128, i128);

impl Frac {
    fn new(n: i128, d: i128) -> Frac {
        let g = gcd(n, d).max(1) * d.signum();
        Frac(n / g, d / g)
    }
    fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn div(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1, self.1 * o.0)
    }
}

fn binom(n: i128, k: i128) -> i128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Integral of x^a (1-x)^b over [0, 1], by expanding (1-x)^b.
fn beta_integral(a: i128, b: i128) -> Frac {
    (0..=b).fold(Frac(0, 1), |acc, k| {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        acc.add(Frac::new(sign * binom(b, k), a + k + 1))
    })
}

/// Posterior mean of a uniform prior after s successes and v failures,
/// computed by exact integration rather than from the closed form.
pub fn posterior_mean(s: u64, v: u64) -> (u64, u64) {
    let (s, v) = (s as i128, v as i128);
    let Frac(n, d) = beta_integral(s + 1, v).div(beta_integral(s, v));
    (n as u64, d as u64)
}

pub fn reduce((n, d): (u64, u64)) -> (u64, u64) {
    let g = gcd(n as i128, d as i128) as u64;
    (n / g, d / g)
}
