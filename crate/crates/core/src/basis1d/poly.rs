//! Dense monomial polynomials of low degree.

/// Polynomial in monomial coefficients, `c[m]` multiplying `y^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub c: Vec<f64>,
}

impl Poly {
    pub fn new(c: Vec<f64>) -> Self {
        Self { c }
    }

    pub fn zero(degree: usize) -> Self {
        Self { c: vec![0.0; degree + 1] }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for &cm in self.c.iter().rev() {
            acc = acc * y + cm;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.c.iter().map(|c| c * s).collect())
    }

    /// Substitute `y -> a*y + b`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Poly {
        let mut result = vec![0.0; self.c.len()];
        // Horner on the affine argument, tracking coefficients.
        let mut acc = vec![0.0; self.c.len()];
        for &cm in self.c.iter().rev() {
            // acc = acc * (a y + b) + cm
            let mut next = vec![0.0; self.c.len()];
            for (m, &v) in acc.iter().enumerate() {
                if v != 0.0 {
                    if m + 1 < next.len() {
                        next[m + 1] += v * a;
                    }
                    next[m] += v * b;
                }
            }
            next[0] += cm;
            acc = next;
        }
        result.copy_from_slice(&acc);
        Poly::new(result)
    }

    /// Integral of self * y^j over (0, 1).
    pub fn moment01(&self, j: usize) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(m, &cm)| cm / (m + j + 1) as f64)
            .sum()
    }

    /// Integral of self * other over (0, 1).
    pub fn inner01(&self, other: &Poly) -> f64 {
        let mut acc = 0.0;
        for (m, &cm) in self.c.iter().enumerate() {
            for (n, &cn) in other.c.iter().enumerate() {
                acc += cm * cn / (m + n + 1) as f64;
            }
        }
        acc
    }
}

/// Legendre polynomial P_i as a monomial `Poly` on (-1, 1).
pub fn legendre_poly(i: usize) -> Poly {
    match i {
        0 => Poly::new(vec![1.0]),
        1 => Poly::new(vec![0.0, 1.0]),
        _ => {
            let mut p_prev = legendre_poly(0);
            let mut p = legendre_poly(1);
            for j in 2..=i {
                let jf = j as f64;
                // P_j = ((2j-1) x P_{j-1} - (j-1) P_{j-2}) / j
                let mut c = vec![0.0; j + 1];
                for (m, &v) in p.c.iter().enumerate() {
                    c[m + 1] += (2.0 * jf - 1.0) / jf * v;
                }
                for (m, &v) in p_prev.c.iter().enumerate() {
                    c[m] -= (jf - 1.0) / jf * v;
                }
                p_prev = p;
                p = Poly::new(c);
            }
            p
        }
    }
}

/// Shifted Legendre polynomial normalized in L2(0,1):
/// `sqrt(2i+1) * P_i(2y - 1)`.
pub fn shifted_legendre_normalized(i: usize) -> Poly {
    legendre_poly(i)
        .compose_affine(2.0, -1.0)
        .scale(((2 * i + 1) as f64).sqrt())
}
