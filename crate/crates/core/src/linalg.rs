//! Dense kernels: condition-capped truncated SVD, pseudoinverse products and
//! the matrix exponential behind zero-order-hold discretization.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Caps the condition number `σ₁/σ_q` of the retained singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub max_condition: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { max_condition: 1e9 }
    }
}

impl TruncationPolicy {
    pub fn new(max_condition: f64) -> Result<Self> {
        let p = TruncationPolicy { max_condition };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_condition > 1.0) {
            return Err(Error::Config(alloc::format!(
                "max_condition must exceed 1, got {}",
                self.max_condition
            )));
        }
        Ok(())
    }
}

/// Leading `rank` singular triplets of a matrix `M ≈ U Σ Wᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// rows(M) × rank
    pub u: DMatrix<f64>,
    /// descending, length rank
    pub sigma: DVector<f64>,
    /// cols(M) × rank
    pub w: DMatrix<f64>,
    pub rank: usize,
}

impl TruncatedSvd {
    /// `Wᵀ`-side factor of the pseudoinverse applied from the left:
    /// returns `B W Σ⁻¹` for a `k × cols(M)` matrix `B`.
    pub fn right_project(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut bw = b * &self.w;
        for (j, s) in self.sigma.iter().enumerate() {
            bw.column_mut(j).unscale_mut(*s);
        }
        bw
    }

    /// `B M†` where `M† = W Σ⁻¹ Uᵀ` is the truncated pseudoinverse.
    pub fn solve_right(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.right_project(b) * self.u.transpose()
    }
}

/// Truncated SVD keeping every singular value with `σ > 0` and
/// `σ₁/σ < max_condition`. Equal singular values share one verdict, so ties at
/// the edge are always kept or dropped together.
pub fn truncated_svd(m: &DMatrix<f64>, policy: &TruncationPolicy) -> Result<TruncatedSvd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::DegenerateSnapshots);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSnapshots);
    }
    // nalgebra returns singular values sorted in descending order.
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let s1 = sigma[0];
    if !(s1 > 0.0) {
        return Err(Error::DegenerateSnapshots);
    }
    let rank = sigma
        .iter()
        .take_while(|&&s| s > 0.0 && s1 / s < policy.max_condition)
        .count();
    if rank == 0 {
        return Err(Error::DegenerateSnapshots);
    }
    let u = svd.u.as_ref().expect("u requested").columns(0, rank).into_owned();
    let w = svd
        .v_t
        .as_ref()
        .expect("v_t requested")
        .rows(0, rank)
        .transpose();
    Ok(TruncatedSvd {
        u,
        sigma: sigma.rows(0, rank).into_owned(),
        w,
        rank,
    })
}

/// Truncated Moore–Penrose pseudoinverse `M†`.
pub fn pseudoinverse(m: &DMatrix<f64>, policy: &TruncationPolicy) -> Result<DMatrix<f64>> {
    let svd = truncated_svd(m, policy)?;
    let mut w = svd.w.clone();
    for (j, s) in svd.sigma.iter().enumerate() {
        w.column_mut(j).unscale_mut(*s);
    }
    Ok(w * svd.u.transpose())
}

// [6/6] Padé coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Padé
/// approximant. The argument is scaled to `‖A‖₁ ≤ 1/2` before the rational
/// step, which keeps the truncation error below double precision.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "expm (square matrix)",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = norm1(a);
    let mut squarings = 0i32;
    if norm > 0.5 {
        squarings = libm::ceil(libm::log2(norm / 0.5)) as i32;
    }
    let scaled = a / libm::pow(2.0, squarings as f64);

    let ident = DMatrix::<f64>::identity(n, n);
    let mut num = &ident * PADE6[0];
    let mut den = &ident * PADE6[0];
    let mut power = ident.clone();
    for (k, c) in PADE6.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * *c;
        if k % 2 == 0 {
            den += &power * *c;
        } else {
            den -= &power * *c;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .ok_or(Error::Config(alloc::string::String::from(
            "singular Padé denominator",
        )))?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    Ok(e)
}

/// Zero-order-hold discretization `(A, B, dt) → (e^{A dt}, ∫₀^dt e^{Aτ}dτ B)`
/// via the exponential of the augmented block `[[A, B], [0, 0]]·dt`.
pub fn c2d_zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "c2d_zoh (square A)",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "c2d_zoh (rows of B)",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::Config(alloc::format!("dt must be positive, got {dt}")));
    }
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = expm(&aug)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    ))
}
