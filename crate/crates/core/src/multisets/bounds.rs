//! Exact evaluation of the stage ladder constants.
//!
//! For dimension `d`, entry bound `Δ` and `t` stages:
//!
//! * `Δ_i = (dΔ)^(d^{3i})` for `i = 0..=t`
//! * `ν = lcm(1, …, (dΔ_{t−1})^d)`, with `ν = 1` when `t = 0`
//! * `α_i = ν^i`, `β_i = Δ_t^(2 i d²)`, `D_i = α_i β_i`
//! * `ρ_i = ρ (dΔ_t)^(i K₁ d²)`
//!
//! plus the composite size threshold
//! `Δ_t^{2t} d^t (Δ_t^{d+1}(α_t β_t + ρ_t) + 4tρ_t + 2tD_t)`.

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, ToPrimitive};

use crate::arith::Rational;
use crate::error::{Budget, Error, Result};

/// Results larger than this many bits are refused.
const MAX_BITS: f64 = (1u64 << 24) as f64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTable {
    pub d: u32,
    pub delta: u64,
    pub t: u32,
    pub k1: u32,
    pub rho: Rational,
    /// `Δ_0, …, Δ_t`.
    pub delta_ladder: Vec<BigInt>,
    /// Upper end of the lcm range, `(dΔ_{t−1})^d`; zero when `t = 0`.
    pub nu_range: BigInt,
    pub nu: BigInt,
    /// `α_0, …, α_t`.
    pub alpha: Vec<BigInt>,
    pub beta: Vec<BigInt>,
    pub dcap: Vec<BigInt>,
    pub rho_ladder: Vec<Rational>,
    pub threshold: Rational,
}

fn guard(bits: f64, what: &str) -> Result<()> {
    if bits.is_finite() && bits <= MAX_BITS {
        Ok(())
    } else {
        Err(Error::BudgetExceeded(format!("{what} would need about {bits:.3e} bits")))
    }
}

fn product(mut xs: Vec<BigInt>) -> BigInt {
    // pairwise products keep the operands balanced
    while xs.len() > 1 {
        let mut next = Vec::with_capacity(xs.len().div_ceil(2));
        let mut it = xs.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a * b,
                None => a,
            });
        }
        xs = next;
    }
    xs.pop().unwrap_or_else(BigInt::one)
}

/// `lcm(1, …, n)`; `lcm` of the empty range is 1.
pub fn lcm_range(n: u64) -> BigInt {
    if n < 2 {
        return BigInt::one();
    }
    let n_us = usize::try_from(n).expect("range fits in memory");
    let mut composite = vec![false; n_us + 1];
    let mut factors = Vec::new();
    for p in 2..=n_us {
        if composite[p] {
            continue;
        }
        let mut q = p * p;
        while q <= n_us {
            composite[q] = true;
            q += p;
        }
        let mut pk = p as u64;
        while pk <= n / p as u64 {
            pk *= p as u64;
        }
        factors.push(BigInt::from(pk));
    }
    product(factors)
}

/// Evaluates the full ladder. `budget` caps the lcm range; every value is
/// also capped at about 2^24 bits.
pub fn bound_constants(d: u32, delta: u64, t: u32, rho: &Rational, k1: u32, budget: Budget) -> Result<BoundTable> {
    if d == 0 || delta == 0 {
        return Err(Error::Input("d and delta must be at least 1".into()));
    }
    if !rho.is_positive() {
        return Err(Error::Input("rho must be positive".into()));
    }
    let dd = f64::from(d);
    let base = BigInt::from(u64::from(d)) * BigInt::from(delta);
    let log_base = (d as f64 * delta as f64).log2();
    let ladder_bits = |i: u32| dd.powf(3.0 * f64::from(i)) * log_base;

    guard(ladder_bits(t), "Δ_t")?;
    let delta_ladder: Vec<BigInt> = (0..=t)
        .map(|i| Pow::pow(&base, d.pow(3 * i)))
        .collect();
    let top = &delta_ladder[t as usize];
    let log_top = ladder_bits(t);
    let d_big = BigInt::from(d);

    let (nu_range, nu) = if t == 0 {
        (BigInt::from(0), BigInt::one())
    } else {
        let range_bits = dd * (dd.log2() + ladder_bits(t - 1));
        let n = if range_bits < 63.0 {
            Pow::pow(&d_big * &delta_ladder[t as usize - 1], d).to_u64()
        } else {
            None
        };
        let n = n
            .filter(|&n| n <= budget.limit)
            .ok_or_else(|| Error::BudgetExceeded(format!("lcm range (dΔ_{})^{d} exceeds the budget", t - 1)))?;
        guard(1.5 * n as f64, "ν")?;
        (BigInt::from(n), lcm_range(n))
    };
    let nu_bits = nu.bits() as f64;

    guard(f64::from(t) * nu_bits, "α_t")?;
    guard(2.0 * f64::from(t) * dd * dd * log_top, "β_t")?;
    let rho_bits = (rho.numer().bits() + rho.denom().bits()) as f64;
    let log_dtop = dd.log2() + log_top;
    guard(f64::from(t) * f64::from(k1) * dd * dd * log_dtop + rho_bits, "ρ_t")?;

    let alpha: Vec<BigInt> = (0..=t).map(|i| Pow::pow(&nu, i)).collect();
    let beta: Vec<BigInt> = (0..=t).map(|i| Pow::pow(top, 2 * i * d * d)).collect();
    let dcap: Vec<BigInt> = alpha.iter().zip(&beta).map(|(a, b)| a * b).collect();
    let dtop = &d_big * top;
    let rho_ladder: Vec<Rational> = (0..=t)
        .map(|i| rho * Rational::from_integer(Pow::pow(&dtop, i * k1 * d * d)))
        .collect();

    let tt = t as usize;
    guard(
        (2.0 * f64::from(t) + dd + 1.0) * log_top + f64::from(t) * dd.log2() + (dcap[tt].bits() as f64).max(rho_ladder[tt].numer().bits() as f64) + 8.0,
        "threshold",
    )?;
    let int = |x: BigInt| Rational::from_integer(x);
    let t_big = BigInt::from(t);
    let inner = int(Pow::pow(top, d + 1)) * (int(dcap[tt].clone()) + &rho_ladder[tt])
        + int(BigInt::from(4) * &t_big) * &rho_ladder[tt]
        + int(BigInt::from(2) * &t_big * &dcap[tt]);
    let threshold = int(Pow::pow(top, 2 * t) * Pow::pow(&d_big, t)) * inner;

    Ok(BoundTable {
        d,
        delta,
        t,
        k1,
        rho: rho.clone(),
        delta_ladder,
        nu_range,
        nu,
        alpha,
        beta,
        dcap,
        rho_ladder,
        threshold,
    })
}
