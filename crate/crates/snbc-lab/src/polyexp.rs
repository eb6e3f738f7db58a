//! Polyexponential functions and the convolution calculus.
//!
//! A univariate polyexponential is a finite sum `sum_b p_b(k) b^k` over
//! nonzero bases plus a finitely supported *exceptional* part (the zero-base
//! convention). Multivariate polyexponentials are sums of tensor terms
//! `beta^k p(k)`. The module provides exact additive convolution (the
//! generating-function product, reconstructed symbolically), the certified
//! dot convolution `(f *_{>=xi} g)(k) = sum_{k . m = k, k >= xi} f(k) g(m)`
//! both as a numeric oracle and through its split into shifted additive
//! convolutions against `m >= 2` slices, and growth-rate estimation.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::scalar::{solve_linear, Field};
use num_complex::Complex64;
use std::collections::BTreeMap;

// ---------------------------------------------------------------- fields

/// Conjugation, needed for complex least squares; rationals are self-dual.
pub trait Conj: Field {
    fn conj(&self) -> Self;
}

impl Conj for Complex64 {
    fn conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }
}

impl Conj for num_rational::BigRational {
    fn conj(&self) -> Self {
        self.clone()
    }
}

// ------------------------------------------------------------ univariate

fn poly_eval<F: Field>(coeffs: &[F], k: i64) -> F {
    let x = F::from_i64(k);
    let mut acc = F::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x.clone() + c.clone();
    }
    acc
}

/// Coefficients of `p(x + delta)`.
fn poly_shift<F: Field>(coeffs: &[F], delta: i64) -> Vec<F> {
    let n = coeffs.len();
    let mut out = vec![F::zero(); n];
    // p(x + d) = sum_j c_j (x + d)^j expanded by binomials
    let d = F::from_i64(delta);
    for (j, c) in coeffs.iter().enumerate() {
        // (x + d)^j
        let mut binom = F::one();
        let mut dpow = F::one();
        for i in (0..=j).rev() {
            // coefficient of x^i in (x+d)^j is C(j, i) d^(j-i)
            out[i] = out[i].clone() + c.clone() * binom.clone() * dpow.clone();
            if i > 0 {
                // C(j, i-1) = C(j, i) * i / (j - i + 1)
                binom = binom * F::from_i64(i as i64) / F::from_i64((j - i + 1) as i64);
                dpow = dpow * d.clone();
            }
        }
    }
    out
}

fn pow_i64<F: Field>(base: &F, e: i64) -> F {
    if e == 0 {
        return F::one();
    }
    let mut acc = F::one();
    let b = base.clone();
    for _ in 0..e.unsigned_abs() {
        acc = acc * b.clone();
    }
    if e < 0 {
        F::one() / acc
    } else {
        acc
    }
}

/// Univariate polyexponential on `Z_{>=0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyExp<F: Field> {
    /// (nonzero base, polynomial coefficients low-to-high)
    pub terms: Vec<(F, Vec<F>)>,
    /// finitely supported part (the zero-base convention)
    pub exceptional: BTreeMap<u64, F>,
}

impl<F: Field> PolyExp<F> {
    pub fn zero() -> Self {
        PolyExp {
            terms: Vec::new(),
            exceptional: BTreeMap::new(),
        }
    }

    pub fn constant(c: F) -> Self {
        PolyExp {
            terms: vec![(F::one(), vec![c])],
            exceptional: BTreeMap::new(),
        }
    }

    /// `p(k) b^k` for a nonzero base.
    pub fn term(base: F, poly: Vec<F>) -> Result<Self> {
        if base.is_zero() {
            return Err(Error::InvalidInput(
                "zero bases belong in the exceptional part".into(),
            ));
        }
        Ok(PolyExp {
            terms: vec![(base, poly)],
            exceptional: BTreeMap::new(),
        })
    }

    pub fn delta(at: u64, value: F) -> Self {
        let mut exceptional = BTreeMap::new();
        exceptional.insert(at, value);
        PolyExp {
            terms: Vec::new(),
            exceptional,
        }
    }

    pub fn eval(&self, k: u64) -> F {
        let mut acc = F::zero();
        for (base, poly) in &self.terms {
            acc = acc + pow_i64(base, k as i64) * poly_eval(poly, k as i64);
        }
        if let Some(v) = self.exceptional.get(&k) {
            acc = acc + v.clone();
        }
        acc
    }

    pub fn bases(&self) -> Vec<F> {
        self.terms.iter().map(|(b, _)| b.clone()).collect()
    }

    pub fn max_base_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|(b, _)| b.abs_f64())
            .fold(0.0, f64::max)
    }

    /// Merges terms with (approximately) equal bases and drops zero data.
    pub fn normalized(mut self, tol: f64) -> Self {
        let mut merged: Vec<(F, Vec<F>)> = Vec::new();
        for (base, poly) in self.terms.drain(..) {
            if let Some((_, acc)) = merged
                .iter_mut()
                .find(|(b, _)| b.approx_eq(&base, tol))
            {
                if acc.len() < poly.len() {
                    acc.resize(poly.len(), F::zero());
                }
                for (i, c) in poly.into_iter().enumerate() {
                    acc[i] = acc[i].clone() + c;
                }
            } else {
                merged.push((base, poly));
            }
        }
        for (_, poly) in &mut merged {
            while poly.last().map(|c| c.is_zero()).unwrap_or(false) {
                poly.pop();
            }
        }
        merged.retain(|(_, poly)| !poly.is_empty());
        self.terms = merged;
        self.exceptional.retain(|_, v| !v.is_zero());
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut exceptional = self.exceptional.clone();
        for (k, v) in &other.exceptional {
            let cur = exceptional.entry(*k).or_insert_with(F::zero);
            *cur = cur.clone() + v.clone();
        }
        PolyExp { terms, exceptional }.normalized(1e-9)
    }

    pub fn scale(&self, c: &F) -> Self {
        PolyExp {
            terms: self
                .terms
                .iter()
                .map(|(b, p)| {
                    (
                        b.clone(),
                        p.iter().map(|x| x.clone() * c.clone()).collect(),
                    )
                })
                .collect(),
            exceptional: self
                .exceptional
                .iter()
                .map(|(k, v)| (*k, v.clone() * c.clone()))
                .collect(),
        }
    }

    /// `G(k) = P(k + delta)` on `Z_{>=0}`.
    pub fn shift_arg(&self, delta: u64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(b, p)| {
                let factor = pow_i64(b, delta as i64);
                let shifted = poly_shift(p, delta as i64);
                (
                    b.clone(),
                    shifted.iter().map(|c| c.clone() * factor.clone()).collect(),
                )
            })
            .collect();
        let exceptional = self
            .exceptional
            .iter()
            .filter_map(|(k, v)| k.checked_sub(delta).map(|nk| (nk, v.clone())))
            .collect();
        PolyExp { terms, exceptional }
    }

    /// `G(k) = P(k - c)` for `k >= c`, zero below.
    pub fn shift_right(&self, c: u64) -> Self {
        let terms: Vec<(F, Vec<F>)> = self
            .terms
            .iter()
            .map(|(b, p)| {
                let factor = pow_i64(b, -(c as i64));
                let shifted = poly_shift(p, -(c as i64));
                (
                    b.clone(),
                    shifted
                        .iter()
                        .map(|x| x.clone() * factor.clone())
                        .collect::<Vec<F>>(),
                )
            })
            .collect();
        let mut exceptional: BTreeMap<u64, F> = self
            .exceptional
            .iter()
            .map(|(k, v)| (k + c, v.clone()))
            .collect();
        // the analytic continuation below k = c must be cancelled
        let analytic = PolyExp {
            terms: terms.clone(),
            exceptional: BTreeMap::new(),
        };
        for k in 0..c {
            let v = analytic.eval(k);
            if !v.is_zero() {
                let cur = exceptional.entry(k).or_insert_with(F::zero);
                *cur = cur.clone() - v;
            }
        }
        PolyExp { terms, exceptional }
    }

    /// Forces `G(k0) = 0` via the exceptional part.
    pub fn with_zero_at(&self, k0: u64) -> Self {
        let mut out = self.clone();
        let v = out.eval(k0);
        if !v.is_zero() {
            let cur = out.exceptional.entry(k0).or_insert_with(F::zero);
            *cur = cur.clone() - v;
        }
        out
    }

    fn exceptional_support_bound(&self) -> u64 {
        self.exceptional.keys().max().map(|&k| k + 1).unwrap_or(0)
    }
}

/// Additive convolution `(P * Q)(k) = sum_{i=0..k} P(i) Q(k-i)`, returned
/// in closed form. Result bases are the union of the input bases; the
/// coefficients are reconstructed exactly from the product series against
/// the known pole structure.
pub fn additive_convolve<F: Field>(p: &PolyExp<F>, q: &PolyExp<F>) -> Result<PolyExp<F>> {
    // pole order per base in the product generating function
    let mut degree_bound: Vec<(F, usize)> = Vec::new();
    let bump = |base: &F, order: usize, out: &mut Vec<(F, usize)>| {
        if let Some((_, acc)) = out.iter_mut().find(|(b, _)| b.approx_eq(base, 1e-9)) {
            *acc += order;
        } else {
            out.push((base.clone(), order));
        }
    };
    for (b, poly) in &p.terms {
        bump(b, poly.len(), &mut degree_bound);
    }
    for (b, poly) in &q.terms {
        bump(b, poly.len(), &mut degree_bound);
    }
    let support = p.exceptional_support_bound() + q.exceptional_support_bound() + 1;
    let dim: usize = degree_bound.iter().map(|(_, d)| d).sum();
    let n_samples = support + dim as u64;

    // values of the convolution are the product-series coefficients
    let pv: Vec<F> = (0..=n_samples).map(|k| p.eval(k)).collect();
    let qv: Vec<F> = (0..=n_samples).map(|k| q.eval(k)).collect();
    let mut values = vec![F::zero(); (n_samples + 1) as usize];
    for k in 0..=n_samples as usize {
        let mut acc = F::zero();
        for i in 0..=k {
            if !pv[i].is_zero() && !qv[k - i].is_zero() {
                acc = acc + pv[i].clone() * qv[k - i].clone();
            }
        }
        values[k] = acc;
    }

    // reconstruct the polyexponential tail on k in (support, support + dim]
    let mut terms: Vec<(F, Vec<F>)> = Vec::new();
    if dim > 0 {
        let mut rows = Vec::with_capacity(dim);
        let mut rhs = Vec::with_capacity(dim);
        for i in 0..dim {
            let k = support + 1 + i as u64;
            let mut row = Vec::with_capacity(dim);
            for (b, d) in &degree_bound {
                let bp = pow_i64(b, k as i64);
                let mut kp = F::one();
                for _ in 0..*d {
                    row.push(bp.clone() * kp.clone());
                    kp = kp * F::from_i64(k as i64);
                }
            }
            rows.push(row);
            rhs.push(values[k as usize].clone());
        }
        let solution = solve_linear(&rows, &rhs)?;
        let mut at = 0;
        for (b, d) in &degree_bound {
            terms.push((b.clone(), solution[at..at + d].to_vec()));
            at += d;
        }
    }
    let tail = PolyExp {
        terms,
        exceptional: BTreeMap::new(),
    };
    let mut exceptional = BTreeMap::new();
    for k in 0..=support {
        let diff = values[k as usize].clone() - tail.eval(k);
        if !diff.is_zero() {
            exceptional.insert(k, diff);
        }
    }
    Ok(PolyExp {
        terms: tail.terms,
        exceptional,
    }
    .normalized(1e-9))
}

// ----------------------------------------------------------- multivariate

/// Multivariate polynomial as a sparse exponent map.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly<F: Field> {
    pub coeffs: BTreeMap<Vec<u32>, F>,
}

impl<F: Field> MPoly<F> {
    pub fn constant(arity: usize, c: F) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; arity], c);
        MPoly { coeffs }
    }

    pub fn eval(&self, k: &[u64]) -> F {
        let mut acc = F::zero();
        for (degrees, c) in &self.coeffs {
            let mut term = c.clone();
            for (i, &d) in degrees.iter().enumerate() {
                for _ in 0..d {
                    term = term * F::from_i64(k[i] as i64);
                }
            }
            acc = acc + term;
        }
        acc
    }
}

/// Multivariate polyexponential: tensor terms plus a finitely-supported
/// exceptional map. Every base component inside `terms` is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolyExp<F: Field> {
    pub arity: usize,
    pub terms: Vec<(Vec<F>, MPoly<F>)>,
    pub exceptional: BTreeMap<Vec<u64>, F>,
}

impl<F: Field> MultiPolyExp<F> {
    pub fn new(arity: usize) -> Self {
        MultiPolyExp {
            arity,
            terms: Vec::new(),
            exceptional: BTreeMap::new(),
        }
    }

    pub fn push_term(&mut self, base: Vec<F>, poly: MPoly<F>) -> Result<()> {
        if base.len() != self.arity {
            return Err(Error::InvalidInput("base arity mismatch".into()));
        }
        if base.iter().any(|b| b.is_zero()) {
            return Err(Error::NotSeparable(
                "zero base components belong in the exceptional part".into(),
            ));
        }
        self.terms.push((base, poly));
        Ok(())
    }

    pub fn eval(&self, k: &[u64]) -> F {
        let mut acc = F::zero();
        for (base, poly) in &self.terms {
            let mut term = poly.eval(k);
            for (b, &ki) in base.iter().zip(k) {
                term = term * pow_i64(b, ki as i64);
            }
            acc = acc + term;
        }
        if let Some(v) = self.exceptional.get(&k.to_vec()) {
            acc = acc + v.clone();
        }
        acc
    }

    pub fn max_base_abs(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(b, _)| b.iter().map(|x| x.abs_f64()))
            .fold(0.0, f64::max)
    }

    /// Distinct base components (for principal-part fitting).
    pub fn base_components(&self, tol: f64) -> Vec<F> {
        let mut out: Vec<F> = Vec::new();
        for (base, _) in &self.terms {
            for b in base {
                if !out.iter().any(|x| x.approx_eq(b, tol)) {
                    out.push(b.clone());
                }
            }
        }
        out
    }

    /// Separable expansion: a list of weighted products of univariate
    /// polyexponentials, one factor per coordinate.
    pub fn separable_terms(&self) -> Result<Vec<(F, Vec<PolyExp<F>>)>> {
        let mut out = Vec::new();
        for (base, poly) in &self.terms {
            for (degrees, c) in &poly.coeffs {
                if degrees.len() != self.arity {
                    return Err(Error::NotSeparable("degree arity mismatch".into()));
                }
                let factors: Vec<PolyExp<F>> = (0..self.arity)
                    .map(|i| {
                        let mut coeffs = vec![F::zero(); degrees[i] as usize + 1];
                        coeffs[degrees[i] as usize] = F::one();
                        PolyExp {
                            terms: vec![(base[i].clone(), coeffs)],
                            exceptional: BTreeMap::new(),
                        }
                    })
                    .collect();
                out.push((c.clone(), factors));
            }
        }
        Ok(out)
    }
}

// --------------------------------------------------- certified convolution

/// Enumerates all `(k, m)` in `N^s x N^s` with `k . m = total`, `k >= xi`,
/// and per-coordinate multiplicity windows `m_i in [m_lo_i, m_hi_i]`
/// (`m_hi = None` for unbounded).
fn enumerate_dot_pairs<FV>(
    xi: &[u64],
    m_lo: &[u64],
    m_hi: &[Option<u64>],
    total: u64,
    budget: &Budget,
    visit: &mut FV,
) -> Result<()>
where
    FV: FnMut(&[u64], &[u64]) -> Result<()>,
{
    let s = xi.len();
    let mut kv = vec![0u64; s];
    let mut mv = vec![0u64; s];
    fn rec<FV>(
        i: usize,
        remaining: u64,
        xi: &[u64],
        m_lo: &[u64],
        m_hi: &[Option<u64>],
        kv: &mut Vec<u64>,
        mv: &mut Vec<u64>,
        budget: &Budget,
        visit: &mut FV,
    ) -> Result<()>
    where
        FV: FnMut(&[u64], &[u64]) -> Result<()>,
    {
        let s = xi.len();
        if i == s {
            if remaining == 0 {
                budget.step()?;
                visit(kv, mv)?;
            }
            return Ok(());
        }
        // minimal cost of the remaining coordinates
        let min_rest: u64 = (i + 1..s).map(|j| xi[j] * m_lo[j]).sum();
        let mut m = m_lo[i];
        loop {
            if let Some(hi) = m_hi[i] {
                if m > hi {
                    break;
                }
            }
            let base_cost = xi[i] * m;
            if base_cost + min_rest > remaining {
                break;
            }
            // k_i >= xi_i with k_i * m divides into the remainder
            let mut k = xi[i];
            loop {
                budget.step()?;
                let cost = k * m;
                if cost + min_rest > remaining {
                    break;
                }
                kv[i] = k;
                mv[i] = m;
                rec(i + 1, remaining - cost, xi, m_lo, m_hi, kv, mv, budget, visit)?;
                k += 1;
            }
            m += 1;
        }
        Ok(())
    }
    rec(0, total, xi, m_lo, m_hi, &mut kv, &mut mv, budget, visit)
}

/// Exact numeric certified dot convolution:
/// `sum over k . m = total, k >= xi` of `f(k) g(m)`.
pub fn certified_dot_convolve_numeric<F: Field>(
    f: &dyn Fn(&[u64]) -> F,
    g: &dyn Fn(&[u64]) -> F,
    xi: &[u64],
    total: u64,
    budget: &Budget,
) -> Result<F> {
    let s = xi.len();
    let mut acc = F::zero();
    enumerate_dot_pairs(
        xi,
        &vec![1; s],
        &vec![None; s],
        total,
        budget,
        &mut |k, m| {
            acc = acc.clone() + f(k) * g(m);
            Ok(())
        },
    )?;
    Ok(acc)
}

/// The growth-lemma slice: the certified dot convolution restricted to
/// `m >= 2` componentwise.
pub fn restricted_sum_m_ge_2<F: Field>(
    f: &dyn Fn(&[u64]) -> F,
    g: &dyn Fn(&[u64]) -> F,
    xi: &[u64],
    total: u64,
    budget: &Budget,
) -> Result<F> {
    let s = xi.len();
    let mut acc = F::zero();
    enumerate_dot_pairs(
        xi,
        &vec![2; s],
        &vec![None; s],
        total,
        budget,
        &mut |k, m| {
            acc = acc.clone() + f(k) * g(m);
            Ok(())
        },
    )?;
    Ok(acc)
}

/// `omega(M) = max over xi . m = M of |g(m)|`.
pub fn omega_max<F: Field>(
    g: &dyn Fn(&[u64]) -> F,
    xi: &[u64],
    cost: u64,
    budget: &Budget,
) -> Result<f64> {
    let s = xi.len();
    let ones = vec![1u64; s];
    let mut best: f64 = 0.0;
    // enumerate m with xi . m = cost by reusing the pair enumerator with
    // the roles of k and m swapped (fix k = xi exactly via hi = lo trick)
    fn rec(
        i: usize,
        remaining: u64,
        xi: &[u64],
        m: &mut Vec<u64>,
        best: &mut f64,
        g: &dyn Fn(&[u64]) -> f64,
        budget: &Budget,
    ) -> Result<()> {
        let s = xi.len();
        if i == s {
            if remaining == 0 {
                budget.step()?;
                let v = g(m.as_slice());
                if v > *best {
                    *best = v;
                }
            }
            return Ok(());
        }
        let min_rest: u64 = (i + 1..s).map(|j| xi[j]).sum();
        let mut mi = 1u64;
        while xi[i] * mi + min_rest <= remaining {
            m[i] = mi;
            rec(i + 1, remaining - xi[i] * mi, xi, m, best, g, budget)?;
            mi += 1;
        }
        Ok(())
    }
    let eval = |m: &[u64]| g(m).abs_f64();
    let mut m = ones;
    rec(0, cost, xi, &mut m, &mut best, &eval, budget)?;
    Ok(best)
}

/// Output of the symbolic certified dot convolution.
#[derive(Debug, Clone)]
pub struct CertifiedConvolution<F: Field> {
    /// fitted polyexponential component (bases drawn from `f`)
    pub principal: PolyExp<F>,
    /// exact values at `k = 1..=k_max`, from the split decomposition
    pub values: Vec<F>,
    /// `values - principal`, same indexing
    pub residuals: Vec<F>,
    /// `max(beta^(1/2), rho, 1)`
    pub certified_rate: f64,
    pub residual_growth: GrowthCertificate,
}

/// Certified dot convolution through the proof decomposition: the sum
/// splits over the set `N` of coordinates with `m_i = 1`; each part is the
/// additive convolution of a closed-form shifted polyexponential (over `N`)
/// with an `m >= 2` numeric slice (over the complement). The principal part
/// is extracted by fitting against the bases of `f`.
pub fn certified_dot_convolve<F: Conj>(
    f: &MultiPolyExp<F>,
    g: &dyn Fn(&[u64]) -> F,
    xi: &[u64],
    g_growth: Option<f64>,
    k_max: u64,
    budget: &Budget,
) -> Result<CertifiedConvolution<F>> {
    let s = f.arity;
    if xi.len() != s {
        return Err(Error::InvalidInput("xi arity mismatch".into()));
    }
    if xi.iter().any(|&x| x == 0) {
        return Err(Error::InvalidInput("xi must be >= 1".into()));
    }
    let separable = f.separable_terms()?;
    let mut values = vec![F::zero(); k_max as usize + 1];

    // contribution of f's exceptional part: fixed k vectors
    for (kvec, coeff) in &f.exceptional {
        if kvec.iter().zip(xi).any(|(k, x)| k < x) {
            continue;
        }
        // enumerate m >= 1 with kvec . m = total
        for total in 1..=k_max {
            let mut acc = F::zero();
            let mut m = vec![0u64; s];
            fn rec<F: Field>(
                i: usize,
                remaining: u64,
                kvec: &[u64],
                m: &mut Vec<u64>,
                g: &dyn Fn(&[u64]) -> F,
                acc: &mut F,
            ) {
                let s = kvec.len();
                if i == s {
                    if remaining == 0 {
                        *acc = acc.clone() + g(m);
                    }
                    return;
                }
                let min_rest: u64 = kvec[i + 1..].iter().sum();
                let mut mi = 1u64;
                while kvec[i] * mi + min_rest <= remaining {
                    m[i] = mi;
                    rec(i + 1, remaining - kvec[i] * mi, kvec, m, g, acc);
                    mi += 1;
                }
            }
            rec(0, total, kvec, &mut m, g, &mut acc);
            values[total as usize] = values[total as usize].clone() + coeff.clone() * acc;
        }
    }

    // per-base degree bounds discovered from the symbolic F1 parts
    let mut fit_degrees: Vec<(F, usize)> = Vec::new();
    let note_degrees = |pe: &PolyExp<F>, out: &mut Vec<(F, usize)>| {
        for (b, poly) in &pe.terms {
            if let Some((_, d)) = out.iter_mut().find(|(x, _)| x.approx_eq(b, 1e-9)) {
                *d = (*d).max(poly.len().saturating_sub(1));
            } else {
                out.push((b.clone(), poly.len().saturating_sub(1)));
            }
        }
    };

    for (coeff, factors) in &separable {
        for subset in 0u32..(1 << s) {
            let in_n: Vec<bool> = (0..s).map(|i| subset >> i & 1 == 1).collect();
            // symbolic part over N: shifted additive convolution
            let mut f1 = PolyExp::delta(0, F::one());
            let mut shift_total = 0u64;
            for i in 0..s {
                if in_n[i] {
                    let tilde = factors[i].shift_arg(xi[i] - 1).with_zero_at(0);
                    f1 = additive_convolve(&f1, &tilde)?;
                    shift_total += xi[i] - 1;
                }
            }
            let f1 = f1.shift_right(shift_total);
            note_degrees(&f1, &mut fit_degrees);

            // numeric slice over the complement: m >= 2 there, m = 1 on N
            let mut f2 = vec![F::zero(); k_max as usize + 1];
            {
                let comp: Vec<usize> = (0..s).filter(|&i| !in_n[i]).collect();
                if comp.is_empty() {
                    let m_ones = vec![1u64; s];
                    f2[0] = g(&m_ones);
                } else {
                    let xi_c: Vec<u64> = comp.iter().map(|&i| xi[i]).collect();
                    let lo = vec![2u64; comp.len()];
                    let hi = vec![None; comp.len()];
                    for total in 0..=k_max {
                        let mut acc = F::zero();
                        enumerate_dot_pairs(
                            &xi_c,
                            &lo,
                            &hi,
                            total,
                            budget,
                            &mut |kc, mc| {
                                let mut m_full = vec![1u64; s];
                                let mut factor = F::one();
                                for (j, &i) in comp.iter().enumerate() {
                                    m_full[i] = mc[j];
                                    factor = factor * factors[i].eval(kc[j]);
                                }
                                acc = acc.clone() + factor * g(&m_full);
                                Ok(())
                            },
                        )?;
                        f2[total as usize] = acc;
                    }
                }
            }
            // additive convolution of the closed form with the slice
            for k in 1..=k_max as usize {
                let mut acc = F::zero();
                for k1 in 0..=k {
                    let a = f1.eval(k1 as u64);
                    if a.is_zero() || f2[k - k1].is_zero() {
                        continue;
                    }
                    acc = acc + a * f2[k - k1].clone();
                }
                values[k] = values[k].clone() + coeff.clone() * acc;
            }
        }
    }

    // principal part: fit against f's bases with the discovered degrees
    let samples: Vec<(u64, F)> = (1..=k_max).map(|k| (k, values[k as usize].clone())).collect();
    let fit_bases: Vec<(F, usize)> = fit_degrees
        .iter()
        .filter(|(b, _)| !b.is_zero())
        .cloned()
        .collect();
    let principal = fit_polyexp_with_degrees(&samples, &fit_bases)?.fitted;
    let residuals: Vec<F> = samples
        .iter()
        .map(|(k, v)| v.clone() - principal.eval(*k))
        .collect();

    let rho = match g_growth {
        Some(r) => r,
        None => {
            let pts: Vec<(u64, f64)> = (1..=k_max.min(60))
                .map(|m_cost| Ok((m_cost, omega_max(g, xi, m_cost, budget)?)))
                .collect::<Result<Vec<_>>>()?;
            growth_estimate(&pts).rate
        }
    };
    let beta = f.max_base_abs();
    let certified_rate = beta.sqrt().max(rho).max(1.0);
    let residual_growth = growth_estimate(
        &residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i as u64 + 1, r.abs_f64()))
            .collect::<Vec<_>>(),
    );
    Ok(CertifiedConvolution {
        principal,
        values: samples.into_iter().map(|(_, v)| v).collect(),
        residuals,
        certified_rate,
        residual_growth,
    })
}

// ------------------------------------------------------------------ fits

#[derive(Debug, Clone)]
pub struct PolyExpFit<F: Field> {
    pub fitted: PolyExp<F>,
    pub residuals: Vec<(u64, F)>,
    /// log-slope growth estimate of the residual magnitudes
    pub residual_growth: GrowthCertificate,
}

/// Least-squares fit of samples against `p_b(k) b^k` with per-base degree
/// caps. Columns are rescaled by their largest entry (an exact
/// reparametrization) to keep the normal equations sane.
pub fn fit_polyexp_with_degrees<F: Conj>(
    samples: &[(u64, F)],
    bases: &[(F, usize)],
) -> Result<PolyExpFit<F>> {
    let columns: Vec<(usize, usize)> = bases
        .iter()
        .enumerate()
        .flat_map(|(bi, (_, d))| (0..=*d).map(move |j| (bi, j)))
        .collect();
    if samples.len() < columns.len() {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for {} coefficients",
            columns.len(),
            columns.len()
        )));
    }
    if columns.is_empty() {
        let residuals = samples.to_vec();
        let growth = growth_estimate(
            &residuals
                .iter()
                .map(|(k, v)| (*k, v.abs_f64()))
                .collect::<Vec<_>>(),
        );
        return Ok(PolyExpFit {
            fitted: PolyExp::zero(),
            residuals,
            residual_growth: growth,
        });
    }
    let mut design: Vec<Vec<F>> = Vec::with_capacity(samples.len());
    for (k, _) in samples {
        let mut row = Vec::with_capacity(columns.len());
        for &(bi, j) in &columns {
            let (b, _) = &bases[bi];
            let mut entry = pow_i64(b, *k as i64);
            for _ in 0..j {
                entry = entry * F::from_i64(*k as i64);
            }
            row.push(entry);
        }
        design.push(row);
    }
    // column scaling by the largest-magnitude entry
    let mut scales = Vec::with_capacity(columns.len());
    for c in 0..columns.len() {
        let mut best = F::one();
        let mut best_mag = -1.0;
        for row in &design {
            let mag = row[c].abs_f64();
            if mag > best_mag {
                best_mag = mag;
                best = row[c].clone();
            }
        }
        if best.is_zero() {
            best = F::one();
        }
        scales.push(best.clone());
        for row in &mut design {
            row[c] = row[c].clone() / best.clone();
        }
    }
    // hermitian normal equations
    let rows = design.len();
    let cols = columns.len();
    let mut ata = vec![vec![F::zero(); cols]; cols];
    let mut atb = vec![F::zero(); cols];
    for r in 0..rows {
        for i in 0..cols {
            let ci = design[r][i].conj();
            if ci.is_zero() {
                continue;
            }
            for j in 0..cols {
                ata[i][j] = ata[i][j].clone() + ci.clone() * design[r][j].clone();
            }
            atb[i] = atb[i].clone() + ci * samples[r].1.clone();
        }
    }
    let scaled = solve_linear(&ata, &atb)?;
    let solution: Vec<F> = scaled
        .into_iter()
        .zip(&scales)
        .map(|(x, s)| x / s.clone())
        .collect();
    let mut terms: Vec<(F, Vec<F>)> = bases
        .iter()
        .map(|(b, d)| (b.clone(), vec![F::zero(); d + 1]))
        .collect();
    for (ci, &(bi, j)) in columns.iter().enumerate() {
        terms[bi].1[j] = solution[ci].clone();
    }
    let fitted = PolyExp {
        terms,
        exceptional: BTreeMap::new(),
    }
    .normalized(1e-9);
    let residuals: Vec<(u64, F)> = samples
        .iter()
        .map(|(k, v)| (*k, v.clone() - fitted.eval(*k)))
        .collect();
    let residual_growth = growth_estimate(
        &residuals
            .iter()
            .map(|(k, v)| (*k, v.abs_f64()))
            .collect::<Vec<_>>(),
    );
    Ok(PolyExpFit {
        fitted,
        residuals,
        residual_growth,
    })
}

/// Fit with one degree cap shared by all bases.
pub fn fit_polyexp<F: Conj>(
    samples: &[(u64, F)],
    bases: &[F],
    max_degree: usize,
) -> Result<PolyExpFit<F>> {
    // merge approximately-equal bases, raising the degree per duplicate
    let mut merged: Vec<(F, usize)> = Vec::new();
    for b in bases {
        if b.is_zero() {
            continue; // zero bases carry no tail information
        }
        if let Some((_, d)) = merged.iter_mut().find(|(x, _)| x.approx_eq(b, 1e-9)) {
            *d += 1;
        } else {
            merged.push((b.clone(), max_degree));
        }
    }
    fit_polyexp_with_degrees(samples, &merged)
}

// ---------------------------------------------------------------- growth

/// Empirical growth certificate: `|f(k)| <= C(eps) (rate + eps)^k` on the
/// sampled range, for each epsilon in the witness grid.
#[derive(Debug, Clone)]
pub struct GrowthCertificate {
    pub rate: f64,
    pub witness: Vec<(f64, f64)>,
}

pub const GROWTH_EPS_GRID: [f64; 3] = [0.05, 0.1, 0.2];

/// Windowed sup log-slope regression: the samples are split into windows,
/// each contributes its maximum, and the slope of the upper-half window
/// maxima estimates `ln rate`.
pub fn growth_estimate(samples: &[(u64, f64)]) -> GrowthCertificate {
    let nonzero: Vec<(u64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(k, v)| (k, v))
        .collect();
    if nonzero.is_empty() {
        return GrowthCertificate {
            rate: 0.0,
            witness: GROWTH_EPS_GRID.iter().map(|&e| (e, 0.0)).collect(),
        };
    }
    let k_min = nonzero.first().unwrap().0;
    let k_max = nonzero.last().unwrap().0;
    let n_windows = 8u64.min(k_max - k_min + 1).max(1);
    let span = (k_max - k_min + 1).div_ceil(n_windows);
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for w in 0..n_windows {
        let lo = k_min + w * span;
        let hi = lo + span;
        let peak = nonzero
            .iter()
            .filter(|(k, _)| *k >= lo && *k < hi)
            .map(|&(k, v)| (k as f64, v.ln()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if let Some(p) = peak {
            peaks.push(p);
        }
    }
    let rate = if peaks.len() < 2 {
        // a single window: fall back to a direct k-th root
        let (k, v) = *nonzero.last().unwrap();
        v.powf(1.0 / k as f64)
    } else {
        // regression over the upper half of the windows
        let start = peaks.len() / 2;
        let pts = &peaks[start.saturating_sub(1).min(peaks.len() - 2)..];
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-12 {
            1.0
        } else {
            ((n * sxy - sx * sy) / denom).exp()
        }
    };
    let witness = GROWTH_EPS_GRID
        .iter()
        .map(|&eps| {
            let c = nonzero
                .iter()
                .map(|&(k, v)| v / (rate + eps).powi(k as i32))
                .fold(0.0, f64::max);
            (eps, c)
        })
        .collect();
    GrowthCertificate { rate, witness }
}

// ------------------------------------------------------------------ json

/// JSON rendering of a complex polyexponential:
/// `{"terms": [{"base": [re, im], "poly": [[re, im], ...]}], "exceptional": {...}}`.
pub fn polyexp_to_json(p: &PolyExp<Complex64>) -> serde_json::Value {
    use serde_json::json;
    json!({
        "terms": p.terms.iter().map(|(b, poly)| json!({
            "base": [b.re, b.im],
            "poly": poly.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "exceptional": p.exceptional.iter()
            .map(|(k, v)| (k.to_string(), json!([v.re, v.im])))
            .collect::<serde_json::Map<String, serde_json::Value>>(),
    })
}

pub fn multipolyexp_from_json(value: &serde_json::Value) -> Result<MultiPolyExp<Complex64>> {
    let arity = value
        .get("arity")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Json("missing arity".into()))? as usize;
    let mut out = MultiPolyExp::new(arity);
    let cx = |v: &serde_json::Value| -> Result<Complex64> {
        match v {
            serde_json::Value::Number(n) => Ok(Complex64::new(
                n.as_f64().ok_or_else(|| Error::Json("bad number".into()))?,
                0.0,
            )),
            serde_json::Value::Array(a) if a.len() == 2 => Ok(Complex64::new(
                a[0].as_f64().ok_or_else(|| Error::Json("bad re".into()))?,
                a[1].as_f64().ok_or_else(|| Error::Json("bad im".into()))?,
            )),
            _ => Err(Error::Json("complex values are numbers or [re, im]".into())),
        }
    };
    if let Some(terms) = value.get("terms").and_then(|v| v.as_array()) {
        for t in terms {
            let base: Vec<Complex64> = t
                .get("base")
                .and_then(|v| v.as_array())
                .ok_or_else(|| Error::Json("term missing base".into()))?
                .iter()
                .map(&cx)
                .collect::<Result<_>>()?;
            let mut coeffs = BTreeMap::new();
            let poly = t
                .get("poly")
                .and_then(|v| v.as_array())
                .ok_or_else(|| Error::Json("term missing poly".into()))?;
            for entry in poly {
                let degrees: Vec<u32> = entry
                    .get("degrees")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::Json("poly entry missing degrees".into()))?
                    .iter()
                    .map(|d| d.as_u64().unwrap_or(0) as u32)
                    .collect();
                let coeff = cx(entry
                    .get("coeff")
                    .ok_or_else(|| Error::Json("poly entry missing coeff".into()))?)?;
                coeffs.insert(degrees, coeff);
            }
            out.push_term(base, MPoly { coeffs })?;
        }
    }
    if let Some(exc) = value.get("exceptional").and_then(|v| v.as_object()) {
        for (k, v) in exc {
            let key: Vec<u64> = k
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Error::Json("bad key".into())))
                .collect::<Result<_>>()?;
            out.exceptional.insert(key, cx(v)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn b() -> Budget {
        Budget::unlimited()
    }

    #[test]
    fn eval_examples() {
        // 1 * 2^k at k = 5
        let f = PolyExp::term(q(2), vec![q(1)]).unwrap();
        assert_eq!(f.eval(5), q(32));
        // exceptional only
        let g = PolyExp::delta(3, q(7));
        assert_eq!(g.eval(3), q(7));
        assert_eq!(g.eval(4), q(0));
        // k * 1^k
        let h = PolyExp::term(q(1), vec![q(0), q(1)]).unwrap();
        assert_eq!(h.eval(9), q(9));
    }

    #[test]
    fn convolve_constants() {
        // P = Q = 1 gives (P*Q)(k) = k + 1
        let one = PolyExp::constant(q(1));
        let c = additive_convolve(&one, &one).unwrap();
        for k in 0..20u64 {
            assert_eq!(c.eval(k), q(k as i64 + 1));
        }
    }

    #[test]
    fn convolve_two_exponentials() {
        // 2^j * 3^j -> 3^{k+1} - 2^{k+1}
        let p = PolyExp::term(q(2), vec![q(1)]).unwrap();
        let qq = PolyExp::term(q(3), vec![q(1)]).unwrap();
        let c = additive_convolve(&p, &qq).unwrap();
        for k in 0..=20u64 {
            let expect = q(3).pow(k as i32 + 1) - q(2).pow(k as i32 + 1);
            assert_eq!(c.eval(k), expect, "k = {k}");
        }
    }

    #[test]
    fn convolve_delta_identity() {
        let p = PolyExp {
            terms: vec![(q(2), vec![q(3), q(1)]), (q(-1), vec![q(5)])],
            exceptional: [(2u64, q(9))].into_iter().collect(),
        };
        let delta = PolyExp::delta(0, q(1));
        let c = additive_convolve(&p, &delta).unwrap();
        for k in 0..25u64 {
            assert_eq!(c.eval(k), p.eval(k));
        }
    }

    #[test]
    fn convolution_matches_brute_force_randomized() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        use rand::SeedableRng;
        for _ in 0..10 {
            let randpe = |rng: &mut rand_chacha::ChaCha12Rng| {
                let mut p = PolyExp::zero();
                for _ in 0..rng.gen_range(1..3) {
                    let base = q(*[1i64, 2, 3, -2].get(rng.gen_range(0..4)).unwrap());
                    let deg = rng.gen_range(0..3);
                    let coeffs = (0..=deg).map(|_| q(rng.gen_range(-3..4))).collect();
                    p = p.add(&PolyExp {
                        terms: vec![(base, coeffs)],
                        exceptional: BTreeMap::new(),
                    });
                }
                if rng.gen_bool(0.5) {
                    p.exceptional.insert(rng.gen_range(0..4), q(rng.gen_range(1..5)));
                }
                p
            };
            let p = randpe(&mut rng);
            let qq = randpe(&mut rng);
            let c = additive_convolve(&p, &qq).unwrap();
            for k in 0..=30u64 {
                let mut brute = q(0);
                for i in 0..=k {
                    brute += p.eval(i) * qq.eval(k - i);
                }
                assert_eq!(c.eval(k), brute, "k = {k}");
            }
        }
    }

    #[test]
    fn numeric_dot_convolution_divisors() {
        let one = |_: &[u64]| q(1);
        // s = 1, xi = 1, f = g = 1, k = 6: number of divisors of 6
        let v = certified_dot_convolve_numeric(&one, &one, &[1], 6, &b()).unwrap();
        assert_eq!(v, q(4));
        // xi = (2): k1 in {2, 3, 6}
        let v = certified_dot_convolve_numeric(&one, &one, &[2], 6, &b()).unwrap();
        assert_eq!(v, q(3));
        // xi > k: empty sum
        let v = certified_dot_convolve_numeric(&one, &one, &[9], 6, &b()).unwrap();
        assert_eq!(v, q(0));
    }

    #[test]
    fn restricted_slice_prime() {
        // k prime, xi = 1, s = 1: only (k1, m1) = (1, k) survives m >= 2
        let f = |k: &[u64]| q(k[0] as i64);
        let g = |_: &[u64]| q(1);
        let v = restricted_sum_m_ge_2(&f, &g, &[1], 13, &b()).unwrap();
        assert_eq!(v, q(1));
        // f = 0 gives 0
        let z = |_: &[u64]| q(0);
        assert_eq!(restricted_sum_m_ge_2(&z, &g, &[1], 12, &b()).unwrap(), q(0));
    }

    #[test]
    fn certified_convolution_power_base() {
        // f = 4^k, g = 1, s = 1, xi = 1: values are divisor power sums;
        // principal has base 4 and the residual grows like 2^k
        let mut f = MultiPolyExp::new(1);
        f.push_term(vec![q(4)], MPoly::constant(1, q(1))).unwrap();
        let g = |_: &[u64]| q(1);
        let out = certified_dot_convolve(&f, &g, &[1], Some(1.0), 60, &b()).unwrap();
        assert_eq!(out.certified_rate, 2.0);
        // decomposition must reproduce the numeric oracle exactly
        for k in 1..=60u64 {
            let oracle =
                certified_dot_convolve_numeric(&|kv: &[u64]| f.eval(kv), &g, &[1], k, &b())
                    .unwrap();
            assert_eq!(out.values[k as usize - 1], oracle, "k = {k}");
        }
        assert_eq!(out.principal.terms.len(), 1);
        assert!(out.principal.terms[0].0.approx_eq(&q(4), 1e-9));
        let growth = out.residual_growth.rate;
        assert!(
            growth <= 2.1 && growth > 1.5,
            "residual growth {growth} should be about 2"
        );
    }

    #[test]
    fn certified_convolution_zero_g() {
        let mut f = MultiPolyExp::new(1);
        f.push_term(vec![q(3)], MPoly::constant(1, q(1))).unwrap();
        let g = |_: &[u64]| q(0);
        let out = certified_dot_convolve(&f, &g, &[1], Some(0.0), 20, &b()).unwrap();
        assert!(out.values.iter().all(|v| v.is_zero()));
        assert!(out.residuals.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn fit_recovers_in_model_data() {
        // samples of 3 * 2^k + k with bases {2, 1}, degree 1
        let c = |re: f64| Complex64::new(re, 0.0);
        let samples: Vec<(u64, Complex64)> = (1..=20)
            .map(|k| (k, c(3.0 * 2f64.powi(k as i32) + k as f64)))
            .collect();
        let fit = fit_polyexp(&samples, &[c(2.0), c(1.0)], 1).unwrap();
        for (_, r) in &fit.residuals {
            assert!(r.norm() < 1e-6);
        }
    }

    #[test]
    fn fit_reports_leftover_growth() {
        // samples of 2^k + 1.2^k fitted with base {2} only
        let c = |re: f64| Complex64::new(re, 0.0);
        let samples: Vec<(u64, Complex64)> = (1..=40)
            .map(|k| (k, c(2f64.powi(k as i32) + 1.2f64.powi(k as i32))))
            .collect();
        let fit = fit_polyexp(&samples, &[c(2.0)], 0).unwrap();
        let rate = fit.residual_growth.rate;
        assert!((rate - 1.2).abs() < 0.15, "rate {rate}");
    }

    #[test]
    fn fit_empty_basis() {
        let c = |re: f64| Complex64::new(re, 0.0);
        let samples: Vec<(u64, Complex64)> = (1..=10).map(|k| (k, c(k as f64))).collect();
        let fit = fit_polyexp(&samples, &[], 2).unwrap();
        assert!(fit.fitted.terms.is_empty());
        assert_eq!(fit.residuals.len(), 10);
        assert_eq!(fit.residuals[3].1, samples[3].1);
    }

    #[test]
    fn growth_estimates() {
        let pow3: Vec<(u64, f64)> = (1..=40).map(|k| (k, 3f64.powi(k as i32))).collect();
        let g = growth_estimate(&pow3);
        assert!((g.rate - 3.0).abs() < 0.06, "rate {}", g.rate);
        let sq: Vec<(u64, f64)> = (1..=40).map(|k| (k, (k * k) as f64)).collect();
        let g = growth_estimate(&sq);
        assert!((g.rate - 1.0).abs() < 0.15, "rate {}", g.rate);
        let zero: Vec<(u64, f64)> = (1..=40).map(|k| (k, 0.0)).collect();
        assert_eq!(growth_estimate(&zero).rate, 0.0);
    }

    #[test]
    fn growth_witness_bounds_hold() {
        let data: Vec<(u64, f64)> = (1..=50)
            .map(|k| (k, 2f64.powi(k as i32) * (1.0 + (k as f64).sin().abs())))
            .collect();
        let g = growth_estimate(&data);
        for (eps, c) in &g.witness {
            for &(k, v) in &data {
                assert!(v <= c * (g.rate + eps).powi(k as i32) + 1e-9);
            }
        }
    }
}
