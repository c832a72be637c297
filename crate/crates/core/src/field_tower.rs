//! Arithmetic in GF(q) and GF(q^2), the unit circle, the norm partition of
//! GF(q)* and the Λ system of norm representatives.
//!
//! Elements of GF(q^2) are `Fe` handles: a byte `c0 + q*c1` where `c0 + c1*x`
//! is the canonical representative modulo the quadratic modulus and each
//! `ci` is the integer code `sum d_j p^j` of a GF(q) element (digits over
//! GF(p), constant first). Subfield elements are exactly the handles `< q`.
//! All operations go through a shared [`Field`] which holds the tables.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("q = {0} is outside the supported range 3..=16")]
    OutOfRange(u32),
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus {coeffs:?} is not a monic irreducible polynomial of degree {degree}")]
    BadModulus { coeffs: Vec<u32>, degree: usize },
    #[error("invalid Λ: {0}")]
    BadLambda(String),
}

/// An element of GF(q^2), interpreted relative to a [`Field`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Fe(pub u8);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The parameters that pin down a concrete model of GF(q) ⊂ GF(q^2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
    /// Monic degree-m polynomial over GF(p), constant term first.
    pub modulus_q: Vec<u32>,
    /// Monic quadratic over GF(q), constant term first, as GF(q) codes.
    pub modulus_q2: [u32; 3],
    pub generator: Fe,
}

impl FieldSpec {
    pub fn q(&self) -> u32 {
        self.p.pow(self.m)
    }
}

/// Splits `q` into `(p, m)` with `q = p^m`.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut m = 0;
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

// Dense polynomials over GF(p), constant term first, no trailing zeros.
fn poly_trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let b = poly_trim(b.to_vec());
    let mut r = poly_trim(a.to_vec());
    let lead_inv = mod_inv(*b.last().expect("nonzero divisor"), p);
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() * lead_inv % p;
        for (i, &bc) in b.iter().enumerate() {
            r[i + shift] = (r[i + shift] + p * p - f * bc % p) % p;
        }
        r = poly_trim(r);
    }
    r
}

fn mod_inv(a: u32, p: u32) -> u32 {
    (1..p).find(|x| a * x % p == 1).expect("invertible mod p")
}

/// Monic polynomials of the given degree over GF(p), in constant-first
/// lexicographic order of their lower coefficients.
fn monic_polys(p: u32, degree: usize) -> impl Iterator<Item = Vec<u32>> {
    let count = (p as usize).pow(degree as u32);
    (0..count).map(move |mut k| {
        // The constant term is the most significant digit of the order.
        let mut coeffs = vec![0u32; degree + 1];
        for i in (0..degree).rev() {
            coeffs[i] = (k % p as usize) as u32;
            k /= p as usize;
        }
        coeffs[degree] = 1;
        coeffs
    })
}

fn is_irreducible_over_prime(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg == 0 {
        return false;
    }
    (1..=deg / 2).all(|d| monic_polys(p, d).all(|g| !poly_rem(f, &g, p).is_empty()))
}

/// A concrete model of GF(q) ⊂ GF(q^2) with full lookup tables.
pub struct Field {
    spec: FieldSpec,
    p: usize,
    q: usize,
    q2: usize,
    add_t: Vec<u8>,
    neg_t: Vec<u8>,
    log_t: Vec<u16>,
    exp_t: Vec<u8>,
    frob_t: Vec<u8>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("spec", &self.spec).finish()
    }
}

// GF(q) on integer codes, used only while building the GF(q^2) tables.
struct SubField {
    p: u32,
    m: usize,
    q: usize,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl SubField {
    fn new(p: u32, modulus: &[u32]) -> SubField {
        let m = modulus.len() - 1;
        let q = (p as usize).pow(m as u32);
        let digits = |mut c: usize| {
            let mut d = vec![0u32; m];
            for slot in d.iter_mut() {
                *slot = (c % p as usize) as u32;
                c /= p as usize;
            }
            d
        };
        let code = |d: &[u32]| d.iter().rev().fold(0usize, |acc, &x| acc * p as usize + x as usize);
        let mut add = vec![0u32; q * q];
        let mut mul = vec![0u32; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = code(&sum) as u32;
                let mut prod = vec![0u32; 2 * m];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut r = poly_rem(&prod, modulus, p);
                r.resize(m, 0);
                mul[a * q + b] = code(&r) as u32;
            }
        }
        SubField { p, m, q, add, mul }
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.q + b as usize]
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.q + b as usize]
    }

    fn neg(&self, a: u32) -> u32 {
        (0..self.q as u32).find(|&b| self.add(a, b) == 0).unwrap()
    }
}

impl Field {
    /// The canonical model for `q`: lexicographically smallest moduli and
    /// the smallest generator.
    pub fn new(q: u32) -> Result<Arc<Field>, FieldError> {
        let (p, m) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        Field::with_moduli(p, m, None, None)
    }

    /// Builds the field from `p`, `m` and optional explicit moduli. The
    /// quadratic modulus coefficients are GF(q) integer codes.
    pub fn with_moduli(
        p: u32,
        m: u32,
        modulus_q: Option<Vec<u32>>,
        modulus_q2: Option<[u32; 3]>,
    ) -> Result<Arc<Field>, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let q = p.checked_pow(m).unwrap_or(u32::MAX);
        if m == 0 || !(3..=16).contains(&q) {
            return Err(FieldError::OutOfRange(q));
        }
        let modulus_q = match modulus_q {
            Some(f) => {
                let ok = f.len() == m as usize + 1
                    && f.last() == Some(&1)
                    && f.iter().all(|&c| c < p)
                    && is_irreducible_over_prime(&f, p);
                if !ok {
                    return Err(FieldError::BadModulus { coeffs: f, degree: m as usize });
                }
                f
            }
            None => monic_polys(p, m as usize)
                .find(|f| is_irreducible_over_prime(f, p))
                .expect("irreducible polynomials exist in every degree"),
        };
        let sub = SubField::new(p, &modulus_q);
        let qu = sub.q as u32;
        let has_root = |c0: u32, c1: u32| (0..qu).any(|x| sub.add(sub.add(sub.mul(x, x), sub.mul(c1, x)), c0) == 0);
        let modulus_q2 = match modulus_q2 {
            Some(f) => {
                if f[2] != 1 || f[0] >= qu || f[1] >= qu || has_root(f[0], f[1]) {
                    return Err(FieldError::BadModulus { coeffs: f.to_vec(), degree: 2 });
                }
                f
            }
            None => {
                let (c0, c1) = (0..qu)
                    .flat_map(|c0| (0..qu).map(move |c1| (c0, c1)))
                    .find(|&(c0, c1)| !has_root(c0, c1))
                    .expect("irreducible quadratics exist");
                [c0, c1, 1]
            }
        };
        Ok(Arc::new(Field::from_parts(sub, modulus_q, modulus_q2)))
    }

    fn from_parts(sub: SubField, modulus_q: Vec<u32>, modulus_q2: [u32; 3]) -> Field {
        let q = sub.q;
        let q2 = q * q;
        let split = |x: usize| ((x % q) as u32, (x / q) as u32);
        let join = |c0: u32, c1: u32| c0 as usize + q * c1 as usize;
        let (n0, n1) = (sub.neg(modulus_q2[0]), sub.neg(modulus_q2[1]));
        // x^2 = n1*x + n0
        let slow_mul = |a: usize, b: usize| {
            let (a0, a1) = split(a);
            let (b0, b1) = split(b);
            let cc = sub.mul(a1, b1);
            let c0 = sub.add(sub.mul(a0, b0), sub.mul(cc, n0));
            let c1 = sub.add(sub.add(sub.mul(a0, b1), sub.mul(a1, b0)), sub.mul(cc, n1));
            join(c0, c1)
        };
        let mut add_t = vec![0u8; q2 * q2];
        let mut neg_t = vec![0u8; q2];
        for a in 0..q2 {
            let (a0, a1) = split(a);
            for b in 0..q2 {
                let (b0, b1) = split(b);
                add_t[a * q2 + b] = join(sub.add(a0, b0), sub.add(a1, b1)) as u8;
            }
            neg_t[a] = join(sub.neg(a0), sub.neg(a1)) as u8;
        }
        // Generator: first element, constant coefficient varying slowest.
        let order = |g: usize| {
            let mut x = g;
            let mut k = 1;
            while x != 1 {
                x = slow_mul(x, g);
                k += 1;
                if k > q2 {
                    return 0;
                }
            }
            k
        };
        let generator = (0..q as u32)
            .flat_map(|c0| (0..q as u32).map(move |c1| (c0, c1)))
            .map(|(c0, c1)| join(c0, c1))
            .find(|&g| g != 0 && order(g) == q2 - 1)
            .expect("GF(q^2)* is cyclic");
        let n = q2 - 1;
        let mut exp_t = vec![0u8; 2 * n];
        let mut log_t = vec![0u16; q2];
        let mut x = 1usize;
        for k in 0..n {
            exp_t[k] = x as u8;
            exp_t[k + n] = x as u8;
            log_t[x] = k as u16;
            x = slow_mul(x, generator);
        }
        let mut field = Field {
            spec: FieldSpec { p: sub.p, m: sub.m as u32, modulus_q, modulus_q2, generator: Fe(generator as u8) },
            p: sub.p as usize,
            q,
            q2,
            add_t,
            neg_t,
            log_t,
            exp_t,
            frob_t: Vec::new(),
        };
        field.frob_t = (0..q2).map(|a| field.pow(Fe(a as u8), q as u64).0).collect();
        field
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.spec.m as usize
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of elements of GF(q^2).
    pub fn order(&self) -> usize {
        self.q2
    }

    pub fn generator(&self) -> Fe {
        self.spec.generator
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.q2).map(|a| Fe(a as u8))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Fe> {
        (1..self.q2).map(|a| Fe(a as u8))
    }

    /// Subfield elements in code order.
    pub fn subfield(&self) -> impl Iterator<Item = Fe> {
        (0..self.q).map(|a| Fe(a as u8))
    }

    pub fn is_subfield(&self, x: Fe) -> bool {
        (x.0 as usize) < self.q
    }

    /// The GF(q) coefficient codes `(c0, c1)` of `x = c0 + c1*x`.
    pub fn coeffs(&self, x: Fe) -> (u32, u32) {
        ((x.0 as usize % self.q) as u32, (x.0 as usize / self.q) as u32)
    }

    pub fn from_coeffs(&self, c0: u32, c1: u32) -> Option<Fe> {
        let q = self.q as u32;
        (c0 < q && c1 < q).then(|| Fe((c0 + q * c1) as u8))
    }

    /// The base-p digits of a GF(q) code, constant first, length m.
    pub fn code_digits(&self, code: u32) -> Vec<u32> {
        let mut c = code;
        (0..self.m())
            .map(|_| {
                let d = c % self.p as u32;
                c /= self.p as u32;
                d
            })
            .collect()
    }

    pub fn digits_code(&self, digits: &[u32]) -> Option<u32> {
        if digits.len() != self.m() || digits.iter().any(|&d| d >= self.p as u32) {
            return None;
        }
        Some(digits.iter().rev().fold(0, |acc, &d| acc * self.p as u32 + d))
    }

    /// `x` as two GF(p) digit vectors (constant coefficient first).
    pub fn to_digits(&self, x: Fe) -> [Vec<u32>; 2] {
        let (c0, c1) = self.coeffs(x);
        [self.code_digits(c0), self.code_digits(c1)]
    }

    pub fn from_digits(&self, digits: &[Vec<u32>]) -> Option<Fe> {
        match digits {
            [d0, d1] => self.from_coeffs(self.digits_code(d0)?, self.digits_code(d1)?),
            _ => None,
        }
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        Fe(self.add_t[a.0 as usize * self.q2 + b.0 as usize])
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.neg_t[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.is_zero() || b.is_zero() {
            return Fe::ZERO;
        }
        Fe(self.exp_t[self.log_t[a.0 as usize] as usize + self.log_t[b.0 as usize] as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Fe) -> Option<Fe> {
        let n = self.q2 - 1;
        (!a.is_zero()).then(|| Fe(self.exp_t[(n - self.log_t[a.0 as usize] as usize) % n]))
    }

    /// `a / b`; panics on division by zero.
    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b).expect("division by zero in GF(q^2)"))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let n = (self.q2 - 1) as u64;
        let k = (self.log_t[a.0 as usize] as u64 % n) * (e % n) % n;
        Fe(self.exp_t[k as usize])
    }

    /// `g^k` for the fixed generator.
    pub fn exp(&self, k: usize) -> Fe {
        Fe(self.exp_t[k % (self.q2 - 1)])
    }

    /// Discrete logarithm to base g; `None` for zero.
    pub fn log(&self, a: Fe) -> Option<usize> {
        (!a.is_zero()).then(|| self.log_t[a.0 as usize] as usize)
    }

    /// The Frobenius `x ↦ x^q` of GF(q^2) over GF(q).
    #[inline]
    pub fn frob(&self, a: Fe) -> Fe {
        Fe(self.frob_t[a.0 as usize])
    }

    /// `x ↦ x^(p^k)`; `k` is taken modulo 2m.
    pub fn frob_pow(&self, a: Fe, k: usize) -> Fe {
        let k = k % (2 * self.m());
        self.pow(a, (self.p as u64).pow(k as u32))
    }

    pub fn norm(&self, a: Fe) -> Fe {
        self.mul(a, self.frob(a))
    }

    pub fn trace(&self, a: Fe) -> Fe {
        self.add(a, self.frob(a))
    }

    pub fn minus_one(&self) -> Fe {
        self.neg(Fe::ONE)
    }

    /// `g^(q-1)`, the generator of the unit circle.
    pub fn omega(&self) -> Fe {
        self.exp(self.q - 1)
    }

    /// The q+1 elements of norm 1, as `ω^0, ω^1, …, ω^q`.
    pub fn unit_circle(&self) -> Vec<Fe> {
        (0..=self.q).map(|k| self.exp(k * (self.q - 1))).collect()
    }

    /// The exponent `k` with `u = ω^k`, if `u` lies on the unit circle.
    pub fn unit_index(&self, u: Fe) -> Option<usize> {
        let l = self.log(u)?;
        (l % (self.q - 1) == 0).then_some(l / (self.q - 1))
    }

    /// `g^(q+1)`, a generator of GF(q)*.
    pub fn sub_generator(&self) -> Fe {
        self.exp(self.q + 1)
    }

    /// Whether a nonzero subfield element is a square in GF(q).
    pub fn is_subfield_square(&self, a: Fe) -> bool {
        debug_assert!(self.is_subfield(a) && !a.is_zero());
        if self.p == 2 {
            return true;
        }
        // a = (g^(q+1))^k; a square in GF(q) iff k is even.
        (self.log_t[a.0 as usize] as usize / (self.q + 1)) % 2 == 0
    }
}

/// The partition `GF(q)* = units ∪ A ∪ A^{-1}` with `units = {1}` (q even)
/// or `{±1}` (q odd), and for odd q also `-A ∩ A = ∅`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormPartition {
    pub t: usize,
    pub units_part: Vec<Fe>,
    pub a: Vec<Fe>,
    pub a_inv: Vec<Fe>,
}

/// Greedy construction walking GF(q)* in generator-power order.
pub fn build_partition(field: &Field) -> NormPartition {
    let q = field.q();
    let h = field.sub_generator();
    let order: Vec<Fe> = (0..q - 1).map(|k| field.pow(h, k as u64)).collect();
    let inv = |x: Fe| field.inv(x).unwrap();
    let mut used = vec![false; field.order()];
    let mut a = Vec::new();
    let mut a_inv = Vec::new();
    let units_part = if q % 2 == 0 { vec![Fe::ONE] } else { vec![Fe::ONE, field.minus_one()] };
    for &u in &units_part {
        used[u.0 as usize] = true;
    }
    if q % 2 == 0 {
        for &x in &order {
            if used[x.0 as usize] {
                continue;
            }
            a.push(x);
            a_inv.push(inv(x));
            used[x.0 as usize] = true;
            used[inv(x).0 as usize] = true;
        }
    } else {
        if q % 4 == 1 {
            // The square roots of -1 are their own negated inverses; take one.
            let b = *order
                .iter()
                .find(|&&x| field.mul(x, x) == field.minus_one())
                .expect("-1 is a square when q ≡ 1 mod 4");
            a.push(b);
            a_inv.push(inv(b));
            used[b.0 as usize] = true;
            used[inv(b).0 as usize] = true;
        }
        for &c in &order {
            if used[c.0 as usize] {
                continue;
            }
            let quad = [c, field.neg(c), inv(c), field.neg(inv(c))];
            a.push(c);
            a.push(field.neg(inv(c)));
            a_inv.push(inv(c));
            a_inv.push(field.neg(c));
            for x in quad {
                used[x.0 as usize] = true;
            }
        }
    }
    NormPartition { t: a.len(), units_part, a, a_inv }
}

/// Λ: q−1 elements of GF(q^2)* with pairwise distinct norms, the
/// distinguished η ∈ Λ of norm 1, and the index sets 𝓘, 𝓘₁, 𝓘₂.
#[derive(Debug, Clone)]
pub struct LambdaSystem {
    field: Arc<Field>,
    partition: NormPartition,
    elements: Vec<Fe>,
    eta_index: usize,
    i_set: Vec<usize>,
    i1: Vec<usize>,
    i2: Vec<usize>,
    by_norm: Vec<Option<usize>>,
}

impl LambdaSystem {
    /// The canonical system Λ = (g^0, …, g^(q−2)).
    pub fn canonical(field: Arc<Field>) -> LambdaSystem {
        let elements = (0..field.q() - 1).map(|k| field.exp(k)).collect();
        LambdaSystem::with_elements(field, elements).expect("generator powers have distinct norms")
    }

    /// A system from explicit exponents of the generator.
    pub fn from_exponents(field: Arc<Field>, exps: &[usize]) -> Result<LambdaSystem, FieldError> {
        let elements = exps.iter().map(|&k| field.exp(k)).collect();
        LambdaSystem::with_elements(field, elements)
    }

    pub fn with_elements(field: Arc<Field>, elements: Vec<Fe>) -> Result<LambdaSystem, FieldError> {
        let q = field.q();
        if elements.len() != q - 1 {
            return Err(FieldError::BadLambda(format!("expected {} elements, got {}", q - 1, elements.len())));
        }
        if elements.iter().any(|x| x.is_zero()) {
            return Err(FieldError::BadLambda("zero is not allowed".into()));
        }
        let mut by_norm = vec![None; field.order()];
        for (i, &x) in elements.iter().enumerate() {
            let n = field.norm(x);
            if by_norm[n.0 as usize].replace(i).is_some() {
                return Err(FieldError::BadLambda(format!("two elements share the norm {}", n)));
            }
        }
        let eta_index = by_norm[Fe::ONE.0 as usize].expect("norms biject onto GF(q)*");
        let partition = build_partition(&field);
        let in_i = |n: Fe| partition.a.contains(&n);
        let minus_one = field.minus_one();
        let odd = q % 2 == 1;
        let i_set: Vec<usize> = (0..q - 1)
            .filter(|&i| {
                let n = field.norm(elements[i]);
                in_i(n) || (odd && n == minus_one)
            })
            .collect();
        let (i1, i2) = if odd {
            i_set.iter().partition(|&&i| field.is_subfield_square(field.norm(elements[i])))
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(LambdaSystem { field, partition, elements, eta_index, i_set, i1, i2, by_norm })
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    pub fn partition(&self) -> &NormPartition {
        &self.partition
    }

    pub fn elements(&self) -> &[Fe] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn alpha(&self, idx: usize) -> Fe {
        self.elements[idx]
    }

    pub fn norm(&self, idx: usize) -> Fe {
        self.field.norm(self.elements[idx])
    }

    pub fn eta_index(&self) -> usize {
        self.eta_index
    }

    pub fn eta(&self) -> Fe {
        self.elements[self.eta_index]
    }

    /// Indices of 𝓘 in increasing order.
    pub fn i_set(&self) -> &[usize] {
        &self.i_set
    }

    pub fn in_i(&self, idx: usize) -> bool {
        self.i_set.contains(&idx)
    }

    /// Indices of 𝓘 with square norm (odd q only).
    pub fn i1(&self) -> &[usize] {
        &self.i1
    }

    /// Indices of 𝓘 with nonsquare norm (odd q only).
    pub fn i2(&self) -> &[usize] {
        &self.i2
    }

    /// The index of the element of Λ with the given norm.
    pub fn index_of_norm(&self, n: Fe) -> Option<usize> {
        self.by_norm.get(n.0 as usize).copied().flatten()
    }

    /// The index β with N(β) = 1/N(α).
    pub fn inverse_norm_partner(&self, idx: usize) -> usize {
        let n = self.field.inv(self.norm(idx)).unwrap();
        self.index_of_norm(n).expect("norms biject onto GF(q)*")
    }

    /// Whether N(α) = −1 for the element at `idx`.
    pub fn has_norm_minus_one(&self, idx: usize) -> bool {
        self.norm(idx) == self.field.minus_one()
    }

    /// Exponents k with `Λ[i] = g^k`.
    pub fn exponents(&self) -> Vec<usize> {
        self.elements.iter().map(|&x| self.field.log(x).unwrap()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent slow model: GF(p^2) for prime p as pairs mod x^2 - n.
    fn slow_order(p: u32) -> usize {
        let n = (2..p).find(|a| (1..p).all(|x| x * x % p != *a)).unwrap();
        let mul = |a: (u32, u32), b: (u32, u32)| ((a.0 * b.0 + n * a.1 * b.1) % p, (a.0 * b.1 + a.1 * b.0) % p);
        let mut count = 0;
        for a in 0..p {
            for b in 0..p {
                if (a, b) == (0, 0) {
                    continue;
                }
                let mut x = (1, 0);
                for _ in 0..=p {
                    x = mul(x, (a, b));
                }
                if x == (1, 0) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn prime_power_splits() {
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(16), Some((2, 4)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
    }

    #[test]
    fn rejects_non_prime_powers_and_range() {
        assert_eq!(Field::new(6).unwrap_err(), FieldError::NotPrimePower(6));
        assert_eq!(Field::new(2).unwrap_err(), FieldError::OutOfRange(2));
        assert_eq!(Field::new(25).unwrap_err(), FieldError::OutOfRange(25));
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for q in [3, 4, 5] {
            let f = Field::new(q).unwrap();
            let els: Vec<Fe> = f.elements().collect();
            for &a in &els {
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.frob(f.add(a, b)), f.add(f.frob(a), f.frob(b)));
                    assert_eq!(f.frob(f.mul(a, b)), f.mul(f.frob(a), f.frob(b)));
                    assert_eq!(f.norm(f.mul(a, b)), f.mul(f.norm(a), f.norm(b)));
                    for &c in els.iter().step_by(3) {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
                assert_eq!(f.frob(f.frob(a)), a);
                assert!(f.is_subfield(f.norm(a)));
                assert!(f.is_subfield(f.trace(a)));
                assert_eq!(f.is_subfield(a), f.frob(a) == a);
                if let Some(i) = f.inv(a) {
                    assert_eq!(f.mul(a, i), Fe::ONE);
                }
            }
        }
    }

    #[test]
    fn frob_pow_composes_to_frobenius() {
        for q in [4, 8, 9, 16] {
            let f = Field::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.frob_pow(a, f.m()), f.frob(a));
                assert_eq!(f.frob_pow(a, 2 * f.m()), a);
            }
        }
    }

    #[test]
    fn generator_norm_lands_in_subfield() {
        let f = Field::new(4).unwrap();
        let g = f.generator();
        let mut x = Fe::ONE;
        for _ in 0..5 {
            x = f.mul(x, g);
        }
        assert_eq!(f.coeffs(x).1, 0);
        assert_eq!(f.mul(f.frob(g), g), x);
    }

    #[test]
    fn unit_circle_matches_scan() {
        for q in [3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = Field::new(q).unwrap();
            let scanned: Vec<Fe> = f.nonzero().filter(|&x| f.norm(x) == Fe::ONE).collect();
            let mut circle = f.unit_circle();
            assert_eq!(circle.len(), q as usize + 1);
            assert_eq!(circle[1], f.omega());
            for (k, &u) in circle.iter().enumerate() {
                assert_eq!(f.unit_index(u), Some(k));
            }
            circle.sort();
            assert_eq!(circle, scanned);
        }
        let f = Field::new(3).unwrap();
        assert!(f.unit_circle().contains(&f.minus_one()));
    }

    #[test]
    fn circle_size_agrees_with_slow_model() {
        for p in [3, 5, 7] {
            let f = Field::new(p).unwrap();
            assert_eq!(slow_order(p), f.unit_circle().len());
        }
    }

    #[test]
    fn moduli_are_lex_smallest_irreducible() {
        let f = Field::new(9).unwrap();
        // x^2 + 1 is the first irreducible quadratic over GF(3) (x^2, x^2+x,
        // x^2+2x all have the root 0).
        assert_eq!(f.spec().modulus_q, vec![1, 0, 1]);
        let f = Field::new(8).unwrap();
        assert_eq!(f.spec().modulus_q, vec![1, 0, 1, 1]);
        assert!(Field::with_moduli(3, 2, Some(vec![0, 0, 1]), None).is_err());
        assert!(Field::with_moduli(3, 1, None, Some([0, 0, 1])).is_err());
        let alt = Field::with_moduli(3, 1, None, Some([2, 1, 1])).unwrap();
        assert_eq!(alt.spec().modulus_q2, [2, 1, 1]);
    }

    #[test]
    fn digits_round_trip() {
        let f = Field::new(9).unwrap();
        for x in f.elements() {
            assert_eq!(f.from_digits(&f.to_digits(x)), Some(x));
        }
    }

    fn check_partition(q: u32) -> NormPartition {
        let f = Field::new(q).unwrap();
        let part = build_partition(&f);
        let mut all: Vec<Fe> = part.units_part.iter().chain(&part.a).chain(&part.a_inv).copied().collect();
        all.sort();
        let expected: Vec<Fe> = f.subfield().skip(1).collect();
        assert_eq!(all, expected, "q={q}");
        for &a in &part.a {
            assert!(!part.a_inv.contains(&a));
            assert!(part.a_inv.contains(&f.inv(a).unwrap()));
            if q % 2 == 1 {
                assert!(!part.a.contains(&f.neg(a)));
            }
        }
        let t = if q % 2 == 0 { (q as usize - 2) / 2 } else { (q as usize - 3) / 2 };
        assert_eq!(part.t, t);
        part
    }

    #[test]
    fn partition_invariants() {
        for q in [3, 4, 5, 7, 8, 9, 11, 13, 16] {
            check_partition(q);
        }
        let p3 = check_partition(3);
        assert!(p3.a.is_empty());
        // For prime q the handle of a subfield element is its residue.
        let p5 = check_partition(5);
        assert_eq!(p5.a, vec![Fe(2)]);
        let p7 = check_partition(7);
        let mut a7 = p7.a.clone();
        a7.sort();
        assert_eq!(p7.a.len(), 2);
        let f = Field::new(7).unwrap();
        for a in a7 {
            assert!(!p7.a.contains(&f.neg(a)));
        }
    }

    #[test]
    fn lambda_sizes() {
        for q in [3u32, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = Field::new(q).unwrap();
            let l = LambdaSystem::canonical(f.clone());
            let q = q as usize;
            assert_eq!(l.eta(), Fe::ONE);
            assert!(!l.in_i(l.eta_index()));
            let expected = if q % 2 == 0 { (q - 2) / 2 } else { (q - 1) / 2 };
            assert_eq!(l.i_set().len(), expected);
            if q % 2 == 1 {
                let (e1, e2) = if q % 4 == 1 { ((q - 1) / 4, (q - 1) / 4) } else { ((q - 3) / 4, (q + 1) / 4) };
                assert_eq!((l.i1().len(), l.i2().len()), (e1, e2), "q={q}");
                // The partner of norm −N(α) is never in 𝓘.
                for &i in l.i_set() {
                    let n = f.neg(l.norm(i));
                    let j = l.index_of_norm(n).unwrap();
                    assert!(!l.in_i(j));
                }
            }
            // Inverse-norm partner exists and is unique; membership flips.
            for i in 0..l.len() {
                let j = l.inverse_norm_partner(i);
                assert_eq!(f.mul(l.norm(i), l.norm(j)), Fe::ONE);
                let n = l.norm(i);
                if n != Fe::ONE && n != f.minus_one() {
                    assert_ne!(l.in_i(i), l.in_i(j), "q={q} i={i}");
                }
            }
        }
    }

    #[test]
    fn lambda_override_validation() {
        let f = Field::new(5).unwrap();
        assert!(LambdaSystem::from_exponents(f.clone(), &[0, 1, 2]).is_err());
        assert!(LambdaSystem::from_exponents(f.clone(), &[0, 6, 2, 3]).is_err());
        let l = LambdaSystem::from_exponents(f.clone(), &[6, 7, 8, 9]).unwrap();
        assert_eq!(l.eta_index(), 2);
        assert_eq!(l.exponents(), vec![6, 7, 8, 9]);
    }
}
