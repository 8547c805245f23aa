//! Systematic Reed-Solomon codes over GF(2^m).
//!
//! A codeword is laid out as `[info_0 .. info_{k-1}, parity_0 .. parity_{n-k-1}]`
//! and read as the polynomial `c(x) = sum_j c_j x^(n-1-j)`. The generator
//! polynomial has the consecutive roots alpha^1 .. alpha^(n-k). Codes with
//! `n < 2^m - 1` are shortened: the missing high-order positions are
//! implicit zeros and never appear on the wire.
//!
//! Decoding is hard-decision, errors-only: syndromes, Berlekamp-Massey,
//! Chien search and Forney, followed by a re-encode check so that a
//! word the decoder cannot explain is reported as a failure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::grouping::Group;

/// An (n, k) MDS code together with its derived constants.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    field: Arc<Field>,
    n: usize,
    k: usize,
    // Monic generator, highest-degree coefficient first.
    generator: Vec<Elem>,
    parity_map: Vec<Vec<Elem>>,
}

/// Result of decoding one received word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoded {
    /// The word was within reach of a codeword; `symbol_errors` positions were fixed.
    Corrected { info: Vec<Elem>, symbol_errors: usize },
    /// Syndromes were inconsistent with any correctable error pattern.
    Failed,
}

impl Decoded {
    pub fn info(&self) -> Option<&[Elem]> {
        match self {
            Decoded::Corrected { info, .. } => Some(info),
            Decoded::Failed => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Decoded::Failed)
    }
}

/// One coded block of a keyed group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub group: Group,
    /// Ordinal of the block within the session, in completion order.
    pub index: u32,
    pub info: Vec<Elem>,
    pub parity: Vec<Elem>,
}

impl CodeSpec {
    pub fn new(field: Arc<Field>, n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::CodeParams(format!("need 0 < k < n, got n = {n}, k = {k}")));
        }
        if n > field.order() {
            return Err(Error::CodeParams(format!(
                "n = {n} exceeds 2^m - 1 = {} for m = {}",
                field.order(),
                field.m()
            )));
        }
        let nk = n - k;
        // g(x) = prod_{i=1}^{n-k} (x - alpha^i), built low-degree first.
        let mut g_low: Vec<Elem> = vec![1];
        for i in 1..=nk {
            let root = field.alpha_pow(i as i64);
            let mut next = vec![0; g_low.len() + 1];
            for (j, &c) in g_low.iter().enumerate() {
                next[j + 1] ^= c;
                next[j] ^= field.mul(c, root);
            }
            g_low = next;
        }
        let generator: Vec<Elem> = g_low.into_iter().rev().collect();
        let mut code = CodeSpec {
            field,
            n,
            k,
            generator,
            parity_map: Vec::new(),
        };
        code.parity_map = (0..k)
            .map(|i| {
                let mut unit = vec![0; k];
                unit[i] = 1;
                code.parity_unchecked(&unit)
            })
            .collect();
        Ok(code)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn m(&self) -> u32 {
        self.field.m()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of parity symbols, n - k.
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    /// Minimum distance; MDS codes meet the Singleton bound with equality.
    pub fn d(&self) -> usize {
        self.n - self.k + 1
    }

    /// Guaranteed-correctable symbol errors, floor((d-1)/2).
    pub fn t_c(&self) -> usize {
        (self.d() - 1) / 2
    }

    /// Upper correction limit used in the security accounting, d - 1.
    pub fn t_mc(&self) -> usize {
        self.d() - 1
    }

    /// Information bits per block.
    pub fn info_bits(&self) -> usize {
        self.m() as usize * self.k
    }

    /// Parity bits per block.
    pub fn parity_bits(&self) -> usize {
        self.m() as usize * (self.n - self.k)
    }

    pub fn generator(&self) -> &[Elem] {
        &self.generator
    }

    /// The k x (n-k) matrix G_p with parity(b) = b * G_p.
    pub fn parity_rows(&self) -> &[Vec<Elem>] {
        &self.parity_map
    }

    pub fn encode_parity(&self, info: &[Elem]) -> Result<Vec<Elem>> {
        if info.len() != self.k {
            return Err(Error::Length {
                expected: self.k,
                got: info.len(),
            });
        }
        Ok(self.parity_unchecked(info))
    }

    /// Full systematic codeword: info followed by parity.
    pub fn encode(&self, info: &[Elem]) -> Result<Vec<Elem>> {
        let mut word = info.to_vec();
        word.extend(self.encode_parity(info)?);
        Ok(word)
    }

    /// Parity through the linear map: b * G_p.
    pub fn parity_via_map(&self, info: &[Elem]) -> Result<Vec<Elem>> {
        if info.len() != self.k {
            return Err(Error::Length {
                expected: self.k,
                got: info.len(),
            });
        }
        let mut out = vec![0; self.redundancy()];
        for (&b, row) in info.iter().zip(&self.parity_map) {
            if b == 0 {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(row) {
                *o ^= self.field.mul(b, g);
            }
        }
        Ok(out)
    }

    // Remainder of info(x) * x^(n-k) divided by g(x), via the usual LFSR.
    fn parity_unchecked(&self, info: &[Elem]) -> Vec<Elem> {
        let f = &self.field;
        let nk = self.redundancy();
        let mut rem = vec![0 as Elem; nk];
        for &d in info {
            let feedback = d ^ rem[0];
            rem.copy_within(1.., 0);
            rem[nk - 1] = 0;
            if feedback != 0 {
                for (r, &g) in rem.iter_mut().zip(&self.generator[1..]) {
                    *r ^= f.mul(feedback, g);
                }
            }
        }
        rem
    }

    /// Syndromes S_1 .. S_{n-k} of a received word.
    pub fn syndromes(&self, received: &[Elem]) -> Vec<Elem> {
        let f = &self.field;
        (1..=self.redundancy())
            .map(|i| {
                let x = f.alpha_pow(i as i64);
                received.iter().fold(0, |acc, &c| f.mul(acc, x) ^ c)
            })
            .collect()
    }

    /// Decodes `received` (n symbols).
    pub fn decode(&self, received: &[Elem]) -> Result<Decoded> {
        if received.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: received.len(),
            });
        }
        let f = &*self.field;
        if received.iter().any(|&s| !f.contains(s)) {
            return Err(Error::CodeParams("received symbol outside the field".into()));
        }
        let syn = self.syndromes(received);
        if syn.iter().all(|&s| s == 0) {
            return Ok(Decoded::Corrected {
                info: received[..self.k].to_vec(),
                symbol_errors: 0,
            });
        }

        let lambda = berlekamp_massey(f, &syn);
        let nu = lambda.len() - 1;
        if nu == 0 || nu > self.t_c() {
            return Ok(Decoded::Failed);
        }

        // Chien search over the positions that exist in the (possibly shortened) code.
        let mut locations = Vec::with_capacity(nu);
        for j in 0..self.n {
            let power = (self.n - 1 - j) as i64;
            let x_inv = f.alpha_pow(-power);
            if poly_eval_low(f, &lambda, x_inv) == 0 {
                locations.push((j, power));
            }
        }
        if locations.len() != nu {
            return Ok(Decoded::Failed);
        }

        // Forney with first consecutive root alpha^1: e = Omega(X^-1) / Lambda'(X^-1).
        let nk = self.redundancy();
        let mut omega = vec![0 as Elem; nk];
        for (i, &s) in syn.iter().enumerate() {
            for (j, &l) in lambda.iter().enumerate() {
                if i + j < nk {
                    omega[i + j] ^= f.mul(s, l);
                }
            }
        }
        let mut word = received.to_vec();
        for &(j, power) in &locations {
            let x_inv = f.alpha_pow(-power);
            let num = poly_eval_low(f, &omega, x_inv);
            let den = lambda
                .iter()
                .enumerate()
                .skip(1)
                .step_by(2)
                .fold((0 as Elem, 1 as Elem), |(acc, xp), (_, &c)| {
                    (acc ^ f.mul(c, xp), f.mul(xp, f.mul(x_inv, x_inv)))
                })
                .0;
            if den == 0 {
                return Ok(Decoded::Failed);
            }
            let value = f.div(num, den)?;
            if value == 0 {
                return Ok(Decoded::Failed);
            }
            word[j] ^= value;
        }

        let info = word[..self.k].to_vec();
        if self.parity_unchecked(&info) != word[self.k..] {
            return Ok(Decoded::Failed);
        }
        Ok(Decoded::Corrected {
            info,
            symbol_errors: nu,
        })
    }
}

/// Shortest LFSR (error locator, low-degree first, Lambda_0 = 1) generating `syn`.
fn berlekamp_massey(f: &Field, syn: &[Elem]) -> Vec<Elem> {
    let mut lambda: Vec<Elem> = vec![1];
    let mut prev: Vec<Elem> = vec![1];
    let mut len = 0usize;
    let mut shift = 1usize;
    let mut prev_disc: Elem = 1;
    for r in 0..syn.len() {
        let mut disc = syn[r];
        for i in 1..=len.min(lambda.len() - 1) {
            disc ^= f.mul(lambda[i], syn[r - i]);
        }
        if disc == 0 {
            shift += 1;
            continue;
        }
        let scale = f.div(disc, prev_disc).expect("previous discrepancy is nonzero");
        let mut next = lambda.clone();
        if next.len() < prev.len() + shift {
            next.resize(prev.len() + shift, 0);
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i + shift] ^= f.mul(scale, p);
        }
        if 2 * len <= r {
            prev = std::mem::replace(&mut lambda, next);
            len = r + 1 - len;
            prev_disc = disc;
            shift = 1;
        } else {
            lambda = next;
            shift += 1;
        }
    }
    while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
        lambda.pop();
    }
    lambda
}

fn poly_eval_low(f: &Field, coeffs: &[Elem], x: Elem) -> Elem {
    coeffs.iter().rev().fold(0, |acc, &c| f.mul(acc, x) ^ c)
}
