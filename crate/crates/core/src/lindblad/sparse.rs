//! Sparse kernels behind the RK4 integrator.
//!
//! A segment Hamiltonian is compiled once into a fixed CSR pattern for the
//! non-Hermitian effective Hamiltonian `H_eff(t) = H(t) − (i/2) Σ_k L_k†L_k`.
//! With `W = −i H_eff ρ` the master-equation right-hand side is
//! `W + W† + Σ_k L_k ρ L_k†`, so one sparse×dense product per evaluation
//! covers both the commutator and the anticommutator.
//!
//! Matrices are dense row-major `Vec<C64>` of length `n²`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::hamiltonian::TimeDepOperator;
use crate::qspace::Operator;

use super::CollapseSet;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Non-zero entries of a dense operator, in row-major order.
pub(crate) fn nonzeros(op: &Operator) -> Vec<(usize, usize, C64)> {
    let n = op.mat.nrows();
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let v = op.mat[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

struct TermSlots {
    freq: f64,
    phase: f64,
    /// `(slot, value)` pairs of the term operator.
    forward: Vec<(usize, C64)>,
    /// `(slot, value)` pairs of its adjoint.
    adjoint: Vec<(usize, C64)>,
}

pub(crate) struct CompiledGenerator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    base: Vec<C64>,
    terms: Vec<TermSlots>,
    jumps: Vec<Vec<(usize, usize, C64)>>,
}

impl CompiledGenerator {
    /// `collapse = None` compiles the plain Hamiltonian (Schrödinger use).
    pub(crate) fn new(h: &TimeDepOperator, collapse: Option<&CollapseSet>) -> Self {
        let n = h.space().total_dim();
        // (row, col) -> slot, fixed before any values are placed
        let mut pattern: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut static_entries: Vec<(usize, usize, C64)> = nonzeros(&h.static_part);
        let mut jumps = Vec::new();
        if let Some(c) = collapse {
            let mut decay_diag = vec![0.0; n];
            for ch in c.active() {
                let scaled = ch.op.scale(C64::new(ch.rate.sqrt(), 0.0));
                let entries = nonzeros(&scaled);
                // L†L
                let ldl = scaled.dagger().mul(&scaled).unwrap();
                for (r, col, v) in nonzeros(&ldl) {
                    if r == col {
                        decay_diag[r] += v.re;
                    } else {
                        static_entries.push((r, col, -0.5 * I * v));
                    }
                }
                jumps.push(entries);
            }
            for (r, k) in decay_diag.into_iter().enumerate() {
                if k != 0.0 {
                    static_entries.push((r, r, C64::new(0.0, -0.5 * k)));
                }
            }
        }
        let term_entries: Vec<_> = h
            .terms
            .iter()
            .map(|t| {
                let fwd = nonzeros(&t.op);
                let adj: Vec<_> = fwd.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
                (t.freq, t.phase, fwd, adj)
            })
            .collect();

        for &(r, c, _) in &static_entries {
            pattern.insert((r, c), 0);
        }
        for (_, _, fwd, adj) in &term_entries {
            for &(r, c, _) in fwd.iter().chain(adj) {
                pattern.insert((r, c), 0);
            }
        }
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(pattern.len());
        for (slot, ((r, c), s)) in pattern.iter_mut().enumerate() {
            *s = slot;
            row_ptr[*r + 1] += 1;
            cols.push(*c);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut base = vec![C64::new(0.0, 0.0); cols.len()];
        for (r, c, v) in static_entries {
            base[pattern[&(r, c)]] += v;
        }
        let terms = term_entries
            .into_iter()
            .map(|(freq, phase, fwd, adj)| TermSlots {
                freq,
                phase,
                forward: fwd.into_iter().map(|(r, c, v)| (pattern[&(r, c)], v)).collect(),
                adjoint: adj.into_iter().map(|(r, c, v)| (pattern[&(r, c)], v)).collect(),
            })
            .collect();
        Self {
            n,
            row_ptr,
            cols,
            base,
            terms,
            jumps,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn values_buffer(&self) -> Vec<C64> {
        self.base.clone()
    }

    /// Fill `vals` with the CSR values of `H_eff(t)`.
    pub(crate) fn eval_at(&self, t: f64, vals: &mut [C64]) {
        vals.copy_from_slice(&self.base);
        for term in &self.terms {
            let c = C64::from_polar(1.0, term.freq * t + term.phase);
            let cc = c.conj();
            for &(s, v) in &term.forward {
                vals[s] += c * v;
            }
            for &(s, v) in &term.adjoint {
                vals[s] += cc * v;
            }
        }
    }

    /// `out = H·x` for a dense row-major `n × m` block `x` (m = 1 for kets).
    fn spmm(&self, vals: &[C64], x: &[C64], m: usize, out: &mut [C64]) {
        for r in 0..self.n {
            let dst = &mut out[r * m..(r + 1) * m];
            dst.fill(C64::new(0.0, 0.0));
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let h = vals[k];
                let src = &x[self.cols[k] * m..(self.cols[k] + 1) * m];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += h * s;
                }
            }
        }
    }

    /// `out = dρ/dt`. `scratch` must hold `n²` entries.
    pub(crate) fn lindblad_rhs(&self, vals: &[C64], rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let n = self.n;
        self.spmm(vals, rho, n, scratch);
        // out = −i W + (−i W)†, where scratch holds W = H_eff ρ
        for i in 0..n {
            for j in 0..n {
                let w_ij = scratch[i * n + j];
                let w_ji = scratch[j * n + i];
                out[i * n + j] = -I * w_ij + I * w_ji.conj();
            }
        }
        for jump in &self.jumps {
            for &(i, p, l1) in jump {
                let row = &mut out[i * n..(i + 1) * n];
                let src = &rho[p * n..(p + 1) * n];
                for &(j, q, l2) in jump {
                    row[j] += l1 * l2.conj() * src[q];
                }
            }
        }
    }

    /// `out = −i H ψ` (collapse terms, if compiled in, act as a
    /// non-Hermitian decay).
    pub(crate) fn schrodinger_rhs(&self, vals: &[C64], psi: &[C64], out: &mut [C64]) {
        self.spmm(vals, psi, 1, out);
        for z in out.iter_mut() {
            *z *= -I;
        }
    }
}
