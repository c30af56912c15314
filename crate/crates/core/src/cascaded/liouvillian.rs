use num_complex::Complex64 as C64;

use crate::hilbert::{mode_operator, Mode, DIM};
use crate::matrix::{ComplexMatrix, I, ONE, ZERO};
use crate::pulse::Role;

use super::SimulationConfig;

/// Operator stored as its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let v = m.get(i, j);
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += coef · A · x`
    #[inline]
    fn left_add(&self, coef: C64, x: &[C64], out: &mut [C64]) {
        for &(i, k, v) in &self.entries {
            let f = coef * v;
            let (src, dst) = (&x[k * DIM..(k + 1) * DIM], &mut out[i * DIM..(i + 1) * DIM]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += f * s;
            }
        }
    }

    /// `out += coef · x · A†`
    #[inline]
    fn right_dagger_add(&self, coef: C64, x: &[C64], out: &mut [C64]) {
        for &(j, k, v) in &self.entries {
            let f = coef * v.conj();
            for r in 0..DIM {
                out[r * DIM + j] += f * x[r * DIM + k];
            }
        }
    }

    /// `Tr(A x)`
    fn trace_with(&self, x: &[C64]) -> C64 {
        self.entries.iter().map(|&(i, k, v)| v * x[k * DIM + i]).sum()
    }
}

/// Time-independent pieces of the generator; the controls enter only
/// through the two drive operators.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// `H0 − (i/2) Σ L†L`.
    static_h_eff: SparseOp,
    drive_a: SparseOp,
    drive_a_dag: SparseOp,
    drive_b: SparseOp,
    drive_b_dag: SparseOp,
    jumps: Vec<SparseOp>,
    /// `Σ L†L` over the cavity channels: the rate at which photons leave.
    leak: SparseOp,
    /// Weighted sum of mode occupations that only changes through leakage.
    balance: SparseOp,
}

fn sideband(role: Role, qubit: &ComplexMatrix, cavity: &ComplexMatrix) -> ComplexMatrix {
    match role {
        // g q c: |g0> ↔ |e1> after relabeling the emitter
        Role::Pitch => qubit.matmul(cavity),
        // g q† c: |g1> ↔ |e0>
        Role::Catch => qubit.dagger().matmul(cavity),
    }
}

impl Liouvillian {
    pub fn new(cfg: &SimulationConfig) -> Self {
        let qa = mode_operator(Mode::QubitA);
        let ca = mode_operator(Mode::CavityA);
        let cb = mode_operator(Mode::CavityB);
        let qb = mode_operator(Mode::QubitB);
        let number = |m: &ComplexMatrix| m.dagger().matmul(m);

        let (ka, kb) = (cfg.nodes.alice.kappa, cfg.nodes.bob.kappa);
        let t = cfg.channel.transmission;
        let sqrt_t = t.sqrt();

        let mut h0 = number(&ca).scale_real(cfg.controls_a.delta);
        h0.add_scaled(C64::new(cfg.controls_b.delta, 0.0), &number(&cb));
        let hop = &ca.dagger().matmul(&cb) - &ca.matmul(&cb.dagger());
        h0.add_scaled(I * (0.5 * (t * ka * kb).sqrt()), &hop);

        let mut jump_mats = Vec::new();
        let mut collective = ca.scale_real(ka.sqrt());
        collective.add_scaled(C64::new(kb.sqrt(), 0.0), &cb);
        if sqrt_t > 0.0 {
            jump_mats.push(collective.scale_real(sqrt_t.sqrt()));
        }
        let individual = (1.0 - sqrt_t).max(0.0);
        if individual > 0.0 {
            jump_mats.push(ca.scale_real((individual * ka).sqrt()));
            jump_mats.push(cb.scale_real((individual * kb).sqrt()));
        }
        let mut leak = ComplexMatrix::zeros(DIM);
        for l in &jump_mats {
            leak += &l.dagger().matmul(l);
        }

        let imp = &cfg.imperfections;
        for (rate, op) in [
            (imp.relaxation_a.effective(), qa.clone()),
            (imp.dephasing_a.effective(), number(&qa)),
            (imp.relaxation_b.effective(), qb.clone()),
            (imp.dephasing_b.effective(), number(&qb)),
        ] {
            if rate > 0.0 {
                jump_mats.push(op.scale_real(rate.sqrt()));
            }
        }

        let mut h_eff = h0;
        for l in &jump_mats {
            h_eff.add_scaled(C64::new(0.0, -0.5), &l.dagger().matmul(l));
        }

        let drive_a = sideband(cfg.controls_a.role, &qa, &ca);
        let drive_b = sideband(cfg.controls_b.role, &qb, &cb);

        let qubit_sign = |role: Role| match role {
            Role::Pitch => 1.0,
            Role::Catch => -1.0,
        };
        let mut balance = number(&qa).scale_real(qubit_sign(cfg.controls_a.role));
        balance.add_scaled(C64::new(qubit_sign(cfg.controls_b.role), 0.0), &number(&qb));
        balance.add_scaled(-ONE, &number(&ca));
        balance.add_scaled(-ONE, &number(&cb));

        Self {
            static_h_eff: SparseOp::from_dense(&h_eff),
            drive_a_dag: SparseOp::from_dense(&drive_a.dagger()),
            drive_a: SparseOp::from_dense(&drive_a),
            drive_b_dag: SparseOp::from_dense(&drive_b.dagger()),
            drive_b: SparseOp::from_dense(&drive_b),
            jumps: jump_mats.iter().map(SparseOp::from_dense).collect(),
            leak: SparseOp::from_dense(&leak),
            balance: SparseOp::from_dense(&balance),
        }
    }

    /// Writes `dρ/dt` for controls `g_a`, `g_b` into `out` (row-major, 16×16).
    /// `scratch` must hold 256 entries.
    pub(crate) fn apply_into(&self, g_a: C64, g_b: C64, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        out.fill(ZERO);
        let minus_i = -I;
        let terms = [
            (&self.static_h_eff, ONE),
            (&self.drive_a, g_a),
            (&self.drive_a_dag, g_a.conj()),
            (&self.drive_b, g_b),
            (&self.drive_b_dag, g_b.conj()),
        ];
        for (op, coef) in terms {
            if coef == ZERO {
                continue;
            }
            // −i H_eff ρ + i ρ H_eff†
            op.left_add(minus_i * coef, rho, out);
            op.right_dagger_add((minus_i * coef).conj(), rho, out);
        }
        for l in &self.jumps {
            scratch.fill(ZERO);
            l.left_add(ONE, rho, scratch);
            l.right_dagger_add(ONE, scratch, out);
        }
    }

    pub fn apply(&self, g_a: C64, g_b: C64, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(DIM);
        let mut scratch = vec![ZERO; DIM * DIM];
        self.apply_into(g_a, g_b, rho.as_slice(), out.as_mut_slice(), &mut scratch);
        out
    }

    /// Photon leakage rate `Σ <L†L>` over the cavity channels.
    pub(crate) fn leak_rate(&self, rho: &[C64]) -> f64 {
        self.leak.trace_with(rho).re
    }

    /// Excitation count conserved by the coherent dynamics.
    pub(crate) fn balance(&self, rho: &[C64]) -> f64 {
        self.balance.trace_with(rho).re
    }
}

/// Generator evaluated at one instant.
#[derive(Debug, Clone)]
pub struct Generator {
    pub liouvillian: Liouvillian,
    pub g_a: C64,
    pub g_b: C64,
}

impl Generator {
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.liouvillian.apply(self.g_a, self.g_b, rho)
    }
}

/// The master-equation generator of `cfg` with its controls sampled at `t`.
pub fn build_liouvillian(cfg: &SimulationConfig, t: f64) -> Generator {
    Generator { liouvillian: Liouvillian::new(cfg), g_a: cfg.controls_a.at(t), g_b: cfg.controls_b.at(t) }
}
