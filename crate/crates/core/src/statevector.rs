//! Sparse complex statevector over a product of one bounded-support integer
//! register and finitely many `Z_N` registers.
//!
//! A state is a map from basis-label tuples to complex amplitudes, kept
//! normalized after every public operation. Labels are flattened `Vec<i64>`
//! slots in register order and stored in a `BTreeMap`, so every iteration
//! (Born sampling included) runs in lexicographic label order and the whole
//! simulator is deterministic given the RNG stream.
//!
//! Registers that are classical functions of existing registers are never
//! materialized as label slots; [`SparseState::measure_derived`] partitions
//! the support by evaluating the function per support point, which is
//! mathematically identical to storing, measuring and discarding the extra
//! register.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::WeightFn;
use crate::rng::SimRng;

/// Amplitudes below this threshold are pruned after each unitary.
const PRUNE_EPS: f64 = 1e-15;
/// Norm drift tolerated before operations renormalize.
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Register {
    /// Z-valued register with inclusive support bounds.
    Int { min: i64, max: i64 },
    /// `Z_N^arity` register.
    Mod { modulus: u64, arity: usize },
}

impl Register {
    pub fn slots(&self) -> usize {
        match self {
            Register::Int { .. } => 1,
            Register::Mod { arity, .. } => *arity,
        }
    }

    fn check_value(&self, value: &[i64]) -> bool {
        match self {
            Register::Int { min, max } => value.len() == 1 && value[0] >= *min && value[0] <= *max,
            Register::Mod { modulus, arity } => {
                value.len() == *arity && value.iter().all(|v| *v >= 0 && (*v as u64) < *modulus)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        if registers.is_empty() {
            return Err(Error::Layout("layout needs at least one register".into()));
        }
        let ints = registers.iter().filter(|r| matches!(r, Register::Int { .. })).count();
        if ints > 1 {
            return Err(Error::Layout("at most one integer register".into()));
        }
        for r in &registers {
            match r {
                Register::Int { min, max } if min > max => {
                    return Err(Error::Layout("integer register with empty range".into()));
                }
                Register::Mod { modulus, arity } if *modulus < 2 || *arity == 0 => {
                    return Err(Error::Layout("mod register needs modulus >= 2 and arity >= 1".into()));
                }
                _ => {}
            }
        }
        Ok(Self { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn slots(&self) -> usize {
        self.registers.iter().map(Register::slots).sum()
    }

    /// Slot range of register `idx` inside a flattened label.
    pub fn slot_range(&self, idx: usize) -> Result<std::ops::Range<usize>> {
        if idx >= self.registers.len() {
            return Err(Error::Layout(format!("register index {idx} out of range")));
        }
        let start: usize = self.registers[..idx].iter().map(Register::slots).sum();
        Ok(start..start + self.registers[idx].slots())
    }

    pub fn check_label(&self, label: &[i64]) -> Result<()> {
        if label.len() != self.slots() {
            return Err(Error::Layout(format!(
                "label has {} slots, layout expects {}",
                label.len(),
                self.slots()
            )));
        }
        let mut offset = 0;
        for reg in &self.registers {
            let s = reg.slots();
            if !reg.check_value(&label[offset..offset + s]) {
                return Err(Error::Layout(format!("label value out of range: {:?}", label)));
            }
            offset += s;
        }
        Ok(())
    }
}

pub type Label = Vec<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalMode {
    /// Target must be all-zero; afterwards it holds `f(sources)`.
    Write,
    /// Target must equal `f(sources)`; afterwards it is all-zero.
    Uncompute,
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub value: Vec<i64>,
    pub probability: f64,
    pub collapsed: SparseState,
}

#[derive(Debug, Clone)]
pub struct SparseState {
    layout: RegisterLayout,
    amps: BTreeMap<Label, Complex64>,
}

impl SparseState {
    /// Single-amplitude basis state.
    pub fn prepare_basis(layout: RegisterLayout, label: Label) -> Result<Self> {
        layout.check_label(&label)?;
        let mut amps = BTreeMap::new();
        amps.insert(label, Complex64::new(1.0, 0.0));
        Ok(Self { layout, amps })
    }

    /// State with register 0 (which must be the integer register) weighted by
    /// `weights` and every other register at 0.
    pub fn prepare_weighted(layout: RegisterLayout, weights: &WeightFn) -> Result<Self> {
        let (min, max) = match layout.registers.first() {
            Some(Register::Int { min, max }) => (*min, *max),
            _ => return Err(Error::Layout("register 0 must be the integer register".into())),
        };
        let (lo, hi) = weights.support();
        let lo = lo.max(min);
        let hi = hi.min(max);
        let slots = layout.slots();
        let mut amps = BTreeMap::new();
        let mut norm_sq = 0.0;
        for j in lo..=hi {
            let w = weights.eval(j);
            if w > 0.0 {
                let mut label = vec![0i64; slots];
                label[0] = j;
                norm_sq += w * w;
                amps.insert(label, Complex64::new(w, 0.0));
            }
        }
        if amps.is_empty() {
            return Err(Error::Parameter("weight function has empty support in register bounds".into()));
        }
        let scale = 1.0 / norm_sq.sqrt();
        for a in amps.values_mut() {
            *a *= scale;
        }
        Ok(Self { layout, amps })
    }

    /// Normalized state from explicit (label, amplitude) pairs.
    pub fn from_amplitudes<I>(layout: RegisterLayout, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Label, Complex64)>,
    {
        let mut amps = BTreeMap::new();
        for (label, amp) in entries {
            layout.check_label(&label)?;
            if amps.insert(label, amp).is_some() {
                return Err(Error::Parameter("duplicate label in amplitude list".into()));
            }
        }
        let mut state = Self { layout, amps };
        let norm = state.norm();
        if norm <= 0.0 {
            return Err(Error::Parameter("state needs positive norm".into()));
        }
        state.scale(1.0 / norm);
        state.prune();
        Ok(state)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, label: &[i64]) -> Complex64 {
        self.amps.get(label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &Complex64)> {
        self.amps.iter()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, factor: f64) {
        for a in self.amps.values_mut() {
            *a *= factor;
        }
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() > PRUNE_EPS);
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL / 2.0 {
            self.scale(1.0 / norm);
        }
    }

    /// QFT over `Z_N` applied componentwise to every coordinate of a mod
    /// register: `|x> -> N^{-1/2} sum_a w_N^{ax} |a>` per coordinate
    /// (conjugated for the inverse).
    pub fn qft_mod(self, reg: usize, direction: Direction) -> Result<Self> {
        let range = self.layout.slot_range(reg)?;
        let modulus = match &self.layout.registers[reg] {
            Register::Mod { modulus, .. } => *modulus,
            Register::Int { .. } => {
                return Err(Error::Layout("qft_mod targets a mod register; lift the integer register first".into()))
            }
        };
        let n = modulus as i64;
        let sign = match direction {
            Direction::Forward => 1.0,
            Direction::Inverse => -1.0,
        };
        // Twiddle table for w_N^k.
        let twiddle: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let inv_sqrt = 1.0 / (n as f64).sqrt();
        let mut state = self;
        for slot in range {
            let mut next: BTreeMap<Label, Complex64> = BTreeMap::new();
            for (label, amp) in &state.amps {
                let x = label[slot];
                let base = *amp * inv_sqrt;
                let mut out = label.clone();
                for a in 0..n {
                    out[slot] = a;
                    let phase = twiddle[((a * x) % n) as usize];
                    *next.entry(out.clone()).or_default() += base * phase;
                }
            }
            state.amps = next;
            state.prune();
        }
        debug_assert!((state.norm() - 1.0).abs() < NORM_TOL);
        Ok(state)
    }

    /// Reinterprets the integer register in `Z_N` via `j -> j mod N`. The
    /// support must lie in `[-floor(N/2), ceil(N/2) - 1]` so the relabeling
    /// is injective; outside that window the (exponentially rare) collision
    /// event is reported as a precondition error.
    pub fn lift_int_to_mod(self, modulus: u64) -> Result<Self> {
        let idx = self
            .layout
            .registers
            .iter()
            .position(|r| matches!(r, Register::Int { .. }))
            .ok_or_else(|| Error::Layout("no integer register to lift".into()))?;
        if modulus < 2 {
            return Err(Error::Parameter("lift needs modulus >= 2".into()));
        }
        let slot = self.layout.slot_range(idx)?.start;
        let n = modulus as i64;
        let lo = -(n / 2);
        let hi = (n + 1) / 2 - 1;
        let mut amps = BTreeMap::new();
        for (label, amp) in self.amps {
            let j = label[slot];
            if j < lo || j > hi {
                return Err(Error::Precondition(format!(
                    "integer support {j} outside the promised range [{lo}, {hi}] for N = {modulus}"
                )));
            }
            let mut out = label;
            out[slot] = j.rem_euclid(n);
            amps.insert(out, amp);
        }
        let mut registers = self.layout.registers;
        registers[idx] = Register::Mod { modulus, arity: 1 };
        Ok(Self { layout: RegisterLayout::new(registers)?, amps })
    }

    /// Shifts the integer register by `delta` (a reversible classical map on
    /// labels), adjusting its bounds.
    pub fn shift_int_register(self, delta: i64) -> Result<Self> {
        let idx = self
            .layout
            .registers
            .iter()
            .position(|r| matches!(r, Register::Int { .. }))
            .ok_or_else(|| Error::Layout("no integer register to shift".into()))?;
        let slot = self.layout.slot_range(idx)?.start;
        let mut amps = BTreeMap::new();
        for (label, amp) in self.amps {
            let mut out = label;
            out[slot] += delta;
            amps.insert(out, amp);
        }
        let mut registers = self.layout.registers;
        if let Register::Int { min, max } = registers[idx] {
            registers[idx] = Register::Int { min: min + delta, max: max + delta };
        }
        Ok(Self { layout: RegisterLayout::new(registers)?, amps })
    }

    /// Applies an injective classical map to the values of one register
    /// in place (e.g. multiplication of a `Z_N` register by a unit).
    pub fn map_register_values(
        self,
        reg: usize,
        f: impl Fn(&[i64]) -> Vec<i64>,
    ) -> Result<Self> {
        let range = self.layout.slot_range(reg)?;
        let mut amps = BTreeMap::new();
        for (label, amp) in &self.amps {
            let new_val = f(&label[range.clone()]);
            let mut out = label.clone();
            if new_val.len() != range.len() {
                return Err(Error::Layout("register map must preserve arity".into()));
            }
            out[range.clone()].copy_from_slice(&new_val);
            self.layout.check_label(&out)?;
            if amps.insert(out, *amp).is_some() {
                return Err(Error::Precondition("register map is not injective on the support".into()));
            }
        }
        Ok(Self { layout: self.layout, amps })
    }

    /// Relabels the integer register through an injective map, replacing its
    /// bounds with `[new_min, new_max]`.
    pub fn relabel_int_register(
        self,
        f: impl Fn(i64) -> i64,
        new_min: i64,
        new_max: i64,
    ) -> Result<Self> {
        let idx = self
            .layout
            .registers
            .iter()
            .position(|r| matches!(r, Register::Int { .. }))
            .ok_or_else(|| Error::Layout("no integer register".into()))?;
        let slot = self.layout.slot_range(idx)?.start;
        let mut registers = self.layout.registers.clone();
        registers[idx] = Register::Int { min: new_min, max: new_max };
        let layout = RegisterLayout::new(registers)?;
        let mut amps = BTreeMap::new();
        for (label, amp) in &self.amps {
            let mut out = label.clone();
            out[slot] = f(label[slot]);
            layout.check_label(&out)?;
            if amps.insert(out, *amp).is_some() {
                return Err(Error::Precondition("integer relabeling is not injective".into()));
            }
        }
        Ok(Self { layout, amps })
    }

    /// Born-rule measurement of one register; the collapsed state is
    /// renormalized on the surviving support.
    pub fn measure(self, reg: usize, rng: &mut SimRng) -> Result<MeasurementOutcome> {
        let range = self.layout.slot_range(reg)?;
        self.measure_by(|label| label[range.clone()].to_vec(), rng)
    }

    /// Born-rule measurement of a register that exists only as a classical
    /// function of the stored labels.
    pub fn measure_derived(
        self,
        f: impl Fn(&[i64]) -> Vec<i64>,
        rng: &mut SimRng,
    ) -> Result<MeasurementOutcome> {
        self.measure_by(f, rng)
    }

    fn measure_by(
        self,
        value_of: impl Fn(&[i64]) -> Vec<i64>,
        rng: &mut SimRng,
    ) -> Result<MeasurementOutcome> {
        // Marginal over the derived value, grouped in label order.
        let mut marginal: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (label, amp) in &self.amps {
            *marginal.entry(value_of(label)).or_default() += amp.norm_sqr();
        }
        let total: f64 = marginal.values().sum();
        let mut u: f64 = rng.random::<f64>() * total;
        let mut chosen = None;
        for (value, mass) in &marginal {
            u -= mass;
            if u <= 0.0 {
                chosen = Some((value.clone(), *mass));
                break;
            }
        }
        let (value, mass) =
            chosen.unwrap_or_else(|| marginal.iter().next_back().map(|(v, m)| (v.clone(), *m)).unwrap());
        let mut amps = BTreeMap::new();
        for (label, amp) in self.amps {
            if value_of(&label) == value {
                amps.insert(label, amp);
            }
        }
        let mut collapsed = Self { layout: self.layout, amps };
        let norm = collapsed.norm();
        collapsed.scale(1.0 / norm);
        Ok(MeasurementOutcome { value, probability: mass / total, collapsed })
    }

    /// Reversible classical-function application `|src>|0> -> |src>|f(src)>`
    /// (or its inverse for [`ClassicalMode::Uncompute`]).
    pub fn apply_classical(
        self,
        sources: &[usize],
        target: usize,
        f: impl Fn(&[i64]) -> Vec<i64>,
        mode: ClassicalMode,
    ) -> Result<Self> {
        if sources.contains(&target) {
            return Err(Error::Layout("target register overlaps sources".into()));
        }
        let target_range = self.layout.slot_range(target)?;
        let source_ranges: Vec<_> = sources
            .iter()
            .map(|s| self.layout.slot_range(*s))
            .collect::<Result<_>>()?;
        let mut amps = BTreeMap::new();
        for (label, amp) in &self.amps {
            let mut args = Vec::new();
            for r in &source_ranges {
                args.extend_from_slice(&label[r.clone()]);
            }
            let image = f(&args);
            if image.len() != target_range.len() {
                return Err(Error::Layout("classical map output arity mismatch".into()));
            }
            let current = &label[target_range.clone()];
            let mut out = label.clone();
            match mode {
                ClassicalMode::Write => {
                    if current.iter().any(|v| *v != 0) {
                        return Err(Error::Precondition("write target register is not |0> on the support".into()));
                    }
                    out[target_range.clone()].copy_from_slice(&image);
                }
                ClassicalMode::Uncompute => {
                    if current != image.as_slice() {
                        return Err(Error::Inconsistent(
                            "uncompute target does not hold f(sources) on the support".into(),
                        ));
                    }
                    for v in &mut out[target_range.clone()] {
                        *v = 0;
                    }
                }
            }
            self.layout.check_label(&out)?;
            if amps.insert(out, *amp).is_some() {
                return Err(Error::Precondition("classical application collides on the support".into()));
            }
        }
        Ok(Self { layout: self.layout, amps })
    }

    /// Current amplitudes as nonnegative reals, after quotienting out one
    /// global phase. Errors if the state is not of that form.
    fn real_amplitudes(&self) -> Result<Vec<(Label, f64)>> {
        let pivot = self
            .amps
            .values()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .copied()
            .ok_or_else(|| Error::Precondition("empty state".into()))?;
        let phase = pivot / pivot.norm();
        let mut out = Vec::with_capacity(self.amps.len());
        for (label, amp) in &self.amps {
            let rotated = amp / phase;
            if rotated.im.abs() > 1e-9 || rotated.re < -1e-9 {
                return Err(Error::Precondition(
                    "amplitudes are not real-nonnegative up to a global phase".into(),
                ));
            }
            out.push((label.clone(), rotated.re.max(0.0)));
        }
        Ok(out)
    }

    /// Quantum rejection sampling: reshapes the amplitudes `pi(k)` to
    /// `p(k)/||p||`, succeeding with probability `||p||^2`. Requires
    /// `0 <= p(k) <= pi(k)` on every support label. On rejection the state
    /// is consumed.
    pub fn rejection_resample(
        self,
        p: impl Fn(&[i64]) -> f64,
        rng: &mut SimRng,
    ) -> Result<(bool, Option<Self>)> {
        let reals = self.real_amplitudes()?;
        let mut p_norm_sq = 0.0;
        let mut targets = Vec::with_capacity(reals.len());
        for (label, pi) in &reals {
            let pk = p(label);
            if !(0.0..=pi + 1e-9).contains(&pk) {
                return Err(Error::Precondition(format!(
                    "target weight {pk} exceeds amplitude {pi} at {:?}",
                    label
                )));
            }
            p_norm_sq += pk * pk;
            targets.push((label.clone(), pk));
        }
        let accept = rng.random::<f64>() < p_norm_sq;
        if !accept {
            return Ok((false, None));
        }
        let scale = 1.0 / p_norm_sq.sqrt();
        let amps: BTreeMap<Label, Complex64> = targets
            .into_iter()
            .filter(|(_, pk)| *pk > 0.0)
            .map(|(label, pk)| (label, Complex64::new(pk * scale, 0.0)))
            .collect();
        Ok((true, Some(Self { layout: self.layout, amps })))
    }

    /// Bernoulli success probability a rejection-resample to `p` would have.
    pub fn rejection_accept_probability(&self, p: impl Fn(&[i64]) -> f64) -> Result<f64> {
        let reals = self.real_amplitudes()?;
        let mut p_norm_sq = 0.0;
        for (label, pi) in &reals {
            let pk = p(label);
            if !(0.0..=pi + 1e-9).contains(&pk) {
                return Err(Error::Precondition("target weight exceeds amplitude".into()));
            }
            p_norm_sq += pk * pk;
        }
        Ok(p_norm_sq)
    }

    /// `||s1 - s2||_2` minimized over a global phase. Computed by direct
    /// subtraction at the optimal phase `arg <s1, s2>`, which stays accurate
    /// for nearly identical states.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::Layout("l2_distance needs identical layouts".into()));
        }
        let mut inner = Complex64::default();
        for (label, amp) in &self.amps {
            if let Some(b) = other.amps.get(label) {
                inner += amp.conj() * b;
            }
        }
        // Optimal rotation of `other` onto `self` is conj(inner)/|inner|.
        let phase =
            if inner.norm() > 0.0 { inner.conj() / inner.norm() } else { Complex64::new(1.0, 0.0) };
        let mut d_sq = 0.0;
        for (label, amp) in &self.amps {
            let b = other.amps.get(label).copied().unwrap_or_default();
            d_sq += (amp - b * phase).norm_sqr();
        }
        for (label, b) in &other.amps {
            if !self.amps.contains_key(label) {
                d_sq += b.norm_sqr();
            }
        }
        Ok(d_sq.sqrt())
    }

    /// Deterministic text listing, one support point per line, labels in
    /// lexicographic order: `label : re im`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (label, amp) in &self.amps {
            let parts: Vec<String> = label.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{} : {:+.12e} {:+.12e}", parts.join(" "), amp.re, amp.im);
        }
        out
    }
}
