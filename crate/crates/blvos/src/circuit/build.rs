//! Construction of block-based multiplier netlists.
//!
//! Each sub-product is an unsigned AND-array multiplier: a grid of partial
//! products reduced by carry-save half/full-adder rows and merged by a final
//! ripple row. The four sub-products are combined as
//! `LL + 2^k·(HL + LH) + 2^{2k}·HH` using two n-bit ripple adders, one
//! 2(n−k)-bit ripple adder and a half adder for the two merge carries.
//! Constant-zero bits (from truncation, gating, or degenerate widths) are
//! folded away during construction, so the emitted graph only contains gates
//! that real hardware would keep.

use super::{
    BlockTag, DelayTable, Gate, GateKind, MultiplierSpec, NetId, Netlist, OutputBit,
};
use crate::error::Error;

/// Split an n-bit operand at bit `k`: `x = high·2^k + low`.
pub fn decompose_operand(x: u64, n: u32, k: u32) -> (u64, u64) {
    debug_assert!(0 < k && k < n, "0 < k < n required");
    debug_assert!(n >= 64 || x < 1 << n, "operand must fit in n bits");
    (x >> k, x & ((1 << k) - 1))
}

/// A bit during construction: a real net or a constant zero.
type Bit = Option<NetId>;

struct Builder<'a> {
    gates: Vec<Gate>,
    next_net: u32,
    tag: BlockTag,
    delays: &'a DelayTable,
}

impl<'a> Builder<'a> {
    fn new(input_count: u32, delays: &'a DelayTable) -> Self {
        Builder {
            gates: Vec::new(),
            next_net: input_count,
            tag: BlockTag::Glue,
            delays,
        }
    }

    fn emit(&mut self, kind: GateKind, inputs: Vec<NetId>) -> NetId {
        let out = NetId(self.next_net);
        self.next_net += 1;
        self.gates.push(Gate {
            kind,
            block_tag: self.tag,
            inputs,
            output: out,
            nominal_delay: self.delays.nominal_delay(kind),
        });
        out
    }

    fn and(&mut self, x: Bit, y: Bit) -> Bit {
        match (x, y) {
            (Some(a), Some(b)) => Some(self.emit(GateKind::And2, vec![a, b])),
            _ => None,
        }
    }

    fn or(&mut self, x: Bit, y: Bit) -> Bit {
        match (x, y) {
            (Some(a), Some(b)) => Some(self.emit(GateKind::Or2, vec![a, b])),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        }
    }

    fn xor(&mut self, x: Bit, y: Bit) -> Bit {
        match (x, y) {
            (Some(a), Some(b)) => Some(self.emit(GateKind::Xor2, vec![a, b])),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        }
    }

    /// Full adder with constant folding; degenerates to a half adder or a
    /// plain wire when inputs are constant zero.
    fn full_adder(&mut self, x: Bit, y: Bit, z: Bit) -> (Bit, Bit) {
        let xy = self.xor(x, y);
        let sum = self.xor(xy, z);
        let c1 = self.and(x, y);
        let c2 = self.and(xy, z);
        let carry = self.or(c1, c2);
        (sum, carry)
    }

    /// Sum-only full adder for positions whose carry-out is discarded.
    fn full_adder_sum(&mut self, x: Bit, y: Bit, z: Bit) -> Bit {
        let xy = self.xor(x, y);
        self.xor(xy, z)
    }

    /// Unsigned AND-array multiplier over `a` (p bits) × `b` (q bits).
    /// Returns p+q product bits; partial products falling in global product
    /// columns below `drop_cols` are not generated.
    fn array_product(&mut self, a: &[Bit], b: &[Bit], drop_cols: usize) -> Vec<Bit> {
        let p = a.len();
        let q = b.len();
        let pp = |builder: &mut Self, j: usize, i: usize| -> Bit {
            if i + j < drop_cols {
                None
            } else {
                builder.and(a[i], b[j])
            }
        };

        let mut out: Vec<Bit> = Vec::with_capacity(p + q);
        // Row 0: bare partial products.
        let mut sums: Vec<Bit> = (0..p).map(|i| pp(self, 0, i)).collect();
        let mut carries: Vec<Bit> = vec![None; p];
        out.push(sums[0]);

        // Carry-save rows: row j adds partial product row j to the running
        // sum/carry vectors; the weight-j sum bit falls out as a product bit.
        for j in 1..q {
            let mut next_sums = Vec::with_capacity(p);
            let mut next_carries = Vec::with_capacity(p);
            for i in 0..p {
                let x = pp(self, j, i);
                let y = if i + 1 < p { sums[i + 1] } else { None };
                let z = carries[i];
                let (s, c) = self.full_adder(x, y, z);
                next_sums.push(s);
                next_carries.push(c);
            }
            sums = next_sums;
            carries = next_carries;
            out.push(sums[0]);
        }

        // Final ripple row merging the remaining sums and carries. The top
        // carry-out is provably zero (the product fits p+q bits) and is not
        // built.
        let mut carry: Bit = None;
        for m in 0..p {
            let s = if m + 1 < p { sums[m + 1] } else { None };
            let c = carries[m];
            if m + 1 < p {
                let (bit, co) = self.full_adder(s, c, carry);
                out.push(bit);
                carry = co;
            } else {
                out.push(self.full_adder_sum(s, c, carry));
            }
        }
        debug_assert_eq!(out.len(), p + q);
        out
    }

    /// Ripple-carry adder over `width` positions; operands shorter than
    /// `width` are zero-extended. Returns the sum bits and, when
    /// `want_carry`, the final carry-out.
    fn ripple_add(&mut self, a: &[Bit], b: &[Bit], width: usize, want_carry: bool) -> (Vec<Bit>, Bit) {
        let at = |v: &[Bit], i: usize| -> Bit { v.get(i).copied().flatten() };
        let mut out = Vec::with_capacity(width);
        let mut carry: Bit = None;
        for i in 0..width {
            let x = at(a, i);
            let y = at(b, i);
            if i + 1 < width || want_carry {
                let (s, c) = self.full_adder(x, y, carry);
                out.push(s);
                carry = c;
            } else {
                out.push(self.full_adder_sum(x, y, carry));
                carry = None;
            }
        }
        (out, carry)
    }
}

/// Build the netlist for one design point.
pub fn build_multiplier(spec: &MultiplierSpec, delays: &DelayTable) -> Result<Netlist, Error> {
    spec.validate()?;
    delays.validate()?;
    let n = spec.n as usize;
    let k = spec.k as usize;
    let t = spec.truncation as usize;
    let gated = |tag: BlockTag| spec.gated_blocks.contains(&tag);

    let mut bld = Builder::new(2 * n as u32, delays);

    let a_bits: Vec<Bit> = (0..n).map(|i| Some(NetId(i as u32))).collect();
    let b_bits: Vec<Bit> = (0..n).map(|i| Some(NetId((n + i) as u32))).collect();
    let (a_lo, a_hi) = a_bits.split_at(k);
    let (b_lo, b_hi) = b_bits.split_at(k);

    let zeros = |width: usize| vec![None; width];

    bld.tag = BlockTag::Ll;
    let ll = if gated(BlockTag::Ll) {
        zeros(2 * k)
    } else {
        bld.array_product(a_lo, b_lo, t)
    };
    bld.tag = BlockTag::Hl;
    let hl = if gated(BlockTag::Hl) {
        zeros(n)
    } else {
        bld.array_product(a_hi, b_lo, t.saturating_sub(k))
    };
    bld.tag = BlockTag::Lh;
    let lh = if gated(BlockTag::Lh) {
        zeros(n)
    } else {
        bld.array_product(a_lo, b_hi, t.saturating_sub(k))
    };
    bld.tag = BlockTag::Hh;
    let hh = bld.array_product(a_hi, b_hi, t.saturating_sub(2 * k));

    // Middle sum: HL + LH.
    bld.tag = BlockTag::Adder1;
    let (mid, c1) = bld.ripple_add(&hl, &lh, n, true);

    // Fold the upper LL bits into the middle sum.
    bld.tag = BlockTag::Adder2;
    let ll_high = &ll[k..2 * k];
    let (z, c2) = bld.ripple_add(&mid, ll_high, n, true);

    // The two merge carries, combined by a half adder. Its own carry bit has
    // weight n+k+1; when that exceeds the top product column (k = n−1) the
    // bit is provably zero and is not built.
    bld.tag = BlockTag::HaFinal;
    let w3 = 2 * (n - k);
    let s = bld.xor(c1, c2);
    let ha_c = if n - k + 1 < w3 { bld.and(c1, c2) } else { None };

    // Upper output bits: HH plus the high part of the folded middle sum plus
    // the merge-carry bits.
    bld.tag = BlockTag::Adder3;
    let mut opb: Vec<Bit> = vec![None; w3];
    for (i, slot) in opb.iter_mut().enumerate().take(n - k) {
        *slot = z[k + i];
    }
    opb[n - k] = s;
    if n - k + 1 < w3 {
        opb[n - k + 1] = ha_c;
    }
    let (x, _) = bld.ripple_add(&hh, &opb, w3, false);

    let mut primary_outputs = Vec::with_capacity(2 * n);
    let fold = |bit: Bit| match bit {
        Some(net) => OutputBit::Net(net),
        None => OutputBit::Zero,
    };
    for &bit in ll.iter().take(k) {
        primary_outputs.push(fold(bit));
    }
    for &bit in z.iter().take(k) {
        primary_outputs.push(fold(bit));
    }
    for &bit in &x {
        primary_outputs.push(fold(bit));
    }
    debug_assert_eq!(primary_outputs.len(), 2 * n);

    Ok(Netlist {
        n: spec.n,
        k: spec.k,
        gates: bld.gates,
        primary_inputs: (0..2 * n as u32).map(NetId).collect(),
        primary_outputs,
        net_count: bld.next_net,
    })
}
