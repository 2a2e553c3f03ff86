// SPDX-License-Identifier: Apache-2.0

//! Verilog-2001 generation for an elaborated [`CircuitModel`].
//!
//! Every counted cell is instantiated from a small primitive library
//! (`primitives.v`), one instance per line, so the emitted text can be read
//! back into a [`CellCensus`] and compared against the cost model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::approx::NeuronApproxPlan;
use crate::cost::{counter_width, CellCensus};
use crate::quant::Layer;
use crate::sim::{CircuitModel, MultiCycleNeuron, NeuronDatapath};
use crate::{bits_for, Error, Result};

pub const PRIMITIVES: &str = r#"// SPDX-License-Identifier: Apache-2.0
// Cell primitives. Every counted cell of the cost model maps to one of these.

module st_reg #(parameter W = 1, parameter [W-1:0] INIT = 0) (
  input clk, input rst, input en,
  input [W-1:0] d, output reg [W-1:0] q
);
  always @(posedge clk)
    if (rst) q <= INIT;
    else if (en) q <= d;
endmodule

module st_mux_tree #(parameter N = 2, parameter W = 1, parameter SW = 1) (
  input [N*W-1:0] d, input [SW-1:0] sel, output [W-1:0] y
);
  assign y = d[sel*W +: W];
endmodule

module st_barrel #(parameter S = 1, parameter WI = 1, parameter WO = 2) (
  input [WI-1:0] a, input [S-1:0] sh, output [WO-1:0] y
);
  assign y = {{(WO-WI){1'b0}}, a} << sh;
endmodule

module st_addsub #(parameter W = 1) (
  input [W-1:0] a, input [W-1:0] b, input sub, output [W-1:0] y
);
  assign y = sub ? a - b : a + b;
endmodule

module st_add #(parameter W = 1) (
  input [W-1:0] a, input [W-1:0] b, output [W-1:0] y, output co
);
  assign {co, y} = a + b;
endmodule

module st_inv #(parameter W = 1) (input [W-1:0] a, output [W-1:0] y);
  assign y = ~a;
endmodule

module st_cmp #(parameter W = 1, parameter SIGNED = 1) (
  input [W-1:0] a, input [W-1:0] b, output gt
);
  assign gt = SIGNED ? ($signed(a) > $signed(b)) : (a > b);
endmodule

module st_qrelu #(parameter W = 2, parameter T = 0, parameter OB = 4) (
  input [W-1:0] acc, output [OB-1:0] q
);
  wire [W-1:0] sh = acc[W-1] ? {W{1'b0}} : (acc >> T);
  assign q = (sh > {OB{1'b1}}) ? {OB{1'b1}} : sh[OB-1:0];
endmodule
"#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlBundle {
    /// Design files, `primitives.v` first and `top.v` last.
    pub files: Vec<RtlFile>,
    pub testbench: Option<RtlFile>,
    pub manifest: Vec<ManifestEntry>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl RtlBundle {
    pub fn file(&self, name: &str) -> Option<&RtlFile> {
        self.files.iter().chain(self.testbench.as_ref()).find(|f| f.name == name)
    }

    fn refresh_manifest(&mut self) {
        self.manifest = self
            .files
            .iter()
            .chain(self.testbench.as_ref())
            .map(|f| ManifestEntry {
                name: f.name.clone(),
                sha256: sha256_hex(f.contents.as_bytes()),
                bytes: f.contents.len(),
            })
            .collect();
    }

    /// Attach a testbench and recompute the manifest.
    pub fn with_testbench(mut self, contents: String) -> Self {
        self.testbench = Some(RtlFile {
            name: "tb_top.v".to_string(),
            contents,
        });
        self.refresh_manifest();
        self
    }

    pub fn manifest_json(&self) -> String {
        let mut s = String::from("{\n  \"files\": [\n");
        for (i, e) in self.manifest.iter().enumerate() {
            let sep = if i + 1 == self.manifest.len() { "" } else { "," };
            let _ = writeln!(
                s,
                "    {{\"name\": \"{}\", \"sha256\": \"{}\", \"bytes\": {}}}{sep}",
                e.name, e.sha256, e.bytes
            );
        }
        s.push_str("  ]\n}\n");
        s
    }

    /// Hash over the manifest; a function of the circuit alone.
    pub fn bundle_hash(&self) -> String {
        sha256_hex(self.manifest_json().as_bytes())
    }
}

fn hex(width: u32, value: i64) -> String {
    let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
    format!("{width}'h{:x}", (value as u64) & mask)
}

fn neuron_module_name(layer: Layer, index: usize) -> String {
    match layer {
        Layer::Hidden => format!("hidden_neuron_{index}"),
        Layer::Output => format!("output_neuron_{index}"),
    }
}

/// Zero-extend `inner` (of `inner_w` bits) to `w` bits after shifting left by `shift`.
fn place(inner: &str, inner_w: u32, shift: u32, w: u32) -> String {
    let pad = w - inner_w - shift;
    let mut parts = Vec::new();
    if pad > 0 {
        parts.push(format!("{pad}'b0"));
    }
    parts.push(inner.to_string());
    if shift > 0 {
        parts.push(format!("{shift}'b0"));
    }
    format!("{{{}}}", parts.join(", "))
}

struct Ctx {
    cw: u32,
    n: usize,
    h: usize,
    c: usize,
    latency: u32,
    t_hidden: u32,
    t_output: u32,
    out_bits: u32,
    wv: u32,
}

fn header(s: &mut String, what: &str) {
    s.push_str("// SPDX-License-Identifier: Apache-2.0\n");
    let _ = writeln!(s, "// {what}\n");
}

fn neuron_ports(s: &mut String, ctx: &Ctx, name: &str, in_bits: u32, layer: Layer, w: u32) {
    let _ = writeln!(s, "module {name} (");
    let _ = writeln!(s, "  input clk, input rst, input en,");
    let _ = writeln!(s, "  input [{}:0] sel,", ctx.cw - 1);
    let _ = writeln!(s, "  input [{}:0] x,", in_bits - 1);
    match layer {
        Layer::Hidden => {
            let _ = writeln!(s, "  output [{}:0] value,", w - 1);
            let _ = writeln!(s, "  output [{}:0] code", ctx.out_bits - 1);
        }
        Layer::Output => {
            let _ = writeln!(s, "  output [{}:0] value", ctx.wv - 1);
        }
    }
    s.push_str(");\n");
}

fn neuron_tail(s: &mut String, ctx: &Ctx, layer: Layer, w: u32, source: &str) {
    match layer {
        Layer::Hidden => {
            let _ = writeln!(s, "  assign value = {source};");
            let _ = writeln!(
                s,
                "  st_qrelu #(.W({w}), .T({}), .OB({})) u_qrelu (.acc({source}), .q(code));",
                ctx.t_hidden, ctx.out_bits
            );
        }
        Layer::Output => {
            let _ = writeln!(s, "  wire signed [{}:0] full = {source};", w - 1);
            let _ = writeln!(s, "  wire signed [{}:0] shifted = full >>> {};", w - 1, ctx.t_output);
            let _ = writeln!(s, "  assign value = shifted[{}:0];", ctx.wv - 1);
        }
    }
    s.push_str("endmodule\n");
}

fn emit_multi_cycle(ctx: &Ctx, layer: Layer, index: usize, n: &MultiCycleNeuron, in_bits: u32, w: u32) -> String {
    let name = neuron_module_name(layer, index);
    let fan_in = n.zero.len();
    let max_res = n.max_residual();
    let r = bits_for(max_res as u64);
    let cfg_w = r + 2;
    let wo = in_bits + max_res;
    let mut s = String::new();
    header(&mut s, &format!("{name}: multi-cycle, bias {}, common shift {}", n.bias, n.common_shift));
    neuron_ports(&mut s, ctx, &name, in_bits, layer, w);

    // table entry i = {zero, negative, residual}; entry 0 in the low bits
    let mut table = String::new();
    for i in (0..fan_in).rev() {
        let mut bits = String::new();
        bits.push(if n.zero[i] { '1' } else { '0' });
        bits.push(if n.negative[i] && !n.zero[i] { '1' } else { '0' });
        let res = if n.zero[i] { 0 } else { n.residuals[i] };
        for b in (0..r).rev() {
            bits.push(if (res >> b) & 1 == 1 { '1' } else { '0' });
        }
        if !table.is_empty() {
            table.push('_');
        }
        table.push_str(&bits);
    }
    let _ = writeln!(s, "  wire [{}:0] cfg;", cfg_w - 1);
    let _ = writeln!(
        s,
        "  st_mux_tree #(.N({fan_in}), .W({cfg_w}), .SW({})) u_weight (.d({}'b{table}), .sel(sel), .y(cfg));",
        ctx.cw,
        fan_in as u32 * cfg_w
    );
    let _ = writeln!(s, "  wire [{}:0] shifted;", wo - 1);
    if r > 0 {
        let _ = writeln!(
            s,
            "  st_barrel #(.S({r}), .WI({in_bits}), .WO({wo})) u_shift (.a(x), .sh(cfg[{}:0]), .y(shifted));",
            r - 1
        );
    } else {
        s.push_str("  assign shifted = x;\n");
    }
    let _ = writeln!(s, "  wire [{}:0] term = {};", w - 1, place("shifted", wo, n.common_shift, w));
    let _ = writeln!(s, "  wire [{}:0] acc;", w - 1);
    let _ = writeln!(s, "  wire [{}:0] next;", w - 1);
    let _ = writeln!(s, "  st_addsub #(.W({w})) u_addsub (.a(acc), .b(term), .sub(cfg[{r}]), .y(next));");
    let _ = writeln!(
        s,
        "  st_reg #(.W({w}), .INIT({})) u_acc (.clk(clk), .rst(rst), .en(en & ~cfg[{}]), .d(next), .q(acc));",
        hex(w, n.bias),
        r + 1
    );
    neuron_tail(&mut s, ctx, layer, w, "acc");
    s
}

fn emit_single_cycle(ctx: &Ctx, layer: Layer, index: usize, p: &NeuronApproxPlan, fan_in: usize, in_bits: u32, w: u32) -> String {
    let name = neuron_module_name(layer, index);
    let (i_first, b_first, neg_first) = p.first();
    let (i_second, b_second, neg_second) = p.second();
    let mut s = String::new();
    header(
        &mut s,
        &format!(
            "{name}: single-cycle on inputs {} and {}, leading one at column {}",
            p.i1, p.i2, p.leading_one
        ),
    );
    neuron_ports(&mut s, ctx, &name, in_bits, layer, w);

    // hit entry i = {is_second, is_first}
    let mut table = String::new();
    for i in (0..fan_in).rev() {
        if !table.is_empty() {
            table.push('_');
        }
        table.push(if i == i_second { '1' } else { '0' });
        table.push(if i == i_first { '1' } else { '0' });
    }
    s.push_str("  wire [1:0] hit;\n");
    let _ = writeln!(
        s,
        "  st_mux_tree #(.N({fan_in}), .W(2), .SW({})) u_hit (.d({}'b{table}), .sel(sel), .y(hit));",
        ctx.cw,
        2 * fan_in
    );
    s.push_str("  wire first_q;\n");
    let _ = writeln!(
        s,
        "  st_reg #(.W(1), .INIT(1'b0)) u_first (.clk(clk), .rst(rst), .en(en & hit[0]), .d(x[{b_first}]), .q(first_q));"
    );
    let second = format!("x[{b_second}]");
    // mixed signs: r = pos + ~neg = pos - neg + 1
    let (a, b, lut) = if neg_first == neg_second {
        let sign = if neg_first { -1 } else { 1 };
        ("first_q".to_string(), second, [0, sign, 2 * sign])
    } else {
        let (pos, neg) = if neg_first {
            (second, "first_q".to_string())
        } else {
            ("first_q".to_string(), second)
        };
        s.push_str("  wire neg_n;\n");
        let _ = writeln!(s, "  st_inv #(.W(1)) u_inv (.a({neg}), .y(neg_n));");
        (pos, "neg_n".to_string(), [-1, 0, 1])
    };
    s.push_str("  wire sum_bit, carry_bit;\n");
    let _ = writeln!(s, "  st_add #(.W(1)) u_add (.a({a}), .b({b}), .y(sum_bit), .co(carry_bit));");
    s.push_str("  wire [1:0] r;\n");
    s.push_str(
        "  st_reg #(.W(2), .INIT(2'b00)) u_result (.clk(clk), .rst(rst), .en(en & hit[1]), .d({carry_bit, sum_bit}), .q(r));\n",
    );
    let l = p.leading_one;
    let _ = writeln!(s, "  wire [{}:0] realigned;", w - 1);
    let _ = writeln!(
        s,
        "  assign realigned = (r == 2'd0) ? {} : (r == 2'd1) ? {} : {};",
        hex(w, lut[0] << l),
        hex(w, lut[1] << l),
        hex(w, lut[2] << l)
    );
    // the register only holds a meaningful value once the second input is in
    neuron_tail(&mut s, ctx, layer, w, "realigned");
    s
}

fn emit_controller(ctx: &Ctx) -> String {
    let cw = ctx.cw;
    let n = ctx.n as i64;
    let nh = (ctx.n + ctx.h) as i64;
    let mut s = String::new();
    header(&mut s, &format!("controller: {} cycles, {cw}-bit step counter", ctx.latency));
    s.push_str("module controller (\n  input clk, input rst,\n");
    let _ = writeln!(s, "  output [{}:0] t, output [{}:0] t_out, output [{}:0] t_arg,", cw - 1, cw - 1, cw - 1);
    s.push_str("  output en_in, output en_out, output en_arg, output done\n);\n");
    let _ = writeln!(s, "  wire [{}:0] t_next;", cw - 1);
    s.push_str("  wire lt_in, lt_out, lt_end;\n");
    let _ = writeln!(
        s,
        "  st_reg #(.W({cw}), .INIT({})) u_count (.clk(clk), .rst(rst), .en(~done), .d(t_next), .q(t));",
        hex(cw, 0)
    );
    let _ = writeln!(s, "  st_add #(.W({cw})) u_inc (.a(t), .b({}), .y(t_next), .co());", hex(cw, 1));
    let _ = writeln!(s, "  st_add #(.W({cw})) u_off_out (.a(t), .b({}), .y(t_out), .co());", hex(cw, -n));
    let _ = writeln!(s, "  st_add #(.W({cw})) u_off_arg (.a(t), .b({}), .y(t_arg), .co());", hex(cw, -nh));
    let _ = writeln!(s, "  st_cmp #(.W({cw}), .SIGNED(0)) u_lt_in (.a({}), .b(t), .gt(lt_in));", hex(cw, n));
    let _ = writeln!(s, "  st_cmp #(.W({cw}), .SIGNED(0)) u_lt_out (.a({}), .b(t), .gt(lt_out));", hex(cw, nh));
    let _ = writeln!(
        s,
        "  st_cmp #(.W({cw}), .SIGNED(0)) u_lt_end (.a({}), .b(t), .gt(lt_end));",
        hex(cw, ctx.latency as i64)
    );
    s.push_str("  assign en_in = lt_in;\n");
    s.push_str("  assign en_out = ~lt_in & lt_out;\n");
    s.push_str("  assign en_arg = ~lt_out & lt_end;\n");
    s.push_str("  assign done = ~lt_end;\n");
    s.push_str("endmodule\n");
    s
}

fn index_bits(c: usize) -> u32 {
    bits_for(c.saturating_sub(1) as u64).max(1)
}

fn emit_argmax(ctx: &Ctx) -> String {
    let (c, wv, cw) = (ctx.c, ctx.wv, ctx.cw);
    let ib = index_bits(c);
    let mut s = String::new();
    header(&mut s, &format!("argmax over {c} classes of {wv}-bit values"));
    s.push_str("module argmax (\n  input clk, input rst, input en,\n");
    let _ = writeln!(s, "  input [{}:0] sel,", cw - 1);
    let _ = writeln!(s, "  input [{}:0] values,", c as u32 * wv - 1);
    let _ = writeln!(s, "  output [{}:0] index\n);", ib - 1);
    let _ = writeln!(s, "  wire [{}:0] cand, best;", wv - 1);
    s.push_str("  wire gt;\n");
    let _ = writeln!(
        s,
        "  st_mux_tree #(.N({c}), .W({wv}), .SW({cw})) u_select (.d(values), .sel(sel), .y(cand));"
    );
    let _ = writeln!(s, "  st_cmp #(.W({wv}), .SIGNED(1)) u_cmp (.a(cand), .b(best), .gt(gt));");
    let _ = writeln!(
        s,
        "  st_reg #(.W({wv}), .INIT({})) u_best (.clk(clk), .rst(rst), .en(en & gt), .d(cand), .q(best));",
        hex(wv, -(1i64 << (wv - 1)))
    );
    let _ = writeln!(
        s,
        "  st_reg #(.W({ib}), .INIT({})) u_index (.clk(clk), .rst(rst), .en(en & gt), .d(sel[{}:0]), .q(index));",
        hex(ib, 0),
        ib - 1
    );
    s.push_str("endmodule\n");
    s
}

fn emit_top(ctx: &Ctx, circuit: &CircuitModel) -> String {
    let (n, h, c, cw, ob, wv) = (ctx.n, ctx.h, ctx.c, ctx.cw, ctx.out_bits, ctx.wv);
    let ib = index_bits(c);
    let in_bits = circuit.spec.input_bits;
    let wh = circuit.hidden_acc_width;
    let mut s = String::new();
    header(&mut s, &format!("top: {n} inputs, {h} hidden, {c} classes"));
    s.push_str("module top (\n  input clk, input rst,\n");
    let _ = writeln!(s, "  input [{}:0] x,", in_bits - 1);
    let _ = writeln!(s, "  output [{}:0] class_index,", ib - 1);
    s.push_str("  output done\n);\n");
    let _ = writeln!(s, "  wire [{}:0] t, t_out, t_arg;", cw - 1);
    s.push_str("  wire en_in, en_out, en_arg;\n");
    s.push_str(
        "  controller u_ctrl (.clk(clk), .rst(rst), .t(t), .t_out(t_out), .t_arg(t_arg), .en_in(en_in), .en_out(en_out), .en_arg(en_arg), .done(done));\n",
    );
    let _ = writeln!(s, "  wire [{}:0] hidden_codes;", h as u32 * ob - 1);
    let _ = writeln!(s, "  wire [{}:0] output_values;", c as u32 * wv - 1);
    let _ = writeln!(s, "  wire [{}:0] layer_in;", ob - 1);
    for j in 0..h {
        let _ = writeln!(s, "  wire [{}:0] hidden_value_{j};", wh - 1);
        let _ = writeln!(
            s,
            "  hidden_neuron_{j} u_hidden_{j} (.clk(clk), .rst(rst), .en(en_in), .sel(t), .x(x), .value(hidden_value_{j}), .code(hidden_codes[{}:{}]));",
            (j as u32 + 1) * ob - 1,
            j as u32 * ob
        );
    }
    let _ = writeln!(
        s,
        "  st_mux_tree #(.N({h}), .W({ob}), .SW({cw})) u_layer_mux (.d(hidden_codes), .sel(t_out), .y(layer_in));"
    );
    for k in 0..c {
        let _ = writeln!(
            s,
            "  output_neuron_{k} u_output_{k} (.clk(clk), .rst(rst), .en(en_out), .sel(t_out), .x(layer_in), .value(output_values[{}:{}]));",
            (k as u32 + 1) * wv - 1,
            k as u32 * wv
        );
    }
    s.push_str(
        "  argmax u_argmax (.clk(clk), .rst(rst), .en(en_arg), .sel(t_arg), .values(output_values), .index(class_index));\n",
    );
    s.push_str("endmodule\n");
    s
}

fn context(circuit: &CircuitModel) -> Ctx {
    Ctx {
        cw: counter_width(circuit.latency()),
        n: circuit.n_inputs(),
        h: circuit.n_hidden(),
        c: circuit.n_classes(),
        latency: circuit.latency(),
        t_hidden: circuit.spec.t_hidden,
        t_output: circuit.spec.t_output,
        out_bits: circuit.spec.qrelu_out_bits,
        wv: circuit.output_value_width(),
    }
}

/// Emit the design files for `circuit`. Identical circuits give identical bytes.
pub fn emit_rtl(circuit: &CircuitModel) -> Result<RtlBundle> {
    circuit.validate()?;
    let ctx = context(circuit);
    if ctx.cw > 32 {
        return Err(Error::WidthOverflow(format!("{}-bit step counter", ctx.cw)));
    }
    let mut files = Vec::new();
    let mut push = |name: String, contents: String| files.push(RtlFile { name, contents });
    push("primitives.v".into(), PRIMITIVES.into());
    push("controller.v".into(), emit_controller(&ctx));
    for layer in [Layer::Hidden, Layer::Output] {
        let in_bits = circuit.spec.layer_input_bits(layer);
        let w = circuit.acc_width(layer);
        let fan_in = circuit.fan_in(layer);
        for (i, d) in circuit.layer(layer).iter().enumerate() {
            let text = match d {
                NeuronDatapath::MultiCycle(m) => emit_multi_cycle(&ctx, layer, i, m, in_bits, w),
                NeuronDatapath::SingleCycle(p) => emit_single_cycle(&ctx, layer, i, p, fan_in, in_bits, w),
            };
            push(format!("{}.v", neuron_module_name(layer, i)), text);
        }
    }
    push("argmax.v".into(), emit_argmax(&ctx));
    push("top.v".into(), emit_top(&ctx, circuit));
    let mut bundle = RtlBundle {
        files,
        testbench: None,
        manifest: Vec::new(),
    };
    bundle.refresh_manifest();
    Ok(bundle)
}

/// Self-checking testbench: one `run_vector` call per vector, each
/// comparing the final class against `expected`.
pub fn emit_testbench(circuit: &CircuitModel, vectors: &[Vec<u8>], expected: &[usize]) -> Result<String> {
    if vectors.len() != expected.len() {
        return Err(Error::VectorMismatch(format!(
            "{} vectors but {} expected classes",
            vectors.len(),
            expected.len()
        )));
    }
    let ctx = context(circuit);
    let in_bits = circuit.spec.input_bits;
    let ib = index_bits(ctx.c);
    let packed_w = ctx.n as u32 * in_bits;
    let mut s = String::new();
    header(&mut s, &format!("testbench: {} vectors, {} cycles each", vectors.len(), ctx.latency));
    s.push_str("`timescale 1ns/1ps\nmodule tb_top;\n");
    s.push_str("  reg clk = 1'b0;\n  reg rst = 1'b1;\n");
    let _ = writeln!(s, "  reg [{}:0] x = {};", in_bits - 1, hex(in_bits, 0));
    let _ = writeln!(s, "  wire [{}:0] class_index;", ib - 1);
    s.push_str("  wire done;\n  integer errors = 0;\n  integer vectors = 0;\n");
    s.push_str("  top dut (.clk(clk), .rst(rst), .x(x), .class_index(class_index), .done(done));\n");
    s.push_str("  always #5 clk = ~clk;\n\n");
    s.push_str("  task run_vector;\n");
    let _ = writeln!(s, "    input [{}:0] codes;", packed_w - 1);
    let _ = writeln!(s, "    input [{}:0] expected;", ib - 1);
    s.push_str("    integer i;\n    begin\n");
    s.push_str("      rst = 1'b1;\n      @(posedge clk); #1;\n      rst = 1'b0;\n");
    let _ = writeln!(s, "      for (i = 0; i < {}; i = i + 1) begin", ctx.n);
    let _ = writeln!(s, "        x = codes[i*{in_bits} +: {in_bits}];");
    s.push_str("        @(posedge clk); #1;\n      end\n");
    let _ = writeln!(s, "      repeat ({}) begin @(posedge clk); #1; end", ctx.h + ctx.c);
    s.push_str("      vectors = vectors + 1;\n");
    s.push_str("      if (!done || class_index !== expected) begin\n");
    s.push_str("        errors = errors + 1;\n");
    s.push_str("        $display(\"FAIL vector %0d: got %0d expected %0d\", vectors - 1, class_index, expected);\n");
    s.push_str("      end\n    end\n  endtask\n\n");
    s.push_str("  initial begin\n");
    for (v, &e) in vectors.iter().zip(expected) {
        if v.len() != ctx.n {
            return Err(Error::VectorMismatch(format!("vector has {} codes, circuit takes {}", v.len(), ctx.n)));
        }
        if e >= ctx.c {
            return Err(Error::VectorMismatch(format!("expected class {e} out of range")));
        }
        let mut packed = String::new();
        for &code in v.iter().rev() {
            if code as u32 > circuit.spec.input_max() {
                return Err(Error::VectorMismatch(format!("input code {code} exceeds {in_bits} bits")));
            }
            let _ = write!(packed, "{code:x}");
        }
        let lit = if in_bits == 4 {
            format!("{packed_w}'h{packed}")
        } else {
            let mut bits = String::new();
            for &code in v.iter().rev() {
                for b in (0..in_bits).rev() {
                    bits.push(if (code >> b) & 1 == 1 { '1' } else { '0' });
                }
            }
            format!("{packed_w}'b{bits}")
        };
        let _ = writeln!(s, "    run_vector({lit}, {});", hex(ib, e as i64));
    }
    s.push_str("    if (errors == 0) $display(\"PASS %0d vectors\", vectors);\n");
    s.push_str("    else $display(\"FAIL %0d of %0d vectors\", errors, vectors);\n");
    s.push_str("    $finish;\n  end\nendmodule\n");
    Ok(s)
}

fn param_map(line: &str) -> BTreeMap<&str, u64> {
    let mut out = BTreeMap::new();
    let Some(start) = line.find("#(") else { return out };
    let mut rest = &line[start + 2..];
    while let Some(dot) = rest.find('.') {
        rest = &rest[dot + 1..];
        let Some(open) = rest.find('(') else { break };
        let key = &rest[..open];
        let Some(close) = rest.find(')') else { break };
        if let Ok(v) = rest[open + 1..close].parse::<u64>() {
            out.insert(key, v);
        }
        rest = &rest[close + 1..];
        if rest.trim_start().starts_with(')') {
            break;
        }
    }
    out
}

/// Cell census of one emitted file, read back from its primitive instances.
pub fn census_from_text(text: &str) -> CellCensus {
    let mut c = CellCensus::default();
    for line in text.lines().map(str::trim) {
        if !line.starts_with("st_") || !line.contains(" u_") {
            continue;
        }
        let prim = &line[..line.find(' ').unwrap_or(line.len())];
        let p = param_map(line);
        let g = |k: &str| p.get(k).copied().unwrap_or(0);
        match prim {
            "st_reg" => c.dff += g("W"),
            "st_mux_tree" => c.mux2 += g("N").saturating_sub(1) * g("W"),
            "st_barrel" => c.shifter_stage += g("S") * g("WO"),
            "st_addsub" => {
                c.full_adder += g("W");
                c.inverter += g("W");
                c.mux2 += g("W");
            }
            "st_add" => c.full_adder += g("W"),
            "st_inv" => c.inverter += g("W"),
            "st_cmp" => c.comparator_bit += g("W"),
            "st_qrelu" => c.mux2 += 2 * g("OB"),
            _ => {}
        }
    }
    c
}

/// Number of register instances in `text`.
pub fn register_instances(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| l.starts_with("st_reg ") && l.contains(" u_"))
        .count()
}
