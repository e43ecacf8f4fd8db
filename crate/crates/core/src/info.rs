//! Finite distributions, channel representations and information measures.
//! All logarithms are base 2.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{invalid, Error, Result};

/// Probabilities below this are treated as exact zeros in entropy sums.
pub const ZERO_PROB: f64 = 1e-15;
pub const SUM_TOL: f64 = 1e-12;
pub const PARSE_ROW_TOL: f64 = 1e-9;

pub fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > ZERO_PROB)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Binary entropy function.
pub fn h2(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// Binary convolution `p(1-q) + q(1-p)`.
pub fn star(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return invalid(format!("star arguments must lie in [0,1], got ({p}, {q})"));
    }
    Ok((p * (1.0 - q) + q * (1.0 - p)).clamp(0.0, 1.0))
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return invalid(format!("probability {p} is negative or not finite"));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return invalid(format!("probabilities sum to {s}, not 1"));
    }
    Ok(())
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut sorted: Vec<&String> = labels.iter().collect();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != labels.len() {
        return invalid("alphabet labels must be unique");
    }
    if labels.is_empty() {
        return invalid("alphabets must be nonempty");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return invalid(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            ));
        }
        check_labels(&labels)?;
        check_probs(&probs)?;
        Ok(Pmf { labels, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(index_labels(probs.len()), probs)
    }

    pub fn uniform(n: usize) -> Self {
        Pmf {
            labels: index_labels(n),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// Strides of a row-major tensor.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Marginalizes a row-major tensor onto `keep` (in the given order).
pub fn marginal_raw(probs: &[f64], shape: &[usize], keep: &[usize]) -> Vec<f64> {
    let st = strides(shape);
    let out_shape: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
    let out_st = strides(&out_shape);
    let mut out = vec![0.0; out_shape.iter().product()];
    for (flat, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut idx = 0;
        for (k, &a) in keep.iter().enumerate() {
            idx += ((flat / st[a]) % shape[a]) * out_st[k];
        }
        out[idx] += p;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    names: Vec<String>,
    alphabets: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(names: Vec<String>, alphabets: Vec<Vec<String>>, probs: Vec<f64>) -> Result<Self> {
        if names.len() != alphabets.len() {
            return invalid("one name per axis required");
        }
        for a in &alphabets {
            check_labels(a)?;
        }
        let size: usize = alphabets.iter().map(Vec::len).product();
        if size != probs.len() {
            return invalid(format!(
                "tensor has {} entries but axes imply {size}",
                probs.len()
            ));
        }
        check_probs(&probs)?;
        Ok(JointPmf {
            names,
            alphabets,
            probs,
        })
    }

    /// Builds a joint with generic axis names and index labels.
    pub fn from_shape(shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        let names = (0..shape.len()).map(|k| format!("A{k}")).collect();
        let alphabets = shape.iter().map(|&n| index_labels(n)).collect();
        JointPmf::new(names, alphabets, probs)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.alphabets.iter().map(Vec::len).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rank(&self) -> usize {
        self.alphabets.len()
    }

    fn check_axes(&self, groups: &[&[usize]]) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for g in groups {
            for &a in *g {
                if a >= self.rank() {
                    return invalid(format!("axis {a} out of range"));
                }
                if seen[a] {
                    return invalid(format!("axis {a} appears in more than one group"));
                }
                seen[a] = true;
            }
        }
        Ok(())
    }

    pub fn marginal(&self, axes: &[usize]) -> Vec<f64> {
        marginal_raw(&self.probs, &self.shape(), axes)
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    pub fn entropy_axes(&self, axes: &[usize]) -> f64 {
        if axes.is_empty() {
            return 0.0;
        }
        entropy_of(&self.marginal(axes))
    }

    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        self.conditional_mi(a, b, &[])
    }

    pub fn conditional_mi(&self, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
        self.check_axes(&[a, b, given])?;
        let ac: Vec<usize> = a.iter().chain(given).copied().collect();
        let bc: Vec<usize> = b.iter().chain(given).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(given).copied().collect();
        let v = self.entropy_axes(&ac) + self.entropy_axes(&bc)
            - self.entropy_axes(&abc)
            - self.entropy_axes(given);
        Ok(v.max(0.0))
    }
}

/// Free-function form of [`JointPmf::entropy`] accepting either a `Pmf` or a
/// `JointPmf`.
pub trait Entropy {
    fn entropy_bits(&self) -> f64;
}

impl Entropy for Pmf {
    fn entropy_bits(&self) -> f64 {
        self.entropy()
    }
}

impl Entropy for JointPmf {
    fn entropy_bits(&self) -> f64 {
        self.entropy()
    }
}

pub fn entropy<P: Entropy>(p: &P) -> f64 {
    p.entropy_bits()
}

pub fn mutual_information(joint: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    joint.mutual_information(a, b)
}

pub fn conditional_mi(joint: &JointPmf, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
    joint.conditional_mi(a, b, given)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    P2p,
    Bc,
    Mac,
    Ic,
}

impl Role {
    pub fn arity(&self) -> (usize, usize) {
        match self {
            Role::P2p => (1, 1),
            Role::Bc => (1, 2),
            Role::Mac => (2, 1),
            Role::Ic => (2, 2),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Role::P2p => "p2p",
            Role::Bc => "bc",
            Role::Mac => "mac",
            Role::Ic => "ic",
        }
    }
}

/// A finite-alphabet memoryless channel. The transition tensor is stored
/// row-major with the input tuple as the row index and the output tuple as
/// the column index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    pub name: String,
    role: Role,
    inputs: Vec<Vec<String>>,
    outputs: Vec<Vec<String>>,
    transition: Vec<f64>,
}

impl Dmc {
    pub fn new(
        name: impl Into<String>,
        role: Role,
        inputs: Vec<Vec<String>>,
        outputs: Vec<Vec<String>>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        let (ni, no) = role.arity();
        if inputs.len() != ni || outputs.len() != no {
            return invalid(format!(
                "role {} needs {ni} input and {no} output alphabets, got {} and {}",
                role.name(),
                inputs.len(),
                outputs.len()
            ));
        }
        for a in inputs.iter().chain(&outputs) {
            check_labels(a)?;
        }
        let rows: usize = inputs.iter().map(Vec::len).product();
        let cols: usize = outputs.iter().map(Vec::len).product();
        if transition.len() != rows * cols {
            return invalid(format!(
                "transition has {} entries, expected {rows}x{cols}",
                transition.len()
            ));
        }
        for (r, row) in transition.chunks(cols).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return invalid(format!("row {r} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return invalid(format!("row {r} sums to {s}, not 1"));
            }
        }
        Ok(Dmc {
            name: name.into(),
            role,
            inputs,
            outputs,
            transition,
        })
    }

    pub(crate) fn from_rows(name: &str, role: Role, in_sizes: &[usize], out_sizes: &[usize], t: Vec<f64>) -> Self {
        Dmc::new(
            name,
            role,
            in_sizes.iter().map(|&n| index_labels(n)).collect(),
            out_sizes.iter().map(|&n| index_labels(n)).collect(),
            t,
        )
        .expect("built-in channel is well formed")
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Dmc {
        self.name = name.into();
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn inputs(&self) -> &[Vec<String>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<String>] {
        &self.outputs
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.inputs.iter().map(Vec::len).collect()
    }

    pub fn output_sizes(&self) -> Vec<usize> {
        self.outputs.iter().map(Vec::len).collect()
    }

    pub fn n_in(&self) -> usize {
        self.inputs.iter().map(Vec::len).product()
    }

    pub fn n_out(&self) -> usize {
        self.outputs.iter().map(Vec::len).product()
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let c = self.n_out();
        &self.transition[x * c..(x + 1) * c]
    }

    /// Joint distribution of inputs and outputs for a distribution over
    /// input tuples. Axes are the input alphabets followed by the outputs.
    pub fn joint(&self, input: &[f64]) -> Result<JointPmf> {
        if input.len() != self.n_in() {
            return invalid("input distribution size does not match the channel");
        }
        let probs = self.joint_raw(input);
        let mut names: Vec<String> = (1..=self.inputs.len()).map(|k| format!("X{k}")).collect();
        names.extend((1..=self.outputs.len()).map(|k| format!("Y{k}")));
        let alphabets = self.inputs.iter().chain(&self.outputs).cloned().collect();
        JointPmf::new(names, alphabets, probs)
    }

    pub fn joint_raw(&self, input: &[f64]) -> Vec<f64> {
        let c = self.n_out();
        let mut out = Vec::with_capacity(self.transition.len());
        for (x, &px) in input.iter().enumerate() {
            out.extend(self.transition[x * c..(x + 1) * c].iter().map(|w| px * w));
        }
        out
    }

    /// Output marginal over output tuples.
    pub fn output_dist(&self, input: &[f64]) -> Vec<f64> {
        let c = self.n_out();
        let mut out = vec![0.0; c];
        for (x, &px) in input.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(x)) {
                *o += px * w;
            }
        }
        out
    }

    /// I(inputs; outputs) for a distribution over input tuples.
    pub fn mutual_information(&self, input: &[f64]) -> f64 {
        let py = self.output_dist(input);
        let mut h_cond = 0.0;
        for (x, &px) in input.iter().enumerate() {
            if px > ZERO_PROB {
                h_cond += px * entropy_of(self.row(x));
            }
        }
        (entropy_of(&py) - h_cond).max(0.0)
    }

    /// Marginal channel onto a single output component.
    pub fn output_component(&self, k: usize) -> Dmc {
        let sizes = self.output_sizes();
        let n = self.n_in();
        let mut t = Vec::with_capacity(n * sizes[k]);
        for x in 0..n {
            t.extend(marginal_raw(self.row(x), &sizes, &[k]));
        }
        Dmc {
            name: format!("{}[Y{}]", self.name, k + 1),
            role: Role::P2p,
            inputs: if self.inputs.len() == 1 {
                self.inputs.clone()
            } else {
                vec![index_labels(n)]
            },
            outputs: vec![self.outputs[k].clone()],
            transition: t,
        }
    }

    /// The same channel with its two inputs swapped (MAC and IC only).
    pub fn swap_inputs(&self) -> Dmc {
        assert_eq!(self.inputs.len(), 2);
        let (n1, n2) = (self.inputs[0].len(), self.inputs[1].len());
        let c = self.n_out();
        let mut t = vec![0.0; self.transition.len()];
        for a in 0..n1 {
            for b in 0..n2 {
                let src = (a * n2 + b) * c;
                let dst = (b * n1 + a) * c;
                t[dst..dst + c].copy_from_slice(&self.transition[src..src + c]);
            }
        }
        Dmc {
            name: format!("{}[swapped]", self.name),
            role: self.role,
            inputs: vec![self.inputs[1].clone(), self.inputs[0].clone()],
            outputs: self.outputs.clone(),
            transition: t,
        }
    }

    pub fn bsc(p: f64) -> Dmc {
        Dmc::from_rows("bsc", Role::P2p, &[2], &[2], vec![1.0 - p, p, p, 1.0 - p])
    }

    pub fn bec(e: f64) -> Dmc {
        Dmc::from_rows(
            "bec",
            Role::P2p,
            &[2],
            &[3],
            vec![1.0 - e, e, 0.0, 0.0, e, 1.0 - e],
        )
    }

    pub fn noiseless(n: usize) -> Dmc {
        let mut t = vec![0.0; n * n];
        for k in 0..n {
            t[k * n + k] = 1.0;
        }
        Dmc::from_rows("noiseless", Role::P2p, &[n], &[n], t)
    }

    /// Binary adder MAC `Y = X1 xor X2 xor Z`, `Z ~ Bernoulli(p)`.
    pub fn adder_mac(p: f64) -> Dmc {
        let mut t = Vec::with_capacity(8);
        for a in 0..2 {
            for b in 0..2 {
                let s = a ^ b;
                t.extend(if s == 0 { [1.0 - p, p] } else { [p, 1.0 - p] });
            }
        }
        Dmc::from_rows("adder_mac", Role::Mac, &[2, 2], &[2], t)
    }

    /// Binary symmetric broadcast channel where receiver 1 sees crossover
    /// `p1` and receiver 2 sees crossover `p1*p2`. With `degraded` set,
    /// `Y2 = Y1 xor Z2`; otherwise the two noises are independent.
    pub fn bsc_bc(p1: f64, p2: f64, degraded: bool) -> Dmc {
        let q = p1 * (1.0 - p2) + p2 * (1.0 - p1);
        let mut t = Vec::with_capacity(8);
        for x in 0..2usize {
            for y1 in 0..2usize {
                for y2 in 0..2usize {
                    let e1 = if y1 != x { p1 } else { 1.0 - p1 };
                    let v = if degraded {
                        e1 * if y2 != y1 { p2 } else { 1.0 - p2 }
                    } else {
                        e1 * if y2 != x { q } else { 1.0 - q }
                    };
                    t.push(v);
                }
            }
        }
        Dmc::from_rows("bsc_bc", Role::Bc, &[2], &[2, 2], t)
    }

    /// Two independent binary symmetric links `Y1 = X1 xor Z1`,
    /// `Y2 = X2 xor Z2` viewed as an interference channel.
    pub fn parallel_bsc_ic(p1: f64, p2: f64) -> Dmc {
        let mut t = Vec::with_capacity(16);
        for x1 in 0..2usize {
            for x2 in 0..2usize {
                for y1 in 0..2usize {
                    for y2 in 0..2usize {
                        let a = if y1 != x1 { p1 } else { 1.0 - p1 };
                        let b = if y2 != x2 { p2 } else { 1.0 - p2 };
                        t.push(a * b);
                    }
                }
            }
        }
        Dmc::from_rows("parallel_bsc_ic", Role::Ic, &[2, 2], &[2, 2], t)
    }

    pub fn to_json(&self) -> Value {
        let c = self.n_out();
        let rows: Vec<Value> = self.transition.chunks(c).map(|r| json!(r)).collect();
        json!({
            "name": self.name,
            "role": self.role.name(),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "matrix": rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBc {
    #[serde(rename = "P")]
    pub power: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "N1")]
    pub n1: f64,
    #[serde(rename = "N2")]
    pub n2: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMac {
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    #[serde(rename = "N")]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianChannelSpec {
    Bc(GaussianBc),
    Mac(GaussianMac),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl GaussianBc {
    pub fn new(power: f64, a1: f64, a2: f64, n1: f64, n2: f64, rho: f64) -> Result<Self> {
        let s = GaussianBc {
            power,
            a1,
            a2,
            n1,
            n2,
            rho,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("P", self.power)?;
        positive("a1", self.a1)?;
        positive("a2", self.a2)?;
        positive("N1", self.n1)?;
        positive("N2", self.n2)?;
        if !(-1.0..=1.0).contains(&self.rho) {
            return invalid(format!("rho must lie in [-1,1], got {}", self.rho));
        }
        let (e1, e2) = (self.eff_noise1(), self.eff_noise2());
        if !e1.is_finite() || !e2.is_finite() {
            return invalid("effective noise N/a^2 overflows");
        }
        if e1 > e2 {
            return invalid(format!(
                "receiver order violated: N1/a1^2 = {e1} exceeds N2/a2^2 = {e2}"
            ));
        }
        Ok(())
    }

    /// Effective noise variance `N1/a1^2` at the stronger receiver.
    pub fn eff_noise1(&self) -> f64 {
        self.n1 / (self.a1 * self.a1)
    }

    /// Effective noise variance `N2/a2^2` at the weaker receiver.
    pub fn eff_noise2(&self) -> f64 {
        self.n2 / (self.a2 * self.a2)
    }
}

impl GaussianMac {
    pub fn new(p1: f64, p2: f64, noise: f64) -> Result<Self> {
        let s = GaussianMac { p1, p2, noise };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("N", self.noise)?;
        if !self.p1.is_finite() || !self.p2.is_finite() || self.p1 < 0.0 || self.p2 < 0.0 {
            return invalid("MAC powers must be finite and nonnegative");
        }
        if self.p1 < self.p2 {
            return invalid(format!(
                "MAC requires P1 >= P2, got P1 = {} < P2 = {}",
                self.p1, self.p2
            ));
        }
        Ok(())
    }
}

/// Any channel the toolkit can model.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Discrete(Dmc),
    Gaussian(GaussianChannelSpec),
}

impl Channel {
    pub fn arity(&self) -> (usize, usize) {
        match self {
            Channel::Discrete(d) => d.role().arity(),
            Channel::Gaussian(GaussianChannelSpec::Bc(_)) => (1, 2),
            Channel::Gaussian(GaussianChannelSpec::Mac(_)) => (2, 1),
        }
    }

    pub fn role_name(&self) -> &'static str {
        match self {
            Channel::Discrete(d) => d.role().name(),
            Channel::Gaussian(GaussianChannelSpec::Bc(_)) => "gaussian_bc",
            Channel::Gaussian(GaussianChannelSpec::Mac(_)) => "gaussian_mac",
        }
    }

    pub fn name(&self) -> String {
        match self {
            Channel::Discrete(d) => d.name.clone(),
            Channel::Gaussian(_) => self.role_name().to_string(),
        }
    }

    pub fn parse_str(text: &str) -> Result<Channel> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Channel::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Channel> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("channel must be a JSON object".into()))?;
        let role = obj
            .get("role")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("channel is missing a string `role`".into()))?;
        match role {
            "gaussian_bc" => {
                let s: GaussianBc = serde_json::from_value(strip(obj, &["role", "name"]))
                    .map_err(|e| Error::Parse(e.to_string()))?;
                s.validate()?;
                Ok(Channel::Gaussian(GaussianChannelSpec::Bc(s)))
            }
            "gaussian_mac" => {
                let s: GaussianMac = serde_json::from_value(strip(obj, &["role", "name"]))
                    .map_err(|e| Error::Parse(e.to_string()))?;
                s.validate()?;
                Ok(Channel::Gaussian(GaussianChannelSpec::Mac(s)))
            }
            "p2p" | "bc" | "mac" | "ic" => parse_dmc(obj, role).map(Channel::Discrete),
            other => Err(Error::Parse(format!("unknown channel role `{other}`"))),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Channel::Discrete(d) => d.to_json(),
            Channel::Gaussian(GaussianChannelSpec::Bc(s)) => {
                let mut v = serde_json::to_value(s).expect("plain struct");
                v["role"] = json!("gaussian_bc");
                v
            }
            Channel::Gaussian(GaussianChannelSpec::Mac(s)) => {
                let mut v = serde_json::to_value(s).expect("plain struct");
                v["role"] = json!("gaussian_mac");
                v
            }
        }
    }
}

fn strip(obj: &Map<String, Value>, keys: &[&str]) -> Value {
    let mut m = obj.clone();
    for k in keys {
        m.remove(*k);
    }
    Value::Object(m)
}

fn parse_alphabets(obj: &Map<String, Value>, key: &str) -> Result<Vec<Vec<String>>> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("channel is missing array `{key}`")))?;
    arr.iter()
        .map(|a| {
            a.as_array()
                .ok_or_else(|| Error::Parse(format!("`{key}` entries must be label arrays")))?
                .iter()
                .map(|l| match l {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(Error::Parse(format!("bad label in `{key}`"))),
                })
                .collect()
        })
        .collect()
}

fn flatten_numbers(v: &Value, out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Array(items) => items.iter().try_for_each(|i| flatten_numbers(i, out)),
        Value::Number(n) => {
            out.push(n.as_f64().ok_or_else(|| Error::Parse("bad number".into()))?);
            Ok(())
        }
        _ => Err(Error::Parse("matrix entries must be numbers".into())),
    }
}

fn parse_dmc(obj: &Map<String, Value>, role: &str) -> Result<Dmc> {
    let role = match role {
        "p2p" => Role::P2p,
        "bc" => Role::Bc,
        "mac" => Role::Mac,
        _ => Role::Ic,
    };
    let inputs = parse_alphabets(obj, "inputs")?;
    let outputs = parse_alphabets(obj, "outputs")?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or("channel")
        .to_string();
    let rows: usize = inputs.iter().map(Vec::len).product();
    let cols: usize = outputs.iter().map(Vec::len).product();
    let matrix = obj
        .get("matrix")
        .ok_or_else(|| Error::Parse("channel is missing `matrix`".into()))?;

    // Two-level layout: one row per input tuple.
    if let Some(top) = matrix.as_array() {
        if top.len() == rows && top.iter().all(|r| r.is_array()) {
            let mut flat = Vec::with_capacity(rows * cols);
            let mut two_level = true;
            for r in top {
                let mut row = Vec::new();
                flatten_numbers(r, &mut row)?;
                if r.as_array().map(|a| a.iter().any(Value::is_array)).unwrap_or(false) {
                    two_level = false;
                }
                flat.push(row);
            }
            if two_level || flat.iter().all(|r| r.len() == cols) {
                let mut t = Vec::with_capacity(rows * cols);
                for (i, row) in flat.into_iter().enumerate() {
                    if row.len() != cols {
                        return Err(Error::Parse(format!(
                            "matrix row {i} has {} entries, expected {cols}",
                            row.len()
                        )));
                    }
                    t.extend(row);
                }
                return finish_dmc(name, role, inputs, outputs, t, cols);
            }
        }
    }
    let mut t = Vec::new();
    flatten_numbers(matrix, &mut t)?;
    if t.len() != rows * cols {
        return Err(Error::Parse(format!(
            "matrix has {} entries, expected {rows}x{cols}",
            t.len()
        )));
    }
    finish_dmc(name, role, inputs, outputs, t, cols)
}

fn finish_dmc(
    name: String,
    role: Role,
    inputs: Vec<Vec<String>>,
    outputs: Vec<Vec<String>>,
    mut t: Vec<f64>,
    cols: usize,
) -> Result<Dmc> {
    for (i, row) in t.chunks_mut(cols).enumerate() {
        if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Parse(format!("matrix row {i} has invalid entry {p}")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > PARSE_ROW_TOL {
            return Err(Error::Parse(format!(
                "matrix row {i} sums to {s}, deviating from 1 by more than {PARSE_ROW_TOL}"
            )));
        }
        if (s - 1.0).abs() > SUM_TOL {
            row.iter_mut().for_each(|p| *p /= s);
        }
    }
    Dmc::new(name, role, inputs, outputs, t).map_err(|e| Error::Parse(e.to_string()))
}
