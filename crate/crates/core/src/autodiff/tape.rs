use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::AutodiffError;

/// Primitive operations exposed through [`Tape::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sin,
    Cos,
    Atan2,
    Tanh,
    Exp,
    Square,
    Sqrt,
}

impl PrimitiveOp {
    pub const ALL: [PrimitiveOp; 12] = [
        PrimitiveOp::Add,
        PrimitiveOp::Sub,
        PrimitiveOp::Mul,
        PrimitiveOp::Div,
        PrimitiveOp::Neg,
        PrimitiveOp::Sin,
        PrimitiveOp::Cos,
        PrimitiveOp::Atan2,
        PrimitiveOp::Tanh,
        PrimitiveOp::Exp,
        PrimitiveOp::Square,
        PrimitiveOp::Sqrt,
    ];

    pub fn arity(self) -> usize {
        match self {
            PrimitiveOp::Add
            | PrimitiveOp::Sub
            | PrimitiveOp::Mul
            | PrimitiveOp::Div
            | PrimitiveOp::Atan2 => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveOp::Add => "add",
            PrimitiveOp::Sub => "sub",
            PrimitiveOp::Mul => "mul",
            PrimitiveOp::Div => "div",
            PrimitiveOp::Neg => "neg",
            PrimitiveOp::Sin => "sin",
            PrimitiveOp::Cos => "cos",
            PrimitiveOp::Atan2 => "atan2",
            PrimitiveOp::Tanh => "tanh",
            PrimitiveOp::Exp => "exp",
            PrimitiveOp::Square => "square",
            PrimitiveOp::Sqrt => "sqrt",
        }
    }

    /// Value and local partials of the operation at `args`.
    ///
    /// Returns `None` when `args` lie outside the operation's domain.
    fn eval(self, args: &[f64]) -> Option<(f64, [f64; 2])> {
        let a = args[0];
        let b = args.get(1).copied().unwrap_or(0.0);
        let out = match self {
            PrimitiveOp::Add => (a + b, [1.0, 1.0]),
            PrimitiveOp::Sub => (a - b, [1.0, -1.0]),
            PrimitiveOp::Mul => (a * b, [b, a]),
            PrimitiveOp::Div => {
                if b == 0.0 {
                    return None;
                }
                (a / b, [1.0 / b, -a / (b * b)])
            }
            PrimitiveOp::Neg => (-a, [-1.0, 0.0]),
            PrimitiveOp::Sin => (a.sin(), [a.cos(), 0.0]),
            PrimitiveOp::Cos => (a.cos(), [-a.sin(), 0.0]),
            PrimitiveOp::Atan2 => {
                // a = y, b = x
                let r2 = a * a + b * b;
                if r2 == 0.0 {
                    return None;
                }
                (a.atan2(b), [b / r2, -a / r2])
            }
            PrimitiveOp::Tanh => {
                let t = a.tanh();
                (t, [1.0 - t * t, 0.0])
            }
            PrimitiveOp::Exp => {
                let e = a.exp();
                (e, [e, 0.0])
            }
            PrimitiveOp::Square => (a * a, [2.0 * a, 0.0]),
            PrimitiveOp::Sqrt => {
                if a <= 0.0 {
                    return None;
                }
                let s = a.sqrt();
                (s, [0.5 / s, 0.0])
            }
        };
        Some(out)
    }
}

impl fmt::Display for PrimitiveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Leaf,
    Constant,
    Primitive(PrimitiveOp),
    /// `a * c` or `a + c` for a constant `c`.
    Affine,
    /// Bias plus weighted sum, recorded as one n-ary node.
    Dot,
}

#[derive(Default)]
struct Nodes {
    kinds: Vec<NodeKind>,
    values: Vec<f64>,
    /// `edges[edge_start[i]..edge_start[i + 1]]` are node `i`'s parents.
    edge_start: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
    leaves: Vec<u32>,
    fault: Option<AutodiffError>,
}

impl Nodes {
    fn push(&mut self, kind: NodeKind, value: f64, edges: &[(u32, f64)]) -> u32 {
        let index = self.kinds.len() as u32;
        self.kinds.push(kind);
        self.values.push(value);
        for &(p, d) in edges {
            self.parents.push(p);
            self.partials.push(d);
        }
        self.edge_start.push(self.parents.len() as u32);
        if kind == NodeKind::Leaf {
            self.leaves.push(index);
        }
        if !value.is_finite() && self.fault.is_none() {
            self.fault = Some(AutodiffError::NonFinite { node: index as usize });
        }
        index
    }

    fn edges(&self, node: usize) -> std::ops::Range<usize> {
        let start = if node == 0 { 0 } else { self.edge_start[node - 1] as usize };
        start..self.edge_start[node] as usize
    }
}

/// Append-only record of a scalar computation.
///
/// Nodes are stored in creation order, so parents always precede children
/// and the backward sweep is a single reverse pass. Operator overloads on
/// [`Var`] never fail; a domain violation is remembered as the tape's fault
/// and surfaced by [`Tape::backward`]. Use [`Tape::apply`] to have it
/// reported immediately.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Nodes>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes = self.nodes.borrow();
        f.debug_struct("Tape")
            .field("nodes", &nodes.kinds.len())
            .field("leaves", &nodes.leaves.len())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.borrow().leaves.len()
    }

    /// First recorded domain violation or non-finite value, if any.
    pub fn fault(&self) -> Option<AutodiffError> {
        self.nodes.borrow().fault.clone()
    }

    /// Records an input leaf. Leaves are the variables [`Tape::backward`]
    /// reports adjoints for.
    pub fn lift(&self, value: f64) -> Result<Var<'_>, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFiniteInput { value });
        }
        let index = self.nodes.borrow_mut().push(NodeKind::Leaf, value, &[]);
        Ok(self.var(index, value))
    }

    /// Lifts every value in `values`, in order.
    pub fn lift_all(&self, values: &[f64]) -> Result<Vec<Var<'_>>, AutodiffError> {
        values.iter().map(|&v| self.lift(v)).collect()
    }

    /// Records a constant. Constants take part in the graph but are not
    /// leaves, so no adjoint is reported for them.
    pub fn constant(&self, value: f64) -> Var<'_> {
        let index = self.nodes.borrow_mut().push(NodeKind::Constant, value, &[]);
        self.var(index, value)
    }

    /// Applies a primitive, rejecting arity, ownership and domain errors.
    pub fn apply<'t>(&'t self, op: PrimitiveOp, args: &[Var<'t>]) -> Result<Var<'t>, AutodiffError> {
        if args.len() != op.arity() {
            return Err(AutodiffError::Arity { op, expected: op.arity(), got: args.len() });
        }
        if args.iter().any(|a| !std::ptr::eq(a.tape, self)) {
            return Err(AutodiffError::ForeignVar { op });
        }
        let values: Vec<f64> = args.iter().map(|a| a.value).collect();
        let (value, partials) = op.eval(&values).ok_or_else(|| AutodiffError::Domain {
            op,
            node: self.len(),
            args: values.clone(),
        })?;
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { node: self.len() });
        }
        Ok(self.record(op, args, value, partials))
    }

    fn record<'t>(&'t self, op: PrimitiveOp, args: &[Var<'t>], value: f64, partials: [f64; 2]) -> Var<'t> {
        let mut edges = [(0u32, 0.0); 2];
        for (k, a) in args.iter().enumerate() {
            edges[k] = (a.index, partials[k]);
        }
        let index = self.nodes.borrow_mut().push(NodeKind::Primitive(op), value, &edges[..args.len()]);
        self.var(index, value)
    }

    /// Infallible variant used by the operator overloads.
    fn record_lenient<'t>(&'t self, op: PrimitiveOp, args: &[Var<'t>]) -> Var<'t> {
        let values: [f64; 2] = [args[0].value, args.get(1).map_or(0.0, |a| a.value)];
        match op.eval(&values[..args.len()]) {
            Some((value, partials)) => self.record(op, args, value, partials),
            None => {
                let node = self.len();
                {
                    let mut nodes = self.nodes.borrow_mut();
                    if nodes.fault.is_none() {
                        nodes.fault = Some(AutodiffError::Domain {
                            op,
                            node,
                            args: values[..args.len()].to_vec(),
                        });
                    }
                }
                self.record(op, args, f64::NAN, [0.0, 0.0])
            }
        }
    }

    fn affine<'t>(&'t self, a: Var<'t>, value: f64, partial: f64) -> Var<'t> {
        let index = self.nodes.borrow_mut().push(NodeKind::Affine, value, &[(a.index, partial)]);
        self.var(index, value)
    }

    /// `bias + Σ weights[i] * inputs[i]` as a single node.
    pub fn dot<'t>(&'t self, bias: Var<'t>, weights: &[Var<'t>], inputs: &[Var<'t>]) -> Var<'t> {
        assert_eq!(weights.len(), inputs.len(), "dot: length mismatch");
        let mut value = bias.value;
        let mut edges = Vec::with_capacity(1 + 2 * weights.len());
        edges.push((bias.index, 1.0));
        for (w, x) in weights.iter().zip(inputs) {
            value += w.value * x.value;
            edges.push((w.index, x.value));
            edges.push((x.index, w.value));
        }
        let index = self.nodes.borrow_mut().push(NodeKind::Dot, value, &edges);
        self.var(index, value)
    }

    /// Reverse sweep from `output`, seeding its adjoint with 1.
    pub fn backward(&self, output: Var<'_>) -> Result<Gradients, AutodiffError> {
        if !std::ptr::eq(output.tape, self) {
            return Err(AutodiffError::ForeignOutput);
        }
        let nodes = self.nodes.borrow();
        if let Some(fault) = &nodes.fault {
            return Err(fault.clone());
        }
        let end = output.index as usize + 1;
        let mut adjoints = vec![0.0; nodes.kinds.len()];
        adjoints[output.index as usize] = 1.0;
        for i in (0..end).rev() {
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            for e in nodes.edges(i) {
                adjoints[nodes.parents[e] as usize] += nodes.partials[e] * a;
            }
        }
        Ok(Gradients {
            adjoints,
            leaves: nodes.leaves.clone(),
        })
    }

    fn var(&self, index: u32, value: f64) -> Var<'_> {
        Var { tape: self, index, value }
    }
}

/// Adjoints produced by one backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<f64>,
    leaves: Vec<u32>,
}

impl Gradients {
    /// ∂output/∂var. Zero for variables the output does not depend on.
    pub fn wrt(&self, var: Var<'_>) -> f64 {
        self.adjoints.get(var.index as usize).copied().unwrap_or(0.0)
    }

    pub fn wrt_all(&self, vars: &[Var<'_>]) -> Vec<f64> {
        vars.iter().map(|&v| self.wrt(v)).collect()
    }

    /// Adjoints of every leaf in creation order.
    pub fn leaf_adjoints(&self) -> Vec<f64> {
        self.leaves.iter().map(|&i| self.adjoints[i as usize]).collect()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var(#{} = {})", self.index, self.value)
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    fn unary(self, op: PrimitiveOp) -> Self {
        self.tape.record_lenient(op, &[self])
    }

    fn binary(self, op: PrimitiveOp, rhs: Self) -> Self {
        assert!(std::ptr::eq(self.tape, rhs.tape), "{op}: operands live on different tapes");
        self.tape.record_lenient(op, &[self, rhs])
    }

    pub fn sin(self) -> Self {
        self.unary(PrimitiveOp::Sin)
    }

    pub fn cos(self) -> Self {
        self.unary(PrimitiveOp::Cos)
    }

    pub fn tanh(self) -> Self {
        self.unary(PrimitiveOp::Tanh)
    }

    pub fn exp(self) -> Self {
        self.unary(PrimitiveOp::Exp)
    }

    pub fn square(self) -> Self {
        self.unary(PrimitiveOp::Square)
    }

    pub fn sqrt(self) -> Self {
        self.unary(PrimitiveOp::Sqrt)
    }

    /// Four-quadrant arctangent of `self / x`.
    pub fn atan2(self, x: Self) -> Self {
        self.binary(PrimitiveOp::Atan2, x)
    }
}

macro_rules! binary_ops {
    ($($trait:ident $method:ident $op:ident),*) => {$(
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.binary(PrimitiveOp::$op, rhs)
            }
        }
    )*};
}

binary_ops!(Add add Add, Sub sub Sub, Mul mul Mul, Div div Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(PrimitiveOp::Neg)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.tape.affine(self, self.value + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.tape.affine(self, self.value - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.tape.affine(self, self.value * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        if c == 0.0 {
            let mut nodes = self.tape.nodes.borrow_mut();
            if nodes.fault.is_none() {
                let node = nodes.kinds.len();
                nodes.fault = Some(AutodiffError::Domain {
                    op: PrimitiveOp::Div,
                    node,
                    args: vec![self.value, c],
                });
            }
        }
        self.tape.affine(self, self.value / c, 1.0 / c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_keeps_value_and_rejects_nan() {
        let t = Tape::new();
        assert_eq!(t.lift(3.0).unwrap().value(), 3.0);
        assert_eq!(t.lift(0.0).unwrap().value(), 0.0);
        assert!(matches!(t.lift(f64::NAN), Err(AutodiffError::NonFiniteInput { .. })));
        assert!(t.lift(f64::INFINITY).is_err());
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn sin_at_zero_records_unit_partial() {
        let t = Tape::new();
        let x = t.lift(0.0).unwrap();
        let y = t.apply(PrimitiveOp::Sin, &[x]).unwrap();
        assert_eq!(y.value(), 0.0);
        assert_eq!(t.backward(y).unwrap().wrt(x), 1.0);
    }

    #[test]
    fn mul_partials_swap_operands() {
        let t = Tape::new();
        let a = t.lift(2.0).unwrap();
        let b = t.lift(3.0).unwrap();
        let y = t.apply(PrimitiveOp::Mul, &[a, b]).unwrap();
        assert_eq!(y.value(), 6.0);
        assert_eq!(t.backward(y).unwrap().leaf_adjoints(), vec![3.0, 2.0]);
    }

    #[test]
    fn square_and_trig_sum() {
        let t = Tape::new();
        let x = t.lift(3.0).unwrap();
        let y = x.square();
        assert_eq!(t.backward(y).unwrap().wrt(x), 6.0);

        let t = Tape::new();
        let x = t.lift(0.0).unwrap();
        let y = x.sin() + x.cos();
        assert_eq!(t.backward(y).unwrap().wrt(x), 1.0);
    }

    #[test]
    fn domain_errors_name_the_node() {
        let t = Tape::new();
        let a = t.lift(1.0).unwrap();
        let z = t.lift(0.0).unwrap();
        let neg = t.lift(-1.0).unwrap();
        match t.apply(PrimitiveOp::Div, &[a, z]) {
            Err(AutodiffError::Domain { op: PrimitiveOp::Div, node, .. }) => assert_eq!(node, 3),
            other => panic!("expected div domain error, got {other:?}"),
        }
        assert!(matches!(
            t.apply(PrimitiveOp::Sqrt, &[neg]),
            Err(AutodiffError::Domain { op: PrimitiveOp::Sqrt, .. })
        ));
        assert!(matches!(
            t.apply(PrimitiveOp::Atan2, &[z, z]),
            Err(AutodiffError::Domain { op: PrimitiveOp::Atan2, .. })
        ));
        assert!(matches!(t.apply(PrimitiveOp::Add, &[a]), Err(AutodiffError::Arity { .. })));
    }

    #[test]
    fn lenient_ops_poison_backward() {
        let t = Tape::new();
        let a = t.lift(1.0).unwrap();
        let z = t.lift(0.0).unwrap();
        let y = a / z + a;
        assert!(matches!(t.backward(y), Err(AutodiffError::Domain { op: PrimitiveOp::Div, .. })));
        assert!(t.fault().is_some());
    }

    #[test]
    fn foreign_vars_are_rejected() {
        let t1 = Tape::new();
        let t2 = Tape::new();
        let a = t1.lift(1.0).unwrap();
        let b = t2.lift(1.0).unwrap();
        assert!(matches!(t1.apply(PrimitiveOp::Neg, &[b]), Err(AutodiffError::ForeignVar { .. })));
        assert!(matches!(t2.backward(a), Err(AutodiffError::ForeignOutput)));
    }

    #[test]
    fn dot_node_matches_scalar_expansion() {
        let t = Tape::new();
        let w = t.lift_all(&[0.5, -1.5, 2.0]).unwrap();
        let x = t.lift_all(&[1.0, 2.0, -0.25]).unwrap();
        let b = t.lift(0.1).unwrap();
        let y = t.dot(b, &w, &x).tanh();
        let g = t.backward(y).unwrap();

        let s = Tape::new();
        let w2 = s.lift_all(&[0.5, -1.5, 2.0]).unwrap();
        let x2 = s.lift_all(&[1.0, 2.0, -0.25]).unwrap();
        let b2 = s.lift(0.1).unwrap();
        let mut acc = b2;
        for (wi, xi) in w2.iter().zip(&x2) {
            acc = acc + *wi * *xi;
        }
        let y2 = acc.tanh();
        let g2 = s.backward(y2).unwrap();
        assert!((y.value() - y2.value()).abs() < 1e-15);
        for (p, q) in g.leaf_adjoints().iter().zip(g2.leaf_adjoints()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_are_not_leaves() {
        let t = Tape::new();
        let x = t.lift(2.0).unwrap();
        let c = t.constant(5.0);
        let y = x * c + 1.0;
        let g = t.backward(y).unwrap();
        assert_eq!(g.leaf_adjoints(), vec![5.0]);
        assert_eq!(y.value(), 11.0);
    }
}
