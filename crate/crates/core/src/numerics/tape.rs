//! Reverse-mode gradient tape over matrix-valued nodes.
//!
//! A fresh tape is built for every training step: leaves are pushed for
//! inputs and parameters, matrix operations append nodes, and
//! [`Tape::backward`] walks the recorded program once in reverse to
//! produce gradients for every parameter. Structured blocks with awkward
//! primitive decompositions (graph attention, the inner-product decoder
//! loss, the Student-t/KL clustering loss) are single fused nodes with
//! hand-derived adjoints; the contract for all of them is agreement with
//! central finite differences.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::matrix::{matmul, matmul_a_bt, matmul_at_b, Matrix};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Adjacency lists with self-loops, shared by the attention ops.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Neighborhoods {
    /// Builds neighbor lists from a binary adjacency matrix, inserting a
    /// self-loop for every node so isolated nodes still attend to
    /// themselves.
    pub fn from_adjacency(adj: &Matrix) -> Result<Self> {
        if !adj.is_square() {
            return Err(Error::shape("adjacency must be square".to_string()));
        }
        let n = adj.rows();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for j in 0..n {
            for (k, &v) in adj.row(j).iter().enumerate() {
                if k == j || v != 0.0 {
                    targets.push(k);
                }
            }
            offsets.push(targets.len());
        }
        Ok(Neighborhoods { offsets, targets })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.targets[self.offsets[j]..self.offsets[j + 1]]
    }

    fn edge_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }
}

/// Layer activation for the fused attention node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatActivation {
    Elu,
    Linear,
}

const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug)]
struct GatCache {
    /// h·W
    projected: Matrix,
    /// pre-LeakyReLU attention logit per edge
    logits: Vec<f64>,
    /// normalized attention coefficient per edge
    alpha: Vec<f64>,
    /// aggregated features before the output activation
    pre_act: Matrix,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// a + scale·b
    AddScaled(NodeId, NodeId, f64),
    Scale(NodeId, f64),
    Relu(NodeId),
    RowSoftmax(NodeId),
    GatLayer {
        input: NodeId,
        weight: NodeId,
        attn: NodeId,
        graph: Arc<Neighborhoods>,
        act: GatActivation,
        cache: GatCache,
    },
    /// Weighted binary cross-entropy between `target` and sigmoid(z·zᵀ).
    InnerProductBce {
        z: NodeId,
        target: Arc<Matrix>,
        pos_weight: f64,
    },
    /// KL(target ‖ student_t(z, centers)), summed over rows and clusters.
    StudentTKl {
        z: NodeId,
        centers: NodeId,
        target: Arc<Matrix>,
    },
}

struct Node {
    value: Matrix,
    needs_grad: bool,
    op: Op,
}

/// Gradients for every node of one backward pass.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the differentiated scalar w.r.t. the node. Zero-filled
    /// when the node never influenced the scalar.
    pub fn get(&self, id: NodeId, shape: (usize, usize)) -> Matrix {
        match &self.grads[id.0] {
            Some(m) => m.clone(),
            None => Matrix::zeros(shape.0, shape.1),
        }
    }

    pub fn get_ref(&self, id: NodeId) -> Option<&Matrix> {
        self.grads[id.0].as_ref()
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.shape(), (1, 1));
        self.nodes[id.0].value.data()[0]
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, false, Op::Leaf)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Matrix) -> NodeId {
        self.push(value, true, Op::Leaf)
    }

    fn push(&mut self, value: Matrix, needs_grad: bool, op: Op) -> NodeId {
        self.nodes.push(Node {
            value,
            needs_grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = matmul(self.value(a), self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, needs, Op::Matmul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, needs, Op::Add(a, b)))
    }

    pub fn add_scaled(&mut self, a: NodeId, b: NodeId, scale: f64) -> Result<NodeId> {
        let mut value = self.value(a).clone();
        value.add_scaled_in_place(self.value(b), scale)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, needs, Op::AddScaled(a, b, scale)))
    }

    pub fn scale(&mut self, a: NodeId, scale: f64) -> NodeId {
        let value = self.value(a).scale(scale);
        let needs = self.needs(a);
        self.push(value, needs, Op::Scale(a, scale))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| x.max(0.0));
        let needs = self.needs(a);
        self.push(value, needs, Op::Relu(a))
    }

    pub fn row_softmax(&mut self, a: NodeId) -> NodeId {
        let value = row_softmax(self.value(a));
        let needs = self.needs(a);
        self.push(value, needs, Op::RowSoftmax(a))
    }

    /// One graph-attention layer: project with `weight`, score each edge
    /// with the attention vector (LeakyReLU slope 0.2), normalize scores
    /// over each neighborhood, aggregate and apply `act`.
    pub fn gat_layer(
        &mut self,
        input: NodeId,
        weight: NodeId,
        attn: NodeId,
        graph: Arc<Neighborhoods>,
        act: GatActivation,
    ) -> Result<NodeId> {
        let (value, cache) = gat_forward_cached(
            self.value(input),
            self.value(weight),
            self.value(attn),
            &graph,
            act,
        )?;
        let needs = self.needs(input) || self.needs(weight) || self.needs(attn);
        Ok(self.push(
            value,
            needs,
            Op::GatLayer {
                input,
                weight,
                attn,
                graph,
                act,
                cache,
            },
        ))
    }

    /// Mean weighted BCE between `target` (binary, with `pos_weight` on
    /// the positive class) and sigmoid(z·zᵀ).
    pub fn inner_product_bce(
        &mut self,
        z: NodeId,
        target: Arc<Matrix>,
        pos_weight: f64,
    ) -> Result<NodeId> {
        let zv = self.value(z);
        if target.rows() != zv.rows() || !target.is_square() {
            return Err(Error::shape(format!(
                "inner_product_bce: target {}x{} vs z {}x{}",
                target.rows(),
                target.cols(),
                zv.rows(),
                zv.cols()
            )));
        }
        let loss = inner_product_bce_value(zv, &target, pos_weight)?;
        let needs = self.needs(z);
        let value = Matrix::from_vec(1, 1, vec![loss])?;
        Ok(self.push(
            value,
            needs,
            Op::InnerProductBce {
                z,
                target,
                pos_weight,
            },
        ))
    }

    /// KL(target ‖ Q) where Q is the Student-t soft assignment of the rows
    /// of `z` against `centers`.
    pub fn student_t_kl(
        &mut self,
        z: NodeId,
        centers: NodeId,
        target: Arc<Matrix>,
    ) -> Result<NodeId> {
        let zv = self.value(z);
        let uv = self.value(centers);
        if zv.cols() != uv.cols() || target.rows() != zv.rows() || target.cols() != uv.rows() {
            return Err(Error::shape(format!(
                "student_t_kl: z {}x{}, centers {}x{}, target {}x{}",
                zv.rows(),
                zv.cols(),
                uv.rows(),
                uv.cols(),
                target.rows(),
                target.cols()
            )));
        }
        let q = student_t_assign(zv, uv);
        let loss = kl_divergence(&target, &q)?;
        let needs = self.needs(z) || self.needs(centers);
        let value = Matrix::from_vec(1, 1, vec![loss])?;
        Ok(self.push(value, needs, Op::StudentTKl { z, centers, target }))
    }

    /// Backpropagates from a scalar node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if self.nodes[root.0].value.shape() != (1, 1) {
            return Err(Error::shape("backward root must be 1x1".to_string()));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Matrix::from_vec(1, 1, vec![1.0])?);

        for id in (0..=root.0).rev() {
            let Some(grad_out) = grads[id].take() else {
                continue;
            };
            self.propagate(id, &grad_out, &mut grads)?;
            // Leaves keep their gradient; interior grads are dropped once used.
            if matches!(self.nodes[id].op, Op::Leaf) {
                grads[id] = Some(grad_out);
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, id: usize, grad: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Matmul(a, b) => {
                if self.needs(*a) {
                    let da = matmul_a_bt(grad, self.value(*b))?;
                    accumulate(grads, *a, da)?;
                }
                if self.needs(*b) {
                    let db = matmul_at_b(self.value(*a), grad)?;
                    accumulate(grads, *b, db)?;
                }
            }
            Op::Add(a, b) => {
                if self.needs(*a) {
                    accumulate(grads, *a, grad.clone())?;
                }
                if self.needs(*b) {
                    accumulate(grads, *b, grad.clone())?;
                }
            }
            Op::AddScaled(a, b, s) => {
                if self.needs(*a) {
                    accumulate(grads, *a, grad.clone())?;
                }
                if self.needs(*b) {
                    accumulate(grads, *b, grad.scale(*s))?;
                }
            }
            Op::Scale(a, s) => {
                if self.needs(*a) {
                    accumulate(grads, *a, grad.scale(*s))?;
                }
            }
            Op::Relu(a) => {
                if self.needs(*a) {
                    let input = self.value(*a);
                    let mut da = grad.clone();
                    for (d, &x) in da.data_mut().iter_mut().zip(input.data()) {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(grads, *a, da)?;
                }
            }
            Op::RowSoftmax(a) => {
                if self.needs(*a) {
                    let y = &node.value;
                    let mut da = Matrix::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let gr = grad.row(r);
                        let inner: f64 = yr.iter().zip(gr).map(|(yi, gi)| yi * gi).sum();
                        for ((d, &yi), &gi) in da.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d = yi * (gi - inner);
                        }
                    }
                    accumulate(grads, *a, da)?;
                }
            }
            Op::GatLayer {
                input,
                weight,
                attn,
                graph,
                act,
                cache,
            } => {
                self.gat_backward(
                    grad,
                    &node.value,
                    *input,
                    *weight,
                    *attn,
                    graph,
                    *act,
                    cache,
                    grads,
                )?;
            }
            Op::InnerProductBce {
                z,
                target,
                pos_weight,
            } => {
                if self.needs(*z) {
                    let dz = inner_product_bce_grad(self.value(*z), target, *pos_weight)?;
                    accumulate(grads, *z, dz.scale(grad.data()[0]))?;
                }
            }
            Op::StudentTKl { z, centers, target } => {
                let (dz, du) = student_t_kl_grads(self.value(*z), self.value(*centers), target);
                let s = grad.data()[0];
                if self.needs(*z) {
                    accumulate(grads, *z, dz.scale(s))?;
                }
                if self.needs(*centers) {
                    accumulate(grads, *centers, du.scale(s))?;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn gat_backward(
        &self,
        grad_out: &Matrix,
        out: &Matrix,
        input: NodeId,
        weight: NodeId,
        attn: NodeId,
        graph: &Neighborhoods,
        act: GatActivation,
        cache: &GatCache,
        grads: &mut [Option<Matrix>],
    ) -> Result<()> {
        let n = graph.node_count();
        let d_out = cache.projected.cols();
        let attn_vec = self.value(attn);
        let a_left = &attn_vec.data()[0..d_out];
        let a_right = &attn_vec.data()[d_out..2 * d_out];

        // activation backward
        let mut d_pre = grad_out.clone();
        if act == GatActivation::Elu {
            for (d, (&pre, &o)) in d_pre
                .data_mut()
                .iter_mut()
                .zip(cache.pre_act.data().iter().zip(out.data()))
            {
                if pre <= 0.0 {
                    *d *= o + 1.0; // elu'(x) = elu(x) + 1 for x <= 0
                }
            }
        }

        let g = &cache.projected;
        let mut d_g = Matrix::zeros(n, d_out);
        let mut d_left = vec![0.0; n];
        let mut d_right = vec![0.0; n];

        for (j, d_left_j) in d_left.iter_mut().enumerate() {
            let range = graph.edge_range(j);
            let neigh = graph.neighbors(j);
            let alpha = &cache.alpha[range.clone()];
            let logits = &cache.logits[range];
            let dp_j = d_pre.row(j);

            // aggregation backward: d_alpha and dG from sum_k alpha_jk g_k
            let mut d_alpha = vec![0.0; neigh.len()];
            for (e, &k) in neigh.iter().enumerate() {
                let gk = g.row(k);
                d_alpha[e] = dp_j.iter().zip(gk).map(|(a, b)| a * b).sum();
                let drow = d_g.row_mut(k);
                let a = alpha[e];
                for (d, &v) in drow.iter_mut().zip(dp_j) {
                    *d += a * v;
                }
            }

            // softmax backward over the neighborhood
            let inner: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            for (e, &k) in neigh.iter().enumerate() {
                let mut dt = alpha[e] * (d_alpha[e] - inner);
                if logits[e] <= 0.0 {
                    dt *= LEAKY_SLOPE;
                }
                *d_left_j += dt;
                d_right[k] += dt;
            }
        }

        // left_j = <g_j, a_left>, right_k = <g_k, a_right>
        let mut d_attn = Matrix::zeros(2 * d_out, 1);
        for (j, (&dl, &dr)) in d_left.iter().zip(&d_right).enumerate() {
            let gj = g.row(j);
            let dgj = d_g.row_mut(j);
            for c in 0..d_out {
                dgj[c] += dl * a_left[c] + dr * a_right[c];
                d_attn.data_mut()[c] += dl * gj[c];
                d_attn.data_mut()[d_out + c] += dr * gj[c];
            }
        }

        if self.needs(attn) {
            accumulate(grads, attn, d_attn)?;
        }
        if self.needs(weight) {
            let dw = matmul_at_b(self.value(input), &d_g)?;
            accumulate(grads, weight, dw)?;
        }
        if self.needs(input) {
            let dh = matmul_a_bt(&d_g, self.value(weight))?;
            accumulate(grads, input, dh)?;
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Matrix>], id: NodeId, delta: Matrix) -> Result<()> {
    match &mut grads[id.0] {
        Some(existing) => existing.add_scaled_in_place(&delta, 1.0),
        slot @ None => {
            *slot = Some(delta);
            Ok(())
        }
    }
}

/// Numerically stable per-row softmax.
pub fn row_softmax(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..m.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    out
}

/// Student-t (degree 1) soft assignment of each row of `z` to `centers`;
/// rows sum to one.
pub fn student_t_assign(z: &Matrix, centers: &Matrix) -> Matrix {
    let n = z.rows();
    let k = centers.rows();
    let mut q = Matrix::zeros(n, k);
    for j in 0..n {
        let zr = z.row(j);
        let mut sum = 0.0;
        for c in 0..k {
            let ur = centers.row(c);
            let d2: f64 = zr.iter().zip(ur).map(|(a, b)| (a - b) * (a - b)).sum();
            let kern = 1.0 / (1.0 + d2);
            q.set(j, c, kern);
            sum += kern;
        }
        for c in 0..k {
            let v = q.get(j, c) / sum;
            q.set(j, c, v);
        }
    }
    q
}

/// Σ p·ln(p/q) with the 0·ln(0/q) = 0 convention.
pub fn kl_divergence(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(Error::shape(format!(
            "kl: {}x{} vs {}x{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let mut total = 0.0;
    for (&pv, &qv) in p.data().iter().zip(q.data()) {
        if pv > 0.0 {
            assert!(qv > 0.0, "kl target has mass where q is zero");
            total += pv * (pv / qv).ln();
        }
    }
    Ok(total)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn inner_product_bce_value(z: &Matrix, target: &Matrix, pos_weight: f64) -> Result<f64> {
    let logits = matmul_a_bt(z, z)?;
    let n2 = (target.rows() * target.cols()) as f64;
    let mut total = 0.0;
    for (&a, &m) in target.data().iter().zip(logits.data()) {
        // -ln sigmoid(m) = softplus(-m); -ln(1 - sigmoid(m)) = softplus(m)
        total += if a != 0.0 {
            pos_weight * softplus(-m)
        } else {
            softplus(m)
        };
    }
    Ok(total / n2)
}

fn inner_product_bce_grad(z: &Matrix, target: &Matrix, pos_weight: f64) -> Result<Matrix> {
    let logits = matmul_a_bt(z, z)?;
    let n = target.rows();
    let n2 = (n * n) as f64;
    let mut coeff = Matrix::zeros(n, n);
    for ((c, &a), &m) in coeff
        .data_mut()
        .iter_mut()
        .zip(target.data())
        .zip(logits.data())
    {
        let s = sigmoid(m);
        *c = if a != 0.0 { pos_weight * (s - 1.0) } else { s } / n2;
    }
    // d/dZ of sum coeff_jk (z_j·z_k) with coeff symmetric: 2·coeff·Z
    Ok(matmul(&coeff, z)?.scale(2.0))
}

fn student_t_kl_grads(z: &Matrix, centers: &Matrix, target: &Matrix) -> (Matrix, Matrix) {
    let n = z.rows();
    let k = centers.rows();
    let d = z.cols();
    let mut dz = Matrix::zeros(n, d);
    let mut du = Matrix::zeros(k, d);
    for j in 0..n {
        let zr = z.row(j);
        let mut kern = vec![0.0; k];
        let mut sum = 0.0;
        for (c, kv) in kern.iter_mut().enumerate() {
            let ur = centers.row(c);
            let d2: f64 = zr.iter().zip(ur).map(|(a, b)| (a - b) * (a - b)).sum();
            *kv = 1.0 / (1.0 + d2);
            sum += *kv;
        }
        let row_mass: f64 = target.row(j).iter().sum();
        for (c, &kv) in kern.iter().enumerate() {
            let q = kv / sum;
            let w = 2.0 * kv * (target.get(j, c) - row_mass * q);
            let ur = centers.row(c);
            for i in 0..d {
                let diff = zr[i] - ur[i];
                dz.data_mut()[j * d + i] += w * diff;
                du.data_mut()[c * d + i] -= w * diff;
            }
        }
    }
    (dz, du)
}

fn gat_forward_cached(
    h: &Matrix,
    w: &Matrix,
    attn: &Matrix,
    graph: &Neighborhoods,
    act: GatActivation,
) -> Result<(Matrix, GatCache)> {
    let n = h.rows();
    if graph.node_count() != n {
        return Err(Error::shape(format!(
            "gat_layer: graph over {} nodes vs {} feature rows",
            graph.node_count(),
            n
        )));
    }
    let g = matmul(h, w)?;
    let d_out = g.cols();
    if attn.shape() != (2 * d_out, 1) {
        return Err(Error::shape(format!(
            "gat_layer: attention vector {}x{}, expected {}x1",
            attn.rows(),
            attn.cols(),
            2 * d_out
        )));
    }
    let a_left = &attn.data()[0..d_out];
    let a_right = &attn.data()[d_out..2 * d_out];

    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for (j, (l, r)) in left.iter_mut().zip(right.iter_mut()).enumerate() {
        let gj = g.row(j);
        *l = gj.iter().zip(a_left).map(|(a, b)| a * b).sum();
        *r = gj.iter().zip(a_right).map(|(a, b)| a * b).sum();
    }

    let mut logits = vec![0.0; graph.edge_count()];
    let mut alpha = vec![0.0; graph.edge_count()];
    let mut pre_act = Matrix::zeros(n, d_out);
    for (j, &left_j) in left.iter().enumerate() {
        let range = graph.edge_range(j);
        let neigh = graph.neighbors(j);
        let mut max_e = f64::NEG_INFINITY;
        for (e, &k) in neigh.iter().enumerate() {
            let t = left_j + right[k];
            logits[range.start + e] = t;
            let lrelu = if t > 0.0 { t } else { LEAKY_SLOPE * t };
            alpha[range.start + e] = lrelu;
            max_e = max_e.max(lrelu);
        }
        let mut sum = 0.0;
        for e in range.clone() {
            alpha[e] = (alpha[e] - max_e).exp();
            sum += alpha[e];
        }
        let out_row = pre_act.row_mut(j);
        for (e, &k) in neigh.iter().enumerate() {
            let a = alpha[range.start + e] / sum;
            alpha[range.start + e] = a;
            let gk = g.row(k);
            for (o, &v) in out_row.iter_mut().zip(gk) {
                *o += a * v;
            }
        }
    }

    let out = match act {
        GatActivation::Elu => pre_act.map(|x| if x > 0.0 { x } else { x.exp() - 1.0 }),
        GatActivation::Linear => pre_act.clone(),
    };
    Ok((
        out,
        GatCache {
            projected: g,
            logits,
            alpha,
            pre_act,
        },
    ))
}

/// Attention coefficients of one layer, row-normalized over each
/// neighborhood. Exposed for inspection and tests.
pub fn gat_attention(
    h: &Matrix,
    w: &Matrix,
    attn: &Matrix,
    graph: &Neighborhoods,
) -> Result<Vec<Vec<f64>>> {
    let (_, cache) = gat_forward_cached(h, w, attn, graph, GatActivation::Linear)?;
    Ok((0..graph.node_count())
        .map(|j| cache.alpha[graph.edge_range(j)].to_vec())
        .collect())
}
