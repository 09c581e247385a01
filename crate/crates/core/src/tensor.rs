//! Dense rank-3 arrays and the convolution / dense primitives the layers use.
//!
//! A [`Tensor`] is stored row-major with depth innermost, so the feature
//! vector at one spatial location is a contiguous slice. Filter weights use
//! the matching `[row][col][in_depth][out_depth]` layout, which keeps every
//! inner loop a contiguous multiply-add over output maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a [`Tensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
}

impl Shape {
    pub const fn new(rows: usize, cols: usize, depth: usize) -> Self {
        Shape { rows, cols, depth }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols * self.depth
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.depth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    /// # Panics
    /// Panics if any dimension is zero.
    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        assert!(
            rows > 0 && cols > 0 && depth > 0,
            "tensor dimensions must be positive, got {rows}x{cols}x{depth}"
        );
        Tensor {
            shape: Shape::new(rows, cols, depth),
            data: vec![0.0; rows * cols * depth],
        }
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        let mut t = Tensor::zeros(shape.rows, shape.cols, shape.depth);
        t.data.fill(value);
        t
    }

    pub fn from_vec(rows: usize, cols: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::shape("rows", 1, 0));
        }
        if cols == 0 {
            return Err(Error::shape("cols", 1, 0));
        }
        if depth == 0 {
            return Err(Error::shape("depth", 1, 0));
        }
        if data.len() != rows * cols * depth {
            return Err(Error::shape("data length", rows * cols * depth, data.len()));
        }
        Ok(Tensor {
            shape: Shape::new(rows, cols, depth),
            data,
        })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor::zeros(shape.rows, shape.cols, shape.depth);
        for r in 0..shape.rows {
            for c in 0..shape.cols {
                for d in 0..shape.depth {
                    t.data[(r * shape.cols + c) * shape.depth + d] = f(r, c, d);
                }
            }
        }
        t
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    pub fn depth(&self) -> usize {
        self.shape.depth
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, r: usize, c: usize, d: usize) -> usize {
        (r * self.shape.cols + c) * self.shape.depth + d
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, d: usize) -> f64 {
        self.data[self.index(r, c, d)]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, d: usize, value: f64) {
        let i = self.index(r, c, d);
        self.data[i] = value;
    }

    /// Feature vector (all depth entries) at one spatial location.
    #[inline]
    pub fn pixel(&self, r: usize, c: usize) -> &[f64] {
        let start = (r * self.shape.cols + c) * self.shape.depth;
        &self.data[start..start + self.shape.depth]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|x| x * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Copy of rows `start..start + len`.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Tensor> {
        if len == 0 || start + len > self.shape.rows {
            return Err(Error::shape("rows", start + len.max(1), self.shape.rows));
        }
        let stride = self.shape.cols * self.shape.depth;
        Tensor::from_vec(
            len,
            self.shape.cols,
            self.shape.depth,
            self.data[start * stride..(start + len) * stride].to_vec(),
        )
    }

    /// Values of one column (channel) at depth `d`, in row order.
    pub fn column(&self, c: usize, d: usize) -> Vec<f64> {
        (0..self.shape.rows).map(|r| self.get(r, c, d)).collect()
    }

    /// Stacks tensors of identical rows/cols along the depth axis.
    pub fn concat_depth(parts: &[&Tensor]) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Usage("concat_depth needs at least one tensor".into()))?;
        let (rows, cols) = (first.rows(), first.cols());
        for p in parts {
            if p.rows() != rows {
                return Err(Error::shape("rows", rows, p.rows()));
            }
            if p.cols() != cols {
                return Err(Error::shape("cols", cols, p.cols()));
            }
        }
        let depth: usize = parts.iter().map(|p| p.depth()).sum();
        let mut data = Vec::with_capacity(rows * cols * depth);
        for px in 0..rows * cols {
            for p in parts {
                let d = p.depth();
                data.extend_from_slice(&p.data[px * d..(px + 1) * d]);
            }
        }
        Tensor::from_vec(rows, cols, depth, data)
    }

    /// Splits along depth into consecutive blocks of the given sizes.
    pub fn split_depth(&self, sizes: &[usize]) -> Result<Vec<Tensor>> {
        let total: usize = sizes.iter().sum();
        if total != self.depth() {
            return Err(Error::shape("depth", self.depth(), total));
        }
        let mut out: Vec<Tensor> = sizes
            .iter()
            .map(|&d| Tensor::zeros(self.rows(), self.cols(), d))
            .collect();
        for px in 0..self.rows() * self.cols() {
            let src = &self.data[px * total..(px + 1) * total];
            let mut offset = 0;
            for (t, &d) in out.iter_mut().zip(sizes) {
                t.data[px * d..(px + 1) * d].copy_from_slice(&src[offset..offset + d]);
                offset += d;
            }
        }
        Ok(out)
    }
}

/// Border handling for [`conv2d`]. Stride is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero-padded so output rows/cols equal input rows/cols. The filter
    /// window for output `(r, c)` starts `(R - 1) / 2` rows above and
    /// `(C - 1) / 2` columns left of it.
    Same,
    /// No padding: output is `rows - R + 1` by `cols - C + 1`.
    Valid,
}

impl Padding {
    /// Output shape of a convolution, or the axis that does not fit.
    pub fn output_shape(&self, input: Shape, filter_rows: usize, filter_cols: usize, out_depth: usize) -> Result<Shape> {
        match self {
            Padding::Same => Ok(Shape::new(input.rows, input.cols, out_depth)),
            Padding::Valid => {
                if input.rows < filter_rows {
                    return Err(Error::shape("rows", filter_rows, input.rows));
                }
                if input.cols < filter_cols {
                    return Err(Error::shape("cols", filter_cols, input.cols));
                }
                Ok(Shape::new(
                    input.rows - filter_rows + 1,
                    input.cols - filter_cols + 1,
                    out_depth,
                ))
            }
        }
    }

    fn offsets(&self, filter_rows: usize, filter_cols: usize) -> (isize, isize) {
        match self {
            Padding::Same => (((filter_rows - 1) / 2) as isize, ((filter_cols - 1) / 2) as isize),
            Padding::Valid => (0, 0),
        }
    }
}

/// A bank of `out_depth` filters of size `filter_rows x filter_cols x in_depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub filter_rows: usize,
    pub filter_cols: usize,
    pub in_depth: usize,
    pub out_depth: usize,
    /// Indexed `[row][col][in][out]`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl FilterBank {
    pub fn zeros(filter_rows: usize, filter_cols: usize, in_depth: usize, out_depth: usize) -> Self {
        assert!(filter_rows > 0 && filter_cols > 0 && in_depth > 0 && out_depth > 0);
        FilterBank {
            filter_rows,
            filter_cols,
            in_depth,
            out_depth,
            weights: vec![0.0; filter_rows * filter_cols * in_depth * out_depth],
            biases: vec![0.0; out_depth],
        }
    }

    pub fn new(
        filter_rows: usize,
        filter_cols: usize,
        in_depth: usize,
        out_depth: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        let expected = filter_rows * filter_cols * in_depth * out_depth;
        if expected == 0 {
            return Err(Error::Spec("filter bank dimensions must be positive".into()));
        }
        if weights.len() != expected {
            return Err(Error::shape("weights", expected, weights.len()));
        }
        if biases.len() != out_depth {
            return Err(Error::shape("biases", out_depth, biases.len()));
        }
        Ok(FilterBank {
            filter_rows,
            filter_cols,
            in_depth,
            out_depth,
            weights,
            biases,
        })
    }

    #[inline]
    pub fn weight_index(&self, i: usize, j: usize, m: usize, k: usize) -> usize {
        ((i * self.filter_cols + j) * self.in_depth + m) * self.out_depth + k
    }

    pub fn weight(&self, i: usize, j: usize, m: usize, k: usize) -> f64 {
        self.weights[self.weight_index(i, j, m, k)]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Same dimensions, all values zero; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        FilterBank::zeros(self.filter_rows, self.filter_cols, self.in_depth, self.out_depth)
    }
}

fn check_depth(input: &Tensor, filters: &FilterBank) -> Result<()> {
    if input.depth() != filters.in_depth {
        return Err(Error::shape("depth", filters.in_depth, input.depth()));
    }
    Ok(())
}

/// Pre-activation convolution: weighted sum over the filter window plus bias.
pub fn conv2d(input: &Tensor, filters: &FilterBank, padding: Padding) -> Result<Tensor> {
    check_depth(input, filters)?;
    let out_shape = padding.output_shape(input.shape(), filters.filter_rows, filters.filter_cols, filters.out_depth)?;
    let (top, left) = padding.offsets(filters.filter_rows, filters.filter_cols);
    let (in_rows, in_cols) = (input.rows() as isize, input.cols() as isize);
    let m_depth = filters.in_depth;
    let k_depth = filters.out_depth;
    let mut out = Tensor::zeros(out_shape.rows, out_shape.cols, out_shape.depth);

    for r in 0..out_shape.rows {
        for c in 0..out_shape.cols {
            let base = (r * out_shape.cols + c) * k_depth;
            let acc = &mut out.data[base..base + k_depth];
            acc.copy_from_slice(&filters.biases);
            for i in 0..filters.filter_rows {
                let ir = r as isize + i as isize - top;
                if ir < 0 || ir >= in_rows {
                    continue;
                }
                for j in 0..filters.filter_cols {
                    let ic = c as isize + j as isize - left;
                    if ic < 0 || ic >= in_cols {
                        continue;
                    }
                    let x = input.pixel(ir as usize, ic as usize);
                    let w0 = (i * filters.filter_cols + j) * m_depth * k_depth;
                    let block = &filters.weights[w0..w0 + m_depth * k_depth];
                    for (xm, wrow) in x.iter().zip(block.chunks_exact(k_depth)) {
                        for (a, w) in acc.iter_mut().zip(wrow) {
                            *a += xm * w;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of a scalar loss through [`conv2d`].
///
/// Returns the gradient with respect to the input and a [`FilterBank`]
/// holding the weight and bias gradients.
pub fn conv2d_backward(
    input: &Tensor,
    filters: &FilterBank,
    upstream_grad: &Tensor,
    padding: Padding,
) -> Result<(Tensor, FilterBank)> {
    let mut input_grad = Tensor::zeros(input.rows(), input.cols(), input.depth());
    let mut weight_grad = filters.zeros_like();
    conv2d_backward_into(input, filters, upstream_grad, padding, Some(&mut input_grad), &mut weight_grad)?;
    Ok((input_grad, weight_grad))
}

/// Accumulating form of [`conv2d_backward`]: adds into `weight_grad` and,
/// when given, into `input_grad`.
pub fn conv2d_backward_into(
    input: &Tensor,
    filters: &FilterBank,
    upstream_grad: &Tensor,
    padding: Padding,
    mut input_grad: Option<&mut Tensor>,
    weight_grad: &mut FilterBank,
) -> Result<()> {
    check_depth(input, filters)?;
    let out_shape = padding.output_shape(input.shape(), filters.filter_rows, filters.filter_cols, filters.out_depth)?;
    let g_shape = upstream_grad.shape();
    if g_shape.rows != out_shape.rows {
        return Err(Error::shape("upstream rows", out_shape.rows, g_shape.rows));
    }
    if g_shape.cols != out_shape.cols {
        return Err(Error::shape("upstream cols", out_shape.cols, g_shape.cols));
    }
    if g_shape.depth != out_shape.depth {
        return Err(Error::shape("upstream depth", out_shape.depth, g_shape.depth));
    }
    if let Some(ig) = input_grad.as_deref() {
        if ig.shape() != input.shape() {
            return Err(Error::shape("input grad length", input.len(), ig.len()));
        }
    }
    if weight_grad.weights.len() != filters.weights.len() {
        return Err(Error::shape("weight grad length", filters.weights.len(), weight_grad.weights.len()));
    }

    let (top, left) = padding.offsets(filters.filter_rows, filters.filter_cols);
    let (in_rows, in_cols) = (input.rows() as isize, input.cols() as isize);
    let m_depth = filters.in_depth;
    let k_depth = filters.out_depth;

    for r in 0..out_shape.rows {
        for c in 0..out_shape.cols {
            let g = upstream_grad.pixel(r, c);
            for (b, gk) in weight_grad.biases.iter_mut().zip(g) {
                *b += gk;
            }
            for i in 0..filters.filter_rows {
                let ir = r as isize + i as isize - top;
                if ir < 0 || ir >= in_rows {
                    continue;
                }
                for j in 0..filters.filter_cols {
                    let ic = c as isize + j as isize - left;
                    if ic < 0 || ic >= in_cols {
                        continue;
                    }
                    let px = (ir as usize * input.cols() + ic as usize) * m_depth;
                    let x = &input.data[px..px + m_depth];
                    let w0 = (i * filters.filter_cols + j) * m_depth * k_depth;
                    let wblock = &filters.weights[w0..w0 + m_depth * k_depth];
                    let gblock = &mut weight_grad.weights[w0..w0 + m_depth * k_depth];
                    for (xm, grow) in x.iter().zip(gblock.chunks_exact_mut(k_depth)) {
                        for (gw, gk) in grow.iter_mut().zip(g) {
                            *gw += xm * gk;
                        }
                    }
                    if let Some(ig) = input_grad.as_deref_mut() {
                        let gx = &mut ig.data[px..px + m_depth];
                        for (gxm, wrow) in gx.iter_mut().zip(wblock.chunks_exact(k_depth)) {
                            let mut s = 0.0;
                            for (w, gk) in wrow.iter().zip(g) {
                                s += w * gk;
                            }
                            *gxm += s;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Fully connected layer over the flattened input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights {
    pub in_size: usize,
    pub out_size: usize,
    /// Indexed `[in][out]`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseWeights {
    pub fn zeros(in_size: usize, out_size: usize) -> Self {
        DenseWeights {
            in_size,
            out_size,
            weights: vec![0.0; in_size * out_size],
            biases: vec![0.0; out_size],
        }
    }

    pub fn new(in_size: usize, out_size: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != in_size * out_size {
            return Err(Error::shape("weights", in_size * out_size, weights.len()));
        }
        if biases.len() != out_size {
            return Err(Error::shape("biases", out_size, biases.len()));
        }
        Ok(DenseWeights {
            in_size,
            out_size,
            weights,
            biases,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// `out[r] = sum_i weights[i][r] * flatten(input)[i] + biases[r]`.
pub fn dense(input: &Tensor, layer: &DenseWeights) -> Result<Vec<f64>> {
    if input.len() != layer.in_size {
        return Err(Error::shape("dense input size", layer.in_size, input.len()));
    }
    let mut out = layer.biases.clone();
    for (x, wrow) in input.as_slice().iter().zip(layer.weights.chunks_exact(layer.out_size)) {
        for (o, w) in out.iter_mut().zip(wrow) {
            *o += x * w;
        }
    }
    Ok(out)
}

/// Gradients through [`dense`]: input gradient (input-shaped) plus weight
/// and bias gradients accumulated into `grads`.
pub fn dense_backward_into(
    input: &Tensor,
    layer: &DenseWeights,
    upstream: &[f64],
    grads: &mut DenseWeights,
) -> Result<Tensor> {
    if input.len() != layer.in_size {
        return Err(Error::shape("dense input size", layer.in_size, input.len()));
    }
    if upstream.len() != layer.out_size {
        return Err(Error::shape("dense upstream size", layer.out_size, upstream.len()));
    }
    let mut input_grad = Tensor::zeros(input.rows(), input.cols(), input.depth());
    for (b, g) in grads.biases.iter_mut().zip(upstream) {
        *b += g;
    }
    for ((x, wrow), (gx, grow)) in input
        .as_slice()
        .iter()
        .zip(layer.weights.chunks_exact(layer.out_size))
        .zip(input_grad.data.iter_mut().zip(grads.weights.chunks_exact_mut(layer.out_size)))
    {
        let mut s = 0.0;
        for ((w, g), gw) in wrow.iter().zip(upstream).zip(grow.iter_mut()) {
            s += w * g;
            *gw += x * g;
        }
        *gx = s;
    }
    Ok(input_grad)
}
