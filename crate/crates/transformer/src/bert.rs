//! BERT encoder built from differentiable tensor ops, with the parameter
//! names of published BERT checkpoints.

use candle_core::{DType, Module, Tensor, D};
use candle_nn::{embedding, linear, Embedding, Linear, VarBuilder};

use crate::encoder::EncoderConfig;
use crate::TransformerError;

struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    fn load(vb: VarBuilder, size: usize, eps: f64) -> candle_core::Result<Self> {
        Ok(Self {
            weight: vb.get_with_hints(size, "weight", candle_nn::Init::Const(1.0))?,
            bias: vb.get_with_hints(size, "bias", candle_nn::Init::Const(0.0))?,
            eps,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let centered = x.broadcast_sub(&x.mean_keepdim(D::Minus1)?)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        normed
            .broadcast_mul(&self.weight)?
            .broadcast_add(&self.bias)
    }
}

struct Embeddings {
    word: Embedding,
    position: Embedding,
    token_type: Embedding,
    norm: LayerNorm,
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attention_out: Linear,
    attention_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    output_norm: LayerNorm,
}

pub(crate) struct Bert {
    embeddings: Embeddings,
    layers: Vec<Layer>,
    heads: usize,
    act: Activation,
}

#[derive(Clone, Copy)]
enum Activation {
    Gelu,
    GeluApproximate,
    Relu,
}

impl Bert {
    pub(crate) fn load(vb: VarBuilder, c: &EncoderConfig) -> Result<Self, TransformerError> {
        let act = match c.hidden_act.as_str() {
            "gelu" => Activation::Gelu,
            "gelu_new" | "gelu_approximate" => Activation::GeluApproximate,
            "relu" => Activation::Relu,
            other => {
                return Err(TransformerError::Config(format!(
                    "unsupported hidden_act `{other}`"
                )))
            }
        };
        if c.num_attention_heads == 0 || !c.hidden_size.is_multiple_of(c.num_attention_heads) {
            return Err(TransformerError::Config(format!(
                "hidden_size {} is not a multiple of num_attention_heads {}",
                c.hidden_size, c.num_attention_heads
            )));
        }
        let h = c.hidden_size;
        let e = vb.pp("embeddings");
        let embeddings = Embeddings {
            word: embedding(c.vocab_size, h, e.pp("word_embeddings"))?,
            position: embedding(c.max_position_embeddings, h, e.pp("position_embeddings"))?,
            token_type: embedding(c.type_vocab_size, h, e.pp("token_type_embeddings"))?,
            norm: LayerNorm::load(e.pp("LayerNorm"), h, c.layer_norm_eps)?,
        };
        let layers = (0..c.num_hidden_layers)
            .map(|i| {
                let l = vb.pp(format!("encoder.layer.{i}"));
                let att = l.pp("attention");
                Ok(Layer {
                    query: linear(h, h, att.pp("self.query"))?,
                    key: linear(h, h, att.pp("self.key"))?,
                    value: linear(h, h, att.pp("self.value"))?,
                    attention_out: linear(h, h, att.pp("output.dense"))?,
                    attention_norm: LayerNorm::load(
                        att.pp("output.LayerNorm"),
                        h,
                        c.layer_norm_eps,
                    )?,
                    intermediate: linear(h, c.intermediate_size, l.pp("intermediate.dense"))?,
                    output: linear(c.intermediate_size, h, l.pp("output.dense"))?,
                    output_norm: LayerNorm::load(l.pp("output.LayerNorm"), h, c.layer_norm_eps)?,
                })
            })
            .collect::<candle_core::Result<Vec<_>>>()?;
        Ok(Self {
            embeddings,
            layers,
            heads: c.num_attention_heads,
            act,
        })
    }

    /// `ids`, `mask`: `[batch, len]` u32. Returns `[batch, len, hidden]`.
    pub(crate) fn forward(&self, ids: &Tensor, mask: &Tensor) -> candle_core::Result<Tensor> {
        let (batch, len) = ids.dims2()?;
        let positions = Tensor::arange(0u32, len as u32, ids.device())?
            .unsqueeze(0)?
            .broadcast_as((batch, len))?;
        let types = ids.zeros_like()?;
        let x = self
            .embeddings
            .word
            .forward(ids)?
            .add(&self.embeddings.position.forward(&positions.contiguous()?)?)?
            .add(&self.embeddings.token_type.forward(&types)?)?;
        let mut x = self.embeddings.norm.forward(&x)?;
        // additive mask: 0 for real tokens, -1e4 for padding
        let bias = ((mask.to_dtype(DType::F32)? - 1.0)? * 1e4)?.reshape((batch, 1, 1, len))?;
        for layer in &self.layers {
            x = self.layer_forward(layer, &x, &bias)?;
        }
        Ok(x)
    }

    fn layer_forward(&self, l: &Layer, x: &Tensor, bias: &Tensor) -> candle_core::Result<Tensor> {
        let (b, n, h) = x.dims3()?;
        let d = h / self.heads;
        let split = |t: Tensor| {
            t.reshape((b, n, self.heads, d))?
                .transpose(1, 2)?
                .contiguous()
        };
        let q = split(l.query.forward(x)?)?;
        let k = split(l.key.forward(x)?)?;
        let v = split(l.value.forward(x)?)?;
        let scores = (q.matmul(&k.t()?)? / (d as f64).sqrt())?.broadcast_add(bias)?;
        let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let ctx = probs
            .matmul(&v)?
            .transpose(1, 2)?
            .contiguous()?
            .reshape((b, n, h))?;
        let x = l
            .attention_norm
            .forward(&(l.attention_out.forward(&ctx)? + x)?)?;
        let inner = l.intermediate.forward(&x)?;
        let inner = match self.act {
            Activation::Gelu => inner.gelu_erf()?,
            Activation::GeluApproximate => inner.gelu()?,
            Activation::Relu => inner.relu()?,
        };
        l.output_norm.forward(&(l.output.forward(&inner)? + x)?)
    }
}
