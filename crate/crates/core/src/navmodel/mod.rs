//! Sequence-to-sequence navigator: BiLSTM instruction encoder, grid CNN with
//! decoder-conditioned channel attention, LSTM action decoder, teacher-forced
//! NLL training and ensemble beam search.

mod beam;
mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

pub use beam::{beam_search, greedy_decode, BeamResult};
pub use train::{train, EpochLog, StepStats, TrainConfig, TrainHistory};

use crate::datastore::Vocabulary;
use crate::nnet::{
    cross_entropy, global_grad_norm, relu, sigmoid, softmax, softmax_backward, tanh, Adam, Conv2d, Embedding, Linear,
    LstmCache, LstmCell, Param, Parameterized, ShapeError,
};
use crate::percept::{encode_bof, encode_grid, PerceptError, PerceptGrid, BOF_BITS, CELL_BITS, GRID_COLS, GRID_ROWS};
use crate::worldsim::{step, Action, Pose, StepResult, WorldMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Grid percept through the attention CNN.
    Full,
    /// No perception at all.
    LanguageOnly,
    /// Bag-of-features percept fed straight to the decoder.
    BagOfFeatures,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::LanguageOnly, Variant::BagOfFeatures, Variant::Full];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::LanguageOnly => "lo",
            Variant::BagOfFeatures => "bof",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Variant::Full),
            "lo" | "languageOnly" => Some(Variant::LanguageOnly),
            "bof" | "bagOfFeatures" => Some(Variant::BagOfFeatures),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Convolution after the attention layer: kernel height, width and output
/// channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub kh: usize,
    pub kw: usize,
    pub channels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Per direction; the decoder has twice this many units.
    pub enc_hidden: usize,
    pub attn_hidden: usize,
    pub filter_width: usize,
    /// Channels of the first convolution, i.e. the attention width.
    pub channels: usize,
    pub extra_convs: Vec<ConvSpec>,
    pub variant: Variant,
    pub beam_width: usize,
    pub max_actions: usize,
    pub ensemble_size: usize,
}

/// Number of actions the decoder chooses from.
pub const ACTIONS: usize = Action::COUNT;

/// Shape of the grid percept as a `(rows, columns, bits)` image.
pub const GRID_SHAPE: [usize; 3] = [GRID_ROWS, GRID_COLS, CELL_BITS];

impl ModelConfig {
    pub fn new(vocab_size: usize, variant: Variant) -> Self {
        ModelConfig {
            vocab_size,
            embed_dim: 64,
            enc_hidden: 128,
            attn_hidden: 64,
            filter_width: 5,
            channels: 64,
            extra_convs: vec![ConvSpec { kh: 5, kw: 5, channels: 32 }],
            variant,
            beam_width: 4,
            max_actions: 35,
            ensemble_size: 10,
        }
    }

    /// Small dimensions for gradient checks and quick tests.
    pub fn tiny(vocab_size: usize, variant: Variant) -> Self {
        ModelConfig {
            embed_dim: 8,
            enc_hidden: 8,
            attn_hidden: 8,
            filter_width: 3,
            channels: 4,
            extra_convs: vec![ConvSpec { kh: 3, kw: 3, channels: 3 }],
            ..Self::new(vocab_size, variant)
        }
    }

    pub fn decoder_hidden(&self) -> usize {
        2 * self.enc_hidden
    }

    /// Output shapes of the first convolution and each extra one.
    pub fn conv_shapes(&self) -> Result<Vec<[usize; 3]>, ModelError> {
        let [h, w, _] = GRID_SHAPE;
        if self.filter_width == 0 || self.filter_width > w || self.channels == 0 {
            return Err(ModelError::Config(alloc::format!("filter width {} does not fit 20 columns", self.filter_width)));
        }
        let mut shapes = vec![[h, w - self.filter_width + 1, self.channels]];
        for spec in &self.extra_convs {
            let [ph, pw, _] = *shapes.last().unwrap();
            if spec.kh == 0 || spec.kw == 0 || spec.kh > ph || spec.kw > pw || spec.channels == 0 {
                return Err(ModelError::Config(alloc::format!(
                    "convolution {}x{} does not fit a {ph}x{pw} input",
                    spec.kh,
                    spec.kw
                )));
            }
            shapes.push([ph - spec.kh + 1, pw - spec.kw + 1, spec.channels]);
        }
        Ok(shapes)
    }

    /// Width of the perceptual features the decoder sees.
    pub fn feature_dim(&self) -> Result<usize, ModelError> {
        Ok(match self.variant {
            Variant::Full => self.conv_shapes()?.last().unwrap().iter().product(),
            Variant::LanguageOnly => 0,
            Variant::BagOfFeatures => BOF_BITS,
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("enc_hidden", self.enc_hidden),
            ("attn_hidden", self.attn_hidden),
            ("beam_width", self.beam_width),
            ("max_actions", self.max_actions),
            ("ensemble_size", self.ensemble_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ModelError::Config(alloc::format!("{name} must be positive")));
            }
        }
        self.feature_dim().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("empty instruction")]
    EmptyInstruction,
    #[error("no sentences to follow")]
    NoSentences,
    #[error("no models given")]
    NoModels,
    #[error("gold actions must be nonempty and end with a single STOP")]
    BadGold,
    #[error("gold action {step} hits a wall")]
    GoldWallHit { step: usize },
    #[error("models disagree on {0}")]
    Incompatible(&'static str),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Percept(#[from] PerceptError),
    #[error("non-finite loss")]
    NonFinite,
}

/// One (instruction, world, start, gold) training or evaluation example.
#[derive(Clone, Debug)]
pub struct Example<'a> {
    pub tokens: Vec<usize>,
    pub world: &'a WorldMap,
    pub start: Pose,
    pub actions: &'a [Action],
}

impl<'a> Example<'a> {
    pub fn from_instance(inst: &'a crate::langgen::Instance, vocab: &Vocabulary) -> Self {
        Example { tokens: vocab.encode(&inst.instruction), world: &inst.world, start: inst.start, actions: &inst.actions }
    }
}

/// Attention MLP and convolutions of the full variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Perception {
    pub attn_hidden: Linear,
    pub attn_out: Linear,
    pub conv1: Conv2d,
    pub convs: Vec<Conv2d>,
}

/// All trainable tensors of the navigator.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub embed: Embedding,
    pub enc_fwd: LstmCell,
    pub enc_bwd: LstmCell,
    pub perception: Option<Perception>,
    pub decoder: LstmCell,
    /// Maps the decoder state to action scores; carries the output bias.
    pub out_state: Linear,
    /// Maps perceptual features to action scores.
    pub out_features: Option<Linear>,
}

/// Encoder output used to initialize the decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    /// `f_I ⊕ b_1`.
    pub h: Vec<f64>,
    /// Final forward and backward cells.
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub prev: Action,
    pub t: usize,
}

#[derive(Clone, Debug)]
struct EncoderTrace {
    tokens: Vec<usize>,
    fwd: Vec<LstmCache>,
    /// `bwd[k]` consumed token `I - 1 - k`.
    bwd: Vec<LstmCache>,
}

/// Intermediate values of one pass through the attention CNN.
#[derive(Clone, Debug, PartialEq)]
pub struct PerceptionTrace {
    pub input: Vec<f64>,
    pub attn_hidden: Vec<f64>,
    pub beta: Vec<f64>,
    /// First-layer activations before channel reweighting.
    pub layer1: Vec<f64>,
    /// `acts[0]` is the reweighted first layer, `acts[k]` the output of
    /// extra convolution `k`; the last entry is the feature vector.
    pub acts: Vec<Vec<f64>>,
    pub shapes: Vec<[usize; 3]>,
}

#[derive(Clone, Debug)]
struct StepTrace {
    s_prev: Vec<f64>,
    perception: Option<PerceptionTrace>,
    features: Vec<f64>,
    lstm: LstmCache,
    probs: Vec<f64>,
    target: usize,
}

/// Teacher-forced forward pass over one example.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    enc: EncoderTrace,
    pub encoded: Encoded,
    steps: Vec<StepTrace>,
    pub loss: f64,
    /// Steps whose argmax equals the gold action.
    pub correct: usize,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Action distribution at step `t`.
    pub fn probs(&self, t: usize) -> &[f64] {
        &self.steps[t].probs
    }

    pub fn perception(&self, t: usize) -> Option<&PerceptionTrace> {
        self.steps[t].perception.as_ref()
    }

    pub fn features(&self, t: usize) -> &[f64] {
        &self.steps[t].features
    }

    /// Decoder hidden state after step `t`.
    pub fn hidden(&self, t: usize) -> &[f64] {
        &self.steps[t].lstm.h
    }
}

fn one_hot(a: Action) -> [f64; ACTIONS] {
    let mut v = [0.0; ACTIONS];
    v[a.index()] = 1.0;
    v
}

impl Model {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let h = config.enc_hidden;
        let feat = config.feature_dim()?;
        let embed = Embedding::new(config.vocab_size, config.embed_dim, rng);
        let enc_fwd = LstmCell::new(config.embed_dim, h, rng);
        let enc_bwd = LstmCell::new(config.embed_dim, h, rng);
        let perception = match config.variant {
            Variant::Full => {
                let attn_hidden = Linear::new(2 * h, config.attn_hidden, true, rng);
                let attn_out = Linear::new(config.attn_hidden, config.channels, true, rng);
                let conv1 = Conv2d::new(1, config.filter_width, CELL_BITS, config.channels, rng);
                let mut cin = config.channels;
                let mut convs = Vec::new();
                for s in &config.extra_convs {
                    convs.push(Conv2d::new(s.kh, s.kw, cin, s.channels, rng));
                    cin = s.channels;
                }
                Some(Perception { attn_hidden, attn_out, conv1, convs })
            }
            _ => None,
        };
        let decoder = LstmCell::new(feat + ACTIONS, 2 * h, rng);
        let out_state = Linear::new(2 * h, ACTIONS, true, rng);
        let out_features = (feat > 0).then(|| Linear::new(feat, ACTIONS, false, rng));
        Ok(Model { config, embed, enc_fwd, enc_bwd, perception, decoder, out_state, out_features })
    }

    fn encode_traced(&self, tokens: &[usize]) -> Result<(Encoded, EncoderTrace), ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyInstruction);
        }
        let hd = self.config.enc_hidden;
        let xs: Vec<Vec<f64>> = tokens.iter().map(|&t| self.embed.forward(t)).collect();
        let run = |cell: &LstmCell, order: &mut dyn Iterator<Item = &Vec<f64>>| {
            let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
            let mut caches = Vec::with_capacity(tokens.len());
            for x in order {
                let cache = cell.forward(x, &h, &c);
                h.clone_from(&cache.h);
                c.clone_from(&cache.c);
                caches.push(cache);
            }
            (h, c, caches)
        };
        let (fh, fc, fwd) = run(&self.enc_fwd, &mut xs.iter());
        let (bh, bc, bwd) = run(&self.enc_bwd, &mut xs.iter().rev());
        let h = [fh, bh].concat();
        let c = [fc, bc].concat();
        Ok((Encoded { h, c }, EncoderTrace { tokens: tokens.to_vec(), fwd, bwd }))
    }

    /// `h = f_I ⊕ b_1` and the matching cells.
    pub fn encode(&self, tokens: &[usize]) -> Result<Encoded, ModelError> {
        self.encode_traced(tokens).map(|(e, _)| e)
    }

    fn attend_traced(&self, s_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.perception.as_ref().expect("attention exists only in the full variant");
        let a: Vec<f64> = p.attn_hidden.forward(s_prev).into_iter().map(tanh).collect();
        let beta = softmax(&p.attn_out.forward(&a));
        (a, beta)
    }

    /// Channel weights `β` from the previous decoder state. Panics for
    /// variants without perception.
    pub fn attend(&self, s_prev: &[f64]) -> Vec<f64> {
        self.attend_traced(s_prev).1
    }

    fn perceive_traced(&self, input: Vec<f64>, a: Vec<f64>, beta: Vec<f64>) -> Result<PerceptionTrace, ModelError> {
        let p = self.perception.as_ref().expect("perception exists only in the full variant");
        let d1 = self.config.channels;
        if beta.len() != d1 {
            return Err(ShapeError::Length { op: "perceive", expected: d1, got: beta.len() }.into());
        }
        let (pre1, s1) = p.conv1.forward(&input, GRID_SHAPE)?;
        let layer1: Vec<f64> = pre1.into_iter().map(relu).collect();
        let weighted: Vec<f64> = layer1.iter().enumerate().map(|(k, v)| v * beta[k % d1]).collect();
        let mut acts = vec![weighted];
        let mut shapes = vec![s1];
        for (k, conv) in p.convs.iter().enumerate() {
            let (pre, s) = conv.forward(acts.last().unwrap(), *shapes.last().unwrap())?;
            let last = k + 1 == p.convs.len();
            acts.push(pre.into_iter().map(|v| if last { sigmoid(v) } else { relu(v) }).collect());
            shapes.push(s);
        }
        Ok(PerceptionTrace { input, attn_hidden: a, beta, layer1, acts, shapes })
    }

    /// Features `c_t` of a grid percept under channel weights `beta`.
    pub fn perceive(&self, grid: &[f64], beta: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut t = self.perceive_traced(grid.to_vec(), Vec::new(), beta.to_vec())?;
        Ok(t.acts.pop().unwrap())
    }

    fn features_traced(
        &self,
        s_prev: &[f64],
        world: &WorldMap,
        pose: Pose,
    ) -> Result<(Vec<f64>, Option<PerceptionTrace>), ModelError> {
        Ok(match self.config.variant {
            Variant::LanguageOnly => (Vec::new(), None),
            Variant::BagOfFeatures => {
                let mut v = vec![0.0; BOF_BITS];
                encode_bof(world, pose).write_values(&mut v);
                (v, None)
            }
            Variant::Full => {
                let mut grid = vec![0.0; PerceptGrid::VALUES];
                encode_grid(world, pose)?.write_values(&mut grid);
                let (a, beta) = self.attend_traced(s_prev);
                let t = self.perceive_traced(grid, a, beta)?;
                (t.acts.last().unwrap().clone(), Some(t))
            }
        })
    }

    /// Decoder state before the first action.
    pub fn init_state(&self, enc: &Encoded) -> DecodeState {
        DecodeState { h: enc.h.clone(), c: enc.c.clone(), prev: Action::Stop, t: 0 }
    }

    fn decode_traced(&self, state: &DecodeState, features: &[f64]) -> (LstmCache, Vec<f64>) {
        let mut x = Vec::with_capacity(features.len() + ACTIONS);
        x.extend_from_slice(features);
        x.extend_from_slice(&one_hot(state.prev));
        let cache = self.decoder.forward(&x, &state.h, &state.c);
        let mut o = self.out_state.forward(&cache.h);
        if let Some(out) = &self.out_features {
            o.iter_mut().zip(out.forward(features)).for_each(|(a, b)| *a += b);
        }
        (cache, softmax(&o))
    }

    /// One decoder step on precomputed features. The returned state still
    /// carries the previous action; see [`DecodeState::after`].
    pub fn decode_step(&self, state: &DecodeState, features: &[f64]) -> Result<(DecodeState, Vec<f64>), ModelError> {
        let want = self.config.feature_dim()?;
        if features.len() != want {
            return Err(ShapeError::Length { op: "decode_step", expected: want, got: features.len() }.into());
        }
        let (cache, p) = self.decode_traced(state, features);
        Ok((DecodeState { h: cache.h, c: cache.c, prev: state.prev, t: state.t + 1 }, p))
    }

    /// Perceive at `pose` and take one decoder step.
    pub fn action_distribution(
        &self,
        state: &DecodeState,
        world: &WorldMap,
        pose: Pose,
    ) -> Result<(DecodeState, Vec<f64>), ModelError> {
        let (features, _) = self.features_traced(&state.h, world, pose)?;
        self.decode_step(state, &features)
    }

    /// Teacher-forced pass over `ex`, keeping everything backward needs.
    pub fn forward(&self, ex: &Example<'_>) -> Result<ForwardTrace, ModelError> {
        let stop_at = ex.actions.iter().position(|&a| a == Action::Stop);
        if stop_at != Some(ex.actions.len().wrapping_sub(1)) {
            return Err(ModelError::BadGold);
        }
        let (encoded, enc) = self.encode_traced(&ex.tokens)?;
        let mut state = self.init_state(&encoded);
        let mut pose = ex.start;
        let mut steps = Vec::with_capacity(ex.actions.len());
        let (mut loss, mut correct) = (0.0, 0);
        for (t, &a) in ex.actions.iter().enumerate() {
            let (features, perception) = self.features_traced(&state.h, ex.world, pose)?;
            let (lstm, probs) = self.decode_traced(&state, &features);
            let target = a.index();
            loss += cross_entropy(&probs, target);
            if argmax(&probs) == target {
                correct += 1;
            }
            let s_prev = core::mem::replace(&mut state.h, lstm.h.clone());
            state.c.clone_from(&lstm.c);
            state.prev = a;
            state.t += 1;
            steps.push(StepTrace { s_prev, perception, features, lstm, probs, target });
            match step(ex.world, pose, a) {
                StepResult::Moved(p) | StepResult::Turned(p) => pose = p,
                StepResult::Stopped => {}
                StepResult::WallHit => return Err(ModelError::GoldWallHit { step: t }),
            }
        }
        if !loss.is_finite() {
            return Err(ModelError::NonFinite);
        }
        Ok(ForwardTrace { enc, encoded, steps, loss, correct })
    }

    /// Negative log-likelihood of the gold actions.
    pub fn sequence_loss(&self, ex: &Example<'_>) -> Result<f64, ModelError> {
        Ok(self.forward(ex)?.loss)
    }

    /// Accumulate the gradient of `trace.loss` into every parameter.
    pub fn backward(&mut self, trace: &ForwardTrace) {
        let hd2 = self.config.decoder_hidden();
        let mut dh = vec![0.0; hd2];
        let mut dc = vec![0.0; hd2];
        for st in trace.steps.iter().rev() {
            let mut dlogit = st.probs.clone();
            dlogit[st.target] -= 1.0;
            let mut ds = dh;
            self.out_state.backward(&st.lstm.h, &dlogit, Some(&mut ds));
            let mut dfeat = vec![0.0; st.features.len()];
            if let Some(out) = &mut self.out_features {
                out.backward(&st.features, &dlogit, Some(&mut dfeat));
            }
            let (dx, dh_prev, dc_prev) = self.decoder.backward(&st.lstm, &ds, &dc);
            dfeat.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            dh = dh_prev;
            dc = dc_prev;
            if let Some(pt) = &st.perception {
                let ds_att = self.perception_backward(pt, &st.s_prev, dfeat);
                dh.iter_mut().zip(&ds_att).for_each(|(a, b)| *a += b);
            }
        }
        self.encoder_backward(&trace.enc, &dh, &dc);
    }

    /// Backpropagate feature gradients through the CNN and attention;
    /// returns the gradient with respect to the previous decoder state.
    fn perception_backward(&mut self, pt: &PerceptionTrace, s_prev: &[f64], dfeat: Vec<f64>) -> Vec<f64> {
        let d1 = self.config.channels;
        let p = self.perception.as_mut().expect("trace implies perception");
        let mut dact = dfeat;
        for k in (0..p.convs.len()).rev() {
            let out = &pt.acts[k + 1];
            let last = k + 1 == p.convs.len();
            let dpre: Vec<f64> = dact
                .iter()
                .zip(out)
                .map(|(d, &y)| if last { d * y * (1.0 - y) } else if y > 0.0 { *d } else { 0.0 })
                .collect();
            let mut din = vec![0.0; pt.acts[k].len()];
            p.convs[k].backward(&pt.acts[k], pt.shapes[k], &dpre, Some(&mut din));
            dact = din;
        }
        let mut dbeta = vec![0.0; d1];
        let mut dpre1 = vec![0.0; dact.len()];
        for (k, (&d, &z)) in dact.iter().zip(&pt.layer1).enumerate() {
            let ch = k % d1;
            dbeta[ch] += d * z;
            if z > 0.0 {
                dpre1[k] = d * pt.beta[ch];
            }
        }
        p.conv1.backward(&pt.input, GRID_SHAPE, &dpre1, None);
        let de = softmax_backward(&pt.beta, &dbeta);
        let mut da = vec![0.0; pt.attn_hidden.len()];
        p.attn_out.backward(&pt.attn_hidden, &de, Some(&mut da));
        let dpre_a: Vec<f64> = da.iter().zip(&pt.attn_hidden).map(|(d, a)| d * (1.0 - a * a)).collect();
        let mut ds = vec![0.0; s_prev.len()];
        p.attn_hidden.backward(s_prev, &dpre_a, Some(&mut ds));
        ds
    }

    fn encoder_backward(&mut self, enc: &EncoderTrace, dh: &[f64], dc: &[f64]) {
        let hd = self.config.enc_hidden;
        let n = enc.tokens.len();
        let (mut gh, mut gc) = (dh[..hd].to_vec(), dc[..hd].to_vec());
        for i in (0..n).rev() {
            let (dx, h, c) = self.enc_fwd.backward(&enc.fwd[i], &gh, &gc);
            self.embed.backward(enc.tokens[i], &dx);
            gh = h;
            gc = c;
        }
        let (mut gh, mut gc) = (dh[hd..].to_vec(), dc[hd..].to_vec());
        for k in (0..n).rev() {
            let (dx, h, c) = self.enc_bwd.backward(&enc.bwd[k], &gh, &gc);
            self.embed.backward(enc.tokens[n - 1 - k], &dx);
            gh = h;
            gc = c;
        }
    }

    /// Zero gradients, then accumulate those of `ex`'s loss.
    pub fn loss_and_grad(&mut self, ex: &Example<'_>) -> Result<ForwardTrace, ModelError> {
        self.zero_grad();
        let trace = self.forward(ex)?;
        self.backward(&trace);
        Ok(trace)
    }

    /// One per-instance update: backward, global-norm clipping, Adam.
    pub fn train_step(&mut self, ex: &Example<'_>, adam: &Adam, clip: f64) -> Result<StepStats, ModelError> {
        let trace = self.loss_and_grad(ex)?;
        let grad_norm = global_grad_norm(self);
        if !grad_norm.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let scale = crate::nnet::clip_global_norm(self, clip);
        crate::nnet::adam_step(self, adam);
        Ok(StepStats { loss: trace.loss, correct: trace.correct, total: trace.len(), grad_norm, clipped_norm: grad_norm * scale })
    }
}

impl DecodeState {
    /// State after committing to `action`.
    pub fn after(mut self, action: Action) -> Self {
        self.prev = action;
        self
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl Parameterized for Model {
    fn visit(&self, f: &mut dyn FnMut(&str, &Param)) {
        f("W_e", &self.embed.w);
        self.enc_fwd.visit("W_f", f);
        self.enc_bwd.visit("W_b", f);
        if let Some(p) = &self.perception {
            p.attn_hidden.visit("W_a.hidden", f);
            p.attn_out.visit("W_a.out", f);
            p.conv1.visit("W_c.0", f);
            for (k, c) in p.convs.iter().enumerate() {
                c.visit(&alloc::format!("W_c.{}", k + 1), f);
            }
        }
        self.decoder.visit("W_d", f);
        f("W_1", &self.out_state.w);
        f("b", self.out_state.b.as_ref().expect("output bias"));
        if let Some(out) = &self.out_features {
            f("W_2", &out.w);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Param)) {
        f("W_e", &mut self.embed.w);
        self.enc_fwd.visit_mut("W_f", f);
        self.enc_bwd.visit_mut("W_b", f);
        if let Some(p) = &mut self.perception {
            p.attn_hidden.visit_mut("W_a.hidden", f);
            p.attn_out.visit_mut("W_a.out", f);
            p.conv1.visit_mut("W_c.0", f);
            for (k, c) in p.convs.iter_mut().enumerate() {
                c.visit_mut(&alloc::format!("W_c.{}", k + 1), f);
            }
        }
        self.decoder.visit_mut("W_d", f);
        f("W_1", &mut self.out_state.w);
        f("b", self.out_state.b.as_mut().expect("output bias"));
        if let Some(out) = &mut self.out_features {
            f("W_2", &mut out.w);
        }
    }
}

#[cfg(test)]
mod tests;
