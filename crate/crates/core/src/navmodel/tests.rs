use super::*;
use crate::langgen::{generate_instance, GeneratorConfig, Instance, TaskCategory, TemplateSet};
use crate::nnet::{finite_diff_check, Tensor};
use crate::math;
use crate::rng::seeded;
use crate::worldsim::Outcome;

fn vocab(set: &TemplateSet) -> Vocabulary {
    let mut v = Vocabulary::new();
    for w in set.vocabulary() {
        v.add(&w);
    }
    v
}

fn instances(n: usize, seed: u64) -> (Vec<Instance>, Vocabulary) {
    let set = TemplateSet::bundled();
    let cfg = GeneratorConfig::default();
    let mut rng = seeded(seed);
    let out = (0..n)
        .map(|i| generate_instance(TaskCategory::ALL[i % 8], &cfg, &set, &mut rng).unwrap())
        .collect();
    (out, vocab(&set))
}

fn check_gradients(variant: Variant, seed: u64) {
    let (insts, v) = instances(3, seed);
    for inst in &insts {
        let mut model = Model::new(ModelConfig::tiny(v.len(), variant), &mut seeded(seed)).unwrap();
        let ex = Example::from_instance(inst, &v);
        let report = finite_diff_check(
            &mut model,
            |m| m.loss_and_grad(&ex).unwrap().loss,
            |m| m.sequence_loss(&ex).unwrap(),
            1e-5,
            1e-4,
            Some(40),
        );
        assert!(report.passed(), "{variant}: {report:?}");
    }
}

#[test]
fn gradients_full() {
    check_gradients(Variant::Full, 1);
}

#[test]
fn gradients_language_only() {
    check_gradients(Variant::LanguageOnly, 2);
}

#[test]
fn gradients_bag_of_features() {
    check_gradients(Variant::BagOfFeatures, 3);
}

#[test]
fn parameter_names_cover_every_symbol() {
    let mut names = Vec::new();
    let m = Model::new(ModelConfig::tiny(5, Variant::Full), &mut seeded(0)).unwrap();
    m.visit(&mut |n, _| names.push(String::from(n)));
    for want in ["W_e", "W_f.w", "W_b.w", "W_a.hidden.w", "W_a.out.w", "W_c.0.w", "W_c.1.w", "W_d.w", "W_1", "b", "W_2"] {
        assert!(names.iter().any(|n| n == want), "{want}");
    }
    let lo = Model::new(ModelConfig::tiny(5, Variant::LanguageOnly), &mut seeded(0)).unwrap();
    let mut lo_names = Vec::new();
    lo.visit(&mut |n, _| lo_names.push(String::from(n)));
    assert!(!lo_names.iter().any(|n| n.starts_with("W_a") || n.starts_with("W_c") || n == "W_2"));
}

#[test]
fn default_shapes_follow_the_architecture() {
    let (insts, v) = instances(1, 4);
    let cfg = ModelConfig::new(v.len(), Variant::Full);
    assert_eq!(cfg.conv_shapes().unwrap(), vec![[5, 16, 64], [1, 12, 32]]);
    let model = Model::new(cfg, &mut seeded(0)).unwrap();
    let ex = Example::from_instance(&insts[0], &v);
    let trace = model.forward(&ex).unwrap();
    assert_eq!(trace.encoded.h.len(), 256);
    assert_eq!(trace.encoded.c.len(), 256);
    let pt = trace.perception(0).unwrap();
    assert_eq!(pt.input.len(), 5 * 20 * 20);
    assert_eq!(pt.beta.len(), 64);
    assert_eq!(pt.shapes[0], [5, 16, 64]);
    assert_eq!(pt.layer1.len(), 5 * 16 * 64);
    assert_eq!(trace.features(0).len(), 12 * 32);
    assert_eq!(trace.hidden(0).len(), 256);
    assert_eq!(trace.probs(0).len(), 4);
    assert!(trace.features(0).iter().all(|&v| v > 0.0 && v < 1.0));
}

#[test]
fn encoder_is_order_sensitive() {
    let m = Model::new(ModelConfig::tiny(10, Variant::LanguageOnly), &mut seeded(5)).unwrap();
    let a = m.encode(&[1, 2, 3]).unwrap();
    let b = m.encode(&[3, 2, 1]).unwrap();
    assert_eq!(a.h.len(), 16);
    assert_ne!(a.h, b.h);
    assert_eq!(m.encode(&[]), Err(ModelError::EmptyInstruction));
    // A single token sees zero initial states in both directions.
    let one = m.encode(&[4]).unwrap();
    let x = m.embed.forward(4);
    let f = m.enc_fwd.forward(&x, &[0.0; 8], &[0.0; 8]);
    let b = m.enc_bwd.forward(&x, &[0.0; 8], &[0.0; 8]);
    assert_eq!(one.h, [f.h, b.h].concat());
}

#[test]
fn attention_properties() {
    let mut m = Model::new(ModelConfig::tiny(5, Variant::Full), &mut seeded(6)).unwrap();
    let s: Vec<f64> = (0..16).map(|k| (k as f64 * 0.37).sin()).collect();
    let beta = m.attend(&s);
    assert_eq!(beta.len(), 4);
    assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12 && beta.iter().all(|&b| b > 0.0));
    let p = m.perception.as_mut().unwrap();
    p.attn_out.w.value.fill(0.0);
    p.attn_out.b.as_mut().unwrap().value.fill(0.0);
    assert!(m.attend(&s).iter().all(|&b| (b - 0.25).abs() < 1e-15));
}

#[test]
fn one_hot_attention_isolates_a_channel() {
    let (insts, v) = instances(1, 7);
    let m = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(7)).unwrap();
    let mut grid = vec![0.0; PerceptGrid::VALUES];
    encode_grid(&insts[0].world, insts[0].start).unwrap().write_values(&mut grid);
    let t = m.perceive_traced(grid.clone(), Vec::new(), vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    for (k, v) in t.acts[0].iter().enumerate() {
        if k % 4 == 2 {
            assert_eq!(*v, t.layer1[k]);
        } else {
            assert_eq!(*v, 0.0);
        }
    }
    // Features depend on β only through channel 2 here: perturbing the
    // other channels' first-layer weights changes nothing.
    let mut m2 = m.clone();
    let c1 = &mut m2.perception.as_mut().unwrap().conv1;
    for (k, w) in c1.w.value.data.iter_mut().enumerate() {
        if k % 4 != 2 {
            *w += 0.3;
        }
    }
    let beta = [0.0, 0.0, 1.0, 0.0];
    assert_eq!(m.perceive(&grid, &beta).unwrap(), m2.perceive(&grid, &beta).unwrap());
}

#[test]
fn decode_step_gives_a_distribution() {
    let (insts, v) = instances(4, 8);
    for variant in Variant::ALL {
        let m = Model::new(ModelConfig::tiny(v.len(), variant), &mut seeded(8)).unwrap();
        for inst in &insts {
            let enc = m.encode(&v.encode(&inst.instruction)).unwrap();
            let s0 = m.init_state(&enc);
            assert_eq!(s0.prev, Action::Stop);
            assert_eq!(s0.h, enc.h);
            let (s1, p) = m.action_distribution(&s0, &inst.world, inst.start).unwrap();
            assert_eq!(p.len(), 4);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&x| x > 0.0));
            assert_eq!(s1.t, 1);
        }
    }
    let lo = Model::new(ModelConfig::tiny(5, Variant::LanguageOnly), &mut seeded(0)).unwrap();
    let s = lo.init_state(&lo.encode(&[1]).unwrap());
    assert!(lo.decode_step(&s, &[1.0]).is_err());
    assert!(lo.decode_step(&s, &[]).is_ok());
}

#[test]
fn uniform_model_loss() {
    let (insts, v) = instances(3, 9);
    let mut m = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(9)).unwrap();
    m.out_state.w.value.fill(0.0);
    m.out_features.as_mut().unwrap().w.value.fill(0.0);
    for inst in &insts {
        let loss = m.sequence_loss(&Example::from_instance(inst, &v)).unwrap();
        let want = inst.actions.len() as f64 * math::ln(4.0);
        assert!((loss - want).abs() < 1e-12);
    }
}

#[test]
fn confident_model_has_zero_loss() {
    // Output bias dominating the logits for the only gold action.
    let mut m = Model::new(ModelConfig::tiny(5, Variant::LanguageOnly), &mut seeded(0)).unwrap();
    m.out_state.w.value.fill(0.0);
    m.out_state.b = Some(Param::new(Tensor::from_vec(&[4], vec![-1e3, -1e3, -1e3, 1e3]).unwrap()));
    let w = crate::worldsim::WorldMap::plain(1, 1, Vec::new(), crate::worldsim::FloorPattern::Wood, crate::worldsim::WallPainting::Fish).unwrap();
    let ex = Example { tokens: vec![1], world: &w, start: Pose::new(0, 0, crate::worldsim::Direction::North), actions: &[Action::Stop] };
    assert_eq!(m.sequence_loss(&ex).unwrap(), 0.0);
}

#[test]
fn bad_gold_is_rejected() {
    let w = crate::worldsim::WorldMap::plain(1, 1, Vec::new(), crate::worldsim::FloorPattern::Wood, crate::worldsim::WallPainting::Fish).unwrap();
    let m = Model::new(ModelConfig::tiny(5, Variant::Full), &mut seeded(0)).unwrap();
    let start = Pose::new(0, 0, crate::worldsim::Direction::North);
    let ex = Example { tokens: vec![1], world: &w, start, actions: &[Action::Move, Action::Stop] };
    assert_eq!(m.sequence_loss(&ex), Err(ModelError::GoldWallHit { step: 0 }));
    let ex = Example { tokens: vec![1], world: &w, start, actions: &[Action::Right] };
    assert_eq!(m.sequence_loss(&ex), Err(ModelError::BadGold));
}

#[test]
fn loss_decreases_on_a_fixed_instance() {
    let (insts, v) = instances(3, 10);
    let ex = Example::from_instance(&insts[2], &v);
    let mut m = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(10)).unwrap();
    let adam = Adam::default();
    let mut prev = m.sequence_loss(&ex).unwrap();
    for _ in 0..200 {
        let s = m.train_step(&ex, &adam, 5.0).unwrap();
        assert!(s.clipped_norm <= 5.0 + 1e-9);
        let now = m.sequence_loss(&ex).unwrap();
        assert!(now < prev, "{now} >= {prev}");
        prev = now;
    }
}

#[test]
fn training_is_deterministic() {
    let (insts, v) = instances(4, 11);
    let run = || {
        let mut m = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(11)).unwrap();
        let exs: Vec<Example> = insts.iter().map(|i| Example::from_instance(i, &v)).collect();
        let cfg = TrainConfig { max_epochs: 3, ..TrainConfig::default() };
        let h = train(&mut m, &exs, &[], &cfg, &mut |_| {}).unwrap();
        h.epochs.iter().map(|e| e.train_loss).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn early_stopping_respects_patience() {
    let (insts, v) = instances(4, 12);
    let exs: Vec<Example> = insts.iter().map(|i| Example::from_instance(i, &v)).collect();
    let mut m = Model::new(ModelConfig::tiny(v.len(), Variant::LanguageOnly), &mut seeded(12)).unwrap();
    // With a zero learning rate the dev score never improves after epoch 0.
    let cfg = TrainConfig { adam: Adam { lr: 0.0, ..Adam::default() }, patience: 3, max_epochs: 50, ..TrainConfig::default() };
    let h = train(&mut m, &exs, &exs, &cfg, &mut |_| {}).unwrap();
    assert!(h.stopped_early);
    assert_eq!(h.epochs.len(), 4);
    assert_eq!(h.best_epoch, Some(0));
}

fn models_and_examples(n: usize, seed: u64) -> (Vec<Instance>, Vocabulary, Model) {
    let (insts, v) = instances(n, seed);
    let m = Model::new(ModelConfig::tiny(v.len(), Variant::Full), &mut seeded(seed)).unwrap();
    (insts, v, m)
}

#[test]
fn beam_of_one_is_greedy() {
    let (insts, v, m) = models_and_examples(40, 13);
    for inst in &insts {
        let s = [v.encode(&inst.instruction)];
        let b = beam_search(&[&m], &inst.world, inst.start, &s, 1, 12).unwrap();
        let g = greedy_decode(&[&m], &inst.world, inst.start, &s, 12).unwrap();
        assert_eq!(b, g);
    }
}

#[test]
fn identical_ensemble_matches_single_model() {
    let (insts, v, m) = models_and_examples(20, 14);
    let ens = vec![m.clone(), m.clone(), m.clone()];
    for inst in &insts {
        let s = [v.encode(&inst.instruction)];
        let one = beam_search(core::slice::from_ref(&m), &inst.world, inst.start, &s, 4, 10).unwrap();
        let three = beam_search(&ens, &inst.world, inst.start, &s, 4, 10).unwrap();
        assert_eq!(one, three);
        assert_eq!(one.score.to_bits(), three.score.to_bits());
    }
}

/// Best stopped sequence by exhaustive enumeration.
fn exhaustive(m: &Model, world: &WorldMap, start: Pose, tokens: &[usize], max: usize) -> Option<(f64, Vec<Action>)> {
    fn go(
        m: &Model,
        world: &WorldMap,
        pose: Pose,
        state: DecodeState,
        acts: &mut Vec<Action>,
        score: f64,
        max: usize,
        best: &mut Option<(f64, Vec<Action>)>,
    ) {
        let (next, p) = m.action_distribution(&state, world, pose).unwrap();
        for a in Action::ALL {
            let s = score + math::ln(p[a.index()].max(crate::nnet::LOG_FLOOR));
            acts.push(a);
            match step(world, pose, a) {
                StepResult::Stopped => {
                    if best.as_ref().is_none_or(|(b, _)| s > *b) {
                        *best = Some((s, acts.clone()));
                    }
                }
                StepResult::WallHit => {}
                StepResult::Moved(p2) | StepResult::Turned(p2) => {
                    if acts.len() < max {
                        go(m, world, p2, next.clone().after(a), acts, s, max, best);
                    }
                }
            }
            acts.pop();
        }
    }
    let mut best = None;
    let s0 = m.init_state(&m.encode(tokens).unwrap());
    go(m, world, start, s0, &mut Vec::new(), 0.0, max, &mut best);
    best
}

#[test]
fn wide_beam_matches_exhaustive_search() {
    let (insts, v, m) = models_and_examples(12, 15);
    for inst in &insts {
        let tokens = v.encode(&inst.instruction);
        let max = 5;
        let wide = beam_search(&[&m], &inst.world, inst.start, std::slice::from_ref(&tokens), 4usize.pow(max as u32), max).unwrap();
        if let Some((score, acts)) = exhaustive(&m, &inst.world, inst.start, &tokens, max) {
            assert_eq!(wide.outcome, Outcome::Stopped);
            assert!((wide.score - score).abs() < 1e-12);
            assert_eq!(wide.actions(), acts);
        }
    }
}

#[test]
fn beam_scores_at_least_greedy() {
    let (insts, v, m) = models_and_examples(60, 16);
    for inst in &insts {
        let s = [v.encode(&inst.instruction)];
        let b = beam_search(&[&m], &inst.world, inst.start, &s, 4, 35).unwrap();
        let g = greedy_decode(&[&m], &inst.world, inst.start, &s, 35).unwrap();
        if g.outcome == Outcome::Stopped {
            assert_eq!(b.outcome, Outcome::Stopped);
            assert!(b.score >= g.score - 1e-12, "{} < {}", b.score, g.score);
        }
    }
}

#[test]
fn paragraphs_chain_sentences() {
    let (insts, v, m) = models_and_examples(3, 17);
    let inst = &insts[0];
    let s: Vec<Vec<usize>> = insts.iter().map(|i| v.encode(&i.instruction)).collect();
    let r = beam_search(&[&m], &inst.world, inst.start, &s, 3, 8).unwrap();
    if r.outcome == Outcome::Stopped {
        assert_eq!(r.sentences.len(), 3);
        assert!(r.sentences.iter().all(|x| x.last() == Some(&Action::Stop)));
    }
    assert!(beam_search(&[&m], &inst.world, inst.start, &[], 3, 8).is_err());
    let none: [&Model; 0] = [];
    assert_eq!(beam_search(&none, &inst.world, inst.start, &s, 3, 8), Err(ModelError::NoModels));
}
