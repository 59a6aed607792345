#include "uavnfv/agent.hpp"

#include <algorithm>
#include <cmath>

namespace uavnfv {

namespace {

Vec as_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename S, typename F>
Mat columns(const std::vector<const S*>& batch, int rows, F field) {
  Mat m(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) m.col(static_cast<Eigen::Index>(b)) = as_vec(field(*batch[b]));
  return m;
}

Mat stack(const Mat& top, const Mat& bottom) {
  Mat m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

int argmax(const Vec& q, int offset, int size) {
  int best = 0;
  for (int c = 1; c < size; ++c)
    if (q(offset + c) > q(offset + best)) best = c;
  return best;
}

void check_nets(const std::vector<Mlp>& loaded, const std::vector<const Mlp*>& current) {
  if (loaded.size() != current.size())
    throw std::runtime_error("checkpoint holds a different number of networks");
  for (std::size_t i = 0; i < loaded.size(); ++i)
    if (loaded[i].sizes() != current[i]->sizes())
      throw std::runtime_error("checkpoint network shapes do not match the config");
}

}  // namespace

Vec td_targets(const Vec& r, const Vec& done, const Vec& q_next, double gamma) {
  return r + gamma * (Vec::Ones(r.size()) - done).cwiseProduct(q_next);
}

double regression_step(Mlp& net, Adam& opt, const Mat& x, const Vec& y) {
  Tape tape;
  const Mat q = net.forward(x, tape);
  const Vec diff = q.row(0).transpose() - y;
  const double n = static_cast<double>(y.size());
  const Gradients g = net.backward(tape, (2.0 / n) * diff.transpose());
  opt.step(net, g);
  return diff.squaredNorm() / n;
}

double actor_step(Mlp& actor, Adam& opt, const Mat& states, const ActionValueFn& q) {
  Tape tape;
  const Mat a = actor.forward(states, tape);
  Mat dq_da(a.rows(), a.cols());
  const Vec values = q(states, a, dq_da);
  const Gradients g = actor.backward(tape, -dq_da / static_cast<double>(a.cols()));
  opt.step(actor, g);
  return values.mean();
}

Mat dqn_targets(const DqnBatch& b, const std::vector<HeadSlice>& heads, double gamma) {
  const auto H = static_cast<Eigen::Index>(heads.size());
  Mat y(H, b.r.size());
  for (Eigen::Index col = 0; col < b.r.size(); ++col)
    for (Eigen::Index h = 0; h < H; ++h) {
      const auto& s = heads[static_cast<std::size_t>(h)];
      const double best = b.q_next.col(col).segment(s.offset, s.size).maxCoeff();
      y(h, col) = b.r(col) + gamma * (1.0 - b.done(col)) * best;
    }
  return y;
}

double dqn_step(Mlp& q, Adam& opt, const DqnBatch& b, const std::vector<HeadSlice>& heads,
                double gamma) {
  const long count = b.mask.cast<long>().sum();
  if (count == 0) return 0.0;
  Tape tape;
  const Mat out = q.forward(b.x, tape);
  const Mat y = dqn_targets(b, heads, gamma);
  Mat grad = Mat::Zero(out.rows(), out.cols());
  double loss = 0.0;
  for (Eigen::Index col = 0; col < out.cols(); ++col)
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const auto hi = static_cast<Eigen::Index>(h);
      if (!b.mask(hi, col)) continue;
      const int row = heads[h].offset + b.chosen(hi, col);
      const double diff = out(row, col) - y(hi, col);
      loss += diff * diff;
      grad(row, col) = 2.0 * diff / static_cast<double>(count);
    }
  opt.step(q, q.backward(tape, grad));
  return loss / static_cast<double>(count);
}

int quantize(double a, int n) {
  const double x = (std::clamp(a, -1.0, 1.0) + 1.0) / 2.0;
  return std::min(n - 1, static_cast<int>(std::floor(x * n)));
}

Schedule schedule_at(const AgentConfig& a, int episode) {
  Schedule s;
  const double e = static_cast<double>(episode);
  s.epsilon = std::max(a.epsilon_min, a.epsilon_start - a.epsilon_decay * e);
  s.noise = std::max(a.noise_min, a.noise_std * std::max(0.0, 1.0 - a.epsilon_decay * e));
  s.lr_scale = 1.0 / (1.0 + a.lr_decay * e);
  return s;
}

// ---------------------------------------------------------------------------

HhcdaAgent::HhcdaAgent(const ScenarioConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      layout_(cfg),
      part_(cfg, layout_),
      replay_(static_cast<std::size_t>(cfg.agent.buffer_capacity)),
      replay_dqn_(static_cast<std::size_t>(cfg.agent.buffer_capacity)),
      rng_(derive_seed(seed, 11)) {
  const auto& h = cfg.agent.hidden_layers;
  for (int a = 0; a < part_.agents; ++a) {
    const auto& ca = part_.cont[static_cast<std::size_t>(a)];
    std::vector<HeadSlice> sl;
    int offset = 0;
    for (int head : part_.heads[static_cast<std::size_t>(a)]) {
      const int n = layout_.heads[static_cast<std::size_t>(head)].size;
      sl.push_back({offset, n});
      offset += n;
    }
    slices_.push_back(std::move(sl));
    const auto s = static_cast<std::uint64_t>(a);
    actors_.emplace_back(net_sizes(layout_.obs_dim, h, static_cast<int>(ca.size())), Activation::Tanh,
                         derive_seed(seed, 100 + 4 * s));
    dqns_.emplace_back(net_sizes(layout_.obs_dim + static_cast<int>(ca.size()), h, offset),
                       Activation::Identity, derive_seed(seed, 101 + 4 * s));
  }
  critic_ = Mlp(net_sizes(layout_.obs_dim + layout_.cont_dim, h, 1), Activation::Identity,
                derive_seed(seed, 99));
  actor_targets_ = actors_;
  dqn_targets_ = dqns_;
  critic_target_ = critic_;
  for (const auto& n : actors_) actor_opt_.emplace_back(n, cfg.agent.lr_actor);
  for (const auto& n : dqns_) dqn_opt_.emplace_back(n, cfg.agent.lr_dqn);
  critic_opt_ = Adam(critic_, cfg.agent.lr_critic);
  set_schedule(schedule_at(cfg.agent, 0));
}

int HhcdaAgent::dqn_input_size(int agent) const { return dqn(agent).input_size(); }

void HhcdaAgent::set_schedule(const Schedule& s) {
  sched_ = s;
  for (auto& o : actor_opt_) o.set_lr(cfg_.agent.lr_actor * s.lr_scale);
  for (auto& o : dqn_opt_) o.set_lr(cfg_.agent.lr_dqn * s.lr_scale);
  critic_opt_.set_lr(cfg_.agent.lr_critic * s.lr_scale);
}

void HhcdaAgent::begin_episode(int episode) { set_schedule(schedule_at(cfg_.agent, episode)); }

Mat HhcdaAgent::views(const Mat& s, int agent) const {
  if (part_.agents == 1) return s;
  Mat v = s;
  const auto& m = part_.obs_mask[static_cast<std::size_t>(agent)];
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    if (!m[static_cast<std::size_t>(r)]) v.row(r).setZero();
  return v;
}

std::vector<double> HhcdaAgent::own(const std::vector<double>& cont, int agent) const {
  std::vector<double> out;
  for (int idx : part_.cont[static_cast<std::size_t>(agent)])
    out.push_back(cont[static_cast<std::size_t>(idx)]);
  return out;
}

std::vector<double> HhcdaAgent::continuous(const std::vector<double>& obs) const {
  std::vector<double> cont(static_cast<std::size_t>(layout_.cont_dim), 0.0);
  for (int a = 0; a < part_.agents; ++a) {
    const Vec out = actor(a).forward_one(as_vec(part_.view(obs, a)));
    const auto& idx = part_.cont[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < idx.size(); ++i)
      cont[static_cast<std::size_t>(idx[i])] = out(static_cast<Eigen::Index>(i));
  }
  return cont;
}

HybridAction HhcdaAgent::act(const Env&, const std::vector<double>& obs, bool explore) {
  return act(obs, explore);
}

HybridAction HhcdaAgent::act(const std::vector<double>& obs, bool explore) {
  if (static_cast<int>(obs.size()) != layout_.obs_dim)
    throw std::invalid_argument("observation length does not match the layout");
  HybridAction act;
  act.cont = continuous(obs);
  if (explore)
    for (auto& x : act.cont) x = std::clamp(x + sched_.noise * rng_.normal(), -1.0, 1.0);

  act.disc.assign(static_cast<std::size_t>(layout_.disc_dim()), 0);
  for (int a = 0; a < part_.agents; ++a) {
    const auto& heads = part_.heads[static_cast<std::size_t>(a)];
    if (heads.empty()) continue;
    const std::vector<double> mine = own(act.cont, a);
    const Vec x = stack(as_vec(part_.view(obs, a)), as_vec(mine));
    const Vec q = dqn(a).forward_one(x);
    const auto& sl = slices_[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < heads.size(); ++i) {
      int c = argmax(q, sl[i].offset, sl[i].size);
      if (explore && rng_.bernoulli(sched_.epsilon)) c = rng_.below(sl[i].size);
      act.disc[static_cast<std::size_t>(heads[i])] = c;
    }
  }
  return act;
}

void HhcdaAgent::record(const Experience& e) {
  replay_.push({e.obs, e.action.cont, e.reward, e.next_obs, e.done});
  DqnSample d{e.obs, e.action.cont, e.action.disc, e.mask, e.reward, e.next_obs, e.next_cont, e.done};
  if (d.a_next.empty()) d.a_next = continuous(e.next_obs);
  replay_dqn_.push(std::move(d));
  ++env_steps_;
  if (cfg_.agent.update_every_step && env_steps_ % std::max(1, cfg_.agent.update_interval) == 0)
    update();
}

void HhcdaAgent::end_episode() {
  if (cfg_.agent.update_every_step) return;
  for (int n = 0; n < cfg_.agent.updates_per_episode; ++n) update();
}

bool HhcdaAgent::ready() const {
  const auto need = static_cast<std::size_t>(std::max(cfg_.agent.batch_size, cfg_.agent.warmup_transitions));
  return replay_.size() >= need && replay_dqn_.size() >= need;
}

bool HhcdaAgent::update() {
  if (!ready()) return false;
  const auto n = static_cast<std::size_t>(cfg_.agent.batch_size);
  const auto batch = replay_.sample(n, rng_);
  train_critic(batch);
  train_actor(batch);
  train_dqn(replay_dqn_.sample(n, rng_));
  ++grad_steps_;
  if (grad_steps_ % std::max(1, cfg_.agent.target_period) == 0) sync_targets();
  return true;
}

void HhcdaAgent::sync_targets() {
  const double mix = cfg_.agent.target_mix;
  for (std::size_t a = 0; a < actors_.size(); ++a) {
    sync_target(actors_[a], actor_targets_[a], mix);
    sync_target(dqns_[a], dqn_targets_[a], mix);
  }
  sync_target(critic_, critic_target_, mix);
}

Mat HhcdaAgent::joint_target_action(const Mat& s_next) const {
  Mat a = Mat::Zero(layout_.cont_dim, s_next.cols());
  for (int ag = 0; ag < part_.agents; ++ag) {
    const Mat out = actor_target(ag).forward(views(s_next, ag));
    const auto& idx = part_.cont[static_cast<std::size_t>(ag)];
    for (std::size_t i = 0; i < idx.size(); ++i) a.row(idx[i]) = out.row(static_cast<Eigen::Index>(i));
  }
  return a;
}

Vec HhcdaAgent::critic_targets(const std::vector<const CriticSample*>& batch) const {
  const Mat s1 = columns(batch, layout_.obs_dim, [](const CriticSample& c) -> auto& { return c.s_next; });
  Vec r(static_cast<Eigen::Index>(batch.size())), done(r.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    r(static_cast<Eigen::Index>(b)) = batch[b]->r;
    done(static_cast<Eigen::Index>(b)) = batch[b]->done ? 1.0 : 0.0;
  }
  const Vec q1 = critic_target_.forward(stack(s1, joint_target_action(s1))).row(0).transpose();
  return td_targets(r, done, q1, cfg_.agent.gamma);
}

double HhcdaAgent::train_critic(const std::vector<const CriticSample*>& batch) {
  const Mat s = columns(batch, layout_.obs_dim, [](const CriticSample& c) -> auto& { return c.s; });
  const Mat a = columns(batch, layout_.cont_dim, [](const CriticSample& c) -> auto& { return c.a; });
  return regression_step(critic_, critic_opt_, stack(s, a), critic_targets(batch));
}

double HhcdaAgent::train_actor(const std::vector<const CriticSample*>& batch) {
  const Mat s = columns(batch, layout_.obs_dim, [](const CriticSample& c) -> auto& { return c.s; });
  const auto B = static_cast<double>(batch.size());
  std::vector<Tape> tapes(static_cast<std::size_t>(part_.agents));
  Mat a = Mat::Zero(layout_.cont_dim, s.cols());
  for (int ag = 0; ag < part_.agents; ++ag) {
    const Mat out = actor(ag).forward(views(s, ag), tapes[static_cast<std::size_t>(ag)]);
    const auto& idx = part_.cont[static_cast<std::size_t>(ag)];
    for (std::size_t i = 0; i < idx.size(); ++i) a.row(idx[i]) = out.row(static_cast<Eigen::Index>(i));
  }
  Tape ct;
  const Mat q = critic_.forward(stack(s, a), ct);
  const Gradients cg = critic_.backward(ct, Mat::Constant(1, s.cols(), -1.0 / B));
  for (int ag = 0; ag < part_.agents; ++ag) {
    const auto& idx = part_.cont[static_cast<std::size_t>(ag)];
    Mat d(static_cast<Eigen::Index>(idx.size()), s.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      d.row(static_cast<Eigen::Index>(i)) = cg.dx.row(layout_.obs_dim + idx[i]);
    auto& net = actors_[static_cast<std::size_t>(ag)];
    actor_opt_[static_cast<std::size_t>(ag)].step(net, net.backward(tapes[static_cast<std::size_t>(ag)], d));
  }
  return q.mean();
}

double HhcdaAgent::train_dqn(const std::vector<const DqnSample*>& batch) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Mat s = columns(batch, layout_.obs_dim, [](const DqnSample& c) -> auto& { return c.s; });
  const Mat s1 = columns(batch, layout_.obs_dim, [](const DqnSample& c) -> auto& { return c.s_next; });
  const Mat a = columns(batch, layout_.cont_dim, [](const DqnSample& c) -> auto& { return c.a; });
  const Mat a1 = columns(batch, layout_.cont_dim, [](const DqnSample& c) -> auto& { return c.a_next; });
  double total = 0.0;
  int trained = 0;
  for (int ag = 0; ag < part_.agents; ++ag) {
    const auto& heads = part_.heads[static_cast<std::size_t>(ag)];
    if (heads.empty()) continue;
    const auto& idx = part_.cont[static_cast<std::size_t>(ag)];
    Mat own_a(static_cast<Eigen::Index>(idx.size()), B), own_a1(own_a.rows(), B);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      own_a.row(static_cast<Eigen::Index>(i)) = a.row(idx[i]);
      own_a1.row(static_cast<Eigen::Index>(i)) = a1.row(idx[i]);
    }
    DqnBatch db;
    db.x = stack(views(s, ag), own_a);
    const Mat x1 = stack(views(s1, ag), own_a1);
    db.q_next = cfg_.agent.dqn_use_target ? dqn_target(ag).forward(x1) : dqn(ag).forward(x1);
    const auto H = static_cast<Eigen::Index>(heads.size());
    db.chosen.resize(H, B);
    db.mask.resize(H, B);
    db.r.resize(B);
    db.done.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& t = *batch[static_cast<std::size_t>(b)];
      db.r(b) = t.r;
      db.done(b) = t.done ? 1.0 : 0.0;
      for (Eigen::Index h = 0; h < H; ++h) {
        const auto head = static_cast<std::size_t>(heads[static_cast<std::size_t>(h)]);
        db.chosen(h, b) = std::clamp(t.disc[head], 0, layout_.heads[head].size - 1);
        db.mask(h, b) = t.mask[head];
      }
    }
    total += dqn_step(dqns_[static_cast<std::size_t>(ag)], dqn_opt_[static_cast<std::size_t>(ag)], db,
                      slices_[static_cast<std::size_t>(ag)], cfg_.agent.gamma);
    ++trained;
  }
  return trained > 0 ? total / trained : 0.0;
}

void HhcdaAgent::save(const std::filesystem::path& path) const {
  std::vector<const Mlp*> nets{&critic_, &critic_target_};
  for (std::size_t a = 0; a < actors_.size(); ++a) {
    nets.push_back(&actors_[a]);
    nets.push_back(&actor_targets_[a]);
    nets.push_back(&dqns_[a]);
    nets.push_back(&dqn_targets_[a]);
  }
  save_networks(nets, path);
}

void HhcdaAgent::load(const std::filesystem::path& path) {
  auto nets = load_networks(path);
  std::vector<const Mlp*> cur{&critic_, &critic_target_};
  for (std::size_t a = 0; a < actors_.size(); ++a) {
    cur.push_back(&actors_[a]);
    cur.push_back(&actor_targets_[a]);
    cur.push_back(&dqns_[a]);
    cur.push_back(&dqn_targets_[a]);
  }
  check_nets(nets, cur);
  critic_ = std::move(nets[0]);
  critic_target_ = std::move(nets[1]);
  for (std::size_t a = 0; a < actors_.size(); ++a) {
    actors_[a] = std::move(nets[2 + 4 * a]);
    actor_targets_[a] = std::move(nets[3 + 4 * a]);
    dqns_[a] = std::move(nets[4 + 4 * a]);
    dqn_targets_[a] = std::move(nets[5 + 4 * a]);
  }
}

// ---------------------------------------------------------------------------

QuantizedDdpgAgent::QuantizedDdpgAgent(const ScenarioConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      layout_(cfg),
      replay_(static_cast<std::size_t>(cfg.agent.buffer_capacity)),
      rng_(derive_seed(seed, 12)) {
  const auto& h = cfg.agent.hidden_layers;
  const int out = layout_.cont_dim + layout_.disc_dim();
  actor_ = Mlp(net_sizes(layout_.obs_dim, h, out), Activation::Tanh, derive_seed(seed, 200));
  critic_ = Mlp(net_sizes(layout_.obs_dim + out, h, 1), Activation::Identity, derive_seed(seed, 201));
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_opt_ = Adam(actor_, cfg.agent.lr_actor);
  critic_opt_ = Adam(critic_, cfg.agent.lr_critic);
  begin_episode(0);
}

void QuantizedDdpgAgent::begin_episode(int episode) {
  sched_ = schedule_at(cfg_.agent, episode);
  actor_opt_.set_lr(cfg_.agent.lr_actor * sched_.lr_scale);
  critic_opt_.set_lr(cfg_.agent.lr_critic * sched_.lr_scale);
}

HybridAction QuantizedDdpgAgent::decode(const std::vector<double>& raw) const {
  HybridAction a;
  a.cont.assign(raw.begin(), raw.begin() + layout_.cont_dim);
  for (int h = 0; h < layout_.disc_dim(); ++h)
    a.disc.push_back(quantize(raw[static_cast<std::size_t>(layout_.cont_dim + h)],
                              layout_.heads[static_cast<std::size_t>(h)].size));
  return a;
}

HybridAction QuantizedDdpgAgent::act(const Env&, const std::vector<double>& obs, bool explore) {
  const Vec out = actor_.forward_one(as_vec(obs));
  std::vector<double> raw(out.data(), out.data() + out.size());
  if (explore) {
    for (auto& x : raw) x = std::clamp(x + sched_.noise * rng_.normal(), -1.0, 1.0);
    for (int h = 0; h < layout_.disc_dim(); ++h)
      if (rng_.bernoulli(sched_.epsilon))
        raw[static_cast<std::size_t>(layout_.cont_dim + h)] = rng_.uniform(-1.0, 1.0);
  }
  prev_raw_ = std::move(last_raw_);
  last_raw_ = raw;
  return decode(raw);
}

// The loop picks the next action before recording the current transition, so
// the raw output for this transition is the previous one unless the episode ended.
void QuantizedDdpgAgent::record(const Experience& e) {
  replay_.push({e.obs, e.done ? last_raw_ : prev_raw_, e.reward, e.next_obs, e.done});
  ++env_steps_;
  if (cfg_.agent.update_every_step && env_steps_ % std::max(1, cfg_.agent.update_interval) == 0)
    update();
}

void QuantizedDdpgAgent::end_episode() {
  if (cfg_.agent.update_every_step) return;
  for (int n = 0; n < cfg_.agent.updates_per_episode; ++n) update();
}

bool QuantizedDdpgAgent::update() {
  const auto need = static_cast<std::size_t>(std::max(cfg_.agent.batch_size, cfg_.agent.warmup_transitions));
  if (replay_.size() < need) return false;
  const auto batch = replay_.sample(static_cast<std::size_t>(cfg_.agent.batch_size), rng_);
  const int adim = actor_.output_size();
  const Mat s = columns(batch, layout_.obs_dim, [](const CriticSample& c) -> auto& { return c.s; });
  const Mat s1 = columns(batch, layout_.obs_dim, [](const CriticSample& c) -> auto& { return c.s_next; });
  const Mat a = columns(batch, adim, [](const CriticSample& c) -> auto& { return c.a; });
  Vec r(s.cols()), done(s.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    r(static_cast<Eigen::Index>(b)) = batch[b]->r;
    done(static_cast<Eigen::Index>(b)) = batch[b]->done ? 1.0 : 0.0;
  }
  const Vec q1 = critic_target_.forward(stack(s1, actor_target_.forward(s1))).row(0).transpose();
  regression_step(critic_, critic_opt_, stack(s, a), td_targets(r, done, q1, cfg_.agent.gamma));

  const Mlp& critic = critic_;
  const int obs_dim = layout_.obs_dim;
  actor_step(actor_, actor_opt_, s, [&](const Mat& st, const Mat& act, Mat& dq_da) {
    Tape t;
    const Mat q = critic.forward(stack(st, act), t);
    const Gradients g = critic.backward(t, Mat::Ones(1, st.cols()));
    dq_da = g.dx.bottomRows(g.dx.rows() - obs_dim);
    return Vec(q.row(0).transpose());
  });

  ++grad_steps_;
  if (grad_steps_ % std::max(1, cfg_.agent.target_period) == 0) {
    sync_target(actor_, actor_target_, cfg_.agent.target_mix);
    sync_target(critic_, critic_target_, cfg_.agent.target_mix);
  }
  return true;
}

void QuantizedDdpgAgent::save(const std::filesystem::path& path) const {
  save_networks({&actor_, &actor_target_, &critic_, &critic_target_}, path);
}

void QuantizedDdpgAgent::load(const std::filesystem::path& path) {
  auto nets = load_networks(path);
  check_nets(nets, {&actor_, &actor_target_, &critic_, &critic_target_});
  actor_ = std::move(nets[0]);
  actor_target_ = std::move(nets[1]);
  critic_ = std::move(nets[2]);
  critic_target_ = std::move(nets[3]);
}

// ---------------------------------------------------------------------------

HybridAction RandomPolicy::act(const Env& env, const std::vector<double>&, bool) {
  const auto& L = env.layout();
  HybridAction a;
  for (int i = 0; i < L.cont_dim; ++i) a.cont.push_back(rng_.uniform(-1.0, 1.0));
  for (const auto& h : L.heads) a.disc.push_back(rng_.below(h.size));
  return a;
}

HybridAction GreedyPolicy::act(const Env& env, const std::vector<double>&, bool) {
  const auto& cfg = env.config();
  const auto& L = env.layout();
  const auto& st = env.state();
  const int U = L.U;
  HybridAction a;
  a.cont.assign(static_cast<std::size_t>(L.cont_dim), -1.0);
  a.disc.assign(static_cast<std::size_t>(L.disc_dim()), 0);

  auto nearest = [&](int k) {
    int best = 0;
    for (int u = 1; u < U; ++u)
      if (horizontal_distance(st.uavs[static_cast<std::size_t>(u)], st.users[static_cast<std::size_t>(k)]) <
          horizontal_distance(st.uavs[static_cast<std::size_t>(best)], st.users[static_cast<std::size_t>(k)]))
        best = u;
    return best;
  };

  std::vector<std::vector<int>> dl_users(static_cast<std::size_t>(U)), ul_users(static_cast<std::size_t>(U));
  auto add_unique = [](std::vector<int>& v, int k) {
    if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
  };
  for (const auto& slot : st.slots) {
    if (!slot) continue;
    add_unique(dl_users[static_cast<std::size_t>(nearest(slot->svc.dest_user))], slot->svc.dest_user);
    add_unique(ul_users[static_cast<std::size_t>(nearest(slot->svc.source_user))], slot->svc.source_user);
  }
  for (int u = 0; u < U; ++u) {
    const auto& dl = dl_users[static_cast<std::size_t>(u)];
    for (std::size_t n = 0; n < dl.size(); ++n) {
      a.disc[static_cast<std::size_t>(L.dl_head(dl[n]))] =
          u * cfg.num_sc_dl + static_cast<int>(n) % cfg.num_sc_dl;
      a.cont[static_cast<std::size_t>(L.dl_level(dl[n]))] = 2.0 / static_cast<double>(dl.size()) - 1.0;
    }
    const auto& ul = ul_users[static_cast<std::size_t>(u)];
    for (std::size_t n = 0; n < ul.size(); ++n) {
      a.disc[static_cast<std::size_t>(L.ul_head(ul[n]))] =
          u * cfg.num_sc_ul + static_cast<int>(n) % cfg.num_sc_ul;
      a.cont[static_cast<std::size_t>(L.ul_level(ul[n]))] = 1.0;
    }
  }

  // Running services keep their hosts; new ones take the first UAV with CPU to spare.
  std::vector<double> cpu(static_cast<std::size_t>(U), 0.0);
  std::vector<std::vector<int>> hosts(static_cast<std::size_t>(L.I));
  for (int i = 0; i < L.I; ++i) {
    const auto& slot = st.slots[static_cast<std::size_t>(i)];
    if (!slot || !slot->admitted) continue;
    hosts[static_cast<std::size_t>(i)] = slot->placement.hosts();
    for (int h : hosts[static_cast<std::size_t>(i)])
      if (h >= 0) cpu[static_cast<std::size_t>(h)] += cfg.cycles_per_bit * slot->svc.bit_rate;
  }
  std::vector<std::pair<int, int>> need;
  for (int i = 0; i < L.I; ++i) {
    const auto& slot = st.slots[static_cast<std::size_t>(i)];
    if (!slot) continue;
    const Service& s = slot->svc;
    const int in = nearest(s.source_user), out = nearest(s.dest_user);
    auto& hs = hosts[static_cast<std::size_t>(i)];
    if (!slot->admitted) {
      std::vector<int> order{in, out};
      for (int u = 0; u < U; ++u)
        if (u != in && u != out) order.push_back(u);
      const double load = cfg.cycles_per_bit * s.bit_rate;
      for (int j = 0; j < s.chain_length(); ++j) {
        int pick = in;
        for (int u : order)
          if (cpu[static_cast<std::size_t>(u)] + load <= cfg.cpu_of(u)) {
            pick = u;
            break;
          }
        cpu[static_cast<std::size_t>(pick)] += load;
        hs.push_back(pick);
      }
    }
    for (int j = 0; j < std::min(s.chain_length(), L.J); ++j)
      a.disc[static_cast<std::size_t>(L.host_head(i, j))] = std::max(0, hs[static_cast<std::size_t>(j)]);
    std::vector<int> way{in};
    for (int h : hs)
      if (h != way.back()) way.push_back(h);
    if (out != way.back()) way.push_back(out);
    for (std::size_t w = 0; w + 1 < way.size(); ++w) {
      const std::pair<int, int> p{way[w], way[w + 1]};
      if (std::find(need.begin(), need.end(), p) == need.end()) need.push_back(p);
    }
  }

  if (U > 1) {
    for (int u = 0; u < U; ++u) a.cont[static_cast<std::size_t>(L.backhaul_level(u))] = 1.0;
    if (!need.empty())
      for (int v = 0; v < cfg.num_sc_backhaul; ++v) {
        const int h = L.sigma_head(v);
        if (h < 0) break;
        const auto [u, w] = need[static_cast<std::size_t>(v) % need.size()];
        a.disc[static_cast<std::size_t>(h)] = 1 + u * (U - 1) + (w < u ? w : w - 1);
      }
  }
  return a;
}

std::unique_ptr<Policy> make_policy(const std::string& kind, const ScenarioConfig& cfg,
                                    std::uint64_t seed) {
  if (kind == "hhcda") return std::make_unique<HhcdaAgent>(cfg, seed);
  if (kind == "quantized-ddpg") return std::make_unique<QuantizedDdpgAgent>(cfg, seed);
  if (kind == "random") return std::make_unique<RandomPolicy>(derive_seed(seed, 13));
  if (kind == "greedy") return std::make_unique<GreedyPolicy>();
  throw std::invalid_argument("unknown policy '" + kind + "'");
}

}  // namespace uavnfv
