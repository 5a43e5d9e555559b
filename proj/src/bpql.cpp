#include "cdelay/bpql.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace cdelay {

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

void check_divergence(double loss, double limit, const char* what) {
  if (!std::isfinite(loss) || std::abs(loss) > limit) {
    std::ostringstream os;
    os << what << " loss diverged: " << loss;
    throw DivergenceError(os.str());
  }
}

}  // namespace

void SacHyper::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi must lie in [0, 1]");
  if (lr_actor <= 0.0 || lr_critic <= 0.0) throw std::invalid_argument("learning rates must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (capacity < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("replay capacity below batch size");
  if (hidden < 1) throw std::invalid_argument("hidden width must be positive");
}

// ---------------------------------------------------------------- replay

Transition Transition::from(const ReplayTuple& t) {
  Transition out;
  out.x = to_vector(t.x_now.flatten());
  out.s = to_vector(t.s_now.vec);
  out.a = to_vector(t.a.vec);
  out.r = t.r;
  out.x_next = to_vector(t.x_next.flatten());
  out.s_next = to_vector(t.s_next.vec);
  out.terminal = t.terminal;
  return out;
}

FlatBatch FlatBatch::stack(const std::vector<const Transition*>& items) {
  if (items.empty()) throw std::invalid_argument("empty batch");
  const auto n = static_cast<Eigen::Index>(items.size());
  const Transition& f = *items.front();
  FlatBatch b;
  b.x.resize(f.x.size(), n);
  b.s.resize(f.s.size(), n);
  b.a.resize(f.a.size(), n);
  b.x_next.resize(f.x_next.size(), n);
  b.s_next.resize(f.s_next.size(), n);
  b.r.resize(n);
  b.not_done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = *items[static_cast<std::size_t>(j)];
    if (t.x.size() != b.x.rows() || t.x_next.size() != b.x_next.rows() || t.s.size() != b.s.rows() ||
        t.a.size() != b.a.rows())
      throw std::invalid_argument("ragged transition batch");
    b.x.col(j) = t.x;
    b.s.col(j) = t.s;
    b.a.col(j) = t.a;
    b.x_next.col(j) = t.x_next;
    b.s_next.col(j) = t.s_next;
    b.r(j) = t.r;
    b.not_done(j) = t.terminal ? 0.0 : 1.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.size() < n || items_.empty()) throw std::logic_error("not enough transitions to sample");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

// ---------------------------------------------------------------- audit

void WidthAudit::actor(Eigen::Index rows) {
  ++actor_calls;
  if (rows != actor_width) {
    ++violations;
    throw std::logic_error("actor input width " + std::to_string(rows) + " != " +
                           std::to_string(actor_width));
  }
}

void WidthAudit::critic(Eigen::Index rows) {
  ++critic_calls;
  if (rows != critic_width) {
    ++violations;
    throw std::logic_error("critic input width " + std::to_string(rows) + " != " +
                           std::to_string(critic_width));
  }
}

// ---------------------------------------------------------------- actor

Actor::Actor(int in_dim, std::vector<Interval> bounds, int hidden)
    : net_({in_dim, hidden, hidden, 2 * static_cast<int>(bounds.size())}) {
  if (bounds.empty()) throw std::invalid_argument("actor needs a continuous action space");
  scale_.resize(static_cast<Eigen::Index>(bounds.size()));
  offset_.resize(scale_.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(bounds[i].high > bounds[i].low)) throw std::invalid_argument("empty action interval");
    scale_(static_cast<Eigen::Index>(i)) = 0.5 * (bounds[i].high - bounds[i].low);
    offset_(static_cast<Eigen::Index>(i)) = 0.5 * (bounds[i].high + bounds[i].low);
  }
}

Actor::Sample Actor::sample(const Matrix& x, const Matrix& noise, Mlp::Cache& cache) const {
  const int ad = action_dim();
  if (noise.rows() != ad || noise.cols() != x.cols())
    throw std::invalid_argument("noise shape does not match the batch");
  const Matrix& out = net_.forward(x, cache);
  Sample s;
  s.mean = out.topRows(ad);
  const Matrix raw = out.bottomRows(ad);
  s.clamped = (raw.array() < kLogStdMin) || (raw.array() > kLogStdMax);
  s.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  s.noise = noise;
  const Matrix u = s.mean.array() + s.log_std.array().exp() * noise.array();
  s.squashed = u.array().tanh();
  s.action = (s.squashed.array().colwise() * scale_.array()).colwise() + offset_.array();
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  const double log_scale = scale_.array().log().sum();
  s.log_prob.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double lp = -log_scale;
    for (int d = 0; d < ad; ++d) {
      const double e = noise(d, j);
      lp += -0.5 * e * e - s.log_std(d, j) - log_norm - log_one_minus_tanh_sq(u(d, j));
    }
    s.log_prob(j) = lp;
  }
  return s;
}

Actor::Sample Actor::sample(const Matrix& x, const Matrix& noise) const {
  Mlp::Cache cache;
  return sample(x, noise, cache);
}

double Actor::log_prob(std::span<const double> x, std::span<const double> action) const {
  const int ad = action_dim();
  if (static_cast<int>(action.size()) != ad) throw std::invalid_argument("action width mismatch");
  const Vector out = net_.forward_one(x);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (int d = 0; d < ad; ++d) {
    const double y = (action[static_cast<std::size_t>(d)] - offset_(d)) / scale_(d);
    if (!(std::abs(y) < 1.0)) return -std::numeric_limits<double>::infinity();
    const double u = std::atanh(y);
    const double ls = std::clamp(out(ad + d), kLogStdMin, kLogStdMax);
    const double e = (u - out(d)) / std::exp(ls);
    lp += -0.5 * e * e - ls - log_norm - std::log1p(-y * y) - std::log(scale_(d));
  }
  return lp;
}

EnvAction Actor::act(const AugmentedState& x, Rng& rng) const {
  const auto flat = x.flatten();
  const Matrix in = Eigen::Map<const Matrix>(flat.data(), static_cast<Eigen::Index>(flat.size()), 1);
  const Sample s = sample(in, standard_normal(action_dim(), 1, rng));
  EnvAction a;
  a.vec.assign(s.action.data(), s.action.data() + action_dim());
  return a;
}

EnvAction Actor::act_mean(const AugmentedState& x) const {
  const Vector out = net_.forward_one(x.flatten());
  EnvAction a;
  for (int d = 0; d < action_dim(); ++d) a.vec.push_back(offset_(d) + scale_(d) * std::tanh(out(d)));
  return a;
}

// ---------------------------------------------------------------- critic

BetaCritic::BetaCritic(int state_dim, int action_dim, int hidden) {
  const std::vector<int> dims{state_dim + action_dim, hidden, hidden, 1};
  for (int i = 0; i < 2; ++i) {
    heads_[i] = Mlp(dims);
    targets_[i] = Mlp(dims);
  }
}

void BetaCritic::init(Rng& rng) {
  heads_[0].init_uniform(rng);
  heads_[1].init_uniform(rng);
  sync_targets();
}

void BetaCritic::sync_targets() {
  targets_[0].params() = heads_[0].params();
  targets_[1].params() = heads_[1].params();
}

// ---------------------------------------------------------------- losses

double beta_critic_target(double r, double gamma, bool terminal, double target_q, double log_prob,
                          double alpha) {
  return r + gamma * (terminal ? 0.0 : 1.0) * (target_q - alpha * log_prob);
}

Vector beta_critic_targets(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                           const SacHyper& h, const Matrix& noise, WidthAudit* audit) {
  if (audit) audit->actor(b.x_next.rows());
  const Actor::Sample next = actor.sample(b.x_next, noise);
  const Matrix sa = vstack(b.s_next, next.action);
  if (audit) {
    audit->critic(sa.rows());
    audit->critic(sa.rows());
  }
  const Matrix q1 = critic.target(0).forward(sa);
  const Matrix q2 = critic.target(1).forward(sa);
  Vector y(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    y(j) = beta_critic_target(b.r(j), h.gamma, b.not_done(j) == 0.0, std::min(q1(0, j), q2(0, j)),
                              next.log_prob(j), h.alpha);
  }
  return y;
}

CriticLoss beta_critic_loss(const FlatBatch& b, const BetaCritic& critic, const Vector& targets,
                            WidthAudit* audit) {
  const Matrix sa = vstack(b.s, b.a);
  const double n = static_cast<double>(b.size());
  CriticLoss out;
  for (int i = 0; i < 2; ++i) {
    if (audit) audit->critic(sa.rows());
    Mlp::Cache cache;
    const Matrix& q = critic.head(i).forward(sa, cache);
    const Matrix diff = q - targets.transpose();
    out.loss += 0.5 * diff.squaredNorm() / n;
    out.grad[i] = Vector::Zero(static_cast<Eigen::Index>(critic.head(i).num_params()));
    critic.head(i).backward(cache, diff / n, out.grad[i]);
  }
  return out;
}

CriticLoss beta_critic_loss(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                            const SacHyper& h, const Matrix& noise, WidthAudit* audit) {
  return beta_critic_loss(b, critic, beta_critic_targets(b, actor, critic, h, noise, audit), audit);
}

ActorLoss actor_loss(const FlatBatch& b, const Actor& actor, const BetaCritic& critic,
                     const SacHyper& h, const Matrix& noise, WidthAudit* audit) {
  const int ad = actor.action_dim();
  const double n = static_cast<double>(b.size());
  if (audit) audit->actor(b.x.rows());
  Mlp::Cache ac;
  const Actor::Sample s = actor.sample(b.x, noise, ac);
  const Matrix sa = vstack(b.s, s.action);
  if (audit) {
    audit->critic(sa.rows());
    audit->critic(sa.rows());
  }
  Mlp::Cache c1, c2;
  const Matrix q1 = critic.head(0).forward(sa, c1);
  const Matrix q2 = critic.head(1).forward(sa, c2);

  ActorLoss out;
  Matrix dq1 = Matrix::Zero(1, b.size());
  Matrix dq2 = Matrix::Zero(1, b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const bool first = q1(0, j) <= q2(0, j);
    out.loss += h.alpha * s.log_prob(j) - (first ? q1(0, j) : q2(0, j));
    (first ? dq1 : dq2)(0, j) = -1.0 / n;
  }
  out.loss /= n;

  // Only the action rows of dQ/d(input) matter; parameter gradients of the
  // critic are discarded.
  Vector scratch1 = Vector::Zero(static_cast<Eigen::Index>(critic.head(0).num_params()));
  Vector scratch2 = Vector::Zero(static_cast<Eigen::Index>(critic.head(1).num_params()));
  const Matrix d_sa = critic.head(0).backward(c1, dq1, scratch1) + critic.head(1).backward(c2, dq2, scratch2);
  const Matrix d_action = d_sa.bottomRows(ad);

  const Vector& scale = actor.scale();
  Matrix d_out(2 * ad, b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (int d = 0; d < ad; ++d) {
      const double y = s.squashed(d, j);
      // dy/du = 1 - y^2 and d(-log(1 - y^2))/du = 2y.
      const double du = d_action(d, j) * scale(d) * (1.0 - y * y) + h.alpha / n * 2.0 * y;
      d_out(d, j) = du;
      const double dls = du * std::exp(s.log_std(d, j)) * s.noise(d, j) - h.alpha / n;
      d_out(ad + d, j) = s.clamped(d, j) ? 0.0 : dls;
    }
  }
  out.grad = Vector::Zero(static_cast<Eigen::Index>(actor.net().num_params()));
  actor.net().backward(ac, d_out, out.grad);
  return out;
}

void soft_update(const Mlp& online, Mlp& target, double xi, bool literal) {
  if (online.dims() != target.dims()) throw std::invalid_argument("soft_update shape mismatch");
  const double w_online = literal ? xi : 1.0 - xi;
  target.params() = w_online * online.params() + (1.0 - w_online) * target.params();
}

void soft_update(BetaCritic& critic, double xi, bool literal) {
  for (int i = 0; i < 2; ++i) soft_update(critic.head(i), critic.target(i), xi, literal);
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix out(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

// ---------------------------------------------------------------- agent

BpqlAgent::BpqlAgent(const EnvSpec& env, int delta, const SacHyper& h, Rng& init_rng)
    : h_(h),
      actor_(env.state_dim + delta * env.action_dim, env.action_bounds, h.hidden),
      critic_(env.state_dim, env.action_dim, h.hidden) {
  h_.validate();
  if (env.discrete()) throw std::invalid_argument("BPQL needs a continuous-action environment");
  if (delta < 0) throw std::invalid_argument("negative delta");
  actor_.net().init_uniform(init_rng);
  critic_.init(init_rng);
  actor_opt_ = Adam(actor_.net().num_params(), h_.lr_actor);
  critic_opt_[0] = Adam(critic_.head(0).num_params(), h_.lr_critic);
  critic_opt_[1] = Adam(critic_.head(1).num_params(), h_.lr_critic);
  rng_.seed(init_rng());
  audit_.actor_width = env.state_dim + delta * env.action_dim;
  audit_.critic_width = env.state_dim + env.action_dim;
}

EnvAction BpqlAgent::act(const AugmentedState& x, Rng& explore) {
  audit_.actor(static_cast<Eigen::Index>(x.flat_dim()));
  return actor_.act(x, explore);
}

void BpqlAgent::update(const ReplayBuffer& replay) {
  const FlatBatch b = FlatBatch::stack(replay.sample(static_cast<std::size_t>(h_.batch_size), rng_));
  const int ad = actor_.action_dim();
  const Matrix noise_next = standard_normal(ad, b.size(), rng_);
  const Matrix noise_now = standard_normal(ad, b.size(), rng_);

  const CriticLoss cl = beta_critic_loss(b, actor_, critic_, h_, noise_next, &audit_);
  check_divergence(cl.loss, h_.divergence_limit, "critic");
  critic_opt_[0].step(critic_.head(0).params(), cl.grad[0]);
  critic_opt_[1].step(critic_.head(1).params(), cl.grad[1]);

  const ActorLoss al = actor_loss(b, actor_, critic_, h_, noise_now, &audit_);
  check_divergence(al.loss, h_.divergence_limit, "actor");
  actor_opt_.step(actor_.net().params(), al.grad);

  soft_update(critic_, h_.xi, h_.literal_polyak);

  if (!actor_.net().all_finite() || !critic_.head(0).all_finite() || !critic_.head(1).all_finite())
    throw DivergenceError("non-finite parameters after update");
  last_critic_ = cl.loss;
  last_actor_ = al.loss;
  ++updates_;
}

// ---------------------------------------------------------------- training

double BpqlResult::final_mean(int episodes) const {
  if (curve.empty()) throw std::logic_error("empty learning curve");
  const auto n = std::min<std::size_t>(curve.size(), static_cast<std::size_t>(std::max(episodes, 1)));
  double sum = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i].episode_return;
  return sum / static_cast<double>(n);
}

namespace {

void record_episode(BpqlResult& res, long step, double ret, int window) {
  CurvePoint p;
  p.episode = static_cast<int>(res.curve.size()) + 1;
  p.step = step;
  p.episode_return = ret;
  const auto n = std::min<std::size_t>(res.curve.size() + 1, static_cast<std::size_t>(std::max(window, 1)));
  double sum = ret;
  for (std::size_t i = res.curve.size() + 1 - n; i < res.curve.size(); ++i) sum += res.curve[i].episode_return;
  p.avg_return = sum / static_cast<double>(n);
  res.curve.push_back(p);
}

void run_updates(BpqlAgent& agent, const ReplayBuffer& replay, long count) {
  const SacHyper& h = agent.hyper();
  for (long i = 0; i < count; ++i) {
    if (replay.size() < std::max<std::size_t>(h.warmup_transitions, static_cast<std::size_t>(h.batch_size)))
      continue;
    agent.update(replay);
  }
}

BpqlResult finish(BpqlAgent& agent, BpqlResult res) {
  res.audit = agent.audit();
  res.updates = agent.updates();
  res.actor = agent.actor();
  res.critic = agent.critic();
  return res;
}

}  // namespace

BpqlResult train_bpql(const BpqlConfig& cfg) {
  if (cfg.total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  cfg.mode.validate();
  RngStreams streams(cfg.seed);
  auto env = make_env(cfg.env);
  BpqlAgent agent(env->spec(), cfg.mode.delta(), cfg.hyper, streams.init);
  ReplayBuffer replay(cfg.hyper.capacity);

  Rollout rollout(*env, RolloutConfig{cfg.mode, cfg.delays, WarmupKind::noop});
  rollout.set_replay_sink([&](const ReplayTuple& t) { replay.push(t); });
  const Policy policy = [&](const AugmentedState& x) { return agent.act(x, streams.explore); };

  BpqlResult res;
  long steps = 0;
  while (steps < cfg.total_steps) {
    rollout.begin_episode(streams.env(), streams.delay);
    long ep_steps = 0;
    while (!rollout.episode_done() && steps < cfg.total_steps) {
      rollout.step(&policy, streams.delay, streams.explore);
      ++steps;
      ++ep_steps;
    }
    if (!rollout.episode_done()) break;  // step budget ran out mid-episode
    record_episode(res, steps, rollout.episode_return(), cfg.curve_window);
    run_updates(agent, replay, ep_steps);
  }
  return finish(agent, std::move(res));
}

BpqlResult train_sac_reference(const BpqlConfig& cfg) {
  if (cfg.total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  RngStreams streams(cfg.seed);
  auto env = make_env(cfg.env);
  BpqlAgent agent(env->spec(), 0, cfg.hyper, streams.init);
  ReplayBuffer replay(cfg.hyper.capacity);

  BpqlResult res;
  long steps = 0;
  while (steps < cfg.total_steps) {
    EnvState s = env->reset(streams.env());
    double ret = 0.0;
    long ep_steps = 0;
    bool done = false;
    while (!done && steps < cfg.total_steps) {
      const AugmentedState x{s, {}, 0};
      const EnvAction a = agent.act(x, streams.explore);
      const StepResult r = env->step(a);
      ReplayTuple t{x, s, a, r.reward, AugmentedState{r.state, {}, 0}, r.state, r.terminated};
      replay.push(t);
      ret += r.reward;
      s = r.state;
      done = r.done();
      ++steps;
      ++ep_steps;
    }
    if (!done) break;
    record_episode(res, steps, ret, cfg.curve_window);
    run_updates(agent, replay, ep_steps);
  }
  return finish(agent, std::move(res));
}

// ---------------------------------------------------------------- checkpoint

namespace {

void write_mlp(std::ostream& os, const std::string& name, const Mlp& net) {
  os << "mlp " << name << ' ' << net.dims().size();
  for (int d : net.dims()) os << ' ' << d;
  os << '\n';
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    os << "weight " << l << ' ' << w.rows() << ' ' << w.cols();
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) os << ' ' << w(i, j);
    os << '\n';
    const auto b = net.bias(l);
    os << "bias " << l << ' ' << b.size();
    for (Eigen::Index i = 0; i < b.size(); ++i) os << ' ' << b(i);
    os << '\n';
  }
}

[[noreturn]] void bad_checkpoint(const std::string& why) {
  throw std::runtime_error("malformed checkpoint: " + why);
}

void read_mlp(std::istream& is, const std::string& name, Mlp& net) {
  std::string tag, got;
  std::size_t nd = 0;
  if (!(is >> tag >> got >> nd) || tag != "mlp" || got != name) bad_checkpoint("expected mlp " + name);
  std::vector<int> dims(nd);
  for (auto& d : dims)
    if (!(is >> d)) bad_checkpoint("truncated dims");
  if (dims != net.dims()) bad_checkpoint("shape mismatch for " + name);
  for (int l = 0; l < net.num_layers(); ++l) {
    int layer = 0;
    Eigen::Index rows = 0, cols = 0, n = 0;
    auto w = net.weight(l);
    if (!(is >> tag >> layer >> rows >> cols) || tag != "weight" || layer != l || rows != w.rows() ||
        cols != w.cols())
      bad_checkpoint("weight header of " + name);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i)
        if (!(is >> w(i, j))) bad_checkpoint("truncated weight");
    auto b = net.bias(l);
    if (!(is >> tag >> layer >> n) || tag != "bias" || layer != l || n != b.size())
      bad_checkpoint("bias header of " + name);
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(is >> b(i))) bad_checkpoint("truncated bias");
  }
}

constexpr const char* kCheckpointMagic = "cdelay-checkpoint";

}  // namespace

void save_checkpoint(std::ostream& os, const Actor& actor, const BetaCritic& critic) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << kCheckpointMagic << " v1\n";
  write_mlp(os, "actor", actor.net());
  write_mlp(os, "q0", critic.head(0));
  write_mlp(os, "q1", critic.head(1));
  write_mlp(os, "q0_target", critic.target(0));
  write_mlp(os, "q1_target", critic.target(1));
  os.precision(old);
}

void load_checkpoint(std::istream& is, Actor& actor, BetaCritic& critic) {
  std::string magic, version;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) bad_checkpoint("missing header");
  if (version != "v1") bad_checkpoint("unsupported version " + version);
  read_mlp(is, "actor", actor.net());
  read_mlp(is, "q0", critic.head(0));
  read_mlp(is, "q1", critic.head(1));
  read_mlp(is, "q0_target", critic.target(0));
  read_mlp(is, "q1_target", critic.target(1));
}

}  // namespace cdelay
