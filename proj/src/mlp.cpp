#include "orchard/mlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "file_util.hpp"
#include "orchard/error.hpp"
#include "rng.hpp"

namespace orchard::mlp {
namespace {

constexpr double kSigmoidClamp = 36.0;

Eigen::ArrayXXd sigmoid_array(const Eigen::ArrayXXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

std::vector<int> layer_widths(const Architecture& arch) {
  std::vector<int> w{arch.input_size};
  w.insert(w.end(), arch.hidden.begin(), arch.hidden.end());
  w.push_back(arch.output_size);
  return w;
}

// Activations of every layer, index 0 = inputs.
std::vector<Eigen::MatrixXd> forward_all(const Network& net, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.layers().size() + 1);
  acts.push_back(x);
  for (const Layer& l : net.layers()) {
    Eigen::MatrixXd z = l.weights * acts.back();
    z.colwise() += l.bias;
    acts.push_back(sigmoid_array(z.array()).matrix());
  }
  return acts;
}

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::kInvalidArgument, msg);
}

}  // namespace

double sigmoid(double z) {
  z = std::clamp(z, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

void Architecture::validate() const {
  if (input_size < 1 || output_size < 1) invalid("layer widths must be >= 1");
  if (hidden.empty() || hidden.size() > 2) invalid("architecture needs one or two hidden layers");
  for (int h : hidden)
    if (h < 1) invalid("layer widths must be >= 1");
}

std::size_t Architecture::parameter_count() const {
  const auto w = layer_widths(*this);
  std::size_t n = 0;
  for (std::size_t i = 1; i < w.size(); ++i)
    n += static_cast<std::size_t>(w[i]) * w[i - 1] + w[i];
  return n;
}

std::string Architecture::to_string() const {
  std::string s;
  for (int w : layer_widths(*this)) s += (s.empty() ? "" : "-") + std::to_string(w);
  return s;
}

Network::Network(Architecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  const auto w = layer_widths(arch_);
  for (std::size_t i = 1; i < w.size(); ++i)
    layers_.push_back({Eigen::MatrixXd::Zero(w[i], w[i - 1]), Eigen::VectorXd::Zero(w[i])});
}

double Network::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != arch_.input_size) invalid("input size mismatch");
  Eigen::MatrixXd col(arch_.input_size, 1);
  for (int i = 0; i < arch_.input_size; ++i) col(i, 0) = x[i];
  return forward(col)(0, 0);
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd a = inputs;
  for (const Layer& l : layers_) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.bias;
    a = sigmoid_array(z.array()).matrix();
  }
  return a;
}

std::vector<double> Network::flatten() const {
  std::vector<double> out;
  out.reserve(arch_.parameter_count());
  for (const Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Network::assign(std::span<const double> params) {
  if (params.size() != arch_.parameter_count())
    throw Error(ErrorKind::kDimensionMismatch, "parameter count does not match architecture");
  std::size_t k = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = params[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = params[k++];
  }
}

bool Network::operator==(const Network& o) const {
  return arch_.input_size == o.arch_.input_size && arch_.hidden == o.arch_.hidden &&
         arch_.output_size == o.arch_.output_size && flatten() == o.flatten();
}

Network init_network(const Architecture& arch, std::uint64_t seed) {
  Network net(arch);
  detail::Rng rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<double> params(arch.parameter_count());
  for (double& p : params) p = dist(rng);
  net.assign(params);
  return net;
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> idx) const {
  LabeledSet s;
  s.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(idx.size()));
  s.targets.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    s.inputs.col(k) = inputs.col(idx[k]);
    s.targets(k) = targets(idx[k]);
  }
  return s;
}

Gradients gradients(const Network& net, const LabeledSet& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) invalid("gradient of an empty batch");
  if (batch.inputs.rows() != net.architecture().input_size) invalid("input size mismatch");

  const auto acts = forward_all(net, batch.inputs);
  const Eigen::MatrixXd& out = acts.back();
  Eigen::MatrixXd err = out;
  err.row(0) -= batch.targets;

  Gradients g;
  g.mse = err.squaredNorm() / static_cast<double>(n);
  g.layers.resize(net.layers().size());

  Eigen::MatrixXd d_act = err * (2.0 / static_cast<double>(n));
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const Eigen::MatrixXd& a = acts[li + 1];
    const Eigen::MatrixXd dz = (d_act.array() * a.array() * (1.0 - a.array())).matrix();
    g.layers[li].weights = dz * acts[li].transpose();
    g.layers[li].bias = dz.rowwise().sum();
    if (li > 0) d_act = net.layers()[li].weights.transpose() * dz;
  }
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    invalid("learning rate must be positive");
  if (max_epochs < 0) invalid("max epochs must be >= 0");
  if (!(goal_mse >= 0.0)) invalid("goal mse must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    invalid("momentum coefficient must lie in [0, 1)");
  double sum = 0.0;
  for (double f : split) {
    if (!(f > 0.0)) invalid("split fractions must each be > 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-12) invalid("split fractions must sum to 1");
}

TrainResult train(Network& net, const LabeledSet& data, const TrainConfig& cfg) {
  if (data.size() == 0) invalid("training data is empty");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const bool goal_enabled = std::isfinite(cfg.goal_mse);

  TrainResult res;
  res.mse_history.reserve(static_cast<std::size_t>(cfg.max_epochs));

  std::vector<Layer> velocity;
  if (cfg.rule == UpdateRule::kMomentum) {
    for (const Layer& l : net.layers())
      velocity.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
  }

  Gradients g = gradients(net, data);
  res.initial_mse = g.mse;
  double mse = g.mse;
  while (res.epochs_run < cfg.max_epochs) {
    if (goal_enabled && mse <= cfg.goal_mse) break;
    auto& layers = net.layers();
    if (cfg.rule == UpdateRule::kGradientDescent) {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weights -= cfg.learning_rate * g.layers[i].weights;
        layers[i].bias -= cfg.learning_rate * g.layers[i].bias;
      }
    } else {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        velocity[i].weights = cfg.momentum * velocity[i].weights - cfg.learning_rate * g.layers[i].weights;
        velocity[i].bias = cfg.momentum * velocity[i].bias - cfg.learning_rate * g.layers[i].bias;
        layers[i].weights += velocity[i].weights;
        layers[i].bias += velocity[i].bias;
      }
    }
    ++res.epochs_run;
    g = gradients(net, data);
    mse = g.mse;
    res.mse_history.push_back(mse);
  }
  res.final_mse = mse;
  res.reached_goal = goal_enabled && mse <= cfg.goal_mse;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
  TrainConfig probe;
  probe.split = fractions;
  probe.validate();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // The epsilon keeps exact products such as 800 * 0.2 from flooring low.
  auto part = [n](double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  const std::size_t n_val = part(fractions[1]);
  const std::size_t n_test = part(fractions[2]);
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
    invalid("split leaves an empty subset for n = " + std::to_string(n));
  const std::size_t n_train = n - n_val - n_test;

  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

Metrics evaluate(const Network& net, const LabeledSet& set) {
  if (set.size() == 0) invalid("evaluation of an empty subset");
  const Eigen::RowVectorXd out = net.forward(set.inputs).row(0);
  const auto n = static_cast<double>(set.size());

  Metrics m;
  m.count = set.size();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double pred = out(i) > 0.5 ? 1.0 : 0.0;
    if (pred == set.targets(i)) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / n;
  m.mse = (out - set.targets).squaredNorm() / n;

  const double mo = out.mean();
  const double mt = set.targets.mean();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double dx = out(i) - mo, dy = set.targets(i) - mt;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx > 0.0 && syy > 0.0) {
    m.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  } else {
    m.r = 0.0;
    m.r_defined = false;
  }
  return m;
}

MinMaxScaler MinMaxScaler::fit(const LabeledSet& train) {
  if (train.size() == 0) invalid("cannot fit a scaler on an empty set");
  MinMaxScaler s;
  for (Eigen::Index d = 0; d < train.inputs.rows(); ++d) {
    s.lo.push_back(train.inputs.row(d).minCoeff());
    s.hi.push_back(train.inputs.row(d).maxCoeff());
  }
  return s;
}

std::vector<double> MinMaxScaler::apply(std::span<const double> x) const {
  if (x.size() != lo.size()) invalid("scaler dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double range = hi[d] - lo[d];
    out[d] = range > 0.0 ? (x[d] - lo[d]) / range : 0.5;
  }
  return out;
}

LabeledSet MinMaxScaler::apply(const LabeledSet& set) const {
  if (static_cast<std::size_t>(set.inputs.rows()) != lo.size()) invalid("scaler dimension mismatch");
  LabeledSet out = set;
  for (Eigen::Index d = 0; d < out.inputs.rows(); ++d) {
    const double range = hi[d] - lo[d];
    if (range > 0.0)
      out.inputs.row(d) = (out.inputs.row(d).array() - lo[d]) / range;
    else
      out.inputs.row(d).setConstant(0.5);
  }
  return out;
}

FittedModel fit(const LabeledSet& data, const Architecture& arch, const TrainConfig& cfg) {
  arch.validate();
  cfg.validate();
  if (data.inputs.rows() != arch.input_size) invalid("feature width does not match architecture");

  const SplitIndices idx = split(data.size(), cfg.split, detail::mix_seed(cfg.seed, 1));
  const LabeledSet raw_train = data.subset(idx.train);

  FittedModel m;
  m.scaler = MinMaxScaler::fit(raw_train);
  const LabeledSet train_set = m.scaler.apply(raw_train);
  const LabeledSet val_set = m.scaler.apply(data.subset(idx.validation));
  const LabeledSet test_set = m.scaler.apply(data.subset(idx.test));
  const LabeledSet whole = m.scaler.apply(data);

  m.net = init_network(arch, detail::mix_seed(cfg.seed, 2));
  m.report.arch = arch;
  m.report.config = cfg;
  m.report.training = train(m.net, train_set, cfg);
  m.report.train = evaluate(m.net, train_set);
  m.report.validation = evaluate(m.net, val_set);
  m.report.test = evaluate(m.net, test_set);
  m.report.whole = evaluate(m.net, whole);
  m.report.n_train = idx.train.size();
  m.report.n_validation = idx.validation.size();
  m.report.n_test = idx.test.size();
  return m;
}

std::string format_report(const TrainReport& r, bool include_timing) {
  std::ostringstream os;
  char buf[256];
  os << "architecture: " << r.arch.to_string() << "\n";
  if (r.config.rule == UpdateRule::kMomentum) {
    std::snprintf(buf, sizeof buf, "rule: momentum (mu = %.17g)\n", r.config.momentum);
    os << buf;
  } else {
    os << "rule: gradient descent\n";
  }
  std::snprintf(buf, sizeof buf, "learning_rate: %.17g\nmax_epochs: %d\ngoal_mse: %.17g\nseed: %llu\n",
                r.config.learning_rate, r.config.max_epochs, r.config.goal_mse,
                static_cast<unsigned long long>(r.config.seed));
  os << buf;
  os << "split: " << r.n_train << "/" << r.n_validation << "/" << r.n_test << "\n";
  os << "epochs: " << r.training.epochs_run << (r.training.reached_goal ? " (goal reached)" : "")
     << "\n";
  std::snprintf(buf, sizeof buf, "final_train_mse: %.17g\n", r.training.final_mse);
  os << buf;
  if (include_timing) {
    std::snprintf(buf, sizeof buf, "wall_time_s: %.3f\n", r.training.wall_time_s);
    os << buf;
  }
  os << "subset,count,accuracy,mse,r\n";
  auto row = [&](const char* name, const Metrics& m) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g%s\n", name, m.count, m.accuracy,
                  m.mse, m.r, m.r_defined ? "" : " (undefined)");
    os << buf;
  };
  row("train", r.train);
  row("validation", r.validation);
  row("test", r.test);
  row("whole", r.whole);
  return os.str();
}

std::string serialize(const Network& net) {
  const Architecture& a = net.architecture();
  std::string out = "mlpv1 " + std::to_string(a.input_size);
  for (int h : a.hidden) out += " " + std::to_string(h);
  out += " " + std::to_string(a.output_size) + "\n";
  for (double p : net.flatten()) out += detail::format_double(p) + "\n";
  return out;
}

Network deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kFormat, "model: empty file");
  std::istringstream hdr(line);
  std::string magic;
  hdr >> magic;
  if (magic.rfind("mlpv", 0) == 0 && magic != "mlpv1")
    throw Error(ErrorKind::kVersionMismatch, "model: unsupported version '" + magic + "'");
  if (magic != "mlpv1") throw Error(ErrorKind::kFormat, "model: bad header");
  std::vector<int> widths;
  for (int w; hdr >> w;) widths.push_back(w);
  if (!hdr.eof() || widths.size() < 3 || widths.size() > 4)
    throw Error(ErrorKind::kFormat, "model: header must list 3 or 4 layer widths");

  Architecture arch;
  arch.input_size = widths.front();
  arch.output_size = widths.back();
  arch.hidden.assign(widths.begin() + 1, widths.end() - 1);
  try {
    arch.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("model: ") + e.what());
  }

  std::vector<double> params;
  params.reserve(arch.parameter_count());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0' || !std::isfinite(v))
      throw Error(ErrorKind::kFormat, "model: bad parameter line '" + line + "'");
    params.push_back(v);
  }
  if (params.size() < arch.parameter_count())
    throw Error(ErrorKind::kTruncated,
                "model: expected " + std::to_string(arch.parameter_count()) +
                    " parameters, found " + std::to_string(params.size()));
  if (params.size() > arch.parameter_count())
    throw Error(ErrorKind::kDimensionMismatch,
                "model: " + std::to_string(params.size()) +
                    " parameters do not fit layer shapes " + arch.to_string());
  Network net(arch);
  net.assign(params);
  return net;
}

void save_model(const Network& net, const std::string& path) {
  detail::write_file_atomic(path, serialize(net));
}

Network load_model(const std::string& path) { return deserialize(detail::read_file(path)); }

std::string serialize(const MinMaxScaler& s) {
  std::string out = "minmax1 " + std::to_string(s.lo.size()) + "\n";
  for (std::size_t d = 0; d < s.lo.size(); ++d)
    out += detail::format_double(s.lo[d]) + " " + detail::format_double(s.hi[d]) + "\n";
  return out;
}

MinMaxScaler deserialize_scaler(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  std::size_t dims = 0;
  if (!(in >> magic >> dims) || magic != "minmax1")
    throw Error(ErrorKind::kFormat, "scaler: bad header");
  MinMaxScaler s;
  for (std::size_t d = 0; d < dims; ++d) {
    std::string lo, hi;
    if (!(in >> lo >> hi)) throw Error(ErrorKind::kTruncated, "scaler: missing rows");
    s.lo.push_back(detail::parse_double(lo));
    s.hi.push_back(detail::parse_double(hi));
  }
  return s;
}

std::string training_log_csv(const TrainResult& result) {
  std::string out = "epoch,mse\n";
  for (std::size_t i = 0; i < result.mse_history.size(); ++i)
    out += std::to_string(i + 1) + "," + detail::format_double(result.mse_history[i]) + "\n";
  return out;
}

}  // namespace orchard::mlp
