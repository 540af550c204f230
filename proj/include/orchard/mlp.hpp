#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace orchard::mlp {

struct Architecture {
  int input_size = 3;
  std::vector<int> hidden;  // one or two hidden layers
  int output_size = 1;

  void validate() const;
  std::size_t parameter_count() const;
  std::string to_string() const;  // e.g. "3-50-40-1"
};

struct Layer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;
};

/// Feedforward net with a sigmoid on every layer.
class Network {
 public:
  Network() = default;
  explicit Network(Architecture arch);  // zero-initialized

  const Architecture& architecture() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Single-output forward pass.
  double forward(std::span<const double> x) const;
  /// Column-per-sample batch; returns output_size x n.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  /// Parameters in file order: per layer, weights row-major then biases.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);

  bool operator==(const Network& o) const;

 private:
  Architecture arch_;
  std::vector<Layer> layers_;
};

/// Sigmoid with |z| clamped to 36 so the output stays strictly inside (0, 1).
double sigmoid(double z);

/// Weights and biases i.i.d. uniform on [-0.5, 0.5], seeded.
Network init_network(const Architecture& arch, std::uint64_t seed);

/// Column-per-sample inputs with one target per column.
struct LabeledSet {
  Eigen::MatrixXd inputs;   // input_size x n
  Eigen::RowVectorXd targets;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
  LabeledSet subset(std::span<const std::size_t> idx) const;
};

struct Gradients {
  std::vector<Layer> layers;
  double mse = 0.0;  // loss at the evaluated parameters
};

/// Analytic backprop gradient of (1/N) * sum (y_hat - y)^2.
Gradients gradients(const Network& net, const LabeledSet& batch);

enum class UpdateRule { kGradientDescent, kMomentum };

struct TrainConfig {
  UpdateRule rule = UpdateRule::kGradientDescent;
  double momentum = 0.0;  // in [0, 1), momentum rule only
  double learning_rate = 0.05;
  int max_epochs = 10000;
  /// Training stops once the training MSE is <= goal. +inf disables the goal.
  double goal_mse = 0.002;
  std::uint64_t seed = 1;
  std::array<double, 3> split = {0.6, 0.2, 0.2};  // train, validation, test

  void validate() const;
};

struct TrainResult {
  int epochs_run = 0;  // number of weight updates
  double wall_time_s = 0.0;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  std::vector<double> mse_history;  // training MSE after each update
  bool reached_goal = false;
};

/// Full-batch training of `net` in place on `data`.
TrainResult train(Network& net, const LabeledSet& data, const TrainConfig& cfg);

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

/// Seeded shuffle then contiguous partition. Validation and test sizes are
/// floor(n * fraction); the remainder goes to training.
SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;  // decision: y_hat > 0.5 means class 1
  double mse = 0.0;
  double r = 0.0;         // Pearson correlation of outputs and targets
  bool r_defined = true;  // false when either side has zero variance
  std::size_t count = 0;
};

Metrics evaluate(const Network& net, const LabeledSet& set);

/// Per-dimension min-max scaling fitted on training data only.
struct MinMaxScaler {
  std::vector<double> lo, hi;

  static MinMaxScaler fit(const LabeledSet& train);
  /// Affine, unclipped; a constant dimension maps to 0.5.
  LabeledSet apply(const LabeledSet& set) const;
  std::vector<double> apply(std::span<const double> x) const;
};

struct TrainReport {
  Architecture arch;
  TrainConfig config;
  TrainResult training;
  Metrics train, validation, test, whole;
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
};

struct FittedModel {
  Network net;
  MinMaxScaler scaler;
  TrainReport report;
};

/// split -> fit scaler on the training subset -> init -> train -> evaluate
/// every subset and the whole data.
FittedModel fit(const LabeledSet& data, const Architecture& arch, const TrainConfig& cfg);

std::string format_report(const TrainReport& report, bool include_timing);

// Text model format: header `mlpv1 <in> <h1> [<h2>] <out>` then one
// parameter per line, 17 significant digits.
std::string serialize(const Network& net);
Network deserialize(const std::string& text);
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

std::string serialize(const MinMaxScaler& scaler);
MinMaxScaler deserialize_scaler(const std::string& text);

/// CSV `epoch,mse`.
std::string training_log_csv(const TrainResult& result);

}  // namespace orchard::mlp
