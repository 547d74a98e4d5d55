#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace vcsched::nn {

/// Dense row-major matrix of 64-bit reals. Vectors are 1 x n or n x 1.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool all_finite(const Tensor& t);
double elu(double x);

/// Named parameters with gradient slots. Iteration order is by name.
class ParamSet {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t scalar_count() const;

  void zero_grad();
  /// Copies values for every name in `other` (shapes must match).
  void copy_values_from(const ParamSet& other);
  /// Entries whose name starts with `prefix`.
  ParamSet subset(const std::string& prefix) const;

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::map<std::string, Entry> entries_;
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape. Every op checks its result for NaN/Inf and throws
/// std::runtime_error on the first non-finite value.
class Tape {
 public:
  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() accumulates into params.grad(name).
  Var param(ParamSet& params, const std::string& name);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient after backward(); zero-shaped when the node got no gradient.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var elu(Var a);
  Var softmax_rows(Var a);
  Var concat_cols(Var a, Var b);
  Var stack_rows(std::span<const Var> rows);
  Var gather_rows(Var a, std::span<const std::size_t> rows);
  /// Column vector with a(r, cols[r]) per row.
  Var pick(Var a, std::span<const std::size_t> cols);
  Var sum(Var a);
  /// Mean of squared entries of (a - b).
  Var mse(Var a, Var b);

  /// Attention aggregation over sampled neighbourhoods. hw is n x d, attn is
  /// 2d x 1 (first half scores the centre row, second half the neighbour).
  /// out_i = sum_k alpha_ik hw_{nbr[i][k]}, alpha_i = softmax_k(a1.hw_i + a2.hw_{nbr[i][k]}).
  /// Repeated neighbour ids count as separate entries.
  Var attend(Var hw, Var attn, const std::vector<std::vector<std::size_t>>& neighbourhoods);

  /// Reverse sweep from a 1 x 1 node. Throws std::logic_error on an empty tape
  /// or a non-scalar root.
  void backward(Var root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    std::function<void(Tape&, std::size_t)> backprop;
    Tensor* param_grad = nullptr;
  };

  Var push(Tensor value, std::vector<std::size_t> inputs, std::function<void(Tape&, std::size_t)> backprop,
           const char* op);
  Tensor& grad_slot(std::size_t id);

  std::vector<Node> nodes_;
};

/// Attention coefficients alpha_i over one neighbourhood (plain evaluation).
std::vector<double> attention_weights(const Tensor& hw, const Tensor& attn, std::size_t i,
                                      std::span<const std::size_t> neighbourhood);

struct SgdConfig {
  double lr = 1e-4;
};
void sgd_step(ParamSet& params, const SgdConfig& cfg);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(ParamSet& params);
  const AdamConfig& config() const { return cfg_; }
  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

/// Uniform in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
template <class Urbg>
Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Urbg& rng);

/// Central differences of f with respect to every entry of params.value(name).
Tensor finite_difference(ParamSet& params, const std::string& name, const std::function<double()>& f,
                         double h = 1e-5);

/// max |a - n| / max(|a|, |n|, floor) over entries.
double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6);

inline constexpr const char* kCheckpointFormat = "vcsched-params";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& doc);
/// Container {format, version, meta, tensors: {name: {shape, values}}}.
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const nlohmann::json& meta = {});
ParamSet load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

// ---------------------------------------------------------------------------

template <class Urbg>
Tensor xavier_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Urbg& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = dist(rng);
  return t;
}

}  // namespace vcsched::nn
