#include "vcsched/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

namespace vcsched::nn {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(
        fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

}  // namespace

bool all_finite(const Tensor& t) { return t.allFinite(); }

double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }

// ParamSet -------------------------------------------------------------------

Tensor& ParamSet::add(const std::string& name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  Tensor grad = Tensor::Zero(value.rows(), value.cols());
  auto& e = entries_[name];
  e.value = std::move(value);
  e.grad = std::move(grad);
  return e.value;
}

Tensor& ParamSet::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second.value;
}

const Tensor& ParamSet::value(const std::string& name) const { return const_cast<ParamSet*>(this)->value(name); }

Tensor& ParamSet::grad(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second.grad;
}

const Tensor& ParamSet::grad(const std::string& name) const { return const_cast<ParamSet*>(this)->grad(name); }

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, e] : entries_) e.grad.setZero();
}

void ParamSet::copy_values_from(const ParamSet& other) {
  for (const auto& [name, e] : other.entries_) {
    auto& mine = value(name);
    require_same_shape(mine, e.value, "copy_values_from");
    mine = e.value;
  }
}

ParamSet ParamSet::subset(const std::string& prefix) const {
  ParamSet out;
  for (const auto& [name, e] : entries_) {
    if (name.rfind(prefix, 0) == 0) out.add(name, e.value);
  }
  return out;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (const auto& [name, e] : a.entries_) {
    auto it = b.entries_.find(name);
    if (it == b.entries_.end()) return false;
    const auto& v = it->second.value;
    if (v.rows() != e.value.rows() || v.cols() != e.value.cols() || v != e.value) return false;
  }
  return true;
}

// Tape -----------------------------------------------------------------------

Var Tape::push(Tensor value, std::vector<std::size_t> inputs, std::function<void(Tape&, std::size_t)> backprop,
               const char* op) {
  if (!value.allFinite()) throw std::runtime_error(fmt::format("non-finite value produced by {}", op));
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(inputs), std::move(backprop), nullptr});
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Tensor::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value), {}, nullptr, "constant"); }

Var Tape::param(ParamSet& params, const std::string& name) {
  auto v = push(params.value(name), {}, nullptr, "param");
  nodes_[v.id].param_grad = &params.grad(name);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.cols() != B.rows()) {
    throw std::invalid_argument(
        fmt::format("matmul: shape mismatch {}x{} * {}x{}", A.rows(), A.cols(), B.rows(), B.cols()));
  }
  return push(A * B, {a.id, b.id},
              [a, b](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                t.grad_slot(a.id).noalias() += g * t.value(b).transpose();
                t.grad_slot(b.id).noalias() += t.value(a).transpose() * g;
              },
              "matmul");
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), {a.id, b.id},
              [a, b](Tape& t, std::size_t self) {
                t.grad_slot(a.id) += t.nodes_[self].grad;
                t.grad_slot(b.id) += t.nodes_[self].grad;
              },
              "add");
}

Var Tape::add_row(Var a, Var row) {
  const auto& A = value(a);
  const auto& R = value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw std::invalid_argument("add_row: row must be 1 x cols");
  Tensor out = A.rowwise() + R.row(0);
  return push(std::move(out), {a.id, row.id},
              [a, row](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                t.grad_slot(a.id) += g;
                t.grad_slot(row.id) += g.colwise().sum();
              },
              "add_row");
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), {a.id, b.id},
              [a, b](Tape& t, std::size_t self) {
                t.grad_slot(a.id) += t.nodes_[self].grad;
                t.grad_slot(b.id) -= t.nodes_[self].grad;
              },
              "sub");
}

Var Tape::scale(Var a, double s) {
  return push(value(a) * s, {a.id},
              [a, s](Tape& t, std::size_t self) { t.grad_slot(a.id) += t.nodes_[self].grad * s; }, "scale");
}

Var Tape::elu(Var a) {
  Tensor out = value(a).unaryExpr([](double x) { return nn::elu(x); });
  return push(std::move(out), {a.id},
              [a](Tape& t, std::size_t self) {
                const Tensor& x = t.value(a);
                const Tensor& g = t.nodes_[self].grad;
                auto& ga = t.grad_slot(a.id);
                for (Eigen::Index k = 0; k < x.size(); ++k) {
                  ga.data()[k] += g.data()[k] * (x.data()[k] >= 0.0 ? 1.0 : std::exp(x.data()[k]));
                }
              },
              "elu");
}

Var Tape::softmax_rows(Var a) {
  const auto& A = value(a);
  Tensor out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double m = A.row(r).maxCoeff();
    out.row(r) = (A.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return push(std::move(out), {a.id},
              [a](Tape& t, std::size_t self) {
                const Tensor& y = t.nodes_[self].value;
                const Tensor& g = t.nodes_[self].grad;
                auto& ga = t.grad_slot(a.id);
                for (Eigen::Index r = 0; r < y.rows(); ++r) {
                  const double dot = y.row(r).dot(g.row(r));
                  ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
                }
              },
              "softmax");
}

Var Tape::concat_cols(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.rows() != B.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
  Tensor out(A.rows(), A.cols() + B.cols());
  out << A, B;
  const auto split = A.cols();
  return push(std::move(out), {a.id, b.id},
              [a, b, split](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                t.grad_slot(a.id) += g.leftCols(split);
                t.grad_slot(b.id) += g.rightCols(g.cols() - split);
              },
              "concat");
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const auto cols = value(rows[0]).cols();
  Eigen::Index total = 0;
  for (const auto r : rows) {
    if (value(r).cols() != cols) throw std::invalid_argument("stack_rows: column count mismatch");
    total += value(r).rows();
  }
  Tensor out(total, cols);
  std::vector<std::size_t> ids;
  Eigen::Index at = 0;
  for (const auto r : rows) {
    out.middleRows(at, value(r).rows()) = value(r);
    at += value(r).rows();
    ids.push_back(r.id);
  }
  return push(std::move(out), ids,
              [ids](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                Eigen::Index at = 0;
                for (const auto id : ids) {
                  const auto n = t.nodes_[id].value.rows();
                  t.grad_slot(id) += g.middleRows(at, n);
                  at += n;
                }
              },
              "stack_rows");
}

Var Tape::gather_rows(Var a, std::span<const std::size_t> rows) {
  const auto& A = value(a);
  Tensor out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(A.rows())) throw std::out_of_range("gather_rows: row index");
    out.row(static_cast<Eigen::Index>(k)) = A.row(static_cast<Eigen::Index>(rows[k]));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return push(std::move(out), {a.id},
              [a, idx](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                auto& ga = t.grad_slot(a.id);
                for (std::size_t k = 0; k < idx.size(); ++k) {
                  ga.row(static_cast<Eigen::Index>(idx[k])) += g.row(static_cast<Eigen::Index>(k));
                }
              },
              "gather_rows");
}

Var Tape::pick(Var a, std::span<const std::size_t> cols) {
  const auto& A = value(a);
  if (cols.size() != static_cast<std::size_t>(A.rows())) throw std::invalid_argument("pick: one column per row");
  Tensor out(A.rows(), 1);
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    if (cols[r] >= static_cast<std::size_t>(A.cols())) throw std::out_of_range("pick: column index");
    out(r, 0) = A(r, static_cast<Eigen::Index>(cols[r]));
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return push(std::move(out), {a.id},
              [a, idx](Tape& t, std::size_t self) {
                const Tensor& g = t.nodes_[self].grad;
                auto& ga = t.grad_slot(a.id);
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  ga(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx[r])) += g(static_cast<Eigen::Index>(r), 0);
                }
              },
              "pick");
}

Var Tape::sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), {a.id},
              [a](Tape& t, std::size_t self) { t.grad_slot(a.id).array() += t.nodes_[self].grad(0, 0); }, "sum");
}

Var Tape::mse(Var a, Var b) {
  require_same_shape(value(a), value(b), "mse");
  const Tensor diff = value(a) - value(b);
  const double n = static_cast<double>(diff.size());
  if (n == 0.0) throw std::invalid_argument("mse: empty input");
  Tensor out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return push(std::move(out), {a.id, b.id},
              [a, b, diff, n](Tape& t, std::size_t self) {
                const double g = t.nodes_[self].grad(0, 0);
                t.grad_slot(a.id) += diff * (2.0 * g / n);
                t.grad_slot(b.id) -= diff * (2.0 * g / n);
              },
              "mse");
}

std::vector<double> attention_weights(const Tensor& hw, const Tensor& attn, std::size_t i,
                                      std::span<const std::size_t> neighbourhood) {
  const auto d = hw.cols();
  if (attn.rows() != 2 * d || attn.cols() != 1) throw std::invalid_argument("attention vector must be 2d x 1");
  if (neighbourhood.empty()) throw std::invalid_argument("empty neighbourhood");
  const double self_score = hw.row(static_cast<Eigen::Index>(i)).dot(attn.col(0).head(d));
  std::vector<double> e(neighbourhood.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    e[k] = self_score + hw.row(static_cast<Eigen::Index>(neighbourhood[k])).dot(attn.col(0).tail(d));
  }
  const double m = *std::max_element(e.begin(), e.end());
  double z = 0.0;
  for (auto& x : e) z += (x = std::exp(x - m));
  for (auto& x : e) x /= z;
  return e;
}

Var Tape::attend(Var hw, Var attn, const std::vector<std::vector<std::size_t>>& neighbourhoods) {
  const auto& HW = value(hw);
  const auto& A = value(attn);
  const auto n = HW.rows();
  const auto d = HW.cols();
  if (static_cast<Eigen::Index>(neighbourhoods.size()) != n) {
    throw std::invalid_argument("attend: one neighbourhood per row");
  }
  auto alpha = std::make_shared<std::vector<std::vector<double>>>(neighbourhoods.size());
  Tensor out = Tensor::Zero(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& a = (*alpha)[i] = attention_weights(HW, A, static_cast<std::size_t>(i), neighbourhoods[i]);
    for (std::size_t k = 0; k < a.size(); ++k) out.row(i) += a[k] * HW.row(static_cast<Eigen::Index>(neighbourhoods[i][k]));
  }
  return push(std::move(out), {hw.id, attn.id},
              [hw, attn, alpha, neighbourhoods, d](Tape& t, std::size_t self) {
                const Tensor& G = t.nodes_[self].grad;
                const Tensor& HW = t.value(hw);
                const Tensor& A = t.value(attn);
                auto& gHW = t.grad_slot(hw.id);
                auto& gA = t.grad_slot(attn.id);
                const auto a1 = A.col(0).head(d).transpose();
                const auto a2 = A.col(0).tail(d).transpose();
                for (std::size_t i = 0; i < neighbourhoods.size(); ++i) {
                  const auto& nb = neighbourhoods[i];
                  const auto& al = (*alpha)[i];
                  const auto gi = G.row(static_cast<Eigen::Index>(i));
                  std::vector<double> dalpha(nb.size());
                  double weighted = 0.0;
                  for (std::size_t k = 0; k < nb.size(); ++k) {
                    dalpha[k] = gi.dot(HW.row(static_cast<Eigen::Index>(nb[k])));
                    weighted += al[k] * dalpha[k];
                  }
                  double de_sum = 0.0;
                  for (std::size_t k = 0; k < nb.size(); ++k) {
                    const auto j = static_cast<Eigen::Index>(nb[k]);
                    const double de = al[k] * (dalpha[k] - weighted);
                    de_sum += de;
                    gHW.row(j) += al[k] * gi + de * a2;
                    gA.col(0).tail(d) += de * HW.row(j).transpose();
                  }
                  gHW.row(static_cast<Eigen::Index>(i)) += de_sum * a1;
                  gA.col(0).head(d) += de_sum * HW.row(static_cast<Eigen::Index>(i)).transpose();
                }
              },
              "attend");
}

void Tape::backward(Var root) {
  if (nodes_.empty()) throw std::logic_error("backward on an empty tape");
  const auto& r = nodes_.at(root.id).value;
  if (r.rows() != 1 || r.cols() != 1) throw std::logic_error("backward needs a scalar root");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_slot(root.id)(0, 0) = 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (!n.grad.allFinite()) throw std::runtime_error("non-finite gradient in backward");
    if (n.backprop) n.backprop(*this, id);
    if (n.param_grad) *n.param_grad += n.grad;
  }
}

// Optimizers -----------------------------------------------------------------

void sgd_step(ParamSet& params, const SgdConfig& cfg) {
  for (auto& [_, e] : params.entries()) e.value -= cfg.lr * e.grad;
}

void Adam::step(ParamSet& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, e] : params.entries()) {
    auto [it, fresh] = moments_.try_emplace(name);
    auto& [m, v] = it->second;
    if (fresh) {
      m = Tensor::Zero(e.value.rows(), e.value.cols());
      v = Tensor::Zero(e.value.rows(), e.value.cols());
    }
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * e.grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * e.grad.cwiseProduct(e.grad);
    e.value.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  }
}

// Gradient checking ----------------------------------------------------------

Tensor finite_difference(ParamSet& params, const std::string& name, const std::function<double()>& f, double h) {
  auto& w = params.value(name);
  Tensor out(w.rows(), w.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double keep = w.data()[k];
    w.data()[k] = keep + h;
    const double up = f();
    w.data()[k] = keep - h;
    const double down = f();
    w.data()[k] = keep;
    out.data()[k] = (up - down) / (2.0 * h);
  }
  return out;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  require_same_shape(analytic, numeric, "max_relative_error");
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double a = analytic.data()[k];
    const double n = numeric.data()[k];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

// Checkpoints ----------------------------------------------------------------

nlohmann::json to_json(const ParamSet& params) {
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, e] : params.entries()) {
    tensors[name] = {{"shape", {e.value.rows(), e.value.cols()}},
                     {"values", std::vector<double>(e.value.data(), e.value.data() + e.value.size())}};
  }
  return tensors;
}

ParamSet params_from_json(const nlohmann::json& doc) {
  ParamSet out;
  for (const auto& [name, t] : doc.items()) {
    const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
    const auto values = t.at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Eigen::Index>(values.size())) {
      throw std::runtime_error("checkpoint tensor " + name + " has inconsistent shape");
    }
    Tensor v(shape[0], shape[1]);
    std::copy(values.begin(), values.end(), v.data());
    out.add(name, std::move(v));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const nlohmann::json& meta) {
  nlohmann::json doc = {{"format", kCheckpointFormat},
                        {"version", kCheckpointVersion},
                        {"meta", meta.is_null() ? nlohmann::json::object() : meta},
                        {"tensors", to_json(params)}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
}

ParamSet load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  const auto doc = nlohmann::json::parse(in);
  if (doc.value("format", "") != kCheckpointFormat) throw std::runtime_error("not a parameter checkpoint: " + path.string());
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error(fmt::format("unsupported checkpoint version {}", doc.value("version", 0)));
  }
  if (meta) *meta = doc.value("meta", nlohmann::json::object());
  return params_from_json(doc.at("tensors"));
}

}  // namespace vcsched::nn
