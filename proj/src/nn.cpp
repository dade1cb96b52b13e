#include "pimpc/nn.hpp"

#include <fstream>

#include <json.hpp>

#include "pimpc/errors.hpp"

namespace pimpc {

Tensor ParamRegistry::create(const std::string& name, Shape shape,
                             bool requires_grad) {
  if (has(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  Tensor t = Tensor::zeros(shape, requires_grad);
  items_.emplace_back(name, t);
  return t;
}

bool ParamRegistry::has(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return true;
  }
  return false;
}

Tensor ParamRegistry::get(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ConfigError("unknown parameter: " + name);
}

std::size_t ParamRegistry::total_parameters() const {
  std::size_t total = 0;
  for (const auto& [n, t] : items_) total += t.size();
  return total;
}

void ParamRegistry::zero_grad() {
  for (auto& [n, t] : items_) t.zero_grad();
}

std::vector<std::vector<double>> ParamRegistry::snapshot() const {
  std::vector<std::vector<double>> snap;
  snap.reserve(items_.size());
  for (const auto& [n, t] : items_) snap.push_back(t.values());
  return snap;
}

void ParamRegistry::restore(const std::vector<std::vector<double>>& snap) {
  if (snap.size() != items_.size()) {
    throw ConfigError("snapshot size does not match registry");
  }
  for (std::size_t i = 0; i < snap.size(); ++i) {
    items_[i].second.values() = snap[i];
  }
}

void ParamRegistry::save(const std::string& path) const {
  nlohmann::json doc;
  doc["format"] = "pimpc-checkpoint";
  doc["version"] = 1;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, t] : items_) {
    params.push_back({{"name", name},
                      {"rows", t.rows()},
                      {"cols", t.cols()},
                      {"values", t.values()}});
  }
  doc["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << doc.dump(1) << "\n";
}

void ParamRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "pimpc-checkpoint" ||
      doc.value("version", 0) != 1) {
    throw DataError("unsupported checkpoint header in " + path);
  }
  for (const auto& entry : doc.at("params")) {
    const std::string name = entry.at("name");
    const Shape shape{entry.at("rows").get<std::size_t>(),
                      entry.at("cols").get<std::size_t>()};
    std::vector<double> values = entry.at("values").get<std::vector<double>>();
    if (values.size() != shape.numel()) {
      throw DataError("checkpoint value count mismatch for " + name);
    }
    if (has(name)) {
      Tensor t = get(name);
      if (!(t.shape() == shape)) {
        throw DataError("checkpoint shape mismatch for " + name + ": " +
                        shape.str() + " vs " + t.shape().str());
      }
      t.values() = std::move(values);
    } else {
      Tensor t = create(name, shape);
      t.values() = std::move(values);
    }
  }
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void glorot_init(ParamRegistry& registry, Rng& rng) {
  for (auto& [name, t] : registry.items()) {
    if (ends_with(name, ".weight")) {
      const double a =
          std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (double& v : t.values()) v = rng.uniform(-a, a);
    } else if (ends_with(name, ".ln_gain")) {
      for (double& v : t.values()) v = 1.0;
    } else {
      // Biases, layer-norm shifts, base logits, and other scalars start
      // at zero.
      for (double& v : t.values()) v = 0.0;
    }
  }
}

Linear::Linear(ParamRegistry& reg, const std::string& name, std::size_t in,
               std::size_t out) {
  weight = reg.create(name + ".weight", {in, out});
  bias = reg.create(name + ".bias", {1, out});
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
  return tape.add_rowvec(tape.matmul(x, weight), bias);
}

MlpHead::MlpHead(ParamRegistry& reg, const std::string& name, std::size_t in,
                 std::size_t hidden, std::size_t out, Output activation)
    : first(reg, name + ".l1", in, hidden),
      second(reg, name + ".l2", hidden, out),
      output(activation) {}

Tensor MlpHead::forward(Tape& tape, const Tensor& x) const {
  Tensor h = tape.gelu(first.forward(tape, x));
  Tensor y = second.forward(tape, h);
  switch (output) {
    case Output::Identity:
      return y;
    case Output::Softplus:
      return tape.softplus(y);
    case Output::Tanh:
      return tape.tanh(y);
    case Output::Sigmoid:
      return tape.sigmoid(y);
  }
  return y;
}

PhaseProjection::PhaseProjection(ParamRegistry& reg, const std::string& name,
                                 std::size_t in, std::size_t out)
    : lin(reg, name, in, out) {
  ln_gain = reg.create(name + ".ln_gain", {1, out});
  ln_bias = reg.create(name + ".ln_bias", {1, out});
}

Tensor PhaseProjection::forward(Tape& tape, const Tensor& x, double dropout_p,
                                bool training, Rng& rng) const {
  Tensor pre = lin.forward(tape, x);
  Tensor normed = tape.layer_norm(pre, ln_gain, ln_bias);
  Tensor activated = tape.gelu(normed);
  return tape.dropout(activated, dropout_p, training, rng);
}

}  // namespace pimpc
