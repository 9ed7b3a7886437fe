#include "surm/serialize.hpp"

#include <stdexcept>

namespace surm {

using nlohmann::json;

namespace {

void append(json& arr, const std::vector<double>& v) {
  for (double x : v) arr.push_back(x);
}

std::vector<double> slice(const std::vector<double>& v, std::size_t begin, std::size_t len) {
  return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(begin + len)};
}

std::vector<std::size_t> read_shape(const json& j, std::size_t arity) {
  if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != arity) {
    throw std::invalid_argument("structured matrix: \"shape\" must be an array of " + std::to_string(arity) +
                                " counts");
  }
  std::vector<std::size_t> shape;
  for (const auto& s : j["shape"]) {
    if (!s.is_number_unsigned()) throw std::invalid_argument("structured matrix: shape entries must be counts");
    shape.push_back(s.get<std::size_t>());
  }
  return shape;
}

void expect_params(const std::vector<double>& p, std::size_t want, const std::string& kind) {
  if (p.size() != want) {
    throw std::invalid_argument(kind + ": expected " + std::to_string(want) + " params, got " +
                                std::to_string(p.size()));
  }
}

}  // namespace

json matrix_to_json(const DenseMatrix& m) {
  json j = {{"kind", "dense"}, {"shape", {m.rows(), m.cols()}}, {"params", json::array()}};
  append(j["params"], m.data());
  return j;
}

json to_json(const Structured& s) {
  struct Visitor {
    json operator()(const Circulant& c) const {
      json j = {{"kind", "circulant"}, {"params", json::array()}};
      append(j["params"], c.c());
      return j;
    }
    json operator()(const SymToeplitz& t) const {
      json j = {{"kind", "sym_toeplitz"}, {"params", json::array()}};
      append(j["params"], t.d());
      return j;
    }
    json operator()(const Toeplitz& t) const {
      json j = {{"kind", "toeplitz"}, {"params", json::array()}};
      append(j["params"], t.col());
      append(j["params"], slice(t.row(), 1, t.n() - 1));
      return j;
    }
    json operator()(const Kronecker& k) const {
      json j = {{"kind", "kronecker"},
                {"shape", {k.a().rows(), k.a().cols(), k.b().rows(), k.b().cols()}},
                {"params", json::array()}};
      append(j["params"], k.a().data());
      append(j["params"], k.b().data());
      return j;
    }
    json operator()(const LowRank& l) const {
      json j = {{"kind", "low_rank"},
                {"shape", {l.g().rows(), l.h().rows(), l.g().cols()}},
                {"params", json::array()}};
      append(j["params"], l.g().data());
      append(j["params"], l.h().data());
      return j;
    }
    json operator()(const LdrGH& l) const {
      json j = {{"kind", "ldr"}, {"shape", {l.n(), l.r()}}, {"params", json::array()}};
      append(j["params"], l.g().data());
      append(j["params"], l.h().data());
      return j;
    }
    json operator()(const DenseMatrix& m) const { return matrix_to_json(m); }
  };
  return std::visit(Visitor{}, s);
}

Structured structured_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::invalid_argument("structured matrix: missing string field \"kind\"");
  }
  if (!j.contains("params") || !j["params"].is_array()) {
    throw std::invalid_argument("structured matrix: missing array field \"params\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  std::vector<double> p;
  for (const auto& v : j["params"]) {
    if (!v.is_number()) throw std::invalid_argument(kind + ": params must be numbers");
    p.push_back(v.get<double>());
  }

  if (kind == "circulant") return Circulant(p);
  if (kind == "sym_toeplitz") return SymToeplitz(p);
  if (kind == "toeplitz") {
    if (p.empty() || p.size() % 2 == 0) throw std::invalid_argument("toeplitz: params must have length 2n - 1");
    const std::size_t n = (p.size() + 1) / 2;
    RealVec col = slice(p, 0, n);
    RealVec row(n);
    row[0] = col[0];
    for (std::size_t k = 1; k < n; ++k) row[k] = p[n + k - 1];
    return Toeplitz(std::move(col), std::move(row));
  }
  if (kind == "kronecker") {
    const auto s = read_shape(j, 4);
    expect_params(p, s[0] * s[1] + s[2] * s[3], kind);
    return Kronecker(DenseMatrix(s[0], s[1], slice(p, 0, s[0] * s[1])),
                     DenseMatrix(s[2], s[3], slice(p, s[0] * s[1], s[2] * s[3])));
  }
  if (kind == "low_rank") {
    const auto s = read_shape(j, 3);
    expect_params(p, (s[0] + s[1]) * s[2], kind);
    return LowRank(DenseMatrix(s[0], s[2], slice(p, 0, s[0] * s[2])),
                   DenseMatrix(s[1], s[2], slice(p, s[0] * s[2], s[1] * s[2])));
  }
  if (kind == "ldr") {
    const auto s = read_shape(j, 2);
    expect_params(p, 2 * s[0] * s[1], kind);
    return LdrGH(DenseMatrix(s[0], s[1], slice(p, 0, s[0] * s[1])),
                 DenseMatrix(s[0], s[1], slice(p, s[0] * s[1], s[0] * s[1])));
  }
  if (kind == "dense") {
    const auto s = read_shape(j, 2);
    expect_params(p, s[0] * s[1], kind);
    return DenseMatrix(s[0], s[1], std::move(p));
  }
  throw std::invalid_argument("structured matrix: unknown kind \"" + kind + "\"");
}

}  // namespace surm
