#pragma once

// JSON instance and solution documents.
//
// Instance document (schema_version 1):
//   {
//     "schema_version": 1,
//     "p": 2,
//     "candidates": [[...], ...],          m rows of ell numbers
//     "voters": [[...], ...],              n rows of ell numbers
//     "weights": [...],                    ell numbers on the simplex
//     "constraint": {"type": "budget", "p": 2, "B": 0.1}
//                 | {"type": "budget", "p": 1, "B": "inf"}
//                 | {"type": "interval", "intervals": [[lo, hi], ...]},
//     "stochastic": {"type": "linear", "gamma0": 0.5, "gamma": [...]}
//                 | {"type": "sigmoid", "alpha": 3},       optional
//     "metadata": {"id": "...", "labels": ["V1", ...]}     optional
//   }
//
// Solution documents carry an FNV-1a hash of the canonical instance text,
// the perturbation and the claimed objective, which is all `verify` needs.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salience/control.hpp"
#include "salience/election.hpp"
#include "salience/error.hpp"
#include "salience/stochastic.hpp"

namespace salience {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct InstanceDocument {
  ElectionInstance instance;
  AttackConstraint constraint;
  std::optional<StochasticModel> stochastic;
  std::string id;
  std::vector<std::string> labels;
};

namespace io_detail {

// 1-based line of the first occurrence of "key" in the text, or 0.
inline int line_of_key(const std::string& text, const std::string& key) {
  const std::size_t at = text.find("\"" + key + "\"");
  if (at == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
}

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

class Reader {
 public:
  explicit Reader(std::string text) : text_(std::move(text)) {}

  [[noreturn]] void fail(ErrorCode code, const std::string& key, const std::string& what) const {
    const int line = line_of_key(text_, key);
    throw Error(code, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what);
  }

  const Json& field(const Json& obj, const std::string& key) const {
    if (!obj.contains(key)) fail(ErrorCode::kSchema, key, "missing field \"" + key + "\"");
    return obj.at(key);
  }

  double number(const Json& v, const std::string& key) const {
    if (!v.is_number()) fail(ErrorCode::kSchema, key, "\"" + key + "\" must be a number");
    return v.get<double>();
  }

  Vector vector(const Json& v, const std::string& key) const {
    if (!v.is_array()) fail(ErrorCode::kSchema, key, "\"" + key + "\" must be an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], key);
    return out;
  }

  Matrix matrix(const Json& v, const std::string& key) const {
    if (!v.is_array() || v.empty()) fail(ErrorCode::kSchema, key, "\"" + key + "\" must be a nonempty array of rows");
    const Vector first = vector(v[0], key);
    Matrix out(static_cast<Eigen::Index>(v.size()), first.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
      const Vector row = vector(v[r], key);
      if (row.size() != first.size()) {
        fail(ErrorCode::kDimensionMismatch, key,
             "row " + std::to_string(r) + " of \"" + key + "\" has " + std::to_string(row.size()) +
                 " entries, expected " + std::to_string(first.size()));
      }
      out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
  }

  void only_keys(const Json& obj, std::initializer_list<const char*> keys, const std::string& where) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) fail(ErrorCode::kSchema, it.key(), "unknown field \"" + it.key() + "\" in " + where);
    }
  }

 private:
  std::string text_;
};

inline AttackConstraint read_constraint(const Reader& rd, const Json& c, int ell) {
  if (!c.is_object()) rd.fail(ErrorCode::kSchema, "constraint", "\"constraint\" must be an object");
  const Json& type = rd.field(c, "type");
  if (type == "budget") {
    rd.only_keys(c, {"type", "p", "B"}, "budget constraint");
    NormBudget nb;
    const Json& p = rd.field(c, "p");
    nb.p_norm = p == "inf" ? kInfinity : rd.number(p, "p");
    const Json& b = rd.field(c, "B");
    nb.budget = b == "inf" ? kInfinity : rd.number(b, "B");
    if (!(nb.p_norm >= 1.0)) rd.fail(ErrorCode::kSchema, "constraint", "budget norm p must be >= 1");
    if (!(nb.budget >= 0.0)) rd.fail(ErrorCode::kSchema, "B", "budget B must be >= 0");
    return nb;
  }
  if (type == "interval") {
    rd.only_keys(c, {"type", "intervals"}, "interval constraint");
    const Json& iv = rd.field(c, "intervals");
    if (!iv.is_array()) rd.fail(ErrorCode::kSchema, "intervals", "\"intervals\" must be an array of [lo, hi]");
    if (static_cast<int>(iv.size()) != ell) {
      rd.fail(ErrorCode::kDimensionMismatch, "intervals",
              "\"intervals\" has " + std::to_string(iv.size()) + " entries, expected " + std::to_string(ell));
    }
    IntervalBox box;
    for (std::size_t k = 0; k < iv.size(); ++k) {
      const Vector pair = rd.vector(iv[k], "intervals");
      if (pair.size() != 2) rd.fail(ErrorCode::kSchema, "intervals", "interval " + std::to_string(k) + " must be [lo, hi]");
      if (!(pair[0] >= 0.0 && pair[0] <= pair[1] && pair[1] <= 1.0)) {
        rd.fail(ErrorCode::kSchema, "intervals", "interval " + std::to_string(k) + " is not 0 <= lo <= hi <= 1");
      }
      box.intervals.emplace_back(pair[0], pair[1]);
    }
    return box;
  }
  rd.fail(ErrorCode::kSchema, "type", "constraint type must be \"budget\" or \"interval\"");
}

inline StochasticModel read_model(const Reader& rd, const Json& s, int m) {
  if (!s.is_object()) rd.fail(ErrorCode::kSchema, "stochastic", "\"stochastic\" must be an object");
  const Json& type = rd.field(s, "type");
  if (type == "linear") {
    rd.only_keys(s, {"type", "gamma0", "gamma"}, "linear model");
    LinearModel lin{rd.number(rd.field(s, "gamma0"), "gamma0"), rd.vector(rd.field(s, "gamma"), "gamma")};
    if (lin.gamma.size() != m - 1) {
      rd.fail(ErrorCode::kDimensionMismatch, "gamma", "\"gamma\" needs one entry per rival (" + std::to_string(m - 1) + ")");
    }
    return lin;
  }
  if (type == "sigmoid") {
    rd.only_keys(s, {"type", "alpha"}, "sigmoid model");
    SigmoidModel sig{rd.number(rd.field(s, "alpha"), "alpha")};
    if (!(sig.alpha > 0.0)) rd.fail(ErrorCode::kSchema, "alpha", "sigmoid alpha must be > 0");
    if (m != 2) rd.fail(ErrorCode::kSchema, "stochastic", "sigmoid model needs exactly two candidates");
    return sig;
  }
  rd.fail(ErrorCode::kSchema, "type", "stochastic type must be \"linear\" or \"sigmoid\"");
}

inline Json number_or_inf(double v) { return std::isinf(v) ? Json("inf") : Json(v); }

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

}  // namespace io_detail

inline Json constraint_to_json(const AttackConstraint& constraint) {
  if (const auto* nb = std::get_if<NormBudget>(&constraint)) {
    return Json{{"type", "budget"}, {"p", io_detail::number_or_inf(nb->p_norm)}, {"B", io_detail::number_or_inf(nb->budget)}};
  }
  Json iv = Json::array();
  for (const auto& [lo, hi] : std::get<IntervalBox>(constraint).intervals) iv.push_back(Json::array({lo, hi}));
  return Json{{"type", "interval"}, {"intervals", iv}};
}

inline Json model_to_json(const StochasticModel& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    return Json{{"type", "linear"}, {"gamma0", lin->gamma0}, {"gamma", io_detail::to_json(lin->gamma)}};
  }
  return Json{{"type", "sigmoid"}, {"alpha", std::get<SigmoidModel>(model).alpha}};
}

/// Parses and validates an instance document. Errors carry the line of the
/// offending field.
inline InstanceDocument parse_instance(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(io_detail::line_of_offset(text, e.byte)) + ": " + e.what());
  }
  const io_detail::Reader rd(text);
  if (!doc.is_object()) throw Error(ErrorCode::kSchema, "line 1: instance document must be an object");
  rd.only_keys(doc, {"schema_version", "p", "candidates", "voters", "weights", "constraint", "stochastic", "metadata"},
               "instance");
  const Json& version = rd.field(doc, "schema_version");
  if (version != kSchemaVersion) {
    rd.fail(ErrorCode::kSchema, "schema_version", "unsupported schema_version, expected " + std::to_string(kSchemaVersion));
  }
  const double p = rd.number(rd.field(doc, "p"), "p");
  const Matrix candidates = rd.matrix(rd.field(doc, "candidates"), "candidates");
  const Matrix voters = rd.matrix(rd.field(doc, "voters"), "voters");
  const Vector weights = rd.vector(rd.field(doc, "weights"), "weights");
  if (voters.cols() != candidates.cols()) {
    rd.fail(ErrorCode::kDimensionMismatch, "voters", "voters and candidates disagree on the number of issues");
  }
  if (weights.size() != candidates.cols()) {
    rd.fail(ErrorCode::kDimensionMismatch, "weights",
            "\"weights\" has " + std::to_string(weights.size()) + " entries, expected " + std::to_string(candidates.cols()));
  }
  if (candidates.rows() < 2) rd.fail(ErrorCode::kSchema, "candidates", "need at least two candidates");
  if (!(p >= 1.0)) rd.fail(ErrorCode::kSchema, "p", "distance exponent p must be >= 1");
  try {
    check_simplex(weights, candidates.cols());
  } catch (const Error& e) {
    rd.fail(e.code(), "weights", e.what());
  }
  std::optional<ElectionInstance> inst;
  try {
    inst.emplace(candidates, voters, weights, p);
  } catch (const Error& e) {
    rd.fail(ErrorCode::kSchema, "p", e.what());
  }
  const int ell = inst->num_issues();
  AttackConstraint constraint = io_detail::read_constraint(rd, rd.field(doc, "constraint"), ell);
  std::optional<StochasticModel> model;
  if (doc.contains("stochastic")) model = io_detail::read_model(rd, doc.at("stochastic"), inst->num_candidates());

  std::string id;
  std::vector<std::string> labels;
  if (doc.contains("metadata")) {
    const Json& meta = doc.at("metadata");
    if (!meta.is_object()) rd.fail(ErrorCode::kSchema, "metadata", "\"metadata\" must be an object");
    rd.only_keys(meta, {"id", "labels"}, "metadata");
    if (meta.contains("id")) {
      if (!meta.at("id").is_string()) rd.fail(ErrorCode::kSchema, "id", "\"id\" must be a string");
      id = meta.at("id").get<std::string>();
    }
    if (meta.contains("labels")) {
      const Json& l = meta.at("labels");
      if (!l.is_array() || static_cast<int>(l.size()) != inst->num_voters()) {
        rd.fail(ErrorCode::kDimensionMismatch, "labels", "\"labels\" needs one string per voter");
      }
      for (const Json& s : l) {
        if (!s.is_string()) rd.fail(ErrorCode::kSchema, "labels", "labels must be strings");
        labels.push_back(s.get<std::string>());
      }
    }
  }
  return InstanceDocument{std::move(*inst), std::move(constraint), std::move(model), std::move(id), std::move(labels)};
}

/// Model part of a document (no metadata); also the input of instance_hash.
inline Json instance_model_json(const InstanceDocument& d) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["p"] = d.instance.p();
  doc["candidates"] = io_detail::to_json(d.instance.candidates());
  doc["voters"] = io_detail::to_json(d.instance.voters());
  doc["weights"] = io_detail::to_json(d.instance.weights());
  doc["constraint"] = constraint_to_json(d.constraint);
  if (d.stochastic) doc["stochastic"] = model_to_json(*d.stochastic);
  return doc;
}

inline Json instance_to_json(const InstanceDocument& d) {
  Json doc = instance_model_json(d);
  if (!d.id.empty() || !d.labels.empty()) {
    Json meta = Json::object();
    if (!d.id.empty()) meta["id"] = d.id;
    if (!d.labels.empty()) meta["labels"] = d.labels;
    doc["metadata"] = meta;
  }
  return doc;
}

inline std::string serialize_instance(const InstanceDocument& d) { return instance_to_json(d).dump(2) + "\n"; }

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical model text, as 16 hex digits.
inline std::string instance_hash(const InstanceDocument& d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(instance_model_json(d).dump())));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline InstanceDocument load_instance(const std::string& path) {
  try {
    return parse_instance(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
  }
}

// ---------------------------------------------------------------------------
// Solutions

enum class SolutionKind { kMaxSupport, kMajority, kStochastic };

inline const char* to_string(SolutionKind k) {
  switch (k) {
    case SolutionKind::kMaxSupport: return "max-support";
    case SolutionKind::kMajority: return "majority";
    case SolutionKind::kStochastic: return "stochastic";
  }
  return "unknown";
}

/// Objective reported for a solution: votes for candidate 0, 1/0 for a
/// plurality win, or expected votes.
inline double claimed_objective(SolutionKind kind, const AttackSolution& s) {
  switch (kind) {
    case SolutionKind::kMaxSupport: return s.votes_for_c1;
    case SolutionKind::kMajority: return s.winner == 0 ? 1.0 : 0.0;
    case SolutionKind::kStochastic: return s.expected_votes;
  }
  return 0.0;
}

inline Json solution_to_json(const InstanceDocument& d, SolutionKind kind, const AttackSolution& s) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = to_string(kind);
  out["instance_hash"] = instance_hash(d);
  out["constraint"] = constraint_to_json(d.constraint);
  if (kind == SolutionKind::kStochastic && d.stochastic) out["stochastic"] = model_to_json(*d.stochastic);
  out["verdict"] = to_string(s.verdict);
  out["epsilon"] = s.eps_used;
  out["x"] = io_detail::to_json(s.x);
  out["objective"] = claimed_objective(kind, s);
  out["votes_for_c1"] = s.votes_for_c1;
  out["winner"] = s.winner;
  out["norm_used"] = s.norm_used;
  out["constraint_slack"] = io_detail::number_or_inf(constraint_slack(d.constraint, d.instance.weights(), s.x));
  if (!s.demographic.empty()) out["demographic"] = s.demographic;
  if (!s.assignment.empty()) out["assignment"] = s.assignment;
  out["programs_solved"] = s.programs_solved;
  return out;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;

  void fail(const std::string& what) {
    ok = false;
    problems.push_back(what);
  }
};

/// Re-certifies a solution document against an instance: hash, simplex,
/// constraint slack within epsilon, and the claimed objective by re-tally
/// or re-evaluation.
inline VerifyReport verify_solution(const InstanceDocument& d, const Json& sol) {
  VerifyReport r;
  auto need = [&](const char* key) {
    if (!sol.contains(key)) throw Error(ErrorCode::kSchema, std::string("solution is missing \"") + key + "\"");
    return sol.at(key);
  };
  if (need("schema_version") != kSchemaVersion) throw Error(ErrorCode::kSchema, "unsupported solution schema_version");
  const std::string kind = need("kind").get<std::string>();
  if (need("instance_hash") != instance_hash(d)) r.fail("instance hash does not match");

  const io_detail::Reader rd{std::string()};
  const Vector x = rd.vector(need("x"), "x");
  const int ell = d.instance.num_issues();
  if (x.size() != ell) {
    r.fail("x has " + std::to_string(x.size()) + " entries, expected " + std::to_string(ell));
    return r;
  }
  const Vector wp = d.instance.weights() + x;
  try {
    check_simplex(wp, ell);
  } catch (const Error& e) {
    r.fail(std::string("w + x leaves the simplex: ") + e.what());
    return r;
  }
  const double eps = need("epsilon").get<double>();
  const double slack = constraint_slack(d.constraint, d.instance.weights(), x);
  if (slack < -eps) r.fail("constraint violated by " + std::to_string(-slack));

  const double objective = need("objective").get<double>();
  const std::string verdict = need("verdict").get<std::string>();
  const Tally t = deterministic_tally(d.instance, wp);
  const int winner = plurality_outcome(t);
  if (kind == "max-support") {
    if (objective != t.votes[0]) r.fail("claimed " + std::to_string(objective) + " votes, re-tally gives " + std::to_string(t.votes[0]));
  } else if (kind == "majority") {
    const double won = winner == 0 ? 1.0 : 0.0;
    if (objective != won) r.fail("claimed objective " + std::to_string(objective) + ", re-tally winner is " + std::to_string(winner));
    if (verdict != "no_win" && winner != 0) r.fail("verdict claims a win but candidate " + std::to_string(winner) + " wins");
  } else if (kind == "stochastic") {
    if (!d.stochastic) throw Error(ErrorCode::kSchema, "stochastic solution needs an instance with a stochastic model");
    const double ev = expected_votes(d.instance, wp, *d.stochastic).value;
    if (std::abs(ev - objective) > 1e-9 * std::max(1.0, std::abs(ev))) {
      r.fail("claimed expected votes " + std::to_string(objective) + ", re-evaluation gives " + std::to_string(ev));
    }
  } else {
    throw Error(ErrorCode::kSchema, "unknown solution kind \"" + kind + "\"");
  }
  return r;
}

}  // namespace salience
