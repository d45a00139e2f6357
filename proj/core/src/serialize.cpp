#include "qadp/serialize.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qadp {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* what) {
  if (!j.is_object())
    throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known)
      throw std::invalid_argument("unknown key \"" + item.key() + "\" in " +
                                  what);
  }
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
}

Eigen::VectorXd to_vector(const json& j, const char* what) {
  if (!j.is_array())
    throw std::invalid_argument(std::string(what) + " must be an array");
  Eigen::VectorXd v(j.size());
  Eigen::Index i = 0;
  for (const json& x : j) {
    if (!x.is_number())
      throw std::invalid_argument(std::string(what) + " must hold numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string(what) +
                                " must be an array of rows");
  const Eigen::Index rows = j.size();
  Eigen::MatrixXd m;
  Eigen::Index r = 0;
  for (const json& row : j) {
    const Eigen::VectorXd v = to_vector(row, what);
    if (r == 0) m.resize(rows, v.size());
    if (v.size() != m.cols())
      throw std::invalid_argument(std::string(what) + " rows differ in length");
    m.row(r++) = v.transpose();
  }
  return m;
}

double get_num(const json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number())
    throw std::invalid_argument(std::string(key) + " must be a number");
  return p[key].get<double>();
}

Eigen::Index get_index(const json& p, const char* key, Eigen::Index fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number_integer())
    throw std::invalid_argument(std::string(key) + " must be an integer");
  return p[key].get<Eigen::Index>();
}

BenchmarkProblem load_box_lqr(const json& p, std::uint64_t seed) {
  require_keys(p, {"n", "m", "u_max", "noise_var", "q_scale", "r_scale"},
               "box_lqr params");
  BoxLqrParams params;
  params.n = get_index(p, "n", params.n);
  params.m = get_index(p, "m", params.m);
  params.u_max = get_num(p, "u_max", params.u_max);
  params.noise_var = get_num(p, "noise_var", params.noise_var);
  params.q_scale = get_num(p, "q_scale", params.q_scale);
  params.r_scale = get_num(p, "r_scale", params.r_scale);
  return make_box_lqr(params, seed);
}

BenchmarkProblem load_commitments(const json& p, std::uint64_t seed) {
  require_keys(p,
               {"classes", "lambda", "u_max", "return_mean", "return_sd",
                "return_corr", "alpha_call", "beta_call", "alpha_dist",
                "beta_dist", "target_lo", "target_hi", "moments_count"},
               "commitments params");
  CommitmentsParams params;
  params.classes = get_index(p, "classes", params.classes);
  params.lambda = get_num(p, "lambda", params.lambda);
  params.u_max = get_num(p, "u_max", params.u_max);
  if (p.contains("return_mean"))
    params.return_mean = to_vector(p["return_mean"], "return_mean");
  if (p.contains("return_sd"))
    params.return_sd = to_vector(p["return_sd"], "return_sd");
  if (p.contains("return_corr"))
    params.return_corr = to_matrix(p["return_corr"], "return_corr");
  params.alpha_call = get_num(p, "alpha_call", params.alpha_call);
  if (p.contains("beta_call"))
    params.beta_call = to_vector(p["beta_call"], "beta_call");
  params.alpha_dist = get_num(p, "alpha_dist", params.alpha_dist);
  if (p.contains("beta_dist"))
    params.beta_dist = to_vector(p["beta_dist"], "beta_dist");
  params.target_lo = get_num(p, "target_lo", params.target_lo);
  params.target_hi = get_num(p, "target_hi", params.target_hi);
  params.moments_count = get_index(p, "moments_count", params.moments_count);
  return make_commitments(params, seed);
}

BenchmarkProblem load_supply_chain(const json& p, std::uint64_t seed) {
  require_keys(p,
               {"h_max", "u_max", "alpha", "beta", "tau", "r", "mu_p", "mu_d",
                "log_var", "moments_count"},
               "supply_chain params");
  SupplyChainParams params;
  params.h_max = get_num(p, "h_max", params.h_max);
  params.u_max = get_num(p, "u_max", params.u_max);
  params.alpha = get_num(p, "alpha", params.alpha);
  params.beta = get_num(p, "beta", params.beta);
  params.tau = get_num(p, "tau", params.tau);
  params.r = get_num(p, "r", params.r);
  for (const char* key : {"mu_p", "mu_d"}) {
    if (!p.contains(key)) continue;
    const Eigen::VectorXd v = to_vector(p[key], key);
    if (v.size() != 2)
      throw std::invalid_argument(std::string(key) + " must have two entries");
    (std::string(key) == "mu_p" ? params.mu_p : params.mu_d) = v;
  }
  params.log_var = get_num(p, "log_var", params.log_var);
  params.moments_count = get_index(p, "moments_count", params.moments_count);
  return make_supply_chain(params, seed);
}

}  // namespace

std::string value_function_to_json(const QuadraticFunction& v) {
  const Eigen::Index n = v.n();
  json j;
  j["n"] = n;
  std::vector<double> flat(static_cast<size_t>(n) * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) flat[i * n + k] = v.P()(i, k);
  j["P"] = flat;
  j["p"] = std::vector<double>(v.p().data(), v.p().data() + n);
  j["pi"] = v.pi();
  return j.dump();
}

QuadraticFunction value_function_from_json(const std::string& text) {
  const json j = parse(text);
  require_keys(j, {"n", "P", "p", "pi"}, "value function");
  for (const char* key : {"n", "P", "p", "pi"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("value function lacks \"") +
                                  key + "\"");
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 0)
    throw std::invalid_argument("n must be a nonnegative integer");
  const Eigen::Index n = j["n"].get<Eigen::Index>();
  const Eigen::VectorXd flat = to_vector(j["P"], "P");
  if (flat.size() != n * n)
    throw std::invalid_argument("P must hold n*n row-major entries");
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) P(i, k) = flat[i * n + k];
  const Eigen::VectorXd p = to_vector(j["p"], "p");
  if (p.size() != n) throw std::invalid_argument("p must hold n entries");
  if (!j["pi"].is_number())
    throw std::invalid_argument("pi must be a number");
  return QuadraticFunction(P, p, j["pi"].get<double>());
}

void write_value_function(const std::string& path,
                          const QuadraticFunction& v) {
  write_text_file(path, value_function_to_json(v) + "\n");
}

QuadraticFunction read_value_function(const std::string& path) {
  return value_function_from_json(read_text_file(path));
}

std::string history_to_csv(const IterationHistory& history) {
  std::ostringstream out;
  out << "iteration,policy_evals,avg_cost,avg_cost_stderr,fit_residual\n";
  for (const IterationRecord& r : history.records)
    out << r.iteration << ',' << r.policy_evals << ',' << fmt(r.avg_cost)
        << ',' << fmt(r.avg_cost_stderr) << ',' << fmt(r.fit_residual)
        << '\n';
  return out.str();
}

void write_history_csv(const std::string& path,
                       const IterationHistory& history) {
  write_text_file(path, history_to_csv(history));
}

BenchmarkProblem load_problem_json(const std::string& text) {
  const json j = parse(text);
  require_keys(j, {"type", "seed", "params"}, "problem");
  if (!j.contains("type") || !j["type"].is_string())
    throw std::invalid_argument("problem needs a string \"type\"");
  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned())
      throw std::invalid_argument("seed must be a nonnegative integer");
    seed = j["seed"].get<std::uint64_t>();
  }
  const json params = j.contains("params") ? j["params"] : json::object();
  const std::string type = j["type"].get<std::string>();
  if (type == "box_lqr") return load_box_lqr(params, seed);
  if (type == "commitments") return load_commitments(params, seed);
  if (type == "supply_chain") return load_supply_chain(params, seed);
  throw std::invalid_argument("unknown problem type \"" + type + "\"");
}

BenchmarkProblem load_problem_file(const std::string& path) {
  return load_problem_json(read_text_file(path));
}

std::string builtin_problem_json(const std::string& name,
                                 std::uint64_t seed) {
  json j;
  if (name == "box-lqr")
    j["type"] = "box_lqr";
  else if (name == "commitments")
    j["type"] = "commitments";
  else if (name == "supply-chain")
    j["type"] = "supply_chain";
  else
    throw std::invalid_argument("unknown problem \"" + name + "\"");
  j["seed"] = seed;
  j["params"] = json::object();
  return j.dump();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace qadp
