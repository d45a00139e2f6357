#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>

#include "qadp/serialize.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace qadp;

namespace {

QuadraticFunction awkward_quadratic() {
  MatrixXd P(2, 2);
  P << 0.1 + 0.2, 1e-17, 1e-17, 1.0 / 3.0;
  VectorXd p(2);
  p << -2.5000000000000004, 7.1;
  return QuadraticFunction(P, p, 0.01);
}

std::string temp_path(const std::string& stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("value function JSON round-trips bitwise") {
  const QuadraticFunction v = awkward_quadratic();
  const std::string text = value_function_to_json(v);
  const QuadraticFunction back = value_function_from_json(text);

  CHECK(back.n() == 2);
  CHECK((back.P() - v.P()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.p() - v.p()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.pi() == v.pi());

  // serialization is deterministic
  CHECK(value_function_to_json(back) == text);
}

TEST_CASE("value function JSON spells out its schema") {
  const std::string text =
      R"({"P":[2.0,0.0,0.0,2.0],"n":2,"p":[1.0,-1.0],"pi":3.5})";
  const QuadraticFunction v = value_function_from_json(text);
  CHECK(v.P()(0, 0) == 2.0);
  CHECK(v.P()(0, 1) == 0.0);
  CHECK(v.p()[1] == -1.0);
  CHECK(v.pi() == 3.5);

  // row-major order of P
  const std::string asym =
      R"({"P":[1.0,0.5,0.5,1.0],"n":2,"p":[0.0,0.0],"pi":0.0})";
  CHECK(value_function_from_json(asym).P()(0, 1) == 0.5);
}

TEST_CASE("malformed value function JSON is rejected") {
  CHECK_THROWS_AS(value_function_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(value_function_from_json("[1,2,3]"), std::invalid_argument);
  CHECK_THROWS_AS(
      value_function_from_json(R"({"P":[1.0],"n":2,"p":[0.0,0.0],"pi":0.0})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      value_function_from_json(R"({"P":[1.0,0,0,1.0],"n":2,"p":[0.0],"pi":0.0})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      value_function_from_json(R"({"n":2,"p":[0.0,0.0],"pi":0.0})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      value_function_from_json(
          R"({"P":[1.0,0,0,1.0],"n":2,"p":[0.0,0.0],"pi":0.0,"extra":1})"),
      std::invalid_argument);
  // constructor-level validation still applies
  CHECK_THROWS_AS(
      value_function_from_json(
          R"({"P":[-1.0,0,0,1.0],"n":2,"p":[0.0,0.0],"pi":0.0})"),
      std::invalid_argument);
}

TEST_CASE("history CSV pins its column set and number format") {
  const QuadraticFunction v = QuadraticFunction::zero(1);
  IterationHistory h;
  h.records.push_back(
      {0, 0, 31.5, 0.25, std::numeric_limits<double>::quiet_NaN(), v});
  h.records.push_back({1, 20, 1.0 / 3.0, 0.01, 1e-17, v});

  CHECK(history_to_csv(h) ==
        "iteration,policy_evals,avg_cost,avg_cost_stderr,fit_residual\n"
        "0,0,31.5,0.25,nan\n"
        "1,20,0.33333333333333331,0.01,1.0000000000000001e-17\n");
}

TEST_CASE("problem JSON loads builtins and applies overrides") {
  const BenchmarkProblem direct = make_box_lqr(BoxLqrParams{.n = 4, .m = 2}, 3);
  const BenchmarkProblem loaded = load_problem_json(
      R"({"type":"box_lqr","seed":3,"params":{"n":4,"m":2}})");
  CHECK(loaded.problem.n == 4);
  CHECK(loaded.problem.m == 2);
  CHECK(loaded.problem.name == "box-lqr");
  CHECK((loaded.problem.dynamics.moments.Abar() -
         direct.problem.dynamics.moments.Abar())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((loaded.initial_value.P() - direct.initial_value.P())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const BenchmarkProblem tweaked = load_problem_json(
      R"({"type":"box_lqr","seed":3,"params":{"n":4,"m":2,"u_max":0.9}})");
  const VectorXd ok = VectorXd::Constant(2, 0.85);
  const VectorXd x = VectorXd::Zero(4);
  CHECK(tweaked.problem.cost.eval(x, ok).has_value());
  CHECK(!direct.problem.cost.eval(x, ok).has_value());
}

TEST_CASE("builtin problem text matches the generator output") {
  const std::string text = builtin_problem_json("box-lqr", 7);
  const BenchmarkProblem loaded = load_problem_json(text);
  const BenchmarkProblem direct = make_box_lqr(BoxLqrParams{}, 7);
  CHECK(loaded.problem.n == 12);
  CHECK((loaded.problem.dynamics.moments.Abar() -
         direct.problem.dynamics.moments.Abar())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  CHECK_THROWS_AS(builtin_problem_json("pendulum", 1), std::invalid_argument);

  // the other two builtins parse and carry their stated shapes
  const BenchmarkProblem sc =
      load_problem_json(builtin_problem_json("supply-chain", 1));
  CHECK(sc.problem.n == 8);
  CHECK(sc.problem.cost.exogenous_states().size() == 4);
}

TEST_CASE("problem JSON validates type, seed, and parameter keys") {
  CHECK_THROWS_AS(load_problem_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(load_problem_json(R"({"type":"rocket"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_problem_json(R"({"type":"box_lqr","seed":-1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      load_problem_json(R"({"type":"box_lqr","params":{"nn":3}})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      load_problem_json(R"({"type":"box_lqr","horizon":5})"),
      std::invalid_argument);
  CHECK_THROWS_AS(load_problem_json(R"({"type":"box_lqr","seed":"x"})"),
                  std::invalid_argument);

  // missing seed defaults to zero
  const BenchmarkProblem a = load_problem_json(R"({"type":"box_lqr"})");
  const BenchmarkProblem b = make_box_lqr(BoxLqrParams{}, 0);
  CHECK((a.problem.dynamics.moments.Abar() -
         b.problem.dynamics.moments.Abar())
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("commitments and supply chain params are overridable") {
  const BenchmarkProblem c = load_problem_json(R"({
    "type": "commitments", "seed": 5,
    "params": {"classes": 2,
               "return_mean": [1.0, 1.05], "return_sd": [0.1, 0.1],
               "return_corr": [[1.0, 0.2], [0.2, 1.0]],
               "beta_call": [10.0, 11.0], "beta_dist": [13.0, 12.0],
               "moments_count": 400}})");
  CHECK(c.problem.n == 4);
  CHECK(c.problem.m == 2);
  CHECK(c.problem.name == "commitments");

  const BenchmarkProblem s = load_problem_json(R"({
    "type": "supply_chain", "seed": 2,
    "params": {"mu_p": [0.2, 0.3], "moments_count": 300}})");
  CHECK(s.problem.n == 8);
  const double p1 = s.problem.dynamics.moments.cbar()[4];
  CHECK(p1 == doctest::Approx(std::exp(0.2 + 0.2)).epsilon(0.1));

  CHECK_THROWS_AS(load_problem_json(R"({
    "type": "supply_chain", "params": {"mu_p": [0.2]}})"),
                  std::invalid_argument);
}

TEST_CASE("text files round-trip through the filesystem") {
  const std::string path = temp_path("qadp_serialize_probe.txt");
  const std::string body = "line one\nline two\n";
  write_text_file(path, body);
  CHECK(read_text_file(path) == body);
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_text_file(temp_path("qadp_missing_file.txt")),
                  std::runtime_error);
}

TEST_CASE("value functions survive a file round-trip") {
  const std::string path = temp_path("qadp_value_probe.json");
  const QuadraticFunction v = awkward_quadratic();
  write_value_function(path, v);
  const QuadraticFunction back = read_value_function(path);
  CHECK((back.P() - v.P()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.pi() == v.pi());
  std::remove(path.c_str());
}
