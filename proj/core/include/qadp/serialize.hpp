#pragma once

#include <string>

#include "qadp/iteration.hpp"
#include "qadp/problems.hpp"
#include "qadp/quadratic.hpp"

namespace qadp {

/// Value function JSON: {"n": n, "P": [row-major n*n], "p": [n], "pi": pi}.
std::string value_function_to_json(const QuadraticFunction& v);
QuadraticFunction value_function_from_json(const std::string& text);
void write_value_function(const std::string& path, const QuadraticFunction& v);
QuadraticFunction read_value_function(const std::string& path);

/// History CSV with header
/// iteration,policy_evals,avg_cost,avg_cost_stderr,fit_residual.
/// Doubles print with 17 significant digits so identical runs give
/// byte-identical files.
std::string history_to_csv(const IterationHistory& history);
void write_history_csv(const std::string& path, const IterationHistory& history);

/// Benchmark problem config JSON:
/// {"type": "box_lqr"|"commitments"|"supply_chain", "seed": u64,
///  "params": {...generator fields...}}.
/// Missing params take the generator defaults. Unknown types throw.
BenchmarkProblem load_problem_json(const std::string& text);
BenchmarkProblem load_problem_file(const std::string& path);

/// Canonical JSON for a named builtin ("box-lqr", "commitments",
/// "supply-chain") at a given seed; the same text load_problem_json accepts.
std::string builtin_problem_json(const std::string& name, std::uint64_t seed);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace qadp
