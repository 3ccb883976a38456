#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "msod/bench.hpp"
#include "msod/designs.hpp"
#include "msod/inference.hpp"
#include "msod/kernels.hpp"
#include "msod/rerand.hpp"
#include "msod/risk.hpp"

namespace msod {

using Json = nlohmann::json;

std::string read_text_file(const std::string& path);
Json read_json_file(const std::string& path);
// Two-space indented JSON with a trailing newline.
std::string dump_json(const Json& j);
// Directory part of a path ("" for a bare file name), for resolving
// relative references inside config files.
std::string parent_dir(const std::string& path);

// Covariates: header row of column names, then n rows of d numbers.
CovariateMatrix read_covariates_csv(const std::string& path);
CovariateMatrix parse_covariates_csv(const std::string& text);
void write_covariates_csv(std::ostream& out, const CovariateMatrix& x);
// A single named numeric column, e.g. "y_obs" or "mu0".
Eigen::VectorXd read_column_csv(const std::string& path, const std::string& column);
Eigen::VectorXd parse_column_csv(const std::string& text, const std::string& column);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

// design/v1: {"schema": "design/v1", "n": n, "pairs": [{"w": [...], "p": p}]}
// Implicit complete randomization (n above the enumeration guard) carries
// "implicit": "complete_randomization" and no pairs.
Json design_to_json(const Design& design);
Design design_from_json(const Json& j);

Json assignment_to_json(const Assignment& w);
Assignment assignment_from_json(const Json& j);  // {"w": [...]} or a bare array

Json risk_to_json(const RiskReport& report);
Json test_result_to_json(const TestResult& result);

OmegaSpec omega_from_json(const Json& j);
KernelSpec kernel_from_json(const Json& j, const std::string& base_dir);
RerandSpec rerand_from_json(const Json& j);
DesignRequest design_request_from_json(const Json& j, const std::string& base_dir);
SimConfig sim_config_from_json(const Json& j, const std::string& base_dir);

void write_sim_report_csv(std::ostream& out, const SimReport& report);

// Git blob object id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string& content);

}  // namespace msod
