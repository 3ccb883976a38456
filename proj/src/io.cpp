#include "msod/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "msod/errors.hpp"

namespace msod {

namespace {

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Non-blank lines with a UTF-8 byte order mark stripped from the first.
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    first = false;
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

double parse_number(const std::string& field, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty() || !std::isfinite(value)) {
    throw ValidationError("CSV row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": '" + field + "' is not a finite number");
  }
  return value;
}

void require_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError("unknown key '" + item.key() + "' in " + what);
    }
  }
}

double get_number(const Json& j, const std::string& key, const std::string& what) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(what + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const Json& j, const std::string& key, const std::string& what) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(what + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

std::string get_string(const Json& j, const std::string& key, const std::string& what) {
  const Json& v = j.at(key);
  if (!v.is_string()) throw ValidationError(what + "." + key + " must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ValidationError(what + " must be an array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

std::vector<int> get_signs(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError(what + " must be an array of +1/-1");
  std::vector<int> out;
  out.reserve(v.size());
  for (const Json& e : v) {
    if (!e.is_number_integer()) throw ValidationError(what + " must be an array of +1/-1");
    out.push_back(e.get<int>());
  }
  return out;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || path.front() == '/' || base_dir.empty()) return path;
  return base_dir + "/" + path;
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string parent_dir(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  if (slash == std::string::npos) return "";
  return slash == 0 ? "/" : path.substr(0, slash);
}

CovariateMatrix parse_covariates_csv(const std::string& text) {
  const std::vector<std::string> lines = csv_lines(text);
  if (lines.size() < 2) throw ValidationError("covariate CSV needs a header and at least one row");
  std::vector<std::string> names = split_fields(lines.front());
  const std::size_t d = names.size();
  for (const std::string& name : names) {
    if (name.empty()) throw ValidationError("covariate CSV has an empty column name");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(d));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> fields = split_fields(lines[r]);
    if (fields.size() != d) {
      throw ValidationError("covariate CSV row " + std::to_string(r) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      x(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = parse_number(fields[c], r, c + 1);
    }
  }
  return CovariateMatrix(std::move(x), std::move(names));
}

CovariateMatrix read_covariates_csv(const std::string& path) {
  return parse_covariates_csv(read_text_file(path));
}

void write_covariates_csv(std::ostream& out, const CovariateMatrix& x) {
  const auto& names = x.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << "\n";
  out << std::setprecision(17);
  for (int i = 0; i < x.n(); ++i) {
    for (int j = 0; j < x.d(); ++j) out << (j ? "," : "") << x.values()(i, j);
    out << "\n";
  }
}

Eigen::VectorXd parse_column_csv(const std::string& text, const std::string& column) {
  const std::vector<std::string> lines = csv_lines(text);
  if (lines.size() < 2) throw ValidationError("CSV needs a header and at least one row");
  const std::vector<std::string> header = split_fields(lines.front());
  std::size_t index = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == column) index = c;
  }
  if (index == header.size()) throw ValidationError("CSV has no column named '" + column + "'");
  Eigen::VectorXd v(static_cast<Eigen::Index>(lines.size() - 1));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> fields = split_fields(lines[r]);
    if (fields.size() != header.size()) {
      throw ValidationError("CSV row " + std::to_string(r) + " has the wrong number of fields");
    }
    v[static_cast<Eigen::Index>(r - 1)] = parse_number(fields[index], r, index + 1);
  }
  return v;
}

Eigen::VectorXd read_column_csv(const std::string& path, const std::string& column) {
  return parse_column_csv(read_text_file(path), column);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

Json design_to_json(const Design& design) {
  Json j;
  j["schema"] = "design/v1";
  j["n"] = design.n();
  if (!design.is_explicit()) {
    j["implicit"] = "complete_randomization";
    return j;
  }
  Json pairs = Json::array();
  for (const SignPair& pair : design.pairs()) {
    pairs.push_back({{"w", pair.representative.to_ints()}, {"p", pair.probability}});
  }
  j["pairs"] = std::move(pairs);
  return j;
}

Design design_from_json(const Json& j) {
  require_keys(j, {"schema", "n", "pairs", "implicit"}, "design");
  if (!j.contains("schema") || j.at("schema") != "design/v1") {
    throw ValidationError("design file must have schema \"design/v1\"");
  }
  if (!j.contains("n")) throw ValidationError("design file lacks n");
  const auto n = get_integer(j, "n", "design");
  if (n < 2 || n % 2 != 0 || n > std::numeric_limits<int>::max()) {
    throw ValidationError("design n must be even and positive");
  }
  if (j.contains("implicit")) {
    if (j.at("implicit") != "complete_randomization" || j.contains("pairs")) {
      throw ValidationError("only implicit complete randomization (without pairs) is supported");
    }
    if (n <= kEnumerationGuard) {
      throw ValidationError("implicit designs are only used above the enumeration guard");
    }
    return Design::implicit_complete_randomization(static_cast<int>(n));
  }
  if (!j.contains("pairs") || !j.at("pairs").is_array()) {
    throw ValidationError("design file lacks a pairs array");
  }
  std::vector<SignPair> pairs;
  for (const Json& entry : j.at("pairs")) {
    require_keys(entry, {"w", "p"}, "design pair");
    if (!entry.contains("w") || !entry.contains("p")) throw ValidationError("design pair needs w and p");
    const Assignment w(get_signs(entry.at("w"), "pair w"));
    pairs.push_back({w, get_number(entry, "p", "design pair")});
  }
  return Design::from_pairs(static_cast<int>(n), std::move(pairs));
}

Json assignment_to_json(const Assignment& w) { return Json{{"w", w.to_ints()}}; }

Assignment assignment_from_json(const Json& j) {
  if (j.is_array()) return Assignment(get_signs(j, "assignment"));
  if (!j.is_object() || !j.contains("w")) throw ValidationError("assignment file needs a w array");
  return Assignment(get_signs(j.at("w"), "assignment w"));
}

Json risk_to_json(const RiskReport& report) {
  return Json{{"minimax_risk", report.minimax_risk},
              {"witness_mu", vector_to_json(report.witness_mu)},
              {"max_pair_probability", report.max_pair_probability},
              {"c", report.budget}};
}

Json test_result_to_json(const TestResult& result) {
  Json j{{"p_value", result.p_value},
         {"observed_stat", std::isfinite(result.observed_stat) ? Json(result.observed_stat)
                                                               : Json("inf")},
         {"method", to_string(result.method)},
         {"statistic", to_string(result.kind)}};
  if (result.method == PValueMethod::monte_carlo) j["draws"] = result.draws;
  return j;
}

OmegaSpec omega_from_json(const Json& j) {
  OmegaSpec spec;
  if (j.is_string()) {
    spec.kind = omega_kind_from_string(j.get<std::string>());
  } else {
    require_keys(j, {"kind", "matrix"}, "omega");
    if (j.contains("kind")) spec.kind = omega_kind_from_string(get_string(j, "kind", "omega"));
    if (j.contains("matrix")) {
      const Json& rows = j.at("matrix");
      if (!rows.is_array() || rows.empty()) throw ValidationError("omega.matrix must be a square array");
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd row = get_vector(rows[r], "omega.matrix row");
        if (row.size() != m.cols()) throw ValidationError("omega.matrix must be square");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      spec.matrix = m;
      if (!j.contains("kind")) spec.kind = OmegaKind::explicit_matrix;
    }
  }
  if (spec.kind == OmegaKind::explicit_matrix && !spec.matrix) {
    throw ValidationError("omega kind 'explicit' needs a matrix");
  }
  return spec;
}

KernelSpec kernel_from_json(const Json& j, const std::string& base_dir) {
  require_keys(j, {"kind", "omega", "degree", "mu0_file", "mu0", "ridge"}, "kernel");
  KernelSpec spec;
  if (j.contains("kind")) spec.kind = kernel_kind_from_string(get_string(j, "kind", "kernel"));
  if (j.contains("omega")) spec.omega = omega_from_json(j.at("omega"));
  if (j.contains("degree")) {
    const auto degree = get_integer(j, "degree", "kernel");
    if (degree < 1 || degree > 64) throw ValidationError("kernel.degree must lie in 1..64");
    spec.degree = static_cast<int>(degree);
  }
  if (j.contains("ridge")) spec.ridge = get_number(j, "ridge", "kernel");
  if (j.contains("mu0") && j.contains("mu0_file")) {
    throw ValidationError("kernel accepts mu0 or mu0_file, not both");
  }
  if (j.contains("mu0")) spec.mu0 = get_vector(j.at("mu0"), "kernel.mu0");
  if (j.contains("mu0_file")) {
    spec.mu0 = read_column_csv(resolve_path(base_dir, get_string(j, "mu0_file", "kernel")), "mu0");
  }
  return spec;
}

RerandSpec rerand_from_json(const Json& j) {
  require_keys(j, {"omega", "a", "p_a", "max_draws"}, "rerand");
  RerandSpec spec;
  if (j.contains("omega")) spec.omega = omega_from_json(j.at("omega"));
  if (j.contains("a")) {
    const Json& a = j.at("a");
    if (a.is_string() && (a == "inf" || a == "infinity")) {
      spec.a = std::numeric_limits<double>::infinity();
    } else {
      spec.a = get_number(j, "a", "rerand");
    }
  }
  if (j.contains("p_a")) spec.p_a = get_number(j, "p_a", "rerand");
  if (j.contains("max_draws")) spec.max_draws = get_integer(j, "max_draws", "rerand");
  validate(spec);
  return spec;
}

DesignRequest design_request_from_json(const Json& j, const std::string& base_dir) {
  require_keys(j, {"name", "method", "kernel", "alpha", "t", "w0", "rerand"}, "design request");
  DesignRequest request;
  if (j.contains("method")) request.method = get_string(j, "method", "design request");
  request.name = j.contains("name") ? get_string(j, "name", "design request") : request.method;
  if (j.contains("kernel")) request.kernel = kernel_from_json(j.at("kernel"), base_dir);
  if (j.contains("alpha")) request.alpha = get_number(j, "alpha", "design request");
  if (j.contains("t")) {
    const auto t = get_integer(j, "t", "design request");
    if (t < 1 || t > std::numeric_limits<int>::max()) throw ValidationError("t must be positive");
    request.t_count = static_cast<int>(t);
  }
  if (j.contains("w0")) request.w0 = get_signs(j.at("w0"), "w0");
  if (j.contains("rerand")) request.rerand = rerand_from_json(j.at("rerand"));
  return request;
}

SimConfig sim_config_from_json(const Json& j, const std::string& base_dir) {
  require_keys(j,
               {"covariates", "cef", "tau", "noise_sd", "replications", "designs", "statistic",
                "test_alpha", "test_draws", "risk_kernel", "c", "seed"},
               "simulation config");
  SimConfig config;
  if (!j.contains("covariates")) throw ValidationError("simulation config needs covariates");
  const Json& cov = j.at("covariates");
  require_keys(cov, {"source", "b", "n", "d", "seed", "path"}, "covariates");
  const std::string source = cov.contains("source") ? get_string(cov, "source", "covariates") : "";
  if (source == "example1") {
    config.covariates.kind = CovariateSource::Kind::example1;
    config.covariates.b = static_cast<int>(get_integer(cov, "b", "covariates"));
  } else if (source == "gaussian") {
    config.covariates.kind = CovariateSource::Kind::gaussian;
    config.covariates.n = static_cast<int>(get_integer(cov, "n", "covariates"));
    config.covariates.d = cov.contains("d") ? static_cast<int>(get_integer(cov, "d", "covariates")) : 1;
    if (cov.contains("seed")) config.covariates.seed = static_cast<std::uint64_t>(get_integer(cov, "seed", "covariates"));
  } else if (source == "csv") {
    config.covariates.kind = CovariateSource::Kind::csv;
    config.covariates.path = resolve_path(base_dir, get_string(cov, "path", "covariates"));
  } else {
    throw ValidationError("covariates.source must be example1, gaussian or csv");
  }

  if (j.contains("cef")) {
    const Json& cef = j.at("cef");
    require_keys(cef, {"kind", "beta", "values"}, "cef");
    const std::string kind = get_string(cef, "kind", "cef");
    if (kind == "linear") {
      config.cef.kind = CefSpec::Kind::linear;
      config.cef.beta = get_vector(cef.at("beta"), "cef.beta");
    } else if (kind == "mu" || kind == "table") {
      config.cef.kind = kind == "mu" ? CefSpec::Kind::mu : CefSpec::Kind::table;
      config.cef.values = get_vector(cef.at("values"), "cef.values");
    } else {
      throw ValidationError("cef.kind must be linear, mu or table");
    }
  } else {
    config.cef.kind = CefSpec::Kind::table;
  }

  if (j.contains("tau")) config.tau = get_number(j, "tau", "simulation config");
  if (j.contains("noise_sd")) config.noise_sd = get_number(j, "noise_sd", "simulation config");
  if (j.contains("replications")) config.replications = get_integer(j, "replications", "simulation config");
  if (j.contains("statistic")) {
    config.statistic = statistic_kind_from_string(get_string(j, "statistic", "simulation config"));
  }
  if (j.contains("test_alpha")) config.test_alpha = get_number(j, "test_alpha", "simulation config");
  if (j.contains("test_draws")) config.test_draws = get_integer(j, "test_draws", "simulation config");
  if (j.contains("risk_kernel")) config.risk_kernel = kernel_from_json(j.at("risk_kernel"), base_dir);
  if (j.contains("c")) config.budget = get_number(j, "c", "simulation config");
  if (j.contains("seed")) config.seed = static_cast<std::uint64_t>(get_integer(j, "seed", "simulation config"));
  if (!j.contains("designs") || !j.at("designs").is_array()) {
    throw ValidationError("simulation config needs a designs array");
  }
  for (const Json& d : j.at("designs")) config.designs.push_back(design_request_from_json(d, base_dir));

  // A missing cef means f = 0.
  if (config.cef.kind == CefSpec::Kind::table && config.cef.values.size() == 0) {
    config.cef.values = Eigen::VectorXd::Zero(load_covariates(config.covariates).n());
  }
  return config;
}

void write_sim_report_csv(std::ostream& out, const SimReport& report) {
  out << "design,replications,mean_estimate,mse,mse_se,bias,bias_se,predicted_mse,design_term,"
         "noise_term,sate_term,rejection_rate,minimax_risk\n";
  for (const SimRow& row : report.rows) {
    out << row.design << "," << row.replications << "," << format_cell(row.mean_estimate) << ","
        << format_cell(row.mse) << "," << format_cell(row.mse_se) << "," << format_cell(row.bias)
        << "," << format_cell(row.bias_se) << "," << format_cell(row.predicted.total) << ","
        << format_cell(row.predicted.design_term) << "," << format_cell(row.predicted.noise_term)
        << "," << format_cell(row.predicted.sate_term) << "," << format_cell(row.rejection_rate)
        << "," << format_cell(row.minimax_risk) << "\n";
  }
}

std::string git_blob_sha1(const std::string& content) {
  std::string object = "blob " + std::to_string(content.size());
  object.push_back('\0');
  object += content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(object.data(), object.size(), digest, &length, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

}  // namespace msod
