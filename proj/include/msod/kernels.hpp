#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msod/numerics.hpp"

namespace msod {

// n x d pre-treatment covariates. n must be even.
class CovariateMatrix {
 public:
  CovariateMatrix(Eigen::MatrixXd x, std::vector<std::string> column_names);
  explicit CovariateMatrix(Eigen::MatrixXd x);  // columns named x1..xd

  int n() const { return static_cast<int>(x_.rows()); }
  int d() const { return static_cast<int>(x_.cols()); }
  const Eigen::MatrixXd& values() const { return x_; }
  const std::vector<std::string>& column_names() const { return names_; }

 private:
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
};

enum class OmegaKind { identity, inverse_covariance, explicit_matrix };

struct OmegaSpec {
  OmegaKind kind = OmegaKind::identity;
  std::optional<Eigen::MatrixXd> matrix;  // explicit_matrix only
};

enum class KernelKind { linear, polynomial, gaussian, singleton, cr_reference };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  OmegaSpec omega;
  int degree = 2;                     // polynomial only
  std::optional<Eigen::VectorXd> mu0; // singleton only
  double ridge = 0.0;                 // K <- K + ridge * I
};

// PSD Gram matrix defining the mean-outcome class {K v : <v, K v> <= C}.
class GramMatrix {
 public:
  // Throws ValidationError unless min eigenvalue >= -1e-8 * trace / n.
  explicit GramMatrix(SymMatrix k, std::optional<KernelSpec> spec = std::nullopt);

  int n() const { return k_.dim(); }
  const SymMatrix& matrix() const { return k_; }
  const std::optional<KernelSpec>& spec() const { return spec_; }

 private:
  SymMatrix k_;
  std::optional<KernelSpec> spec_;
};

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);
std::string to_string(OmegaKind kind);
OmegaKind omega_kind_from_string(const std::string& name);

// Sample covariance with divisor n - 1.
Eigen::MatrixXd sample_covariance(const CovariateMatrix& x);

SymMatrix resolve_omega(const OmegaSpec& spec, const CovariateMatrix& x);

GramMatrix build_gram(const CovariateMatrix& x, const KernelSpec& spec);

// Kinds that need only the unit count.
GramMatrix cr_reference_gram(int n, double ridge = 0.0);
GramMatrix singleton_gram(const Eigen::VectorXd& mu0, double ridge = 0.0);

}  // namespace msod
