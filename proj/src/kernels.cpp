#include "msod/kernels.hpp"

#include <cmath>
#include <sstream>

#include "msod/errors.hpp"

namespace msod {

namespace {

std::vector<std::string> default_names(Eigen::Index d) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Eigen::VectorXd centered(const Eigen::VectorXd& v) {
  return v.array() - v.mean();
}

}  // namespace

CovariateMatrix::CovariateMatrix(Eigen::MatrixXd x, std::vector<std::string> column_names)
    : x_(std::move(x)), names_(std::move(column_names)) {
  if (x_.rows() < 2 || x_.rows() % 2 != 0) {
    throw ValidationError("covariates need an even number of units, got " +
                          std::to_string(x_.rows()));
  }
  if (x_.cols() < 1) throw ValidationError("covariates need at least one column");
  if (!x_.allFinite()) throw ValidationError("covariates contain missing or non-finite values");
  if (static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
    throw ValidationError("covariate column names do not match column count");
  }
}

CovariateMatrix::CovariateMatrix(Eigen::MatrixXd x)
    : CovariateMatrix(x, default_names(x.cols())) {}

GramMatrix::GramMatrix(SymMatrix k, std::optional<KernelSpec> spec)
    : k_(std::move(k)), spec_(std::move(spec)) {
  const SymEigen eig = eigen_decompose(k_);
  const double trace = k_.dense().trace();
  const double floor = -1e-8 * std::max(trace, 0.0) / n();
  if (eig.values[0] < floor) {
    std::ostringstream msg;
    msg << "Gram matrix is not positive semidefinite (min eigenvalue " << eig.values[0] << ")";
    throw ValidationError(msg.str());
  }
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::singleton: return "singleton";
    case KernelKind::cr_reference: return "cr_reference";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "polynomial") return KernelKind::polynomial;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "singleton") return KernelKind::singleton;
  if (name == "cr_reference") return KernelKind::cr_reference;
  throw ValidationError("unknown kernel kind '" + name + "'");
}

std::string to_string(OmegaKind kind) {
  switch (kind) {
    case OmegaKind::identity: return "identity";
    case OmegaKind::inverse_covariance: return "inverse_covariance";
    case OmegaKind::explicit_matrix: return "explicit";
  }
  return "unknown";
}

OmegaKind omega_kind_from_string(const std::string& name) {
  if (name == "identity") return OmegaKind::identity;
  if (name == "inverse_covariance") return OmegaKind::inverse_covariance;
  if (name == "explicit") return OmegaKind::explicit_matrix;
  throw ValidationError("unknown omega kind '" + name + "'");
}

Eigen::MatrixXd sample_covariance(const CovariateMatrix& x) {
  const Eigen::MatrixXd centered_x = x.values().rowwise() - x.values().colwise().mean();
  return (centered_x.transpose() * centered_x) / static_cast<double>(x.n() - 1);
}

SymMatrix resolve_omega(const OmegaSpec& spec, const CovariateMatrix& x) {
  switch (spec.kind) {
    case OmegaKind::identity:
      return SymMatrix::identity(x.d());
    case OmegaKind::explicit_matrix: {
      if (!spec.matrix) throw ValidationError("explicit omega requires a matrix");
      if (spec.matrix->rows() != x.d() || spec.matrix->cols() != x.d()) {
        throw ValidationError("explicit omega must be d x d with d = " + std::to_string(x.d()));
      }
      SymMatrix omega(*spec.matrix);
      const SymEigen eig = eigen_decompose(omega);
      const double trace = omega.dense().trace();
      if (!(eig.values[0] > 1e-12 * trace / x.d())) {
        throw ValidationError("explicit omega must be positive definite");
      }
      return omega;
    }
    case OmegaKind::inverse_covariance: {
      const SymEigen eig = eigen_decompose(SymMatrix(sample_covariance(x)));
      const double top = eig.values[eig.values.size() - 1];
      const double bottom = eig.values[0];
      if (!(bottom > 0) || top / bottom >= 1e12) {
        throw ValidationError(
            "sample covariance is singular or ill-conditioned; use an identity or explicit "
            "omega, or add a ridge");
      }
      const Eigen::VectorXd inv = eig.values.cwiseInverse();
      return SymMatrix(eig.vectors * inv.asDiagonal() * eig.vectors.transpose());
    }
  }
  throw ValidationError("unhandled omega kind");
}

GramMatrix build_gram(const CovariateMatrix& x, const KernelSpec& spec) {
  if (spec.ridge < 0 || !std::isfinite(spec.ridge)) {
    throw ValidationError("ridge must be a nonnegative finite number");
  }
  const int n = x.n();
  Eigen::MatrixXd k(n, n);
  switch (spec.kind) {
    case KernelKind::cr_reference:
      k = Eigen::MatrixXd::Identity(n, n) * (static_cast<double>(n - 1) / n);
      break;
    case KernelKind::singleton: {
      if (!spec.mu0) throw ValidationError("singleton kernel requires mu0");
      if (spec.mu0->size() != n) {
        throw ValidationError("mu0 has length " + std::to_string(spec.mu0->size()) +
                              " but there are " + std::to_string(n) + " units");
      }
      const Eigen::VectorXd mu = centered(*spec.mu0);
      k = mu * mu.transpose();
      break;
    }
    case KernelKind::linear:
    case KernelKind::polynomial: {
      const Eigen::MatrixXd omega = resolve_omega(spec.omega, x).dense();
      k = x.values() * omega * x.values().transpose();
      if (spec.kind == KernelKind::polynomial) {
        if (spec.degree < 1) throw ValidationError("polynomial degree must be at least 1");
        k = (k.array() + 1.0).pow(spec.degree).matrix();
      }
      break;
    }
    case KernelKind::gaussian: {
      const Eigen::MatrixXd omega = resolve_omega(spec.omega, x).dense();
      for (int i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
          const Eigen::VectorXd diff = (x.values().row(i) - x.values().row(j)).transpose();
          k(i, j) = k(j, i) = std::exp(-diff.dot(omega * diff));
        }
      }
      break;
    }
  }
  if (spec.ridge > 0) k.diagonal().array() += spec.ridge;
  return GramMatrix(SymMatrix(k), spec);
}

GramMatrix cr_reference_gram(int n, double ridge) {
  KernelSpec spec;
  spec.kind = KernelKind::cr_reference;
  spec.ridge = ridge;
  return build_gram(CovariateMatrix(Eigen::MatrixXd::Zero(n, 1)), spec);
}

GramMatrix singleton_gram(const Eigen::VectorXd& mu0, double ridge) {
  KernelSpec spec;
  spec.kind = KernelKind::singleton;
  spec.mu0 = mu0;
  spec.ridge = ridge;
  return build_gram(CovariateMatrix(Eigen::MatrixXd::Zero(mu0.size(), 1)), spec);
}

}  // namespace msod
