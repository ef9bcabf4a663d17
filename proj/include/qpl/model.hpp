#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qpl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// dX/dt = f(X, u) with scalar input u.
using VectorField = std::function<Vec(const Vec&, double)>;
// Scalar state feedback kappa(X).
using FeedbackLaw = std::function<double(const Vec&)>;

// Plant dX/dt = f(X(t), U(t - D)). L bounds |f(X1,u1) - f(X2,u2)| by L(|X1-X2| + |u1-u2|).
struct PlantSpec {
  int n = 1;
  double D = 1.0;
  VectorField f;
  double L = 1.0;

  void validate() const;
};

// Constants of |X(t)| <= M_sigma |X0| e^{-sigma t} + b3 sup |w| for dX/dt = f(X, kappa(X) + w).
struct GesCertificate {
  double M_sigma = 1.0;
  double sigma = 1.0;
  double b3 = 1.0;

  void validate() const;
};

struct FeedbackSpec {
  FeedbackLaw kappa;
  double kappa0 = 1.0;
  GesCertificate ges;

  void validate() const;
};

struct PlantEntry {
  std::string id;
  std::string description;
  PlantSpec plant;
  FeedbackSpec feedback;
};

// Samples of the transport actuator state u(x) at x_k = k D / N, k = 0..N.
// Values between nodes are read as piecewise linear.
class ActuatorGrid {
 public:
  ActuatorGrid() = default;
  explicit ActuatorGrid(std::vector<double> values);

  static ActuatorGrid zeros(int cells);
  static ActuatorGrid from_function(int cells, double D, const std::function<double(double)>& u);
  // Right-continuous piecewise-constant profile: each (x_start, value) holds until the next
  // x_start. Samples are taken at the node positions.
  static ActuatorGrid from_segments(int cells, double D,
                                    std::span<const std::pair<double, double>> segments);

  int cells() const { return static_cast<int>(values_.size()) - 1; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double sup_norm() const;

 private:
  std::vector<double> values_{0.0};
};

struct CompositeState {
  Vec X;
  ActuatorGrid u;
  double t = 0.0;
};

// |X| + ||u||_inf with the Euclidean norm on X.
double composite_norm(const Vec& X, const ActuatorGrid& u);
double composite_norm(const CompositeState& s);

// Builtin plants. Every entry carries exact L, kappa0 and an analytic certificate.
PlantEntry linear_scalar_plant(double a, double b, double k, double D = 1.0);
PlantEntry sine_scalar_plant(double D = 1.0);
PlantEntry linear_2d_plant(double D = 1.0);
// dX/dt = A X + B u with kappa(X) = -K X. L = max(||A||_2, |B|), kappa0 = |K|.
// The certificate must be supplied (or estimated separately with estimate_ges).
PlantEntry linear_plant(const Mat& A, const Vec& B, const Vec& K, double D,
                        const GesCertificate& ges, std::string id = "linear");

std::vector<PlantEntry> builtin_plants(double D = 1.0);
std::optional<PlantEntry> find_builtin(const std::string& id, double D = 1.0);

// Randomized Lipschitz audits: returns the largest value of lhs - rhs seen over the trials
// (<= 0 means no violation). Samples are drawn from [-scale, scale].
double audit_plant_lipschitz(const PlantSpec& plant, int trials, std::uint64_t seed,
                             double scale = 10.0);
double audit_feedback_lipschitz(const PlantSpec& plant, const FeedbackSpec& fb, int trials,
                                std::uint64_t seed, double scale = 10.0);

}  // namespace qpl
