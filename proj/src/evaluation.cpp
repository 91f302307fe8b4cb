#include "mplc/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mplc/common.hpp"

namespace mplc {

double coupling_efficiency(const SpectralPropagator& prop, const MPLCModel& model,
                           const ComplexField& input, const ComplexField& target) {
  if (std::abs(total_power(input) - 1.0) > 1e-8 || std::abs(total_power(target) - 1.0) > 1e-8) {
    throw Error("coupling_efficiency: fields must be normalized");
  }
  const ComplexField out = forward(prop, model, input);
  return std::norm(inner_product(out, target));
}

CrosstalkMatrix crosstalk_matrix(const SpectralPropagator& prop, const MPLCModel& model,
                                 const ModeSet& modes) {
  require_same_grid(modes.grid, model.grid, "crosstalk_matrix");
  if (modes.size() < 1) throw Error("crosstalk_matrix: empty modeset");
  for (double z : model.distances) prop.prefetch(z);

  const int m = modes.size();
  CrosstalkMatrix ct;
  ct.m = m;
  ct.h.assign(static_cast<std::size_t>(m) * m, {0.0, 0.0});
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < m; ++k) {
    const ComplexField out = forward(prop, model, modes.inputs[static_cast<std::size_t>(k)]);
    for (int j = 0; j < m; ++j) {
      ct.h[static_cast<std::size_t>(j) * m + k] =
          inner_product(modes.targets[static_cast<std::size_t>(j)], out);
    }
  }
  return ct;
}

std::vector<double> crosstalk_eigenvalues(const CrosstalkMatrix& ct) {
  const int m = ct.m;
  Eigen::MatrixXcd h(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) h(j, k) = ct.at(j, k);
  }
  Eigen::MatrixXcd gram = h.adjoint() * h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram);
  if (solver.info() != Eigen::Success) throw Error("crosstalk eigenvalue solve failed");
  std::vector<double> eig(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

double insertion_loss_db(const CrosstalkMatrix& ct) {
  const std::vector<double> eig = crosstalk_eigenvalues(ct);
  double mean = 0.0;
  for (double e : eig) mean += e;
  mean /= static_cast<double>(eig.size());
  if (mean <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mean);
}

MPLCModel perturbed_model(const MPLCModel& model, double dphi, Rng& rng) {
  MPLCModel out = model;
  if (dphi < 0.0) throw Error("perturbation level must be >= 0");
  for (auto& mask : out.masks) {
    for (auto& p : mask.phi) p += rng.uniform(-dphi, dphi);
  }
  return out;
}

namespace {

PerturbStats mean_std(const std::vector<double>& xs) {
  PerturbStats st;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) st.mean += x;
  st.mean /= n;
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - st.mean) * (x - st.mean);
    st.stddev = std::sqrt(acc / (n - 1.0));
  }
  return st;
}

}  // namespace

PerturbStats sharpness(const SpectralPropagator& prop, const MPLCModel& model,
                       const ModeSet& modes, double dphi, int k_instances, std::uint64_t seed) {
  if (k_instances < 1) throw Error("sharpness: K must be >= 1");
  const double base = dataset_loss(prop, model, modes);
  Rng rng(seed);
  std::vector<double> dl(static_cast<std::size_t>(k_instances));
  for (int k = 0; k < k_instances; ++k) {
    const MPLCModel pert = perturbed_model(model, dphi, rng);
    const double loss = dataset_loss(prop, pert, modes);
    dl[static_cast<std::size_t>(k)] = std::abs(loss - base) / (1.0 + std::abs(base));
  }
  return mean_std(dl);
}

PerturbStats optical_tolerance_db(const SpectralPropagator& prop, const MPLCModel& model,
                                  const ModeSet& modes, double dphi, int k_instances,
                                  std::uint64_t seed) {
  if (k_instances < 1) throw Error("optical_tolerance: K must be >= 1");
  const double base = insertion_loss_db(crosstalk_matrix(prop, model, modes));
  Rng rng(seed);
  std::vector<double> dil(static_cast<std::size_t>(k_instances));
  for (int k = 0; k < k_instances; ++k) {
    const MPLCModel pert = perturbed_model(model, dphi, rng);
    const double il = insertion_loss_db(crosstalk_matrix(prop, pert, modes));
    dil[static_cast<std::size_t>(k)] = std::abs(il - base);
  }
  return mean_std(dil);
}

EvalReport evaluate_model(const SpectralPropagator& prop, const MPLCModel& model,
                          const ModeSet& modes, double dphi, int k_instances, std::uint64_t seed) {
  if (k_instances < 1) throw Error("evaluate_model: K must be >= 1");
  EvalReport report;
  report.dphi = dphi;
  report.k_instances = k_instances;
  report.seed = seed;

  report.crosstalk = crosstalk_matrix(prop, model, modes);
  const int m = report.crosstalk.m;
  report.eta.resize(static_cast<std::size_t>(m));
  double eta_sum = 0.0;
  for (int j = 0; j < m; ++j) {
    report.eta[static_cast<std::size_t>(j)] = report.crosstalk.power(j, j);
    eta_sum += report.eta[static_cast<std::size_t>(j)];
  }
  report.loss = 1.0 - eta_sum / static_cast<double>(m);
  report.insertion_loss_db = insertion_loss_db(report.crosstalk);

  // one set of draws shared by the sharpness and tolerance statistics
  Rng rng(seed);
  std::vector<double> dl(static_cast<std::size_t>(k_instances));
  std::vector<double> dil(static_cast<std::size_t>(k_instances));
  for (int k = 0; k < k_instances; ++k) {
    const MPLCModel pert = perturbed_model(model, dphi, rng);
    const CrosstalkMatrix ct = crosstalk_matrix(prop, pert, modes);
    double pe = 0.0;
    for (int j = 0; j < m; ++j) pe += ct.power(j, j);
    const double loss = 1.0 - pe / static_cast<double>(m);
    dl[static_cast<std::size_t>(k)] = std::abs(loss - report.loss) / (1.0 + std::abs(report.loss));
    dil[static_cast<std::size_t>(k)] = std::abs(insertion_loss_db(ct) - report.insertion_loss_db);
  }
  report.sharpness = mean_std(dl);
  report.tolerance_db = mean_std(dil);
  return report;
}

}  // namespace mplc
