#include "iongate/fidelity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "iongate/effective.hpp"

namespace iongate {

namespace {

const char* bell_source_label(BellKind kind) {
  switch (kind) {
    case BellKind::psi_minus: return "10";
    case BellKind::psi_plus: return "01";
    case BellKind::phi_minus: return "11";
    case BellKind::phi_plus: return "00";
  }
  throw std::invalid_argument("unknown Bell target kind");
}

Real projection(const MatXc& rho, const VecXc& target) {
  return (target.adjoint() * rho * target)(0, 0).real();
}

void check_tensor(const ChannelTensor& tensor) {
  if (tensor.d <= 0) throw std::invalid_argument("channel tensor is empty");
  if (tensor.elements.size() != static_cast<std::size_t>(tensor.d) * tensor.d)
    throw std::invalid_argument("channel tensor element count mismatch");
  for (const MatXc& e : tensor.elements)
    if (e.rows() != tensor.d || e.cols() != tensor.d)
      throw std::invalid_argument("channel tensor element dimension mismatch");
}

}  // namespace

VecXc bell_target(BellKind kind, Real phi_d) {
  return ideal_gate_action(bell_source_label(kind), phi_d);
}

int bell_source_index(BellKind kind) {
  const char* label = bell_source_label(kind);
  return (label[0] - '0') + 2 * (label[1] - '0');
}

FidelityReport bell_fidelity(const std::vector<Real>& times,
                             const std::vector<MatXc>& spin_rho, const VecXc& target) {
  if (times.empty() || times.size() != spin_rho.size())
    throw std::invalid_argument("need matching, non-empty time and density lists");
  if (std::abs(target.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("target state must be normalized");

  std::vector<Real> f(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && times[k] < times[k - 1])
      throw std::invalid_argument("scan times must be sorted ascending");
    if (spin_rho[k].rows() != target.size() || spin_rho[k].cols() != target.size())
      throw std::invalid_argument("density dimension does not match the target");
    f[k] = projection(spin_rho[k], target);
    if (f[k] < -1e-6 || f[k] > 1.0 + 1e-6)
      throw std::runtime_error("fidelity sample outside [0, 1]");
  }

  const std::size_t k = static_cast<std::size_t>(
      std::max_element(f.begin(), f.end()) - f.begin());
  FidelityReport report;
  report.bell_fidelity = f[k];
  report.t_f_at_max = times[k];

  // Interior peak: refine with the parabola through the bracketing samples.
  if (k > 0 && k + 1 < f.size()) {
    const Real t0 = times[k - 1], t1 = times[k], t2 = times[k + 1];
    if (t0 < t1 && t1 < t2) {
      const Real d1 = (f[k] - f[k - 1]) / (t1 - t0);
      const Real d2 = (f[k + 1] - f[k]) / (t2 - t1);
      const Real c2 = (d2 - d1) / (t2 - t0);
      if (c2 < 0.0) {
        const Real t_star = 0.5 * (t0 + t1) - d1 / (2.0 * c2);
        if (t_star >= t0 && t_star <= t2) {
          const Real f_star = f[k - 1] + d1 * (t_star - t0) + c2 * (t_star - t0) * (t_star - t1);
          if (f_star > report.bell_fidelity) {
            report.bell_fidelity = std::min(f_star, 1.0);
            report.t_f_at_max = t_star;
          }
        }
      }
    }
  }
  report.bell_fidelity = std::min(report.bell_fidelity, 1.0);
  report.error = 1.0 - report.bell_fidelity;
  return report;
}

FidelityReport bell_fidelity(const SimResult& result, const VecXc& target) {
  return bell_fidelity(result.times, result.spin_rho, target);
}

MatXc ChannelTensor::apply(const MatXc& rho_spin) const {
  check_tensor(*this);
  if (rho_spin.rows() != d || rho_spin.cols() != d)
    throw std::invalid_argument("input density dimension mismatch");
  MatXc out = MatXc::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out += rho_spin(a, b) * at(a, b);
  return out;
}

ChannelTensor empty_channel(int d) {
  if (d <= 0) throw std::invalid_argument("channel dimension must be positive");
  ChannelTensor tensor;
  tensor.d = d;
  tensor.elements.assign(static_cast<std::size_t>(d) * d, MatXc::Zero(d, d));
  return tensor;
}

ChannelTensor unitary_channel(const MatXc& u) {
  if (u.rows() != u.cols() || u.rows() == 0)
    throw std::invalid_argument("unitary_channel needs a square matrix");
  const int d = static_cast<int>(u.rows());
  ChannelTensor tensor = empty_channel(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) tensor.at(a, b) = u.col(a) * u.col(b).adjoint();
  tensor.weight = 1.0;
  return tensor;
}

ChannelTensor depolarizing_channel(int d) {
  ChannelTensor tensor = empty_channel(d);
  for (int a = 0; a < d; ++a)
    tensor.at(a, a) = MatXc::Identity(d, d) / static_cast<Real>(d);
  tensor.weight = 1.0;
  return tensor;
}

void accumulate_channel(ChannelTensor& tensor, const SpaceLayout& layout,
                        const MatXc& basis_block, Real weight) {
  check_tensor(tensor);
  if (tensor.d != layout.spin_dim())
    throw std::invalid_argument("channel dimension does not match the layout");
  if (basis_block.rows() != layout.dim() || basis_block.cols() != tensor.d)
    throw std::invalid_argument("basis block must hold one column per spin state");

  const Eigen::Index sd = layout.spin_dim();
  const Eigen::Index pd = layout.ph_dim();
  for (int a = 0; a < tensor.d; ++a) {
    const Eigen::Map<const MatXc> ma(basis_block.col(a).data(), sd, pd);
    for (int b = 0; b < tensor.d; ++b) {
      const Eigen::Map<const MatXc> mb(basis_block.col(b).data(), sd, pd);
      tensor.at(a, b) += weight * (ma * mb.adjoint());
    }
  }
  tensor.weight += weight;
}

Real entanglement_fidelity(const ChannelTensor& tensor, const MatXc& u_eff) {
  check_tensor(tensor);
  if (u_eff.rows() != tensor.d || u_eff.cols() != tensor.d)
    throw std::invalid_argument("reference gate dimension mismatch");
  Complex acc = 0.0;
  for (int a = 0; a < tensor.d; ++a)
    for (int b = 0; b < tensor.d; ++b)
      acc += (u_eff.adjoint() * tensor.at(a, b) * u_eff)(a, b);
  const Complex f_e = acc / static_cast<Real>(tensor.d * tensor.d);
  // window sized to the integrator norm-decay budget, not to exact CPTP maps
  if (std::abs(f_e.imag()) > 1e-6 || f_e.real() < -1e-6 || f_e.real() > 1.0 + 1e-6) {
    std::ostringstream msg;
    msg << "entanglement fidelity failed the consistency window: " << f_e.real()
        << (f_e.imag() >= 0 ? "+" : "") << f_e.imag() << "i";
    throw std::runtime_error(msg.str());
  }
  return std::clamp(f_e.real(), 0.0, 1.0);
}

Real channel_fidelity_from_entanglement(Real f_e, int d) {
  if (d <= 0) throw std::invalid_argument("dimension must be positive");
  return (static_cast<Real>(d) * f_e + 1.0) / (static_cast<Real>(d) + 1.0);
}

HaarEstimate haar_average_fidelity(const ChannelTensor& tensor, const MatXc& u_eff,
                                   int n_samples, std::uint64_t seed) {
  check_tensor(tensor);
  if (u_eff.rows() != tensor.d || u_eff.cols() != tensor.d)
    throw std::invalid_argument("reference gate dimension mismatch");
  if (n_samples < 2) throw std::invalid_argument("need at least two Haar samples");

  std::mt19937_64 rng(stream_seed(seed, 0));
  std::normal_distribution<Real> gauss(0.0, 1.0);
  std::vector<Real> values;
  values.reserve(n_samples);
  VecXc psi(tensor.d);
  for (int s = 0; s < n_samples; ++s) {
    for (int a = 0; a < tensor.d; ++a) {
      const Real re = gauss(rng);
      const Real im = gauss(rng);
      psi[a] = Complex(re, im);
    }
    psi /= psi.norm();
    const VecXc out = u_eff * psi;
    Complex f = 0.0;
    for (int a = 0; a < tensor.d; ++a)
      for (int b = 0; b < tensor.d; ++b)
        f += psi[a] * std::conj(psi[b]) * (out.adjoint() * tensor.at(a, b) * out)(0, 0);
    values.push_back(f.real());
  }

  HaarEstimate estimate;
  estimate.samples = n_samples;
  for (const Real v : values) estimate.mean += v;
  estimate.mean /= static_cast<Real>(n_samples);
  Real var = 0.0;
  for (const Real v : values) var += (v - estimate.mean) * (v - estimate.mean);
  estimate.stderr_mean =
      std::sqrt(var / (static_cast<Real>(n_samples) * (static_cast<Real>(n_samples) - 1.0)));
  return estimate;
}

ChannelRun run_channel(const GateSystem& sys, const PulseSchedule& schedule,
                       const ThermalSpec& thermal, const OUParams* ou,
                       int noise_trajectories, Real t_f, Real dt, int threads) {
  const SpaceLayout& layout = sys.layout;
  const int d = static_cast<int>(layout.spin_dim());
  const ThermalEnsemble ensemble = enumerate_thermal(thermal, layout);
  const int n_branches = static_cast<int>(ensemble.branches.size());
  const int n_seeds = ou != nullptr ? std::max(1, noise_trajectories) : 1;
  const int n_items = n_branches * n_seeds;
  const Real noise_amp = ou != nullptr ? 4.0 * std::sqrt(ou->c * ou->tau / 2.0) : 0.0;

  std::vector<ChannelTensor> item_tensor(n_items);
  std::vector<Real> item_defect(n_items, 0.0);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    while (true) {
      const int item = next.fetch_add(1);
      if (item >= n_items) return;
      try {
        const int seed = item / n_branches;
        const int branch = item % n_branches;
        BlockPropagator prop(sys, dt, noise_amp);

        MatXc block(layout.dim(), d);
        VecXc spin = VecXc::Zero(d);
        for (int a = 0; a < d; ++a) {
          spin[a] = 1.0;
          block.col(a) = composite_state(layout, spin, ensemble.branches[branch].ph_index);
          spin[a] = 0.0;
        }

        std::unique_ptr<OUTrajectory> path;
        std::vector<OUTrajectory*> bindings;
        if (ou != nullptr) {
          path = std::make_unique<OUTrajectory>(*ou, static_cast<std::uint64_t>(seed));
          bindings.push_back(path.get());
        }
        run_schedule(block, prop, schedule, bindings, t_f, {}, nullptr);

        Real defect = 0.0;
        for (int a = 0; a < d; ++a)
          defect = std::max(defect, std::abs(block.col(a).norm() - 1.0));
        if (defect > 1e-3)
          throw std::runtime_error("integration diverged: basis-column norm defect above 1e-3");
        item_defect[item] = defect;

        const SpMat v = frame_backrotation(layout, sys.params, sys.frame, t_f);
        block = (v * block).eval();
        ChannelTensor local = empty_channel(d);
        accumulate_channel(local, layout, block, ensemble.branches[branch].weight);
        item_tensor[item] = std::move(local);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min(threads, n_items));
  if (n_threads == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(body);
    for (auto& worker : pool) worker.join();
  }
  if (error) std::rethrow_exception(error);

  ChannelRun run;
  run.tensor = empty_channel(d);
  for (int item = 0; item < n_items; ++item) {
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        run.tensor.at(a, b) += item_tensor[item].at(a, b) / static_cast<Real>(n_seeds);
    run.tensor.weight += item_tensor[item].weight / static_cast<Real>(n_seeds);
  }
  run.branches = n_branches;
  run.seeds = ou != nullptr ? n_seeds : 0;
  run.retained_mass = ensemble.retained_mass;
  run.max_norm_defect = *std::max_element(item_defect.begin(), item_defect.end());
  if (ensemble.retained_mass < 0.999) {
    std::ostringstream msg;
    msg << "thermal enumeration retained mass " << ensemble.retained_mass << " < 0.999";
    run.warnings.push_back(msg.str());
  }
  if (run.max_norm_defect > 1e-9) {
    std::ostringstream msg;
    msg << "basis-column norm defect " << run.max_norm_defect << " > 1e-9";
    run.warnings.push_back(msg.str());
  }
  return run;
}

} // namespace iongate
