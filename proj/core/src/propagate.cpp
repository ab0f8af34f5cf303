#include "iongate/propagate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "iongate/crystal.hpp"

namespace iongate {

namespace {

using SpMatR = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Fixed-pattern union of a rotating term list. assemble(t) rewrites the
// shared value array with sum_k coeff_k e^{i freq_k t} A_k, so one sparse
// product per stage serves every term and every column of a block.
class AssembledOperator {
 public:
  AssembledOperator() = default;

  AssembledOperator(const std::vector<RotatingTerm>& terms, std::int64_t dim) {
    std::vector<Eigen::Triplet<Complex>> pattern;
    for (const auto& term : terms)
      for (int outer = 0; outer < term.op.outerSize(); ++outer)
        for (SpMat::InnerIterator it(term.op, outer); it; ++it)
          pattern.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               Complex(1.0, 0.0));
    union_.resize(dim, dim);
    union_.setFromTriplets(pattern.begin(), pattern.end());
    union_.makeCompressed();

    for (const auto& term : terms) {
      Slot slot;
      slot.coeff = term.coeff;
      slot.freq = term.freq;
      for (int outer = 0; outer < term.op.outerSize(); ++outer)
        for (SpMat::InnerIterator it(term.op, outer); it; ++it) {
          slot.index.push_back(value_index(static_cast<int>(it.row()),
                                           static_cast<int>(it.col())));
          slot.value.push_back(it.value());
        }
      slots_.push_back(std::move(slot));
    }
  }

  bool empty() const { return slots_.empty(); }

  void assemble(Real t) {
    if (has_time_ && t == assembled_time_) return;
    Complex* values = union_.valuePtr();
    std::fill(values, values + union_.nonZeros(), Complex(0.0, 0.0));
    for (const auto& slot : slots_) {
      const Complex phase =
          slot.freq == 0.0 ? slot.coeff : slot.coeff * std::exp(Complex(0.0, slot.freq * t));
      for (std::size_t j = 0; j < slot.index.size(); ++j)
        values[slot.index[j]] += phase * slot.value[j];
    }
    assembled_time_ = t;
    has_time_ = true;
  }

  const SpMatR& matrix() const { return union_; }

 private:
  struct Slot {
    Complex coeff;
    Real freq = 0.0;
    std::vector<int> index;
    std::vector<Complex> value;
  };

  int value_index(int row, int col) const {
    const int* outer = union_.outerIndexPtr();
    const int* inner = union_.innerIndexPtr();
    const int* first = inner + outer[row];
    const int* last = inner + outer[row + 1];
    const int* it = std::lower_bound(first, last, col);
    if (it == last || *it != col)
      throw std::logic_error("term entry missing from union pattern");
    return static_cast<int>(it - inner);
  }

  SpMatR union_;
  std::vector<Slot> slots_;
  Real assembled_time_ = 0.0;
  bool has_time_ = false;
};

void run_pool(int n_items, int threads, const std::function<void(int)>& work) {
  threads = std::max(1, std::min(threads, n_items));
  if (threads <= 1) {
    for (int i = 0; i < n_items; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_items) return;
      try {
        work(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int k = 0; k < threads; ++k) pool.emplace_back(body);
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

void validate_samples(const std::vector<Real>& samples, Real t_final) {
  Real prev = 0.0;
  for (const Real t : samples) {
    if (!(t >= 0.0) || t > t_final)
      throw std::invalid_argument("sample time outside [0, t_final]");
    if (t < prev) throw std::invalid_argument("sample times must be sorted ascending");
    prev = t;
  }
}

}  // namespace

GateSystem make_gate_system(const LabParams& params, int n_max, Frame frame,
                            bool include_counter_rotating) {
  GateSystem sys;
  sys.params = params;
  sys.modes = transverse_modes(params.num_ions, params.omega_x, params.omega_z);
  sys.layout = SpaceLayout{params.num_ions, params.num_ions, n_max};
  sys.couplings = sideband_couplings(params, sys.modes);
  sys.frame = frame;
  sys.ham = rotating_hamiltonian(sys.layout, params, sys.couplings, frame,
                                 include_counter_rotating);
  return sys;
}

void PulseSchedule::validate(int num_qubits, Real t_final) const {
  Real prev = 0.0;
  for (const auto& pulse : pulses) {
    if (!(pulse.time >= 0.0) || pulse.time > t_final)
      throw std::invalid_argument("pulse time outside [0, t_final]");
    if (pulse.time < prev)
      throw std::invalid_argument("pulse times must be sorted ascending");
    prev = pulse.time;
    if (static_cast<int>(pulse.pauli.size()) != num_qubits)
      throw std::invalid_argument("pulse label length must equal the qubit count");
    for (const char axis : pulse.pauli)
      if (axis != 'I' && axis != 'X' && axis != 'Y' && axis != 'Z')
        throw std::invalid_argument("pulse label characters must be one of IXYZ");
  }
}

Real thermal_weight(Real nbar, int n) {
  if (nbar < 0.0 || n < 0) throw std::invalid_argument("thermal_weight needs nbar, n >= 0");
  if (nbar == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::pow(nbar, n) / std::pow(1.0 + nbar, n + 1);
}

ThermalEnsemble enumerate_thermal(const ThermalSpec& spec, const SpaceLayout& layout) {
  if (spec.nbar < 0.0) throw std::invalid_argument("nbar must be nonnegative");
  if (!(spec.mass_tolerance > 0.0) || spec.mass_tolerance >= 0.5)
    throw std::invalid_argument("mass_tolerance must be in (0, 0.5)");
  const std::int64_t ph_dim = layout.ph_dim();
  if (ph_dim > (std::int64_t{1} << 22))
    throw std::invalid_argument("thermal enumeration too large; reduce n_max or modes");

  // Per-mode weights renormalized over the retained Fock range 0..n_max.
  std::vector<Real> per_mode(layout.n_max + 1);
  Real mode_mass = 0.0;
  for (int n = 0; n <= layout.n_max; ++n) {
    per_mode[n] = thermal_weight(spec.nbar, n);
    mode_mass += per_mode[n];
  }
  for (Real& w : per_mode) w /= mode_mass;

  std::vector<std::pair<Real, std::int64_t>> joint(ph_dim);
  for (std::int64_t ph = 0; ph < ph_dim; ++ph) {
    Real w = 1.0;
    for (int m = 0; m < layout.num_modes; ++m) w *= per_mode[layout.occupation(ph, m)];
    joint[ph] = {w, ph};
  }
  std::sort(joint.begin(), joint.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  ThermalEnsemble ensemble;
  Real kept = 0.0;
  for (const auto& [w, ph] : joint) {
    if (kept >= 1.0 - spec.mass_tolerance) break;
    if (w <= 0.0) break;
    ThermalBranch branch;
    branch.ph_index = ph;
    branch.weight = w;
    for (int m = 0; m < layout.num_modes; ++m)
      branch.occupations.push_back(layout.occupation(ph, m));
    ensemble.branches.push_back(std::move(branch));
    kept += w;
  }
  if (ensemble.branches.empty()) throw std::logic_error("thermal enumeration kept nothing");
  for (auto& branch : ensemble.branches) branch.weight /= kept;
  ensemble.retained_mass =
      kept * std::pow(mode_mass, layout.num_modes);  // raw probability kept
  return ensemble;
}

VecXc composite_state(const SpaceLayout& layout, const VecXc& spin, std::int64_t ph_index) {
  if (spin.size() != layout.spin_dim())
    throw std::invalid_argument("spin vector length must equal the spin dimension");
  if (ph_index < 0 || ph_index >= layout.ph_dim())
    throw std::invalid_argument("phonon index out of range");
  VecXc state = VecXc::Zero(layout.dim());
  for (std::int64_t s = 0; s < layout.spin_dim(); ++s)
    state[layout.index(s, ph_index)] = spin[s];
  return state;
}

Real generator_rate(const GateSystem& sys, Real noise_amp) {
  if (noise_amp < 0.0) throw std::invalid_argument("noise_amp must be nonnegative");
  return sys.ham.norm_bound() + sys.ham.max_frequency() +
         noise_amp * sys.ham.noise_norm_bound();
}

Real suggested_dt(const GateSystem& sys, Real noise_amp, Real target) {
  if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
  const Real rate = generator_rate(sys, noise_amp);
  if (rate <= 0.0) return std::numeric_limits<Real>::infinity();
  return target / rate;
}

struct BlockPropagator::Impl {
  SpaceLayout layout;
  LabParams params;
  Frame frame = Frame::bare;
  AssembledOperator det;
  AssembledOperator noise;
  std::vector<Real> field;  // per-column F values, held per step
  MatXc k1, k2, k3, k4, yt, z;

  void resize_scratch(Eigen::Index rows, Eigen::Index cols) {
    if (k1.rows() == rows && k1.cols() == cols) return;
    k1.resize(rows, cols);
    k2.resize(rows, cols);
    k3.resize(rows, cols);
    k4.resize(rows, cols);
    yt.resize(rows, cols);
    z.resize(rows, cols);
  }

  // k = -i H(t) y, with the dephasing field mixed in per column.
  void stage(Real t, const MatXc& y, MatXc& k, bool with_noise, bool shared_field) {
    det.assemble(t);
    k.noalias() = det.matrix() * y;
    if (with_noise && !noise.empty()) {
      noise.assemble(t);
      z.noalias() = noise.matrix() * y;
      if (shared_field) {
        k.noalias() += field[0] * z;
      } else {
        for (Eigen::Index j = 0; j < y.cols(); ++j) k.col(j) += field[j] * z.col(j);
      }
    }
    k *= Complex(0.0, -1.0);
  }
};

BlockPropagator::BlockPropagator(const GateSystem& sys, Real dt, Real noise_amp)
    : impl_(std::make_unique<Impl>()), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Real rate = generator_rate(sys, noise_amp);
  if (rate * dt > 0.5) {
    std::ostringstream msg;
    msg << "step size too coarse: generator rate " << rate << " rad/s * dt " << dt
        << " s = " << rate * dt << " > 0.5; use dt <= " << 0.05 / rate
        << " s for the design accuracy target";
    throw std::invalid_argument(msg.str());
  }
  impl_->layout = sys.layout;
  impl_->params = sys.params;
  impl_->frame = sys.frame;
  impl_->det = AssembledOperator(sys.ham.terms, sys.layout.dim());
  impl_->noise = AssembledOperator(sys.ham.noise_terms, sys.layout.dim());
}

BlockPropagator::~BlockPropagator() = default;
BlockPropagator::BlockPropagator(BlockPropagator&&) noexcept = default;
BlockPropagator& BlockPropagator::operator=(BlockPropagator&&) noexcept = default;

const SpaceLayout& BlockPropagator::layout() const { return impl_->layout; }

void BlockPropagator::advance(MatXc& block, Real t0, Real t1,
                              const std::vector<OUTrajectory*>& noise) {
  if (block.rows() != impl_->layout.dim())
    throw std::invalid_argument("block row count must equal the space dimension");
  if (t1 < t0) throw std::invalid_argument("advance requires t1 >= t0");
  if (t1 == t0 || block.cols() == 0) return;

  const Eigen::Index cols = block.cols();
  const bool with_noise = !noise.empty();
  const bool shared_field = noise.size() == 1;
  if (with_noise && !shared_field && static_cast<Eigen::Index>(noise.size()) != cols)
    throw std::invalid_argument("noise bindings must be empty, one, or one per column");
  for (const OUTrajectory* traj : noise)
    if (traj == nullptr) throw std::invalid_argument("null noise binding");

  impl_->resize_scratch(block.rows(), cols);
  impl_->field.assign(shared_field ? 1 : noise.size(), 0.0);

  const Real length = t1 - t0;
  const auto steps = static_cast<std::int64_t>(std::ceil(length / dt_ - 1e-9));
  const std::int64_t n = std::max<std::int64_t>(1, steps);
  const Real h = length / static_cast<Real>(n);

  for (std::int64_t step = 0; step < n; ++step) {
    // Stage times derive from the identical expression across steps, so the
    // end-of-step assembly is reused as the next step's start assembly.
    const Real ta = t0 + static_cast<Real>(step) * h;
    const Real tb = t0 + static_cast<Real>(step + 1) * h;
    const Real tm = 0.5 * (ta + tb);
    if (with_noise)
      for (std::size_t j = 0; j < noise.size(); ++j) impl_->field[j] = noise[j]->value();

    impl_->stage(ta, block, impl_->k1, with_noise, shared_field);
    impl_->yt = block + (0.5 * h) * impl_->k1;
    impl_->stage(tm, impl_->yt, impl_->k2, with_noise, shared_field);
    impl_->yt = block + (0.5 * h) * impl_->k2;
    impl_->stage(tm, impl_->yt, impl_->k3, with_noise, shared_field);
    impl_->yt = block + h * impl_->k3;
    impl_->stage(tb, impl_->yt, impl_->k4, with_noise, shared_field);
    block += (h / 6.0) * (impl_->k1 + 2.0 * impl_->k2 + 2.0 * impl_->k3 + impl_->k4);

    for (OUTrajectory* traj : noise) traj->step(h);
  }
}

void BlockPropagator::apply_pulse(MatXc& block, const std::string& pauli, Real t) {
  const SpMat u = pulse_operator(impl_->layout, impl_->params, impl_->frame, pauli, t);
  block = (u * block).eval();
}

void run_schedule(MatXc& block, BlockPropagator& prop, const PulseSchedule& schedule,
                  const std::vector<OUTrajectory*>& noise, Real t_final,
                  const std::vector<Real>& sample_times,
                  const std::function<void(std::size_t, Real, const MatXc&)>& on_sample) {
  if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
  schedule.validate(prop.layout().num_qubits, t_final);
  validate_samples(sample_times, t_final);

  std::vector<Real> bounds;
  bounds.reserve(sample_times.size() + schedule.pulses.size() + 2);
  bounds.push_back(0.0);
  for (const auto& pulse : schedule.pulses) bounds.push_back(pulse.time);
  for (const Real t : sample_times) bounds.push_back(t);
  bounds.push_back(t_final);
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

  std::size_t pulse_cursor = 0;
  std::size_t sample_cursor = 0;
  Real t = 0.0;
  for (const Real boundary : bounds) {
    if (boundary > t) {
      prop.advance(block, t, boundary, noise);
      t = boundary;
    }
    while (pulse_cursor < schedule.pulses.size() &&
           schedule.pulses[pulse_cursor].time == boundary) {
      prop.apply_pulse(block, schedule.pulses[pulse_cursor].pauli, boundary);
      ++pulse_cursor;
    }
    while (sample_cursor < sample_times.size() && sample_times[sample_cursor] == boundary) {
      if (on_sample) on_sample(sample_cursor, boundary, block);
      ++sample_cursor;
    }
  }
}

TrajectoryResult evolve_trajectory(const VecXc& initial, const GateSystem& sys,
                                   const PulseSchedule& schedule, const OUParams* ou,
                                   std::uint64_t noise_stream, Real t_final, Real dt,
                                   const std::vector<Real>& sample_times) {
  if (initial.size() != sys.layout.dim())
    throw std::invalid_argument("initial state length must equal the space dimension");
  if (std::abs(initial.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("initial state must be normalized");

  const Real noise_amp = ou != nullptr ? 4.0 * std::sqrt(ou->c * ou->tau / 2.0) : 0.0;
  BlockPropagator prop(sys, dt, noise_amp);

  std::unique_ptr<OUTrajectory> path;
  std::vector<OUTrajectory*> bindings;
  if (ou != nullptr) {
    path = std::make_unique<OUTrajectory>(*ou, noise_stream);
    bindings.push_back(path.get());
  }

  MatXc block = initial;
  TrajectoryResult result;
  result.times = sample_times;
  result.frame_states.reserve(sample_times.size());
  run_schedule(block, prop, schedule, bindings, t_final, sample_times,
               [&](std::size_t, Real, const MatXc& state) {
                 result.frame_states.push_back(state.col(0));
               });

  result.final_norm_defect = std::abs(block.col(0).norm() - 1.0);
  if (result.final_norm_defect > 1e-3)
    throw std::runtime_error("integration diverged: final norm defect above 1e-3");

  result.bare_states.reserve(result.frame_states.size());
  for (std::size_t i = 0; i < result.frame_states.size(); ++i) {
    const SpMat v =
        frame_backrotation(sys.layout, sys.params, sys.frame, result.times[i]);
    result.bare_states.push_back(v * result.frame_states[i]);
  }
  return result;
}

VecX SimResult::populations(std::size_t time_index) const {
  return spin_rho.at(time_index).diagonal().real();
}

SimResult evolve_thermal(const VecXc& spin_state, const ThermalSpec& thermal,
                         const GateSystem& sys, const PulseSchedule& schedule,
                         const ThermalRunOptions& opt) {
  const SpaceLayout& layout = sys.layout;
  if (spin_state.size() != layout.spin_dim())
    throw std::invalid_argument("spin state length must equal the spin dimension");
  if (std::abs(spin_state.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("spin state must be normalized");
  if (!(opt.t_final > 0.0)) throw std::invalid_argument("t_final must be positive");

  const std::vector<Real> samples =
      opt.sample_times.empty() ? std::vector<Real>{opt.t_final} : opt.sample_times;
  validate_samples(samples, opt.t_final);

  const ThermalEnsemble ensemble = enumerate_thermal(thermal, layout);
  const int n_branches = static_cast<int>(ensemble.branches.size());
  const int n_seeds = opt.ou != nullptr ? std::max(1, opt.noise_trajectories) : 1;
  const int n_items = n_branches * n_seeds;
  const std::size_t n_times = samples.size();

  std::vector<std::vector<MatXc>> item_rho(n_items);
  std::vector<Real> item_defect(n_items, 0.0);
  run_pool(n_items, std::max(1, opt.threads), [&](int item) {
    const int seed = item / n_branches;
    const int branch = item % n_branches;
    const VecXc initial =
        composite_state(layout, spin_state, ensemble.branches[branch].ph_index);
    const TrajectoryResult traj =
        evolve_trajectory(initial, sys, schedule, opt.ou,
                          static_cast<std::uint64_t>(seed), opt.t_final, opt.dt, samples);
    std::vector<MatXc> rho;
    rho.reserve(n_times);
    for (const VecXc& state : traj.bare_states) rho.push_back(spin_density(layout, state));
    item_rho[item] = std::move(rho);
    item_defect[item] = traj.final_norm_defect;
  });

  // Fixed reduction order (seed-major item ids) keeps the output identical
  // for every thread count.
  const std::int64_t sd = layout.spin_dim();
  std::vector<std::vector<MatXc>> per_seed(
      n_seeds, std::vector<MatXc>(n_times, MatXc::Zero(sd, sd)));
  for (int item = 0; item < n_items; ++item) {
    const int seed = item / n_branches;
    const int branch = item % n_branches;
    const Real w = ensemble.branches[branch].weight;
    for (std::size_t ti = 0; ti < n_times; ++ti)
      per_seed[seed][ti] += w * item_rho[item][ti];
  }

  SimResult result;
  result.times = samples;
  result.spin_rho.assign(n_times, MatXc::Zero(sd, sd));
  for (int seed = 0; seed < n_seeds; ++seed)
    for (std::size_t ti = 0; ti < n_times; ++ti)
      result.spin_rho[ti] += per_seed[seed][ti] / static_cast<Real>(n_seeds);

  // budget covers RK4 norm decay at the guard-limit step over millisecond
  // horizons; genuine mass-loss bugs overshoot it by orders of magnitude
  for (std::size_t ti = 0; ti < n_times; ++ti) {
    const Real total = result.spin_rho[ti].diagonal().real().sum();
    if (std::abs(total - 1.0) > 1e-5) {
      std::ostringstream msg;
      msg << std::setprecision(15) << "population sum invariant violated at t = "
          << samples[ti] << ": " << total;
      throw std::runtime_error(msg.str());
    }
  }

  result.meta.dt = opt.dt;
  result.meta.t_final = opt.t_final;
  result.meta.n_max = layout.n_max;
  result.meta.num_branches = n_branches;
  result.meta.noise_trajectories = opt.ou != nullptr ? n_seeds : 0;
  result.meta.noise_seed = opt.ou != nullptr ? opt.ou->seed : 0;
  result.meta.retained_mass = ensemble.retained_mass;
  result.meta.max_norm_defect =
      *std::max_element(item_defect.begin(), item_defect.end());
  if (ensemble.retained_mass < 0.999) {
    std::ostringstream msg;
    msg << "thermal enumeration retained mass " << ensemble.retained_mass << " < 0.999";
    result.meta.warnings.push_back(msg.str());
  }
  if (result.meta.max_norm_defect > 1e-9) {
    std::ostringstream msg;
    msg << "trajectory norm defect " << result.meta.max_norm_defect << " > 1e-9";
    result.meta.warnings.push_back(msg.str());
  }
  if (opt.keep_per_seed) result.per_seed = std::move(per_seed);
  return result;
}

Real ConvergenceReport::dt_drift() const { return std::abs(half_dt - base); }
Real ConvergenceReport::space_drift() const { return std::abs(larger_space - base); }

ConvergenceReport convergence_probe(const std::function<Real(Real, int)>& observable,
                                    Real dt, int n_max) {
  if (!observable) throw std::invalid_argument("convergence_probe needs an observable");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
  ConvergenceReport report;
  report.base = observable(dt, n_max);
  report.half_dt = observable(0.5 * dt, n_max);
  report.larger_space = observable(dt, n_max + 4);
  return report;
}

} // namespace iongate
