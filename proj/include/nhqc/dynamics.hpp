#pragma once

// Time evolution: Schrodinger and Lindblad propagation under time-dependent
// Hamiltonians, and reconstruction of the induced channel on a logical subspace.
//
// Hamiltonian callbacks map t (ns) to either a dense Operator or a
// SparseHamiltonian in rad/ns. Integration is split at the supplied
// breakpoints so that no Runge-Kutta stage straddles a schedule discontinuity;
// the final stage of each piece samples the Hamiltonian one ulp before the
// breakpoint.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nhqc/device.hpp"
#include "nhqc/hilbert.hpp"
#include "nhqc/linalg.hpp"

namespace nhqc::dynamics {

enum class Method { Rk4, DormandPrince };

struct IntegratorConfig {
  Method method = Method::Rk4;
  double dt = 0.01;  // ns, fixed-step and initial adaptive step
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  /// Keep every n-th step in the result (0: only the endpoints).
  int store_every = 0;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("integrator dt must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("integrator tolerances must be positive");
    if (store_every < 0) throw std::invalid_argument("store_every must be >= 0");
  }
};

struct CollapseChannel {
  Operator op;
  double rate = 0.0;  // MHz; the dissipator uses 2 pi rate
  std::string label;
};

using CollapseSet = std::vector<CollapseChannel>;

/// Relaxation sqrt(k)|k-1><k| at kappa_minus and dephasing k|k><k| at kappa_z for every
/// transmon and every k in 1..levels-1.
inline CollapseSet collapse_operators(const model::DeviceSpec& device,
                                      const hilbert::SubsystemLayout& layout) {
  CollapseSet out;
  for (const auto& t : device.transmons) {
    for (int k = 1; k < t.levels; ++k) {
      out.push_back({hilbert::embed(std::sqrt(double(k)) * hilbert::lowering_op(k, t.levels),
                                    t.label, layout),
                     t.kappa_minus, "relax_" + t.label + "_" + std::to_string(k)});
      out.push_back({hilbert::embed(double(k) * hilbert::projector_op(k, t.levels), t.label, layout),
                     t.kappa_z, "dephase_" + t.label + "_" + std::to_string(k)});
    }
  }
  return out;
}

template <class State>
struct EvolutionResult {
  std::vector<double> times;
  std::vector<State> states;
  State final;
};

/// Precompiled dissipator sum_j gamma_j (A rho A^dagger - 1/2 {A^dagger A, rho}).
class Dissipator {
 public:
  Dissipator() = default;

  Dissipator(const CollapseSet& set, Eigen::Index dim) : dim_(dim) {
    Operator gamma = Operator::Zero(dim, dim);
    Eigen::VectorXcd diag_weights;
    mask_ = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& c : set) {
      if (c.rate < 0.0) throw std::invalid_argument("collapse rate must be >= 0");
      if (c.rate == 0.0) continue;
      if (c.op.rows() != dim || c.op.cols() != dim)
        throw std::invalid_argument("collapse operator dimension mismatch");
      const double g = angular(c.rate);
      gamma += g * c.op.adjoint() * c.op;
      if (is_diagonal(c.op)) {
        const Eigen::VectorXcd a = c.op.diagonal();
        mask_ += g * (a * a.adjoint());
      } else if (auto m = monomial(c.op, std::sqrt(g))) {
        monomials_.push_back(std::move(*m));
      } else {
        SparseHamiltonian l{dim, {}}, ldag{dim, {}};
        const double sg = std::sqrt(g);
        for (Eigen::Index j = 0; j < dim; ++j)
          for (Eigen::Index i = 0; i < dim; ++i)
            if (c.op(i, j) != Complex{}) {
              l.entries.push_back({i, j, sg * c.op(i, j)});
              ldag.entries.push_back({j, i, sg * std::conj(c.op(i, j))});
            }
        jumps_.push_back(std::move(l));
        jumps_dag_.push_back(std::move(ldag));
      }
      active_ = true;
    }
    gamma_diagonal_ = is_diagonal(gamma);
    if (gamma_diagonal_) {
      const Eigen::VectorXd gd = gamma.diagonal().real();
      for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) mask_(i, j) -= 0.5 * (gd[i] + gd[j]);
    } else {
      gamma_ = gamma;
    }
  }

  bool active() const noexcept { return active_; }
  Eigen::Index dim() const noexcept { return dim_; }

  /// out += D(rho); scratch buffers are resized as needed.
  void add_to(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out, Eigen::MatrixXcd& s1,
              Eigen::MatrixXcd& s2) const {
    if (!active_) return;
    out.array() += mask_.array() * rho.array();
    for (const auto& m : monomials_) {
      const std::size_t n = m.src.size();
      for (std::size_t b = 0; b < n; ++b) {
        const Complex wb = std::conj(m.value[b]);
        const Complex* in = rho.data() + m.src[b] * rho.rows();
        Complex* dst = out.data() + m.dst[b] * out.rows();
        for (std::size_t a = 0; a < n; ++a) dst[m.dst[a]] += m.value[a] * wb * in[m.src[a]];
      }
    }
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      apply_left(jumps_[k], rho, s1);
      apply_right(s1, jumps_dag_[k], s2);
      out += s2;
    }
    if (!gamma_diagonal_) {
      out.noalias() -= 0.5 * (gamma_ * rho);
      out.noalias() -= 0.5 * (rho * gamma_);
    }
  }

 private:
  // Operator with at most one nonzero per row and per column: L = sum_k value_k |dst_k><src_k|.
  struct Monomial {
    std::vector<Eigen::Index> src;
    std::vector<Eigen::Index> dst;
    std::vector<Complex> value;
  };

  static std::optional<Monomial> monomial(const Operator& op, double scale) {
    Monomial m;
    std::vector<char> row_used(op.rows(), 0);
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      bool col_used = false;
      for (Eigen::Index i = 0; i < op.rows(); ++i) {
        if (op(i, j) == Complex{}) continue;
        if (col_used || row_used[i]) return std::nullopt;
        col_used = true;
        row_used[i] = 1;
        m.src.push_back(j);
        m.dst.push_back(i);
        m.value.push_back(scale * op(i, j));
      }
    }
    return m;
  }

  static bool is_diagonal(const Operator& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (i != j && m(i, j) != Complex{}) return false;
    return true;
  }

  Eigen::Index dim_ = 0;
  bool active_ = false;
  Eigen::MatrixXcd mask_;
  std::vector<Monomial> monomials_;
  std::vector<SparseHamiltonian> jumps_;
  std::vector<SparseHamiltonian> jumps_dag_;
  bool gamma_diagonal_ = true;
  Operator gamma_;
};

namespace detail {

inline std::vector<double> pieces(double t0, double t1, const std::vector<double>& breakpoints) {
  std::vector<double> cuts{t0};
  for (double b : breakpoints)
    if (b > t0 && b < t1) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(t1);
  return cuts;
}

inline void require_finite(const Eigen::MatrixXcd& y) {
  if (!y.allFinite()) throw std::runtime_error("integrator produced non-finite values");
}

// Drives a right-hand side rhs(H, y, out) through [t0, t1].
template <class HFn, class Rhs>
EvolutionResult<Eigen::MatrixXcd> integrate(HFn& h, Rhs& rhs, Eigen::MatrixXcd y, double t0,
                                            double t1, const IntegratorConfig& cfg,
                                            const std::vector<double>& breakpoints) {
  cfg.validate();
  if (!(t1 >= t0)) throw std::invalid_argument("time span must satisfy t1 >= t0");
  EvolutionResult<Eigen::MatrixXcd> res;
  res.times.push_back(t0);
  res.states.push_back(y);
  long step_count = 0;
  auto record = [&](double t, bool last) {
    ++step_count;
    if (last) return;
    if (cfg.store_every > 0 && step_count % cfg.store_every == 0) {
      res.times.push_back(t);
      res.states.push_back(y);
    }
  };

  const auto cuts = pieces(t0, t1, breakpoints);
  Eigen::MatrixXcd k1, k2, k3, k4, k5, k6, k7, tmp, y5;

  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double a = cuts[p];
    const double b = cuts[p + 1];
    const bool final_piece = p + 2 == cuts.size();
    const double b_inside = std::nextafter(b, a);
    auto sample = [&](double t) { return h(std::min(t, b_inside)); };

    if (cfg.method == Method::Rk4) {
      const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / cfg.dt - 1e-9)));
      const double dt = (b - a) / static_cast<double>(n);
      auto h_start = sample(a);
      for (long i = 0; i < n; ++i) {
        const double t = a + dt * static_cast<double>(i);
        const double t_end = (i + 1 == n) ? b : a + dt * static_cast<double>(i + 1);
        const auto h_mid = sample(t + 0.5 * dt);
        auto h_end = sample(t_end);
        rhs(h_start, y, k1);
        tmp = y + (0.5 * dt) * k1;
        rhs(h_mid, tmp, k2);
        tmp = y + (0.5 * dt) * k2;
        rhs(h_mid, tmp, k3);
        tmp = y + dt * k3;
        rhs(h_end, tmp, k4);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        h_start = std::move(h_end);
        record(t_end, final_piece && i + 1 == n);
      }
      require_finite(y);
      continue;
    }

    // Dormand-Prince 5(4)
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    double t = a;
    double step = std::min(cfg.dt, b - a);
    bool have_k1 = false;
    int guard = 0;
    while (t < b) {
      if (++guard > 50'000'000) throw std::runtime_error("adaptive integrator made no progress");
      bool last = false;
      if (t + step >= b || b - (t + step) < 1e-12 * std::max(1.0, b)) {
        step = b - t;
        last = true;
      }
      if (!have_k1) {
        rhs(sample(t), y, k1);
        have_k1 = true;
      }
      tmp = y + (step * a21) * k1;
      rhs(sample(t + c2 * step), tmp, k2);
      tmp = y + step * (a31 * k1 + a32 * k2);
      rhs(sample(t + c3 * step), tmp, k3);
      tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(sample(t + c4 * step), tmp, k4);
      tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(sample(t + c5 * step), tmp, k5);
      tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      const double t_new = last ? b : t + step;
      rhs(sample(t_new), tmp, k6);
      y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(sample(t_new), y5, k7);
      tmp = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double err = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = cfg.abs_tol +
                          cfg.rel_tol * std::max(std::abs(y.data()[i]), std::abs(y5.data()[i]));
        err = std::max(err, std::abs(tmp.data()[i]) / sc);
      }
      if (!std::isfinite(err)) throw std::runtime_error("integrator produced non-finite values");
      if (err <= 1.0) {
        t = t_new;
        y.swap(y5);
        k1.swap(k7);  // first-same-as-last
        record(t, final_piece && last);
        if (last) break;
      }
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      step *= factor;
    }
    require_finite(y);
  }
  res.times.push_back(t1);
  res.states.push_back(y);
  res.final = y;
  return res;
}

}  // namespace detail

/// Schrodinger propagation of one state (or several states stored as columns).
template <class HFn>
EvolutionResult<Eigen::MatrixXcd> propagate_states(HFn h, const Eigen::MatrixXcd& psi0, double t0,
                                                   double t1, const IntegratorConfig& cfg,
                                                   const std::vector<double>& breakpoints = {}) {
  for (Eigen::Index j = 0; j < psi0.cols(); ++j)
    if (std::abs(psi0.col(j).norm() - 1.0) > 1e-10)
      throw std::invalid_argument("initial state is not normalized");
  Eigen::MatrixXcd hy;
  auto rhs = [&hy](const auto& ham, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) {
    apply_left(ham, y, hy);
    out = -kI * hy;
  };
  return detail::integrate(h, rhs, psi0, t0, t1, cfg, breakpoints);
}

template <class HFn>
EvolutionResult<StateVector> evolve_schrodinger(HFn h, const StateVector& psi0, double t0,
                                                double t1, const IntegratorConfig& cfg,
                                                const std::vector<double>& breakpoints = {}) {
  auto m = propagate_states(std::move(h), Eigen::MatrixXcd(psi0), t0, t1, cfg, breakpoints);
  EvolutionResult<StateVector> out;
  out.times = std::move(m.times);
  for (auto& s : m.states) out.states.emplace_back(s.col(0));
  out.final = m.final.col(0);
  return out;
}

/// Lindblad propagation without validating the initial operator (the map is linear, so
/// non-physical inputs such as |i><j| are meaningful).
template <class HFn>
EvolutionResult<Eigen::MatrixXcd> propagate_operator(HFn h, const Eigen::MatrixXcd& rho0,
                                                     const Dissipator& dissipator, double t0,
                                                     double t1, const IntegratorConfig& cfg,
                                                     const std::vector<double>& breakpoints = {}) {
  if (dissipator.active() && dissipator.dim() != rho0.rows())
    throw std::invalid_argument("dissipator dimension differs from the state");
  Eigen::MatrixXcd hr, rh, s1, s2;
  if (hermiticity_error(rho0) == 0.0) {
    // Hermitian inputs stay Hermitian, so H rho = (rho H)^dagger and only the
    // column-oriented product is needed.
    auto rhs = [&](const auto& ham, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
      apply_right(rho, ham, rh);
      out = kI * rh;
      out.noalias() -= kI * rh.adjoint();
      dissipator.add_to(rho, out, s1, s2);
    };
    return detail::integrate(h, rhs, rho0, t0, t1, cfg, breakpoints);
  }
  auto rhs = [&](const auto& ham, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    apply_left(ham, rho, hr);
    apply_right(rho, ham, rh);
    out = -kI * (hr - rh);
    dissipator.add_to(rho, out, s1, s2);
  };
  return detail::integrate(h, rhs, rho0, t0, t1, cfg, breakpoints);
}

template <class HFn>
EvolutionResult<DensityMatrix> evolve_lindblad(HFn h, const DensityMatrix& rho0,
                                               const CollapseSet& collapse, double t0, double t1,
                                               const IntegratorConfig& cfg,
                                               const std::vector<double>& breakpoints = {}) {
  hilbert::validate_density_matrix(rho0);
  const Dissipator d(collapse, rho0.rows());
  return propagate_operator(std::move(h), rho0, d, t0, t1, cfg, breakpoints);
}

/// Completely positive map induced on a d-dimensional logical subspace, acting on
/// column-major vectorized d x d matrices. Output is the logical block P rho P.
struct LogicalChannel {
  int dim = 0;
  Eigen::MatrixXcd superop;

  static LogicalChannel identity(int d) {
    return {d, Eigen::MatrixXcd::Identity(d * d, d * d)};
  }

  /// rho -> W rho W^dagger.
  static LogicalChannel from_operator(const Eigen::MatrixXcd& w) {
    const int d = static_cast<int>(w.rows());
    LogicalChannel ch{d, Eigen::MatrixXcd(d * d, d * d)};
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        const Eigen::MatrixXcd img = w.col(i) * w.col(j).adjoint();
        ch.superop.col(i + d * j) = Eigen::Map<const Eigen::VectorXcd>(img.data(), d * d);
      }
    return ch;
  }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
    if (rho.rows() != dim || rho.cols() != dim)
      throw std::invalid_argument("LogicalChannel::apply: dimension mismatch");
    const Eigen::VectorXcd v = superop * Eigen::Map<const Eigen::VectorXcd>(rho.data(), dim * dim);
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
  }

  Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho) const { return apply(rho); }
};

/// Rebuilds the logical channel from d^2 evolutions of pure inputs: |i><i|, and for i < j
/// (|i>+|j>)/sqrt2 and (|i>+i|j>)/sqrt2. evolve_fn maps a full-space density matrix to the
/// final full-space density matrix. Evolutions run on up to `threads` workers.
template <class EvolveFn>
LogicalChannel reconstruct_channel(EvolveFn&& evolve_fn, const std::vector<StateVector>& logical,
                                   unsigned threads = 1) {
  if (!hilbert::is_orthonormal(logical))
    throw std::invalid_argument("reconstruct_channel: logical states are not orthonormal");
  const int d = static_cast<int>(logical.size());
  const Eigen::Index n = logical.front().size();
  Eigen::MatrixXcd basis(n, d);
  for (int i = 0; i < d; ++i) basis.col(i) = logical[i];

  struct Job {
    int i, j, kind;  // kind 0: |i><i|, 1: plus, 2: plus-i
    StateVector psi;
  };
  std::vector<Job> jobs;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) jobs.push_back({i, i, 0, logical[i]});
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      jobs.push_back({i, j, 1, r * (logical[i] + logical[j])});
      jobs.push_back({i, j, 2, r * (logical[i] + kI * logical[j])});
    }
  std::vector<Eigen::MatrixXcd> images(jobs.size());
  auto work = [&](std::size_t k) {
    const DensityMatrix out = evolve_fn(hilbert::pure_density(jobs[k].psi));
    images[k] = basis.adjoint() * out * basis;
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < jobs.size(); k += threads) work(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<Eigen::MatrixXcd> diag(d), plus(d * d), plus_i(d * d);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& jb = jobs[k];
    if (jb.kind == 0) diag[jb.i] = images[k];
    if (jb.kind == 1) plus[jb.i * d + jb.j] = images[k];
    if (jb.kind == 2) plus_i[jb.i * d + jb.j] = images[k];
  }
  LogicalChannel ch{d, Eigen::MatrixXcd(d * d, d * d)};
  auto put = [&](int i, int j, const Eigen::MatrixXcd& img) {
    ch.superop.col(i + d * j) = Eigen::Map<const Eigen::VectorXcd>(img.data(), d * d);
  };
  const Complex half_1pi{0.5, 0.5};
  for (int i = 0; i < d; ++i) put(i, i, diag[i]);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const auto& p = plus[i * d + j];
      const auto& q = plus_i[i * d + j];
      const Eigen::MatrixXcd s = diag[i] + diag[j];
      put(i, j, p + kI * q - half_1pi * s);
      put(j, i, p - kI * q - std::conj(half_1pi) * s);
    }
  return ch;
}

}  // namespace nhqc::dynamics
