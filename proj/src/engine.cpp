#include "evodyn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <thread>
#include <tuple>

#include "evodyn/errors.hpp"

namespace evodyn {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("integrator step dt must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw InvalidParameter("integrator horizon t_max must be >= 0");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidParameter("integrator tolerances must be positive");
  if (!(stop_speed >= 0.0)) throw InvalidParameter("stop_speed must be nonnegative");
  if (record_stride == 0) throw InvalidParameter("record_stride must be positive");
  if (!(drift_bound > 0.0)) throw InvalidParameter("drift_bound must be positive");
}

ClosedLoopRates closed_loop_rhs(const RuleSpec& spec, const PayoffMechanism& mech, const PopulationState& x,
                                const Vector& q) {
  PayoffVector p(mech.evaluate(x.vec(), q));
  VectorField field = edm_field(spec, x, p);
  return {std::move(p), std::move(field), mech.state_derivative(x.vec(), q)};
}

namespace {

constexpr double kStopCorrelation = 1e-9;

// Joint state layout: [x; q].
struct Joint {
  Vector x;
  Vector q;
};

struct Sample {
  ClosedLoopRates rates;
  double correlation = 0.0;
  double speed = 0.0;
};

class LoopIntegrator {
 public:
  LoopIntegrator(const RuleSpec& spec, const PayoffMechanism& mech, const IntegratorConfig& cfg)
      : spec_(spec), mech_(mech), cfg_(cfg) {}

  Sample evaluate(const Vector& x, const Vector& q) const {
    Sample s{closed_loop_rhs(spec_, mech_, PopulationState::trusted(x), q), 0.0, 0.0};
    s.correlation = s.rates.payoff.vec().dot(s.rates.field.velocity);
    s.speed = s.rates.field.velocity.lpNorm<Eigen::Infinity>();
    return s;
  }

  std::pair<Vector, Vector> rate(const Vector& x, const Vector& q) const {
    ClosedLoopRates r = closed_loop_rhs(spec_, mech_, PopulationState::trusted(x), q);
    return {std::move(r.field.velocity), std::move(r.state_rate)};
  }

  // Classic RK4; k1 is the rate already known at the step start.
  Joint rk4_step(const Joint& y, const Sample& start, double h) const {
    const Vector& k1x = start.rates.field.velocity;
    const Vector& k1q = start.rates.state_rate;
    auto [k2x, k2q] = rate(y.x + 0.5 * h * k1x, y.q + 0.5 * h * k1q);
    auto [k3x, k3q] = rate(y.x + 0.5 * h * k2x, y.q + 0.5 * h * k2q);
    auto [k4x, k4q] = rate(y.x + h * k3x, y.q + h * k3q);
    return {y.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            y.q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)};
  }

  // Dormand-Prince 5(4). Returns the fifth-order solution and the scaled error.
  std::pair<Joint, double> dopri_step(const Joint& y, const Sample& start, double h) const {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                            b6 = 11.0 / 84.0;
    static constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0, e4 = b4 - 393.0 / 640.0,
                            e5 = b5 + 92097.0 / 339200.0, e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

    const Vector& k1x = start.rates.field.velocity;
    const Vector& k1q = start.rates.state_rate;
    auto [k2x, k2q] = rate(y.x + h * a21 * k1x, y.q + h * a21 * k1q);
    auto [k3x, k3q] = rate(y.x + h * (a31 * k1x + a32 * k2x), y.q + h * (a31 * k1q + a32 * k2q));
    auto [k4x, k4q] = rate(y.x + h * (a41 * k1x + a42 * k2x + a43 * k3x),
                           y.q + h * (a41 * k1q + a42 * k2q + a43 * k3q));
    auto [k5x, k5q] = rate(y.x + h * (a51 * k1x + a52 * k2x + a53 * k3x + a54 * k4x),
                           y.q + h * (a51 * k1q + a52 * k2q + a53 * k3q + a54 * k4q));
    auto [k6x, k6q] = rate(y.x + h * (a61 * k1x + a62 * k2x + a63 * k3x + a64 * k4x + a65 * k5x),
                           y.q + h * (a61 * k1q + a62 * k2q + a63 * k3q + a64 * k4q + a65 * k5q));
    Joint next{y.x + h * (b1 * k1x + b3 * k3x + b4 * k4x + b5 * k5x + b6 * k6x),
               y.q + h * (b1 * k1q + b3 * k3q + b4 * k4q + b5 * k5q + b6 * k6q)};
    auto [k7x, k7q] = rate(next.x, next.q);
    const Vector err_x = h * (e1 * k1x + e3 * k3x + e4 * k4x + e5 * k5x + e6 * k6x + e7 * k7x);
    const Vector err_q = h * (e1 * k1q + e3 * k3q + e4 * k4q + e5 * k5q + e6 * k6q + e7 * k7q);

    double err = 0.0;
    auto accumulate = [&](const Vector& e, const Vector& y0, const Vector& y1) {
      for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double scale = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        err = std::max(err, std::abs(e(i)) / scale);
      }
    };
    accumulate(err_x, y.x, next.x);
    accumulate(err_q, y.q, next.q);
    return {std::move(next), err};
  }

 private:
  const RuleSpec& spec_;
  const PayoffMechanism& mech_;
  const IntegratorConfig& cfg_;
};

void record_sample(TrajectoryRecord& rec, double t, const PopulationState& x, const Vector& q, const Sample& s) {
  rec.times.push_back(t);
  rec.states.push_back(x);
  rec.payoffs.push_back(s.rates.payoff);
  rec.speeds.push_back(s.speed);
  rec.correlations.push_back(s.correlation);
  rec.ccw_integrals.push_back(rec.ccw_ledger.running_integral);
  rec.ccw_minima.push_back(rec.ccw_ledger.running_min);
  rec.mech_states.push_back(q);
}

}  // namespace

TrajectoryRecord simulate(const RuleSpec& spec, const PayoffMechanism& mech, const PopulationState& x0,
                          const IntegratorConfig& cfg) {
  cfg.validate();
  if (x0.size() != mech.size()) throw DimensionMismatch("initial state and mechanism differ in size");

  LoopIntegrator integrator(spec, mech, cfg);
  TrajectoryRecord rec;
  if (mech.base().has_potential()) rec.ccw_ledger.bound_estimate = mech.base().ccw_bound();

  PopulationState x = x0;
  Vector q = mech.state();
  Sample current = integrator.evaluate(x.vec(), q);
  double t = 0.0;
  record_sample(rec, t, x, q, current);

  auto should_stop = [&](const Sample& s) {
    const double filter_speed = s.rates.state_rate.size() ? s.rates.state_rate.lpNorm<Eigen::Infinity>() : 0.0;
    return s.speed <= cfg.stop_speed && filter_speed <= cfg.stop_speed && s.correlation <= kStopCorrelation;
  };

  // Shared bookkeeping after an accepted step.
  auto accept = [&](Joint next, double t_next, bool last) {
    const Vector raw = next.x;
    PopulationState x_next = project_to_simplex(raw, cfg.drift_bound);
    rec.max_projection = std::max(rec.max_projection, (x_next.vec() - raw).lpNorm<Eigen::Infinity>());
    Sample next_sample = integrator.evaluate(x_next.vec(), next.q);

    const Vector x_mid = 0.5 * (x.vec() + x_next.vec());
    rec.ccw_ledger = ccw_ledger_step(rec.ccw_ledger, x_mid, current.rates.payoff.vec(),
                                     next_sample.rates.payoff.vec(), t_next - t);
    if (mech.is_dynamic()) {
      ccw_ledger_add_perturbation(rec.ccw_ledger, x_mid, mech.perturbation(x.vec(), q),
                                  mech.perturbation(x_next.vec(), next.q));
    }

    ++rec.steps;
    x = std::move(x_next);
    q = std::move(next.q);
    t = t_next;
    current = std::move(next_sample);

    const bool stop = should_stop(current);
    if (last || stop || rec.steps % cfg.record_stride == 0) record_sample(rec, t, x, q, current);
    return stop;
  };

  if (cfg.t_max <= 0.0) return rec;

  if (cfg.method == IntegratorMethod::Rk4Fixed) {
    const auto n_steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
    for (std::size_t k = 1; k <= n_steps; ++k) {
      const double t_next = (k == n_steps) ? cfg.t_max : static_cast<double>(k) * cfg.dt;
      Joint next = integrator.rk4_step({x.vec(), q}, current, t_next - t);
      if (accept(std::move(next), t_next, k == n_steps)) {
        rec.stopped_early = k != n_steps;
        break;
      }
    }
    return rec;
  }

  double h = std::min(cfg.dt, cfg.t_max);
  while (t < cfg.t_max) {
    h = std::min(h, cfg.t_max - t);
    const double h_min = 1e-12 * std::max(1.0, t);
    if (h < h_min) throw IntegratorFailure("adaptive step size collapsed at t = " + std::to_string(t));
    Joint next;
    double err = std::numeric_limits<double>::infinity();
    try {
      std::tie(next, err) = integrator.dopri_step({x.vec(), q}, current, h);
    } catch (const Error&) {
      // A trial stage far outside the simplex can overflow the payoff or the
      // rates; treat it as a rejected step.
    }
    if (!std::isfinite(err)) {
      h *= 0.2;
      continue;
    }
    if (err <= 1.0) {
      const double t_next = (cfg.t_max - t - h <= 1e-14 * cfg.t_max) ? cfg.t_max : t + h;
      const bool last = t_next >= cfg.t_max;
      if (accept(std::move(next), t_next, last)) {
        rec.stopped_early = !last;
        break;
      }
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
  }
  return rec;
}

std::vector<BatchRun> batch_simulate(const std::vector<RuleSpec>& specs, const PayoffMechanism& mech,
                                     const std::vector<PopulationState>& initial, const IntegratorConfig& cfg) {
  std::vector<BatchRun> runs;
  for (std::size_t r = 0; r < specs.size(); ++r) {
    for (std::size_t i = 0; i < initial.size(); ++i) runs.push_back({r, i, std::nullopt, {}});
  }
  if (runs.empty()) return runs;

  auto run_one = [&](BatchRun& run) {
    try {
      run.record = simulate(specs[run.rule_index], mech, initial[run.initial_index], cfg);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, runs.size());
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t k = w; k < runs.size(); k += workers) run_one(runs[k]);
    }));
  }
  for (auto& f : futures) f.get();
  return runs;
}

void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& out) {
  const std::size_t n = record.states.empty() ? 0 : record.states.front().size();
  out << "t";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
  out << ",speed,correlation,ccw_integral,ccw_min\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < record.size(); ++k) {
    put(record.times[k]);
    for (std::size_t i = 0; i < n; ++i) {
      out << ',';
      put(record.states[k][i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      out << ',';
      put(record.payoffs[k][i]);
    }
    for (double v : {record.speeds[k], record.correlations[k], record.ccw_integrals[k], record.ccw_minima[k]}) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_trajectory_csv(record, out);
}

}  // namespace evodyn
